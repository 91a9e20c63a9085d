use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::config::NumericConfig;
use crate::distribution::{make_distribution, DiscreteDistribution};
use crate::solvers::MomentConstraintSet;

use super::CliError;

/// A distribution as written in input files: either a bare mass array, or an
/// object with `mass` (must already sum to 1) or `weights` (normalized on
/// read) and optional `labels`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DistributionInput {
    Bare(Vec<f64>),
    Object {
        #[serde(default)]
        mass: Option<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        labels: Option<Vec<f64>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsInput {
    #[serde(rename = "T")]
    statistics: Vec<Vec<f64>>,
    #[serde(rename = "m")]
    targets: Vec<f64>,
}

/// Reads an argument that is either inline JSON or a path to a JSON file.
pub fn read_source(arg: &str) -> Result<String, CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(Path::new(arg)).map_err(|e| CliError::Io(format!("{arg}: {e}")))
}

fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{what}: {e}")))
}

fn build(input: DistributionInput, cfg: &NumericConfig) -> Result<DiscreteDistribution, CliError> {
    let dist = match input {
        DistributionInput::Bare(mass) => DiscreteDistribution::new(mass, None, cfg)?,
        DistributionInput::Object { mass: Some(mass), weights: None, labels } => {
            DiscreteDistribution::new(mass, labels, cfg)?
        }
        DistributionInput::Object { mass: None, weights: Some(weights), labels } => {
            make_distribution(&weights, labels.as_deref(), cfg)?
        }
        DistributionInput::Object { .. } => {
            return Err(CliError::Parse("a distribution needs exactly one of `mass` or `weights`".into()))
        }
    };
    Ok(dist)
}

pub fn distribution(arg: &str, cfg: &NumericConfig) -> Result<DiscreteDistribution, CliError> {
    let text = read_source(arg)?;
    build(parse_json("distribution", &text)?, cfg)
}

pub fn points(arg: &str, cfg: &NumericConfig) -> Result<Vec<DiscreteDistribution>, CliError> {
    let text = read_source(arg)?;
    let inputs: Vec<DistributionInput> = parse_json("points", &text)?;
    inputs.into_iter().map(|d| build(d, cfg)).collect()
}

/// Weights given as inline JSON, a JSON file, or a comma-separated list.
pub fn weights(arg: &str) -> Result<Vec<f64>, CliError> {
    let trimmed = arg.trim();
    if trimmed.starts_with('[') || Path::new(trimmed).is_file() {
        return parse_json("weights", &read_source(trimmed)?);
    }
    trimmed
        .split(',')
        .map(|w| w.trim().parse::<f64>().map_err(|e| CliError::Parse(format!("weight `{w}`: {e}"))))
        .collect()
}

pub fn constraints(arg: &str) -> Result<MomentConstraintSet, CliError> {
    let input: ConstraintsInput = parse_json("constraints", &read_source(arg)?)?;
    Ok(MomentConstraintSet::new(input.statistics, input.targets)?)
}
