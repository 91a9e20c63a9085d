//! Command-line front end.
//!
//! Every command prints one JSON document (or CSV for sweeps) with floats at
//! 17 significant digits. Exit codes: 0 on success, 1 on parse or
//! validation errors, 2 when a solver does not converge, 3 when a
//! verification check fails.

mod format;
mod input;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub use format::{format_g17, to_json};

use crate::config::NumericConfig;
use crate::distribution::DiscreteDistribution;
use crate::divergences::{eval, gradient, Argument};
use crate::error::DivError;
use crate::family::{DivergenceSpec, Family};
use crate::geometry::{inner_product, line_point, BallSpec, LinePointResult};
use crate::solvers::{centroid, project_ball, project_moments, CentroidProblem, SolverReport};
use crate::verify::{gradient_registry, registry, run_suite, SuiteBudget};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Div(#[from] DivError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Div(DivError::NonConvergence { .. }) => 2,
            CliError::Div(DivError::CheckFailed { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "divgeom",
    version,
    about = "Divergences, divergence lines and balls, and constrained divergence minimization on finite supports"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct SpecArgs {
    /// euclidean, kl, reverse_kl, bregman, f_divergence or renyi.
    #[arg(long)]
    family: String,
    /// Generator for bregman and f_divergence: xlogx, square, neg_log or squared_hellinger.
    #[arg(long)]
    generator: Option<String>,
    /// Rényi order.
    #[arg(long)]
    order: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct OrderAlias {
    /// Rényi order (same as --order).
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct NumericArgs {
    /// Solver residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration budget.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// D(P‖𝓛_α(P,Q)) over α.
    Line,
    /// D(Q‖P_*) of the ball projection over κ.
    Ball,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate D(P‖Q).
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Functional derivative of D(P‖Q) in one argument.
    Grad {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, value_enum, default_value = "second")]
        wrt: Side,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Divergence inner product ⟨PQ‖RQ⟩.
    InnerProduct {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long)]
        r: String,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Point of the divergence line 𝓛_α(P, Q).
    Line {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Line position in [0, 1].
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Weighted centroid argmin_R Σ α_i D(P_i‖R).
    Centroid {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        /// JSON array of distributions.
        #[arg(long)]
        points: String,
        /// Comma-separated list or JSON array; uniform when omitted.
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Projection argmin_{R ∈ 𝓑_κ(P)} D(Q‖R).
    ProjectBall {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        /// Ball center.
        #[arg(long)]
        p: String,
        /// Source distribution.
        #[arg(long)]
        q: String,
        #[arg(long)]
        kappa: f64,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Projection argmin_{R ∈ ℳ} D(P‖R) under moment constraints.
    ProjectMoments {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        #[arg(long)]
        p: String,
        /// JSON {"T": [[...], ...], "m": [...]}, inline or as a file.
        #[arg(long)]
        constraints: String,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the randomized theorem checks and write JSON-lines reports.
    Verify {
        /// A family name or `all`.
        #[arg(long, default_value = "all")]
        family: String,
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        order: Option<f64>,
        #[command(flatten)]
        alias: OrderAlias,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        numeric: NumericArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a line or ball sweep for plotting.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        order: OrderAlias,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, value_enum, default_value = "line")]
        kind: SweepKind,
        /// First swept value (α for lines, κ for balls).
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        /// Last swept value.
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        /// Number of evenly spaced values, endpoints included.
        #[arg(long, default_value_t = 11)]
        count: usize,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Serialize)]
struct DistributionOut<'a> {
    mass: &'a [f64],
    labels: &'a [f64],
}

impl<'a> From<&'a DiscreteDistribution> for DistributionOut<'a> {
    fn from(d: &'a DiscreteDistribution) -> Self {
        Self { mass: d.mass(), labels: d.labels() }
    }
}

#[derive(Serialize)]
struct ValueOut {
    family: String,
    value: f64,
}

#[derive(Serialize)]
struct GradOut<'a> {
    family: String,
    wrt: Argument,
    values: &'a [f64],
}

#[derive(Serialize)]
struct LineOut<'a> {
    family: String,
    alpha: f64,
    solution: DistributionOut<'a>,
    multiplier: f64,
    residual: f64,
    iterations: usize,
}

impl<'a> LineOut<'a> {
    fn new(spec: &DivergenceSpec, line: &'a LinePointResult) -> Self {
        Self {
            family: spec.label(),
            alpha: line.alpha,
            solution: (&line.point).into(),
            multiplier: line.multiplier,
            residual: line.residual,
            iterations: line.iterations,
        }
    }
}

#[derive(Serialize)]
struct MultipliersOut<'a> {
    #[serde(rename = "C")]
    c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_crossings: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct ResidualsOut {
    stationarity: f64,
    constraint: f64,
}

#[derive(Serialize)]
struct ReportOut<'a> {
    solution: DistributionOut<'a>,
    multipliers: MultipliersOut<'a>,
    residuals: ResidualsOut,
    iterations: usize,
    converged: bool,
}

impl<'a> From<&'a SolverReport> for ReportOut<'a> {
    fn from(r: &'a SolverReport) -> Self {
        Self {
            solution: (&r.solution).into(),
            multipliers: MultipliersOut {
                c: r.multipliers.c,
                beta: r.multipliers.beta.as_deref(),
                alpha_star: r.multipliers.alpha_star,
                alpha_crossings: r.multipliers.alpha_crossings.as_deref(),
            },
            residuals: ResidualsOut { stationarity: r.stationarity_residual, constraint: r.constraint_residual },
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

/// Serializes a solver report in the CLI's JSON schema.
pub fn report_json(report: &SolverReport) -> String {
    to_json(&ReportOut::from(report))
}

/// Serializes a distribution as `{"mass": [...], "labels": [...]}`.
pub fn distribution_json(dist: &DiscreteDistribution) -> String {
    to_json(&DistributionOut::from(dist))
}

fn build_spec(spec: &SpecArgs, alias: Option<f64>) -> Result<DivergenceSpec, CliError> {
    let order = match (spec.order, alias) {
        (Some(a), Some(b)) if a != b => return Err(CliError::Parse(format!("--order {a} and --alpha {b} disagree"))),
        (a, b) => a.or(b),
    };
    Ok(DivergenceSpec::from_parts(&spec.family, spec.generator.as_deref(), order)?)
}

fn build_config(numeric: &NumericArgs) -> Result<NumericConfig, CliError> {
    let mut cfg = NumericConfig::default();
    if let Some(tol) = numeric.tol {
        cfg.solver_tol = tol;
    }
    if let Some(m) = numeric.max_iter {
        cfg.max_iter = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn json_only(output: &OutputArgs) -> Result<(), CliError> {
    match output.format {
        Some(Format::Csv) => Err(CliError::Parse("CSV output is only available for `sweep`".into())),
        _ => Ok(()),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, format!("{text}\n")).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn verify_specs(
    family: &str,
    generator: Option<&str>,
    order: Option<f64>,
) -> Result<(Vec<DivergenceSpec>, Vec<DivergenceSpec>), CliError> {
    if family == "all" {
        if generator.is_some() || order.is_some() {
            return Err(CliError::Parse("--generator and --order need a single --family".into()));
        }
        return Ok((registry(), gradient_registry()));
    }
    let fam: Family = family.parse()?;
    let explicit = match fam {
        Family::Bregman | Family::FDivergence => generator.is_some(),
        Family::Renyi => order.is_some(),
        _ => true,
    };
    if explicit {
        let spec = DivergenceSpec::from_parts(family, generator, order)?;
        return Ok((vec![spec.clone()], vec![spec]));
    }
    let pick = |specs: Vec<DivergenceSpec>| specs.into_iter().filter(|s| s.family() == fam).collect::<Vec<_>>();
    Ok((pick(registry()), pick(gradient_registry())))
}

fn sweep_values(from: f64, to: f64, count: usize) -> Result<Vec<f64>, CliError> {
    if count == 0 || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Parse("a sweep needs --count >= 1 and finite bounds".into()));
    }
    if count == 1 {
        return Ok(vec![from]);
    }
    Ok((0..count)
        .map(|k| if k == count - 1 { to } else { from + (to - from) * k as f64 / (count - 1) as f64 })
        .collect())
}

struct SweepRow {
    parameter: f64,
    value: f64,
    residual: f64,
    mass: Vec<f64>,
}

fn sweep_csv(kind: SweepKind, rows: &[SweepRow]) -> String {
    let n = rows.first().map_or(0, |r| r.mass.len());
    let param = match kind {
        SweepKind::Line => "alpha",
        SweepKind::Ball => "kappa",
    };
    let mut lines = vec![std::iter::once(format!("{param},value,residual"))
        .chain((0..n).map(|i| format!("mass_{i}")))
        .collect::<Vec<_>>()
        .join(",")];
    for row in rows {
        let cells: Vec<String> =
            [row.parameter, row.value, row.residual].iter().chain(&row.mass).map(|&x| format_g17(x)).collect();
        lines.push(cells.join(","));
    }
    lines.join("\n")
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval { spec, order, p, q, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let (p, q) = (input::distribution(&p, &cfg)?, input::distribution(&q, &cfg)?);
            let value = eval(&spec, &p, &q, &cfg)?;
            emit(output.out.as_ref(), &to_json(&ValueOut { family: spec.label(), value }))
        }
        Command::Grad { spec, order, p, q, wrt, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let (p, q) = (input::distribution(&p, &cfg)?, input::distribution(&q, &cfg)?);
            let wrt = match wrt {
                Side::First => Argument::First,
                Side::Second => Argument::Second,
            };
            let g = gradient(&spec, &p, &q, wrt, &cfg)?;
            emit(output.out.as_ref(), &to_json(&GradOut { family: spec.label(), wrt: g.wrt, values: &g.values }))
        }
        Command::InnerProduct { spec, order, p, q, r, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let p = input::distribution(&p, &cfg)?;
            let q = input::distribution(&q, &cfg)?;
            let r = input::distribution(&r, &cfg)?;
            let value = inner_product(&spec, &p, &q, &r, &cfg)?;
            emit(output.out.as_ref(), &to_json(&ValueOut { family: spec.label(), value }))
        }
        Command::Line { spec, p, q, alpha, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, None)?;
            let (p, q) = (input::distribution(&p, &cfg)?, input::distribution(&q, &cfg)?);
            let line = line_point(&spec, &p, &q, alpha, &cfg)?;
            emit(output.out.as_ref(), &to_json(&LineOut::new(&spec, &line)))
        }
        Command::Centroid { spec, order, points, weights, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let points = input::points(&points, &cfg)?;
            let problem = match weights {
                Some(w) => CentroidProblem::new(spec, points, input::weights(&w)?, &cfg)?,
                None => CentroidProblem::uniform(spec, points, &cfg)?,
            };
            let report = centroid(&problem, &cfg)?;
            emit(output.out.as_ref(), &report_json(&report))
        }
        Command::ProjectBall { spec, order, p, q, kappa, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let (p, q) = (input::distribution(&p, &cfg)?, input::distribution(&q, &cfg)?);
            let ball = BallSpec::new(p, kappa, spec, &cfg)?;
            let report = project_ball(&ball, &q, &cfg)?;
            emit(output.out.as_ref(), &report_json(&report))
        }
        Command::ProjectMoments { spec, order, p, constraints, numeric, output } => {
            json_only(&output)?;
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let p = input::distribution(&p, &cfg)?;
            let constraints = input::constraints(&constraints)?;
            let report = project_moments(&spec, &p, &constraints, &cfg)?;
            emit(output.out.as_ref(), &report_json(&report))
        }
        Command::Verify { family, generator, order, alias, trials, seed, numeric, out } => {
            let cfg = build_config(&numeric)?;
            let order = match (order, alias.alpha) {
                (Some(a), Some(b)) if a != b => {
                    return Err(CliError::Parse(format!("--order {a} and --alpha {b} disagree")))
                }
                (a, b) => a.or(b),
            };
            let (theorems, gradients) = verify_specs(&family, generator.as_deref(), order)?;
            let reports = run_suite(&theorems, &gradients, SuiteBudget::from_trials(trials), seed, &cfg);
            let lines: Vec<String> = reports.iter().map(to_json).collect();
            emit(out.as_ref(), &lines.join("\n"))?;
            let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).collect();
            for r in &reports {
                eprintln!(
                    "{} {}[{}] trials={} worst_slack={}",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.name,
                    r.family,
                    r.trials,
                    format_g17(r.worst_slack)
                );
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(DivError::CheckFailed {
                    name: "verify".into(),
                    detail: format!("{} of {} checks failed", failed.len(), reports.len()),
                }
                .into())
            }
        }
        Command::Sweep { spec, order, p, q, kind, from, to, count, numeric, output } => {
            let cfg = build_config(&numeric)?;
            let spec = build_spec(&spec, order.alpha)?;
            let (p, q) = (input::distribution(&p, &cfg)?, input::distribution(&q, &cfg)?);
            let params = sweep_values(from, to, count)?;
            let format = output.format.unwrap_or(Format::Csv);
            match kind {
                SweepKind::Line => {
                    let lines =
                        params.iter().map(|&a| line_point(&spec, &p, &q, a, &cfg)).collect::<Result<Vec<_>, _>>()?;
                    let text = match format {
                        Format::Json => to_json(&lines.iter().map(|l| LineOut::new(&spec, l)).collect::<Vec<_>>()),
                        Format::Csv => {
                            let rows: Vec<SweepRow> = lines
                                .iter()
                                .map(|l| SweepRow {
                                    parameter: l.alpha,
                                    value: crate::divergences::value(&spec, p.mass(), l.point.mass()),
                                    residual: l.residual,
                                    mass: l.point.mass().to_vec(),
                                })
                                .collect();
                            sweep_csv(kind, &rows)
                        }
                    };
                    emit(output.out.as_ref(), &text)
                }
                SweepKind::Ball => {
                    let reports = params
                        .iter()
                        .map(|&k| {
                            BallSpec::new(p.clone(), k, spec.clone(), &cfg).and_then(|b| project_ball(&b, &q, &cfg))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let text = match format {
                        Format::Json => to_json(&reports.iter().map(ReportOut::from).collect::<Vec<_>>()),
                        Format::Csv => {
                            let rows: Vec<SweepRow> = params
                                .iter()
                                .zip(&reports)
                                .map(|(&k, r)| SweepRow {
                                    parameter: k,
                                    value: crate::divergences::value(&spec, q.mass(), r.solution.mass()),
                                    residual: r.stationarity_residual,
                                    mass: r.solution.mass().to_vec(),
                                })
                                .collect();
                            sweep_csv(kind, &rows)
                        }
                    };
                    emit(output.out.as_ref(), &text)
                }
            }
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::GeneratorName;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Parse("x".into()).exit_code(), 1);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
        assert_eq!(CliError::Div(DivError::ZeroTotalMass).exit_code(), 1);
        assert_eq!(CliError::Div(DivError::NonConvergence { iterations: 1, residual: 1.0 }).exit_code(), 2);
        assert_eq!(CliError::Div(DivError::CheckFailed { name: "a".into(), detail: "b".into() }).exit_code(), 3);
    }

    #[test]
    fn sweep_grid_includes_endpoints() {
        assert_eq!(sweep_values(0.0, 1.0, 5).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(sweep_values(0.3, 0.9, 1).unwrap(), vec![0.3]);
        assert!(sweep_values(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn verify_family_selection() {
        let (t, g) = verify_specs("all", None, None).unwrap();
        assert_eq!((t.len(), g.len()), (registry().len(), gradient_registry().len()));
        let (t, g) = verify_specs("bregman", None, None).unwrap();
        assert_eq!((t.len(), g.len()), (2, GeneratorName::ALL.len()));
        let (t, _) = verify_specs("renyi", None, Some(3.0)).unwrap();
        assert_eq!(t[0].label(), "renyi[3]");
        assert!(verify_specs("all", Some("xlogx"), None).is_err());
        assert!(verify_specs("nope", None, None).is_err());
    }

    #[test]
    fn order_flags_must_agree() {
        let args = SpecArgs { family: "renyi".into(), generator: None, order: Some(2.0) };
        assert!(build_spec(&args, Some(2.0)).is_ok());
        assert!(build_spec(&args, Some(3.0)).is_err());
        let args = SpecArgs { family: "renyi".into(), generator: None, order: None };
        assert_eq!(build_spec(&args, Some(0.5)).unwrap().alpha(), Some(0.5));
    }
}
