use crate::config::NumericConfig;
use crate::distribution::DiscreteDistribution;
use crate::error::{DivError, Result};

/// Exhaustive minimization over the simplex lattice with spacing
/// `1 / grid_steps`.
///
/// Lattice points are shifted into the interior by `interior_floor`, so that
/// a lattice coordinate `k / N` becomes `floor + (k / N)(1 - n·floor)`.
/// Points where `objective` is not finite are treated as infeasible, which is
/// how constrained problems restrict the search. Returns the best point and
/// its objective value.
pub fn brute_force_minimize<F>(
    mut objective: F,
    support_size: usize,
    grid_steps: usize,
    cfg: &NumericConfig,
) -> Result<(DiscreteDistribution, f64)>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(2..=4).contains(&support_size) {
        return Err(DivError::InvalidConfig(format!("brute force supports 2 to 4 atoms, got {support_size}")));
    }
    if grid_steps < 50 {
        return Err(DivError::InvalidConfig(format!("brute force needs at least 50 grid steps, got {grid_steps}")));
    }
    let n = support_size;
    let floor = cfg.interior_floor;
    let scale = (1.0 - n as f64 * floor) / grid_steps as f64;
    let mut counts = vec![0usize; n];
    let mut point = vec![0.0; n];
    let mut best: Option<(Vec<f64>, f64)> = None;

    // Odometer over compositions of grid_steps into n parts.
    counts[n - 1] = grid_steps;
    loop {
        for (x, &k) in point.iter_mut().zip(&counts) {
            *x = floor + k as f64 * scale;
        }
        let v = objective(&point);
        if v.is_finite() && best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((point.clone(), v));
        }
        // Advance: move one unit from the last part into the rightmost
        // earlier part that can still grow.
        let Some(i) = (0..n - 1).rev().find(|&i| counts[i + 1..].iter().sum::<usize>() > 0) else {
            break;
        };
        let rest: usize = counts[i + 1..].iter().sum();
        counts[i] += 1;
        for c in &mut counts[i + 1..] {
            *c = 0;
        }
        counts[n - 1] = rest - 1;
    }

    let (mass, value) =
        best.ok_or_else(|| DivError::InvalidConfig("objective is not finite at any lattice point".into()))?;
    Ok((DiscreteDistribution::from_solver(mass, (0..n).map(|i| i as f64).collect()), value))
}
