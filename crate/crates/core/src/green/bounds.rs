use rand::seq::index::sample;

use super::GreenOperator;
use crate::error::{invalid, Result};
use crate::numerics::{linear_fit, percentile, LinearFit};
use crate::rng::{stream, Purpose};

/// Least-squares fit of the Green kernel against its bound shape.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenBoundReport {
    pub dim: usize,
    pub n: usize,
    pub pairs: usize,
    /// Fitted slope `ĉ`: log-slope in d = 2, power-law amplitude in d = 3.
    pub slope: f64,
    /// Least-squares intercept.
    pub fit_intercept: f64,
    /// Intercept surrogate: fit intercept plus the 99th-percentile residual.
    pub intercept: f64,
    pub r2: f64,
    /// Fraction of pairs above `slope·x + intercept`.
    pub exceedance: f64,
    pub max_residual: f64,
}

/// The regressor for a pair at chemical distance `d` and scale `n`.
pub fn bound_regressor(dim: usize, n: f64, dist: f64) -> f64 {
    let d = dist.max(1.0);
    if dim == 2 {
        (n / d).ln()
    } else {
        (n / d).powi(dim as i32 - 2)
    }
}

/// Fits `g_n(x,y)` (d = 2) or `n^{d−2} g_n(x,y)` (d ≥ 3) against the bound
/// regressor over all pairs whose first entry is one of `sources` sampled rows.
pub fn fit_green_bounds(green: &GreenOperator, sources: usize, seed: u64) -> Result<GreenBoundReport> {
    let n = green.scale().ok_or_else(|| invalid("Green kernel carries no scale n"))?;
    let op = green.operator();
    let geom = op.geom();
    let dim = geom.dim();
    let m = green.len();
    let k = sources.min(m).max(1);
    let mut rng = stream(seed, Purpose::PairSampling, n as u64);
    let mut rows: Vec<usize> = sample(&mut rng, m, k).into_vec();
    rows.sort_unstable();
    let cluster_idx: Vec<usize> = op.sites().iter().map(|x| geom.index_of(x).expect("on cluster")).collect();
    let scale = (n as f64).powi(dim as i32 - 2);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &i in &rows {
        let dist = geom.distances_from(cluster_idx[i]);
        for j in 0..m {
            xs.push(bound_regressor(dim, n as f64, f64::from(dist[cluster_idx[j]])));
            ys.push(scale * green.entry(i, j));
        }
    }
    let fit = linear_fit(&xs, &ys);
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (fit.slope * x + fit.intercept)).collect();
    let q = percentile(&residuals, 0.99);
    let intercept = fit.intercept + q;
    let above = xs.iter().zip(&ys).filter(|(x, y)| **y > fit.slope * **x + intercept).count();
    Ok(GreenBoundReport {
        dim,
        n,
        pairs: xs.len(),
        slope: fit.slope,
        fit_intercept: fit.intercept,
        intercept,
        r2: fit.r2,
        exceedance: above as f64 / xs.len() as f64,
        max_residual: residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Fit of diagonal values `g_n(x,x)` against `log n`.
pub fn fit_diagonal_log(ns: &[f64], diag: &[f64]) -> LinearFit {
    let logs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    linear_fit(&logs, diag)
}
