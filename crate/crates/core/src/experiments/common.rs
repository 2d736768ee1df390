use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::ContinuumBasis;
use crate::green::{build_scaled_operator, fit_green_bounds, Frame, GreenOperator, GreenSolver, SolverOptions};
use crate::lattice::{largest_cluster, sample_environment, ClusterGeometry, EnvironmentLaw, LawKind, Site};
use crate::numerics::linear_fit;

/// Pair grid used to calibrate `ĉ` outside the LCLT experiment.
pub(crate) const CAL_EPS: f64 = 0.2;
pub(crate) const CAL_DELTA: f64 = 0.3;
pub(crate) const CAL_STEP: f64 = 0.1;
/// Rows sampled by the Green-bound fit behind `Ĉ_HK`.
pub(crate) const HK_SOURCES: usize = 16;

pub(crate) fn law_param(law: &EnvironmentLaw) -> String {
    match law.kind {
        LawKind::Bernoulli { p, .. } => format!("p={p}"),
        LawKind::BernoulliPareto { p, alpha, .. } => format!("p={p};alpha={alpha}"),
        LawKind::Constant { w0 } => format!("w0={w0}"),
    }
}

pub(crate) fn require_planar(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.d == 2 {
        Ok(())
    } else {
        Err(cfg.config_error(format!("{} runs in d = 2 only", cfg.experiment)))
    }
}

/// One environment sample large enough for every scale up to `n_max`, with
/// its largest cluster.
pub(crate) struct Instance {
    pub geom: Arc<ClusterGeometry>,
    pub theta0: f64,
}

impl Instance {
    pub fn sample(law: &EnvironmentLaw, seed: u64, dim: usize, n_max: usize) -> Result<Self> {
        let half = Frame::centered(n_max, dim).padded_half_width();
        let env = sample_environment(&law.with_seed(seed), dim, half)?;
        let geom = Arc::new(largest_cluster(Arc::new(env))?);
        let theta0 = geom.core_density();
        Ok(Instance { geom, theta0 })
    }

    pub fn solver(&self, n: usize) -> Result<GreenSolver> {
        let op = build_scaled_operator(&self.geom, Frame::centered(n, self.geom.dim()))?;
        GreenSolver::new(Arc::new(op), SolverOptions::default())
    }

    pub fn green(&self, n: usize) -> Result<GreenOperator> {
        let op = build_scaled_operator(&self.geom, Frame::centered(n, self.geom.dim()))?;
        crate::green::solve_green(Arc::new(op), crate::green::DEFAULT_TOL)
    }
}

/// Grid points of spacing `step` at distance `≥ delta` from the boundary,
/// and the index pairs `i < j` at distance `≥ eps`.
pub(crate) fn k_pairs(eps: f64, delta: f64, step: f64) -> (Vec<[f64; 2]>, Vec<(usize, usize)>) {
    let count = ((1.0 - 2.0 * delta) / step + 1e-9).floor() as usize + 1;
    let axis: Vec<f64> = (0..count).map(|i| delta + i as f64 * step).collect();
    let points: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
            if d >= eps - 1e-12 {
                pairs.push((i, j));
            }
        }
    }
    (points, pairs)
}

/// `g^{2I}` on the pairs, the continuum kernel of the constant-speed limit.
pub(crate) fn reference_values(points: &[[f64; 2]], pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let basis = reference_basis()?;
    Ok(pairs.par_iter().map(|&(i, j)| basis.green_exact(&points[i], &points[j])).collect())
}

pub(crate) fn reference_basis() -> Result<ContinuumBasis> {
    ContinuumBasis::diagonal([2.0, 2.0], 1)
}

/// `g_n(π_n x, π_n y)` on the pairs, one column solve per distinct point.
pub(crate) fn lattice_pair_values(
    inst: &Instance,
    solver: &GreenSolver,
    points: &[[f64; 2]],
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let op = solver.operator();
    let frame = *op.frame().expect("scaled operator");
    let rows: Vec<usize> = points
        .iter()
        .map(|x| {
            let site: Site = inst.geom.project_point(frame.lattice_point(x));
            op.row_of(&site).ok_or_else(|| {
                Error::InvalidParameter(format!("π_n({x:?}) = {site:?} is not inside the domain"))
            })
        })
        .collect::<Result<_>>()?;
    let mut needed: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
    needed.sort_unstable();
    needed.dedup();
    let cols: BTreeMap<usize, Vec<f64>> = needed
        .par_iter()
        .map(|&i| solver.column(rows[i]).map(|c| (i, c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    Ok(pairs.iter().map(|&(i, j)| cols[&i][rows[j]]).collect())
}

/// `ĉ` minimising `Σ (g_n − ĉ·g^{2I}/θ̂₀)²`.
pub(crate) fn fit_c_hat(lattice: &[f64], reference: &[f64], theta0: f64) -> f64 {
    let num: f64 = lattice.iter().zip(reference).map(|(a, b)| a * b).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    theta0 * num / den
}

/// `ĉ` from the calibration grid at scale `n`, or the fixed value from the
/// config key `c_hat`.
pub(crate) fn calibrate(cfg: &ExperimentConfig, inst: &Instance, solver: &GreenSolver) -> Result<f64> {
    match cfg.extra("c_hat") {
        None | Some("fit") => {
            let (points, pairs) = k_pairs(CAL_EPS, CAL_DELTA, CAL_STEP);
            let lattice = lattice_pair_values(inst, solver, &points, &pairs)?;
            let reference = reference_values(&points, &pairs)?;
            Ok(fit_c_hat(&lattice, &reference, inst.theta0))
        }
        Some(v) => v.parse().map_err(|e| cfg.config_error(format!("c_hat: {e}"))),
    }
}

/// Surrogates for the constants of the admissibility window.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Surrogates {
    pub c_sigma: f64,
    pub c_hk: f64,
}

impl Surrogates {
    /// `Ĉ_Σ` is the log-slope of `ĉ·g^{2I}` on the calibration grid and
    /// `Ĉ_HK` the slope of the Green-bound fit of `green`.
    pub fn estimate(c_hat: f64, green: &GreenOperator, seed: u64) -> Result<Self> {
        let (points, pairs) = k_pairs(0.0, 0.1, 0.1);
        let reference = reference_values(&points, &pairs)?;
        let logs: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| -(points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]).ln())
            .collect();
        let vals: Vec<f64> = reference.iter().map(|g| c_hat * g).collect();
        let c_sigma = linear_fit(&logs, &vals).slope;
        let c_hk = fit_green_bounds(green, HK_SOURCES, seed)?.slope;
        Ok(Surrogates { c_sigma, c_hk })
    }
}
