use std::sync::Arc;

use super::common::{law_param, Instance};
use super::config::ExperimentConfig;
use super::records::{Recorder, ResultRecord};
use crate::error::{Error, Result};
use crate::green::{
    build_killed_operator, fit_diagonal_log, fit_green_bounds, killed_heat_kernel, spectral_decompose, DEFAULT_EIGEN_CAP,
};
use crate::lattice::{
    ball_family, ergodic_sweep, largest_cluster, sample_environment, Environment, EnvironmentLaw, Observable, Site,
};
use crate::numerics::linear_fit;

/// Diagonal `g_n(x, x)` at the centre of the unit cube across scales with its
/// fit against `log n`, plus the off-diagonal bound fit at scales small
/// enough for a dense inverse.
pub fn run_green_bounds(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let n_max = cfg.n_max()?;
    let dense_max: usize = cfg.extra_or("dense_max", 64)?;
    let sources: usize = cfg.extra_or("sources", 32)?;
    let mut rec = Recorder::new("green-bounds");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            let inst = Instance::sample(law, seed, cfg.d, n_max)?;
            let mut diag = Vec::new();
            for &n in &cfg.ns {
                let solver = inst.solver(n)?;
                let op = solver.operator();
                let frame = *op.frame().expect("scaled");
                let centre = inst.geom.project_point(frame.lattice_point(&vec![0.5; cfg.d]));
                let row = op
                    .row_of(&centre)
                    .ok_or_else(|| Error::InvalidParameter(format!("centre {centre:?} is outside the domain")))?;
                let g = solver.column(row)?[row];
                let params = format!("{lp};d={};n={n}", cfg.d);
                rec.push(&params, "diagonal", g, None, seed);
                diag.push(g);
                if n <= dense_max {
                    let report = fit_green_bounds(&inst.green(n)?, sources, seed)?;
                    rec.push(&params, "slope", report.slope, None, seed);
                    rec.push(&params, "intercept", report.intercept, None, seed);
                    rec.push(&params, "r2", report.r2, None, seed);
                    rec.push(&params, "exceedance", report.exceedance, None, seed);
                    rec.push(&params, "max_residual", report.max_residual, None, seed);
                }
            }
            if cfg.ns.len() >= 2 {
                let ns: Vec<f64> = cfg.ns.iter().map(|&n| n as f64).collect();
                let fit = fit_diagonal_log(&ns, &diag);
                let params = format!("{lp};d={}", cfg.d);
                rec.push(&params, "diagonal_log_slope", fit.slope, None, seed);
                rec.push(&params, "diagonal_log_r2", fit.r2, None, seed);
            }
        }
    }
    Ok(rec.records)
}

/// A site at chemical distance `d` from `x` closest to the first coordinate
/// axis through `x`, preferring the positive side.
fn axis_target(sites: &[Site], dist: &[u32], x: &Site, d: u32) -> Option<usize> {
    (0..sites.len()).filter(|&j| dist[j] == d).min_by_key(|&j| {
        let y = &sites[j];
        let perp: i64 = (1..3).map(|k| i64::from((y.0[k] - x.0[k]).abs())).sum();
        (perp, y.0[0] < x.0[0], *y)
    })
}

/// Gaussian-regime fits of the killed heat kernel on chemical balls: for
/// each radius `n`, `log q_t(x, y) + (d/2) log t` against `d^ω(x, y)²/t` over
/// `t ∈ [d^ω², 4 d^ω²]`.
pub fn run_heatkernel(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let cap: usize = cfg.extra_or("cap", DEFAULT_EIGEN_CAP)?;
    let t_points: usize = cfg.extra_or("t_points", 7)?;
    if t_points < 2 {
        return Err(cfg.config_error("t_points must be at least 2"));
    }
    let distances: Vec<u32> = {
        let d: Vec<u32> = cfg.extra_list("distances")?;
        if d.is_empty() {
            vec![2, 3, 4, 5, 6]
        } else {
            d
        }
    };
    let dim = cfg.d as f64;
    let mut rec = Recorder::new("heatkernel");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            for &n in &cfg.ns {
                let env = sample_environment(&law.with_seed(seed), cfg.d, n as i32 + 2)?;
                let geom = Arc::new(largest_cluster(Arc::new(env))?);
                let centre = geom.project_point([0.0; 3]);
                let ball = geom.chemical_ball(&centre, n as u32);
                let op = build_killed_operator(&geom, &ball)?;
                let spec = spectral_decompose(&op, cap)?;
                let x_row = op.row_of(&centre).expect("centre in ball");
                let dist = geom.distances_from(geom.index_of(&centre).expect("on cluster"));
                let sites = op.sites();
                let row_dist: Vec<u32> = sites.iter().map(|s| dist[geom.index_of(s).expect("on cluster")]).collect();
                let (mut xs, mut ys) = (Vec::new(), Vec::new());
                for &d in distances.iter().filter(|&&d| d >= 1 && (d as usize) < n) {
                    let Some(y_row) = axis_target(sites, &row_dist, &centre, d) else { continue };
                    let df = f64::from(d);
                    for i in 0..t_points {
                        let t = df * df * 4f64.powf(i as f64 / (t_points - 1) as f64);
                        let q = killed_heat_kernel(&spec, t, x_row, y_row)?;
                        if q > 0.0 {
                            xs.push(df * df / t);
                            ys.push(q.ln() + 0.5 * dim * t.ln());
                        }
                    }
                }
                if xs.len() < 3 {
                    return Err(Error::InvalidParameter(format!("ball of radius {n} leaves too few fit points")));
                }
                let fit = linear_fit(&xs, &ys);
                let params = format!("{lp};d={};n={n}", cfg.d);
                rec.push(&params, "ball_sites", ball.len() as f64, None, seed);
                rec.push(&params, "lambda1", spec.principal(), None, seed);
                rec.push(&params, "gaussian_slope", fit.slope, None, seed);
                rec.push(&params, "gaussian_intercept", fit.intercept, None, seed);
                rec.push(&params, "gaussian_r2", fit.r2, None, seed);
            }
        }
    }
    Ok(rec.records)
}

fn edge_weight_baseline(law: &EnvironmentLaw, dim: usize, half: i32, seed: u64) -> Result<f64> {
    let env: Environment = sample_environment(&law.with_seed(seed), dim, half)?;
    let (sum, count) = env.edges().fold((0.0, 0usize), |(s, c), (_, _, w)| (s + w, c + 1));
    Ok(dim as f64 * sum / count as f64)
}

/// Sup-drift of ergodic averages over the standard ball family across box
/// half-widths, against a baseline from one large box.
pub fn run_ergodic(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let half_widths: Vec<i32> = cfg.extra_list("half_widths")?;
    if half_widths.is_empty() || half_widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg.config_error("half_widths must be a strictly increasing nonempty list"));
    }
    let baseline_l: i32 = cfg.extra_or("baseline_L", 1024)?;
    let baseline_seed: u64 = cfg.extra_or("baseline_seed", 0xBA5E)?;
    let observable_name = cfg.extra("observable").unwrap_or("edge-weight");
    let family = ball_family(cfg.d);
    let mut rec = Recorder::new("ergodic");
    for law in &cfg.laws {
        let lp = law_param(law);
        let (observable, baseline) = match observable_name {
            "edge-weight" => (Observable::EdgeWeight, edge_weight_baseline(law, cfg.d, baseline_l, baseline_seed)?),
            s => match s.strip_prefix("constant").map(str::trim) {
                Some("") => (Observable::Constant(1.0), 1.0),
                Some(c) => {
                    let c: f64 = c.parse().map_err(|e| cfg.config_error(format!("observable: {e}")))?;
                    (Observable::Constant(c), c)
                }
                None => return Err(cfg.config_error(format!("unknown observable `{s}`"))),
            },
        };
        let params = format!("{lp};d={};observable={observable_name}", cfg.d);
        rec.push(&params, "baseline", baseline, None, baseline_seed);
        for &seed in &cfg.seeds {
            let report = ergodic_sweep(&law.with_seed(seed), cfg.d, &half_widths, &family, &observable, baseline)?;
            for (l, drift) in report.half_widths.iter().zip(&report.sup_drift) {
                rec.push(&format!("{params};L={l}"), "sup_drift", *drift, None, seed);
            }
            rec.push(&params, "monotone", f64::from(u8::from(report.is_monotone())), None, seed);
        }
    }
    Ok(rec.records)
}
