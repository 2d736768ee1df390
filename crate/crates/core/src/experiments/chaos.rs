use rayon::prelude::*;

use super::common::{calibrate, law_param, require_planar, Instance, Surrogates};
use super::config::{ExperimentConfig, TestFunction};
use super::records::{Recorder, ResultRecord};
use crate::error::Result;
use crate::field::DgffSampler;
use crate::numerics::mean_stderr;
use crate::wick::{
    admissible, covariance_functional, gibbs_reweight, AnalyticFunction, LatticeKernel, TestedFunctional,
    WickFunctional, DEFAULT_TRUNCATION,
};

/// GMC mass of a set `A` across scales: MC mean against the cluster census of
/// `A`, and MC second moment against `∫∫_A e^{γ² g_n}`.
pub fn run_gmc(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    require_planar(cfg)?;
    let set: TestFunction = match cfg.extra("set") {
        None => TestFunction::Box { lo: [0.25, 0.25], hi: [0.75, 0.75] },
        Some(s) => s.parse().map_err(|e: String| cfg.config_error(format!("set: {e}")))?,
    };
    if cfg.replicas < 2 {
        return Err(cfg.config_error("gmc needs at least two replicas"));
    }
    let gamma = cfg.gamma;
    let n_max = cfg.n_max()?;
    let exp = AnalyticFunction::exp(DEFAULT_TRUNCATION);
    let mut rec = Recorder::new("gmc");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            let inst = Instance::sample(law, seed, 2, n_max)?;
            let th = inst.theta0;
            let c_hat = calibrate(cfg, &inst, &inst.solver(n_max)?)?;
            let mut rows: Vec<(String, &str, f64, Option<f64>)> = Vec::new();
            let mut surrogates = None;
            for &n in &cfg.ns {
                let green = inst.green(n)?;
                let frame = *green.frame().expect("scaled");
                let indicator = set.grid(n);
                let census = (0..n * n)
                    .filter(|&c| indicator[c] != 0.0 && inst.geom.contains(&frame.cell_site(&[c / n, c % n])))
                    .count() as f64
                    / (n * n) as f64;
                let area = indicator.iter().filter(|v| **v != 0.0).count() as f64 / (n * n) as f64;
                let tf = TestedFunctional::new(&green, &WickFunctional::new(exp.clone(), gamma, indicator.clone()))?;
                let sampler = DgffSampler::new(green.operator().clone())?;
                let masses: Vec<f64> = (0..cfg.replicas as u64)
                    .into_par_iter()
                    .map(|r| tf.eval(&sampler.sample_one(seed, r)))
                    .collect::<Result<_>>()?;
                let (mean, mean_se) = mean_stderr(&masses);
                let squares: Vec<f64> = masses.iter().map(|m| m * m).collect();
                let (second, second_se) = mean_stderr(&squares);
                let second_target = covariance_functional(&LatticeKernel::new(&green)?, &f64::exp, gamma * gamma, &indicator)?;
                let tag = format!("n={n}");
                rows.push((tag.clone(), "mean_mass", mean, Some(mean_se)));
                rows.push((tag.clone(), "census_mass", census, None));
                rows.push((tag.clone(), "theta0_area", th * area, None));
                rows.push((tag.clone(), "mean_z", (mean - census) / mean_se.max(f64::MIN_POSITIVE), None));
                rows.push((tag.clone(), "second_moment", second, Some(second_se)));
                rows.push((tag.clone(), "second_moment_target", second_target, None));
                rows.push((tag, "second_moment_ratio", second / second_target, Some(second_se / second_target)));
                if n == n_max {
                    surrogates = Some(Surrogates::estimate(c_hat, &green, seed)?);
                }
            }
            let s = surrogates.expect("n_max visited");
            let ok = admissible(gamma, exp.beta, th, s.c_sigma, s.c_hk);
            let params = format!("{lp};gamma={gamma};set={set};admissible={ok}");
            rec.push(&params, "theta0_hat", th, None, seed);
            rec.push(&params, "admissible", f64::from(u8::from(ok)), None, seed);
            for (tag, metric, value, se) in rows {
                rec.push(&format!("{params};{tag}"), metric, value, se, seed);
            }
        }
    }
    Ok(rec.records)
}

/// Gibbs expectation of `⟨Φ_n, f⟩` under the Hamiltonian `⟨:V(γΦ_n):, g⟩`,
/// by reweighting free-field replicas.
pub fn run_gibbs(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    require_planar(cfg)?;
    let v = AnalyticFunction::by_name(cfg.extra("V").unwrap_or("exp"), DEFAULT_TRUNCATION)?;
    if cfg.replicas < 2 {
        return Err(cfg.config_error("gibbs needs at least two replicas"));
    }
    let n_max = cfg.n_max()?;
    let identity = AnalyticFunction::monomial(1);
    let mut rec = Recorder::new("gibbs");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            let inst = Instance::sample(law, seed, 2, n_max)?;
            for &n in &cfg.ns {
                let green = inst.green(n)?;
                let sampler = DgffSampler::new(green.operator().clone())?;
                let fields = sampler.sample(cfg.replicas, seed);
                let obs_fn = TestedFunctional::new(&green, &WickFunctional::new(identity.clone(), 1.0, cfg.f.grid(n)))?;
                let observable: Vec<f64> = fields.iter().map(|f| obs_fn.eval(f)).collect::<Result<_>>()?;
                let est = gibbs_reweight(&fields, &green, &v, cfg.gamma, &cfg.g.grid(n), &observable)?;
                let (free_mean, free_se) = mean_stderr(&observable);
                let lo = est.weights.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = est.weights.iter().copied().fold(0.0, f64::max);
                let in_unit = est.weights.iter().all(|w| *w > 0.0 && *w <= 1.0);
                let params = format!("{lp};V={};gamma={};n={n}", v.name, cfg.gamma);
                rec.push(&params, "estimate", est.estimate, None, seed);
                rec.push(&params, "free_mean", free_mean, Some(free_se), seed);
                rec.push(&params, "ess", est.ess, None, seed);
                rec.push(&params, "min_weight", lo, None, seed);
                rec.push(&params, "max_weight", hi, None, seed);
                rec.push(&params, "weights_in_unit_interval", f64::from(u8::from(in_unit)), None, seed);
            }
        }
    }
    Ok(rec.records)
}
