use rayon::prelude::*;

use super::common::{
    calibrate, fit_c_hat, k_pairs, lattice_pair_values, law_param, reference_basis, reference_values,
    require_planar, Instance, Surrogates,
};
use super::config::ExperimentConfig;
use super::records::{Recorder, ResultRecord};
use crate::error::Result;
use crate::field::{DgffSampler, MollifierSpec};
use crate::numerics::{mean_stderr, variance_stderr};
use crate::wick::{
    admissible, covariance_functional, gamma_window, AnalyticFunction, LatticeKernel, SampledKernel,
    TestedFunctional, WickFunctional, DEFAULT_TRUNCATION,
};

fn bool_value(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// Sup over the `K_{ε,δ}` grid of `|g_n(π_n x, π_n y) − ĉ g^{2I}(x, y)/θ̂₀|`
/// per scale, with `ĉ` fitted at the largest scale.
pub fn run_lclt(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    require_planar(cfg)?;
    let eps = cfg.eps[0];
    let delta = cfg.delta.expect("validated");
    let step: f64 = cfg.extra_or("grid", 0.1)?;
    let (points, pairs) = k_pairs(eps, delta, step);
    if pairs.is_empty() {
        return Err(cfg.config_error("K(eps, delta) grid has no pairs"));
    }
    let reference = reference_values(&points, &pairs)?;
    let n_max = cfg.n_max()?;
    let fixed: Option<f64> = match cfg.extra("c_hat") {
        None | Some("fit") => None,
        Some(v) => Some(v.parse().map_err(|e| cfg.config_error(format!("c_hat: {e}")))?),
    };
    let mut rec = Recorder::new("lclt");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            let inst = Instance::sample(law, seed, 2, n_max)?;
            let values: Vec<Vec<f64>> = cfg
                .ns
                .iter()
                .map(|&n| lattice_pair_values(&inst, &inst.solver(n)?, &points, &pairs))
                .collect::<Result<_>>()?;
            let c_hat = fixed.unwrap_or_else(|| fit_c_hat(values.last().expect("n nonempty"), &reference, inst.theta0));
            let params = format!("{lp};eps={eps};delta={delta};pairs={}", pairs.len());
            rec.push(&params, "theta0_hat", inst.theta0, None, seed);
            rec.push(&params, "c_hat", c_hat, None, seed);
            let mut gaps = Vec::new();
            for (&n, vals) in cfg.ns.iter().zip(&values) {
                let gap = vals
                    .iter()
                    .zip(&reference)
                    .map(|(g, r)| (g - c_hat * r / inst.theta0).abs())
                    .fold(0.0, f64::max);
                rec.push(&format!("{params};n={n}"), "sup_gap", gap, None, seed);
                gaps.push(gap);
            }
            let trend = gaps.windows(2).all(|w| w[1] <= w[0]);
            rec.push(&params, "non_increasing", bool_value(trend), None, seed);
        }
    }
    Ok(rec.records)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Limit {
    None,
    Both,
    One,
}

fn limits(cfg: &ExperimentConfig) -> Result<Vec<Limit>> {
    let names: Vec<String> = cfg.extra_list("limits")?;
    if names.is_empty() {
        return Ok(vec![Limit::None, Limit::Both, Limit::One]);
    }
    names
        .iter()
        .map(|s| match s.as_str() {
            "none" => Ok(Limit::None),
            "both" => Ok(Limit::Both),
            "one" => Ok(Limit::One),
            other => Err(cfg.config_error(format!("unknown limit `{other}` (none, both, one)"))),
        })
        .collect()
}

fn live_cells(f: &[f64]) -> Vec<usize> {
    (0..f.len()).filter(|&i| f[i] != 0.0).collect()
}

/// Tested covariance functionals `⟨f, H(·) f⟩` with `H = F₂` of the named
/// function, unsmeared and with one or both arguments mollified, against
/// their continuum targets.
pub fn run_covariance_limits(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    require_planar(cfg)?;
    let f_fn = AnalyticFunction::by_name(&cfg.f_name, DEFAULT_TRUNCATION)?;
    let h_fn = f_fn.f2_transform();
    let h = |a: f64| h_fn.eval(a);
    let gamma = cfg.gamma;
    let which = limits(cfg)?;
    let smeared = which.iter().any(|l| *l != Limit::None);
    if smeared && cfg.eps.is_empty() {
        return Err(cfg.config_error("smeared limits need `eps`"));
    }
    if smeared && cfg.eps[0] >= cfg.f.boundary_clearance() {
        return Err(cfg.config_error(format!(
            "mollifier radius {} reaches the boundary from the support of f = {}",
            cfg.eps[0], cfg.f
        )));
    }
    let target_r: usize = cfg.extra_or("target_r", 48)?;
    let smear_r: usize = cfg.extra_or("smear_r", 16)?;
    let n_max = cfg.n_max()?;

    let f_target = cfg.f.grid(target_r);
    let basis = reference_basis()?;
    let base = SampledKernel::continuum(target_r, live_cells(&f_target), |x, y| basis.green_exact(x, y));
    let f_smear = cfg.f.grid(smear_r);
    let mollifiers: Vec<MollifierSpec> = cfg.eps.iter().map(|&e| MollifierSpec::new(e)).collect::<Result<_>>()?;

    let mut rec = Recorder::new("covariance-limits");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            let inst = Instance::sample(law, seed, 2, n_max)?;
            let th = inst.theta0;
            let c_hat = calibrate(cfg, &inst, &inst.solver(n_max)?)?;
            // ⟨f, H(γ² θ̂₀⁻¹ Ĝ^Σ) f⟩ with Ĝ^Σ = ĉ g^{2I}.
            let core = covariance_functional(&base, &h, gamma * gamma * c_hat / th, &f_target)?;
            let mut rows: Vec<(String, &str, f64)> = Vec::new();
            let mut surrogates = None;
            for &n in &cfg.ns {
                let green = inst.green(n)?;
                if which.contains(&Limit::None) {
                    let f_n = cfg.f.grid(n);
                    let value = covariance_functional(&LatticeKernel::new(&green)?, &h, gamma * gamma, &f_n)?;
                    let target = th * th * core;
                    rows.push((format!("n={n};limit=none"), "value", value));
                    rows.push((format!("n={n};limit=none"), "target", target));
                    rows.push((format!("n={n};limit=none"), "gap", (value - target).abs()));
                }
                for m in &mollifiers {
                    let live = live_cells(&f_smear);
                    if which.contains(&Limit::Both) {
                        let k = SampledKernel::smeared_both(&green, m, smear_r, live.clone())?;
                        let value = covariance_functional(&k, &h, gamma * gamma / (th * th), &f_smear)?;
                        let tag = format!("n={n};eps={};limit=both", m.eps);
                        rows.push((tag.clone(), "value", value));
                        rows.push((tag.clone(), "target", core));
                        rows.push((tag, "gap", (value - core).abs()));
                    }
                    if which.contains(&Limit::One) {
                        let k = SampledKernel::smeared_one(&green, m, smear_r, live)?;
                        let value = covariance_functional(&k, &h, gamma * gamma / th, &f_smear)?;
                        let tag = format!("n={n};eps={};limit=one", m.eps);
                        rows.push((tag.clone(), "value", value));
                        rows.push((tag.clone(), "target", th * core));
                        rows.push((tag, "gap", (value - th * core).abs()));
                    }
                }
                if n == n_max {
                    surrogates = Some(Surrogates::estimate(c_hat, &green, seed)?);
                }
            }
            let s = surrogates.expect("n_max visited");
            let ok = admissible(gamma, h_fn.beta, th, s.c_sigma, s.c_hk);
            let params = format!("{lp};F={};gamma={gamma};admissible={ok}", cfg.f_name);
            rec.push(&params, "theta0_hat", th, None, seed);
            rec.push(&params, "c_hat", c_hat, None, seed);
            rec.push(&params, "c_sigma_hat", s.c_sigma, None, seed);
            rec.push(&params, "c_hk_hat", s.c_hk, None, seed);
            rec.push(&params, "gamma_window", gamma_window(h_fn.beta, th, s.c_sigma, s.c_hk), None, seed);
            rec.push(&params, "admissible", bool_value(ok), None, seed);
            for (tag, metric, value) in rows {
                rec.push(&format!("{params};{tag}"), metric, value, None, seed);
            }
        }
    }
    Ok(rec.records)
}

/// MC variance of `⟨:Φ_n^k:, f⟩` against `k!⟨f, (ĉ g^{2I})^{∘k} f⟩`. The
/// ratio tends to `θ₀^{2−k}`.
pub fn run_wick_scaling(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    require_planar(cfg)?;
    let ks: Vec<usize> = {
        let ks: Vec<usize> = cfg.extra_list("k")?;
        if ks.is_empty() {
            vec![1, 2]
        } else {
            ks
        }
    };
    if ks.iter().any(|k| !(1..=4).contains(k)) {
        return Err(cfg.config_error("k-list must lie in {1, 2, 3, 4}"));
    }
    if cfg.replicas < 2 {
        return Err(cfg.config_error("wick-scaling needs at least two replicas"));
    }
    let target_r: usize = cfg.extra_or("target_r", 48)?;
    let n_max = cfg.n_max()?;
    let f_target = cfg.f.grid(target_r);
    let basis = reference_basis()?;
    let base = SampledKernel::continuum(target_r, live_cells(&f_target), |x, y| basis.green_exact(x, y));
    // k!⟨f, (g^{2I})^{∘k} f⟩; the law enters through ĉ^k.
    let base_targets: Vec<f64> = ks
        .iter()
        .map(|&k| {
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            covariance_functional(&base, &|a: f64| a.powi(k as i32), 1.0, &f_target).map(|v| fact * v)
        })
        .collect::<Result<_>>()?;

    let mut rec = Recorder::new("wick-scaling");
    for law in &cfg.laws {
        let lp = law_param(law);
        for &seed in &cfg.seeds {
            let inst = Instance::sample(law, seed, 2, n_max)?;
            let th = inst.theta0;
            let c_hat = calibrate(cfg, &inst, &inst.solver(n_max)?)?;
            rec.push(&lp, "theta0_hat", th, None, seed);
            rec.push(&lp, "c_hat", c_hat, None, seed);
            for &n in &cfg.ns {
                let green = inst.green(n)?;
                let sampler = DgffSampler::new(green.operator().clone())?;
                let f_n = cfg.f.grid(n);
                let evals: Vec<TestedFunctional> = ks
                    .iter()
                    .map(|&k| {
                        TestedFunctional::new(&green, &WickFunctional::new(AnalyticFunction::monomial(k), 1.0, f_n.clone()))
                    })
                    .collect::<Result<_>>()?;
                let samples: Vec<Vec<f64>> = (0..cfg.replicas as u64)
                    .into_par_iter()
                    .map(|r| {
                        let field = sampler.sample_one(seed, r);
                        evals.iter().map(|e| e.eval(&field)).collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<_>>()?;
                for (idx, &k) in ks.iter().enumerate() {
                    let xs: Vec<f64> = samples.iter().map(|s| s[idx]).collect();
                    let (var, var_se) = variance_stderr(&xs);
                    let (mean, mean_se) = mean_stderr(&xs);
                    let target = c_hat.powi(k as i32) * base_targets[idx];
                    let ratio = if target != 0.0 { var / target } else { 0.0 };
                    let ratio_se = if target != 0.0 { var_se / target } else { 0.0 };
                    let predicted = th.powi(2 - k as i32);
                    let params = format!("{lp};n={n};k={k}");
                    rec.push(&params, "mean", mean, Some(mean_se), seed);
                    rec.push(&params, "mc_variance", var, Some(var_se), seed);
                    rec.push(&params, "target", target, None, seed);
                    rec.push(&params, "ratio", ratio, Some(ratio_se), seed);
                    rec.push(&params, "predicted_ratio", predicted, None, seed);
                }
            }
        }
    }
    Ok(rec.records)
}
