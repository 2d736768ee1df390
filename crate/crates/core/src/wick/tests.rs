use std::sync::Arc;

use super::*;
use crate::field::{ContinuumBasis, DgffSampler};
use crate::green::{build_scaled_operator, solve_green, Frame};
use crate::lattice::{largest_cluster, sample_environment, EnvironmentLaw};

#[test]
fn hermite_small_cases() {
    assert_eq!(hermite(2, 3.0, 4.0).unwrap(), 5.0);
    assert_eq!(hermite_explicit(2, 3.0, 4.0).unwrap(), 5.0);
    for k in 0..10 {
        assert!((hermite(k, 1.7, 0.0).unwrap() - 1.7f64.powi(k as i32)).abs() < 1e-12);
    }
    assert!(hermite(3, 1.0, -0.1).is_err());
    // H₇(x, v) = x⁷ − 21 v x⁵ + 105 v² x³ − 105 v³ x with integer coefficients.
    let (x, v) = (1.3f64, 0.7f64);
    let direct = x.powi(7) - 21.0 * v * x.powi(5) + 105.0 * v * v * x.powi(3) - 105.0 * v.powi(3) * x;
    let rec = hermite(7, x, v).unwrap();
    assert!(((rec - direct) / direct).abs() < 1e-12);
}

#[test]
fn scaled_recurrence_matches_plain() {
    let h = hermite_scaled_all(12, 0.8, 1.3);
    let mut fact = 1.0;
    for (k, hk) in h.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        assert!((hk * fact - hermite(k, 0.8, 1.3).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn wick_exponential_closed_form() {
    let f = AnalyticFunction::exp(64);
    for &(g, x, v) in &[(0.5, 0.3, 1.0), (1.2, -2.0, 2.5), (0.8, 3.0, 0.1)] {
        let w = wick_analytic(&f, g, x, v).unwrap();
        let closed = (g * x - g * g * v / 2.0).exp();
        assert!(((w - closed) / closed).abs() < 1e-10);
    }
    let id = AnalyticFunction::monomial(1);
    assert_eq!(wick_analytic(&id, 0.7, 2.0, 5.0).unwrap(), 0.7 * 2.0);
}

#[test]
fn f2_transforms() {
    let e = AnalyticFunction::exp(30);
    let e2 = e.f2_transform();
    for (a, b) in e.coeffs.iter().zip(&e2.coeffs) {
        assert!((a - b).abs() <= 1e-15 * a.abs());
    }
    let s2 = AnalyticFunction::sin(64).f2_transform();
    for x in [0.0, 0.5, 2.0, 7.5] {
        assert!((s2.eval(x) - f64::sinh(x)).abs() < 1e-10 * f64::cosh(x));
    }
    let sq = AnalyticFunction::monomial(2).f2_transform();
    assert_eq!(sq.coeffs, vec![0.0, 0.0, 2.0]);
}

#[test]
fn fock_bounds_and_tail() {
    for name in ["exp", "sin", "cos", "sinh", "cosh", "id", "x^2", "x^4"] {
        let f = AnalyticFunction::by_name(name, DEFAULT_TRUNCATION).unwrap();
        assert!(f.fock_check(), "{name}");
    }
    let e = AnalyticFunction::exp(64);
    assert!(e.truncation_ok(5.0));
    assert!(!AnalyticFunction::exp(4).truncation_ok(5.0));
    assert!(AnalyticFunction::by_name("tan", 8).is_err());
}

#[test]
fn serialization_round_trip() {
    let f = AnalyticFunction::cos(12);
    let text = f.to_string();
    assert!(text.starts_with("cos 1.0 1.0 12 1.0 0.0 -0.5"));
    assert_eq!(text.parse::<AnalyticFunction>().unwrap(), f);
    assert!("exp 1 1 3 1 1".parse::<AnalyticFunction>().is_err());
}

struct Const(usize, f64);

impl GridKernel for Const {
    fn resolution(&self) -> usize {
        self.0
    }
    fn value(&self, _: usize, _: usize) -> f64 {
        self.1
    }
}

#[test]
fn covariance_functional_trivial_cases() {
    let k = Const(1, 3.0);
    assert_eq!(covariance_functional(&k, &|_| 0.0, 1.0, &[1.0]).unwrap(), 0.0);
    assert_eq!(covariance_functional(&k, &|a| a, 1.0, &[1.0]).unwrap(), 3.0);
    let k4 = Const(4, 3.0);
    let v = covariance_functional(&k4, &|a| a, 2.0, &vec![1.0; 16]).unwrap();
    assert!((v - 6.0).abs() < 1e-12);
    assert!(covariance_functional(&k4, &|a| a, 1.0, &[1.0]).is_err());
}

#[test]
fn admissibility_is_monotone_in_gamma() {
    let w = gamma_window(1.0, 0.9, 0.16, 0.2);
    assert!(admissible(0.99 * w, 1.0, 0.9, 0.16, 0.2));
    assert!(!admissible(w, 1.0, 0.9, 0.16, 0.2));
    let mut last = true;
    for i in (0..100).rev() {
        let now = admissible(f64::from(i) * 0.05, 1.0, 0.9, 0.16, 0.2);
        assert!(!last || now || f64::from(i) * 0.05 >= w);
        last = now;
    }
}

fn small_setup(n: usize, p: f64) -> (crate::green::GreenOperator, DgffSampler) {
    let f = Frame::centered(n, 2);
    let env = sample_environment(&EnvironmentLaw::bernoulli(p, 1.0, 7), 2, f.padded_half_width()).unwrap();
    let g = Arc::new(largest_cluster(Arc::new(env)).unwrap());
    let op = Arc::new(build_scaled_operator(&g, f).unwrap());
    (solve_green(op.clone(), 1e-10).unwrap(), DgffSampler::new(op).unwrap())
}

#[test]
fn constant_functional_measures_cluster_cells() {
    let (green, sampler) = small_setup(8, 0.7);
    let field = sampler.sample_one(1, 0);
    let f = AnalyticFunction::polynomial(vec![2.5, 0.0]).unwrap();
    let w = WickFunctional::new(f, 1.0, vec![1.0; 64]);
    let val = tested_functional(&field, &green, &w).unwrap();
    let frame = *green.frame().unwrap();
    let cells = (0..64).filter(|c| green.operator().geom().contains(&frame.cell_site(&[c / 8, c % 8]))).count();
    assert!((val - 2.5 * cells as f64 / 64.0).abs() < 1e-12);
    let gm = gmc_integral(&field, &green, 0.0, &vec![true; 64]).unwrap();
    assert!((gm - cells as f64 / 64.0).abs() < 1e-12);
}

#[test]
fn provenance_mismatch_is_rejected() {
    let (green, _) = small_setup(8, 0.7);
    let (_, other) = small_setup(6, 0.7);
    let field = other.sample_one(1, 0);
    let w = WickFunctional::new(AnalyticFunction::monomial(1), 1.0, vec![1.0; 64]);
    assert!(matches!(tested_functional(&field, &green, &w), Err(crate::Error::ProvenanceMismatch(_))));
}

#[test]
fn gibbs_gamma_zero_is_plain_mean() {
    let (green, sampler) = small_setup(8, 0.8);
    let fields = sampler.sample(50, 3);
    let obs: Vec<f64> = fields.iter().map(|f| f.values[3] * 1.7 + 0.1).collect();
    let g = vec![1.0; 64];
    let est = gibbs_reweight(&fields, &green, &AnalyticFunction::exp(64), 0.0, &g, &obs).unwrap();
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    assert_eq!(est.estimate, mean);
    assert!((est.ess - 50.0).abs() < 1e-9);
    let hot = gibbs_reweight(&fields, &green, &AnalyticFunction::exp(64), 0.8, &g, &obs).unwrap();
    assert!(hot.weights.iter().all(|&w| w > 0.0 && w <= 1.0));
    assert!(gibbs_reweight(&fields[..1], &green, &AnalyticFunction::exp(64), 0.0, &g, &obs[..1]).is_err());
}

#[test]
fn fractional_kernel_routes() {
    let basis = ContinuumBasis::diagonal([2.0, 2.0], 4096).unwrap();
    let fk = FractionalKernel::new(0.5, basis).unwrap();
    let (x, y) = ([0.3, 0.4], [0.6, 0.7]);
    assert_eq!(fk.eigen_sum(&x, &y), fk.eigen_sum(&y, &x));
    assert_eq!(fk.gamma_integral(&x, &y), fk.gamma_integral(&y, &x));
    let (e, g) = (fk.eigen_sum(&x, &y), fk.gamma_integral(&x, &y));
    assert!(((e - g) / g).abs() < 1e-2, "{e} vs {g}");
    assert!(FractionalKernel::new(0.0, fk.basis.clone()).is_err());
}

#[test]
fn sobolev_norm_trivial_cases() {
    let basis = ContinuumBasis::diagonal([2.0, 2.0], 20).unwrap();
    let mut u = vec![0.0; basis.len()];
    u[0] = 1.0;
    let r = sobolev_minus_s_norm(&u, &basis, 0.7).unwrap();
    assert!((r.value - (1.0 + basis.modes[0].lambda).powf(-0.7)).abs() < 1e-15);
    let u: Vec<f64> = (0..basis.len()).map(|k| 1.0 / (k + 1) as f64).collect();
    let l2: f64 = u.iter().map(|v| v * v).sum();
    assert!((sobolev_minus_s_norm(&u, &basis, 0.0).unwrap().value - l2).abs() < 1e-14);
    assert!(sobolev_minus_s_norm(&[], &basis, 0.5).is_err());
}
