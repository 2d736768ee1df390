//! Independent oracles for the documented examples: closed forms, brute-force
//! scans and naive reassembly, compared against the library routines.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use percgff::experiments::{run_experiment, ExperimentConfig};
use percgff::field::{calibrate_sigma, smear_field, smeared_variance, ContinuumBasis, DgffSampler, MollifierSpec};
use percgff::green::{
    build_killed_operator, build_scaled_operator, killed_heat_kernel, principal_eigenvalue_check, solve_green,
    spectral_decompose, Frame, DEFAULT_EIGEN_CAP, DEFAULT_TOL,
};
use percgff::lattice::{largest_cluster, sample_environment, ClusterGeometry, Environment, EnvironmentLaw, Site};
use percgff::numerics::mean_stderr;
use percgff::wick::{
    field_mode_coefficients, hermite, sobolev_minus_s_norm, wick_analytic, AnalyticFunction,
};

fn cluster(law: &EnvironmentLaw, half: i32) -> Arc<ClusterGeometry> {
    let env = sample_environment(law, 2, half).unwrap();
    Arc::new(largest_cluster(Arc::new(env)).unwrap())
}

#[test]
fn pareto_first_moment_matches_closed_form() {
    let law = EnvironmentLaw::pareto(0.9, 2.5, 1.0, 21);
    let env = sample_environment(&law, 2, 64).unwrap();
    let w: Vec<f64> = env.edges().map(|(_, _, w)| w).collect();
    let (mean, se) = mean_stderr(&w);
    let exact = 0.9 * 2.5 / 1.5;
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} vs {exact} ± {se}");
}

/// Fraction of the sites within sup-radius `core` that belong to the largest
/// component, by union-find over open edges.
fn census_fraction(env: &Environment, core: i32) -> f64 {
    let n = env.num_sites();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b, _) in env.open_edges() {
        let (ra, rb) = (find(&mut parent, env.site_index(&a).unwrap()), find(&mut parent, env.site_index(&b).unwrap()));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for x in 0..n {
        *sizes.entry(find(&mut parent, x)).or_default() += 1;
    }
    let largest = *sizes.iter().max_by_key(|(root, size)| (**size, std::cmp::Reverse(**root))).unwrap().0;
    let inside: Vec<usize> = (0..n).filter(|&x| env.site_at(x).0[..2].iter().all(|c| c.abs() <= core)).collect();
    let hits = inside.iter().filter(|&&x| find(&mut parent, x) == largest).count();
    hits as f64 / inside.len() as f64
}

#[test]
fn theta0_estimate_agrees_with_large_box_census() {
    let law = EnvironmentLaw::bernoulli(0.7, 1.0, 0);
    let small: Vec<f64> = (1..=50u64)
        .into_par_iter()
        .map(|s| largest_cluster(Arc::new(sample_environment(&law.with_seed(s), 2, 64).unwrap())).unwrap().core_density())
        .collect();
    let (mean, se) = mean_stderr(&small);
    let big: Vec<f64> = (1000..1004u64)
        .into_par_iter()
        .map(|s| census_fraction(&sample_environment(&law.with_seed(s), 2, 256).unwrap(), 224))
        .collect();
    let (census, census_se) = mean_stderr(&big);
    let tol = 3.0 * se.hypot(census_se);
    assert!((mean - census).abs() <= tol, "{mean} vs census {census} (tol {tol})");
}

#[test]
fn projection_matches_full_scan() {
    let geom = cluster(&EnvironmentLaw::bernoulli(0.7, 1.0, 5), 20);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let p = [rng.random_range(-22.0..22.0), rng.random_range(-22.0..22.0), 0.0];
        let l1 = |x: &Site| (f64::from(x.0[0]) - p[0]).abs() + (f64::from(x.0[1]) - p[1]).abs();
        let best = geom
            .vertices()
            .iter()
            .min_by(|a, b| l1(a).total_cmp(&l1(b)).then(a.cmp(b)))
            .unwrap();
        assert_eq!(geom.project_point(p), *best, "{p:?}");
    }
}

#[test]
fn ergodic_edge_weight_drift_shrinks() {
    let cfg = ExperimentConfig::parse(
        "experiment = ergodic\np = 0.7\nhalf_widths = 64, 128, 256\nbaseline_L = 1024\nseeds = 1..20\n",
        Path::new("ergodic.cfg"),
    )
    .unwrap();
    let records = run_experiment(&cfg).unwrap();
    let baseline = records.iter().find(|r| r.metric == "baseline").unwrap().value;
    assert!((baseline - 0.7 * 2.0).abs() < 0.01, "baseline {baseline}");
    let flags: Vec<f64> = records.iter().filter(|r| r.metric == "monotone").map(|r| r.value).collect();
    assert_eq!(flags.len(), 20);
    assert!(flags.iter().sum::<f64>() >= 18.0, "{flags:?}");
}

#[test]
fn operator_matches_edge_by_edge_assembly() {
    let geom = cluster(&EnvironmentLaw::bernoulli(0.7, 1.0, 17), 6);
    let domain: Vec<Site> = (-3..3)
        .flat_map(|a| (-3..3).map(move |b| Site::new2(a, b)))
        .filter(|s| geom.contains(s))
        .collect();
    let op = build_killed_operator(&geom, &domain).unwrap();
    let env = geom.env();
    let dense = op.to_dense();
    let m = op.len();
    let mut naive = vec![0.0; m * m];
    for (i, x) in op.sites().iter().enumerate() {
        for (y, w) in env.neighbors(x) {
            naive[i * m + i] += w;
            if let Some(j) = op.row_of(&y) {
                naive[i * m + j] -= w;
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            assert_eq!(dense[(i, j)], naive[i * m + j], "({i}, {j})");
        }
    }
}

#[test]
fn heat_kernel_matches_uniformization_series() {
    let geom = cluster(&EnvironmentLaw::pareto(0.8, 3.0, 0.5, 3), 5);
    let domain: Vec<Site> =
        (-2..2).flat_map(|a| (-2..2).map(move |b| Site::new2(a, b))).filter(|s| geom.contains(s)).collect();
    let op = build_killed_operator(&geom, &domain).unwrap();
    let spec = spectral_decompose(&op, DEFAULT_EIGEN_CAP).unwrap();
    let a = op.to_dense();
    let theta = op.theta();
    let m = op.len();
    let rate = (0..m).map(|i| a[(i, i)] / theta[i]).fold(0.0, f64::max);
    let t = 1.0;
    for x in 0..m {
        // Row x of Σ_k Poisson(rate·t)(k) M^k with M = I − Θ⁻¹A/rate.
        let mut row = vec![0.0; m];
        row[x] = 1.0;
        let mut acc = vec![0.0; m];
        let mut weight = (-rate * t).exp();
        for k in 0..400 {
            for j in 0..m {
                acc[j] += weight * row[j];
            }
            let next: Vec<f64> = (0..m)
                .map(|j| (0..m).map(|i| row[i] * ((i == j) as u8 as f64 - a[(i, j)] / (theta[i] * rate))).sum())
                .collect();
            row = next;
            weight *= rate * t / f64::from(k + 1);
        }
        for y in 0..m {
            let series = acc[y] / theta[y];
            let q = killed_heat_kernel(&spec, t, x, y).unwrap();
            assert!((q - series).abs() <= 1e-6, "({x}, {y}): {q} vs {series}");
        }
    }
    let single = build_killed_operator(&cluster(&EnvironmentLaw::bernoulli(1.0, 1.0, 0), 2), &[Site::new2(0, 0)]).unwrap();
    let q0 = killed_heat_kernel(&spectral_decompose(&single, 4).unwrap(), 0.0, 0, 0).unwrap();
    assert!((q0 - 0.25).abs() < 1e-15);
}

#[test]
fn principal_eigenvalue_scales_like_inverse_square_radius() {
    let run = |p: f64, seed: u64| {
        let geom = cluster(&EnvironmentLaw::bernoulli(p, 1.0, seed), 34);
        let origin = geom.project_point([0.0; 3]);
        let spectra: Vec<_> = [8u32, 16, 32]
            .iter()
            .map(|&r| {
                let op = build_killed_operator(&geom, &geom.chemical_ball(&origin, r)).unwrap();
                (f64::from(r), spectral_decompose(&op, DEFAULT_EIGEN_CAP).unwrap())
            })
            .collect();
        let refs: Vec<(f64, &_)> = spectra.iter().map(|(r, s)| (*r, s)).collect();
        principal_eigenvalue_check(&refs).unwrap()
    };
    let full = run(1.0, 1);
    assert!(full.band <= 4.0, "band {}", full.band);
    let perc = run(0.7, 2);
    assert!(perc.c > 0.0);
}

#[test]
fn smeared_field_variance_matches_kernel() {
    let geom = cluster(&EnvironmentLaw::bernoulli(1.0, 1.0, 0), Frame::centered(64, 2).padded_half_width());
    let op = Arc::new(build_scaled_operator(&geom, Frame::centered(64, 2)).unwrap());
    let green = solve_green(op.clone(), DEFAULT_TOL).unwrap();
    let m = MollifierSpec::new(0.2).unwrap();
    let x = [0.5, 0.5];
    let sampler = DgffSampler::new(op).unwrap();
    let values: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|r| smear_field(&sampler.sample_one(31, r), &m, &x).unwrap().powi(2))
        .collect();
    let (mc, se) = mean_stderr(&values);
    let exact = smeared_variance(&green, &m, &x).unwrap();
    assert!((mc - exact).abs() <= 4.0 * se, "{mc} vs {exact} ± {se}");
}

#[test]
fn continuum_green_is_stable_under_mode_doubling() {
    let (x, y) = ([0.3, 0.3], [0.7, 0.6]);
    let a = ContinuumBasis::diagonal([2.0, 2.0], 4096).unwrap().green(&x, &y);
    let b = ContinuumBasis::diagonal([2.0, 2.0], 8192).unwrap().green(&x, &y);
    assert!(((a - b) / b).abs() < 0.005, "{a} vs {b}");
}

#[test]
fn sigma_calibration_is_consistent_across_scales() {
    let law = EnvironmentLaw::bernoulli(0.7, 1.0, 0);
    let a = calibrate_sigma(&law, 32, 4, 2000, 100).unwrap();
    let b = calibrate_sigma(&law, 64, 4, 2000, 200).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let tol = 4.0 * a.stderr[i][j].hypot(b.stderr[i][j]);
            assert!((a.matrix[i][j] - b.matrix[i][j]).abs() <= tol, "({i}, {j}): {:?} vs {:?}", a, b);
        }
    }
}

#[test]
fn hermite_seven_matches_exact_integer_sum() {
    // With x = 13/10 and v = 7/10, 10⁷·2³·H₇ is an integer:
    // Σ_m 7!/(m!(7−2m)!) (−7)^m 13^{7−2m} 10^m 2^{3−m}.
    let fact = |n: i128| (1..=n).product::<i128>();
    let exact: i128 = (0..=3)
        .map(|m: i128| {
            let c = fact(7) / (fact(m) * fact(7 - 2 * m));
            c * (-7i128).pow(m as u32) * 13i128.pow((7 - 2 * m) as u32) * 10i128.pow(m as u32) * 2i128.pow((3 - m) as u32)
        })
        .sum();
    let want = exact as f64 / 8e7;
    let got = hermite(7, 1.3, 0.7).unwrap();
    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
    assert_eq!(hermite(2, 3.0, 4.0).unwrap(), 5.0);
}

#[test]
fn wick_sine_matches_closed_form() {
    // :sin(γX): = e^{γ²v/2} sin(γx).
    let (gamma, x, v) = (0.5f64, 0.9f64, 1.1f64);
    let got = wick_analytic(&AnalyticFunction::sin(64), gamma, x, v).unwrap();
    let want = (0.5 * gamma * gamma * v).exp() * (gamma * x).sin();
    assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
}

#[test]
fn sobolev_norm_tail_decays_under_mode_doubling() {
    let frame = Frame::centered(64, 2);
    let geom = cluster(&EnvironmentLaw::bernoulli(1.0, 1.0, 0), frame.padded_half_width());
    let op = Arc::new(build_scaled_operator(&geom, frame).unwrap());
    let field = DgffSampler::new(op).unwrap().sample_one(8, 0);
    let norm = |k: usize| {
        let basis = ContinuumBasis::diagonal([2.0, 2.0], k).unwrap();
        let coeffs = field_mode_coefficients(&field, &basis).unwrap();
        sobolev_minus_s_norm(&coeffs, &basis, 0.5).unwrap().value
    };
    // The s = 1/2 tail beyond the cutoff Λ scales like Λ^{-1/2} in d = 2, so
    // successive increments shrink by about 1/√2.
    let norms: Vec<f64> = [256, 512, 1024, 2048].iter().map(|&k| norm(k)).collect();
    let inc: Vec<f64> = norms.windows(2).map(|w| w[1] - w[0]).collect();
    for w in inc.windows(2) {
        let r = w[1] / w[0];
        assert!((0.5..0.9).contains(&r), "increments {inc:?}");
    }
    assert!(inc[2] / norms[3] < 0.05, "norms {norms:?}");
}
