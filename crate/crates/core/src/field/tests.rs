use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::error::Error;
use crate::green::{build_killed_operator, build_scaled_operator, solve_green, Frame};
use crate::lattice::{largest_cluster, sample_environment, ClusterGeometry, EnvironmentLaw, Site};
use crate::numerics::{gauss_legendre, integrate, variance_stderr};

fn geom(p: f64, half: i32, seed: u64) -> Arc<ClusterGeometry> {
    let env = sample_environment(&EnvironmentLaw::bernoulli(p, 1.0, seed), 2, half).unwrap();
    Arc::new(largest_cluster(Arc::new(env)).unwrap())
}

#[test]
fn single_site_field_variance() {
    let g = geom(1.0, 2, 0);
    let op = Arc::new(build_killed_operator(&g, &[Site::new2(0, 0)]).unwrap());
    let fields = sample_dgff(op, 100_000, 3).unwrap();
    let v: Vec<f64> = fields.iter().map(|f| f.values[0]).collect();
    let (var, se) = variance_stderr(&v);
    assert!((var - 0.25).abs() < 3.0 * se, "{var} ± {se}");
    assert_eq!(fields[0].at(&Site::new2(1, 0)), 0.0);
}

#[test]
fn replicas_are_reproducible() {
    let g = geom(0.7, 5, 1);
    let op = Arc::new(build_scaled_operator(&g, Frame::centered(6, 2)).unwrap());
    let s = DgffSampler::new(op).unwrap();
    let a = s.sample(4, 10);
    let b = s.sample_one(10, 2);
    assert_eq!(a[2].values, b.values);
    assert_eq!(b.provenance.n, Some(6));
    let mut data = Vec::new();
    let mut side = Vec::new();
    b.write(&mut data, &mut side).unwrap();
    assert_eq!(data.len(), 8 * b.values.len());
    assert!(String::from_utf8(side).unwrap().contains("\"replica\": 2"));
}

#[test]
fn mollifier_mass_and_support() {
    let m = MollifierSpec::new(0.2).unwrap();
    let direct = 2.0 * PI * integrate(|r| r * (-1.0 / (1.0 - r * r)).exp(), 0.0, 1.0, 1e-15, 1e-14);
    assert!((m.mass - direct).abs() < 1e-12);
    assert!((m.mass - 0.466_512_7).abs() < 1e-6);
    assert!(MollifierSpec::new(1.0).is_err());
    assert!(matches!(m.check_support(&[0.1, 0.5]), Err(Error::SupportEscapes { .. })));
    let n = (64.0 / 0.2) as usize;
    let total: f64 = m.cell_weights(n, &[0.5, 0.5]).unwrap().iter().map(|c| c.1).sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn smearing_constant_and_zero_fields() {
    let f = Frame::centered(160, 2);
    let g = geom(1.0, f.padded_half_width(), 0);
    let op = Arc::new(build_scaled_operator(&g, f).unwrap());
    let sampler = DgffSampler::new(op.clone()).unwrap();
    let mut field = sampler.sample_one(1, 0);
    let m = MollifierSpec::new(0.4).unwrap();
    field.values.iter_mut().for_each(|v| *v = 0.0);
    assert_eq!(smear_field(&field, &m, &[0.5, 0.5]).unwrap(), 0.0);
    field.values.iter_mut().for_each(|v| *v = 1.0);
    assert!((smear_field(&field, &m, &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn smeared_kernel_symmetry_and_bounds() {
    let f = Frame::centered(24, 2);
    let g = geom(0.8, f.padded_half_width(), 4);
    let green = solve_green(Arc::new(build_scaled_operator(&g, f).unwrap()), 1e-10).unwrap();
    let m = MollifierSpec::new(0.1).unwrap();
    let (x, y) = ([0.3, 0.35], [0.62, 0.7]);
    let set = smeared_kernels(&green, &m, &[(x, y), (y, x)]).unwrap();
    assert_eq!(set.entries[0].gee, set.entries[1].gee);
    assert!(set.entries.iter().all(|e| e.g >= 0.0 && e.g0e >= 0.0 && e.gee >= 0.0));
    let mut csv = Vec::new();
    set.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("x1,x2,y1,y2,g,g0e,gee\n"));
    assert!(smeared_kernels(&green, &m, &[([0.05, 0.5], y)]).is_err());
}

#[test]
fn basis_at_2i_has_laplacian_spectrum() {
    let b = continuum_basis([[2.0, 0.0], [0.0, 2.0]], 9).unwrap();
    // |k|² = 2, 5, 5, 8, 10, 10, 13, 13, 17, 17: the ninth mode would split a pair.
    assert_eq!(b.len(), 8);
    for md in &b.modes {
        let k2 = f64::from(md.k[0] * md.k[0] + md.k[1] * md.k[1]);
        assert!((md.lambda - PI * PI * k2).abs() < 1e-12);
    }
    assert!(b.modes.windows(2).all(|w| w[0].lambda <= w[1].lambda));
    assert_eq!(b.modes[0].k, [1, 1]);
    assert!(matches!(continuum_basis([[2.0, 0.1], [0.1, 2.0]], 4), Err(Error::Unsupported(_))));
}

#[test]
fn eigenfunctions_orthonormal() {
    let b = ContinuumBasis::diagonal([2.0, 2.0], 12).unwrap();
    let (nodes, weights) = gauss_legendre(40);
    let pts: Vec<(f64, f64)> = nodes.iter().zip(&weights).map(|(u, w)| (0.5 + 0.5 * u, 0.5 * w)).collect();
    for i in 0..b.len() {
        for j in 0..b.len() {
            let mut s = 0.0;
            for &(x1, w1) in &pts {
                for &(x2, w2) in &pts {
                    let z = [x1, x2];
                    s += w1 * w2 * ContinuumBasis::eigenfunction(&b.modes[i], &z) * ContinuumBasis::eigenfunction(&b.modes[j], &z);
                }
            }
            assert!((s - f64::from(u8::from(i == j))).abs() < 1e-12);
        }
    }
}

#[test]
fn eigen_sum_converges_to_exact_series() {
    let (x, y) = ([0.3, 0.3], [0.7, 0.6]);
    let b = ContinuumBasis::diagonal([2.0, 2.0], 4096).unwrap();
    let b2 = ContinuumBasis::diagonal([2.0, 2.0], 8192).unwrap();
    let (g1, g2) = (b.green(&x, &y), b2.green(&x, &y));
    assert!(((g1 - g2) / g2).abs() < 5e-3);
    let exact = b.green_exact(&x, &y);
    assert!(((g2 - exact) / exact).abs() < 1e-2, "{g2} vs {exact}");
    assert!((b.green_exact(&y, &x) - exact).abs() < 1e-15);
}

#[test]
fn heat_kernel_integrates_to_green() {
    let b = ContinuumBasis::diagonal([1.4, 2.0], 16).unwrap();
    let (x, y) = ([0.3, 0.4], [0.6, 0.7]);
    let int = integrate(|u| u.exp() * b.heat_kernel(u.exp(), &x, &y), -30.0, 6.0, 1e-13, 1e-11);
    assert!((int - b.green_exact(&x, &y)).abs() < 1e-8);
    for t in [0.01, 0.049, 0.051, 0.3] {
        let images = ContinuumBasis::heat_kernel_1d(1.0, t, 0.3, 0.5);
        let mut series = 0.0;
        for k in 1..400 {
            let kf = f64::from(k);
            series += 2.0 * (PI * kf * 0.3).sin() * (PI * kf * 0.5).sin() * (-t * PI * PI * kf * kf).exp();
        }
        assert!((images - series).abs() < 1e-12);
    }
}

#[test]
fn continuum_field_variance_linearity_and_uv_growth() {
    let b = ContinuumBasis::diagonal([2.0, 2.0], 1024).unwrap();
    let m = MollifierSpec::new(0.2).unwrap();
    let x = [0.5, 0.5];
    let vals = sample_cgff(&b, &m, &[x], 10_000, 5).unwrap();
    let v: Vec<f64> = vals.iter().map(|r| r[0]).collect();
    let (var, se) = variance_stderr(&v);
    let target = b.smeared_variance(&m, &x).unwrap();
    assert!((var - target).abs() < 4.0 * se, "{var} ± {se} vs {target}");

    let c1 = b.mollifier_coefficients(&m, &[0.4, 0.4]).unwrap();
    let c2 = b.mollifier_coefficients(&m, &[0.6, 0.5]).unwrap();
    let mix: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let real = CgffRealization::draw(&b, 9, 0);
    let lhs = real.test(&b, &mix);
    let rhs = 2.0 * real.test(&b, &c1) - 0.5 * real.test(&b, &c2);
    assert!((lhs - rhs).abs() < 1e-12);

    let small = MollifierSpec::new(0.1).unwrap();
    assert!(b.smeared_variance(&small, &x).unwrap() > target);
}

#[test]
fn sigma_calibration_at_p_one() {
    let est = calibrate_sigma(&EnvironmentLaw::bernoulli(1.0, 1.0, 0), 8, 1, 4000, 2).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 2.0 } else { 0.0 };
            assert!((est.matrix[i][j] - target).abs() < 3.0 * est.stderr[i][j] + 1e-12, "{est:?}");
        }
    }
    assert!(calibrate_sigma(&EnvironmentLaw::bernoulli(1.0, 1.0, 0), 8, 0, 10, 2).is_err());
}

