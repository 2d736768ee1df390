use std::sync::Arc;

use super::*;
use crate::error::Error;
use crate::lattice::{largest_cluster, sample_environment, ClusterGeometry, EnvironmentLaw, Site};

fn geom(p: f64, half: i32, seed: u64) -> Arc<ClusterGeometry> {
    let env = sample_environment(&EnvironmentLaw::bernoulli(p, 1.0, seed), 2, half).unwrap();
    Arc::new(largest_cluster(Arc::new(env)).unwrap())
}

fn block(lo: i32, hi: i32) -> Vec<Site> {
    (lo..=hi).flat_map(|a| (lo..=hi).map(move |b| Site::new2(a, b))).collect()
}

#[test]
fn single_site_operator_and_green() {
    let g = geom(1.0, 3, 0);
    let op = Arc::new(build_killed_operator(&g, &[Site::new2(0, 0)]).unwrap());
    assert_eq!(op.to_dense()[(0, 0)], 4.0);
    let green = solve_green(op, 1e-10).unwrap();
    assert_eq!(green.entry(0, 0), 0.25);
}

#[test]
fn two_site_green_is_exact() {
    let g = geom(1.0, 3, 0);
    let op = Arc::new(build_killed_operator(&g, &[Site::new2(1, 0), Site::new2(0, 0)]).unwrap());
    let a = op.to_dense();
    assert_eq!((a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]), (4.0, -1.0, -1.0, 4.0));
    let green = solve_green(op, 1e-12).unwrap();
    assert!((green.entry(0, 0) - 4.0 / 15.0).abs() < 1e-15);
    assert!((green.entry(0, 1) - 1.0 / 15.0).abs() < 1e-15);
}

#[test]
fn empty_domain_and_singular_operator() {
    let g = geom(1.0, 2, 0);
    assert!(matches!(build_killed_operator(&g, &[Site::new2(9, 9)]), Err(Error::EmptyDomain)));
    let whole = build_killed_operator(&g, &block(-2, 2)).unwrap();
    assert!(matches!(SkylineCholesky::factor(&whole), Err(Error::SingularOperator(_))));
    assert!(matches!(solve_green(Arc::new(whole), 1e-10), Err(Error::SingularOperator(_))));
}

#[test]
fn cholesky_matches_dense_inverse_on_random_cluster() {
    let g = geom(0.7, 8, 11);
    let op = Arc::new(build_killed_operator(&g, &block(-5, 5)).unwrap());
    let green = solve_green(op.clone(), 1e-10).unwrap();
    let inv = op.to_dense().try_inverse().unwrap();
    for i in 0..op.len() {
        for j in 0..op.len() {
            assert!((green.entry(i, j) - inv[(i, j)]).abs() < 1e-10);
        }
    }
    for i in 0..op.len() {
        for j in 0..op.len() {
            let gij = green.entry(i, j);
            assert!(gij >= -1e-14 && gij <= green.entry(i, i).min(green.entry(j, j)) + 1e-12);
        }
    }
}

#[test]
fn cg_agrees_with_cholesky() {
    let g = geom(0.8, 10, 5);
    let op = Arc::new(build_killed_operator(&g, &block(-7, 7)).unwrap());
    let chol = solve_green(op.clone(), 1e-10).unwrap();
    let cg = solve_green_with(op, SolverOptions { tol: 1e-9, cg_threshold: 0 }).unwrap();
    let err = chol.as_slice().iter().zip(cg.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn domain_monotonicity() {
    let g = geom(0.75, 9, 2);
    let small = solve_green(Arc::new(build_killed_operator(&g, &block(-3, 3)).unwrap()), 1e-10).unwrap();
    let big = solve_green(Arc::new(build_killed_operator(&g, &block(-6, 6)).unwrap()), 1e-10).unwrap();
    for x in small.sites() {
        for y in small.sites() {
            assert!(small.get(x, y) <= big.get(x, y) + 1e-12);
        }
    }
}

#[test]
fn frame_places_unit_square() {
    let f = Frame::centered(8, 2);
    assert_eq!(f.anchor, Site::new2(-4, -4));
    assert_eq!(f.interior_sites().len(), 49);
    assert_eq!(f.site_of_point(&[0.5, 0.99]), Site::new2(0, 3));
    assert!(f.padded_half_width() >= 5);
    let g = geom(1.0, f.padded_half_width(), 0);
    let op = Arc::new(build_scaled_operator(&g, f).unwrap());
    let green = solve_green(op, 1e-10).unwrap();
    assert_eq!(green.scale(), Some(8));
    assert_eq!(green.scaled(&[0.01, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    assert!(green.scaled(&[0.5, 0.5], &[0.5, 0.5]).unwrap() > 0.0);
}

#[test]
fn mc_single_site_and_off_domain() {
    let g = geom(1.0, 3, 0);
    let o = Site::new2(0, 0);
    let op = build_killed_operator(&g, &[o]).unwrap();
    let est = mc_green_oracle(&op, &o, &o, 1000, 1000, 1).unwrap();
    assert!((est.estimate - 0.25).abs() < 1e-15);
    let off = mc_green_oracle(&op, &o, &Site::new2(1, 0), 10, 10, 1).unwrap();
    assert_eq!(off.estimate, 0.0);
    assert!(mc_green_oracle(&op, &o, &o, 0, 10, 1).is_err());
}

#[test]
fn mc_row_agrees_with_solver() {
    let g = geom(0.7, 6, 3);
    let op = Arc::new(build_killed_operator(&g, &block(-3, 3)).unwrap());
    let green = solve_green(op.clone(), 1e-10).unwrap();
    let x = op.sites()[op.len() / 2];
    let row = mc_green_row(&op, &x, 20_000, 100_000, 9).unwrap();
    assert!(!row.horizon_flag());
    let i = op.row_of(&x).unwrap();
    let bad = (0..op.len())
        .filter(|&j| (row.estimate[j] - green.entry(i, j)).abs() > 4.0 * row.stderr[j] + 1e-12)
        .count();
    assert!(bad <= 1, "{bad} entries outside 4 stderr");
}

#[test]
fn spectral_single_site_and_identities() {
    let g = geom(1.0, 4, 0);
    let one = build_killed_operator(&g, &[Site::new2(0, 0)]).unwrap();
    let s = spectral_decompose(&one, DEFAULT_EIGEN_CAP).unwrap();
    assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
    assert!((s.vectors[(0, 0)].abs() - 0.5).abs() < 1e-14);
    assert!((killed_heat_kernel(&s, 0.0, 0, 0).unwrap() - 0.25).abs() < 1e-14);

    let op = Arc::new(build_killed_operator(&g, &block(-1, 2)).unwrap());
    let spec = spectral_decompose(&op, DEFAULT_EIGEN_CAP).unwrap();
    assert!(spec.orthonormality_error() < 1e-8);
    let green = solve_green(op.clone(), 1e-12).unwrap();
    for i in 0..op.len() {
        for j in 0..op.len() {
            assert!((spec.green_entry(i, j) - green.entry(i, j)).abs() < 1e-10);
            assert!((spec.time_integral(i, j, f64::INFINITY) - green.entry(i, j)).abs() < 1e-10);
        }
    }
    assert!(matches!(spectral_decompose(&op, 3), Err(Error::EigenCapExceeded { .. })));
    assert!(killed_heat_kernel(&spec, -1.0, 0, 0).is_err());
}

#[test]
fn principal_check_needs_three_radii() {
    let g = geom(1.0, 4, 0);
    let op = build_killed_operator(&g, &block(-1, 1)).unwrap();
    let s = spectral_decompose(&op, 100).unwrap();
    assert!(principal_eigenvalue_check(&[(1.0, &s), (2.0, &s)]).is_err());
    let r = principal_eigenvalue_check(&[(1.0, &s), (2.0, &s), (3.0, &s)]).unwrap();
    assert!(r.c > 0.0);
}

#[test]
fn bound_regressor_clamps_diagonal() {
    assert_eq!(bound_regressor(2, 64.0, 0.0), 64f64.ln());
    assert_eq!(bound_regressor(2, 64.0, 1.0), 64f64.ln());
    assert_eq!(bound_regressor(3, 64.0, 4.0), 16.0);
}

#[test]
fn binary_and_csv_export() {
    let g = geom(1.0, 3, 0);
    let op = Arc::new(build_killed_operator(&g, &block(-1, 1)).unwrap());
    let green = solve_green(op, 1e-10).unwrap();
    let mut buf = Vec::new();
    write_green_binary(&green, &mut buf).unwrap();
    assert_eq!(buf.len(), 16 + 81 * 8);
    let (m, vals) = read_green_binary(buf.as_slice()).unwrap();
    assert_eq!(m, 9);
    assert_eq!(vals, green.as_slice());
    let mut csv = Vec::new();
    write_green_csv(&green, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("x1,x2,y1,y2,g\n"));
    assert_eq!(text.lines().count(), 82);
}
