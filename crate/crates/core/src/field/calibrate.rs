use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{largest_cluster, sample_environment, ClusterGeometry, EnvironmentLaw};
use crate::rng::{stream, Purpose};

/// Empirical `Σ̂²` with entrywise standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaEstimate {
    pub matrix: [[f64; 2]; 2],
    pub stderr: [[f64; 2]; 2],
    pub samples: usize,
}

/// Position `X_T − X_0` of a variable-speed walk run for time `T` on the cluster.
fn vsrw_displacement(geom: &ClusterGeometry, start: usize, horizon: f64, rng: &mut impl Rng) -> [f64; 2] {
    let mut u = start;
    let mut t = 0.0;
    let mu = geom.mu();
    loop {
        t += -(1.0 - rng.random::<f64>()).ln() / mu[u];
        if t > horizon {
            break;
        }
        let target = rng.random::<f64>() * mu[u];
        let mut acc = 0.0;
        let mut next = u;
        for (v, w) in geom.open_neighbors(u) {
            acc += w;
            next = v;
            if target < acc {
                break;
            }
        }
        u = next;
    }
    let (a, b) = (geom.vertices()[start], geom.vertices()[u]);
    [f64::from(b.0[0] - a.0[0]), f64::from(b.0[1] - a.0[1])]
}

/// `Σ̂²` from `n⁻¹ X_{n²}` over `walkers` walks in each of `envs` environments
/// (seeds `seed, seed+1, …`), started from `π_n` of the box centre. Boxes have
/// half-width `6n`.
pub fn calibrate_sigma(law: &EnvironmentLaw, n: usize, envs: usize, walkers: usize, seed: u64) -> Result<SigmaEstimate> {
    if envs == 0 || walkers == 0 {
        return Err(invalid("calibration ensemble is empty"));
    }
    let half = 6 * n as i32;
    let nf = n as f64;
    let mut prods: Vec<[f64; 3]> = Vec::with_capacity(envs * walkers);
    for e in 0..envs as u64 {
        let env = sample_environment(&law.with_seed(seed.wrapping_add(e)), 2, half)?;
        let geom = largest_cluster(Arc::new(env))?;
        let start = geom.index_of(&geom.project_point([0.0; 3])).expect("projection is on the cluster");
        let part: Vec<[f64; 3]> = (0..walkers as u64)
            .into_par_iter()
            .map(|w| {
                let mut rng = stream(seed, Purpose::Calibration, (e << 32) | w);
                let x = vsrw_displacement(&geom, start, nf * nf, &mut rng);
                let (a, b) = (x[0] / nf, x[1] / nf);
                [a * a, a * b, b * b]
            })
            .collect();
        prods.extend(part);
    }
    let m = prods.len() as f64;
    let mut matrix = [[0.0; 2]; 2];
    let mut stderr = [[0.0; 2]; 2];
    for (c, (i, j)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        let mean = prods.iter().map(|p| p[c]).sum::<f64>() / m;
        let var = prods.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        matrix[i][j] = mean;
        matrix[j][i] = mean;
        stderr[i][j] = (var / m).sqrt();
        stderr[j][i] = stderr[i][j];
    }
    Ok(SigmaEstimate { matrix, stderr, samples: prods.len() })
}
