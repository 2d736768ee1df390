use rand::Rng;
use rayon::prelude::*;

use super::KilledOperator;
use crate::error::{invalid, Result};
use crate::lattice::Site;
use crate::rng::{stream, Purpose};

const EXIT: u32 = u32::MAX;

/// Monte-Carlo occupation times `g(x, ·)` of the killed variable-speed walk.
#[derive(Clone, Debug)]
pub struct McRow {
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Walkers stopped by the horizon before leaving `Λ`.
    pub truncated: u64,
    /// Upper bound on the truncation bias per entry.
    pub bias_bound: f64,
}

impl McRow {
    /// True when the truncation bias could exceed a tenth of some stderr.
    pub fn horizon_flag(&self) -> bool {
        self.truncated > 0 && self.stderr.iter().any(|&s| self.bias_bound > 0.1 * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub horizon_flag: bool,
}

struct Walk {
    cum: Vec<(u32, f64)>,
    start: Vec<usize>,
    inv_mu: Vec<f64>,
    mu: Vec<f64>,
}

impl Walk {
    fn new(op: &KilledOperator) -> Self {
        let m = op.len();
        let mut cum = Vec::new();
        let mut start = Vec::with_capacity(m + 1);
        for i in 0..m {
            start.push(cum.len());
            let mut acc = 0.0;
            for (j, w) in op.neighbors(i) {
                acc += w;
                cum.push((j as u32, acc));
            }
            cum.push((EXIT, op.diag()[i]));
        }
        start.push(cum.len());
        let mu = op.diag().to_vec();
        Walk { cum, start, inv_mu: mu.iter().map(|m| 1.0 / m).collect(), mu }
    }

    fn step(&self, u: usize, r: f64) -> u32 {
        let target = r * self.mu[u];
        let opts = &self.cum[self.start[u]..self.start[u + 1]];
        opts.iter().find(|(_, c)| target < *c).unwrap_or(opts.last().expect("exit entry")).0
    }
}

/// Runs `walkers` walks from `x`, each holding `Exp(μ)` at a site and jumping
/// along an edge with probability `ω/μ`, until they leave `Λ` or make
/// `horizon` jumps. Each visit to `y` is credited its expected holding time
/// `1/μ(y)`, which has the same mean as the sampled holding time.
pub fn mc_green_row(op: &KilledOperator, x: &Site, walkers: u64, horizon: u64, seed: u64) -> Result<McRow> {
    if walkers == 0 {
        return Err(invalid("walkers must be positive"));
    }
    let start = op.row_of(x).ok_or_else(|| invalid(format!("start {x:?} is not in the domain")))?;
    let m = op.len();
    let walk = Walk::new(op);
    const CHUNK: u64 = 4096;
    let chunks = walkers.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; m];
            let mut sumsq = vec![0.0; m];
            let mut occ = vec![0.0; m];
            let mut touched = Vec::new();
            let mut truncated = 0;
            for w in (c * CHUNK)..((c + 1) * CHUNK).min(walkers) {
                let mut rng = stream(seed, Purpose::Walkers, ((start as u64) << 40) | w);
                let mut u = start;
                let mut jumps = 0;
                loop {
                    if occ[u] == 0.0 {
                        touched.push(u);
                    }
                    occ[u] += walk.inv_mu[u];
                    if jumps == horizon {
                        truncated += 1;
                        break;
                    }
                    jumps += 1;
                    let v = walk.step(u, rng.random::<f64>());
                    if v == EXIT {
                        break;
                    }
                    u = v as usize;
                }
                for &t in &touched {
                    sum[t] += occ[t];
                    sumsq[t] += occ[t] * occ[t];
                    occ[t] = 0.0;
                }
                touched.clear();
            }
            (sum, sumsq, truncated)
        })
        .collect();
    let mut sum = vec![0.0; m];
    let mut sumsq = vec![0.0; m];
    let mut truncated = 0;
    for (s, q, t) in &partial {
        for i in 0..m {
            sum[i] += s[i];
            sumsq[i] += q[i];
        }
        truncated += t;
    }
    let nw = walkers as f64;
    let estimate: Vec<f64> = sum.iter().map(|s| s / nw).collect();
    let stderr = (0..m)
        .map(|i| {
            if walkers < 2 {
                return f64::INFINITY;
            }
            let var = (sumsq[i] - nw * estimate[i] * estimate[i]).max(0.0) / (nw - 1.0);
            (var / nw).sqrt()
        })
        .collect();
    // A truncated walker still owes at most the occupation a fresh walk would
    // accumulate; the largest estimated entry stands in for that amount.
    let peak = estimate.iter().fold(0.0f64, |a, &b| a.max(b));
    let bias_bound = truncated as f64 / nw * peak;
    Ok(McRow { estimate, stderr, truncated, bias_bound })
}

/// Single-entry Monte-Carlo estimate of `g(x, y)`; exactly zero for `y ∉ Λ`.
pub fn mc_green_oracle(
    op: &KilledOperator,
    x: &Site,
    y: &Site,
    walkers: u64,
    horizon: u64,
    seed: u64,
) -> Result<McEstimate> {
    if walkers == 0 {
        return Err(invalid("walkers must be positive"));
    }
    let Some(j) = op.row_of(y) else {
        return Ok(McEstimate { estimate: 0.0, stderr: 0.0, horizon_flag: false });
    };
    let row = mc_green_row(op, x, walkers, horizon, seed)?;
    Ok(McEstimate { estimate: row.estimate[j], stderr: row.stderr[j], horizon_flag: row.horizon_flag() })
}
