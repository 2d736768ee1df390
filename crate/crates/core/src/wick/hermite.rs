use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::{stream, Purpose};

fn check_variance(v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("variance {v} is negative")))
    }
}

/// `H_k(x, v)` by `H_{k+1} = x H_k − k v H_{k−1}`.
pub fn hermite(k: usize, x: f64, v: f64) -> Result<f64> {
    check_variance(v)?;
    let (mut h0, mut h1) = (1.0, x);
    if k == 0 {
        return Ok(h0);
    }
    for j in 1..k {
        let h2 = x * h1 - j as f64 * v * h0;
        h0 = h1;
        h1 = h2;
    }
    Ok(h1)
}

/// `H_k(x, v) = Σ_m k!/(m!(k−2m)!) (−v/2)^m x^{k−2m}`.
pub fn hermite_explicit(k: usize, x: f64, v: f64) -> Result<f64> {
    check_variance(v)?;
    let mut total = 0.0;
    let mut coef = 1.0;
    for m in 0..=k / 2 {
        if m > 0 {
            // k!/(m!(k−2m)!) from the previous m.
            let (kk, mm) = (k as f64, m as f64);
            coef *= (kk - 2.0 * mm + 2.0) * (kk - 2.0 * mm + 1.0) / mm;
        }
        total += coef * (-v / 2.0).powi(m as i32) * x.powi((k - 2 * m) as i32);
    }
    Ok(total)
}

/// `h_k = H_k(x, v)/k!` for `k = 0..=kmax`; stays finite where `H_k` would overflow.
pub fn hermite_scaled_all(kmax: usize, x: f64, v: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(kmax + 1);
    h.push(1.0);
    if kmax >= 1 {
        h.push(x);
    }
    for k in 1..kmax {
        let next = (x * h[k] - v * h[k - 1]) / (k + 1) as f64;
        h.push(next);
    }
    h
}

/// `∂ₓ H_k = k H_{k−1}`.
pub fn hermite_dx(k: usize, x: f64, v: f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    Ok(k as f64 * hermite(k - 1, x, v)?)
}

/// `∂_v H_k = −k(k−1)/2 · H_{k−2}`.
pub fn hermite_dv(k: usize, x: f64, v: f64) -> Result<f64> {
    if k < 2 {
        check_variance(v)?;
        return Ok(0.0);
    }
    Ok(-((k * (k - 1)) as f64) / 2.0 * hermite(k - 2, x, v)?)
}

/// Monte-Carlo `E[:X^k: :Y^l:]` for unit-variance Gaussians with correlation `ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WickCovarianceReport {
    pub k: usize,
    pub l: usize,
    pub rho: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `δ_{kl} k! ρ^k`.
    pub target: f64,
}

impl WickCovarianceReport {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.estimate - self.target).abs() <= sigmas * self.stderr
    }
}

pub fn wick_covariance_check(k: usize, l: usize, rho: f64, replicas: usize, seed: u64) -> Result<WickCovarianceReport> {
    if !(rho.abs() <= 1.0) {
        return Err(invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    if replicas < 2 {
        return Err(invalid("need at least two pairs"));
    }
    const CHUNK: usize = 1 << 14;
    let c = (1.0 - rho * rho).sqrt();
    let rho_code = ((rho + 1.0) * 1e4).round() as u64;
    let tag = (((k * 8 + l) as u64) << 48) | (rho_code << 32);
    let parts: Vec<(f64, f64)> = (0..replicas.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, Purpose::WickPairs, tag | chunk as u64);
            let mut s = 0.0;
            let mut q = 0.0;
            for _ in (chunk * CHUNK)..((chunk + 1) * CHUNK).min(replicas) {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let (x, y) = (z1, rho * z1 + c * z2);
                let p = hermite(k, x, 1.0).expect("v = 1") * hermite(l, y, 1.0).expect("v = 1");
                s += p;
                q += p * p;
            }
            (s, q)
        })
        .collect();
    let n = replicas as f64;
    let s: f64 = parts.iter().map(|p| p.0).sum();
    let q: f64 = parts.iter().map(|p| p.1).sum();
    let mean = s / n;
    let var = (q - n * mean * mean).max(0.0) / (n - 1.0);
    let target = if k == l { (1..=k).map(|j| j as f64).product::<f64>() * rho.powi(k as i32) } else { 0.0 };
    Ok(WickCovarianceReport { k, l, rho, estimate: mean, stderr: (var / n).sqrt(), target })
}
