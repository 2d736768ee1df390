use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::MollifierSpec;
use crate::error::{invalid, Error, Result};
use crate::numerics::gauss_legendre;
use crate::rng::{stream, Purpose};

/// Nodes per axis of the tensor Gauss–Legendre rule on a mollifier support box.
pub const MOLLIFIER_NODES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub k: [u32; 2],
    pub lambda: f64,
}

/// Dirichlet eigenpairs of `½∇·a∇` on the unit square for diagonal `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumBasis {
    /// Diagonal of the diffusivity `a = Σ²`.
    pub a: [f64; 2],
    pub modes: Vec<Mode>,
}

pub fn continuum_basis(a: [[f64; 2]; 2], k_modes: usize) -> Result<ContinuumBasis> {
    if a[0][1] != 0.0 || a[1][0] != 0.0 {
        return Err(Error::Unsupported("non-diagonal diffusivity".into()));
    }
    ContinuumBasis::diagonal([a[0][0], a[1][1]], k_modes)
}

impl ContinuumBasis {
    /// The lowest modes, at most `k_modes` of them and never splitting an
    /// eigenspace; ties ordered by `(k₁, k₂)`.
    pub fn diagonal(a: [f64; 2], k_modes: usize) -> Result<Self> {
        if !(a[0] > 0.0 && a[1] > 0.0) {
            return Err(invalid("diffusivity must be positive definite"));
        }
        if k_modes == 0 {
            return Err(invalid("need at least one mode"));
        }
        let lam = |k1: u32, k2: u32| 0.5 * PI * PI * (a[0] * f64::from(k1 * k1) + a[1] * f64::from(k2 * k2));
        let mut cut = lam(1, 1) * 4.0;
        loop {
            let mut modes = Vec::new();
            let k1max = (2.0 * cut / (PI * PI * a[0])).sqrt() as u32;
            for k1 in 1..=k1max {
                let rest = cut - 0.5 * PI * PI * a[0] * f64::from(k1 * k1);
                let k2max = (2.0 * rest / (PI * PI * a[1])).max(0.0).sqrt() as u32;
                for k2 in 1..=k2max {
                    modes.push(Mode { k: [k1, k2], lambda: lam(k1, k2) });
                }
            }
            if modes.len() >= k_modes {
                modes.sort_by(|x, y| x.lambda.total_cmp(&y.lambda).then(x.k.cmp(&y.k)));
                // Drop a partially included eigenspace at the cut.
                let mut keep = k_modes;
                if keep < modes.len() {
                    let edge = modes[keep].lambda;
                    while keep > 1 && modes[keep - 1].lambda >= edge * (1.0 - 1e-12) {
                        keep -= 1;
                    }
                }
                modes.truncate(keep);
                return Ok(ContinuumBasis { a, modes });
            }
            cut *= 2.0;
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `e_k(x) = 2 sin(πk₁x₁) sin(πk₂x₂)`.
    pub fn eigenfunction(mode: &Mode, x: &[f64; 2]) -> f64 {
        2.0 * (PI * f64::from(mode.k[0]) * x[0]).sin() * (PI * f64::from(mode.k[1]) * x[1]).sin()
    }

    /// Truncated eigen-sum `Σ_k λ_k^{-s} e_k(x) e_k(y)`.
    pub fn power_sum(&self, s: f64, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        self.modes
            .iter()
            .map(|m| Self::eigenfunction(m, x) * Self::eigenfunction(m, y) * m.lambda.powf(-s))
            .sum()
    }

    /// `g^Σ(x, y) ≈ Σ_k e_k(x) e_k(y)/λ_k`.
    pub fn green(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        self.power_sum(1.0, x, y)
    }

    /// `g^Σ` by a one-dimensional sine series along one axis with the
    /// transverse Green function of `−c∂² + m` in closed form. The series runs
    /// along the axis of smaller separation so its terms decay exponentially.
    pub fn green_exact(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        let (s, t) = if (x[1] - y[1]).abs() >= (x[0] - y[0]).abs() { (0, 1) } else { (1, 0) };
        let c = 0.5 * self.a[t];
        let (lo, hi) = if x[t] <= y[t] { (x[t], y[t]) } else { (y[t], x[t]) };
        let mut total = 0.0;
        for k in 1..=2_000_000u32 {
            let kf = f64::from(k);
            let m = 0.5 * self.a[s] * PI * PI * kf * kf;
            let kappa = (m / c).sqrt();
            // sinh(κ lo) sinh(κ (1 − hi)) / (c κ sinh κ), rewritten without overflow.
            let g1 = (kappa * (lo - hi)).exp() * -(-2.0 * kappa * lo).exp_m1() * -(-2.0 * kappa * (1.0 - hi)).exp_m1()
                / (-(-2.0 * kappa).exp_m1() * 2.0 * c * kappa);
            let term = 2.0 * (PI * kf * x[s]).sin() * (PI * kf * y[s]).sin() * g1;
            total += term;
            if g1 < 1e-17 * total.abs().max(1e-300) && k > 4 {
                break;
            }
        }
        total
    }

    /// One-dimensional Dirichlet heat kernel on `(0,1)` for `∂_t = D∂²`, by
    /// images at short times and by the sine series at long times.
    pub fn heat_kernel_1d(diff: f64, t: f64, x: f64, y: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let dt = diff * t;
        if dt < 0.05 {
            let phi = |z: f64| (-z * z / (4.0 * dt)).exp() / (4.0 * PI * dt).sqrt();
            (-3..=3).map(|m| phi(x - y + 2.0 * f64::from(m)) - phi(x + y + 2.0 * f64::from(m))).sum()
        } else {
            let mut s = 0.0;
            for k in 1..200 {
                let kf = f64::from(k);
                let decay = (-dt * PI * PI * kf * kf).exp();
                s += 2.0 * (PI * kf * x).sin() * (PI * kf * y).sin() * decay;
                if decay < 1e-18 {
                    break;
                }
            }
            s
        }
    }

    /// Transition density of the killed Brownian motion with covariance `a`.
    pub fn heat_kernel(&self, t: f64, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        (0..2).map(|i| Self::heat_kernel_1d(0.5 * self.a[i], t, x[i], y[i])).product()
    }

    /// `⟨e_k, ρ^ε_x⟩` for every mode by 32×32 tensor Gauss–Legendre on the
    /// support box.
    pub fn mollifier_coefficients(&self, m: &MollifierSpec, x: &[f64; 2]) -> Result<Vec<f64>> {
        m.check_support(x)?;
        let (nodes, weights) = gauss_legendre(MOLLIFIER_NODES);
        let q = nodes.len();
        let z = |c: f64| nodes.iter().map(|u| c + m.eps * u).collect::<Vec<_>>();
        let (z1, z2) = (z(x[0]), z(x[1]));
        let jac = m.eps * m.eps;
        let mut w = vec![0.0; q * q];
        for a in 0..q {
            for b in 0..q {
                w[a * q + b] = weights[a] * weights[b] * jac * m.eval(x, &[z1[a], z2[b]]);
            }
        }
        let kmax = |i: usize| self.modes.iter().map(|md| md.k[i]).max().unwrap_or(1) as usize;
        let s2: Vec<Vec<f64>> = (1..=kmax(1))
            .map(|k| z2.iter().map(|v| (PI * k as f64 * v).sin()).collect())
            .collect();
        // t[a][k2] = Σ_b w_ab sin(π k₂ z2_b)
        let t: Vec<Vec<f64>> = (0..q)
            .map(|a| s2.iter().map(|row| (0..q).map(|b| w[a * q + b] * row[b]).sum()).collect())
            .collect();
        Ok(self
            .modes
            .iter()
            .map(|md| {
                let k1 = f64::from(md.k[0]);
                let k2 = md.k[1] as usize - 1;
                2.0 * (0..q).map(|a| (PI * k1 * z1[a]).sin() * t[a][k2]).sum::<f64>()
            })
            .collect())
    }

    /// `⟨ρ^ε_x, G^Σ ρ^ε_x⟩` over the retained modes.
    pub fn smeared_variance(&self, m: &MollifierSpec, x: &[f64; 2]) -> Result<f64> {
        let c = self.mollifier_coefficients(m, x)?;
        Ok(c.iter().zip(&self.modes).map(|(c, md)| c * c / md.lambda).sum())
    }
}

/// Standard normal mode amplitudes `ξ_k` of one continuum field replica.
#[derive(Clone, Debug, PartialEq)]
pub struct CgffRealization {
    pub xi: Vec<f64>,
}

impl CgffRealization {
    pub fn draw(basis: &ContinuumBasis, seed: u64, replica: u64) -> Self {
        let mut rng = stream(seed, Purpose::ContinuumReplicas, replica);
        CgffRealization { xi: (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect() }
    }

    /// `Ψ(u) = Σ_k ξ_k λ_k^{-1/2} u(e_k)` for a test function given by its mode coefficients.
    pub fn test(&self, basis: &ContinuumBasis, coeffs: &[f64]) -> f64 {
        self.xi
            .iter()
            .zip(&basis.modes)
            .zip(coeffs)
            .map(|((xi, md), c)| xi * c / md.lambda.sqrt())
            .sum()
    }
}

/// `Ψ^ε(x)` at each point for `replicas` independent fields; result is
/// indexed `[replica][point]`.
pub fn sample_cgff(
    basis: &ContinuumBasis,
    m: &MollifierSpec,
    points: &[[f64; 2]],
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let coeffs: Vec<Vec<f64>> = points.iter().map(|x| basis.mollifier_coefficients(m, x)).collect::<Result<_>>()?;
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let real = CgffRealization::draw(basis, seed, r);
            coeffs.iter().map(|c| real.test(basis, c)).collect()
        })
        .collect())
}
