use nalgebra::{DMatrix, SymmetricEigen};

use super::KilledOperator;
use crate::error::{invalid, Error, Result};
use crate::numerics::linear_fit;

pub const DEFAULT_EIGEN_CAP: usize = 4000;

/// Eigenpairs of `A ψ = λ Θ ψ`, ascending, with `ψ` orthonormal in `⟨·,·⟩_θ`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is `ψ_k`, rows follow the operator's site order.
    pub vectors: DMatrix<f64>,
    pub theta: Vec<f64>,
}

pub fn spectral_decompose(op: &KilledOperator, cap: usize) -> Result<SpectralData> {
    let m = op.len();
    if m > cap {
        return Err(Error::EigenCapExceeded { size: m, cap });
    }
    let theta = op.theta();
    let s: Vec<f64> = theta.iter().map(|t| 1.0 / t.sqrt()).collect();
    let mut b = op.to_dense();
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] *= s[i] * s[j];
        }
    }
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if !(eigenvalues[0] > 0.0) {
        return Err(Error::SingularOperator(format!("smallest eigenvalue {:e}", eigenvalues[0])));
    }
    let mut vectors = DMatrix::zeros(m, m);
    for (c, &k) in order.iter().enumerate() {
        for i in 0..m {
            vectors[(i, c)] = eig.eigenvectors[(i, k)] * s[i];
        }
    }
    Ok(SpectralData { eigenvalues, vectors, theta })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn principal(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Σ_k λ_k⁻¹ ψ_k(x) ψ_k(y)`, which equals `A⁻¹`.
    pub fn green_entry(&self, i: usize, j: usize) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, l)| self.vectors[(i, k)] * self.vectors[(j, k)] / l)
            .sum()
    }

    /// `∫₀^T q_t(x, y) dt` in closed form per eigenvalue.
    pub fn time_integral(&self, i: usize, j: usize, horizon: f64) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, l)| self.vectors[(i, k)] * self.vectors[(j, k)] * (-(-l * horizon).exp_m1()) / l)
            .sum()
    }

    /// Largest `|⟨ψ_i, ψ_j⟩_θ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.len();
        let mut w = self.vectors.clone();
        for i in 0..m {
            let t = self.theta[i];
            for k in 0..m {
                w[(i, k)] *= t;
            }
        }
        let gram = self.vectors.transpose() * w;
        let mut err = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((gram[(i, j)] - target).abs());
            }
        }
        err
    }
}

/// `q_t(x, y) = Σ_k e^{−λ_k t} ψ_k(x) ψ_k(y)` for rows `x`, `y`.
pub fn killed_heat_kernel(spec: &SpectralData, t: f64, x: usize, y: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("time must be nonnegative"));
    }
    Ok(spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, l)| (-l * t).exp() * spec.vectors[(x, k)] * spec.vectors[(y, k)])
        .sum())
}

/// Principal eigenvalues across radii, rescaled by `n²`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalReport {
    pub radii: Vec<f64>,
    pub lambda1: Vec<f64>,
    /// `λ₁·n²` per radius.
    pub scaled: Vec<f64>,
    /// `c = min λ₁ n²`, so `λ₁ ≥ c n⁻²` holds at every radius.
    pub c: f64,
    /// `max λ₁ n² / min λ₁ n²`.
    pub band: f64,
    /// Least-squares slope of `log λ₁` against `log n`.
    pub log_slope: f64,
}

pub fn principal_eigenvalue_check(samples: &[(f64, &SpectralData)]) -> Result<PrincipalReport> {
    if samples.len() < 3 {
        return Err(invalid("principal eigenvalue fit needs at least three radii"));
    }
    let radii: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let lambda1: Vec<f64> = samples.iter().map(|s| s.1.principal()).collect();
    let scaled: Vec<f64> = radii.iter().zip(&lambda1).map(|(n, l)| l * n * n).collect();
    let c = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    let fit = linear_fit(
        &radii.iter().map(|n| n.ln()).collect::<Vec<_>>(),
        &lambda1.iter().map(|l| l.ln()).collect::<Vec<_>>(),
    );
    Ok(PrincipalReport { radii, lambda1, scaled, c, band: hi / c, log_slope: fit.slope })
}
