use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::field::{ContinuumBasis, FieldSample};
use crate::numerics::integrate;

/// `G_s = Σ_k λ_k^{−s} e_k ⊗ e_k` on the unit square.
#[derive(Clone, Debug)]
pub struct FractionalKernel {
    pub s: f64,
    pub basis: ContinuumBasis,
}

impl FractionalKernel {
    pub fn new(s: f64, basis: ContinuumBasis) -> Result<Self> {
        if !(s > 0.0) {
            return Err(invalid(format!("order s = {s} must be positive")));
        }
        Ok(FractionalKernel { s, basis })
    }

    /// Sharply truncated eigen-sum over the retained modes.
    pub fn eigen_sum_sharp(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        self.basis.power_sum(self.s, x, y)
    }

    /// Eigen-sum with second-order Riesz weights `(1 − λ_k/Λ)²`, `Λ` the
    /// first eigenvalue beyond the retained modes. Off the diagonal the sharp
    /// sum oscillates for `s ≤ 1` while the Riesz mean converges.
    pub fn eigen_sum(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        let modes = &self.basis.modes;
        let last = modes.last().expect("nonempty basis").lambda;
        let cut = next_eigenvalue(&self.basis, last);
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        modes
            .iter()
            .map(|m| {
                let w = (1.0 - m.lambda / cut).powi(2);
                w * m.lambda.powf(-self.s) * ContinuumBasis::eigenfunction(m, a) * ContinuumBasis::eigenfunction(m, b)
            })
            .sum()
    }

    /// `Γ(s)⁻¹ ∫₀^∞ t^{s−1} k_t(x, y) dt`, integrated in `log t` with the
    /// image-series heat kernel.
    pub fn gamma_integral(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        let s = self.s;
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        let f = |u: f64| {
            let t = u.exp();
            (s * u).exp() * self.basis.heat_kernel(t, a, b)
        };
        integrate(f, -40.0, 8.0, 1e-14, 1e-10) / gamma(s)
    }
}

fn next_eigenvalue(basis: &ContinuumBasis, above: f64) -> f64 {
    let a = basis.a;
    let lam = |k1: u32, k2: u32| 0.5 * std::f64::consts::PI.powi(2) * (a[0] * f64::from(k1 * k1) + a[1] * f64::from(k2 * k2));
    let mut best = f64::INFINITY;
    let kmax = basis.modes.iter().map(|m| m.k[0].max(m.k[1])).max().unwrap_or(1) + 2;
    for k1 in 1..=kmax {
        for k2 in 1..=kmax {
            let l = lam(k1, k2);
            if l > above * (1.0 + 1e-12) && l < best {
                best = l;
            }
        }
    }
    best
}

pub fn fractional_kernel_eval(fk: &FractionalKernel, x: &[f64; 2], y: &[f64; 2]) -> f64 {
    fk.eigen_sum(x, y)
}

/// Truncated `Σ_k (1+λ_k)^{−s} u(e_k)²` with a tail indicator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevNorm {
    pub value: f64,
    /// Contribution of the upper half of the retained modes; bounds the
    /// truncation error when the terms decay at least geometrically per shell.
    pub tail: f64,
}

pub fn sobolev_minus_s_norm(coeffs: &[f64], basis: &ContinuumBasis, s: f64) -> Result<SobolevNorm> {
    if coeffs.is_empty() || coeffs.len() > basis.len() {
        return Err(invalid("need between 1 and K tested coefficients"));
    }
    let terms: Vec<f64> = coeffs
        .iter()
        .zip(&basis.modes)
        .map(|(u, m)| (1.0 + m.lambda).powf(-s) * u * u)
        .collect();
    let value = terms.iter().sum();
    let tail = terms[terms.len() / 2..].iter().sum();
    Ok(SobolevNorm { value, tail })
}

/// `⟨Φ_n, e_k⟩ = n⁻² Σ_cells φ e_k(midpoint)` for the retained modes.
pub fn field_mode_coefficients(field: &FieldSample, basis: &ContinuumBasis) -> Result<Vec<f64>> {
    let op = field.operator();
    let frame = *op.frame().ok_or_else(|| invalid("field has no scaled domain"))?;
    let n = frame.n;
    let nf = n as f64;
    let kmax = |i: usize| basis.modes.iter().map(|m| m.k[i]).max().unwrap_or(1) as usize;
    let table = |k: usize| -> Vec<Vec<f64>> {
        (1..=k)
            .map(|kk| (0..n).map(|i| (std::f64::consts::PI * kk as f64 * (i as f64 + 0.5) / nf).sin()).collect())
            .collect()
    };
    let (s1, s2) = (table(kmax(0)), table(kmax(1)));
    let mut phi = vec![0.0; n * n];
    for (row, site) in op.sites().iter().enumerate() {
        let i = (site.0[0] - frame.anchor.0[0]) as usize;
        let j = (site.0[1] - frame.anchor.0[1]) as usize;
        phi[i * n + j] = field.values[row];
    }
    // t[i][k2] = Σ_j φ(i, j) sin(π k₂ z_j)
    let t: Vec<Vec<f64>> = (0..n)
        .map(|i| s2.iter().map(|row| (0..n).map(|j| phi[i * n + j] * row[j]).sum()).collect())
        .collect();
    Ok(basis
        .modes
        .iter()
        .map(|m| {
            let (k1, k2) = (m.k[0] as usize - 1, m.k[1] as usize - 1);
            2.0 * (0..n).map(|i| s1[k1][i] * t[i][k2]).sum::<f64>() / (nf * nf)
        })
        .collect())
}
