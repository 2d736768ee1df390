use rayon::prelude::*;

use super::analytic::{wick_eval, AnalyticFunction};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSample, MollifierSpec};
use crate::green::{Frame, GreenOperator};

/// Thm-1.8-style admissibility window `|γ| < √((θ₀/β) min(1/C_Σ, θ₀/C_HK))`.
pub fn admissible(gamma: f64, beta: f64, theta0: f64, c_sigma: f64, c_hk: f64) -> bool {
    gamma.abs() < gamma_window(beta, theta0, c_sigma, c_hk)
}

pub fn gamma_window(beta: f64, theta0: f64, c_sigma: f64, c_hk: f64) -> f64 {
    ((theta0 / beta) * (1.0 / c_sigma).min(theta0 / c_hk)).sqrt()
}

/// Midpoints `((i+½)/r, (j+½)/r)` of the cells of the `r⁻¹`-grid; cell
/// `i·r + j` is the one with first coordinate index `i`.
pub fn cell_midpoints(r: usize) -> Vec<[f64; 2]> {
    let rf = r as f64;
    (0..r * r)
        .map(|c| [((c / r) as f64 + 0.5) / rf, ((c % r) as f64 + 0.5) / rf])
        .collect()
}

/// A test function sampled at cell midpoints.
pub fn sample_on_grid(r: usize, f: impl Fn(&[f64; 2]) -> f64) -> Vec<f64> {
    cell_midpoints(r).iter().map(f).collect()
}

/// `:F(γ·):` tested against `f` on the `n⁻¹`-grid.
#[derive(Clone, Debug)]
pub struct WickFunctional {
    pub f: AnalyticFunction,
    pub gamma: f64,
    /// Test function values per cell of the `n⁻¹`-grid.
    pub test: Vec<f64>,
    pub admissible: bool,
}

impl WickFunctional {
    pub fn new(f: AnalyticFunction, gamma: f64, test: Vec<f64>) -> Self {
        WickFunctional { f, gamma, test, admissible: true }
    }

    pub fn with_admissibility(mut self, flag: bool) -> Self {
        self.admissible = flag;
        self
    }
}

/// Precomputed evaluator of `⟨:F(γΦ_n):, f⟩ = n⁻² Σ_cells :F(γφ): 𝟙_cluster f`.
/// Cluster cells outside `Λ` carry `φ = 0` with variance 0, i.e. `a₀`.
#[derive(Clone, Debug)]
pub struct TestedFunctional {
    env_id: String,
    n: usize,
    weights: Vec<f64>,
    /// `(row in Λ or None, variance g(x,x), f·n⁻²)` for cluster cells with `f ≠ 0`.
    cells: Vec<(Option<usize>, f64, f64)>,
}

impl TestedFunctional {
    pub fn new(green: &GreenOperator, w: &WickFunctional) -> Result<Self> {
        let frame = *green.frame().ok_or_else(|| invalid("tested functionals need a scaled domain"))?;
        let n = frame.n;
        if w.test.len() != n * n {
            return Err(invalid(format!("test function has {} cells, expected {}", w.test.len(), n * n)));
        }
        let op = green.operator();
        let geom = op.geom();
        let nn = (n * n) as f64;
        let cells = w
            .test
            .iter()
            .enumerate()
            .filter(|(_, f)| **f != 0.0)
            .filter_map(|(c, f)| {
                let site = frame.cell_site(&[c / n, c % n]);
                geom.contains(&site).then(|| {
                    let row = op.row_of(&site);
                    (row, row.map_or(0.0, |i| green.entry(i, i)), f / nn)
                })
            })
            .collect();
        Ok(TestedFunctional { env_id: op.env_id(), n, weights: w.f.wick_weights(w.gamma), cells })
    }

    pub fn eval(&self, field: &FieldSample) -> Result<f64> {
        let p = &field.provenance;
        if p.env_id != self.env_id || p.n != Some(self.n) {
            return Err(Error::ProvenanceMismatch(format!(
                "field ({}, n={:?}) vs kernel ({}, n={})",
                p.env_id, p.n, self.env_id, self.n
            )));
        }
        Ok(self
            .cells
            .iter()
            .map(|&(row, v, f)| f * wick_eval(&self.weights, row.map_or(0.0, |i| field.values[i]), v))
            .sum())
    }
}

pub fn tested_functional(field: &FieldSample, green: &GreenOperator, w: &WickFunctional) -> Result<f64> {
    TestedFunctional::new(green, w)?.eval(field)
}

/// GMC mass `⟨:e^{γΦ_n}:, 𝟙_A⟩`; `set` flags cells of the `n⁻¹`-grid.
pub fn gmc_integral(field: &FieldSample, green: &GreenOperator, gamma: f64, set: &[bool]) -> Result<f64> {
    let test = set.iter().map(|&b| f64::from(u8::from(b))).collect();
    let w = WickFunctional::new(AnalyticFunction::exp(super::DEFAULT_TRUNCATION), gamma, test);
    tested_functional(field, green, &w)
}

/// A kernel sampled on the cells of an `r⁻¹`-grid of the unit square.
pub trait GridKernel: Sync {
    fn resolution(&self) -> usize;
    fn value(&self, i: usize, j: usize) -> f64;
    /// Cells outside the support contribute nothing.
    fn in_support(&self, _i: usize) -> bool {
        true
    }
    /// Support of the first argument, for kernels that restrict it further.
    fn row_support(&self, i: usize) -> bool {
        self.in_support(i)
    }
}

/// `∫∫ f(x) H(scale·K(x, y)) f(y)` by the double midpoint rule.
pub fn covariance_functional(kernel: &dyn GridKernel, h: &(dyn Fn(f64) -> f64 + Sync), scale: f64, f: &[f64]) -> Result<f64> {
    let r = kernel.resolution();
    if f.len() != r * r {
        return Err(invalid(format!("test function has {} cells, expected {}", f.len(), r * r)));
    }
    let live: Vec<usize> = (0..r * r).filter(|&i| f[i] != 0.0 && kernel.in_support(i)).collect();
    let rows: Vec<f64> = live
        .par_iter()
        .filter(|&&i| kernel.row_support(i))
        .map(|&i| f[i] * live.iter().map(|&j| f[j] * h(scale * kernel.value(i, j))).sum::<f64>())
        .collect();
    let area = 1.0 / (r * r) as f64;
    Ok(rows.iter().sum::<f64>() * area * area)
}

/// The discrete kernel `g_n` on its own `n⁻¹`-grid, supported on cluster cells.
/// Diagonal cells keep the exact value `g_n(x, x)`.
pub struct LatticeKernel<'a> {
    green: &'a GreenOperator,
    rows: Vec<Option<usize>>,
    support: Vec<bool>,
}

impl<'a> LatticeKernel<'a> {
    pub fn new(green: &'a GreenOperator) -> Result<Self> {
        let frame: Frame = *green.frame().ok_or_else(|| invalid("lattice kernels need a scaled domain"))?;
        let n = frame.n;
        let op = green.operator();
        let sites: Vec<_> = (0..n * n).map(|c| frame.cell_site(&[c / n, c % n])).collect();
        Ok(LatticeKernel {
            green,
            rows: sites.iter().map(|s| op.row_of(s)).collect(),
            support: sites.iter().map(|s| op.geom().contains(s)).collect(),
        })
    }
}

impl GridKernel for LatticeKernel<'_> {
    fn resolution(&self) -> usize {
        self.green.frame().map_or(0, |f| f.n)
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        match (self.rows[i], self.rows[j]) {
            (Some(a), Some(b)) => self.green.entry(a, b),
            _ => 0.0,
        }
    }

    fn in_support(&self, i: usize) -> bool {
        self.support[i]
    }
}

/// A kernel tabulated on the cells of an `r⁻¹`-grid, restricted to the cells
/// flagged live.
#[derive(Clone, Debug)]
pub struct SampledKernel {
    r: usize,
    live: Vec<usize>,
    slot: Vec<Option<usize>>,
    values: Vec<f64>,
    rows: Option<Vec<bool>>,
}

impl SampledKernel {
    fn from_fn(r: usize, live: Vec<usize>, k: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        Self::tabulate(r, live, true, k)
    }

    fn tabulate(r: usize, live: Vec<usize>, symmetric: bool, k: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let m = live.len();
        let mut slot = vec![None; r * r];
        for (s, &c) in live.iter().enumerate() {
            slot[c] = Some(s);
        }
        let values: Vec<f64> = (0..m * m)
            .into_par_iter()
            .map(|p| {
                let (a, b) = (p / m, p % m);
                let (i, j) = if a <= b || !symmetric { (live[a], live[b]) } else { (live[b], live[a]) };
                k(i, j)
            })
            .collect();
        SampledKernel { r, live, slot, values, rows: None }
    }

    /// A continuum kernel at cell midpoints. Diagonal cells use the value at
    /// distance one cell, since the kernel is singular there.
    pub fn continuum(r: usize, live: Vec<usize>, k: impl Fn(&[f64; 2], &[f64; 2]) -> f64 + Sync) -> Self {
        let mids = cell_midpoints(r);
        let step = 1.0 / r as f64;
        Self::from_fn(r, live, |i, j| {
            if i == j {
                let x = mids[i];
                let shifted = if x[0] + step < 1.0 { [x[0] + step, x[1]] } else { [x[0] - step, x[1]] };
                k(&x, &shifted)
            } else {
                k(&mids[i], &mids[j])
            }
        })
    }

    /// `g^{ε,ε}_n` between cell midpoints.
    pub fn smeared_both(green: &GreenOperator, m: &MollifierSpec, r: usize, live: Vec<usize>) -> Result<Self> {
        let op = green.operator();
        let mids = cell_midpoints(r);
        let stencils: Vec<Vec<(usize, f64)>> = live.iter().map(|&c| m.stencil(op, &mids[c])).collect::<Result<_>>()?;
        let pos: Vec<usize> = (0..r * r).map(|c| live.iter().position(|&l| l == c).unwrap_or(usize::MAX)).collect();
        let m_rows = green.len();
        // applied[b] = G w_b.
        let applied: Vec<Vec<f64>> = stencils
            .par_iter()
            .map(|b| (0..m_rows).map(|i| b.iter().map(|&(j, w)| w * green.entry(i, j)).sum()).collect())
            .collect();
        Ok(Self::from_fn(r, live.clone(), |i, j| {
            let v = &applied[pos[j]];
            stencils[pos[i]].iter().map(|&(row, w)| w * v[row]).sum()
        }))
    }

    /// `g^{0,ε}_n(x, y) = ∫ g_n(x, z) ρ^ε_y(z) dz`. The first argument is a
    /// lattice point, so cells whose point is off the cluster are excluded
    /// from the row support.
    pub fn smeared_one(green: &GreenOperator, m: &MollifierSpec, r: usize, live: Vec<usize>) -> Result<Self> {
        let op = green.operator();
        let frame = *green.frame().ok_or_else(|| invalid("smearing needs a scaled domain"))?;
        let mids = cell_midpoints(r);
        let mut stencils = vec![Vec::new(); r * r];
        for &c in &live {
            stencils[c] = m.stencil(op, &mids[c])?;
        }
        let sites: Vec<_> = mids.iter().map(|x| frame.site_of_point(x)).collect();
        let rows: Vec<Option<usize>> = sites.iter().map(|s| op.row_of(s)).collect();
        let on_cluster: Vec<bool> = sites.iter().map(|s| op.geom().contains(s)).collect();
        let mut kernel = Self::tabulate(r, live, false, |i, j| match rows[i] {
            Some(a) => stencils[j].iter().map(|&(b, w)| w * green.entry(a, b)).sum(),
            None => 0.0,
        });
        kernel.rows = Some(on_cluster);
        Ok(kernel)
    }
}

impl GridKernel for SampledKernel {
    fn resolution(&self) -> usize {
        self.r
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        match (self.slot[i], self.slot[j]) {
            (Some(a), Some(b)) => self.values[a * self.live.len() + b],
            _ => 0.0,
        }
    }

    fn in_support(&self, i: usize) -> bool {
        self.slot[i].is_some()
    }

    fn row_support(&self, i: usize) -> bool {
        self.slot[i].is_some() && self.rows.as_ref().is_none_or(|r| r[i])
    }
}
