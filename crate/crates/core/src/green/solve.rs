use std::sync::Arc;

use rayon::prelude::*;

use super::{Frame, KilledOperator, SkylineCholesky};
use crate::error::{invalid, Error, Result};
use crate::lattice::Site;

/// Above this many rows the solver switches from Cholesky to preconditioned CG.
pub const DEFAULT_CG_THRESHOLD: usize = 200_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub cg_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, cg_threshold: DEFAULT_CG_THRESHOLD }
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Cholesky(SkylineCholesky),
    Cg,
}

/// Column-wise access to `A⁻¹` without forming it.
#[derive(Clone, Debug)]
pub struct GreenSolver {
    op: Arc<KilledOperator>,
    backend: Backend,
    tol: f64,
}

impl GreenSolver {
    pub fn new(op: Arc<KilledOperator>, opts: SolverOptions) -> Result<Self> {
        if !(opts.tol > 0.0) {
            return Err(invalid("solver tolerance must be positive"));
        }
        let backend = if op.len() <= opts.cg_threshold {
            Backend::Cholesky(SkylineCholesky::factor(&op)?)
        } else {
            op.check_exits()?;
            Backend::Cg
        };
        Ok(GreenSolver { op, backend, tol: opts.tol })
    }

    pub fn operator(&self) -> &Arc<KilledOperator> {
        &self.op
    }

    /// The Cholesky factor, when that backend is in use.
    pub fn cholesky(&self) -> Option<&SkylineCholesky> {
        match &self.backend {
            Backend::Cholesky(c) => Some(c),
            Backend::Cg => None,
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.backend {
            Backend::Cholesky(c) => {
                let mut x = rhs.to_vec();
                c.solve(&mut x);
                Ok(x)
            }
            Backend::Cg => conjugate_gradient(&self.op, rhs, self.tol * 0.1),
        }
    }

    /// `g(·, y)` for the row `y`.
    pub fn column(&self, row: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.op.len()];
        e[row] = 1.0;
        self.solve(&e)
    }

    pub fn entry(&self, x: &Site, y: &Site) -> Result<f64> {
        match (self.op.row_of(x), self.op.row_of(y)) {
            (Some(i), Some(j)) => Ok(self.column(j)?[i]),
            _ => Ok(0.0),
        }
    }
}

/// Jacobi-preconditioned conjugate gradient to relative residual `rtol`.
pub fn conjugate_gradient(op: &KilledOperator, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
    let m = op.len();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; m];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let inv: Vec<f64> = op.diag().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rnorm = bnorm;
    for _ in 0..(10 * m).max(100) {
        let ap = op.apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= rtol * bnorm {
            return Ok(x);
        }
        for i in 0..m {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverTolerance { residual: rnorm / bnorm, tol: rtol })
}

/// Dense symmetric kernel `g = A⁻¹` on `Λ ∩ cluster`.
#[derive(Clone, Debug)]
pub struct GreenOperator {
    op: Arc<KilledOperator>,
    g: Vec<f64>,
    residual: f64,
    asymmetry: f64,
}

/// Solves every column, checks `‖A g − I‖_max ≤ tol`, and symmetrises after
/// checking the asymmetry is at most `10·tol`.
pub fn solve_green(op: Arc<KilledOperator>, tol: f64) -> Result<GreenOperator> {
    solve_green_with(op, SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_green_with(op: Arc<KilledOperator>, opts: SolverOptions) -> Result<GreenOperator> {
    let solver = GreenSolver::new(op.clone(), opts)?;
    let m = op.len();
    let cols: Vec<(Vec<f64>, f64)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let col = solver.column(j)?;
            let ag = op.apply(&col);
            let res = ag
                .iter()
                .enumerate()
                .map(|(i, v)| (v - f64::from(u8::from(i == j))).abs())
                .fold(0.0, f64::max);
            Ok((col, res))
        })
        .collect::<Result<_>>()?;
    let residual = cols.iter().map(|c| c.1).fold(0.0, f64::max);
    if residual > opts.tol {
        return Err(Error::SolverTolerance { residual, tol: opts.tol });
    }
    // Column j of g is stored as row j; g is symmetric up to round-off.
    let mut g = Vec::with_capacity(m * m);
    for (col, _) in &cols {
        g.extend_from_slice(col);
    }
    drop(cols);
    let scale = g.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let mut asymmetry = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            let (a, b) = (g[i * m + j], g[j * m + i]);
            asymmetry = asymmetry.max((a - b).abs() / scale);
            let avg = 0.5 * (a + b);
            g[i * m + j] = avg;
            g[j * m + i] = avg;
        }
    }
    if asymmetry > 10.0 * opts.tol {
        return Err(Error::SolverTolerance { residual: asymmetry, tol: 10.0 * opts.tol });
    }
    Ok(GreenOperator { op, g, residual, asymmetry })
}

impl GreenOperator {
    /// Wraps an existing kernel matrix (row-major, `m × m`).
    pub fn from_dense(op: Arc<KilledOperator>, g: Vec<f64>) -> Result<Self> {
        if g.len() != op.len() * op.len() {
            return Err(invalid("kernel size does not match the operator"));
        }
        Ok(GreenOperator { op, g, residual: f64::NAN, asymmetry: f64::NAN })
    }

    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        self.op.is_empty()
    }

    pub fn operator(&self) -> &Arc<KilledOperator> {
        &self.op
    }

    pub fn sites(&self) -> &[Site] {
        self.op.sites()
    }

    pub fn frame(&self) -> Option<&Frame> {
        self.op.frame()
    }

    /// The scale `n`, when the domain came from a frame.
    pub fn scale(&self) -> Option<usize> {
        self.op.frame().map(|f| f.n)
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.len();
        &self.g[i * m..(i + 1) * m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.g
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.entry(i, i)).collect()
    }

    /// `g(x, y)`, zero when either site is outside `Λ ∩ cluster`.
    pub fn get(&self, x: &Site, y: &Site) -> f64 {
        match (self.op.row_of(x), self.op.row_of(y)) {
            (Some(i), Some(j)) => self.entry(i, j),
            _ => 0.0,
        }
    }

    /// `g_n(x, y) = g(⌊nx⌋, ⌊ny⌋)` for points of the unit square.
    pub fn scaled(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let f = self.frame().ok_or_else(|| invalid("kernel has no scale frame"))?;
        Ok(self.get(&f.site_of_point(x), &f.site_of_point(y)))
    }
}
