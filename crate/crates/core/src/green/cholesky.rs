use super::KilledOperator;
use crate::error::{Error, Result};

/// Envelope (skyline) Cholesky factor `A = L Lᵀ`. Row `i` of `L` is stored
/// densely from its first nonzero column up to the diagonal.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(op: &KilledOperator) -> Result<Self> {
        op.check_exits()?;
        let m = op.len();
        let first: Vec<usize> = (0..m)
            .map(|i| op.neighbors(i).map(|(j, _)| j).filter(|&j| j < i).min().unwrap_or(i))
            .collect();
        let mut start = Vec::with_capacity(m + 1);
        let mut total = 0usize;
        for i in 0..m {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut vals = vec![0.0; total];
        for i in 0..m {
            vals[start[i] + i - first[i]] = op.diag()[i];
            for (j, w) in op.neighbors(i) {
                if j < i {
                    vals[start[i] + j - first[i]] = -w;
                }
            }
        }
        let scale = op.diag().iter().fold(0.0f64, |a, &b| a.max(b));
        for i in 0..m {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (ri, rj) = (start[i], start[j]);
                let dot: f64 = (k0..j).map(|k| vals[ri + k - fi] * vals[rj + k - fj]).sum();
                let ljj = vals[rj + j - fj];
                vals[ri + j - fi] = (vals[ri + j - fi] - dot) / ljj;
            }
            let ri = start[i];
            let sq: f64 = vals[ri..ri + i - fi].iter().map(|v| v * v).sum();
            let pivot = vals[ri + i - fi] - sq;
            if !(pivot > scale * 1e-14) {
                return Err(Error::SingularOperator(format!("nonpositive pivot {pivot:e} at row {i}")));
            }
            vals[ri + i - fi] = pivot.sqrt();
        }
        Ok(SkylineCholesky { first, start, vals })
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vals[self.start[i]..self.start[i + 1]]
    }

    /// In place `b ← L⁻¹ b`.
    pub fn solve_lower(&self, b: &mut [f64]) {
        for i in 0..self.len() {
            let fi = self.first[i];
            let row = self.row(i);
            let dot: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(l, x)| l * x).sum();
            b[i] = (b[i] - dot) / row[i - fi];
        }
    }

    /// In place `b ← L⁻ᵀ b`.
    pub fn solve_upper(&self, b: &mut [f64]) {
        for i in (0..self.len()).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            b[i] /= row[i - fi];
            let bi = b[i];
            for (l, x) in row[..i - fi].iter().zip(&mut b[fi..i]) {
                *x -= l * bi;
            }
        }
    }

    /// In place `b ← A⁻¹ b`.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        self.solve_upper(b);
    }
}
