use std::f64::consts::PI;
use std::io::Write;

use super::FieldSample;
use crate::error::{invalid, Error, Result};
use crate::green::{Frame, GreenOperator, KilledOperator};
use crate::numerics::integrate;

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// `ρ^ε_x(z) = ε⁻² ρ((z − x)/ε)` with `ρ` the standard bump of unit mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    pub eps: f64,
    /// `∫_{|u|<1} exp(−1/(1−|u|²)) du`.
    pub mass: f64,
}

impl MollifierSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("mollifier radius {eps} not in (0, 1)")));
        }
        let mass = 2.0 * PI * integrate(|r| r * bump(r * r), 0.0, 1.0, 1e-15, 1e-13);
        Ok(MollifierSpec { eps, mass })
    }

    pub fn eval(&self, center: &[f64; 2], z: &[f64; 2]) -> f64 {
        let (dx, dy) = ((z[0] - center[0]) / self.eps, (z[1] - center[1]) / self.eps);
        bump(dx * dx + dy * dy) / (self.mass * self.eps * self.eps)
    }

    /// Errors unless `B(x, ε) ⊂ (0,1)²`.
    pub fn check_support(&self, x: &[f64; 2]) -> Result<()> {
        let inside = x.iter().all(|&c| c - self.eps >= 0.0 && c + self.eps <= 1.0);
        if inside {
            Ok(())
        } else {
            Err(Error::SupportEscapes { center: *x, eps: self.eps })
        }
    }

    /// Midpoint-rule weights `n⁻² ρ^ε_x((i+½)/n)` over every grid cell meeting the
    /// support, as `(cell, weight)`.
    pub fn cell_weights(&self, n: usize, x: &[f64; 2]) -> Result<Vec<([usize; 2], f64)>> {
        self.check_support(x)?;
        let nf = n as f64;
        let range = |c: f64| {
            let lo = ((c - self.eps) * nf - 0.5).floor().max(0.0) as usize;
            let hi = (((c + self.eps) * nf - 0.5).ceil().max(0.0) as usize).min(n - 1);
            lo..=hi
        };
        let mut out = Vec::new();
        for i in range(x[0]) {
            for j in range(x[1]) {
                let z = [(i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf];
                let w = self.eval(x, &z) / (nf * nf);
                if w > 0.0 {
                    out.push(([i, j], w));
                }
            }
        }
        Ok(out)
    }

    /// Weights restricted to `Λ ∩ cluster`, keyed by operator row.
    pub fn stencil(&self, op: &KilledOperator, x: &[f64; 2]) -> Result<Vec<(usize, f64)>> {
        let frame = frame_of(op)?;
        Ok(self
            .cell_weights(frame.n, x)?
            .into_iter()
            .filter_map(|(c, w)| op.row_of(&frame.cell_site(&c)).map(|r| (r, w)))
            .collect())
    }
}

fn frame_of(op: &KilledOperator) -> Result<&Frame> {
    op.frame().ok_or_else(|| invalid("smearing needs a scaled domain"))
}

/// `φ^ε_n(x) = ⟨Φ_n, ρ^ε_x⟩` by the midpoint rule.
pub fn smear_field(field: &FieldSample, m: &MollifierSpec, x: &[f64; 2]) -> Result<f64> {
    let st = m.stencil(field.operator(), x)?;
    Ok(st.iter().map(|&(r, w)| w * field.values[r]).sum())
}

/// `⟨ρ^ε_x, G_n ρ^ε_x⟩`, the variance of the smeared field.
pub fn smeared_variance(green: &GreenOperator, m: &MollifierSpec, x: &[f64; 2]) -> Result<f64> {
    let st = m.stencil(green.operator(), x)?;
    Ok(st
        .iter()
        .map(|&(i, wi)| wi * st.iter().map(|&(j, wj)| wj * green.entry(i, j)).sum::<f64>())
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmearedEntry {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub g: f64,
    pub g0e: f64,
    pub gee: f64,
}

/// `g_n`, `g^{0,ε}_n` and `g^{ε,ε}_n` on a list of point pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SmearedKernelSet {
    pub eps: f64,
    pub n: usize,
    pub entries: Vec<SmearedEntry>,
}

impl SmearedKernelSet {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x1,x2,y1,y2,g,g0e,gee")?;
        for e in &self.entries {
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                e.x[0], e.x[1], e.y[0], e.y[1], e.g, e.g0e, e.gee
            )?;
        }
        Ok(())
    }
}

/// `g^{ε,ε}` evaluates `Σ ρ_a G ρ_b` with `(a, b)` in lexicographic order so
/// that swapping the arguments reproduces the same floating-point sum.
pub fn smeared_kernels(green: &GreenOperator, m: &MollifierSpec, grid: &[([f64; 2], [f64; 2])]) -> Result<SmearedKernelSet> {
    let op = green.operator();
    let frame = *frame_of(op)?;
    let mut entries = Vec::with_capacity(grid.len());
    for (x, y) in grid {
        let sx = m.stencil(op, x)?;
        let sy = m.stencil(op, y)?;
        let g = green.scaled(x, y)?;
        let g0e = match op.row_of(&frame.site_of_point(x)) {
            Some(i) => sy.iter().map(|&(j, w)| w * green.entry(i, j)).sum(),
            None => 0.0,
        };
        let (a, b) = if x.partial_cmp(y) == Some(std::cmp::Ordering::Greater) { (&sy, &sx) } else { (&sx, &sy) };
        let gee = a
            .iter()
            .map(|&(i, wi)| wi * b.iter().map(|&(j, wj)| wj * green.entry(i, j)).sum::<f64>())
            .sum();
        entries.push(SmearedEntry { x: *x, y: *y, g, g0e, gee });
    }
    Ok(SmearedKernelSet { eps: m.eps, n: frame.n, entries })
}
