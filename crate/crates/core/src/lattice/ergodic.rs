use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{sample_environment, ClusterGeometry, Environment, EnvironmentLaw, Site};
use crate::error::{invalid, Error, Result};

/// A site functional evaluated along the shifted environment.
#[derive(Clone)]
pub enum Observable {
    Constant(f64),
    /// Σ_k ω({x, x + e_k}) over the positive coordinate directions.
    EdgeWeight,
    /// 𝟙{x ∈ cluster}.
    ClusterIndicator(Arc<ClusterGeometry>),
    Custom(Arc<dyn Fn(&Environment, &Site) -> f64 + Send + Sync>),
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Constant(c) => write!(f, "Constant({c})"),
            Observable::EdgeWeight => write!(f, "EdgeWeight"),
            Observable::ClusterIndicator(_) => write!(f, "ClusterIndicator"),
            Observable::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Observable {
    fn eval(&self, env: &Environment, x: &Site) -> f64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::EdgeWeight => (0..env.dim()).map(|k| env.weight(x, &x.offset(k, 1))).sum(),
            Observable::ClusterIndicator(g) => f64::from(u8::from(g.contains(x))),
            Observable::Custom(f) => f(env, x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionShape {
    /// Open Euclidean ball.
    Ball,
    /// Open sup-norm box.
    Box,
}

/// The lattice points `x` with `|x − n·c| < n·h` in the region's norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub shape: RegionShape,
    pub center: [f64; 3],
    pub radius: f64,
    pub scale: f64,
}

impl Region {
    pub fn ball(center: [f64; 3], radius: f64, scale: f64) -> Self {
        Region { shape: RegionShape::Ball, center, radius, scale }
    }

    pub fn cube(center: [f64; 3], half_side: f64, scale: f64) -> Self {
        Region { shape: RegionShape::Box, center, radius: half_side, scale }
    }

    /// The whole box `[-L, L]ᵈ` as the unit-volume cube at scale `2L + 1`.
    pub fn full_box(env: &Environment) -> Self {
        Region::cube([0.0; 3], 0.5, f64::from(2 * env.half_width() + 1))
    }

    /// Lebesgue volume of the unscaled region.
    pub fn volume(&self, dim: usize) -> f64 {
        match (self.shape, dim) {
            (RegionShape::Box, _) => (2.0 * self.radius).powi(dim as i32),
            (RegionShape::Ball, 2) => PI * self.radius * self.radius,
            (RegionShape::Ball, _) => 4.0 / 3.0 * PI * self.radius.powi(3),
        }
    }

    fn contains(&self, dim: usize, x: &Site) -> bool {
        let n = self.scale;
        let r = n * self.radius;
        let diff = (0..dim).map(|i| f64::from(x.0[i]) - n * self.center[i]);
        match self.shape {
            RegionShape::Box => diff.map(f64::abs).fold(0.0, f64::max) < r,
            RegionShape::Ball => diff.map(|v| v * v).sum::<f64>() < r * r,
        }
    }

    /// Integer bounding range per axis of candidate sites.
    fn bounds(&self, dim: usize) -> Vec<(i64, i64)> {
        (0..dim)
            .map(|i| {
                let c = self.scale * self.center[i];
                let r = self.scale * self.radius;
                ((c - r).floor() as i64, (c + r).ceil() as i64)
            })
            .collect()
    }

    fn sites(&self, dim: usize) -> Vec<Site> {
        let b = self.bounds(dim);
        let mut out = Vec::new();
        let z = if dim == 3 { b[2] } else { (0, 0) };
        for a in b[0].0..=b[0].1 {
            for c in b[1].0..=b[1].1 {
                for e in z.0..=z.1 {
                    let x = Site([a as i32, c as i32, e as i32]);
                    if self.contains(dim, &x) {
                        out.push(x);
                    }
                }
            }
        }
        out
    }
}

/// `n⁻ᵈ Σ_{x ∈ region} F(τ_x ω)`.
pub fn ergodic_average(env: &Environment, observable: &Observable, region: &Region) -> Result<f64> {
    if !(region.scale > 0.0) || !(region.radius > 0.0) {
        return Err(invalid("region needs positive scale and radius"));
    }
    let d = env.dim();
    let sites = region.sites(d);
    if sites.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if let Some(x) = sites.iter().find(|x| !env.contains(x)) {
        return Err(invalid(format!("region leaves the box at {x:?}")));
    }
    let sum: f64 = sites.iter().map(|x| observable.eval(env, x)).sum();
    Ok(sum / region.scale.powi(d as i32))
}

/// Sup-drift of ergodic averages over a family of regions, per box size.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub half_widths: Vec<i32>,
    /// `sup_B |average_B − |B|·baseline|` at each half-width, with `|B|` the
    /// lattice volume `n⁻ᵈ #(B ∩ ℤᵈ)`.
    pub sup_drift: Vec<f64>,
}

impl SweepReport {
    /// True when the drift strictly decreases along the half-widths.
    pub fn is_monotone(&self) -> bool {
        self.sup_drift.windows(2).all(|w| w[1] < w[0])
    }
}

/// The standard family used by the sweep: balls of radii ¼ and ½ centred on
/// the grid `{−½, 0, ½}ᵈ`, in units where the box is `[-1, 1]ᵈ`.
pub fn ball_family(dim: usize) -> Vec<Region> {
    let offsets = [-0.5, 0.0, 0.5];
    let mut out = Vec::new();
    for &r in &[0.25, 0.5] {
        for &a in &offsets {
            for &b in &offsets {
                let zs: &[f64] = if dim == 3 { &offsets } else { &[0.0] };
                for &c in zs {
                    out.push(Region::ball([a, b, c], r, 1.0));
                }
            }
        }
    }
    out
}

/// For each half-width `L`, samples the environment and reports the supremum
/// over `family` (rescaled by `n = L`) of the drift from `baseline`, the
/// expected value of the observable per site.
pub fn ergodic_sweep(
    law: &EnvironmentLaw,
    dim: usize,
    half_widths: &[i32],
    family: &[Region],
    observable: &Observable,
    baseline: f64,
) -> Result<SweepReport> {
    let mut sup_drift = Vec::with_capacity(half_widths.len());
    for &l in half_widths {
        let env = sample_environment(law, dim, l)?;
        let drifts: Vec<f64> = family
            .par_iter()
            .map(|r| {
                let region = Region { scale: f64::from(l), ..*r };
                let avg = ergodic_average(&env, observable, &region)?;
                let volume = ergodic_average(&env, &Observable::Constant(1.0), &region)?;
                Ok((avg - volume * baseline).abs())
            })
            .collect::<Result<_>>()?;
        sup_drift.push(drifts.into_iter().fold(0.0, f64::max));
    }
    Ok(SweepReport { half_widths: half_widths.to_vec(), sup_drift })
}
