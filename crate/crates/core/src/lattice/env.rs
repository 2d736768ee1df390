use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use super::Site;
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Purpose};

/// Marginal law of a single conductance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LawKind {
    /// Open with probability `p`, then weight `w0`.
    Bernoulli { p: f64, w0: f64 },
    /// Open with probability `p`, then Pareto on `[w0, ∞)` with tail index `alpha`.
    BernoulliPareto { p: f64, alpha: f64, w0: f64 },
    Constant { w0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvironmentLaw {
    pub kind: LawKind,
    /// Moment exponents of the (p, q) integrability condition, recorded only.
    pub p_mom: f64,
    pub q_mom: f64,
    pub seed: u64,
}

impl EnvironmentLaw {
    pub fn bernoulli(p: f64, w0: f64, seed: u64) -> Self {
        Self::new(LawKind::Bernoulli { p, w0 }, seed)
    }

    pub fn pareto(p: f64, alpha: f64, w0: f64, seed: u64) -> Self {
        Self::new(LawKind::BernoulliPareto { p, alpha, w0 }, seed)
    }

    pub fn constant(w0: f64, seed: u64) -> Self {
        Self::new(LawKind::Constant { w0 }, seed)
    }

    fn new(kind: LawKind, seed: u64) -> Self {
        let p_mom = match kind {
            LawKind::BernoulliPareto { alpha, .. } => alpha,
            _ => f64::INFINITY,
        };
        EnvironmentLaw { kind, p_mom, q_mom: f64::INFINITY, seed }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn open_probability(&self) -> f64 {
        match self.kind {
            LawKind::Bernoulli { p, .. } | LawKind::BernoulliPareto { p, .. } => p,
            LawKind::Constant { .. } => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (p, w0) = match self.kind {
            LawKind::Bernoulli { p, w0 } => (p, w0),
            LawKind::BernoulliPareto { p, alpha, w0 } => {
                if !(alpha > 0.0) {
                    return Err(invalid(format!("Pareto tail index must be positive, got {alpha}")));
                }
                (p, w0)
            }
            LawKind::Constant { w0 } => (1.0, w0),
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("open probability {p} not in [0, 1]")));
        }
        if !(w0 > 0.0) || !w0.is_finite() {
            return Err(invalid(format!("base weight must be positive, got {w0}")));
        }
        Ok(())
    }

    /// `E[ω^r]` for the marginal law (infinite when the moment diverges).
    pub fn moment(&self, r: f64) -> f64 {
        match self.kind {
            LawKind::Bernoulli { p, w0 } => p * w0.powf(r),
            LawKind::Constant { w0 } => w0.powf(r),
            LawKind::BernoulliPareto { p, alpha, w0 } => {
                if r >= alpha {
                    f64::INFINITY
                } else {
                    p * alpha * w0.powf(r) / (alpha - r)
                }
            }
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self.kind {
            LawKind::Constant { w0 } => w0,
            LawKind::Bernoulli { p, w0 } => {
                if rng.random::<f64>() < p {
                    w0
                } else {
                    0.0
                }
            }
            LawKind::BernoulliPareto { p, alpha, w0 } => {
                if rng.random::<f64>() < p {
                    let u: f64 = rng.random();
                    w0 * (1.0 - u).powf(-1.0 / alpha)
                } else {
                    0.0
                }
            }
        }
    }
}

fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for EnvironmentLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let moments = format!("pmom={},qmom={}", fmt_real(self.p_mom), fmt_real(self.q_mom));
        match self.kind {
            LawKind::Bernoulli { p, w0 } => write!(f, "bernoulli(p={p},w0={w0},{moments})"),
            LawKind::BernoulliPareto { p, alpha, w0 } => {
                write!(f, "pareto(p={p},alpha={alpha},w0={w0},{moments})")
            }
            LawKind::Constant { w0 } => write!(f, "constant(w0={w0},{moments})"),
        }
    }
}

impl FromStr for EnvironmentLaw {
    type Err = Error;

    /// Parses the descriptor written by `Display`; the seed is not part of it.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed law descriptor `{s}`"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        let mut get = std::collections::HashMap::new();
        for kv in body.split(',').filter(|t| !t.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: f64 = if v == "inf" { f64::INFINITY } else { v.parse().map_err(|_| bad())? };
            get.insert(k.trim().to_string(), v);
        }
        let field = |k: &str| get.get(k).copied().ok_or_else(bad);
        let kind = match name.trim() {
            "bernoulli" => LawKind::Bernoulli { p: field("p")?, w0: field("w0").unwrap_or(1.0) },
            "pareto" => LawKind::BernoulliPareto {
                p: field("p")?,
                alpha: field("alpha")?,
                w0: field("w0").unwrap_or(1.0),
            },
            "constant" => LawKind::Constant { w0: field("w0").unwrap_or(1.0) },
            _ => return Err(bad()),
        };
        let mut law = EnvironmentLaw::new(kind, 0);
        if let Ok(v) = field("pmom") {
            law.p_mom = v;
        }
        if let Ok(v) = field("qmom") {
            law.q_mom = v;
        }
        law.validate()?;
        Ok(law)
    }
}

/// Conductances on the nearest-neighbour edges of the box `[-L, L]ᵈ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    dim: usize,
    half_width: i32,
    law: EnvironmentLaw,
    /// `weights[s * dim + k]` is the weight of the edge from site `s` in the
    /// positive `k` direction; zero when that neighbour leaves the box.
    weights: Vec<f64>,
}

const COORD_BITS: u32 = 20;
const COORD_OFFSET: i64 = 1 << (COORD_BITS - 1);

/// Absolute edge label; independent of the box the edge is sampled in.
fn edge_label(x: &Site, axis: usize) -> u64 {
    let c = |i: usize| (i64::from(x.0[i]) + COORD_OFFSET) as u64;
    (c(0) << (2 * COORD_BITS + 2)) | (c(1) << (COORD_BITS + 2)) | (c(2) << 2) | axis as u64
}

/// Draws every edge of the box i.i.d. from `law`, one counter-based stream per edge.
pub fn sample_environment(law: &EnvironmentLaw, dim: usize, half_width: i32) -> Result<Environment> {
    law.validate()?;
    if !(2..=3).contains(&dim) {
        return Err(invalid(format!("dimension {dim} not in {{2, 3}}")));
    }
    if half_width < 1 || i64::from(half_width) >= COORD_OFFSET {
        return Err(invalid(format!("half-width {half_width} out of range")));
    }
    if dim == 2 && law.open_probability() <= 0.5 {
        log::warn!(
            "open probability {} is not supercritical for d = 2 bond percolation",
            law.open_probability()
        );
    }
    let mut env = Environment {
        dim,
        half_width,
        law: *law,
        weights: Vec::new(),
    };
    let sites = env.num_sites();
    let weights: Vec<f64> = (0..sites * dim)
        .into_par_iter()
        .map(|slot| {
            let (s, axis) = (slot / dim, slot % dim);
            let x = env.site_at(s);
            if x.0[axis] >= half_width {
                return 0.0;
            }
            let mut rng = stream(law.seed, Purpose::EdgeWeights, edge_label(&x, axis));
            law.draw(&mut rng)
        })
        .collect();
    env.weights = weights;
    Ok(env)
}

impl Environment {
    /// Builds an environment from an explicit list of open edges.
    pub fn from_edges(
        dim: usize,
        half_width: i32,
        law: EnvironmentLaw,
        edges: impl IntoIterator<Item = (Site, Site, f64)>,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) || half_width < 1 {
            return Err(invalid("bad box for explicit environment"));
        }
        let mut env = Environment { dim, half_width, law, weights: Vec::new() };
        env.weights = vec![0.0; env.num_sites() * dim];
        for (x, y, w) in edges {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(invalid(format!("edge weight {w} must be a nonnegative real")));
            }
            let slot = env
                .edge_slot(&x, &y)
                .ok_or_else(|| invalid(format!("{x:?}-{y:?} is not an edge of the box")))?;
            env.weights[slot] = w;
        }
        Ok(env)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    pub fn law(&self) -> &EnvironmentLaw {
        &self.law
    }

    pub fn side(&self) -> usize {
        (2 * self.half_width + 1) as usize
    }

    pub fn num_sites(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn contains(&self, x: &Site) -> bool {
        (0..3).all(|i| {
            if i < self.dim {
                x.0[i].abs() <= self.half_width
            } else {
                x.0[i] == 0
            }
        })
    }

    pub fn site_index(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        Some(
            (0..self.dim)
                .fold(0usize, |acc, i| acc * side + (x.0[i] + self.half_width) as usize),
        )
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let side = self.side();
        let mut c = [0i32; 3];
        for i in (0..self.dim).rev() {
            c[i] = (index % side) as i32 - self.half_width;
            index /= side;
        }
        Site(c)
    }

    fn edge_slot(&self, x: &Site, y: &Site) -> Option<usize> {
        if x.l1(y) != 1 {
            return None;
        }
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let axis = (0..self.dim).find(|&i| lo.0[i] != hi.0[i])?;
        self.site_index(hi)?;
        Some(self.site_index(lo)? * self.dim + axis)
    }

    /// ω({x, y}); zero for non-edges and sites outside the box.
    pub fn weight(&self, x: &Site, y: &Site) -> f64 {
        self.edge_slot(x, y).map_or(0.0, |s| self.weights[s])
    }

    /// Neighbours of `x` inside the box with their edge weights (possibly zero).
    pub fn neighbors(&self, x: &Site) -> impl Iterator<Item = (Site, f64)> + '_ {
        let x = *x;
        (0..self.dim).flat_map(move |axis| {
            [-1, 1].into_iter().filter_map(move |delta| {
                let y = x.offset(axis, delta);
                self.edge_slot(&x, &y).map(|s| (y, self.weights[s]))
            })
        })
    }

    /// Every edge of the box, each undirected edge once as `(lower, upper, ω)`.
    pub fn edges(&self) -> impl Iterator<Item = (Site, Site, f64)> + '_ {
        (0..self.weights.len()).filter_map(move |slot| {
            let (s, axis) = (slot / self.dim, slot % self.dim);
            let x = self.site_at(s);
            (x.0[axis] < self.half_width).then(|| (x, x.offset(axis, 1), self.weights[slot]))
        })
    }

    pub fn open_edges(&self) -> impl Iterator<Item = (Site, Site, f64)> + '_ {
        self.edges().filter(|e| e.2 > 0.0)
    }

    /// Short stable identifier used in provenance records.
    pub fn id(&self) -> String {
        format!("d{}L{}:{}:seed{}", self.dim, self.half_width, self.law, self.law.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_bernoulli_opens_every_edge() {
        let law = EnvironmentLaw::bernoulli(1.0, 1.0, 3);
        let env = sample_environment(&law, 2, 4).unwrap();
        let edges: Vec<_> = env.edges().collect();
        assert_eq!(edges.len(), 2 * 9 * 8);
        assert!(edges.iter().all(|e| e.2 == 1.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let law = EnvironmentLaw::pareto(0.8, 2.0, 1.0, 99);
        let a = sample_environment(&law, 2, 10).unwrap();
        let b = sample_environment(&law, 2, 10).unwrap();
        assert_eq!(a, b);
        let c = sample_environment(&law.with_seed(100), 2, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nested_boxes_share_edges() {
        let law = EnvironmentLaw::bernoulli(0.6, 1.0, 5);
        let small = sample_environment(&law, 2, 5).unwrap();
        let big = sample_environment(&law, 2, 9).unwrap();
        for (x, y, w) in small.edges() {
            assert_eq!(big.weight(&x, &y), w);
        }
    }

    #[test]
    fn invalid_laws_are_rejected() {
        assert!(sample_environment(&EnvironmentLaw::bernoulli(1.2, 1.0, 0), 2, 3).is_err());
        assert!(sample_environment(&EnvironmentLaw::bernoulli(0.5, 0.0, 0), 2, 3).is_err());
        assert!(sample_environment(&EnvironmentLaw::bernoulli(0.5, 1.0, 0), 2, 0).is_err());
        assert!(sample_environment(&EnvironmentLaw::pareto(0.5, -1.0, 1.0, 0), 2, 3).is_err());
    }

    #[test]
    fn site_indexing_round_trips() {
        let env = sample_environment(&EnvironmentLaw::constant(1.0, 0), 3, 2).unwrap();
        for i in 0..env.num_sites() {
            assert_eq!(env.site_index(&env.site_at(i)), Some(i));
        }
        assert_eq!(env.site_at(0), Site::new3(-2, -2, -2));
        assert!(env.site_at(1) > env.site_at(0));
    }

    #[test]
    fn descriptor_round_trip() {
        for law in [
            EnvironmentLaw::bernoulli(0.7, 1.0, 0),
            EnvironmentLaw::pareto(0.9, 2.5, 0.5, 0),
            EnvironmentLaw::constant(3.25, 0),
        ] {
            let back: EnvironmentLaw = law.to_string().parse().unwrap();
            assert_eq!(back, law);
        }
    }

    #[test]
    fn weights_are_symmetric_and_nonnegative() {
        let env = sample_environment(&EnvironmentLaw::pareto(0.7, 1.5, 1.0, 4), 2, 6).unwrap();
        for (x, y, w) in env.edges() {
            assert!(w >= 0.0);
            assert_eq!(env.weight(&x, &y), env.weight(&y, &x));
        }
    }
}
