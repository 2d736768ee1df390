use std::collections::VecDeque;
use std::sync::Arc;

use super::{Environment, Site};
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// The largest open cluster of an environment together with the vertex
/// measures used by the solvers.
#[derive(Clone, Debug)]
pub struct ClusterGeometry {
    env: Arc<Environment>,
    vertices: Vec<Site>,
    /// Box index -> cluster index.
    slot: Vec<u32>,
    adj_start: Vec<usize>,
    adj: Vec<(u32, f64)>,
    mu: Vec<f64>,
    nu: Vec<f64>,
    theta: Vec<f64>,
    theta0_hat: f64,
}

/// Maximal connected component of the open-edge graph; ties go to the
/// component with the lexicographically smallest vertex.
pub fn largest_cluster(env: Arc<Environment>) -> Result<ClusterGeometry> {
    if env.open_edges().next().is_none() {
        return Err(Error::EmptyCluster);
    }
    let n = env.num_sites();
    let mut label = vec![NONE; n];
    let mut best: Option<(u32, usize)> = None;
    let mut queue = VecDeque::new();
    let mut next_label = 0u32;
    // Scanning in index order visits components by increasing minimal vertex,
    // so keeping the first maximum implements the tie rule.
    for start in 0..n {
        if label[start] != NONE {
            continue;
        }
        label[start] = next_label;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(s) = queue.pop_front() {
            size += 1;
            let x = env.site_at(s);
            for (y, w) in env.neighbors(&x) {
                if w > 0.0 {
                    let t = env.site_index(&y).expect("neighbour inside box");
                    if label[t] == NONE {
                        label[t] = next_label;
                        queue.push_back(t);
                    }
                }
            }
        }
        if best.is_none_or(|(_, b)| size > b) {
            best = Some((next_label, size));
        }
        next_label += 1;
    }
    let (winner, _) = best.expect("box is nonempty");
    let mut slot = vec![NONE; n];
    let mut vertices = Vec::new();
    for (s, &l) in label.iter().enumerate() {
        if l == winner {
            slot[s] = vertices.len() as u32;
            vertices.push(env.site_at(s));
        }
    }
    let mut adj_start = Vec::with_capacity(vertices.len() + 1);
    let mut adj = Vec::new();
    let mut mu = Vec::with_capacity(vertices.len());
    let mut nu = Vec::with_capacity(vertices.len());
    for x in &vertices {
        adj_start.push(adj.len());
        let (mut m, mut v) = (0.0, 0.0);
        for (y, w) in env.neighbors(x) {
            if w > 0.0 {
                let j = slot[env.site_index(&y).expect("inside")];
                adj.push((j, w));
                m += w;
                v += 1.0 / w;
            }
        }
        mu.push(m);
        nu.push(v);
    }
    adj_start.push(adj.len());
    let theta = mu.iter().map(|m| m.max(1.0)).collect();
    let theta0_hat = vertices.len() as f64 / n as f64;
    Ok(ClusterGeometry { env, vertices, slot, adj_start, adj, mu, nu, theta, theta0_hat })
}

impl ClusterGeometry {
    pub fn env(&self) -> &Arc<Environment> {
        &self.env
    }

    pub fn dim(&self) -> usize {
        self.env.dim()
    }

    /// Cluster sites in lexicographic order.
    pub fn vertices(&self) -> &[Site] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        let s = self.env.site_index(x)?;
        let c = self.slot[s];
        (c != NONE).then_some(c as usize)
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index_of(x).is_some()
    }

    /// Open neighbours of cluster vertex `i` as `(cluster index, ω)`.
    pub fn open_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[self.adj_start[i]..self.adj_start[i + 1]]
            .iter()
            .map(|&(j, w)| (j as usize, w))
    }

    /// μ^ω(x) = Σ_{y∼x} ω({x, y}).
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// ν^ω(x) = Σ_{y∼x} ω({x, y})⁻¹ over open edges.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Speed measure θ^ω = μ^ω ∨ 1.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// |cluster| / |box|.
    pub fn theta0_hat(&self) -> f64 {
        self.theta0_hat
    }

    /// Half-width of the analysis core: the box minus a padding of `L/8`.
    pub fn core_half_width(&self) -> i32 {
        let l = self.env.half_width();
        l - l / 8
    }

    /// Cluster density over the padded core of the box.
    pub fn core_density(&self) -> f64 {
        let r = self.core_half_width();
        let d = self.dim();
        let inside = |x: &Site| (0..d).all(|i| x.0[i].abs() <= r);
        let hits = self.vertices.iter().filter(|x| inside(x)).count();
        hits as f64 / ((2 * r + 1) as f64).powi(d as i32)
    }

    /// Breadth-first chemical distances from cluster vertex `i` (`u32::MAX`
    /// marks unreachable vertices, which cannot occur inside one cluster).
    pub fn distances_from(&self, i: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = VecDeque::from([i]);
        dist[i] = 0;
        while let Some(u) = queue.pop_front() {
            for (v, _) in self.open_neighbors(u) {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Graph distance over open edges; `None` when either endpoint is off the cluster.
    pub fn chemical_distance(&self, x: &Site, y: &Site) -> Option<u32> {
        let (i, j) = (self.index_of(x)?, self.index_of(y)?);
        if i == j {
            return Some(0);
        }
        let d = self.distances_from(i)[j];
        (d != u32::MAX).then_some(d)
    }

    /// Cluster vertices within chemical distance `radius` of `center`.
    pub fn chemical_ball(&self, center: &Site, radius: u32) -> Vec<Site> {
        let Some(i) = self.index_of(center) else {
            return Vec::new();
        };
        self.distances_from(i)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= radius)
            .map(|(j, _)| self.vertices[j])
            .collect()
    }

    /// A cluster site minimising `|site - p|₁`, ties broken lexicographically.
    pub fn project_point(&self, p: [f64; 3]) -> Site {
        assert!(!self.is_empty());
        let d = self.dim();
        let center: Vec<i32> = (0..d).map(|i| p[i].round() as i32).collect();
        let dist = |x: &Site| -> f64 { (0..d).map(|i| (f64::from(x.0[i]) - p[i]).abs()).sum() };
        let l = self.env.half_width();
        let mut best: Option<(f64, Site)> = None;
        for r in 0..=(4 * l + 2) {
            // Shell of sup-radius r around the rounded point.
            let mut visit = |x: Site| {
                if self.contains(&x) {
                    let dx = dist(&x);
                    if best.is_none_or(|(bd, bs)| dx < bd || (dx == bd && x < bs)) {
                        best = Some((dx, x));
                    }
                }
            };
            let lo: Vec<i32> = center.iter().map(|c| c - r).collect();
            let hi: Vec<i32> = center.iter().map(|c| c + r).collect();
            let mut c = [0i32; 3];
            if d == 2 {
                for a in lo[0]..=hi[0] {
                    for b in lo[1]..=hi[1] {
                        if (a - center[0]).abs().max((b - center[1]).abs()) == r {
                            c[0] = a;
                            c[1] = b;
                            visit(Site(c));
                        }
                    }
                }
            } else {
                for a in lo[0]..=hi[0] {
                    for b in lo[1]..=hi[1] {
                        for e in lo[2]..=hi[2] {
                            let m = (a - center[0]).abs().max((b - center[1]).abs()).max((e - center[2]).abs());
                            if m == r {
                                visit(Site([a, b, e]));
                            }
                        }
                    }
                }
            }
            // Sites outside sup-radius r are at ℓ¹ distance ≥ r - 1/2 from p.
            if let Some((bd, _)) = best {
                if bd < f64::from(r) + 0.5 - 1e-12 {
                    break;
                }
            }
        }
        best.expect("cluster nonempty").1
    }

    /// π_n(x): the cluster site closest to `n·x`.
    pub fn project_pi_n(&self, n: f64, x: &[f64]) -> Site {
        let mut p = [0.0; 3];
        for (i, xi) in x.iter().enumerate().take(self.dim()) {
            p[i] = n * xi;
        }
        self.project_point(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_environment, EnvironmentLaw};

    fn explicit(half: i32, edges: &[((i32, i32), (i32, i32))]) -> Arc<Environment> {
        let law = EnvironmentLaw::bernoulli(1.0, 1.0, 0);
        let list = edges
            .iter()
            .map(|&((a, b), (c, d))| (Site::new2(a, b), Site::new2(c, d), 1.0));
        Arc::new(Environment::from_edges(2, half, law, list).unwrap())
    }

    #[test]
    fn full_lattice_cluster_is_the_box() {
        let env = Arc::new(sample_environment(&EnvironmentLaw::bernoulli(1.0, 1.0, 1), 2, 5).unwrap());
        let g = largest_cluster(env).unwrap();
        assert_eq!(g.len(), 121);
        assert_eq!(g.theta0_hat(), 1.0);
        let c = g.index_of(&Site::new2(0, 0)).unwrap();
        assert_eq!(g.mu()[c], 4.0);
        let corner = g.index_of(&Site::new2(-5, -5)).unwrap();
        assert_eq!(g.mu()[corner], 2.0);
        assert_eq!(g.theta()[corner], 2.0);
    }

    #[test]
    fn tie_goes_to_smallest_vertex() {
        let env = explicit(3, &[((1, 1), (1, 2)), ((-2, 0), (-1, 0))]);
        let g = largest_cluster(env).unwrap();
        assert_eq!(g.vertices(), &[Site::new2(-2, 0), Site::new2(-1, 0)]);
    }

    #[test]
    fn no_open_edges_is_an_error() {
        let env = explicit(2, &[]);
        assert!(matches!(largest_cluster(env), Err(Error::EmptyCluster)));
    }

    #[test]
    fn chemical_distance_detours_around_closed_edge() {
        // 3x3 lattice with the edge (0,0)-(1,0) closed.
        let mut edges = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                if a < 1 {
                    edges.push(((a, b), (a + 1, b)));
                }
                if b < 1 {
                    edges.push(((a, b), (a, b + 1)));
                }
            }
        }
        edges.retain(|e| *e != ((0, 0), (1, 0)));
        let g = largest_cluster(explicit(1, &edges)).unwrap();
        let (o, e) = (Site::new2(0, 0), Site::new2(1, 0));
        assert_eq!(g.chemical_distance(&o, &o), Some(0));
        assert_eq!(g.chemical_distance(&o, &Site::new2(0, 1)), Some(1));
        assert_eq!(g.chemical_distance(&o, &e), Some(3));
        assert_eq!(g.chemical_distance(&o, &Site::new2(5, 5)), None);
    }

    #[test]
    fn projection_tie_is_lexicographic() {
        let g = largest_cluster(explicit(2, &[((1, 0), (1, 1)), ((0, 1), (1, 1))])).unwrap();
        assert_eq!(g.project_point([0.5, 0.5, 0.0]), Site::new2(0, 1));
        assert_eq!(g.project_point([1.0, 1.0, 0.0]), Site::new2(1, 1));
        assert_eq!(g.project_pi_n(4.0, &[0.25, 0.0]), Site::new2(1, 0));
    }
}
