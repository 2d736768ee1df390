use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{ClusterGeometry, Site};

const NONE: u32 = u32::MAX;

/// Placement of the scaled unit cube `(0,1)ᵈ` in the lattice: cell `i` of the
/// `n⁻¹`-grid is the site `anchor + i`, and the domain `Λ_n` is the cells
/// with every coordinate in `1..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frame {
    pub n: usize,
    pub dim: usize,
    pub anchor: Site,
}

impl Frame {
    /// Frame whose grid is centred on the origin.
    pub fn centered(n: usize, dim: usize) -> Self {
        let a = -((n / 2) as i32);
        let mut c = [0; 3];
        c[..dim].fill(a);
        Frame { n, dim, anchor: Site(c) }
    }

    /// Smallest box half-width holding the grid with a margin of at least
    /// `L/8` on each side.
    pub fn padded_half_width(&self) -> i32 {
        let reach = (self.n / 2 + 1) as f64;
        (reach * 8.0 / 7.0).ceil() as i32 + 1
    }

    pub fn cell_site(&self, cell: &[usize]) -> Site {
        let mut c = self.anchor.0;
        for (k, &i) in cell.iter().enumerate().take(self.dim) {
            c[k] += i as i32;
        }
        Site(c)
    }

    /// Grid cell `⌊n·x⌋` of a point of the unit cube.
    pub fn cell_of(&self, x: &[f64]) -> [usize; 3] {
        let mut cell = [0; 3];
        for k in 0..self.dim {
            let v = (self.n as f64 * x[k]).floor();
            cell[k] = v.clamp(0.0, (self.n - 1) as f64) as usize;
        }
        cell
    }

    pub fn site_of_point(&self, x: &[f64]) -> Site {
        self.cell_site(&self.cell_of(x))
    }

    /// `anchor + n·x` in lattice coordinates.
    pub fn lattice_point(&self, x: &[f64]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for k in 0..self.dim {
            p[k] = f64::from(self.anchor.0[k]) + self.n as f64 * x[k];
        }
        p
    }

    /// Lattice sites of `Λ_n`, lexicographically ordered.
    pub fn interior_sites(&self) -> Vec<Site> {
        let n = self.n;
        let mut out = Vec::new();
        if n < 2 {
            return out;
        }
        let zr = if self.dim == 3 { 1..n } else { 0..1 };
        for i in 1..n {
            for j in 1..n {
                for k in zr.clone() {
                    out.push(self.cell_site(&[i, j, k]));
                }
            }
        }
        out
    }
}

/// The restriction of `−ℒ^ω` to `Λ ∩ cluster` with Dirichlet data outside.
#[derive(Clone, Debug)]
pub struct KilledOperator {
    geom: Arc<ClusterGeometry>,
    sites: Vec<Site>,
    lookup: HashMap<Site, usize>,
    cluster_rows: Vec<usize>,
    diag: Vec<f64>,
    adj_start: Vec<usize>,
    adj: Vec<(u32, f64)>,
    exit: Vec<f64>,
    frame: Option<Frame>,
}

/// Assembles `A[x][x] = μ(x)`, `A[x][y] = −ω({x,y})` on `Λ ∩ cluster`.
pub fn build_killed_operator(geom: &Arc<ClusterGeometry>, domain: &[Site]) -> Result<KilledOperator> {
    let mut sites: Vec<Site> = domain.iter().copied().filter(|x| geom.contains(x)).collect();
    sites.sort_unstable();
    sites.dedup();
    if sites.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let cluster_rows: Vec<usize> = sites.iter().map(|x| geom.index_of(x).expect("filtered")).collect();
    let mut row_of = vec![NONE; geom.len()];
    for (r, &c) in cluster_rows.iter().enumerate() {
        row_of[c] = r as u32;
    }
    let mut adj_start = Vec::with_capacity(sites.len() + 1);
    let mut adj = Vec::new();
    let mut exit = Vec::with_capacity(sites.len());
    for &c in &cluster_rows {
        adj_start.push(adj.len());
        let mut out = 0.0;
        for (j, w) in geom.open_neighbors(c) {
            match row_of[j] {
                NONE => out += w,
                r => adj.push((r, w)),
            }
        }
        exit.push(out);
    }
    adj_start.push(adj.len());
    let diag = cluster_rows.iter().map(|&c| geom.mu()[c]).collect();
    let lookup = sites.iter().enumerate().map(|(i, x)| (*x, i)).collect();
    Ok(KilledOperator {
        geom: geom.clone(),
        sites,
        lookup,
        cluster_rows,
        diag,
        adj_start,
        adj,
        exit,
        frame: None,
    })
}

/// The operator on `Λ_n` for a frame.
pub fn build_scaled_operator(geom: &Arc<ClusterGeometry>, frame: Frame) -> Result<KilledOperator> {
    if frame.dim != geom.dim() {
        return Err(crate::error::invalid("frame and environment dimensions differ"));
    }
    let mut op = build_killed_operator(geom, &frame.interior_sites())?;
    op.frame = Some(frame);
    Ok(op)
}

impl KilledOperator {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn geom(&self) -> &Arc<ClusterGeometry> {
        &self.geom
    }

    pub fn frame(&self) -> Option<&Frame> {
        self.frame.as_ref()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn row_of(&self, x: &Site) -> Option<usize> {
        self.lookup.get(x).copied()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Weight from each row to cluster neighbours outside `Λ` (the row sums of `A`).
    pub fn exit(&self) -> &[f64] {
        &self.exit
    }

    /// Off-diagonal neighbours of a row as `(row, ω)`; the matrix entry is `−ω`.
    pub fn neighbors(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[self.adj_start[row]..self.adj_start[row + 1]]
            .iter()
            .map(|&(j, w)| (j as usize, w))
    }

    /// `θ^ω` per row.
    pub fn theta(&self) -> Vec<f64> {
        self.cluster_rows.iter().map(|&c| self.geom.theta()[c]).collect()
    }

    pub fn env_id(&self) -> String {
        self.geom.env().id()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.diag[i] * v[i] - self.neighbors(i).map(|(j, w)| w * v[j]).sum::<f64>())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.len();
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = self.diag[i];
            for (j, w) in self.neighbors(i) {
                a[(i, j)] = -w;
            }
        }
        a
    }

    /// Errors when some connected piece of `Λ` has no edge leaving it.
    pub fn check_exits(&self) -> Result<()> {
        let m = self.len();
        let mut seen = vec![false; m];
        for s in 0..m {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            let mut leaks = false;
            let mut size = 0;
            while let Some(u) = queue.pop_front() {
                size += 1;
                leaks |= self.exit[u] > 0.0;
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            if !leaks {
                return Err(Error::SingularOperator(format!(
                    "component of {size} sites containing {:?} has no exit edge",
                    self.sites[s]
                )));
            }
        }
        Ok(())
    }
}
