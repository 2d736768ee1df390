//! Random conductance environments on boxes of ℤᵈ, their largest open
//! cluster, and ergodic-average diagnostics.

mod cluster;
mod env;
mod ergodic;
mod snapshot;

pub use cluster::{largest_cluster, ClusterGeometry};
pub use env::{sample_environment, Environment, EnvironmentLaw, LawKind};
pub use ergodic::{ball_family, ergodic_average, ergodic_sweep, Observable, Region, RegionShape, SweepReport};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotMode};

use std::fmt;

/// A lattice site. Unused trailing coordinates are zero, so the derived
/// ordering is the lexicographic order on ℤᵈ.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Site(pub [i32; 3]);

impl Site {
    pub const fn new2(x: i32, y: i32) -> Self {
        Site([x, y, 0])
    }

    pub const fn new3(x: i32, y: i32, z: i32) -> Self {
        Site([x, y, z])
    }

    pub fn l1(&self, other: &Site) -> i64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (i64::from(*a) - i64::from(*b)).abs())
            .sum()
    }

    pub fn offset(&self, axis: usize, delta: i32) -> Site {
        let mut c = self.0;
        c[axis] += delta;
        Site(c)
    }

    pub fn add(&self, other: &Site) -> Site {
        Site([self.0[0] + other.0[0], self.0[1] + other.0[1], self.0[2] + other.0[2]])
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}
