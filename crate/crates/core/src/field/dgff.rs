use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::green::{GreenSolver, KilledOperator, SkylineCholesky};
use crate::lattice::Site;
use crate::rng::{stream, Purpose};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub env_id: String,
    pub n: Option<usize>,
    pub replica: u64,
}

/// One DGFF realisation on `Λ ∩ cluster`; zero elsewhere.
#[derive(Clone, Debug)]
pub struct FieldSample {
    op: Arc<KilledOperator>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl FieldSample {
    pub fn operator(&self) -> &Arc<KilledOperator> {
        &self.op
    }

    pub fn at(&self, x: &Site) -> f64 {
        self.op.row_of(x).map_or(0.0, |i| self.values[i])
    }

    /// Raw little-endian `f64` values plus a JSON sidecar with the provenance.
    pub fn write(&self, mut data: impl Write, mut sidecar: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        data.write_all(&buf)?;
        serde_json::to_writer_pretty(&mut sidecar, &self.provenance).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(sidecar)?;
        Ok(())
    }
}

/// Exact sampler `φ = L⁻ᵀ ξ` for `A = L Lᵀ`, so that `cov(φ) = A⁻¹`.
#[derive(Clone, Debug)]
pub struct DgffSampler {
    op: Arc<KilledOperator>,
    chol: Arc<SkylineCholesky>,
}

impl DgffSampler {
    pub fn new(op: Arc<KilledOperator>) -> Result<Self> {
        let chol = Arc::new(SkylineCholesky::factor(&op)?);
        Ok(DgffSampler { op, chol })
    }

    /// Reuses a solver's factorisation.
    pub fn from_solver(solver: &GreenSolver) -> Result<Self> {
        let chol = solver
            .cholesky()
            .ok_or_else(|| invalid("sampling needs the Cholesky backend"))?;
        Ok(DgffSampler { op: solver.operator().clone(), chol: Arc::new(chol.clone()) })
    }

    pub fn operator(&self) -> &Arc<KilledOperator> {
        &self.op
    }

    /// Replica `r` draws its noise from stream `r` of `(seed, FieldReplicas)`.
    pub fn sample_one(&self, seed: u64, replica: u64) -> FieldSample {
        let mut rng = stream(seed, Purpose::FieldReplicas, replica);
        let mut v: Vec<f64> = (0..self.op.len()).map(|_| rng.sample(StandardNormal)).collect();
        self.chol.solve_upper(&mut v);
        FieldSample {
            op: self.op.clone(),
            values: v,
            provenance: Provenance {
                seed,
                env_id: self.op.env_id(),
                n: self.op.frame().map(|f| f.n),
                replica,
            },
        }
    }

    pub fn sample(&self, count: usize, seed: u64) -> Vec<FieldSample> {
        (0..count as u64).into_par_iter().map(|r| self.sample_one(seed, r)).collect()
    }
}

pub fn sample_dgff(op: Arc<KilledOperator>, count: usize, seed: u64) -> Result<Vec<FieldSample>> {
    Ok(DgffSampler::new(op)?.sample(count, seed))
}
