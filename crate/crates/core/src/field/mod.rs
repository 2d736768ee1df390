//! Exact DGFF sampling, mollified fields and kernels on the scaled unit
//! square, and the continuum reference field.

mod calibrate;
mod continuum;
mod dgff;
mod mollifier;

pub use calibrate::{calibrate_sigma, SigmaEstimate};
pub use continuum::{continuum_basis, sample_cgff, CgffRealization, ContinuumBasis, Mode, MOLLIFIER_NODES};
pub use dgff::{sample_dgff, DgffSampler, FieldSample, Provenance};
pub use mollifier::{smear_field, smeared_kernels, smeared_variance, MollifierSpec, SmearedEntry, SmearedKernelSet};

#[cfg(test)]
mod tests;
