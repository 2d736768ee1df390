//! Hermite and Wick calculus, tested nonlinear functionals of the field,
//! covariance functionals, fractional kernels and Gibbs reweighting.

mod analytic;
mod fractional;
mod functional;
mod gibbs;
mod hermite;

pub use analytic::{wick_analytic, wick_eval, AnalyticFunction, DEFAULT_TRUNCATION};
pub use fractional::{
    field_mode_coefficients, fractional_kernel_eval, sobolev_minus_s_norm, FractionalKernel, SobolevNorm,
};
pub use functional::{
    admissible, cell_midpoints, covariance_functional, gamma_window, gmc_integral, sample_on_grid,
    tested_functional, GridKernel, LatticeKernel, SampledKernel, TestedFunctional, WickFunctional,
};
pub use gibbs::{gibbs_reweight, GibbsEstimate};
pub use hermite::{
    hermite, hermite_dv, hermite_dx, hermite_explicit, hermite_scaled_all, wick_covariance_check,
    WickCovarianceReport,
};

#[cfg(test)]
mod tests;
