//! The killed operator on a cluster domain, its Green kernel, Monte-Carlo and
//! spectral cross-checks, and fits of the kernel against its bound shapes.

mod bounds;
mod cholesky;
mod export;
mod mc;
mod operator;
mod solve;
mod spectral;

pub use bounds::{bound_regressor, fit_diagonal_log, fit_green_bounds, GreenBoundReport};
pub use cholesky::SkylineCholesky;
pub use export::{read_green_binary, write_green_binary, write_green_csv, CSV_MAX_ROWS, GREEN_MAGIC};
pub use mc::{mc_green_oracle, mc_green_row, McEstimate, McRow};
pub use operator::{build_killed_operator, build_scaled_operator, Frame, KilledOperator};
pub use solve::{
    conjugate_gradient, solve_green, solve_green_with, GreenOperator, GreenSolver, SolverOptions,
    DEFAULT_CG_THRESHOLD, DEFAULT_TOL,
};
pub use spectral::{
    killed_heat_kernel, principal_eigenvalue_check, spectral_decompose, PrincipalReport, SpectralData,
    DEFAULT_EIGEN_CAP,
};

#[cfg(test)]
mod tests;
