//! Finite-difference eigenvalues of the Dirichlet Laplacian on truncated
//! twisted tubes and their comparison with the bound.

pub(crate) mod block;
pub mod dense;
pub mod grid;
pub mod inertia;
mod lobpcg;
mod multigrid;
pub mod sparse;
pub mod spectrum;
pub mod verify;

pub use grid::{build_mask, GridMask, GridSpec, MaskHeader};
pub use sparse::{assemble_laplacian, SparseOperator};
pub use spectrum::{grid_spectrum, lowest_eigenvalues, lowest_eigenvalues_with, moment, SolverOptions, Spectrum, TOL_EIG};
pub use verify::{auto_window, grid_spectra, verify_bound, verify_with_spectra, GridRun, VerificationReport, TOL_VERIFY};
