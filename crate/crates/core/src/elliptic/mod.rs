//! Shifted-Laplacian solves, Newton solvers for the entropy potential and the
//! constant-scalar-curvature conformal factor, indicial roots and eigenvalues.

pub mod eigen;
pub mod entropy_potential;
pub mod indicial;
pub mod newton;
pub mod shifted;
pub mod yamabe;

pub use eigen::{lowest_eigenvalue, EigenOperator, EigenOptions, EigenResult};
pub use entropy_potential::{solve_entropy_potential, solve_entropy_potential_from, EntropyPotential};
pub use indicial::{indicial_roots, threshold_c, IndicialRadius, IndicialReport};
pub use newton::NewtonReport;
pub use shifted::{solve_shifted_scalar, solve_shifted_tensor, SolveOptions};
pub use yamabe::{solve_yamabe, solve_yamabe_full, YamabeSolution};
