//! Adaptively damped Newton method for strongly monotone, Lipschitz
//! continuous potential operator equations, applied to a P1 finite-element
//! discretisation of the quasilinear diffusion problem
//! `-div(μ(|∇u|²)∇u) = g` with homogeneous Dirichlet conditions.
//!
//! Modules, bottom-up:
//! - [`linalg`]: CSR matrices and Jacobi-preconditioned CG.
//! - [`mesh`]: structured triangulations of the unit square and the L-shape.
//! - [`models`]: diffusion coefficients and their structural constants.
//! - [`fem`]: residual, Jacobian, potential and load assembly.
//! - [`solver`]: adaptive, fixed-step and classical Newton, Kačanov.
//! - [`cli`]: experiment runner and CSV output.

pub mod cli;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod models;
pub mod solver;

pub use fem::{DiscreteProblem, QuadratureRule};
pub use linalg::SparseMatrix;
pub use mesh::Mesh;
pub use models::{DiffusionModel, StructuralConstants};
pub use solver::{ConvergenceHistory, OperatorEquation, SolverConfig, StepRecord, Termination};
