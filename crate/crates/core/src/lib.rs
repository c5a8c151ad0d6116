//! Unsymmetric Kansa collocation with polyharmonic splines and randomly
//! perturbed fictitious centers.
//!
//! The solution of a second-order elliptic problem with mixed
//! Dirichlet/Neumann data is sought as `u ~ sum_i c_i phi(|P - A_i|)`, where
//! the centers `A_i` are random perturbations of a fixed collocation grid.
//! Imposing the equation at interior nodes and the boundary condition at
//! boundary nodes gives a square, unsymmetric system for the `c_i`.
//!
//! ```
//! use kansa::{experiment, pde_model, polyharmonic::RadialKernel};
//!
//! let problem = pde_model::test_problem_1();
//! let kernel = RadialKernel::tps(4).unwrap();
//! let (_, summary) = experiment::run_cell(&problem, kernel, 11, 0.01, 4, 7).unwrap();
//! assert!(summary.mean_rmse.unwrap() < 0.1);
//! ```

pub mod assembly;
pub mod check;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod pde_model;
pub mod polyharmonic;
pub mod solver;

pub use assembly::{assemble, perturb_centers, CenterGenerator, KansaSystem};
pub use error::{KansaError, Result};
pub use experiment::{evaluate_solution, rmse, run_trials, singularity_census, ExperimentConfig, TrialRecord};
pub use geometry::{classify, tensor_grid, BoundaryPartition, BoundaryTag, CollocationSet, Point};
pub use pde_model::{EllipticOperator, EllipticProblem, ProblemId};
pub use polyharmonic::{KernelFamily, RadialKernel};
pub use solver::{solve, smallest_pivot_census, CensusReport, SolveResult, SolveStatus};
