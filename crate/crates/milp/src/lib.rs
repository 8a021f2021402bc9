//! Sparse MILP model container, MPS and solution-file interchange, and a
//! small exact branch-and-bound solver built on a dense bounded simplex.

pub mod backend;
pub mod branch;
pub mod error;
pub mod model;
pub mod mps;
pub mod simplex;
pub mod solution;

pub use backend::{default_backend, CommandBackend, MilpBackend, ReferenceBackend};
pub use branch::{reference_solve, reference_solve_traced, NodeRecord, SearchTrace};
pub use error::{ModelError, MpsError, SolveError};
pub use model::{Constraint, LinExpr, MixedIntegerModel, RowId, Sense, VarId, VarKind, Variable};
pub use mps::{emit_mps, mps_names, parse_mps, MpsNames};
pub use simplex::{DenseSimplex, LpOptions, LpStatus};
pub use solution::{parse_solution, write_solution, SolutionVector, SolveOptions, SolveStatus};
