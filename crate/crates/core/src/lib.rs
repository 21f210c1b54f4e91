//! Discrete variational calculus on weighted graphs: operators, Sobolev-type
//! norms, energy functionals of quasilinear Laplacian systems and a
//! multi-start critical point solver.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod graph;
pub mod models;
pub mod numeric;
pub mod optimize;
pub mod solver;
pub mod spaces;

pub use calculus::{GraphFunction, Support};
pub use energy::{AbSource, IntervalReport, Problem, SystemKind, SystemSpec};
pub use error::{Error, Result};
pub use graph::{Channel, DomainPartition, GraphBuilder, GraphFile, WeightedGraph};
pub use models::{Arity, GrowthEstimate, GrowthHint, ModelSpec, NonlinearityModel};
pub use solver::{solve, SolveReport, SolverConfig};
pub use spaces::{ConstantSource, EmbeddingConstant, NormKind, NormSpec, Space, Target};
