//! Open quantum system dynamics and memory-effect quantification.
//!
//! The crate provides:
//! * states, Hermitian observables, and quantum maps with Kraus,
//!   superoperator, and Choi representations ([`state`], [`map`], [`metric`]);
//! * GKSL generators with semigroup propagation and the jump/no-jump path
//!   expansion ([`gksl`]);
//! * exact finite bipartite system+environment models ([`bipartite`]);
//! * trace-distance and Helstrom-norm non-Markovianity measures plus
//!   P/CP-divisibility certification over tabulated map families
//!   ([`family`], [`nonmarkov`]);
//! * quantum semi-Markov dynamics with phase-type waiting times: Monte Carlo,
//!   truncated series, Laplace-domain solution, memory kernels in both
//!   operator orderings, and a Volterra integro-differential solver
//!   ([`wtd`], [`semimarkov`], [`volterra`], [`laplace`]);
//! * the classical semi-Markov analogue and its diagonal quantum embedding
//!   ([`classical`]).
//!
//! Units are dimensionless with ħ = 1.

pub mod bipartite;
pub mod classical;
pub mod error;
pub mod family;
pub mod gksl;
pub mod json;
pub mod laplace;
pub mod linalg;
pub mod map;
pub mod metric;
pub mod nonmarkov;
pub mod random;
pub mod semimarkov;
pub mod state;
pub mod volterra;
pub mod wtd;

pub use bipartite::{info_external, info_internal, BipartiteModel, BoundReport};
pub use classical::ClassicalSemiMarkov;
pub use error::{Error, Result};
pub use family::DynamicsFamily;
pub use gksl::{Channel, GKSLModel, TruncatedState};
pub use laplace::TalbotConfig;
pub use linalg::{tensor, CMatrix, CVector};
pub use map::{CptpReport, QuantumMap, Representation};
pub use metric::{helstrom_norm, trace_distance, trace_norm};
pub use nonmarkov::{MeasureResult, OptConfig};
pub use semimarkov::{KernelOrdering, SemiMarkovModel, SeriesState};
pub use state::{
    partial_trace, tensor_states, DensityMatrix, HermitianOp, StateTolerance, Subsystem,
};
pub use volterra::{solve_volterra, SampledKernel};
pub use wtd::PhaseTypeWTD;
