//! Analysis toolkit for the nonlinear consensus system
//!
//! ```text
//! ẋᵢ = Σ_{j∼i} f_ij(xᵢ − xⱼ)        (node coordinates)
//! ẋ  = d · f(dᵀ x)                   (matrix form, d = signed incidence)
//! ```
//!
//! on connected undirected networks with odd coupling functions `f_ij`.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: graphs, the signed incidence matrix, cycle/cut space bases and
//!   block (coalescence) decomposition.
//! * [`linalg`]: dense symmetric eigen-decomposition (cyclic Jacobi), inertia,
//!   pseudoinverse, Schur complements, weighted Laplacians and effective resistance.
//! * [`coupling`]: odd coupling function families with derivatives, antiderivatives
//!   and root sets.
//! * [`dynamics`]: the vector field, its edge-coordinate twin, Jacobian, signed
//!   Laplacian split, potential and an RK4 integrator.
//! * [`equilibria`]: detailed-balance enumeration, closed forms for trees, cycles
//!   and cliques, coalescence composition and Newton refinement.
//! * [`stability`]: the criteria ladder (cut-sets, connectivity, Schur reduction,
//!   effective resistance tests, closed forms) with an evidence chain.

pub mod coupling;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod stability;

pub use coupling::{CouplingAssignment, CouplingFunction, CouplingSpec};
pub use dynamics::{SignedSplit, System, Trajectory};
pub use equilibria::{Equilibrium, Provenance};
pub use error::{Error, Result};
pub use graph::{BlockDecomposition, BlockKind, Graph, SignedIncidence};
pub use linalg::{Inertia, SymMatrix, WeightedLaplacian};
pub use stability::{StabilityVerdict, Verdict};

/// Schema tag written into every JSON document the toolkit emits.
pub const SCHEMA: &str = "consensus-lab/1";
