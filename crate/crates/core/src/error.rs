use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("node index {index} out of range for a graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph is not a tree")]
    NotATree,
    #[error("graph is not a cycle")]
    NotACycle,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("principal block is singular or ill-conditioned (condition number {0:e})")]
    SingularPrincipalBlock(f64),
    #[error("negative edge weight {weight} on edge {edge}")]
    NegativeWeight { edge: usize, weight: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid coupling function: {0}")]
    InvalidCoupling(String),
    #[error("antiderivative not available for coupling '{0}'")]
    NotAvailable(String),
    #[error("root finding failed: {0}")]
    RootFindingFailed(String),
    #[error("coupling is not an odd polynomial")]
    NotPolynomial,
    #[error("coupling assignment does not cover edge {0}")]
    UncoveredEdge(usize),

    #[error("edge vector is not in the cut space (residual {0:e})")]
    NotInCutSpace(f64),
    #[error("{count} candidate states exceed the cap of {cap}")]
    CombinatorialBlowup { count: f64, cap: usize },
    #[error("Newton refinement did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("state is not an equilibrium (residual {0:e})")]
    ResidualTooLarge(f64),

    #[error("no eigenvalue within tolerance of zero; input is not a consensus Jacobian")]
    MissingTrivialKernel,
    #[error("negative subgraph is disconnected")]
    GMinusDisconnected,
    #[error("union of positive and negative subgraphs is disconnected")]
    DisconnectedUnion,
    #[error("clique verdict needs nonzero derivatives (f'(0) = {d0}, f'(alpha) = {da})")]
    BadDerivativeSigns { d0: f64, da: f64 },
}
