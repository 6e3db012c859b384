//! Error type shared by all grid subsystems.

/// Errors reported by grid, partitioning, runtime, I/O and solver operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum GridError {
    /// Refinement would exceed the maximum tree depth (64).
    #[error("depth overflow: refinement beyond maximum tree depth {0}")]
    DepthOverflow(usize),
    /// Refining an entity that already has children.
    #[error("not a leaf")]
    NotALeaf,
    /// Coarsening an entity without children.
    #[error("no children")]
    NoChildren,
    /// Coarsening a father with at least one refined child.
    #[error("nonleaf children")]
    NonLeafChildren,
    /// Adaptation methods called out of order.
    #[error("protocol violation: {0}")]
    ProtocolViolation(&'static str),
    /// A user weight functor returned a weight <= 0.
    #[error("nonpositive weight {0} for macro element")]
    NonPositiveWeight(i64),
    /// Partitioning method id not in the registry table.
    #[error("unknown method id {0}")]
    UnknownMethod(i32),
    /// Partitioning method id maps to a plug-in seam with no plug-in registered.
    #[error("method unavailable: id {0} requires an external partitioner plug-in")]
    MethodUnavailable(i32),
    /// User-defined destination outside [0, P).
    #[error("bad destination {dest} for {ranks} ranks")]
    BadDestination { dest: usize, ranks: usize },
    /// A second communicate() was issued while a request is pending.
    #[error("overlapping exchange: a communication is already pending on this grid")]
    OverlappingExchange,
    /// Ranks disagreed on the collective operation sequence.
    #[error("collective mismatch or missing message: no rank can progress")]
    CollectiveMismatch,
    /// Intersection weight requested on a domain-boundary intersection.
    #[error("no neighbor across a domain-boundary intersection")]
    NoNeighbor,
    /// A face key was claimed by three or more ranks during construction.
    #[error("nonmanifold border: face shared by {0} ranks")]
    NonManifoldBorder(usize),
    /// Declared process borders do not match the discovered ones.
    #[error("partial border declaration: declared process borders disagree with discovered set")]
    PartialBorderDeclaration,
    /// A parallel DGF lists more partitions than there are ranks.
    #[error("partition count exceeded: {files} partition files for {ranks} ranks")]
    PartitionCountExceeded { files: usize, ranks: usize },
    /// Backup stream with bad magic or version.
    #[error("unrecognized stream: {0}")]
    UnrecognizedStream(String),
    /// Stream or message buffer ended before the expected field.
    #[error("buffer exhausted while reading {0}")]
    BufferExhausted(&'static str),
    /// Euler state with nonpositive density or pressure fed to a flux.
    #[error("invalid state: nonpositive density or pressure")]
    InvalidState,
    /// Time step became nonpositive or non-finite.
    #[error("timestep collapse: dt = {0}")]
    TimestepCollapse(f64),
    /// DGF block that the reader intentionally does not support.
    #[error("unsupported block: {0}")]
    UnsupportedBlock(String),
    /// Parallel construction of a bisection grid.
    #[error("ghosts unsupported for bisection: refinetype conforming requires 1 rank")]
    BisectionParallel,
    /// Grid factory misuse (duplicate ids, bad indices, ...).
    #[error("factory error: {0}")]
    Factory(String),
    /// DGF text that could not be parsed; names the offending token.
    #[error("dgf parse error: {0}")]
    DgfParse(String),
    /// Configuration file errors; names the offending token.
    #[error("config error: {0}")]
    Config(String),
    /// File system and stream I/O failures.
    #[error("io error: {0}")]
    Io(String),
    /// A user adaptation callback failed; the affected macro tree was rolled back.
    #[error("adaptation callback failed: {0}")]
    CallbackFailed(String),
    /// Backward communication direction is not implemented.
    #[error("unsupported communication direction")]
    UnsupportedDirection,
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GridError>;
