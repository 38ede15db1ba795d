use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("mode index {index} out of range 1..={n}")]
    ModeOutOfRange { index: usize, n: usize },
    #[error("empty mode set")]
    EmptySet,
    #[error("mode sets overlap: {0}")]
    Overlap(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("node {0} is not an internal non-root node of the tree")]
    NotInternalNode(String),
    #[error("non-positive radicand in normalization for node {0}")]
    NonPositiveRadicand(String),
    #[error("malformed tree string at byte {pos}: {msg}")]
    TreeSyntax { pos: usize, msg: String },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("n = {0} outside the supported range {1}")]
    OutOfGuard(usize, String),
    #[error("tree {0} is not a vertex of the recoupling graph")]
    UnknownVertex(String),
    #[error("trees {0} and {1} are not related by a single swap")]
    NotASwap(String, String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("restricted labelling operators do not commute (residual {0:e})")]
    NonCommuting(f64),
    #[error("joint spectrum is degenerate: {0}")]
    DegenerateSpectrum(String),
    #[error("eigenvalues of Q_{node} do not form a ladder of step {step}")]
    LadderSpacing { node: String, step: f64 },
    #[error("bases belong to different sectors")]
    SectorMismatch,
    #[error("label bookkeeping mismatch: {0}")]
    LabelMismatch(String),
    #[error("vanishing Pochhammer symbol (c)_{0} before termination")]
    VanishingPochhammer(usize),
    #[error("degree {k} exceeds N = {n}")]
    DegreeTooLarge { k: usize, n: usize },
    #[error("degenerate overlap block: {0}")]
    DegenerateBlock(String),
    #[error("generator expansion residual {0:e} above tolerance")]
    ExpansionResidual(f64),
    #[error("no conjugating matrix found (smallest singular value ratio {0:e})")]
    NoConjugation(f64),
    #[error("swap pattern {0} has no documented plane assignment")]
    UndocumentedPattern(String),
}

pub type Result<T> = std::result::Result<T, Error>;
