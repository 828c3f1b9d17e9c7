use thiserror::Error;

/// Vertex indices are stored 0-based and displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a supported prime modulus")]
    NotPrime(u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need {need} interpolation points, have {have}")]
    NotEnoughPoints { have: usize, need: usize },
    #[error("interpolation node {0} appears twice")]
    DuplicateNode(i64),
    #[error("interpolant has non-integer coefficient {value} at degree {degree}")]
    NonIntegerCoefficient { degree: usize, value: String },
    #[error("point at q={q} is off the interpolant: count {expected}, polynomial gives {got}")]
    InconsistentPoint { q: i64, expected: String, got: String },
    #[error("need {need} primes for this degree bound, have {have}")]
    NotEnoughPrimes { have: usize, need: usize },

    #[error("Cartan matrix must be square with matching symmetrizer")]
    NotSquare,
    #[error("diagonal entry at vertex {} is not 2", .0 + 1)]
    DiagonalNotTwo(usize),
    #[error("off-diagonal entry c_({},{}) is positive", .0 + 1, .1 + 1)]
    PositiveOffDiagonal(usize, usize),
    #[error("symmetrizer mismatch at ({},{}): c_i*c_ij != c_j*c_ji", .0 + 1, .1 + 1)]
    SymmetrizerMismatch(usize, usize),
    #[error("symmetrizer entry at vertex {} is not positive", .0 + 1)]
    NonPositiveSymmetrizer(usize),
    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("orientation misses the pair ({},{})", .0 + 1, .1 + 1)]
    MissingPair(usize, usize),
    #[error("orientation contains both ({},{}) and its reverse", .0 + 1, .1 + 1)]
    BothDirections(usize, usize),
    #[error("orientation pair ({},{}) has c_ij = 0", .0 + 1, .1 + 1)]
    PairNotAnEdge(usize, usize),
    #[error("orientation has a cycle through vertices {0:?} (0-based)")]
    CycleInOrientation(Vec<usize>),
    #[error("k must be at least {min}, got {k}")]
    KTooSmall { k: usize, min: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("relation (H1) violated at vertex {}", .0 + 1)]
    RelationH1Violated(usize),
    #[error("relation (H2) violated for arrow ({},{}) copy {}", .i + 1, .j + 1, .g + 1)]
    RelationH2Violated { i: usize, j: usize, g: usize },
    #[error("module is not locally free: {0}")]
    NotLocallyFree(String),
    #[error("structure entry has {len} coefficients, at most {max} allowed")]
    EntryDegreeOverflow { len: usize, max: usize },
    #[error("subspace is not invariant: {0}")]
    NotInvariant(String),
    #[error("module has no integer lift")]
    NoIntegerLift,
    #[error("reduction mod {p} breaks the module: {reason}")]
    RelationBrokenAtPrime { p: u32, reason: String },
    #[error("modules live over different algebras or fields: {0}")]
    DatumMismatch(String),
    #[error("chain is not nested: {0}")]
    NotNested(String),
    #[error("map is not a homomorphism: {0}")]
    NotAHomomorphism(String),
    #[error("requested rank exceeds the module rank: {0}")]
    RankTooLarge(String),
    #[error("flag does not lie in the reduced module: {0}")]
    FlagNotInReduction(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
