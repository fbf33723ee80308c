use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains NaN or infinite values")]
    NonFiniteInput,
    #[error("every centered covariate column is numerically zero")]
    AllColumnsConstant,
    #[error("invalid quantile pair ({lower}, {upper}); need 0 <= lower < upper <= 1")]
    InvalidQuantilePair { lower: f64, upper: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("arm sizes n1={n1}, n0={n0} are too small (need >= 2 each)")]
    DegenerateArm { n1: usize, n0: usize },
    #[error("invalid arm sizes: n={n}, n1={n1}")]
    InvalidArmSizes { n: usize, n1: usize },
    #[error("C({n}, {m}) exceeds the enumeration limit")]
    TooManySubsets { n: usize, m: usize },
    #[error("an arm has no units")]
    EmptyArm,
    #[error("arm {arm} covariate matrix is rank deficient")]
    ArmRankDeficient { arm: u8 },
    #[error("arm {arm} has {n_t} units but needs at least {needed}")]
    ArmTooSmall { arm: u8, n_t: usize, needed: usize },
    #[error("least squares system is singular")]
    SingularSystem,
    #[error("an arm leverage is numerically one; HC2/HC3 undefined")]
    LeverageAtOne,
    #[error("HC1 needs n > p (n={n}, p={p})")]
    DegenerateDf { n: usize, p: usize },
    #[error("variance estimate is negative")]
    NegativeVariance,
    #[error("subset size {m} outside 1..={n}")]
    InvalidSubsetSize { n: usize, m: usize },
    #[error("quadratic-form matrix must have zero row and column sums")]
    RowColSumsNonzero,
    #[error("vector population is not centered")]
    NotCentered,
    #[error("matrix population does not sum to zero or is not symmetric")]
    NotCenteredMatrices,
    #[error("leverage scores are constant after projection; worst-case residual undefined")]
    DegenerateLeverages,
    #[error("invalid specification: {0}")]
    InvalidSpec(&'static str),
}
