use thiserror::Error;

/// Crate-wide error type. Variants are grouped roughly by the layer that
/// raises them: input parsing and validation, model construction, and the
/// mechanisms themselves.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed number `{0}`: expected an integer, a decimal, or `p/q`")]
    MalformedNumber(String),

    #[error("agent `{agent}`: breakpoints must increase strictly")]
    NonIncreasingBreakpoints { agent: String },

    #[error("agent `{agent}`: breakpoints must start at 0 and end at 1")]
    BreakpointsNotSpanning { agent: String },

    #[error("agent `{agent}`: density values must be non-negative")]
    NegativeValue { agent: String },

    #[error("agent `{agent}`: density is zero everywhere")]
    AllZeroDensity { agent: String },

    #[error("profile contains no agents")]
    EmptyProfile,

    #[error("duplicate agent name `{0}`")]
    DuplicateAgentName(String),

    #[error("document is not valid: {0}")]
    InvalidDocument(String),

    #[error("no agent desires any part of the cake")]
    NothingDesired,

    #[error("cell {cell}: assigned fractions sum past 1 or fall below 0")]
    FractionOverflow { cell: usize },

    #[error("requested length {requested} exceeds available cake {available}")]
    InsufficientCake { requested: String, available: String },

    #[error("{n} agents exceed the exact-enumeration cap of {cap}; use sampling")]
    TooManyAgents { n: usize, cap: usize },

    #[error("equilibrium solver stalled above residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("agent `{0}` cannot reach positive utility on this cake")]
    DegenerateAgent(String),

    #[error("search space of {space} candidate reports exceeds the budget of {budget}")]
    BudgetExceeded { space: usize, budget: usize },

    #[error("infeasible input: {0}")]
    InfeasibleInput(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
