use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The data cannot support the requested computation (e.g. a single-class
    /// dataset passed to a classifier trainer or a stratified splitter).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A metric has no defined value on the given inputs.
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// The classifier alone does not fit in the requested bit budget.
    #[error("budget of {budget_bits} bits cannot fit classifier occupying {classifier_bits} bits")]
    BudgetExceeded {
        budget_bits: u64,
        classifier_bits: u64,
    },

    /// No candidate configuration in a construction search was buildable.
    #[error("no feasible configuration: {0}")]
    Infeasible(String),

    /// Rejection sampling exhausted its draw cap before producing the
    /// requested number of samples.
    #[error(
        "sampling cap of {cap} draws exhausted after producing {produced} of {requested} samples"
    )]
    SamplingExhausted {
        produced: u64,
        requested: u64,
        cap: u64,
    },

    /// Malformed textual input (CSV rows, k-mer lines); `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed binary input (bad magic, unsupported version, truncation).
    #[error("bad format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
