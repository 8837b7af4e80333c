use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} needs {required} enumerated outcomes, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u64,
    },

    #[error("input law depends on the source; use the joint density spectrum instead")]
    JointRequired,

    #[error("the converse condition needs an encoder-induced input law")]
    NonEncoderInput,

    #[error("model has no law defined at blocklength {0}")]
    MissingBlocklength(usize),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
