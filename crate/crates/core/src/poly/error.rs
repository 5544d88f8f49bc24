use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("zero denominator in rational literal at byte {pos}")]
    ZeroDenominator { pos: usize },
    #[error("no value assigned to variable `{0}`")]
    MissingAssignment(String),
    #[error("Gröbner computation exceeded the step limit of {0} S-pair reductions")]
    StepLimitExceeded(usize),
    #[error("Gröbner computation cancelled")]
    Cancelled,
}
