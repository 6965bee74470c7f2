use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate triple: points {0} and {1} coincide")]
    DegenerateTriple(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("curve is not simple: segment {0} meets segment {1}")]
    SelfIntersection(usize, usize),
    #[error("tip left the upper half-plane at point {index} (Im = {imag:e})")]
    TipLeftHalfPlane { index: usize, imag: f64 },
    #[error("branch violation in {map}: argument {re:e}{im:+e}i on the cut")]
    BranchViolation { map: &'static str, re: f64, im: f64 },
    #[error("chart failure: {0}")]
    Chart(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DegenerateTriple(..) | Error::InvalidInput(_) | Error::Schema { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
