use thiserror::Error;

/// Failures of expression parsing and scalar arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("exponent at position {position} is not a non-negative integer")]
    BadExponent { position: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator vanishes at the evaluation point")]
    Pole,
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
}

/// Failures of the geometric layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("chart dimension {0} is not an even integer between 4 and 8")]
    Dimension(usize),
    #[error("expected {expected} coordinate names, got {found}")]
    CoordinateCount { expected: usize, found: usize },
    #[error("tensor shape mismatch: {0}")]
    Shape(String),
    #[error("variance mismatch: {0}")]
    Variance(String),
    #[error("{0} is not antisymmetric")]
    NotSkew(String),
    #[error("{0} is not symmetric")]
    NotSymmetric(String),
    #[error("{0} is singular")]
    Singular(String),
    #[error("connection is not torsion-free at component {0}")]
    Torsion(String),
    #[error("equation `{equation}` fails: {witness}")]
    Equation { equation: String, witness: String },
    #[error("alpha is not exact with this potential: {0}")]
    GaugeMismatch(String),
    #[error("odd power of the conformal factor requested (weight {0})")]
    OddWeight(i32),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
