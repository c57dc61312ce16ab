use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resource limit: {what} needs {requested} but the cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("root is not kept; restricted subgraph would be empty")]
    EmptyResult,
    #[error("subgroup oracle cannot decide membership: {0}")]
    Undecidable(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("transition matrix is not reversible: pi(x)P(x,y) - pi(y)P(y,x) = {defect:e} at ({x}, {y})")]
    Reversibility { x: usize, y: usize, defect: f64 },
    #[error("division by zero: f~_k vanishes at point {point}")]
    DivisionByZero { point: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bracket lost at p = {p}: {message}")]
    BracketLost { p: f64, message: String },
    #[error("connectivity estimate is zero at every distance of the grid")]
    ZeroConnectivity,
}

pub type Result<T> = std::result::Result<T, Error>;
