use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument {arg} outside the domain ({requirement})")]
    Domain {
        function: &'static str,
        arg: f64,
        requirement: &'static str,
    },

    #[error("evaluation point ({x:.6}, {y:.6}) coincides with a line source")]
    Singular { x: f64, y: f64 },

    #[error("length mismatch: {what} (expected {expected}, got {actual})")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("mode order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("solver diverged after {iterations} iterations (residual {residual:.3e}, observation {observation:.3e})")]
    Divergence {
        iterations: usize,
        residual: f64,
        observation: f64,
    },

    #[error("linear solve failed at iteration {iteration}: system is not positive definite")]
    LinearSolve { iteration: usize },

    #[error("undefined input: {0}")]
    Undefined(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
