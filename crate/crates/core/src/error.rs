use thiserror::Error;

use crate::metrics::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("infeasible: {context}: max flow reached {achieved} of required {required}")]
    Infeasible {
        context: String,
        required: usize,
        achieved: usize,
    },

    #[error("assignment violates {} constraint(s): {}", .0.len(), join_violations(.0))]
    Violations(Vec<Violation>),

    #[error("oracle too large: {0}")]
    OracleBudget(String),

    #[error("duplicate edge between reviewer {reviewer} and paper {paper}")]
    DuplicateEdge { reviewer: usize, paper: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn with_context(self, ctx: &str) -> Self {
        match self {
            Error::Infeasible {
                context,
                required,
                achieved,
            } => Error::Infeasible {
                context: format!("{ctx}: {context}"),
                required,
                achieved,
            },
            other => other,
        }
    }
}
