//! Value-function language: `+ - * /` over numeric literals and the eight
//! registered route components.
//!
//! `Synth()` is the negated remaining synthesis cost of the open molecules,
//! so larger is better and the planner maximizes.

mod ast;
mod eval;
mod parser;

pub use ast::{render_vf, BinOp, Component, Expr, ValueFunctionAst};
pub use eval::{breakdown, component_value, evaluate_vf, Breakdown, ComponentValue, RouteState};
pub use parser::parse_vf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VfError {
    #[error("syntax error at {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("unknown component {0:?}")]
    UnknownComponent(String),
    #[error("operator {0:?} is not allowed")]
    ForbiddenOperator(String),
    #[error("bad argument {argument:?} to {component}: {reason}")]
    BadArgument { component: String, argument: String, reason: String },
    #[error("division by zero")]
    DivisionByZero,
}

impl VfError {
    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> Self {
        VfError::SyntaxError { position, message: message.into() }
    }
}

/// The default guidance expression.
pub fn default_vf() -> Expr {
    Expr::Call(Component::Synth)
}
