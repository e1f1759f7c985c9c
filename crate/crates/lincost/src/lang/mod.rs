//! The analyzed language: syntax, let-normal form, evaluation and base types.

mod ast;
mod eval;
mod normalize;
mod parser;
mod pretty;
mod types;

pub use ast::{name, Expr, Item, Name, Program};
pub use eval::{parse_value, evaluate, evaluate_with_cost, load, Closure, Env, EvalError, Evaluator, Loaded, Value, DEFAULT_STEP_BUDGET};
pub use normalize::{let_normalize, normalize_program};
pub use parser::{parse, parse_program, ParseError};
pub use pretty::{pretty, pretty_program};
pub use types::{typecheck, typecheck_program, Ty, TypeError, Typing};

pub use crate::mapinfer::{check_wf, check_wf_with};
