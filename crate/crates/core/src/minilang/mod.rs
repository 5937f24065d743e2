//! MiniLang: a tiny deterministic imperative language with built-in
//! instrumentation hooks (`probe` and `check`).
//!
//! The grammar is documented in `docs/minilang.md` at the repository root.

mod ast;
mod interp;
mod lexer;
mod parser;
mod trace;

pub use ast::{
    stmt_kind_set, BinOp, Expr, Function, Global, KindSet, Program, Slot, StatementKind, Stmt, StmtId, StmtKind,
    UnOp,
};
pub use interp::{run, Interpreter, DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH};
pub use parser::parse;
pub use trace::{Event, EventKind, EventSink, NullSink, RuntimeError, Scope, Trace, Value};

/// Errors raised while turning source text into a [`Program`].
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SourceError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse { line: u32, column: u32, message: String },
    #[error("unresolved identifier `{identifier}` at {line}:{column}")]
    Resolve { identifier: String, line: u32, column: u32 },
}
