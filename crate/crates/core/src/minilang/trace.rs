//! Runtime values and the event stream produced by one run.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ast::{KindSet, StmtId};

/// A MiniLang runtime value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

/// Where an assigned variable lives: a function frame or the global store.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Global,
    Local(Arc<str>),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Local(func) => f.write_str(func),
        }
    }
}

/// Reasons a run can stop abnormally.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulo by zero")]
    ModuloByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("step budget of {0} exhausted")]
    StepBudgetExhausted(u64),
    #[error("call depth limit of {0} exceeded")]
    CallDepthExceeded(usize),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("variable `{0}` read before assignment")]
    Uninitialized(String),
    #[error("function `{0}` returned no value")]
    VoidValue(String),
    #[error("function `{func}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        func: String,
        expected: usize,
        got: usize,
    },
    #[error("in checker `{label}`: {inner}")]
    InChecker {
        label: String,
        inner: Box<RuntimeError>,
    },
}

impl RuntimeError {
    pub fn is_nontermination(&self) -> bool {
        match self {
            RuntimeError::StepBudgetExhausted(_) => true,
            RuntimeError::InChecker { inner, .. } => inner.is_nontermination(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    StmtExec { stmt: StmtId, kinds: KindSet },
    Assign { scope: Scope, var: Arc<str>, value: Value },
    Call { callee: Arc<str>, activation: u32 },
    Return { activation: u32, value: Option<Value> },
    ProbeFired { label: Arc<str> },
    CheckFired { label: Arc<str> },
    Output { value: Value },
    RuntimeError { reason: RuntimeError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub kind: EventKind,
}

/// Observer notified of every event as it is recorded.
pub trait EventSink {
    fn on_event(&mut self, event: &Event);
}

impl<F: FnMut(&Event)> EventSink for F {
    fn on_event(&mut self, event: &Event) {
        self(event)
    }
}

/// Sink that ignores everything.
pub struct NullSink;

impl EventSink for NullSink {
    fn on_event(&mut self, _event: &Event) {}
}

/// The complete record of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    pub output: Vec<Value>,
    pub terminated_ok: bool,
}

impl Trace {
    pub fn error(&self) -> Option<&RuntimeError> {
        match self.events.last().map(|e| &e.kind) {
            Some(EventKind::RuntimeError { reason }) => Some(reason),
            _ => None,
        }
    }

    pub fn probe_count(&self, labels: &[String]) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(&e.kind, EventKind::ProbeFired { label } if labels.iter().any(|l| **l == **label)))
            .count()
    }

    pub fn check_count(&self, labels: &[String]) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(&e.kind, EventKind::CheckFired { label } if labels.iter().any(|l| **l == **label)))
            .count()
    }

    /// Whether `func` was activated at all during the run.
    pub fn calls(&self, func: &str) -> bool {
        self.events
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Call { callee, .. } if &**callee == func))
    }
}
