//! Deterministic tree-walking interpreter that records an event per
//! observable action.
//!
//! Checker statements never show up as `StmtExec`/`Assign`: a `check`
//! block runs silently against a copy of the frame and global store, and
//! only its verdict is recorded as `CheckFired`.

use std::sync::Arc;

use super::ast::{BinOp, Expr, Function, Program, Slot, Stmt, StmtKind, UnOp};
use super::trace::{Event, EventKind, EventSink, NullSink, RuntimeError, Scope, Trace, Value};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
pub const MAX_CALL_DEPTH: usize = 1_000;

// Each MiniLang call nests several native frames; runs get their own thread
// with a stack large enough for MAX_CALL_DEPTH in unoptimized builds.
const RUN_STACK_BYTES: usize = 64 * 1024 * 1024;

/// Runs programs under a step budget.
#[derive(Clone, Copy, Debug)]
pub struct Interpreter {
    budget: u64,
}

impl Default for Interpreter {
    fn default() -> Self {
        Interpreter { budget: DEFAULT_STEP_BUDGET }
    }
}

impl Interpreter {
    pub fn with_budget(budget: u64) -> Self {
        Interpreter { budget: budget.max(1) }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn run(&self, program: &Program, args: &[Value]) -> Trace {
        self.run_with_sink(program, args, &mut NullSink)
    }

    pub fn run_with_sink(&self, program: &Program, args: &[Value], sink: &mut (dyn EventSink + Send)) -> Trace {
        std::thread::scope(|scope| {
            std::thread::Builder::new()
                .name("minilang-run".into())
                .stack_size(RUN_STACK_BYTES)
                .spawn_scoped(scope, || self.run_inline(program, args, sink))
                .expect("failed to spawn interpreter thread")
                .join()
                .unwrap_or_else(|panic| std::panic::resume_unwind(panic))
        })
    }

    fn run_inline(&self, program: &Program, args: &[Value], sink: &mut (dyn EventSink + Send)) -> Trace {
        let mut m = Machine {
            program,
            sink,
            events: Vec::new(),
            output: Vec::new(),
            globals: program.globals.iter().map(|g| Some(g.init)).collect(),
            steps: 0,
            budget: self.budget,
            silent: false,
            next_activation: 0,
            depth: 0,
        };
        let entry = program.entry_fn();
        let result = if entry.params.len() != args.len() {
            Err(RuntimeError::ArityMismatch {
                func: entry.name.to_string(),
                expected: entry.params.len(),
                got: args.len(),
            })
        } else {
            m.call(program.entry, args.to_vec())
        };
        let terminated_ok = match result {
            Ok(Some(v)) => {
                m.emit(EventKind::Output { value: v });
                true
            }
            Ok(None) => true,
            Err(reason) => {
                m.emit(EventKind::RuntimeError { reason });
                false
            }
        };
        Trace { events: m.events, output: m.output, terminated_ok }
    }
}

/// Convenience wrapper with the default budget.
pub fn run(program: &Program, args: &[Value]) -> Trace {
    Interpreter::default().run(program, args)
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

struct Machine<'p, 's> {
    program: &'p Program,
    sink: &'s mut (dyn EventSink + Send),
    events: Vec<Event>,
    output: Vec<Value>,
    globals: Vec<Option<Value>>,
    steps: u64,
    budget: u64,
    silent: bool,
    next_activation: u32,
    depth: usize,
}

type Exec<T> = Result<T, RuntimeError>;

impl<'p> Machine<'p, '_> {
    fn emit(&mut self, kind: EventKind) {
        if self.silent {
            return;
        }
        if let EventKind::Output { value } = &kind {
            self.output.push(*value);
        }
        let event = Event { seq: self.events.len() as u64, kind };
        self.sink.on_event(&event);
        self.events.push(event);
    }

    fn step(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(RuntimeError::StepBudgetExhausted(self.budget))
        } else {
            Ok(())
        }
    }

    fn call(&mut self, func_idx: usize, args: Vec<Value>) -> Exec<Option<Value>> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(RuntimeError::CallDepthExceeded(MAX_CALL_DEPTH));
        }
        let program = self.program;
        let func = &program.functions[func_idx];
        let activation = self.next_activation;
        if !self.silent {
            self.next_activation += 1;
        }
        self.emit(EventKind::Call { callee: func.name.clone(), activation });
        let mut frame: Vec<Option<Value>> = vec![None; func.frame_size];
        for (slot, v) in args.into_iter().enumerate() {
            frame[slot] = Some(v);
        }
        self.depth += 1;
        let flow = self.block(func, &func.body, &mut frame);
        self.depth -= 1;
        let value = match flow? {
            Flow::Return(v) => v,
            Flow::Normal => None,
        };
        self.emit(EventKind::Return { activation, value });
        Ok(value)
    }

    fn block(&mut self, func: &'p Function, stmts: &'p [Stmt], frame: &mut Vec<Option<Value>>) -> Exec<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(func, s, frame)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_mark(&mut self, s: &Stmt) -> Exec<()> {
        self.step()?;
        self.emit(EventKind::StmtExec { stmt: s.id, kinds: s.kinds });
        Ok(())
    }

    fn stmt(&mut self, func: &'p Function, s: &'p Stmt, frame: &mut Vec<Option<Value>>) -> Exec<Flow> {
        match &s.kind {
            StmtKind::Assign { name, slot, expr, .. } => {
                self.exec_mark(s)?;
                let v = self.eval(func, expr, frame)?;
                let scope = match slot {
                    Slot::Local(i) => {
                        frame[*i] = Some(v);
                        Scope::Local(func.name.clone())
                    }
                    Slot::Global(g) => {
                        self.globals[*g] = Some(v);
                        Scope::Global
                    }
                };
                self.emit(EventKind::Assign { scope, var: name.clone(), value: v });
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then_body, else_branch } => {
                self.exec_mark(s)?;
                if self.eval_bool(func, cond, frame)? {
                    self.block(func, then_body, frame)
                } else if let Some(e) = else_branch {
                    self.stmt(func, e, frame)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::Else { body } => {
                self.exec_mark(s)?;
                self.block(func, body, frame)
            }
            StmtKind::While { cond, body } => loop {
                self.exec_mark(s)?;
                if !self.eval_bool(func, cond, frame)? {
                    return Ok(Flow::Normal);
                }
                if let Flow::Return(v) = self.block(func, body, frame)? {
                    return Ok(Flow::Return(v));
                }
            },
            StmtKind::Return(e) => {
                self.exec_mark(s)?;
                let v = match e {
                    Some(e) => Some(self.eval(func, e, frame)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::ExprStmt(e) => {
                self.exec_mark(s)?;
                match e {
                    Expr::Call { func: callee, args, .. } => {
                        let args = self.eval_args(func, args, frame)?;
                        self.call(*callee, args)?;
                    }
                    other => {
                        self.eval(func, other, frame)?;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Output(e) => {
                self.exec_mark(s)?;
                let v = self.eval(func, e, frame)?;
                self.emit(EventKind::Output { value: v });
                Ok(Flow::Normal)
            }
            StmtKind::Probe { label } => {
                self.emit(EventKind::ProbeFired { label: label.clone() });
                Ok(Flow::Normal)
            }
            StmtKind::Check { label, block, cond } => {
                if self.silent {
                    return Ok(Flow::Normal);
                }
                if self.run_check(func, block, cond, frame).map_err(|inner| wrap_checker(label, inner))? {
                    self.emit(EventKind::CheckFired { label: label.clone() });
                }
                Ok(Flow::Normal)
            }
        }
    }

    /// Evaluates a check block against snapshots of the frame and globals.
    fn run_check(
        &mut self,
        func: &'p Function,
        block: &'p [Stmt],
        cond: &'p Expr,
        frame: &[Option<Value>],
    ) -> Exec<bool> {
        let mut snapshot = frame.to_vec();
        let saved_globals = self.globals.clone();
        let saved_steps = self.steps;
        self.silent = true;
        self.steps = 0;
        let verdict = match self.block(func, block, &mut snapshot) {
            Ok(_) => self.eval_bool(func, cond, &mut snapshot),
            Err(e) => Err(e),
        };
        self.silent = false;
        self.steps = saved_steps;
        self.globals = saved_globals;
        verdict
    }

    fn eval_args(&mut self, func: &'p Function, args: &'p [Expr], frame: &mut Vec<Option<Value>>) -> Exec<Vec<Value>> {
        args.iter().map(|a| self.eval(func, a, frame)).collect()
    }

    fn eval_bool(&mut self, func: &'p Function, e: &'p Expr, frame: &mut Vec<Option<Value>>) -> Exec<bool> {
        match self.eval(func, e, frame)? {
            Value::Bool(b) => Ok(b),
            other => Err(RuntimeError::TypeMismatch(format!("expected bool, found {}", other.type_name()))),
        }
    }

    fn eval_int(&mut self, func: &'p Function, e: &'p Expr, frame: &mut Vec<Option<Value>>) -> Exec<i64> {
        match self.eval(func, e, frame)? {
            Value::Int(i) => Ok(i),
            other => Err(RuntimeError::TypeMismatch(format!("expected int, found {}", other.type_name()))),
        }
    }

    fn eval(&mut self, func: &'p Function, e: &'p Expr, frame: &mut Vec<Option<Value>>) -> Exec<Value> {
        match e {
            Expr::Lit(v) => Ok(*v),
            Expr::Var { name, slot } => {
                let v = match slot {
                    Slot::Local(i) => frame[*i],
                    Slot::Global(g) => self.globals[*g],
                };
                v.ok_or_else(|| RuntimeError::Uninitialized(name.to_string()))
            }
            Expr::Unary(UnOp::Not, inner) => Ok(Value::Bool(!self.eval_bool(func, inner, frame)?)),
            Expr::Unary(UnOp::Neg, inner) => {
                let v = self.eval_int(func, inner, frame)?;
                v.checked_neg().map(Value::Int).ok_or(RuntimeError::Overflow)
            }
            Expr::Binary(BinOp::And, l, r) => {
                Ok(Value::Bool(self.eval_bool(func, l, frame)? && self.eval_bool(func, r, frame)?))
            }
            Expr::Binary(BinOp::Or, l, r) => {
                Ok(Value::Bool(self.eval_bool(func, l, frame)? || self.eval_bool(func, r, frame)?))
            }
            Expr::Binary(op @ (BinOp::Eq | BinOp::Ne), l, r) => {
                let lv = self.eval(func, l, frame)?;
                let rv = self.eval(func, r, frame)?;
                if std::mem::discriminant(&lv) != std::mem::discriminant(&rv) {
                    return Err(RuntimeError::TypeMismatch(format!(
                        "cannot compare {} with {}",
                        lv.type_name(),
                        rv.type_name()
                    )));
                }
                Ok(Value::Bool((lv == rv) == (*op == BinOp::Eq)))
            }
            Expr::Binary(op, l, r) => {
                let a = self.eval_int(func, l, frame)?;
                let b = self.eval_int(func, r, frame)?;
                arith(*op, a, b)
            }
            Expr::Call { func: callee, name, args } => {
                let args = self.eval_args(func, args, frame)?;
                self.call(*callee, args)?.ok_or_else(|| RuntimeError::VoidValue(name.to_string()))
            }
        }
    }
}

fn arith(op: BinOp, a: i64, b: i64) -> Exec<Value> {
    let int = |r: Option<i64>| r.map(Value::Int).ok_or(RuntimeError::Overflow);
    match op {
        BinOp::Add => int(a.checked_add(b)),
        BinOp::Sub => int(a.checked_sub(b)),
        BinOp::Mul => int(a.checked_mul(b)),
        BinOp::Div if b == 0 => Err(RuntimeError::DivisionByZero),
        BinOp::Div => int(a.checked_div(b)),
        BinOp::Rem if b == 0 => Err(RuntimeError::ModuloByZero),
        BinOp::Rem => int(a.checked_rem(b)),
        BinOp::Lt => Ok(Value::Bool(a < b)),
        BinOp::Le => Ok(Value::Bool(a <= b)),
        BinOp::Gt => Ok(Value::Bool(a > b)),
        BinOp::Ge => Ok(Value::Bool(a >= b)),
        BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne => unreachable!("handled by caller"),
    }
}

fn wrap_checker(label: &Arc<str>, inner: RuntimeError) -> RuntimeError {
    RuntimeError::InChecker { label: label.to_string(), inner: Box::new(inner) }
}
