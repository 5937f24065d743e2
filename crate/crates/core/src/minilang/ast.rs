use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::trace::Value;

/// Stable statement label.
///
/// Subject statements are numbered `L1, L2, ...` in program-wide pre-order,
/// skipping checker statements, so inserting probes and checks into a buggy
/// version never shifts the labels shared with its fixed counterpart.
/// Checker statements and everything inside a check block are numbered
/// separately as `X1, X2, ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StmtId {
    Line(u32),
    Checker(u32),
}

impl StmtId {
    pub fn is_checker(&self) -> bool {
        matches!(self, StmtId::Checker(_))
    }
}

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StmtId::Line(n) => write!(f, "L{n}"),
            StmtId::Checker(n) => write!(f, "X{n}"),
        }
    }
}

impl FromStr for StmtId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (ctor, digits): (fn(u32) -> StmtId, &str) = if let Some(rest) = s.strip_prefix('L') {
            (StmtId::Line, rest)
        } else if let Some(rest) = s.strip_prefix('X') {
            (StmtId::Checker, rest)
        } else {
            return Err(format!("bad statement label `{s}`"));
        };
        digits
            .parse::<u32>()
            .ok()
            .filter(|n| *n > 0)
            .map(ctor)
            .ok_or_else(|| format!("bad statement label `{s}`"))
    }
}

/// Statement categories tracked by the propagation profiler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatementKind {
    Conditional,
    Modulo,
    Multiplication,
    Division,
    Invocation,
}

impl StatementKind {
    pub const ALL: [StatementKind; 5] = [
        StatementKind::Conditional,
        StatementKind::Modulo,
        StatementKind::Multiplication,
        StatementKind::Division,
        StatementKind::Invocation,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn name(self) -> &'static str {
        match self {
            StatementKind::Conditional => "conditional",
            StatementKind::Modulo => "modulo",
            StatementKind::Multiplication => "multiplication",
            StatementKind::Division => "division",
            StatementKind::Invocation => "invocation",
        }
    }
}

/// A set of [`StatementKind`]s; one statement may belong to several.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct KindSet(u8);

impl KindSet {
    pub const EMPTY: KindSet = KindSet(0);

    pub fn insert(&mut self, kind: StatementKind) {
        self.0 |= kind.bit();
    }

    pub fn contains(&self, kind: StatementKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = StatementKind> + '_ {
        StatementKind::ALL.into_iter().filter(|k| self.contains(*k))
    }
}

impl FromIterator<StatementKind> for KindSet {
    fn from_iter<I: IntoIterator<Item = StatementKind>>(iter: I) -> Self {
        let mut set = KindSet::EMPTY;
        for kind in iter {
            set.insert(kind);
        }
        set
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

/// A resolved variable reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Local(usize),
    Global(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var { name: Arc<str>, slot: Slot },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call { func: usize, name: Arc<str>, args: Vec<Expr> },
}

impl Expr {
    pub(crate) fn collect_kinds(&self, set: &mut KindSet) {
        match self {
            Expr::Lit(_) | Expr::Var { .. } => {}
            Expr::Unary(_, e) => e.collect_kinds(set),
            Expr::Binary(op, l, r) => {
                match op {
                    BinOp::Mul => set.insert(StatementKind::Multiplication),
                    BinOp::Div => set.insert(StatementKind::Division),
                    BinOp::Rem => set.insert(StatementKind::Modulo),
                    _ => {}
                }
                l.collect_kinds(set);
                r.collect_kinds(set);
            }
            Expr::Call { args, .. } => {
                set.insert(StatementKind::Invocation);
                for a in args {
                    a.collect_kinds(set);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    /// `let x = e;` or `x = e;`
    Assign { name: Arc<str>, slot: Slot, expr: Expr, is_let: bool },
    If { cond: Expr, then_body: Vec<Stmt>, else_branch: Option<Box<Stmt>> },
    /// A plain `else { ... }` block; an `else if` is represented by the nested `If`.
    Else { body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    ExprStmt(Expr),
    Output(Expr),
    Probe { label: Arc<str> },
    Check { label: Arc<str>, block: Vec<Stmt>, cond: Expr },
}

impl StmtKind {
    pub fn name(&self) -> &'static str {
        match self {
            StmtKind::Assign { .. } => "assign",
            StmtKind::If { .. } => "if",
            StmtKind::Else { .. } => "else",
            StmtKind::While { .. } => "while",
            StmtKind::Return(_) => "return",
            StmtKind::ExprStmt(_) => "expr-stmt",
            StmtKind::Output(_) => "output",
            StmtKind::Probe { .. } => "probe",
            StmtKind::Check { .. } => "check",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub id: StmtId,
    pub line: u32,
    pub kinds: KindSet,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub name: Arc<str>,
    pub params: Vec<Arc<str>>,
    pub body: Vec<Stmt>,
    /// Number of local slots (parameters first).
    pub frame_size: usize,
}

impl Function {
    /// This function's statements in pre-order, checker statements included.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Global {
    pub name: Arc<str>,
    pub init: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub functions: Vec<Function>,
    pub globals: Vec<Global>,
    pub entry: usize,
    index: HashMap<Arc<str>, usize>,
}

impl Program {
    pub(crate) fn new(functions: Vec<Function>, globals: Vec<Global>, entry: usize) -> Self {
        let index = functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        Program { functions, globals, entry, index }
    }

    pub fn entry_fn(&self) -> &Function {
        &self.functions[self.entry]
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.index.get(name).map(|&i| &self.functions[i])
    }

    /// Every statement in pre-order, checker statements included.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for f in &self.functions {
            walk(&f.body, &mut out);
        }
        out
    }

    /// Subject (non-checker) statements ordered by label.
    pub fn subject_statements(&self) -> Vec<&Stmt> {
        let mut stmts: Vec<&Stmt> = self
            .statements()
            .into_iter()
            .filter(|s| !s.id.is_checker())
            .collect();
        stmts.sort_by_key(|s| s.id);
        stmts
    }

    pub fn statement(&self, id: StmtId) -> Option<&Stmt> {
        self.statements().into_iter().find(|s| s.id == id)
    }

    pub fn probe_labels(&self) -> Vec<&str> {
        self.statements()
            .into_iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Probe { label } => Some(&**label),
                _ => None,
            })
            .collect()
    }

    pub fn check_labels(&self) -> Vec<&str> {
        self.statements()
            .into_iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Check { label, .. } => Some(&**label),
                _ => None,
            })
            .collect()
    }
}

fn walk<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
    for s in stmts {
        out.push(s);
        match &s.kind {
            StmtKind::If { then_body, else_branch, .. } => {
                walk(then_body, out);
                if let Some(e) = else_branch {
                    walk(std::slice::from_ref(e), out);
                }
            }
            StmtKind::Else { body } | StmtKind::While { body, .. } => walk(body, out),
            StmtKind::Check { block, .. } => walk(block, out),
            _ => {}
        }
    }
}

/// Kind-set of a statement, computed from its own expressions only.
pub fn stmt_kind_set(stmt: &Stmt) -> KindSet {
    stmt.kinds
}
