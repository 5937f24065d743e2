//! Recursive-descent parser and name resolver.
//!
//! Parsing produces an unresolved syntax tree; resolution then assigns
//! statement labels, local slots and call targets in one pre-order walk.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::ast::{BinOp, Expr, Function, Global, KindSet, Program, Slot, StatementKind, Stmt, StmtId, StmtKind, UnOp};
use super::lexer::{tokenize, Tok, Token};
use super::trace::Value;
use super::SourceError;

#[derive(Debug)]
struct Pos {
    line: u32,
    col: u32,
}

#[derive(Debug)]
enum RawExpr {
    Lit(Value),
    Var(String, Pos),
    Unary(UnOp, Box<RawExpr>),
    Binary(BinOp, Box<RawExpr>, Box<RawExpr>),
    Call(String, Vec<RawExpr>, Pos),
}

#[derive(Debug)]
enum RawStmtKind {
    Let(String, RawExpr),
    Assign(String, RawExpr),
    If(RawExpr, Vec<RawStmt>, Option<Box<RawStmt>>),
    Else(Vec<RawStmt>),
    While(RawExpr, Vec<RawStmt>),
    Return(Option<RawExpr>),
    ExprStmt(RawExpr),
    Output(RawExpr),
    Probe(String),
    Check(String, Vec<RawStmt>, RawExpr),
}

#[derive(Debug)]
struct RawStmt {
    pos: Pos,
    kind: RawStmtKind,
}

struct RawFunction {
    name: String,
    params: Vec<String>,
    body: Vec<RawStmt>,
    pos: Pos,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, SourceError>;

const KEYWORDS: [&str; 15] = [
    "fn", "let", "if", "else", "while", "return", "output", "probe", "check", "when", "call",
    "global", "entry", "true", "false",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        let t = &self.toks[self.at];
        Pos { line: t.line, col: t.col }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.at];
        Err(SourceError::Parse { line: t.line, column: t.col, message: message.into() })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", Self::describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", Self::describe(&other))),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected string label, found {}", Self::describe(&other))),
        }
    }

    fn block(&mut self) -> PResult<Vec<RawStmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error("unexpected end of input inside block");
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn statement(&mut self) -> PResult<RawStmt> {
        let pos = self.pos();
        let kind = if self.is_kw("let") {
            self.bump();
            let name = self.ident()?;
            self.expect_punct("=")?;
            let e = self.expr()?;
            self.expect_punct(";")?;
            RawStmtKind::Let(name, e)
        } else if self.is_kw("if") {
            return self.if_statement();
        } else if self.is_kw("while") {
            self.bump();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            RawStmtKind::While(cond, self.block()?)
        } else if self.is_kw("return") {
            self.bump();
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            RawStmtKind::Return(value)
        } else if self.is_kw("output") {
            self.bump();
            self.expect_punct("(")?;
            let e = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            RawStmtKind::Output(e)
        } else if self.is_kw("probe") {
            self.bump();
            let label = self.string()?;
            self.expect_punct(";")?;
            RawStmtKind::Probe(label)
        } else if self.is_kw("check") {
            self.bump();
            let label = self.string()?;
            let block = self.block()?;
            self.expect_kw("when")?;
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            RawStmtKind::Check(label, block, cond)
        } else if matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
            && matches!(self.peek_at(1), Tok::Punct("="))
        {
            let name = self.ident()?;
            self.bump();
            let e = self.expr()?;
            self.expect_punct(";")?;
            RawStmtKind::Assign(name, e)
        } else {
            let e = self.expr()?;
            self.expect_punct(";")?;
            RawStmtKind::ExprStmt(e)
        };
        Ok(RawStmt { pos, kind })
    }

    fn if_statement(&mut self) -> PResult<RawStmt> {
        let pos = self.pos();
        self.expect_kw("if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_body = self.block()?;
        let else_branch = if self.is_kw("else") {
            let else_pos = self.pos();
            self.bump();
            if self.is_kw("if") {
                Some(Box::new(self.if_statement()?))
            } else {
                let body = self.block()?;
                Some(Box::new(RawStmt { pos: else_pos, kind: RawStmtKind::Else(body) }))
            }
        } else {
            None
        };
        Ok(RawStmt { pos, kind: RawStmtKind::If(cond, then_body, else_branch) })
    }

    fn expr(&mut self) -> PResult<RawExpr> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<RawExpr> {
        const LEVELS: [&[(&str, BinOp)]; 6] = [
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("<", BinOp::Lt), ("<=", BinOp::Le), (">", BinOp::Gt), (">=", BinOp::Ge)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = LEVELS[level]
                .iter()
                .find(|(sym, _)| self.is_punct(sym))
                .map(|(_, op)| *op);
            match op {
                Some(op) => {
                    self.bump();
                    let rhs = self.binary(level + 1)?;
                    lhs = RawExpr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
                None => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<RawExpr> {
        if self.is_punct("!") {
            self.bump();
            return Ok(RawExpr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.is_punct("-") {
            self.bump();
            // Fold negative literals so i64::MIN is expressible.
            if let Tok::Int(_) = self.peek() {
                if let Tok::Int(v) = self.bump() {
                    return Ok(RawExpr::Lit(Value::Int(-v)));
                }
            }
            return Ok(RawExpr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<RawExpr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(RawExpr::Lit(Value::Int(v)))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(RawExpr::Lit(Value::Bool(s == "true")))
            }
            Tok::Ident(s) if s == "call" => {
                self.bump();
                let pos = self.pos();
                let name = self.ident()?;
                self.call_args(name, pos)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_punct("(") {
                    self.call_args(name, pos)
                } else {
                    Ok(RawExpr::Var(name, pos))
                }
            }
            other => self.error(format!("expected expression, found {}", Self::describe(&other))),
        }
    }

    fn call_args(&mut self, name: String, pos: Pos) -> PResult<RawExpr> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(RawExpr::Call(name, args, pos))
    }

    fn literal(&mut self) -> PResult<Value> {
        match self.primary_literal()? {
            Some(v) => Ok(v),
            None => self.error("expected integer or boolean literal"),
        }
    }

    fn primary_literal(&mut self) -> PResult<Option<Value>> {
        let neg = if self.is_punct("-") {
            self.bump();
            true
        } else {
            false
        };
        let v = match self.peek().clone() {
            Tok::Int(v) => Some(Value::Int(if neg { -v } else { v })),
            Tok::Ident(s) if !neg && (s == "true" || s == "false") => Some(Value::Bool(s == "true")),
            _ => None,
        };
        if v.is_some() {
            self.bump();
        }
        Ok(v)
    }
}

/// Parse and resolve a MiniLang source file.
pub fn parse(source: &str) -> Result<Program, SourceError> {
    let mut p = Parser { toks: tokenize(source)?, at: 0 };
    let mut functions = Vec::new();
    let mut globals: Vec<(String, Value, Pos)> = Vec::new();
    let mut entry: Option<(String, Pos)> = None;

    loop {
        if matches!(p.peek(), Tok::Eof) {
            break;
        }
        let pos = p.pos();
        if p.is_kw("fn") {
            p.bump();
            let name = p.ident()?;
            p.expect_punct("(")?;
            let mut params = Vec::new();
            if !p.is_punct(")") {
                loop {
                    params.push(p.ident()?);
                    if p.is_punct(",") {
                        p.bump();
                    } else {
                        break;
                    }
                }
            }
            p.expect_punct(")")?;
            let body = p.block()?;
            functions.push(RawFunction { name, params, body, pos });
        } else if p.is_kw("global") {
            p.bump();
            let name = p.ident()?;
            p.expect_punct("=")?;
            let value = p.literal()?;
            p.expect_punct(";")?;
            globals.push((name, value, pos));
        } else if p.is_kw("entry") {
            p.bump();
            let name = p.ident()?;
            p.expect_punct(";")?;
            if entry.is_some() {
                return Err(SourceError::Parse {
                    line: pos.line,
                    column: pos.col,
                    message: "duplicate entry directive".into(),
                });
            }
            entry = Some((name, pos));
        } else {
            return p.error(format!(
                "expected `fn`, `global` or `entry`, found {}",
                Parser::describe(p.peek())
            ));
        }
    }

    Resolver::resolve(functions, globals, entry)
}

struct Resolver {
    fn_index: HashMap<String, (usize, usize)>,
    global_index: HashMap<String, usize>,
    next_line: u32,
    next_checker: u32,
}

struct FrameScope {
    locals: HashMap<String, usize>,
    declared: HashSet<String>,
    size: usize,
}

impl Resolver {
    fn resolve(
        raw: Vec<RawFunction>,
        raw_globals: Vec<(String, Value, Pos)>,
        entry: Option<(String, Pos)>,
    ) -> Result<Program, SourceError> {
        let mut fn_index = HashMap::new();
        for (i, f) in raw.iter().enumerate() {
            if fn_index.insert(f.name.clone(), (i, f.params.len())).is_some() {
                return Err(SourceError::Parse {
                    line: f.pos.line,
                    column: f.pos.col,
                    message: format!("duplicate function `{}`", f.name),
                });
            }
            let mut seen = HashSet::new();
            for p in &f.params {
                if !seen.insert(p) {
                    return Err(SourceError::Parse {
                        line: f.pos.line,
                        column: f.pos.col,
                        message: format!("duplicate parameter `{p}` in `{}`", f.name),
                    });
                }
            }
        }
        let mut global_index = HashMap::new();
        let mut globals = Vec::new();
        for (name, init, pos) in raw_globals {
            if global_index.insert(name.clone(), globals.len()).is_some() {
                return Err(SourceError::Parse {
                    line: pos.line,
                    column: pos.col,
                    message: format!("duplicate global `{name}`"),
                });
            }
            globals.push(Global { name: name.into(), init });
        }

        let entry_idx = match entry {
            Some((name, pos)) => match fn_index.get(&name) {
                Some(&(i, _)) => i,
                None => {
                    return Err(SourceError::Resolve {
                        identifier: name,
                        line: pos.line,
                        column: pos.col,
                    })
                }
            },
            None => match fn_index.get("main") {
                Some(&(i, _)) => i,
                None if raw.len() == 1 => 0,
                None => {
                    return Err(SourceError::Parse {
                        line: 1,
                        column: 1,
                        message: "no entry function (declare `main` or use `entry NAME;`)".into(),
                    })
                }
            },
        };

        let mut r = Resolver { fn_index, global_index, next_line: 1, next_checker: 1 };
        let mut functions = Vec::with_capacity(raw.len());
        for f in raw {
            let name: Arc<str> = f.name.as_str().into();
            let mut scope = FrameScope {
                locals: HashMap::new(),
                declared: HashSet::new(),
                size: 0,
            };
            for p in &f.params {
                scope.locals.insert(p.clone(), scope.size);
                scope.declared.insert(p.clone());
                scope.size += 1;
            }
            let body = r.block(f.body, &mut scope, false)?;
            functions.push(Function {
                name,
                params: f.params.iter().map(|p| Arc::from(p.as_str())).collect(),
                body,
                frame_size: scope.size,
            });
        }
        Ok(Program::new(functions, globals, entry_idx))
    }

    fn block(&mut self, stmts: Vec<RawStmt>, scope: &mut FrameScope, in_check: bool) -> PResult<Vec<Stmt>> {
        stmts.into_iter().map(|s| self.stmt(s, scope, in_check)).collect()
    }

    fn next_id(&mut self, checker: bool) -> StmtId {
        if checker {
            self.next_checker += 1;
            StmtId::Checker(self.next_checker - 1)
        } else {
            self.next_line += 1;
            StmtId::Line(self.next_line - 1)
        }
    }

    fn stmt(&mut self, s: RawStmt, scope: &mut FrameScope, in_check: bool) -> PResult<Stmt> {
        let RawStmt { pos, kind } = s;
        let is_checker_stmt = matches!(kind, RawStmtKind::Probe(_) | RawStmtKind::Check(..));
        if in_check {
            let forbidden = match &kind {
                RawStmtKind::Probe(_) => Some("probe"),
                RawStmtKind::Check(..) => Some("check"),
                RawStmtKind::Output(_) => Some("output"),
                RawStmtKind::Return(_) => Some("return"),
                _ => None,
            };
            if let Some(what) = forbidden {
                return Err(SourceError::Parse {
                    line: pos.line,
                    column: pos.col,
                    message: format!("`{what}` is not allowed inside a check block"),
                });
            }
        }
        let id = self.next_id(in_check || is_checker_stmt);
        let kind = match kind {
            RawStmtKind::Let(name, e) => {
                let expr = self.expr(e, scope)?;
                let slot = match scope.locals.get(&name) {
                    Some(&i) => i,
                    None => {
                        scope.locals.insert(name.clone(), scope.size);
                        scope.size += 1;
                        scope.size - 1
                    }
                };
                scope.declared.insert(name.clone());
                StmtKind::Assign { name: name.into(), slot: Slot::Local(slot), expr, is_let: true }
            }
            RawStmtKind::Assign(name, e) => {
                let expr = self.expr(e, scope)?;
                let slot = self.lookup(&name, &pos, scope)?;
                StmtKind::Assign { name: name.into(), slot, expr, is_let: false }
            }
            RawStmtKind::If(cond, then_body, else_branch) => {
                let cond = self.expr(cond, scope)?;
                let then_body = self.block(then_body, scope, in_check)?;
                let else_branch = match else_branch {
                    Some(e) => Some(Box::new(self.stmt(*e, scope, in_check)?)),
                    None => None,
                };
                StmtKind::If { cond, then_body, else_branch }
            }
            RawStmtKind::Else(body) => StmtKind::Else { body: self.block(body, scope, in_check)? },
            RawStmtKind::While(cond, body) => {
                let cond = self.expr(cond, scope)?;
                StmtKind::While { cond, body: self.block(body, scope, in_check)? }
            }
            RawStmtKind::Return(e) => StmtKind::Return(e.map(|e| self.expr(e, scope)).transpose()?),
            RawStmtKind::ExprStmt(e) => StmtKind::ExprStmt(self.expr(e, scope)?),
            RawStmtKind::Output(e) => StmtKind::Output(self.expr(e, scope)?),
            RawStmtKind::Probe(label) => StmtKind::Probe { label: label.into() },
            RawStmtKind::Check(label, block, cond) => {
                // Names introduced inside the check are visible to its condition only.
                let saved = scope.declared.clone();
                let saved_locals = scope.locals.clone();
                let block = self.block(block, scope, true)?;
                let cond = self.expr(cond, scope)?;
                scope.declared = saved;
                scope.locals = saved_locals;
                StmtKind::Check { label: label.into(), block, cond }
            }
        };
        let kinds = if id.is_checker() { KindSet::EMPTY } else { own_kinds(&kind) };
        Ok(Stmt { id, line: pos.line, kinds, kind })
    }

    fn lookup(&self, name: &str, pos: &Pos, scope: &FrameScope) -> PResult<Slot> {
        if scope.declared.contains(name) {
            if let Some(&i) = scope.locals.get(name) {
                return Ok(Slot::Local(i));
            }
        }
        if let Some(&g) = self.global_index.get(name) {
            return Ok(Slot::Global(g));
        }
        Err(SourceError::Resolve { identifier: name.to_string(), line: pos.line, column: pos.col })
    }

    fn expr(&self, e: RawExpr, scope: &FrameScope) -> PResult<Expr> {
        Ok(match e {
            RawExpr::Lit(v) => Expr::Lit(v),
            RawExpr::Var(name, pos) => {
                let slot = self.lookup(&name, &pos, scope)?;
                Expr::Var { name: name.into(), slot }
            }
            RawExpr::Unary(op, inner) => Expr::Unary(op, Box::new(self.expr(*inner, scope)?)),
            RawExpr::Binary(op, l, r) => {
                Expr::Binary(op, Box::new(self.expr(*l, scope)?), Box::new(self.expr(*r, scope)?))
            }
            RawExpr::Call(name, args, pos) => {
                let (func, arity) = match self.fn_index.get(&name) {
                    Some(&v) => v,
                    None => {
                        return Err(SourceError::Resolve { identifier: name, line: pos.line, column: pos.col })
                    }
                };
                if arity != args.len() {
                    return Err(SourceError::Parse {
                        line: pos.line,
                        column: pos.col,
                        message: format!("`{name}` takes {arity} arguments, {} given", args.len()),
                    });
                }
                let args = args.into_iter().map(|a| self.expr(a, scope)).collect::<PResult<_>>()?;
                Expr::Call { func, name: name.into(), args }
            }
        })
    }
}

fn own_kinds(kind: &StmtKind) -> KindSet {
    let mut set = KindSet::EMPTY;
    match kind {
        StmtKind::Assign { expr, .. } | StmtKind::ExprStmt(expr) | StmtKind::Output(expr) => {
            expr.collect_kinds(&mut set)
        }
        StmtKind::Return(Some(expr)) => expr.collect_kinds(&mut set),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
            set.insert(StatementKind::Conditional);
            cond.collect_kinds(&mut set);
        }
        StmtKind::Return(None) | StmtKind::Else { .. } | StmtKind::Probe { .. } | StmtKind::Check { .. } => {}
    }
    set
}
