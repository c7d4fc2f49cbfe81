//! Recursive-descent parser for the indentation-delimited program subset.

use super::ast::*;
use super::error::RuntimeError;
use super::lexer::{tokenize, Tok, Token};

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "def", "class", "import", "from", "lambda", "try", "except", "finally", "with", "global",
    "nonlocal", "yield", "del", "assert", "raise", "async", "await",
];

const KEYWORDS: &[&str] = &[
    "and", "or", "not", "if", "elif", "else", "for", "in", "while", "break", "continue", "return",
    "pass", "True", "False", "None", "is",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Program,
    Method,
}

/// Parses a full program. Top-level `return` is rejected.
pub fn parse_program(text: &str) -> Result<Program, RuntimeError> {
    if text.trim().is_empty() {
        return Err(RuntimeError::syntax(1, 1, "empty program"));
    }
    let block = Parser::new(text, Mode::Program)?.parse_file()?;
    Ok(Program {
        block,
        last_line: text.lines().count().max(1),
    })
}

/// Parses a method body whose parameters are pre-bound. `return` is allowed.
pub fn parse_method_body(text: &str, params: &[String]) -> Result<MethodBody, RuntimeError> {
    for (i, p) in params.iter().enumerate() {
        if !is_identifier(p) {
            return Err(RuntimeError::syntax(1, 1, format!("invalid parameter name '{p}'")));
        }
        if params[..i].contains(p) {
            return Err(RuntimeError::syntax(1, 1, format!("duplicate parameter '{p}'")));
        }
    }
    if text.trim().is_empty() {
        return Err(RuntimeError::syntax(1, 1, "empty method body"));
    }
    let block = Parser::new(text, Mode::Method)?.parse_file()?;
    Ok(MethodBody {
        params: params.to_vec(),
        block,
        text: text.to_string(),
    })
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
        && !UNSUPPORTED_KEYWORDS.contains(&s)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    lines: Vec<String>,
    mode: Mode,
    loop_depth: usize,
}

type PResult<T> = Result<T, RuntimeError>;

impl Parser {
    fn new(text: &str, mode: Mode) -> PResult<Self> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
            lines: text.lines().map(|l| l.trim().to_string()).collect(),
            mode,
            loop_depth: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(&self.peek().tok, Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn error_here(&self, msg: impl Into<String>) -> RuntimeError {
        let t = self.peek();
        RuntimeError::syntax(t.line, t.col, msg)
    }

    fn unexpected(&self) -> RuntimeError {
        let desc = match &self.peek().tok {
            Tok::Name(n) => format!("unexpected name '{n}'"),
            Tok::Int(i) => format!("unexpected number {i}"),
            Tok::Float(f) => format!("unexpected number {f}"),
            Tok::Str(_) => "unexpected string".to_string(),
            Tok::Op(o) => format!("unexpected '{o}'"),
            Tok::Newline => "unexpected end of line".to_string(),
            Tok::Indent => "unexpected indent".to_string(),
            Tok::Dedent => "unexpected dedent".to_string(),
            Tok::Eof => "unexpected end of input".to_string(),
        };
        self.error_here(desc)
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{op}'")))
        }
    }

    fn expect_name(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Name(n) if is_identifier(n) => {
                let n = n.clone();
                self.next();
                Ok(n)
            }
            _ => Err(self.error_here("expected a name")),
        }
    }

    fn line_text(&self, line: usize) -> String {
        self.lines.get(line.saturating_sub(1)).cloned().unwrap_or_default()
    }

    fn parse_file(&mut self) -> PResult<Block> {
        let mut stmts = Vec::new();
        while !matches!(self.peek().tok, Tok::Eof) {
            if matches!(self.peek().tok, Tok::Newline) {
                self.next();
                continue;
            }
            if matches!(self.peek().tok, Tok::Indent) {
                return Err(self.error_here("unexpected indent"));
            }
            stmts.extend(self.statement()?);
        }
        Ok(Block { stmts })
    }

    /// One logical line, or one compound statement. Simple statements may be
    /// separated by `;`, so this can yield several.
    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        let line = self.peek().line;
        if let Tok::Name(n) = &self.peek().tok {
            if UNSUPPORTED_KEYWORDS.contains(&n.as_str()) {
                let msg = if n == "def" {
                    "nested definitions are not supported".to_string()
                } else {
                    format!("'{n}' is not supported")
                };
                return Err(self.error_here(msg));
            }
            match n.as_str() {
                "if" => return Ok(vec![self.if_statement(line)?]),
                "for" => return Ok(vec![self.for_statement(line)?]),
                "while" => return Ok(vec![self.while_statement(line)?]),
                _ => {}
            }
        }
        self.simple_line()
    }

    fn simple_line(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.simple_statement()?];
        while self.eat_op(";") {
            if matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
                break;
            }
            out.push(self.simple_statement()?);
        }
        match self.peek().tok {
            Tok::Newline => {
                self.next();
            }
            Tok::Eof | Tok::Dedent => {}
            _ => return Err(self.unexpected()),
        }
        Ok(out)
    }

    fn simple_statement(&mut self) -> PResult<Stmt> {
        let line = self.peek().line;
        let text = self.line_text(line);
        let kind = if self.eat_kw("pass") {
            StmtKind::Pass
        } else if self.at_kw("break") || self.at_kw("continue") {
            if self.loop_depth == 0 {
                return Err(self.error_here("'break'/'continue' outside loop"));
            }
            if self.eat_kw("break") {
                StmtKind::Break
            } else {
                self.next();
                StmtKind::Continue
            }
        } else if self.at_kw("return") {
            if self.mode != Mode::Method {
                return Err(self.error_here("'return' outside function"));
            }
            self.next();
            if matches!(self.peek().tok, Tok::Newline | Tok::Eof | Tok::Dedent) || self.at_op(";") {
                StmtKind::Return(None)
            } else {
                StmtKind::Return(Some(self.expr_list()?))
            }
        } else {
            let first = self.expr_list()?;
            if self.at_op("=") {
                let mut targets = vec![self.to_target(first)?];
                let mut value;
                loop {
                    self.expect_op("=")?;
                    value = self.expr_list()?;
                    if self.at_op("=") {
                        targets.push(self.to_target(value)?);
                    } else {
                        break;
                    }
                }
                StmtKind::Assign { targets, value }
            } else if let Some(op) = self.aug_op() {
                let target = self.to_target(first)?;
                if matches!(target, Target::Tuple(_)) {
                    return Err(self.error_here("illegal target for augmented assignment"));
                }
                let value = self.expr_list()?;
                StmtKind::AugAssign { target, op, value }
            } else {
                StmtKind::Expr(first)
            }
        };
        Ok(Stmt { line, text, kind })
    }

    fn aug_op(&mut self) -> Option<BinOp> {
        let op = match &self.peek().tok {
            Tok::Op("+=") => BinOp::Add,
            Tok::Op("-=") => BinOp::Sub,
            Tok::Op("*=") => BinOp::Mul,
            Tok::Op("/=") => BinOp::Div,
            Tok::Op("//=") => BinOp::FloorDiv,
            Tok::Op("%=") => BinOp::Mod,
            Tok::Op("**=") => BinOp::Pow,
            _ => return None,
        };
        self.next();
        Some(op)
    }

    fn to_target(&self, e: Expr) -> PResult<Target> {
        match e.kind {
            ExprKind::Name(n) => Ok(Target::Name(n)),
            ExprKind::Tuple(items) | ExprKind::List(items) => Ok(Target::Tuple(
                items
                    .into_iter()
                    .map(|i| self.to_target(i))
                    .collect::<PResult<_>>()?,
            )),
            ExprKind::Index { base, index } => Ok(Target::Index {
                base: *base,
                index: *index,
            }),
            _ => Err(RuntimeError::syntax(e.line, 1, "cannot assign to expression")),
        }
    }

    fn suite(&mut self) -> PResult<Block> {
        self.expect_op(":")?;
        if !matches!(self.peek().tok, Tok::Newline) {
            // Single-line suite, e.g. `if done: break`.
            return Ok(Block {
                stmts: self.simple_line()?,
            });
        }
        self.next();
        if !matches!(self.peek().tok, Tok::Indent) {
            return Err(self.error_here("expected an indented block"));
        }
        self.next();
        let mut stmts = Vec::new();
        loop {
            match self.peek().tok {
                Tok::Dedent => {
                    self.next();
                    break;
                }
                Tok::Eof => break,
                Tok::Newline => {
                    self.next();
                }
                _ => stmts.extend(self.statement()?),
            }
        }
        Ok(Block { stmts })
    }

    fn if_statement(&mut self, line: usize) -> PResult<Stmt> {
        let text = self.line_text(line);
        self.next();
        let cond = self.expr()?;
        let body = self.suite()?;
        let mut branches = vec![(cond, body)];
        let mut orelse = None;
        loop {
            if self.eat_kw("elif") {
                let cond = self.expr()?;
                let body = self.suite()?;
                branches.push((cond, body));
            } else if self.eat_kw("else") {
                orelse = Some(self.suite()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt {
            line,
            text,
            kind: StmtKind::If { branches, orelse },
        })
    }

    fn for_statement(&mut self, line: usize) -> PResult<Stmt> {
        let text = self.line_text(line);
        self.next();
        let target = self.for_target()?;
        if !self.eat_kw("in") {
            return Err(self.error_here("expected 'in'"));
        }
        let iter = self.expr_list()?;
        self.loop_depth += 1;
        let body = self.suite();
        self.loop_depth -= 1;
        let body = body?;
        if self.at_kw("else") {
            return Err(self.error_here("'for ... else' is not supported"));
        }
        Ok(Stmt {
            line,
            text,
            kind: StmtKind::For { target, iter, body },
        })
    }

    fn for_target(&mut self) -> PResult<Target> {
        let mut items = vec![self.for_target_atom()?];
        let mut tuple = false;
        while self.eat_op(",") {
            tuple = true;
            if self.at_kw("in") {
                break;
            }
            items.push(self.for_target_atom()?);
        }
        Ok(if tuple {
            Target::Tuple(items)
        } else {
            items.pop().expect("one item")
        })
    }

    fn for_target_atom(&mut self) -> PResult<Target> {
        if self.eat_op("(") {
            let t = self.for_target()?;
            self.expect_op(")")?;
            return Ok(t);
        }
        if self.eat_op("[") {
            let t = self.for_target()?;
            self.expect_op("]")?;
            return Ok(t);
        }
        Ok(Target::Name(self.expect_name()?))
    }

    fn while_statement(&mut self, line: usize) -> PResult<Stmt> {
        let text = self.line_text(line);
        self.next();
        let cond = self.expr()?;
        self.loop_depth += 1;
        let body = self.suite();
        self.loop_depth -= 1;
        Ok(Stmt {
            line,
            text,
            kind: StmtKind::While { cond, body: body? },
        })
    }

    /// Comma-separated expressions; more than one (or a trailing comma)
    /// builds a tuple.
    fn expr_list(&mut self) -> PResult<Expr> {
        let line = self.peek().line;
        let first = self.expr()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.starts_expr() {
                items.push(self.expr()?);
            } else {
                break;
            }
        }
        Ok(Expr {
            line,
            kind: ExprKind::Tuple(items),
        })
    }

    fn starts_expr(&self) -> bool {
        match &self.peek().tok {
            Tok::Name(n) => !matches!(
                n.as_str(),
                "and" | "or" | "in" | "if" | "else" | "elif" | "for" | "is"
            ),
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) => true,
            Tok::Op(o) => matches!(*o, "(" | "[" | "-" | "+"),
            _ => false,
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let line = self.peek().line;
        let body = self.or_expr()?;
        if self.at_kw("if") {
            self.next();
            let cond = self.or_expr()?;
            if !self.eat_kw("else") {
                return Err(self.error_here("expected 'else' in conditional expression"));
            }
            let otherwise = self.expr()?;
            return Ok(Expr {
                line,
                kind: ExprKind::Conditional {
                    cond: Box::new(cond),
                    then: Box::new(body),
                    otherwise: Box::new(otherwise),
                },
            });
        }
        Ok(body)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.at_kw("or") {
            let line = self.next().line;
            let rhs = self.and_expr()?;
            lhs = Expr {
                line,
                kind: ExprKind::Or(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.at_kw("and") {
            let line = self.next().line;
            let rhs = self.not_expr()?;
            lhs = Expr {
                line,
                kind: ExprKind::And(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let line = self.next().line;
            let operand = self.not_expr()?;
            return Ok(Expr {
                line,
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
            });
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match &self.peek().tok {
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.next();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                self.next();
                return Some(if self.eat_kw("not") { CmpOp::Ne } else { CmpOp::Eq });
            }
            _ => return None,
        };
        self.next();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let line = self.peek().line;
        let first = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            return Ok(first);
        }
        Ok(Expr {
            line,
            kind: ExprKind::Compare {
                first: Box::new(first),
                rest,
            },
        })
    }

    fn binary(&mut self, lhs: Expr, op: BinOp, rhs: Expr) -> Expr {
        Expr {
            line: lhs.line,
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
        }
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = self.binary(lhs, op, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else if self.eat_op("//") {
                BinOp::FloorDiv
            } else if self.eat_op("%") {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = self.binary(lhs, op, rhs);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        let line = self.peek().line;
        let op = if self.eat_op("-") {
            UnaryOp::Neg
        } else if self.eat_op("+") {
            UnaryOp::Pos
        } else {
            return self.power();
        };
        let operand = self.factor()?;
        Ok(Expr {
            line,
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
        })
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.postfix()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(self.binary(base, BinOp::Pow, exp));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.at_op("(") {
                let ExprKind::Name(func) = &e.kind else {
                    return Err(self.error_here("only named functions can be called"));
                };
                let func = func.clone();
                let args = self.call_args()?;
                e = Expr {
                    line: e.line,
                    kind: ExprKind::Call { func, args },
                };
            } else if self.eat_op("[") {
                if self.at_op(":") {
                    return Err(self.error_here("slices are not supported"));
                }
                let index = self.expr()?;
                if self.at_op(":") {
                    return Err(self.error_here("slices are not supported"));
                }
                self.expect_op("]")?;
                e = Expr {
                    line: e.line,
                    kind: ExprKind::Index {
                        base: Box::new(e),
                        index: Box::new(index),
                    },
                };
            } else if self.eat_op(".") {
                let method = self.expect_name()?;
                if !self.at_op("(") {
                    return Err(self.error_here("attribute access is not supported"));
                }
                let args = self.call_args()?;
                e = Expr {
                    line: e.line,
                    kind: ExprKind::MethodCall {
                        receiver: Box::new(e),
                        method,
                        args,
                    },
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Arg>> {
        self.expect_op("(")?;
        let mut args: Vec<Arg> = Vec::new();
        while !self.at_op(")") {
            let named = matches!(self.peek().tok, Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("="));
            let arg = if named {
                let name = self.expect_name()?;
                self.expect_op("=")?;
                Arg {
                    name: Some(name),
                    value: self.expr()?,
                }
            } else {
                if args.iter().any(|a| a.name.is_some()) {
                    return Err(self.error_here("positional argument follows keyword argument"));
                }
                Arg {
                    name: None,
                    value: self.expr()?,
                }
            };
            args.push(arg);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let line = tok.line;
        let kind = match tok.tok {
            Tok::Int(i) => {
                self.next();
                ExprKind::Literal(Literal::Int(i))
            }
            Tok::Float(f) => {
                self.next();
                ExprKind::Literal(Literal::Real(f))
            }
            Tok::Str(s) => {
                self.next();
                let mut s = s;
                while let Tok::Str(more) = &self.peek().tok {
                    s.push_str(more);
                    self.next();
                }
                ExprKind::Literal(Literal::Str(s))
            }
            Tok::Name(n) => match n.as_str() {
                "True" => {
                    self.next();
                    ExprKind::Literal(Literal::Bool(true))
                }
                "False" => {
                    self.next();
                    ExprKind::Literal(Literal::Bool(false))
                }
                "None" => {
                    self.next();
                    ExprKind::Literal(Literal::None)
                }
                _ if UNSUPPORTED_KEYWORDS.contains(&n.as_str()) => {
                    return Err(self.error_here(format!("'{n}' is not supported")));
                }
                _ if KEYWORDS.contains(&n.as_str()) => return Err(self.unexpected()),
                _ => {
                    self.next();
                    ExprKind::Name(n)
                }
            },
            Tok::Op("(") => {
                self.next();
                if self.eat_op(")") {
                    ExprKind::Tuple(Vec::new())
                } else {
                    let first = self.expr()?;
                    if self.at_kw("for") {
                        return Err(self.error_here("comprehensions are not supported"));
                    }
                    if self.eat_op(")") {
                        return Ok(first);
                    }
                    let mut items = vec![first];
                    while self.eat_op(",") {
                        if self.at_op(")") {
                            break;
                        }
                        items.push(self.expr()?);
                    }
                    self.expect_op(")")?;
                    ExprKind::Tuple(items)
                }
            }
            Tok::Op("[") => {
                self.next();
                let mut items = Vec::new();
                while !self.at_op("]") {
                    items.push(self.expr()?);
                    if self.at_kw("for") {
                        return Err(self.error_here("comprehensions are not supported"));
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                ExprKind::List(items)
            }
            Tok::Op("{") => return Err(self.error_here("dictionaries and sets are not supported")),
            _ => return Err(self.unexpected()),
        };
        Ok(Expr { line, kind })
    }
}
