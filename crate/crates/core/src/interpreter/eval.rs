//! Tree-walking evaluator with step accounting.
//!
//! Programs can only reach the five specialists, the methods exposed by an
//! [`Api`], and a handful of pure built-ins. There is no path to files,
//! the network, or the environment.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::error::{ErrorKind, RuntimeError};
use super::value::Value;
use crate::specialists::SpecialistSuite;

pub const FINAL_RESULT: &str = "final_result";
pub const IMAGE: &str = "image";
pub const BUILTINS: &[&str] = &["len", "abs", "min", "max", "append"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_steps: u64,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 1_000_000,
            max_depth: 64,
        }
    }
}

/// The predefined vision modules as seen by programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predefined {
    Loc,
    Vqa,
    Depth,
    SameObject,
    Get2DObjectSize,
}

impl Predefined {
    pub const ALL: [Predefined; 5] = [
        Predefined::Loc,
        Predefined::Vqa,
        Predefined::Depth,
        Predefined::SameObject,
        Predefined::Get2DObjectSize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predefined::Loc => "loc",
            Predefined::Vqa => "vqa",
            Predefined::Depth => "depth",
            Predefined::SameObject => "same_object",
            Predefined::Get2DObjectSize => "get_2D_object_size",
        }
    }

    pub fn params(self) -> &'static [&'static str] {
        match self {
            Predefined::Loc => &["image", "object_prompt"],
            Predefined::Vqa => &["image", "question", "x", "y"],
            Predefined::Depth | Predefined::Get2DObjectSize => &["image", "x", "y"],
            Predefined::SameObject => &["image", "x_1", "y_1", "x_2", "y_2"],
        }
    }

    pub fn from_name(name: &str) -> Option<Predefined> {
        Predefined::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Call resolution for programs: predefined modules first, then API methods.
pub trait Api {
    fn predefined(&self, name: &str) -> Option<Predefined>;
    fn method(&self, name: &str) -> Option<&MethodBody>;
}

/// An API exposing every predefined module and no generated methods.
#[derive(Debug, Default, Clone, Copy)]
pub struct PredefinedOnly;

impl Api for PredefinedOnly {
    fn predefined(&self, name: &str) -> Option<Predefined> {
        Predefined::from_name(name)
    }

    fn method(&self, _name: &str) -> Option<&MethodBody> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub line: usize,
    /// Call depth: 0 for the program itself, 1 inside a called method, ...
    pub depth: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_line(&self) -> Option<usize> {
        self.entries.last().map(|e| e.line)
    }
}

#[derive(Debug)]
pub struct Execution {
    pub result: Result<Value, RuntimeError>,
    pub trace: ExecutionTrace,
    pub steps: u64,
}

/// Runs a program with `image` bound and returns the `final_result` binding.
pub fn execute_program(
    program: &Program,
    api: &dyn Api,
    suite: &SpecialistSuite,
    limits: Limits,
) -> Execution {
    let mut ev = Evaluator::new(api, suite, limits);
    let mut env: Env = HashMap::new();
    env.insert(IMAGE.to_string(), Value::Image);
    let result = match ev.exec_block(&program.block, &mut env) {
        Ok(_) => env.get(FINAL_RESULT).cloned().ok_or_else(|| {
            RuntimeError::new(
                ErrorKind::MissingFinalResult,
                program.last_line,
                "the program must store its answer in a variable called \"final_result\"",
            )
        }),
        Err(e) => Err(e),
    };
    ev.finish(result)
}

/// Invokes a single method body with already-evaluated arguments.
pub fn call_method(
    name: &str,
    body: &MethodBody,
    args: Vec<Value>,
    api: &dyn Api,
    suite: &SpecialistSuite,
    limits: Limits,
) -> Execution {
    let mut ev = Evaluator::new(api, suite, limits);
    let result = ev.invoke_body(name, body, args, 1);
    ev.finish(result)
}

type Env = HashMap<String, Value>;

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

struct Evaluator<'a> {
    api: &'a dyn Api,
    suite: &'a SpecialistSuite,
    limits: Limits,
    steps: u64,
    frames: Vec<String>,
    trace: Vec<TraceEntry>,
}

impl<'a> Evaluator<'a> {
    fn new(api: &'a dyn Api, suite: &'a SpecialistSuite, limits: Limits) -> Self {
        Evaluator {
            api,
            suite,
            limits,
            steps: 0,
            frames: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn finish(self, result: Result<Value, RuntimeError>) -> Execution {
        Execution {
            result,
            trace: ExecutionTrace {
                entries: self.trace,
            },
            steps: self.steps,
        }
    }

    /// Builds an error, prefixed with the enclosing method when inside one.
    fn error(&self, kind: ErrorKind, line: usize, message: impl Into<String>) -> RuntimeError {
        let message = message.into();
        match self.frames.last() {
            Some(name) => RuntimeError::new(kind, line, format!("in {name}: {message}")),
            None => RuntimeError::new(kind, line, message),
        }
    }

    fn type_error(&self, line: usize, message: impl Into<String>) -> RuntimeError {
        self.error(ErrorKind::TypeMismatch, line, message)
    }

    fn tick(&mut self, line: usize) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(self.error(
                ErrorKind::StepLimitExceeded,
                line,
                format!("exceeded {} evaluation steps", self.limits.max_steps),
            ));
        }
        Ok(())
    }

    fn exec_block(&mut self, block: &Block, env: &mut Env) -> Result<Flow, RuntimeError> {
        for stmt in &block.stmts {
            match self.exec_stmt(stmt, env)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &Stmt, env: &mut Env) -> Result<Flow, RuntimeError> {
        self.tick(stmt.line)?;
        let entry = self.trace.len();
        self.trace.push(TraceEntry {
            line: stmt.line,
            depth: self.frames.len(),
            text: stmt.text.clone(),
            bound: None,
        });
        match &stmt.kind {
            StmtKind::Assign { targets, value } => {
                let v = self.eval(value, env)?;
                let mut bound = Vec::new();
                for t in targets {
                    self.assign(t, v.clone(), env, stmt.line, &mut bound)?;
                }
                self.trace[entry].bound = summary(&bound);
                Ok(Flow::Normal)
            }
            StmtKind::AugAssign { target, op, value } => {
                let current = match target {
                    Target::Name(n) => self.lookup(n, env, stmt.line)?,
                    Target::Index { base, index } => {
                        let b = self.eval(base, env)?;
                        let i = self.eval(index, env)?;
                        self.index(&b, &i, stmt.line)?
                    }
                    Target::Tuple(_) => unreachable!("rejected by the parser"),
                };
                let rhs = self.eval(value, env)?;
                let v = self.binary(*op, current, rhs, stmt.line)?;
                let mut bound = Vec::new();
                self.assign(target, v, env, stmt.line, &mut bound)?;
                self.trace[entry].bound = summary(&bound);
                Ok(Flow::Normal)
            }
            StmtKind::For { target, iter, body } => {
                let seq = self.eval(iter, env)?;
                let items: Vec<Value> = match &seq {
                    Value::List(l) => l.borrow().clone(),
                    Value::Tuple(t) => t.to_vec(),
                    Value::Str(s) => s.chars().map(|c| Value::str(c.to_string())).collect(),
                    other => {
                        return Err(self.type_error(
                            stmt.line,
                            format!("'{}' object is not iterable", other.type_name()),
                        ))
                    }
                };
                for item in items {
                    let mut bound = Vec::new();
                    self.assign(target, item, env, stmt.line, &mut bound)?;
                    match self.exec_block(body, env)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::While { cond, body } => {
                loop {
                    if !self.eval(cond, env)?.truthy() {
                        break;
                    }
                    match self.exec_block(body, env)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                    self.tick(stmt.line)?;
                }
                Ok(Flow::Normal)
            }
            StmtKind::If { branches, orelse } => {
                for (cond, body) in branches {
                    if self.eval(cond, env)?.truthy() {
                        return self.exec_block(body, env);
                    }
                }
                match orelse {
                    Some(body) => self.exec_block(body, env),
                    None => Ok(Flow::Normal),
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, env)?,
                    None => Value::None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Pass => Ok(Flow::Normal),
            StmtKind::Expr(e) => {
                self.eval(e, env)?;
                Ok(Flow::Normal)
            }
        }
    }

    fn assign(
        &mut self,
        target: &Target,
        value: Value,
        env: &mut Env,
        line: usize,
        bound: &mut Vec<(String, String)>,
    ) -> Result<(), RuntimeError> {
        match target {
            Target::Name(n) => {
                bound.push((n.clone(), value.repr()));
                env.insert(n.clone(), value);
                Ok(())
            }
            Target::Tuple(targets) => {
                let items: Vec<Value> = match &value {
                    Value::List(l) => l.borrow().clone(),
                    Value::Tuple(t) => t.to_vec(),
                    other => {
                        return Err(self.type_error(
                            line,
                            format!("cannot unpack non-sequence {}", other.type_name()),
                        ))
                    }
                };
                if items.len() != targets.len() {
                    return Err(self.type_error(
                        line,
                        format!(
                            "expected {} values to unpack, got {}",
                            targets.len(),
                            items.len()
                        ),
                    ));
                }
                for (t, v) in targets.iter().zip(items) {
                    self.assign(t, v, env, line, bound)?;
                }
                Ok(())
            }
            Target::Index { base, index } => {
                let b = self.eval(base, env)?;
                let i = self.eval(index, env)?;
                let Value::List(list) = &b else {
                    return Err(self.type_error(
                        line,
                        format!("'{}' object does not support item assignment", b.type_name()),
                    ));
                };
                let len = list.borrow().len();
                let pos = self.resolve_index(&i, len, line)?;
                list.borrow_mut()[pos] = value;
                Ok(())
            }
        }
    }

    fn lookup(&self, name: &str, env: &Env, line: usize) -> Result<Value, RuntimeError> {
        if let Some(v) = env.get(name) {
            return Ok(v.clone());
        }
        if name == IMAGE {
            return Ok(Value::Image);
        }
        Err(self.error(
            ErrorKind::UndefinedVariable(name.to_string()),
            line,
            format!("name '{name}' is not defined"),
        ))
    }

    fn eval(&mut self, expr: &Expr, env: &mut Env) -> Result<Value, RuntimeError> {
        self.tick(expr.line)?;
        let line = expr.line;
        match &expr.kind {
            ExprKind::Literal(l) => Ok(match l {
                Literal::None => Value::None,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Real(r) => Value::Real(*r),
                Literal::Str(s) => Value::str(s.as_str()),
            }),
            ExprKind::Name(n) => self.lookup(n, env, line),
            ExprKind::List(items) => {
                let vals = items
                    .iter()
                    .map(|e| self.eval(e, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::list(vals))
            }
            ExprKind::Tuple(items) => {
                let vals = items
                    .iter()
                    .map(|e| self.eval(e, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::tuple(vals))
            }
            ExprKind::Index { base, index } => {
                let b = self.eval(base, env)?;
                let i = self.eval(index, env)?;
                self.index(&b, &i, line)
            }
            ExprKind::Call { func, args } => self.call(func, args, env, line),
            ExprKind::MethodCall {
                receiver,
                method,
                args,
            } => {
                let recv = self.eval(receiver, env)?;
                let vals = self.eval_args(args, env)?;
                match (&recv, method.as_str()) {
                    (Value::List(list), "append") => {
                        if vals.len() != 1 || vals[0].0.is_some() {
                            return Err(self.error(
                                ErrorKind::ArgumentCount,
                                line,
                                "append() takes exactly one positional argument",
                            ));
                        }
                        let v = vals.into_iter().next().expect("one arg").1;
                        list.borrow_mut().push(v);
                        Ok(Value::None)
                    }
                    _ => Err(self.type_error(
                        line,
                        format!("'{}' object has no method '{method}'", recv.type_name()),
                    )),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs, env)?;
                let b = self.eval(rhs, env)?;
                self.binary(*op, a, b, line)
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand, env)?;
                match op {
                    UnaryOp::Not => Ok(Value::Bool(!v.truthy())),
                    UnaryOp::Neg => match v {
                        Value::Real(r) => Ok(Value::Real(-r)),
                        ref n if n.as_i64().is_some() => n
                            .as_i64()
                            .and_then(i64::checked_neg)
                            .map(Value::Int)
                            .ok_or_else(|| self.type_error(line, "integer overflow")),
                        other => Err(self.type_error(
                            line,
                            format!("bad operand type for unary -: '{}'", other.type_name()),
                        )),
                    },
                    UnaryOp::Pos => match v {
                        Value::Bool(b) => Ok(Value::Int(i64::from(b))),
                        n @ (Value::Int(_) | Value::Real(_)) => Ok(n),
                        other => Err(self.type_error(
                            line,
                            format!("bad operand type for unary +: '{}'", other.type_name()),
                        )),
                    },
                }
            }
            ExprKind::Compare { first, rest } => {
                let mut left = self.eval(first, env)?;
                for (op, e) in rest {
                    let right = self.eval(e, env)?;
                    if !self.compare(*op, &left, &right, line)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Ok(Value::Bool(true))
            }
            ExprKind::And(a, b) => {
                let l = self.eval(a, env)?;
                if !l.truthy() {
                    return Ok(l);
                }
                self.eval(b, env)
            }
            ExprKind::Or(a, b) => {
                let l = self.eval(a, env)?;
                if l.truthy() {
                    return Ok(l);
                }
                self.eval(b, env)
            }
            ExprKind::Conditional {
                cond,
                then,
                otherwise,
            } => {
                if self.eval(cond, env)?.truthy() {
                    self.eval(then, env)
                } else {
                    self.eval(otherwise, env)
                }
            }
        }
    }

    fn eval_args(
        &mut self,
        args: &[Arg],
        env: &mut Env,
    ) -> Result<Vec<(Option<String>, Value)>, RuntimeError> {
        args.iter()
            .map(|a| Ok((a.name.clone(), self.eval(&a.value, env)?)))
            .collect()
    }

    /// Matches positional then named arguments against parameter names.
    fn bind(
        &self,
        callee: &str,
        params: &[&str],
        args: Vec<(Option<String>, Value)>,
        line: usize,
    ) -> Result<Vec<Value>, RuntimeError> {
        let mut slots: Vec<Option<Value>> = vec![None; params.len()];
        let mut positional = 0;
        for (name, value) in args {
            match name {
                None => {
                    if positional >= params.len() {
                        return Err(self.error(
                            ErrorKind::ArgumentCount,
                            line,
                            format!(
                                "{callee}() takes {} arguments but more were given",
                                params.len()
                            ),
                        ));
                    }
                    slots[positional] = Some(value);
                    positional += 1;
                }
                Some(name) => {
                    let Some(i) = params.iter().position(|p| *p == name) else {
                        return Err(self.error(
                            ErrorKind::ArgumentCount,
                            line,
                            format!("{callee}() got an unexpected keyword argument '{name}'"),
                        ));
                    };
                    if slots[i].is_some() {
                        return Err(self.error(
                            ErrorKind::ArgumentCount,
                            line,
                            format!("{callee}() got multiple values for argument '{name}'"),
                        ));
                    }
                    slots[i] = Some(value);
                }
            }
        }
        let missing: Vec<&str> = params
            .iter()
            .zip(&slots)
            .filter(|(_, s)| s.is_none())
            .map(|(p, _)| *p)
            .collect();
        if !missing.is_empty() {
            return Err(self.error(
                ErrorKind::ArgumentCount,
                line,
                format!("{callee}() missing required arguments: {}", missing.join(", ")),
            ));
        }
        Ok(slots.into_iter().map(|s| s.expect("checked")).collect())
    }

    fn call(
        &mut self,
        func: &str,
        args: &[Arg],
        env: &mut Env,
        line: usize,
    ) -> Result<Value, RuntimeError> {
        if let Some(p) = self.api.predefined(func) {
            let vals = self.eval_args(args, env)?;
            let bound = self.bind(func, p.params(), vals, line)?;
            return self.call_predefined(p, bound, line);
        }
        if let Some(body) = self.api.method(func) {
            let vals = self.eval_args(args, env)?;
            let params: Vec<&str> = body.params.iter().map(String::as_str).collect();
            let bound = self.bind(func, &params, vals, line)?;
            if self.frames.len() >= self.limits.max_depth {
                return Err(self.error(
                    ErrorKind::StepLimitExceeded,
                    line,
                    format!("call depth exceeded {}", self.limits.max_depth),
                ));
            }
            return self.invoke_body(func, body, bound, line);
        }
        if BUILTINS.contains(&func) {
            let vals = self.eval_args(args, env)?;
            return self.call_builtin(func, vals, line);
        }
        Err(self.error(
            ErrorKind::UndefinedMethod(func.to_string()),
            line,
            format!("method '{func}' is not defined"),
        ))
    }

    fn invoke_body(
        &mut self,
        name: &str,
        body: &MethodBody,
        args: Vec<Value>,
        line: usize,
    ) -> Result<Value, RuntimeError> {
        if args.len() != body.params.len() {
            return Err(self.error(
                ErrorKind::ArgumentCount,
                line,
                format!(
                    "{name}() takes {} arguments but {} were given",
                    body.params.len(),
                    args.len()
                ),
            ));
        }
        let mut env: Env = body.params.iter().cloned().zip(args).collect();
        self.frames.push(name.to_string());
        let flow = self.exec_block(&body.block, &mut env);
        self.frames.pop();
        match flow? {
            Flow::Return(v) => Ok(v),
            _ => Ok(Value::None),
        }
    }

    fn call_predefined(
        &mut self,
        p: Predefined,
        args: Vec<Value>,
        line: usize,
    ) -> Result<Value, RuntimeError> {
        if !matches!(args[0], Value::Image) {
            return Err(self.type_error(
                line,
                format!(
                    "{}() expects the image as its first argument, got {}",
                    p.name(),
                    args[0].type_name()
                ),
            ));
        }
        let num = |i: usize| -> Result<f64, RuntimeError> {
            args[i].as_f64().ok_or_else(|| {
                self.type_error(
                    line,
                    format!(
                        "{}() argument '{}' must be a number, got {}",
                        p.name(),
                        p.params()[i],
                        args[i].type_name()
                    ),
                )
            })
        };
        let text = |i: usize| -> Result<Rc<str>, RuntimeError> {
            match &args[i] {
                Value::Str(s) => Ok(s.clone()),
                other => Err(self.type_error(
                    line,
                    format!(
                        "{}() argument '{}' must be a string, got {}",
                        p.name(),
                        p.params()[i],
                        other.type_name()
                    ),
                )),
            }
        };
        let wrap = |e| {
            let err = RuntimeError::from_specialist(e, line);
            self.error(err.kind, line, err.message)
        };
        match p {
            Predefined::Loc => {
                let prompt = text(1)?;
                let pts = self.suite.loc(&prompt).map_err(wrap)?;
                Ok(Value::list(
                    pts.into_iter()
                        .map(|p| Value::list(vec![Value::Real(p.u), Value::Real(p.v)]))
                        .collect(),
                ))
            }
            Predefined::Vqa => {
                let q = text(1)?;
                let (x, y) = (num(2)?, num(3)?);
                Ok(Value::str(self.suite.vqa(&q, x, y).map_err(wrap)?))
            }
            Predefined::Depth => {
                let (x, y) = (num(1)?, num(2)?);
                Ok(Value::Real(self.suite.depth(x, y).map_err(wrap)?))
            }
            Predefined::SameObject => {
                let (x1, y1, x2, y2) = (num(1)?, num(2)?, num(3)?, num(4)?);
                Ok(Value::Bool(self.suite.same_object(x1, y1, x2, y2).map_err(wrap)?))
            }
            Predefined::Get2DObjectSize => {
                let (x, y) = (num(1)?, num(2)?);
                let (w, h) = self.suite.get_2d_object_size(x, y).map_err(wrap)?;
                Ok(Value::tuple(vec![Value::Real(w), Value::Real(h)]))
            }
        }
    }

    fn call_builtin(
        &mut self,
        func: &str,
        args: Vec<(Option<String>, Value)>,
        line: usize,
    ) -> Result<Value, RuntimeError> {
        if let Some((Some(name), _)) = args.iter().find(|(n, _)| n.is_some()) {
            return Err(self.error(
                ErrorKind::ArgumentCount,
                line,
                format!("{func}() got an unexpected keyword argument '{name}'"),
            ));
        }
        let args: Vec<Value> = args.into_iter().map(|(_, v)| v).collect();
        let arity = |n: usize| -> Result<(), RuntimeError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(self.error(
                    ErrorKind::ArgumentCount,
                    line,
                    format!("{func}() takes exactly {n} arguments ({} given)", args.len()),
                ))
            }
        };
        match func {
            "len" => {
                arity(1)?;
                let n = match &args[0] {
                    Value::List(l) => l.borrow().len(),
                    Value::Tuple(t) => t.len(),
                    Value::Str(s) => s.chars().count(),
                    other => {
                        return Err(self.type_error(
                            line,
                            format!("object of type '{}' has no len()", other.type_name()),
                        ))
                    }
                };
                Ok(Value::Int(n as i64))
            }
            "abs" => {
                arity(1)?;
                match &args[0] {
                    Value::Real(r) => Ok(Value::Real(r.abs())),
                    v if v.as_i64().is_some() => v
                        .as_i64()
                        .and_then(i64::checked_abs)
                        .map(Value::Int)
                        .ok_or_else(|| self.type_error(line, "integer overflow")),
                    other => Err(self.type_error(
                        line,
                        format!("bad operand type for abs(): '{}'", other.type_name()),
                    )),
                }
            }
            "min" | "max" => {
                let items: Vec<Value> = match args.len() {
                    0 => {
                        return Err(self.error(
                            ErrorKind::ArgumentCount,
                            line,
                            format!("{func}() expected at least 1 argument"),
                        ))
                    }
                    1 => match &args[0] {
                        Value::List(l) => l.borrow().clone(),
                        Value::Tuple(t) => t.to_vec(),
                        other => {
                            return Err(self.type_error(
                                line,
                                format!("'{}' object is not iterable", other.type_name()),
                            ))
                        }
                    },
                    _ => args,
                };
                let mut iter = items.into_iter();
                let Some(mut best) = iter.next() else {
                    return Err(self.type_error(line, format!("{func}() arg is an empty sequence")));
                };
                for v in iter {
                    let better = if func == "min" {
                        self.compare(CmpOp::Lt, &v, &best, line)?
                    } else {
                        self.compare(CmpOp::Gt, &v, &best, line)?
                    };
                    if better {
                        best = v;
                    }
                }
                Ok(best)
            }
            "append" => {
                arity(2)?;
                let Value::List(list) = &args[0] else {
                    return Err(self.type_error(
                        line,
                        format!("append() needs a list, got {}", args[0].type_name()),
                    ));
                };
                list.borrow_mut().push(args[1].clone());
                Ok(Value::None)
            }
            _ => unreachable!("checked against BUILTINS"),
        }
    }

    fn resolve_index(&self, index: &Value, len: usize, line: usize) -> Result<usize, RuntimeError> {
        let Some(i) = index.as_i64() else {
            return Err(self.type_error(
                line,
                format!("indices must be integers, not {}", index.type_name()),
            ));
        };
        let pos = if i < 0 { i + len as i64 } else { i };
        if pos < 0 || pos >= len as i64 {
            return Err(self.error(
                ErrorKind::IndexOutOfRange,
                line,
                format!("index {i} out of range for length {len}"),
            ));
        }
        Ok(pos as usize)
    }

    fn index(&self, base: &Value, index: &Value, line: usize) -> Result<Value, RuntimeError> {
        match base {
            Value::List(l) => {
                let l = l.borrow();
                let i = self.resolve_index(index, l.len(), line)?;
                Ok(l[i].clone())
            }
            Value::Tuple(t) => {
                let i = self.resolve_index(index, t.len(), line)?;
                Ok(t[i].clone())
            }
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                let i = self.resolve_index(index, chars.len(), line)?;
                Ok(Value::str(chars[i].to_string()))
            }
            other => Err(self.type_error(
                line,
                format!("'{}' object is not subscriptable", other.type_name()),
            )),
        }
    }

    fn binary(&self, op: BinOp, a: Value, b: Value, line: usize) -> Result<Value, RuntimeError> {
        let unsupported = || {
            self.type_error(
                line,
                format!(
                    "unsupported operand types for {}: '{}' and '{}'",
                    op.symbol(),
                    a.type_name(),
                    b.type_name()
                ),
            )
        };
        let overflow = || self.type_error(line, "integer overflow");
        let div_zero = || self.error(ErrorKind::DivisionByZero, line, "division by zero");

        match (op, &a, &b) {
            (BinOp::Add, Value::Str(x), Value::Str(y)) => return Ok(Value::str(format!("{x}{y}"))),
            (BinOp::Add, Value::List(x), Value::List(y)) => {
                let mut v = x.borrow().clone();
                v.extend(y.borrow().iter().cloned());
                return Ok(Value::list(v));
            }
            (BinOp::Add, Value::Tuple(x), Value::Tuple(y)) => {
                let mut v = x.to_vec();
                v.extend(y.iter().cloned());
                return Ok(Value::tuple(v));
            }
            _ => {}
        }
        if !(a.is_number() && b.is_number()) {
            return Err(unsupported());
        }
        if let (Some(x), Some(y)) = (a.as_i64(), b.as_i64()) {
            return match op {
                BinOp::Add => x.checked_add(y).map(Value::Int).ok_or_else(overflow),
                BinOp::Sub => x.checked_sub(y).map(Value::Int).ok_or_else(overflow),
                BinOp::Mul => x.checked_mul(y).map(Value::Int).ok_or_else(overflow),
                BinOp::Div => {
                    if y == 0 {
                        Err(div_zero())
                    } else {
                        Ok(Value::Real(x as f64 / y as f64))
                    }
                }
                BinOp::FloorDiv => {
                    if y == 0 {
                        Err(div_zero())
                    } else {
                        let q = x.checked_div(y).ok_or_else(overflow)?;
                        let q = if (x % y != 0) && ((x < 0) != (y < 0)) { q - 1 } else { q };
                        Ok(Value::Int(q))
                    }
                }
                BinOp::Mod => {
                    if y == 0 {
                        Err(div_zero())
                    } else {
                        let r = x.checked_rem(y).ok_or_else(overflow)?;
                        Ok(Value::Int(if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r }))
                    }
                }
                BinOp::Pow => {
                    if y >= 0 {
                        u32::try_from(y)
                            .ok()
                            .and_then(|e| x.checked_pow(e))
                            .map(Value::Int)
                            .ok_or_else(overflow)
                    } else if x == 0 {
                        Err(div_zero())
                    } else {
                        Ok(Value::Real((x as f64).powf(y as f64)))
                    }
                }
            };
        }
        let x = a.as_f64().expect("number");
        let y = b.as_f64().expect("number");
        Ok(Value::Real(match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => {
                if y == 0.0 {
                    return Err(div_zero());
                }
                x / y
            }
            BinOp::FloorDiv => {
                if y == 0.0 {
                    return Err(div_zero());
                }
                (x / y).floor()
            }
            BinOp::Mod => {
                if y == 0.0 {
                    return Err(div_zero());
                }
                x - y * (x / y).floor()
            }
            BinOp::Pow => {
                if x == 0.0 && y < 0.0 {
                    return Err(div_zero());
                }
                x.powf(y)
            }
        }))
    }

    fn compare(&self, op: CmpOp, a: &Value, b: &Value, line: usize) -> Result<bool, RuntimeError> {
        match op {
            CmpOp::Eq => return Ok(a.equals(b)),
            CmpOp::Ne => return Ok(!a.equals(b)),
            CmpOp::In | CmpOp::NotIn => {
                let found = match b {
                    Value::List(l) => l.borrow().iter().any(|v| v.equals(a)),
                    Value::Tuple(t) => t.iter().any(|v| v.equals(a)),
                    Value::Str(s) => match a {
                        Value::Str(needle) => s.contains(&**needle),
                        other => {
                            return Err(self.type_error(
                                line,
                                format!(
                                    "'in <string>' requires string as left operand, not {}",
                                    other.type_name()
                                ),
                            ))
                        }
                    },
                    other => {
                        return Err(self.type_error(
                            line,
                            format!("argument of type '{}' is not iterable", other.type_name()),
                        ))
                    }
                };
                return Ok(if op == CmpOp::In { found } else { !found });
            }
            _ => {}
        }
        let ordering = match (a, b) {
            (Value::Str(x), Value::Str(y)) => x.cmp(y),
            (x, y) if x.is_number() && y.is_number() => match (x.as_i64(), y.as_i64()) {
                (Some(i), Some(j)) => i.cmp(&j),
                _ => {
                    let (fx, fy) = (x.as_f64().expect("number"), y.as_f64().expect("number"));
                    match fx.partial_cmp(&fy) {
                        Some(o) => o,
                        None => return Ok(false),
                    }
                }
            },
            _ => {
                return Err(self.type_error(
                    line,
                    format!(
                        "'{}' not supported between instances of '{}' and '{}'",
                        match op {
                            CmpOp::Lt => "<",
                            CmpOp::Gt => ">",
                            CmpOp::Le => "<=",
                            _ => ">=",
                        },
                        a.type_name(),
                        b.type_name()
                    ),
                ))
            }
        };
        use std::cmp::Ordering::*;
        Ok(match op {
            CmpOp::Lt => ordering == Less,
            CmpOp::Gt => ordering == Greater,
            CmpOp::Le => ordering != Greater,
            CmpOp::Ge => ordering != Less,
            _ => unreachable!(),
        })
    }
}

fn summary(bound: &[(String, String)]) -> Option<String> {
    if bound.is_empty() {
        return None;
    }
    let mut s = bound
        .iter()
        .map(|(n, v)| format!("{n} = {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    if s.chars().count() > 160 {
        s = s.chars().take(157).collect::<String>() + "...";
    }
    Some(s)
}
