//! The dynamic API: predefined specialists plus generated methods, and the
//! depth-first implementation loop that grows it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::interpreter::{
    call_method, is_identifier, parse_method_body, Api, Limits, MethodBody, Predefined,
    RuntimeError, Value, BUILTINS,
};
use crate::scene::{Camera, Color, Material, Object3D, Scene, Shape};
use crate::specialists::{Backend, SpecialistSuite, DEFAULT_IOU_THRESHOLD};

/// Per-method implementation budget.
pub const IMPLEMENTATION_BUDGET: u32 = 5;
/// Joint attempts allowed for a dependency cycle before deletion.
pub const CYCLE_BUDGET: u32 = 5;

const PREDEFINED_CLEVR: &str = include_str!("../templates/predefined_clevr.txt");
const PREDEFINED_OMNI3D: &str = include_str!("../templates/predefined_omni3d.txt");

/// Benchmark flavour. Selects the predefined modules and prompt variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Clevr,
    Omni3d,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Clevr => "clevr",
            Profile::Omni3d => "omni3d",
        }
    }

    /// CLEVR sizes are categorical, so the 2D size module is not offered.
    pub fn predefined(self) -> &'static [Predefined] {
        match self {
            Profile::Clevr => &Predefined::ALL[..4],
            Profile::Omni3d => &Predefined::ALL,
        }
    }

    fn predefined_text(self) -> &'static str {
        match self {
            Profile::Clevr => PREDEFINED_CLEVR,
            Profile::Omni3d => PREDEFINED_OMNI3D,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "clevr" => Ok(Profile::Clevr),
            "omni3d" | "omni3d-bench" => Ok(Profile::Omni3d),
            other => Err(format!("unknown profile '{other}' (expected clevr or omni3d)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("malformed signature '{text}': {reason}")]
    MalformedSignature { text: String, reason: String },
    #[error("snapshot entry '{name}': {source}")]
    InvalidSnapshot {
        name: String,
        #[source]
        source: RuntimeError,
    },
    #[error("snapshot: {0}")]
    SnapshotFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Semantic parameter types understood by the placeholder test runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Image,
    Int,
    Float,
    String,
    List,
    Tuple,
    Bool,
}

impl ParamType {
    /// Lenient mapping from docstring or annotation type names.
    pub fn parse(text: &str) -> Option<ParamType> {
        let t = text.trim().to_ascii_lowercase();
        let head = t
            .split(|c: char| !c.is_ascii_alphanumeric())
            .find(|s| !s.is_empty())
            .unwrap_or("");
        Some(match head {
            "image" | "img" => ParamType::Image,
            "int" | "integer" => ParamType::Int,
            "float" | "real" | "double" | "number" => ParamType::Float,
            "str" | "string" => ParamType::String,
            "list" | "points" => ParamType::List,
            "tuple" => ParamType::Tuple,
            "bool" | "boolean" => ParamType::Bool,
            _ => return None,
        })
    }

    pub fn placeholder(self) -> Value {
        match self {
            ParamType::Image => Value::Image,
            ParamType::Int => Value::Int(1),
            ParamType::Float => Value::Real(1.0),
            ParamType::String => Value::str("red"),
            ParamType::List => Value::list(Vec::new()),
            ParamType::Tuple => Value::tuple(vec![Value::Int(1), Value::Int(1)]),
            ParamType::Bool => Value::Bool(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: Option<ParamType>,
}

impl Param {
    /// Placeholder used by test runs. Untyped parameters named `image` get
    /// the image handle; anything else untyped gets 1.
    pub fn placeholder(&self) -> Value {
        match self.ty {
            Some(t) => t.placeholder(),
            None if self.name == "image" => Value::Image,
            None => Value::Int(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSignature {
    pub name: String,
    pub params: Vec<Param>,
    pub docstring: String,
}

impl MethodSignature {
    /// Parses agent output: a docstring and a `def name(params):` line.
    /// Type annotations, defaults, and return annotations are tolerated.
    pub fn parse(docstring: &str, signature: &str) -> Result<Self, RegistryError> {
        let bad = |reason: &str| RegistryError::MalformedSignature {
            text: signature.trim().to_string(),
            reason: reason.to_string(),
        };
        let docstring = clean_docstring(docstring);
        if docstring.is_empty() {
            return Err(bad("empty docstring"));
        }
        let text = signature.trim();
        let rest = text.strip_prefix("def").ok_or_else(|| bad("expected 'def'"))?;
        if !rest.starts_with(char::is_whitespace) {
            return Err(bad("expected 'def'"));
        }
        let open = rest.find('(').ok_or_else(|| bad("missing '('"))?;
        let close = rest.rfind(')').ok_or_else(|| bad("missing ')'"))?;
        if close < open {
            return Err(bad("unbalanced parentheses"));
        }
        let name = rest[..open].trim();
        let tail = rest[close + 1..].trim();
        let tail = match tail.find("->") {
            Some(i) if tail[..i].trim().is_empty() => tail[i + 2..].trim(),
            _ => tail,
        };
        if !tail.ends_with(':') {
            return Err(bad("missing trailing ':'"));
        }
        if !is_identifier(name) {
            return Err(bad("invalid method name"));
        }
        if !name.starts_with('_') {
            return Err(bad("generated method names must start with an underscore"));
        }
        let mut params: Vec<Param> = Vec::new();
        for raw in split_params(&rest[open + 1..close]) {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let (decl, _default) = raw.split_once('=').unwrap_or((raw, ""));
            let (pname, annotation) = match decl.split_once(':') {
                Some((n, t)) => (n.trim(), Some(t.trim())),
                None => (decl.trim(), None),
            };
            if pname == "self" {
                continue;
            }
            if !is_identifier(pname) {
                return Err(bad(&format!("invalid parameter '{pname}'")));
            }
            if params.iter().any(|p| p.name == pname) {
                return Err(bad(&format!("duplicate parameter '{pname}'")));
            }
            let ty = annotation
                .and_then(ParamType::parse)
                .or_else(|| docstring_type(&docstring, pname));
            params.push(Param {
                name: pname.to_string(),
                ty,
            });
        }
        Ok(MethodSignature {
            name: name.to_string(),
            params,
            docstring,
        })
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn def_line(&self) -> String {
        let names: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        format!("def {}({}):", self.name, names.join(", "))
    }

    /// Docstring block followed by the `def` line, in the predefined style.
    pub fn render(&self) -> String {
        format!("\"\"\"\n{}\n\"\"\"\n{}", self.docstring, self.def_line())
    }
}

/// Strips surrounding triple quotes and blank lines.
fn clean_docstring(text: &str) -> String {
    let mut t = text.trim();
    for q in ["\"\"\"", "'''"] {
        if let Some(inner) = t.strip_prefix(q) {
            t = inner.strip_suffix(q).unwrap_or(inner);
            break;
        }
    }
    t.trim_matches('\n').trim_end().trim_start_matches([' ', '\t']).to_string()
}

/// Splits on top-level commas.
fn split_params(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

/// Finds `name (type): ...` in the docstring's argument list.
fn docstring_type(docstring: &str, name: &str) -> Option<ParamType> {
    docstring.lines().find_map(|line| {
        let rest = line.trim_start().strip_prefix(name)?;
        let rest = rest.trim_start().strip_prefix('(')?;
        let ty = &rest[..rest.find(')')?];
        ParamType::parse(ty)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodStatus {
    Pending,
    Implemented,
    Dropped,
}

#[derive(Debug, Clone)]
pub struct ApiMethod {
    pub signature: MethodSignature,
    pub body: Option<MethodBody>,
    pub status: MethodStatus,
    pub error_count: u32,
}

impl ApiMethod {
    pub fn body_text(&self) -> Option<&str> {
        self.body.as_ref().map(|b| b.text.as_str())
    }
}

/// A predefined module with its docstring block as shown to agents.
#[derive(Debug, Clone)]
pub struct PredefinedEntry {
    pub module: Predefined,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AddReport {
    pub accepted: usize,
    pub duplicates: usize,
    pub malformed: Vec<String>,
}

/// The previous failed attempt, threaded back into the next request.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorAttempt {
    /// Empty when the agent reply itself was unusable.
    pub body: String,
    pub error: String,
}

/// Error from an implementation request.
#[derive(Debug, thiserror::Error)]
pub enum ImplementError {
    /// The reply could not be used; counts against the method's budget.
    #[error("{0}")]
    Unusable(String),
    /// The backend failed; the build stops.
    #[error("agent failure: {0}")]
    Failure(String),
}

/// Produces method bodies. Implemented by the agents module.
pub trait ImplementationAgent {
    fn implement(
        &mut self,
        registry: &ApiRegistry,
        name: &str,
        prior: Option<&PriorAttempt>,
    ) -> Result<String, ImplementError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub name: String,
    pub status: MethodStatus,
    pub error_count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub methods: Vec<MethodOutcome>,
    pub agent_calls: usize,
    /// Each detected cycle, as a sorted name list.
    pub cycles: Vec<Vec<String>>,
}

#[derive(Debug, thiserror::Error)]
#[error("agent failure while implementing '{method}': {message}")]
pub struct AgentFailure {
    pub method: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiRegistry {
    profile: Profile,
    predefined: Vec<PredefinedEntry>,
    generated: IndexMap<String, ApiMethod>,
    stack: Vec<String>,
    cycle_attempts: HashMap<Vec<String>, u32>,
    limits: Limits,
    budget: u32,
}

impl ApiRegistry {
    pub fn new(profile: Profile) -> Self {
        let blocks = split_predefined(profile.predefined_text());
        let predefined = profile
            .predefined()
            .iter()
            .map(|&module| PredefinedEntry {
                module,
                text: blocks
                    .iter()
                    .find(|(name, _)| name == module.name())
                    .map(|(_, t)| t.clone())
                    .expect("predefined template lists every module"),
            })
            .collect();
        ApiRegistry {
            profile,
            predefined,
            generated: IndexMap::new(),
            stack: Vec::new(),
            cycle_attempts: HashMap::new(),
            limits: Limits::default(),
            budget: IMPLEMENTATION_BUDGET,
        }
    }

    /// Errors allowed per method before it is dropped. At least 1.
    pub fn with_budget(mut self, budget: u32) -> Self {
        self.budget = budget.max(1);
        self
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn predefined_entries(&self) -> &[PredefinedEntry] {
        &self.predefined
    }

    pub fn generated(&self) -> &IndexMap<String, ApiMethod> {
        &self.generated
    }

    pub fn method(&self, name: &str) -> Option<&ApiMethod> {
        self.generated.get(name)
    }

    pub fn implementation_stack(&self) -> &[String] {
        &self.stack
    }

    fn is_reserved(&self, name: &str) -> bool {
        Predefined::from_name(name).is_some() || BUILTINS.contains(&name)
    }

    /// Inserts new signatures as pending. Known names are skipped silently.
    pub fn add_signatures(&mut self, parsed: &[(String, String)]) -> AddReport {
        let mut report = AddReport::default();
        for (doc, sig) in parsed {
            match MethodSignature::parse(doc, sig) {
                Ok(signature) => {
                    if self.is_reserved(&signature.name)
                        || self.generated.contains_key(&signature.name)
                    {
                        report.duplicates += 1;
                        continue;
                    }
                    self.generated.insert(
                        signature.name.clone(),
                        ApiMethod {
                            signature,
                            body: None,
                            status: MethodStatus::Pending,
                            error_count: 0,
                        },
                    );
                    report.accepted += 1;
                }
                Err(e) => {
                    tracing::warn!("{e}");
                    report.malformed.push(e.to_string());
                }
            }
        }
        report
    }

    /// Runs a method body once with placeholder arguments. `candidate` is
    /// visible to itself so self-recursion can be exercised.
    pub fn test_run(
        &self,
        name: &str,
        body: &MethodBody,
        suite: &SpecialistSuite,
    ) -> Option<RuntimeError> {
        let method = self.generated.get(name)?;
        let args = method.signature.params.iter().map(Param::placeholder).collect();
        let view = ApiView {
            registry: self,
            candidate: Some((name, body)),
        };
        call_method(name, body, args, &view, suite, self.limits)
            .result
            .err()
    }

    /// Implements every pending method in insertion order.
    pub fn implement_all(
        &mut self,
        agent: &mut dyn ImplementationAgent,
        placeholder: &SpecialistSuite,
    ) -> Result<BuildReport, AgentFailure> {
        let mut report = BuildReport::default();
        let names: Vec<String> = self.generated.keys().cloned().collect();
        for name in names {
            if self.generated[&name].status != MethodStatus::Pending {
                continue;
            }
            let result = self.implement_one(&name, agent, placeholder, &mut report);
            self.stack.clear();
            result?;
        }
        report.methods = self
            .generated
            .values()
            .map(|m| MethodOutcome {
                name: m.signature.name.clone(),
                status: m.status,
                error_count: m.error_count,
            })
            .collect();
        Ok(report)
    }

    fn implement_one(
        &mut self,
        name: &str,
        agent: &mut dyn ImplementationAgent,
        suite: &SpecialistSuite,
        report: &mut BuildReport,
    ) -> Result<(), AgentFailure> {
        self.stack.push(name.to_string());
        let mut prior: Option<PriorAttempt> = None;
        'ask: loop {
            let method = &self.generated[name];
            if method.status != MethodStatus::Pending {
                break;
            }
            if method.error_count >= self.budget {
                tracing::info!("dropping {name} after {} errors", method.error_count);
                self.generated[name].status = MethodStatus::Dropped;
                break;
            }
            report.agent_calls += 1;
            let text = match agent.implement(self, name, prior.as_ref()) {
                Ok(t) => t,
                Err(ImplementError::Unusable(msg)) => {
                    self.generated[name].error_count += 1;
                    prior = Some(PriorAttempt {
                        body: String::new(),
                        error: msg,
                    });
                    continue;
                }
                Err(ImplementError::Failure(message)) => {
                    return Err(AgentFailure {
                        method: name.to_string(),
                        message,
                    })
                }
            };
            let params = self.generated[name].signature.param_names();
            let body = match parse_method_body(&text, &params) {
                Ok(b) => b,
                Err(e) => {
                    self.generated[name].error_count += 1;
                    prior = Some(PriorAttempt {
                        body: text,
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            loop {
                if self.generated[name].status != MethodStatus::Pending {
                    break 'ask;
                }
                let Some(err) = self.test_run(name, &body, suite) else {
                    let m = &mut self.generated[name];
                    m.body = Some(body);
                    m.status = MethodStatus::Implemented;
                    break 'ask;
                };
                let pending_dep = err
                    .undefined_method()
                    .filter(|u| {
                        self.generated
                            .get(*u)
                            .is_some_and(|m| m.status == MethodStatus::Pending)
                    })
                    .map(str::to_string);
                self.generated[name].error_count += 1;
                match pending_dep {
                    Some(dep) if self.stack.contains(&dep) => {
                        let pos = self.stack.iter().position(|s| *s == dep).expect("present");
                        let mut members: Vec<String> = self.stack[pos..].to_vec();
                        members.sort();
                        let attempts = self.cycle_attempts.entry(members.clone()).or_insert(0);
                        *attempts += 1;
                        tracing::info!("cycle {members:?}: joint attempt {attempts}");
                        if *attempts >= CYCLE_BUDGET {
                            for m in &members {
                                self.generated[m.as_str()].status = MethodStatus::Dropped;
                            }
                            report.cycles.push(members);
                            break 'ask;
                        }
                        prior = Some(PriorAttempt {
                            body: text,
                            error: err.to_string(),
                        });
                        continue 'ask;
                    }
                    Some(dep) => {
                        self.implement_one(&dep, agent, suite, report)?;
                        // Re-test the same body now that the dependency exists.
                        continue;
                    }
                    None => {
                        prior = Some(PriorAttempt {
                            body: text,
                            error: err.to_string(),
                        });
                        continue 'ask;
                    }
                }
            }
        }
        self.stack.pop();
        Ok(())
    }

    /// The predefined docstring blocks, exactly as shipped.
    pub fn render_predefined(&self) -> String {
        self.predefined
            .iter()
            .map(|p| p.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    fn render_generated<F: Fn(&ApiMethod) -> bool>(&self, keep: F) -> String {
        self.generated
            .values()
            .filter(|m| keep(m))
            .map(|m| m.signature.render())
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    /// Implemented generated methods, in insertion order.
    pub fn render_implemented(&self) -> String {
        self.render_generated(|m| m.status == MethodStatus::Implemented)
    }

    /// Everything the implementation agent may call besides the target:
    /// implemented and still-pending methods.
    pub fn render_generated_except(&self, target: &str) -> String {
        self.render_generated(|m| m.status != MethodStatus::Dropped && m.signature.name != target)
    }

    /// Predefined blocks, then implemented generated methods if requested.
    pub fn render_api_docstrings(&self, include_generated: bool) -> String {
        let mut out = self.render_predefined();
        if include_generated {
            let generated = self.render_implemented();
            if !generated.is_empty() {
                out.push_str("\n\n");
                out.push_str(&generated);
            }
        }
        out
    }

    /// Current API as seen by the signature agent: every method not dropped.
    pub fn render_current_api(&self) -> String {
        let mut out = self.render_predefined();
        let generated = self.render_generated(|m| m.status != MethodStatus::Dropped);
        if !generated.is_empty() {
            out.push_str("\n\n");
            out.push_str(&generated);
        }
        out
    }

    pub fn snapshot(&self) -> RegistrySnapshot {
        RegistrySnapshot {
            generated: self
                .generated
                .values()
                .map(|m| SnapshotEntry {
                    name: m.signature.name.clone(),
                    docstring: m.signature.docstring.clone(),
                    params: m.signature.params.clone(),
                    body_text: m.body_text().map(str::to_string),
                    status: m.status,
                    error_count: m.error_count,
                })
                .collect(),
        }
    }

    pub fn from_snapshot(profile: Profile, snapshot: RegistrySnapshot) -> Result<Self, RegistryError> {
        let mut registry = ApiRegistry::new(profile);
        for e in snapshot.generated {
            if registry.generated.contains_key(&e.name) || registry.is_reserved(&e.name) {
                return Err(RegistryError::SnapshotFormat(format!("duplicate method '{}'", e.name)));
            }
            let signature = MethodSignature {
                name: e.name.clone(),
                params: e.params,
                docstring: e.docstring,
            };
            let body = match (&e.body_text, e.status) {
                (Some(text), _) => Some(
                    parse_method_body(text, &signature.param_names()).map_err(|source| {
                        RegistryError::InvalidSnapshot {
                            name: e.name.clone(),
                            source,
                        }
                    })?,
                ),
                (None, MethodStatus::Implemented) => {
                    return Err(RegistryError::SnapshotFormat(format!(
                        "implemented method '{}' has no body",
                        e.name
                    )))
                }
                (None, _) => None,
            };
            registry.generated.insert(
                e.name,
                ApiMethod {
                    signature,
                    body,
                    status: e.status,
                    error_count: e.error_count,
                },
            );
        }
        Ok(registry)
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<(), RegistryError> {
        let text = self.snapshot().to_json();
        std::fs::write(path, text).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_snapshot(profile: Profile, path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let snapshot: RegistrySnapshot =
            serde_json::from_str(&text).map_err(|source| RegistryError::Json {
                path: path.display().to_string(),
                source,
            })?;
        ApiRegistry::from_snapshot(profile, snapshot)
    }
}

impl Api for ApiRegistry {
    fn predefined(&self, name: &str) -> Option<Predefined> {
        Predefined::from_name(name).filter(|p| self.profile.predefined().contains(p))
    }

    fn method(&self, name: &str) -> Option<&MethodBody> {
        self.generated
            .get(name)
            .filter(|m| m.status == MethodStatus::Implemented)
            .and_then(|m| m.body.as_ref())
    }
}

/// Registry view with one uncommitted candidate body.
struct ApiView<'a> {
    registry: &'a ApiRegistry,
    candidate: Option<(&'a str, &'a MethodBody)>,
}

impl Api for ApiView<'_> {
    fn predefined(&self, name: &str) -> Option<Predefined> {
        Api::predefined(self.registry, name)
    }

    fn method(&self, name: &str) -> Option<&MethodBody> {
        match self.candidate {
            Some((n, body)) if n == name => Some(body),
            _ => Api::method(self.registry, name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub name: String,
    pub docstring: String,
    pub params: Vec<Param>,
    pub body_text: Option<String>,
    pub status: MethodStatus,
    pub error_count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub generated: Vec<SnapshotEntry>,
}

impl RegistrySnapshot {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    /// Names grouped by status, for quick assertions and reports.
    pub fn names_with(&self, status: MethodStatus) -> BTreeSet<&str> {
        self.generated
            .iter()
            .filter(|e| e.status == status)
            .map(|e| e.name.as_str())
            .collect()
    }
}

/// Splits the predefined template into per-module blocks keyed by name.
fn split_predefined(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        if current.is_empty() && line.trim().is_empty() {
            continue;
        }
        current.push_str(line);
        current.push('\n');
        if let Some(rest) = line.strip_prefix("def ") {
            let name = rest.split('(').next().unwrap_or("").trim().to_string();
            out.push((name, current.trim_end().to_string()));
            current.clear();
        }
    }
    out
}

/// A fixed two-object scene used for placeholder test runs. Every point
/// resolves to its nearest object, so placeholder coordinates like (1, 1)
/// reach a real object.
pub fn placeholder_suite() -> SpecialistSuite {
    let scene = Scene::new(
        0,
        Camera::default(),
        vec![
            Object3D::new(0, Shape::Cube, Color::Red, Material::Metal, [-0.8, 0.0, 6.0], 0.7),
            Object3D::new(1, Shape::Sphere, Color::Blue, Material::Rubber, [0.8, 0.2, 5.0], 0.4),
        ],
    )
    .expect("placeholder scene is valid");
    SpecialistSuite::new(Arc::new(scene), Backend::Oracle, f64::INFINITY, DEFAULT_IOU_THRESHOLD)
        .expect("placeholder suite is valid")
}
