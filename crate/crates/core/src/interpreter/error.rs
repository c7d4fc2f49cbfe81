use std::fmt;

use serde::{Deserialize, Serialize};

use crate::specialists::SpecialistError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name")]
pub enum ErrorKind {
    SyntaxError,
    UndefinedMethod(String),
    UndefinedVariable(String),
    TypeMismatch,
    ArgumentCount,
    IndexOutOfRange,
    DivisionByZero,
    StepLimitExceeded,
    MissingFinalResult,
    SpecialistError,
    UnsupportedQuestion,
    NoObjectAtPoint,
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::SyntaxError => "SyntaxError",
            ErrorKind::UndefinedMethod(_) => "UndefinedMethod",
            ErrorKind::UndefinedVariable(_) => "UndefinedVariable",
            ErrorKind::TypeMismatch => "TypeMismatch",
            ErrorKind::ArgumentCount => "ArgumentCount",
            ErrorKind::IndexOutOfRange => "IndexOutOfRange",
            ErrorKind::DivisionByZero => "DivisionByZero",
            ErrorKind::StepLimitExceeded => "StepLimitExceeded",
            ErrorKind::MissingFinalResult => "MissingFinalResult",
            ErrorKind::SpecialistError => "SpecialistError",
            ErrorKind::UnsupportedQuestion => "UnsupportedQuestion",
            ErrorKind::NoObjectAtPoint => "NoObjectAtPoint",
        }
    }
}

/// An error raised while parsing or running a program.
///
/// Renders as a single stable line, `<Kind> at line <n>: <message>`, which is
/// fed verbatim back into agent prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub message: String,
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl RuntimeError {
    pub fn new(kind: ErrorKind, line: usize, message: impl Into<String>) -> Self {
        let message: String = message.into();
        RuntimeError {
            kind,
            message: one_line(&message),
            line,
            column: None,
        }
    }

    pub fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        let message: String = message.into();
        RuntimeError {
            kind: ErrorKind::SyntaxError,
            message: format!("{} (column {column})", one_line(&message)),
            line,
            column: Some(column),
        }
    }

    pub(crate) fn from_specialist(err: SpecialistError, line: usize) -> Self {
        let kind = match err {
            SpecialistError::NoObjectAtPoint { .. } => ErrorKind::NoObjectAtPoint,
            SpecialistError::UnsupportedQuestion(_) => ErrorKind::UnsupportedQuestion,
            _ => ErrorKind::SpecialistError,
        };
        RuntimeError::new(kind, line, err.to_string())
    }

    /// Name of the missing callee, for `UndefinedMethod` errors.
    pub fn undefined_method(&self) -> Option<&str> {
        match &self.kind {
            ErrorKind::UndefinedMethod(name) => Some(name),
            _ => None,
        }
    }
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}: {}", self.kind.name(), self.line, self.message)
    }
}

impl std::error::Error for RuntimeError {}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
