//! A small, sandboxed Python-subset interpreter for generated methods and
//! programs.

mod ast;
mod error;
mod eval;
mod lexer;
mod parser;
mod value;

pub use ast::{MethodBody, Program};
pub use error::{ErrorKind, RuntimeError};
pub use eval::{
    call_method, execute_program, Api, Execution, ExecutionTrace, Limits, Predefined,
    PredefinedOnly, TraceEntry, BUILTINS, FINAL_RESULT, IMAGE,
};
pub use parser::{is_identifier, parse_method_body, parse_program};
pub use value::Value;
