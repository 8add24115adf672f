//! Concrete syntax for scenarios: lexing, parsing with diagnostics, and
//! pretty-printing back to source.

pub mod diagnostics;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use diagnostics::{Code, Diagnostic, Pos, ScenarioSource, Severity};
pub use parser::{parse_query, parse_scenario};
pub use pretty::pretty;

#[cfg(test)]
mod tests;
