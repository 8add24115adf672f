use std::fmt;
use std::path::Path;

/// Scenario text together with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSource {
    pub text: String,
    pub origin: String,
}

impl ScenarioSource {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        ScenarioSource {
            text: text.into(),
            origin: origin.into(),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref();
        Ok(ScenarioSource::new(
            std::fs::read_to_string(path)?,
            path.display().to_string(),
        ))
    }
}

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Code {
    Lex,
    Syntax,
    Sort,
    Arity,
    C2,
    Cycle,
    Undeclared,
    Builtin,
    Duplicate,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Lex => "E-LEX",
            Code::Syntax => "E-SYNTAX",
            Code::Sort => "E-SORT",
            Code::Arity => "E-ARITY",
            Code::C2 => "E-C2",
            Code::Cycle => "E-CYCLE",
            Code::Undeclared => "E-UNDECLARED",
            Code::Builtin => "E-BUILTIN",
            Code::Duplicate => "E-DUPLICATE",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub pos: Pos,
}

impl Diagnostic {
    pub fn error(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            pos,
        }
    }

    /// `origin:line:col: error[CODE]: message`
    pub fn render(&self, origin: &str) -> String {
        format!("{origin}:{}: {self}", self.pos)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}
