//! Reader and writer for the `:strips` + `:typing` fragment of PDDL.
//!
//! Symbols are case-insensitive and stored lowercased. Preconditions and
//! goals are positive conjunctions; effects are conjunctions of atoms and
//! negated atoms (deletes). Anything outside that is rejected with
//! [`ParseError::Unsupported`] naming the construct.

mod domain;
mod problem;
pub mod sexpr;
mod write;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use domain::parse_domain;
pub use problem::{parse_atom, parse_atom_list, parse_problem};

pub const ROOT_TYPE: &str = "object";

/// Source location; `line` and `column` are 1-based, `offset` is a byte index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Type,
    Predicate,
    Object,
    Variable,
    Action,
    Domain,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Type => "type",
            SymbolKind::Predicate => "predicate",
            SymbolKind::Object => "object",
            SymbolKind::Variable => "variable",
            SymbolKind::Action => "action",
            SymbolKind::Domain => "domain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("unsupported construct `{construct}` at {pos}")]
    Unsupported { construct: String, pos: Pos },
    #[error("undeclared {kind} `{name}` at {pos}")]
    Undeclared { kind: SymbolKind, name: String, pos: Pos },
    #[error("duplicate {kind} `{name}` at {pos}")]
    Duplicate { kind: SymbolKind, name: String, pos: Pos },
    #[error("predicate `{predicate}` expects {expected} arguments, found {found} at {pos}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
        pos: Pos,
    },
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn unsupported(pos: Pos, construct: impl Into<String>) -> Self {
        ParseError::Unsupported {
            construct: construct.into(),
            pos,
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::Unsupported { pos, .. }
            | ParseError::Undeclared { pos, .. }
            | ParseError::Duplicate { pos, .. }
            | ParseError::Arity { pos, .. } => *pos,
        }
    }
}

/// A name with its declared type (`?x - block`, `a - block`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// A parameter, stored with its leading `?`.
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

/// A lifted atom such as `(on ?x ?y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub predicate: String,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub preconditions: Vec<Literal>,
    pub add_effects: Vec<Literal>,
    pub del_effects: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared types in source order, excluding the implicit root `object`.
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub operators: Vec<Operator>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name == name)
    }

    pub fn parent_type(&self, name: &str) -> Option<&str> {
        self.types.iter().find(|t| t.name == name).map(|t| t.parent.as_str())
    }

    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        // Hierarchies are acyclic (checked at parse time), so this terminates.
        loop {
            if cur == ancestor {
                return true;
            }
            match self.parent_type(cur) {
                Some(p) => cur = p,
                None => return ancestor == ROOT_TYPE,
            }
        }
    }
}

/// A ground atom by name, e.g. `(on a b)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}
