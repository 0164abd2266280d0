//! Lexer, recursive-descent parser, AST, canonical serializer, and
//! semantic validation for the SPARQL 1.1 SELECT subset that covers
//! SciQA-style queries.
//!
//! The subset: SELECT with DISTINCT, star or item projections, aggregates
//! (COUNT, SUM, MIN, MAX, AVG) with AS aliases, triple blocks with `.` `;`
//! `,` abbreviations, FILTER, OPTIONAL, UNION, BIND, braced subqueries,
//! GROUP BY, ORDER BY, LIMIT, OFFSET, and PREFIX declarations. Everything
//! else is rejected with an explicit diagnostic rather than silently
//! accepted.

mod ast;
mod lexer;
mod parser;
mod serializer;
mod validate;

pub use ast::{
    Aggregate, AggregateArg, AggregateFunction, BinaryOp, CallTarget, Direction, Expression,
    GraphPattern, GroupCondition, IriRef, Literal, OrderCondition, PatternElement, Projection,
    ProjectionItem, SelectQuery, Term, TriplePattern, UnaryOp,
};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use serializer::serialize;
pub use validate::{extract_triple_patterns, validate_aggregation, ScopeKind, ScopedTriple};

use serde::{Deserialize, Serialize};

/// Stable diagnostic codes; reports key on these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    AggregationUngroupedVar,
    MalformedSubquery,
    UnknownPrefix,
    GeneralSyntax,
    UnsupportedForm,
}

impl std::fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DiagnosticCode::AggregationUngroupedVar => "AggregationUngroupedVar",
            DiagnosticCode::MalformedSubquery => "MalformedSubquery",
            DiagnosticCode::UnknownPrefix => "UnknownPrefix",
            DiagnosticCode::GeneralSyntax => "GeneralSyntax",
            DiagnosticCode::UnsupportedForm => "UnsupportedForm",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
    /// Byte offset into the query text, when known.
    pub offset: Option<usize>,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, message: impl Into<String>, offset: Option<usize>) -> Self {
        Self {
            code,
            message: message.into(),
            offset,
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.offset {
            Some(offset) => write!(f, "{}: {} (at byte {offset})", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}
