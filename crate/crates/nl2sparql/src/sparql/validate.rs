//! Semantic validation beyond the grammar, mirroring the aggregation rule
//! QLever enforces, plus triple-pattern extraction for structural
//! comparisons.

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::{Diagnostic, DiagnosticCode};

/// Flags every plain projected variable that is missing from GROUP BY
/// while the projection contains an aggregate. This includes the implicit
/// GROUP BY case, where an aggregate appears and GROUP BY is absent.
/// Recurses into subqueries.
pub fn validate_aggregation(query: &SelectQuery) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    collect_aggregation_diagnostics(query, &mut diagnostics);
    diagnostics
}

fn collect_aggregation_diagnostics(query: &SelectQuery, out: &mut Vec<Diagnostic>) {
    if query.projection_has_aggregate() {
        for name in query.projected_plain_variables() {
            let grouped = query
                .group_by
                .iter()
                .any(|c| matches!(c, GroupCondition::Variable(v) if v == name));
            if !grouped {
                out.push(Diagnostic::new(
                    DiagnosticCode::AggregationUngroupedVar,
                    format!(
                        "variable ?{name} is selected but not aggregated; all non-aggregated \
                         variables must be part of the GROUP BY clause"
                    ),
                    None,
                ));
            }
        }
    }
    for_each_subselect(&query.where_clause, &mut |sub| {
        collect_aggregation_diagnostics(sub, out)
    });
}

fn for_each_subselect(pattern: &GraphPattern, f: &mut impl FnMut(&SelectQuery)) {
    for element in &pattern.elements {
        match element {
            PatternElement::SubSelect(sub) => f(sub),
            PatternElement::Optional(group) => for_each_subselect(group, f),
            PatternElement::Union(left, right) => {
                for_each_subselect(left, f);
                for_each_subselect(right, f);
            }
            _ => {}
        }
    }
}

/// Innermost scope a triple pattern sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeKind {
    Basic,
    Optional,
    Union,
    SubSelect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopedTriple {
    pub triple: TriplePattern,
    pub scope: ScopeKind,
}

/// Flattens the triple patterns from all scopes, depth-first in source
/// order, each annotated with its innermost scope kind.
pub fn extract_triple_patterns(query: &SelectQuery) -> Vec<ScopedTriple> {
    let mut triples = Vec::new();
    walk_pattern(&query.where_clause, ScopeKind::Basic, &mut triples);
    triples
}

fn walk_pattern(pattern: &GraphPattern, scope: ScopeKind, out: &mut Vec<ScopedTriple>) {
    for element in &pattern.elements {
        match element {
            PatternElement::Triple(triple) => out.push(ScopedTriple {
                triple: triple.clone(),
                scope,
            }),
            PatternElement::Optional(group) => walk_pattern(group, ScopeKind::Optional, out),
            PatternElement::Union(left, right) => {
                walk_pattern(left, ScopeKind::Union, out);
                walk_pattern(right, ScopeKind::Union, out);
            }
            PatternElement::SubSelect(sub) => {
                walk_pattern(&sub.where_clause, ScopeKind::SubSelect, out)
            }
            PatternElement::Filter(_) | PatternElement::Bind { .. } => {}
        }
    }
}
