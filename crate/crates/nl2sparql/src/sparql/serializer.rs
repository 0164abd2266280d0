//! Canonical text form: one prefix per line, single spaces between tokens,
//! one pattern element per line, two-space indent per nesting level.
//! Serializing and reparsing any parsed query yields the same AST, and
//! serializing serialized text is a fixed point.

use super::ast::*;

pub fn serialize(query: &SelectQuery) -> String {
    let mut lines = Vec::new();
    for (prefix, iri) in &query.prefixes {
        lines.push(format!("PREFIX {prefix}: <{iri}>"));
    }
    write_select_body(query, 0, &mut lines);
    lines.join("\n")
}

fn indent(level: usize) -> String {
    "  ".repeat(level)
}

/// SELECT line, WHERE block, and solution modifiers, without prefixes.
fn write_select_body(query: &SelectQuery, level: usize, lines: &mut Vec<String>) {
    let ind = indent(level);
    let mut select = String::from("SELECT");
    if query.distinct {
        select.push_str(" DISTINCT");
    }
    match &query.projection {
        Projection::Star => select.push_str(" *"),
        Projection::Items(items) => {
            for item in items {
                select.push(' ');
                select.push_str(&projection_item(item));
            }
        }
    }
    lines.push(format!("{ind}{select}"));
    lines.push(format!("{ind}WHERE {{"));
    write_pattern(&query.where_clause, level + 1, lines);
    lines.push(format!("{ind}}}"));
    if !query.group_by.is_empty() {
        let conds: Vec<String> = query
            .group_by
            .iter()
            .map(|c| match c {
                GroupCondition::Variable(name) => format!("?{name}"),
                GroupCondition::Expression(expr) => format!("({})", expression(expr)),
            })
            .collect();
        lines.push(format!("{ind}GROUP BY {}", conds.join(" ")));
    }
    if !query.order_by.is_empty() {
        let conds: Vec<String> = query
            .order_by
            .iter()
            .map(|c| match (&c.direction, &c.expression) {
                (Direction::Asc, Expression::Variable(name)) => format!("?{name}"),
                (Direction::Asc, expr) => format!("ASC({})", expression(expr)),
                (Direction::Desc, expr) => format!("DESC({})", expression(expr)),
            })
            .collect();
        lines.push(format!("{ind}ORDER BY {}", conds.join(" ")));
    }
    if let Some(limit) = query.limit {
        lines.push(format!("{ind}LIMIT {limit}"));
    }
    if let Some(offset) = query.offset {
        lines.push(format!("{ind}OFFSET {offset}"));
    }
}

fn projection_item(item: &ProjectionItem) -> String {
    match item {
        ProjectionItem::Variable(name) => format!("?{name}"),
        ProjectionItem::Aggregate { aggregate, alias } => {
            let arg = match &aggregate.argument {
                AggregateArg::Star => "*".to_string(),
                AggregateArg::Variable(name) => format!("?{name}"),
            };
            let inner = if aggregate.distinct {
                format!("DISTINCT {arg}")
            } else {
                arg
            };
            format!("({}({inner}) AS ?{alias})", aggregate.function.name())
        }
    }
}

fn write_pattern(pattern: &GraphPattern, level: usize, lines: &mut Vec<String>) {
    let ind = indent(level);
    for element in &pattern.elements {
        match element {
            PatternElement::Triple(triple) => {
                lines.push(format!(
                    "{ind}{} {} {} .",
                    term(&triple.subject),
                    term(&triple.predicate),
                    term(&triple.object)
                ));
            }
            PatternElement::Filter(expr) => {
                lines.push(format!("{ind}FILTER ({})", expression(expr)));
            }
            PatternElement::Bind {
                expression: expr,
                variable,
            } => {
                lines.push(format!("{ind}BIND ({} AS ?{variable})", expression(expr)));
            }
            PatternElement::Optional(group) => {
                lines.push(format!("{ind}OPTIONAL {{"));
                write_pattern(group, level + 1, lines);
                lines.push(format!("{ind}}}"));
            }
            PatternElement::Union(left, right) => {
                lines.push(format!("{ind}{{"));
                write_pattern(left, level + 1, lines);
                lines.push(format!("{ind}}}"));
                lines.push(format!("{ind}UNION"));
                lines.push(format!("{ind}{{"));
                write_pattern(right, level + 1, lines);
                lines.push(format!("{ind}}}"));
            }
            PatternElement::SubSelect(sub) => {
                lines.push(format!("{ind}{{"));
                write_select_body(sub, level + 1, lines);
                lines.push(format!("{ind}}}"));
            }
        }
    }
}

pub(super) fn term(term: &Term) -> String {
    match term {
        Term::Variable(name) => format!("?{name}"),
        Term::Iri(iri) => iri_ref(iri),
        Term::Literal(lit) => literal(lit),
        Term::RdfType => "a".to_string(),
    }
}

fn iri_ref(iri: &IriRef) -> String {
    match iri {
        IriRef::Full(text) => format!("<{text}>"),
        IriRef::Prefixed { prefix, local } => format!("{prefix}:{local}"),
    }
}

fn literal(lit: &Literal) -> String {
    match lit {
        Literal::Numeric(lexical) => lexical.clone(),
        Literal::Boolean(true) => "true".to_string(),
        Literal::Boolean(false) => "false".to_string(),
        Literal::String {
            value,
            language,
            datatype,
        } => {
            let quoted = format!("\"{}\"", escape_string(value));
            if let Some(lang) = language {
                format!("{quoted}@{lang}")
            } else if let Some(dt) = datatype {
                format!("{quoted}^^{}", iri_ref(dt))
            } else {
                quoted
            }
        }
    }
}

fn escape_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

/// Expressions serialize with explicit parentheses around nested operator
/// expressions, so precedence survives a reparse.
pub(super) fn expression(expr: &Expression) -> String {
    match expr {
        Expression::Variable(name) => format!("?{name}"),
        Expression::Iri(iri) => iri_ref(iri),
        Expression::Literal(lit) => literal(lit),
        Expression::Call { target, args } => {
            let name = match target {
                CallTarget::Builtin(name) => name.clone(),
                CallTarget::Iri(iri) => iri_ref(iri),
            };
            let rendered: Vec<String> = args.iter().map(expression).collect();
            format!("{name}({})", rendered.join(", "))
        }
        Expression::Unary { op, operand } => {
            format!("{}{}", op.symbol(), operand_str(operand))
        }
        Expression::Binary { op, lhs, rhs } => {
            format!("{} {} {}", operand_str(lhs), op.symbol(), operand_str(rhs))
        }
    }
}

fn operand_str(expr: &Expression) -> String {
    match expr {
        Expression::Binary { .. } | Expression::Unary { .. } => {
            format!("({})", expression(expr))
        }
        _ => expression(expr),
    }
}
