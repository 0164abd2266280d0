//! Recursive-descent parser for the supported SELECT subset. Fails fast:
//! the first diagnostic carries the earliest error offset.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::{Diagnostic, DiagnosticCode};

pub fn parse(text: &str) -> Result<SelectQuery, Vec<Diagnostic>> {
    let tokens = tokenize(text).map_err(|d| vec![d])?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        prefixes: Vec::new(),
    };
    parser.parse_query().map_err(|d| vec![d])
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    prefixes: Vec<(String, String)>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn at_keyword(&self, word: &str) -> bool {
        let t = self.peek();
        t.kind == TokenKind::Keyword && t.text.eq_ignore_ascii_case(word)
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.at_keyword(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn at_punct(&self, text: &str) -> bool {
        let t = self.peek();
        t.kind == TokenKind::Punct && t.text == text
    }

    fn eat_punct(&mut self, text: &str) -> bool {
        if self.at_punct(text) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, text: &str) -> PResult<()> {
        if self.eat_punct(text) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{text}'")))
        }
    }

    fn error_here(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(
            DiagnosticCode::GeneralSyntax,
            message,
            Some(self.peek().offset),
        )
    }

    fn unsupported(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(
            DiagnosticCode::UnsupportedForm,
            message,
            Some(self.peek().offset),
        )
    }

    fn parse_query(&mut self) -> PResult<SelectQuery> {
        self.parse_prologue()?;
        let mut query = self.parse_select(true)?;
        if self.peek().kind != TokenKind::Eof {
            return Err(self.error_here(format!(
                "unexpected trailing content '{}'",
                self.peek().text
            )));
        }
        query.prefixes = self.prefixes.clone();
        Ok(query)
    }

    fn parse_prologue(&mut self) -> PResult<()> {
        loop {
            if self.at_keyword("BASE") {
                return Err(self.unsupported("BASE declarations are not supported"));
            }
            if !self.eat_keyword("PREFIX") {
                return Ok(());
            }
            let token = self.peek().clone();
            if token.kind != TokenKind::PrefixedName || !token.text.ends_with(':') {
                return Err(self.error_here("expected a prefix label ending in ':'"));
            }
            self.advance();
            let prefix = token.text.trim_end_matches(':').to_string();
            let iri_token = self.peek().clone();
            if iri_token.kind != TokenKind::Iri {
                return Err(self.error_here("expected an IRI after the prefix label"));
            }
            self.advance();
            let iri = iri_token.text[1..iri_token.text.len() - 1].to_string();
            self.prefixes.push((prefix, iri));
        }
    }

    /// Parses `SELECT ... WHERE {...}` plus solution modifiers. `top_level`
    /// only affects error wording; subqueries share the grammar.
    fn parse_select(&mut self, top_level: bool) -> PResult<SelectQuery> {
        if !self.eat_keyword("SELECT") {
            let t = self.peek();
            if t.kind == TokenKind::Keyword
                && ["ASK", "CONSTRUCT", "DESCRIBE"]
                    .iter()
                    .any(|f| t.text.eq_ignore_ascii_case(f))
            {
                return Err(self.unsupported(format!(
                    "{} queries are not supported; only SELECT",
                    t.text.to_uppercase()
                )));
            }
            return Err(self.error_here(if top_level {
                "expected a SELECT query".to_string()
            } else {
                "expected SELECT".to_string()
            }));
        }
        let distinct = self.eat_keyword("DISTINCT");
        if self.at_keyword("REDUCED") {
            return Err(self.unsupported("REDUCED is not supported"));
        }
        let projection = self.parse_projection()?;
        self.eat_keyword("WHERE");
        if !self.at_punct("{") {
            return Err(self.error_here("expected '{' to open the WHERE clause"));
        }
        let where_clause = self.parse_group()?;

        let mut group_by = Vec::new();
        if self.at_keyword("GROUP") {
            self.advance();
            if !self.eat_keyword("BY") {
                return Err(self.error_here("expected BY after GROUP"));
            }
            loop {
                if self.peek().kind == TokenKind::Variable {
                    let name = self.advance().text[1..].to_string();
                    group_by.push(GroupCondition::Variable(name));
                } else if self.at_punct("(") {
                    self.advance();
                    let expr = self.parse_expression()?;
                    self.expect_punct(")")?;
                    group_by.push(GroupCondition::Expression(expr));
                } else if group_by.is_empty() {
                    return Err(self.error_here("expected a variable or '(' after GROUP BY"));
                } else {
                    break;
                }
            }
        }
        if self.at_keyword("HAVING") {
            return Err(self.unsupported("HAVING is not supported"));
        }

        let mut order_by = Vec::new();
        if self.at_keyword("ORDER") {
            self.advance();
            if !self.eat_keyword("BY") {
                return Err(self.error_here("expected BY after ORDER"));
            }
            loop {
                if self.at_keyword("ASC") || self.at_keyword("DESC") {
                    let direction = if self.advance().text.eq_ignore_ascii_case("ASC") {
                        Direction::Asc
                    } else {
                        Direction::Desc
                    };
                    self.expect_punct("(")?;
                    let expression = self.parse_expression()?;
                    self.expect_punct(")")?;
                    order_by.push(OrderCondition {
                        expression,
                        direction,
                    });
                } else if self.peek().kind == TokenKind::Variable {
                    let name = self.advance().text[1..].to_string();
                    order_by.push(OrderCondition {
                        expression: Expression::Variable(name),
                        direction: Direction::Asc,
                    });
                } else if self.at_punct("(") {
                    self.advance();
                    let expression = self.parse_expression()?;
                    self.expect_punct(")")?;
                    order_by.push(OrderCondition {
                        expression,
                        direction: Direction::Asc,
                    });
                } else if order_by.is_empty() {
                    return Err(self.error_here("expected an ordering condition after ORDER BY"));
                } else {
                    break;
                }
            }
        }

        let mut limit = None;
        let mut offset = None;
        loop {
            if self.at_keyword("LIMIT") {
                if limit.is_some() {
                    return Err(self.error_here("LIMIT given twice"));
                }
                self.advance();
                limit = Some(self.parse_non_negative_int()?);
            } else if self.at_keyword("OFFSET") {
                if offset.is_some() {
                    return Err(self.error_here("OFFSET given twice"));
                }
                self.advance();
                offset = Some(self.parse_non_negative_int()?);
            } else {
                break;
            }
        }
        if self.at_keyword("VALUES") {
            return Err(self.unsupported("VALUES is not supported"));
        }

        let query = SelectQuery {
            prefixes: Vec::new(),
            distinct,
            projection,
            where_clause,
            group_by,
            order_by,
            limit,
            offset,
        };
        self.check_aliases(&query.projection)?;
        Ok(query)
    }

    fn parse_non_negative_int(&mut self) -> PResult<u64> {
        let token = self.peek().clone();
        if token.kind != TokenKind::NumericLiteral {
            return Err(self.error_here("expected a non-negative integer"));
        }
        let value = token
            .text
            .parse::<u64>()
            .map_err(|_| self.error_here("expected a non-negative integer"))?;
        self.advance();
        Ok(value)
    }

    fn parse_projection(&mut self) -> PResult<Projection> {
        if self.eat_punct("*") {
            return Ok(Projection::Star);
        }
        let mut items = Vec::new();
        loop {
            if self.peek().kind == TokenKind::Variable {
                let name = self.advance().text[1..].to_string();
                items.push(ProjectionItem::Variable(name));
            } else if self.at_punct("(") {
                let open_offset = self.peek().offset;
                self.advance();
                let aggregate = self.parse_aggregate(open_offset)?;
                if !self.eat_keyword("AS") {
                    return Err(self.error_here("expected AS after the aggregate expression"));
                }
                if self.peek().kind != TokenKind::Variable {
                    return Err(self.error_here("expected an alias variable after AS"));
                }
                let alias = self.advance().text[1..].to_string();
                self.expect_punct(")")?;
                items.push(ProjectionItem::Aggregate { aggregate, alias });
            } else if items.is_empty() {
                return Err(self.error_here("expected '*', a variable, or an aggregate in SELECT"));
            } else {
                return Ok(Projection::Items(items));
            }
        }
    }

    fn parse_aggregate(&mut self, open_offset: usize) -> PResult<Aggregate> {
        let token = self.peek().clone();
        let function = if token.kind == TokenKind::Keyword {
            match token.text.to_ascii_uppercase().as_str() {
                "COUNT" => Some(AggregateFunction::Count),
                "SUM" => Some(AggregateFunction::Sum),
                "MIN" => Some(AggregateFunction::Min),
                "MAX" => Some(AggregateFunction::Max),
                "AVG" => Some(AggregateFunction::Avg),
                _ => None,
            }
        } else {
            None
        };
        let Some(function) = function else {
            return Err(Diagnostic::new(
                DiagnosticCode::UnsupportedForm,
                "only aggregate expressions (COUNT, SUM, MIN, MAX, AVG) with AS are supported in projections",
                Some(open_offset),
            ));
        };
        self.advance();
        self.expect_punct("(")?;
        let distinct = self.eat_keyword("DISTINCT");
        let argument = if self.eat_punct("*") {
            if function != AggregateFunction::Count {
                return Err(self.error_here("'*' is only valid inside COUNT"));
            }
            AggregateArg::Star
        } else if self.peek().kind == TokenKind::Variable {
            AggregateArg::Variable(self.advance().text[1..].to_string())
        } else {
            return Err(self.error_here("expected a variable or '*' inside the aggregate"));
        };
        self.expect_punct(")")?;
        Ok(Aggregate {
            function,
            distinct,
            argument,
        })
    }

    fn check_aliases(&self, projection: &Projection) -> PResult<()> {
        if let Projection::Items(items) = projection {
            let mut seen = HashSet::new();
            for item in items {
                if let ProjectionItem::Aggregate { alias, .. } = item {
                    if !seen.insert(alias.clone()) {
                        return Err(Diagnostic::new(
                            DiagnosticCode::GeneralSyntax,
                            format!("duplicate alias ?{alias} in projection"),
                            None,
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses a brace-delimited group. A subquery is only legal as the
    /// entire content of the group; a SELECT showing up after other
    /// elements is the malformed-subquery failure mode.
    fn parse_group(&mut self) -> PResult<GraphPattern> {
        self.expect_punct("{")?;
        if self.at_keyword("SELECT") {
            let sub = self.parse_select(false)?;
            self.expect_punct("}")?;
            return Ok(GraphPattern {
                elements: vec![PatternElement::SubSelect(Box::new(sub))],
            });
        }
        let mut elements = Vec::new();
        loop {
            if self.eat_punct("}") {
                return Ok(GraphPattern { elements });
            }
            if self.peek().kind == TokenKind::Eof {
                return Err(self.error_here("unexpected end of input inside a graph pattern"));
            }
            if self.at_keyword("SELECT") {
                return Err(Diagnostic::new(
                    DiagnosticCode::MalformedSubquery,
                    "subquery must be enclosed in its own braces: found SELECT where '}' or a pattern element was expected",
                    Some(self.peek().offset),
                ));
            }
            if self.at_punct("{") {
                let first = self.parse_group()?;
                let element = if self.at_keyword("UNION") {
                    let mut current = first;
                    while self.eat_keyword("UNION") {
                        if !self.at_punct("{") {
                            return Err(self.error_here("expected '{' after UNION"));
                        }
                        let right = self.parse_group()?;
                        current = GraphPattern {
                            elements: vec![PatternElement::Union(current, right)],
                        };
                    }
                    current.elements.into_iter().next().expect("union element")
                } else if first.elements.len() == 1
                    && matches!(first.elements[0], PatternElement::SubSelect(_))
                {
                    first.elements.into_iter().next().expect("subselect")
                } else {
                    // Plain nested group: fold its elements into this scope.
                    elements.extend(first.elements);
                    self.eat_punct(".");
                    continue;
                };
                elements.push(element);
                self.eat_punct(".");
                continue;
            }
            if self.at_keyword("FILTER") {
                self.advance();
                let expression = self.parse_filter_constraint()?;
                elements.push(PatternElement::Filter(expression));
                self.eat_punct(".");
                continue;
            }
            if self.at_keyword("OPTIONAL") {
                self.advance();
                if !self.at_punct("{") {
                    return Err(self.error_here("expected '{' after OPTIONAL"));
                }
                let group = self.parse_group()?;
                elements.push(PatternElement::Optional(group));
                self.eat_punct(".");
                continue;
            }
            if self.at_keyword("BIND") {
                self.advance();
                self.expect_punct("(")?;
                let expression = self.parse_expression()?;
                if !self.eat_keyword("AS") {
                    return Err(self.error_here("expected AS inside BIND"));
                }
                if self.peek().kind != TokenKind::Variable {
                    return Err(self.error_here("expected a variable after AS in BIND"));
                }
                let variable = self.advance().text[1..].to_string();
                self.expect_punct(")")?;
                elements.push(PatternElement::Bind {
                    expression,
                    variable,
                });
                self.eat_punct(".");
                continue;
            }
            if self.peek().kind == TokenKind::Keyword {
                let word = self.peek().text.to_ascii_uppercase();
                if matches!(word.as_str(), "MINUS" | "GRAPH" | "SERVICE" | "VALUES") {
                    return Err(self.unsupported(format!("{word} is not supported")));
                }
            }
            self.parse_triples_block(&mut elements)?;
        }
    }

    fn parse_filter_constraint(&mut self) -> PResult<Expression> {
        if self.at_punct("(") {
            self.advance();
            let expression = self.parse_expression()?;
            self.expect_punct(")")?;
            return Ok(expression);
        }
        if self.at_keyword("EXISTS") || self.at_keyword("NOT") {
            return Err(self.unsupported("EXISTS constraints are not supported"));
        }
        // Bare builtin call form: FILTER REGEX(?x, "p")
        if self.peek().kind == TokenKind::Keyword && self.peek_at(1).text == "(" {
            return self.parse_primary_expression();
        }
        Err(self.error_here("expected '(' or a builtin call after FILTER"))
    }

    fn parse_triples_block(&mut self, elements: &mut Vec<PatternElement>) -> PResult<()> {
        loop {
            let subject = self.parse_term_for("subject")?;
            self.parse_property_list(subject, elements)?;
            if self.eat_punct(".") && self.starts_term() {
                continue;
            }
            return Ok(());
        }
    }

    fn starts_term(&self) -> bool {
        match self.peek().kind {
            TokenKind::Variable
            | TokenKind::Iri
            | TokenKind::PrefixedName
            | TokenKind::StringLiteral
            | TokenKind::NumericLiteral => true,
            TokenKind::Keyword => {
                self.peek().text == "a"
                    || self.peek().text.eq_ignore_ascii_case("true")
                    || self.peek().text.eq_ignore_ascii_case("false")
            }
            _ => false,
        }
    }

    fn parse_property_list(
        &mut self,
        subject: Term,
        elements: &mut Vec<PatternElement>,
    ) -> PResult<()> {
        loop {
            let predicate = self.parse_predicate()?;
            loop {
                let object = self.parse_term_for("object")?;
                elements.push(PatternElement::Triple(TriplePattern {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                }));
                if !self.eat_punct(",") {
                    break;
                }
            }
            if self.eat_punct(";") {
                // Trailing ';' before '.' or '}' is tolerated.
                if self.at_punct(".") || self.at_punct("}") {
                    return Ok(());
                }
                continue;
            }
            return Ok(());
        }
    }

    fn parse_predicate(&mut self) -> PResult<Term> {
        if self.at_punct("^") || self.at_punct("(") || self.at_punct("!") {
            return Err(Diagnostic::new(
                DiagnosticCode::GeneralSyntax,
                "property paths unsupported",
                Some(self.peek().offset),
            ));
        }
        let term = match self.peek().kind {
            TokenKind::Variable => Term::Variable(self.advance().text[1..].to_string()),
            TokenKind::Iri => {
                let text = self.advance().text;
                Term::Iri(IriRef::Full(text[1..text.len() - 1].to_string()))
            }
            TokenKind::PrefixedName => {
                let token = self.advance();
                Term::Iri(self.resolve_pname(&token)?)
            }
            TokenKind::Keyword if self.peek().text == "a" => {
                self.advance();
                Term::RdfType
            }
            _ => {
                return Err(self.error_here(format!(
                    "expected a predicate, found '{}'",
                    self.peek().text
                )))
            }
        };
        // A path operator directly after the predicate means a property
        // path, which this subset rejects explicitly.
        if self.at_punct("/") || self.at_punct("|") || self.at_punct("^") || self.at_punct("*")
            || self.at_punct("+")
        {
            return Err(Diagnostic::new(
                DiagnosticCode::GeneralSyntax,
                "property paths unsupported",
                Some(self.peek().offset),
            ));
        }
        Ok(term)
    }

    fn parse_term_for(&mut self, position: &str) -> PResult<Term> {
        match self.peek().kind {
            TokenKind::Variable => Ok(Term::Variable(self.advance().text[1..].to_string())),
            TokenKind::Iri => {
                let text = self.advance().text;
                Ok(Term::Iri(IriRef::Full(text[1..text.len() - 1].to_string())))
            }
            TokenKind::PrefixedName => {
                let token = self.advance();
                Ok(Term::Iri(self.resolve_pname(&token)?))
            }
            TokenKind::StringLiteral => Ok(Term::Literal(self.parse_string_literal()?)),
            TokenKind::NumericLiteral => {
                Ok(Term::Literal(Literal::Numeric(self.advance().text)))
            }
            TokenKind::Keyword if self.peek().text.eq_ignore_ascii_case("true") => {
                self.advance();
                Ok(Term::Literal(Literal::Boolean(true)))
            }
            TokenKind::Keyword if self.peek().text.eq_ignore_ascii_case("false") => {
                self.advance();
                Ok(Term::Literal(Literal::Boolean(false)))
            }
            _ => Err(self.error_here(format!(
                "expected a {position} term, found '{}'",
                self.peek().text
            ))),
        }
    }

    /// Splits a prefixed-name token and checks the prefix is declared.
    fn resolve_pname(&self, token: &Token) -> PResult<IriRef> {
        let colon = token.text.find(':').expect("prefixed name contains ':'");
        let prefix = &token.text[..colon];
        let local = &token.text[colon + 1..];
        if !self.prefixes.iter().any(|(p, _)| p == prefix) {
            return Err(Diagnostic::new(
                DiagnosticCode::UnknownPrefix,
                format!("prefix '{prefix}:' is not declared"),
                Some(token.offset),
            ));
        }
        Ok(IriRef::Prefixed {
            prefix: prefix.to_string(),
            local: local.to_string(),
        })
    }

    /// Parses a string literal token plus an optional language tag or
    /// `^^` datatype.
    fn parse_string_literal(&mut self) -> PResult<Literal> {
        let token = self.advance();
        let value = unquote(&token.text).map_err(|message| {
            Diagnostic::new(DiagnosticCode::GeneralSyntax, message, Some(token.offset))
        })?;
        if self.at_punct("@") {
            self.advance();
            if self.peek().kind != TokenKind::Keyword {
                return Err(self.error_here("expected a language tag after '@'"));
            }
            let language = self.advance().text;
            return Ok(Literal::String {
                value,
                language: Some(language),
                datatype: None,
            });
        }
        if self.at_punct("^^") {
            self.advance();
            let datatype = match self.peek().kind {
                TokenKind::Iri => {
                    let text = self.advance().text;
                    IriRef::Full(text[1..text.len() - 1].to_string())
                }
                TokenKind::PrefixedName => {
                    let token = self.advance();
                    self.resolve_pname(&token)?
                }
                _ => return Err(self.error_here("expected a datatype IRI after '^^'")),
            };
            return Ok(Literal::String {
                value,
                language: None,
                datatype: Some(datatype),
            });
        }
        Ok(Literal::String {
            value,
            language: None,
            datatype: None,
        })
    }

    fn parse_expression(&mut self) -> PResult<Expression> {
        self.parse_or_expression()
    }

    fn parse_or_expression(&mut self) -> PResult<Expression> {
        let mut lhs = self.parse_and_expression()?;
        while self.eat_punct("||") {
            let rhs = self.parse_and_expression()?;
            lhs = Expression::Binary {
                op: BinaryOp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_and_expression(&mut self) -> PResult<Expression> {
        let mut lhs = self.parse_relational_expression()?;
        while self.eat_punct("&&") {
            let rhs = self.parse_relational_expression()?;
            lhs = Expression::Binary {
                op: BinaryOp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_relational_expression(&mut self) -> PResult<Expression> {
        let lhs = self.parse_additive_expression()?;
        let op = if self.at_punct("=") {
            Some(BinaryOp::Eq)
        } else if self.at_punct("!=") {
            Some(BinaryOp::Ne)
        } else if self.at_punct("<") {
            Some(BinaryOp::Lt)
        } else if self.at_punct(">") {
            Some(BinaryOp::Gt)
        } else if self.at_punct("<=") {
            Some(BinaryOp::Le)
        } else if self.at_punct(">=") {
            Some(BinaryOp::Ge)
        } else {
            None
        };
        if let Some(op) = op {
            self.advance();
            let rhs = self.parse_additive_expression()?;
            return Ok(Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            });
        }
        Ok(lhs)
    }

    fn parse_additive_expression(&mut self) -> PResult<Expression> {
        let mut lhs = self.parse_multiplicative_expression()?;
        loop {
            let op = if self.at_punct("+") {
                BinaryOp::Add
            } else if self.at_punct("-") {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = self.parse_multiplicative_expression()?;
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn parse_multiplicative_expression(&mut self) -> PResult<Expression> {
        let mut lhs = self.parse_unary_expression()?;
        loop {
            let op = if self.at_punct("*") {
                BinaryOp::Mul
            } else if self.at_punct("/") {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = self.parse_unary_expression()?;
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn parse_unary_expression(&mut self) -> PResult<Expression> {
        let op = if self.at_punct("!") {
            Some(UnaryOp::Not)
        } else if self.at_punct("-") {
            Some(UnaryOp::Minus)
        } else if self.at_punct("+") {
            Some(UnaryOp::Plus)
        } else {
            None
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.parse_unary_expression()?;
            return Ok(Expression::Unary {
                op,
                operand: Box::new(operand),
            });
        }
        self.parse_primary_expression()
    }

    fn parse_primary_expression(&mut self) -> PResult<Expression> {
        match self.peek().kind {
            TokenKind::Punct if self.peek().text == "(" => {
                self.advance();
                let inner = self.parse_expression()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            TokenKind::Variable => Ok(Expression::Variable(self.advance().text[1..].to_string())),
            TokenKind::StringLiteral => Ok(Expression::Literal(self.parse_string_literal()?)),
            TokenKind::NumericLiteral => {
                Ok(Expression::Literal(Literal::Numeric(self.advance().text)))
            }
            TokenKind::Iri => {
                let text = self.advance().text;
                let iri = IriRef::Full(text[1..text.len() - 1].to_string());
                if self.at_punct("(") {
                    self.parse_call(CallTarget::Iri(iri))
                } else {
                    Ok(Expression::Iri(iri))
                }
            }
            TokenKind::PrefixedName => {
                let token = self.advance();
                let iri = self.resolve_pname(&token)?;
                if self.at_punct("(") {
                    self.parse_call(CallTarget::Iri(iri))
                } else {
                    Ok(Expression::Iri(iri))
                }
            }
            TokenKind::Keyword => {
                let word = self.peek().text.clone();
                if word.eq_ignore_ascii_case("true") {
                    self.advance();
                    return Ok(Expression::Literal(Literal::Boolean(true)));
                }
                if word.eq_ignore_ascii_case("false") {
                    self.advance();
                    return Ok(Expression::Literal(Literal::Boolean(false)));
                }
                if self.peek_at(1).text == "(" {
                    self.advance();
                    return self.parse_call(CallTarget::Builtin(word.to_ascii_uppercase()));
                }
                Err(self.error_here(format!("unexpected keyword '{word}' in expression")))
            }
            _ => Err(self.error_here(format!(
                "unexpected token '{}' in expression",
                self.peek().text
            ))),
        }
    }

    fn parse_call(&mut self, target: CallTarget) -> PResult<Expression> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.parse_expression()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(Expression::Call { target, args })
    }
}

/// Strips quotes from a string-literal token and resolves escapes.
fn unquote(text: &str) -> Result<String, String> {
    let (body, _quote) = if text.len() >= 6 && (text.starts_with("\"\"\"") || text.starts_with("'''"))
    {
        (&text[3..text.len() - 3], text.chars().next().unwrap())
    } else {
        (&text[1..text.len() - 1], text.chars().next().unwrap())
    };
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('b') => out.push('\u{0008}'),
            Some('f') => out.push('\u{000C}'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('\\') => out.push('\\'),
            Some('u') => {
                let hex: String = chars.by_ref().take(4).collect();
                let code = u32::from_str_radix(&hex, 16)
                    .map_err(|_| format!("invalid \\u escape '\\u{hex}'"))?;
                out.push(char::from_u32(code).ok_or("invalid unicode escape")?);
            }
            Some('U') => {
                let hex: String = chars.by_ref().take(8).collect();
                let code = u32::from_str_radix(&hex, 16)
                    .map_err(|_| format!("invalid \\U escape '\\U{hex}'"))?;
                out.push(char::from_u32(code).ok_or("invalid unicode escape")?);
            }
            Some(other) => return Err(format!("unknown escape '\\{other}'")),
            None => return Err("dangling escape at end of literal".to_string()),
        }
    }
    Ok(out)
}
