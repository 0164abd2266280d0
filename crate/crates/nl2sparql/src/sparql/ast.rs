//! AST for the supported SELECT subset. Nodes are immutable after
//! construction and compared structurally, which is what the round-trip
//! tests rely on.

/// A parsed SELECT query.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectQuery {
    /// Prefix declarations in source order: (prefix, IRI).
    pub prefixes: Vec<(String, String)>,
    pub distinct: bool,
    pub projection: Projection,
    pub where_clause: GraphPattern,
    pub group_by: Vec<GroupCondition>,
    pub order_by: Vec<OrderCondition>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Star,
    Items(Vec<ProjectionItem>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionItem {
    /// Plain projected variable, name without the `?`.
    Variable(String),
    /// `(AGG(...) AS ?alias)`
    Aggregate { aggregate: Aggregate, alias: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub function: AggregateFunction,
    pub distinct: bool,
    pub argument: AggregateArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateFunction {
    Count,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggregateFunction {
    pub fn name(&self) -> &'static str {
        match self {
            AggregateFunction::Count => "COUNT",
            AggregateFunction::Sum => "SUM",
            AggregateFunction::Min => "MIN",
            AggregateFunction::Max => "MAX",
            AggregateFunction::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregateArg {
    /// `COUNT(*)`
    Star,
    Variable(String),
}

/// Ordered list of pattern elements inside one brace scope.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphPattern {
    pub elements: Vec<PatternElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternElement {
    Triple(TriplePattern),
    Filter(Expression),
    Optional(GraphPattern),
    Union(GraphPattern, GraphPattern),
    /// A subquery in its own brace-delimited scope.
    SubSelect(Box<SelectQuery>),
    Bind {
        expression: Expression,
        variable: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Name without the `?`/`$` sigil.
    Variable(String),
    Iri(IriRef),
    Literal(Literal),
    /// The `a` shorthand for rdf:type in predicate position.
    RdfType,
}

impl Term {
    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IriRef {
    /// Absolute IRI without the surrounding angle brackets.
    Full(String),
    Prefixed { prefix: String, local: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    String {
        value: String,
        language: Option<String>,
        datatype: Option<IriRef>,
    },
    /// Numeric literal, lexical form as written.
    Numeric(String),
    Boolean(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Variable(String),
    Iri(IriRef),
    Literal(Literal),
    /// Builtin call such as `REGEX(?x, "p")` or a cast via IRI.
    Call {
        target: CallTarget,
        args: Vec<Expression>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expression>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallTarget {
    /// Builtin function, stored uppercase.
    Builtin(String),
    Iri(IriRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Minus,
    Plus,
}

impl UnaryOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            UnaryOp::Not => "!",
            UnaryOp::Minus => "-",
            UnaryOp::Plus => "+",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupCondition {
    Variable(String),
    Expression(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCondition {
    pub expression: Expression,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Asc,
    Desc,
}

impl SelectQuery {
    /// Resolves a prefix against the declarations, last declaration wins.
    pub fn resolve_prefix(&self, prefix: &str) -> Option<&str> {
        self.prefixes
            .iter()
            .rev()
            .find(|(p, _)| p == prefix)
            .map(|(_, iri)| iri.as_str())
    }

    /// Plain variables in the projection (no aggregates), without sigils.
    pub fn projected_plain_variables(&self) -> Vec<&str> {
        match &self.projection {
            Projection::Star => Vec::new(),
            Projection::Items(items) => items
                .iter()
                .filter_map(|item| match item {
                    ProjectionItem::Variable(name) => Some(name.as_str()),
                    ProjectionItem::Aggregate { .. } => None,
                })
                .collect(),
        }
    }

    pub fn projection_has_aggregate(&self) -> bool {
        match &self.projection {
            Projection::Star => false,
            Projection::Items(items) => items
                .iter()
                .any(|item| matches!(item, ProjectionItem::Aggregate { .. })),
        }
    }
}
