//! Line-oriented statement language.
//!
//! ```text
//! # HIV example
//! var H : h > no_h
//! var N : n > no_n
//! edge N -> H
//! P(h) = 0.005
//! P(i | c) = 1
//! 0.1 <= P(n | h) <= 0.25
//! P(h | n) > P(h | i)
//! 2*P(n) <= P(i)
//! S+(N,H)
//! Y-({I,C},H)
//! X-({N,I},h)
//! ```
//!
//! Literals inside `P(...)` are value identifiers separated by commas. `~v`
//! negates a value of a binary variable and `Var=value` qualifies a value
//! whose identifier is shared by several variables. Any statement may end in
//! `@tol=<float>` to override the equality tolerance.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{ProbTerm, Relation, Sign, Statement, StatementBody};
use crate::model::{Event, ModelError, Network, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DslErrorKind {
    Syntax,
    UnknownName,
    Range,
    Network,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct DslError {
    pub line: usize,
    pub column: usize,
    pub kind: DslErrorKind,
    pub message: String,
}

impl DslError {
    pub fn new(kind: DslErrorKind, line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            kind,
            message: message.into(),
        }
    }
}

/// A parsed statements file: the network and the ordered statements.
#[derive(Debug, Clone)]
pub struct Document {
    pub network: Network,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64, String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Pipe,
    Tilde,
    Star,
    Colon,
    At,
    Plus,
    Minus,
    Arrow,
    Rel(Relation),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, s) => format!("number `{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Star => "`*`".into(),
            Tok::Colon => "`:`".into(),
            Tok::At => "`@`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Rel(r) => format!("`{}`", r.symbol()),
        }
    }
}

/// Token plus its 1-based column.
type Spanned = (Tok, usize);

fn lex(line_no: usize, text: &str) -> Result<Vec<Spanned>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let raw: String = chars[start..i].iter().collect();
            let value: f64 = raw.parse().map_err(|_| {
                DslError::new(
                    DslErrorKind::Syntax,
                    line_no,
                    col,
                    format!("bad number `{raw}`"),
                )
            })?;
            out.push((Tok::Number(value, raw), col));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('<', Some('=')) => (Tok::Rel(Relation::Le), 2),
            ('>', Some('=')) => (Tok::Rel(Relation::Ge), 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('<', _) => (Tok::Rel(Relation::Lt), 1),
            ('>', _) => (Tok::Rel(Relation::Gt), 1),
            ('=', _) => (Tok::Rel(Relation::Eq), 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (',', _) => (Tok::Comma, 1),
            ('|', _) => (Tok::Pipe, 1),
            ('~', _) => (Tok::Tilde, 1),
            ('*', _) => (Tok::Star, 1),
            (':', _) => (Tok::Colon, 1),
            ('@', _) => (Tok::At, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-' | '\u{2212}', _) => (Tok::Minus, 1),
            ('\u{2264}', _) => (Tok::Rel(Relation::Le), 1),
            ('\u{2265}', _) => (Tok::Rel(Relation::Ge), 1),
            _ => {
                return Err(DslError::new(
                    DslErrorKind::Syntax,
                    line_no,
                    col,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        out.push((tok, col));
        i += width;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Spanned], line: usize, text: &str) -> Self {
        Self {
            toks,
            pos: 0,
            line,
            end_col: text.chars().count() + 1,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, kind: DslErrorKind, message: impl Into<String>) -> DslError {
        DslError::new(kind, self.line, self.col(), message)
    }

    fn unexpected(&self, expected: &str) -> DslError {
        let found = self.peek().map_or("end of line".to_string(), Tok::describe);
        self.error(
            DslErrorKind::Syntax,
            format!("expected {expected}, found {found}"),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), DslError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<(String, usize), DslError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, col))
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn number(&mut self) -> Result<(f64, usize), DslError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Number(v, _)) => {
                let v = *v;
                self.pos += 1;
                Ok((v, col))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Maps bare value identifiers to the variables that declare them.
struct ValueIndex {
    owners: HashMap<String, Vec<usize>>,
}

impl ValueIndex {
    fn new(network: &Network) -> Self {
        let mut owners: HashMap<String, Vec<usize>> = HashMap::new();
        for (vi, var) in network.variables().iter().enumerate() {
            for value in &var.values {
                owners.entry(value.clone()).or_default().push(vi);
            }
        }
        Self { owners }
    }

    fn is_unique(&self, value: &str) -> bool {
        self.owners.get(value).is_some_and(|o| o.len() == 1)
    }
}

struct StatementParser<'n> {
    network: &'n Network,
    values: ValueIndex,
}

impl<'n> StatementParser<'n> {
    fn new(network: &'n Network) -> Self {
        Self {
            network,
            values: ValueIndex::new(network),
        }
    }

    fn literal(&self, cur: &mut Cursor<'_>) -> Result<(usize, usize), DslError> {
        let negated = if cur.peek() == Some(&Tok::Tilde) {
            cur.next();
            true
        } else {
            false
        };
        let (first, col) = cur.ident("a value identifier")?;
        let (var, pos) = if cur.peek() == Some(&Tok::Rel(Relation::Eq))
            && matches!(cur.peek_at(1), Some(Tok::Ident(_)))
            && self.network.var_index(&first).is_some()
        {
            cur.next();
            let (value, vcol) = cur.ident("a value identifier")?;
            let vi = self.network.var_index(&first).unwrap();
            let pos = self
                .network
                .variable(vi)
                .value_position(&value)
                .ok_or_else(|| {
                    DslError::new(
                        DslErrorKind::UnknownName,
                        cur.line,
                        vcol,
                        format!("variable `{first}` has no value `{value}`"),
                    )
                })?;
            (vi, pos)
        } else {
            match self.values.owners.get(&first).map(Vec::as_slice) {
                None | Some([]) => {
                    return Err(DslError::new(
                        DslErrorKind::UnknownName,
                        cur.line,
                        col,
                        format!("`{first}` is not a declared value"),
                    ))
                }
                Some([vi]) => (
                    *vi,
                    self.network.variable(*vi).value_position(&first).unwrap(),
                ),
                Some(_) => {
                    return Err(DslError::new(
                        DslErrorKind::UnknownName,
                        cur.line,
                        col,
                        format!("value `{first}` is ambiguous; qualify it as `Var={first}`"),
                    ))
                }
            }
        };
        if negated {
            if self.network.variable(var).arity() != 2 {
                return Err(DslError::new(
                    DslErrorKind::Syntax,
                    cur.line,
                    col,
                    format!(
                        "`~` only negates values of binary variables; `{}` has {} values",
                        self.network.variable(var).name,
                        self.network.variable(var).arity()
                    ),
                ));
            }
            Ok((var, 1 - pos))
        } else {
            Ok((var, pos))
        }
    }

    fn event(&self, cur: &mut Cursor<'_>) -> Result<Event, DslError> {
        let col = cur.col();
        let mut lits = Vec::new();
        if matches!(cur.peek(), Some(Tok::RParen | Tok::Pipe)) {
            return Ok(Event::sure());
        }
        loop {
            lits.push(self.literal(cur)?);
            if cur.peek() == Some(&Tok::Comma) {
                cur.next();
            } else {
                break;
            }
        }
        Event::from_indices(self.network, lits)
            .map_err(|e| DslError::new(DslErrorKind::Syntax, cur.line, col, e.to_string()))
    }

    fn prob_term(&self, cur: &mut Cursor<'_>) -> Result<ProbTerm, DslError> {
        match cur.peek() {
            Some(Tok::Ident(s)) if s == "P" || s == "Pr" => {
                cur.next();
            }
            _ => return Err(cur.unexpected("`P(`")),
        }
        cur.expect(Tok::LParen, "`(`")?;
        let target = self.event(cur)?;
        let given = if cur.peek() == Some(&Tok::Pipe) {
            cur.next();
            Some(self.event(cur)?)
        } else {
            None
        };
        cur.expect(Tok::RParen, "`)`")?;
        Ok(ProbTerm { target, given })
    }

    fn variable(&self, cur: &mut Cursor<'_>) -> Result<usize, DslError> {
        let (name, col) = cur.ident("a variable name")?;
        self.network.var_index(&name).ok_or_else(|| {
            DslError::new(
                DslErrorKind::UnknownName,
                cur.line,
                col,
                format!("unknown variable `{name}`"),
            )
        })
    }

    fn sign(&self, cur: &mut Cursor<'_>) -> Result<Sign, DslError> {
        let sign = match cur.peek() {
            Some(Tok::Plus) => Sign::Positive,
            Some(Tok::Minus) => Sign::Negative,
            Some(Tok::Number(v, raw)) if *v == 0.0 && raw == "0" => Sign::Zero,
            _ => return Err(cur.unexpected("a sign `+`, `-` or `0`")),
        };
        cur.next();
        Ok(sign)
    }

    fn pair(&self, cur: &mut Cursor<'_>) -> Result<(usize, usize), DslError> {
        cur.expect(Tok::LBrace, "`{`")?;
        let a = self.variable(cur)?;
        cur.expect(Tok::Comma, "`,`")?;
        let b = self.variable(cur)?;
        cur.expect(Tok::RBrace, "`}`")?;
        Ok((a, b))
    }

    fn probability(&self, cur: &Cursor<'_>, value: f64, col: usize) -> Result<f64, DslError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(DslError::new(
                DslErrorKind::Range,
                cur.line,
                col,
                format!("probability {value} is outside [0, 1]"),
            ));
        }
        Ok(value)
    }

    fn coefficient(&self, cur: &mut Cursor<'_>) -> Result<f64, DslError> {
        if let Some(Tok::Number(..)) = cur.peek() {
            if cur.peek_at(1) == Some(&Tok::Star) {
                let (v, _) = cur.number()?;
                cur.next();
                return Ok(v);
            }
        }
        Ok(1.0)
    }

    fn qualitative(
        &self,
        cur: &mut Cursor<'_>,
        head: &str,
        sign: Sign,
    ) -> Result<StatementBody, DslError> {
        cur.expect(Tok::LParen, "`(`")?;
        let body = match head {
            "S" => {
                let source = self.variable(cur)?;
                cur.expect(Tok::Comma, "`,`")?;
                let target = self.variable(cur)?;
                StatementBody::Influence {
                    sign,
                    source,
                    target,
                }
            }
            "Y" => {
                let pair = self.pair(cur)?;
                cur.expect(Tok::Comma, "`,`")?;
                let target = self.variable(cur)?;
                StatementBody::AdditiveSynergy { sign, pair, target }
            }
            _ => {
                let pair = self.pair(cur)?;
                cur.expect(Tok::Comma, "`,`")?;
                let (effect_var, effect_value) = self.literal(cur)?;
                StatementBody::ProductSynergy {
                    sign,
                    pair,
                    effect_var,
                    effect_value,
                }
            }
        };
        cur.expect(Tok::RParen, "`)`")?;
        Ok(body)
    }

    fn body(&self, cur: &mut Cursor<'_>) -> Result<StatementBody, DslError> {
        match cur.peek() {
            Some(Tok::Ident(h))
                if (h == "S" || h == "Y" || h == "X")
                    && matches!(
                        cur.peek_at(1),
                        Some(Tok::Plus | Tok::Minus | Tok::Number(..))
                    ) =>
            {
                let head = h.clone();
                cur.next();
                let sign = self.sign(cur)?;
                self.qualitative(cur, &head, sign)
            }
            // `S0` lexes as one identifier.
            Some(Tok::Ident(h))
                if matches!(h.as_str(), "S0" | "Y0" | "X0")
                    && cur.peek_at(1) == Some(&Tok::LParen) =>
            {
                let head = h[..1].to_string();
                cur.next();
                self.qualitative(cur, &head, Sign::Zero)
            }
            Some(Tok::Number(..)) if cur.peek_at(1) == Some(&Tok::Rel(Relation::Le)) => {
                let (lo, lo_col) = cur.number()?;
                cur.next();
                let term = self.prob_term(cur)?;
                cur.expect(Tok::Rel(Relation::Le), "`<=`")?;
                let (hi, hi_col) = cur.number()?;
                let lo = self.probability(cur, lo, lo_col)?;
                let hi = self.probability(cur, hi, hi_col)?;
                if lo >= hi {
                    return Err(DslError::new(
                        DslErrorKind::Range,
                        cur.line,
                        lo_col,
                        format!("interval bounds must satisfy lower < upper, got {lo} and {hi}"),
                    ));
                }
                Ok(StatementBody::Interval { term, lo, hi })
            }
            _ => {
                let lhs_col = cur.col();
                let lhs_coef = self.coefficient(cur)?;
                let lhs = self.prob_term(cur)?;
                let relation = match cur.peek() {
                    Some(Tok::Rel(r)) => *r,
                    _ => return Err(cur.unexpected("a relation")),
                };
                cur.next();
                // `P(..) = p` is a point estimate; anything else is a comparison.
                if lhs_coef == 1.0
                    && relation == Relation::Eq
                    && matches!(cur.peek(), Some(Tok::Number(..)))
                    && cur.peek_at(1) != Some(&Tok::Star)
                {
                    let (p, col) = cur.number()?;
                    let p = self.probability(cur, p, col)?;
                    return Ok(StatementBody::Point { term: lhs, p });
                }
                let rhs_col = cur.col();
                let rhs_coef = self.coefficient(cur)?;
                let rhs = self.prob_term(cur)?;
                for (coef, col) in [(lhs_coef, lhs_col), (rhs_coef, rhs_col)] {
                    if coef < 0.0 || !coef.is_finite() {
                        return Err(DslError::new(
                            DslErrorKind::Range,
                            cur.line,
                            col,
                            format!("comparison coefficients must be non-negative, got {coef}"),
                        ));
                    }
                }
                Ok(StatementBody::Comparison {
                    lhs_coef,
                    lhs,
                    relation,
                    rhs_coef,
                    rhs,
                })
            }
        }
    }

    fn tolerance(&self, cur: &mut Cursor<'_>) -> Result<Option<f64>, DslError> {
        if cur.peek() != Some(&Tok::At) {
            return Ok(None);
        }
        cur.next();
        match cur.ident("`tol`")? {
            (s, _) if s == "tol" => {}
            (s, col) => {
                return Err(DslError::new(
                    DslErrorKind::Syntax,
                    cur.line,
                    col,
                    format!("unknown annotation `{s}`"),
                ))
            }
        }
        cur.expect(Tok::Rel(Relation::Eq), "`=`")?;
        let (tol, col) = cur.number()?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(DslError::new(
                DslErrorKind::Range,
                cur.line,
                col,
                "tolerance must be positive",
            ));
        }
        Ok(Some(tol))
    }

    fn statement(
        &self,
        line_no: usize,
        text: &str,
        toks: &[Spanned],
        id: String,
    ) -> Result<Statement, DslError> {
        let mut cur = Cursor::new(toks, line_no, text);
        let body = self.body(&mut cur)?;
        let tol_eq = self.tolerance(&mut cur)?;
        if !cur.at_end() {
            return Err(cur.unexpected("end of line"));
        }
        Ok(Statement {
            id,
            line: line_no,
            body,
            tol_eq,
        })
    }
}

fn is_keyword_line(toks: &[Spanned], keyword: &str) -> bool {
    matches!(toks.first(), Some((Tok::Ident(s), _)) if s == keyword)
        && !matches!(toks.get(1), Some((Tok::LParen, _)))
}

/// Parses a complete statements file: `var` and `edge` declarations (in any
/// position) followed by statements, numbered `s1`, `s2`, ... in file order.
pub fn parse_document(text: &str) -> Result<Document, DslError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(line_no, raw)?;
        if !toks.is_empty() {
            lines.push((line_no, raw, toks));
        }
    }

    let mut variables: Vec<Variable> = Vec::new();
    let mut var_lines: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(String, String, usize, usize)> = Vec::new();
    for (line_no, raw, toks) in &lines {
        if is_keyword_line(toks, "var") {
            let mut cur = Cursor::new(toks, *line_no, raw);
            cur.next();
            let (name, col) = cur.ident("a variable name")?;
            cur.expect(Tok::Colon, "`:`")?;
            let mut values = vec![cur.ident("a value identifier")?.0];
            while cur.peek() == Some(&Tok::Rel(Relation::Gt)) {
                cur.next();
                values.push(cur.ident("a value identifier")?.0);
            }
            if !cur.at_end() {
                return Err(cur.unexpected("`>` or end of line"));
            }
            if var_lines.insert(name.clone(), *line_no).is_some() {
                return Err(DslError::new(
                    DslErrorKind::Network,
                    *line_no,
                    col,
                    format!("variable `{name}` is declared more than once"),
                ));
            }
            variables.push(Variable { name, values });
        } else if is_keyword_line(toks, "edge") {
            let mut cur = Cursor::new(toks, *line_no, raw);
            cur.next();
            let (parent, pcol) = cur.ident("a variable name")?;
            cur.expect(Tok::Arrow, "`->`")?;
            let (child, ccol) = cur.ident("a variable name")?;
            if !cur.at_end() {
                return Err(cur.unexpected("end of line"));
            }
            edges.push((parent, child, *line_no, pcol.min(ccol)));
        }
    }
    for (parent, child, line_no, _) in &edges {
        for name in [parent, child] {
            if !var_lines.contains_key(name) {
                let col = lines
                    .iter()
                    .find(|(l, ..)| l == line_no)
                    .and_then(|(_, _, toks)| {
                        toks.iter()
                            .find(|(t, _)| matches!(t, Tok::Ident(s) if s == name))
                            .map(|(_, c)| *c)
                    })
                    .unwrap_or(1);
                return Err(DslError::new(
                    DslErrorKind::UnknownName,
                    *line_no,
                    col,
                    format!("edge references undeclared variable `{name}`"),
                ));
            }
        }
    }
    let edge_pairs: Vec<(&str, &str)> = edges
        .iter()
        .map(|(p, c, ..)| (p.as_str(), c.as_str()))
        .collect();
    let network = Network::build(variables, &edge_pairs).map_err(|e| {
        let line = match &e {
            ModelError::DomainTooSmall { name, .. }
            | ModelError::DuplicateValue { var: name, .. } => {
                var_lines.get(name).copied().unwrap_or(0)
            }
            ModelError::Cycle(_) | ModelError::SelfLoop(_) => {
                edges.last().map_or(0, |(_, _, l, _)| *l)
            }
            _ => 0,
        };
        DslError::new(DslErrorKind::Network, line, 1, e.to_string())
    })?;

    let parser = StatementParser::new(&network);
    let mut statements = Vec::new();
    for (line_no, raw, toks) in &lines {
        if is_keyword_line(toks, "var") || is_keyword_line(toks, "edge") {
            continue;
        }
        let id = format!("s{}", statements.len() + 1);
        statements.push(parser.statement(*line_no, raw, toks, id)?);
    }
    Ok(Document {
        network,
        statements,
    })
}

/// Parses one statement line against an existing network.
pub fn parse_statement_line(
    network: &Network,
    text: &str,
    id: impl Into<String>,
) -> Result<Statement, DslError> {
    let toks = lex(1, text)?;
    if toks.is_empty() {
        return Err(DslError::new(DslErrorKind::Syntax, 1, 1, "empty statement"));
    }
    if is_keyword_line(&toks, "var") || is_keyword_line(&toks, "edge") {
        return Err(DslError::new(
            DslErrorKind::Syntax,
            1,
            1,
            "network declarations cannot be added to an existing session",
        ));
    }
    StatementParser::new(network).statement(1, text, &toks, id.into())
}

/// Parses a query such as `P(h | ~n,~i,~c)`.
pub fn parse_query(network: &Network, text: &str) -> Result<ProbTerm, DslError> {
    let toks = lex(1, text)?;
    let parser = StatementParser::new(network);
    let mut cur = Cursor::new(&toks, 1, text);
    let term = parser.prob_term(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.unexpected("end of query"));
    }
    Ok(term)
}

fn format_literal(network: &Network, values: &ValueIndex, var: usize, pos: usize) -> String {
    let variable = network.variable(var);
    if variable.arity() == 2 && pos == 1 && values.is_unique(&variable.values[0]) {
        return format!("~{}", variable.values[0]);
    }
    let value = &variable.values[pos];
    if values.is_unique(value) {
        value.clone()
    } else {
        format!("{}={}", variable.name, value)
    }
}

fn format_event(network: &Network, values: &ValueIndex, event: &Event) -> String {
    event
        .literals()
        .iter()
        .map(|&(v, p)| format_literal(network, values, v, p))
        .collect::<Vec<_>>()
        .join(",")
}

fn format_term(network: &Network, values: &ValueIndex, term: &ProbTerm) -> String {
    let target = format_event(network, values, &term.target);
    match &term.given {
        Some(given) => format!("P({target} | {})", format_event(network, values, given)),
        None => format!("P({target})"),
    }
}

/// Formats a query term in DSL syntax.
pub fn format_query(network: &Network, term: &ProbTerm) -> String {
    format_term(network, &ValueIndex::new(network), term)
}

fn coef_prefix(c: f64) -> String {
    if c == 1.0 {
        String::new()
    } else {
        format!("{c}*")
    }
}

/// Formats a statement in DSL syntax; [`parse_statement_line`] reads it back.
pub fn format_statement(network: &Network, statement: &Statement) -> String {
    let values = ValueIndex::new(network);
    let name = |v: usize| network.variable(v).name.as_str();
    let mut out = match &statement.body {
        StatementBody::Point { term, p } => {
            format!("{} = {p}", format_term(network, &values, term))
        }
        StatementBody::Interval { term, lo, hi } => {
            format!("{lo} <= {} <= {hi}", format_term(network, &values, term))
        }
        StatementBody::Comparison {
            lhs_coef,
            lhs,
            relation,
            rhs_coef,
            rhs,
        } => format!(
            "{}{} {} {}{}",
            coef_prefix(*lhs_coef),
            format_term(network, &values, lhs),
            relation.symbol(),
            coef_prefix(*rhs_coef),
            format_term(network, &values, rhs)
        ),
        StatementBody::Influence {
            sign,
            source,
            target,
        } => format!("S{}({},{})", sign.symbol(), name(*source), name(*target)),
        StatementBody::AdditiveSynergy { sign, pair, target } => format!(
            "Y{}({{{},{}}},{})",
            sign.symbol(),
            name(pair.0),
            name(pair.1),
            name(*target)
        ),
        StatementBody::ProductSynergy {
            sign,
            pair,
            effect_var,
            effect_value,
        } => format!(
            "X{}({{{},{}}},{})",
            sign.symbol(),
            name(pair.0),
            name(pair.1),
            format_literal(network, &values, *effect_var, *effect_value)
        ),
    };
    if let Some(tol) = statement.tol_eq {
        let _ = write!(out, " @tol={tol}");
    }
    out
}

/// Formats the network declarations as `var`/`edge` lines.
pub fn format_network(network: &Network) -> String {
    let mut out = String::new();
    for var in network.variables() {
        let _ = writeln!(out, "var {} : {}", var.name, var.values.join(" > "));
    }
    for &(p, c) in network.edges() {
        let _ = writeln!(
            out,
            "edge {} -> {}",
            network.variable(p).name,
            network.variable(c).name
        );
    }
    out
}

/// Formats a whole document; `parse_document` of the result yields the same
/// network and statements.
pub fn format_document(network: &Network, statements: &[Statement]) -> String {
    let mut out = format_network(network);
    for s in statements {
        out.push_str(&format_statement(network, s));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HIV: &str = "\
var H : h > no_h
var N : n > no_n
var I : i > no_i
var C : c > no_c
edge N -> H
edge I -> H
edge C -> H
edge I -> C
";

    fn doc(extra: &str) -> Result<Document, DslError> {
        parse_document(&format!("{HIV}{extra}"))
    }

    #[test]
    fn point_prior() {
        let d = doc("P(h) = 0.005\n").unwrap();
        assert_eq!(d.statements.len(), 1);
        let s = &d.statements[0];
        assert_eq!(s.id, "s1");
        assert_eq!(s.line, 9);
        let h = d.network.event(&[("H", "h")]).unwrap();
        assert_eq!(
            s.body,
            StatementBody::Point {
                term: ProbTerm::prior(h),
                p: 0.005
            }
        );
    }

    #[test]
    fn influence() {
        let d = doc("S+(N, H)\n").unwrap();
        assert_eq!(
            d.statements[0].body,
            StatementBody::Influence {
                sign: Sign::Positive,
                source: 1,
                target: 0
            }
        );
    }

    #[test]
    fn probability_out_of_range() {
        let err = doc("P(h) = 1.5\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Range);
        assert_eq!(err.line, 9);
        assert_eq!(err.column, 8);
    }

    #[test]
    fn all_forms_parse() {
        let d = doc(concat!(
            "# comment line\n",
            "P(i | c) = 1\n",
            "P(i) > P(n)\n",
            "P(h | n) > P(h | i)   # trailing comment\n",
            "0.1 <= P(n | h) <= 0.25\n",
            "2*P(n) <= 0.5*P(i)\n",
            "P() = 1\n",
            "S-(N,H)\n",
            "S0(I,C)\n",
            "Y-({I,C},H)\n",
            "X-({N,I},h)\n",
            "X+({N,I},~h) @tol=0.01\n",
            "P(H=h, ~n) = 0.001\n",
        ))
        .unwrap();
        assert_eq!(d.statements.len(), 12);
        assert_eq!(d.statements[10].tol_eq, Some(0.01));
        assert!(matches!(
            d.statements[10].body,
            StatementBody::ProductSynergy {
                effect_value: 1,
                ..
            }
        ));
    }

    #[test]
    fn errors_carry_positions() {
        let err = doc("P(q) = 0.2\n").unwrap_err();
        assert_eq!(
            (err.kind, err.line, err.column),
            (DslErrorKind::UnknownName, 9, 3)
        );
        let err = doc("S+(N, Q)\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnknownName);
        let err = doc("P(h) = \n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Syntax);
        let err = doc("0.3 <= P(h) <= 0.2\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Range);
        let err = parse_document("var A : a > b\nedge A -> B\n").unwrap_err();
        assert_eq!(
            (err.kind, err.line, err.column),
            (DslErrorKind::UnknownName, 2, 11)
        );
        let err =
            parse_document("var A : a > b\nvar B : c > d\nedge A -> B\nedge B -> A\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Network);
        let err = parse_document("var A : a\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::Network);
    }

    #[test]
    fn ambiguous_values_need_qualification() {
        let text = "var A : yes > no\nvar B : yes > no\nP(yes) = 0.5\n";
        assert_eq!(
            parse_document(text).unwrap_err().kind,
            DslErrorKind::UnknownName
        );
        let d =
            parse_document("var A : yes > no\nvar B : yes > no\nP(A=yes, B=no) = 0.5\n").unwrap();
        let s = format_statement(&d.network, &d.statements[0]);
        assert_eq!(s, "P(A=yes,B=no) = 0.5");
    }

    #[test]
    fn formatting_is_compact() {
        let d = doc("S+(N, H)\nY-({I, C}, H)\nP(h|~n,~i,~c) = 0.3\n").unwrap();
        let f: Vec<String> = d
            .statements
            .iter()
            .map(|s| format_statement(&d.network, s))
            .collect();
        assert_eq!(f, vec!["S+(N,H)", "Y-({I,C},H)", "P(h | ~n,~i,~c) = 0.3"]);
    }

    #[test]
    fn query_parsing() {
        let d = doc("").unwrap();
        let q = parse_query(&d.network, "P(h | ~n, ~i, ~c)").unwrap();
        assert!(q.is_conditional());
        assert_eq!(format_query(&d.network, &q), "P(h | ~n,~i,~c)");
        assert!(parse_query(&d.network, "P(h) junk").is_err());
    }
}
