//! Surface syntax for templates (`.tpl`) and examples (`.exs`).
//!
//! ```text
//! rule    := [weight "::"] atom [":-" body] ["|" option {"," option}] "."
//! body    := blit { "," blit } ; blit := [weight ":"] atom
//! weight  := NAME ["{" INT "," INT "}"] | "{" INT "," INT "}" | NUMBER | "[" NUMBER {"," NUMBER} "]"
//! atom    := NAME ["(" term {"," term} ")"] ; term := NAME | VARIABLE
//! query   := [weight "::"] atom "?"
//! ```
//!
//! Template files may also carry `@` directives that set function defaults:
//! `@rule relu.`, `@aggregation max.`, `@atom identity.`, `@atom q/0 sigmoid.`,
//! `@bias on.` and `@learnable feat/1.`. Comments run from `%` to end of line.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::functions::{Activation, Aggregation, Order};
use crate::logic::{
    Atom, BodyLiteral, Example, FunctionConfig, Predicate, Query, RuleOptions, SlotId, Symbol, Template, Term,
    WeightSpec, WeightedFact, WeightedRule,
};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub file: Option<Arc<Path>>,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}:", file.display())?;
        }
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Directive(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    ColonDash,
    DoubleColon,
    Colon,
    Question,
    Pipe,
    Eq,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Directive(s) => write!(f, "`@{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::ColonDash => f.write_str("`:-`"),
            Tok::DoubleColon => f.write_str("`::`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Question => f.write_str("`?`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(text: &str, first_line: usize, file: &Option<Arc<Path>>) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, first_line, 1usize);
    let err = |line, column, message: String| ParseError {
        span: SourceSpan { file: file.clone(), line, column },
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let starts_number = c.is_ascii_digit()
            || ((c == '-' || c == '+')
                && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.'));
        let tok = if starts_number {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
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
            Tok::Number(chars[start..i].iter().collect())
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c == '@' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            if i == start {
                return Err(err(start_line, start_col, "expected a directive name after `@`".into()));
            }
            Tok::Directive(chars[start..i].iter().collect())
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, n) = match (c, two.as_str()) {
                (_, ":-") => (Tok::ColonDash, 2),
                (_, "::") => (Tok::DoubleColon, 2),
                (':', _) => (Tok::Colon, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('?', _) => (Tok::Question, 1),
                ('|', _) => (Tok::Pipe, 1),
                ('=', _) => (Tok::Eq, 1),
                ('/', _) => (Tok::Slash, 1),
                _ => return Err(err(start_line, start_col, format!("unexpected character `{c}`"))),
            };
            i += n;
            tok
        };
        col = start_col + chars_len_of(&tok);
        out.push(Token { tok, line: start_line, column: start_col });
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

fn chars_len_of(tok: &Tok) -> usize {
    match tok {
        Tok::Ident(s) | Tok::Number(s) => s.chars().count(),
        Tok::Directive(s) => s.chars().count() + 1,
        Tok::ColonDash | Tok::DoubleColon => 2,
        _ => 1,
    }
}

/// A weight as written, before slot resolution.
enum RawWeight {
    Named(String, Option<Shape>, SourceSpan),
    Anonymous(Shape),
    Value(Tensor),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: Option<Arc<Path>>,
}

impl Parser {
    fn new(toks: Vec<Token>, file: Option<Arc<Path>>) -> Self {
        Parser { toks, pos: 0, file }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        let t = &self.toks[self.pos];
        SourceSpan { file: self.file.clone(), line: t.line, column: t.column }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { span: self.span(), message: message.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", self.peek()))
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let v: f64 = match s.parse() {
                    Ok(v) => v,
                    Err(_) => return self.error(format!("invalid number `{s}`")),
                };
                if !v.is_finite() {
                    return self.error(format!("number `{s}` is not finite"));
                }
                self.next();
                Ok(v)
            }
            t => self.error(format!("expected a number, found {t}")),
        }
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Number(s) if s.chars().all(|c| c.is_ascii_digit()) => {
                let v = s.parse::<usize>().or_else(|_| self.error("integer out of range"))?;
                self.next();
                Ok(v)
            }
            t => self.error(format!("expected a non-negative integer, found {t}")),
        }
    }

    fn shape(&mut self) -> Result<Shape, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let rows = self.integer()?;
        self.expect(Tok::Comma, "`,`")?;
        let cols = self.integer()?;
        self.expect(Tok::RBrace, "`}`")?;
        if rows == 0 || cols == 0 {
            return self.error("shape dimensions must be positive");
        }
        Ok(Shape::new(rows, cols))
    }

    fn vector(&mut self) -> Result<Tensor, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut values = vec![self.number()?];
        while *self.peek() == Tok::Comma {
            self.next();
            values.push(self.number()?);
        }
        self.expect(Tok::RBracket, "`]`")?;
        Ok(Tensor::vector(values))
    }

    /// True when the tokens at the cursor form a weight followed by `:`/`::`.
    fn at_weight(&self) -> bool {
        let sep = |t: &Tok| matches!(t, Tok::Colon | Tok::DoubleColon);
        match self.peek() {
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::LBrace) || sep(self.peek_at(1)),
            Tok::LBrace | Tok::Number(_) | Tok::LBracket => true,
            _ => false,
        }
    }

    fn weight(&mut self) -> Result<RawWeight, ParseError> {
        let w = match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.span();
                if !name.starts_with(|c: char| c.is_alphabetic()) {
                    return self.error(format!("weight name `{name}` must start with a letter"));
                }
                self.next();
                let shape = if *self.peek() == Tok::LBrace { Some(self.shape()?) } else { None };
                RawWeight::Named(name, shape, span)
            }
            Tok::LBrace => RawWeight::Anonymous(self.shape()?),
            Tok::Number(_) => RawWeight::Value(Tensor::scalar(self.number()?)),
            Tok::LBracket => RawWeight::Value(self.vector()?),
            t => return self.error(format!("expected a weight, found {t}")),
        };
        match self.peek() {
            Tok::Colon | Tok::DoubleColon => {
                self.next();
                Ok(w)
            }
            t => self.error(format!("expected `::` or `:` after weight, found {t}")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let term = match self.peek().clone() {
            Tok::Ident(name) => {
                if name.starts_with('_') {
                    return self.error(format!("term `{name}` must start with a letter or digit"));
                }
                Term::parse(&name)
            }
            Tok::Number(s) if s.chars().all(|c| c.is_ascii_digit()) => Term::constant(&s),
            t => return self.error(format!("expected a term, found {t}")),
        };
        self.next();
        if *self.peek() == Tok::LParen {
            return self.error("function symbols are not supported; terms must be constants or variables");
        }
        Ok(term)
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.peek().clone() {
            Tok::Ident(name) => name,
            t => return self.error(format!("expected an atom, found {t}")),
        };
        if !name.starts_with(|c: char| c.is_lowercase() || c.is_ascii_digit()) {
            return self.error(format!("predicate `{name}` must start with a lowercase letter"));
        }
        self.next();
        let mut terms = Vec::new();
        if *self.peek() == Tok::LParen {
            self.next();
            terms.push(self.term()?);
            while *self.peek() == Tok::Comma {
                self.next();
                terms.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)` or `,`")?;
        }
        Ok(Atom::new(&name, terms))
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.error(format!("expected {what}, found {t}")),
        }
    }

    fn predicate_ref(&mut self) -> Result<Predicate, ParseError> {
        let name = self.ident("a predicate name")?;
        self.expect(Tok::Slash, "`/`")?;
        let arity = self.integer()?;
        Ok(Predicate::new(&name, arity))
    }

    fn options(&mut self) -> Result<RuleOptions, ParseError> {
        let mut opts = RuleOptions::default();
        loop {
            let key_span = self.span();
            let key = self.ident("an option name")?;
            self.expect(Tok::Eq, "`=`")?;
            let value = self.ident("an option value")?;
            let bad = |e: crate::functions::UnknownFunction| ParseError { span: key_span.clone(), message: e.to_string() };
            match key.as_str() {
                "activation" => opts.activation = Some(value.parse::<Activation>().map_err(bad)?),
                "aggregation" => opts.aggregation = Some(value.parse::<Aggregation>().map_err(bad)?),
                "order" => opts.order = Some(value.parse::<Order>().map_err(bad)?),
                _ => {
                    return Err(ParseError { span: key_span, message: format!("unknown rule option `{key}`") });
                }
            }
            if *self.peek() != Tok::Comma {
                return Ok(opts);
            }
            self.next();
        }
    }
}

/// Collects slot declarations while rules are parsed.
struct SlotTable {
    declarations: Vec<(usize, SlotId, Shape)>,
}

impl SlotTable {
    fn resolve(&mut self, raw: RawWeight, rule: usize, literal: usize) -> WeightSpec {
        match raw {
            RawWeight::Named(name, shape, _) => {
                let slot = Symbol::new(&name);
                if let Some(shape) = shape {
                    self.declarations.push((rule, slot.clone(), shape));
                }
                WeightSpec::Learnable(slot)
            }
            RawWeight::Anonymous(shape) => {
                let slot = anonymous_slot(rule, literal);
                self.declarations.push((rule, slot.clone(), shape));
                WeightSpec::Learnable(slot)
            }
            RawWeight::Value(t) => WeightSpec::Fixed(t),
        }
    }
}

/// Positional slot id for a `{m,n}` weight without a name; literal 0 is the head.
pub fn anonymous_slot(rule: usize, literal: usize) -> SlotId {
    Symbol::new(&format!("_r{rule}_{literal}"))
}

fn is_anonymous(slot: &SlotId) -> bool {
    slot.as_str().starts_with('_')
}

pub fn parse_template(text: &str) -> Result<Template, ParseError> {
    parse_template_in(text, None)
}

/// Parses a template, attributing spans to `file`.
pub fn parse_template_in(text: &str, file: Option<&Path>) -> Result<Template, ParseError> {
    let file: Option<Arc<Path>> = file.map(Arc::from);
    let mut p = Parser::new(lex(text, 1, &file)?, file);
    let mut rules = Vec::new();
    let mut spans = Vec::new();
    let mut functions = FunctionConfig::default();
    let mut slots = SlotTable { declarations: Vec::new() };
    while !p.at_eof() {
        if let Tok::Directive(name) = p.peek().clone() {
            directive(&mut p, &name, &mut functions)?;
            continue;
        }
        let span = p.span();
        let index = rules.len();
        let head_weight = if p.at_weight() {
            let w = p.weight()?;
            slots.resolve(w, index, 0)
        } else {
            WeightSpec::Absent
        };
        let head = p.atom()?;
        let mut body = Vec::new();
        if *p.peek() == Tok::ColonDash {
            p.next();
            loop {
                let weight = if p.at_weight() {
                    let w = p.weight()?;
                    slots.resolve(w, index, body.len() + 1)
                } else {
                    WeightSpec::Absent
                };
                body.push(BodyLiteral { weight, atom: p.atom()? });
                if *p.peek() != Tok::Comma {
                    break;
                }
                p.next();
            }
        }
        let options = if *p.peek() == Tok::Pipe {
            p.next();
            p.options()?
        } else {
            RuleOptions::default()
        };
        match p.peek() {
            Tok::Dot => {
                p.next();
            }
            Tok::Question => return p.error("queries belong in example files"),
            t => return p.error(format!("expected `.` at end of rule, found {t}")),
        }
        rules.push(WeightedRule { head_weight, head, body, options });
        spans.push(Some(span));
    }
    let mut template = Template::new(rules, &slots.declarations, functions);
    template.spans = spans;
    Ok(template)
}

fn directive(p: &mut Parser, name: &str, functions: &mut FunctionConfig) -> Result<(), ParseError> {
    let span = p.span();
    p.next();
    let bad = |message: String| ParseError { span: span.clone(), message };
    match name {
        "rule" => {
            let v = p.ident("an activation")?;
            functions.rule_activation = v.parse().map_err(|e: crate::functions::UnknownFunction| bad(e.to_string()))?;
        }
        "aggregation" => {
            let v = p.ident("an aggregation")?;
            functions.aggregation = v.parse().map_err(|e: crate::functions::UnknownFunction| bad(e.to_string()))?;
        }
        "atom" => {
            if matches!(p.peek_at(1), Tok::Slash) {
                let pred = p.predicate_ref()?;
                let v = p.ident("an activation")?;
                let act = v.parse().map_err(|e: crate::functions::UnknownFunction| bad(e.to_string()))?;
                functions.atom_overrides.insert(pred, act);
            } else {
                let v = p.ident("an activation")?;
                functions.atom_activation = v.parse().map_err(|e: crate::functions::UnknownFunction| bad(e.to_string()))?;
            }
        }
        "bias" => {
            functions.bias = match p.ident("`on` or `off`")?.as_str() {
                "on" => true,
                "off" => false,
                other => return Err(bad(format!("expected `on` or `off`, found `{other}`"))),
            };
        }
        "learnable" => {
            let pred = p.predicate_ref()?;
            functions.learnable_facts.insert(pred);
        }
        other => return Err(bad(format!("unknown directive `@{other}`"))),
    }
    p.expect(Tok::Dot, "`.` after directive")
}

/// Parses an examples file. Examples are separated by blank lines or by
/// `#example` lines; the latter also allow empty examples.
pub fn parse_examples(text: &str) -> Result<Vec<Example>, ParseError> {
    parse_examples_in(text, None)
}

pub fn parse_examples_in(text: &str, file: Option<&Path>) -> Result<Vec<Example>, ParseError> {
    let file: Option<Arc<Path>> = file.map(Arc::from);
    let mut segments: Vec<(usize, String)> = Vec::new();
    let mut current: Option<(usize, String)> = None;
    let mut explicit = false;
    let has_content = |s: &str| s.lines().any(|l| !l.split('%').next().unwrap_or("").trim().is_empty());
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.starts_with("#example") {
            if let Some(seg) = current.take() {
                if explicit || has_content(&seg.1) {
                    segments.push(seg);
                }
            }
            current = Some((lineno + 1, String::new()));
            explicit = true;
        } else if trimmed.is_empty() {
            if let Some(seg) = &current {
                if has_content(&seg.1) {
                    segments.push(current.take().unwrap());
                    explicit = false;
                } else if let Some(seg) = current.as_mut() {
                    seg.1.push('\n');
                }
            }
        } else {
            let seg = current.get_or_insert_with(|| (lineno, String::new()));
            seg.1.push_str(line);
            seg.1.push('\n');
        }
    }
    if let Some(seg) = current.take() {
        if explicit || has_content(&seg.1) {
            segments.push(seg);
        }
    }
    segments.into_iter().map(|(line, body)| parse_example(&body, line, &file)).collect()
}

fn parse_example(text: &str, first_line: usize, file: &Option<Arc<Path>>) -> Result<Example, ParseError> {
    let mut p = Parser::new(lex(text, first_line, file)?, file.clone());
    let mut example = Example::default();
    while !p.at_eof() {
        let value = if p.at_weight() {
            match p.weight()? {
                RawWeight::Value(t) => Some(t),
                RawWeight::Named(name, _, span) => {
                    return Err(ParseError { span, message: format!("example values must be numbers, found `{name}`") })
                }
                RawWeight::Anonymous(_) => return p.error("example values must be numbers"),
            }
        } else {
            None
        };
        let start = p.span();
        let atom = p.atom()?;
        if !atom.is_ground() {
            return Err(ParseError { span: start, message: format!("`{atom}` is not ground") });
        }
        let value = value.unwrap_or_else(|| Tensor::scalar(1.0));
        match p.peek() {
            Tok::Dot => {
                p.next();
                example.facts.push(WeightedFact { value, atom });
            }
            Tok::Question => {
                p.next();
                example.queries.push(Query { target: value, atom });
            }
            Tok::ColonDash => return p.error("rules are not supported in example files"),
            t => return p.error(format!("expected `.` or `?`, found {t}")),
        }
    }
    Ok(example)
}

/// Formats a float so that it parses back to the identical value.
pub fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v.abs() >= 1e-5 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn format_tensor(t: &Tensor) -> String {
    if t.is_scalar() {
        return format_number(t.item());
    }
    let items: Vec<String> = t.data().iter().map(|v| format_number(*v)).collect();
    format!("[{}]", items.join(", "))
}

fn format_weight(template: &Template, w: &WeightSpec, seen: &mut std::collections::HashSet<SlotId>) -> Option<String> {
    match w {
        WeightSpec::Absent => None,
        WeightSpec::Fixed(t) => Some(format_tensor(t)),
        WeightSpec::Learnable(slot) => {
            let shape = template.slot_shape(slot).unwrap_or(Shape::SCALAR);
            if is_anonymous(slot) {
                return Some(format!("{{{},{}}}", shape.rows, shape.cols));
            }
            let first = seen.insert(slot.clone());
            if first && !shape.is_scalar() {
                Some(format!("{slot} {{{},{}}}", shape.rows, shape.cols))
            } else {
                Some(slot.to_string())
            }
        }
    }
}

pub fn serialize_template(template: &Template) -> String {
    let mut out = String::new();
    let f = &template.functions;
    let d = FunctionConfig::default();
    if f.rule_activation != d.rule_activation {
        out.push_str(&format!("@rule {}.\n", f.rule_activation));
    }
    if f.aggregation != d.aggregation {
        out.push_str(&format!("@aggregation {}.\n", f.aggregation));
    }
    if f.atom_activation != d.atom_activation {
        out.push_str(&format!("@atom {}.\n", f.atom_activation));
    }
    for (pred, act) in &f.atom_overrides {
        out.push_str(&format!("@atom {pred} {act}.\n"));
    }
    if f.bias {
        out.push_str("@bias on.\n");
    }
    for pred in &f.learnable_facts {
        out.push_str(&format!("@learnable {pred}.\n"));
    }
    let mut seen = std::collections::HashSet::new();
    for rule in &template.rules {
        if let Some(w) = format_weight(template, &rule.head_weight, &mut seen) {
            out.push_str(&w);
            out.push_str(" :: ");
        }
        out.push_str(&rule.head.to_string());
        if !rule.body.is_empty() {
            out.push_str(" :- ");
            for (i, lit) in rule.body.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let Some(w) = format_weight(template, &lit.weight, &mut seen) {
                    out.push_str(&w);
                    out.push_str(" : ");
                }
                out.push_str(&lit.atom.to_string());
            }
        }
        let o = &rule.options;
        if !o.is_empty() {
            let mut parts = Vec::new();
            if let Some(a) = o.activation {
                parts.push(format!("activation={a}"));
            }
            if let Some(a) = o.aggregation {
                parts.push(format!("aggregation={a}"));
            }
            if let Some(ord) = o.order {
                parts.push(format!("order={}", ord.name()));
            }
            out.push_str(" | ");
            out.push_str(&parts.join(", "));
        }
        out.push_str(".\n");
    }
    out
}

pub fn serialize_examples(examples: &[Example]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str("#example\n");
        for fact in &ex.facts {
            if fact.value.is_scalar() && fact.value.item() == 1.0 {
                out.push_str(&format!("{}.\n", fact.atom));
            } else {
                out.push_str(&format!("{} :: {}.\n", format_tensor(&fact.value), fact.atom));
            }
        }
        for q in &ex.queries {
            out.push_str(&format!("{} :: {}?\n", format_tensor(&q.target), q.atom));
        }
    }
    out
}
