//! Line-oriented template engine for the shipped prompt assets.
//!
//! Directives occupy a whole line: `{IF cond}`, `{ELIF cond}`, `{ELSE}`,
//! `{/IF}`, `{FOREACH description}`, `{/FOREACH}`. Conditions are either a
//! comparison `NAME=3`, `NAME<3`, `NAME>0` against an integer variable, or a
//! free-text flag looked up as a boolean. Words in conditions and FOREACH
//! descriptions are joined with `_` (flags and list keys also lowercased).
//! Placeholders are `{NAME}` with an optional integer offset (`{IDX+1}`).

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("missing placeholder {0:?}")]
    MissingPlaceholder(String),
    #[error("placeholder {0:?} has the wrong type")]
    TypeMismatch(String),
    #[error("template structure error on line {line}: {message}")]
    Structure { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Int(i64),
    Bool(bool),
    List(Vec<Context>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    vars: BTreeMap<String, Value>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, name: &str, value: impl Into<String>) -> Self {
        self.vars.insert(name.to_string(), Value::Text(value.into()));
        self
    }

    pub fn int(mut self, name: &str, value: i64) -> Self {
        self.vars.insert(name.to_string(), Value::Int(value));
        self
    }

    pub fn flag(mut self, name: &str, value: bool) -> Self {
        self.vars.insert(name.to_string(), Value::Bool(value));
        self
    }

    pub fn list(mut self, name: &str, items: Vec<Context>) -> Self {
        self.vars.insert(name.to_string(), Value::List(items));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cond {
    Compare { var: String, op: char, rhs: i64 },
    Flag(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Text(String),
    If { arms: Vec<(Cond, Vec<Node>)>, otherwise: Option<Vec<Node>> },
    Foreach { key: String, body: Vec<Node> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    nodes: Vec<Node>,
}

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([A-Z][A-Z0-9_]*)(?:([+-])([0-9]+))?\}").expect("placeholder regex"));

fn words(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

/// Lowercased key with every run of non-alphanumerics collapsed to `_`.
pub fn list_key(description: &str) -> String {
    let mut out = String::new();
    for c in description.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn parse_cond(text: &str) -> Cond {
    let norm = words(text);
    if let Some(i) = norm.find(['=', '<', '>']) {
        let (var, rest) = norm.split_at(i);
        let op = rest.chars().next().unwrap_or('=');
        if let Ok(rhs) = rest[1..].trim_start_matches('_').parse::<i64>() {
            return Cond::Compare { var: var.trim_end_matches('_').to_string(), op, rhs };
        }
    }
    Cond::Flag(list_key(text))
}

enum Line<'a> {
    If(&'a str),
    Elif(&'a str),
    Else,
    EndIf,
    Foreach(&'a str),
    EndForeach,
    Text(&'a str),
}

fn classify(raw: &str) -> Line<'_> {
    let t = raw.trim();
    let Some(inner) = t.strip_prefix('{').and_then(|s| s.strip_suffix('}')) else {
        return Line::Text(raw);
    };
    if inner.contains(['{', '}']) {
        return Line::Text(raw);
    }
    if let Some(c) = inner.strip_prefix("IF ") {
        Line::If(c)
    } else if let Some(c) = inner.strip_prefix("ELIF ") {
        Line::Elif(c)
    } else if inner == "ELSE" {
        Line::Else
    } else if inner == "/IF" {
        Line::EndIf
    } else if let Some(c) = inner.strip_prefix("FOREACH ") {
        Line::Foreach(c)
    } else if inner == "/FOREACH" {
        Line::EndForeach
    } else {
        Line::Text(raw)
    }
}

enum Frame {
    Root(Vec<Node>),
    If { arms: Vec<(Cond, Vec<Node>)>, otherwise: Option<Vec<Node>>, line: usize },
    Foreach { key: String, body: Vec<Node>, line: usize },
}

impl Frame {
    fn sink(&mut self) -> &mut Vec<Node> {
        match self {
            Frame::Root(v) => v,
            Frame::If { otherwise: Some(v), .. } => v,
            Frame::If { arms, .. } => &mut arms.last_mut().expect("if has an arm").1,
            Frame::Foreach { body, .. } => body,
        }
    }
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let err = |line: usize, message: &str| TemplateError::Structure { line, message: message.to_string() };
        let mut stack = vec![Frame::Root(Vec::new())];
        for (n, raw) in source.lines().enumerate() {
            let line = n + 1;
            match classify(raw) {
                Line::Text(t) => stack.last_mut().expect("root").sink().push(Node::Text(t.to_string())),
                Line::If(c) => stack.push(Frame::If { arms: vec![(parse_cond(c), Vec::new())], otherwise: None, line }),
                Line::Elif(c) => match stack.last_mut() {
                    Some(Frame::If { arms, otherwise: None, .. }) => arms.push((parse_cond(c), Vec::new())),
                    _ => return Err(err(line, "ELIF outside IF")),
                },
                Line::Else => match stack.last_mut() {
                    Some(Frame::If { otherwise: o @ None, .. }) => *o = Some(Vec::new()),
                    _ => return Err(err(line, "ELSE outside IF")),
                },
                Line::EndIf => match stack.pop() {
                    Some(Frame::If { arms, otherwise, .. }) => stack
                        .last_mut()
                        .ok_or_else(|| err(line, "unbalanced /IF"))?
                        .sink()
                        .push(Node::If { arms, otherwise }),
                    _ => return Err(err(line, "/IF without IF")),
                },
                Line::Foreach(d) => stack.push(Frame::Foreach { key: list_key(d), body: Vec::new(), line }),
                Line::EndForeach => match stack.pop() {
                    Some(Frame::Foreach { key, body, .. }) => stack
                        .last_mut()
                        .ok_or_else(|| err(line, "unbalanced /FOREACH"))?
                        .sink()
                        .push(Node::Foreach { key, body }),
                    _ => return Err(err(line, "/FOREACH without FOREACH")),
                },
            }
        }
        match stack.pop() {
            Some(Frame::Root(nodes)) if stack.is_empty() => Ok(Template { nodes }),
            Some(Frame::If { line, .. }) => Err(err(line, "unterminated IF")),
            Some(Frame::Foreach { line, .. }) => Err(err(line, "unterminated FOREACH")),
            _ => Err(err(0, "unbalanced template")),
        }
    }

    pub fn render(&self, ctx: &Context) -> Result<String, TemplateError> {
        let mut out = Vec::new();
        let mut scopes = vec![ctx];
        render_nodes(&self.nodes, &mut scopes, &mut out)?;
        Ok(out.join("\n"))
    }
}

fn lookup<'a>(scopes: &[&'a Context], name: &str) -> Option<&'a Value> {
    scopes.iter().rev().find_map(|c| c.vars.get(name))
}

fn eval_cond(cond: &Cond, scopes: &[&Context]) -> Result<bool, TemplateError> {
    match cond {
        Cond::Compare { var, op, rhs } => match lookup(scopes, var) {
            Some(Value::Int(v)) => Ok(match op {
                '<' => v < rhs,
                '>' => v > rhs,
                _ => v == rhs,
            }),
            Some(_) => Err(TemplateError::TypeMismatch(var.clone())),
            None => Err(TemplateError::MissingPlaceholder(var.clone())),
        },
        Cond::Flag(name) => match lookup(scopes, name) {
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(TemplateError::TypeMismatch(name.clone())),
            None => Err(TemplateError::MissingPlaceholder(name.clone())),
        },
    }
}

fn substitute(line: &str, scopes: &[&Context]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(line.len());
    let mut last = 0;
    for cap in PLACEHOLDER.captures_iter(line) {
        let whole = cap.get(0).expect("match");
        let name = &cap[1];
        out.push_str(&line[last..whole.start()]);
        let value = lookup(scopes, name).ok_or_else(|| TemplateError::MissingPlaceholder(name.to_string()))?;
        let offset = match (cap.get(2), cap.get(3)) {
            (Some(sign), Some(n)) => {
                let n: i64 = n.as_str().parse().map_err(|_| TemplateError::TypeMismatch(name.to_string()))?;
                Some(if sign.as_str() == "-" { -n } else { n })
            }
            _ => None,
        };
        match (value, offset) {
            (Value::Int(v), off) => out.push_str(&(v + off.unwrap_or(0)).to_string()),
            (Value::Text(s), None) => out.push_str(s),
            (Value::Bool(b), None) => out.push_str(if *b { "true" } else { "false" }),
            _ => return Err(TemplateError::TypeMismatch(name.to_string())),
        }
        last = whole.end();
    }
    out.push_str(&line[last..]);
    Ok(out)
}

fn render_nodes<'a>(
    nodes: &'a [Node],
    scopes: &mut Vec<&'a Context>,
    out: &mut Vec<String>,
) -> Result<(), TemplateError> {
    for node in nodes {
        match node {
            Node::Text(t) => out.push(substitute(t, scopes)?),
            Node::If { arms, otherwise } => {
                let mut taken = None;
                for (cond, body) in arms {
                    if eval_cond(cond, scopes)? {
                        taken = Some(body);
                        break;
                    }
                }
                if let Some(body) = taken.or(otherwise.as_ref()) {
                    render_nodes(body, scopes, out)?;
                }
            }
            Node::Foreach { key, body } => {
                let items = match lookup(scopes, key) {
                    Some(Value::List(items)) => items,
                    Some(_) => return Err(TemplateError::TypeMismatch(key.clone())),
                    None => return Err(TemplateError::MissingPlaceholder(key.clone())),
                };
                for item in items {
                    scopes.push(item);
                    render_nodes(body, scopes, out)?;
                    scopes.pop();
                }
            }
        }
    }
    Ok(())
}
