use crate::chemworld::Molecule;

use super::ast::{BinOp, Component, Expr};
use super::VfError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Op(BinOp),
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

const FORBIDDEN: [&str; 11] = ["**", "^", "<=", ">=", "==", "!=", "<", ">", "=", "!", "%"];

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>, VfError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, VfError> {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
        let start = self.pos;
        let Some(c) = trimmed.chars().next() else {
            return Ok(None);
        };
        if let Some(op) = FORBIDDEN.iter().find(|op| trimmed.starts_with(**op)) {
            return Err(VfError::ForbiddenOperator(op.to_string()));
        }
        if matches!(c, '&' | '|') {
            return Err(VfError::ForbiddenOperator(c.to_string()));
        }
        let tok = match c {
            '+' => Tok::Op(BinOp::Add),
            '-' => Tok::Op(BinOp::Sub),
            '*' => Tok::Op(BinOp::Mul),
            '/' => Tok::Op(BinOp::Div),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '\'' => {
                let body = &trimmed[1..];
                let end = body.find('\'').ok_or_else(|| VfError::syntax(start, "unterminated string"))?;
                self.pos = start + end + 2;
                return Ok(Some((start, Tok::Str(body[..end].to_string()))));
            }
            d if d.is_ascii_digit() => {
                let int_len = trimmed.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(trimmed.len());
                let mut len = int_len;
                if trimmed[int_len..].starts_with('.') {
                    let frac = &trimmed[int_len + 1..];
                    let frac_len = frac.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(frac.len());
                    if frac_len == 0 {
                        return Err(VfError::syntax(start + int_len, "expected digits after decimal point"));
                    }
                    len = int_len + 1 + frac_len;
                }
                if trimmed[len..].starts_with(|ch: char| ch.is_ascii_alphabetic() || ch == '.' || ch == '_') {
                    return Err(VfError::syntax(start + len, "malformed number"));
                }
                let v: f64 = trimmed[..len].parse().map_err(|_| VfError::syntax(start, "malformed number"))?;
                self.pos = start + len;
                return Ok(Some((start, Tok::Num(v))));
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let len = trimmed.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(trimmed.len());
                self.pos = start + len;
                return Ok(Some((start, Tok::Ident(trimmed[..len].to_string()))));
            }
            other => return Err(VfError::syntax(start, format!("unexpected character {other:?}"))),
        };
        self.pos = start + c.len_utf8();
        Ok(Some((start, tok)))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|(_, t)| t.clone());
        self.i += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), VfError> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(VfError::syntax(pos, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, VfError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ (BinOp::Add | BinOp::Sub))) = self.peek().cloned() {
            self.i += 1;
            let rhs = self.term()?;
            lhs = Expr::bin(lhs, op, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, VfError> {
        let mut lhs = self.primary()?;
        while let Some(Tok::Op(op @ (BinOp::Mul | BinOp::Div))) = self.peek().cloned() {
            self.i += 1;
            let rhs = self.primary()?;
            lhs = Expr::bin(lhs, op, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, VfError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Op(sign @ (BinOp::Add | BinOp::Sub))) => match self.bump() {
                Some(Tok::Num(v)) => Ok(Expr::Num(if sign == BinOp::Sub { -v } else { v })),
                _ => Err(VfError::syntax(pos, "a sign may only prefix a numeric literal")),
            },
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.expect(Tok::LParen, &format!("'(' after {name}"))?;
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::RParen) {
                    self.i += 1;
                } else {
                    loop {
                        let apos = self.pos();
                        match self.bump() {
                            Some(Tok::Str(s)) => args.push(s),
                            _ => return Err(VfError::syntax(apos, "expected a single-quoted string argument")),
                        }
                        let cpos = self.pos();
                        match self.bump() {
                            Some(Tok::Comma) => continue,
                            Some(Tok::RParen) => break,
                            _ => return Err(VfError::syntax(cpos, "expected ',' or ')'")),
                        }
                    }
                }
                Ok(Expr::Call(component(&name, args)?))
            }
            Some(_) => Err(VfError::syntax(pos, "unexpected token")),
            None => Err(VfError::syntax(pos, "unexpected end of input")),
        }
    }
}

fn component(name: &str, args: Vec<String>) -> Result<Component, VfError> {
    let bad = |arg: &str, reason: &str| VfError::BadArgument {
        component: name.to_string(),
        argument: arg.to_string(),
        reason: reason.to_string(),
    };
    let nullary = |c: Component| {
        if let Some(a) = args.first() {
            Err(bad(a, "takes no arguments"))
        } else {
            Ok(c)
        }
    };
    match name {
        "Synth" => nullary(Component::Synth),
        "Depth" => nullary(Component::Depth),
        "BBPrice" => nullary(Component::BBPrice),
        "FastCarc" => nullary(Component::FastCarc),
        "Pyro" => nullary(Component::Pyro),
        "GHS" => {
            if args.is_empty() {
                return Err(bad("", "needs at least one hazard code"));
            }
            for a in &args {
                let ok = a.len() == 4 && a.starts_with('H') && a[1..].chars().all(|c| c.is_ascii_digit());
                if !ok {
                    return Err(bad(a, "expected a code of the form Hnnn"));
                }
            }
            Ok(Component::Ghs(args))
        }
        "MaxSim" | "MinSim" => {
            if args.is_empty() {
                return Err(bad("", "needs at least one reference molecule"));
            }
            let refs = args
                .iter()
                .map(|a| Molecule::parse(a).map_err(|e| bad(a, &e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if name == "MaxSim" { Component::MaxSim(refs) } else { Component::MinSim(refs) })
        }
        _ => Err(VfError::UnknownComponent(name.to_string())),
    }
}

pub fn parse_vf(text: &str) -> Result<Expr, VfError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, i: 0, end: text.len() };
    let e = p.expr()?;
    if p.i < p.toks.len() {
        return Err(VfError::syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(e)
}
