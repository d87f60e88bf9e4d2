use std::fmt;

use crate::chemworld::Molecule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Synth,
    Depth,
    BBPrice,
    Ghs(Vec<String>),
    FastCarc,
    MaxSim(Vec<Molecule>),
    MinSim(Vec<Molecule>),
    Pyro,
}

impl Component {
    pub const NAMES: [&'static str; 8] = ["Synth", "Depth", "BBPrice", "GHS", "FastCarc", "MaxSim", "MinSim", "Pyro"];

    pub fn name(&self) -> &'static str {
        match self {
            Component::Synth => "Synth",
            Component::Depth => "Depth",
            Component::BBPrice => "BBPrice",
            Component::Ghs(_) => "GHS",
            Component::FastCarc => "FastCarc",
            Component::MaxSim(_) => "MaxSim",
            Component::MinSim(_) => "MinSim",
            Component::Pyro => "Pyro",
        }
    }

    /// Route-level components are added once; the rest sum over reactions.
    pub fn is_route_level(&self) -> bool {
        matches!(self, Component::Synth | Component::Depth)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = match self {
            Component::Ghs(codes) => codes.iter().map(|c| format!("'{c}'")).collect(),
            Component::MaxSim(refs) | Component::MinSim(refs) => refs.iter().map(|m| format!("'{m}'")).collect(),
            _ => Vec::new(),
        };
        write!(f, "{}({})", self.name(), args.join(", "))
    }
}

/// Parsed value function. Literals carry their sign; there is no general
/// unary minus.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Call(Component),
    Bin(Box<Expr>, BinOp, Box<Expr>),
}

pub type ValueFunctionAst = Expr;

impl Expr {
    pub fn bin(l: Expr, op: BinOp, r: Expr) -> Expr {
        Expr::Bin(Box::new(l), op, Box::new(r))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(_, op, _) => op.precedence(),
            _ => 3,
        }
    }

    /// Component calls in left-to-right order.
    pub fn components(&self) -> Vec<&Component> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Component>) {
        match self {
            Expr::Num(_) => {}
            Expr::Call(c) => out.push(c),
            Expr::Bin(l, _, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }
}

/// Canonical text. Parenthesizes a left operand of lower precedence and a
/// right operand of equal or lower precedence, which is exactly what a
/// left-associative reparse needs.
pub fn render_vf(ast: &Expr) -> String {
    let mut s = String::new();
    write_expr(ast, &mut s);
    s
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Num(v) => out.push_str(&format!("{v}")),
        Expr::Call(c) => out.push_str(&c.to_string()),
        Expr::Bin(l, op, r) => {
            let p = op.precedence();
            write_operand(l, l.precedence() < p, out);
            out.push(' ');
            out.push(op.symbol());
            out.push(' ');
            write_operand(r, r.precedence() <= p, out);
        }
    }
}

fn write_operand(e: &Expr, paren: bool, out: &mut String) {
    if paren {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_vf(self))
    }
}
