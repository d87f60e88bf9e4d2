use serde::Serialize;

use crate::chemworld::{fingerprint, tanimoto, Molecule, Reaction, World};

use super::ast::{BinOp, Component, Expr};
use super::VfError;

const DIVISION_EPSILON: f64 = 1e-9;

/// What a value function sees of a (partial) route.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteState {
    pub reactions: Vec<Reaction>,
    pub frontier: Vec<Molecule>,
}

impl RouteState {
    pub fn depth(&self) -> usize {
        self.reactions.len()
    }
}

pub fn evaluate_vf(ast: &Expr, state: &RouteState, world: &World) -> Result<f64, VfError> {
    match ast {
        Expr::Num(v) => Ok(*v),
        Expr::Call(c) => Ok(component_value(c, state, world)),
        Expr::Bin(l, op, r) => {
            let a = evaluate_vf(l, state, world)?;
            let b = evaluate_vf(r, state, world)?;
            Ok(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.abs() < DIVISION_EPSILON {
                        return Err(VfError::DivisionByZero);
                    }
                    a / b
                }
            })
        }
    }
}

/// Best similarity of `mol` to any reference.
fn similarity(mol: &Molecule, refs: &[Molecule]) -> f64 {
    let fp = fingerprint(mol);
    refs.iter().map(|r| tanimoto(&fp, &fingerprint(r)).unwrap_or(0.0)).fold(0.0, f64::max)
}

pub fn component_value(c: &Component, state: &RouteState, world: &World) -> f64 {
    match c {
        Component::Synth => -state.frontier.iter().map(|m| world.synth_cost(m)).sum::<f64>(),
        Component::Depth => state.depth() as f64,
        _ => state.reactions.iter().map(|r| reaction_value(c, r, world)).sum(),
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn reaction_value(c: &Component, r: &Reaction, world: &World) -> f64 {
    match c {
        Component::Synth | Component::Depth => 0.0,
        Component::BBPrice => r.reactants().iter().filter_map(|m| world.price(m)).sum(),
        Component::Ghs(codes) => indicator(r.molecules().any(|m| {
            let p = world.profile(m);
            codes.iter().any(|code| p.ghs_codes.contains(code))
        })),
        Component::FastCarc => indicator(r.molecules().any(|m| world.profile(m).carc_alert)),
        Component::Pyro => indicator(r.molecules().any(|m| world.predict_pyrophoric(m))),
        Component::MaxSim(refs) => r.molecules().map(|m| similarity(m, refs)).fold(0.0, f64::max),
        Component::MinSim(refs) => r.molecules().map(|m| similarity(m, refs)).fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ComponentValue {
    pub component: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Breakdown {
    pub expression: String,
    pub value: f64,
    pub components: Vec<ComponentValue>,
}

/// Total value plus the value of every distinct component call.
pub fn breakdown(ast: &Expr, state: &RouteState, world: &World) -> Result<Breakdown, VfError> {
    let value = evaluate_vf(ast, state, world)?;
    let mut components: Vec<ComponentValue> = Vec::new();
    for c in ast.components() {
        let name = c.to_string();
        if components.iter().all(|cv| cv.component != name) {
            components.push(ComponentValue { component: name, value: component_value(c, state, world) });
        }
    }
    Ok(Breakdown { expression: ast.to_string(), value, components })
}
