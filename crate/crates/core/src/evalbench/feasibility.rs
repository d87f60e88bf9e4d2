use crate::chemworld::{expand_retro, Reaction, World};

use super::EvalError;

/// A reaction is feasible when it ranks among this many predictions for its
/// product.
pub const FEASIBILITY_TOP_K: usize = 5;

pub fn feasibility_check(reaction: &Reaction, world: &World) -> bool {
    expand_retro(world, reaction.product(), FEASIBILITY_TOP_K).iter().any(|s| &s.reaction == reaction)
}

pub trait FeasibilityJudge {
    fn is_feasible(&self, reaction: &Reaction, world: &World) -> Result<bool, EvalError>;
}

/// The exact-world top-k check.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopKFeasibility;

impl FeasibilityJudge for TopKFeasibility {
    fn is_feasible(&self, reaction: &Reaction, world: &World) -> Result<bool, EvalError> {
        Ok(feasibility_check(reaction, world))
    }
}

/// Placeholder for a language-model feasibility judge; it has no
/// implementation and always reports that.
#[derive(Debug, Clone, Copy, Default)]
pub struct LlmFeasibilityJudge;

impl FeasibilityJudge for LlmFeasibilityJudge {
    fn is_feasible(&self, _reaction: &Reaction, _world: &World) -> Result<bool, EvalError> {
        Err(EvalError::Backend("language-model feasibility judging is not implemented".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let w = World::from_json_str(include_str!("../../data/tiny.world.json")).unwrap();
        assert!(feasibility_check(&Reaction::parse("ac-acid.me-oh>>ac-ester").unwrap(), &w));
        assert!(!feasibility_check(&Reaction::parse("x>>y").unwrap(), &w));
        assert!(LlmFeasibilityJudge.is_feasible(&Reaction::parse("x>>y").unwrap(), &w).is_err());
    }
}
