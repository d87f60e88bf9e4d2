//! Synthetic chemistry universe: token-string molecules, rewrite templates,
//! fingerprints and the building-block catalog.

mod fingerprint;
mod molecule;
mod pattern;
mod world;

pub use fingerprint::{fingerprint, tanimoto, Fingerprint, FINGERPRINT_BITS};
pub use molecule::{canonicalize_reaction, Molecule, Reaction};
pub use pattern::{match_pattern, Binding, Pattern, ReactionPattern};
pub use world::{
    annotate, expand_retro, load_world, MoleculeProfile, ReactionSource, ReactionTemplate, ScoredReaction, World,
    DEFAULT_BRANCHING,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChemError {
    #[error("molecule is empty")]
    EmptyMolecule,
    #[error("illegal character {ch:?} in {input:?}")]
    IllegalCharacter { ch: char, input: String },
    #[error("reaction has no reactants")]
    NoReactants,
    #[error("malformed reaction {0:?}")]
    MalformedReaction(String),
    #[error("malformed pattern: {0}")]
    MalformedPattern(String),
    #[error("fingerprint length mismatch ({left} vs {right} bits)")]
    LengthMismatch { left: usize, right: usize },
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
}
