use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ChemError;

/// A molecule in canonical token form: lowercase `[a-z0-9]+` tokens joined
/// by single `-` separators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Molecule(String);

impl Molecule {
    /// Canonicalizes `raw`: trims, lowercases, collapses runs of `-` and
    /// drops leading/trailing separators.
    pub fn parse(raw: &str) -> Result<Self, ChemError> {
        let lowered = raw.trim().to_lowercase();
        if lowered.is_empty() {
            return Err(ChemError::EmptyMolecule);
        }
        if let Some(ch) = lowered.chars().find(|c| !(c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '-')) {
            return Err(ChemError::IllegalCharacter { ch, input: raw.to_string() });
        }
        let tokens: Vec<&str> = lowered.split('-').filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            return Err(ChemError::EmptyMolecule);
        }
        Ok(Molecule(tokens.join("-")))
    }

    /// Builds a molecule from tokens that are already known to be valid.
    pub(crate) fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let joined: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        Molecule(joined.join("-"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split('-')
    }

    pub fn token_count(&self) -> usize {
        self.tokens().count()
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Molecule {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for Molecule {
    type Err = ChemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Molecule::parse(s)
    }
}

impl Serialize for Molecule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Molecule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Molecule::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Canonical forward reaction string: reactants sorted, joined by `.`, then
/// `>>` and the product.
pub fn canonicalize_reaction(reactants: &[Molecule], product: &Molecule) -> Result<String, ChemError> {
    if reactants.is_empty() {
        return Err(ChemError::NoReactants);
    }
    let mut sorted: Vec<&str> = reactants.iter().map(Molecule::as_str).collect();
    sorted.sort_unstable();
    Ok(format!("{}>>{}", sorted.join("."), product))
}

/// A single forward reaction. Reactants are kept sorted so that equality
/// and hashing follow the canonical string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reaction {
    reactants: Vec<Molecule>,
    product: Molecule,
}

impl Reaction {
    pub fn new(mut reactants: Vec<Molecule>, product: Molecule) -> Result<Self, ChemError> {
        if reactants.is_empty() {
            return Err(ChemError::NoReactants);
        }
        reactants.sort();
        Ok(Reaction { reactants, product })
    }

    /// Parses `a.b>>c`; every molecule is canonicalized.
    pub fn parse(text: &str) -> Result<Self, ChemError> {
        let (lhs, rhs) = text.split_once(">>").ok_or_else(|| ChemError::MalformedReaction(text.to_string()))?;
        if rhs.contains(">>") || rhs.contains('.') {
            return Err(ChemError::MalformedReaction(text.to_string()));
        }
        let product = Molecule::parse(rhs)?;
        let reactants =
            lhs.split('.').filter(|s| !s.trim().is_empty()).map(Molecule::parse).collect::<Result<Vec<_>, _>>()?;
        Reaction::new(reactants, product)
    }

    pub fn reactants(&self) -> &[Molecule] {
        &self.reactants
    }

    pub fn product(&self) -> &Molecule {
        &self.product
    }

    /// Product followed by reactants.
    pub fn molecules(&self) -> impl Iterator<Item = &Molecule> {
        std::iter::once(&self.product).chain(self.reactants.iter())
    }

    pub fn is_self_loop(&self) -> bool {
        self.reactants.contains(&self.product)
    }

    pub fn canonical(&self) -> String {
        let names: Vec<&str> = self.reactants.iter().map(Molecule::as_str).collect();
        format!("{}>>{}", names.join("."), self.product)
    }
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl Serialize for Reaction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for Reaction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Reaction::parse(&raw).map_err(serde::de::Error::custom)
    }
}
