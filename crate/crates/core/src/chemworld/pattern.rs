use std::collections::BTreeMap;
use std::fmt;

use super::{ChemError, Molecule, Reaction};

/// Variable bindings produced by a match. The anonymous `*` never binds.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Lit(String),
    Var(String),
    Any,
}

/// A molecule pattern: literal tokens plus at most one variable (`$NAME`)
/// or anonymous wildcard (`*`) that stands for a non-empty token span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    tokens: Vec<Token>,
}

impl Pattern {
    pub fn parse(text: &str) -> Result<Self, ChemError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(ChemError::MalformedPattern("empty pattern".into()));
        }
        let mut tokens = Vec::new();
        let mut variables = 0;
        for raw in trimmed.split('-') {
            let tok = if raw == "*" {
                variables += 1;
                Token::Any
            } else if let Some(name) = raw.strip_prefix('$') {
                let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !valid {
                    return Err(ChemError::MalformedPattern(format!("bad variable {raw:?} in {text:?}")));
                }
                variables += 1;
                Token::Var(name.to_string())
            } else {
                let lit = raw.to_ascii_lowercase();
                if lit.is_empty() || !lit.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()) {
                    return Err(ChemError::MalformedPattern(format!("bad token {raw:?} in {text:?}")));
                }
                Token::Lit(lit)
            };
            tokens.push(tok);
        }
        if variables > 1 {
            return Err(ChemError::MalformedPattern(format!("more than one variable in {text:?}")));
        }
        Ok(Pattern { tokens })
    }

    pub fn variable(&self) -> Option<&str> {
        self.tokens.iter().find_map(|t| match t {
            Token::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn has_wildcard(&self) -> bool {
        self.tokens.iter().any(|t| matches!(t, Token::Any))
    }

    /// All bindings under which the pattern spells `molecule`. With a single
    /// variable the span is forced, so there is at most one.
    pub fn matches(&self, molecule: &Molecule) -> Vec<Binding> {
        let mol: Vec<&str> = molecule.tokens().collect();
        let slot = self.tokens.iter().position(|t| !matches!(t, Token::Lit(_)));
        let lit = |t: &Token, m: &str| matches!(t, Token::Lit(l) if l == m);
        match slot {
            None => {
                if mol.len() == self.tokens.len() && self.tokens.iter().zip(&mol).all(|(t, m)| lit(t, m)) {
                    vec![Binding::new()]
                } else {
                    vec![]
                }
            }
            Some(i) => {
                let suffix = self.tokens.len() - i - 1;
                if mol.len() < i + suffix + 1 {
                    return vec![];
                }
                let span_end = mol.len() - suffix;
                let head_ok = self.tokens[..i].iter().zip(&mol[..i]).all(|(t, m)| lit(t, m));
                let tail_ok = self.tokens[i + 1..].iter().zip(&mol[span_end..]).all(|(t, m)| lit(t, m));
                if !(head_ok && tail_ok) {
                    return vec![];
                }
                let mut binding = Binding::new();
                if let Token::Var(name) = &self.tokens[i] {
                    binding.insert(name.clone(), mol[i..span_end].join("-"));
                }
                vec![binding]
            }
        }
    }

    /// Substitutes the binding; `None` when the variable is unbound or the
    /// pattern contains `*`.
    pub fn instantiate(&self, binding: &Binding) -> Option<Molecule> {
        let mut out: Vec<String> = Vec::with_capacity(self.tokens.len());
        for t in &self.tokens {
            match t {
                Token::Lit(l) => out.push(l.clone()),
                Token::Var(v) => out.push(binding.get(v)?.clone()),
                Token::Any => return None,
            }
        }
        Some(Molecule::from_tokens(&out))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .tokens
            .iter()
            .map(|t| match t {
                Token::Lit(l) => l.clone(),
                Token::Var(v) => format!("${v}"),
                Token::Any => "*".to_string(),
            })
            .collect();
        f.write_str(&parts.join("-"))
    }
}

pub fn match_pattern(pattern: &str, molecule: &Molecule) -> Result<Vec<Binding>, ChemError> {
    Ok(Pattern::parse(pattern)?.matches(molecule))
}

/// Restriction pattern over reactions. A bare molecule pattern hits a
/// reaction when any participant matches; `lhs>>rhs` matches the product
/// against `rhs` and each `lhs` component against a distinct reactant, with
/// named variables bound consistently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReactionPattern {
    Molecule(Pattern),
    Reaction { reactants: Vec<Pattern>, product: Pattern },
}

impl ReactionPattern {
    pub fn parse(text: &str) -> Result<Self, ChemError> {
        match text.split_once(">>") {
            None => Ok(ReactionPattern::Molecule(Pattern::parse(text)?)),
            Some((lhs, rhs)) => {
                let product = Pattern::parse(rhs)?;
                let reactants = lhs
                    .split('.')
                    .filter(|s| !s.trim().is_empty())
                    .map(Pattern::parse)
                    .collect::<Result<Vec<_>, _>>()?;
                if reactants.is_empty() {
                    return Err(ChemError::MalformedPattern(format!("no reactant patterns in {text:?}")));
                }
                Ok(ReactionPattern::Reaction { reactants, product })
            }
        }
    }

    pub fn matches(&self, reaction: &Reaction) -> bool {
        match self {
            ReactionPattern::Molecule(p) => reaction.molecules().any(|m| !p.matches(m).is_empty()),
            ReactionPattern::Reaction { reactants, product } => {
                if reactants.len() > reaction.reactants().len() {
                    return false;
                }
                product.matches(reaction.product()).into_iter().any(|b| {
                    let mut used = vec![false; reaction.reactants().len()];
                    assign(reactants, reaction.reactants(), &mut used, b)
                })
            }
        }
    }
}

fn assign(patterns: &[Pattern], mols: &[Molecule], used: &mut [bool], binding: Binding) -> bool {
    let Some((first, rest)) = patterns.split_first() else {
        return true;
    };
    for (i, m) in mols.iter().enumerate() {
        if used[i] {
            continue;
        }
        for b in first.matches(m) {
            let consistent = b.iter().all(|(k, v)| binding.get(k).is_none_or(|prev| prev == v));
            if !consistent {
                continue;
            }
            let mut merged = binding.clone();
            merged.extend(b);
            used[i] = true;
            if assign(rest, mols, used, merged) {
                used[i] = false;
                return true;
            }
            used[i] = false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Molecule {
        Molecule::parse(s).unwrap()
    }

    /// Enumerates every contiguous span as a candidate binding and keeps the
    /// ones whose instantiation reproduces the molecule.
    fn exhaustive(pattern: &Pattern, mol: &Molecule) -> Vec<Binding> {
        let toks: Vec<&str> = mol.tokens().collect();
        let Some(var) = pattern.variable().map(str::to_string) else {
            return pattern.matches(mol);
        };
        let mut out = Vec::new();
        for a in 0..toks.len() {
            for b in a + 1..=toks.len() {
                let mut binding = Binding::new();
                binding.insert(var.clone(), toks[a..b].join("-"));
                if pattern.instantiate(&binding).as_ref() == Some(mol) && !out.contains(&binding) {
                    out.push(binding);
                }
            }
        }
        out
    }

    #[test]
    fn suffix_variable() {
        let got = match_pattern("$X-ester", &m("ac-ester")).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0]["X"], "ac");
        let p = Pattern::parse("$X-ester").unwrap();
        assert_eq!(exhaustive(&p, &m("ac-ester")), got);
    }

    #[test]
    fn exact_and_missing() {
        assert_eq!(match_pattern("ac-acid", &m("ac-acid")).unwrap(), vec![Binding::new()]);
        assert!(match_pattern("$X-ester", &m("ac-acid")).unwrap().is_empty());
        assert!(match_pattern("$X-ester", &m("ester")).unwrap().is_empty());
    }

    #[test]
    fn multi_token_span() {
        let got = match_pattern("ph-$R-cl", &m("ph-me-et-cl")).unwrap();
        assert_eq!(got[0]["R"], "me-et");
    }

    #[test]
    fn wildcard_binds_nothing() {
        assert_eq!(match_pattern("*-cl", &m("ph-cl")).unwrap(), vec![Binding::new()]);
        assert!(match_pattern("*-cl", &m("cl")).unwrap().is_empty());
    }

    #[test]
    fn two_variables_rejected() {
        assert!(matches!(Pattern::parse("$X-$Y"), Err(ChemError::MalformedPattern(_))));
        assert!(matches!(Pattern::parse("*-$Y"), Err(ChemError::MalformedPattern(_))));
        assert!(matches!(Pattern::parse("a--b"), Err(ChemError::MalformedPattern(_))));
    }

    #[test]
    fn reaction_patterns() {
        let r = Reaction::parse("ac-acid.me-oh>>ac-ester").unwrap();
        assert!(ReactionPattern::parse("me-oh").unwrap().matches(&r));
        assert!(ReactionPattern::parse("$X-acid.me-oh>>$X-ester").unwrap().matches(&r));
        assert!(!ReactionPattern::parse("$X-acid.me-oh>>$X-ether").unwrap().matches(&r));
        let inconsistent = Reaction::parse("ph-acid.me-oh>>ac-ester").unwrap();
        assert!(!ReactionPattern::parse("$X-acid.me-oh>>$X-ester").unwrap().matches(&inconsistent));
        assert!(ReactionPattern::parse("*.*>>*-ester").unwrap().matches(&r));
        assert!(!ReactionPattern::parse("*.*.*>>*-ester").unwrap().matches(&r));
    }

    proptest::proptest! {
        #[test]
        fn bindings_reproduce_molecule(
            toks in proptest::collection::vec("[a-c]{1,2}", 1..6),
            pat in proptest::collection::vec(proptest::prop_oneof!["[a-c]{1,2}", proptest::strategy::Just("$X".to_string())], 1..5),
        ) {
            let mut seen_var = false;
            let pat: Vec<String> = pat.into_iter().filter(|t| {
                if t == "$X" { if seen_var { return false; } seen_var = true; }
                true
            }).collect();
            proptest::prop_assume!(!pat.is_empty());
            let p = Pattern::parse(&pat.join("-")).unwrap();
            let mol = m(&toks.join("-"));
            let got = p.matches(&mol);
            for b in &got {
                proptest::prop_assert_eq!(p.instantiate(b), Some(mol.clone()));
            }
            proptest::prop_assert_eq!(got, exhaustive(&p, &mol));
            if p.variable().is_none() {
                proptest::prop_assert_eq!(!p.matches(&mol).is_empty(), p.to_string() == mol.as_str());
            }
        }
    }
}
