use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentAction {
    SetValueFunction(String),
    Finalize,
    RestrictMolecules(Vec<String>),
    RestrictSpecificReactions(Vec<String>),
    RestrictReactionTemplates(Vec<String>),
    DepthLimit(i64),
    UnrestrictMolecules(Vec<String>),
    UnrestrictSpecificReaction(String),
    UnrestrictReactionTemplate(String),
    AcceptProposed(String),
    Reject(String),
    AcceptPrevious(usize, String),
    Pruning(String),
    ValueFn(String),
    ExpandDefault(usize),
    Expand(String),
}

pub const TOOL_NAMES: [&str; 16] = [
    "SetValueFunction",
    "Finalize",
    "RestrictMolecules",
    "RestrictSpecificReactions",
    "RestrictReactionTemplates",
    "DepthLimit",
    "UnrestrictMolecules",
    "UnrestrictSpecificReaction",
    "UnrestrictReactionTemplate",
    "AcceptProposed",
    "Reject",
    "AcceptPrevious",
    "Pruning",
    "ValueFn",
    "ExpandDefault",
    "Expand",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Coordinator,
    Navigator,
    Regulator,
    Verifier,
}

impl Role {
    pub fn allowed_tools(self) -> &'static [&'static str] {
        match self {
            Role::Coordinator => &["Pruning", "ValueFn", "ExpandDefault", "Expand"],
            Role::Navigator => &["SetValueFunction", "Finalize"],
            Role::Regulator => &[
                "RestrictMolecules",
                "RestrictSpecificReactions",
                "RestrictReactionTemplates",
                "DepthLimit",
                "UnrestrictMolecules",
                "UnrestrictSpecificReaction",
                "UnrestrictReactionTemplate",
                "Finalize",
            ],
            Role::Verifier => &["AcceptProposed", "Reject", "AcceptPrevious"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Coordinator => "coordinator",
            Role::Navigator => "navigator",
            Role::Regulator => "regulator",
            Role::Verifier => "verifier",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("no `Action: Tool(...)` line found")]
    NoActionFound,
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("tool {0:?} is not available here")]
    DisallowedTool(String),
    #[error("malformed arguments: {0}")]
    MalformedArguments(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Arg {
    Str(String),
    Int(i64),
}

impl AgentAction {
    pub fn tool_name(&self) -> &'static str {
        use AgentAction::*;
        match self {
            SetValueFunction(_) => "SetValueFunction",
            Finalize => "Finalize",
            RestrictMolecules(_) => "RestrictMolecules",
            RestrictSpecificReactions(_) => "RestrictSpecificReactions",
            RestrictReactionTemplates(_) => "RestrictReactionTemplates",
            DepthLimit(_) => "DepthLimit",
            UnrestrictMolecules(_) => "UnrestrictMolecules",
            UnrestrictSpecificReaction(_) => "UnrestrictSpecificReaction",
            UnrestrictReactionTemplate(_) => "UnrestrictReactionTemplate",
            AcceptProposed(_) => "AcceptProposed",
            Reject(_) => "Reject",
            AcceptPrevious(..) => "AcceptPrevious",
            Pruning(_) => "Pruning",
            ValueFn(_) => "ValueFn",
            ExpandDefault(_) => "ExpandDefault",
            Expand(_) => "Expand",
        }
    }
}

/// Locates `Name(` after the last usable `Action:` marker and returns the
/// name and the text following the open parenthesis.
fn locate(text: &str) -> Option<(&str, &str)> {
    let marks: Vec<usize> = text.match_indices("Action:").map(|(i, _)| i).collect();
    for &i in marks.iter().rev() {
        let rest = text[i + "Action:".len()..].trim_start_matches([' ', '\t']);
        let rest = rest.strip_prefix('`').unwrap_or(rest).trim_start_matches([' ', '\t']);
        let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        if end == 0 || !rest[..1].chars().all(|c| c.is_ascii_alphabetic()) {
            continue;
        }
        let after = rest[end..].trim_start_matches([' ', '\t']);
        if let Some(args) = after.strip_prefix('(') {
            return Some((&rest[..end], args));
        }
    }
    None
}

fn lex_args(src: &str) -> Result<Vec<Arg>, String> {
    let mut chars = src.char_indices().peekable();
    let mut args = Vec::new();
    let skip_ws = |chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>| {
        while chars.peek().is_some_and(|(_, c)| c.is_whitespace()) {
            chars.next();
        }
    };
    skip_ws(&mut chars);
    if chars.peek().is_some_and(|&(_, c)| c == ')') {
        return Ok(args);
    }
    // A bracketed list is flattened into the surrounding arguments.
    let mut in_list = false;
    loop {
        skip_ws(&mut chars);
        match chars.next() {
            Some((_, '[')) if !in_list => {
                in_list = true;
                skip_ws(&mut chars);
                if chars.peek().is_some_and(|&(_, c)| c == ']') {
                    chars.next();
                    in_list = false;
                    skip_ws(&mut chars);
                    match chars.next() {
                        Some((_, ',')) => continue,
                        Some((_, ')')) => return Ok(args),
                        _ => return Err("expected ',' or ')' after list".into()),
                    }
                }
                continue;
            }
            Some((_, q @ ('\'' | '"'))) => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string".into()),
                        Some((_, '\\')) => match chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, c @ ('\\' | '\'' | '"'))) => s.push(c),
                            Some((_, c)) => {
                                s.push('\\');
                                s.push(c);
                            }
                            None => return Err("unterminated string".into()),
                        },
                        Some((_, c)) if c == q => break,
                        Some((_, c)) => s.push(c),
                    }
                }
                args.push(Arg::Str(s));
            }
            Some((start, c)) if c == '-' || c == '+' || c.is_ascii_digit() => {
                let mut end = start + c.len_utf8();
                while let Some(&(i, d)) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    end = i + 1;
                    chars.next();
                }
                let n = src[start..end].parse::<i64>().map_err(|_| format!("bad integer {:?}", &src[start..end]))?;
                args.push(Arg::Int(n));
            }
            Some((_, c)) => return Err(format!("unexpected {c:?}; strings must be quoted")),
            None => return Err("missing closing parenthesis".into()),
        }
        skip_ws(&mut chars);
        let mut next = chars.next();
        if in_list && matches!(next, Some((_, ']'))) {
            in_list = false;
            skip_ws(&mut chars);
            next = chars.next();
        }
        match next {
            Some((_, ',')) => continue,
            Some((_, ')')) if !in_list => return Ok(args),
            Some((_, ')')) => return Err("unclosed '['".into()),
            Some((_, c)) => return Err(format!("expected ',' or ')' but found {c:?}")),
            None => return Err("missing closing parenthesis".into()),
        }
    }
}

fn one_string(name: &str, args: Vec<Arg>) -> Result<String, String> {
    match args.as_slice() {
        [Arg::Str(s)] if !s.trim().is_empty() => Ok(s.clone()),
        [Arg::Str(_)] => Err(format!("{name} needs a non-empty string")),
        _ => Err(format!("{name} takes exactly one string")),
    }
}

fn strings(name: &str, args: Vec<Arg>) -> Result<Vec<String>, String> {
    if args.is_empty() {
        return Err(format!("{name} needs at least one string"));
    }
    args.into_iter()
        .map(|a| match a {
            Arg::Str(s) if !s.trim().is_empty() => Ok(s),
            Arg::Str(_) => Err(format!("{name} arguments must be non-empty")),
            Arg::Int(n) => Err(format!("{name} expects strings, got {n}")),
        })
        .collect()
}

fn one_int(name: &str, args: Vec<Arg>, min: i64) -> Result<i64, String> {
    match args.as_slice() {
        [Arg::Int(n)] if *n >= min => Ok(*n),
        [Arg::Int(n)] => Err(format!("{name} needs an integer >= {min}, got {n}")),
        _ => Err(format!("{name} takes exactly one integer")),
    }
}

fn build(name: &str, args: Vec<Arg>) -> Result<AgentAction, String> {
    use AgentAction::*;
    Ok(match name {
        "SetValueFunction" => SetValueFunction(one_string(name, args)?),
        "Finalize" if args.is_empty() => Finalize,
        "Finalize" => return Err("Finalize takes no arguments".into()),
        "RestrictMolecules" => RestrictMolecules(strings(name, args)?),
        "RestrictSpecificReactions" => RestrictSpecificReactions(strings(name, args)?),
        "RestrictReactionTemplates" => RestrictReactionTemplates(strings(name, args)?),
        "DepthLimit" => DepthLimit(one_int(name, args, -1)?),
        "UnrestrictMolecules" => UnrestrictMolecules(strings(name, args)?),
        "UnrestrictSpecificReaction" => UnrestrictSpecificReaction(one_string(name, args)?),
        "UnrestrictReactionTemplate" => UnrestrictReactionTemplate(one_string(name, args)?),
        "AcceptProposed" => AcceptProposed(one_string(name, args)?),
        "Reject" => Reject(one_string(name, args)?),
        "AcceptPrevious" => match args.as_slice() {
            [Arg::Int(id), Arg::Str(reason)] if *id >= 1 && !reason.trim().is_empty() => {
                AcceptPrevious(*id as usize, reason.clone())
            }
            _ => return Err("AcceptPrevious takes an id >= 1 and a non-empty reason".into()),
        },
        "Pruning" => Pruning(one_string(name, args)?),
        "ValueFn" => ValueFn(one_string(name, args)?),
        "ExpandDefault" => ExpandDefault(one_int(name, args, 1)? as usize),
        "Expand" => match args.as_slice() {
            [Arg::Int(n)] => Expand(n.to_string()),
            _ => Expand(one_string(name, args)?),
        },
        other => return Err(format!("unknown tool {other}")),
    })
}

/// Parses the tool call on the last `Action:` line of a model reply.
pub fn parse_action(text: &str, allowed: &[&str]) -> Result<AgentAction, ActionError> {
    let (name, rest) = locate(text).ok_or(ActionError::NoActionFound)?;
    if !TOOL_NAMES.contains(&name) {
        return Err(ActionError::UnknownTool(name.to_string()));
    }
    if !allowed.contains(&name) {
        return Err(ActionError::DisallowedTool(name.to_string()));
    }
    let args = lex_args(rest).map_err(ActionError::MalformedArguments)?;
    build(name, args).map_err(ActionError::MalformedArguments)
}

fn quote(s: &str) -> String {
    let q = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

/// The call syntax accepted by [`parse_action`], e.g. `DepthLimit(-1)`.
pub fn render_action(action: &AgentAction) -> String {
    use AgentAction::*;
    let list = |v: &[String]| v.iter().map(|s| quote(s)).collect::<Vec<_>>().join(", ");
    let args = match action {
        Finalize => String::new(),
        SetValueFunction(s)
        | UnrestrictSpecificReaction(s)
        | UnrestrictReactionTemplate(s)
        | AcceptProposed(s)
        | Reject(s)
        | Pruning(s)
        | ValueFn(s)
        | Expand(s) => quote(s),
        RestrictMolecules(v) | RestrictSpecificReactions(v) | RestrictReactionTemplates(v) | UnrestrictMolecules(v) => {
            list(v)
        }
        DepthLimit(n) => n.to_string(),
        ExpandDefault(n) => n.to_string(),
        AcceptPrevious(id, s) => format!("{id}, {}", quote(s)),
    };
    format!("{}({args})", action.tool_name())
}

impl fmt::Display for AgentAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_action(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: &[&str] = &TOOL_NAMES;

    #[test]
    fn bracketed_lists_flatten() {
        let want = AgentAction::RestrictMolecules(vec!["cz-cl".into(), "na-oh".into()]);
        assert_eq!(parse_action("Action: RestrictMolecules(['cz-cl', 'na-oh'])", ALL), Ok(want.clone()));
        assert_eq!(parse_action("Action: RestrictMolecules( [ 'cz-cl' ], 'na-oh')", ALL), Ok(want));
        assert!(parse_action("Action: RestrictMolecules([])", ALL).is_err());
        assert!(parse_action("Action: RestrictMolecules(['cz-cl')", ALL).is_err());
        assert!(parse_action("Action: RestrictMolecules([['cz-cl']])", ALL).is_err());
    }

    #[test]
    fn finalize_with_thought() {
        assert_eq!(parse_action("Thought: ok\nAction: `Finalize()`<PAUSE>", ALL), Ok(AgentAction::Finalize));
        assert_eq!(parse_action("Action: Finalize()", ALL), Ok(AgentAction::Finalize));
    }

    #[test]
    fn errors_in_order() {
        assert_eq!(parse_action("no action here", ALL), Err(ActionError::NoActionFound));
        assert_eq!(parse_action("Action: `LaunchRocket()`", ALL), Err(ActionError::UnknownTool("LaunchRocket".into())));
        assert_eq!(
            parse_action("Action: `Finalize()`", Role::Verifier.allowed_tools()),
            Err(ActionError::DisallowedTool("Finalize".into()))
        );
        assert!(matches!(parse_action("Action: `Reject(oops)`", ALL), Err(ActionError::MalformedArguments(_))));
        assert!(matches!(parse_action("Action: `Reject('')`", ALL), Err(ActionError::MalformedArguments(_))));
        assert!(matches!(parse_action("Action: `ExpandDefault(0)`", ALL), Err(ActionError::MalformedArguments(_))));
        assert!(matches!(parse_action("Action: `DepthLimit(-2)`", ALL), Err(ActionError::MalformedArguments(_))));
    }

    #[test]
    fn arguments() {
        assert_eq!(parse_action("Action: `DepthLimit(-1)`", ALL), Ok(AgentAction::DepthLimit(-1)));
        assert_eq!(
            parse_action("Action: `RestrictMolecules('ph-cl', \"li-al\")`<PAUSE>", ALL),
            Ok(AgentAction::RestrictMolecules(vec!["ph-cl".into(), "li-al".into()]))
        );
        assert_eq!(
            parse_action("Action: `AcceptPrevious(2, \"best so far\")`", ALL),
            Ok(AgentAction::AcceptPrevious(2, "best so far".into()))
        );
        assert_eq!(parse_action("Action: `Expand(3)`", ALL), Ok(AgentAction::Expand("3".into())));
        assert_eq!(
            parse_action("Action: `SetValueFunction(\"Synth() - 5*GHS('H225')\")`", ALL),
            Ok(AgentAction::SetValueFunction("Synth() - 5*GHS('H225')".into()))
        );
    }

    #[test]
    fn last_action_wins() {
        let text = "Action: `Reject('a')`\nThought: on reflection\nAction: `AcceptProposed('b')`<PAUSE>";
        assert_eq!(parse_action(text, ALL), Ok(AgentAction::AcceptProposed("b".into())));
        // a later bare mention without a call does not hide the real one
        let text = "Action: `Reject('a')`\nI will emit the Action: above";
        assert_eq!(parse_action(text, ALL), Ok(AgentAction::Reject("a".into())));
    }

    fn text() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9 '\"\\\\\n().,*>$-]{0,12}".prop_filter("non-empty", |s| !s.trim().is_empty())
    }

    fn arb_action() -> impl Strategy<Value = AgentAction> {
        use AgentAction::*;
        let list = || prop::collection::vec(text(), 1..4);
        prop_oneof![
            text().prop_map(SetValueFunction),
            Just(Finalize),
            list().prop_map(RestrictMolecules),
            list().prop_map(RestrictSpecificReactions),
            list().prop_map(RestrictReactionTemplates),
            (-1i64..1000).prop_map(DepthLimit),
            list().prop_map(UnrestrictMolecules),
            text().prop_map(UnrestrictSpecificReaction),
            text().prop_map(UnrestrictReactionTemplate),
            text().prop_map(AcceptProposed),
            text().prop_map(Reject),
            (1usize..100, text()).prop_map(|(i, s)| AcceptPrevious(i, s)),
            text().prop_map(Pruning),
            text().prop_map(ValueFn),
            (1usize..1000).prop_map(ExpandDefault),
            text().prop_map(Expand),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn render_parse_round_trip(action in arb_action()) {
            let reply = format!("Thought: x\nAction: `{}`<PAUSE>", render_action(&action));
            prop_assert_eq!(parse_action(&reply, ALL), Ok(action));
        }
    }
}
