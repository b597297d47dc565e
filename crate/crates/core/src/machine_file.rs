//! TOML machine and signature files.
//!
//! ```toml
//! users = ["u", "v"]
//! actions = [{ name = "a", dom = "u", part = "Au" }, { name = "b", dom = "v", part = "Av" }]
//! states = ["s0", "s1"]
//! initial = "s0"
//! step = [["s0", "a", "s1"], ["s0", "b", "s0"], ["s1", "a", "s1"], ["s1", "b", "s0"]]
//! obs = [["u", "s0", "0"], ["u", "s1", "1"], ["v", "s0", "0"], ["v", "s1", "0"]]
//! ```
//!
//! Output values may be strings, integers or booleans; they are compared as
//! text.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::model::{ActionDecl, Built, Machine, ModelError, Signature, StateId};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error("{0}")]
    Unanchored(#[from] ModelError),
}

impl LoadError {
    pub fn line(&self) -> Option<usize> {
        match self {
            LoadError::Syntax { line, .. } | LoadError::Model { line, .. } => Some(*line),
            LoadError::Unanchored(_) => None,
        }
    }
}

#[derive(Deserialize)]
struct RawAction {
    name: String,
    dom: String,
    part: String,
}

#[derive(Deserialize)]
struct RawSignature {
    users: Vec<Spanned<String>>,
    actions: Vec<Spanned<RawAction>>,
}

#[derive(Deserialize)]
struct RawMachine {
    users: Vec<Spanned<String>>,
    actions: Vec<Spanned<RawAction>>,
    states: Vec<Spanned<String>>,
    initial: Spanned<String>,
    step: Vec<Spanned<(String, String, String)>>,
    obs: Vec<Spanned<(String, String, toml::Value)>>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn at(&self, offset: usize) -> usize {
        let end = offset.min(self.0.len());
        self.0.as_bytes()[..end]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    }

    fn anchor<T>(&self, offset: usize, r: Result<T, ModelError>) -> Result<T, LoadError> {
        r.map_err(|source| LoadError::Model {
            line: self.at(offset),
            source,
        })
    }
}

fn syntax_error(text: &str, err: toml::de::Error) -> LoadError {
    let line = err.span().map(|s| Lines(text).at(s.start)).unwrap_or(1);
    LoadError::Syntax {
        line,
        message: err.message().to_string(),
    }
}

fn build_signature(
    lines: &Lines<'_>,
    users: &[Spanned<String>],
    actions: &[Spanned<RawAction>],
) -> Result<Signature, LoadError> {
    // Build incrementally so each failure points at the offending entry.
    let mut seen_users = Vec::new();
    for u in users {
        if seen_users.contains(u.get_ref()) {
            return Err(LoadError::Model {
                line: lines.at(u.span().start),
                source: ModelError::DuplicateUser(u.get_ref().clone()),
            });
        }
        seen_users.push(u.get_ref().clone());
    }
    let mut decls = Vec::new();
    for a in actions {
        let raw = a.get_ref();
        decls.push(ActionDecl::new(&raw.name, &raw.dom, &raw.part));
        lines.anchor(
            a.span().start,
            Signature::new(seen_users.clone(), decls.clone()),
        )?;
    }
    Ok(Signature::new(seen_users, decls)?)
}

/// Parses a signature file (the `users` and `actions` keys; other keys are
/// ignored, so a machine file also works).
pub fn parse_signature(text: &str) -> Result<Signature, LoadError> {
    let raw: RawSignature = toml::from_str(text).map_err(|e| syntax_error(text, e))?;
    build_signature(&Lines(text), &raw.users, &raw.actions)
}

fn output_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses and validates a machine file. Unreachable states are pruned and
/// reported in [`Built::warnings`].
pub fn parse_machine(text: &str) -> Result<Built, LoadError> {
    let raw: RawMachine = toml::from_str(text).map_err(|e| syntax_error(text, e))?;
    let lines = Lines(text);
    let sig = build_signature(&lines, &raw.users, &raw.actions)?;

    let mut state_index: HashMap<&str, usize> = HashMap::new();
    for s in &raw.states {
        if state_index.insert(s.get_ref(), state_index.len()).is_some() {
            return Err(LoadError::Model {
                line: lines.at(s.span().start),
                source: ModelError::DuplicateState(s.get_ref().clone()),
            });
        }
    }
    if raw.states.is_empty() {
        return Err(ModelError::NoStates.into());
    }
    let lookup_state = |name: &str, offset: usize| -> Result<usize, LoadError> {
        state_index
            .get(name)
            .copied()
            .ok_or_else(|| LoadError::Model {
                line: lines.at(offset),
                source: ModelError::UnknownState(name.to_string()),
            })
    };
    let initial = lookup_state(raw.initial.get_ref(), raw.initial.span().start)?;

    let ns = raw.states.len();
    let na = sig.num_actions();
    let mut step: Vec<Option<StateId>> = vec![None; ns * na];
    for entry in &raw.step {
        let at = entry.span().start;
        let (from, action, to) = entry.get_ref();
        let s = lookup_state(from, at)?;
        let t = lookup_state(to, at)?;
        let a = lines.anchor(
            at,
            sig.action(action)
                .ok_or_else(|| ModelError::UnknownAction(action.clone())),
        )?;
        let slot = &mut step[s * na + a.index()];
        if slot.is_some() {
            return Err(LoadError::Model {
                line: lines.at(at),
                source: ModelError::DuplicateStep {
                    state: from.clone(),
                    action: action.clone(),
                },
            });
        }
        *slot = Some(StateId::from_index(t));
    }
    let step_line = raw
        .step
        .first()
        .map(|e| lines.at(e.span().start))
        .unwrap_or(1);
    let mut step_table = Vec::with_capacity(ns * na);
    for (i, t) in step.iter().enumerate() {
        match t {
            Some(t) => step_table.push(*t),
            None => {
                return Err(LoadError::Model {
                    line: step_line,
                    source: ModelError::MissingStep {
                        state: raw.states[i / na].get_ref().clone(),
                        action: sig
                            .action_name(crate::ActionId::from_index(i % na))
                            .to_string(),
                    },
                })
            }
        }
    }

    let nu = sig.num_users();
    let mut obs: Vec<Option<String>> = vec![None; nu * ns];
    for entry in &raw.obs {
        let at = entry.span().start;
        let (user, state, value) = entry.get_ref();
        let u = lines.anchor(
            at,
            sig.user(user)
                .ok_or_else(|| ModelError::UnknownUser(user.clone())),
        )?;
        let s = lookup_state(state, at)?;
        let slot = &mut obs[u.index() * ns + s];
        if slot.is_some() {
            return Err(LoadError::Model {
                line: lines.at(at),
                source: ModelError::DuplicateObs {
                    user: user.clone(),
                    state: state.clone(),
                },
            });
        }
        *slot = Some(output_text(value));
    }
    let obs_line = raw
        .obs
        .first()
        .map(|e| lines.at(e.span().start))
        .unwrap_or(1);
    let mut rows = Vec::with_capacity(nu);
    for u in 0..nu {
        let mut row = Vec::with_capacity(ns);
        for s in 0..ns {
            match obs[u * ns + s].take() {
                Some(v) => row.push(v),
                None => {
                    return Err(LoadError::Model {
                        line: obs_line,
                        source: ModelError::MissingObs {
                            user: sig.user_name(crate::UserId::from_index(u)).to_string(),
                            state: raw.states[s].get_ref().clone(),
                        },
                    })
                }
            }
        }
        rows.push(row);
    }
    let names = raw.states.iter().map(|s| s.get_ref().clone()).collect();
    Ok(Machine::from_tables(
        sig,
        names,
        StateId::from_index(initial),
        step_table,
        rows,
    )?)
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn write_signature(out: &mut String, sig: &Signature) {
    let users = sig
        .users()
        .map(|u| quote(sig.user_name(u)))
        .collect::<Vec<_>>();
    let _ = writeln!(out, "users = [{}]", users.join(", "));
    let _ = writeln!(out, "actions = [");
    for d in sig.action_decls() {
        let _ = writeln!(
            out,
            "  {{ name = {}, dom = {}, part = {} }},",
            quote(&d.name),
            quote(&d.dom),
            quote(&d.part)
        );
    }
    let _ = writeln!(out, "]");
}

/// Renders a signature file.
pub fn signature_to_toml(sig: &Signature) -> String {
    let mut out = String::new();
    write_signature(&mut out, sig);
    out
}

/// Renders a machine in the file format accepted by [`parse_machine`].
pub fn machine_to_toml(m: &Machine) -> String {
    let sig = m.signature();
    let mut out = String::new();
    write_signature(&mut out, sig);
    let states = m
        .states()
        .map(|s| quote(m.state_name(s)))
        .collect::<Vec<_>>();
    let _ = writeln!(out, "states = [{}]", states.join(", "));
    let _ = writeln!(out, "initial = {}", quote(m.state_name(m.initial())));
    let _ = writeln!(out, "step = [");
    for s in m.states() {
        for a in sig.actions() {
            let _ = writeln!(
                out,
                "  [{}, {}, {}],",
                quote(m.state_name(s)),
                quote(sig.action_name(a)),
                quote(m.state_name(m.step(s, a)))
            );
        }
    }
    let _ = writeln!(out, "]");
    let _ = writeln!(out, "obs = [");
    for u in sig.users() {
        for s in m.states() {
            let _ = writeln!(
                out,
                "  [{}, {}, {}],",
                quote(sig.user_name(u)),
                quote(m.state_name(s)),
                quote(m.output_name(m.obs(u, s)))
            );
        }
    }
    let _ = writeln!(out, "]");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOGGLE: &str = r#"
users = ["u", "v"]
actions = [
  { name = "a", dom = "u", part = "Au" },
  { name = "b", dom = "v", part = "Av" },
]
states = ["s0", "s1", "lost"]
initial = "s0"
step = [
  ["s0", "a", "s1"], ["s0", "b", "s0"],
  ["s1", "a", "s0"], ["s1", "b", "s1"],
  ["lost", "a", "lost"], ["lost", "b", "lost"],
]
obs = [
  ["u", "s0", 0], ["u", "s1", 1], ["u", "lost", 2],
  ["v", "s0", "x"], ["v", "s1", "x"], ["v", "lost", "x"],
]
"#;

    #[test]
    fn loads_and_prunes() {
        let built = parse_machine(TOGGLE).unwrap();
        assert_eq!(built.machine.num_states(), 2);
        assert_eq!(built.warnings.len(), 1);
        let m = &built.machine;
        let s1 = m.state("s1").unwrap();
        let u = m.signature().user("u").unwrap();
        assert_eq!(m.output_name(m.obs(u, s1)), "1");
    }

    #[test]
    fn roundtrip_through_writer() {
        let m = parse_machine(TOGGLE).unwrap().machine;
        let again = parse_machine(&machine_to_toml(&m)).unwrap();
        assert!(again.warnings.is_empty());
        assert_eq!(again.machine, m);
    }

    #[test]
    fn missing_step_is_reported_with_line() {
        let text = TOGGLE.replace(r#"["s1", "b", "s1"],"#, "");
        let err = parse_machine(&text).unwrap_err();
        assert!(matches!(
            err,
            LoadError::Model {
                source: ModelError::MissingStep { .. },
                ..
            }
        ));
        assert!(err.line().is_some());
    }

    #[test]
    fn duplicate_step_points_at_entry() {
        let text = TOGGLE.replace(
            r#"["s0", "b", "s0"],"#,
            "[\"s0\", \"b\", \"s0\"],\n  [\"s0\", \"b\", \"s1\"],",
        );
        let err = parse_machine(&text).unwrap_err();
        assert_eq!(err.line(), Some(11));
        assert!(err.to_string().contains("duplicate transition"));
    }

    #[test]
    fn partition_violation_is_anchored() {
        let text = TOGGLE.replace(r#"part = "Av""#, r#"part = "Au""#);
        let err = parse_machine(&text).unwrap_err();
        assert_eq!(err.line(), Some(5));
        assert!(matches!(
            err,
            LoadError::Model {
                source: ModelError::PartitionSpansUsers { .. },
                ..
            }
        ));
    }

    #[test]
    fn duplicate_obs_and_unknown_state() {
        let text = TOGGLE.replace(r#"["v", "s1", "x"]"#, r#"["v", "s0", "y"]"#);
        assert!(matches!(
            parse_machine(&text).unwrap_err(),
            LoadError::Model {
                source: ModelError::DuplicateObs { .. },
                ..
            }
        ));
        let text = TOGGLE.replace(r#"initial = "s0""#, r#"initial = "nowhere""#);
        assert!(matches!(
            parse_machine(&text).unwrap_err(),
            LoadError::Model {
                source: ModelError::UnknownState(_),
                ..
            }
        ));
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_machine("users = [\"u\"\nactions = ").unwrap_err();
        assert!(matches!(err, LoadError::Syntax { .. }));
    }

    #[test]
    fn signature_file_accepts_machine_file() {
        let sig = parse_signature(TOGGLE).unwrap();
        assert_eq!(sig.num_actions(), 2);
        assert_eq!(parse_signature(&signature_to_toml(&sig)).unwrap(), sig);
    }
}
