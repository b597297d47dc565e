//! Conditional noninterference policies.
//!
//! A policy is a set of assertions `P ̸⇝ u [[cond]]`: actions of partition
//! block `P` must not affect user `u` whenever `cond` holds. Conditions are
//! strict, pre-conditional (reading the history before the action) or
//! post-conditional (reading the actions that follow it).

mod eval;
mod order;
mod parse;
mod print;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automata::Dfa;
use crate::model::{PartId, Signature, UserId};

pub use eval::{
    eval_condition, matches_channel, post_language_contains, pre_language_contains, regex_matches,
};
pub use order::{
    assertion_leq, compare_assertions, compare_conditions, condition_leq, general_pre_dfa,
    to_general_pre, AssertionOrder, Inclusion,
};
pub use parse::parse_policy;

/// A nonempty set of partition blocks, read as the union of their actions.
pub type PartSet = BTreeSet<PartId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Pre,
    Post,
}

/// One element of a channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    /// Exactly one action from the set.
    Set(PartSet),
    /// Any sequence of actions (pre channels only).
    Gap,
    /// Any sequence followed by one action from the set (post channels only).
    GapSet(PartSet),
}

/// A channel: a sequence of tokens whose shape depends on the kind.
///
/// Pre channels start with a set, and a gap may only follow a set. Post
/// channels consist of sets and gap-prefixed sets only.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    kind: ChannelKind,
    tokens: Vec<Token>,
}

impl Channel {
    pub fn new(kind: ChannelKind, tokens: Vec<Token>) -> Result<Self, PolicyError> {
        validate_channel(kind, &tokens)?;
        Ok(Channel { kind, tokens })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Every partition block the channel mentions.
    pub fn parts(&self) -> PartSet {
        self.tokens
            .iter()
            .flat_map(|t| match t {
                Token::Set(c) | Token::GapSet(c) => c.iter().copied().collect::<Vec<_>>(),
                Token::Gap => Vec::new(),
            })
            .collect()
    }
}

fn validate_channel(kind: ChannelKind, tokens: &[Token]) -> Result<(), PolicyError> {
    if tokens.is_empty() {
        return Err(PolicyError::ChannelShape("empty channel".into()));
    }
    for t in tokens {
        if let Token::Set(c) | Token::GapSet(c) = t {
            if c.is_empty() {
                return Err(PolicyError::ChannelShape("empty partition set".into()));
            }
        }
    }
    match kind {
        ChannelKind::Pre => {
            if !matches!(tokens[0], Token::Set(_)) {
                return Err(PolicyError::ChannelShape(
                    "a pre channel must start with a partition set".into(),
                ));
            }
            for w in tokens.windows(2) {
                if matches!(w, [Token::Gap, Token::Gap]) {
                    return Err(PolicyError::ChannelShape(
                        "two adjacent gaps in a pre channel".into(),
                    ));
                }
            }
            if tokens.iter().any(|t| matches!(t, Token::GapSet(_))) {
                return Err(PolicyError::ChannelShape(
                    "`<>` must follow a partition set in a pre channel".into(),
                ));
            }
        }
        ChannelKind::Post => {
            if tokens.iter().any(|t| matches!(t, Token::Gap)) {
                return Err(PolicyError::ChannelShape(
                    "`<>` must precede a partition set in a post channel".into(),
                ));
            }
        }
    }
    Ok(())
}

/// A regular expression over partition blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PreRegex {
    Empty,
    Lit(PartId),
    Union(Box<PreRegex>, Box<PreRegex>),
    Concat(Box<PreRegex>, Box<PreRegex>),
    Star(Box<PreRegex>),
}

impl PreRegex {
    pub fn union(l: PreRegex, r: PreRegex) -> PreRegex {
        PreRegex::Union(Box::new(l), Box::new(r))
    }

    pub fn concat(l: PreRegex, r: PreRegex) -> PreRegex {
        PreRegex::Concat(Box::new(l), Box::new(r))
    }

    pub fn star(inner: PreRegex) -> PreRegex {
        PreRegex::Star(Box::new(inner))
    }

    /// Union of the given blocks; `Empty` when there are none.
    pub fn any_of(parts: impl IntoIterator<Item = PartId>) -> PreRegex {
        parts
            .into_iter()
            .map(PreRegex::Lit)
            .reduce(PreRegex::union)
            .unwrap_or(PreRegex::Empty)
    }

    /// `A*` over the signature.
    pub fn everything(sig: &Signature) -> PreRegex {
        PreRegex::star(PreRegex::any_of(sig.parts()))
    }

    /// The "switch" expression `(A\Q)* (Q (A\Q)* Q (A\Q)*)*`: words with an
    /// even number of actions from `q`.
    pub fn switch(sig: &Signature, q: &PartSet) -> PreRegex {
        let rest = PreRegex::star(PreRegex::any_of(sig.parts().filter(|p| !q.contains(p))));
        let qs = PreRegex::any_of(q.iter().copied());
        let pair = PreRegex::concat(
            PreRegex::concat(PreRegex::concat(qs.clone(), rest.clone()), qs),
            rest.clone(),
        );
        PreRegex::concat(rest, PreRegex::star(pair))
    }

    pub fn lits(&self) -> PartSet {
        let mut out = PartSet::new();
        self.collect_lits(&mut out);
        out
    }

    fn collect_lits(&self, out: &mut PartSet) {
        match self {
            PreRegex::Empty => {}
            PreRegex::Lit(p) => {
                out.insert(*p);
            }
            PreRegex::Union(l, r) | PreRegex::Concat(l, r) => {
                l.collect_lits(out);
                r.collect_lits(out);
            }
            PreRegex::Star(i) => i.collect_lits(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Strict,
    /// Purge when the history ends with a match of one of the channels.
    PreUpgrade(Vec<Channel>),
    /// Purge unless the history ends with a match of one of the channels.
    PreDowngrade(Vec<Channel>),
    /// Purge when the history is in the language of the expression.
    PreRegex(PreRegex),
    /// Purge when the history is accepted by the automaton.
    PreLanguage(Dfa),
    /// Purge unless the future starts with a match of one of the channels.
    Post(Vec<Channel>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionClass {
    Strict,
    Pre,
    Post,
}

impl Condition {
    pub fn class(&self) -> ConditionClass {
        match self {
            Condition::Strict => ConditionClass::Strict,
            Condition::Post(_) => ConditionClass::Post,
            _ => ConditionClass::Pre,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub controlled: PartId,
    pub target: UserId,
    pub condition: Condition,
}

impl Assertion {
    pub fn new(
        controlled: PartId,
        target: UserId,
        condition: Condition,
    ) -> Result<Self, PolicyError> {
        let expected = match &condition {
            Condition::PreUpgrade(chs) | Condition::PreDowngrade(chs) => {
                Some((chs, ChannelKind::Pre))
            }
            Condition::Post(chs) => Some((chs, ChannelKind::Post)),
            _ => None,
        };
        if let Some((chs, kind)) = expected {
            if chs.is_empty() {
                return Err(PolicyError::ChannelShape("empty channel list".into()));
            }
            if chs.iter().any(|c| c.kind() != kind) {
                return Err(PolicyError::ChannelShape(
                    "channel kind does not match the condition".into(),
                ));
            }
        }
        Ok(Assertion {
            controlled,
            target,
            condition,
        })
    }

    pub fn strict(controlled: PartId, target: UserId) -> Self {
        Assertion {
            controlled,
            target,
            condition: Condition::Strict,
        }
    }

    pub fn class(&self) -> ConditionClass {
        self.condition.class()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: unknown partition `{name}`")]
    UnknownPartition {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: unknown user `{name}`")]
    UnknownUser {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: {message}")]
    Shape {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("duplicate assertion for partition `{part}` toward user `{user}`")]
    Duplicate { part: String, user: String },
    #[error("invalid channel: {0}")]
    ChannelShape(String),
    #[error("condition has no textual form (automaton-backed)")]
    Unprintable,
    #[error("operation needs a pre-conditional assertion, got a {0:?} one")]
    NotPre(ConditionClass),
    #[error("assertions control different partitions or target different users")]
    Mismatched,
    #[error("no assertion `{0}` in the policy")]
    NoSuchAssertion(String),
}

/// A simple policy: at most one assertion per (partition, user) pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Policy {
    assertions: Vec<Assertion>,
}

impl Policy {
    pub fn new(sig: &Signature, assertions: Vec<Assertion>) -> Result<Self, PolicyError> {
        let mut seen = BTreeSet::new();
        for t in &assertions {
            if !seen.insert((t.controlled, t.target)) {
                return Err(PolicyError::Duplicate {
                    part: sig.part_name(t.controlled).to_string(),
                    user: sig.user_name(t.target).to_string(),
                });
            }
        }
        Ok(Policy { assertions })
    }

    pub fn empty() -> Self {
        Policy::default()
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    /// The assertion controlling `p` toward `u`, if any.
    pub fn lookup(&self, p: PartId, u: UserId) -> Option<&Assertion> {
        self.assertions
            .iter()
            .find(|t| t.controlled == p && t.target == u)
    }

    /// The sub-policy associated with `u`.
    pub fn toward(&self, u: UserId) -> impl Iterator<Item = &Assertion> + '_ {
        self.assertions.iter().filter(move |t| t.target == u)
    }

    /// Condition classes present among the assertions toward `u`.
    pub fn classes_toward(&self, u: UserId) -> BTreeSet<ConditionClass> {
        self.toward(u).map(Assertion::class).collect()
    }

    pub fn classes(&self) -> BTreeSet<ConditionClass> {
        self.assertions.iter().map(Assertion::class).collect()
    }

    /// Keeps the assertions satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Assertion) -> bool) -> Policy {
        Policy {
            assertions: self
                .assertions
                .iter()
                .filter(|t| keep(t))
                .cloned()
                .collect(),
        }
    }

    /// Renders the policy in the DSL accepted by [`parse_policy`].
    pub fn to_dsl(&self, sig: &Signature) -> Result<String, PolicyError> {
        let mut out = String::new();
        for t in &self.assertions {
            out.push_str(&print::assertion_to_dsl(t, sig)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Finds an assertion by `PART->USER` label or by 1-based position.
    pub fn find(&self, sig: &Signature, label: &str) -> Result<&Assertion, PolicyError> {
        let missing = || PolicyError::NoSuchAssertion(label.to_string());
        if let Ok(n) = label.trim().parse::<usize>() {
            return n
                .checked_sub(1)
                .and_then(|i| self.assertions.get(i))
                .ok_or_else(missing);
        }
        let (p, u) = label.split_once("->").ok_or_else(missing)?;
        let p = sig.partition(p.trim()).ok_or_else(missing)?;
        let u = sig.user(u.trim()).ok_or_else(missing)?;
        self.lookup(p, u).ok_or_else(missing)
    }
}

pub use print::assertion_to_dsl;
