//! Families of relations indexed by sets of pending channel suffixes.
//!
//! For a user `u`, `Δ` is the set of token-level suffixes of the post
//! channels toward `u`. A set `δ ⊆ Δ` is a bitmask over `Δ`; the relation
//! for `δ` relates states that no future outside `∪_{λ∈δ} [λ]` can tell
//! apart. `[λ]` is the leftmost reading of a suffix: `[ε] = A*`,
//! `[Cλ] = C[λ]`, `[<>Cλ] = (A\C)*C[λ]`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::model::{ActionId, Machine, Signature, StateId, UserId};
use crate::policy::{Channel, Condition, ConditionClass, PartSet, Policy, Token};
use crate::verdict::{Method, Verdict, Witness};

use super::{obs_relation, witness, EquivRelation, UnwindingError};

pub const DEFAULT_SUFFIX_CAP: usize = 12;

/// A set of channel suffixes, kept sorted by (length, tokens).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SuffixSet {
    terms: Vec<Vec<Token>>,
}

impl SuffixSet {
    pub fn new(terms: impl IntoIterator<Item = Vec<Token>>) -> Self {
        let set: BTreeSet<(usize, Vec<Token>)> = terms.into_iter().map(|t| (t.len(), t)).collect();
        SuffixSet {
            terms: set.into_iter().map(|(_, t)| t).collect(),
        }
    }

    pub fn terms(&self) -> &[Vec<Token>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &[Token]) -> bool {
        self.position(term).is_some()
    }

    pub fn contains_empty(&self) -> bool {
        self.terms.first().is_some_and(Vec::is_empty)
    }

    fn position(&self, term: &[Token]) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Renders as `{λ1, λ2}` with `ε` for the empty suffix.
    pub fn to_dsl(&self, sig: &Signature) -> String {
        let parts: Vec<String> = self.terms.iter().map(|t| suffix_to_dsl(t, sig)).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

fn partset_to_dsl(c: &PartSet, sig: &Signature) -> String {
    if c.len() == 1 {
        sig.part_name(*c.iter().next().expect("nonempty"))
            .to_string()
    } else {
        let names: Vec<&str> = c.iter().map(|&p| sig.part_name(p)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

pub fn suffix_to_dsl(t: &[Token], sig: &Signature) -> String {
    if t.is_empty() {
        return "ε".into();
    }
    t.iter()
        .map(|tok| match tok {
            Token::Set(c) => partset_to_dsl(c, sig),
            Token::GapSet(c) => format!("<>{}", partset_to_dsl(c, sig)),
            Token::Gap => "<>".into(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `Δ_u`: every token suffix, `ε` included, of every post channel toward
/// `u`. Empty when there are none.
pub fn suffix_closure(policy: &Policy, u: UserId) -> SuffixSet {
    let mut terms = Vec::new();
    for t in policy.toward(u) {
        if let Condition::Post(chs) = &t.condition {
            for ch in chs {
                for i in 0..=ch.tokens().len() {
                    terms.push(ch.tokens()[i..].to_vec());
                }
            }
        }
    }
    SuffixSet::new(terms)
}

/// Consumes one action from the front of a suffix; `None` is the empty set.
pub fn cut(lambda: &[Token], a: ActionId, sig: &Signature) -> Option<Vec<Token>> {
    let p = sig.part(a);
    match lambda.split_first() {
        None => Some(Vec::new()),
        Some((Token::Set(c), rest)) => c.contains(&p).then(|| rest.to_vec()),
        Some((Token::GapSet(c), rest)) => Some(if c.contains(&p) {
            rest.to_vec()
        } else {
            lambda.to_vec()
        }),
        Some((Token::Gap, rest)) => {
            // Gaps only occur in pre channels; read `<>` as a gap that may
            // end anywhere, which keeps the function total.
            Some(if rest.is_empty() {
                Vec::new()
            } else {
                lambda.to_vec()
            })
        }
    }
}

/// `sc(δ, a) = ∪_{λ∈δ} cut(λ, a)`.
pub fn sc(delta: &SuffixSet, a: ActionId, sig: &Signature) -> SuffixSet {
    SuffixSet::new(delta.terms().iter().filter_map(|l| cut(l, a, sig)))
}

/// Whether the leftmost reading of the channel denotes the same language as
/// `[[ch]]·A*`: true unless a plain set follows a gap-prefixed set.
pub fn is_leftmost_exact(ch: &Channel) -> bool {
    let mut gapped = false;
    for t in ch.tokens() {
        match t {
            Token::GapSet(_) | Token::Gap => gapped = true,
            Token::Set(_) if gapped => return false,
            Token::Set(_) => {}
        }
    }
    true
}

/// Which index sets to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostScope {
    /// `∅`, the channel sets of the assertions, and everything reachable
    /// from them under `sc`.
    Lazy,
    /// Every subset of `Δ`.
    All,
}

/// Relations for a set of suffix sets of one user.
#[derive(Debug, Clone)]
pub struct PostFamily {
    user: UserId,
    delta: SuffixSet,
    /// `cut_table[λ][a]`: index of `cut(λ, a)` in `delta`.
    cut_table: Vec<Vec<Option<usize>>>,
    rels: BTreeMap<u64, EquivRelation>,
}

impl PostFamily {
    pub fn user(&self) -> UserId {
        self.user
    }

    /// `Δ_u`.
    pub fn delta(&self) -> &SuffixSet {
        &self.delta
    }

    pub fn mask_of(&self, set: &SuffixSet) -> Option<u64> {
        set.terms()
            .iter()
            .map(|t| self.delta.position(t).map(|i| 1u64 << i))
            .try_fold(0, |acc, b| b.map(|b| acc | b))
    }

    pub fn set_of(&self, mask: u64) -> SuffixSet {
        SuffixSet::new(
            (0..self.delta.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| self.delta.terms[i].clone()),
        )
    }

    pub fn sc_mask(&self, mask: u64, a: ActionId) -> u64 {
        (0..self.delta.len())
            .filter(|i| mask >> i & 1 == 1)
            .filter_map(|i| self.cut_table[i][a.index()])
            .fold(0, |acc, j| acc | 1 << j)
    }

    fn eps_in(&self, mask: u64) -> bool {
        self.delta.contains_empty() && mask & 1 == 1
    }

    /// The materialized index sets with their relations, by mask.
    pub fn relations(&self) -> impl Iterator<Item = (u64, &EquivRelation)> {
        self.rels.iter().map(|(&k, v)| (k, v))
    }

    pub fn rel_of(&self, set: &SuffixSet) -> Option<&EquivRelation> {
        self.rels.get(&self.mask_of(set)?)
    }

    pub fn rel_of_mask(&self, mask: u64) -> Option<&EquivRelation> {
        self.rels.get(&mask)
    }

    /// One line per class: `user δ {state,…}`.
    pub fn dump(&self, m: &Machine) -> String {
        let sig = m.signature();
        let mut out = String::new();
        for (&mask, rel) in &self.rels {
            let label = self.set_of(mask).to_dsl(sig);
            for class in rel.classes() {
                let names: Vec<&str> = class.iter().map(|&s| m.state_name(s)).collect();
                let _ = writeln!(
                    out,
                    "{} {} {{{}}}",
                    sig.user_name(self.user),
                    label,
                    names.join(",")
                );
            }
        }
        out
    }
}

fn channel_set(chs: &[Channel]) -> SuffixSet {
    SuffixSet::new(chs.iter().map(|c| c.tokens().to_vec()))
}

/// Computes the greatest family satisfying the observation rule, the
/// successor rule through `sc`, and (as a consequence) monotonicity in `δ`.
pub fn compute_post_family(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    scope: PostScope,
    cap: usize,
) -> Result<PostFamily, UnwindingError> {
    let sig = m.signature();
    if let Some(t) = policy.toward(u).find(|t| t.class() == ConditionClass::Pre) {
        return Err(UnwindingError::Unsupported {
            method: "post",
            reason: format!(
                "assertion {} -> {} is pre-conditional",
                sig.part_name(t.controlled),
                sig.user_name(u)
            ),
        });
    }
    let delta = suffix_closure(policy, u);
    let cap = cap.min(63);
    if delta.len() > cap || (scope == PostScope::All && delta.len() > 20) {
        return Err(UnwindingError::TooManySuffixes {
            user: sig.user_name(u).to_string(),
            found: delta.len(),
            cap,
        });
    }
    let cut_table = delta
        .terms()
        .iter()
        .map(|l| {
            sig.actions()
                .map(|a| cut(l, a, sig).map(|r| delta.position(&r).expect("cut yields a suffix")))
                .collect()
        })
        .collect();
    let mut family = PostFamily {
        user: u,
        delta,
        cut_table,
        rels: BTreeMap::new(),
    };

    let masks: Vec<u64> = match scope {
        PostScope::All => (0..1u64 << family.delta.len()).collect(),
        PostScope::Lazy => {
            let mut seen = BTreeSet::from([0u64]);
            for t in policy.toward(u) {
                if let Condition::Post(chs) = &t.condition {
                    seen.insert(
                        family
                            .mask_of(&channel_set(chs))
                            .expect("channels are in Δ"),
                    );
                }
            }
            let mut queue: VecDeque<u64> = seen.iter().copied().collect();
            while let Some(d) = queue.pop_front() {
                for a in sig.actions() {
                    let n = family.sc_mask(d, a);
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
            seen.into_iter().collect()
        }
    };

    let n = m.num_states();
    let obs = obs_relation(m, u);
    let mut rels: HashMap<u64, EquivRelation> = masks
        .iter()
        .map(|&d| {
            (
                d,
                if family.eps_in(d) {
                    EquivRelation::full(n)
                } else {
                    obs.clone()
                },
            )
        })
        .collect();
    let succ: HashMap<u64, Vec<u64>> = masks
        .iter()
        .map(|&d| (d, sig.actions().map(|a| family.sc_mask(d, a)).collect()))
        .collect();
    loop {
        let mut changed = false;
        for &d in &masks {
            if family.eps_in(d) {
                continue;
            }
            let targets = &succ[&d];
            let next = EquivRelation::from_keys(m.states().map(|s| {
                let mut key = Vec::with_capacity(targets.len() + 1);
                key.push(rels[&d].class_of(s));
                for (a, t) in sig.actions().zip(targets) {
                    key.push(rels[t].class_of(m.step(s, a)));
                }
                key
            }));
            if next.num_classes() != rels[&d].num_classes() {
                changed = true;
            }
            rels.insert(d, next);
        }
        if !changed {
            break;
        }
    }
    family.rels = rels.into_iter().collect();
    log::debug!(
        "post family for {}: |Δ| = {}, {} relations",
        sig.user_name(u),
        family.delta.len(),
        family.rels.len()
    );
    Ok(family)
}

/// Shortest `β` with `β ∉ ∪_{λ∈δ}[λ]` and `obs_u(s•β) ≠ obs_u(t•β)`.
fn distinguishing_suffix(
    m: &Machine,
    family: &PostFamily,
    s: StateId,
    t: StateId,
    mask: u64,
) -> Option<Vec<ActionId>> {
    let sig = m.signature();
    let u = family.user();
    let start = (s, t, mask);
    type Node = (StateId, StateId, u64);
    let mut parent: HashMap<Node, Option<(Node, ActionId)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some(node @ (x, y, d)) = queue.pop_front() {
        if family.eps_in(d) {
            continue;
        }
        if m.obs(u, x) != m.obs(u, y) {
            let mut word = Vec::new();
            let mut cur = node;
            while let Some(Some((p, a))) = parent.get(&cur) {
                word.push(*a);
                cur = *p;
            }
            word.reverse();
            return Some(word);
        }
        for a in sig.actions() {
            let next = (m.step(x, a), m.step(y, a), family.sc_mask(d, a));
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some((node, a)));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Checks strict and post-conditional assertions toward `u`.
///
/// Strict assertions need `s` related to its successor in the relation for
/// `∅`; post assertions need it in the relation for the assertion's channel
/// set. Success proves security. A failure proves insecurity for
/// right-consistent policies whose channels read the same under the leftmost
/// interpretation, signalled by `right_consistent`; otherwise UNKNOWN.
pub fn check_post(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    right_consistent: bool,
    cap: usize,
) -> Result<Verdict, UnwindingError> {
    let sig = m.signature();
    let family = compute_post_family(m, policy, u, PostScope::Lazy, cap)?;
    let mut failure = None;
    'outer: for s in m.states() {
        for a in sig.actions() {
            let Some(t) = policy.lookup(sig.part(a), u) else {
                continue;
            };
            let mask = match &t.condition {
                Condition::Post(chs) => family
                    .mask_of(&channel_set(chs))
                    .expect("channels are in Δ"),
                _ => 0,
            };
            let rel = family
                .rel_of_mask(mask)
                .expect("seed sets are materialized");
            if !rel.related(s, m.step(s, a)) {
                failure = Some((s, a, mask));
                break 'outer;
            }
        }
    }
    let Some((s, a, mask)) = failure else {
        return Ok(Verdict::secure(Method::UnwindingPost).with_note(format!(
            "|Δ| = {}, {} relations",
            family.delta().len(),
            family.rels.len()
        )));
    };
    let rule = if mask == 0 { "LR" } else { "LR≥" };
    let diagnostic = format!(
        "{rule} fails: `{}` and its `{}`-successor `{}` are unrelated under {}",
        m.state_name(s),
        sig.action_name(a),
        m.state_name(m.step(s, a)),
        family.set_of(mask).to_dsl(sig)
    );
    let exact = policy.toward(u).all(|t| match &t.condition {
        Condition::Post(chs) => chs.iter().all(is_leftmost_exact),
        _ => true,
    });
    if !right_consistent || !exact {
        let why = if !right_consistent {
            "rule failure does not imply insecurity for a policy not known to be right-consistent"
        } else {
            "rule failure does not imply insecurity when a channel has a plain set after a gap"
        };
        return Ok(Verdict::unknown(
            Method::UnwindingPost,
            format!("{why}; confirm with the oracle"),
        )
        .with_diagnostic(diagnostic));
    }
    let access = m.access_traces();
    let t = m.step(s, a);
    let mut candidates = Vec::new();
    if let Some(beta) = distinguishing_suffix(m, &family, s, t, mask) {
        let mut w = access[s.index()].clone();
        w.push(a);
        w.extend(&beta);
        candidates.push(w);
        let mut w = access[s.index()].clone();
        w.extend(&beta);
        candidates.push(w);
    }
    Ok(match witness::confirm_or_search(m, policy, u, candidates) {
        Some(trace) => Verdict::insecure(Method::UnwindingPost, Witness { user: u, trace })
            .with_diagnostic(diagnostic),
        None => Verdict::unknown(
            Method::UnwindingPost,
            "rule failure but no violating trace found by bounded search",
        )
        .with_diagnostic(diagnostic),
    })
}
