use std::collections::{BTreeSet, HashMap};

use crate::model::Signature;
use crate::policy::{Assertion, Channel, ChannelKind, Condition, PartSet, PreRegex, Token};

use super::{AutomataError, Dfa};

/// Regular expressions over action sets, the common target of all the
/// surface languages.
#[derive(Debug, Clone)]
enum Rx {
    Empty,
    Set(Vec<bool>),
    Union(Vec<Rx>),
    Concat(Vec<Rx>),
    Star(Box<Rx>),
}

fn set_of(c: &PartSet, sig: &Signature) -> Vec<bool> {
    let mut out = vec![false; sig.num_actions()];
    for &p in c {
        for &a in sig.part_actions(p) {
            out[a.index()] = true;
        }
    }
    out
}

fn all(sig: &Signature) -> Rx {
    Rx::Star(Box::new(Rx::Set(vec![true; sig.num_actions()])))
}

fn from_regex(r: &PreRegex, sig: &Signature) -> Rx {
    match r {
        PreRegex::Empty => Rx::Empty,
        PreRegex::Lit(p) => Rx::Set(set_of(&PartSet::from([*p]), sig)),
        PreRegex::Union(l, r) => Rx::Union(vec![from_regex(l, sig), from_regex(r, sig)]),
        PreRegex::Concat(l, r) => Rx::Concat(vec![from_regex(l, sig), from_regex(r, sig)]),
        PreRegex::Star(i) => Rx::Star(Box::new(from_regex(i, sig))),
    }
}

/// `[[ch]]`: gaps become `A*`.
fn from_channel(tokens: &[Token], sig: &Signature) -> Rx {
    let mut seq = Vec::new();
    for t in tokens {
        match t {
            Token::Set(c) => seq.push(Rx::Set(set_of(c, sig))),
            Token::Gap => seq.push(all(sig)),
            Token::GapSet(c) => {
                seq.push(all(sig));
                seq.push(Rx::Set(set_of(c, sig)));
            }
        }
    }
    Rx::Concat(seq)
}

/// The leftmost reading `[λ]`: `[ε] = A*`, `[Cλ] = C[λ]`,
/// `[<>Cλ] = (A\C)* C [λ]`.
fn from_leftmost(tokens: &[Token], sig: &Signature) -> Rx {
    let mut seq = Vec::new();
    for t in tokens {
        match t {
            Token::Set(c) => seq.push(Rx::Set(set_of(c, sig))),
            Token::GapSet(c) => {
                let inside = set_of(c, sig);
                let outside = inside.iter().map(|b| !b).collect();
                seq.push(Rx::Star(Box::new(Rx::Set(outside))));
                seq.push(Rx::Set(inside));
            }
            Token::Gap => seq.push(all(sig)),
        }
    }
    seq.push(all(sig));
    Rx::Concat(seq)
}

#[derive(Default)]
struct Nfa {
    eps: Vec<Vec<usize>>,
    edges: Vec<Vec<(usize, usize)>>,
    labels: Vec<Vec<bool>>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        self.eps.len() - 1
    }

    /// Thompson fragment; returns (entry, exit).
    fn build(&mut self, r: &Rx) -> (usize, usize) {
        let s = self.state();
        let e = self.state();
        match r {
            Rx::Empty => {}
            Rx::Set(label) => {
                self.labels.push(label.clone());
                let l = self.labels.len() - 1;
                self.edges[s].push((l, e));
            }
            Rx::Union(alts) => {
                for alt in alts {
                    let (a, b) = self.build(alt);
                    self.eps[s].push(a);
                    self.eps[b].push(e);
                }
            }
            Rx::Concat(seq) => {
                let mut cur = s;
                for part in seq {
                    let (a, b) = self.build(part);
                    self.eps[cur].push(a);
                    cur = b;
                }
                self.eps[cur].push(e);
            }
            Rx::Star(inner) => {
                let (a, b) = self.build(inner);
                self.eps[s].push(a);
                self.eps[s].push(e);
                self.eps[b].push(a);
                self.eps[b].push(e);
            }
        }
        (s, e)
    }

    fn closure(&self, set: &mut BTreeSet<usize>) {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(q) = stack.pop() {
            for &t in &self.eps[q] {
                if set.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
}

fn determinize(r: &Rx, num_actions: usize) -> Dfa {
    let mut nfa = Nfa::default();
    let (start, accept) = nfa.build(r);
    let mut init = BTreeSet::from([start]);
    nfa.closure(&mut init);
    let mut index: HashMap<BTreeSet<usize>, u32> = HashMap::new();
    let mut subsets = vec![init.clone()];
    index.insert(init, 0);
    let mut delta = Vec::new();
    let mut i = 0;
    while i < subsets.len() {
        for a in 0..num_actions {
            let mut next = BTreeSet::new();
            for &q in &subsets[i] {
                for &(l, t) in &nfa.edges[q] {
                    if nfa.labels[l][a] {
                        next.insert(t);
                    }
                }
            }
            nfa.closure(&mut next);
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    subsets.push(next.clone());
                    index.insert(next, (subsets.len() - 1) as u32);
                    (subsets.len() - 1) as u32
                }
            };
            delta.push(id);
        }
        i += 1;
    }
    let finals = subsets.iter().map(|s| s.contains(&accept)).collect();
    Dfa::new(num_actions, delta, finals, 0).expect("subset construction yields a complete table")
}

/// Complete DFA for `L(phi)` with literals expanded to their action sets.
pub fn regex_to_dfa(phi: &PreRegex, sig: &Signature) -> Dfa {
    determinize(&from_regex(phi, sig), sig.num_actions())
}

/// Pre channels compile to `A*·[[chs]]`, post channels to `[[chs]]·A*`.
pub fn channel_to_dfa(
    chs: &[Channel],
    kind: ChannelKind,
    sig: &Signature,
) -> Result<Dfa, AutomataError> {
    if chs.iter().any(|c| c.kind() != kind) {
        return Err(AutomataError::KindMismatch);
    }
    let union = Rx::Union(chs.iter().map(|c| from_channel(c.tokens(), sig)).collect());
    let rx = match kind {
        ChannelKind::Pre => Rx::Concat(vec![all(sig), union]),
        ChannelKind::Post => Rx::Concat(vec![union, all(sig)]),
    };
    Ok(determinize(&rx, sig.num_actions()))
}

/// DFA for `∪ [λ]` over token suffixes under the leftmost reading; the empty
/// suffix denotes `A*`.
pub fn leftmost_post_dfa(suffixes: &[&[Token]], sig: &Signature) -> Dfa {
    let rx = Rx::Union(suffixes.iter().map(|t| from_leftmost(t, sig)).collect());
    determinize(&rx, sig.num_actions())
}

/// The automaton deciding, from the history alone, whether an action
/// controlled by `assertion` is purged. `None` for post conditions.
pub fn condition_dfa(assertion: &Assertion, sig: &Signature) -> Option<Dfa> {
    let na = sig.num_actions();
    match &assertion.condition {
        Condition::Strict => Some(Dfa::universal(na)),
        Condition::PreUpgrade(chs) => Some(
            channel_to_dfa(chs, ChannelKind::Pre, sig)
                .expect("assertion channels are pre channels"),
        ),
        Condition::PreDowngrade(chs) => Some(
            channel_to_dfa(chs, ChannelKind::Pre, sig)
                .expect("assertion channels are pre channels")
                .complement(),
        ),
        Condition::PreRegex(r) => Some(regex_to_dfa(r, sig)),
        Condition::PreLanguage(d) => Some(d.clone()),
        Condition::Post(_) => None,
    }
}
