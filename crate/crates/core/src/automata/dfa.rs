use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::model::{ActionId, Signature};

use super::AutomataError;

/// A complete deterministic automaton over the action alphabet.
///
/// States are dense indices; `delta` is indexed `state * num_actions + action`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    num_actions: usize,
    delta: Vec<u32>,
    finals: Vec<bool>,
    initial: u32,
}

/// Result of a language inclusion query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inclusion {
    pub included: bool,
    /// A shortest (then lexicographically least) word in `L(d1) \ L(d2)`.
    pub witness: Option<Vec<ActionId>>,
}

impl Dfa {
    pub fn new(
        num_actions: usize,
        delta: Vec<u32>,
        finals: Vec<bool>,
        initial: u32,
    ) -> Result<Self, AutomataError> {
        let n = finals.len();
        if n == 0 || initial as usize >= n {
            return Err(AutomataError::Malformed(
                "initial state out of range".into(),
            ));
        }
        if delta.len() != n * num_actions {
            return Err(AutomataError::Malformed(
                "transition table is not total".into(),
            ));
        }
        if delta.iter().any(|&t| t as usize >= n) {
            return Err(AutomataError::Malformed(
                "transition target out of range".into(),
            ));
        }
        Ok(Dfa {
            num_actions,
            delta,
            finals,
            initial,
        })
    }

    /// Accepts every word.
    pub fn universal(num_actions: usize) -> Dfa {
        Dfa {
            num_actions,
            delta: vec![0; num_actions],
            finals: vec![true],
            initial: 0,
        }
    }

    /// Accepts nothing.
    pub fn empty(num_actions: usize) -> Dfa {
        Dfa {
            num_actions,
            delta: vec![0; num_actions],
            finals: vec![false],
            initial: 0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    #[inline]
    pub fn next(&self, q: u32, a: ActionId) -> u32 {
        self.delta[q as usize * self.num_actions + a.index()]
    }

    #[inline]
    pub fn is_final(&self, q: u32) -> bool {
        self.finals[q as usize]
    }

    pub fn run(&self, word: &[ActionId]) -> u32 {
        word.iter().fold(self.initial, |q, &a| self.next(q, a))
    }

    pub fn accepts(&self, word: &[ActionId]) -> bool {
        self.is_final(self.run(word))
    }

    pub fn complement(&self) -> Dfa {
        Dfa {
            finals: self.finals.iter().map(|f| !f).collect(),
            ..self.clone()
        }
    }

    fn check_alphabet(&self, other: &Dfa) -> Result<(), AutomataError> {
        if self.num_actions != other.num_actions {
            return Err(AutomataError::AlphabetMismatch {
                left: self.num_actions,
                right: other.num_actions,
            });
        }
        Ok(())
    }

    /// Reachable product with acceptance `combine(f1, f2)`.
    pub fn product(
        &self,
        other: &Dfa,
        combine: impl Fn(bool, bool) -> bool,
    ) -> Result<Dfa, AutomataError> {
        self.check_alphabet(other)?;
        let na = self.num_actions;
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut pairs = vec![(self.initial, other.initial)];
        index.insert(pairs[0], 0);
        let mut delta = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (p, q) = pairs[i];
            for a in 0..na {
                let a = ActionId::from_index(a);
                let t = (self.next(p, a), other.next(q, a));
                let id = *index.entry(t).or_insert_with(|| {
                    pairs.push(t);
                    (pairs.len() - 1) as u32
                });
                delta.push(id);
            }
            i += 1;
        }
        let finals = pairs
            .iter()
            .map(|&(p, q)| combine(self.is_final(p), other.is_final(q)))
            .collect();
        Ok(Dfa {
            num_actions: na,
            delta,
            finals,
            initial: 0,
        })
    }

    /// Shortest, lexicographically least accepted word.
    pub fn shortest_accepted(&self) -> Option<Vec<ActionId>> {
        let n = self.num_states();
        let mut parent: Vec<Option<(u32, ActionId)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[self.initial as usize] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            if self.is_final(q) {
                let mut word = Vec::new();
                let mut cur = q;
                while let Some((p, a)) = parent[cur as usize] {
                    word.push(a);
                    cur = p;
                }
                word.reverse();
                return Some(word);
            }
            for a in 0..self.num_actions {
                let a = ActionId::from_index(a);
                let t = self.next(q, a);
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    parent[t as usize] = Some((q, a));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_accepted().is_none()
    }

    /// Decides `L(self) ⊆ L(other)`, with a shortest counterexample.
    pub fn included_in(&self, other: &Dfa) -> Result<Inclusion, AutomataError> {
        let diff = self.product(other, |a, b| a && !b)?;
        let witness = diff.shortest_accepted();
        Ok(Inclusion {
            included: witness.is_none(),
            witness,
        })
    }

    pub fn equivalent(&self, other: &Dfa) -> Result<bool, AutomataError> {
        Ok(self.included_in(other)?.included && other.included_in(self)?.included)
    }

    /// Moore-style minimization of the reachable part.
    pub fn minimize(&self) -> Dfa {
        let na = self.num_actions;
        // Restrict to reachable states first.
        let mut order = vec![self.initial];
        let mut remap = vec![u32::MAX; self.num_states()];
        remap[self.initial as usize] = 0;
        let mut i = 0;
        while i < order.len() {
            let q = order[i];
            for a in 0..na {
                let t = self.delta[q as usize * na + a];
                if remap[t as usize] == u32::MAX {
                    remap[t as usize] = order.len() as u32;
                    order.push(t);
                }
            }
            i += 1;
        }
        let n = order.len();
        let mut class: Vec<u32> = order
            .iter()
            .map(|&q| self.finals[q as usize] as u32)
            .collect();
        loop {
            let mut sigs: HashMap<Vec<u32>, u32> = HashMap::new();
            let mut next = Vec::with_capacity(n);
            for (k, &q) in order.iter().enumerate() {
                let mut sig = Vec::with_capacity(na + 1);
                sig.push(class[k]);
                for a in 0..na {
                    let t = self.delta[q as usize * na + a];
                    sig.push(class[remap[t as usize] as usize]);
                }
                let len = sigs.len() as u32;
                next.push(*sigs.entry(sig).or_insert(len));
            }
            let stable = sigs.len() == class.iter().collect::<std::collections::HashSet<_>>().len();
            class = next;
            if stable {
                break;
            }
        }
        let m = class.iter().map(|&c| c as usize + 1).max().unwrap_or(1);
        let mut delta = vec![0; m * na];
        let mut finals = vec![false; m];
        for (k, &q) in order.iter().enumerate() {
            let c = class[k] as usize;
            finals[c] = self.finals[q as usize];
            for a in 0..na {
                let t = self.delta[q as usize * na + a];
                delta[c * na + a] = class[remap[t as usize] as usize];
            }
        }
        Dfa {
            num_actions: na,
            delta,
            finals,
            initial: class[0],
        }
    }

    /// One edge per line: `q -a-> q'`, finals marked with `*`, initial with `>`.
    pub fn to_graph_text(&self, sig: &Signature) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# dfa states={} initial=q{}",
            self.num_states(),
            self.initial
        );
        for q in 0..self.num_states() as u32 {
            if self.is_final(q) {
                let _ = writeln!(out, "final q{q}");
            }
        }
        for q in 0..self.num_states() as u32 {
            for a in sig.actions() {
                let _ = writeln!(out, "q{q} -{}-> q{}", sig.action_name(a), self.next(q, a));
            }
        }
        out
    }
}

/// Decides `L(d1) ⊆ L(d2)`.
pub fn dfa_included(d1: &Dfa, d2: &Dfa) -> Result<Inclusion, AutomataError> {
    d1.included_in(d2)
}
