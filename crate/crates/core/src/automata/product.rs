use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{ActionId, Machine, OutputId, PartId, StateId, UserId};
use crate::policy::{ConditionClass, Policy};
use crate::verdict::{Method, Verdict, Witness};

use super::{condition_dfa, AutomataError, Dfa};

/// A state of the product: the purged run, the full run, and one automaton
/// state per assertion toward the user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composite {
    pub purged: StateId,
    pub full: StateId,
    pub automata: Vec<u32>,
}

/// The reachable part of the doubled machine for one user.
///
/// Composites are numbered in breadth-first discovery order with actions
/// tried in signature order, so the recorded parent pointers give shortest,
/// lexicographically least access words.
#[derive(Debug, Clone)]
pub struct ProductMachine {
    user: UserId,
    num_actions: usize,
    controls: Vec<PartId>,
    composites: Vec<Composite>,
    step: Vec<u32>,
    parent: Vec<Option<(u32, ActionId)>>,
    obs: Vec<(OutputId, OutputId)>,
}

impl ProductMachine {
    pub fn user(&self) -> UserId {
        self.user
    }

    pub fn num_states(&self) -> usize {
        self.composites.len()
    }

    pub fn composites(&self) -> &[Composite] {
        &self.composites
    }

    /// Partition controlled by each automaton component.
    pub fn controls(&self) -> &[PartId] {
        &self.controls
    }

    pub fn step(&self, c: usize, a: ActionId) -> usize {
        self.step[c * self.num_actions + a.index()] as usize
    }

    /// Composite reached by `alpha` from the initial composite.
    pub fn run(&self, alpha: &[ActionId]) -> &Composite {
        let c = alpha.iter().fold(0, |c, &a| self.step(c, a));
        &self.composites[c]
    }

    /// `(obs_u(purged), obs_u(full))`.
    pub fn obs(&self, c: usize) -> (OutputId, OutputId) {
        self.obs[c]
    }

    pub fn access_word(&self, c: usize) -> Vec<ActionId> {
        let mut word = Vec::new();
        let mut cur = c;
        while let Some((p, a)) = self.parent[cur] {
            word.push(a);
            cur = p as usize;
        }
        word.reverse();
        word
    }

    /// One edge per line, composites written `(purged,full|q...)`.
    pub fn to_graph_text(&self, m: &Machine) -> String {
        let sig = m.signature();
        let label = |c: &Composite| {
            let qs = c.automata.iter().map(|q| q.to_string()).collect::<Vec<_>>();
            format!(
                "({},{}|{})",
                m.state_name(c.purged),
                m.state_name(c.full),
                qs.join(",")
            )
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# product user={} composites={}",
            sig.user_name(self.user),
            self.num_states()
        );
        for (i, c) in self.composites.iter().enumerate() {
            let (o1, o2) = self.obs[i];
            let _ = writeln!(
                out,
                "obs {} {} {}",
                label(c),
                m.output_name(o1),
                m.output_name(o2)
            );
        }
        for (i, c) in self.composites.iter().enumerate() {
            for a in sig.actions() {
                let t = &self.composites[self.step(i, a)];
                let _ = writeln!(out, "{} -{}-> {}", label(c), sig.action_name(a), label(t));
            }
        }
        out
    }
}

/// Builds the reachable product for `u`. Strict assertions become the
/// one-state universal automaton.
pub fn build_product(
    m: &Machine,
    policy: &Policy,
    u: UserId,
) -> Result<ProductMachine, AutomataError> {
    let sig = m.signature();
    let mut controls = Vec::new();
    let mut dfas: Vec<Dfa> = Vec::new();
    for t in policy.toward(u) {
        if t.class() == ConditionClass::Post {
            return Err(AutomataError::Unsupported(format!(
                "post-conditional assertion {} -> {} cannot be reduced to safety",
                sig.part_name(t.controlled),
                sig.user_name(u)
            )));
        }
        controls.push(t.controlled);
        dfas.push(condition_dfa(t, sig).expect("non-post assertions have a history automaton"));
    }
    let na = sig.num_actions();
    let init = Composite {
        purged: m.initial(),
        full: m.initial(),
        automata: dfas.iter().map(Dfa::initial).collect(),
    };
    let mut index: HashMap<Composite, u32> = HashMap::new();
    index.insert(init.clone(), 0);
    let mut composites = vec![init];
    let mut parent = vec![None];
    let mut step = Vec::new();
    let mut i = 0;
    while i < composites.len() {
        let cur = composites[i].clone();
        for a in sig.actions() {
            let p = sig.part(a);
            let frozen = controls
                .iter()
                .zip(&dfas)
                .zip(&cur.automata)
                .any(|((&c, d), &q)| c == p && d.is_final(q));
            let next = Composite {
                purged: if frozen {
                    cur.purged
                } else {
                    m.step(cur.purged, a)
                },
                full: m.step(cur.full, a),
                automata: dfas
                    .iter()
                    .zip(&cur.automata)
                    .map(|(d, &q)| d.next(q, a))
                    .collect(),
            };
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = composites.len() as u32;
                    index.insert(next.clone(), id);
                    composites.push(next);
                    parent.push(Some((i as u32, a)));
                    id
                }
            };
            step.push(id);
        }
        i += 1;
    }
    let obs = composites
        .iter()
        .map(|c| (m.obs(u, c.purged), m.obs(u, c.full)))
        .collect();
    log::debug!(
        "product for user {} has {} composites",
        sig.user_name(u),
        composites.len()
    );
    Ok(ProductMachine {
        user: u,
        num_actions: na,
        controls,
        composites,
        step,
        parent,
        obs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyResult {
    pub secure: bool,
    /// Shortest, lexicographically least word reaching a composite whose two
    /// observations differ.
    pub witness: Option<Vec<ActionId>>,
    pub explored: usize,
}

/// Every reachable composite must have equal observations.
pub fn check_safety(product: &ProductMachine) -> SafetyResult {
    let bad = (0..product.num_states()).find(|&c| {
        let (o1, o2) = product.obs(c);
        o1 != o2
    });
    SafetyResult {
        secure: bad.is_none(),
        witness: bad.map(|c| product.access_word(c)),
        explored: product.num_states(),
    }
}

/// The safety reduction as a verdict for one user.
pub fn safety_verdict(m: &Machine, policy: &Policy, u: UserId) -> Result<Verdict, AutomataError> {
    let product = build_product(m, policy, u)?;
    let r = check_safety(&product);
    let note = format!("{} reachable composites", r.explored);
    Ok(match r.witness {
        Some(trace) => Verdict::insecure(Method::Safety, Witness { user: u, trace }),
        None => Verdict::secure(Method::Safety),
    }
    .with_note(note))
}
