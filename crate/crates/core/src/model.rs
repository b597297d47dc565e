//! Signatures and finite deterministic machines.
//!
//! Identifiers (users, actions, partitions, states, outputs) are strings at
//! the edges and dense integers everywhere else.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(i: usize) -> Self {
                Self(i as u32)
            }
        }
    };
}

dense_id!(
    /// A security domain.
    UserId
);
dense_id!(ActionId);
dense_id!(
    /// A block of the action partition.
    PartId
);
dense_id!(StateId);
dense_id!(
    /// An interned observation value.
    OutputId
);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate user `{0}`")]
    DuplicateUser(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("partition `{part}` mixes actions of users `{first}` and `{second}`")]
    PartitionSpansUsers {
        part: String,
        first: String,
        second: String,
    },
    #[error("step is not total: no transition for state `{state}` on action `{action}`")]
    MissingStep { state: String, action: String },
    #[error("duplicate transition for state `{state}` on action `{action}`")]
    DuplicateStep { state: String, action: String },
    #[error("obs is not total: no output for user `{user}` in state `{state}`")]
    MissingObs { user: String, state: String },
    #[error("duplicate output for user `{user}` in state `{state}`")]
    DuplicateObs { user: String, state: String },
    #[error("machine has no states")]
    NoStates,
    #[error("signature has no actions")]
    NoActions,
    #[error("table size mismatch: {0}")]
    TableShape(String),
}

/// Declaration of one action: its name, owning user and partition block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: String,
    pub dom: String,
    pub part: String,
}

impl ActionDecl {
    pub fn new(name: impl Into<String>, dom: impl Into<String>, part: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            dom: dom.into(),
            part: part.into(),
        }
    }
}

/// Users, actions, and the `dom`/`part` maps.
///
/// Partitions are numbered in order of first appearance in the action list,
/// so every partition is nonempty and the blocks cover all actions. The
/// constructor rejects any block that mixes two users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    users: Vec<String>,
    actions: Vec<String>,
    parts: Vec<String>,
    dom: Vec<UserId>,
    part: Vec<PartId>,
    part_actions: Vec<Vec<ActionId>>,
    part_dom: Vec<UserId>,
    user_index: HashMap<String, UserId>,
    action_index: HashMap<String, ActionId>,
    part_index: HashMap<String, PartId>,
}

impl Signature {
    pub fn new<S: Into<String>>(
        users: impl IntoIterator<Item = S>,
        actions: impl IntoIterator<Item = ActionDecl>,
    ) -> Result<Self, ModelError> {
        let mut sig = Signature {
            users: Vec::new(),
            actions: Vec::new(),
            parts: Vec::new(),
            dom: Vec::new(),
            part: Vec::new(),
            part_actions: Vec::new(),
            part_dom: Vec::new(),
            user_index: HashMap::new(),
            action_index: HashMap::new(),
            part_index: HashMap::new(),
        };
        for u in users {
            let u = u.into();
            if sig.user_index.contains_key(&u) {
                return Err(ModelError::DuplicateUser(u));
            }
            sig.user_index
                .insert(u.clone(), UserId::from_index(sig.users.len()));
            sig.users.push(u);
        }
        for decl in actions {
            if sig.action_index.contains_key(&decl.name) {
                return Err(ModelError::DuplicateAction(decl.name));
            }
            let dom = *sig
                .user_index
                .get(&decl.dom)
                .ok_or_else(|| ModelError::UnknownUser(decl.dom.clone()))?;
            let a = ActionId::from_index(sig.actions.len());
            let p = match sig.part_index.get(&decl.part) {
                Some(&p) => {
                    let owner = sig.part_dom[p.index()];
                    if owner != dom {
                        return Err(ModelError::PartitionSpansUsers {
                            part: decl.part,
                            first: sig.users[owner.index()].clone(),
                            second: decl.dom,
                        });
                    }
                    p
                }
                None => {
                    let p = PartId::from_index(sig.parts.len());
                    sig.part_index.insert(decl.part.clone(), p);
                    sig.parts.push(decl.part.clone());
                    sig.part_actions.push(Vec::new());
                    sig.part_dom.push(dom);
                    p
                }
            };
            sig.part_actions[p.index()].push(a);
            sig.action_index.insert(decl.name.clone(), a);
            sig.actions.push(decl.name);
            sig.dom.push(dom);
            sig.part.push(p);
        }
        Ok(sig)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.users.len()).map(UserId::from_index)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len()).map(ActionId::from_index)
    }

    pub fn parts(&self) -> impl Iterator<Item = PartId> + '_ {
        (0..self.parts.len()).map(PartId::from_index)
    }

    pub fn user(&self, name: &str) -> Option<UserId> {
        self.user_index.get(name).copied()
    }

    pub fn action(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn partition(&self, name: &str) -> Option<PartId> {
        self.part_index.get(name).copied()
    }

    pub fn user_name(&self, u: UserId) -> &str {
        &self.users[u.index()]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a.index()]
    }

    pub fn part_name(&self, p: PartId) -> &str {
        &self.parts[p.index()]
    }

    pub fn dom(&self, a: ActionId) -> UserId {
        self.dom[a.index()]
    }

    pub fn part(&self, a: ActionId) -> PartId {
        self.part[a.index()]
    }

    pub fn part_actions(&self, p: PartId) -> &[ActionId] {
        &self.part_actions[p.index()]
    }

    pub fn part_dom(&self, p: PartId) -> UserId {
        self.part_dom[p.index()]
    }

    pub fn user_actions(&self, u: UserId) -> impl Iterator<Item = ActionId> + '_ {
        self.actions().filter(move |&a| self.dom(a) == u)
    }

    /// Parses a space-free action list such as `a_u a_v` or `a_u,a_v`.
    pub fn parse_trace(&self, text: &str) -> Result<Vec<ActionId>, ModelError> {
        text.split(|c: char| c.is_whitespace() || c == ',' || c == '.' || c == '·')
            .filter(|t| !t.is_empty())
            .map(|t| {
                self.action(t)
                    .ok_or_else(|| ModelError::UnknownAction(t.to_string()))
            })
            .collect()
    }

    pub fn format_trace(&self, trace: &[ActionId]) -> String {
        if trace.is_empty() {
            return "ε".to_string();
        }
        trace
            .iter()
            .map(|&a| self.action_name(a))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn action_decls(&self) -> Vec<ActionDecl> {
        self.actions()
            .map(|a| {
                ActionDecl::new(
                    self.action_name(a),
                    self.user_name(self.dom(a)),
                    self.part_name(self.part(a)),
                )
            })
            .collect()
    }

    /// True when every partition block is exactly the action set of one user.
    pub fn is_per_user(&self) -> bool {
        let mut seen = vec![false; self.num_users()];
        for p in self.parts() {
            let u = self.part_dom(p);
            if seen[u.index()] {
                return false;
            }
            seen[u.index()] = true;
        }
        true
    }

    /// The same users and actions with one partition block per user.
    ///
    /// Existing block names are kept when the partition is already per-user;
    /// otherwise each user's block is named `A_<user>`.
    pub fn per_user_partitions(&self) -> Signature {
        if self.is_per_user() {
            return self.clone();
        }
        let decls = self
            .actions()
            .map(|a| {
                let u = self.user_name(self.dom(a));
                ActionDecl::new(self.action_name(a), u, format!("A_{u}"))
            })
            .collect::<Vec<_>>();
        Signature::new(self.users.iter().cloned(), decls)
            .expect("per-user partition of a valid signature is valid")
    }
}

/// A finite, input-enabled, deterministic machine with per-user observations.
///
/// Every stored state is reachable from `initial`; the constructors prune
/// anything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    sig: Signature,
    states: Vec<String>,
    initial: StateId,
    step: Vec<StateId>,
    obs: Vec<OutputId>,
    outputs: Vec<String>,
}

/// A machine together with the warnings produced while building it.
#[derive(Debug, Clone)]
pub struct Built {
    pub machine: Machine,
    pub warnings: Vec<String>,
}

impl Machine {
    /// Builds a machine from dense tables.
    ///
    /// `step` is indexed `state * num_actions + action`; `obs[u][s]` is the
    /// output of user `u` in state `s`. Unreachable states are dropped with a
    /// warning.
    pub fn from_tables(
        sig: Signature,
        states: Vec<String>,
        initial: StateId,
        step: Vec<StateId>,
        obs: Vec<Vec<String>>,
    ) -> Result<Built, ModelError> {
        let ns = states.len();
        let na = sig.num_actions();
        if ns == 0 {
            return Err(ModelError::NoStates);
        }
        if na == 0 {
            return Err(ModelError::NoActions);
        }
        if step.len() != ns * na {
            return Err(ModelError::TableShape(format!(
                "step has {} entries, expected {}",
                step.len(),
                ns * na
            )));
        }
        if let Some(t) = step.iter().find(|t| t.index() >= ns) {
            return Err(ModelError::TableShape(format!(
                "step target {} out of range",
                t.0
            )));
        }
        if initial.index() >= ns {
            return Err(ModelError::TableShape("initial state out of range".into()));
        }
        if obs.len() != sig.num_users() || obs.iter().any(|row| row.len() != ns) {
            return Err(ModelError::TableShape(
                "obs must have one row per user and one column per state".into(),
            ));
        }

        // BFS from the initial state assigns new dense ids in discovery order.
        let mut remap = vec![u32::MAX; ns];
        let mut order = Vec::with_capacity(ns);
        let mut queue = VecDeque::new();
        remap[initial.index()] = 0;
        order.push(initial.index());
        queue.push_back(initial.index());
        while let Some(s) = queue.pop_front() {
            for a in 0..na {
                let t = step[s * na + a].index();
                if remap[t] == u32::MAX {
                    remap[t] = order.len() as u32;
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let mut warnings = Vec::new();
        for (s, name) in states.iter().enumerate() {
            if remap[s] == u32::MAX {
                let msg =
                    format!("state `{name}` is unreachable from the initial state and was removed");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }

        let mut outputs: Vec<String> = Vec::new();
        let mut output_index: HashMap<String, OutputId> = HashMap::new();
        let mut obs_table = Vec::with_capacity(sig.num_users() * order.len());
        for row in &obs {
            for &old in &order {
                let value = &row[old];
                let id = *output_index.entry(value.clone()).or_insert_with(|| {
                    outputs.push(value.clone());
                    OutputId::from_index(outputs.len() - 1)
                });
                obs_table.push(id);
            }
        }
        let mut step_table = Vec::with_capacity(order.len() * na);
        for &old in &order {
            for a in 0..na {
                step_table.push(StateId(remap[step[old * na + a].index()]));
            }
        }
        let state_names = order.iter().map(|&old| states[old].clone()).collect();
        Ok(Built {
            machine: Machine {
                sig,
                states: state_names,
                initial: StateId(0),
                step: step_table,
                obs: obs_table,
                outputs,
            },
            warnings,
        })
    }

    /// Builds the reachable part of a machine given by transition and
    /// observation functions over an arbitrary state type.
    pub fn explore<S, F, O, N>(
        sig: Signature,
        initial: S,
        mut step: F,
        mut obs: O,
        mut name: N,
    ) -> Result<Machine, ModelError>
    where
        S: Clone + Eq + Hash,
        F: FnMut(&S, ActionId) -> S,
        O: FnMut(UserId, &S) -> String,
        N: FnMut(&S) -> String,
    {
        let na = sig.num_actions();
        let mut index: HashMap<S, usize> = HashMap::new();
        let mut states = vec![initial.clone()];
        index.insert(initial, 0);
        let mut table = Vec::new();
        let mut next = 0;
        while next < states.len() {
            let s = states[next].clone();
            for a in 0..na {
                let t = step(&s, ActionId::from_index(a));
                let id = match index.get(&t) {
                    Some(&id) => id,
                    None => {
                        states.push(t.clone());
                        index.insert(t, states.len() - 1);
                        states.len() - 1
                    }
                };
                table.push(StateId::from_index(id));
            }
            next += 1;
        }
        let obs_rows = sig
            .users()
            .map(|u| states.iter().map(|s| obs(u, s)).collect())
            .collect();
        let names = states.iter().map(&mut name).collect::<Vec<_>>();
        let mut seen = HashMap::new();
        for n in &names {
            if seen.insert(n.clone(), ()).is_some() {
                return Err(ModelError::DuplicateState(n.clone()));
            }
        }
        Ok(Machine::from_tables(sig, names, StateId(0), table, obs_rows)?.machine)
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).map(StateId::from_index)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(StateId::from_index)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.index()]
    }

    #[inline]
    pub fn step(&self, s: StateId, a: ActionId) -> StateId {
        self.step[s.index() * self.sig.num_actions() + a.index()]
    }

    #[inline]
    pub fn obs(&self, u: UserId, s: StateId) -> OutputId {
        self.obs[u.index() * self.states.len() + s.index()]
    }

    pub fn output_name(&self, o: OutputId) -> &str {
        &self.outputs[o.index()]
    }

    /// `s • alpha`.
    pub fn run_from(&self, s: StateId, alpha: &[ActionId]) -> StateId {
        alpha.iter().fold(s, |s, &a| self.step(s, a))
    }

    /// `s0 • alpha`.
    pub fn run(&self, alpha: &[ActionId]) -> StateId {
        self.run_from(self.initial, alpha)
    }

    /// Runs a trace given by action names.
    pub fn run_named(&self, alpha: &[&str]) -> Result<StateId, ModelError> {
        let trace = alpha
            .iter()
            .map(|n| {
                self.sig
                    .action(n)
                    .ok_or_else(|| ModelError::UnknownAction(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.run(&trace))
    }

    /// States reachable from the initial state, in BFS discovery order.
    pub fn reachable_states(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut out = vec![self.initial];
        seen[self.initial.index()] = true;
        let mut i = 0;
        while i < out.len() {
            let s = out[i];
            for a in self.sig.actions() {
                let t = self.step(s, a);
                if !seen[t.index()] {
                    seen[t.index()] = true;
                    out.push(t);
                }
            }
            i += 1;
        }
        out
    }

    /// A shortest, lexicographically least trace from the initial state to
    /// every state.
    pub fn access_traces(&self) -> Vec<Vec<ActionId>> {
        let mut paths: Vec<Option<Vec<ActionId>>> = vec![None; self.num_states()];
        paths[self.initial.index()] = Some(Vec::new());
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            let base = paths[s.index()].clone().expect("queued states have paths");
            for a in self.sig.actions() {
                let t = self.step(s, a);
                if paths[t.index()].is_none() {
                    let mut p = base.clone();
                    p.push(a);
                    paths[t.index()] = Some(p);
                    queue.push_back(t);
                }
            }
        }
        paths
            .into_iter()
            .map(|p| p.expect("all states reachable"))
            .collect()
    }

    /// Returns a copy with `obs_u` replaced by `f`.
    pub fn with_obs<F>(&self, u: UserId, mut f: F) -> Machine
    where
        F: FnMut(StateId) -> String,
    {
        let obs = self
            .sig
            .users()
            .map(|v| {
                self.states()
                    .map(|s| {
                        if v == u {
                            f(s)
                        } else {
                            self.output_name(self.obs(v, s)).to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        Machine::from_tables(
            self.sig.clone(),
            self.states.clone(),
            self.initial,
            self.step.clone(),
            obs,
        )
        .expect("tables of a valid machine are valid")
        .machine
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_signature() -> Signature {
        Signature::new(
            ["u", "v", "w"],
            [
                ActionDecl::new("a_u", "u", "Au"),
                ActionDecl::new("a_v", "v", "Av"),
                ActionDecl::new("a_w", "w", "Aw"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn partition_must_refine_dom() {
        let err = Signature::new(
            ["u", "v"],
            [
                ActionDecl::new("a", "u", "P"),
                ActionDecl::new("b", "v", "P"),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::PartitionSpansUsers { .. }));
    }

    #[test]
    fn duplicate_and_unknown_names_rejected() {
        assert!(matches!(
            Signature::new(["u", "u"], Vec::<ActionDecl>::new()),
            Err(ModelError::DuplicateUser(_))
        ));
        assert!(matches!(
            Signature::new(["u"], [ActionDecl::new("a", "x", "P")]),
            Err(ModelError::UnknownUser(_))
        ));
    }

    #[test]
    fn single_state_self_loop() {
        let sig = Signature::new(["u"], [ActionDecl::new("a", "u", "P")]).unwrap();
        let built = Machine::from_tables(
            sig,
            vec!["only".into()],
            StateId(0),
            vec![StateId(0)],
            vec![vec!["o".into()]],
        )
        .unwrap();
        assert_eq!(built.machine.reachable_states(), vec![StateId(0)]);
        assert!(built.warnings.is_empty());
    }

    #[test]
    fn orphan_state_pruned_with_warning() {
        let sig = Signature::new(["u"], [ActionDecl::new("a", "u", "P")]).unwrap();
        let built = Machine::from_tables(
            sig,
            vec!["init".into(), "orphan".into()],
            StateId(0),
            vec![StateId(0), StateId(0)],
            vec![vec!["x".into(), "y".into()]],
        )
        .unwrap();
        assert_eq!(built.machine.num_states(), 1);
        assert_eq!(built.warnings.len(), 1);
        assert!(built.warnings[0].contains("orphan"));
        assert_eq!(built.machine.state("orphan"), None);
    }

    #[test]
    fn explore_builds_reachable_part() {
        let sig = xor_signature();
        let m = Machine::explore(
            sig,
            (0u8, 0u8),
            |&(x, y), a| match a.0 {
                0 => (x ^ 1, y),
                1 => (x, y ^ 1),
                _ => (x, y),
            },
            |u, &(x, y)| match u.0 {
                0 => "-".into(),
                1 => x.to_string(),
                _ => y.to_string(),
            },
            |&(x, y)| format!("{x}{y}"),
        )
        .unwrap();
        assert_eq!(m.num_states(), 4);
        assert_eq!(m.reachable_states().len(), 4);
        let s = m.run_named(&["a_u", "a_v", "a_u"]).unwrap();
        assert_eq!(m.state_name(s), "01");
        assert!(matches!(
            m.run_named(&["nope"]),
            Err(ModelError::UnknownAction(_))
        ));
    }

    #[test]
    fn per_user_partitions_renames_only_when_needed() {
        let sig = Signature::new(
            ["u", "v"],
            [
                ActionDecl::new("a", "u", "P1"),
                ActionDecl::new("b", "u", "P2"),
                ActionDecl::new("c", "v", "Q"),
            ],
        )
        .unwrap();
        assert!(!sig.is_per_user());
        let coarse = sig.per_user_partitions();
        assert_eq!(coarse.num_parts(), 2);
        assert_eq!(coarse.part_name(coarse.part(ActionId(1))), "A_u");
        let x = xor_signature();
        assert_eq!(x.per_user_partitions(), x);
    }
}
