//! Runs every applicable method on an instance and compares the answers
//! against the bounded oracle.

use crate::automata::safety_verdict;
use crate::model::{Machine, UserId};
use crate::par::Exec;
use crate::policy::{ConditionClass, Policy};
use crate::semantics::is_secure_def;
use crate::unwinding::{check_user, Hints};
use crate::verdict::{Method, Status, Verdict};
use crate::words::DEFAULT_WORD_LIMIT;

use super::{Oracle, OracleError};

#[derive(Debug, Clone, Copy)]
pub struct DifferentialOptions {
    pub max_len: usize,
    pub exec: Exec,
    pub limit: usize,
    pub hints: Hints,
}

impl Default for DifferentialOptions {
    fn default() -> Self {
        DifferentialOptions {
            max_len: 8,
            exec: Exec::default(),
            limit: DEFAULT_WORD_LIMIT,
            hints: Hints::default(),
        }
    }
}

/// All verdicts for one user. Methods that do not apply are `None`.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub user: UserId,
    pub oracle: Verdict,
    pub unwinding: Option<Verdict>,
    pub safety: Option<Verdict>,
}

impl MethodRun {
    fn others(&self) -> impl Iterator<Item = &Verdict> {
        self.unwinding.iter().chain(self.safety.iter())
    }
}

#[derive(Debug, Clone)]
pub struct Differential {
    pub runs: Vec<MethodRun>,
}

impl Differential {
    /// Methods answering SECURE where the oracle found a violation. Any
    /// entry here is a soundness bug.
    pub fn unsound(&self) -> Vec<(UserId, Method)> {
        self.runs
            .iter()
            .flat_map(|r| {
                r.others()
                    .filter(|v| v.is_secure() && r.oracle.is_insecure())
                    .map(|v| (r.user, v.method))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Methods answering INSECURE where the oracle saw no violation up to its
    /// bound. The witness may simply be longer than the bound.
    pub fn beyond_bound(&self) -> Vec<(UserId, Method)> {
        self.runs
            .iter()
            .flat_map(|r| {
                r.others()
                    .filter(|v| v.is_insecure() && r.oracle.is_secure())
                    .map(|v| (r.user, v.method))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Every SECURE/INSECURE conflict between any two answers.
    pub fn disagreements(&self) -> Vec<(UserId, Method, Method)> {
        let mut out = Vec::new();
        for r in &self.runs {
            let all: Vec<&Verdict> = std::iter::once(&r.oracle).chain(r.others()).collect();
            for (i, a) in all.iter().enumerate() {
                for b in &all[i + 1..] {
                    if a.conflicts_with(b) {
                        out.push((r.user, a.method, b.method));
                    }
                }
            }
        }
        out
    }

    /// INSECURE answers whose witness does not actually violate the
    /// definition.
    pub fn bad_witnesses(&self, m: &Machine, policy: &Policy) -> Vec<(UserId, Method)> {
        let mut out = Vec::new();
        for r in &self.runs {
            for v in std::iter::once(&r.oracle).chain(r.others()) {
                if let Some(w) = &v.witness {
                    if w.user != r.user || is_secure_def(m, policy, &w.trace, w.user) {
                        out.push((r.user, v.method));
                    }
                }
            }
        }
        out
    }

    pub fn count(&self, method: Method, status: Status) -> usize {
        self.runs
            .iter()
            .flat_map(|r| std::iter::once(&r.oracle).chain(r.others()))
            .filter(|v| v.method == method && v.status == status)
            .count()
    }
}

pub fn differential(
    m: &Machine,
    policy: &Policy,
    max_len: usize,
) -> Result<Differential, OracleError> {
    differential_with(
        m,
        policy,
        DifferentialOptions {
            max_len,
            ..DifferentialOptions::default()
        },
    )
}

pub fn differential_with(
    m: &Machine,
    policy: &Policy,
    opts: DifferentialOptions,
) -> Result<Differential, OracleError> {
    let oracle = Oracle::new(m, policy, opts.max_len, opts.exec, opts.limit)?;
    let runs = m
        .signature()
        .users()
        .map(|u| {
            let unwinding = match check_user(m, policy, u, opts.hints) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::debug!("unwinding skipped: {e}");
                    None
                }
            };
            let safety = if policy.classes_toward(u).contains(&ConditionClass::Post) {
                None
            } else {
                safety_verdict(m, policy, u).ok()
            };
            MethodRun {
                user: u,
                oracle: oracle.check(&[u]),
                unwinding,
                safety,
            }
        })
        .collect();
    Ok(Differential { runs })
}
