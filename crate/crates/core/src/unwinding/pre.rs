use std::collections::HashMap;

use crate::automata::{condition_dfa, Dfa};
use crate::model::{ActionId, Machine, PartId, StateId, UserId};
use crate::policy::{ConditionClass, Policy};
use crate::verdict::{Method, Verdict, Witness};

use super::{coarsest_obs_bisim, witness, UnwindingError};

/// Checks strict and pre-conditional assertions toward `u`.
///
/// The machine is explored in lockstep with the assertion automata. At every
/// reachable pair, each action whose assertion currently fires must lead to a
/// state related to the current one. Success proves security. A failure
/// proves insecurity only for left-consistent policies, signalled by
/// `left_consistent`; otherwise the answer is UNKNOWN.
pub fn check_pre(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    left_consistent: bool,
) -> Result<Verdict, UnwindingError> {
    let sig = m.signature();
    if let Some(t) = policy.toward(u).find(|t| t.class() == ConditionClass::Post) {
        return Err(UnwindingError::Unsupported {
            method: "pre",
            reason: format!(
                "assertion {} -> {} is post-conditional",
                sig.part_name(t.controlled),
                sig.user_name(u)
            ),
        });
    }
    let rel = coarsest_obs_bisim(m, u);
    let autos: Vec<(PartId, Dfa)> = policy
        .toward(u)
        .map(|t| (t.controlled, condition_dfa(t, sig).expect("pre or strict")))
        .collect();
    let fires = |a: ActionId, qs: &[u32]| {
        autos
            .iter()
            .zip(qs)
            .any(|((p, d), &q)| *p == sig.part(a) && d.is_final(q))
    };

    type Node = (StateId, Vec<u32>);
    let start: Node = (
        m.initial(),
        autos.iter().map(|(_, d)| d.initial()).collect(),
    );
    let mut seen: HashMap<Node, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut nodes = vec![start];
    let mut failure = None;
    let mut i = 0;
    while i < nodes.len() && failure.is_none() {
        let (s, qs) = nodes[i].clone();
        for a in sig.actions() {
            if fires(a, &qs) && !rel.related(s, m.step(s, a)) {
                failure = Some((s, a));
                break;
            }
            let next = (
                m.step(s, a),
                autos
                    .iter()
                    .zip(&qs)
                    .map(|((_, d), &q)| d.next(q, a))
                    .collect(),
            );
            if !seen.contains_key(&next) {
                seen.insert(next.clone(), nodes.len());
                nodes.push(next);
            }
        }
        i += 1;
    }
    let Some((s, a)) = failure else {
        return Ok(Verdict::secure(Method::UnwindingPre).with_note(format!(
            "{} classes, {} state/automaton pairs",
            rel.num_classes(),
            nodes.len()
        )));
    };
    let strict = policy
        .lookup(sig.part(a), u)
        .is_some_and(|t| t.class() == ConditionClass::Strict);
    let diagnostic = format!(
        "{} fails: `{}` and its `{}`-successor `{}` are distinguishable by {}{}",
        if strict { "LR" } else { "LR≤" },
        m.state_name(s),
        sig.action_name(a),
        m.state_name(m.step(s, a)),
        sig.user_name(u),
        if strict {
            ""
        } else {
            " while the assertion fires"
        }
    );
    if !left_consistent {
        return Ok(Verdict::unknown(
            Method::UnwindingPre,
            "rule failure does not imply insecurity for a policy not known to be left-consistent; confirm with the oracle or the safety reduction",
        )
        .with_diagnostic(diagnostic));
    }
    Ok(match witness::from_product(m, policy, u) {
        Some(trace) => Verdict::insecure(Method::UnwindingPre, Witness { user: u, trace })
            .with_diagnostic(diagnostic),
        None => Verdict::unknown(
            Method::UnwindingPre,
            "rule failure but no violating trace exists; the left-consistency hint looks wrong",
        )
        .with_diagnostic(diagnostic),
    })
}
