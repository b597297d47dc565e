use crate::model::{Machine, UserId};
use crate::policy::{ConditionClass, Policy};
use crate::verdict::{Method, Verdict, Witness};

use super::{coarsest_obs_bisim, witness, UnwindingError};

/// Decides security for a user whose assertions are all strict: the
/// coarsest observation bisimulation must relate every state to its
/// successor under each denied action.
pub fn check_strict(m: &Machine, policy: &Policy, u: UserId) -> Result<Verdict, UnwindingError> {
    let sig = m.signature();
    if let Some(t) = policy
        .toward(u)
        .find(|t| t.class() != ConditionClass::Strict)
    {
        return Err(UnwindingError::Unsupported {
            method: "strict",
            reason: format!(
                "assertion {} -> {} is conditional",
                sig.part_name(t.controlled),
                sig.user_name(u)
            ),
        });
    }
    let rel = coarsest_obs_bisim(m, u);
    let failure = m.states().find_map(|s| {
        sig.actions()
            .filter(|&a| policy.lookup(sig.part(a), u).is_some())
            .find(|&a| !rel.related(s, m.step(s, a)))
            .map(|a| (s, a))
    });
    let Some((s, a)) = failure else {
        return Ok(Verdict::secure(Method::UnwindingStrict).with_note(format!(
            "{} classes for {}",
            rel.num_classes(),
            sig.user_name(u)
        )));
    };
    let diagnostic = format!(
        "LR fails: `{}` and its `{}`-successor `{}` are distinguishable by {}",
        m.state_name(s),
        sig.action_name(a),
        m.state_name(m.step(s, a)),
        sig.user_name(u)
    );
    Ok(match witness::from_product(m, policy, u) {
        Some(trace) => Verdict::insecure(Method::UnwindingStrict, Witness { user: u, trace })
            .with_diagnostic(diagnostic),
        None => Verdict::unknown(
            Method::UnwindingStrict,
            "rule failure without a reachable violation",
        )
        .with_diagnostic(diagnostic),
    })
}
