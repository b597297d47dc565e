use crate::model::{Machine, UserId};
use crate::policy::{ConditionClass, Policy};
use crate::verdict::{Method, Status, Verdict};

use super::{check_post, check_pre, check_strict, UnwindingError, DEFAULT_SUFFIX_CAP};

/// What is known about the policy's consistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Hints {
    pub left_consistent: bool,
    pub right_consistent: bool,
}

/// Picks the unwinding check matching the assertion classes toward `u`.
pub fn check_user(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    hints: Hints,
) -> Result<Verdict, UnwindingError> {
    let classes = policy.classes_toward(u);
    let pre = classes.contains(&ConditionClass::Pre);
    let post = classes.contains(&ConditionClass::Post);
    match (pre, post) {
        (false, false) => check_strict(m, policy, u),
        (true, false) => check_pre(m, policy, u, hints.left_consistent),
        (false, true) => check_post(m, policy, u, hints.right_consistent, DEFAULT_SUFFIX_CAP),
        (true, true) => check_mixed(m, policy, u, hints),
    }
}

/// Splits the assertions toward `u` into a pre part and a post part (strict
/// assertions go to both) and checks each. SECURE needs both parts SECURE;
/// anything else is UNKNOWN. Policies with a single condition class are
/// delegated to the matching check.
pub fn check_mixed(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    hints: Hints,
) -> Result<Verdict, UnwindingError> {
    let classes = policy.classes_toward(u);
    if !(classes.contains(&ConditionClass::Pre) && classes.contains(&ConditionClass::Post)) {
        return check_user(m, policy, u, hints);
    }
    let pre_part = policy.filter(|t| t.target != u || t.class() != ConditionClass::Post);
    let post_part = policy.filter(|t| t.target != u || t.class() != ConditionClass::Pre);
    let a = check_pre(m, &pre_part, u, false)?;
    let b = check_post(m, &post_part, u, false, DEFAULT_SUFFIX_CAP)?;
    let summary = format!("pre part {}, post part {}", a.status, b.status);
    if a.status == Status::Secure && b.status == Status::Secure {
        return Ok(Verdict::secure(Method::UnwindingMixed).with_note(summary));
    }
    let diagnostic = [a.diagnostic, b.diagnostic]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("; ");
    let v = Verdict::unknown(
        Method::UnwindingMixed,
        format!("{summary}; mixed policies have no completeness result, confirm with the oracle"),
    );
    Ok(if diagnostic.is_empty() {
        v
    } else {
        v.with_diagnostic(diagnostic)
    })
}
