//! Translation of channel conditions to general pre-conditions, and the
//! strength order between pre-conditional assertions.

use crate::automata::{condition_dfa, Dfa};
use crate::model::{ActionId, Signature};

pub use crate::automata::Inclusion;

use super::{Assertion, Channel, Condition, PolicyError, PreRegex, Token};

fn channel_regex(ch: &Channel, sig: &Signature) -> PreRegex {
    ch.tokens()
        .iter()
        .map(|t| match t {
            Token::Set(c) => PreRegex::any_of(c.iter().copied()),
            Token::Gap => PreRegex::everything(sig),
            Token::GapSet(c) => PreRegex::concat(
                PreRegex::everything(sig),
                PreRegex::any_of(c.iter().copied()),
            ),
        })
        .reduce(PreRegex::concat)
        .expect("channels are nonempty")
}

/// Rewrites a pre-conditional assertion into an equivalent one whose
/// condition is a language over histories: upgrades become the regular
/// expression `A*·[[chs]]`, downgrades the complement automaton.
pub fn to_general_pre(t: &Assertion, sig: &Signature) -> Result<Assertion, PolicyError> {
    let condition = match &t.condition {
        Condition::Strict => Condition::PreRegex(PreRegex::everything(sig)),
        Condition::PreUpgrade(chs) => {
            let union = chs
                .iter()
                .map(|c| channel_regex(c, sig))
                .reduce(PreRegex::union)
                .expect("channel lists are nonempty");
            Condition::PreRegex(PreRegex::concat(PreRegex::everything(sig), union))
        }
        Condition::PreDowngrade(_) => {
            Condition::PreLanguage(condition_dfa(t, sig).expect("downgrades are pre conditions"))
        }
        Condition::PreRegex(_) | Condition::PreLanguage(_) => t.condition.clone(),
        Condition::Post(_) => return Err(PolicyError::NotPre(t.class())),
    };
    Ok(Assertion {
        controlled: t.controlled,
        target: t.target,
        condition,
    })
}

/// The automaton for the set of histories under which `t` purges.
pub fn general_pre_dfa(t: &Assertion, sig: &Signature) -> Result<Dfa, PolicyError> {
    condition_dfa(t, sig).ok_or(PolicyError::NotPre(t.class()))
}

/// `t1 ≤ t2`: every history on which `t1` purges is one on which `t2` purges.
pub fn assertion_leq(
    t1: &Assertion,
    t2: &Assertion,
    sig: &Signature,
) -> Result<Inclusion, PolicyError> {
    if t1.controlled != t2.controlled || t1.target != t2.target {
        return Err(PolicyError::Mismatched);
    }
    condition_leq(t1, t2, sig)
}

/// Language inclusion of the two purge conditions, ignoring which partition
/// and user the assertions govern.
pub fn condition_leq(
    t1: &Assertion,
    t2: &Assertion,
    sig: &Signature,
) -> Result<Inclusion, PolicyError> {
    let d1 = general_pre_dfa(t1, sig)?;
    let d2 = general_pre_dfa(t2, sig)?;
    Ok(d1.included_in(&d2).expect("same signature, same alphabet"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssertionOrder {
    Equivalent,
    /// Strictly weaker; the witness is purged by the second only.
    Less {
        witness: Vec<ActionId>,
    },
    /// Strictly stronger; the witness is purged by the first only.
    Greater {
        witness: Vec<ActionId>,
    },
    Incomparable {
        only_first: Vec<ActionId>,
        only_second: Vec<ActionId>,
    },
}

pub fn compare_assertions(
    t1: &Assertion,
    t2: &Assertion,
    sig: &Signature,
) -> Result<AssertionOrder, PolicyError> {
    if t1.controlled != t2.controlled || t1.target != t2.target {
        return Err(PolicyError::Mismatched);
    }
    compare_conditions(t1, t2, sig)
}

/// [`compare_assertions`] on the conditions alone.
pub fn compare_conditions(
    t1: &Assertion,
    t2: &Assertion,
    sig: &Signature,
) -> Result<AssertionOrder, PolicyError> {
    let le = condition_leq(t1, t2, sig)?;
    let ge = condition_leq(t2, t1, sig)?;
    Ok(match (le.witness, ge.witness) {
        (None, None) => AssertionOrder::Equivalent,
        (None, Some(w)) => AssertionOrder::Less { witness: w },
        (Some(w), None) => AssertionOrder::Greater { witness: w },
        (Some(a), Some(b)) => AssertionOrder::Incomparable {
            only_first: a,
            only_second: b,
        },
    })
}
