//! Condition evaluation directly on action sequences.
//!
//! Nothing here builds an automaton: channels are matched by backtracking
//! and regular expressions by position-set simulation. The automata module
//! provides the compiled versions, and the two are tested against each other.

use crate::model::{ActionId, Signature};

use super::{Assertion, Channel, Condition, PreRegex, Token};

/// Does `word` match the channel exactly, with gaps read as `A*`?
pub fn matches_channel(tokens: &[Token], word: &[ActionId], sig: &Signature) -> bool {
    match tokens.split_first() {
        None => word.is_empty(),
        Some((Token::Set(c), rest)) => match word.split_first() {
            Some((&a, tail)) => c.contains(&sig.part(a)) && matches_channel(rest, tail, sig),
            None => false,
        },
        Some((Token::Gap, rest)) => {
            (0..=word.len()).any(|k| matches_channel(rest, &word[k..], sig))
        }
        Some((Token::GapSet(c), rest)) => (0..word.len())
            .any(|k| c.contains(&sig.part(word[k])) && matches_channel(rest, &word[k + 1..], sig)),
    }
}

/// `alpha ∈ A*·[[chs]]`: some suffix of `alpha` matches one of the channels.
pub fn pre_language_contains(chs: &[Channel], alpha: &[ActionId], sig: &Signature) -> bool {
    chs.iter()
        .any(|ch| (0..=alpha.len()).any(|start| matches_channel(ch.tokens(), &alpha[start..], sig)))
}

/// `alpha ∈ [[chs]]·A*`: some prefix of `alpha` matches one of the channels.
pub fn post_language_contains(chs: &[Channel], alpha: &[ActionId], sig: &Signature) -> bool {
    chs.iter()
        .any(|ch| (0..=alpha.len()).any(|end| matches_channel(ch.tokens(), &alpha[..end], sig)))
}

/// Positions `j` such that `word[i..j]` is in `L(r)` for some start `i` in
/// `starts`.
fn regex_ends(r: &PreRegex, word: &[ActionId], starts: &[bool], sig: &Signature) -> Vec<bool> {
    let n = word.len();
    match r {
        PreRegex::Empty => vec![false; n + 1],
        PreRegex::Lit(p) => {
            let mut out = vec![false; n + 1];
            for i in 0..n {
                if starts[i] && sig.part(word[i]) == *p {
                    out[i + 1] = true;
                }
            }
            out
        }
        PreRegex::Union(l, rr) => {
            let a = regex_ends(l, word, starts, sig);
            let b = regex_ends(rr, word, starts, sig);
            a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
        }
        PreRegex::Concat(l, rr) => {
            let mid = regex_ends(l, word, starts, sig);
            regex_ends(rr, word, &mid, sig)
        }
        PreRegex::Star(inner) => {
            let mut reach = starts.to_vec();
            loop {
                let next = regex_ends(inner, word, &reach, sig);
                let mut changed = false;
                for (r, x) in reach.iter_mut().zip(next) {
                    if x && !*r {
                        *r = true;
                        changed = true;
                    }
                }
                if !changed {
                    return reach;
                }
            }
        }
    }
}

/// `word ∈ L(r)`.
pub fn regex_matches(r: &PreRegex, word: &[ActionId], sig: &Signature) -> bool {
    let mut starts = vec![false; word.len() + 1];
    starts[0] = true;
    regex_ends(r, word, &starts, sig)[word.len()]
}

/// Evaluates the condition of `assertion` at action `a` between history
/// `alpha` and future `alpha_post`. `true` means the action is purged.
pub fn eval_condition(
    assertion: &Assertion,
    alpha: &[ActionId],
    a: ActionId,
    alpha_post: &[ActionId],
    sig: &Signature,
) -> bool {
    debug_assert_eq!(sig.part(a), assertion.controlled);
    match &assertion.condition {
        Condition::Strict => true,
        Condition::PreUpgrade(chs) => pre_language_contains(chs, alpha, sig),
        Condition::PreDowngrade(chs) => !pre_language_contains(chs, alpha, sig),
        Condition::PreRegex(r) => regex_matches(r, alpha, sig),
        Condition::PreLanguage(dfa) => dfa.accepts(alpha),
        Condition::Post(chs) => !post_language_contains(chs, alpha_post, sig),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionDecl;
    use crate::policy::{parse_policy, PartSet};

    fn bookkeeping_sig() -> Signature {
        Signature::new(
            ["E", "B"],
            [
                ActionDecl::new("r", "E", "ArE"),
                ActionDecl::new("w", "E", "AwE"),
                ActionDecl::new("bk", "E", "Abk"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn write_right_after_bookkeeping_is_kept() {
        let s = bookkeeping_sig();
        let p = parse_policy(
            "deny AwE -> B pre downgrade [Abk];\ndeny Abk -> B post [AwE];",
            &s,
        )
        .unwrap();
        let (r, w, bk) = (ActionId(0), ActionId(1), ActionId(2));
        let write = &p.assertions()[0];
        assert!(!eval_condition(write, &[r, bk], w, &[], &s));
        assert!(eval_condition(write, &[bk, r], w, &[], &s));
        assert!(eval_condition(write, &[], w, &[], &s));
        let book = &p.assertions()[1];
        assert!(!eval_condition(book, &[], bk, &[w, r], &s));
        assert!(eval_condition(book, &[], bk, &[r, w], &s));
        assert!(eval_condition(book, &[], bk, &[], &s));
    }

    #[test]
    fn strict_is_constant_true() {
        let s = bookkeeping_sig();
        let t = Assertion::strict(s.partition("ArE").unwrap(), s.user("B").unwrap());
        for alpha in [vec![], vec![ActionId(1)], vec![ActionId(2), ActionId(0)]] {
            assert!(eval_condition(&t, &alpha, ActionId(0), &alpha, &s));
        }
    }

    #[test]
    fn gaps_match_any_sequence() {
        let s = bookkeeping_sig();
        let p = |n: &str| PartSet::from([s.partition(n).unwrap()]);
        let toks = [Token::Set(p("Abk")), Token::Gap, Token::Set(p("AwE"))];
        let (r, w, bk) = (ActionId(0), ActionId(1), ActionId(2));
        assert!(matches_channel(&toks, &[bk, w], &s));
        assert!(matches_channel(&toks, &[bk, r, r, w], &s));
        assert!(!matches_channel(&toks, &[bk, r, r], &s));
        let post = [Token::GapSet(p("Abk")), Token::Set(p("AwE"))];
        assert!(matches_channel(&post, &[r, bk, w], &s));
        assert!(!matches_channel(&post, &[r, bk, r, w], &s));
    }

    #[test]
    fn regex_membership() {
        let s = bookkeeping_sig();
        let q = PartSet::from([s.partition("Abk").unwrap()]);
        let sw = PreRegex::switch(&s, &q);
        let (r, w, bk) = (ActionId(0), ActionId(1), ActionId(2));
        assert!(regex_matches(&sw, &[], &s));
        assert!(!regex_matches(&sw, &[r, bk, w], &s));
        assert!(regex_matches(&sw, &[bk, r, bk, w], &s));
        assert!(!regex_matches(&PreRegex::Empty, &[], &s));
        assert!(regex_matches(&PreRegex::star(PreRegex::Empty), &[], &s));
        assert!(!regex_matches(&PreRegex::star(PreRegex::Empty), &[r], &s));
    }
}
