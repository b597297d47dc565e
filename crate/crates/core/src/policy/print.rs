use crate::model::Signature;

use super::{Assertion, Channel, Condition, PartSet, PolicyError, PreRegex, Token};

fn partset(c: &PartSet, sig: &Signature) -> String {
    if c.len() == 1 {
        sig.part_name(*c.iter().next().expect("nonempty"))
            .to_string()
    } else {
        let names = c.iter().map(|&p| sig.part_name(p)).collect::<Vec<_>>();
        format!("{{{}}}", names.join(", "))
    }
}

pub(crate) fn channel_to_dsl(ch: &Channel, sig: &Signature) -> String {
    ch.tokens()
        .iter()
        .map(|t| match t {
            Token::Set(c) => partset(c, sig),
            Token::Gap => "<>".to_string(),
            Token::GapSet(c) => format!("<>{}", partset(c, sig)),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn channels_to_dsl(chs: &[Channel], sig: &Signature) -> String {
    let parts = chs
        .iter()
        .map(|c| channel_to_dsl(c, sig))
        .collect::<Vec<_>>();
    format!("[{}]", parts.join(" | "))
}

pub(crate) fn regex_to_dsl(r: &PreRegex, sig: &Signature) -> String {
    fn go(r: &PreRegex, sig: &Signature, ctx: u8, out: &mut String) {
        let prec = match r {
            PreRegex::Union(..) => 0,
            PreRegex::Concat(..) => 1,
            PreRegex::Star(_) => 2,
            PreRegex::Empty | PreRegex::Lit(_) => 3,
        };
        let paren = prec < ctx;
        if paren {
            out.push('(');
        }
        match r {
            PreRegex::Empty => out.push('0'),
            PreRegex::Lit(p) => out.push_str(sig.part_name(*p)),
            PreRegex::Union(l, rr) => {
                go(l, sig, 0, out);
                out.push_str(" | ");
                // Right operand binds tighter so the printed tree parses back
                // with the same (left-leaning) shape.
                go(rr, sig, 1, out);
            }
            PreRegex::Concat(l, rr) => {
                go(l, sig, 1, out);
                out.push_str(" . ");
                go(rr, sig, 2, out);
            }
            PreRegex::Star(i) => {
                go(i, sig, 3, out);
                out.push('*');
            }
        }
        if paren {
            out.push(')');
        }
    }
    let mut out = String::new();
    go(r, sig, 0, &mut out);
    out
}

pub fn assertion_to_dsl(t: &Assertion, sig: &Signature) -> Result<String, PolicyError> {
    let head = format!(
        "deny {} -> {}",
        sig.part_name(t.controlled),
        sig.user_name(t.target)
    );
    let cond = match &t.condition {
        Condition::Strict => String::new(),
        Condition::PreUpgrade(chs) => format!(" pre upgrade {}", channels_to_dsl(chs, sig)),
        Condition::PreDowngrade(chs) => format!(" pre downgrade {}", channels_to_dsl(chs, sig)),
        Condition::PreRegex(r) => format!(" pre regex {}", regex_to_dsl(r, sig)),
        Condition::Post(chs) => format!(" post {}", channels_to_dsl(chs, sig)),
        Condition::PreLanguage(_) => return Err(PolicyError::Unprintable),
    };
    Ok(format!("{head}{cond};"))
}
