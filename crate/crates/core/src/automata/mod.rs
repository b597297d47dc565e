//! Finite automata over the action alphabet.
//!
//! Regular expressions and channels are compiled through a Thompson NFA and
//! the subset construction into complete DFAs. The product machine used by
//! the safety reduction lives in [`product`].

mod compile;
mod dfa;
mod product;

use thiserror::Error;

pub use compile::{channel_to_dfa, condition_dfa, leftmost_post_dfa, regex_to_dfa};
pub use dfa::{dfa_included, Dfa, Inclusion};
pub use product::{
    build_product, check_safety, safety_verdict, Composite, ProductMachine, SafetyResult,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomataError {
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error("alphabet mismatch: {left} vs {right} actions")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("channel kind does not match the requested construction")]
    KindMismatch,
    #[error("unsupported: {0}")]
    Unsupported(String),
}
