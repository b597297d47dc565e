//! Conditional noninterference for finite deterministic machines.
//!
//! Machines and signatures live in [`model`], policies and their DSL in
//! [`policy`]. Security can be decided three ways: by bounded enumeration of
//! traces ([`oracle`]), by synthesizing unwinding relations ([`unwinding`]),
//! and, for pre-conditional policies, by reachability in a product machine
//! ([`automata::build_product`]).

pub mod automata;
pub mod examples;
pub mod machine_file;
pub mod model;
pub mod oracle;
pub mod par;
pub mod policy;
pub mod semantics;
pub mod unwinding;
pub mod verdict;
pub mod words;

pub use model::{
    ActionDecl, ActionId, Built, Machine, ModelError, OutputId, PartId, Signature, StateId, UserId,
};
