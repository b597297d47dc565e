//! The structured check report. Field order is fixed by the struct
//! definitions and every list is built in signature order, so identical
//! inputs give byte-identical output.

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: Inputs,
    pub settings: Settings,
    pub policy: PolicyMeta,
    pub consistency: ConsistencyReport,
    pub users: Vec<UserReport>,
    pub summary: Summary,
}

#[derive(Debug, Serialize)]
pub struct Inputs {
    pub machine: InputFile,
    pub policy: InputFile,
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Settings {
    pub method: String,
    pub max_len: usize,
    pub consistency: String,
    pub exec: String,
}

#[derive(Debug, Serialize)]
pub struct PolicyMeta {
    pub assertions: usize,
    pub classes: Vec<String>,
    /// Pairs `u -> v` of the relation induced by strict assertions only.
    pub induced_relation: Vec<String>,
    pub suffix_closure_sizes: Vec<SuffixSize>,
}

#[derive(Debug, Serialize)]
pub struct SuffixSize {
    pub user: String,
    pub size: usize,
}

#[derive(Debug, Serialize)]
pub struct ConsistencyReport {
    pub mode: String,
    pub left: Option<ConsistencyResult>,
    pub right: Option<ConsistencyResult>,
}

#[derive(Debug, Serialize)]
pub struct ConsistencyResult {
    /// `true`, `false`, or `undetermined` when the bound was too large.
    pub holds: String,
    pub bound: usize,
    pub counterexample: Option<ConsistencyCounterexample>,
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ConsistencyCounterexample {
    pub user: String,
    pub alpha: String,
    pub alpha_post: String,
}

#[derive(Debug, Serialize)]
pub struct UserReport {
    pub user: String,
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub status: String,
    pub witness: Option<WitnessReport>,
    pub bound: Option<usize>,
    pub diagnostic: Option<String>,
    pub note: Option<String>,
}

/// Everything needed to replay a violation by hand.
#[derive(Debug, Serialize)]
pub struct WitnessReport {
    pub trace: String,
    pub purged: String,
    pub removed_positions: Vec<usize>,
    pub obs_full: String,
    pub obs_purged: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: String,
    pub exit_code: i32,
}
