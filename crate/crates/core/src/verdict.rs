use std::fmt;

use crate::model::{ActionId, Signature, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Secure,
    Insecure,
    Unknown,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Secure => "SECURE",
            Status::Insecure => "INSECURE",
            Status::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Oracle,
    UnwindingStrict,
    UnwindingPre,
    UnwindingPost,
    UnwindingMixed,
    Safety,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Oracle => "bruteforce",
            Method::UnwindingStrict => "unwinding-strict",
            Method::UnwindingPre => "unwinding-pre",
            Method::UnwindingPost => "unwinding-post",
            Method::UnwindingMixed => "unwinding-mixed",
            Method::Safety => "safety",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A trace on which the user's observation differs from the one after
/// purging.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    pub user: UserId,
    pub trace: Vec<ActionId>,
}

impl Witness {
    pub fn describe(&self, sig: &Signature) -> String {
        format!(
            "({}, {})",
            sig.user_name(self.user),
            sig.format_trace(&self.trace)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub method: Method,
    pub witness: Option<Witness>,
    /// Length bound for enumeration-based answers.
    pub bound: Option<usize>,
    /// Which rule failed, where.
    pub diagnostic: Option<String>,
    pub note: Option<String>,
}

impl Verdict {
    pub fn secure(method: Method) -> Self {
        Verdict {
            status: Status::Secure,
            method,
            witness: None,
            bound: None,
            diagnostic: None,
            note: None,
        }
    }

    pub fn insecure(method: Method, witness: Witness) -> Self {
        Verdict {
            status: Status::Insecure,
            witness: Some(witness),
            ..Verdict::secure(method)
        }
    }

    pub fn unknown(method: Method, note: impl Into<String>) -> Self {
        Verdict {
            status: Status::Unknown,
            note: Some(note.into()),
            ..Verdict::secure(method)
        }
    }

    pub fn with_bound(mut self, bound: usize) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_diagnostic(mut self, d: impl Into<String>) -> Self {
        self.diagnostic = Some(d.into());
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    pub fn is_secure(&self) -> bool {
        self.status == Status::Secure
    }

    pub fn is_insecure(&self) -> bool {
        self.status == Status::Insecure
    }

    /// SECURE against INSECURE; UNKNOWN never conflicts.
    pub fn conflicts_with(&self, other: &Verdict) -> bool {
        matches!(
            (self.status, other.status),
            (Status::Secure, Status::Insecure) | (Status::Insecure, Status::Secure)
        )
    }
}
