//! Built-in models with their policies and expected verdicts.

use thiserror::Error;

use crate::model::{ActionDecl, ActionId, Machine, Signature, UserId};
use crate::policy::{parse_policy, Policy};
use crate::verdict::{Method, Status};

pub const NAMES: [&str; 4] = ["xor", "bookkeeping", "chinese-wall", "two-stage-downgrade"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExampleError {
    #[error("unknown example `{0}` (known: xor, bookkeeping, chinese-wall, two-stage-downgrade)")]
    Unknown(String),
}

#[derive(Debug, Clone)]
pub struct NamedExample {
    pub name: &'static str,
    pub machine: Machine,
    pub policy: Policy,
    /// Verdict each method is expected to give for the whole machine.
    pub expected: Vec<(Method, Status)>,
    pub notes: &'static str,
}

impl NamedExample {
    pub fn expected_for(&self, method: Method) -> Option<Status> {
        self.expected
            .iter()
            .find(|(m, _)| *m == method)
            .map(|&(_, s)| s)
    }
}

pub fn example(name: &str) -> Result<NamedExample, ExampleError> {
    match name {
        "xor" => Ok(xor()),
        "bookkeeping" => Ok(bookkeeping()),
        "chinese-wall" => Ok(chinese_wall()),
        "two-stage-downgrade" => Ok(two_stage_downgrade()),
        other => Err(ExampleError::Unknown(other.to_string())),
    }
}

fn policy(text: &str, sig: &Signature) -> Policy {
    parse_policy(text, sig).expect("built-in policies parse")
}

fn xor_signature() -> Signature {
    Signature::new(
        ["u", "v", "w"],
        [
            ActionDecl::new("a_u", "u", "Au"),
            ActionDecl::new("a_v", "v", "Av"),
            ActionDecl::new("a_w", "w", "Aw"),
        ],
    )
    .expect("valid")
}

const XOR_POLICY: &str = "deny Av -> u;\ndeny Aw -> v;\ndeny Au -> w;\n";

fn xor_machine(obs_w_is_x: bool) -> Machine {
    let sig = xor_signature();
    Machine::explore(
        sig,
        (0u8, 0u8),
        |&(x, y), a| match a.index() {
            0 => (x ^ 1, y),
            1 => (x, y ^ 1),
            _ => (x, y),
        },
        |u, &(x, y)| match u.index() {
            0 => "-".to_string(),
            1 => x.to_string(),
            _ if obs_w_is_x => x.to_string(),
            _ => y.to_string(),
        },
        |&(x, y)| format!("({x},{y})"),
    )
    .expect("valid")
}

/// Three users over two bits: `a_u` flips x, `a_v` flips y, `a_w` does
/// nothing; v observes x and w observes y. Secure under the three strict
/// assertions although the induced flow relation is not transitive.
pub fn xor() -> NamedExample {
    let machine = xor_machine(false);
    let policy = policy(XOR_POLICY, machine.signature());
    NamedExample {
        name: "xor",
        machine,
        policy,
        expected: vec![
            (Method::Oracle, Status::Secure),
            (Method::UnwindingStrict, Status::Secure),
            (Method::Safety, Status::Secure),
        ],
        notes: "Two-bit machine with exclusive-or steps; strict policy u -> v -> w.",
    }
}

/// The xor machine with w observing x instead of y, so that `a_u` leaks
/// to w after one step.
pub fn xor_mutant() -> NamedExample {
    let machine = xor_machine(true);
    let policy = policy(XOR_POLICY, machine.signature());
    NamedExample {
        name: "xor-mutant",
        machine,
        policy,
        expected: vec![
            (Method::Oracle, Status::Insecure),
            (Method::UnwindingStrict, Status::Insecure),
            (Method::Safety, Status::Insecure),
        ],
        notes: "xor with obs_w((x,y)) = x; witness (w, a_u).",
    }
}

pub const BOOKKEEPING_EMPLOYEES: usize = 2;
pub const BOOKKEEPING_ENTRIES: usize = 2;
pub const BOOKKEEPING_VALUES: u8 = 2;

/// Employee view in the bookkeeping machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    Bottom,
    Ready,
    Succ,
    Deny,
    Value(u8),
}

impl View {
    fn label(self) -> String {
        match self {
            View::Bottom => "bot".into(),
            View::Ready => "ready".into(),
            View::Succ => "succ".into(),
            View::Deny => "deny".into(),
            View::Value(v) => v.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum BkAction {
    Read { i: usize, x: usize },
    Write { i: usize, x: usize, v: u8 },
    Book { i: usize },
}

fn bookkeeping_actions() -> Vec<BkAction> {
    let mut out = Vec::new();
    for i in 0..BOOKKEEPING_EMPLOYEES {
        for x in 0..BOOKKEEPING_ENTRIES {
            out.push(BkAction::Read { i, x });
        }
        for x in 0..BOOKKEEPING_ENTRIES {
            for v in 0..BOOKKEEPING_VALUES {
                out.push(BkAction::Write { i, x, v });
            }
        }
        out.push(BkAction::Book { i });
    }
    out
}

type BkState = ([View; BOOKKEEPING_EMPLOYEES], [u8; BOOKKEEPING_ENTRIES]);

fn bk_step(s: &BkState, a: BkAction) -> BkState {
    let (mut views, mut db) = *s;
    let i = match a {
        BkAction::Read { i, .. } | BkAction::Write { i, .. } | BkAction::Book { i } => i,
    };
    views[i] = match a {
        BkAction::Read { x, .. } => View::Value(db[x]),
        BkAction::Write { x, v, .. } => {
            if views[i] == View::Ready {
                db[x] = v;
                View::Succ
            } else {
                View::Deny
            }
        }
        BkAction::Book { .. } => View::Ready,
    };
    for (j, view) in views.iter_mut().enumerate() {
        if j != i {
            *view = View::Bottom;
        }
    }
    (views, db)
}

/// A database B shared by two employees. Each employee reads entries,
/// writes values in {0,1}, and books a write slot. A write succeeds only
/// right after the writer's own bookkeeping action; every action resets
/// the other employees' views.
pub fn bookkeeping() -> NamedExample {
    let acts = bookkeeping_actions();
    let mut users: Vec<String> = (1..=BOOKKEEPING_EMPLOYEES)
        .map(|i| format!("E{i}"))
        .collect();
    users.push("B".into());
    let decls = acts.iter().map(|a| match *a {
        BkAction::Read { i, x } => ActionDecl::new(
            format!("r{}_x{}", i + 1, x + 1),
            format!("E{}", i + 1),
            format!("R{}", i + 1),
        ),
        BkAction::Write { i, x, v } => ActionDecl::new(
            format!("w{}_x{}_{v}", i + 1, x + 1),
            format!("E{}", i + 1),
            format!("W{}", i + 1),
        ),
        BkAction::Book { i } => ActionDecl::new(
            format!("bk{}", i + 1),
            format!("E{}", i + 1),
            format!("BK{}", i + 1),
        ),
    });
    let sig = Signature::new(users, decls.collect::<Vec<_>>()).expect("valid");
    let machine = Machine::explore(
        sig,
        (
            [View::Bottom; BOOKKEEPING_EMPLOYEES],
            [0u8; BOOKKEEPING_ENTRIES],
        ),
        |s, a: ActionId| bk_step(s, acts[a.index()]),
        |u: UserId, (views, db): &BkState| {
            if u.index() < BOOKKEEPING_EMPLOYEES {
                views[u.index()].label()
            } else {
                db.iter().map(u8::to_string).collect::<Vec<_>>().join("")
            }
        },
        |(views, db): &BkState| {
            let v = views
                .iter()
                .map(|v| v.label())
                .collect::<Vec<_>>()
                .join(",");
            let d = db.iter().map(u8::to_string).collect::<Vec<_>>().join(",");
            format!("[{v}|{d}]")
        },
    )
    .expect("valid");
    let mut text = String::new();
    for i in 1..=BOOKKEEPING_EMPLOYEES {
        text.push_str(&format!("deny R{i} -> B;\n"));
        text.push_str(&format!("deny W{i} -> B pre downgrade [BK{i}];\n"));
        text.push_str(&format!("deny BK{i} -> B post [W{i}];\n"));
    }
    let policy = policy(&text, machine.signature());
    NamedExample {
        name: "bookkeeping",
        machine,
        policy,
        expected: vec![
            (Method::Oracle, Status::Secure),
            (Method::UnwindingMixed, Status::Unknown),
        ],
        notes: "Two employees, two entries, values {0,1}. Writes need an immediately preceding \
                bookkeeping action; bookkeeping not followed by a write must be invisible to B. \
                The policy is neither left- nor right-consistent. The mixed unwinding cannot \
                certify B: a read clears the reader's ready view, so no unwinding relation \
                relates a ready state to its read-successor.",
    }
}

/// Company u, company v and one consultant c. The consultant's first
/// message commits it to that company: later messages to the other one
/// are dropped. Companies see whether a consultant message ever arrived;
/// the consultant sees the last reply that reached it, and replies only
/// reach it from the company it is committed to.
fn chinese_wall_machine() -> Machine {
    let sig = Signature::new(
        ["u", "v", "c"],
        [
            ActionDecl::new("reply_u", "u", "Au"),
            ActionDecl::new("reply_v", "v", "Av"),
            ActionDecl::new("msg_u", "c", "Acu"),
            ActionDecl::new("msg_v", "c", "Acv"),
        ],
    )
    .expect("valid");
    // (committed to: 0 none / 1 u / 2 v, u got a message, v got one, last reply)
    Machine::explore(
        sig,
        (0u8, false, false, 0u8),
        |&(wall, gu, gv, last), a| match a.index() {
            0 if wall == 1 => (wall, gu, gv, 1),
            1 if wall == 2 => (wall, gu, gv, 2),
            2 if wall != 2 => (1, true, gv, last),
            3 if wall != 1 => (2, gu, true, last),
            _ => (wall, gu, gv, last),
        },
        |u, &(_, gu, gv, last)| match u.index() {
            0 => u8::from(gu).to_string(),
            1 => u8::from(gv).to_string(),
            _ => ["none", "u", "v"][last as usize].to_string(),
        },
        |&(wall, gu, gv, last)| format!("w{wall}{}{}r{last}", u8::from(gu), u8::from(gv)),
    )
    .expect("valid")
}

const CHINESE_WALL_POLICY: &str = "\
deny Au -> v;
deny Av -> u;
deny Acu -> v;
deny Acv -> u;
deny Acv -> v pre upgrade [Acu <>];
deny Acu -> u pre upgrade [Acv <>];
deny Au -> c pre downgrade [Acu <>];
deny Av -> c pre downgrade [Acv <>];
";

const CHINESE_WALL_LITERAL: &str = "\
deny Au -> v;
deny Av -> u;
deny Acu -> v;
deny Acv -> u;
deny Acu -> u pre downgrade [Acv];
deny Acv -> v pre downgrade [Acu];
deny Au -> c pre downgrade [Acu];
deny Av -> c pre downgrade [Acv];
";

/// The conflict-of-interest policy on a small message machine. Contacting
/// one company upgrades the denial of the consultant's messages to the
/// other company, permanently; a company's replies reach the consultant
/// only once the consultant has contacted it.
pub fn chinese_wall() -> NamedExample {
    let machine = chinese_wall_machine();
    let policy = policy(CHINESE_WALL_POLICY, machine.signature());
    NamedExample {
        name: "chinese-wall",
        machine,
        policy,
        expected: vec![
            (Method::Oracle, Status::Secure),
            (Method::UnwindingPre, Status::Unknown),
            (Method::Safety, Status::Secure),
        ],
        notes: "Upgrade assertions toward the opposite company, with the trigger remembered \
                for the rest of the run. The policy is not left-consistent, and pre unwinding \
                cannot certify u and v.",
    }
}

/// The same machine with the literal variant of the assertions: downgrade
/// markers, own-company targets, and a trigger that counts only when it
/// immediately precedes.
pub fn chinese_wall_as_printed() -> NamedExample {
    let machine = chinese_wall_machine();
    let policy = policy(CHINESE_WALL_LITERAL, machine.signature());
    NamedExample {
        name: "chinese-wall",
        machine,
        policy,
        expected: vec![
            (Method::Oracle, Status::Insecure),
            (Method::Safety, Status::Insecure),
        ],
        notes: "Literal variant: a consultant's first message to u is denied toward u itself \
                unless it directly follows a message to v, which this machine violates.",
    }
}

/// High user H writes a secret bit. D1 snapshots the current secret for
/// approval, D2 releases the snapshot to L if D1 approved since the last
/// release. L can clear its view.
pub fn two_stage_downgrade() -> NamedExample {
    let sig = Signature::new(
        ["H", "D1", "D2", "L"],
        [
            ActionDecl::new("h0", "H", "AH"),
            ActionDecl::new("h1", "H", "AH"),
            ActionDecl::new("d1", "D1", "AD1"),
            ActionDecl::new("d2", "D2", "AD2"),
            ActionDecl::new("l", "L", "AL"),
        ],
    )
    .expect("valid");
    // (secret, approved snapshot, low view)
    let machine = Machine::explore(
        sig,
        (0u8, None::<u8>, 0u8),
        |&(secret, snap, low), a| match a.index() {
            0 => (0, snap, low),
            1 => (1, snap, low),
            2 => (secret, Some(secret), low),
            3 => match snap {
                Some(v) => (secret, None, v),
                None => (secret, snap, low),
            },
            _ => (secret, snap, 0),
        },
        |u, &(secret, snap, low)| match u.index() {
            0 | 1 => secret.to_string(),
            2 => snap.map_or("-".to_string(), |v| v.to_string()),
            _ => low.to_string(),
        },
        |&(secret, snap, low)| {
            format!(
                "s{secret}a{}l{low}",
                snap.map_or("-".to_string(), |v| v.to_string())
            )
        },
    )
    .expect("valid");
    let policy = policy("deny AH -> L post [<>AD1 <>AD2];\n", machine.signature());
    NamedExample {
        name: "two-stage-downgrade",
        machine,
        policy,
        expected: vec![
            (Method::Oracle, Status::Secure),
            (Method::UnwindingPost, Status::Secure),
        ],
        notes: "H may influence L only through D1 followed by D2, in that order. D1 and D2 are \
                otherwise unrestricted, which intransitive noninterference cannot express.",
    }
}

/// Every example plus the variants, for listing.
pub fn all() -> Vec<NamedExample> {
    NAMES.iter().map(|n| example(n).expect("known")).collect()
}
