//! Seeded random machines and policies for differential testing.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActionDecl, Machine, PartId, Signature, StateId, UserId};
use crate::policy::{Assertion, Channel, ChannelKind, Condition, PartSet, Policy, PreRegex, Token};
use crate::semantics::{encode_intransitive, InterferenceRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_users: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 6,
            max_actions: 4,
            max_users: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub machine: Machine,
    pub policy: Policy,
}

fn random_signature(rng: &mut ChaCha8Rng, limits: &Limits) -> Signature {
    let na = rng.random_range(1..=limits.max_actions.max(1));
    let nu = rng
        .random_range(1..=limits.max_users.max(1))
        .min(na.max(2))
        .max(1);
    let nu = if na == 1 { nu.min(2) } else { nu.max(2) };
    let users: Vec<String> = (0..nu).map(|i| format!("u{i}")).collect();
    // Every user but possibly the last owns at least one action when there
    // are enough of them.
    let mut owner: Vec<usize> = (0..na)
        .map(|i| if i < nu { i } else { rng.random_range(0..nu) })
        .collect();
    owner.shuffle(rng);
    let per_action = rng.random_bool(0.5);
    let actions = (0..na)
        .map(|i| {
            let part = if per_action {
                format!("P{i}")
            } else {
                format!("P_{}", users[owner[i]])
            };
            ActionDecl::new(format!("a{i}"), users[owner[i]].clone(), part)
        })
        .collect::<Vec<_>>();
    Signature::new(users, actions).expect("generated signatures are valid")
}

fn random_machine(rng: &mut ChaCha8Rng, sig: Signature, limits: &Limits) -> Machine {
    let ns = rng.random_range(1..=limits.max_states.max(1));
    let na = sig.num_actions();
    let step = (0..ns * na)
        .map(|_| StateId::from_index(rng.random_range(0..ns)))
        .collect();
    let obs = sig
        .users()
        .map(|_| {
            // Mostly coarse observations, so that secure instances are common.
            let values = *[1usize, 2, 2, 3].choose(rng).expect("nonempty");
            (0..ns)
                .map(|_| rng.random_range(0..values).to_string())
                .collect()
        })
        .collect();
    let names = (0..ns).map(|i| format!("s{i}")).collect();
    Machine::from_tables(sig, names, StateId(0), step, obs)
        .expect("generated tables are valid")
        .machine
}

fn random_partset(rng: &mut ChaCha8Rng, sig: &Signature) -> PartSet {
    let parts: Vec<PartId> = sig.parts().collect();
    let mut set = PartSet::new();
    set.insert(*parts.choose(rng).expect("signatures have parts"));
    if parts.len() > 1 && rng.random_bool(0.25) {
        set.insert(*parts.choose(rng).expect("nonempty"));
    }
    set
}

fn random_channel(rng: &mut ChaCha8Rng, sig: &Signature, kind: ChannelKind) -> Channel {
    let len = rng.random_range(1..=2);
    let mut tokens = Vec::new();
    for _ in 0..len {
        let c = random_partset(rng, sig);
        match kind {
            ChannelKind::Pre => {
                tokens.push(Token::Set(c));
                if rng.random_bool(0.25) {
                    tokens.push(Token::Gap);
                }
            }
            ChannelKind::Post => {
                tokens.push(if rng.random_bool(0.6) {
                    Token::GapSet(c)
                } else {
                    Token::Set(c)
                });
            }
        }
    }
    Channel::new(kind, tokens).expect("generated channels are well formed")
}

fn random_regex(rng: &mut ChaCha8Rng, parts: &[PartId], depth: usize) -> PreRegex {
    if depth == 0 || rng.random_bool(0.3) {
        return if parts.is_empty() || rng.random_bool(0.1) {
            PreRegex::Empty
        } else {
            PreRegex::Lit(*parts.choose(rng).expect("nonempty"))
        };
    }
    match rng.random_range(0..3) {
        0 => PreRegex::union(
            random_regex(rng, parts, depth - 1),
            random_regex(rng, parts, depth - 1),
        ),
        1 => PreRegex::concat(
            random_regex(rng, parts, depth - 1),
            random_regex(rng, parts, depth - 1),
        ),
        _ => PreRegex::star(random_regex(rng, parts, depth - 1)),
    }
}

fn random_condition(rng: &mut ChaCha8Rng, sig: &Signature, class: usize) -> Condition {
    let chans = |rng: &mut ChaCha8Rng, kind| {
        let n = rng.random_range(1..=2);
        (0..n)
            .map(|_| random_channel(rng, sig, kind))
            .collect::<Vec<_>>()
    };
    match class {
        0 => Condition::Strict,
        1 => match rng.random_range(0..3) {
            0 => Condition::PreUpgrade(chans(rng, ChannelKind::Pre)),
            1 => Condition::PreDowngrade(chans(rng, ChannelKind::Pre)),
            _ => {
                let parts: Vec<PartId> = sig.parts().collect();
                Condition::PreRegex(random_regex(rng, &parts, 3))
            }
        },
        _ => Condition::Post(chans(rng, ChannelKind::Post)),
    }
}

/// A random machine with a random policy. The seed picks a dominant
/// condition class (strict, pre, post, or a mix) so that a batch of seeds
/// covers every class.
pub fn random_instance(seed: u64, limits: Limits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = random_signature(&mut rng, &limits);
    let machine = random_machine(&mut rng, sig.clone(), &limits);
    let mode = (seed % 4) as usize;
    let mut assertions = Vec::new();
    let mut toward = vec![0usize; sig.num_users()];
    for p in sig.parts() {
        for u in sig.users() {
            if sig.part_dom(p) == u || !rng.random_bool(0.5) {
                continue;
            }
            toward[u.index()] += 1;
            let class = match mode {
                // The first two assertions toward a user are one pre and one
                // post, so that mixed users are common.
                3 => match toward[u.index()] {
                    1 => 1,
                    2 => 2,
                    _ => rng.random_range(0..3),
                },
                m if rng.random_bool(0.75) => m,
                _ => 0,
            };
            let cond = random_condition(&mut rng, &sig, class);
            assertions
                .push(Assertion::new(p, u, cond).expect("generated conditions match their class"));
        }
    }
    Instance {
        seed,
        policy: Policy::new(&sig, assertions).expect("one assertion per pair"),
        machine,
    }
}

/// Rewrites `psi`, a regex over never-purged blocks, so that blocks in `k`
/// may be interleaved anywhere: the language becomes every history whose
/// projection away from `k` is in `L(psi)`.
fn interleave(psi: &PreRegex, k: &PreRegex) -> PreRegex {
    match psi {
        PreRegex::Empty => PreRegex::Empty,
        PreRegex::Lit(p) => PreRegex::concat(PreRegex::star(k.clone()), PreRegex::Lit(*p)),
        PreRegex::Union(l, r) => PreRegex::union(interleave(l, k), interleave(r, k)),
        PreRegex::Concat(l, r) => PreRegex::concat(interleave(l, k), interleave(r, k)),
        PreRegex::Star(i) => PreRegex::star(interleave(i, k)),
    }
}

/// A random machine with a pre-conditional policy that is left-consistent
/// by construction: every condition toward `u` depends only on actions
/// that no assertion toward `u` controls.
pub fn random_left_consistent_pre_instance(seed: u64, limits: Limits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1ef7);
    let sig = random_signature(&mut rng, &limits);
    let machine = random_machine(&mut rng, sig.clone(), &limits);
    let mut assertions = Vec::new();
    for u in sig.users() {
        let controlled: Vec<PartId> = sig
            .parts()
            .filter(|&p| sig.part_dom(p) != u && rng.random_bool(0.6))
            .collect();
        let free: Vec<PartId> = sig.parts().filter(|p| !controlled.contains(p)).collect();
        let k = PreRegex::any_of(controlled.iter().copied());
        for &p in &controlled {
            let cond = if rng.random_bool(0.3) {
                Condition::Strict
            } else {
                let psi = random_regex(&mut rng, &free, 3);
                let psi = if rng.random_bool(0.5) {
                    PreRegex::concat(PreRegex::star(PreRegex::any_of(free.iter().copied())), psi)
                } else {
                    psi
                };
                Condition::PreRegex(PreRegex::concat(
                    interleave(&psi, &k),
                    PreRegex::star(k.clone()),
                ))
            };
            assertions.push(Assertion::new(p, u, cond).expect("regex conditions are always valid"));
        }
    }
    Instance {
        seed,
        policy: Policy::new(&sig, assertions).expect("one assertion per pair"),
        machine,
    }
}

/// A random machine over one block per user with the policy encoding a
/// random reflexive interference relation.
pub fn random_encoded_post_instance(seed: u64, limits: Limits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1d7a_2a51);
    let nu = rng.random_range(2..=limits.max_users.clamp(2, 4));
    let users: Vec<String> = (0..nu).map(|i| format!("u{i}")).collect();
    let actions: Vec<ActionDecl> = (0..nu)
        .map(|i| ActionDecl::new(format!("a{i}"), users[i].clone(), format!("A_u{i}")))
        .collect();
    let sig = Signature::new(users, actions).expect("valid");
    let machine = random_machine(&mut rng, sig.clone(), &limits);
    let rel = random_relation(&mut rng, &sig);
    Instance {
        seed,
        policy: encode_intransitive(&rel, &sig).expect("per-user blocks and reflexive relation"),
        machine,
    }
}

/// A random reflexive relation over the signature's users.
pub fn random_relation(rng: &mut impl Rng, sig: &Signature) -> InterferenceRelation {
    let n = sig.num_users();
    let density = rng.random_range(0.2..0.7);
    let mut rel = InterferenceRelation::identity(n);
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(density) {
                rel.insert(UserId::from_index(u), UserId::from_index(v));
            }
        }
    }
    rel
}
