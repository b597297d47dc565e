mod report;

use std::fs;
use std::io::{IsTerminal, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use condni::automata::{build_product, safety_verdict};
use condni::examples::{self, NamedExample};
use condni::machine_file::{machine_to_toml, parse_machine, parse_signature};
use condni::oracle::Oracle;
use condni::par::Exec;
use condni::policy::{
    compare_conditions, general_pre_dfa, parse_policy, AssertionOrder, ConditionClass, Policy,
};
use condni::semantics::{
    encode_intransitive, induced_interference, left_consistent_bounded_with, purge,
    right_consistent_bounded_with, Consistency, ConsistencyError, InterferenceRelation,
};
use condni::unwinding::{
    check_user, coarsest_obs_bisim, compute_post_family, suffix_closure, Hints, PostScope,
    DEFAULT_SUFFIX_CAP,
};
use condni::verdict::{Status, Verdict};
use condni::words::DEFAULT_WORD_LIMIT;
use condni::{Machine, Signature, UserId};

use report::*;

const EXIT_INSECURE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "condni",
    version,
    about = "Check finite machines against conditional noninterference policies"
)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Bruteforce,
    Unwinding,
    Safety,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConsistencyArg {
    Auto,
    AssumeLeft,
    AssumeRight,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Check a machine against a policy.
    Check {
        /// Machine file (TOML).
        machine: PathBuf,
        /// Policy file.
        policy: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        /// Trace length bound for the brute-force oracle and the
        /// consistency checks.
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// How to learn left/right consistency, which decides whether
        /// unwinding failures may be reported as INSECURE.
        #[arg(long, value_enum, default_value = "auto")]
        consistency: ConsistencyArg,
        /// Write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Purge a trace for one user.
    Purge {
        /// Machine or signature file.
        #[arg(long)]
        signature: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        user: String,
        /// Space-separated action names; empty for the empty trace.
        trace: String,
    },
    /// Encode an interference relation as a post-conditional policy.
    Encode {
        relation: PathBuf,
        /// Machine or signature file.
        #[arg(long)]
        signature: PathBuf,
    },
    /// Compare two pre-conditional assertions by the languages that trigger purging.
    Order {
        #[arg(long)]
        signature: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// `PART->USER` or a 1-based position in the policy.
        first: String,
        second: String,
    },
    /// Export the product machine for one user as a graph.
    Product {
        machine: PathBuf,
        policy: PathBuf,
        #[arg(long)]
        user: String,
    },
    /// Export the automaton of one pre-conditional assertion as a graph.
    Dfa {
        #[arg(long)]
        signature: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        assertion: String,
    },
    /// Dump the computed unwinding relations for one user.
    Relations {
        machine: PathBuf,
        policy: PathBuf,
        #[arg(long)]
        user: String,
    },
    /// Built-in example models.
    Examples {
        #[command(subcommand)]
        action: ExamplesCmd,
    },
}

#[derive(Subcommand)]
enum ExamplesCmd {
    List,
    /// Write `<name>.machine.toml` and `<name>.policy` into a directory.
    Emit {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Chinese Wall only: emit the literal variant of the assertions.
        #[arg(long)]
        as_printed: bool,
    },
}

struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<u8, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn with_path<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, InputError> {
    r.map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_machine(path: &Path) -> Result<(Machine, String), InputError> {
    let text = read(path)?;
    let built = with_path(path, parse_machine(&text))?;
    for w in &built.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok((built.machine, text))
}

fn load_signature(path: &Path) -> Result<Signature, InputError> {
    with_path(path, parse_signature(&read(path)?))
}

fn load_policy(path: &Path, sig: &Signature) -> Result<(Policy, String), InputError> {
    let text = read(path)?;
    Ok((with_path(path, parse_policy(&text, sig))?, text))
}

fn user_arg(sig: &Signature, name: &str) -> Result<UserId, InputError> {
    sig.user(name)
        .ok_or_else(|| InputError(format!("unknown user `{name}`")))
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

struct Style(bool);

impl Style {
    fn status(&self, s: Status) -> String {
        if !self.0 {
            return s.label().to_string();
        }
        let code = match s {
            Status::Secure => "32",
            Status::Insecure => "31",
            Status::Unknown => "33",
        };
        format!("\x1b[{code}m{}\x1b[0m", s.label())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors share the input-error exit code; clap's own is 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let style = Style(
        std::io::stdout().is_terminal() && std::env::var("NI_COLOR").map_or(true, |v| v != "0"),
    );
    let result = match cli.command {
        Command::Check {
            machine,
            policy,
            method,
            max_len,
            consistency,
            report,
        } => cmd_check(
            &machine,
            &policy,
            method,
            max_len,
            consistency,
            report.as_deref(),
            exec,
            &style,
        ),
        Command::Purge {
            signature,
            policy,
            user,
            trace,
        } => cmd_purge(&signature, &policy, &user, &trace),
        Command::Encode {
            relation,
            signature,
        } => cmd_encode(&relation, &signature),
        Command::Order {
            signature,
            policy,
            first,
            second,
        } => cmd_order(&signature, &policy, &first, &second),
        Command::Product {
            machine,
            policy,
            user,
        } => cmd_product(&machine, &policy, &user),
        Command::Dfa {
            signature,
            policy,
            assertion,
        } => cmd_dfa(&signature, &policy, &assertion),
        Command::Relations {
            machine,
            policy,
            user,
        } => cmd_relations(&machine, &policy, &user),
        Command::Examples { action } => cmd_examples(action),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn consistency_result(
    r: Result<Consistency, ConsistencyError>,
    sig: &Signature,
    bound: usize,
) -> ConsistencyResult {
    match r {
        Ok(c) => ConsistencyResult {
            holds: c.holds.to_string(),
            bound: c.bound,
            counterexample: c.witness.map(|w| ConsistencyCounterexample {
                user: sig.user_name(w.user).to_string(),
                alpha: sig.format_trace(&w.alpha),
                alpha_post: sig.format_trace(&w.alpha_post),
            }),
            note: None,
        },
        Err(e) => ConsistencyResult {
            holds: "undetermined".into(),
            bound,
            counterexample: None,
            note: Some(e.to_string()),
        },
    }
}

fn method_result(v: &Verdict, m: &Machine, policy: &Policy) -> MethodResult {
    let sig = m.signature();
    MethodResult {
        method: v.method.label().into(),
        status: v.status.label().into(),
        witness: v.witness.as_ref().map(|w| {
            let p = purge(policy, sig, &w.trace, w.user);
            WitnessReport {
                trace: sig.format_trace(&w.trace),
                purged: sig.format_trace(&p.kept),
                removed_positions: p.removed_positions.clone(),
                obs_full: m.output_name(m.obs(w.user, m.run(&w.trace))).into(),
                obs_purged: m.output_name(m.obs(w.user, m.run(&p.kept))).into(),
            }
        }),
        bound: v.bound,
        diagnostic: v.diagnostic.clone(),
        note: v.note.clone(),
    }
}

fn unsupported(method: &str, reason: String) -> MethodResult {
    MethodResult {
        method: method.into(),
        status: Status::Unknown.label().into(),
        witness: None,
        bound: None,
        diagnostic: None,
        note: Some(format!(
            "not applicable: {}",
            reason.trim_start_matches("unsupported: ")
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    machine_path: &Path,
    policy_path: &Path,
    method: MethodArg,
    max_len: usize,
    consistency: ConsistencyArg,
    report_path: Option<&Path>,
    exec: Exec,
    style: &Style,
) -> CmdResult {
    let (m, machine_text) = load_machine(machine_path)?;
    let sig = m.signature();
    let (policy, policy_text) = load_policy(policy_path, sig)?;

    let (mode, left, right) = match consistency {
        ConsistencyArg::Auto => {
            let bound = max_len.max(1);
            let l = left_consistent_bounded_with(&policy, sig, bound, exec, DEFAULT_WORD_LIMIT);
            let r = right_consistent_bounded_with(&policy, sig, bound, exec, DEFAULT_WORD_LIMIT);
            (
                "auto",
                Some(consistency_result(l, sig, bound)),
                Some(consistency_result(r, sig, bound)),
            )
        }
        ConsistencyArg::AssumeLeft => ("assume-left", None, None),
        ConsistencyArg::AssumeRight => ("assume-right", None, None),
        ConsistencyArg::None => ("none", None, None),
    };
    let holds = |c: &Option<ConsistencyResult>| c.as_ref().is_some_and(|c| c.holds == "true");
    let not_left = left.as_ref().is_some_and(|c| c.holds == "false");
    let hints = Hints {
        left_consistent: consistency == ConsistencyArg::AssumeLeft || holds(&left),
        right_consistent: consistency == ConsistencyArg::AssumeRight || holds(&right),
    };

    let run_oracle = matches!(method, MethodArg::Bruteforce | MethodArg::All);
    let run_unwinding = matches!(method, MethodArg::Unwinding | MethodArg::All);
    let run_safety = matches!(method, MethodArg::Safety | MethodArg::All);
    let oracle = if run_oracle {
        Some(Oracle::new(&m, &policy, max_len, exec, DEFAULT_WORD_LIMIT))
    } else {
        None
    };

    let users: Vec<UserId> = sig.users().collect();
    // The oracle parallelizes internally; the symbolic checks per user.
    let oracle_results: Vec<Option<MethodResult>> = users
        .iter()
        .map(|&u| {
            oracle.as_ref().map(|o| match o {
                Ok(o) => method_result(&o.check(&[u]), &m, &policy),
                Err(e) => unsupported("bruteforce", e.to_string()),
            })
        })
        .collect();
    let symbolic: Vec<Vec<MethodResult>> = exec.map_slice(&users, |&u| {
        let mut out = Vec::new();
        if run_unwinding {
            out.push(match check_user(&m, &policy, u, hints) {
                Ok(v) => method_result(&v, &m, &policy),
                Err(e) => unsupported("unwinding", e.to_string()),
            });
        }
        if run_safety {
            out.push(match safety_verdict(&m, &policy, u) {
                Ok(v) => {
                    let mut r = method_result(&v, &m, &policy);
                    if not_left {
                        let flag = "policy is not left-consistent; the product still purges every trace exactly, so the answer stands";
                        r.note = Some(match r.note {
                            Some(n) => format!("{n}; {flag}"),
                            None => flag.to_string(),
                        });
                    }
                    r
                }
                Err(e) => unsupported("safety", e.to_string()),
            });
        }
        out
    });

    let mut user_reports = Vec::new();
    for ((&u, o), rest) in users.iter().zip(oracle_results).zip(symbolic) {
        let mut results = Vec::new();
        results.extend(o);
        results.extend(rest);
        user_reports.push(UserReport {
            user: sig.user_name(u).into(),
            results,
        });
    }

    let statuses: Vec<&str> = user_reports
        .iter()
        .flat_map(|r| r.results.iter().map(|x| x.status.as_str()))
        .collect();
    let (overall, code) = if statuses.contains(&"INSECURE") {
        (Status::Insecure, EXIT_INSECURE)
    } else if statuses.contains(&"UNKNOWN") {
        (Status::Unknown, EXIT_UNKNOWN)
    } else {
        (Status::Secure, 0)
    };

    let induced = induced_interference(&policy, sig);
    let report = Report {
        tool: "condni",
        version: env!("CARGO_PKG_VERSION"),
        inputs: Inputs {
            machine: InputFile {
                path: machine_path.display().to_string(),
                sha256: sha256(&machine_text),
            },
            policy: InputFile {
                path: policy_path.display().to_string(),
                sha256: sha256(&policy_text),
            },
        },
        settings: Settings {
            method: method_label(method).into(),
            max_len,
            consistency: mode.into(),
            exec: if exec.is_parallel() {
                "parallel"
            } else {
                "sequential"
            }
            .into(),
        },
        policy: PolicyMeta {
            assertions: policy.len(),
            classes: policy
                .classes()
                .iter()
                .map(|c| format!("{c:?}").to_lowercase())
                .collect(),
            induced_relation: induced
                .pairs()
                .into_iter()
                .map(|(a, b)| format!("{} -> {}", sig.user_name(a), sig.user_name(b)))
                .collect(),
            suffix_closure_sizes: users
                .iter()
                .map(|&u| SuffixSize {
                    user: sig.user_name(u).into(),
                    size: suffix_closure(&policy, u).len(),
                })
                .collect(),
        },
        consistency: ConsistencyReport {
            mode: mode.into(),
            left,
            right,
        },
        users: user_reports,
        summary: Summary {
            status: overall.label().into(),
            exit_code: code as i32,
        },
    };

    print_summary(&report, style);
    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        with_path(path, fs::write(path, json + "\n"))?;
    }
    Ok(code)
}

fn method_label(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Bruteforce => "bruteforce",
        MethodArg::Unwinding => "unwinding",
        MethodArg::Safety => "safety",
        MethodArg::All => "all",
    }
}

fn status_of(label: &str) -> Status {
    match label {
        "SECURE" => Status::Secure,
        "INSECURE" => Status::Insecure,
        _ => Status::Unknown,
    }
}

fn print_summary(report: &Report, style: &Style) {
    let mut out = std::io::stdout().lock();
    if let (Some(l), Some(r)) = (&report.consistency.left, &report.consistency.right) {
        let _ = writeln!(
            out,
            "consistency (bound {}): left {}, right {}",
            l.bound, l.holds, r.holds
        );
    }
    for u in &report.users {
        for r in &u.results {
            let mut line = format!(
                "{:<10} {:<18} {}",
                u.user,
                r.method,
                style.status(status_of(&r.status))
            );
            if let Some(w) = &r.witness {
                line.push_str(&format!(
                    "  witness: {}",
                    if w.trace.is_empty() { "ε" } else { &w.trace }
                ));
            }
            if let Some(d) = &r.diagnostic {
                line.push_str(&format!("\n{:<10}   {d}", ""));
            }
            if let Some(n) = r
                .note
                .as_deref()
                .filter(|n| n.starts_with("not applicable"))
            {
                line.push_str(&format!("  ({n})"));
            }
            let _ = writeln!(out, "{line}");
        }
    }
    let _ = writeln!(
        out,
        "overall: {}",
        style.status(status_of(&report.summary.status))
    );
}

fn cmd_purge(sig_path: &Path, policy_path: &Path, user: &str, trace: &str) -> CmdResult {
    let sig = load_signature(sig_path)?;
    let (policy, _) = load_policy(policy_path, &sig)?;
    let u = user_arg(&sig, user)?;
    let alpha = sig.parse_trace(trace)?;
    let r = purge(&policy, &sig, &alpha, u);
    println!("kept: {}", sig.format_trace(&r.kept));
    let removed = r
        .removed_positions
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>();
    println!("removed positions: {}", removed.join(" "));
    Ok(0)
}

fn cmd_encode(rel_path: &Path, sig_path: &Path) -> CmdResult {
    let sig = load_signature(sig_path)?;
    let rel = with_path(
        rel_path,
        InterferenceRelation::parse(&read(rel_path)?, &sig),
    )?;
    let policy = encode_intransitive(&rel, &sig)?;
    print!("{}", policy.to_dsl(&sig)?);
    Ok(0)
}

fn cmd_order(sig_path: &Path, policy_path: &Path, first: &str, second: &str) -> CmdResult {
    let sig = load_signature(sig_path)?;
    let (policy, _) = load_policy(policy_path, &sig)?;
    let t1 = policy.find(&sig, first)?;
    let t2 = policy.find(&sig, second)?;
    let word = |w: &[condni::ActionId]| {
        if w.is_empty() {
            "ε".to_string()
        } else {
            sig.format_trace(w)
        }
    };
    if t1.controlled != t2.controlled || t1.target != t2.target {
        println!("note: the assertions govern different partition/user pairs; comparing their conditions only");
    }
    match compare_conditions(t1, t2, &sig)? {
        AssertionOrder::Equivalent => println!("{first} ≡ {second}"),
        AssertionOrder::Less { witness } => {
            println!("{first} < {second}");
            println!("purged only by {second} after: {}", word(&witness));
        }
        AssertionOrder::Greater { witness } => {
            println!("{first} > {second}");
            println!("purged only by {first} after: {}", word(&witness));
        }
        AssertionOrder::Incomparable {
            only_first,
            only_second,
        } => {
            println!("{first} and {second} are incomparable");
            println!("purged only by {first} after: {}", word(&only_first));
            println!("purged only by {second} after: {}", word(&only_second));
        }
    }
    Ok(0)
}

fn cmd_product(machine_path: &Path, policy_path: &Path, user: &str) -> CmdResult {
    let (m, _) = load_machine(machine_path)?;
    let (policy, _) = load_policy(policy_path, m.signature())?;
    let u = user_arg(m.signature(), user)?;
    let product = build_product(&m, &policy, u)?;
    print!("{}", product.to_graph_text(&m));
    Ok(0)
}

fn cmd_dfa(sig_path: &Path, policy_path: &Path, label: &str) -> CmdResult {
    let sig = load_signature(sig_path)?;
    let (policy, _) = load_policy(policy_path, &sig)?;
    let t = policy.find(&sig, label)?;
    print!("{}", general_pre_dfa(t, &sig)?.to_graph_text(&sig));
    Ok(0)
}

fn cmd_relations(machine_path: &Path, policy_path: &Path, user: &str) -> CmdResult {
    let (m, _) = load_machine(machine_path)?;
    let sig = m.signature();
    let (policy, _) = load_policy(policy_path, sig)?;
    let u = user_arg(sig, user)?;
    if policy.classes_toward(u).contains(&ConditionClass::Post) {
        let post_part = policy.filter(|t| t.target != u || t.class() != ConditionClass::Pre);
        let family = compute_post_family(&m, &post_part, u, PostScope::Lazy, DEFAULT_SUFFIX_CAP)?;
        print!("{}", family.dump(&m));
    } else {
        for class in coarsest_obs_bisim(&m, u).classes() {
            let names: Vec<&str> = class.iter().map(|&s| m.state_name(s)).collect();
            println!("{} {{}} {{{}}}", sig.user_name(u), names.join(","));
        }
    }
    Ok(0)
}

fn emit(ex: &NamedExample, dir: &Path) -> Result<(), InputError> {
    fs::create_dir_all(dir)?;
    let sig = ex.machine.signature();
    let mpath = dir.join(format!("{}.machine.toml", ex.name));
    let ppath = dir.join(format!("{}.policy", ex.name));
    with_path(&mpath, fs::write(&mpath, machine_to_toml(&ex.machine)))?;
    let mut policy = String::new();
    for line in ex.notes.split(". ") {
        policy.push_str(&format!("# {}\n", line.trim_end_matches('.')));
    }
    policy.push_str(&ex.policy.to_dsl(sig)?);
    with_path(&ppath, fs::write(&ppath, policy))?;
    println!("{}", mpath.display());
    println!("{}", ppath.display());
    Ok(())
}

fn cmd_examples(action: ExamplesCmd) -> CmdResult {
    match action {
        ExamplesCmd::List => {
            for ex in examples::all() {
                let expected = ex
                    .expected
                    .iter()
                    .map(|(m, s)| format!("{}={}", m.label(), s.label()))
                    .collect::<Vec<_>>();
                println!("{:<20} {}", ex.name, expected.join(" "));
            }
            Ok(0)
        }
        ExamplesCmd::Emit {
            name,
            out,
            as_printed,
        } => {
            let ex = match (name.as_str(), as_printed) {
                ("chinese-wall", true) => examples::chinese_wall_as_printed(),
                (_, true) => {
                    return Err(InputError(
                        "--as-printed only applies to chinese-wall".into(),
                    ))
                }
                _ => examples::example(&name)?,
            };
            emit(&ex, &out)?;
            Ok(0)
        }
    }
}
