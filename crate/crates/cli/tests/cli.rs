use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use condni::examples;
use condni::machine_file::{machine_to_toml, signature_to_toml};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_condni"));
    c.env("NI_COLOR", "0");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn emit(dir: &TempDir, name: &str) -> (String, String) {
    let o = run(&[
        "examples",
        "emit",
        name,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = dir.path().join(format!("{name}.machine.toml"));
    let p = dir.path().join(format!("{name}.policy"));
    (
        m.to_str().unwrap().to_string(),
        p.to_str().unwrap().to_string(),
    )
}

#[test]
fn xor_all_methods_secure() {
    let dir = TempDir::new().unwrap();
    let (m, p) = emit(&dir, "xor");
    let o = run(&["check", &m, &p]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("overall: SECURE"));
    assert!(!out.contains('\x1b'));
}

#[test]
fn mutant_safety_reports_witness() {
    let dir = TempDir::new().unwrap();
    let ex = examples::xor_mutant();
    let m = write(dir.path(), "mutant.toml", &machine_to_toml(&ex.machine));
    let p = write(
        dir.path(),
        "mutant.policy",
        &ex.policy.to_dsl(ex.machine.signature()).unwrap(),
    );
    let report = dir.path().join("r.json");
    let o = bin()
        .args(["check", "--method", "safety"])
        .arg(&m)
        .arg(&p)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("w          safety             INSECURE  witness: a_u"),
        "{}",
        stdout(&o)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let w = &json["users"][2]["results"][0]["witness"];
    assert_eq!(w["trace"], "a_u");
    assert_eq!(w["purged"], "ε");
    assert_ne!(w["obs_full"], w["obs_purged"]);
}

#[test]
fn post_policy_with_safety_is_unknown() {
    let dir = TempDir::new().unwrap();
    let (m, p) = emit(&dir, "two-stage-downgrade");
    let o = run(&["check", "--method", "safety", &m, &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("not applicable: post-conditional assertion AH -> L"));
}

#[test]
fn input_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let (m, _) = emit(&dir, "xor");
    let bad = write(dir.path(), "bad.policy", "deny Nope -> u;\n");
    let o = run(&["check", &m, bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.policy"));
    let o = run(&["check", "/nonexistent/machine.toml", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["check", "--method", "magic", &m, &m]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (m, p) = emit(&dir, "chinese-wall");
    let r1 = dir.path().join("a.json");
    let r2 = dir.path().join("b.json");
    let o1 = run(&["check", &m, &p, "--report", r1.to_str().unwrap()]);
    let o2 = run(&[
        "--sequential",
        "check",
        &m,
        &p,
        "--report",
        r2.to_str().unwrap(),
    ]);
    assert_eq!(o1.status.code(), Some(2));
    assert_eq!(o2.status.code(), Some(2));
    let a = fs::read_to_string(&r1).unwrap();
    let b = fs::read_to_string(&r2)
        .unwrap()
        .replace("\"sequential\"", "\"parallel\"");
    assert_eq!(a, b);
    let json: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(json["consistency"]["left"]["holds"], "false");
    assert!(json["inputs"]["machine"]["sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn literal_chinese_wall_witnesses_replay() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("literal");
    let o = run(&[
        "examples",
        "emit",
        "chinese-wall",
        "--as-printed",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m = out.join("chinese-wall.machine.toml");
    let p = out.join("chinese-wall.policy");
    let report = dir.path().join("r.json");
    let o = bin()
        .arg("check")
        .arg(&m)
        .arg(&p)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let mut seen = 0;
    for u in json["users"].as_array().unwrap() {
        let user = u["user"].as_str().unwrap();
        for r in u["results"].as_array().unwrap() {
            let w = &r["witness"];
            if w.is_null() {
                continue;
            }
            seen += 1;
            let trace = w["trace"].as_str().unwrap();
            let o = bin()
                .args(["purge", "--user", user, "--signature"])
                .arg(&m)
                .arg("--policy")
                .arg(&p)
                .arg(trace)
                .output()
                .unwrap();
            assert!(o.status.success());
            assert!(stdout(&o).starts_with(&format!("kept: {}\n", w["purged"].as_str().unwrap())));
            assert_ne!(w["obs_full"], w["obs_purged"]);
        }
    }
    assert!(seen >= 3);
}

#[test]
fn purge_examples() {
    let dir = TempDir::new().unwrap();
    let (m, p) = emit(&dir, "xor");
    let o = run(&[
        "purge",
        "--signature",
        &m,
        "--policy",
        &p,
        "--user",
        "w",
        "a_u a_v",
    ]);
    assert_eq!(stdout(&o), "kept: a_v\nremoved positions: 0\n");
    let o = run(&[
        "purge",
        "--signature",
        &m,
        "--policy",
        &p,
        "--user",
        "w",
        "",
    ]);
    assert_eq!(stdout(&o), "kept: ε\nremoved positions: \n");
    let (m, p) = emit(&dir, "bookkeeping");
    let o = run(&[
        "purge",
        "--signature",
        &m,
        "--policy",
        &p,
        "--user",
        "B",
        "bk1 w1_x1_1",
    ]);
    assert_eq!(stdout(&o), "kept: bk1 w1_x1_1\nremoved positions: \n");
    let o = run(&[
        "purge",
        "--signature",
        &m,
        "--policy",
        &p,
        "--user",
        "B",
        "bk1 zz",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn encode_chain_relation() {
    let dir = TempDir::new().unwrap();
    let sig = examples::xor().machine.signature().clone();
    let s = write(dir.path(), "sig.toml", &signature_to_toml(&sig));
    let r = write(dir.path(), "rel.txt", "u -> v\nv -> w\n");
    let o = bin()
        .arg("encode")
        .arg(&r)
        .arg("--signature")
        .arg(&s)
        .output()
        .unwrap();
    assert!(o.status.success());
    let mut lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    lines.sort();
    assert_eq!(
        lines,
        [
            "deny Au -> w post [<>Av];",
            "deny Av -> u;",
            "deny Aw -> u;",
            "deny Aw -> v;"
        ]
    );
    let total = write(
        dir.path(),
        "total.txt",
        "u -> v\nv -> u\nu -> w\nw -> u\nv -> w\nw -> v\n",
    );
    let o = bin()
        .arg("encode")
        .arg(&total)
        .arg("--signature")
        .arg(&s)
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "");
}

#[test]
fn order_of_pre_assertions() {
    let dir = TempDir::new().unwrap();
    let s = write(
        dir.path(),
        "sig.toml",
        r#"users = ["E", "B"]
actions = [
  { name = "p1", dom = "E", part = "P1" },
  { name = "p2", dom = "E", part = "P2" },
  { name = "q", dom = "E", part = "Q" },
]
"#,
    );
    let p = write(
        dir.path(),
        "p.policy",
        "deny P1 -> B pre regex (P1|P2|Q)*.P1.P2;\ndeny P2 -> B pre regex (P1|P2|Q)*.P2;\ndeny Q -> B post [P1];\n",
    );
    let o = bin()
        .arg("order")
        .arg("--signature")
        .arg(&s)
        .arg("--policy")
        .arg(&p)
        .args(["1", "2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o),
        "note: the assertions govern different partition/user pairs; comparing their conditions only\n1 < 2\npurged only by 2 after: p2\n"
    );
    let o = bin()
        .arg("order")
        .arg("--signature")
        .arg(&s)
        .arg("--policy")
        .arg(&p)
        .args(["1", "Q->B"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn graph_and_relation_exports() {
    let dir = TempDir::new().unwrap();
    let (m, p) = emit(&dir, "xor");
    let o = run(&["product", &m, &p, "--user", "w"]);
    let text = stdout(&o);
    assert!(text.starts_with("# product user=w composites=4\n"));
    assert_eq!(text.lines().filter(|l| l.contains(" -a_u-> ")).count(), 4);
    let o = run(&["dfa", "--signature", &m, "--policy", &p, "Au->w"]);
    assert!(o.status.success());
    let o = run(&["relations", &m, &p, "--user", "w"]);
    let mut lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    lines.sort();
    assert_eq!(lines, ["w {} {(0,0),(1,0)}", "w {} {(0,1),(1,1)}"]);

    let (m, p) = emit(&dir, "two-stage-downgrade");
    let o = run(&["relations", &m, &p, "--user", "L"]);
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("L ")));
    assert!(text.contains("L {ε} {"));
}

#[test]
fn examples_list_and_unknown() {
    let o = run(&["examples", "list"]);
    let out = stdout(&o);
    for n in examples::NAMES {
        assert!(out.contains(n));
    }
    let o = run(&["examples", "emit", "nope"]);
    assert_eq!(o.status.code(), Some(3));
}
