use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetlift"))
}

fn write(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hetlift-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> (bool, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (status.success(), String::from_utf8(stdout).unwrap(), String::from_utf8(stderr).unwrap())
}

const RUNNING: &str = "
series :- s.
series :- attends(P).
attends(P) :- at(P,A).
0.1::s.
0.3::at(P,A) :- person(P), attribute(A).
person(p1). person(p2).
attribute(a1). attribute(a2).
";

#[test]
fn query_all_engines() {
    let f = write("running.pl", RUNNING);
    // 1 - 0.9 * (0.7^2)^2
    let expected = 1.0 - 0.9 * 0.7f64.powi(4);
    for engine in ["lifted", "ve1", "ve", "enum"] {
        let (ok, out, err) = run(bin().args(["query"]).arg(&f).args(["--query", "series", "--engine", engine, "--csv"]));
        assert!(ok, "{engine}: {err}");
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("atom,value,prob"));
        let f_row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let t_row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!((f_row[0], f_row[1], t_row[1]), ("series", "f", "t"));
        let p: f64 = t_row[2].parse().unwrap();
        assert!((p - expected).abs() < 1e-12, "{engine}: {p}");
    }
}

#[test]
fn query_with_evidence_and_text_output() {
    let f = write("evidence.pl", RUNNING);
    let (ok, out, _) = run(bin().args(["query"]).arg(&f).args(["--query", "s", "--evidence", "series=t,at(p1,a1)=f"]));
    assert!(ok);
    assert!(out.starts_with("P(s = f) = "), "{out}");
    let (ok, _, err) = run(bin().args(["query"]).arg(&f).args(["--query", "s", "--evidence", "s=t,series=f"]));
    assert!(!ok);
    assert!(err.contains("inconsistent"), "{err}");
}

#[test]
fn unknown_query_and_parse_errors() {
    let f = write("unknown.pl", RUNNING);
    let (ok, _, err) = run(bin().args(["query"]).arg(&f).args(["--query", "nosuch(p9)"]));
    assert!(!ok);
    assert!(err.starts_with("error:"), "{err}");
    let bad = write("bad.pl", "a :- b\nc.");
    let (ok, _, err) = run(bin().args(["query"]).arg(&bad).args(["--query", "a"]));
    assert!(!ok);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn enumeration_cap_is_reported() {
    let f = write("cap.pl", RUNNING);
    let (ok, _, err) = run(bin().args(["query"]).arg(&f).args(["--query", "series", "--engine", "enum", "--enum-cap", "2"]));
    assert!(!ok);
    assert!(err.contains("5") && err.contains("2"), "{err}");
}

#[test]
fn translate_prints_extended_pfl() {
    let f = write("translate.pl", RUNNING);
    let (ok, out, err) = run(bin().args(["translate"]).arg(&f).args(["--style", "verbose"]));
    assert!(ok, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("het ")).count(), 3);
    assert_eq!(out.lines().filter(|l| l.starts_with("deputy ")).count(), 3);
    let pfl = write("translated.pfl", &out);
    let (ok, direct, _) = run(bin().args(["query"]).arg(&f).args(["--query", "series", "--csv"]));
    assert!(ok);
    let (ok, via, _) = run(bin().args(["query"]).arg(&pfl).args(["--query", "series", "--csv"]));
    assert!(ok);
    assert_eq!(direct, via);
}

#[test]
fn validate_reports_missing_deputies() {
    let good = write("good.pfl", "het a1, b; [1,0,0,1]; []. deputy a, a1; []. bayes b; [0.5,0.5]; [].");
    let (ok, out, _) = run(bin().arg("validate").arg(&good));
    assert!(ok, "{out}");
    assert_eq!(out.trim(), "ok");
    let bad = write("bad.pfl", "het a1, b; [1,0,0,1]; []. bayes b; [0.5,0.5]; [].");
    let (ok, out, _) = run(bin().arg("validate").arg(&bad));
    assert!(!ok);
    assert!(!out.trim().is_empty() && out.trim() != "ok");
}

#[test]
fn bench_prints_csv() {
    let (ok, out, err) = run(bin().args([
        "bench", "--problem", "plates", "--x", "2", "--y", "1,2", "--engine", "lifted,enum", "--reps", "2",
    ]));
    assert!(ok, "{err}");
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0].join(","), "problem,n,m,w,x,y,engine,rep,ms,prob,status");
    assert_eq!(rows.len(), 1 + 2 * 2 * 2);
    for pair in rows[1..].chunks(4) {
        let p: Vec<f64> = pair.iter().map(|r| r[9].parse().unwrap()).collect();
        assert!(pair.iter().all(|r| r[10] == "ok"));
        assert!(p.iter().all(|x| (x - p[0]).abs() < 1e-12));
    }
}

#[test]
fn bench_marks_refusals_and_bad_arguments() {
    let (ok, out, _) = run(bin().args([
        "bench", "--problem", "workshops-attributes", "--n", "10", "--m", "10", "--engine", "enum",
    ]));
    assert!(ok);
    assert!(out.lines().nth(1).unwrap().ends_with(",refused"), "{out}");
    let (ok, _, _) = run(bin().args(["bench", "--problem", "plates", "--y", "0"]));
    assert!(!ok);
    let (ok, _, _) = run(bin().args(["bench", "--problem", "nosuch"]));
    assert!(!ok);
}
