use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn mbsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbsl"))
        .args(args)
        .output()
        .expect("run mbsl")
}

fn mbsl_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mbsl"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn mbsl");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TOY: &str = "[ DT NN ] VB\nVB [ DT NN ]\n[ NN ] VB [ DT NN ]\n";

fn toy_memory(dir: &Path) -> PathBuf {
    let train = write(dir, "toy.txt", TOY);
    let mem = dir.join("toy.mbsl");
    let o = mbsl(&["train", "-i", s(&train), "-o", s(&mem), "--context", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    mem
}

#[test]
fn train_reports_statistics() {
    let dir = TempDir::new().unwrap();
    let train = write(
        dir.path(),
        "t.txt",
        "[ DT NN ] VB [ NN ] .\nVB [ NN NN ] RB\n",
    );
    let mem = dir.path().join("m.mbsl");
    let o = mbsl(&["train", "-i", s(&train), "-o", s(&mem), "--context", "2"]);
    assert!(o.status.success());
    let err = stderr(&o);
    assert!(err.contains("sentences=2"), "{err}");
    assert!(err.contains("instances=3"), "{err}");
    assert!(err.contains("context=2"), "{err}");
    assert!(std::fs::metadata(&mem).unwrap().len() > 0);
}

#[test]
fn empty_training_corpus_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let train = write(dir.path(), "empty.txt", "\n\n");
    let mem = dir.path().join("m.mbsl");
    let o = mbsl(&["train", "-i", s(&train), "-o", s(&mem)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).to_lowercase().contains("empty"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let train = write(dir.path(), "bad.txt", "[ DT [ NN ] ]\n");
    let o = mbsl(&["train", "-i", s(&train), "-o", s(&dir.path().join("m"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let o = mbsl(&["train", "-i", s(&dir.path().join("nope.txt")), "-o", "-"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(mbsl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mbsl(&["train", "-i", "x"]).status.code(), Some(1));
    assert_eq!(
        mbsl(&["train", "-i", "x", "-o", "y", "--context", "0"])
            .status
            .code(),
        Some(1)
    );
    assert!(mbsl(&["--help"]).status.success());
}

#[test]
fn brackets_with_toy_memory() {
    let dir = TempDir::new().unwrap();
    let mem = toy_memory(dir.path());
    let input = write(dir.path(), "in.txt", "DT NN VB\n\nVB DT NN\n");
    let out = dir.path().join("out.txt");
    let o = mbsl(&[
        "bracket",
        "-m",
        s(&mem),
        "-i",
        s(&input),
        "-o",
        s(&out),
        "--tile-threshold",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["[ DT NN ] VB", "", "VB [ DT NN ]"]);
    // The output is itself a valid bracketed corpus.
    assert_eq!(mbsl::Corpus::parse(&text).unwrap().len(), 2);
}

#[test]
fn bracket_over_stdin_and_stdout() {
    let dir = TempDir::new().unwrap();
    let mem = toy_memory(dir.path());
    let o = mbsl_stdin(
        &[
            "bracket",
            "-m",
            s(&mem),
            "-i",
            "-",
            "-o",
            "-",
            "--tile-threshold",
            "0.5",
        ],
        "DT NN VB\n",
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o), "[ DT NN ] VB\n");
}

#[test]
fn bracket_warns_on_unseen_tags() {
    let dir = TempDir::new().unwrap();
    let mem = toy_memory(dir.path());
    let o = mbsl_stdin(&["bracket", "-m", s(&mem), "-i", "-", "-o", "-"], "XX YY\n");
    assert!(o.status.success());
    assert_eq!(stdout(&o), "XX YY\n");
    assert!(stderr(&o).contains("unseen"));
}

#[test]
fn bracket_rejects_larger_context_than_memory() {
    let dir = TempDir::new().unwrap();
    let mem = toy_memory(dir.path());
    let o = mbsl_stdin(
        &[
            "bracket",
            "-m",
            s(&mem),
            "-i",
            "-",
            "-o",
            "-",
            "--context",
            "2",
        ],
        "DT\n",
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn corrupt_snapshot_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let mem = write(dir.path(), "bad.mbsl", "not a snapshot");
    let o = mbsl_stdin(&["bracket", "-m", s(&mem), "-i", "-", "-o", "-"], "DT\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_lists_candidates() {
    let dir = TempDir::new().unwrap();
    let mem = toy_memory(dir.path());
    let dump = dir.path().join("dump.txt");
    let o = mbsl_stdin(
        &[
            "bracket",
            "-m",
            s(&mem),
            "-i",
            "-",
            "-o",
            "-",
            "--dump",
            s(&dump),
        ],
        "DT NN VB\n",
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(dump).unwrap();
    assert!(text.starts_with("sentence 0: DT NN VB"));
    assert_eq!(text.matches("candidate ").count(), 6);
    assert!(text.contains("covers num="));
}

#[test]
fn eval_of_gold_against_itself_is_perfect() {
    let dir = TempDir::new().unwrap();
    let gold = write(dir.path(), "g.txt", TOY);
    let o = mbsl(&["eval", "-g", s(&gold), "-p", s(&gold)]);
    assert!(o.status.success());
    assert!(
        stdout(&o).starts_with("recall=1.000 precision=1.000 F1=1.000 (tp=4 gold=4 predicted=4)")
    );
}

#[test]
fn eval_rejects_mismatched_files() {
    let dir = TempDir::new().unwrap();
    let gold = write(dir.path(), "g.txt", TOY);
    let pred = write(dir.path(), "p.txt", "[ DT NN ] VB\n");
    assert_eq!(
        mbsl(&["eval", "-g", s(&gold), "-p", s(&pred)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_writes_full_grid() {
    let dir = TempDir::new().unwrap();
    let all = mbsl(&["generate", "--seed", "3", "--sentences", "60"]);
    let text = stdout(&all);
    let lines: Vec<&str> = text.lines().collect();
    let train = write(dir.path(), "train.txt", &(lines[..50].join("\n") + "\n"));
    let test = write(dir.path(), "test.txt", &(lines[50..].join("\n") + "\n"));
    let o = mbsl(&["sweep", "--train", s(&train), "--test", s(&test)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "cn,theta_t,recall,precision,f_beta,tp,gold,predicted"
    );
    assert_eq!(rows.len(), 55);
    assert!(stderr(&o).contains("best: cn="));
}

#[test]
fn cv_reports_best_setting() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.txt");
    assert!(mbsl(&["generate", "--sentences", "50", "-o", s(&corpus)])
        .status
        .success());
    let folds = dir.path().join("folds.csv");
    let o = mbsl(&[
        "cv",
        "-i",
        s(&corpus),
        "--folds",
        "5",
        "--contexts",
        "1,2",
        "--thresholds",
        "0.3,0.6",
        "-o",
        s(&folds),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("best: cn="));
    // Header plus 5 folds for each of 4 grid points.
    assert_eq!(std::fs::read_to_string(folds).unwrap().lines().count(), 21);
    let o = mbsl(&["cv", "-i", s(&corpus), "--folds", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn curve_has_one_row_per_fraction() {
    let dir = TempDir::new().unwrap();
    let train = dir.path().join("train.txt");
    let test = dir.path().join("test.txt");
    assert!(mbsl(&[
        "generate",
        "--seed",
        "1",
        "--sentences",
        "40",
        "-o",
        s(&train)
    ])
    .status
    .success());
    assert!(mbsl(&[
        "generate",
        "--seed",
        "2",
        "--sentences",
        "10",
        "-o",
        s(&test)
    ])
    .status
    .success());
    let o = mbsl(&[
        "curve",
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--fractions",
        "0.25,0.5,1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn generate_is_deterministic() {
    let a = stdout(&mbsl(&["generate", "--seed", "9", "--sentences", "20"]));
    let b = stdout(&mbsl(&["generate", "--seed", "9", "--sentences", "20"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 20);
}

#[test]
fn retag_rules_apply_to_word_tokens() {
    let dir = TempDir::new().unwrap();
    let rules = write(dir.path(), "rules.tsv", "# be verbs\nis\tBE\n");
    let train = write(dir.path(), "t.txt", "[ the/DT dog/NN ] is/VBZ [ big/JJ ]\n");
    let mem = dir.path().join("m.mbsl");
    let o = mbsl(&[
        "train",
        "-i",
        s(&train),
        "-o",
        s(&mem),
        "--retag",
        s(&rules),
        "--context",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mbsl_stdin(
        &[
            "bracket",
            "-m",
            s(&mem),
            "-i",
            "-",
            "-o",
            "-",
            "--retag",
            s(&rules),
            "--tile-threshold",
            "0.1",
        ],
        "a/DT cat/NN is/VBZ\n",
    );
    assert!(o.status.success());
    assert!(!stderr(&o).contains("unseen"), "{}", stderr(&o));
    assert!(stdout(&o).contains("BE"));
}
