//! End-to-end runs of the `offlang` binary.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixture;
use offlang::ensemble::ProbabilityTable;
use offlang::neural::load_mlp;
use tempfile::TempDir;

fn offlang(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offlang"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = offlang(args);
    assert!(
        out.status.success(),
        "offlang {args:?} failed with {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn code(args: &[&str]) -> i32 {
    offlang(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn evaluate_scores_the_three_example_matrix() {
    let dir = TempDir::new().unwrap();
    let pred = write(&dir, "pred.tsv", "1\tOFF\n2\tNOT\n3\tOFF\n");
    let gold = write(&dir, "gold.tsv", "1\tOFF\n2\tOFF\n3\tNOT\n");
    let report_path = dir.path().join("report.txt");
    let out = ok(&[
        "evaluate",
        "--pred",
        s(&pred),
        "--gold",
        s(&gold),
        "--out-report",
        s(&report_path),
    ]);
    assert!(out.lines().any(|l| l == "macro_f1=0.25"), "{out}");
    assert_eq!(value(&out, "f1.OFF"), Some("0.5"));
    assert_eq!(value(&out, "f1.NOT"), Some("0"));
    assert_eq!(fs::read_to_string(&report_path).unwrap(), out);
    let repro = out.lines().last().unwrap();
    assert!(
        repro.starts_with("repro command=evaluate config_sha256="),
        "{repro}"
    );
    assert!(repro.contains(" seed=none version="));
}

#[test]
fn evaluate_reads_olid_gold_and_probability_files() {
    let dir = TempDir::new().unwrap();
    let gold = write(
        &dir,
        "gold.tsv",
        "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n1\tyou suck\tOFF\tTIN\tIND\n2\tnice\tNOT\tNULL\tNULL\n",
    );
    let probs = write(&dir, "p.tsv", "#member=m\n1\t0.2\t0.8\n2\t0.9\t0.1\n");
    let out = ok(&[
        "evaluate",
        "--pred",
        s(&probs),
        "--gold",
        s(&gold),
        "--subtask",
        "A",
    ]);
    assert_eq!(value(&out, "macro_f1"), Some("1"));
    assert_eq!(
        code(&["evaluate", "--pred", s(&probs), "--gold", s(&gold)]),
        2
    );
}

#[test]
fn normalize_writes_one_row_per_tweet() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "tweets.tsv",
        "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n\
         7\t<i>WOW</i>  #dinnertime :) @USER @USER @USER @USER\tNOT\tNULL\tNULL\n\
         8\tI can't wait for café\tNOT\tNULL\tNULL\n",
    );
    let out = dir.path().join("norm.tsv");
    let report = ok(&["normalize", "--in", s(&input), "--out", s(&out)]);
    assert!(report.contains("repro command=normalize"));
    let body = fs::read_to_string(&out).unwrap();
    assert!(
        body.contains("7\tWOW dinner time smile @USER @USER @USER"),
        "{body}"
    );
    assert!(body.contains("8\tI can not wait for cafe"), "{body}");

    let again = dir.path().join("norm2.tsv");
    ok(&["normalize", "--in", s(&out), "--out", s(&again)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn weigh_reports_balanced_mass() {
    let dir = TempDir::new().unwrap();
    let labels = write(&dir, "labels.tsv", "1\tOFF\n2\tNOT\n3\tNOT\n4\tNOT\n");
    let out = ok(&[
        "weigh",
        "--in",
        s(&labels),
        "--subtask",
        "A",
        "--format",
        "labels",
    ]);
    assert_eq!(value(&out, "weight.OFF"), Some("0.5"));
    assert_eq!(
        value(&out, "weight.NOT").map(|v| v.parse::<f64>().unwrap()),
        Some(1.0 / 6.0)
    );
    assert_eq!(value(&out, "weighted_sum"), Some("1"));

    let solid = write(
        &dir,
        "solid.tsv",
        "id\ttext\tavg_conf\tconf_std\n1\ta\t0.4\t0.1\n2\tb\t0.39\t0.1\n",
    );
    let thresholded = dir.path().join("solid_labels.tsv");
    ok(&[
        "weigh",
        "--in",
        s(&solid),
        "--subtask",
        "A",
        "--format",
        "solid",
        "--out-labels",
        s(&thresholded),
    ]);
    assert_eq!(
        fs::read_to_string(&thresholded).unwrap(),
        "1\tOFF\n2\tNOT\n"
    );
}

fn train_head(out_model: &Path, seed: &str) -> String {
    let features = format!(
        "{},{}",
        fixture("aggregation_family_a.ofsfeat").display(),
        fixture("aggregation_family_b.ofsfeat").display()
    );
    let labels = fixture("aggregation_labels.tsv");
    ok(&[
        "train-head",
        "--subtask",
        "C",
        "--features",
        &features,
        "--labels",
        s(&labels),
        "--out-model",
        s(out_model),
        "--seed",
        seed,
        "--max-epochs",
        "4",
    ])
}

#[test]
fn train_head_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.ofsmlp");
    let second = dir.path().join("second.ofsmlp");
    let other = dir.path().join("other.ofsmlp");
    let r1 = train_head(&first, "11");
    let r2 = train_head(&second, "11");
    train_head(&other, "12");
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    assert_ne!(fs::read(&first).unwrap(), fs::read(&other).unwrap());
    assert_eq!(r1, r2);
    assert!(r1.contains(" seed=11 "), "{r1}");

    let (arch, _) = load_mlp(&first).unwrap();
    assert_eq!(arch.input_dim, 32);
    assert_eq!(arch.hidden, vec![256, 128]);
    assert_eq!(arch.output_dim, 3);
}

#[test]
fn predict_vote_stack_and_evaluate_chain_together() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("head.ofsmlp");
    train_head(&model, "3");
    let a = fixture("aggregation_family_a.ofsfeat");
    let b = fixture("aggregation_family_b.ofsfeat");
    let labels = fixture("aggregation_labels.tsv");
    let features = format!("{},{}", a.display(), b.display());

    let probs = dir.path().join("head.tsv");
    let pred_labels = dir.path().join("head_labels.tsv");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--features",
        &features,
        "--out",
        s(&probs),
        "--out-labels",
        s(&pred_labels),
    ]);
    let table = ProbabilityTable::load(&probs).unwrap();
    assert_eq!(table.member(), "head");
    assert_eq!(table.len(), 600);
    let report = ok(&["evaluate", "--pred", s(&pred_labels), "--gold", s(&labels)]);
    let f1: f64 = value(&report, "macro_f1").unwrap().parse().unwrap();
    assert!(f1 > 0.8, "{report}");

    let voted = dir.path().join("voted.tsv");
    ok(&["vote", "--members", s(&probs), "--out", s(&voted)]);
    let single = ProbabilityTable::load(&voted).unwrap();
    for ((id_a, pa), (id_b, pb)) in single.rows().zip(table.rows()) {
        assert_eq!(id_a, id_b);
        assert_eq!(pa, pb);
    }

    let stacker = dir.path().join("stacker.ofsstk");
    let members = format!("{},{}", probs.display(), voted.display());
    ok(&[
        "stack",
        "--members",
        &members,
        "--labels",
        s(&labels),
        "--out-model",
        s(&stacker),
        "--seed",
        "1",
    ]);
    let stacked = dir.path().join("stacked.tsv");
    ok(&[
        "stack",
        "--members",
        &members,
        "--model",
        s(&stacker),
        "--out",
        s(&stacked),
    ]);
    assert_eq!(ProbabilityTable::load(&stacked).unwrap().len(), 600);
    let swapped = format!("{},{}", voted.display(), probs.display());
    assert_eq!(
        code(&[
            "stack",
            "--members",
            &swapped,
            "--model",
            s(&stacker),
            "--out",
            s(&stacked)
        ]),
        3
    );
}

#[test]
fn baseline_nb_scores_a_separable_corpus() {
    let dir = TempDir::new().unwrap();
    let rows = |range: std::ops::Range<usize>| -> String {
        common::nb_corpus(200, 9)[range]
            .iter()
            .map(|(id, text, c)| format!("{id}\t{text}\t{}\n", if *c == 1 { "OFF" } else { "NOT" }))
            .collect()
    };
    let train = write(&dir, "train.tsv", &rows(0..160));
    let test = write(&dir, "test.tsv", &rows(160..200));
    let model_a = dir.path().join("a.ofsnb");
    let model_b = dir.path().join("b.ofsnb");
    let out = ok(&[
        "baseline-nb",
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--out-model",
        s(&model_a),
    ]);
    ok(&[
        "baseline-nb",
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--out-model",
        s(&model_b),
    ]);
    assert!(
        value(&out, "macro_f1").unwrap().parse::<f64>().unwrap() >= 0.9,
        "{out}"
    );
    assert_eq!(fs::read(&model_a).unwrap(), fs::read(&model_b).unwrap());
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = TempDir::new().unwrap();
    let gold = write(&dir, "gold.tsv", "1\tOFF\n");
    let missing = dir.path().join("nope.tsv");
    assert_eq!(
        code(&["evaluate", "--pred", s(&missing), "--gold", s(&gold)]),
        2
    );
    assert_eq!(code(&["evaluate", "--gold", s(&gold)]), 2);
    assert_eq!(
        code(&[
            "evaluate",
            "--pred",
            s(&gold),
            "--gold",
            s(&gold),
            "--threshold",
            "1.5"
        ]),
        2
    );

    let garbage = write(&dir, "garbage.tsv", "1\tMAYBE\n");
    assert_eq!(
        code(&["evaluate", "--pred", s(&garbage), "--gold", s(&gold)]),
        3
    );
    let mismatch = write(&dir, "other.tsv", "2\tOFF\n");
    assert_eq!(
        code(&["evaluate", "--pred", s(&mismatch), "--gold", s(&gold)]),
        3
    );
    let truncated = fixture("corrupt_truncated_record.ofsfeat");
    let labels = write(&dir, "labels.tsv", "1\tOFF\n2\tNOT\n");
    let model = dir.path().join("m.ofsmlp");
    assert_eq!(
        code(&[
            "train-head",
            "--subtask",
            "A",
            "--features",
            s(&truncated),
            "--labels",
            s(&labels),
            "--out-model",
            s(&model)
        ]),
        3
    );

    let nan = fixture("corrupt_non_finite.ofsfeat");
    assert_eq!(
        code(&[
            "train-head",
            "--subtask",
            "A",
            "--features",
            s(&nan),
            "--labels",
            s(&labels),
            "--out-model",
            s(&model)
        ]),
        4
    );

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn inputs_are_left_untouched() {
    let dir = TempDir::new().unwrap();
    let labels = fixture("aggregation_labels.tsv");
    let a = fixture("aggregation_family_a.ofsfeat");
    let before = (fs::read(&labels).unwrap(), fs::read(&a).unwrap());
    let model = dir.path().join("m.ofsmlp");
    ok(&[
        "train-head",
        "--subtask",
        "C",
        "--features",
        s(&a),
        "--labels",
        s(&labels),
        "--out-model",
        s(&model),
        "--max-epochs",
        "1",
    ]);
    let probs = dir.path().join("p.tsv");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--features",
        s(&a),
        "--out",
        s(&probs),
    ]);
    let probs_before = fs::read(&probs).unwrap();
    ok(&[
        "vote",
        "--members",
        s(&probs),
        "--out",
        s(&dir.path().join("v.tsv")),
    ]);
    ok(&["evaluate", "--pred", s(&probs), "--gold", s(&labels)]);
    assert_eq!(before, (fs::read(&labels).unwrap(), fs::read(&a).unwrap()));
    assert_eq!(probs_before, fs::read(&probs).unwrap());
}
