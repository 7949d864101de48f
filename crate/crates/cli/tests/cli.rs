use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use oie_cli::pipeline::BuildReport;
use oie_core::extractor::Triple;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn oie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oie")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = oie(args);
    assert!(out.status.success(), "oie {:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A copy of the fixture config with absolute data paths and `extra` appended.
fn config(dir: &Path, corpus: &Path, extra: &str) -> PathBuf {
    let base = fs::read_to_string(fixtures().join("fixture.toml")).unwrap();
    let text = base
        .replace("\"corpus.conll\"", &format!("{:?}", corpus))
        .replace("\"gazetteer.tsv\"", &format!("{:?}", fixtures().join("gazetteer.tsv")));
    let path = dir.join("run.toml");
    fs::write(&path, format!("{}\n{}", text, extra)).unwrap();
    path
}

/// Build directory and both checkpoints for the fixture corpus, shared by the
/// extraction tests.
struct Trained {
    dir: TempDir,
    config: PathBuf,
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), &fixtures().join("corpus.conll"), "");
        let c = s(&config).to_string();
        let train = dir.path().join("train");
        ok(&["--config", &c, "build-trainset", "--out", s(&train)]);
        for task in ["argument", "preposition"] {
            let out = dir.path().join(format!("{}.ckpt", task));
            ok(&["--config", &c, "train", "--task", task, "--samples", s(&train), "--out", s(&out)]);
        }
        Trained { dir, config }
    })
}

fn extract(extra: &[&str], input: &Path, out: &Path) -> Output {
    let t = trained();
    let (arg, prep) = (t.dir.path().join("argument.ckpt"), t.dir.path().join("preposition.ckpt"));
    let mut args = vec!["--config", s(&t.config)];
    args.extend_from_slice(extra);
    args.extend_from_slice(&[
        "extract",
        "--input",
        s(input),
        "--argument-model",
        s(&arg),
        "--preposition-model",
        s(&prep),
        "--out",
        s(out),
    ]);
    oie(&args)
}

fn read_triples(path: &Path) -> Vec<Triple> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn report(dir: &Path) -> BuildReport {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn fixture_build_has_noun_tuples_and_the_gaborone_sample() {
    let t = trained();
    let train = t.dir.path().join("train");
    let r = report(&train);
    assert_eq!(r.sentences, 10);
    assert!(r.noun_tuples > 0 && r.verb_tuples > 0 && r.pairs > 0);
    let preps = fs::read_to_string(train.join("prepositions.jsonl")).unwrap();
    assert!(preps
        .lines()
        .any(|l| l.contains("\"sentence_id\":\"gaborone\"") && l.contains("\"label\":\"of\"")));
    assert!(t.dir.path().join("argument.ckpt.log.json").is_file());
}

#[test]
fn fine_tuned_fixture_model_recovers_the_boeing_triples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let res = extract(&["--threshold", "0.75"], &fixtures().join("corpus.conll"), &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let triples = read_triples(&out);
    let shown: Vec<String> = triples
        .iter()
        .filter(|t| t.sentence_id == "boeing")
        .map(|t| format!("⟨{}; {}; {}⟩", t.arg1, t.rel, t.arg2))
        .collect();
    for want in [
        "⟨Boeing; announced; the 747 ASB⟩",
        "⟨the 747 ASB; be announced in; 1986⟩",
        "⟨Boeing; announced the 747 ASB in; 1986⟩",
    ] {
        assert!(shown.iter().any(|s| s == want), "{} missing from {:?}", want, shown);
    }
    assert!(triples.windows(2).all(|w| w[0].score >= w[1].score));
    assert!(triples.iter().all(|t| t.score > 0.75));
}

#[test]
fn threshold_one_gives_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    assert!(extract(&["--threshold", "1.0"], &fixtures().join("corpus.conll"), &out).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.conll");
    fs::write(&corpus, "").unwrap();
    let out = dir.path().join("t.jsonl");
    assert!(extract(&[], &corpus, &out).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "");

    let c = config(dir.path(), &corpus, "");
    let train = dir.path().join("train");
    ok(&["--config", s(&c), "build-trainset", "--out", s(&train)]);
    let r = report(&train);
    assert_eq!((r.sentences, r.verb_tuples, r.noun_tuples, r.negatives_kept), (0, 0, 0, 0));
    assert_eq!(fs::read_to_string(train.join("positives.jsonl")).unwrap(), "");
}

#[test]
fn augmentation_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), &fixtures().join("corpus.conll"), "[augment]\nenabled = false\n");
    let train = dir.path().join("train");
    ok(&["--config", s(&c), "build-trainset", "--out", s(&train)]);
    assert!(!train.join("pairs.jsonl").exists());
    let r = report(&train);
    assert!(!r.augmentation);
    assert_eq!(r.pairs, 0);
}

#[test]
fn eval_reports_precision_over_yield() {
    let dir = tempfile::tempdir().unwrap();
    let triples = dir.path().join("t.jsonl");
    assert!(extract(&["--threshold", "0.75"], &fixtures().join("corpus.conll"), &triples).status.success());
    let ids: Vec<String> = read_triples(&triples).into_iter().map(|t| t.id).collect();
    let marks: String = ids
        .iter()
        .enumerate()
        .map(|(k, id)| format!("{}\t{}\n", id, if k % 3 == 2 { "I" } else { "C" }))
        .collect();
    let ann = dir.path().join("ann.tsv");
    fs::write(&ann, marks).unwrap();
    let out = ok(&["eval", "--triples", s(&triples), "--annotations", s(&ann)]);
    let table = String::from_utf8(out.stdout).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("yield\tcorrect\tprecision\tscore"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), ids.len());
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), k + 1);
        let p: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    assert_eq!(rows[0][2], "1.0000");
}

#[test]
fn errors_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = oie(&["--config", s(&missing), "build-trainset", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let t = trained();
    let out = oie(&[
        "--config",
        s(&t.config),
        "extract",
        "--input",
        s(&fixtures().join("corpus.conll")),
        "--argument-model",
        s(&t.dir.path().join("preposition.ckpt")),
        "--preposition-model",
        s(&t.dir.path().join("preposition.ckpt")),
        "--out",
        s(&dir.path().join("t.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = oie(&["--threshold", "1.5", "--config", s(&t.config), "eval", "--triples", "x", "--annotations", "y"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn text_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.txt");
    let t = trained();
    let res = oie(&[
            "--threshold",
            "0.75",
            "--config",
            s(&t.config),
            "extract",
            "--format",
            "text",
            "--input",
            s(&fixtures().join("corpus.conll")),
            "--argument-model",
            s(&t.dir.path().join("argument.ckpt")),
            "--preposition-model",
            s(&t.dir.path().join("preposition.ckpt")),
            "--out",
            s(&out),
        ]);
    assert!(res.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("⟨Boeing; announced; the 747 ASB⟩ (")));
}
