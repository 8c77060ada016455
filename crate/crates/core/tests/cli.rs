mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bistparse::treebank::{read_conll, write_conll};
use tempfile::TempDir;

use common::toy_corpus;

fn bistparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bistparse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn toy(&self) -> PathBuf {
        let p = self.path("toy.conll");
        write_conll(&p, &toy_corpus(), None).unwrap();
        p
    }

    fn train(&self, parser: &str, data: &Path, extra: &[&str]) -> (PathBuf, Output) {
        let model = self.path(&format!("{parser}.model"));
        let mut args = vec![
            "train",
            "--parser",
            parser,
            "--train",
            s(data),
            "--epochs",
            "2",
            "--model",
            s(&model),
        ];
        args.extend_from_slice(extra);
        let out = bistparse(&args);
        (model, out)
    }
}

const GOLD: &str = "1\tthe\t_\tDT\tDT\t_\t2\tdet\t_\t_\n\
2\tdog\t_\tNN\tNN\t_\t3\tnsubj\t_\t_\n\
3\tbarked\t_\tVBD\tVBD\t_\t0\troot\t_\t_\n\
4\t.\t_\t.\t.\t_\t3\tpunct\t_\t_\n\n";

const PRED: &str = "1\tthe\t_\tDT\tDT\t_\t2\tdet\t_\t_\n\
2\tdog\t_\tNN\tNN\t_\t3\tnsubj\t_\t_\n\
3\tbarked\t_\tVBD\tVBD\t_\t0\troot\t_\t_\n\
4\t.\t_\t.\t.\t_\t1\tpunct\t_\t_\n\n";

#[test]
fn eval_identical_files_is_perfect() {
    let w = Workspace::new();
    let gold = w.write("gold.conll", GOLD);
    let out = bistparse(&["eval", "--gold", s(&gold), "--pred", s(&gold)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("UAS: 100.00"), "{}", stdout(&out));
}

#[test]
fn eval_prints_two_thirds() {
    let w = Workspace::new();
    let gold = w.write(
        "gold.conll",
        "1\ta\t_\tNN\tNN\t_\t0\troot\t_\t_\n2\tb\t_\tNN\tNN\t_\t1\tdep\t_\t_\n3\tc\t_\tNN\tNN\t_\t2\tdep\t_\t_\n\n",
    );
    let pred = w.write(
        "pred.conll",
        "1\ta\t_\tNN\tNN\t_\t0\troot\t_\t_\n2\tb\t_\tNN\tNN\t_\t1\tdep\t_\t_\n3\tc\t_\tNN\tNN\t_\t1\tdep\t_\t_\n\n",
    );
    let out = bistparse(&["eval", "--gold", s(&gold), "--pred", s(&pred)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("UAS: 66.67"), "{}", stdout(&out));
}

#[test]
fn include_punct_changes_the_denominator() {
    let w = Workspace::new();
    let gold = w.write("gold.conll", GOLD);
    let pred = w.write("pred.conll", PRED);
    let excluded = stdout(&bistparse(&["eval", "--gold", s(&gold), "--pred", s(&pred)]));
    assert!(excluded.contains("UAS: 100.00 (3/3)"), "{excluded}");
    let included = stdout(&bistparse(&[
        "eval",
        "--gold",
        s(&gold),
        "--pred",
        s(&pred),
        "--include-punct",
    ]));
    assert!(included.contains("UAS: 75.00 (3/4)"), "{included}");
}

#[test]
fn eval_mismatch_names_the_sentence() {
    let w = Workspace::new();
    let gold = w.write("gold.conll", &format!("{GOLD}{GOLD}"));
    let short = GOLD.lines().take(3).collect::<Vec<_>>().join("\n");
    let pred = w.write("pred.conll", &format!("{GOLD}{short}\n\n"));
    let out = bistparse(&["eval", "--gold", s(&gold), "--pred", s(&pred)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sentence 2"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one() {
    let w = Workspace::new();
    let data = w.toy();
    let model = w.path("m");
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "train",
            "--parser",
            "graph",
            "--features",
            "extended",
            "--train",
            s(&data),
            "--model",
            s(&model),
        ],
        vec![
            "train",
            "--parser",
            "transition",
            "--no-labeler",
            "--train",
            s(&data),
            "--model",
            s(&model),
        ],
        vec!["train", "--parser", "tree", "--train", s(&data), "--model", s(&model)],
        vec![
            "train",
            "--parser",
            "graph",
            "--train",
            "/nonexistent/file",
            "--model",
            s(&model),
        ],
        vec!["eval", "--gold", s(&data)],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = bistparse(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
    }
    assert!(!model.exists());
}

#[test]
fn malformed_training_data_exits_two() {
    let w = Workspace::new();
    let bad = w.write("bad.conll", "1\tdog\t_\tNN\tNN\t_\tx\troot\t_\t_\n\n");
    let (_, out) = w.train("graph", &bad, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn train_parse_eval_round_trip() {
    let w = Workspace::new();
    let data = w.toy();
    for parser in ["transition", "graph"] {
        let (model, out) = w.train(parser, &data, &["--dev", s(&data)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let log = stdout(&out);
        assert!(log.contains("epoch   1") && log.contains("dev UAS"), "{log}");

        let parsed = w.path(&format!("{parser}.out"));
        let out = bistparse(&[
            "parse",
            "--model",
            s(&model),
            "--input",
            s(&data),
            "--output",
            s(&parsed),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

        // Every column other than head and label is preserved.
        let input = fs::read_to_string(&data).unwrap();
        let output = fs::read_to_string(&parsed).unwrap();
        assert_eq!(input.lines().count(), output.lines().count());
        for (a, b) in input.lines().zip(output.lines()) {
            let a: Vec<&str> = a.split('\t').collect();
            let b: Vec<&str> = b.split('\t').collect();
            assert_eq!(a.len(), b.len());
            for k in (0..a.len()).filter(|&k| k != 6 && k != 7) {
                assert_eq!(a[k], b[k]);
            }
        }

        // A parse scored against itself is perfect.
        let out = bistparse(&["eval", "--gold", s(&parsed), "--pred", s(&parsed)]);
        assert!(stdout(&out).contains("UAS: 100.00") && stdout(&out).contains("LAS: 100.00"));

        // Single-token sentences can only attach to ROOT.
        let single = read_conll(&parsed).unwrap();
        assert_eq!(single[2].tokens()[0].head, Some(0));
    }
}

#[test]
fn empty_input_gives_empty_output() {
    let w = Workspace::new();
    let (model, out) = w.train("graph", &w.toy(), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    let empty = w.write("empty.conll", "");
    let parsed = w.path("empty.out");
    let out = bistparse(&[
        "parse",
        "--model",
        s(&model),
        "--input",
        s(&empty),
        "--output",
        s(&parsed),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&parsed).unwrap(), "");
}

#[test]
fn fixed_seed_gives_identical_runs() {
    let first = Workspace::new();
    let second = Workspace::new();
    let run = |w: &Workspace| {
        let data = w.toy();
        let (model, out) = w.train("transition", &data, &["--dev", s(&data), "--seed", "5"]);
        assert_eq!(out.status.code(), Some(0));
        (stdout(&out), fs::read(model).unwrap())
    };
    let (log_a, model_a) = run(&first);
    let (log_b, model_b) = run(&second);
    assert_eq!(log_a, log_b);
    assert!(model_a == model_b, "model files differ");
}

#[test]
fn parse_rejects_a_corrupt_model() {
    let w = Workspace::new();
    let data = w.toy();
    let (model, _) = w.train("graph", &data, &[]);
    let bytes = fs::read(&model).unwrap();
    let truncated = w.path("truncated.model");
    fs::write(&truncated, &bytes[..bytes.len() - 8]).unwrap();
    let out = bistparse(&[
        "parse",
        "--model",
        s(&truncated),
        "--input",
        s(&data),
        "--output",
        s(&w.path("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("tensor"), "{}", stderr(&out));
}
