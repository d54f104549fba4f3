use std::fs;
use std::path::Path;

use paper2vec::eval::MetricReport;
use paper2vec::similarity::PaperVectors;
use paper2vec::trainer::Checkpoint;
use paper2vec::{ContextMatrix, RankingTable};
use paper2vec_cli::{run, EXIT_MISSING_INPUT, EXIT_OK, EXIT_STAGE_ORDER, EXIT_USAGE};

fn exec(args: &[&str]) -> i32 {
    let mut argv = vec!["paper2vec"];
    argv.extend_from_slice(args);
    run(argv)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &[&str] = &["--dim", "8", "--epochs", "20", "--seed", "5"];

fn synth_small(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data");
    assert_eq!(
        exec(&[
            "synth",
            "--nodes",
            "60",
            "--p-in",
            "0.2",
            "--p-out",
            "0.01",
            "--out-dir",
            s(&data)
        ]),
        EXIT_OK
    );
    data
}

#[test]
fn exit_codes_are_distinct() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_small(tmp.path());
    let edges = data.join("edges.tsv");

    assert_eq!(
        exec(&["ingest", "--edges", s(&edges), "--bogus"]),
        EXIT_USAGE
    );
    assert_eq!(exec(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(
        exec(&["ingest", "--edges", "/no/such/file.tsv"]),
        EXIT_MISSING_INPUT
    );

    let model = tmp.path().join("m.bin");
    // no context yet
    assert_eq!(
        exec(&["train", "--edges", s(&edges), "--model", s(&model)]),
        EXIT_STAGE_ORDER
    );
    let missing = tmp.path().join("ctx.tsv");
    assert_eq!(
        exec(&[
            "train",
            "--edges",
            s(&edges),
            "--context",
            s(&missing),
            "--model",
            s(&model)
        ]),
        EXIT_STAGE_ORDER
    );
    let out = tmp.path().join("r.tsv");
    assert_eq!(
        exec(&["topk", "--model", s(&model), "--out", s(&out)]),
        EXIT_STAGE_ORDER
    );
    assert_eq!(exec(&["novelty", "--rankings", s(&out)]), EXIT_STAGE_ORDER);
    assert!(!model.exists());

    // a bad value that parses is a runtime error
    assert_eq!(
        exec(&[
            "build-context",
            "--edges",
            s(&edges),
            "--win",
            "0",
            "--out",
            s(&missing)
        ]),
        1
    );
}

#[test]
fn staged_commands_match_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_small(tmp.path());
    let (edges, gold) = (data.join("edges.tsv"), data.join("gold.tsv"));
    let piped = tmp.path().join("pipe");
    let mut args = vec![
        "pipeline",
        "--edges",
        s(&edges),
        "--gold",
        s(&gold),
        "--out-dir",
        s(&piped),
        "--k",
        "5",
    ];
    args.extend_from_slice(SMALL);
    assert_eq!(exec(&args), EXIT_OK);

    let staged = tmp.path().join("staged");
    let p = |f: &str| staged.join(f);
    assert_eq!(
        exec(&[
            "build-context",
            "--edges",
            s(&edges),
            "--out",
            s(&p("context.tsv"))
        ]),
        EXIT_OK
    );
    let context = p("context.tsv");
    let mut args = vec!["train", "--edges", s(&edges), "--context", s(&context)];
    let (model, ckpt, loss) = (p("model.bin"), p("checkpoint.bin"), p("loss.tsv"));
    args.extend_from_slice(&[
        "--model",
        s(&model),
        "--checkpoint",
        s(&ckpt),
        "--loss",
        s(&loss),
    ]);
    args.extend_from_slice(SMALL);
    assert_eq!(exec(&args), EXIT_OK);
    let rankings = p("rankings.tsv");
    assert_eq!(
        exec(&[
            "topk",
            "--model",
            s(&model),
            "--k",
            "5",
            "--out",
            s(&rankings)
        ]),
        EXIT_OK
    );
    let report = p("report.tsv");
    assert_eq!(
        exec(&[
            "evaluate",
            "--rankings",
            s(&rankings),
            "--gold",
            s(&gold),
            "--k",
            "5",
            "--out",
            s(&report)
        ]),
        EXIT_OK
    );

    for f in [
        "context.tsv",
        "model.bin",
        "checkpoint.bin",
        "loss.tsv",
        "rankings.tsv",
    ] {
        assert_eq!(
            fs::read(piped.join(f)).unwrap(),
            fs::read(p(f)).unwrap(),
            "{f}"
        );
    }
    let piped_report = fs::read_to_string(piped.join("report.tsv")).unwrap();
    let staged_report = fs::read_to_string(&report).unwrap();
    assert_eq!(piped_report.lines().next(), staged_report.lines().next());
}

#[test]
fn outputs_round_trip_through_readers() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_small(tmp.path());
    let out = tmp.path().join("out");
    let (edges, gold) = (data.join("edges.tsv"), data.join("gold.tsv"));
    let mut args = vec![
        "pipeline",
        "--edges",
        s(&edges),
        "--gold",
        s(&gold),
        "--out-dir",
        s(&out),
        "--baseline",
        "cocitation",
    ];
    args.extend_from_slice(SMALL);
    assert_eq!(exec(&args), EXIT_OK);

    let ctx = ContextMatrix::read_file(out.join("context.tsv")).unwrap();
    let mut buf = Vec::new();
    ctx.write(&mut buf).unwrap();
    assert_eq!(buf, fs::read(out.join("context.tsv")).unwrap());

    let vectors = PaperVectors::read_model_file(out.join("model.bin")).unwrap();
    let mut buf = Vec::new();
    vectors.write_model(&mut buf).unwrap();
    assert_eq!(buf, fs::read(out.join("model.bin")).unwrap());

    let ckpt = Checkpoint::read_file(out.join("checkpoint.bin")).unwrap();
    let mut buf = Vec::new();
    ckpt.write(&mut buf).unwrap();
    assert_eq!(buf, fs::read(out.join("checkpoint.bin")).unwrap());

    for f in ["rankings.tsv", "rankings-cocitation.tsv"] {
        let t = RankingTable::read_file(out.join(f)).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(buf, fs::read(out.join(f)).unwrap(), "{f}");
    }
    for f in ["report.tsv", "report-cocitation.tsv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        let reports = MetricReport::read(text.as_bytes()).unwrap();
        assert_eq!(reports.len(), 2);
        let back: String = reports.iter().map(|r| r.line() + "\n").collect();
        assert_eq!(back, text);
    }
    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("resolved_lambda\t"));
    assert!(config.contains("seed=5"));
}

#[test]
fn synth_gold_agrees_with_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_small(tmp.path());
    let labels: std::collections::HashMap<String, String> =
        fs::read_to_string(data.join("labels.tsv"))
            .unwrap()
            .lines()
            .map(|l| {
                let (a, b) = l.split_once('\t').unwrap();
                (a.to_owned(), b.to_owned())
            })
            .collect();
    assert_eq!(labels.len(), 60);
    let gold = fs::read_to_string(data.join("gold.tsv")).unwrap();
    let mut pairs = 0;
    for line in gold.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(labels[f[0]], labels[f[1]]);
        assert_eq!(f[2], "1");
        pairs += 1;
    }
    // two communities of 30: 2 · C(30, 2) co-member pairs
    assert_eq!(pairs, 2 * 30 * 29 / 2);
}

#[test]
fn resume_folds_in_new_documents() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_small(tmp.path());
    let edges = data.join("edges.tsv");
    let out = tmp.path().join("out");
    let mut args = vec!["pipeline", "--edges", s(&edges), "--out-dir", s(&out)];
    args.extend_from_slice(SMALL);
    assert_eq!(exec(&args), EXIT_OK);
    let before = PaperVectors::read_model_file(out.join("model.bin")).unwrap();

    let delta = tmp.path().join("delta.tsv");
    fs::write(&delta, "new1\td00\nnew1\td01\nnew2\tnew1\n").unwrap();
    let (model, ckpt) = (tmp.path().join("m2.bin"), tmp.path().join("c2.bin"));
    let resume = out.join("checkpoint.bin");
    let mut args = vec![
        "train",
        "--edges",
        s(&edges),
        "--resume",
        s(&resume),
        "--edges-delta",
        s(&delta),
        "--model",
        s(&model),
        "--checkpoint",
        s(&ckpt),
    ];
    args.extend_from_slice(&["--epochs", "10", "--seed", "5"]);
    assert_eq!(exec(&args), EXIT_OK);

    let after = PaperVectors::read_model_file(&model).unwrap();
    assert_eq!(after.len(), before.len() + 2);
    assert_eq!(&after.ids().ids()[..before.len()], before.ids().ids());
    let new1 = after.ids().lookup("new1").unwrap();
    assert!(after.is_embedded(new1));
    assert_eq!(Checkpoint::read_file(&ckpt).unwrap().ids.len(), after.len());

    // resuming with --context is rejected by the parser
    let ctx = out.join("context.tsv");
    let mut bad = args.clone();
    bad.extend_from_slice(&["--context", s(&ctx)]);
    assert_eq!(exec(&bad), EXIT_USAGE);
}
