//! End-to-end runs of the command-line tool through `cli::run`.

use std::fs;
use std::path::Path;

use subgraph_ssl::cli;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["subgraph-ssl"];
    full.extend_from_slice(args);
    cli::run(full)
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_train_infer_eval_on_separable_mixture() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| path(tmp.path(), n);
    assert_eq!(
        run(&[
            "synth",
            "--classes",
            "2",
            "--per-class",
            "100",
            "--dim",
            "8",
            "--separation",
            "6",
            "--seed",
            "1",
            "--out",
            &p("train.csv"),
            "--test-per-class",
            "50",
            "--test-out",
            &p("test.csv"),
        ]),
        0
    );
    // every labeled sample per class joins each subgraph and the
    // prediction averages 30 wirings, see the README
    assert_eq!(
        run(&[
            "train",
            "--data",
            &p("train.csv"),
            "--validation",
            &p("test.csv"),
            "--ssl",
            "denoise",
            "--epochs",
            "30",
            "--out",
            &p("run"),
            "--set",
            "hidden=32",
            "--set",
            "labeled_per_class=10",
            "--set",
            "affine_classifier=true",
            "--set",
            "repeats=30",
        ]),
        0
    );
    for f in [
        "manifest.txt",
        "checkpoint.bin",
        "pseudolabels.csv",
        "metrics.json",
        "train.log",
    ] {
        assert!(tmp.path().join("run").join(f).exists(), "{f} missing");
    }
    let metrics = json(&p("run/metrics.json"));
    assert!(
        metrics["accuracy_overall"].as_f64().unwrap() > 0.9,
        "{metrics}"
    );
    assert_eq!(metrics["mad_per_layer"].as_array().unwrap().len(), 2);

    assert_eq!(
        run(&[
            "infer",
            "--run",
            &p("run"),
            "--test",
            &p("test.csv"),
            "--out",
            &p("pred.csv")
        ]),
        0
    );
    let preds = fs::read_to_string(p("pred.csv")).unwrap();
    assert_eq!(preds.lines().count(), 101);

    assert_eq!(
        run(&[
            "eval",
            "--predictions",
            &p("pred.csv"),
            "--truth",
            &p("test.csv"),
            "--out",
            &p("eval.json")
        ]),
        0
    );
    let eval = json(&p("eval.json"));
    assert!(eval["accuracy_overall"].as_f64().unwrap() > 0.9, "{eval}");
    assert!(eval["map"].as_f64().unwrap() > 0.9, "{eval}");

    assert_eq!(
        run(&[
            "mad",
            "--run",
            &p("run"),
            "--subgraphs",
            "3",
            "--out",
            &p("mad.json")
        ]),
        0
    );
    assert_eq!(
        json(&p("mad.json"))["mad_per_layer"]
            .as_array()
            .unwrap()
            .len(),
        2
    );

    assert_eq!(
        run(&[
            "robust",
            "--run",
            &p("run"),
            "--test",
            &p("test.csv"),
            "--sigmas",
            "0,1",
            "--out",
            &p("robust.json")
        ]),
        0
    );
    assert_eq!(
        json(&p("robust.json"))["noise_levels"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn config_file_and_binary_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| path(tmp.path(), n);
    assert_eq!(
        run(&[
            "synth",
            "--classes",
            "3",
            "--per-class",
            "20",
            "--dim",
            "4",
            "--out",
            &p("d.bin")
        ]),
        0
    );
    fs::write(
        p("run.cfg"),
        format!(
            "data = {}\nout = {}\nepochs = 2\nhidden = 8\nssl = all\n",
            p("d.bin"),
            p("run")
        ),
    )
    .unwrap();
    assert_eq!(run(&["train", "--config", &p("run.cfg")]), 0);
    let manifest = fs::read_to_string(p("run/manifest.txt")).unwrap();
    assert!(manifest.contains("epochs = 2"), "{manifest}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| path(tmp.path(), n);
    // usage and configuration errors
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["train", "--out", &p("run")]), 1);
    assert_eq!(
        run(&[
            "train",
            "--data",
            &p("x.csv"),
            "--out",
            &p("run"),
            "--set",
            "nonsense=1"
        ]),
        1
    );
    assert_eq!(
        run(&[
            "train",
            "--data",
            &p("x.csv"),
            "--out",
            &p("run"),
            "--set",
            "epochs"
        ]),
        1
    );
    // data errors
    assert_eq!(
        run(&["train", "--data", &p("missing.csv"), "--out", &p("run")]),
        2
    );
    fs::write(p("bad.csv"), "id,label,f0,f1\na,0,1\n").unwrap();
    assert_eq!(
        run(&["train", "--data", &p("bad.csv"), "--out", &p("run")]),
        2
    );
    fs::write(p("bad.bin"), b"NOPE").unwrap();
    assert_eq!(
        run(&["train", "--data", &p("bad.bin"), "--out", &p("run")]),
        2
    );
}
