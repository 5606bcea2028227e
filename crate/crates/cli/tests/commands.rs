use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use weakauto::datagen::Group;
use weakauto::{GroupSpec, SupervisionSpec, Table, WeakDataset};
use weakauto_cli::formats::{format_probs, read_dataset, write_dataset};

fn weakauto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakauto"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read_json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// The manifest is the last stderr line.
fn manifest(out: &Output) -> Value {
    let text = stderr(out);
    serde_json::from_str(text.lines().last().expect("manifest line")).unwrap()
}

/// A two-instance dataset with one annotation and no features to speak of.
fn fixture(dir: &TempDir, spec: SupervisionSpec) -> String {
    let mut dataset: WeakDataset = {
        let out = path(dir, "seed.json");
        let run = weakauto(&["gen", "--setting", "pcomp", "--pairs", "1", "--out", &out]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        read_dataset(Path::new(&out)).unwrap()
    };
    dataset.groups = vec![Group {
        instances: vec![vec![0.0, 0.0]; spec.len()],
        spec: GroupSpec::Single(spec),
        labels: None,
    }];
    let file = path(dir, "fixture.json");
    write_dataset(Path::new(&file), &dataset).unwrap();
    file
}

#[test]
fn gen_pcomp_counts() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "pcomp.json");
    let run = weakauto(&[
        "gen",
        "--setting",
        "pcomp",
        "--pairs",
        "2000",
        "--prior",
        "0.5",
        "--seed",
        "7",
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let dataset = read_dataset(Path::new(&out)).unwrap();
    assert_eq!(dataset.groups.len(), 2000);
    assert!(dataset.groups.iter().all(|g| g.instances.len() == 2));
    let m = manifest(&run);
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["exit_status"], 0);
    assert_eq!(m["params"]["pairs"], 2000);
    let on_disk = read_json(&format!("{out}.manifest.json"));
    assert_eq!(on_disk["command"], "gen");
}

#[test]
fn gen_label_proportion_bags() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "lp.json");
    let run = weakauto(&[
        "gen",
        "--setting",
        "label_proportion",
        "--bags",
        "200",
        "--size-mean",
        "10",
        "--size-std",
        "2",
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let dataset = read_dataset(Path::new(&out)).unwrap();
    assert_eq!(dataset.groups.len(), 200);
    assert!(dataset.groups.iter().all(|g| !g.instances.is_empty()));
}

#[test]
fn gen_rejects_bad_prior() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "bad.json");
    let run = weakauto(&["gen", "--setting", "pcomp", "--prior", "1.5", "--out", &out]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("prior must lie in (0,1)"));
    assert_eq!(manifest(&run)["exit_status"], 2);
    assert!(!Path::new(&out).exists());
}

#[test]
fn gen_rejects_unknown_setting_and_multiclass_pairs() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "bad.json");
    assert_eq!(
        code(&weakauto(&["gen", "--setting", "nope", "--out", &out])),
        2
    );
    let run = weakauto(&["gen", "--setting", "pcomp", "--classes", "3", "--out", &out]);
    assert_eq!(code(&run), 2);
}

#[test]
fn gen_round_trips_in_memory_dataset() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "mi.json");
    let run = weakauto(&[
        "gen",
        "--setting",
        "multi_instance",
        "--bags",
        "50",
        "--seed",
        "3",
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 0);
    let data =
        weakauto::gen_gaussians(2000, &weakauto::Gaussians::standard(2, 1.0).unwrap(), 3).unwrap();
    let params = weakauto::WeakenParams {
        bags: 50,
        ..Default::default()
    };
    let expected = weakauto::weaken(&data, weakauto::Setting::MultiInstance, &params, 3).unwrap();
    assert_eq!(read_dataset(Path::new(&out)).unwrap(), expected);
}

#[test]
fn marginals_pairwise_comparison_fixture() {
    let dir = TempDir::new().unwrap();
    let dataset = fixture(&dir, SupervisionSpec::PairwiseComparison);
    let probs = path(&dir, "probs.csv");
    fs::write(&probs, format_probs(&Table::uniform(2, 2)).unwrap()).unwrap();
    let out = path(&dir, "marginals.json");
    let run = weakauto(&[
        "marginals",
        "--dataset",
        &dataset,
        "--probs",
        &probs,
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let json = read_json(&out);
    let group = &json["groups"][0];
    assert_eq!(group["kind"], "pairwise_comparison");
    let log_z = group["log_z"].as_f64().unwrap();
    assert!((log_z + 0.287_682_072_4).abs() < 1e-10);
    let expected = [[1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0 / 3.0]];
    for (j, row) in expected.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            let t = group["targets"][j][k].as_f64().unwrap();
            assert!((t - e).abs() < 1e-12);
        }
    }
}

#[test]
fn marginals_full_labels_are_one_hot() {
    let dir = TempDir::new().unwrap();
    let dataset = fixture(
        &dir,
        SupervisionSpec::FullLabels {
            labels: vec![1, 0, 1],
        },
    );
    let probs = path(&dir, "probs.csv");
    fs::write(&probs, "# rows=3 cols=2\n0.3,0.7\n0.8,0.2\n0.5,0.5\n").unwrap();
    let out = path(&dir, "marginals.json");
    let run = weakauto(&[
        "marginals",
        "--dataset",
        &dataset,
        "--probs",
        &probs,
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let targets = &read_json(&out)["groups"][0]["targets"];
    let want = [[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
    for (j, row) in want.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            assert_eq!(targets[j][k].as_f64().unwrap(), *e);
        }
    }
}

#[test]
fn marginals_row_mismatch_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let dataset = fixture(&dir, SupervisionSpec::PairwiseComparison);
    let probs = path(&dir, "probs.csv");
    fs::write(&probs, format_probs(&Table::uniform(3, 2)).unwrap()).unwrap();
    let out = path(&dir, "marginals.json");
    let run = weakauto(&[
        "marginals",
        "--dataset",
        &dataset,
        "--probs",
        &probs,
        "--out",
        &out,
    ]);
    assert_eq!(code(&run), 2);
    assert!(!Path::new(&out).exists());
}

#[test]
fn train_missing_dataset_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let run = weakauto(&[
        "train",
        "--dataset",
        &path(&dir, "absent.json"),
        "--out",
        &path(&dir, "m.json"),
    ]);
    assert_eq!(code(&run), 2);
    assert_eq!(manifest(&run)["command"], "train");
}

#[test]
fn train_zero_epochs_records_initial_accuracy() {
    let dir = TempDir::new().unwrap();
    let (train, test) = (path(&dir, "train.json"), path(&dir, "test.json"));
    assert_eq!(
        code(&weakauto(&[
            "gen",
            "--setting",
            "pcomp",
            "--pairs",
            "200",
            "--n-per-class",
            "200",
            "--out",
            &train,
        ])),
        0
    );
    assert_eq!(
        code(&weakauto(&[
            "gen",
            "--setting",
            "supervised",
            "--n-per-class",
            "200",
            "--seed",
            "1000",
            "--out",
            &test,
        ])),
        0
    );
    let metrics = path(&dir, "metrics.json");
    let run = weakauto(&[
        "train",
        "--dataset",
        &train,
        "--test",
        &test,
        "--epochs",
        "0",
        "--seed",
        "5",
        "--out",
        &metrics,
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let json = read_json(&metrics);
    let epochs = json["epochs"].as_array().unwrap();
    assert_eq!(epochs.len(), 1);
    assert_eq!(epochs[0]["epoch"], 0);
    let acc = epochs[0]["test_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert_eq!(json["final_test_accuracy"].as_f64().unwrap(), acc);
}

#[test]
fn verify_small_run_passes() {
    let run = weakauto(&["verify", "--trials", "5", "--max-len", "5"]);
    assert_eq!(code(&run), 0, "{}", stdout(&run));
    assert!(stdout(&run).contains("max deviation"));
}

#[test]
fn verify_fault_reports_first_failure() {
    let run = weakauto(&[
        "verify",
        "--kind",
        "label_proportion",
        "--trials",
        "5",
        "--max-len",
        "5",
        "--inject-fault",
        "2",
    ]);
    assert_eq!(code(&run), 1);
    let text = stdout(&run);
    assert!(text.contains("kind=label_proportion"), "{text}");
    assert!(text.contains("seed=") && text.contains("L="));
}

#[test]
fn verify_guard_and_unknown_kind() {
    assert_eq!(code(&weakauto(&["verify", "--max-len", "30"])), 2);
    assert_eq!(code(&weakauto(&["verify", "--kind", "nope"])), 2);
}

#[test]
fn bench_single_length_and_zero_length() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "bench.json");
    let run = weakauto(&["bench", "--lengths", "50", "--repeats", "2", "--out", &out]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let rows = read_json(&out)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].get("ratio").is_none());
    assert_eq!(code(&weakauto(&["bench", "--lengths", "100,0"])), 2);
}

#[test]
fn bench_multi_instance_runs() {
    let run = weakauto(&[
        "bench",
        "--kind",
        "multi-instance",
        "--lengths",
        "20,40",
        "--repeats",
        "3",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert_eq!(stdout(&run).lines().count(), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&weakauto(&["frobnicate"])), 2);
    assert_eq!(code(&weakauto(&["gen"])), 2);
    assert_eq!(code(&weakauto(&["--version"])), 0);
}
