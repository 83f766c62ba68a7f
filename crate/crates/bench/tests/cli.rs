//! End-to-end runs of the `ecsdbn` binary on small settings.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ecsdbn_bench::record::read_records;

const QUICK: [&str; 8] = [
    "--pretrain-epochs",
    "5",
    "--finetune-epochs",
    "20",
    "--population",
    "10",
    "--generations",
    "5",
];

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/keel")
        .join(format!("{name}.dat"))
}

fn ecsdbn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecsdbn"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_catalog(dir: &Path, lines: &[String]) -> PathBuf {
    let path = dir.join("catalog.txt");
    std::fs::write(&path, lines.join("\n")).unwrap();
    path
}

fn records(dir: &Path) -> Vec<ecsdbn_bench::record::RunRecord> {
    read_records(std::fs::File::open(dir.join("runs.csv")).unwrap()).unwrap()
}

#[test]
fn one_dataset_grid_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(dir.path(), &[format!("iris0 {}", data("iris0").display())]);
    let out = dir.path().join("out");
    let mut args = vec!["run", "--catalog", s(&catalog), "--trials", "1", "--out", s(&out)];
    args.extend(QUICK);
    let res = ecsdbn(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rs = records(&out);
    assert_eq!(rs.len(), 10);
    assert_eq!(rs.iter().filter(|r| r.method == "ecs-dbn").count(), 5);
    assert!(rs.iter().all(|r| (r.method == "ecs-dbn") == r.best_costs.is_some()));
    for file in ["summary.csv", "compare.csv", "compare.txt"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
}

#[test]
fn missing_dataset_is_skipped_and_exit_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(
        dir.path(),
        &[
            "ghost does-not-exist.dat".to_string(),
            format!("iris0 {}", data("iris0").display()),
        ],
    );
    let out = dir.path().join("out");
    let mut args = vec![
        "run",
        "--catalog",
        s(&catalog),
        "--trials",
        "1",
        "--methods",
        "dbn",
        "--out",
        s(&out),
    ];
    args.extend(QUICK);
    let res = ecsdbn(&args);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("ghost"));
    let rs = records(&out);
    assert_eq!(rs.len(), 5);
    assert!(rs.iter().all(|r| r.dataset == "iris0"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(dir.path(), &[format!("iris0 {}", data("iris0").display())]);
    let bad_folds = ecsdbn(&["run", "--catalog", s(&catalog), "--folds", "1"]);
    assert_eq!(bad_folds.status.code(), Some(2));
    let bad_method = ecsdbn(&["run", "--catalog", s(&catalog), "--methods", "svm"]);
    assert_eq!(bad_method.status.code(), Some(2));
    let no_catalog = ecsdbn(&["run", "--catalog", s(&dir.path().join("nope.txt"))]);
    assert_eq!(no_catalog.status.code(), Some(2));
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "depth = 3\n").unwrap();
    let unknown_key = ecsdbn(&["run", "--config", s(&config)]);
    assert_eq!(unknown_key.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown_key.stderr).contains("depth"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_catalog(dir.path(), &[format!("haberman {}", data("haberman").display())]);
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "# relative paths resolve next to this file\ncatalog = catalog.txt\nout = from-config\n\
         trials = 3\nfolds = 3\nmethods = dbn\nseed = 5\n\
         pretrain-epochs = 5\nfinetune-epochs = 20\n",
    )
    .unwrap();
    let res = ecsdbn(&["run", "--config", s(&config), "--trials", "1", "--seed", "9"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rs = records(&dir.path().join("from-config"));
    assert_eq!(rs.len(), 3);
    assert!(rs.iter().all(|r| r.trial == 0 && r.method == "dbn"));
    assert_eq!(rs.iter().map(|r| r.fold).max(), Some(2));
    let other = ecsdbn(&[
        "run",
        "--config",
        s(&config),
        "--trials",
        "1",
        "--seed",
        "9",
        "--out",
        s(&dir.path().join("b")),
    ]);
    assert!(other.status.success());
    let strip = |rs: Vec<ecsdbn_bench::record::RunRecord>| -> Vec<_> {
        rs.into_iter()
            .map(|r| ecsdbn_bench::record::RunRecord { wall_time_s: 0.0, ..r })
            .collect()
    };
    assert_eq!(strip(records(&dir.path().join("b"))), strip(rs));
}

#[test]
fn aggregate_and_compare_read_a_runs_file() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(
        dir.path(),
        &[
            format!("iris0 {}", data("iris0").display()),
            format!("haberman {}", data("haberman").display()),
        ],
    );
    let out = dir.path().join("out");
    let mut args = vec!["run", "--catalog", s(&catalog), "--trials", "1", "--out", s(&out)];
    args.extend(QUICK);
    assert!(ecsdbn(&args).status.success());
    let runs = out.join("runs.csv");

    let table = ecsdbn(&["aggregate", s(&runs)]);
    assert!(table.status.success());
    let text = String::from_utf8_lossy(&table.stdout);
    assert!(text.contains("haberman") && text.contains("±"), "{text}");

    let summary = dir.path().join("summary.csv");
    assert!(ecsdbn(&["aggregate", s(&runs), "--out", s(&summary)]).status.success());
    assert_eq!(
        std::fs::read_to_string(&summary).unwrap(),
        std::fs::read_to_string(out.join("summary.csv")).unwrap()
    );

    let cmp_csv = dir.path().join("cmp.csv");
    let cmp = ecsdbn(&["compare", s(&runs), "--csv", s(&cmp_csv)]);
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    assert!(String::from_utf8_lossy(&cmp.stdout).contains("dbn"));
    assert!(std::fs::read_to_string(&cmp_csv).unwrap().lines().count() > 1);

    let unknown = ecsdbn(&["compare", s(&runs), "--control", "nothing"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn inspect_reports_class_balance() {
    let res = ecsdbn(&["inspect-dataset", s(&data("new-thyroid1"))]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("samples:     215"), "{text}");
    assert!(text.contains("IR:          5.1429"), "{text}");
    assert_eq!(ecsdbn(&["inspect-dataset", "missing.dat"]).status.code(), Some(1));
}

#[test]
fn trained_model_predicts_its_training_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let iris = data("iris0");
    let res = ecsdbn(&["train", s(&iris), "--out", s(&model), "--generations", "10"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let labels = dir.path().join("pred.csv");
    let res = ecsdbn(&["predict", "--model", s(&model), s(&data("iris0")), "--out", s(&labels)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&labels).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 150);
    let correct = rows
        .iter()
        .filter(|r| {
            let f: Vec<&str> = r.split(',').collect();
            f[1] == f[2]
        })
        .count();
    assert!(correct >= 140, "{correct}/150 correct");

    std::fs::write(&model, "{\"format\": \"other\"}").unwrap();
    assert_ne!(
        ecsdbn(&["predict", "--model", s(&model), s(&data("iris0"))])
            .status
            .code(),
        Some(0)
    );
}
