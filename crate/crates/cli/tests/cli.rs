use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn povkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povkit")).args(args).output().expect("binary runs")
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn regress_on_bundled_panel_writes_tables() {
    let out = tempfile::tempdir().unwrap();
    let panel = data_dir().join("merged.csv");
    let o = povkit(&[
        "regress",
        "--panel",
        s(&panel),
        "--dep",
        "d_headcount",
        "--x",
        "d_gini,gdp_growth,d_fii",
        "--interact",
        "d_gini:d_fii",
        "--fe",
        "country",
        "--cluster",
        "country",
        "--layout",
        "table3",
        "--out-dir",
        s(out.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.csv", "table.txt", "table.csv", "marginal_effects.csv"] {
        assert!(out.path().join(f).is_file(), "{f} missing");
    }
    let text = fs::read_to_string(out.path().join("table.txt")).unwrap();
    assert!(text.contains("Observations"));
    assert!(text.contains("Robust standard error cluster"));
}

#[test]
fn decompose_identical_files_gives_zero_row() {
    let sample = data_dir().join("incomes_initial.csv");
    let o = povkit(&["decompose", "--initial", s(&sample), "--final", s(&sample), "--line", "1.90", "--measure", "headcount"]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("measure,z,total,growth,redistribution,residual,reference"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "headcount");
    for cell in &row[2..6] {
        assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn constant_indicator_column_exits_with_degenerate_column_code() {
    let dir = tempfile::tempdir().unwrap();
    let fas = dir.path().join("fas.csv");
    let mut csv = String::from(
        "iso3,country_name,year,branches_per_100k,atms_per_100k,branches_per_1000km2,atms_per_1000km2,accounts_per_1000\n",
    );
    for (i, c) in ["AAA", "BBB", "CCC", "DDD"].iter().enumerate() {
        let v = i as f64 + 1.0;
        csv.push_str(&format!("{c},{c},2010,5,{},{},{},{}\n", 2.0 * v, v * v, 3.0 * v + 1.0, 100.0 * v));
    }
    fs::write(&fas, csv).unwrap();
    let o = povkit(&["index", "build", "--fas", s(&fas), "--out-dir", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(60));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DegenerateColumn"));
}

#[test]
fn missing_file_exits_with_panel_io_code() {
    let o = povkit(&["regress", "--panel", "/nonexistent/merged.csv", "--dep", "d_headcount", "--x", "d_gini"]);
    assert_eq!(o.status.code(), Some(10));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[Io]"));
}

#[test]
fn unknown_measure_and_bad_line_have_distinct_codes() {
    let sample = data_dir().join("incomes_initial.csv");
    let unknown = povkit(&["measures", "--sample", s(&sample), "--measures", "theil"]);
    let bad_line = povkit(&["measures", "--sample", s(&sample), "--line", "0"]);
    assert_eq!(unknown.status.code(), Some(41));
    assert_eq!(bad_line.status.code(), Some(34));
}

#[test]
fn layout_mismatch_exit_code() {
    let out = tempfile::tempdir().unwrap();
    let panel = data_dir().join("merged.csv");
    let o = povkit(&[
        "regress",
        "--panel",
        s(&panel),
        "--dep",
        "d_headcount",
        "--x",
        "d_gini,gdp_growth",
        "--layout",
        "table3",
        "--out-dir",
        s(out.path()),
    ]);
    assert_eq!(o.status.code(), Some(100));
}

#[test]
fn help_documents_exit_codes() {
    let o = povkit(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("Exit codes"));
    assert!(text.contains("60  index_builder::DegenerateColumn"));
    assert!(text.contains("POVKIT_SEED"));
}

#[test]
fn simulate_honours_seed_env() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let run = |dir: &Path, seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_povkit"))
            .args(["simulate", "--out-dir", s(dir)])
            .env("POVKIT_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read(dir.join("povcal.csv")).unwrap()
    };
    assert_eq!(run(a.path(), "7"), run(b.path(), "7"));
    assert_ne!(run(a.path(), "7"), run(c.path(), "8"));
}

#[test]
fn bundled_data_matches_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_povkit"))
        .args(["simulate", "--out-dir", s(dir.path())])
        .env_remove("POVKIT_SEED")
        .output()
        .unwrap();
    assert!(o.status.success());
    for f in ["fas.csv", "povcal.csv", "weo.csv", "findex.csv", "population.csv", "income_class.csv"] {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(data_dir().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn regress_then_forecast_and_report() {
    let out = tempfile::tempdir().unwrap();
    let d = data_dir();
    let panel = d.join("merged.csv");
    let o = povkit(&[
        "regress",
        "--panel",
        s(&panel),
        "--dep",
        "d_headcount",
        "--x",
        "d_gini,gdp_growth,d_fii",
        "--interact",
        "d_gini:d_fii",
        "--layout",
        "table3",
        "--out-dir",
        s(out.path()),
    ]);
    assert!(o.status.success());
    let model = out.path().join("model.csv");
    let fc = out.path().join("fc");
    let o = povkit(&[
        "forecast",
        "--model",
        s(&model),
        "--panel",
        s(&panel),
        "--weo",
        s(&d.join("weo.csv")),
        "--population",
        s(&d.join("population.csv")),
        "--scope",
        "low,lower_middle",
        "--out-dir",
        s(&fc),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let global = fs::read_to_string(fc.join("forecast_global.csv")).unwrap();
    assert!(global.starts_with("year,scenario,rate,poor_count"));
    assert_eq!(global.lines().count(), 1 + 3 * 4);

    let o = povkit(&["report", "--layout", "table3", "--input", s(&out.path().join("table.csv"))]);
    assert!(o.status.success());
    let rerendered = String::from_utf8(o.stdout).unwrap();
    assert_eq!(rerendered, fs::read_to_string(out.path().join("table.txt")).unwrap());
}
