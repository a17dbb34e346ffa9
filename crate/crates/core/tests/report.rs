use std::path::Path;
use std::sync::OnceLock;

use proptest::prelude::*;

use povkit_core::pipeline::{ingest, run_pipeline, PipelineInputs, PipelineOptions, PipelineOutput};
use povkit_core::report::{
    fmt3, fmt_sig3, read_model_csv, read_regression_csv, read_summary_csv, read_table_a1, render_table, Layout,
    TableInput,
};

fn bundled() -> PipelineInputs {
    PipelineInputs::from_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic"))
}

fn output() -> &'static PipelineOutput {
    static OUT: OnceLock<PipelineOutput> = OnceLock::new();
    OUT.get_or_init(|| run_pipeline(&bundled(), &PipelineOptions::default()).unwrap())
}

fn file(name: &str) -> &'static str {
    output().files.get(name).unwrap_or_else(|| panic!("pipeline wrote no {name}"))
}

#[test]
fn regression_tables_rerender_from_their_csv() {
    for layout in [Layout::Table2, Layout::Table3, Layout::Table4, Layout::TableA4] {
        let cols = read_regression_csv(file(&format!("{}.csv", layout.name())).as_bytes()).unwrap();
        assert!(!cols.is_empty(), "{}", layout.name());
        let again = render_table(TableInput::Regressions(&cols), layout).unwrap();
        assert_eq!(again.text, file(&format!("{}.txt", layout.name())), "{}", layout.name());
        assert_eq!(again.csv, file(&format!("{}.csv", layout.name())), "{}", layout.name());
    }
}

#[test]
fn summary_table_rerenders_from_its_csv() {
    let rows = read_summary_csv(file("table1.csv").as_bytes()).unwrap();
    let (a, b): (Vec<_>, Vec<_>) = rows.into_iter().partition(|(panel, _)| panel == "A");
    let levels: Vec<_> = a.into_iter().map(|(_, s)| s).collect();
    let changes: Vec<_> = b.into_iter().map(|(_, s)| s).collect();
    assert!(!levels.is_empty() && !changes.is_empty());
    let again = render_table(TableInput::Summary { levels: &levels, changes: &changes }, Layout::Table1).unwrap();
    assert_eq!(again.text, file("table1.txt"));
    assert_eq!(again.csv, file("table1.csv"));
}

#[test]
fn model_file_keeps_full_precision() {
    let model = read_model_csv(file("model_table3_col1.csv").as_bytes(), "d_headcount").unwrap();
    let table = read_regression_csv(file("table3.csv").as_bytes()).unwrap();
    let col = &table[0];
    for name in &model.names {
        assert_eq!(model.coefficient(name), col.coefficient(name), "{name}");
        let (a, b) = (model.std_error(name).unwrap(), col.std_error(name).unwrap());
        assert!((a - b).abs() <= 1e-15 * b.abs(), "{name}: {a} vs {b}");
    }
}

#[test]
fn index_table_matches_the_series() {
    let merged = ingest(&bundled()).unwrap();
    let build = merged.index.expect("bundled data carries banking indicators");
    let rows = read_table_a1(file("fii.csv").as_bytes()).unwrap();
    let countries: std::collections::BTreeSet<_> = build.fii.values.keys().map(|k| k.0).collect();
    assert_eq!(rows.len(), countries.len());
    let mut checked = 0;
    for iso3 in countries {
        let name = merged.panel.display_name(&iso3);
        let row = rows.iter().find(|r| r.country == name).unwrap_or_else(|| panic!("no row for {name}"));
        assert_eq!(row.income_level, merged.panel.income_level(&iso3));
        for (&(c, y), v) in &build.fii.values {
            if c == iso3 {
                assert!((row.values[&y] - v).abs() <= 5e-4 + 1e-12, "{name} {y}: {} vs {v}", row.values[&y]);
                checked += 1;
            }
        }
        assert_eq!(row.values.len(), build.fii.values.keys().filter(|k| k.0 == iso3).count());
    }
    assert_eq!(checked, build.fii.values.len());
}

#[test]
fn table1_rejects_regression_input() {
    let cols = read_regression_csv(file("table2.csv").as_bytes()).unwrap();
    assert!(render_table(TableInput::Regressions(&cols), Layout::Table1).is_err());
}

proptest! {
    #[test]
    fn fmt3_reparses_within_half_a_unit(v in -1e6f64..1e6) {
        let s = fmt3(v);
        prop_assert!(!s.starts_with("-0.000"));
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-4 + 1e-9 * v.abs());
    }

    #[test]
    fn fmt_sig3_keeps_three_significant_digits(v in prop_oneof![-1e4f64..-1e-4, 1e-4f64..1e4]) {
        let s = fmt_sig3(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!(((back - v) / v).abs() <= 5e-3 + 1e-12, "{v} -> {s}");
        prop_assert!(!s.contains('.') || !s.ends_with('0'), "{s}");
    }
}
