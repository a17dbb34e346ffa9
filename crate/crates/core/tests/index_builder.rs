use proptest::prelude::*;

use povkit_core::index_builder::{build_indices, IndexError, OUTREACH_FIELDS, USAGE_FIELD};
use povkit_core::panel_store::{AnalysisPanel, Field, Iso3, PanelRow};

const INDICATORS: [Field; 5] = [OUTREACH_FIELDS[0], OUTREACH_FIELDS[1], OUTREACH_FIELDS[2], OUTREACH_FIELDS[3], USAGE_FIELD];

fn iso(i: usize) -> Iso3 {
    Iso3::new(&format!("Y{}{}", (b'A' + (i / 26) as u8) as char, (b'A' + (i % 26) as u8) as char)).unwrap()
}

fn panel(cells: &[[f64; 5]], scales: [f64; 5]) -> AnalysisPanel {
    let rows = cells
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut r = PanelRow::new(iso(i / 4), 2010 + (i % 4) as i32);
            for (j, f) in INDICATORS.iter().enumerate() {
                r = r.with(*f, v[j] * scales[j]);
            }
            r
        })
        .collect();
    AnalysisPanel::from_rows(rows).unwrap()
}

/// Indicators sharing a common depth factor so the leading component is well defined.
fn arb_cells() -> impl Strategy<Value = Vec<[f64; 5]>> {
    proptest::collection::vec((0.1f64..10.0, proptest::array::uniform5(0.5f64..1.5)), 12..60).prop_map(|rows| {
        rows.into_iter().map(|(depth, noise)| std::array::from_fn(|j| depth * noise[j] * (j + 1) as f64)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_span_the_unit_interval(cells in arb_cells()) {
        let build = build_indices(&panel(&cells, [1.0; 5])).unwrap();
        for s in [&build.fii, &build.outreach, &build.usage] {
            let min = s.values.values().copied().fold(f64::INFINITY, f64::min);
            let max = s.values.values().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(min, 0.0);
            prop_assert_eq!(max, 1.0);
            prop_assert_eq!(s.values.len(), cells.len());
        }
    }

    #[test]
    fn rescaling_an_indicator_leaves_the_indices(cells in arb_cells(), scales in proptest::array::uniform5(0.01f64..100.0)) {
        let a = build_indices(&panel(&cells, [1.0; 5])).unwrap();
        let b = build_indices(&panel(&cells, scales)).unwrap();
        for (x, y) in [(&a.fii, &b.fii), (&a.outreach, &b.outreach), (&a.usage, &b.usage)] {
            for (k, v) in &x.values {
                prop_assert!((v - y.values[k]).abs() < 1e-9, "{k:?}: {v} vs {}", y.values[k]);
            }
        }
        prop_assert!((a.fii_pca.eigenvalue - b.fii_pca.eigenvalue).abs() < 1e-9);
    }

    #[test]
    fn identical_input_identical_output(cells in arb_cells()) {
        let p = panel(&cells, [1.0; 5]);
        let a = build_indices(&p).unwrap();
        let b = build_indices(&p).unwrap();
        prop_assert_eq!(a.diagnostics(), b.diagnostics());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn constant_indicator_is_degenerate() {
    let cells: Vec<[f64; 5]> = (0..12).map(|i| [1.0, i as f64, (i * i) as f64, 2.0 * i as f64 + 1.0, 3.0 + i as f64]).collect();
    match build_indices(&panel(&cells, [1.0; 5])) {
        Err(IndexError::DegenerateColumn(name)) => assert_eq!(name, INDICATORS[0].name()),
        other => panic!("expected DegenerateColumn, got {other:?}"),
    }
}

#[test]
fn loadings_are_positive_for_comoving_indicators() {
    let cells: Vec<[f64; 5]> = (1..=20).map(|i| {
        let d = i as f64;
        [d, d * 1.1 + 0.3 * (d * 0.7).sin(), d * 0.9, d + (d * 1.3).cos(), d * 2.0]
    }).collect();
    let build = build_indices(&panel(&cells, [1.0; 5])).unwrap();
    assert!(build.outreach_pca.weights.iter().all(|w| *w > 0.0));
    assert!(!build.outreach_pca.mixed_signs);
    assert!((build.outreach_pca.variance_share - build.outreach_pca.eigenvalue / 4.0).abs() == 0.0);
}
