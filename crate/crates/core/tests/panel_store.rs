use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use povkit_core::panel_store::{
    first_difference, forward_fill_waves, merge_panels, read_csv, summarize, write_merged_csv, AnalysisPanel,
    CountryInfo, Field, IncomeLevel, Iso3, PanelRow, Schema,
};

fn iso(i: usize) -> Iso3 {
    Iso3::new(&format!("X{}{}", (b'A' + (i / 26) as u8) as char, (b'A' + (i % 26) as u8) as char)).unwrap()
}

/// Rows over `n` countries with random year sets and valid values.
fn arb_panel() -> impl Strategy<Value = AnalysisPanel> {
    let country = (
        proptest::collection::btree_set(2000i32..2020, 1..8),
        proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.2f64..0.6, -0.1f64..0.1, 1e3f64..1e8), 8),
        proptest::option::of(0usize..4),
    );
    proptest::collection::vec(country, 1..8).prop_map(|countries| {
        let mut rows = Vec::new();
        let mut infos = BTreeMap::new();
        for (c, (years, vals, level)) in countries.into_iter().enumerate() {
            let code = iso(c);
            infos.insert(
                code,
                CountryInfo { name: Some(format!("Country {c}")), income_level: level.map(|l| IncomeLevel::ALL[l]) },
            );
            for (k, year) in years.into_iter().enumerate() {
                let (a, b, cc, gini, g, pop) = vals[k % vals.len()];
                // Headcount >= gap >= squared gap.
                let h = a;
                let gap = a * b;
                let gap2 = gap * cc;
                let mut row = PanelRow::new(code, year)
                    .with(Field::Headcount, h)
                    .with(Field::PovertyGap, gap)
                    .with(Field::PovertyGapSq, gap2)
                    .with(Field::Gini, gini)
                    .with(Field::GdpGrowth, g)
                    .with(Field::Population, pop);
                if k % 3 == 1 {
                    row.set(Field::Gini, None);
                }
                row.gdp_is_forecast = Some(year > 2015);
                rows.push(row);
            }
        }
        AnalysisPanel::new(rows, infos).unwrap()
    })
}

/// Splits a panel into single-field fragments, all disjoint in content.
fn fragments(panel: &AnalysisPanel) -> Vec<AnalysisPanel> {
    let mut out = Vec::new();
    for &f in &[Field::Headcount, Field::PovertyGap, Field::PovertyGapSq, Field::Gini, Field::GdpGrowth, Field::Population]
    {
        let rows: Vec<PanelRow> = panel
            .rows()
            .iter()
            .filter_map(|r| r.get(f).map(|v| {
                let mut row = PanelRow::new(r.iso3, r.year).with(f, v);
                if f == Field::GdpGrowth {
                    row.gdp_is_forecast = r.gdp_is_forecast;
                }
                row
            }))
            .collect();
        out.push(AnalysisPanel::from_rows(rows).unwrap());
    }
    out.push(AnalysisPanel::new(Vec::new(), panel.countries().clone()).unwrap());
    out
}

proptest! {
    #[test]
    fn merge_is_order_insensitive(panel in arb_panel(), seed in any::<u64>()) {
        let frags = fragments(&panel);
        let mut order: Vec<usize> = (0..frags.len()).collect();
        // Deterministic shuffle from the seed.
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = merge_panels(frags.clone()).unwrap();
        let b = merge_panels(order.iter().map(|&i| frags[i].clone()).collect()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &panel);
    }

    #[test]
    fn first_difference_row_count(panel in arb_panel()) {
        let expected: usize = panel.by_country().map(|(_, rows)| rows.len().saturating_sub(1)).sum();
        let diffs = first_difference(&panel, &[Field::Headcount, Field::PovertyGap]);
        prop_assert_eq!(diffs.len(), expected);
        for d in &diffs {
            prop_assert!(d.gap_years >= 1);
            let later = panel.get(d.iso3, d.year).unwrap();
            let earlier = panel.get(d.iso3, d.year - d.gap_years as i32).unwrap();
            prop_assert_eq!(d.delta(Field::Headcount), Some(later.get(Field::Headcount).unwrap() - earlier.get(Field::Headcount).unwrap()));
            prop_assert_eq!(d.level(Field::GdpGrowth), later.get(Field::GdpGrowth));
        }
    }

    #[test]
    fn forward_fill_is_idempotent(panel in arb_panel()) {
        let waves = [2005, 2011, 2017];
        let fields = [Field::Gini, Field::Headcount];
        let once = forward_fill_waves(&panel, &fields, &waves);
        let twice = forward_fill_waves(&once, &fields, &waves);
        prop_assert_eq!(&once, &twice);
        // Present cells are never overwritten.
        for (a, b) in panel.rows().iter().zip(once.rows()) {
            for f in fields {
                if a.get(f).is_some() {
                    prop_assert_eq!(a.get(f), b.get(f));
                }
            }
        }
    }

    #[test]
    fn summary_min_median_max_ordered(panel in arb_panel()) {
        for s in summarize(&panel, &[Field::Headcount, Field::Gini, Field::GdpGrowth]).unwrap() {
            prop_assert!(s.min <= s.median && s.median <= s.max, "{s:?}");
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
        }
    }

    #[test]
    fn merged_csv_round_trip(panel in arb_panel()) {
        let mut buf = Vec::new();
        write_merged_csv(&panel, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), Schema::Merged).unwrap();
        prop_assert!(back.rejected.is_empty(), "{:?}", back.rejected.first());
        prop_assert_eq!(back.panel.rows(), panel.rows());
        for (code, info) in back.panel.countries() {
            prop_assert_eq!(Some(info), panel.country(code));
        }
    }
}

#[test]
fn conflicting_fragments_are_rejected() {
    let a = AnalysisPanel::from_rows(vec![PanelRow::new(iso(0), 2010).with(Field::Gini, 0.4)]).unwrap();
    let b = AnalysisPanel::from_rows(vec![PanelRow::new(iso(0), 2010).with(Field::Gini, 0.41)]).unwrap();
    assert!(merge_panels(vec![a, b]).is_err());
}

#[test]
fn bundled_merged_panel_loads_cleanly() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/merged.csv");
    let loaded = povkit_core::panel_store::load_csv(&path, Schema::Merged).unwrap();
    assert!(loaded.rejected.is_empty());
    let levels: BTreeSet<_> = loaded.panel.countries().values().filter_map(|c| c.income_level).collect();
    assert_eq!(levels.len(), 4);
    assert_eq!(loaded.panel.n_countries(), 96);
}
