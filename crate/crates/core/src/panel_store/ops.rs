use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use super::ingest::merge_country;
use super::{AnalysisPanel, Field, IncomeLevel, Iso3, PanelError, PanelRow};

/// Outer join on `(iso3, year)`. Two fragments may fill different fields of the
/// same row; disagreeing non-absent values are an error.
pub fn merge_panels(fragments: Vec<AnalysisPanel>) -> Result<AnalysisPanel, PanelError> {
    let mut merged: BTreeMap<(Iso3, i32), PanelRow> = BTreeMap::new();
    let mut countries = BTreeMap::new();
    for fragment in fragments {
        let (rows, infos) = fragment.into_parts();
        for (iso3, info) in infos {
            merge_country(&mut countries, iso3, info)?;
        }
        for row in rows {
            match merged.get_mut(&row.key()) {
                None => {
                    merged.insert(row.key(), row);
                }
                Some(existing) => merge_row(existing, &row)?,
            }
        }
    }
    AnalysisPanel::new(merged.into_values().collect(), countries)
}

fn merge_row(into: &mut PanelRow, from: &PanelRow) -> Result<(), PanelError> {
    let (country, year) = (into.iso3, into.year);
    let conflict = |field: &str| PanelError::ConflictingValue {
        country,
        year,
        field: field.to_string(),
    };
    for &field in Field::ALL {
        match (into.get(field), from.get(field)) {
            (Some(a), Some(b)) if a != b => return Err(conflict(field.name())),
            (None, Some(b)) => into.set(field, Some(b)),
            _ => {}
        }
    }
    match (into.gdp_is_forecast, from.gdp_is_forecast) {
        (Some(a), Some(b)) if a != b => return Err(conflict("gdp_is_forecast")),
        (None, b) => into.gdp_is_forecast = b,
        _ => {}
    }
    Ok(())
}

/// Keeps rows whose country's income level is in `keep`.
pub fn filter_income(
    panel: &AnalysisPanel,
    keep: &BTreeSet<IncomeLevel>,
) -> Result<AnalysisPanel, PanelError> {
    let mut rows = Vec::with_capacity(panel.len());
    for row in panel.rows() {
        let level = panel.income_level(&row.iso3).ok_or(PanelError::UnknownIncomeLevel(row.iso3))?;
        if keep.contains(&level) {
            rows.push(row.clone());
        }
    }
    let countries = panel
        .countries()
        .iter()
        .filter(|(_, info)| info.income_level.is_some_and(|l| keep.contains(&l)))
        .map(|(k, v)| (*k, v.clone()))
        .collect();
    AnalysisPanel::new(rows, countries)
}

/// Keeps rows where every listed field is present.
pub fn complete_cases(panel: &AnalysisPanel, fields: &[Field]) -> AnalysisPanel {
    let rows = panel.rows().iter().filter(|r| r.has_all(fields)).cloned().collect();
    AnalysisPanel::new(rows, panel.countries().clone()).expect("subset of a key-unique panel")
}

pub fn restrict_years(panel: &AnalysisPanel, years: RangeInclusive<i32>) -> AnalysisPanel {
    let rows = panel.rows().iter().filter(|r| years.contains(&r.year)).cloned().collect();
    AnalysisPanel::new(rows, panel.countries().clone()).expect("subset of a key-unique panel")
}

/// Countries with exactly one row; they contribute nothing to a differenced panel.
pub fn single_observation_countries(panel: &AnalysisPanel) -> Vec<Iso3> {
    panel.by_country().filter(|(_, rows)| rows.len() == 1).map(|(c, _)| c).collect()
}

/// Change between two adjacent observations of one country.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub iso3: Iso3,
    /// Later of the two differenced years.
    pub year: i32,
    pub gap_years: u32,
    /// `later - earlier`; absent when either side is absent.
    pub deltas: BTreeMap<Field, Option<f64>>,
    /// Fields copied from the later row.
    pub levels: BTreeMap<Field, Option<f64>>,
    pub gdp_is_forecast: Option<bool>,
}

impl DiffRow {
    pub fn delta(&self, field: Field) -> Option<f64> {
        self.deltas.get(&field).copied().flatten()
    }

    pub fn level(&self, field: Field) -> Option<f64> {
        self.levels.get(&field).copied().flatten()
    }
}

/// Differences adjacent available observations, carrying GDP growth in levels.
pub fn first_difference(panel: &AnalysisPanel, variables: &[Field]) -> Vec<DiffRow> {
    first_difference_with(panel, variables, &[Field::GdpGrowth])
}

/// Adjacent rows are differenced whatever the year gap; `gap_years` records it.
pub fn first_difference_with(
    panel: &AnalysisPanel,
    variables: &[Field],
    carry: &[Field],
) -> Vec<DiffRow> {
    let mut out = Vec::new();
    for (iso3, rows) in panel.by_country() {
        for pair in rows.windows(2) {
            let (earlier, later) = (&pair[0], &pair[1]);
            let deltas = variables
                .iter()
                .map(|&f| (f, earlier.get(f).zip(later.get(f)).map(|(a, b)| b - a)))
                .collect();
            let levels = carry.iter().map(|&f| (f, later.get(f))).collect();
            out.push(DiffRow {
                iso3,
                year: later.year,
                gap_years: (later.year - earlier.year) as u32,
                deltas,
                levels,
                gdp_is_forecast: later.gdp_is_forecast,
            });
        }
    }
    out
}

/// Fills absent cells from the most recent earlier survey wave of the same
/// country. Years before the first wave stay absent; present cells are never
/// overwritten.
pub fn forward_fill_waves(panel: &AnalysisPanel, fields: &[Field], wave_years: &[i32]) -> AnalysisPanel {
    debug_assert!(wave_years.windows(2).all(|w| w[0] < w[1]));
    let mut rows = panel.rows().to_vec();
    for row in rows.iter_mut() {
        let Some(&wave) = wave_years.iter().rev().find(|&&w| w <= row.year) else {
            continue;
        };
        if wave == row.year {
            continue;
        }
        let Some(source) = panel.get(row.iso3, wave) else {
            continue;
        };
        for &field in fields {
            if row.get(field).is_none() {
                row.set(field, source.get(field));
            }
        }
    }
    AnalysisPanel::new(rows, panel.countries().clone()).expect("same keys as input")
}
