//! Country-year panel storage.
//!
//! Rows are keyed by `(iso3, year)` and kept sorted. Every numeric cell is an
//! `Option<f64>`: an empty CSV cell is absent, never zero.

mod ingest;
mod ops;
mod summary;

pub use ingest::{load_csv, read_csv, write_merged_csv, Loaded, RowIssue, Schema};
pub use ops::{
    complete_cases, first_difference, first_difference_with, forward_fill_waves, merge_panels,
    restrict_years, filter_income, single_observation_countries, DiffRow,
};
pub use summary::{summarize, summarize_diffs, summarize_values, SummaryStats};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const MIN_YEAR: i32 = 1981;
pub const MAX_YEAR: i32 = 2030;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanelError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: column `{column}` holds non-numeric value `{value}`")]
    BadNumeric { row: usize, column: String, value: String },
    #[error("row {row}: column `{column}` value {value} is out of range")]
    RangeViolation { row: usize, column: String, value: f64 },
    #[error("row {row}: headcount >= poverty_gap >= poverty_gap_sq does not hold")]
    OrderingViolation { row: usize },
    #[error("row {row}: `{value}` is not a 3-letter uppercase ISO3 code")]
    InvalidCountry { row: usize, value: String },
    #[error("row {row}: `{value}` is not an income level")]
    InvalidIncomeLevel { row: usize, value: String },
    #[error("duplicate key ({country}, {year})")]
    DuplicateKey { country: Iso3, year: i32 },
    #[error("conflicting values for `{field}` at ({country}, {year})")]
    ConflictingValue { country: Iso3, year: i32, field: String },
    #[error("conflicting `{attribute}` for country {country}")]
    ConflictingCountry { country: Iso3, attribute: String },
    #[error("country {0} has no income level")]
    UnknownIncomeLevel(Iso3),
    #[error("variable `{0}` has no non-absent cells")]
    EmptyVariable(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
}

/// Three-letter uppercase ISO 3166 alpha-3 code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iso3([u8; 3]);

impl Iso3 {
    pub fn new(code: &str) -> Option<Iso3> {
        let bytes = code.as_bytes();
        if bytes.len() == 3 && bytes.iter().all(|b| b.is_ascii_uppercase()) {
            Some(Iso3([bytes[0], bytes[1], bytes[2]]))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        // Constructed from ASCII uppercase only.
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl fmt::Display for Iso3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Iso3 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Iso3::new(s).ok_or_else(|| format!("`{s}` is not a 3-letter uppercase ISO3 code"))
    }
}

/// World Bank income classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IncomeLevel {
    Low,
    LowerMiddle,
    UpperMiddle,
    High,
}

impl IncomeLevel {
    pub const ALL: [IncomeLevel; 4] = [
        IncomeLevel::Low,
        IncomeLevel::LowerMiddle,
        IncomeLevel::UpperMiddle,
        IncomeLevel::High,
    ];

    /// Machine form used in CSV files.
    pub fn as_str(&self) -> &'static str {
        match self {
            IncomeLevel::Low => "low",
            IncomeLevel::LowerMiddle => "lower_middle",
            IncomeLevel::UpperMiddle => "upper_middle",
            IncomeLevel::High => "high",
        }
    }

    /// Display form used in the index tables.
    pub fn label(&self) -> &'static str {
        match self {
            IncomeLevel::Low => "Low income",
            IncomeLevel::LowerMiddle => "Lower-middle income",
            IncomeLevel::UpperMiddle => "Upper-middle income",
            IncomeLevel::High => "High income",
        }
    }

    /// Accepts both the machine form and the display label, case-insensitively.
    pub fn parse(s: &str) -> Option<IncomeLevel> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let norm = norm.strip_suffix("_income").unwrap_or(&norm);
        match norm {
            "low" => Some(IncomeLevel::Low),
            "lower_middle" => Some(IncomeLevel::LowerMiddle),
            "upper_middle" => Some(IncomeLevel::UpperMiddle),
            "high" => Some(IncomeLevel::High),
            _ => None,
        }
    }

    pub fn parse_set(list: &str) -> Result<BTreeSet<IncomeLevel>, String> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| IncomeLevel::parse(s).ok_or_else(|| format!("unknown income level `{s}`")))
            .collect()
    }
}

impl fmt::Display for IncomeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Country-level attributes that do not vary by year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryInfo {
    /// Display metadata only; never used for matching.
    pub name: Option<String>,
    pub income_level: Option<IncomeLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRange {
    /// Fraction in [0, 1].
    Unit,
    NonNegative,
    Positive,
    Real,
}

impl ValueRange {
    pub fn contains(&self, v: f64) -> bool {
        match self {
            ValueRange::Unit => (0.0..=1.0).contains(&v),
            ValueRange::NonNegative => v >= 0.0,
            ValueRange::Positive => v > 0.0,
            ValueRange::Real => v.is_finite(),
        }
    }
}

macro_rules! fields {
    ($( $variant:ident => $name:literal, $range:ident; )*) => {
        /// Numeric country-year variables a [`PanelRow`] can hold.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Field {
            $( $variant, )*
        }

        impl Field {
            pub const ALL: &'static [Field] = &[$( Field::$variant, )*];
            pub const COUNT: usize = Field::ALL.len();

            pub fn name(&self) -> &'static str {
                match self {
                    $( Field::$variant => $name, )*
                }
            }

            pub fn range(&self) -> ValueRange {
                match self {
                    $( Field::$variant => ValueRange::$range, )*
                }
            }

            pub fn from_name(name: &str) -> Option<Field> {
                match name {
                    $( $name => Some(Field::$variant), )*
                    _ => None,
                }
            }
        }
    };
}

fields! {
    Headcount => "headcount", Unit;
    PovertyGap => "poverty_gap", Unit;
    PovertyGapSq => "poverty_gap_sq", Unit;
    Watts => "watts", NonNegative;
    Gini => "gini", Unit;
    GdpGrowth => "gdp_growth", Real;
    Fii => "fii", Unit;
    Outreach => "outreach", Unit;
    Usage => "usage", Unit;
    AccountAll => "account_all", Unit;
    AccountMale => "account_male", Unit;
    AccountFemale => "account_female", Unit;
    Population => "population", Positive;
    BranchesPer100k => "branches_per_100k", NonNegative;
    AtmsPer100k => "atms_per_100k", NonNegative;
    BranchesPer1000Km2 => "branches_per_1000km2", NonNegative;
    AtmsPer1000Km2 => "atms_per_1000km2", NonNegative;
    AccountsPer1000 => "accounts_per_1000", NonNegative;
}

impl Field {
    fn index(&self) -> usize {
        *self as usize
    }

    pub fn parse_list(list: &str) -> Result<Vec<Field>, PanelError> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| Field::from_name(s.trim()).ok_or_else(|| PanelError::UnknownField(s.into())))
            .collect()
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One country-year observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub iso3: Iso3,
    pub year: i32,
    values: [Option<f64>; Field::COUNT],
    pub gdp_is_forecast: Option<bool>,
}

impl PanelRow {
    pub fn new(iso3: Iso3, year: i32) -> PanelRow {
        PanelRow { iso3, year, values: [None; Field::COUNT], gdp_is_forecast: None }
    }

    pub fn get(&self, field: Field) -> Option<f64> {
        self.values[field.index()]
    }

    pub fn set(&mut self, field: Field, value: Option<f64>) {
        self.values[field.index()] = value;
    }

    pub fn with(mut self, field: Field, value: f64) -> PanelRow {
        self.set(field, Some(value));
        self
    }

    pub fn has_all(&self, fields: &[Field]) -> bool {
        fields.iter().all(|f| self.get(*f).is_some())
    }

    pub fn key(&self) -> (Iso3, i32) {
        (self.iso3, self.year)
    }
}

/// A validated, sorted, key-unique panel. Also used for single-source fragments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisPanel {
    rows: Vec<PanelRow>,
    countries: BTreeMap<Iso3, CountryInfo>,
}

impl AnalysisPanel {
    /// Sorts the rows and rejects duplicate keys. Countries referenced by rows
    /// but absent from `countries` get a default entry.
    pub fn new(
        mut rows: Vec<PanelRow>,
        mut countries: BTreeMap<Iso3, CountryInfo>,
    ) -> Result<AnalysisPanel, PanelError> {
        rows.sort_by_key(|r| r.key());
        for pair in rows.windows(2) {
            if pair[0].key() == pair[1].key() {
                return Err(PanelError::DuplicateKey { country: pair[0].iso3, year: pair[0].year });
            }
        }
        for r in &rows {
            countries.entry(r.iso3).or_default();
        }
        Ok(AnalysisPanel { rows, countries })
    }

    pub fn from_rows(rows: Vec<PanelRow>) -> Result<AnalysisPanel, PanelError> {
        AnalysisPanel::new(rows, BTreeMap::new())
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn countries(&self) -> &BTreeMap<Iso3, CountryInfo> {
        &self.countries
    }

    pub fn country(&self, iso3: &Iso3) -> Option<&CountryInfo> {
        self.countries.get(iso3)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of distinct countries that have at least one row.
    pub fn n_countries(&self) -> usize {
        self.by_country().count()
    }

    pub fn get(&self, iso3: Iso3, year: i32) -> Option<&PanelRow> {
        self.rows
            .binary_search_by_key(&(iso3, year), |r| r.key())
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Contiguous per-country slices in key order.
    pub fn by_country(&self) -> impl Iterator<Item = (Iso3, &[PanelRow])> {
        self.rows.chunk_by(|a, b| a.iso3 == b.iso3).map(|chunk| (chunk[0].iso3, chunk))
    }

    pub fn income_level(&self, iso3: &Iso3) -> Option<IncomeLevel> {
        self.countries.get(iso3).and_then(|c| c.income_level)
    }

    pub fn display_name(&self, iso3: &Iso3) -> String {
        self.countries
            .get(iso3)
            .and_then(|c| c.name.clone())
            .unwrap_or_else(|| iso3.to_string())
    }

    pub(crate) fn into_parts(self) -> (Vec<PanelRow>, BTreeMap<Iso3, CountryInfo>) {
        (self.rows, self.countries)
    }

    /// Builds a fragment holding one field from a keyed series.
    pub fn from_series<'a>(
        field: Field,
        series: impl IntoIterator<Item = (&'a (Iso3, i32), &'a f64)>,
    ) -> Result<AnalysisPanel, PanelError> {
        let rows = series
            .into_iter()
            .map(|(&(iso3, year), &v)| PanelRow::new(iso3, year).with(field, v))
            .collect();
        AnalysisPanel::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso3_requires_three_uppercase_letters() {
        assert!(Iso3::new("AFG").is_some());
        assert!(Iso3::new("afg").is_none());
        assert!(Iso3::new("AF").is_none());
        assert!(Iso3::new("AFG1").is_none());
        assert!(Iso3::new("A1G").is_none());
    }

    #[test]
    fn income_level_parses_labels_and_codes() {
        assert_eq!(IncomeLevel::parse("Low income"), Some(IncomeLevel::Low));
        assert_eq!(IncomeLevel::parse("lower_middle"), Some(IncomeLevel::LowerMiddle));
        assert_eq!(IncomeLevel::parse("Upper-middle income"), Some(IncomeLevel::UpperMiddle));
        assert_eq!(IncomeLevel::parse("HIGH"), Some(IncomeLevel::High));
        assert_eq!(IncomeLevel::parse("middle"), None);
        for level in IncomeLevel::ALL {
            assert_eq!(IncomeLevel::parse(level.label()), Some(level));
            assert_eq!(IncomeLevel::parse(level.as_str()), Some(level));
        }
    }

    #[test]
    fn field_names_round_trip() {
        for f in Field::ALL {
            assert_eq!(Field::from_name(f.name()), Some(*f));
        }
    }

    #[test]
    fn panel_rejects_duplicate_keys_and_sorts() {
        let afg = Iso3::new("AFG").unwrap();
        let ago = Iso3::new("AGO").unwrap();
        let p = AnalysisPanel::from_rows(vec![
            PanelRow::new(ago, 2005),
            PanelRow::new(afg, 2006),
            PanelRow::new(afg, 2004),
        ])
        .unwrap();
        let keys: Vec<_> = p.rows().iter().map(|r| r.key()).collect();
        assert_eq!(keys, vec![(afg, 2004), (afg, 2006), (ago, 2005)]);
        assert_eq!(p.n_countries(), 2);

        let err = AnalysisPanel::from_rows(vec![PanelRow::new(afg, 2004), PanelRow::new(afg, 2004)]);
        assert!(matches!(err, Err(PanelError::DuplicateKey { year: 2004, .. })));
    }
}
