use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{AnalysisPanel, CountryInfo, Field, IncomeLevel, Iso3, PanelError, PanelRow, MAX_YEAR, MIN_YEAR};

/// Source file layouts understood by [`load_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Fas,
    Povcal,
    Weo,
    Findex,
    Population,
    IncomeClass,
    /// The canonical merged panel written by [`write_merged_csv`].
    Merged,
}

impl Schema {
    pub const ALL: [Schema; 7] = [
        Schema::Fas,
        Schema::Povcal,
        Schema::Weo,
        Schema::Findex,
        Schema::Population,
        Schema::IncomeClass,
        Schema::Merged,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Schema::Fas => "fas",
            Schema::Povcal => "povcal",
            Schema::Weo => "weo",
            Schema::Findex => "findex",
            Schema::Population => "population",
            Schema::IncomeClass => "income_class",
            Schema::Merged => "merged",
        }
    }

    /// Numeric fields read by this schema and whether each is required in the header.
    fn fields(&self) -> Vec<(Field, bool)> {
        use Field::*;
        match self {
            Schema::Fas => vec![
                (BranchesPer100k, true),
                (AtmsPer100k, true),
                (BranchesPer1000Km2, true),
                (AtmsPer1000Km2, true),
                (AccountsPer1000, true),
                (Fii, false),
                (Outreach, false),
                (Usage, false),
            ],
            Schema::Povcal => vec![
                (Headcount, true),
                (PovertyGap, true),
                (PovertyGapSq, true),
                (Watts, true),
                (Gini, true),
            ],
            Schema::Weo => vec![(GdpGrowth, true)],
            Schema::Findex => vec![(AccountAll, true), (AccountMale, true), (AccountFemale, true)],
            Schema::Population => vec![(Population, true)],
            Schema::IncomeClass => vec![],
            Schema::Merged => Field::ALL.iter().map(|f| (*f, true)).collect(),
        }
    }

    fn has_year(&self) -> bool {
        !matches!(self, Schema::IncomeClass)
    }

    fn required_text_columns(&self) -> &'static [&'static str] {
        match self {
            Schema::Fas => &["iso3", "country_name", "year"],
            Schema::Weo => &["iso3", "year", "is_forecast"],
            Schema::IncomeClass => &["iso3", "income_level"],
            Schema::Merged => &["iso3", "country_name", "income_level", "year", "gdp_is_forecast"],
            _ => &["iso3", "year"],
        }
    }
}

impl FromStr for Schema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Schema::ALL
            .into_iter()
            .find(|schema| schema.name() == s)
            .ok_or_else(|| format!("unknown schema `{s}`"))
    }
}

/// A row that failed validation and was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub error: PanelError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub panel: AnalysisPanel,
    pub rejected: Vec<RowIssue>,
}

impl Loaded {
    /// Turns the first rejected row into an error.
    pub fn strict(self) -> Result<AnalysisPanel, PanelError> {
        match self.rejected.into_iter().next() {
            Some(issue) => Err(issue.error),
            None => Ok(self.panel),
        }
    }
}

pub fn load_csv(path: &Path, schema: Schema) -> Result<Loaded, PanelError> {
    let file = File::open(path).map_err(|e| PanelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_csv(file, schema)
}

struct Columns {
    index: BTreeMap<String, usize>,
}

impl Columns {
    fn get<'r>(&self, record: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.index.get(name).and_then(|&i| record.get(i)).map(str::trim)
    }
}

/// Reads one source file. Rows with bad cells are collected in
/// [`Loaded::rejected`]; structural problems (missing columns, duplicate keys)
/// fail the whole read.
pub fn read_csv<R: Read>(reader: R, schema: Schema) -> Result<Loaded, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| PanelError::Csv(e.to_string()))?.clone();
    let columns = Columns {
        index: headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect(),
    };
    for name in schema.required_text_columns() {
        if !columns.index.contains_key(*name) {
            return Err(PanelError::MissingColumn((*name).to_string()));
        }
    }
    let fields: Vec<Field> = schema
        .fields()
        .into_iter()
        .filter_map(|(field, required)| {
            if columns.index.contains_key(field.name()) {
                Some(Ok(field))
            } else if required {
                Some(Err(PanelError::MissingColumn(field.name().to_string())))
            } else {
                None
            }
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut countries: BTreeMap<Iso3, CountryInfo> = BTreeMap::new();
    let mut rejected = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| PanelError::Csv(e.to_string()))?;
        match parse_record(&record, row_no, schema, &columns, &fields) {
            Ok((iso3, row, info)) => {
                merge_country(&mut countries, iso3, info)?;
                rows.extend(row);
            }
            Err(error) => rejected.push(RowIssue { row: row_no, error }),
        }
    }
    let panel = AnalysisPanel::new(rows, countries)?;
    Ok(Loaded { panel, rejected })
}

pub(super) fn merge_country(
    countries: &mut BTreeMap<Iso3, CountryInfo>,
    iso3: Iso3,
    info: CountryInfo,
) -> Result<(), PanelError> {
    let entry = countries.entry(iso3).or_default();
    if entry.name.is_none() {
        entry.name = info.name;
    }
    match (entry.income_level, info.income_level) {
        (Some(a), Some(b)) if a != b => {
            return Err(PanelError::ConflictingCountry {
                country: iso3,
                attribute: "income_level".into(),
            })
        }
        (None, b) => entry.income_level = b,
        _ => {}
    }
    Ok(())
}

fn parse_country_info(
    record: &csv::StringRecord,
    row: usize,
    columns: &Columns,
) -> Result<CountryInfo, PanelError> {
    let name = columns.get(record, "country_name").filter(|s| !s.is_empty()).map(String::from);
    let income_level = match columns.get(record, "income_level") {
        None | Some("") => None,
        Some(s) => Some(
            IncomeLevel::parse(s)
                .ok_or_else(|| PanelError::InvalidIncomeLevel { row, value: s.to_string() })?,
        ),
    };
    Ok(CountryInfo { name, income_level })
}

type Parsed = (Iso3, Option<PanelRow>, CountryInfo);

fn parse_record(
    record: &csv::StringRecord,
    row: usize,
    schema: Schema,
    columns: &Columns,
    fields: &[Field],
) -> Result<Parsed, PanelError> {
    let code = columns.get(record, "iso3").unwrap_or("");
    let iso3 = Iso3::new(code)
        .ok_or_else(|| PanelError::InvalidCountry { row, value: code.to_string() })?;
    let info = parse_country_info(record, row, columns)?;
    if !schema.has_year() {
        if info.income_level.is_none() {
            return Err(PanelError::InvalidIncomeLevel { row, value: String::new() });
        }
        return Ok((iso3, None, info));
    }

    let year_text = columns.get(record, "year").unwrap_or("");
    let year: i32 = year_text.parse().map_err(|_| PanelError::BadNumeric {
        row,
        column: "year".into(),
        value: year_text.to_string(),
    })?;
    if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
        return Err(PanelError::RangeViolation { row, column: "year".into(), value: year as f64 });
    }

    let mut out = PanelRow::new(iso3, year);
    for &field in fields {
        let text = columns.get(record, field.name()).unwrap_or("");
        out.set(field, parse_cell(text, field, row)?);
    }
    for flag in ["is_forecast", "gdp_is_forecast"] {
        if let Some(text) = columns.get(record, flag) {
            out.gdp_is_forecast = parse_flag(text, flag, row)?;
        }
    }
    check_fgt_ordering(&out, row)?;
    Ok((iso3, Some(out), info))
}

fn parse_cell(text: &str, field: Field, row: usize) -> Result<Option<f64>, PanelError> {
    if text.is_empty() {
        return Ok(None);
    }
    let v: f64 = text.parse().map_err(|_| PanelError::BadNumeric {
        row,
        column: field.name().into(),
        value: text.to_string(),
    })?;
    if !v.is_finite() {
        return Err(PanelError::BadNumeric { row, column: field.name().into(), value: text.to_string() });
    }
    if !field.range().contains(v) {
        return Err(PanelError::RangeViolation { row, column: field.name().into(), value: v });
    }
    Ok(Some(v))
}

fn parse_flag(text: &str, column: &str, row: usize) -> Result<Option<bool>, PanelError> {
    match text.to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "0" | "false" => Ok(Some(false)),
        "1" | "true" => Ok(Some(true)),
        _ => Err(PanelError::BadNumeric { row, column: column.into(), value: text.to_string() }),
    }
}

fn check_fgt_ordering(row: &PanelRow, row_no: usize) -> Result<(), PanelError> {
    const SLACK: f64 = 1e-12;
    let chain = [Field::Headcount, Field::PovertyGap, Field::PovertyGapSq];
    let values: Vec<f64> = chain.iter().filter_map(|f| row.get(*f)).collect();
    if values.len() == chain.len() && values.windows(2).any(|w| w[0] + SLACK < w[1]) {
        return Err(PanelError::OrderingViolation { row: row_no });
    }
    Ok(())
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the canonical merged layout. Floats use the shortest representation
/// that parses back to the same bits.
pub fn write_merged_csv<W: Write>(panel: &AnalysisPanel, writer: W) -> Result<(), PanelError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| PanelError::Csv(e.to_string());
    let mut header = vec!["iso3", "country_name", "income_level", "year"];
    header.extend(Field::ALL.iter().map(|f| f.name()));
    header.push("gdp_is_forecast");
    wtr.write_record(&header).map_err(csv_err)?;
    for row in panel.rows() {
        let info = panel.country(&row.iso3).cloned().unwrap_or_default();
        let mut rec = vec![
            row.iso3.to_string(),
            info.name.unwrap_or_default(),
            info.income_level.map(|l| l.as_str().to_string()).unwrap_or_default(),
            row.year.to_string(),
        ];
        rec.extend(Field::ALL.iter().map(|f| format_opt(row.get(*f))));
        rec.push(match row.gdp_is_forecast {
            Some(true) => "1".into(),
            Some(false) => "0".into(),
            None => String::new(),
        });
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| PanelError::Csv(e.to_string()))?;
    Ok(())
}
