//! Crate-wide error with a distinct process exit code per variant.

use thiserror::Error;

use crate::decomp::DecompError;
use crate::dist_measures::MeasureError;
use crate::forecaster::ForecastError;
use crate::index_builder::IndexError;
use crate::panel_ols::OlsError;
use crate::panel_store::PanelError;
use crate::report::ReportError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, e: std::io::Error) -> Error {
        Error::Io { path: path.as_ref().display().to_string(), message: e.to_string() }
    }

    /// Variant name, as printed on the diagnostic stream.
    pub fn name(&self) -> &'static str {
        self.code_and_name().1
    }

    pub fn exit_code(&self) -> u8 {
        self.code_and_name().0
    }

    fn code_and_name(&self) -> (u8, &'static str) {
        match self {
            Error::Io { .. } => (3, "Io"),
            Error::InvalidArgument(_) => (4, "InvalidArgument"),
            Error::Panel(e) => match e {
                PanelError::Io { .. } => (10, "Io"),
                PanelError::Csv(_) => (11, "Csv"),
                PanelError::MissingColumn(_) => (12, "MissingColumn"),
                PanelError::BadNumeric { .. } => (13, "BadNumeric"),
                PanelError::RangeViolation { .. } => (14, "RangeViolation"),
                PanelError::OrderingViolation { .. } => (15, "OrderingViolation"),
                PanelError::InvalidCountry { .. } => (16, "InvalidCountry"),
                PanelError::InvalidIncomeLevel { .. } => (17, "InvalidIncomeLevel"),
                PanelError::DuplicateKey { .. } => (18, "DuplicateKey"),
                PanelError::ConflictingValue { .. } => (19, "ConflictingValue"),
                PanelError::ConflictingCountry { .. } => (20, "ConflictingCountry"),
                PanelError::UnknownIncomeLevel(_) => (21, "UnknownIncomeLevel"),
                PanelError::EmptyVariable(_) => (22, "EmptyVariable"),
                PanelError::UnknownField(_) => (23, "UnknownField"),
            },
            Error::Measure(e) | Error::Decomp(DecompError::Measure(e)) => match e {
                MeasureError::EmptySample => (30, "EmptySample"),
                MeasureError::InvalidIncome(_) => (31, "InvalidIncome"),
                MeasureError::InvalidWeight(_) => (32, "InvalidWeight"),
                MeasureError::WeightLengthMismatch { .. } => (33, "WeightLengthMismatch"),
                MeasureError::NonpositiveLine(_) => (34, "NonpositiveLine"),
                MeasureError::UnsupportedAlpha(_) => (35, "UnsupportedAlpha"),
                MeasureError::ZeroIncomeAmongPoor => (36, "ZeroIncomeAmongPoor"),
                MeasureError::ZeroMean => (37, "ZeroMean"),
                MeasureError::InvalidMean(_) => (38, "InvalidMean"),
                MeasureError::InvalidGrid { .. } => (39, "InvalidGrid"),
                MeasureError::InvalidLorenz(_) => (40, "InvalidLorenz"),
                MeasureError::UnknownMeasure(_) => (41, "UnknownMeasure"),
                MeasureError::Io(_) => (42, "Io"),
                MeasureError::BadRow { .. } => (43, "BadRow"),
            },
            Error::Decomp(DecompError::TooFewQuantiles(_)) => (50, "TooFewQuantiles"),
            Error::Index(e) => match e {
                IndexError::DegenerateColumn(_) => (60, "DegenerateColumn"),
                IndexError::ConvergenceFailure(_) => (61, "ConvergenceFailure"),
                IndexError::InsufficientRows(_) => (62, "InsufficientRows"),
                IndexError::InsufficientColumns(_) => (63, "InsufficientColumns"),
                IndexError::ShapeMismatch { .. } => (64, "ShapeMismatch"),
                IndexError::NonFinite(_) => (65, "NonFinite"),
            },
            Error::Ols(e) => match e {
                OlsError::RankDeficient(_) => (70, "RankDeficient"),
                OlsError::TooFewClusters(_) => (71, "TooFewClusters"),
                OlsError::NoObservations => (72, "NoObservations"),
                OlsError::TooFewObservations { .. } => (73, "TooFewObservations"),
                OlsError::DuplicateRegressor(_) => (74, "DuplicateRegressor"),
                OlsError::DependentAmongRegressors(_) => (75, "DependentAmongRegressors"),
                OlsError::UnknownEstimator(_) => (76, "UnknownEstimator"),
                OlsError::UnknownTerm(_) => (77, "UnknownTerm"),
                OlsError::MissingModeratorValue(_) => (78, "MissingModeratorValue"),
                OlsError::NotInteracted { .. } => (79, "NotInteracted"),
            },
            Error::Forecast(e) => match e {
                ForecastError::MissingCoefficient(_) => (90, "MissingCoefficient"),
                ForecastError::NoBaseValue { .. } => (91, "NoBaseValue"),
                ForecastError::MissingPopulation(_) => (92, "MissingPopulation"),
                ForecastError::InvalidScenario(_) => (93, "InvalidScenario"),
                ForecastError::EmptyScope => (94, "EmptyScope"),
                ForecastError::Io(_) => (95, "Io"),
            },
            Error::Report(e) => match e {
                ReportError::LayoutMismatch { .. } => (100, "LayoutMismatch"),
                ReportError::UnknownLayout(_) => (101, "UnknownLayout"),
                ReportError::Parse(_) => (102, "Parse"),
                ReportError::Io(_) => (103, "Io"),
            },
        }
    }
}

/// `(code, module, name)` for every error, for `--help` text.
pub fn exit_code_table() -> Vec<(u8, &'static str, &'static str)> {
    use crate::panel_store::Iso3;
    let iso = Iso3::new("AAA").expect("valid");
    let s = String::new;
    let samples: Vec<(&'static str, Error)> = vec![
        ("general", Error::Io { path: s(), message: s() }),
        ("general", Error::InvalidArgument(s())),
        ("panel_store", PanelError::Io { path: s(), message: s() }.into()),
        ("panel_store", PanelError::Csv(s()).into()),
        ("panel_store", PanelError::MissingColumn(s()).into()),
        ("panel_store", PanelError::BadNumeric { row: 0, column: s(), value: s() }.into()),
        ("panel_store", PanelError::RangeViolation { row: 0, column: s(), value: 0.0 }.into()),
        ("panel_store", PanelError::OrderingViolation { row: 0 }.into()),
        ("panel_store", PanelError::InvalidCountry { row: 0, value: s() }.into()),
        ("panel_store", PanelError::InvalidIncomeLevel { row: 0, value: s() }.into()),
        ("panel_store", PanelError::DuplicateKey { country: iso, year: 0 }.into()),
        ("panel_store", PanelError::ConflictingValue { country: iso, year: 0, field: s() }.into()),
        ("panel_store", PanelError::ConflictingCountry { country: iso, attribute: s() }.into()),
        ("panel_store", PanelError::UnknownIncomeLevel(iso).into()),
        ("panel_store", PanelError::EmptyVariable(s()).into()),
        ("panel_store", PanelError::UnknownField(s()).into()),
        ("dist_measures", MeasureError::EmptySample.into()),
        ("dist_measures", MeasureError::InvalidIncome(0.0).into()),
        ("dist_measures", MeasureError::InvalidWeight(0.0).into()),
        ("dist_measures", MeasureError::WeightLengthMismatch { incomes: 0, weights: 0 }.into()),
        ("dist_measures", MeasureError::NonpositiveLine(0.0).into()),
        ("dist_measures", MeasureError::UnsupportedAlpha(0).into()),
        ("dist_measures", MeasureError::ZeroIncomeAmongPoor.into()),
        ("dist_measures", MeasureError::ZeroMean.into()),
        ("dist_measures", MeasureError::InvalidMean(0.0).into()),
        ("dist_measures", MeasureError::InvalidGrid { min: 0, got: 0 }.into()),
        ("dist_measures", MeasureError::InvalidLorenz(s()).into()),
        ("dist_measures", MeasureError::UnknownMeasure(s()).into()),
        ("dist_measures", MeasureError::Io(s()).into()),
        ("dist_measures", MeasureError::BadRow { row: 0, message: s() }.into()),
        ("decomp", DecompError::TooFewQuantiles(0).into()),
        ("index_builder", IndexError::DegenerateColumn(s()).into()),
        ("index_builder", IndexError::ConvergenceFailure(0).into()),
        ("index_builder", IndexError::InsufficientRows(0).into()),
        ("index_builder", IndexError::InsufficientColumns(0).into()),
        ("index_builder", IndexError::ShapeMismatch { name: s(), got: 0, expected: 0 }.into()),
        ("index_builder", IndexError::NonFinite(s()).into()),
        ("panel_ols", OlsError::RankDeficient(Vec::new()).into()),
        ("panel_ols", OlsError::TooFewClusters(0).into()),
        ("panel_ols", OlsError::NoObservations.into()),
        ("panel_ols", OlsError::TooFewObservations { n: 0, params: 0 }.into()),
        ("panel_ols", OlsError::DuplicateRegressor(s()).into()),
        ("panel_ols", OlsError::DependentAmongRegressors(s()).into()),
        ("panel_ols", OlsError::UnknownEstimator(s()).into()),
        ("panel_ols", OlsError::UnknownTerm(s()).into()),
        ("panel_ols", OlsError::MissingModeratorValue(s()).into()),
        ("panel_ols", OlsError::NotInteracted { of: s(), moderator: s() }.into()),
        ("forecaster", ForecastError::MissingCoefficient(s()).into()),
        ("forecaster", ForecastError::NoBaseValue { country: iso, field: crate::panel_store::Field::Gini }.into()),
        ("forecaster", ForecastError::MissingPopulation(iso).into()),
        ("forecaster", ForecastError::InvalidScenario(s()).into()),
        ("forecaster", ForecastError::EmptyScope.into()),
        ("forecaster", ForecastError::Io(s()).into()),
        ("report", ReportError::LayoutMismatch { layout: "", reason: s() }.into()),
        ("report", ReportError::UnknownLayout(s()).into()),
        ("report", ReportError::Parse(s()).into()),
        ("report", ReportError::Io(s()).into()),
    ];
    samples.into_iter().map(|(m, e)| (e.exit_code(), m, e.name())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_distinct_and_nonzero() {
        let table = exit_code_table();
        let mut codes: Vec<u8> = table.iter().map(|t| t.0).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), table.len());
        assert!(codes.iter().all(|&c| c > 2));
    }

    #[test]
    fn decomp_measure_errors_keep_their_code() {
        let e: Error = DecompError::Measure(MeasureError::ZeroIncomeAmongPoor).into();
        assert_eq!(e.exit_code(), Error::from(MeasureError::ZeroIncomeAmongPoor).exit_code());
        assert_eq!(e.name(), "ZeroIncomeAmongPoor");
    }
}
