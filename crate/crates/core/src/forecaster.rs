//! Scenario projections of headcount poverty from a fitted first-difference
//! model, and population-weighted aggregation.
//!
//! Each projection year applies
//! `dP = const + b * dGini + g * growth + d * dFII + f * dGini * dFII`
//! to the previous year's headcount and clamps the result to `[0, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::RangeInclusive;

use thiserror::Error;

use crate::panel_ols::{RegressionResult, CONSTANT};
use crate::panel_store::{AnalysisPanel, Field, Iso3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("model has no coefficient named `{0}`")]
    MissingCoefficient(String),
    #[error("{country} has no observed {field}")]
    NoBaseValue { country: Iso3, field: Field },
    #[error("no population figure for {0}")]
    MissingPopulation(Iso3),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no country left to project")]
    EmptyScope,
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for ForecastError {
    fn from(e: std::io::Error) -> Self {
        ForecastError::Io(e.to_string())
    }
}

impl From<csv::Error> for ForecastError {
    fn from(e: csv::Error) -> Self {
        ForecastError::Io(e.to_string())
    }
}

/// Names of the model terms read by the projection.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientNames {
    pub d_gini: String,
    pub growth: String,
    pub d_fii: String,
    pub interaction: String,
    pub constant: String,
}

impl Default for CoefficientNames {
    fn default() -> Self {
        CoefficientNames {
            d_gini: "d_gini".into(),
            growth: "gdp_growth".into(),
            d_fii: "d_fii".into(),
            interaction: "d_gini:d_fii".into(),
            constant: CONSTANT.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionModel {
    pub constant: f64,
    pub d_gini: f64,
    pub growth: f64,
    pub d_fii: f64,
    pub interaction: f64,
}

impl ProjectionModel {
    pub fn from_result(result: &RegressionResult) -> Result<ProjectionModel, ForecastError> {
        ProjectionModel::from_result_named(result, &CoefficientNames::default())
    }

    pub fn from_result_named(
        result: &RegressionResult,
        names: &CoefficientNames,
    ) -> Result<ProjectionModel, ForecastError> {
        let get = |n: &str| {
            result.coefficient(n).ok_or_else(|| ForecastError::MissingCoefficient(n.to_string()))
        };
        let interaction = match result.coefficient(&names.interaction) {
            Some(v) => v,
            None => {
                // Accept the reversed spelling `b:a`.
                let reversed = names
                    .interaction
                    .split_once(':')
                    .map(|(a, b)| format!("{b}:{a}"))
                    .unwrap_or_default();
                get(&reversed).map_err(|_| ForecastError::MissingCoefficient(names.interaction.clone()))?
            }
        };
        Ok(ProjectionModel {
            constant: get(&names.constant)?,
            d_gini: get(&names.d_gini)?,
            growth: get(&names.growth)?,
            d_fii: get(&names.d_fii)?,
            interaction,
        })
    }

    pub fn step(&self, d_gini: f64, growth: f64, d_fii: f64) -> f64 {
        self.constant
            + self.d_gini * d_gini
            + self.growth * growth
            + self.d_fii * d_fii
            + self.interaction * d_gini * d_fii
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShockMode {
    /// Fraction of the country's last observed level.
    #[default]
    Relative,
    /// Added in the variable's own units.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub years: RangeInclusive<i32>,
    pub gdp_growth: BTreeMap<(Iso3, i32), f64>,
    pub gini_shock: f64,
    pub fii_shock: f64,
    pub shock_year: i32,
    pub shock_mode: ShockMode,
    /// Apply the shock in every year from `shock_year` on instead of once.
    pub repeat_shock: bool,
}

pub const DEFAULT_YEARS: RangeInclusive<i32> = 2019..=2021;
pub const DEFAULT_SHOCK_YEAR: i32 = 2020;
pub const GINI_SHOCK: f64 = 0.01;
pub const FII_SHOCK: f64 = 0.10;

impl Scenario {
    pub fn growth_only(name: &str, years: RangeInclusive<i32>, gdp_growth: BTreeMap<(Iso3, i32), f64>) -> Scenario {
        Scenario {
            name: name.to_string(),
            shock_year: DEFAULT_SHOCK_YEAR.clamp(*years.start(), *years.end()),
            years,
            gdp_growth,
            gini_shock: 0.0,
            fii_shock: 0.0,
            shock_mode: ShockMode::Relative,
            repeat_shock: false,
        }
    }

    fn validate(&self) -> Result<(), ForecastError> {
        if self.years.is_empty() {
            return Err(ForecastError::InvalidScenario("empty projection years".into()));
        }
        if !self.years.contains(&self.shock_year) {
            return Err(ForecastError::InvalidScenario(format!(
                "shock year {} outside {}-{}",
                self.shock_year,
                self.years.start(),
                self.years.end()
            )));
        }
        if !(self.gini_shock.is_finite() && self.fii_shock.is_finite()) {
            return Err(ForecastError::InvalidScenario("non-finite shock".into()));
        }
        Ok(())
    }

    fn shock_applies(&self, year: i32) -> bool {
        if self.repeat_shock {
            year >= self.shock_year
        } else {
            year == self.shock_year
        }
    }

    fn shock_size(&self, shock: f64, level: f64) -> f64 {
        match self.shock_mode {
            ShockMode::Relative => shock * level,
            ShockMode::Absolute => shock,
        }
    }
}

/// A country's last observed values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseValues {
    pub year: i32,
    pub headcount: f64,
    pub gini: f64,
    pub fii: f64,
}

/// Last observation of each field, per country. Fails with the first field
/// that is never observed.
pub fn base_values(panel: &AnalysisPanel) -> BTreeMap<Iso3, Result<BaseValues, ForecastError>> {
    let mut out = BTreeMap::new();
    for (iso3, rows) in panel.by_country() {
        let last = |field: Field| {
            rows.iter()
                .rev()
                .find_map(|r| r.get(field).map(|v| (r.year, v)))
                .ok_or(ForecastError::NoBaseValue { country: iso3, field })
        };
        let base = (|| {
            let (year, headcount) = last(Field::Headcount)?;
            let (_, gini) = last(Field::Gini)?;
            let (_, fii) = last(Field::Fii)?;
            Ok(BaseValues { year, headcount, gini, fii })
        })();
        out.insert(iso3, base);
    }
    out
}

/// GDP growth by country and year, for the given years.
pub fn growth_table(panel: &AnalysisPanel, years: RangeInclusive<i32>) -> BTreeMap<(Iso3, i32), f64> {
    panel
        .rows()
        .iter()
        .filter(|r| years.contains(&r.year))
        .filter_map(|r| r.get(Field::GdpGrowth).map(|g| ((r.iso3, r.year), g)))
        .collect()
}

/// Counts of actual and forecast growth figures in the table's years.
pub fn growth_sources(panel: &AnalysisPanel, years: RangeInclusive<i32>) -> (usize, usize) {
    let mut actual = 0;
    let mut forecast = 0;
    for r in panel.rows().iter().filter(|r| years.contains(&r.year) && r.get(Field::GdpGrowth).is_some()) {
        if r.gdp_is_forecast == Some(true) {
            forecast += 1;
        } else {
            actual += 1;
        }
    }
    (actual, forecast)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exclusion {
    NoBaseValue(Field),
    NoGrowth(i32),
    OutOfScope,
}

impl Exclusion {
    pub fn describe(&self) -> String {
        match self {
            Exclusion::NoBaseValue(f) => format!("no observed {f}"),
            Exclusion::NoGrowth(y) => format!("no gdp_growth for {y}"),
            Exclusion::OutOfScope => "outside scope".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryPath {
    pub base: BaseValues,
    /// One value per projection year, in order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPath {
    pub scenario: String,
    pub years: RangeInclusive<i32>,
    pub countries: BTreeMap<Iso3, CountryPath>,
    pub excluded: BTreeMap<Iso3, Exclusion>,
}

impl ForecastPath {
    pub fn value(&self, iso3: Iso3, year: i32) -> Option<f64> {
        let p = self.countries.get(&iso3)?;
        let i = usize::try_from(year - self.years.start()).ok()?;
        p.values.get(i).copied()
    }

    /// Turns the first exclusion for a missing base value into an error.
    pub fn require_complete(&self) -> Result<(), ForecastError> {
        for (&country, why) in &self.excluded {
            if let Exclusion::NoBaseValue(field) = why {
                return Err(ForecastError::NoBaseValue { country, field: *field });
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ForecastError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iso3", "scenario", "year", "headcount", "base_year"])?;
        for (iso3, p) in &self.countries {
            let base_year = p.base.year.to_string();
            w.write_record([iso3.as_str(), &self.scenario, &base_year, &p.base.headcount.to_string(), &base_year])?;
            for (year, v) in self.years.clone().zip(&p.values) {
                w.write_record([iso3.as_str(), &self.scenario, &year.to_string(), &v.to_string(), &base_year])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Projects one country given its base values and growth in each year.
pub fn project_country(model: &ProjectionModel, base: &BaseValues, growth: &[f64], scenario: &Scenario) -> Vec<f64> {
    let mut p = base.headcount;
    scenario
        .years
        .clone()
        .zip(growth)
        .map(|(year, &g)| {
            let (d_gini, d_fii) = if scenario.shock_applies(year) {
                (
                    scenario.shock_size(scenario.gini_shock, base.gini),
                    scenario.shock_size(scenario.fii_shock, base.fii),
                )
            } else {
                (0.0, 0.0)
            };
            p = (p + model.step(d_gini, g, d_fii)).clamp(0.0, 1.0);
            p
        })
        .collect()
}

/// Projects every country of the panel (or of `scope`). Countries without the
/// needed base values or growth figures are excluded and listed.
pub fn project(
    model: &ProjectionModel,
    panel: &AnalysisPanel,
    scenario: &Scenario,
    scope: Option<&BTreeSet<Iso3>>,
) -> Result<ForecastPath, ForecastError> {
    scenario.validate()?;
    let mut countries = BTreeMap::new();
    let mut excluded = BTreeMap::new();
    for (iso3, base) in base_values(panel) {
        if scope.is_some_and(|s| !s.contains(&iso3)) {
            continue;
        }
        let base = match base {
            Ok(b) => b,
            Err(ForecastError::NoBaseValue { field, .. }) => {
                excluded.insert(iso3, Exclusion::NoBaseValue(field));
                continue;
            }
            Err(e) => return Err(e),
        };
        let growth: Result<Vec<f64>, i32> = scenario
            .years
            .clone()
            .map(|y| scenario.gdp_growth.get(&(iso3, y)).copied().ok_or(y))
            .collect();
        match growth {
            Ok(g) => {
                let values = project_country(model, &base, &g, scenario);
                countries.insert(iso3, CountryPath { base, values });
            }
            Err(year) => {
                excluded.insert(iso3, Exclusion::NoGrowth(year));
            }
        }
    }
    if countries.is_empty() {
        return Err(ForecastError::EmptyScope);
    }
    Ok(ForecastPath { scenario: scenario.name.clone(), years: scenario.years.clone(), countries, excluded })
}

/// Growth only, plus a Gini shock, plus an FII shock.
pub fn scenario_suite(
    model: &ProjectionModel,
    panel: &AnalysisPanel,
    gdp_growth: &BTreeMap<(Iso3, i32), f64>,
    years: RangeInclusive<i32>,
    scope: Option<&BTreeSet<Iso3>>,
) -> Result<[ForecastPath; 3], ForecastError> {
    let s1 = Scenario::growth_only("S1", years.clone(), gdp_growth.clone());
    let s2 = Scenario { name: "S2".into(), gini_shock: GINI_SHOCK, ..s1.clone() };
    let s3 = Scenario { name: "S3".into(), fii_shock: FII_SHOCK, ..s1.clone() };
    Ok([project(model, panel, &s1, scope)?, project(model, panel, &s2, scope)?, project(model, panel, &s3, scope)?])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRow {
    pub year: i32,
    pub rate: f64,
    pub poor_count: f64,
    pub population: f64,
    pub n_countries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPath {
    pub scenario: String,
    /// Starts with the base row (year before the first projection year).
    pub rows: Vec<GlobalRow>,
    /// `(country, requested year, year used)` where population was carried.
    pub population_fallbacks: Vec<(Iso3, i32, i32)>,
}

impl GlobalPath {
    pub fn write_csv<W: Write>(paths: &[GlobalPath], writer: W) -> Result<(), ForecastError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["year", "scenario", "rate", "poor_count", "population", "n_countries"])?;
        for p in paths {
            for r in &p.rows {
                w.write_record([
                    r.year.to_string(),
                    p.scenario.clone(),
                    r.rate.to_string(),
                    r.poor_count.to_string(),
                    r.population.to_string(),
                    r.n_countries.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn population_at(panel: &AnalysisPanel, iso3: Iso3, year: i32) -> Option<(i32, f64)> {
    if let Some(v) = panel.get(iso3, year).and_then(|r| r.get(Field::Population)) {
        return Some((year, v));
    }
    panel
        .rows()
        .iter()
        .filter(|r| r.iso3 == iso3)
        .rev()
        .find_map(|r| r.get(Field::Population).map(|v| (r.year, v)))
}

/// Population-weighted rate and poor count per year over the countries in
/// `scope` (all projected countries when `None`).
pub fn aggregate_global(
    path: &ForecastPath,
    population: &AnalysisPanel,
    scope: Option<&BTreeSet<Iso3>>,
) -> Result<GlobalPath, ForecastError> {
    let members: Vec<(&Iso3, &CountryPath)> =
        path.countries.iter().filter(|(c, _)| scope.is_none_or(|s| s.contains(c))).collect();
    if members.is_empty() {
        return Err(ForecastError::EmptyScope);
    }
    let first = *path.years.start();
    let mut rows = Vec::new();
    let mut fallbacks = Vec::new();
    for (i, year) in std::iter::once(first - 1).chain(path.years.clone()).enumerate() {
        let mut pop_sum = 0.0;
        let mut poor = 0.0;
        for (iso3, cp) in &members {
            let (used, pop) = population_at(population, **iso3, year).ok_or(ForecastError::MissingPopulation(**iso3))?;
            if used != year {
                fallbacks.push((**iso3, year, used));
            }
            let rate = if i == 0 { cp.base.headcount } else { cp.values[i - 1] };
            pop_sum += pop;
            poor += pop * rate;
        }
        rows.push(GlobalRow { year, rate: poor / pop_sum, poor_count: poor, population: pop_sum, n_countries: members.len() });
    }
    Ok(GlobalPath { scenario: path.scenario.clone(), rows, population_fallbacks: fallbacks })
}
