//! The full analysis: ingest, indices, merged panel, summary and regression
//! tables, marginal effects, scenario forecasts. Outputs are held in memory
//! as `(file name, content)` pairs so runs can be compared byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::forecaster::{
    aggregate_global, growth_sources, growth_table, scenario_suite, ForecastPath, GlobalPath, ProjectionModel,
    DEFAULT_YEARS,
};
use crate::index_builder::{build_indices, IndexBuild};
use crate::panel_ols::{fit_fe_ols, ModelSpec, Observation, RegressionResult};
use crate::panel_store::{
    complete_cases, filter_income, first_difference, forward_fill_waves, load_csv, merge_panels, restrict_years,
    single_observation_countries, summarize_values, write_merged_csv, AnalysisPanel, DiffRow, Field, IncomeLevel,
    Iso3, Schema, SummaryStats,
};
use crate::report::{
    marginal_effects_grid, render_table, write_marginal_effects_csv, write_model_csv, Layout, TableInput,
};

pub const FINDEX_WAVES: [i32; 3] = [2011, 2014, 2017];
pub const POVERTY_FIELDS: [Field; 4] = [Field::Headcount, Field::PovertyGap, Field::PovertyGapSq, Field::Watts];
pub const INCLUSION_FIELDS: [Field; 3] = [Field::Fii, Field::Outreach, Field::Usage];
pub const ACCOUNT_FIELDS: [Field; 3] = [Field::AccountAll, Field::AccountMale, Field::AccountFemale];

/// Regression rows for a panel in levels, one variable per field name.
pub fn observations_from_panel(panel: &AnalysisPanel) -> Vec<Observation> {
    panel
        .rows()
        .iter()
        .map(|r| {
            let mut o = Observation::new(r.iso3.as_str(), r.year);
            for &f in Field::ALL {
                if let Some(v) = r.get(f) {
                    o = o.with(f.name(), v);
                }
            }
            o
        })
        .collect()
}

/// Regression rows for differenced data: changes as `d_<field>`, carried
/// levels under their own names.
pub fn observations_from_diffs(rows: &[DiffRow]) -> Vec<Observation> {
    rows.iter()
        .map(|r| {
            let mut o = Observation::new(r.iso3.as_str(), r.year);
            for (f, v) in &r.deltas {
                if let Some(v) = v {
                    o = o.with(format!("d_{}", f.name()), *v);
                }
            }
            for (f, v) in &r.levels {
                if let Some(v) = v {
                    o = o.with(f.name(), *v);
                }
            }
            o
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInputs {
    pub fas: PathBuf,
    pub povcal: PathBuf,
    pub weo: PathBuf,
    pub findex: PathBuf,
    pub population: PathBuf,
    pub income_class: PathBuf,
}

impl PipelineInputs {
    /// The six files under their conventional names in `dir`.
    pub fn from_dir(dir: &Path) -> PipelineInputs {
        PipelineInputs {
            fas: dir.join("fas.csv"),
            povcal: dir.join("povcal.csv"),
            weo: dir.join("weo.csv"),
            findex: dir.join("findex.csv"),
            population: dir.join("population.csv"),
            income_class: dir.join("income_class.csv"),
        }
    }

    fn sources(&self) -> [(&Path, Schema); 6] {
        [
            (&self.fas, Schema::Fas),
            (&self.povcal, Schema::Povcal),
            (&self.weo, Schema::Weo),
            (&self.findex, Schema::Findex),
            (&self.population, Schema::Population),
            (&self.income_class, Schema::IncomeClass),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub scope: BTreeSet<IncomeLevel>,
    pub years: RangeInclusive<i32>,
    /// Window of the account-ownership regressions.
    pub findex_years: RangeInclusive<i32>,
    pub forecast_years: RangeInclusive<i32>,
    pub covariance: String,
    pub me_points: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            scope: BTreeSet::from([IncomeLevel::Low, IncomeLevel::LowerMiddle]),
            years: 2004..=2018,
            findex_years: 2011..=2018,
            forecast_years: DEFAULT_YEARS,
            covariance: "cluster".into(),
            me_points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineOutput {
    pub files: BTreeMap<String, String>,
}

impl PipelineOutput {
    pub fn write_to(&self, dir: &Path) -> Result<(), Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    fn put(&mut self, name: &str, content: String) {
        self.files.insert(name.to_string(), content);
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), Error>) -> Result<String, Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("writers emit utf-8"))
}

/// Ingested and merged inputs, before any sample restriction.
pub struct Merged {
    pub panel: AnalysisPanel,
    pub rejected: Vec<(String, usize, String)>,
    pub index: Option<IndexBuild>,
}

/// Loads and merges the six sources, builds the inclusion indices unless the
/// FAS file already carries them, and forward-fills the Findex waves.
pub fn ingest(inputs: &PipelineInputs) -> Result<Merged, Error> {
    let mut fragments = Vec::new();
    let mut rejected = Vec::new();
    for (path, schema) in inputs.sources() {
        let loaded = load_csv(path, schema)?;
        for issue in &loaded.rejected {
            rejected.push((schema.name().to_string(), issue.row, issue.error.to_string()));
        }
        fragments.push(loaded.panel);
    }
    let mut panel = merge_panels(fragments)?;
    let has_index = panel.rows().iter().any(|r| r.get(Field::Fii).is_some());
    let index = if has_index {
        None
    } else {
        let build = build_indices(&panel)?;
        panel = merge_panels(vec![panel, build.fii.to_panel(), build.outreach.to_panel(), build.usage.to_panel()])?;
        Some(build)
    };
    let panel = forward_fill_waves(&panel, &ACCOUNT_FIELDS, &FINDEX_WAVES);
    Ok(Merged { panel, rejected, index })
}

fn summaries_levels(panel: &AnalysisPanel, fields: &[Field]) -> Vec<SummaryStats> {
    fields
        .iter()
        .filter_map(|&f| {
            let v: Vec<f64> = panel.rows().iter().filter_map(|r| r.get(f)).collect();
            summarize_values(f.name(), &v).ok()
        })
        .collect()
}

fn summaries_changes(rows: &[DiffRow], fields: &[Field]) -> Vec<SummaryStats> {
    fields
        .iter()
        .filter_map(|&f| {
            let v: Vec<f64> = rows.iter().filter_map(|r| r.delta(f)).collect();
            summarize_values(&format!("d_{}", f.name()), &v).ok()
        })
        .collect()
}

fn fit(obs: &[Observation], dep: &str, xs: &[&str], moderator: Option<&str>, cov: &str) -> Result<RegressionResult, Error> {
    let mut spec = ModelSpec::new(dep, xs).covariance(cov);
    if let Some(m) = moderator {
        spec = spec.interact(xs[0], m);
    }
    Ok(fit_fe_ols(obs, &spec)?)
}

fn moderator_range(obs: &[Observation], name: &str) -> (f64, f64) {
    let v: Vec<f64> = obs.iter().filter_map(|o| o.get(name)).collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 0.0)
    }
}

fn d(f: Field) -> String {
    format!("d_{}", f.name())
}

pub fn run_pipeline(inputs: &PipelineInputs, options: &PipelineOptions) -> Result<PipelineOutput, Error> {
    let merged = ingest(inputs)?;
    let mut out = PipelineOutput::default();
    let mut log = String::new();

    for (file, row, msg) in &merged.rejected {
        writeln!(log, "rejected {file} row {row}: {msg}").unwrap();
    }
    out.put("merged.csv", csv_bytes(|b| Ok(write_merged_csv(&merged.panel, b)?))?);

    if let Some(build) = &merged.index {
        for series in [&build.fii, &build.outreach, &build.usage] {
            let t = render_table(TableInput::Index { series, panel: &merged.panel }, Layout::TableA1)?;
            out.put(&format!("{}.csv", series.kind.name()), t.csv);
            out.put(&format!("{}.txt", series.kind.name()), t.text);
        }
        out.put("index_diagnostics.txt", build.diagnostics());
        writeln!(log, "index rows dropped for missing indicators: {}", build.dropped.len()).unwrap();
    } else {
        writeln!(log, "index columns taken from the FAS input").unwrap();
    }

    // Levels sample: scoped countries, analysis years, complete core variables.
    let core: Vec<Field> = POVERTY_FIELDS
        .iter()
        .copied()
        .chain([Field::Gini, Field::GdpGrowth])
        .chain(INCLUSION_FIELDS)
        .collect();
    let scoped = filter_income(&merged.panel, &options.scope)?;
    let levels = complete_cases(&restrict_years(&scoped, options.years.clone()), &core);
    let singles = single_observation_countries(&levels);
    let change_fields: Vec<Field> =
        POVERTY_FIELDS.iter().copied().chain([Field::Gini]).chain(INCLUSION_FIELDS).chain(ACCOUNT_FIELDS).collect();
    let diffs = first_difference(&levels, &change_fields);
    let diff_countries: BTreeSet<Iso3> = diffs.iter().map(|r| r.iso3).collect();
    writeln!(log, "levels sample: {} rows, {} countries", levels.len(), levels.n_countries()).unwrap();
    writeln!(log, "changes sample: {} rows, {} countries", diffs.len(), diff_countries.len()).unwrap();
    for c in &singles {
        writeln!(log, "dropped from changes (single observation): {c}").unwrap();
    }

    let level_fields: Vec<Field> = core.iter().copied().chain(ACCOUNT_FIELDS).collect();
    let t1_levels = summaries_levels(&levels, &level_fields);
    let t1_changes = summaries_changes(&diffs, &change_fields);
    let t1 = render_table(TableInput::Summary { levels: &t1_levels, changes: &t1_changes }, Layout::Table1)?;
    out.put("table1.txt", t1.text);
    out.put("table1.csv", t1.csv);

    let diff_obs = observations_from_diffs(&diffs);
    let level_obs = observations_from_panel(&levels);
    let cov = options.covariance.as_str();
    let deps: Vec<String> = POVERTY_FIELDS.iter().map(|&f| d(f)).collect();
    let gini = d(Field::Gini);

    let table2: Vec<RegressionResult> = deps
        .iter()
        .map(|dep| fit(&diff_obs, dep, &[&gini, "gdp_growth"], None, cov))
        .collect::<Result<_, _>>()?;
    let mut table3 = Vec::new();
    for dep in &deps {
        for f in INCLUSION_FIELDS {
            let m = d(f);
            table3.push(fit(&diff_obs, dep, &[&gini, "gdp_growth", &m], Some(&m), cov)?);
        }
    }
    let mut table_a4 = Vec::new();
    for dep in POVERTY_FIELDS {
        for f in INCLUSION_FIELDS {
            table_a4.push(fit(&level_obs, dep.name(), &["gini", "gdp_growth", f.name()], Some(f.name()), cov)?);
        }
    }

    // Account-ownership window: differences within the Findex years only.
    let findex_levels = complete_cases(&restrict_years(&levels, options.findex_years.clone()), &ACCOUNT_FIELDS);
    let findex_diffs = first_difference(&findex_levels, &change_fields);
    let findex_obs = observations_from_diffs(&findex_diffs);
    let mut table4 = Vec::new();
    for f in ACCOUNT_FIELDS {
        let m = d(f);
        for dep in &deps {
            table4.push(fit(&findex_obs, dep, &[&gini, "gdp_growth", &m], Some(&m), cov)?);
        }
    }

    for (name, layout, cols) in [
        ("table2", Layout::Table2, &table2),
        ("table3", Layout::Table3, &table3),
        ("tableA4", Layout::TableA4, &table_a4),
        ("table4", Layout::Table4, &table4),
    ] {
        let t = render_table(TableInput::Regressions(cols), layout)?;
        out.put(&format!("{name}.txt"), t.text);
        out.put(&format!("{name}.csv"), t.csv);
    }

    let headline = &table3[0];
    out.put("model_table3_col1.csv", csv_bytes(|b| Ok(write_model_csv(headline, b)?))?);
    let ranges = BTreeMap::from([(d(Field::Fii), moderator_range(&diff_obs, &d(Field::Fii)))]);
    let fig3 = marginal_effects_grid(&table2[0], &BTreeMap::new(), options.me_points)?;
    let fig4 = marginal_effects_grid(headline, &ranges, options.me_points)?;
    out.put("marginal_effects_table2_col1.csv", csv_bytes(|b| Ok(write_marginal_effects_csv(&fig3, b)?))?);
    out.put("marginal_effects_table3_col1.csv", csv_bytes(|b| Ok(write_marginal_effects_csv(&fig4, b)?))?);

    let mut fig2 = String::from("iso3,year,fii,headcount,gini\n");
    for r in levels.rows() {
        let cell = |f: Field| r.get(f).map(|v| v.to_string()).unwrap_or_default();
        writeln!(fig2, "{},{},{},{},{}", r.iso3, r.year, cell(Field::Fii), cell(Field::Headcount), cell(Field::Gini)).unwrap();
    }
    out.put("figure2.csv", fig2);

    // Forecasts from the headline model over every country with base values.
    let model = ProjectionModel::from_result(headline)?;
    let growth = growth_table(&merged.panel, options.forecast_years.clone());
    let (actual, forecast) = growth_sources(&merged.panel, options.forecast_years.clone());
    writeln!(log, "projection growth figures: {actual} actual, {forecast} forecast").unwrap();
    let paths = scenario_suite(&model, &merged.panel, &growth, options.forecast_years.clone(), None)?;
    let scope_set: BTreeSet<Iso3> = merged
        .panel
        .countries()
        .iter()
        .filter(|(_, info)| info.income_level.is_some_and(|l| options.scope.contains(&l)))
        .map(|(c, _)| *c)
        .collect();
    let mut all = Vec::new();
    let mut scoped_paths = Vec::new();
    for p in &paths {
        all.push(aggregate_global(p, &merged.panel, None)?);
        scoped_paths.push(aggregate_global(p, &merged.panel, Some(&scope_set))?);
    }
    log_forecast(&mut log, &paths[0], &all[0]);
    let mut per_country = String::new();
    for (i, p) in paths.iter().enumerate() {
        let text = csv_bytes(|b| Ok(p.write_csv(b)?))?;
        // Keep one header across the scenarios.
        let body = if i == 0 { text.as_str() } else { text.split_once('\n').map(|x| x.1).unwrap_or("") };
        per_country.push_str(body);
    }
    out.put("forecast_paths.csv", per_country);
    out.put("forecast_global.csv", csv_bytes(|b| Ok(GlobalPath::write_csv(&all, b)?))?);
    out.put("forecast_global_scope.csv", csv_bytes(|b| Ok(GlobalPath::write_csv(&scoped_paths, b)?))?);

    out.put("pipeline_report.txt", log);
    Ok(out)
}

fn log_forecast(log: &mut String, path: &ForecastPath, global: &GlobalPath) {
    writeln!(log, "projected countries: {}", path.countries.len()).unwrap();
    for (c, why) in &path.excluded {
        writeln!(log, "excluded from projection: {c} ({})", why.describe()).unwrap();
    }
    let carried: BTreeSet<Iso3> = global.population_fallbacks.iter().map(|f| f.0).collect();
    if !carried.is_empty() {
        let years: BTreeSet<i32> = global.population_fallbacks.iter().map(|f| f.1).collect();
        let years: Vec<String> = years.iter().map(|y| y.to_string()).collect();
        writeln!(
            log,
            "population carried from the latest available year for {} countries in {}",
            carried.len(),
            years.join(", ")
        )
        .unwrap();
    }
}
