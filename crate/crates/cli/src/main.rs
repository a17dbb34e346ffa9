//! `povkit` command-line front end.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use povkit_core::decomp::{datt_ravallion, Reference, DEFAULT_QUANTILES};
use povkit_core::dist_measures::{gini, Distribution, IncomeSample, MeasureRegistry, PovertyLine, DEFAULT_LORENZ_GRID};
use povkit_core::forecaster::{
    aggregate_global, growth_sources, growth_table, project, ForecastPath, GlobalPath, ProjectionModel, Scenario,
    ShockMode, DEFAULT_SHOCK_YEAR, FII_SHOCK, GINI_SHOCK,
};
use povkit_core::index_builder::{build_indices_with, DEFAULT_WINSOR_PCT};
use povkit_core::panel_ols::{fit_fe_ols, ModelSpec, RegressionResult, Term};
use povkit_core::panel_store::{
    complete_cases, filter_income, first_difference_with, forward_fill_waves, load_csv, merge_panels, restrict_years,
    single_observation_countries, write_merged_csv, AnalysisPanel, Field, IncomeLevel, Iso3, PanelError, Schema,
};
use povkit_core::pipeline::{observations_from_diffs, ACCOUNT_FIELDS, FINDEX_WAVES, observations_from_panel, run_pipeline, PipelineInputs, PipelineOptions};
use povkit_core::report::{
    fmt3, fmt_sig3, marginal_effects_grid, read_regression_csv, read_summary_csv, render_table,
    write_marginal_effects_csv, write_model_csv, Layout, ReportError, TableInput,
};
use povkit_core::synthetic::{generate, seed_from_env, SyntheticConfig, SEED_ENV};
use povkit_core::{exit_code_table, Error};

#[derive(Parser)]
#[command(name = "povkit", version, about = "Poverty, inequality and financial-inclusion panel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and merge input CSVs into one country-year panel.
    Ingest(IngestArgs),
    /// Financial-inclusion indices.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Poverty and inequality measures of one income sample.
    Measures(MeasuresArgs),
    /// Growth / redistribution decomposition of a change in poverty.
    Decompose(DecomposeArgs),
    /// Fixed-effects panel regression.
    Regress(RegressArgs),
    /// Scenario projections of poverty headcounts.
    Forecast(ForecastArgs),
    /// Re-render a table from its CSV twin.
    Report(ReportArgs),
    /// Write the seeded synthetic dataset.
    Simulate(SimulateArgs),
    /// Run the whole analysis on a directory of input CSVs.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    fas: Option<PathBuf>,
    #[arg(long)]
    povcal: Option<PathBuf>,
    #[arg(long)]
    weo: Option<PathBuf>,
    #[arg(long)]
    findex: Option<PathBuf>,
    #[arg(long)]
    population: Option<PathBuf>,
    #[arg(long)]
    income_class: Option<PathBuf>,
    /// Output file for the merged panel.
    #[arg(long, default_value = "merged.csv")]
    out: PathBuf,
    /// Fail on the first rejected row instead of reporting and skipping it.
    #[arg(long)]
    strict: bool,
    /// Do not build the inclusion indices from the banking indicators.
    #[arg(long)]
    no_index: bool,
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Build outreach, usage and FII from the banking indicators.
    Build(IndexBuildArgs),
}

#[derive(Args)]
struct IndexBuildArgs {
    #[arg(long)]
    fas: PathBuf,
    /// Income classification, for the income-level column of the tables.
    #[arg(long)]
    income_class: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Upper winsorization quantile.
    #[arg(long, default_value_t = DEFAULT_WINSOR_PCT)]
    winsor: f64,
}

#[derive(Args)]
struct MeasuresArgs {
    /// Income sample CSV with an `income` and optional `weight` column.
    #[arg(long)]
    sample: PathBuf,
    #[arg(long, default_value_t = 1.90)]
    line: f64,
    /// Comma-separated measure names; all registered measures by default.
    #[arg(long)]
    measures: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Initial,
    Final,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    initial: PathBuf,
    #[arg(long = "final")]
    final_: PathBuf,
    #[arg(long, default_value_t = 1.90)]
    line: f64,
    /// Measure name, or `all`.
    #[arg(long, default_value = "headcount")]
    measure: String,
    #[arg(long, default_value_t = DEFAULT_QUANTILES)]
    quantiles: usize,
    #[arg(long, value_enum, default_value = "initial")]
    reference: ReferenceArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FeArg {
    Country,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterArg {
    Country,
}

#[derive(Args)]
struct RegressArgs {
    /// Merged panel written by `ingest` or `pipeline`.
    #[arg(long)]
    panel: PathBuf,
    /// Dependent variable; a `d_` prefix asks for first differences.
    #[arg(long)]
    dep: String,
    /// Comma-separated regressors.
    #[arg(long, value_delimiter = ',')]
    x: Vec<String>,
    /// Interaction `a:b`; repeatable.
    #[arg(long)]
    interact: Vec<String>,
    #[arg(long, value_enum, default_value = "country")]
    fe: FeArg,
    #[arg(long, value_enum, default_value = "country")]
    cluster: ClusterArg,
    /// Covariance estimator: cluster, hc1 or classical.
    #[arg(long, default_value = "cluster")]
    covariance: String,
    /// Table layout of the text/CSV output.
    #[arg(long)]
    layout: Option<String>,
    /// Comma-separated income levels, or `all`.
    #[arg(long, default_value = "low,lower_middle")]
    scope: String,
    /// Year range such as `2004-2018`.
    #[arg(long)]
    years: Option<String>,
    /// Points of the marginal-effect grid.
    #[arg(long, default_value_t = 21)]
    me_points: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShockModeArg {
    Relative,
    Absolute,
}

#[derive(Args)]
struct ForecastArgs {
    /// Coefficient CSV written by `regress` (model.csv).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    panel: PathBuf,
    /// GDP growth source; the panel's own growth column when absent.
    #[arg(long)]
    weo: Option<PathBuf>,
    /// Population source; the panel's own population column when absent.
    #[arg(long)]
    population: Option<PathBuf>,
    /// Income levels of the scoped aggregate, or `all`.
    #[arg(long, default_value = "low,lower_middle")]
    scope: String,
    #[arg(long, default_value = "2019-2021")]
    years: String,
    #[arg(long, default_value_t = DEFAULT_SHOCK_YEAR)]
    shock_year: i32,
    #[arg(long, default_value_t = GINI_SHOCK)]
    gini_shock: f64,
    #[arg(long, default_value_t = FII_SHOCK)]
    fii_shock: f64,
    #[arg(long, value_enum, default_value = "relative")]
    shock_mode: ShockModeArg,
    /// Apply the shocks every year from the shock year on.
    #[arg(long)]
    repeat_shock: bool,
    /// Fail when any country lacks base values.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    layout: String,
    /// CSV twins to render; regression tables are joined column-wise.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Output text file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "data/synthetic")]
    out_dir: PathBuf,
    /// Overrides the POVKIT_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value = "data/synthetic")]
    data_dir: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value = "low,lower_middle")]
    scope: String,
    #[arg(long, default_value = "cluster")]
    covariance: String,
}

fn exit_code_help() -> String {
    let mut s = String::from("Exit codes:\n  0   success\n  2   usage error\n");
    for (code, module, name) in exit_code_table() {
        writeln!(s, "  {code:<4}{module}::{name}").unwrap();
    }
    write!(s, "\nEnvironment:\n  {SEED_ENV}  seed of `simulate` (overridden by --seed)").unwrap();
    s
}

fn main() -> ExitCode {
    let matches = Cli::command().after_long_help(exit_code_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Index(IndexCommand::Build(a)) => index_build(a),
        Command::Measures(a) => measures(a),
        Command::Decompose(a) => decompose(a),
        Command::Regress(a) => regress(a),
        Command::Forecast(a) => forecast(a),
        Command::Report(a) => report(a),
        Command::Simulate(a) => simulate(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn write_file(path: &Path, content: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Error> {
    match out {
        Some(p) => write_file(p, content),
        None => std::io::stdout().write_all(content.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_scope(s: &str) -> Result<Option<BTreeSet<IncomeLevel>>, Error> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let set = IncomeLevel::parse_set(s).map_err(Error::InvalidArgument)?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty scope".into()));
    }
    Ok(Some(set))
}

fn parse_years(s: &str) -> Result<RangeInclusive<i32>, Error> {
    let bad = || Error::InvalidArgument(format!("year range `{s}` is not of the form 2004-2018"));
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

/// Loads a file, printing rejected rows; `strict` turns the first into an error.
fn load(path: &Path, schema: Schema, strict: bool) -> Result<AnalysisPanel, Error> {
    let loaded = load_csv(path, schema)?;
    if strict {
        return Ok(loaded.strict()?);
    }
    for issue in &loaded.rejected {
        eprintln!("rejected {} row {}: {}", path.display(), issue.row, issue.error);
    }
    Ok(loaded.panel)
}

fn ingest(a: IngestArgs) -> Result<(), Error> {
    let sources = [
        (a.fas, Schema::Fas),
        (a.povcal, Schema::Povcal),
        (a.weo, Schema::Weo),
        (a.findex, Schema::Findex),
        (a.population, Schema::Population),
        (a.income_class, Schema::IncomeClass),
    ];
    let mut fragments = Vec::new();
    for (path, schema) in sources {
        if let Some(p) = path {
            fragments.push(load(&p, schema, a.strict)?);
        }
    }
    if fragments.is_empty() {
        return Err(Error::InvalidArgument("no input files given".into()));
    }
    let mut panel = merge_panels(fragments)?;
    let has_indicators = panel.rows().iter().any(|r| r.get(Field::AccountsPer1000).is_some());
    let has_index = panel.rows().iter().any(|r| r.get(Field::Fii).is_some());
    if has_indicators && !has_index && !a.no_index {
        let build = build_indices_with(&panel, DEFAULT_WINSOR_PCT)?;
        eprintln!("index rows dropped for missing indicators: {}", build.dropped.len());
        panel = merge_panels(vec![panel, build.fii.to_panel(), build.outreach.to_panel(), build.usage.to_panel()])?;
    }
    let panel = forward_fill_waves(&panel, &ACCOUNT_FIELDS, &FINDEX_WAVES);
    let mut buf = Vec::new();
    write_merged_csv(&panel, &mut buf)?;
    write_file(&a.out, buf)?;
    eprintln!("merged {} rows, {} countries into {}", panel.len(), panel.n_countries(), a.out.display());
    Ok(())
}

fn index_build(a: IndexBuildArgs) -> Result<(), Error> {
    let mut fragments = vec![load(&a.fas, Schema::Fas, false)?];
    if let Some(p) = &a.income_class {
        fragments.push(load(p, Schema::IncomeClass, false)?);
    }
    let panel = merge_panels(fragments)?;
    let build = build_indices_with(&panel, a.winsor)?;
    for series in [&build.fii, &build.outreach, &build.usage] {
        let t = render_table(TableInput::Index { series, panel: &panel }, Layout::TableA1)?;
        write_file(&a.out_dir.join(format!("{}.csv", series.kind.name())), t.csv)?;
        write_file(&a.out_dir.join(format!("{}.txt", series.kind.name())), t.text)?;
    }
    write_file(&a.out_dir.join("diagnostics.txt"), build.diagnostics())?;
    for row in &build.dropped {
        let missing: Vec<&str> = row.missing.iter().map(|f| f.name()).collect();
        eprintln!("dropped {} {}: missing {}", row.iso3, row.year, missing.join(", "));
    }
    Ok(())
}

fn measures(a: MeasuresArgs) -> Result<(), Error> {
    let sample = IncomeSample::load_csv(&a.sample)?;
    let line = PovertyLine::new(a.line)?;
    let registry = MeasureRegistry::with_defaults();
    let names: Vec<String> = match &a.measures {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => registry.names().map(str::to_string).chain(["gini".to_string()]).collect(),
    };
    let mut out = String::from("measure,z,value\n");
    for name in names {
        let value = if name == "gini" { gini(&sample)? } else { registry.get(&name)?.evaluate(&sample, line)? };
        writeln!(out, "{name},{},{value}", line.value()).unwrap();
    }
    emit(a.out.as_deref(), &out)
}

fn decompose(a: DecomposeArgs) -> Result<(), Error> {
    let line = PovertyLine::new(a.line)?;
    let initial = Distribution::from_sample(&IncomeSample::load_csv(&a.initial)?, DEFAULT_LORENZ_GRID)?;
    let final_ = Distribution::from_sample(&IncomeSample::load_csv(&a.final_)?, DEFAULT_LORENZ_GRID)?;
    let reference = match a.reference {
        ReferenceArg::Initial => Reference::Initial,
        ReferenceArg::Final => Reference::Final,
    };
    let registry = MeasureRegistry::with_defaults();
    let measures: Vec<_> = if a.measure == "all" {
        registry.iter().collect()
    } else {
        vec![registry.get(&a.measure)?]
    };
    let mut out = String::from("measure,z,total,growth,redistribution,residual,reference\n");
    for m in measures {
        let r = datt_ravallion(&initial, &final_, line, m, a.quantiles, reference)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.measure,
            r.z,
            r.total,
            r.growth,
            r.redistribution,
            r.residual,
            r.reference.as_str()
        )
        .unwrap();
    }
    emit(a.out.as_deref(), &out)
}

/// Panel field behind a model variable, and whether it is differenced.
fn variable_field(name: &str) -> Result<(Field, bool), Error> {
    let (base, diff) = match name.strip_prefix("d_") {
        Some(rest) => (rest, true),
        None => (name, false),
    };
    let field = Field::from_name(base).ok_or_else(|| PanelError::UnknownField(name.to_string()))?;
    Ok((field, diff))
}

fn parse_interaction(s: &str) -> Result<(String, String), Error> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("interaction `{s}` is not of the form a:b")))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

/// Plain coefficient listing for models outside the fixed layouts.
fn plain_table(r: &RegressionResult) -> String {
    let mut s = format!("Dependent variable: {}\n", r.dependent);
    let se = r.std_errors();
    for (i, name) in r.names.iter().enumerate() {
        let stars = r.stars(name).map(|s| s.as_str()).unwrap_or("");
        writeln!(s, "{name:<24}{:>10}{stars:<3} [{}]", fmt3(r.coefficients[i]), fmt3(se[i])).unwrap();
    }
    writeln!(s, "{:<24}{:>10}", "Observations", r.n_obs).unwrap();
    writeln!(s, "{:<24}{:>10}", "Adjusted R2", fmt_sig3(r.adjusted_r2)).unwrap();
    writeln!(s, "{:<24}{:>10}", "Number of country", r.n_countries).unwrap();
    s
}

fn regress(a: RegressArgs) -> Result<(), Error> {
    if a.x.is_empty() {
        return Err(Error::InvalidArgument("at least one regressor is required".into()));
    }
    let interactions: Vec<(String, String)> = a.interact.iter().map(|s| parse_interaction(s)).collect::<Result<_, _>>()?;
    let layout: Option<Layout> = a.layout.as_deref().map(str::parse).transpose()?;

    let mut names = vec![a.dep.clone()];
    names.extend(a.x.iter().cloned());
    for (p, q) in &interactions {
        names.push(p.clone());
        names.push(q.clone());
    }
    let mut needed = BTreeSet::new();
    let mut diffed = BTreeSet::new();
    let mut carried = BTreeSet::new();
    for n in &names {
        let (f, d) = variable_field(n)?;
        needed.insert(f);
        if d {
            diffed.insert(f);
        } else {
            carried.insert(f);
        }
    }
    let needed: Vec<Field> = needed.into_iter().collect();

    let mut panel = load(&a.panel, Schema::Merged, true)?;
    if let Some(scope) = parse_scope(&a.scope)? {
        panel = filter_income(&panel, &scope)?;
    }
    if let Some(y) = &a.years {
        panel = restrict_years(&panel, parse_years(y)?);
    }
    let panel = complete_cases(&panel, &needed);
    let obs = if diffed.is_empty() {
        observations_from_panel(&panel)
    } else {
        for c in single_observation_countries(&panel) {
            eprintln!("dropped from changes (single observation): {c}");
        }
        let diffed: Vec<Field> = diffed.into_iter().collect();
        let carried: Vec<Field> = carried.into_iter().collect();
        observations_from_diffs(&first_difference_with(&panel, &diffed, &carried))
    };

    let xs: Vec<&str> = a.x.iter().map(String::as_str).collect();
    let mut spec = ModelSpec::new(&a.dep, &xs).covariance(&a.covariance);
    for (p, q) in &interactions {
        spec = spec.interact(p, q);
    }
    if a.fe == FeArg::None {
        spec.fixed_effect = None;
    }
    let result = fit_fe_ols(&obs, &spec)?;

    let mut model = Vec::new();
    write_model_csv(&result, &mut model)?;
    write_file(&a.out_dir.join("model.csv"), model)?;

    let (text, csv) = match layout {
        Some(l) => {
            let t = render_table(TableInput::Regressions(std::slice::from_ref(&result)), l)?;
            (t.text, t.csv)
        }
        None => (plain_table(&result), String::from_utf8(model_csv(&result)?).expect("utf-8")),
    };
    write_file(&a.out_dir.join("table.txt"), &text)?;
    write_file(&a.out_dir.join("table.csv"), csv)?;

    let mut ranges = BTreeMap::new();
    for t in &result.terms {
        if let Term::Interaction(_, m) = t {
            let v: Vec<f64> = obs.iter().filter_map(|o| o.get(m)).collect();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() {
                ranges.insert(m.clone(), (lo, hi));
            }
        }
    }
    let grid = marginal_effects_grid(&result, &ranges, a.me_points)?;
    let mut me = Vec::new();
    write_marginal_effects_csv(&grid, &mut me)?;
    write_file(&a.out_dir.join("marginal_effects.csv"), me)?;
    print!("{text}");
    Ok(())
}

fn model_csv(r: &RegressionResult) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    write_model_csv(r, &mut buf)?;
    Ok(buf)
}

fn forecast(a: ForecastArgs) -> Result<(), Error> {
    let years = parse_years(&a.years)?;
    let model_text = read_file(&a.model)?;
    let result = povkit_core::report::read_model_csv(model_text.as_bytes(), "d_headcount")?;
    let model = ProjectionModel::from_result(&result)?;

    let mut fragments = vec![load(&a.panel, Schema::Merged, true)?];
    if let Some(p) = &a.weo {
        // Replace the panel's growth figures with the given source.
        let mut base = fragments.pop().expect("panel");
        let rows = base
            .rows()
            .iter()
            .cloned()
            .map(|mut r| {
                r.set(Field::GdpGrowth, None);
                r.gdp_is_forecast = None;
                r
            })
            .collect();
        base = AnalysisPanel::new(rows, base.countries().clone())?;
        fragments.push(base);
        fragments.push(load(p, Schema::Weo, false)?);
    }
    let mut panel = merge_panels(fragments)?;
    if let Some(p) = &a.population {
        let rows = panel
            .rows()
            .iter()
            .cloned()
            .map(|mut r| {
                r.set(Field::Population, None);
                r
            })
            .collect();
        let stripped = AnalysisPanel::new(rows, panel.countries().clone())?;
        panel = merge_panels(vec![stripped, load(p, Schema::Population, false)?])?;
    }

    let growth = growth_table(&panel, years.clone());
    let (actual, forecast) = growth_sources(&panel, years.clone());
    eprintln!("projection growth figures: {actual} actual, {forecast} forecast");
    let shock_mode = match a.shock_mode {
        ShockModeArg::Relative => ShockMode::Relative,
        ShockModeArg::Absolute => ShockMode::Absolute,
    };
    let base = Scenario {
        shock_year: a.shock_year,
        shock_mode,
        repeat_shock: a.repeat_shock,
        ..Scenario::growth_only("S1", years, growth)
    };
    let scenarios = [
        base.clone(),
        Scenario { name: "S2".into(), gini_shock: a.gini_shock, ..base.clone() },
        Scenario { name: "S3".into(), fii_shock: a.fii_shock, ..base },
    ];
    let paths: Vec<ForecastPath> =
        scenarios.iter().map(|s| project(&model, &panel, s, None)).collect::<Result<_, _>>()?;
    if a.strict {
        paths[0].require_complete()?;
    }
    for (c, why) in &paths[0].excluded {
        eprintln!("excluded from projection: {c} ({})", why.describe());
    }

    let scope_set: Option<BTreeSet<Iso3>> = parse_scope(&a.scope)?.map(|levels| {
        panel
            .countries()
            .iter()
            .filter(|(_, info)| info.income_level.is_some_and(|l| levels.contains(&l)))
            .map(|(c, _)| *c)
            .collect()
    });
    let mut all = Vec::new();
    let mut scoped = Vec::new();
    for p in &paths {
        all.push(aggregate_global(p, &panel, None)?);
        scoped.push(aggregate_global(p, &panel, scope_set.as_ref())?);
    }
    let carried: BTreeSet<Iso3> = all[0].population_fallbacks.iter().map(|f| f.0).collect();
    if !carried.is_empty() {
        eprintln!("population carried from the latest available year for {} countries", carried.len());
    }

    let mut per_country = String::new();
    for (i, p) in paths.iter().enumerate() {
        let mut buf = Vec::new();
        p.write_csv(&mut buf)?;
        let text = String::from_utf8(buf).expect("utf-8");
        let body = if i == 0 { text.as_str() } else { text.split_once('\n').map(|x| x.1).unwrap_or("") };
        per_country.push_str(body);
    }
    write_file(&a.out_dir.join("forecast_paths.csv"), per_country)?;
    for (name, rows) in [("forecast_global.csv", &all), ("forecast_global_scope.csv", &scoped)] {
        let mut buf = Vec::new();
        GlobalPath::write_csv(rows, &mut buf)?;
        write_file(&a.out_dir.join(name), buf)?;
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Error> {
    let layout: Layout = a.layout.parse()?;
    let text = match layout {
        Layout::Table1 => {
            let rows = read_summary_csv(read_file(&a.input[0])?.as_bytes())?;
            let (mut levels, mut changes) = (Vec::new(), Vec::new());
            for (panel, s) in rows {
                if panel == "B" {
                    changes.push(s);
                } else {
                    levels.push(s);
                }
            }
            render_table(TableInput::Summary { levels: &levels, changes: &changes }, layout)?.text
        }
        Layout::TableA1 => {
            return Err(ReportError::LayoutMismatch {
                layout: layout.name(),
                reason: "index tables are rendered by `index build` and `pipeline`".into(),
            }
            .into())
        }
        _ => {
            let mut cols = Vec::new();
            for p in &a.input {
                cols.extend(read_regression_csv(read_file(p)?.as_bytes())?);
            }
            render_table(TableInput::Regressions(&cols), layout)?.text
        }
    };
    emit(a.out.as_deref(), &text)
}

fn simulate(a: SimulateArgs) -> Result<(), Error> {
    let seed = a.seed.unwrap_or_else(seed_from_env);
    let data = generate(&SyntheticConfig { seed, ..SyntheticConfig::default() });
    data.write_to(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    eprintln!("wrote {} files to {} (seed {seed})", data.files.len(), a.out_dir.display());
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<(), Error> {
    let scope = parse_scope(&a.scope)?.ok_or_else(|| Error::InvalidArgument("pipeline needs an explicit scope".into()))?;
    let options = PipelineOptions { scope, covariance: a.covariance, ..PipelineOptions::default() };
    let out = run_pipeline(&PipelineInputs::from_dir(&a.data_dir), &options)?;
    out.write_to(&a.out_dir)?;
    if let Some(log) = out.files.get("pipeline_report.txt") {
        eprint!("{log}");
    }
    Ok(())
}
