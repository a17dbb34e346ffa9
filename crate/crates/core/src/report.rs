//! Text and CSV renderings of summary tables, regression tables, index tables
//! and plot data.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::index_builder::IndexSeries;
use crate::panel_ols::{
    marginal_effect, p_value, MarginalEffect, RegressionResult, Stars, Term, CONSTANT,
};
use crate::panel_store::{AnalysisPanel, IncomeLevel, SummaryStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("input does not fit layout {layout}: {reason}")]
    LayoutMismatch { layout: &'static str, reason: String },
    #[error("unknown layout `{0}`")]
    UnknownLayout(String),
    #[error("malformed table file: {0}")]
    Parse(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<csv::Error> for ReportError {
    fn from(e: csv::Error) -> Self {
        ReportError::Io(e.to_string())
    }
}

impl From<std::io::Error> for ReportError {
    fn from(e: std::io::Error) -> Self {
        ReportError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Table1,
    Table2,
    Table3,
    Table4,
    TableA1,
    TableA4,
}

impl Layout {
    pub const ALL: [Layout; 6] =
        [Layout::Table1, Layout::Table2, Layout::Table3, Layout::Table4, Layout::TableA1, Layout::TableA4];

    pub fn name(&self) -> &'static str {
        match self {
            Layout::Table1 => "table1",
            Layout::Table2 => "table2",
            Layout::Table3 => "table3",
            Layout::Table4 => "table4",
            Layout::TableA1 => "tableA1",
            Layout::TableA4 => "tableA4",
        }
    }

    fn mismatch(&self, reason: impl Into<String>) -> ReportError {
        ReportError::LayoutMismatch { layout: self.name(), reason: reason.into() }
    }
}

impl FromStr for Layout {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Layout::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ReportError::UnknownLayout(s.to_string()))
    }
}

pub enum TableInput<'a> {
    /// Panel A (levels) and panel B (changes).
    Summary { levels: &'a [SummaryStats], changes: &'a [SummaryStats] },
    /// One regression per column.
    Regressions(&'a [RegressionResult]),
    /// An index series with country names and income levels from `panel`.
    Index { series: &'a IndexSeries, panel: &'a AnalysisPanel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTable {
    pub text: String,
    pub csv: String,
}

pub fn render_table(input: TableInput<'_>, layout: Layout) -> Result<RenderedTable, ReportError> {
    match (layout, input) {
        (Layout::Table1, TableInput::Summary { levels, changes }) => Ok(render_summary(levels, changes)),
        (Layout::TableA1, TableInput::Index { series, panel }) => render_index(series, panel),
        (Layout::Table2 | Layout::Table3 | Layout::Table4 | Layout::TableA4, TableInput::Regressions(cols)) => {
            render_regressions(cols, layout)
        }
        (layout, _) => Err(layout.mismatch("wrong kind of input")),
    }
}

/// Three decimals, with negative zero printed as `0.000`.
pub fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Three significant digits without trailing zeros (`0.0977`, `0.23`).
pub fn fmt_sig3(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() { String::new() } else { "0".into() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Human label of a variable name, with `d_` rendered as a delta.
pub fn variable_label(name: &str) -> String {
    let (delta, base) = match name.strip_prefix("d_") {
        Some(b) => ("\u{394}", b),
        None => ("", name),
    };
    let label = match base {
        "headcount" => "Headcount",
        "poverty_gap" | "gap" => "Poverty gap",
        "poverty_gap_sq" | "gap_sq" => "Poverty gap squared",
        "watts" => "Watts index",
        "gini" => "Gini",
        "gdp_growth" => "GDP growth rate",
        "fii" => "Financial inclusion index",
        "outreach" => "Financial outreach",
        "usage" => "Usage",
        "account_all" => "Account ownership",
        "account_male" => "Account ownership (Male)",
        "account_female" => "Account ownership (Female)",
        "population" => "Population",
        other => other,
    };
    format!("{delta}{label}")
}

/// Aligned plain-text grid: first column left-aligned, the rest right-aligned.
fn align(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; ncols];
    for r in rows {
        for (j, c) in r.iter().enumerate() {
            widths[j] = widths[j].max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for j in 0..ncols {
            let cell = r.get(j).map(String::as_str).unwrap_or("");
            let pad = widths[j] - cell.chars().count();
            if j == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str("  ");
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn csv_string(records: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn render_summary(levels: &[SummaryStats], changes: &[SummaryStats]) -> RenderedTable {
    let header: Vec<String> =
        ["", "Mean", "Median", "Standard deviation", "Min", "Max", "NxT"].map(String::from).to_vec();
    let mut rows = vec![header];
    let mut records = vec![["panel", "variable", "label", "mean", "median", "sd", "min", "max", "n"]
        .map(String::from)
        .to_vec()];
    for (panel, title, stats) in [
        ("A", "Summary statistics in levels", levels),
        ("B", "Summary statistics in changes", changes),
    ] {
        if stats.is_empty() {
            continue;
        }
        rows.push(vec![format!("Panel {panel}")]);
        rows.push(vec![title.to_string()]);
        for s in stats {
            let label = variable_label(&s.name);
            rows.push(vec![
                label.clone(),
                fmt3(s.mean),
                fmt3(s.median),
                s.sd.map(fmt3).unwrap_or_default(),
                fmt3(s.min),
                fmt3(s.max),
                s.n.to_string(),
            ]);
            records.push(vec![
                panel.to_string(),
                s.name.clone(),
                label,
                s.mean.to_string(),
                s.median.to_string(),
                s.sd.map(|v| v.to_string()).unwrap_or_default(),
                s.min.to_string(),
                s.max.to_string(),
                s.n.to_string(),
            ]);
        }
    }
    RenderedTable { text: align(&rows), csv: csv_string(&records) }
}

/// Reads back the CSV twin of a summary table.
pub fn read_summary_csv<R: Read>(reader: R) -> Result<Vec<(String, SummaryStats)>, ReportError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, ReportError> {
            rec.get(i).unwrap_or("").parse().map_err(|_| ReportError::Parse(format!("bad number in column {i}")))
        };
        let sd = match rec.get(5).unwrap_or("") {
            "" => None,
            _ => Some(num(5)?),
        };
        let n = rec.get(8).unwrap_or("").parse().map_err(|_| ReportError::Parse("bad count".into()))?;
        out.push((
            rec.get(0).unwrap_or("").to_string(),
            SummaryStats {
                name: rec.get(1).unwrap_or("").to_string(),
                mean: num(3)?,
                median: num(4)?,
                sd,
                min: num(6)?,
                max: num(7)?,
                n,
            },
        ));
    }
    Ok(out)
}

fn regression_rows(layout: Layout) -> &'static [&'static str] {
    match layout {
        Layout::Table2 => &["\u{394}Gini", "GDP growth rate", "Constant"],
        Layout::Table3 => &[
            "\u{394}Gini",
            "GDP growth rate",
            "\u{394}Financial inclusion",
            "\u{394}Gini x \u{394}Financial inclusion",
            "Constant",
        ],
        Layout::Table4 => &[
            "\u{394}Gini",
            "GDP growth rate",
            "\u{394}Account ownership",
            "\u{394}Gini x \u{394}Account ownership",
            "Constant",
        ],
        Layout::TableA4 => {
            &["Gini", "GDP growth rate", "Financial inclusion", "Gini x Financial inclusion", "Constant"]
        }
        _ => &[],
    }
}

fn check_column(r: &RegressionResult, layout: Layout, col: usize) -> Result<(), ReportError> {
    let differenced = r.dependent.starts_with("d_");
    let want_diff = layout != Layout::TableA4;
    if differenced != want_diff {
        return Err(layout.mismatch(format!(
            "column {} has dependent `{}`, expected a variable in {}",
            col + 1,
            r.dependent,
            if want_diff { "changes" } else { "levels" }
        )));
    }
    let t = &r.terms;
    let shape_ok = match layout {
        Layout::Table2 => t.len() == 2 && t.iter().all(|x| matches!(x, Term::Regressor(_))),
        _ => {
            t.len() == 4
                && matches!(&t[..3], [Term::Regressor(_), Term::Regressor(_), Term::Regressor(_)])
                && match (&t[0], &t[2], &t[3]) {
                    (Term::Regressor(g), Term::Regressor(f), Term::Interaction(a, b)) => {
                        (a == g && b == f) || (a == f && b == g)
                    }
                    _ => false,
                }
        }
    };
    if !shape_ok {
        let names: Vec<String> = t.iter().map(Term::name).collect();
        return Err(layout.mismatch(format!("column {} has terms [{}]", col + 1, names.join(", "))));
    }
    if matches!(layout, Layout::Table3 | Layout::Table4) {
        let moderator = t[2].name();
        let is_account = moderator.contains("account");
        if is_account != (layout == Layout::Table4) {
            return Err(layout.mismatch(format!("column {} moderator `{moderator}`", col + 1)));
        }
    }
    Ok(())
}

fn cell(r: &RegressionResult, i: Option<usize>) -> (String, String) {
    match i {
        Some(i) => {
            let est = r.coefficients[i];
            let se = r.vcov[(i, i)].sqrt();
            let stars = if fmt3(est) == "0.000" { Stars::None } else { r.stars(&r.names[i]).unwrap_or(Stars::None) };
            (format!("{}{}", fmt3(est), stars), format!("[{}]", fmt3(se)))
        }
        None => (String::new(), String::new()),
    }
}

fn render_regressions(cols: &[RegressionResult], layout: Layout) -> Result<RenderedTable, ReportError> {
    if cols.is_empty() {
        return Err(layout.mismatch("no regression columns"));
    }
    for (j, r) in cols.iter().enumerate() {
        check_column(r, layout, j)?;
    }
    let labels = regression_rows(layout);
    let n_slopes = labels.len() - 1;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let dep_header = if layout == Layout::Table4 { "Dependent variable\u{2192}" } else { "Dependent variable" };
    rows.push(
        std::iter::once(dep_header.to_string())
            .chain(cols.iter().map(|r| variable_label(&r.dependent)))
            .collect(),
    );
    if layout != Layout::Table2 {
        let title = if layout == Layout::Table4 { "Global findex\u{2192}" } else { "Financial inclusion type\u{2192}" };
        rows.push(std::iter::once(title.to_string()).chain(cols.iter().map(|r| variable_label(&r.terms[2].name()))).collect());
    }
    rows.push(std::iter::once(String::new()).chain((1..=cols.len()).map(|j| j.to_string())).collect());

    for (k, label) in labels.iter().enumerate() {
        let mut est_row = vec![label.to_string()];
        let mut se_row = vec![String::new()];
        for r in cols {
            let idx = if k < n_slopes { Some(k) } else { r.index(CONSTANT) };
            let (e, s) = cell(r, idx);
            est_row.push(e);
            se_row.push(s);
        }
        rows.push(est_row);
        rows.push(se_row);
    }
    let footer: [(&str, Box<dyn Fn(&RegressionResult) -> String>); 5] = [
        ("Observations", Box::new(|r| r.n_obs.to_string())),
        ("Adjusted R\u{b2}", Box::new(|r| fmt_sig3(r.adjusted_r2))),
        ("Number of country", Box::new(|r| r.n_countries.to_string())),
        ("Country fixed effects", Box::new(|r| if r.fixed_effects { "Yes" } else { "No" }.to_string())),
        ("Robust standard error cluster", Box::new(|r| if r.covariance == "cluster" { "Country" } else { "No" }.to_string())),
    ];
    for (label, f) in &footer {
        rows.push(std::iter::once(label.to_string()).chain(cols.iter().map(f)).collect());
    }

    let mut records = vec![[
        "column", "dependent", "term", "label", "estimate", "std_error", "stars", "n_obs", "adjusted_r2", "n_countries",
    ]
    .map(String::from)
    .to_vec()];
    for (j, r) in cols.iter().enumerate() {
        for (i, name) in r.names.iter().enumerate() {
            let label = if i < n_slopes { labels[i] } else { "Constant" };
            records.push(vec![
                (j + 1).to_string(),
                r.dependent.clone(),
                name.clone(),
                label.to_string(),
                r.coefficients[i].to_string(),
                r.vcov[(i, i)].sqrt().to_string(),
                r.stars(name).unwrap_or(Stars::None).to_string(),
                r.n_obs.to_string(),
                r.adjusted_r2.to_string(),
                r.n_countries.to_string(),
            ]);
        }
    }
    Ok(RenderedTable { text: align(&rows), csv: csv_string(&records) })
}

/// Reads back the CSV twin of a regression table, one result per column.
/// Covariances are diagonal (only standard errors are stored).
pub fn read_regression_csv<R: Read>(reader: R) -> Result<Vec<RegressionResult>, ReportError> {
    struct Col {
        dependent: String,
        terms: Vec<Term>,
        est: Vec<f64>,
        se: Vec<f64>,
        constant: Option<(f64, f64)>,
        n_obs: usize,
        adj: f64,
        n_countries: usize,
    }
    let mut cols: BTreeMap<usize, Col> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(reader);
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let parse_f = |i: usize| -> Result<f64, ReportError> {
            field(i).parse().map_err(|_| ReportError::Parse(format!("bad number `{}`", field(i))))
        };
        let parse_u = |i: usize| -> Result<usize, ReportError> {
            field(i).parse().map_err(|_| ReportError::Parse(format!("bad count `{}`", field(i))))
        };
        let column = parse_u(0)?;
        let col = cols.entry(column).or_insert_with(|| Col {
            dependent: field(1).to_string(),
            terms: Vec::new(),
            est: Vec::new(),
            se: Vec::new(),
            constant: None,
            n_obs: 0,
            adj: f64::NAN,
            n_countries: 0,
        });
        let (e, s) = (parse_f(4)?, parse_f(5)?);
        if field(2) == CONSTANT {
            col.constant = Some((e, s));
        } else {
            col.terms.push(Term::parse(field(2)));
            col.est.push(e);
            col.se.push(s);
        }
        col.n_obs = parse_u(7)?;
        col.adj = parse_f(8)?;
        col.n_countries = parse_u(9)?;
    }
    Ok(cols
        .into_values()
        .map(|c| {
            let mut r = RegressionResult::from_estimates(&c.dependent, c.terms, &c.est, &c.se, c.constant, c.n_obs, c.n_countries);
            r.adjusted_r2 = c.adj;
            r
        })
        .collect())
}

/// `term,estimate,std_error,t,p,stars` for one fitted model.
pub fn write_model_csv<W: Write>(r: &RegressionResult, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["term", "estimate", "std_error", "t", "p", "stars"])?;
    for (i, name) in r.names.iter().enumerate() {
        let est = r.coefficients[i];
        let se = r.vcov[(i, i)].sqrt();
        let t = est / se;
        w.write_record([
            name.clone(),
            est.to_string(),
            se.to_string(),
            t.to_string(),
            p_value(t, r.dof).to_string(),
            r.stars(name).unwrap_or(Stars::None).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a model file written by [`write_model_csv`].
pub fn read_model_csv<R: Read>(reader: R, dependent: &str) -> Result<RegressionResult, ReportError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let pos = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| ReportError::Parse(format!("missing column `{name}`")))
    };
    let (ti, ei, si) = (pos("term")?, pos("estimate")?, pos("std_error")?);
    let mut terms = Vec::new();
    let mut est = Vec::new();
    let mut se = Vec::new();
    let mut constant = None;
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, ReportError> {
            let s = rec.get(i).unwrap_or("");
            s.parse().map_err(|_| ReportError::Parse(format!("bad number `{s}`")))
        };
        let term = rec.get(ti).unwrap_or("");
        if term == CONSTANT {
            constant = Some((num(ei)?, num(si)?));
        } else {
            terms.push(Term::parse(term));
            est.push(num(ei)?);
            se.push(num(si)?);
        }
    }
    Ok(RegressionResult::from_estimates(dependent, terms, &est, &se, constant, 0, 0))
}

fn render_index(series: &IndexSeries, panel: &AnalysisPanel) -> Result<RenderedTable, ReportError> {
    let layout = Layout::TableA1;
    if series.values.is_empty() {
        return Err(layout.mismatch("empty index series"));
    }
    let years: Vec<i32> = {
        let lo = series.values.keys().map(|k| k.1).min().expect("nonempty");
        let hi = series.values.keys().map(|k| k.1).max().expect("nonempty");
        (lo..=hi).collect()
    };
    let mut by_name: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let countries: std::collections::BTreeSet<_> = series.values.keys().map(|k| k.0).collect();
    for iso3 in countries {
        let level = panel.income_level(&iso3).map(|l| l.label()).unwrap_or("");
        let mut row = vec![panel.display_name(&iso3), level.to_string()];
        for y in &years {
            row.push(series.values.get(&(iso3, *y)).map(|v| fmt3(*v)).unwrap_or_default());
        }
        by_name.insert(row[0].clone(), row);
    }
    let header: Vec<String> =
        ["Country".to_string(), "Income Level".to_string()].into_iter().chain(years.iter().map(|y| y.to_string())).collect();
    let rows: Vec<Vec<String>> = std::iter::once(header).chain(by_name.into_values()).collect();
    Ok(RenderedTable { text: align(&rows), csv: csv_string(&rows) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableA1Row {
    pub country: String,
    pub income_level: Option<IncomeLevel>,
    pub values: BTreeMap<i32, f64>,
}

/// Reads a table in the `Country,Income Level,<years...>` layout. Blank cells
/// are absent.
pub fn read_table_a1<R: Read>(reader: R) -> Result<Vec<TableA1Row>, ReportError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("Country") || headers.get(1) != Some("Income Level") {
        return Err(ReportError::Parse("expected `Country,Income Level,...` header".into()));
    }
    let years: Vec<i32> = headers
        .iter()
        .skip(2)
        .map(|h| h.parse().map_err(|_| ReportError::Parse(format!("bad year column `{h}`"))))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let level_text = rec.get(1).unwrap_or("");
        let income_level = if level_text.is_empty() {
            None
        } else {
            Some(IncomeLevel::parse(level_text).ok_or_else(|| ReportError::Parse(format!("bad income level `{level_text}`")))?)
        };
        let mut values = BTreeMap::new();
        for (y, cell) in years.iter().zip(rec.iter().skip(2)) {
            if !cell.is_empty() {
                let v = cell.parse().map_err(|_| ReportError::Parse(format!("bad value `{cell}`")))?;
                values.insert(*y, v);
            }
        }
        out.push(TableA1Row { country: rec.get(0).unwrap_or("").to_string(), income_level, values });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEffectRow {
    pub of: String,
    /// Empty when `of` has no interaction.
    pub moderator: String,
    pub at: f64,
    pub effect: MarginalEffect,
    pub lower: f64,
    pub upper: f64,
}

/// Marginal effect of every slope regressor. Interacted regressors are
/// evaluated on `points` equally spaced moderator values over `range`;
/// the others give one row. Intervals are 95% two-sided with the model's
/// degrees of freedom.
pub fn marginal_effects_grid(
    r: &RegressionResult,
    moderator_ranges: &BTreeMap<String, (f64, f64)>,
    points: usize,
) -> Result<Vec<MarginalEffectRow>, ReportError> {
    let crit = t_critical(r.dof);
    let mut out = Vec::new();
    for term in &r.terms {
        let Term::Regressor(of) = term else { continue };
        let partners: Vec<&String> = r
            .terms
            .iter()
            .filter_map(|t| match t {
                Term::Interaction(a, b) if a == of => Some(b),
                Term::Interaction(a, b) if b == of => Some(a),
                _ => None,
            })
            .collect();
        let row = |moderator: &str, at: f64, map: &BTreeMap<String, f64>| -> Result<MarginalEffectRow, ReportError> {
            let effect = marginal_effect(r, of, map).map_err(|e| ReportError::Parse(e.to_string()))?;
            Ok(MarginalEffectRow {
                of: of.clone(),
                moderator: moderator.to_string(),
                at,
                effect,
                lower: effect.estimate - crit * effect.se,
                upper: effect.estimate + crit * effect.se,
            })
        };
        match partners.as_slice() {
            [] => out.push(row("", 0.0, &BTreeMap::new())?),
            [m] => {
                let (lo, hi) = moderator_ranges.get(*m).copied().unwrap_or((0.0, 0.0));
                let n = points.max(2);
                for k in 0..n {
                    let at = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                    out.push(row(m, at, &BTreeMap::from([((*m).clone(), at)]))?);
                }
            }
            _ => {
                // Several moderators: evaluate with all of them at zero.
                let zeros = partners.iter().map(|m| ((*m).clone(), 0.0)).collect();
                out.push(row("", 0.0, &zeros)?);
            }
        }
    }
    Ok(out)
}

fn t_critical(dof: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let dof = if dof > 0.0 { dof } else { f64::INFINITY };
    StudentsT::new(0.0, 1.0, dof).expect("valid t parameters").inverse_cdf(0.975)
}

pub fn write_marginal_effects_csv<W: Write>(rows: &[MarginalEffectRow], writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["of", "moderator", "at", "estimate", "std_error", "lower", "upper"])?;
    for r in rows {
        w.write_record([
            r.of.clone(),
            r.moderator.clone(),
            r.at.to_string(),
            r.effect.estimate.to_string(),
            r.effect.se.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel_store::{summarize_values, Iso3};

    fn table2_col1() -> RegressionResult {
        let terms = vec![Term::parse("d_gini"), Term::parse("gdp_growth")];
        let mut r = RegressionResult::from_estimates(
            "d_headcount",
            terms,
            &[0.618, 0.011],
            &[0.326, 0.037],
            Some((-0.007, 0.002)),
            856,
            77,
        );
        r.adjusted_r2 = 0.0977;
        r
    }

    #[test]
    fn number_formats() {
        assert_eq!(fmt3(0.0), "0.000");
        assert_eq!(fmt3(-0.0001), "0.000");
        assert_eq!(fmt3(-32.27), "-32.270");
        assert_eq!(fmt_sig3(0.0977), "0.0977");
        assert_eq!(fmt_sig3(0.199), "0.199");
        assert_eq!(fmt_sig3(0.23), "0.23");
        assert_eq!(fmt_sig3(0.2304), "0.23");
    }

    #[test]
    fn table2_fixture() {
        let t = render_table(TableInput::Regressions(&[table2_col1()]), Layout::Table2).unwrap();
        let lines: Vec<&str> = t.text.lines().collect();
        let find = |label: &str| lines.iter().position(|l| l.starts_with(label)).unwrap();
        let g = find("\u{394}Gini");
        assert!(lines[g].ends_with("0.618*"));
        assert!(lines[g + 1].trim() == "[0.326]");
        assert!(lines[find("GDP growth rate")].ends_with("0.011"));
        assert!(lines[find("Constant")].contains("-0.007"));
        assert!(lines[find("Observations")].ends_with("856"));
        assert!(lines[find("Adjusted R")].ends_with("0.0977"));
        assert!(lines[find("Number of country")].ends_with("77"));
        assert!(lines[find("Country fixed effects")].ends_with("Yes"));
        assert!(lines[find("Robust standard error cluster")].ends_with("Country"));

        let back = read_regression_csv(t.csv.as_bytes()).unwrap();
        assert_eq!(back[0].coefficients, table2_col1().coefficients);
        assert_eq!(back[0].std_errors(), table2_col1().std_errors());
        assert_eq!(back[0].adjusted_r2, 0.0977);
    }

    #[test]
    fn zero_coefficient_has_no_stars() {
        let mut r = table2_col1();
        r.coefficients[1] = 0.0;
        let t = render_table(TableInput::Regressions(&[r]), Layout::Table2).unwrap();
        let line = t.text.lines().find(|l| l.starts_with("GDP growth rate")).unwrap();
        assert!(line.ends_with("0.000"));
    }

    #[test]
    fn layout_mismatch() {
        let r = table2_col1();
        assert!(matches!(
            render_table(TableInput::Regressions(std::slice::from_ref(&r)), Layout::Table3),
            Err(ReportError::LayoutMismatch { layout: "table3", .. })
        ));
        assert!(matches!(
            render_table(TableInput::Regressions(&[r]), Layout::TableA4),
            Err(ReportError::LayoutMismatch { .. })
        ));
        assert!(matches!(
            render_table(TableInput::Summary { levels: &[], changes: &[] }, Layout::Table2),
            Err(ReportError::LayoutMismatch { .. })
        ));
        assert_eq!("tablea4".parse::<Layout>().unwrap(), Layout::TableA4);
        assert!("table9".parse::<Layout>().is_err());
    }

    #[test]
    fn table3_labels_follow_position() {
        let terms = ["d_gini", "gdp_growth", "d_usage", "d_gini:d_usage"].map(Term::parse).to_vec();
        let r = RegressionResult::from_estimates("d_watts", terms, &[1.115, -0.017, 0.041, -14.874], &[0.326, 0.041, 0.034, 7.558], Some((-0.004, 0.002)), 856, 77);
        let t = render_table(TableInput::Regressions(&[r]), Layout::Table3).unwrap();
        assert!(t.text.contains("\u{394}Usage"));
        assert!(t.text.contains("\u{394}Watts index"));
        let line = t.text.lines().find(|l| l.starts_with("\u{394}Gini x")).unwrap();
        assert!(line.ends_with("-14.874*"));
    }

    #[test]
    fn summary_fixture() {
        let mut s = summarize_values("headcount", &[0.1, 0.2]).unwrap();
        s.mean = 0.271;
        s.sd = Some(0.25);
        s.n = 933;
        let t = render_table(TableInput::Summary { levels: &[s.clone()], changes: &[] }, Layout::Table1).unwrap();
        let line = t.text.lines().find(|l| l.starts_with("Headcount")).unwrap();
        assert!(line.contains("0.271") && line.contains("0.250") && line.ends_with("933"));
        let back = read_summary_csv(t.csv.as_bytes()).unwrap();
        assert_eq!(back, vec![("A".to_string(), s)]);
    }

    #[test]
    fn table_a1_round_trip() {
        let afg = Iso3::new("AFG").unwrap();
        let aut = Iso3::new("AUT").unwrap();
        let mut countries = BTreeMap::new();
        countries.insert(afg, crate::panel_store::CountryInfo { name: Some("Afghanistan".into()), income_level: Some(IncomeLevel::Low) });
        countries.insert(aut, crate::panel_store::CountryInfo { name: Some("Austria".into()), income_level: Some(IncomeLevel::High) });
        let panel = AnalysisPanel::new(Vec::new(), countries).unwrap();
        let series = IndexSeries {
            kind: crate::index_builder::IndexKind::Fii,
            values: BTreeMap::from([((afg, 2004), 0.019), ((afg, 2005), 0.0204), ((aut, 2005), 0.376)]),
        };
        let t = render_table(TableInput::Index { series: &series, panel: &panel }, Layout::TableA1).unwrap();
        assert!(t.csv.starts_with("Country,Income Level,2004,2005\n"));
        assert!(t.csv.contains("Afghanistan,Low income,0.019,0.020\n"));
        let rows = read_table_a1(t.csv.as_bytes()).unwrap();
        assert_eq!(rows[0].country, "Afghanistan");
        assert_eq!(rows[0].income_level, Some(IncomeLevel::Low));
        assert_eq!(rows[0].values[&2004], 0.019);
        assert_eq!(rows[1].values.get(&2004), None);
    }

    #[test]
    fn model_csv_round_trip() {
        let r = table2_col1();
        let mut buf = Vec::new();
        write_model_csv(&r, &mut buf).unwrap();
        let back = read_model_csv(buf.as_slice(), "d_headcount").unwrap();
        assert_eq!(back.names, r.names);
        assert_eq!(back.coefficients, r.coefficients);
    }

    #[test]
    fn marginal_effect_grid_crosses_zero() {
        let terms = ["d_gini", "gdp_growth", "d_fii", "d_gini:d_fii"].map(Term::parse).to_vec();
        let r = RegressionResult::from_estimates("d_headcount", terms, &[0.789, 0.005, 0.073, -32.270], &[0.29, 0.041, 0.119, 16.012], Some((-0.007, 0.002)), 856, 77);
        let ranges = BTreeMap::from([("d_fii".to_string(), (0.0, 0.05))]);
        let rows = marginal_effects_grid(&r, &ranges, 11).unwrap();
        let gini: Vec<_> = rows.iter().filter(|r| r.of == "d_gini").collect();
        assert_eq!(gini.len(), 11);
        assert_eq!(gini[0].effect.estimate, 0.789);
        assert!(gini[10].effect.estimate < 0.0);
        assert_eq!(rows.iter().filter(|r| r.of == "gdp_growth").count(), 1);
    }
}
