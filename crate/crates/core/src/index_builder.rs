//! Composite financial-inclusion index.
//!
//! Each raw indicator is winsorized at its upper tail and min-max normalized
//! over the pooled country-years. Four outreach indicators (branches and ATMs,
//! per capita and per area) are combined by their first principal component;
//! the outreach score and the usage indicator (accounts per capita) are then
//! combined by a second first-component step into the overall index.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::panel_store::{AnalysisPanel, Field, Iso3};

pub const DEFAULT_WINSOR_PCT: f64 = 0.95;

pub const OUTREACH_FIELDS: [Field; 4] = [
    Field::BranchesPer100k,
    Field::AtmsPer100k,
    Field::BranchesPer1000Km2,
    Field::AtmsPer1000Km2,
];
pub const USAGE_FIELD: Field = Field::AccountsPer1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("column `{0}` is constant")]
    DegenerateColumn(String),
    #[error("eigensolver did not converge after {0} sweeps")]
    ConvergenceFailure(usize),
    #[error("need at least 2 complete rows, got {0}")]
    InsufficientRows(usize),
    #[error("need at least 2 columns, got {0}")]
    InsufficientColumns(usize),
    #[error("column `{name}` has {got} values, expected {expected}")]
    ShapeMismatch { name: String, got: usize, expected: usize },
    #[error("column `{0}` has a non-finite value")]
    NonFinite(String),
}

/// Upper-tail winsorization at the `pct` quantile (linear interpolation
/// between order statistics). Values at or below the cap are untouched.
pub fn winsorize_upper(values: &[f64], pct: f64) -> Vec<f64> {
    assert!(pct > 0.0 && pct < 1.0, "percentile must be in (0, 1)");
    if values.is_empty() {
        return Vec::new();
    }
    clip_upper(values, quantile_linear(values, pct))
}

/// Replaces values above `cap` by `cap`.
pub fn clip_upper(values: &[f64], cap: f64) -> Vec<f64> {
    values.iter().map(|&v| v.min(cap)).collect()
}

/// Linear-interpolation quantile (`h = (n - 1) p`).
pub fn quantile_linear(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(x - min) / (max - min)` over the whole slice.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>, IndexError> {
    minmax_named(values, "values")
}

fn minmax_named(values: &[f64], name: &str) -> Result<Vec<f64>, IndexError> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(IndexError::DegenerateColumn(name.to_string()));
    }
    let range = max - min;
    Ok(values.iter().map(|&v| (v - min) / range).collect())
}

/// Complete-case matrix of named indicator columns.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl IndicatorMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<IndicatorMatrix, IndexError> {
        if columns.len() < 2 || names.len() != columns.len() {
            return Err(IndexError::InsufficientColumns(columns.len()));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(IndexError::InsufficientRows(n));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(IndexError::ShapeMismatch { name: name.clone(), got: col.len(), expected: n });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(IndexError::NonFinite(name.clone()));
            }
        }
        Ok(IndicatorMatrix { names, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Pearson correlation matrix, row-major `p x p`.
    pub fn correlation(&self) -> Result<Vec<Vec<f64>>, IndexError> {
        let n = self.n_rows() as f64;
        let standardized: Vec<Vec<f64>> = self
            .columns
            .iter()
            .zip(&self.names)
            .map(|(col, name)| {
                let mean = col.iter().sum::<f64>() / n;
                let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
                if ss <= 0.0 {
                    return Err(IndexError::DegenerateColumn(name.clone()));
                }
                let sd = (ss / n).sqrt();
                Ok(col.iter().map(|v| (v - mean) / sd).collect())
            })
            .collect::<Result<_, _>>()?;
        let p = self.n_cols();
        let mut corr = vec![vec![0.0; p]; p];
        for i in 0..p {
            corr[i][i] = 1.0;
            for j in 0..i {
                let c = standardized[i].iter().zip(&standardized[j]).map(|(a, b)| a * b).sum::<f64>() / n;
                corr[i][j] = c;
                corr[j][i] = c;
            }
        }
        Ok(corr)
    }

    /// `sum_j w_j x_ij` for every row.
    pub fn scores(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| weights.iter().zip(&self.columns).map(|(w, col)| w * col[i]).sum())
            .collect()
    }
}

/// Leading eigenpair of the indicator correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Unit-norm loadings, oriented so they sum to a positive number.
    pub weights: Vec<f64>,
    pub eigenvalue: f64,
    /// `eigenvalue / p`, since the eigenvalues of a correlation matrix sum to `p`.
    pub variance_share: f64,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Loadings carry both signs; unexpected for positively oriented indicators.
    pub mixed_signs: bool,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and eigenvectors as columns (`vectors[row][col]`).
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), IndexError> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let values = (0..n).map(|i| a[i][i]).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    Err(IndexError::ConvergenceFailure(JACOBI_MAX_SWEEPS))
}

/// Share of total variance carried by an eigenvalue of a `p`-variable
/// correlation matrix, whose eigenvalues sum to `p`.
pub fn variance_share(eigenvalue: f64, p: usize) -> f64 {
    eigenvalue / p as f64
}

pub fn pca_first_component(matrix: &IndicatorMatrix) -> Result<PcaResult, IndexError> {
    let corr = matrix.correlation()?;
    let p = corr.len();
    let (values, vectors) = symmetric_eigen(&corr)?;
    let lead = (0..p).fold(0, |best, i| if values[i] > values[best] { i } else { best });
    let mut weights: Vec<f64> = (0..p).map(|r| vectors[r][lead]).collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    weights.iter_mut().for_each(|w| *w /= norm);
    let sum: f64 = weights.iter().sum();
    let flip = if sum != 0.0 {
        sum < 0.0
    } else {
        weights.iter().find(|w| **w != 0.0).is_some_and(|w| *w < 0.0)
    };
    if flip {
        weights.iter_mut().for_each(|w| *w = -*w);
    }
    const SIGN_TOL: f64 = 1e-12;
    let mixed_signs = weights.iter().any(|w| *w > SIGN_TOL) && weights.iter().any(|w| *w < -SIGN_TOL);
    let mut eigenvalues = values.clone();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let eigenvalue = values[lead];
    Ok(PcaResult {
        weights,
        eigenvalue,
        variance_share: variance_share(eigenvalue, p),
        eigenvalues,
        mixed_signs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IndexKind {
    Fii,
    Outreach,
    Usage,
}

impl IndexKind {
    pub fn name(&self) -> &'static str {
        match self {
            IndexKind::Fii => "fii",
            IndexKind::Outreach => "outreach",
            IndexKind::Usage => "usage",
        }
    }

    pub fn field(&self) -> Field {
        match self {
            IndexKind::Fii => Field::Fii,
            IndexKind::Outreach => Field::Outreach,
            IndexKind::Usage => Field::Usage,
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Country-year index values on a pooled 0-1 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub kind: IndexKind,
    pub values: BTreeMap<(Iso3, i32), f64>,
}

impl IndexSeries {
    /// Panel fragment with this series in its matching field.
    pub fn to_panel(&self) -> AnalysisPanel {
        AnalysisPanel::from_series(self.kind.field(), &self.values).expect("keys are unique")
    }
}

/// A country-year left out of the index for lack of indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRow {
    pub iso3: Iso3,
    pub year: i32,
    pub missing: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexBuild {
    pub fii: IndexSeries,
    pub outreach: IndexSeries,
    pub usage: IndexSeries,
    pub outreach_pca: PcaResult,
    pub fii_pca: PcaResult,
    pub dropped: Vec<DroppedRow>,
}

impl IndexBuild {
    /// Flat `key=value` diagnostics, one line each.
    pub fn diagnostics(&self) -> String {
        let mut out = String::new();
        for (stage, pca) in [("outreach", &self.outreach_pca), ("fii", &self.fii_pca)] {
            out.push_str(&format!("{stage}.eigenvalue={:.6}\n", pca.eigenvalue));
            out.push_str(&format!("{stage}.variance_share={:.6}\n", pca.variance_share));
            let w: Vec<String> = pca.weights.iter().map(|w| format!("{w:.6}")).collect();
            out.push_str(&format!("{stage}.weights={}\n", w.join(",")));
            let ev: Vec<String> = pca.eigenvalues.iter().map(|w| format!("{w:.6}")).collect();
            out.push_str(&format!("{stage}.eigenvalues={}\n", ev.join(",")));
            out.push_str(&format!("{stage}.mixed_signs={}\n", pca.mixed_signs));
        }
        out.push_str(&format!("rows.used={}\n", self.fii.values.len()));
        out.push_str(&format!("rows.dropped={}\n", self.dropped.len()));
        out
    }
}

fn series(kind: IndexKind, keys: &[(Iso3, i32)], values: Vec<f64>) -> IndexSeries {
    IndexSeries { kind, values: keys.iter().copied().zip(values).collect() }
}

/// Runs the full two-stage pipeline on the raw banking indicators of `panel`.
///
/// Rows missing some (but not all) of the five indicators are reported in
/// [`IndexBuild::dropped`]; rows with none of them are not FAS rows and are
/// skipped silently.
pub fn build_indices(panel: &AnalysisPanel) -> Result<IndexBuild, IndexError> {
    build_indices_with(panel, DEFAULT_WINSOR_PCT)
}

pub fn build_indices_with(panel: &AnalysisPanel, winsor_pct: f64) -> Result<IndexBuild, IndexError> {
    let mut all_fields = OUTREACH_FIELDS.to_vec();
    all_fields.push(USAGE_FIELD);

    let mut keys = Vec::new();
    let mut dropped = Vec::new();
    for row in panel.rows() {
        let missing: Vec<Field> = all_fields.iter().copied().filter(|f| row.get(*f).is_none()).collect();
        if missing.is_empty() {
            keys.push(row.key());
        } else if missing.len() < all_fields.len() {
            dropped.push(DroppedRow { iso3: row.iso3, year: row.year, missing });
        }
    }
    if keys.len() < 2 {
        return Err(IndexError::InsufficientRows(keys.len()));
    }

    let normalized = |field: Field| -> Result<Vec<f64>, IndexError> {
        let raw: Vec<f64> = keys
            .iter()
            .map(|&(c, y)| panel.get(c, y).and_then(|r| r.get(field)).expect("complete case"))
            .collect();
        minmax_named(&winsorize_upper(&raw, winsor_pct), field.name())
    };

    let outreach_cols = OUTREACH_FIELDS.iter().map(|&f| normalized(f)).collect::<Result<Vec<_>, _>>()?;
    let outreach_matrix = IndicatorMatrix::new(
        OUTREACH_FIELDS.iter().map(|f| f.name().to_string()).collect(),
        outreach_cols,
    )?;
    let outreach_pca = pca_first_component(&outreach_matrix)?;
    let outreach = minmax_named(&outreach_matrix.scores(&outreach_pca.weights), "outreach")?;

    let usage = normalized(USAGE_FIELD)?;

    let fii_matrix = IndicatorMatrix::new(
        vec!["outreach".into(), "usage".into()],
        vec![outreach.clone(), usage.clone()],
    )?;
    let fii_pca = pca_first_component(&fii_matrix)?;
    let fii = minmax_named(&fii_matrix.scores(&fii_pca.weights), "fii")?;

    Ok(IndexBuild {
        fii: series(IndexKind::Fii, &keys, fii),
        outreach: series(IndexKind::Outreach, &keys, outreach),
        usage: series(IndexKind::Usage, &keys, usage),
        outreach_pca,
        fii_pca,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel_store::PanelRow;

    #[test]
    fn winsorize_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let cap = 1.0 + 0.95 * 99.0;
        assert!((quantile_linear(&v, 0.95) - 95.05).abs() < 1e-12);
        let w = winsorize_upper(&v, 0.95);
        assert_eq!(&w[..95], &v[..95]);
        for x in &w[95..] {
            assert!((x - cap).abs() < 1e-12);
        }
        assert_eq!(clip_upper(&w, cap), w);
        // Re-estimating the quantile on the capped series moves the cap down.
        assert!(quantile_linear(&w, 0.95) < cap);
    }

    #[test]
    fn winsorize_constant_is_noop() {
        assert_eq!(winsorize_upper(&[3.0; 5], 0.95), vec![3.0; 5]);
    }

    #[test]
    fn minmax_basics() {
        assert_eq!(minmax_normalize(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax_normalize(&[1.0, 1.0]), Err(IndexError::DegenerateColumn("values".into())));
    }

    #[test]
    fn perfectly_correlated_pair() {
        let m = IndicatorMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0, 4.0], vec![3.0, 5.0, 9.0]],
        )
        .unwrap();
        let r = pca_first_component(&m).unwrap();
        let h = 0.5f64.sqrt();
        assert!((r.weights[0] - h).abs() < 1e-12 && (r.weights[1] - h).abs() < 1e-12);
        assert!((r.eigenvalue - 2.0).abs() < 1e-12);
        assert!((r.variance_share - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negatively_correlated_pair_flags_mixed_signs() {
        let m = IndicatorMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0, 4.0, 3.0], vec![4.0, 3.5, 1.0, 2.0]],
        )
        .unwrap();
        let r = pca_first_component(&m).unwrap();
        assert!(r.mixed_signs);
        assert!(r.weights.iter().sum::<f64>() >= 0.0);
    }

    #[test]
    fn degenerate_column_in_pca() {
        let m = IndicatorMatrix::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(pca_first_component(&m), Err(IndexError::DegenerateColumn("b".into())));
    }

    #[test]
    fn share_is_eigenvalue_over_columns() {
        // Correlation-matrix eigenvalues sum to p, so the share is lambda / p.
        assert!((2.91f64 / 4.0 - 0.7275).abs() < 1e-15);
        assert!((1.79f64 / 2.0 - 0.895).abs() < 1e-15);
    }

    fn fas_panel(values: impl Fn(usize) -> [f64; 5], n: usize) -> AnalysisPanel {
        let rows = (0..n)
            .map(|i| {
                let code = format!("A{}{}", (b'A' + (i / 26) as u8) as char, (b'A' + (i % 26) as u8) as char);
                let v = values(i);
                let mut row = PanelRow::new(Iso3::new(&code).unwrap(), 2010);
                for (f, x) in OUTREACH_FIELDS.iter().chain([USAGE_FIELD].iter()).zip(v) {
                    row.set(*f, Some(x));
                }
                row
            })
            .collect();
        AnalysisPanel::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_indicators_give_identical_series() {
        let p = fas_panel(|i| [i as f64 * 1.5 + 1.0; 5], 30);
        let b = build_indices(&p).unwrap();
        for (k, v) in &b.fii.values {
            assert!((v - b.outreach.values[k]).abs() < 1e-12);
            assert!((v - b.usage.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_indicator_is_degenerate() {
        let p = fas_panel(|i| [i as f64, 2.0 * i as f64, 3.0, i as f64, i as f64], 10);
        assert_eq!(build_indices(&p), Err(IndexError::DegenerateColumn("branches_per_1000km2".into())));
    }

    #[test]
    fn partial_rows_are_reported() {
        let mut rows = fas_panel(|i| [i as f64, (i * i) as f64, 1.0 + i as f64, (i % 7) as f64, (i % 5) as f64], 20)
            .rows()
            .to_vec();
        let c = Iso3::new("ZZZ").unwrap();
        rows.push(PanelRow::new(c, 2010).with(Field::AtmsPer100k, 3.0));
        rows.push(PanelRow::new(c, 2011).with(Field::Headcount, 0.3));
        let b = build_indices(&AnalysisPanel::from_rows(rows).unwrap()).unwrap();
        assert_eq!(b.dropped.len(), 1);
        assert_eq!(b.dropped[0].missing.len(), 4);
        assert_eq!(b.fii.values.len(), 20);
    }
}
