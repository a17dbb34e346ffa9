//! Linear panel regressions with country fixed effects and cluster-robust
//! inference.
//!
//! Interaction columns are products of the raw regressors, formed before the
//! within transformation. The reported constant follows the common
//! "grand mean added back" convention: the within-transformed data are shifted
//! by the overall means so that a single intercept can be estimated next to
//! the absorbed country effects.

mod inference;
mod vcov;

pub use inference::{
    marginal_effect, moderator_root, p_value, significance_stars, MarginalEffect, Stars,
};
pub use vcov::{
    cluster_vcov, hc1_vcov, Classical, ClusterRobust, CovarianceEstimator, CovarianceRegistry, Hc1,
    VcovInput,
};

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub const CONSTANT: &str = "const";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("design matrix is rank deficient; dependent columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("no observations left after dropping incomplete rows")]
    NoObservations,
    #[error("more parameters ({params}) than observations ({n})")]
    TooFewObservations { n: usize, params: usize },
    #[error("duplicate regressor `{0}`")]
    DuplicateRegressor(String),
    #[error("dependent variable `{0}` also appears as a regressor")]
    DependentAmongRegressors(String),
    #[error("unknown covariance estimator `{0}`")]
    UnknownEstimator(String),
    #[error("`{0}` is not a term of the model")]
    UnknownTerm(String),
    #[error("no value supplied for moderator `{0}`")]
    MissingModeratorValue(String),
    #[error("`{of}` does not interact with `{moderator}`")]
    NotInteracted { of: String, moderator: String },
}

/// One row of regression data. Absent variables are simply missing from `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Country code: the fixed-effect and cluster dimension.
    pub group: String,
    pub year: i32,
    pub values: BTreeMap<String, f64>,
}

impl Observation {
    pub fn new(group: impl Into<String>, year: i32) -> Observation {
        Observation { group: group.into(), year, values: BTreeMap::new() }
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Observation {
        self.values.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Regressor(String),
    Interaction(String, String),
}

impl Term {
    pub fn name(&self) -> String {
        match self {
            Term::Regressor(n) => n.clone(),
            Term::Interaction(a, b) => format!("{a}:{b}"),
        }
    }

    /// Parses `a` or `a:b`.
    pub fn parse(s: &str) -> Term {
        match s.split_once(':') {
            Some((a, b)) => Term::Interaction(a.to_string(), b.to_string()),
            None => Term::Regressor(s.to_string()),
        }
    }

    fn value(&self, obs: &Observation) -> Option<f64> {
        match self {
            Term::Regressor(n) => obs.get(n),
            Term::Interaction(a, b) => Some(obs.get(a)? * obs.get(b)?),
        }
    }
}

/// Grouping dimension for fixed effects and clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dimension {
    #[default]
    Country,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub interactions: Vec<(String, String)>,
    /// `None` fits pooled OLS.
    pub fixed_effect: Option<Dimension>,
    pub cluster: Dimension,
    /// Name in the [`CovarianceRegistry`]; `"cluster"` by default.
    pub covariance: String,
    pub include_constant: bool,
}

impl ModelSpec {
    pub fn new(dependent: &str, regressors: &[&str]) -> ModelSpec {
        ModelSpec {
            dependent: dependent.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            interactions: Vec::new(),
            fixed_effect: Some(Dimension::Country),
            cluster: Dimension::Country,
            covariance: "cluster".to_string(),
            include_constant: true,
        }
    }

    pub fn interact(mut self, a: &str, b: &str) -> ModelSpec {
        self.interactions.push((a.to_string(), b.to_string()));
        self
    }

    pub fn covariance(mut self, name: &str) -> ModelSpec {
        self.covariance = name.to_string();
        self
    }

    /// Regressors followed by interaction terms, in estimation order.
    pub fn terms(&self) -> Vec<Term> {
        self.regressors
            .iter()
            .map(|r| Term::Regressor(r.clone()))
            .chain(self.interactions.iter().map(|(a, b)| Term::Interaction(a.clone(), b.clone())))
            .collect()
    }

    fn validate(&self) -> Result<(), OlsError> {
        let mut seen = BTreeSet::new();
        for t in self.terms() {
            let name = t.name();
            if name == self.dependent {
                return Err(OlsError::DependentAmongRegressors(name));
            }
            if !seen.insert(name.clone()) {
                return Err(OlsError::DuplicateRegressor(name));
            }
        }
        Ok(())
    }

    /// Variables that must be present for a row to enter the estimation.
    pub fn required_fields(&self) -> Vec<String> {
        let mut out = vec![self.dependent.clone()];
        for name in self.regressors.iter().chain(self.interactions.iter().flat_map(|(a, b)| [a, b])) {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub dependent: String,
    pub terms: Vec<Term>,
    /// Term names, then [`CONSTANT`] when an intercept is estimated.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub vcov: DMatrix<f64>,
    pub covariance: String,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub n_countries: usize,
    /// Degrees of freedom for t-based inference.
    pub dof: f64,
    /// R-squared of the LSDV-equivalent fit.
    pub r2: f64,
    /// Adjusted with the country effects counted as parameters.
    pub adjusted_r2: f64,
    pub within_r2: f64,
    pub constant: Option<f64>,
    /// Absorbed country intercepts, `mean(y_i) - mean(x_i) b`.
    pub country_effects: BTreeMap<String, f64>,
    pub residuals: Vec<f64>,
    /// `(group, year)` of each residual, in estimation order.
    pub keys: Vec<(String, i32)>,
    /// Rows dropped for lack of each required field.
    pub dropped: BTreeMap<String, usize>,
    pub fixed_effects: bool,
}

impl RegressionResult {
    /// A result known only through its published estimates and standard
    /// errors (e.g. a stored model file). The covariance is diagonal.
    pub fn from_estimates(
        dependent: &str,
        terms: Vec<Term>,
        estimates: &[f64],
        std_errors: &[f64],
        constant: Option<(f64, f64)>,
        n_obs: usize,
        n_clusters: usize,
    ) -> RegressionResult {
        let mut names: Vec<String> = terms.iter().map(Term::name).collect();
        let mut coefficients = estimates.to_vec();
        let mut ses = std_errors.to_vec();
        if let Some((c, se)) = constant {
            names.push(CONSTANT.to_string());
            coefficients.push(c);
            ses.push(se);
        }
        let vcov = DMatrix::from_diagonal(&DVector::from_iterator(ses.len(), ses.iter().map(|s| s * s)));
        RegressionResult {
            dependent: dependent.to_string(),
            terms,
            names,
            coefficients,
            vcov,
            covariance: "cluster".into(),
            n_obs,
            n_clusters,
            n_countries: n_clusters,
            dof: n_clusters.saturating_sub(1) as f64,
            r2: f64::NAN,
            adjusted_r2: f64::NAN,
            within_r2: f64::NAN,
            constant: constant.map(|c| c.0),
            country_effects: BTreeMap::new(),
            residuals: Vec::new(),
            keys: Vec::new(),
            dropped: BTreeMap::new(),
            fixed_effects: true,
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.vcov[(i, i)].sqrt())
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.names.len()).map(|i| self.vcov[(i, i)].sqrt()).collect()
    }

    pub fn stars(&self, name: &str) -> Option<Stars> {
        let i = self.index(name)?;
        let se = self.vcov[(i, i)].sqrt();
        Some(inference::stars_with_dof(self.coefficients[i], se, self.dof))
    }

    /// Slopes only (constant excluded).
    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[..self.terms.len()]
    }
}

/// Estimates the model by least squares on within-transformed data.
pub fn fit_fe_ols(rows: &[Observation], spec: &ModelSpec) -> Result<RegressionResult, OlsError> {
    fit_with_registry(rows, spec, &CovarianceRegistry::with_defaults())
}

pub fn fit_with_registry(
    rows: &[Observation],
    spec: &ModelSpec,
    registry: &CovarianceRegistry,
) -> Result<RegressionResult, OlsError> {
    spec.validate()?;
    let estimator = registry.get(&spec.covariance)?;
    let required = spec.required_fields();
    let mut dropped: BTreeMap<String, usize> = BTreeMap::new();
    let used: Vec<&Observation> = rows
        .iter()
        .filter(|obs| {
            let missing: Vec<&String> = required.iter().filter(|f| obs.get(f).is_none()).collect();
            for f in &missing {
                *dropped.entry((*f).clone()).or_default() += 1;
            }
            missing.is_empty()
        })
        .collect();
    let n = used.len();
    if n == 0 {
        return Err(OlsError::NoObservations);
    }

    let terms = spec.terms();
    let k_slopes = terms.len();
    let group_ids: BTreeMap<&str, usize> = {
        let names: BTreeSet<&str> = used.iter().map(|o| o.group.as_str()).collect();
        names.into_iter().enumerate().map(|(i, g)| (g, i)).collect()
    };
    let groups: Vec<usize> = used.iter().map(|o| group_ids[o.group.as_str()]).collect();
    let n_groups = group_ids.len();

    let y_raw = DVector::from_iterator(n, used.iter().map(|o| o.get(&spec.dependent).expect("complete")));
    let x_raw = DMatrix::from_fn(n, k_slopes, |i, j| terms[j].value(used[i]).expect("complete"));

    let fe = spec.fixed_effect.is_some();
    let (y_within, x_within) = if fe {
        (demean(&DMatrix::from_column_slice(n, 1, y_raw.as_slice()), &groups, n_groups).column(0).into_owned(), demean(&x_raw, &groups, n_groups))
    } else {
        (y_raw.clone(), x_raw.clone())
    };

    let y_bar = y_raw.mean();
    let x_bar: Vec<f64> = (0..k_slopes).map(|j| x_raw.column(j).mean()).collect();
    let k = k_slopes + usize::from(spec.include_constant);
    let mut design = DMatrix::zeros(n, k);
    let mut y = y_within.clone();
    for j in 0..k_slopes {
        let shift = if fe && spec.include_constant { x_bar[j] } else { 0.0 };
        for i in 0..n {
            design[(i, j)] = x_within[(i, j)] + shift;
        }
    }
    if spec.include_constant {
        design.column_mut(k_slopes).fill(1.0);
        if fe {
            y.add_scalar_mut(y_bar);
        }
    }

    let mut names: Vec<String> = terms.iter().map(Term::name).collect();
    if spec.include_constant {
        names.push(CONSTANT.to_string());
    }

    let params = if fe { k_slopes + n_groups } else { k };
    if params >= n {
        return Err(OlsError::TooFewObservations { n, params });
    }
    // Check the slope columns alone first: a regressor absorbed by the fixed
    // effects would otherwise surface as a collinear constant.
    let mut dependent = dependent_columns(&x_within, &names[..k_slopes]);
    if dependent.is_empty() {
        dependent = dependent_columns(&design, &names);
    }
    if !dependent.is_empty() {
        return Err(OlsError::RankDeficient(dependent));
    }

    let xtx = design.transpose() * &design;
    let chol = xtx.clone().cholesky().ok_or_else(|| OlsError::RankDeficient(names.clone()))?;
    let beta = chol.solve(&(design.transpose() * &y));
    let xtx_inv = chol.inverse();
    let resid = &y - &design * &beta;

    let clusters = match spec.cluster {
        Dimension::Country => groups.clone(),
    };
    let n_clusters = n_groups;
    let input = VcovInput { design: &design, residuals: &resid, clusters: &clusters, n_clusters, xtx_inv: &xtx_inv };
    let vcov = estimator.estimate(&input)?;
    let dof = estimator.dof(n, k, n_clusters);

    let ssr = resid.norm_squared();
    let tss = y_raw.iter().map(|v| (v - y_bar).powi(2)).sum::<f64>();
    let within_tss = y_within.norm_squared();
    let r2 = 1.0 - ssr / tss;
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - params) as f64;
    let within_r2 = if fe { 1.0 - ssr / within_tss } else { r2 };

    let slopes = beta.rows(0, k_slopes);
    let constant = spec.include_constant.then(|| beta[k_slopes]);
    let mut country_effects = BTreeMap::new();
    if fe {
        for (&g, &gid) in &group_ids {
            let members: Vec<usize> = (0..n).filter(|&i| groups[i] == gid).collect();
            let m = members.len() as f64;
            let ym = members.iter().map(|&i| y_raw[i]).sum::<f64>() / m;
            let xb = members.iter().map(|&i| (0..k_slopes).map(|j| x_raw[(i, j)] * slopes[j]).sum::<f64>()).sum::<f64>() / m;
            country_effects.insert(g.to_string(), ym - xb);
        }
    }

    Ok(RegressionResult {
        dependent: spec.dependent.clone(),
        terms,
        names,
        coefficients: beta.iter().copied().collect(),
        vcov,
        covariance: estimator.name().to_string(),
        n_obs: n,
        n_clusters,
        n_countries: n_groups,
        dof,
        r2,
        adjusted_r2,
        within_r2,
        constant,
        country_effects,
        residuals: resid.iter().copied().collect(),
        keys: used.iter().map(|o| (o.group.clone(), o.year)).collect(),
        dropped,
        fixed_effects: fe,
    })
}

/// Subtracts group means from every column.
pub fn demean(m: &DMatrix<f64>, groups: &[usize], n_groups: usize) -> DMatrix<f64> {
    let mut sums = DMatrix::<f64>::zeros(n_groups, m.ncols());
    let mut counts = vec![0.0; n_groups];
    for (i, &g) in groups.iter().enumerate() {
        counts[g] += 1.0;
        for j in 0..m.ncols() {
            sums[(g, j)] += m[(i, j)];
        }
    }
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - sums[(groups[i], j)] / counts[groups[i]])
}

/// Columns that are (numerically) linear combinations of earlier ones,
/// found by modified Gram-Schmidt.
fn dependent_columns(design: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    const REL_TOL: f64 = 1e-10;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..design.ncols() {
        let original = design.column(j).into_owned();
        let norm0 = original.norm();
        let mut v = original;
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= REL_TOL * norm0 {
            out.push(names[j].clone());
        } else {
            basis.push(v / norm);
        }
    }
    out
}
