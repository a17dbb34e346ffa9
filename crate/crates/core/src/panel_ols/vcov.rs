use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::OlsError;

/// Everything a sandwich-type estimator needs from a fitted design.
pub struct VcovInput<'a> {
    pub design: &'a DMatrix<f64>,
    pub residuals: &'a DVector<f64>,
    /// Cluster index `0..n_clusters` per row.
    pub clusters: &'a [usize],
    pub n_clusters: usize,
    pub xtx_inv: &'a DMatrix<f64>,
}

pub trait CovarianceEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, input: &VcovInput<'_>) -> Result<DMatrix<f64>, OlsError>;
    /// Degrees of freedom for t-based inference.
    fn dof(&self, n: usize, k: usize, n_clusters: usize) -> f64;
}

/// Homoskedastic `s^2 (X'X)^-1`.
pub struct Classical;

/// White covariance with the `n / (n - k)` correction.
pub struct Hc1;

/// Cluster-robust sandwich with the `G/(G-1) * (N-1)/(N-K)` correction and
/// `G - 1` degrees of freedom.
pub struct ClusterRobust;

impl CovarianceEstimator for Classical {
    fn name(&self) -> &'static str {
        "classical"
    }

    fn estimate(&self, input: &VcovInput<'_>) -> Result<DMatrix<f64>, OlsError> {
        let (n, k) = input.design.shape();
        let s2 = input.residuals.norm_squared() / (n - k) as f64;
        Ok(input.xtx_inv * s2)
    }

    fn dof(&self, n: usize, k: usize, _: usize) -> f64 {
        (n - k) as f64
    }
}

impl CovarianceEstimator for Hc1 {
    fn name(&self) -> &'static str {
        "hc1"
    }

    fn estimate(&self, input: &VcovInput<'_>) -> Result<DMatrix<f64>, OlsError> {
        let (n, k) = input.design.shape();
        let mut meat = DMatrix::zeros(k, k);
        for i in 0..n {
            let xi = input.design.row(i).transpose();
            meat += &xi * xi.transpose() * input.residuals[i].powi(2);
        }
        let c = n as f64 / (n - k) as f64;
        Ok(input.xtx_inv * meat * input.xtx_inv * c)
    }

    fn dof(&self, n: usize, k: usize, _: usize) -> f64 {
        (n - k) as f64
    }
}

impl CovarianceEstimator for ClusterRobust {
    fn name(&self) -> &'static str {
        "cluster"
    }

    fn estimate(&self, input: &VcovInput<'_>) -> Result<DMatrix<f64>, OlsError> {
        let g = input.n_clusters;
        if g < 2 {
            return Err(OlsError::TooFewClusters(g));
        }
        let (n, k) = input.design.shape();
        let mut scores = DMatrix::zeros(g, k);
        for i in 0..n {
            let c = input.clusters[i];
            for j in 0..k {
                scores[(c, j)] += input.design[(i, j)] * input.residuals[i];
            }
        }
        let meat = scores.transpose() * &scores;
        let c = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
        Ok(input.xtx_inv * meat * input.xtx_inv * c)
    }

    fn dof(&self, _: usize, _: usize, n_clusters: usize) -> f64 {
        n_clusters.saturating_sub(1) as f64
    }
}

/// Covariance estimators selectable by name.
pub struct CovarianceRegistry {
    entries: BTreeMap<&'static str, Box<dyn CovarianceEstimator>>,
}

impl CovarianceRegistry {
    pub fn empty() -> CovarianceRegistry {
        CovarianceRegistry { entries: BTreeMap::new() }
    }

    pub fn with_defaults() -> CovarianceRegistry {
        let mut r = CovarianceRegistry::empty();
        r.register(Box::new(ClusterRobust));
        r.register(Box::new(Hc1));
        r.register(Box::new(Classical));
        r
    }

    pub fn register(&mut self, estimator: Box<dyn CovarianceEstimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn CovarianceEstimator, OlsError> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| OlsError::UnknownEstimator(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for CovarianceRegistry {
    fn default() -> Self {
        CovarianceRegistry::with_defaults()
    }
}

fn bread(design: &DMatrix<f64>) -> Result<DMatrix<f64>, OlsError> {
    (design.transpose() * design)
        .try_inverse()
        .ok_or_else(|| OlsError::RankDeficient(Vec::new()))
}

/// Cluster-robust covariance for an arbitrary design and cluster labelling.
pub fn cluster_vcov(
    design: &DMatrix<f64>,
    residuals: &DVector<f64>,
    clusters: &[usize],
) -> Result<DMatrix<f64>, OlsError> {
    let mut relabel = BTreeMap::new();
    let ids: Vec<usize> = clusters
        .iter()
        .map(|c| {
            let next = relabel.len();
            *relabel.entry(*c).or_insert(next)
        })
        .collect();
    let xtx_inv = bread(design)?;
    let input = VcovInput { design, residuals, clusters: &ids, n_clusters: relabel.len(), xtx_inv: &xtx_inv };
    ClusterRobust.estimate(&input)
}

pub fn hc1_vcov(design: &DMatrix<f64>, residuals: &DVector<f64>) -> Result<DMatrix<f64>, OlsError> {
    let xtx_inv = bread(design)?;
    let ids: Vec<usize> = (0..design.nrows()).collect();
    let input = VcovInput { design, residuals, clusters: &ids, n_clusters: ids.len(), xtx_inv: &xtx_inv };
    Hc1.estimate(&input)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three clusters of two rows, one regressor, no intercept.
    #[test]
    fn hand_expanded_sandwich() {
        let x = [1.0, 2.0, -1.0, 0.5, 3.0, -2.0];
        let u = [0.3, -0.1, 0.2, 0.4, -0.5, 0.1];
        let clusters = [0, 0, 1, 1, 2, 2];
        let design = DMatrix::from_column_slice(6, 1, &x);
        let resid = DVector::from_column_slice(&u);
        let v = cluster_vcov(&design, &resid, &clusters).unwrap();

        // By hand: sum x^2, per-cluster scores, then the scalar sandwich.
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let s0 = x[0] * u[0] + x[1] * u[1];
        let s1 = x[2] * u[2] + x[3] * u[3];
        let s2 = x[4] * u[4] + x[5] * u[5];
        let meat = s0 * s0 + s1 * s1 + s2 * s2;
        let c = (3.0 / 2.0) * (5.0 / 5.0);
        let expected = c * meat / (sxx * sxx);
        assert!((v[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn singletons_match_hc1() {
        let design = DMatrix::from_fn(9, 2, |i, j| if j == 0 { 1.0 } else { (i as f64).sqrt() - 1.3 });
        let resid = DVector::from_fn(9, |i, _| ((i * 7 % 5) as f64 - 2.0) * 0.1);
        let clusters: Vec<usize> = (0..9).collect();
        let a = cluster_vcov(&design, &resid, &clusters).unwrap();
        let b = hc1_vcov(&design, &resid).unwrap();
        assert!((a - b).abs().max() < 1e-14);
    }

    #[test]
    fn one_cluster_is_too_few() {
        let design = DMatrix::from_element(3, 1, 1.0);
        let resid = DVector::from_element(3, 0.1);
        assert_eq!(cluster_vcov(&design, &resid, &[4, 4, 4]).unwrap_err(), OlsError::TooFewClusters(1));
    }

    #[test]
    fn registry_names() {
        let r = CovarianceRegistry::with_defaults();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["classical", "cluster", "hc1"]);
        assert!(r.get("hc3").is_err());
    }
}
