//! Income distributions, Lorenz curves and the poverty/inequality measures
//! computed from them.

mod measures;

pub use measures::{fgt, watts, Fgt, MeasureRegistry, PovertyMeasure, WattsIndex};

use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("income sample is empty")]
    EmptySample,
    #[error("income {0} is negative or not finite")]
    InvalidIncome(f64),
    #[error("weight {0} is not a positive finite number")]
    InvalidWeight(f64),
    #[error("{incomes} incomes but {weights} weights")]
    WeightLengthMismatch { incomes: usize, weights: usize },
    #[error("poverty line must be positive, got {0}")]
    NonpositiveLine(f64),
    #[error("FGT alpha must be 0, 1 or 2, got {0}")]
    UnsupportedAlpha(u32),
    #[error("Watts index is undefined when a poor income is zero")]
    ZeroIncomeAmongPoor,
    #[error("mean income is zero")]
    ZeroMean,
    #[error("mean income must be positive and finite, got {0}")]
    InvalidMean(f64),
    #[error("grid size must be at least {min}, got {got}")]
    InvalidGrid { min: usize, got: usize },
    #[error("invalid Lorenz curve: {0}")]
    InvalidLorenz(String),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("cannot read income sample: {0}")]
    Io(String),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
}

/// Poverty line in the same units as the incomes (e.g. PPP dollars a day).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PovertyLine(f64);

impl PovertyLine {
    pub const DEFAULT: f64 = 1.90;

    pub fn new(z: f64) -> Result<PovertyLine, MeasureError> {
        if z > 0.0 && z.is_finite() {
            Ok(PovertyLine(z))
        } else {
            Err(MeasureError::NonpositiveLine(z))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for PovertyLine {
    fn default() -> Self {
        PovertyLine(Self::DEFAULT)
    }
}

/// Per-capita incomes with optional positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IncomeSample {
    incomes: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl IncomeSample {
    pub fn new(incomes: Vec<f64>, weights: Option<Vec<f64>>) -> Result<IncomeSample, MeasureError> {
        if incomes.is_empty() {
            return Err(MeasureError::EmptySample);
        }
        if let Some(&bad) = incomes.iter().find(|y| !(y.is_finite() && **y >= 0.0)) {
            return Err(MeasureError::InvalidIncome(bad));
        }
        if let Some(w) = &weights {
            if w.len() != incomes.len() {
                return Err(MeasureError::WeightLengthMismatch { incomes: incomes.len(), weights: w.len() });
            }
            if let Some(&bad) = w.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(MeasureError::InvalidWeight(bad));
            }
        }
        Ok(IncomeSample { incomes, weights })
    }

    pub fn unweighted(incomes: Vec<f64>) -> Result<IncomeSample, MeasureError> {
        IncomeSample::new(incomes, None)
    }

    pub fn incomes(&self) -> &[f64] {
        &self.incomes
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.incomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.incomes.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// `(income, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.incomes.iter().enumerate().map(|(i, &y)| (y, self.weight(i)))
    }

    pub fn total_weight(&self) -> f64 {
        match &self.weights {
            Some(w) => w.iter().sum(),
            None => self.incomes.len() as f64,
        }
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(y, w)| y * w).sum::<f64>() / self.total_weight()
    }

    /// Observations sorted by income (stable on ties).
    fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.iter().collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }

    /// Reads `income[,weight]` CSV with a header row.
    pub fn read_csv<R: Read>(reader: R) -> Result<IncomeSample, MeasureError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| MeasureError::Io(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let income_col = col("income").ok_or_else(|| MeasureError::Io("missing column `income`".into()))?;
        let weight_col = col("weight");
        let mut incomes = Vec::new();
        let mut weights = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| MeasureError::Io(e.to_string()))?;
            let parse = |idx: usize, what: &str| -> Result<f64, MeasureError> {
                let text = rec.get(idx).unwrap_or("").trim();
                text.parse::<f64>()
                    .map_err(|_| MeasureError::BadRow { row, message: format!("bad {what} `{text}`") })
            };
            incomes.push(parse(income_col, "income")?);
            if let Some(wc) = weight_col {
                weights.push(parse(wc, "weight")?);
            }
        }
        IncomeSample::new(incomes, weight_col.map(|_| weights))
    }

    pub fn load_csv(path: &Path) -> Result<IncomeSample, MeasureError> {
        let file = File::open(path).map_err(|e| MeasureError::Io(format!("{}: {e}", path.display())))?;
        IncomeSample::read_csv(file)
    }
}

/// Piecewise-linear Lorenz curve through `(p, L(p))` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

const LORENZ_TOL: f64 = 1e-9;

impl LorenzCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<LorenzCurve, MeasureError> {
        let bad = |m: &str| Err(MeasureError::InvalidLorenz(m.to_string()));
        if points.len() < 2 {
            return bad("needs at least two points");
        }
        if points[0] != (0.0, 0.0) || points[points.len() - 1] != (1.0, 1.0) {
            return bad("must start at (0,0) and end at (1,1)");
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("population shares must be strictly ascending");
            }
            if w[1].1 + LORENZ_TOL < w[0].1 {
                return bad("income shares must be nondecreasing");
            }
        }
        if points.iter().any(|&(p, l)| l < -LORENZ_TOL || l > p + LORENZ_TOL) {
            return bad("must satisfy 0 <= L(p) <= p");
        }
        let slopes: Vec<f64> = points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        if slopes.windows(2).any(|s| s[1] + LORENZ_TOL * (1.0 + s[0].abs()) < s[0]) {
            return bad("must be convex");
        }
        Ok(LorenzCurve { points })
    }

    /// The line of perfect equality.
    pub fn diagonal() -> LorenzCurve {
        LorenzCurve { points: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation between vertices; `p` is clamped to [0, 1].
    pub fn eval(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let idx = self.points.partition_point(|&(q, _)| q < p);
        if idx == 0 {
            return self.points[0].1;
        }
        let (p1, l1) = self.points[idx];
        if p1 == p {
            return l1;
        }
        let (p0, l0) = self.points[idx - 1];
        l0 + (l1 - l0) * (p - p0) / (p1 - p0)
    }
}

/// Mean income plus the shape of the distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    mean: f64,
    lorenz: LorenzCurve,
}

impl Distribution {
    pub fn new(mean: f64, lorenz: LorenzCurve) -> Result<Distribution, MeasureError> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(MeasureError::InvalidMean(mean));
        }
        Ok(Distribution { mean, lorenz })
    }

    pub fn from_sample(sample: &IncomeSample, grid_size: usize) -> Result<Distribution, MeasureError> {
        let lorenz = lorenz_from_sample(sample, grid_size)?;
        Distribution::new(sample.mean(), lorenz)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn lorenz(&self) -> &LorenzCurve {
        &self.lorenz
    }

    pub fn with_mean(&self, mean: f64) -> Result<Distribution, MeasureError> {
        Distribution::new(mean, self.lorenz.clone())
    }
}

pub const DEFAULT_LORENZ_GRID: usize = 1000;

/// Samples the empirical Lorenz curve at `grid_size + 1` evenly spaced
/// population shares. Observations straddling a grid point are split linearly.
pub fn lorenz_from_sample(sample: &IncomeSample, grid_size: usize) -> Result<LorenzCurve, MeasureError> {
    if grid_size < 2 {
        return Err(MeasureError::InvalidGrid { min: 2, got: grid_size });
    }
    let total_w = sample.total_weight();
    let total_y: f64 = sample.iter().map(|(y, w)| y * w).sum();
    if total_y <= 0.0 {
        return Err(MeasureError::ZeroMean);
    }
    let mut vertices = Vec::with_capacity(sample.len() + 1);
    vertices.push((0.0, 0.0));
    let (mut cw, mut cy) = (0.0, 0.0);
    for (y, w) in sample.sorted_pairs() {
        cw += w;
        cy += y * w;
        vertices.push((cw / total_w, cy / total_y));
    }
    let empirical = LorenzCurve { points: vertices };

    let mut points = Vec::with_capacity(grid_size + 1);
    points.push((0.0, 0.0));
    for k in 1..grid_size {
        let p = k as f64 / grid_size as f64;
        points.push((p, empirical.eval(p).min(p)));
    }
    points.push((1.0, 1.0));
    LorenzCurve::new(points)
}

/// Materializes `n` equally weighted incomes whose quantile slices follow the
/// Lorenz curve: slice `k` gets `mean * n * (L(k/n) - L((k-1)/n))`.
pub fn sample_from_distribution(dist: &Distribution, n: usize) -> Result<IncomeSample, MeasureError> {
    if n == 0 {
        return Err(MeasureError::InvalidGrid { min: 1, got: 0 });
    }
    let scale = dist.mean * n as f64;
    let mut prev = 0.0;
    let incomes = (1..=n)
        .map(|k| {
            let cur = dist.lorenz.eval(k as f64 / n as f64);
            let y = (scale * (cur - prev)).max(0.0);
            prev = cur;
            y
        })
        .collect();
    IncomeSample::unweighted(incomes)
}

/// Whether to apply the `n / (n - 1)` small-sample factor to the Gini.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GiniConvention {
    #[default]
    Population,
    SmallSample,
}

/// Relative mean absolute difference, halved.
pub fn gini(sample: &IncomeSample) -> Result<f64, MeasureError> {
    gini_with(sample, GiniConvention::Population)
}

pub fn gini_with(sample: &IncomeSample, convention: GiniConvention) -> Result<f64, MeasureError> {
    let total_w = sample.total_weight();
    let mean = sample.mean();
    if mean <= 0.0 {
        return Err(MeasureError::ZeroMean);
    }
    // Sorted form of sum_i sum_j w_i w_j |y_i - y_j| = 2 sum_i w_i y_i (below_i - above_i),
    // with ties grouped so equal incomes contribute nothing among themselves.
    let pairs = sample.sorted_pairs();
    let groups: Vec<(f64, f64)> = pairs
        .chunk_by(|a, b| a.0 == b.0)
        .map(|g| (g[0].0, g.iter().map(|p| p.1).sum()))
        .collect();
    let mut above: Vec<f64> = vec![0.0; groups.len()];
    for k in (0..groups.len().saturating_sub(1)).rev() {
        above[k] = above[k + 1] + groups[k + 1].1;
    }
    let mut below = 0.0;
    let mut acc = 0.0;
    for (k, &(y, w)) in groups.iter().enumerate() {
        acc += w * y * (below - above[k]);
        below += w;
    }
    let g = (acc / (total_w * total_w * mean)).max(0.0);
    Ok(match convention {
        GiniConvention::Population => g,
        GiniConvention::SmallSample if sample.len() > 1 => {
            let n = sample.len() as f64;
            g * n / (n - 1.0)
        }
        GiniConvention::SmallSample => g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> IncomeSample {
        IncomeSample::unweighted(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert_eq!(IncomeSample::unweighted(vec![]), Err(MeasureError::EmptySample));
        assert_eq!(IncomeSample::unweighted(vec![-1.0]), Err(MeasureError::InvalidIncome(-1.0)));
        assert_eq!(
            IncomeSample::new(vec![1.0], Some(vec![1.0, 2.0])),
            Err(MeasureError::WeightLengthMismatch { incomes: 1, weights: 2 })
        );
        assert_eq!(IncomeSample::new(vec![1.0], Some(vec![0.0])), Err(MeasureError::InvalidWeight(0.0)));
    }

    #[test]
    fn gini_of_equal_incomes_is_zero() {
        assert_eq!(gini(&s(&[3.0, 3.0, 3.0])).unwrap(), 0.0);
    }

    #[test]
    fn gini_zero_one() {
        assert!((gini(&s(&[0.0, 1.0])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(gini(&s(&[0.0, 0.0])), Err(MeasureError::ZeroMean));
    }

    #[test]
    fn gini_small_sample_convention() {
        let g = gini_with(&s(&[0.0, 1.0]), GiniConvention::SmallSample).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lorenz_of_equal_incomes_is_diagonal() {
        let l = lorenz_from_sample(&s(&[2.0; 7]), 10).unwrap();
        for &(p, v) in l.points() {
            assert!((p - v).abs() < 1e-12);
        }
    }

    #[test]
    fn lorenz_zero_one_on_three_point_grid() {
        let l = lorenz_from_sample(&s(&[0.0, 1.0]), 2).unwrap();
        assert_eq!(l.points(), &[(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn lorenz_rejects_bad_input() {
        assert!(matches!(lorenz_from_sample(&s(&[1.0]), 1), Err(MeasureError::InvalidGrid { .. })));
        assert_eq!(lorenz_from_sample(&s(&[0.0, 0.0]), 4), Err(MeasureError::ZeroMean));
        assert!(LorenzCurve::new(vec![(0.0, 0.0), (0.5, 0.6), (1.0, 1.0)]).is_err());
        assert!(LorenzCurve::new(vec![(0.0, 0.0), (0.5, 0.1), (0.7, 0.3), (1.0, 1.0)]).is_ok());
        assert!(LorenzCurve::new(vec![(0.0, 0.0), (0.5, 0.4), (0.7, 0.45), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn sample_from_diagonal() {
        let d = Distribution::new(10.0, LorenzCurve::diagonal()).unwrap();
        let out = sample_from_distribution(&d, 4).unwrap();
        for y in out.incomes() {
            assert!((y - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_from_zero_one_lorenz() {
        let l = lorenz_from_sample(&s(&[0.0, 1.0]), 2).unwrap();
        let d = Distribution::new(0.5, l).unwrap();
        let out = sample_from_distribution(&d, 2).unwrap();
        assert_eq!(out.incomes(), &[0.0, 1.0]);
    }

    #[test]
    fn income_csv_reader() {
        let text = "income,weight\n1.5,2\n3,1\n";
        let sample = IncomeSample::read_csv(text.as_bytes()).unwrap();
        assert_eq!(sample.incomes(), &[1.5, 3.0]);
        assert_eq!(sample.weights(), Some(&[2.0, 1.0][..]));
        let text = "income\n1.5\n3\n";
        assert_eq!(IncomeSample::read_csv(text.as_bytes()).unwrap().weights(), None);
        let text = "income\nabc\n";
        assert!(matches!(IncomeSample::read_csv(text.as_bytes()), Err(MeasureError::BadRow { row: 1, .. })));
    }
}
