//! Growth / redistribution / residual decomposition of a change in poverty.
//!
//! `P(mean, lorenz)` is evaluated by materializing an equally weighted sample
//! of `n_quantiles` slices from the distribution and applying the measure, so
//! every registered measure shares one code path.

use thiserror::Error;

use crate::dist_measures::{
    sample_from_distribution, Distribution, IncomeSample, LorenzCurve, MeasureError, PovertyLine,
    PovertyMeasure,
};

pub const DEFAULT_QUANTILES: usize = 10_000;
pub const MIN_QUANTILES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("n_quantiles must be at least {MIN_QUANTILES}, got {0}")]
    TooFewQuantiles(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Period whose mean and Lorenz curve are held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reference {
    #[default]
    Initial,
    Final,
}

impl Reference {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reference::Initial => "initial",
            Reference::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompResult {
    pub measure: String,
    pub z: f64,
    pub total: f64,
    pub growth: f64,
    pub redistribution: f64,
    /// `total - growth - redistribution`.
    pub residual: f64,
    pub reference: Reference,
}

/// Evaluates the measure at a given mean and Lorenz curve.
pub fn evaluate_at(
    measure: &dyn PovertyMeasure,
    mean: f64,
    lorenz: &LorenzCurve,
    line: PovertyLine,
    n_quantiles: usize,
) -> Result<f64, MeasureError> {
    let dist = Distribution::new(mean, lorenz.clone())?;
    let sample: IncomeSample = sample_from_distribution(&dist, n_quantiles)?;
    measure.evaluate(&sample, line)
}

pub fn datt_ravallion(
    initial: &Distribution,
    final_: &Distribution,
    line: PovertyLine,
    measure: &dyn PovertyMeasure,
    n_quantiles: usize,
    reference: Reference,
) -> Result<DecompResult, DecompError> {
    if n_quantiles < MIN_QUANTILES {
        return Err(DecompError::TooFewQuantiles(n_quantiles));
    }
    let p = |mean: f64, lorenz: &LorenzCurve| evaluate_at(measure, mean, lorenz, line, n_quantiles);
    let (mu_i, l_i) = (initial.mean(), initial.lorenz());
    let (mu_f, l_f) = (final_.mean(), final_.lorenz());

    let p_ii = p(mu_i, l_i)?;
    let p_ff = p(mu_f, l_f)?;
    let total = p_ff - p_ii;
    let (growth, redistribution) = match reference {
        Reference::Initial => (p(mu_f, l_i)? - p_ii, p(mu_i, l_f)? - p_ii),
        Reference::Final => (p_ff - p(mu_i, l_f)?, p_ff - p(mu_f, l_i)?),
    };
    Ok(DecompResult {
        measure: measure.name().to_string(),
        z: line.value(),
        total,
        growth,
        redistribution,
        residual: total - growth - redistribution,
        reference,
    })
}

/// Resolution of one materialized evaluation: each quantile slice carries
/// population share `1 / n`.
pub fn discretization_bound(n_quantiles: usize) -> f64 {
    1.0 / n_quantiles as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_measures::{fgt, Fgt, MeasureRegistry, DEFAULT_LORENZ_GRID};

    fn dist(v: &[f64]) -> Distribution {
        let s = IncomeSample::unweighted(v.to_vec()).unwrap();
        Distribution::from_sample(&s, v.len()).unwrap()
    }

    fn line() -> PovertyLine {
        PovertyLine::new(1.9).unwrap()
    }

    #[test]
    fn identical_periods_decompose_to_zero() {
        let d = dist(&[0.5, 1.0, 2.0, 4.0]);
        let reg = MeasureRegistry::with_defaults();
        for m in reg.iter() {
            let r = datt_ravallion(&d, &d, line(), m, 1000, Reference::Initial).unwrap();
            assert_eq!((r.total, r.growth, r.redistribution, r.residual), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn doubled_mean_is_pure_growth() {
        let d = dist(&[0.5, 1.0, 2.0, 4.0]);
        let f = d.with_mean(2.0 * d.mean()).unwrap();
        let r = datt_ravallion(&d, &f, line(), &Fgt::GAP, 1000, Reference::Initial).unwrap();
        assert_eq!(r.redistribution, 0.0);
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.growth, r.total);
        assert!(r.total < 0.0);
    }

    #[test]
    fn equal_means_give_no_growth_component() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 1.0, 3.0, 5.0];
        let direct_a = fgt(&IncomeSample::unweighted(a.to_vec()).unwrap(), 1.9, 0).unwrap();
        let direct_b = fgt(&IncomeSample::unweighted(b.to_vec()).unwrap(), 1.9, 0).unwrap();
        assert_eq!((direct_a, direct_b), (0.25, 0.5));

        let r = datt_ravallion(&dist(&a), &dist(&b), line(), &Fgt::HEADCOUNT, 10_000, Reference::Initial)
            .unwrap();
        assert_eq!(r.growth, 0.0);
        assert!((r.total - 0.25).abs() < 1e-12);
        assert_eq!(r.redistribution, r.total);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn reference_swap_keeps_total() {
        let a = dist(&[0.4, 0.9, 1.5, 2.2, 3.0, 6.0]);
        let b = dist(&[0.8, 1.1, 1.6, 2.0, 2.9, 8.0]);
        let i = datt_ravallion(&a, &b, line(), &Fgt::GAP_SQ, 5000, Reference::Initial).unwrap();
        let f = datt_ravallion(&a, &b, line(), &Fgt::GAP_SQ, 5000, Reference::Final).unwrap();
        assert_eq!(i.total, f.total);
        assert!((i.growth - f.growth).abs() > 1e-6);
        for r in [i, f] {
            assert!((r.growth + r.redistribution + r.residual - r.total).abs() < 1e-12);
        }
    }

    #[test]
    fn watts_error_propagates() {
        let a = dist(&[0.0, 1.0, 2.0]);
        let b = dist(&[0.5, 1.0, 2.0]);
        let err = datt_ravallion(&a, &b, line(), &crate::dist_measures::WattsIndex, 300, Reference::Initial);
        assert_eq!(err, Err(DecompError::Measure(MeasureError::ZeroIncomeAmongPoor)));
    }

    #[test]
    fn quantile_floor() {
        let d = dist(&[1.0, 2.0]);
        assert_eq!(
            datt_ravallion(&d, &d, line(), &Fgt::HEADCOUNT, 99, Reference::Initial),
            Err(DecompError::TooFewQuantiles(99))
        );
    }

    #[test]
    fn refinement_converges() {
        // Smooth log-normal-like sample on a fine grid.
        let n = 2000;
        let inc = |shift: f64, spread: f64| -> Distribution {
            let v: Vec<f64> = (0..n)
                .map(|k| {
                    let u = (k as f64 + 0.5) / n as f64;
                    (shift + spread * statrs::function::erf::erf_inv(2.0 * u - 1.0) * 2f64.sqrt()).exp()
                })
                .collect();
            Distribution::from_sample(&IncomeSample::unweighted(v).unwrap(), DEFAULT_LORENZ_GRID).unwrap()
        };
        let a = inc(0.9, 0.6);
        let b = inc(1.0, 0.7);
        let mut prev: Option<DecompResult> = None;
        for nq in [500, 1000, 2000, 4000] {
            let r = datt_ravallion(&a, &b, line(), &Fgt::HEADCOUNT, nq, Reference::Initial).unwrap();
            if let Some(p) = prev {
                let bound = 4.0 * discretization_bound(nq / 2);
                assert!((r.growth - p.growth).abs() <= bound);
                assert!((r.redistribution - p.redistribution).abs() <= bound);
                assert!((r.residual - p.residual).abs() <= bound);
            }
            prev = Some(r);
        }
    }
}
