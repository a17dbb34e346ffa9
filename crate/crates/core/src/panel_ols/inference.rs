use std::collections::BTreeMap;
use std::fmt;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{OlsError, RegressionResult, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p < 0.01 {
            Stars::Three
        } else if p < 0.05 {
            Stars::Two
        } else if p < 0.10 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two-sided p-value of a t statistic. Non-positive `dof` falls back to the
/// normal limit.
pub fn p_value(t: f64, dof: f64) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    let dof = if dof > 0.0 { dof } else { f64::INFINITY };
    let dist = StudentsT::new(0.0, 1.0, dof).expect("valid t parameters");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Stars from a two-sided t test with `n_clusters - 1` degrees of freedom.
pub fn significance_stars(estimate: f64, se: f64, n_clusters: usize) -> Stars {
    stars_with_dof(estimate, se, n_clusters.saturating_sub(1) as f64)
}

pub(crate) fn stars_with_dof(estimate: f64, se: f64, dof: f64) -> Stars {
    if estimate == 0.0 || !(se > 0.0) {
        return Stars::None;
    }
    Stars::from_p(p_value(estimate / se, dof))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalEffect {
    pub estimate: f64,
    pub se: f64,
}

/// `d y / d of` evaluated at the given moderator values, with a delta-method
/// standard error.
pub fn marginal_effect(
    result: &RegressionResult,
    of: &str,
    at: &BTreeMap<String, f64>,
) -> Result<MarginalEffect, OlsError> {
    let own = result.index(of).ok_or_else(|| OlsError::UnknownTerm(of.to_string()))?;
    let mut grad = vec![0.0; result.names.len()];
    grad[own] = 1.0;
    for (i, term) in result.terms.iter().enumerate() {
        if let Term::Interaction(a, b) = term {
            let partner = if a == of {
                b
            } else if b == of {
                a
            } else {
                continue;
            };
            let value = at.get(partner).ok_or_else(|| OlsError::MissingModeratorValue(partner.clone()))?;
            grad[i] += value;
        }
    }
    let estimate = grad.iter().zip(&result.coefficients).map(|(g, b)| g * b).sum();
    let mut var = 0.0;
    for (i, gi) in grad.iter().enumerate() {
        for (j, gj) in grad.iter().enumerate() {
            var += gi * gj * result.vcov[(i, j)];
        }
    }
    Ok(MarginalEffect { estimate, se: var.max(0.0).sqrt() })
}

/// Moderator value at which the marginal effect of `of` vanishes, for a model
/// with a single interaction `of:moderator`.
pub fn moderator_root(result: &RegressionResult, of: &str, moderator: &str) -> Result<f64, OlsError> {
    let beta = result.coefficient(of).ok_or_else(|| OlsError::UnknownTerm(of.to_string()))?;
    let phi = [format!("{of}:{moderator}"), format!("{moderator}:{of}")]
        .iter()
        .find_map(|n| result.coefficient(n))
        .ok_or_else(|| OlsError::NotInteracted { of: of.to_string(), moderator: moderator.to_string() })?;
    Ok(-beta / phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3() -> RegressionResult {
        let terms = ["d_gini", "gdp_growth", "d_fii", "d_gini:d_fii"].map(Term::parse).to_vec();
        RegressionResult::from_estimates(
            "d_headcount",
            terms,
            &[0.789, 0.005, 0.073, -32.270],
            &[0.2, 0.03, 0.05, 14.0],
            Some((-0.007, 0.003)),
            800,
            77,
        )
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(significance_stars(0.0, 0.3, 77), Stars::None);
        assert_eq!(significance_stars(10.0, 0.01, 77), Stars::Three);
        let p = p_value(0.618 / 0.326, 76.0);
        assert!((p - 0.062).abs() < 1e-3);
        assert_eq!(significance_stars(0.618, 0.326, 77), Stars::One);
        assert_eq!(Stars::Two.to_string(), "**");
    }

    #[test]
    fn marginal_effect_at_zero_moderator() {
        let r = table3();
        let at = BTreeMap::from([("d_fii".to_string(), 0.0)]);
        let me = marginal_effect(&r, "d_gini", &at).unwrap();
        assert_eq!(me.estimate, 0.789);
        assert!((me.se - 0.2).abs() < 1e-15);
    }

    #[test]
    fn marginal_effect_root() {
        let r = table3();
        let root = moderator_root(&r, "d_gini", "d_fii").unwrap();
        assert!((root - 0.02445).abs() < 1e-5);
        let at = BTreeMap::from([("d_fii".to_string(), root)]);
        assert!(marginal_effect(&r, "d_gini", &at).unwrap().estimate.abs() < 1e-15);
    }

    #[test]
    fn missing_moderator() {
        let r = table3();
        assert_eq!(
            marginal_effect(&r, "d_gini", &BTreeMap::new()),
            Err(OlsError::MissingModeratorValue("d_fii".into()))
        );
        assert!(matches!(moderator_root(&r, "gdp_growth", "d_fii"), Err(OlsError::NotInteracted { .. })));
    }

    #[test]
    fn no_interaction_is_raw_coefficient() {
        let r = table3();
        let me = marginal_effect(&r, "gdp_growth", &BTreeMap::new()).unwrap();
        assert_eq!(me.estimate, 0.005);
        assert!((me.se - 0.03).abs() < 1e-15);
    }
}
