use std::collections::BTreeMap;

use super::{IncomeSample, MeasureError, PovertyLine};

/// A poverty measure evaluated on an income sample against a poverty line.
pub trait PovertyMeasure: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, sample: &IncomeSample, line: PovertyLine) -> Result<f64, MeasureError>;
}

/// Foster-Greer-Thorbecke index of order `alpha`. Only incomes strictly below
/// the line count as poor.
pub fn fgt(sample: &IncomeSample, z: f64, alpha: u32) -> Result<f64, MeasureError> {
    let line = PovertyLine::new(z)?;
    if alpha > 2 {
        return Err(MeasureError::UnsupportedAlpha(alpha));
    }
    let z = line.value();
    let num: f64 = sample
        .iter()
        .filter(|&(y, _)| y < z)
        .map(|(y, w)| match alpha {
            0 => w,
            1 => w * (z - y) / z,
            _ => {
                let g = (z - y) / z;
                w * g * g
            }
        })
        .fold(0.0, |acc, v| acc + v);
    Ok(num / sample.total_weight())
}

/// Mean of `ln(z / y)` over the poor, zero for the non-poor.
pub fn watts(sample: &IncomeSample, z: f64) -> Result<f64, MeasureError> {
    let z = PovertyLine::new(z)?.value();
    let mut num = 0.0;
    for (y, w) in sample.iter().filter(|&(y, _)| y < z) {
        if y == 0.0 {
            return Err(MeasureError::ZeroIncomeAmongPoor);
        }
        num += w * (z / y).ln();
    }
    Ok(num / sample.total_weight())
}

#[derive(Debug, Clone, Copy)]
pub struct Fgt {
    name: &'static str,
    alpha: u32,
}

impl Fgt {
    pub const HEADCOUNT: Fgt = Fgt { name: "headcount", alpha: 0 };
    pub const GAP: Fgt = Fgt { name: "gap", alpha: 1 };
    pub const GAP_SQ: Fgt = Fgt { name: "gap_sq", alpha: 2 };
}

impl PovertyMeasure for Fgt {
    fn name(&self) -> &'static str {
        self.name
    }

    fn evaluate(&self, sample: &IncomeSample, line: PovertyLine) -> Result<f64, MeasureError> {
        fgt(sample, line.value(), self.alpha)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WattsIndex;

impl PovertyMeasure for WattsIndex {
    fn name(&self) -> &'static str {
        "watts"
    }

    fn evaluate(&self, sample: &IncomeSample, line: PovertyLine) -> Result<f64, MeasureError> {
        watts(sample, line.value())
    }
}

/// Poverty measures selectable by name.
#[derive(Default)]
pub struct MeasureRegistry {
    entries: BTreeMap<&'static str, Box<dyn PovertyMeasure>>,
}

impl MeasureRegistry {
    pub fn new() -> MeasureRegistry {
        MeasureRegistry::default()
    }

    /// Headcount, gap, squared gap and Watts.
    pub fn with_defaults() -> MeasureRegistry {
        let mut r = MeasureRegistry::new();
        r.register(Box::new(Fgt::HEADCOUNT));
        r.register(Box::new(Fgt::GAP));
        r.register(Box::new(Fgt::GAP_SQ));
        r.register(Box::new(WattsIndex));
        r
    }

    /// Replaces any measure already registered under the same name.
    pub fn register(&mut self, measure: Box<dyn PovertyMeasure>) {
        self.entries.insert(measure.name(), measure);
    }

    pub fn get(&self, name: &str) -> Result<&dyn PovertyMeasure, MeasureError> {
        let key = match name {
            "poverty_gap" => "gap",
            "poverty_gap_sq" => "gap_sq",
            other => other,
        };
        self.entries
            .get(key)
            .map(|b| b.as_ref())
            .ok_or_else(|| MeasureError::UnknownMeasure(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn PovertyMeasure> {
        self.entries.values().map(|b| b.as_ref())
    }
}
