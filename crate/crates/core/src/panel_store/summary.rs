use super::{AnalysisPanel, DiffRow, Field, PanelError};

/// Descriptive statistics over the non-absent cells of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator); `None` when n = 1.
    pub sd: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

pub fn summarize_values(name: &str, values: &[f64]) -> Result<SummaryStats, PanelError> {
    if values.is_empty() {
        return Err(PanelError::EmptyVariable(name.to_string()));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(SummaryStats {
        name: name.to_string(),
        mean,
        median,
        sd,
        min: sorted[0],
        max: sorted[n - 1],
        n,
    })
}

pub fn summarize(panel: &AnalysisPanel, variables: &[Field]) -> Result<Vec<SummaryStats>, PanelError> {
    variables
        .iter()
        .map(|&f| {
            let values: Vec<f64> = panel.rows().iter().filter_map(|r| r.get(f)).collect();
            summarize_values(f.name(), &values)
        })
        .collect()
}

/// Summaries of differenced variables, named `d_<field>`.
pub fn summarize_diffs(rows: &[DiffRow], variables: &[Field]) -> Result<Vec<SummaryStats>, PanelError> {
    variables
        .iter()
        .map(|&f| {
            let values: Vec<f64> = rows.iter().filter_map(|r| r.delta(f)).collect();
            summarize_values(&format!("d_{}", f.name()), &values)
        })
        .collect()
}
