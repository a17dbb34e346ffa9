//! Seeded synthetic dataset in the six input CSV schemas, plus two income
//! samples for the distribution commands.
//!
//! Incomes are log-normal per country-year. The mean grows with GDP growth
//! and the log-spread drifts slowly, so the poverty measures and the Gini come
//! from the same distribution. Banking indicators follow a latent
//! financial-depth trend with multiplicative noise.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, LogNormal, Normal};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::dist_measures::{fgt, gini, watts, IncomeSample};
use crate::panel_store::IncomeLevel;

pub const SEED_ENV: &str = "POVKIT_SEED";
pub const DEFAULT_SEED: u64 = 20_200_101;

/// `POVKIT_SEED` when set to an integer, otherwise [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Countries per income level: low, lower-middle, upper-middle, high.
    pub counts: [usize; 4],
    pub first_year: i32,
    pub last_year: i32,
    /// Last year of GDP growth figures (the later ones flagged as forecasts).
    pub last_growth_year: i32,
    /// Last year of population figures.
    pub last_population_year: i32,
    /// Probability that a country-year has a household survey.
    pub survey_rate: f64,
    pub poverty_line: f64,
    /// Quantile points per simulated income distribution.
    pub grid: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: DEFAULT_SEED,
            counts: [30, 48, 10, 8],
            first_year: 2004,
            last_year: 2018,
            last_growth_year: 2021,
            last_population_year: 2019,
            survey_rate: 0.7,
            poverty_line: 1.90,
            grid: 400,
        }
    }
}

/// File name and CSV content.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub files: Vec<(&'static str, String)>,
}

impl SyntheticData {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn code(i: usize) -> String {
    let a = (b'A' + (i / 26 % 26) as u8) as char;
    let b = (b'A' + (i % 26) as u8) as char;
    format!("Z{a}{b}")
}

fn lognormal_sample(mean: f64, sigma: f64, grid: usize) -> IncomeSample {
    let std = StdNormal::new(0.0, 1.0).expect("standard normal");
    let m = mean.ln() - 0.5 * sigma * sigma;
    let incomes = (0..grid).map(|k| (m + sigma * std.inverse_cdf((k as f64 + 0.5) / grid as f64)).exp()).collect();
    IncomeSample::unweighted(incomes).expect("positive incomes")
}

struct Country {
    code: String,
    level: IncomeLevel,
    mean0: f64,
    sigma0: f64,
    depth0: f64,
    depth_trend: f64,
    density: f64,
    population0: f64,
}

pub fn generate(config: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let levels = [IncomeLevel::Low, IncomeLevel::LowerMiddle, IncomeLevel::UpperMiddle, IncomeLevel::High];
    let mut countries = Vec::new();
    for (level, &n) in levels.iter().zip(&config.counts) {
        let (mean, depth) = match level {
            IncomeLevel::Low => (2.4, 0.15),
            IncomeLevel::LowerMiddle => (5.0, 0.35),
            IncomeLevel::UpperMiddle => (14.0, 0.8),
            IncomeLevel::High => (45.0, 1.6),
        };
        for _ in 0..n {
            let i = countries.len();
            countries.push(Country {
                code: code(i),
                level: *level,
                mean0: mean * LogNormal::new(0.0, 0.3).unwrap().sample(&mut rng),
                sigma0: rng.random_range(0.45..0.95),
                depth0: depth * LogNormal::new(0.0, 0.4).unwrap().sample(&mut rng),
                depth_trend: rng.random_range(0.01..0.08),
                density: LogNormal::new(0.0, 0.8).unwrap().sample(&mut rng),
                population0: LogNormal::new(16.0, 1.2).unwrap().sample(&mut rng),
            });
        }
    }

    let mut fas = String::from(
        "iso3,country_name,year,branches_per_100k,atms_per_100k,branches_per_1000km2,atms_per_1000km2,accounts_per_1000\n",
    );
    let mut povcal = String::from("iso3,year,headcount,poverty_gap,poverty_gap_sq,watts,gini\n");
    let mut weo = String::from("iso3,year,gdp_growth,is_forecast\n");
    let mut findex = String::from("iso3,year,account_all,account_male,account_female\n");
    let mut population = String::from("iso3,year,population\n");
    let mut income_class = String::from("iso3,income_level\n");

    let growth_noise = Normal::new(0.0, 0.03).unwrap();
    let spread_step = Normal::new(0.0, 0.02).unwrap();
    let noise = LogNormal::new(0.0, 0.12).unwrap();
    let n_total = countries.len();
    let single_survey = countries.iter().position(|c| c.level == IncomeLevel::Low);
    let partial_fas = countries.iter().rposition(|c| c.level == IncomeLevel::LowerMiddle);

    for (ci, c) in countries.iter().enumerate() {
        let name = format!("Land {}", c.code);
        writeln!(income_class, "{},{}", c.code, c.level.as_str()).unwrap();

        let trend_growth = match c.level {
            IncomeLevel::Low | IncomeLevel::LowerMiddle => 0.045,
            _ => 0.025,
        };
        let mut mean = c.mean0;
        let mut sigma = c.sigma0;
        let mut pop = c.population0;
        let survey_year = config.first_year + (ci as i32 % (config.last_year - config.first_year + 1));
        for year in config.first_year..=config.last_growth_year {
            let shock = if year == 2020 { -0.07 } else { 0.0 };
            let g = trend_growth + shock + growth_noise.sample(&mut rng);
            if year > config.first_year {
                mean *= 1.0 + g;
                sigma = (sigma + spread_step.sample(&mut rng)).clamp(0.3, 1.2);
                pop *= 1.0 + rng.random_range(0.005..0.03);
            }
            let is_forecast = year > 2019 || (year == 2019 && ci % 5 == 0);
            writeln!(weo, "{},{},{:.6},{}", c.code, year, g, u8::from(is_forecast)).unwrap();
            if year <= config.last_population_year {
                writeln!(population, "{},{},{:.0}", c.code, year, pop).unwrap();
            }
            if year > config.last_year {
                continue;
            }

            let surveyed = match single_survey {
                Some(s) if s == ci => year == survey_year,
                _ => rng.random_bool(config.survey_rate),
            };
            if surveyed {
                let sample = lognormal_sample(mean, sigma, config.grid);
                let z = config.poverty_line;
                let h = fgt(&sample, z, 0).unwrap();
                let pg = fgt(&sample, z, 1).unwrap();
                let pg2 = fgt(&sample, z, 2).unwrap();
                let w = watts(&sample, z).unwrap();
                let gi = gini(&sample).unwrap();
                writeln!(povcal, "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}", c.code, year, h, pg, pg2, w, gi).unwrap();
            }

            let t = (year - config.first_year) as f64;
            let depth = c.depth0 * (c.depth_trend * t).exp();
            let mut cell = |scale: f64| format!("{:.4}", scale * depth * noise.sample(&mut rng));
            let branches = cell(12.0);
            let atms = cell(30.0);
            let branches_area = cell(8.0 * c.density);
            let atms_area = cell(20.0 * c.density);
            let accounts = cell(600.0);
            if ci + 1 == n_total {
                // The last country has no banking data at all.
            } else if Some(ci) == partial_fas && year % 3 == 0 {
                writeln!(fas, "{},{},{},,,,,{}", c.code, name, year, accounts).unwrap();
            } else {
                writeln!(fas, "{},{},{},{},{},{},{},{}", c.code, name, year, branches, atms, branches_area, atms_area, accounts)
                    .unwrap();
            }

            if matches!(year, 2011 | 2014 | 2017) {
                let base = (0.08 + 0.35 * depth.ln_1p() + rng.random_range(-0.05..0.05)).clamp(0.02, 0.97);
                let gap = rng.random_range(0.0f64..0.12).min(base).min(1.0 - base);
                writeln!(findex, "{},{},{:.4},{:.4},{:.4}", c.code, year, base, base + gap / 2.0, base - gap / 2.0).unwrap();
            }
        }
    }

    let initial = lognormal_sample(3.0, 0.8, 500);
    let final_ = lognormal_sample(3.4, 0.75, 500);
    let sample_csv = |s: &IncomeSample| {
        let mut out = String::from("income\n");
        for y in s.incomes() {
            writeln!(out, "{y:.6}").unwrap();
        }
        out
    };

    SyntheticData {
        files: vec![
            ("fas.csv", fas),
            ("povcal.csv", povcal),
            ("weo.csv", weo),
            ("findex.csv", findex),
            ("population.csv", population),
            ("income_class.csv", income_class),
            ("incomes_initial.csv", sample_csv(&initial)),
            ("incomes_final.csv", sample_csv(&final_)),
        ],
    }
}
