//! Comparison of detrended weekly series against model trajectories and a
//! random-walk baseline.
//!
//! For each word: decompose, keep the residual, rescale it to `[-1, 1]`,
//! find the transmission rate whose (rescaled) infected-fraction series has
//! the smallest DTW distance to it, and compare that distance with the
//! distances to `n_random_walks` rescaled Gaussian random walks. A word is
//! significant when the model distance is strictly below the first quartile
//! of the random-walk distances.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, derive_seed, Strategy};
use crate::integrator::simulate;
use crate::model::{Params, State};
use crate::timeseries::{self, decompose, dtw, normalize_unit_range, random_walk, WeeklySeries};

pub type Corpus = Vec<(String, WeeklySeries)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_steps: usize,
    pub xi: f64,
    /// alpha = delta = beta + xi + sqrt(xi (beta + xi)) + alpha_offset.
    pub alpha_offset: f64,
    pub n_random_walks: usize,
    pub initial: State,
    pub dt: f64,
    /// Weeks represented by one model time unit.
    pub weeks_per_time_unit: f64,
    /// Model time skipped before the first sample.
    pub transient: f64,
    /// Seasonal period of the decomposition, in weeks.
    pub period: usize,
    #[serde(skip)]
    pub strategy: Strategy,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            beta_min: 0.01,
            beta_max: 0.3,
            beta_steps: 30,
            xi: 0.1,
            alpha_offset: 0.01,
            n_random_walks: 500,
            initial: State::default_initial(),
            dt: 0.05,
            weeks_per_time_unit: 1.0,
            transient: 200.0,
            period: timeseries::DEFAULT_PERIOD,
            strategy: Strategy::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min > 0.0 && self.beta_max >= self.beta_min && self.beta_max.is_finite()) {
            return Err(Error::InvalidRange {
                name: "beta",
                lo: self.beta_min,
                hi: self.beta_max,
            });
        }
        if self.beta_steps == 0 {
            return Err(Error::Config("beta_steps must be >= 1".into()));
        }
        if self.beta_steps > 1 && self.beta_max == self.beta_min {
            return Err(Error::InvalidRange {
                name: "beta",
                lo: self.beta_min,
                hi: self.beta_max,
            });
        }
        if self.n_random_walks == 0 {
            return Err(Error::Config("n_random_walks must be >= 1".into()));
        }
        for (name, v) in [
            ("xi", self.xi),
            ("dt", self.dt),
            ("weeks_per_time_unit", self.weeks_per_time_unit),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite and > 0",
                });
            }
        }
        if !(self.transient.is_finite() && self.transient >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "transient",
                value: self.transient,
                reason: "must be finite and >= 0",
            });
        }
        self.sample_stride()?;
        self.initial.validate(crate::model::STATE_SLACK)
    }

    /// Uniform grid over `[beta_min, beta_max]`, endpoints included.
    pub fn beta_grid(&self) -> Vec<f64> {
        if self.beta_steps == 1 {
            return vec![self.beta_min];
        }
        let span = self.beta_max - self.beta_min;
        (0..self.beta_steps)
            .map(|k| self.beta_min + span * k as f64 / (self.beta_steps - 1) as f64)
            .collect()
    }

    pub fn alpha_for(&self, beta: f64) -> f64 {
        beta + self.xi + (self.xi * (beta + self.xi)).sqrt() + self.alpha_offset
    }

    pub fn params_for(&self, beta: f64) -> Result<Params> {
        Params::restricted(beta, self.xi, self.alpha_for(beta))
    }

    /// Integration steps between weekly samples.
    fn sample_stride(&self) -> Result<usize> {
        let steps = 1.0 / (self.weeks_per_time_unit * self.dt);
        let rounded = steps.round();
        if rounded < 1.0 || (steps - rounded).abs() > 1e-9 * rounded {
            return Err(Error::Config(format!(
                "one week must be a whole number of integration steps (got {steps})"
            )));
        }
        Ok(rounded as usize)
    }
}

/// Rescaled weekly samples of I(t) for transmission rate `beta`.
pub fn model_candidate_series(beta: f64, config: &FitConfig, length: usize) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::Empty("candidate series length must be >= 1"));
    }
    let params = config.params_for(beta)?;
    let stride = config.sample_stride()?;
    let skip = (config.transient / config.dt).round() as usize;
    let last_step = skip + (length - 1) * stride;
    let t_end = (last_step.max(1)) as f64 * config.dt;
    let traj = simulate(&params, &config.initial, t_end, config.dt, 1)?;
    let samples: Vec<f64> = (0..length)
        .map(|k| traj.states[skip + k * stride].i)
        .collect();
    Ok(normalize_unit_range(&samples))
}

/// Model candidates of one length, one per grid value of beta.
#[derive(Debug, Clone)]
pub struct ModelBank {
    pub betas: Vec<f64>,
    pub series: Vec<Vec<f64>>,
}

impl ModelBank {
    pub fn build(config: &FitConfig, length: usize) -> Result<Self> {
        config.validate()?;
        let betas = config.beta_grid();
        let series = exec::try_map_indexed(betas.len(), config.strategy, |k| {
            model_candidate_series(betas[k], config, length)
        })?;
        Ok(ModelBank { betas, series })
    }

    /// Grid value minimising the DTW distance; ties go to the smaller beta.
    pub fn fit(&self, residual: &[f64], strategy: Strategy) -> Result<ModelFit> {
        let distances = exec::try_map_indexed(self.series.len(), strategy, |k| {
            dtw(residual, &self.series[k])
        })?;
        let mut best = 0;
        for (k, d) in distances.iter().enumerate() {
            if *d < distances[best] {
                best = k;
            }
        }
        Ok(ModelFit {
            best_beta: self.betas[best],
            dtw_model: distances[best],
            distances,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub best_beta: f64,
    pub dtw_model: f64,
    /// Distance for every grid value, in grid order.
    pub distances: Vec<f64>,
}

pub fn best_model_fit(residual: &[f64], config: &FitConfig) -> Result<ModelFit> {
    if residual.is_empty() {
        return Err(Error::Empty("residual"));
    }
    ModelBank::build(config, residual.len())?.fit(residual, config.strategy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    pub mean: f64,
    /// Lower-interpolated first quartile: `sorted[floor((n - 1) / 4)]`.
    pub q1: f64,
    /// Ascending.
    pub distances: Vec<f64>,
}

pub(crate) fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).floor() as usize]
}

/// DTW distances from `residual` to `config.n_random_walks` rescaled random
/// walks of the same length. Walk `k` is seeded with `derive_seed(seed, k)`.
pub fn random_walk_baseline(residual: &[f64], config: &FitConfig, seed: u64) -> Result<Baseline> {
    if residual.is_empty() {
        return Err(Error::Empty("residual"));
    }
    if config.n_random_walks == 0 {
        return Err(Error::Config("n_random_walks must be >= 1".into()));
    }
    let n = residual.len();
    let mut distances = exec::try_map_indexed(config.n_random_walks, config.strategy, |k| {
        let walk = normalize_unit_range(&random_walk(n, derive_seed(seed, k as u64)));
        dtw(residual, &walk)
    })?;
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    distances.sort_by(f64::total_cmp);
    Ok(Baseline {
        mean,
        q1: lower_quantile(&distances, 0.25),
        distances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub word: String,
    pub best_beta: f64,
    pub dtw_model: f64,
    pub dtw_rw_mean: f64,
    pub dtw_rw_q1: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedWord {
    pub word: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub seed: u64,
    pub rng: String,
    pub config: FitConfig,
    pub assumptions: Vec<String>,
    pub records: Vec<ComparisonRecord>,
    pub skipped: Vec<SkippedWord>,
    pub fraction_significant: f64,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// CSV `word,dtw_rw_mean,dtw_model,significant`.
    pub fn write_scatter_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["word", "dtw_rw_mean", "dtw_model", "significant"])?;
        for r in &self.records {
            w.write_record([
                r.word.clone(),
                r.dtw_rw_mean.to_string(),
                r.dtw_model.to_string(),
                r.significant.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn assumptions(config: &FitConfig) -> Vec<String> {
    vec![
        "delta = alpha (restricted model) in the model family".into(),
        format!(
            "additive decomposition, centered moving-average trend over {} weeks, edges dropped",
            config.period
        ),
        "residuals and candidate series rescaled to [-1, 1] by the min-max affine map".into(),
        "DTW: squared point cost, square root of the total, no window".into(),
        format!(
            "one model time unit = {} week(s); first sample at t = {}",
            config.weeks_per_time_unit, config.transient
        ),
        "significant iff dtw_model < first quartile (lower interpolation) of random-walk distances"
            .into(),
    ]
}

fn compare(
    word: &str,
    residual: &[f64],
    bank: &ModelBank,
    config: &FitConfig,
    seed: u64,
) -> Result<ComparisonRecord> {
    let fit = bank.fit(residual, config.strategy)?;
    let baseline = random_walk_baseline(residual, config, seed)?;
    Ok(ComparisonRecord {
        word: word.to_string(),
        best_beta: fit.best_beta,
        dtw_model: fit.dtw_model,
        dtw_rw_mean: baseline.mean,
        dtw_rw_q1: baseline.q1,
        significant: fit.dtw_model < baseline.q1,
    })
}

/// Compare one rescaled residual; same seeding as [`run_report`] for word
/// index `word_index`.
pub fn compare_residual(
    word: &str,
    residual: &[f64],
    config: &FitConfig,
    seed: u64,
    word_index: usize,
) -> Result<ComparisonRecord> {
    let residual = normalize_unit_range(residual);
    let bank = ModelBank::build(config, residual.len())?;
    compare(
        word,
        &residual,
        &bank,
        config,
        derive_seed(seed, word_index as u64),
    )
}

/// Full protocol on raw weekly series.
pub fn run_report(
    corpus: &[(String, WeeklySeries)],
    config: &FitConfig,
    seed: u64,
) -> Result<Report> {
    let min_len = 2 * config.period;
    let prepared: Vec<(String, Result<Vec<f64>>)> = corpus
        .iter()
        .map(|(word, series)| {
            let residual = if series.len() < min_len {
                Err(Error::TooShort {
                    what: "series",
                    needed: min_len,
                    got: series.len(),
                })
            } else {
                decompose(&series.values, config.period).map(|d| d.residuals())
            };
            (word.clone(), residual)
        })
        .collect();
    report_from_residuals(prepared, config, seed)
}

/// Protocol on pre-computed residuals (decomposition already done).
pub fn run_report_on_residuals(
    residuals: &[(String, Vec<f64>)],
    config: &FitConfig,
    seed: u64,
) -> Result<Report> {
    let prepared = residuals
        .iter()
        .map(|(w, r)| (w.clone(), Ok(r.clone())))
        .collect();
    report_from_residuals(prepared, config, seed)
}

fn report_from_residuals(
    prepared: Vec<(String, Result<Vec<f64>>)>,
    config: &FitConfig,
    seed: u64,
) -> Result<Report> {
    if prepared.is_empty() {
        return Err(Error::Empty("corpus has no words"));
    }
    config.validate()?;
    let prepared: Vec<(String, Result<Vec<f64>>)> = prepared
        .into_iter()
        .map(|(w, r)| {
            let r = r.and_then(|r| {
                if r.is_empty() {
                    Err(Error::Empty("residual"))
                } else {
                    Ok(normalize_unit_range(&r))
                }
            });
            (w, r)
        })
        .collect();

    let mut banks = BTreeMap::new();
    for r in prepared.iter().filter_map(|(_, r)| r.as_ref().ok()) {
        if let Entry::Vacant(slot) = banks.entry(r.len()) {
            slot.insert(ModelBank::build(config, r.len())?);
        }
    }

    let outcomes = exec::map_indexed(prepared.len(), config.strategy, |k| {
        let (word, residual) = &prepared[k];
        let residual = residual.as_ref().map_err(|e| e.to_string())?;
        compare(
            word,
            residual,
            &banks[&residual.len()],
            config,
            derive_seed(seed, k as u64),
        )
        .map_err(|e| e.to_string())
    });

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for ((word, _), outcome) in prepared.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(reason) => skipped.push(SkippedWord {
                word: word.clone(),
                reason,
            }),
        }
    }
    let fraction_significant = if records.is_empty() {
        0.0
    } else {
        records.iter().filter(|r| r.significant).count() as f64 / records.len() as f64
    };
    Ok(Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        rng: timeseries::RNG_ALGORITHM.to_string(),
        config: config.clone(),
        assumptions: assumptions(config),
        records,
        skipped,
        fraction_significant,
    })
}

/// Layout of a search-volume CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CsvLayout {
    /// `date,word,value`, one row per (week, word).
    #[default]
    Long,
    /// `date,<word1>,<word2>,...`, one row per week.
    Wide,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_value(path: &Path, line: u64, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("non-numeric value `{raw}`")))?;
    if !(0.0..=100.0).contains(&v) {
        return Err(parse_error(
            path,
            line,
            format!("value {v} outside [0, 100]"),
        ));
    }
    Ok(v)
}

fn parse_date(path: &Path, line: u64, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
        .map_err(|_| parse_error(path, line, format!("bad ISO-8601 date `{raw}`")))
}

/// Read a search-volume export. Words keep their order of first appearance.
pub fn load_trends_csv(path: impl AsRef<Path>, layout: CsvLayout) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let mut corpus: Corpus = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut push = |word: &str, line: u64, date: NaiveDate, value: f64| -> Result<()> {
        let k = *index.entry(word.to_string()).or_insert_with(|| {
            corpus.push((
                word.to_string(),
                WeeklySeries {
                    dates: Vec::new(),
                    values: Vec::new(),
                },
            ));
            corpus.len() - 1
        });
        let series = &mut corpus[k].1;
        if let Some(prev) = series.dates.last() {
            if date <= *prev {
                return Err(parse_error(
                    path,
                    line,
                    format!("dates for `{word}` not strictly increasing ({date} after {prev})"),
                ));
            }
        }
        series.dates.push(date);
        series.values.push(value);
        Ok(())
    };

    let mut rows = 0usize;
    match layout {
        CsvLayout::Long => {
            if headers != ["date", "word", "value"] {
                return Err(parse_error(path, 1, "expected header `date,word,value`"));
            }
            for record in rdr.records() {
                let record = record?;
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != 3 {
                    return Err(parse_error(
                        path,
                        line,
                        format!("expected 3 fields, got {}", record.len()),
                    ));
                }
                let date = parse_date(path, line, &record[0])?;
                let word = record[1].trim();
                if word.is_empty() {
                    return Err(parse_error(path, line, "empty word"));
                }
                push(word, line, date, parse_value(path, line, &record[2])?)?;
                rows += 1;
            }
        }
        CsvLayout::Wide => {
            if headers.len() < 2 || headers[0] != "date" {
                return Err(parse_error(path, 1, "expected header `date,<word>,...`"));
            }
            for record in rdr.records() {
                let record = record?;
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != headers.len() {
                    return Err(parse_error(
                        path,
                        line,
                        format!("expected {} fields, got {}", headers.len(), record.len()),
                    ));
                }
                let date = parse_date(path, line, &record[0])?;
                for (word, raw) in headers[1..].iter().zip(record.iter().skip(1)) {
                    push(word, line, date, parse_value(path, line, raw)?)?;
                }
                rows += 1;
            }
        }
    }
    if rows == 0 {
        return Err(parse_error(path, 1, "no data rows"));
    }
    Ok(corpus)
}
