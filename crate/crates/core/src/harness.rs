//! Monte Carlo experiments: PAPR CCDF, per-frame timing and index error rates.
//!
//! Trial `t` of a run with master seed `s` draws its payload from
//! [`trial_rng`]`(s, t)`, so every scheme run with the same seed sees the same
//! frames, and the numbers do not depend on how trials are scheduled.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{random_payload, simulate_index_error_rate, trial_rng, ChannelConfig};
use crate::dsp::{papr, second_papr, to_db};
use crate::error::{Error, Result};
use crate::frame::{build_frame, encode_indices, Frame, FrameConfig, Loading};
use crate::par::{map_trials, Execution};
use crate::scheme::{Scheme, SchemeId, SchemeOptions};

/// Resolution of emitted CCDF curves, dB.
pub const CCDF_STEP_DB: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config: FrameConfig,
    pub scheme: SchemeId,
    pub options: SchemeOptions,
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentSpec {
    pub fn new(config: FrameConfig, scheme: SchemeId, n_trials: u64, seed: u64) -> Self {
        ExperimentSpec { config, scheme, options: SchemeOptions::default(), n_trials, seed, execution: Execution::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.n_trials == 0 {
            return Err(Error::InvalidOption("n_trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Scheme> {
        self.validate()?;
        Scheme::new(self.scheme, &self.options, &self.config)
    }
}

/// The conventional frame of trial `trial`.
pub fn trial_frame(config: &FrameConfig, seed: u64, trial: u64) -> Result<Frame> {
    let bits = random_payload(config, &mut trial_rng(seed, trial));
    build_frame(&encode_indices(&bits, config)?, Loading::Ones, config)
}

/// Empirical complementary CDF of PAPR in dB.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcdfCurve {
    pub thresholds_db: Vec<f64>,
    /// Fraction of trials with PAPR strictly above each threshold.
    pub exceedance: Vec<f64>,
    pub n_trials: u64,
}

impl CcdfCurve {
    /// Curve on the `step` grid covering every sample, with one extra point past the maximum.
    pub fn from_samples(samples_db: &[f64], step: f64) -> Self {
        let mut sorted = samples_db.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let lo = sorted.first().map_or(0, |&v| (v.min(0.0) / step).floor() as i64);
        let hi = sorted.last().map_or(0, |&v| (v / step).ceil() as i64) + 1;
        let mut thresholds_db = Vec::with_capacity((hi - lo + 1) as usize);
        let mut exceedance = Vec::with_capacity(thresholds_db.capacity());
        for k in lo..=hi {
            // snap to the grid so thresholds print and compare cleanly
            let t = (k as f64 * step * 1e9).round() / 1e9;
            let above = n - sorted.partition_point(|&v| v <= t);
            thresholds_db.push(t);
            exceedance.push(if n == 0 { 0.0 } else { above as f64 / n as f64 });
        }
        CcdfCurve { thresholds_db, exceedance, n_trials: n as u64 }
    }

    /// Smallest grid threshold whose exceedance is at most `prob`.
    pub fn threshold_at(&self, prob: f64) -> Option<f64> {
        self.thresholds_db.iter().zip(&self.exceedance).find(|(_, &p)| p <= prob).map(|(&t, _)| t)
    }

    /// `threshold_db,ccdf` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold_db,ccdf\n");
        for (t, p) in self.thresholds_db.iter().zip(&self.exceedance) {
            out.push_str(&format!("{t:.1},{p}\n"));
        }
        out
    }
}

/// Smallest sample value `v` such that at most a fraction `prob` of samples exceed `v`.
pub fn exceedance_quantile(samples: &[f64], prob: f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let allowed = ((prob * n as f64).floor() as usize).min(n - 1);
    sorted[n - 1 - allowed]
}

#[derive(Debug, Clone)]
pub struct CcdfRun {
    pub curve: CcdfCurve,
    /// Per-trial statistic in dB, in trial order.
    pub samples_db: Vec<f64>,
}

/// PAPR statistic per trial: the second peak for the unmodified scheme (its
/// first peak is always `B K`), the PAPR of the transmitted frame otherwise.
pub fn run_ccdf(spec: &ExperimentSpec) -> Result<CcdfRun> {
    let scheme = spec.resolve()?;
    let mean_power = spec.config.mean_power();
    let samples = map_trials(spec.execution, spec.n_trials, |t| -> Result<f64> {
        let frame = trial_frame(&spec.config, spec.seed, t)?;
        let applied = scheme.apply(&frame)?;
        let value = if spec.scheme == SchemeId::None {
            second_papr(&scheme.plan().transform(&applied.frame)?, mean_power)?
        } else {
            applied.papr
        };
        Ok(to_db(value))
    });
    let samples_db = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CcdfRun { curve: CcdfCurve::from_samples(&samples_db, CCDF_STEP_DB), samples_db })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub scheme: SchemeId,
    pub mean_seconds: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn get(&self, scheme: SchemeId) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,mean_seconds,trials\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.scheme, r.mean_seconds, r.trials));
        }
        out
    }
}

/// Mean wall time per frame of each scheme, sequentially on one thread. Specs
/// sharing a config and seed time the same frames.
pub fn run_bench(specs: &[ExperimentSpec]) -> Result<TimingTable> {
    if specs.is_empty() {
        return Err(Error::InvalidOption("bench needs at least one scheme".into()));
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let scheme = spec.resolve()?;
        let frames = (0..spec.n_trials)
            .map(|t| trial_frame(&spec.config, spec.seed, t))
            .collect::<Result<Vec<_>>>()?;
        let started = Instant::now();
        for f in &frames {
            std::hint::black_box(scheme.apply(f)?);
        }
        let mean = started.elapsed().as_secs_f64() / frames.len() as f64;
        rows.push(TimingRow { scheme: spec.scheme, mean_seconds: mean.max(f64::MIN_POSITIVE), trials: spec.n_trials });
    }
    Ok(TimingTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerRow {
    pub snr_db: f64,
    pub cer: f64,
    pub ber: f64,
    pub se_cer: f64,
    pub se_ber: f64,
}

/// `snr_db,cer,ber,se_cer,se_ber` CSV with a header row.
pub fn ber_csv(rows: &[BerRow]) -> String {
    let mut out = String::from("snr_db,cer,ber,se_cer,se_ber\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.snr_db, r.cer, r.ber, r.se_cer, r.se_ber));
    }
    out
}

/// Index error rates per SNR (`beta^2 sigma_h^2 / sigma^2` per active carrier).
/// Every SNR point reuses the spec's seed, so payloads and channel draws are
/// shared across schemes.
pub fn run_ber(spec: &ExperimentSpec, channel_variance: f64, snr_db: &[f64]) -> Result<Vec<BerRow>> {
    let scheme = spec.resolve()?;
    snr_db
        .iter()
        .map(|&snr| {
            let ch = ChannelConfig::from_snr_db(snr, channel_variance, spec.config.amplitude)?;
            let r = simulate_index_error_rate(&scheme, &ch, spec.n_trials, spec.seed, spec.execution)?;
            Ok(BerRow {
                snr_db: snr,
                cer: r.cluster_error_rate,
                ber: r.bit_error_rate,
                se_cer: r.cluster_std_error,
                se_ber: r.bit_std_error,
            })
        })
        .collect()
}

/// Provenance sidecar written next to each CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub experiment: &'a str,
    pub spec: &'a ExperimentSpec,
    pub bits_per_frame: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_variance: Option<f64>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`; returns both paths.
pub fn write_outputs(dir: &Path, stem: &str, csv: &str, sidecar: &Sidecar<'_>) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_text(&csv_path, csv)?;
    let mut json = serde_json::to_string_pretty(sidecar).map_err(|e| Error::Io(e.to_string()))?;
    json.push('\n');
    write_text(&json_path, &json)?;
    Ok((csv_path, json_path))
}

/// Debug summary of one frame before and after a scheme.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizeSummary {
    pub scheme: SchemeId,
    pub support: Vec<usize>,
    /// Active entries after the scheme, as (re, im).
    pub active_values: Vec<(f64, f64)>,
    pub papr_before_db: f64,
    pub second_papr_before_db: f64,
    pub papr_after_db: f64,
    pub seconds: f64,
}

pub fn optimize_one(spec: &ExperimentSpec, trial: u64) -> Result<OptimizeSummary> {
    let scheme = spec.resolve()?;
    let frame = trial_frame(&spec.config, spec.seed, trial)?;
    let mp = spec.config.mean_power();
    let ts = scheme.plan().transform(&frame)?;
    let started = Instant::now();
    let applied = scheme.apply(&frame)?;
    let seconds = started.elapsed().as_secs_f64();
    Ok(OptimizeSummary {
        scheme: spec.scheme,
        support: frame.support().to_vec(),
        active_values: applied.frame.active_values().iter().map(|v| (v.re, v.im)).collect(),
        papr_before_db: to_db(papr(&ts, mp)?),
        second_papr_before_db: to_db(second_papr(&ts, mp)?),
        papr_after_db: to_db(applied.papr),
        seconds,
    })
}
