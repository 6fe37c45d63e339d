//! Flat-per-subcarrier Rayleigh channel, energy-based index detection and the
//! end-to-end index error simulation.
//!
//! Each received entry is `y_j = H_j x_j + n_j` with independent
//! `H_j ~ CN(0, sigma_h^2)` and `n_j ~ CN(0, sigma^2)`. Given `x_j = a`,
//! `y_j ~ CN(0, sigma^2 + |a|^2 sigma_h^2)`, which depends on `|a|` only: the
//! phase or sign loaded on an active carrier is invisible to the detector.

use num_complex::Complex64;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{build_frame, decode_indices, encode_indices, Combinadic, Frame, FrameConfig, IndexPattern, Loading};
use crate::par::{map_trials, Execution};
use crate::scheme::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// `sigma_h^2`.
    pub channel_variance: f64,
    /// `sigma^2`.
    pub noise_variance: f64,
}

impl ChannelConfig {
    pub fn new(channel_variance: f64, noise_variance: f64) -> Result<Self> {
        let c = ChannelConfig { channel_variance, noise_variance };
        c.validate()?;
        Ok(c)
    }

    /// Noise variance for `snr = beta^2 sigma_h^2 / sigma^2` per active subcarrier.
    pub fn from_snr_db(snr_db: f64, channel_variance: f64, amplitude: f64) -> Result<Self> {
        let noise = amplitude * amplitude * channel_variance / 10f64.powf(snr_db / 10.0);
        ChannelConfig::new(channel_variance, noise)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel_variance > 0.0 && self.noise_variance > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidOption("channel and noise variances must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub values: Vec<Complex64>,
}

impl ReceivedFrame {
    /// `y = diag(gains) x + noise`, for explicit channel and noise draws.
    pub fn through(frame: &Frame, gains: &[Complex64], noise: &[Complex64]) -> Result<Self> {
        let n = frame.values().len();
        if gains.len() != n || noise.len() != n {
            return Err(Error::DimensionMismatch(format!("need {n} gains and noise samples")));
        }
        let values = frame.values().iter().zip(gains).zip(noise).map(|((x, h), w)| h * x + w).collect();
        Ok(ReceivedFrame { values })
    }
}

/// One `CN(0, variance)` draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Draws a fresh channel realization (all gains, then all noise samples).
pub fn apply_channel<R: Rng + ?Sized>(frame: &Frame, cfg: &ChannelConfig, rng: &mut R) -> ReceivedFrame {
    let n = frame.values().len();
    let gains: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng, cfg.channel_variance)).collect();
    let noise: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng, cfg.noise_variance)).collect();
    ReceivedFrame::through(frame, &gains, &noise).expect("lengths match by construction")
}

/// Which subsets the detector may return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorScope {
    /// Only subsets the encoder can emit (rank below `2^floor(log2 C(L, K))`).
    #[default]
    Decodable,
    AllSubsets,
}

/// Per-cluster energy detector: picks the candidate subset with the largest
/// `sum |y_i|^2`; the lowest rank wins ties.
#[derive(Debug, Clone)]
pub struct MlDetector {
    config: FrameConfig,
    subsets: Vec<Vec<usize>>,
}

impl MlDetector {
    pub fn new(config: &FrameConfig, scope: DetectorScope) -> Result<Self> {
        config.validate()?;
        let codec = Combinadic::new(config.cluster_size, config.n_active);
        let count = match scope {
            DetectorScope::Decodable => 1u64 << config.bits_per_cluster(),
            DetectorScope::AllSubsets => codec.count(),
        };
        Ok(MlDetector { config: *config, subsets: (0..count).map(|r| codec.unrank(r)).collect() })
    }

    pub fn detect(&self, received: &ReceivedFrame) -> Result<IndexPattern> {
        let l = self.config.cluster_size;
        if received.values.len() != self.config.n_subcarriers {
            return Err(Error::DimensionMismatch("received frame length differs from N".into()));
        }
        let per_cluster = received
            .values
            .chunks_exact(l)
            .map(|cluster| {
                let energy: Vec<f64> = cluster.iter().map(|y| y.norm_sqr()).collect();
                let mut best = (f64::NEG_INFINITY, 0);
                for (r, subset) in self.subsets.iter().enumerate() {
                    let e: f64 = subset.iter().map(|&i| energy[i]).sum();
                    if e > best.0 {
                        best = (e, r);
                    }
                }
                self.subsets[best.1].clone()
            })
            .collect();
        Ok(IndexPattern { per_cluster })
    }
}

/// Energy detection over the decodable subsets.
pub fn ml_detect(received: &ReceivedFrame, config: &FrameConfig) -> Result<IndexPattern> {
    MlDetector::new(config, DetectorScope::Decodable)?.detect(received)
}

/// Counter-based generator for one trial: stream `trial` of the master seed.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Random payload of `bits_per_frame` bits.
pub fn random_payload<R: Rng + ?Sized>(config: &FrameConfig, rng: &mut R) -> Vec<bool> {
    (0..config.bits_per_frame()).map(|_| rng.random()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRates {
    pub cluster_error_rate: f64,
    pub bit_error_rate: f64,
    pub cluster_std_error: f64,
    pub bit_std_error: f64,
    pub clusters: u64,
    pub bits: u64,
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    cluster_errors: u64,
    bit_errors: u64,
    /// Sum over clusters of the squared bit-error count.
    bit_errors_sq: u64,
}

/// End to end: payload, mapping, PAPR scheme, channel, detection, decoding.
///
/// Trial `t` draws its payload and then its channel from [`trial_rng`]`(seed, t)`,
/// so two schemes run with the same seed see identical payloads and channel draws.
pub fn simulate_index_error_rate(
    scheme: &Scheme,
    channel: &ChannelConfig,
    n_frames: u64,
    seed: u64,
    exec: Execution,
) -> Result<ErrorRates> {
    channel.validate()?;
    if n_frames == 0 {
        return Err(Error::InvalidOption("need at least one frame".into()));
    }
    let config = *scheme.config();
    let detector = MlDetector::new(&config, DetectorScope::Decodable)?;
    let per = config.bits_per_cluster();
    let results = map_trials(exec, n_frames, |t| -> Result<Counts> {
        let mut rng = trial_rng(seed, t);
        let bits = random_payload(&config, &mut rng);
        let pattern = encode_indices(&bits, &config)?;
        let frame = build_frame(&pattern, Loading::Ones, &config)?;
        let sent = scheme.apply(&frame)?.frame;
        let received = apply_channel(&sent, channel, &mut rng);
        let detected = detector.detect(&received)?;
        let decoded = decode_indices(&detected, &config)?;
        let mut c = Counts::default();
        for (tx, rx) in bits.chunks(per).zip(decoded.chunks(per)) {
            let wrong = tx.iter().zip(rx).filter(|(a, b)| a != b).count() as u64;
            c.bit_errors += wrong;
            c.bit_errors_sq += wrong * wrong;
            c.cluster_errors += (wrong > 0) as u64;
        }
        Ok(c)
    });
    let mut total = Counts::default();
    for r in results {
        let c = r?;
        total.cluster_errors += c.cluster_errors;
        total.bit_errors += c.bit_errors;
        total.bit_errors_sq += c.bit_errors_sq;
    }
    let clusters = n_frames * config.n_clusters as u64;
    let bits = n_frames * config.bits_per_frame() as u64;
    let cer = total.cluster_errors as f64 / clusters as f64;
    let ber = total.bit_errors as f64 / bits as f64;
    // bit errors come in bursts per cluster decision, so the bit-rate standard
    // error is that of the per-cluster error count, not a binomial over bits
    let mean = total.bit_errors as f64 / clusters as f64;
    let var = (total.bit_errors_sq as f64 / clusters as f64 - mean * mean).max(0.0);
    let bit_std_error = (var / clusters as f64).sqrt() / per as f64;
    Ok(ErrorRates {
        cluster_error_rate: cer,
        bit_error_rate: ber,
        cluster_std_error: binomial_se(cer, clusters),
        bit_std_error,
        clusters,
        bits,
    })
}
