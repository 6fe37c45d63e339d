//! Oversampled frequency-to-time transform and PAPR measurement.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameConfig};

/// Linear power ratio to dB.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Which time-domain samples a peak is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSet {
    /// All `N R` oversampled samples.
    #[default]
    Oversampled,
    /// The `N` critically sampled points `n = m R`, `m = 0..N`.
    Critical,
}

impl SampleSet {
    /// Sample positions on the oversampled grid.
    pub fn indices(self, config: &FrameConfig) -> Vec<usize> {
        match self {
            SampleSet::Oversampled => (0..config.n_samples()).collect(),
            SampleSet::Critical => (0..config.n_subcarriers).map(|m| m * config.oversampling).collect(),
        }
    }
}

impl std::str::FromStr for SampleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NR" | "nr" | "oversampled" => Ok(SampleSet::Oversampled),
            "N" | "n" | "critical" => Ok(SampleSet::Critical),
            other => Err(Error::InvalidOption(format!("sample set must be N or NR, got {other:?}"))),
        }
    }
}

/// Cached roots of unity and an `NR`-point inverse FFT for one `(N, R)` pair.
///
/// Row `k`, column `n` of the partial Fourier operator is
/// `exp(j 2 pi n k / (N R)) / sqrt(N)`.
#[derive(Clone)]
pub struct TransformPlan {
    n_subcarriers: usize,
    oversampling: usize,
    roots: Vec<Complex64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TransformPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformPlan")
            .field("n_subcarriers", &self.n_subcarriers)
            .field("oversampling", &self.oversampling)
            .finish()
    }
}

impl TransformPlan {
    pub fn new(n_subcarriers: usize, oversampling: usize) -> Self {
        assert!(n_subcarriers > 0 && oversampling > 0);
        let len = n_subcarriers * oversampling;
        let roots = (0..len)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / len as f64))
            .collect();
        let ifft = FftPlanner::new().plan_fft_inverse(len);
        TransformPlan { n_subcarriers, oversampling, roots, ifft }
    }

    pub fn for_config(config: &FrameConfig) -> Self {
        TransformPlan::new(config.n_subcarriers, config.oversampling)
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_samples(&self) -> usize {
        self.roots.len()
    }

    /// `exp(j 2 pi m / (N R))`, index taken modulo `N R`.
    #[inline]
    pub fn root(&self, m: usize) -> Complex64 {
        self.roots[m % self.roots.len()]
    }

    /// Operator entry for subcarrier `k`, sample `n`.
    pub fn entry(&self, k: usize, n: usize) -> Complex64 {
        self.root(k * n) / (self.n_subcarriers as f64).sqrt()
    }

    fn check(&self, config: &FrameConfig) -> Result<()> {
        if config.n_subcarriers != self.n_subcarriers || config.oversampling != self.oversampling {
            return Err(Error::DimensionMismatch(format!(
                "plan is N={}, R={}; frame is N={}, R={}",
                self.n_subcarriers, self.oversampling, config.n_subcarriers, config.oversampling
            )));
        }
        Ok(())
    }

    /// Unnormalized `sum_k values[k] exp(j 2 pi n k / (N R))` over all `N R` samples,
    /// by zero-padded inverse FFT.
    pub fn synthesize(&self, values: &[Complex64]) -> Vec<Complex64> {
        debug_assert!(values.len() <= self.n_samples());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_samples()];
        buf[..values.len()].copy_from_slice(values);
        self.ifft.process(&mut buf);
        buf
    }

    /// Same as [`TransformPlan::synthesize`] but for sparse input `(index, value)`.
    pub fn synthesize_sparse(&self, support: &[usize], values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_samples()];
        for (&k, &v) in support.iter().zip(values) {
            buf[k] = v;
        }
        self.ifft.process(&mut buf);
        buf
    }

    /// Fast path: `N R`-point inverse FFT of the zero-padded frame.
    pub fn transform(&self, frame: &Frame) -> Result<TimeSeries> {
        self.check(frame.config())?;
        let scale = 1.0 / (self.n_subcarriers as f64).sqrt();
        let samples = self.synthesize(frame.values()).into_iter().map(|v| v * scale).collect();
        Ok(TimeSeries { samples, config: *frame.config() })
    }

    /// Direct evaluation of the oversampled synthesis sum. Quadratic; kept as an oracle.
    pub fn transform_direct(&self, frame: &Frame) -> Result<TimeSeries> {
        self.check(frame.config())?;
        let scale = 1.0 / (self.n_subcarriers as f64).sqrt();
        let samples = (0..self.n_samples())
            .map(|n| {
                frame
                    .support()
                    .iter()
                    .map(|&k| frame.values()[k] * self.root(n * k))
                    .sum::<Complex64>()
                    * scale
            })
            .collect();
        Ok(TimeSeries { samples, config: *frame.config() })
    }
}

/// Oversampled time-domain signal of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<Complex64>,
    config: FrameConfig,
}

impl TimeSeries {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn config(&self) -> &FrameConfig {
        &self.config
    }

    /// Index and power of the strongest sample; first index wins ties.
    pub fn peak(&self) -> (usize, f64) {
        self.samples
            .iter()
            .enumerate()
            .map(|(n, v)| (n, v.norm_sqr()))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    pub fn mean_sample_power(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Oversampled transform through the FFT path.
pub fn oversampled_transform(frame: &Frame, plan: &TransformPlan) -> Result<TimeSeries> {
    plan.transform(frame)
}

fn check_power(mean_power: f64) -> Result<()> {
    if mean_power > 0.0 && mean_power.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositivePower(mean_power))
    }
}

/// Peak power over the ensemble mean power (not the per-frame sample mean).
pub fn papr(ts: &TimeSeries, mean_power: f64) -> Result<f64> {
    check_power(mean_power)?;
    Ok(ts.peak().1 / mean_power)
}

pub fn papr_db(ts: &TimeSeries, mean_power: f64) -> Result<f64> {
    papr(ts, mean_power).map(to_db)
}

/// Peak over samples `1..NR`, skipping the deterministic first sample.
pub fn second_papr(ts: &TimeSeries, mean_power: f64) -> Result<f64> {
    check_power(mean_power)?;
    let peak = ts.samples[1..].iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    Ok(peak / mean_power)
}

/// PAPR of a frame under its own config's ensemble mean power.
pub fn frame_papr(frame: &Frame, plan: &TransformPlan) -> Result<f64> {
    papr(&plan.transform(frame)?, frame.config().mean_power())
}

/// `B K + sum_{i != j} cos(2 pi n (i - j) / (N R) + phi_i - phi_j)`, by the double sum.
///
/// Equals `N |x^t(n)|^2` for the unit-amplitude frame carrying `phases` on `support`.
pub fn g_tilde(phases: &[f64], support: &[usize], n: usize, config: &FrameConfig) -> Result<f64> {
    let len = config.n_samples();
    if n >= len {
        return Err(Error::SampleOutOfRange { index: n, len });
    }
    if phases.len() != support.len() {
        return Err(Error::LoadingLength { expected: support.len(), actual: phases.len() });
    }
    let w = 2.0 * PI * n as f64 / len as f64;
    let mut acc = support.len() as f64;
    for (a, (&i, &pi)) in support.iter().zip(phases).enumerate() {
        for (b, (&j, &pj)) in support.iter().zip(phases).enumerate() {
            if a != b {
                acc += (w * (i as f64 - j as f64) + (pi - pj)).cos();
            }
        }
    }
    Ok(acc)
}

/// Per-active-carrier columns of the partial Fourier operator, restricted to a
/// sample set and scaled by `beta / sqrt(N)`. Evaluates real-loaded (sign) frames
/// without touching the idle subcarriers.
#[derive(Debug, Clone)]
pub struct ActiveColumns {
    columns: Vec<Vec<Complex64>>,
    n_points: usize,
}

impl ActiveColumns {
    pub fn new(support: &[usize], samples: SampleSet, plan: &TransformPlan, config: &FrameConfig) -> Self {
        let points = samples.indices(config);
        let scale = config.amplitude / (config.n_subcarriers as f64).sqrt();
        let columns = support
            .iter()
            .map(|&k| points.iter().map(|&n| plan.root(n * k) * scale).collect())
            .collect();
        ActiveColumns { columns, n_points: points.len() }
    }

    pub fn n_active(&self) -> usize {
        self.columns.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        &self.columns[i]
    }

    /// Time samples of the frame with `signs` on the support.
    pub fn series(&self, signs: &[i8]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_points];
        for (col, &s) in self.columns.iter().zip(signs) {
            let s = s as f64;
            for (o, c) in out.iter_mut().zip(col) {
                *o += c * s;
            }
        }
        out
    }

    /// Largest sample modulus.
    pub fn peak(&self, signs: &[i8]) -> f64 {
        max_modulus(&self.series(signs))
    }
}

pub(crate) fn max_modulus(samples: &[Complex64]) -> f64 {
    samples.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{build_frame, encode_indices, IndexPattern, Loading};
    use crate::integer::SignVector;
    use crate::phase::PhaseVector;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pattern(rng: &mut ChaCha8Rng, cfg: &FrameConfig) -> IndexPattern {
        let bits: Vec<bool> = (0..cfg.bits_per_frame()).map(|_| rng.random()).collect();
        encode_indices(&bits, cfg).unwrap()
    }

    #[test]
    fn single_carrier_constant_envelope() {
        let cfg = FrameConfig::new(1, 4, 1, 1.0, 4).unwrap();
        let plan = TransformPlan::for_config(&cfg);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![0]] }, Loading::Ones, &cfg).unwrap();
        let ts = plan.transform(&f).unwrap();
        for v in ts.samples() {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((papr(&ts, cfg.mean_power()).unwrap() - 1.0).abs() < 1e-12);
        assert!((second_papr(&ts, cfg.mean_power()).unwrap() - 1.0).abs() < 1e-12);
        // a carrier off zero still has a constant envelope
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![3]] }, Loading::Ones, &cfg).unwrap();
        let p = papr_db(&plan.transform(&f).unwrap(), cfg.mean_power()).unwrap();
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn all_ones_peak_is_bk_at_first_sample() {
        let cfg = FrameConfig::reference();
        let plan = TransformPlan::for_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = build_frame(&random_pattern(&mut rng, &cfg), Loading::Ones, &cfg).unwrap();
            let ts = plan.transform(&f).unwrap();
            let expected = 24.0 / (128f64).sqrt();
            assert!((ts.samples()[0].re - expected).abs() < 1e-12);
            assert_eq!(ts.peak().0, 0);
            let p = papr(&ts, cfg.mean_power()).unwrap();
            assert!((p / 24.0 - 1.0).abs() < 1e-9);
            assert!((to_db(p) - 13.802).abs() < 1e-3);
            assert!(second_papr(&ts, cfg.mean_power()).unwrap() < 24.0);
        }
    }

    #[test]
    fn fast_and_direct_agree() {
        let cfg = FrameConfig::reference();
        let plan = TransformPlan::for_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_pattern(&mut rng, &cfg);
        let phases = PhaseVector::new((0..24).map(|_| rng.random::<f64>() * 7.0).collect());
        let f = build_frame(&p, Loading::Phases(&phases), &cfg).unwrap();
        let a = plan.transform(&f).unwrap();
        let b = plan.transform_direct(&f).unwrap();
        let diff = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn mismatched_plan_rejected() {
        let cfg = FrameConfig::small();
        let plan = TransformPlan::new(16, 2);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![0, 1]; 2] }, Loading::Ones, &cfg).unwrap();
        assert!(matches!(plan.transform(&f), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn non_positive_power_rejected() {
        let cfg = FrameConfig::small();
        let plan = TransformPlan::for_config(&cfg);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![0, 1]; 2] }, Loading::Ones, &cfg).unwrap();
        let ts = plan.transform(&f).unwrap();
        assert_eq!(papr(&ts, 0.0), Err(Error::NonPositivePower(0.0)));
        assert!(second_papr(&ts, -1.0).is_err());
    }

    #[test]
    fn random_signs_bounded_by_bk() {
        let cfg = FrameConfig::reference();
        let plan = TransformPlan::for_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = random_pattern(&mut rng, &cfg);
            let s = SignVector::new((0..24).map(|_| if rng.random() { 1 } else { -1 }).collect()).unwrap();
            let f = build_frame(&p, Loading::Signs(&s), &cfg).unwrap();
            let ts = plan.transform_direct(&f).unwrap();
            let brute = ts.samples().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max) / cfg.mean_power();
            let fast = frame_papr(&f, &plan).unwrap();
            assert!((brute - fast).abs() < 1e-9);
            assert!(fast <= 24.0 + 1e-9);
        }
    }

    #[test]
    fn second_papr_matches_brute_force_small() {
        let cfg = FrameConfig::small();
        let plan = TransformPlan::for_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let f = build_frame(&random_pattern(&mut rng, &cfg), Loading::Ones, &cfg).unwrap();
            let ts = plan.transform_direct(&f).unwrap();
            let mut brute: f64 = 0.0;
            for n in 1..64 {
                brute = brute.max(ts.samples()[n].norm_sqr());
            }
            let got = second_papr(&plan.transform(&f).unwrap(), cfg.mean_power()).unwrap();
            assert!((got - brute / cfg.mean_power()).abs() < 1e-9);
        }
    }

    #[test]
    fn g_tilde_examples() {
        let cfg = FrameConfig::reference();
        let support: Vec<usize> = (0..24).map(|i| i * 5).collect();
        assert!((g_tilde(&[0.0; 24], &support, 0, &cfg).unwrap() - 576.0).abs() < 1e-9);
        let two = [0.0, PI];
        assert!(g_tilde(&two, &[3, 17], 0, &cfg).unwrap().abs() < 1e-12);
        assert_eq!(
            g_tilde(&two, &[3, 17], 512, &cfg),
            Err(Error::SampleOutOfRange { index: 512, len: 512 })
        );
    }

    #[test]
    fn g_tilde_matches_transform() {
        let cfg = FrameConfig::reference();
        let plan = TransformPlan::for_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let p = random_pattern(&mut rng, &cfg);
            let phases = PhaseVector::new((0..24).map(|_| rng.random::<f64>() * 2.0 * PI).collect());
            let f = build_frame(&p, Loading::Phases(&phases), &cfg).unwrap();
            let ts = plan.transform(&f).unwrap();
            let n = rng.random_range(0..512);
            let g = g_tilde(phases.as_slice(), f.support(), n, &cfg).unwrap();
            assert!((g - 128.0 * ts.samples()[n].norm_sqr()).abs() < 1e-9);
        }
    }

    #[test]
    fn active_columns_match_transform() {
        let cfg = FrameConfig::small();
        let plan = TransformPlan::for_config(&cfg);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![1, 5], vec![0, 7]] }, Loading::Ones, &cfg).unwrap();
        let s = SignVector::new(vec![1, -1, -1, 1]).unwrap();
        let ts = plan.transform(&f.reload(Loading::Signs(&s)).unwrap()).unwrap();
        let cols = ActiveColumns::new(f.support(), SampleSet::Oversampled, &plan, &cfg);
        let series = cols.series(s.as_slice());
        for (a, b) in series.iter().zip(ts.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let crit = ActiveColumns::new(f.support(), SampleSet::Critical, &plan, &cfg);
        assert_eq!(crit.n_points(), 16);
        let cs = crit.series(s.as_slice());
        for (m, v) in cs.iter().enumerate() {
            assert!((v - ts.samples()[4 * m]).norm() < 1e-12);
        }
    }
}
