//! Frame numerology, the bit-to-index combinadic codec and frame construction.
//!
//! Each cluster of `L` subcarriers activates `K` of them. A group of
//! `floor(log2 C(L, K))` bits, read MSB first as an unsigned integer `r`,
//! selects the `r`-th `K`-subset of `{0, .., L-1}` in lexicographic order of
//! the sorted index tuples. Clusters consume bit groups in order, cluster 0
//! first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integer::SignVector;
use crate::phase::PhaseVector;

/// Dimensions of one non-coherent OFDM-IM numerology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub n_subcarriers: usize,
    pub n_clusters: usize,
    pub cluster_size: usize,
    pub n_active: usize,
    pub amplitude: f64,
    pub oversampling: usize,
}

impl FrameConfig {
    /// Builds a validated config with `N = B * L`.
    pub fn new(
        n_clusters: usize,
        cluster_size: usize,
        n_active: usize,
        amplitude: f64,
        oversampling: usize,
    ) -> Result<Self> {
        let cfg = FrameConfig {
            n_subcarriers: n_clusters * cluster_size,
            n_clusters,
            cluster_size,
            n_active,
            amplitude,
            oversampling,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// N=128, B=8, L=16, K=3, R=4, beta=1.
    pub fn reference() -> Self {
        FrameConfig::new(8, 16, 3, 1.0, 4).expect("reference config is valid")
    }

    /// N=16, B=2, L=8, K=2, R=4, beta=1; small enough for exhaustive sign search.
    pub fn small() -> Self {
        FrameConfig::new(2, 8, 2, 1.0, 4).expect("small config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_clusters == 0 || self.cluster_size == 0 {
            return bad("cluster count and cluster size must be positive".into());
        }
        if self.n_subcarriers != self.n_clusters * self.cluster_size {
            return bad(format!(
                "N = {} but B * L = {}",
                self.n_subcarriers,
                self.n_clusters * self.cluster_size
            ));
        }
        if self.n_active == 0 || self.n_active >= self.cluster_size {
            return bad(format!(
                "need 1 <= K < L, got K = {}, L = {}",
                self.n_active, self.cluster_size
            ));
        }
        if self.cluster_size > 62 {
            return bad(format!("cluster size {} too large for 64-bit ranks", self.cluster_size));
        }
        if self.oversampling == 0 {
            return bad("oversampling factor must be at least 1".into());
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude must be positive, got {}", self.amplitude));
        }
        Ok(())
    }

    /// Number of active subcarriers per frame, `B * K`.
    pub fn total_active(&self) -> usize {
        self.n_clusters * self.n_active
    }

    /// Number of oversampled time-domain samples, `N * R`.
    pub fn n_samples(&self) -> usize {
        self.n_subcarriers * self.oversampling
    }

    /// Ensemble mean power `B K beta^2 / N` of the oversampled time series.
    pub fn mean_power(&self) -> f64 {
        self.total_active() as f64 * self.amplitude * self.amplitude / self.n_subcarriers as f64
    }

    /// Peak power of the unoptimized frame, `B K` on the PAPR scale.
    pub fn unoptimized_papr(&self) -> f64 {
        self.total_active() as f64
    }

    pub fn bits_per_cluster(&self) -> usize {
        floor_log2(binomial(self.cluster_size as u64, self.n_active as u64))
    }

    pub fn bits_per_frame(&self) -> usize {
        self.n_clusters * self.bits_per_cluster()
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig::reference()
    }
}

/// `B * floor(log2 C(L, K))` for a validated config.
pub fn bits_per_frame(config: &FrameConfig) -> Result<usize> {
    config.validate()?;
    Ok(config.bits_per_frame())
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn floor_log2(x: u64) -> usize {
    debug_assert!(x > 0);
    63 - x.leading_zeros() as usize
}

/// Lexicographic rank/unrank of `k`-subsets of `{0, .., n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combinadic {
    n: usize,
    k: usize,
}

impl Combinadic {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k <= n, "subset size {k} exceeds ground set {n}");
        Combinadic { n, k }
    }

    pub fn count(&self) -> u64 {
        binomial(self.n as u64, self.k as u64)
    }

    /// The `rank`-th subset in lexicographic order, as a sorted vector.
    pub fn unrank(&self, mut rank: u64) -> Vec<usize> {
        assert!(rank < self.count(), "rank {rank} out of range");
        let mut out = Vec::with_capacity(self.k);
        let mut next = 0;
        for pos in 0..self.k {
            let remaining = (self.k - pos - 1) as u64;
            let mut c = next;
            loop {
                // subsets whose element at `pos` is `c`
                let block = binomial((self.n - c - 1) as u64, remaining);
                if rank < block {
                    break;
                }
                rank -= block;
                c += 1;
            }
            out.push(c);
            next = c + 1;
        }
        out
    }

    /// Inverse of [`Combinadic::unrank`]. `subset` must be strictly increasing.
    pub fn rank(&self, subset: &[usize]) -> u64 {
        debug_assert_eq!(subset.len(), self.k);
        let mut rank = 0;
        let mut next = 0;
        for (pos, &c) in subset.iter().enumerate() {
            let remaining = (self.k - pos - 1) as u64;
            for skipped in next..c {
                rank += binomial((self.n - skipped - 1) as u64, remaining);
            }
            next = c + 1;
        }
        rank
    }
}

/// Active offsets within each cluster, one strictly increasing list per cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexPattern {
    pub per_cluster: Vec<Vec<usize>>,
}

impl IndexPattern {
    pub fn validate(&self, config: &FrameConfig) -> Result<()> {
        if self.per_cluster.len() != config.n_clusters {
            return Err(Error::InvalidPattern(format!(
                "{} clusters, expected {}",
                self.per_cluster.len(),
                config.n_clusters
            )));
        }
        for (b, cluster) in self.per_cluster.iter().enumerate() {
            if cluster.len() != config.n_active {
                return Err(Error::InvalidPattern(format!(
                    "cluster {b} has {} active offsets, expected {}",
                    cluster.len(),
                    config.n_active
                )));
            }
            if cluster.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidPattern(format!("cluster {b} is not strictly increasing")));
            }
            if cluster.last().is_some_and(|&c| c >= config.cluster_size) {
                return Err(Error::InvalidPattern(format!("cluster {b} has an offset >= L")));
            }
        }
        Ok(())
    }

    /// Global subcarrier indices `b * L + offset`, ascending.
    pub fn support(&self, config: &FrameConfig) -> Vec<usize> {
        self.per_cluster
            .iter()
            .enumerate()
            .flat_map(|(b, offsets)| offsets.iter().map(move |&o| b * config.cluster_size + o))
            .collect()
    }
}

fn bits_to_u64(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

/// Maps a payload of exactly `bits_per_frame` bits to an activation pattern.
pub fn encode_indices(bits: &[bool], config: &FrameConfig) -> Result<IndexPattern> {
    config.validate()?;
    let expected = config.bits_per_frame();
    if bits.len() != expected {
        return Err(Error::InputSize { expected, actual: bits.len() });
    }
    let per = config.bits_per_cluster();
    let codec = Combinadic::new(config.cluster_size, config.n_active);
    let per_cluster = (0..config.n_clusters)
        .map(|b| codec.unrank(bits_to_u64(&bits[b * per..(b + 1) * per])))
        .collect();
    Ok(IndexPattern { per_cluster })
}

/// Inverse of [`encode_indices`]; rejects subsets whose rank the encoder never emits.
pub fn decode_indices(pattern: &IndexPattern, config: &FrameConfig) -> Result<Vec<bool>> {
    config.validate()?;
    pattern.validate(config)?;
    let per = config.bits_per_cluster();
    let limit = 1u64 << per;
    let codec = Combinadic::new(config.cluster_size, config.n_active);
    let mut bits = Vec::with_capacity(config.bits_per_frame());
    for (cluster, offsets) in pattern.per_cluster.iter().enumerate() {
        let rank = codec.rank(offsets);
        if rank >= limit {
            return Err(Error::NonDecodablePattern { cluster, rank, limit });
        }
        bits.extend((0..per).rev().map(|shift| (rank >> shift) & 1 == 1));
    }
    Ok(bits)
}

/// What the active subcarriers carry.
#[derive(Debug, Clone, Copy)]
pub enum Loading<'a> {
    /// Conventional non-coherent OFDM-IM: every active entry is `beta`.
    Ones,
    Signs(&'a SignVector),
    Phases(&'a PhaseVector),
}

/// Frequency-domain OFDM-IM frame with its active support.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    values: Vec<Complex64>,
    support: Vec<usize>,
    config: FrameConfig,
}

impl Frame {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Active subcarrier indices, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn config(&self) -> &FrameConfig {
        &self.config
    }

    /// Active entries in support order.
    pub fn active_values(&self) -> Vec<Complex64> {
        self.support.iter().map(|&i| self.values[i]).collect()
    }

    /// Same support, new loading.
    pub fn reload(&self, loading: Loading<'_>) -> Result<Frame> {
        let values = load_values(&self.support, loading, &self.config)?;
        Ok(Frame { values, support: self.support.clone(), config: self.config })
    }

    /// Multiplies each active entry by the given unit-modulus factor (support order).
    pub(crate) fn rotated(&self, factors: &[Complex64]) -> Frame {
        debug_assert_eq!(factors.len(), self.support.len());
        let mut values = self.values.clone();
        for (&i, f) in self.support.iter().zip(factors) {
            values[i] *= f;
        }
        Frame { values, support: self.support.clone(), config: self.config }
    }

    /// Recovers the activation pattern from the support.
    pub fn pattern(&self) -> IndexPattern {
        let l = self.config.cluster_size;
        let mut per_cluster = vec![Vec::with_capacity(self.config.n_active); self.config.n_clusters];
        for &i in &self.support {
            per_cluster[i / l].push(i % l);
        }
        IndexPattern { per_cluster }
    }

    /// `x^H x`, equal to `B K beta^2` for every valid frame.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn load_values(support: &[usize], loading: Loading<'_>, config: &FrameConfig) -> Result<Vec<Complex64>> {
    let beta = config.amplitude;
    let bk = support.len();
    let check = |len: usize| {
        if len == bk {
            Ok(())
        } else {
            Err(Error::LoadingLength { expected: bk, actual: len })
        }
    };
    let mut values = vec![Complex64::new(0.0, 0.0); config.n_subcarriers];
    match loading {
        Loading::Ones => {
            for &i in support {
                values[i] = Complex64::new(beta, 0.0);
            }
        }
        Loading::Signs(signs) => {
            check(signs.len())?;
            for (&i, &s) in support.iter().zip(signs.as_slice()) {
                values[i] = Complex64::new(beta * s as f64, 0.0);
            }
        }
        Loading::Phases(phases) => {
            check(phases.len())?;
            for (&i, &phi) in support.iter().zip(phases.as_slice()) {
                values[i] = Complex64::from_polar(beta, phi);
            }
        }
    }
    Ok(values)
}

/// Places the loading on the active subcarriers of `pattern`.
pub fn build_frame(pattern: &IndexPattern, loading: Loading<'_>, config: &FrameConfig) -> Result<Frame> {
    config.validate()?;
    pattern.validate(config)?;
    let support = pattern.support(config);
    let values = load_values(&support, loading, config)?;
    Ok(Frame { values, support, config: *config })
}
