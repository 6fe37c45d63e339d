//! Selected mapping (SLM) and partial transmit sequence (PTS) baselines.
//!
//! Both draw phases from the quarter-turn alphabet `{0, pi/2, pi, 3pi/2}`,
//! stored as turn counts `q` and applied as exact multiplications by `j^q`.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{max_modulus, TransformPlan};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// `j^q`.
#[inline]
pub fn quarter_turn(q: u8) -> Complex64 {
    match q % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Fixed set of SLM phase vectors over the active carriers. Candidate 0 is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlmCandidateSet {
    candidates: Vec<Vec<u8>>,
    seed: u64,
}

impl SlmCandidateSet {
    /// Identity plus `count - 1` uniformly drawn quarter-turn vectors of length `len`.
    pub fn generate(count: usize, len: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidOption("SLM needs at least one candidate".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates = vec![vec![0; len]];
        candidates.extend((1..count).map(|_| (0..len).map(|_| rng.random_range(0..4u8)).collect()));
        Ok(SlmCandidateSet { candidates, seed })
    }

    pub fn from_candidates(candidates: Vec<Vec<u8>>, seed: u64) -> Result<Self> {
        match candidates.first() {
            None => Err(Error::InvalidOption("SLM needs at least one candidate".into())),
            Some(first) if first.iter().any(|&q| q % 4 != 0) => {
                Err(Error::InvalidOption("first SLM candidate must be the identity".into()))
            }
            Some(first) if candidates.iter().any(|c| c.len() != first.len()) => {
                Err(Error::InvalidOption("SLM candidates differ in length".into()))
            }
            _ => Ok(SlmCandidateSet { candidates, seed }),
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Vec<u8>] {
        &self.candidates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone)]
pub struct SlmSelection {
    pub frame: Frame,
    pub index: usize,
    pub papr: f64,
}

/// Lowest-PAPR candidate; the lowest index wins ties.
pub fn slm_select(frame: &Frame, set: &SlmCandidateSet, plan: &TransformPlan) -> Result<SlmSelection> {
    let bk = frame.support().len();
    if set.candidates[0].len() != bk {
        return Err(Error::LoadingLength { expected: bk, actual: set.candidates[0].len() });
    }
    let mean_power = frame.config().mean_power();
    let active = frame.active_values();
    let mut best: Option<(usize, f64)> = None;
    let mut loads = vec![Complex64::new(0.0, 0.0); bk];
    for (u, cand) in set.candidates.iter().enumerate() {
        for ((l, a), &q) in loads.iter_mut().zip(&active).zip(cand) {
            *l = a * quarter_turn(q);
        }
        let series = plan.synthesize_sparse(frame.support(), &loads);
        let peak = max_modulus(&series);
        let papr = peak * peak / frame.config().n_subcarriers as f64 / mean_power;
        if best.is_none_or(|(_, p)| papr < p) {
            best = Some((u, papr));
        }
    }
    let (index, papr) = best.expect("non-empty candidate set");
    let factors: Vec<Complex64> = set.candidates[index].iter().map(|&q| quarter_turn(q)).collect();
    Ok(SlmSelection { frame: frame.rotated(&factors), index, papr })
}

/// Which block-phase combinations PTS searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PtsSearch {
    /// Every combination with block 0 fixed at phase 0: `4^(M-1)` candidates.
    Exhaustive,
    /// An explicit list of block-phase vectors (turn counts, length `M`).
    Fixed(Vec<Vec<u8>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtsConfig {
    pub n_blocks: usize,
    pub search: PtsSearch,
}

impl Default for PtsConfig {
    fn default() -> Self {
        PtsConfig { n_blocks: 4, search: PtsSearch::Exhaustive }
    }
}

impl PtsConfig {
    pub fn exhaustive(n_blocks: usize) -> Self {
        PtsConfig { n_blocks, search: PtsSearch::Exhaustive }
    }

    /// `count` candidates: the identity plus `count - 1` random combinations
    /// (block 0 fixed at phase 0).
    pub fn sampled(n_blocks: usize, count: usize, seed: u64) -> Result<Self> {
        if count == 0 || n_blocks == 0 {
            return Err(Error::InvalidOption("PTS needs at least one block and one candidate".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut list = vec![vec![0; n_blocks]];
        list.extend((1..count).map(|_| {
            std::iter::once(0).chain((1..n_blocks).map(|_| rng.random_range(0..4u8))).collect()
        }));
        Ok(PtsConfig { n_blocks, search: PtsSearch::Fixed(list) })
    }

    pub fn validate(&self, n_subcarriers: usize) -> Result<()> {
        if self.n_blocks == 0 || !n_subcarriers.is_multiple_of(self.n_blocks) {
            return Err(Error::InvalidOption(format!(
                "{} PTS blocks do not divide {} subcarriers",
                self.n_blocks, n_subcarriers
            )));
        }
        if let PtsSearch::Fixed(list) = &self.search {
            if list.is_empty() || list.iter().any(|c| c.len() != self.n_blocks) {
                return Err(Error::InvalidOption("PTS candidate list is empty or mis-sized".into()));
            }
        }
        Ok(())
    }

    fn combinations(&self) -> Vec<Vec<u8>> {
        match &self.search {
            PtsSearch::Fixed(list) => list.clone(),
            PtsSearch::Exhaustive => {
                let free = self.n_blocks - 1;
                (0..4usize.pow(free as u32))
                    .map(|c| {
                        std::iter::once(0)
                            .chain((0..free).map(|b| ((c >> (2 * (free - 1 - b))) & 3) as u8))
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PtsSelection {
    pub frame: Frame,
    /// Turn count per block.
    pub phases: Vec<u8>,
    pub papr: f64,
}

/// Best block-phase combination over `M` contiguous equal spans of the subcarriers.
pub fn pts_select(frame: &Frame, cfg: &PtsConfig, plan: &TransformPlan) -> Result<PtsSelection> {
    let fc = frame.config();
    cfg.validate(fc.n_subcarriers)?;
    let span = fc.n_subcarriers / cfg.n_blocks;
    let blocks: Vec<Vec<Complex64>> = (0..cfg.n_blocks)
        .map(|m| {
            let mut v = vec![Complex64::new(0.0, 0.0); fc.n_subcarriers];
            v[m * span..(m + 1) * span].copy_from_slice(&frame.values()[m * span..(m + 1) * span]);
            plan.synthesize(&v)
        })
        .collect();
    let mean_power = fc.mean_power();
    let mut combined = vec![Complex64::new(0.0, 0.0); plan.n_samples()];
    let mut best: Option<(Vec<u8>, f64)> = None;
    for combo in cfg.combinations() {
        combined.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (block, &q) in blocks.iter().zip(&combo) {
            let r = quarter_turn(q);
            for (c, b) in combined.iter_mut().zip(block) {
                *c += b * r;
            }
        }
        let peak = max_modulus(&combined);
        let papr = peak * peak / fc.n_subcarriers as f64 / mean_power;
        if best.as_ref().is_none_or(|(_, p)| papr < *p) {
            best = Some((combo, papr));
        }
    }
    let (phases, papr) = best.expect("at least one combination");
    let factors: Vec<Complex64> = frame.support().iter().map(|&k| quarter_turn(phases[k / span])).collect();
    Ok(PtsSelection { frame: frame.rotated(&factors), phases, papr })
}
