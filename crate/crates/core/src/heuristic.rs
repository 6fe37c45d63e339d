//! Iterative sign-exchange heuristic for the binary loading.
//!
//! Starting from all `+1`, each pass tries flipping every active carrier of one
//! sign population in ascending support order and keeps a flip only if the peak
//! modulus strictly drops. Passes in one direction repeat while the last pass
//! improved the peak by more than `eta` times its new value. The outer loop
//! alternates `+1 -> -1` and `-1 -> +1` passes until a `-1 -> +1` pass leaves
//! the number of `+1` entries unchanged.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{max_modulus, ActiveColumns, SampleSet, TransformPlan};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::integer::SignVector;
use crate::report::SolverReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOptions {
    pub eta: f64,
    pub samples: SampleSet,
    /// Safety cap on outer iterations.
    pub max_outer: usize,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        HeuristicOptions { eta: 0.1, samples: SampleSet::Oversampled, max_outer: 100 }
    }
}

/// Search state. `w[i]` is true exactly where `t[i] = +1`; `v` is the current
/// peak modulus and `u` the peak at the end of the previous pass.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicState {
    pub t: Vec<i8>,
    pub w: Vec<bool>,
    pub u: f64,
    pub v: f64,
    pub eta: f64,
    series: Vec<Complex64>,
}

impl HeuristicState {
    /// All `+1`, with `u = v` the peak of that loading.
    pub fn initial(columns: &ActiveColumns, eta: f64) -> Self {
        HeuristicState::from_signs(columns, &SignVector::ones(columns.n_active()), eta)
    }

    pub fn from_signs(columns: &ActiveColumns, signs: &SignVector, eta: f64) -> Self {
        let t = signs.as_slice().to_vec();
        let series = columns.series(&t);
        let v = max_modulus(&series);
        HeuristicState { w: t.iter().map(|&s| s == 1).collect(), t, u: v, v, eta, series }
    }

    /// `S_w`, the number of `+1` entries.
    pub fn positives(&self) -> usize {
        self.w.iter().filter(|&&w| w).count()
    }

    pub fn signs(&self) -> SignVector {
        SignVector::new(self.t.clone()).expect("state holds only +1/-1")
    }
}

/// One `ExchangeSign` call. `direction = +1` scans carriers currently at `+1` and
/// tries `-1`; `direction = -1` the reverse. Every accepted peak is appended to
/// `trace`. Returns the number of candidate evaluations.
pub fn exchange_sign(state: &mut HeuristicState, columns: &ActiveColumns, direction: i8, trace: &mut Vec<f64>) -> u64 {
    debug_assert!(direction == 1 || direction == -1);
    let mut evaluations = 0;
    let mut candidate = vec![Complex64::new(0.0, 0.0); state.series.len()];
    loop {
        let scan: Vec<usize> = (0..state.t.len()).filter(|&i| state.t[i] == direction).collect();
        for i in scan {
            evaluations += 1;
            // flipping t_i from `direction` to `-direction` subtracts 2 * direction * column_i
            let delta = 2.0 * direction as f64;
            for ((c, s), col) in candidate.iter_mut().zip(&state.series).zip(columns.column(i)) {
                *c = s - col * delta;
            }
            let v_candidate = max_modulus(&candidate);
            if v_candidate < state.v {
                state.t[i] = -direction;
                state.w[i] = state.t[i] == 1;
                state.series = columns.series(&state.t);
                state.v = v_candidate;
                trace.push(v_candidate);
            }
        }
        let delta = state.u - state.v;
        state.u = state.v;
        if delta <= state.eta * state.v {
            return evaluations;
        }
    }
}

/// Result of one heuristic run.
#[derive(Debug, Clone)]
pub struct HeuristicOutcome {
    pub signs: SignVector,
    pub report: SolverReport,
    /// Initial peak followed by every accepted peak, in order.
    pub trace: Vec<f64>,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct HeuristicSolver {
    plan: TransformPlan,
    opts: HeuristicOptions,
}

impl HeuristicSolver {
    pub fn new(plan: TransformPlan, opts: HeuristicOptions) -> Result<Self> {
        if !(opts.eta > 0.0 && opts.eta.is_finite()) {
            return Err(Error::InvalidOption(format!("eta must be positive, got {}", opts.eta)));
        }
        if opts.max_outer == 0 {
            return Err(Error::InvalidOption("max_outer must be positive".into()));
        }
        Ok(HeuristicSolver { plan, opts })
    }

    pub fn run(&self, frame: &Frame) -> Result<HeuristicOutcome> {
        let started = Instant::now();
        let cfg = frame.config();
        if self.plan.n_subcarriers() != cfg.n_subcarriers || self.plan.n_samples() != cfg.n_samples() {
            return Err(Error::DimensionMismatch("plan does not match frame config".into()));
        }
        let columns = ActiveColumns::new(frame.support(), self.opts.samples, &self.plan, cfg);
        let mut state = HeuristicState::initial(&columns, self.opts.eta);
        let mut trace = vec![state.v];
        let mut evaluations = 0;
        let mut s_w = state.positives();
        let mut outer = 0;
        let mut converged = false;
        while outer < self.opts.max_outer {
            outer += 1;
            evaluations += exchange_sign(&mut state, &columns, 1, &mut trace);
            if state.positives() != s_w {
                s_w = state.positives();
            }
            evaluations += exchange_sign(&mut state, &columns, -1, &mut trace);
            if state.positives() == s_w {
                converged = true;
                break;
            }
        }
        let signs = state.signs();
        // report the PAPR over the full oversampled grid whatever set drove the search
        let full = ActiveColumns::new(frame.support(), SampleSet::Oversampled, &self.plan, cfg);
        let peak = full.peak(signs.as_slice());
        let mut report = SolverReport::new(peak * peak / cfg.mean_power(), state.v, evaluations, started.elapsed());
        report.converged = converged;
        report.settings = serde_json::to_value(self.opts).unwrap_or_default();
        Ok(HeuristicOutcome { signs, report, trace, outer_iterations: outer })
    }
}

/// Runs the heuristic with threshold `eta` over the oversampled grid.
pub fn heuristic_signs(frame: &Frame, eta: f64, plan: &TransformPlan) -> Result<(SignVector, SolverReport)> {
    let solver = HeuristicSolver::new(plan.clone(), HeuristicOptions { eta, ..Default::default() })?;
    let out = solver.run(frame)?;
    Ok((out.signs, out.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{build_frame, encode_indices, FrameConfig, IndexPattern, Loading};
    use crate::integer::{solve_exact_binary, IntegerSolverOptions};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(seed: u64, cfg: &FrameConfig) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..cfg.bits_per_frame()).map(|_| rng.random()).collect();
        build_frame(&encode_indices(&bits, cfg).unwrap(), Loading::Ones, cfg).unwrap()
    }

    #[test]
    fn single_carrier_never_flips() {
        let cfg = FrameConfig::new(1, 4, 1, 1.0, 4).unwrap();
        let plan = TransformPlan::for_config(&cfg);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![1]] }, Loading::Ones, &cfg).unwrap();
        let cols = ActiveColumns::new(f.support(), SampleSet::Oversampled, &plan, &cfg);
        let mut state = HeuristicState::initial(&cols, 0.1);
        let before = state.clone();
        let mut trace = Vec::new();
        exchange_sign(&mut state, &cols, 1, &mut trace);
        assert_eq!(state, before);
        assert!(trace.is_empty());
        let (s, r) = heuristic_signs(&f, 0.1, &plan).unwrap();
        assert_eq!(s.as_slice(), &[1]);
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_carrier_flip_cancels_first_sample_but_not_peak() {
        let cfg = FrameConfig::new(2, 8, 1, 1.0, 4).unwrap();
        let plan = TransformPlan::for_config(&cfg);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![2], vec![5]] }, Loading::Ones, &cfg).unwrap();
        let cols = ActiveColumns::new(f.support(), SampleSet::Oversampled, &plan, &cfg);
        let start = cols.peak(&[1, 1]);
        assert!((start - 2.0 / 4.0).abs() < 1e-15);
        // oracle: the flip zeroes n = 0, yet |w^(n i) - w^(n j)| still reaches 2
        // somewhere on the grid, so the peak does not strictly drop
        let flipped = cols.series(&[1, -1]);
        assert!(flipped[0].norm() < 1e-15);
        assert!((max_modulus(&flipped) - start).abs() < 1e-12);
        let mut state = HeuristicState::initial(&cols, 0.1);
        let mut trace = Vec::new();
        exchange_sign(&mut state, &cols, 1, &mut trace);
        assert_eq!(state.t, vec![1, 1]);
        assert!(trace.is_empty());
    }

    #[test]
    fn improving_flip_accepted() {
        // three carriers: some single flip strictly lowers the peak
        let cfg = FrameConfig::new(1, 16, 3, 1.0, 4).unwrap();
        let plan = TransformPlan::for_config(&cfg);
        let f = build_frame(&IndexPattern { per_cluster: vec![vec![0, 1, 3]] }, Loading::Ones, &cfg).unwrap();
        let cols = ActiveColumns::new(f.support(), SampleSet::Oversampled, &plan, &cfg);
        let start = cols.peak(&[1, 1, 1]);
        let best_single = [[-1, 1, 1], [1, -1, 1], [1, 1, -1]]
            .iter()
            .map(|t| cols.peak(t))
            .fold(f64::INFINITY, f64::min);
        assert!(best_single < start);
        let mut state = HeuristicState::initial(&cols, 0.1);
        let mut trace = Vec::new();
        exchange_sign(&mut state, &cols, 1, &mut trace);
        assert!(!trace.is_empty());
        assert!(state.v < start);
        assert!((state.v - cols.peak(&state.t)).abs() < 1e-12);
        assert_eq!(state.w, state.t.iter().map(|&s| s == 1).collect::<Vec<_>>());
    }

    #[test]
    fn local_minimum_state_unchanged() {
        let cfg = FrameConfig::small();
        let plan = TransformPlan::for_config(&cfg);
        let f = random_frame(5, &cfg);
        let (best, _) = solve_exact_binary(&f, &IntegerSolverOptions::default()).unwrap();
        let cols = ActiveColumns::new(f.support(), SampleSet::Oversampled, &plan, &cfg);
        let mut state = HeuristicState::from_signs(&cols, &best, 0.1);
        let before = state.t.clone();
        let mut trace = Vec::new();
        exchange_sign(&mut state, &cols, 1, &mut trace);
        exchange_sign(&mut state, &cols, -1, &mut trace);
        assert_eq!(state.t, before);
        assert!(trace.is_empty());
    }

    #[test]
    fn bounded_by_exact_and_all_ones() {
        let cfg = FrameConfig::small();
        let plan = TransformPlan::for_config(&cfg);
        let solver = HeuristicSolver::new(plan, HeuristicOptions::default()).unwrap();
        for seed in 0..50 {
            let f = random_frame(seed, &cfg);
            let out = solver.run(&f).unwrap();
            let (_, exact) = solve_exact_binary(&f, &IntegerSolverOptions::default()).unwrap();
            assert!(out.report.peak >= exact.peak - 1e-12);
            assert!(out.report.objective <= 4.0 + 1e-12);
            assert!(out.trace.windows(2).all(|w| w[1] < w[0]));
            assert!(out.report.converged);
        }
    }

    #[test]
    fn reference_config_monotone_and_deterministic() {
        let cfg = FrameConfig::reference();
        let plan = TransformPlan::for_config(&cfg);
        let solver = HeuristicSolver::new(plan, HeuristicOptions::default()).unwrap();
        for seed in 0..10 {
            let f = random_frame(seed, &cfg);
            let a = solver.run(&f).unwrap();
            let b = solver.run(&f).unwrap();
            assert_eq!(a.signs, b.signs);
            assert_eq!(a.trace, b.trace);
            assert!(a.report.objective < 24.0);
            assert!(a.trace.windows(2).all(|w| w[1] < w[0]));
            assert!(a.outer_iterations < 100);
        }
    }

    #[test]
    fn invalid_eta_rejected() {
        let plan = TransformPlan::new(16, 4);
        assert!(HeuristicSolver::new(plan.clone(), HeuristicOptions { eta: 0.0, ..Default::default() }).is_err());
        assert!(HeuristicSolver::new(plan, HeuristicOptions { eta: f64::NAN, ..Default::default() }).is_err());
    }
}
