use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncim_papr::dsp::{frame_papr, g_tilde, TransformPlan};
use ncim_papr::frame::{binomial, build_frame, decode_indices, encode_indices, Combinadic};
use ncim_papr::harness::{run_ccdf, trial_frame, ExperimentSpec};
use ncim_papr::integer::{discrete_norm, solve_exact_binary, DiscretizationConfig, IntegerSolverOptions, SearchMethod};
use ncim_papr::{Execution, FrameConfig, Loading, PhaseVector, SchemeId};

fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> PhaseVector {
    PhaseVector::new((0..n).map(|_| rng.random::<f64>() * TAU).collect())
}

#[test]
fn combinadic_round_trips_over_sixteen_choose_three() {
    let c = Combinadic::new(16, 3);
    assert_eq!(c.count(), binomial(16, 3));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let rank = rng.random_range(0..c.count());
        let subset = c.unrank(rank);
        assert_eq!(subset.len(), 3);
        assert!(subset.windows(2).all(|w| w[0] < w[1]) && subset[2] < 16);
        assert_eq!(c.rank(&subset), rank);
    }
}

#[test]
fn payloads_round_trip_through_frames() {
    let cfg = FrameConfig::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let bits: Vec<bool> = (0..cfg.bits_per_frame()).map(|_| rng.random()).collect();
        let pattern = encode_indices(&bits, &cfg).unwrap();
        let frame = build_frame(&pattern, Loading::Ones, &cfg).unwrap();
        assert_eq!(frame.support().len(), cfg.total_active());
        assert_eq!(decode_indices(&frame.pattern(), &cfg).unwrap(), bits);
    }
}

#[test]
fn parseval_across_numerologies() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (b, l, k, r) in [(8, 16, 3, 4), (2, 8, 2, 4), (4, 16, 4, 2), (1, 32, 5, 8)] {
        let cfg = FrameConfig::new(b, l, k, 0.7, r).unwrap();
        let plan = TransformPlan::for_config(&cfg);
        for t in 0..50 {
            let base = trial_frame(&cfg, 4, t).unwrap();
            let frame = base.reload(Loading::Phases(&random_phases(&mut rng, cfg.total_active()))).unwrap();
            let ts = plan.transform(&frame).unwrap();
            let time_energy: f64 = ts.samples().iter().map(|v| v.norm_sqr()).sum();
            let expected = r as f64 * frame.energy();
            assert!((time_energy - expected).abs() <= 1e-10 * expected);
        }
    }
}

#[test]
fn papr_is_invariant_to_a_common_phase() {
    let cfg = FrameConfig::reference();
    let plan = TransformPlan::for_config(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..200 {
        let base = trial_frame(&cfg, 6, t).unwrap();
        let phases = random_phases(&mut rng, cfg.total_active());
        let shift = rng.random::<f64>() * TAU;
        let shifted = PhaseVector::new(phases.as_slice().iter().map(|p| p + shift).collect());
        let a = frame_papr(&base.reload(Loading::Phases(&phases)).unwrap(), &plan).unwrap();
        let b = frame_papr(&base.reload(Loading::Phases(&shifted)).unwrap(), &plan).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }
}

#[test]
fn pairwise_expansion_matches_transform() {
    let cfg = FrameConfig::reference();
    let plan = TransformPlan::for_config(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in 0..1_000 {
        let base = trial_frame(&cfg, 8, t).unwrap();
        let phases = random_phases(&mut rng, cfg.total_active());
        let ts = plan.transform(&base.reload(Loading::Phases(&phases)).unwrap()).unwrap();
        let n = rng.random_range(0..cfg.n_samples());
        let g = g_tilde(phases.as_slice(), base.support(), n, &cfg).unwrap();
        let direct = cfg.n_subcarriers as f64 * ts.samples()[n].norm_sqr();
        assert!((g - direct).abs() <= 1e-9 * cfg.unoptimized_papr().powi(2), "{g} vs {direct}");
    }
}

#[test]
fn discrete_norm_is_exact_on_grid_angles_and_worst_between_them() {
    for levels in [3, 4, 5, 8, 16] {
        let disc = DiscretizationConfig::new(levels).unwrap();
        let step = TAU / levels as f64;
        for p in 0..levels {
            let on = Complex64::from_polar(2.0, p as f64 * step);
            assert!((discrete_norm(on, &disc) - 2.0).abs() < 1e-12);
            let between = Complex64::from_polar(2.0, (p as f64 + 0.5) * step);
            assert!((discrete_norm(between, &disc) - 2.0 * (PI / levels as f64).cos()).abs() < 1e-12);
        }
        for m in 0..3_600 {
            let v = Complex64::from_polar(1.0, m as f64 * TAU / 3_600.0);
            let d = discrete_norm(v, &disc);
            assert!(d <= 1.0 + 1e-12 && 1.0 <= d * disc.secant() + 1e-12);
        }
    }
}

#[test]
fn ccdf_does_not_depend_on_scheduling() {
    let mut spec = ExperimentSpec::new(FrameConfig::reference(), SchemeId::Heuristic, 64, 9);
    let par = run_ccdf(&spec).unwrap();
    spec.execution = Execution::Sequential;
    let seq = run_ccdf(&spec).unwrap();
    assert_eq!(par.samples_db, seq.samples_db);
    assert_eq!(par.curve, seq.curve);
}

#[test]
fn second_peak_baseline_stays_below_bk() {
    let cfg = FrameConfig::reference();
    let run = run_ccdf(&ExperimentSpec::new(cfg, SchemeId::None, 500, 10)).unwrap();
    let bk_db = 10.0 * cfg.unoptimized_papr().log10();
    assert!(run.samples_db.iter().all(|&v| v < bk_db));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn branch_and_bound_agrees_with_enumeration(seed in any::<u64>(), shape in 0usize..4) {
        let (b, l, k) = [(2, 8, 2), (3, 8, 3), (4, 8, 3), (2, 16, 6)][shape];
        let cfg = FrameConfig::new(b, l, k, 1.0, 4).unwrap();
        let frame = trial_frame(&cfg, seed, 0).unwrap();
        let bnb = IntegerSolverOptions::default();
        let full = IntegerSolverOptions { method: SearchMethod::Exhaustive, ..bnb };
        let (_, a) = solve_exact_binary(&frame, &bnb).unwrap();
        let (_, e) = solve_exact_binary(&frame, &full).unwrap();
        prop_assert_eq!(a.peak, e.peak);
        prop_assert!(a.iterations <= e.iterations);
    }
}
