//! Binary (+1/-1) loading of the active subcarriers.
//!
//! Two minimax objectives over sign vectors `s`:
//!
//! * exact: `max_n |x^t_n(s)|`, the true complex modulus;
//! * discretized: `max_{n,p} Re(x^t_n) cos(theta_p) + Im(x^t_n) sin(theta_p)` with
//!   `theta_p = 2 pi (p - 1) / P`, which is linear in `s` and under-estimates the
//!   modulus by at most a factor `sec(pi / P)`.
//!
//! Both are minimized by the same depth-first search over the sign variables in
//! support order, `+1` branch first. When the objective is invariant to a global
//! sign flip (always for the modulus, for even `P` in the discretized case) the
//! search fixes `s_0 = +1`. Disabling pruning turns the search into plain
//! enumeration in the same order.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{ActiveColumns, SampleSet, TransformPlan};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::report::SolverReport;

/// Signs on the active subcarriers, in support order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignVector {
    signs: Vec<i8>,
}

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidOption(format!("sign entries must be +1 or -1, got {bad}")));
        }
        Ok(SignVector { signs })
    }

    pub fn ones(len: usize) -> Self {
        SignVector { signs: vec![1; len] }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.signs
    }

    pub fn negated(&self) -> SignVector {
        SignVector { signs: self.signs.iter().map(|s| -s).collect() }
    }

    /// Representative of `{s, -s}` with a leading `+1`.
    pub fn canonical(&self) -> SignVector {
        if self.signs.first() == Some(&-1) {
            self.negated()
        } else {
            self.clone()
        }
    }

    /// Count of `+1` entries.
    pub fn positives(&self) -> usize {
        self.signs.iter().filter(|&&s| s == 1).count()
    }
}

/// Equispaced projection angles `theta_p = 2 pi (p - 1) / P`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationConfig {
    levels: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl DiscretizationConfig {
    pub fn new(levels: usize) -> Result<Self> {
        if levels < 3 {
            return Err(Error::TooFewLevels(levels));
        }
        let (sin, cos) = (0..levels).map(|p| (2.0 * PI * p as f64 / levels as f64).sin_cos()).unzip();
        Ok(DiscretizationConfig { levels, cos, sin })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.levels).map(|p| 2.0 * PI * p as f64 / self.levels as f64).collect()
    }

    /// `sec(pi / P)`, the worst-case ratio `|v| / |v|_D`.
    pub fn secant(&self) -> f64 {
        1.0 / (PI / self.levels as f64).cos()
    }
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig::new(5).expect("5 levels")
    }
}

/// `max_p Re(v) cos(theta_p) + Im(v) sin(theta_p)`.
pub fn discrete_norm(v: Complex64, disc: &DiscretizationConfig) -> f64 {
    disc.cos
        .iter()
        .zip(&disc.sin)
        .map(|(c, s)| v.re * c + v.im * s)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sec(pi / P)` certificate: the exact optimum is at most the discretized one
/// scaled by the secant.
pub fn verify_secant_bound(u_star: f64, u_double_star: f64, levels: usize) -> bool {
    u_star <= u_double_star / (PI / levels as f64).cos() + 1e-12
}

/// Linear rows `z >= a_r . s`, one per (sample, angle) pair, sample-major.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    coeffs: Vec<f64>,
    n_rows: usize,
    n_vars: usize,
    levels: usize,
}

impl ConstraintSystem {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Coefficients of row `(sample, level)`.
    pub fn row(&self, sample: usize, level: usize) -> &[f64] {
        let r = sample * self.levels + level;
        &self.coeffs[r * self.n_vars..(r + 1) * self.n_vars]
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coeffs.chunks_exact(self.n_vars.max(1)).take(self.n_rows)
    }

    /// `max_r a_r . s`, the discretized peak modulus.
    pub fn evaluate(&self, signs: &SignVector) -> f64 {
        self.rows()
            .map(|row| row.iter().zip(signs.as_slice()).map(|(a, &s)| a * s as f64).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Rows for every sample in `samples` and every angle of `disc`.
pub fn build_constraints(
    frame: &Frame,
    disc: &DiscretizationConfig,
    plan: &TransformPlan,
    samples: SampleSet,
) -> Result<ConstraintSystem> {
    let cfg = frame.config();
    if plan.n_subcarriers() != cfg.n_subcarriers || plan.n_samples() != cfg.n_samples() {
        return Err(Error::DimensionMismatch("plan does not match frame config".into()));
    }
    let columns = ActiveColumns::new(frame.support(), samples, plan, cfg);
    let n_vars = columns.n_active();
    let n_points = columns.n_points();
    let mut coeffs = Vec::with_capacity(n_points * disc.levels * n_vars);
    for n in 0..n_points {
        for p in 0..disc.levels {
            for i in 0..n_vars {
                let c = columns.column(i)[n];
                coeffs.push(c.re * disc.cos[p] + c.im * disc.sin[p]);
            }
        }
    }
    Ok(ConstraintSystem { coeffs, n_rows: n_points * disc.levels, n_vars, levels: disc.levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    #[default]
    BranchAndBound,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegerSolverOptions {
    pub method: SearchMethod,
    /// Largest `B K` accepted for plain enumeration.
    pub exhaustive_cap: usize,
    pub samples: SampleSet,
}

impl Default for IntegerSolverOptions {
    fn default() -> Self {
        IntegerSolverOptions { method: SearchMethod::BranchAndBound, exhaustive_cap: 20, samples: SampleSet::Oversampled }
    }
}

/// Partial sums along a search path plus an admissible bound on completions.
trait SignObjective {
    fn n_vars(&self) -> usize;
    fn root(&self) -> Vec<f64>;
    fn add(&self, acc: &mut [f64], var: usize, sign: i8);
    /// Lower bound on `value` over all completions once `fixed` variables are set.
    fn lower_bound(&self, acc: &[f64], fixed: usize) -> f64;
    fn value(&self, acc: &[f64]) -> f64;
    /// Whether `value(s) == value(-s)`, allowing `s_0 = +1` to be fixed.
    fn flip_symmetric(&self) -> bool;
}

/// Modulus objective; `acc` interleaves (re, im) per sample.
struct ModulusObjective {
    columns: ActiveColumns,
    column_modulus: f64,
}

impl SignObjective for ModulusObjective {
    fn n_vars(&self) -> usize {
        self.columns.n_active()
    }

    fn root(&self) -> Vec<f64> {
        vec![0.0; 2 * self.columns.n_points()]
    }

    fn add(&self, acc: &mut [f64], var: usize, sign: i8) {
        let s = sign as f64;
        for (pair, c) in acc.chunks_exact_mut(2).zip(self.columns.column(var)) {
            pair[0] += s * c.re;
            pair[1] += s * c.im;
        }
    }

    fn lower_bound(&self, acc: &[f64], fixed: usize) -> f64 {
        // every column has the same modulus beta / sqrt(N)
        let slack = (self.n_vars() - fixed) as f64 * self.column_modulus;
        (self.value(acc) - slack).max(0.0)
    }

    fn value(&self, acc: &[f64]) -> f64 {
        acc.chunks_exact(2).map(|p| p[0] * p[0] + p[1] * p[1]).fold(0.0, f64::max).sqrt()
    }

    fn flip_symmetric(&self) -> bool {
        true
    }
}

/// Discretized objective; `acc` holds one partial row sum per constraint.
struct RowObjective {
    system: ConstraintSystem,
    /// `suffix[d * n_rows + r] = sum_{i >= d} |a_{r,i}|`.
    suffix: Vec<f64>,
}

impl RowObjective {
    fn new(system: ConstraintSystem) -> Self {
        let (rows, vars) = (system.n_rows, system.n_vars);
        let mut suffix = vec![0.0; (vars + 1) * rows];
        for d in (0..vars).rev() {
            for r in 0..rows {
                suffix[d * rows + r] = suffix[(d + 1) * rows + r] + system.coeffs[r * vars + d].abs();
            }
        }
        RowObjective { system, suffix }
    }
}

impl SignObjective for RowObjective {
    fn n_vars(&self) -> usize {
        self.system.n_vars
    }

    fn root(&self) -> Vec<f64> {
        vec![0.0; self.system.n_rows]
    }

    fn add(&self, acc: &mut [f64], var: usize, sign: i8) {
        let s = sign as f64;
        let vars = self.system.n_vars;
        for (r, a) in acc.iter_mut().enumerate() {
            *a += s * self.system.coeffs[r * vars + var];
        }
    }

    fn lower_bound(&self, acc: &[f64], fixed: usize) -> f64 {
        let rows = self.system.n_rows;
        let slack = &self.suffix[fixed * rows..(fixed + 1) * rows];
        // the max over P >= 3 equispaced projections is never negative
        acc.iter().zip(slack).map(|(a, s)| a - s).fold(0.0, f64::max)
    }

    fn value(&self, acc: &[f64]) -> f64 {
        acc.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn flip_symmetric(&self) -> bool {
        // the angle set is closed under theta -> theta + pi only for even P
        self.system.levels.is_multiple_of(2)
    }
}

struct Search<'a, O: SignObjective> {
    objective: &'a O,
    prune: bool,
    path: Vec<i8>,
    best: Option<(f64, Vec<i8>)>,
    nodes: u64,
}

// Leaves that tie within this margin are still visited so pruning never
// changes which canonical minimizer wins.
const PRUNE_MARGIN: f64 = 1e-10;

impl<O: SignObjective> Search<'_, O> {
    fn visit(&mut self, acc: &[f64]) {
        self.nodes += 1;
        let depth = self.path.len();
        if depth == self.objective.n_vars() {
            let v = self.objective.value(acc);
            if self.best.as_ref().is_none_or(|(b, _)| v < *b) {
                self.best = Some((v, self.path.clone()));
            }
            return;
        }
        if self.prune {
            if let Some((incumbent, _)) = &self.best {
                if self.objective.lower_bound(acc, depth) > incumbent * (1.0 + PRUNE_MARGIN) {
                    return;
                }
            }
        }
        let branches: &[i8] = if depth == 0 && self.objective.flip_symmetric() { &[1] } else { &[1, -1] };
        for &s in branches {
            let mut child = acc.to_vec();
            self.objective.add(&mut child, depth, s);
            self.path.push(s);
            self.visit(&child);
            self.path.pop();
        }
    }
}

fn search<O: SignObjective>(objective: &O, prune: bool) -> (f64, SignVector, u64) {
    let mut s = Search { objective, prune, path: Vec::new(), best: None, nodes: 0 };
    s.visit(&objective.root());
    let (value, signs) = s.best.expect("search visits at least one leaf");
    (value, SignVector { signs }, s.nodes)
}

fn check_size(bk: usize, opts: &IntegerSolverOptions) -> Result<bool> {
    match opts.method {
        SearchMethod::BranchAndBound => Ok(true),
        SearchMethod::Exhaustive if bk <= opts.exhaustive_cap => Ok(false),
        SearchMethod::Exhaustive => Err(Error::InstanceTooLarge { active: bk, cap: opts.exhaustive_cap }),
    }
}

fn settings(opts: &IntegerSolverOptions, levels: Option<usize>) -> serde_json::Value {
    let mut v = serde_json::to_value(opts).unwrap_or_default();
    if let (Some(p), Some(map)) = (levels, v.as_object_mut()) {
        map.insert("levels".into(), p.into());
    }
    v
}

/// Sign vector minimizing the true peak modulus over `opts.samples`.
/// The report's `peak` is the optimum `u*`.
pub fn solve_exact_binary(frame: &Frame, opts: &IntegerSolverOptions) -> Result<(SignVector, SolverReport)> {
    let started = Instant::now();
    let cfg = frame.config();
    let prune = check_size(frame.support().len(), opts)?;
    let plan = TransformPlan::for_config(cfg);
    let objective = ModulusObjective {
        columns: ActiveColumns::new(frame.support(), opts.samples, &plan, cfg),
        column_modulus: cfg.amplitude / (cfg.n_subcarriers as f64).sqrt(),
    };
    let (u_star, signs, nodes) = search(&objective, prune);
    let mut report = SolverReport::new(u_star * u_star / cfg.mean_power(), u_star, nodes, started.elapsed());
    report.bound_gap = Some(0.0);
    report.settings = settings(opts, None);
    Ok((signs, report))
}

/// Sign vector minimizing the discretized peak (the linear integer program).
///
/// The report's `peak` is the discretized optimum `u**`, `objective` is the true
/// PAPR of the returned signs and `bound_gap` is `u** (sec(pi/P) - 1)`: the exact
/// optimum lies in `[u**, u** sec(pi/P)]`.
pub fn solve_discretized(
    frame: &Frame,
    disc: &DiscretizationConfig,
    opts: &IntegerSolverOptions,
) -> Result<(SignVector, SolverReport)> {
    let started = Instant::now();
    let cfg = frame.config();
    let prune = check_size(frame.support().len(), opts)?;
    let plan = TransformPlan::for_config(cfg);
    let system = build_constraints(frame, disc, &plan, opts.samples)?;
    let objective = RowObjective::new(system);
    let (u_dstar, signs, nodes) = search(&objective, prune);
    let true_peak = ActiveColumns::new(frame.support(), SampleSet::Oversampled, &plan, cfg).peak(signs.as_slice());
    let mut report = SolverReport::new(true_peak * true_peak / cfg.mean_power(), u_dstar, nodes, started.elapsed());
    report.bound_gap = Some(u_dstar * (disc.secant() - 1.0));
    report.settings = settings(opts, Some(disc.levels));
    Ok((signs, report))
}
