//! Uniform front end over the PAPR reduction schemes.

use serde::{Deserialize, Serialize};

use crate::baselines::{pts_select, slm_select, PtsConfig, SlmCandidateSet};
use crate::dsp::{frame_papr, TransformPlan};
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameConfig, Loading};
use crate::heuristic::{HeuristicOptions, HeuristicSolver};
use crate::integer::{solve_discretized, DiscretizationConfig, IntegerSolverOptions};
use crate::phase::{PhaseOptimizer, PhaseSolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    /// Conventional non-coherent OFDM-IM, all active entries `beta`.
    None,
    /// Per-frame phase optimization.
    OslmP1,
    /// Discretized binary integer program.
    IlpP4,
    /// Sign-exchange heuristic.
    Heuristic,
    Slm,
    Pts,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] =
        [SchemeId::None, SchemeId::OslmP1, SchemeId::IlpP4, SchemeId::Heuristic, SchemeId::Slm, SchemeId::Pts];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::None => "none",
            SchemeId::OslmP1 => "oslm-p1",
            SchemeId::IlpP4 => "ilp-p4",
            SchemeId::Heuristic => "heuristic",
            SchemeId::Slm => "slm",
            SchemeId::Pts => "pts",
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidOption(format!("unknown scheme {s:?}")))
    }
}

/// Options for every scheme; each scheme reads only its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeOptions {
    pub phase: PhaseSolverOptions,
    pub integer: IntegerSolverOptions,
    pub levels: usize,
    pub heuristic: HeuristicOptions,
    pub slm_candidates: usize,
    /// Seed of the SLM candidate set, drawn once per run.
    pub slm_seed: u64,
    pub pts: PtsConfig,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            phase: PhaseSolverOptions::default(),
            integer: IntegerSolverOptions::default(),
            levels: 5,
            heuristic: HeuristicOptions::default(),
            slm_candidates: 16,
            slm_seed: 0x5eed,
            pts: PtsConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
enum Engine {
    None,
    Phase(PhaseOptimizer),
    Integer(DiscretizationConfig, IntegerSolverOptions),
    Heuristic(HeuristicSolver),
    Slm(SlmCandidateSet),
    Pts(PtsConfig),
}

/// A scheme resolved against one numerology, ready to apply to frames.
#[derive(Debug, Clone)]
pub struct Scheme {
    id: SchemeId,
    config: FrameConfig,
    plan: TransformPlan,
    engine: Engine,
}

/// Transmitted frame and its PAPR (linear).
#[derive(Debug, Clone)]
pub struct Applied {
    pub frame: Frame,
    pub papr: f64,
}

impl Scheme {
    pub fn new(id: SchemeId, opts: &SchemeOptions, config: &FrameConfig) -> Result<Self> {
        config.validate()?;
        let plan = TransformPlan::for_config(config);
        let engine = match id {
            SchemeId::None => Engine::None,
            SchemeId::OslmP1 => Engine::Phase(PhaseOptimizer::new(config, opts.phase.clone())?),
            SchemeId::IlpP4 => Engine::Integer(DiscretizationConfig::new(opts.levels)?, opts.integer),
            SchemeId::Heuristic => Engine::Heuristic(HeuristicSolver::new(plan.clone(), opts.heuristic)?),
            SchemeId::Slm => {
                Engine::Slm(SlmCandidateSet::generate(opts.slm_candidates, config.total_active(), opts.slm_seed)?)
            }
            SchemeId::Pts => {
                opts.pts.validate(config.n_subcarriers)?;
                Engine::Pts(opts.pts.clone())
            }
        };
        Ok(Scheme { id, config: *config, plan, engine })
    }

    pub fn id(&self) -> SchemeId {
        self.id
    }

    pub fn config(&self) -> &FrameConfig {
        &self.config
    }

    pub fn plan(&self) -> &TransformPlan {
        &self.plan
    }

    /// Reduces the PAPR of a conventional (all-`beta`) frame.
    pub fn apply(&self, frame: &Frame) -> Result<Applied> {
        match &self.engine {
            Engine::None => Ok(Applied { frame: frame.clone(), papr: frame_papr(frame, &self.plan)? }),
            Engine::Phase(opt) => {
                let (phases, report) = opt.optimize(frame)?;
                Ok(Applied { frame: frame.reload(Loading::Phases(&phases))?, papr: report.objective })
            }
            Engine::Integer(disc, opts) => {
                let (signs, report) = solve_discretized(frame, disc, opts)?;
                Ok(Applied { frame: frame.reload(Loading::Signs(&signs))?, papr: report.objective })
            }
            Engine::Heuristic(solver) => {
                let out = solver.run(frame)?;
                Ok(Applied { frame: frame.reload(Loading::Signs(&out.signs))?, papr: out.report.objective })
            }
            Engine::Slm(set) => {
                let sel = slm_select(frame, set, &self.plan)?;
                Ok(Applied { frame: sel.frame, papr: sel.papr })
            }
            Engine::Pts(cfg) => {
                let sel = pts_select(frame, cfg, &self.plan)?;
                Ok(Applied { frame: sel.frame, papr: sel.papr })
            }
        }
    }
}
