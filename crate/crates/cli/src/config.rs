//! Flat TOML run configuration, merged with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ncim_papr::baselines::PtsConfig;
use ncim_papr::dsp::SampleSet;
use ncim_papr::{Execution, FrameConfig, SchemeId, SchemeOptions};
use serde::Deserialize;

/// Every key is optional; unset keys fall back to the command line, then to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// `reference` or `small`; individual numerology keys override it.
    pub preset: Option<String>,
    pub n_clusters: Option<usize>,
    pub cluster_size: Option<usize>,
    pub n_active: Option<usize>,
    pub amplitude: Option<f64>,
    pub oversampling: Option<usize>,
    /// One scheme id or a list of them.
    pub scheme: Option<SchemeList>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub snr_db: Option<Vec<f64>>,
    pub channel_variance: Option<f64>,
    pub levels: Option<usize>,
    pub eta: Option<f64>,
    pub slm_candidates: Option<usize>,
    pub pts_blocks: Option<usize>,
    pub samples: Option<String>,
    pub execution: Option<Execution>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SchemeList {
    One(String),
    Many(Vec<String>),
}

impl SchemeList {
    fn ids(&self) -> Result<Vec<SchemeId>> {
        let names: Vec<&str> = match self {
            SchemeList::One(s) => s.split(',').collect(),
            SchemeList::Many(v) => v.iter().map(String::as_str).collect(),
        };
        names.iter().map(|n| n.trim().parse::<SchemeId>().map_err(Into::into)).collect()
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Keys set in `over` win.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        FileConfig {
            preset: over.preset.or(self.preset),
            n_clusters: over.n_clusters.or(self.n_clusters),
            cluster_size: over.cluster_size.or(self.cluster_size),
            n_active: over.n_active.or(self.n_active),
            amplitude: over.amplitude.or(self.amplitude),
            oversampling: over.oversampling.or(self.oversampling),
            scheme: over.scheme.or(self.scheme),
            n_trials: over.n_trials.or(self.n_trials),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            snr_db: over.snr_db.or(self.snr_db),
            channel_variance: over.channel_variance.or(self.channel_variance),
            levels: over.levels.or(self.levels),
            eta: over.eta.or(self.eta),
            slm_candidates: over.slm_candidates.or(self.slm_candidates),
            pts_blocks: over.pts_blocks.or(self.pts_blocks),
            samples: over.samples.or(self.samples),
            execution: over.execution.or(self.execution),
        }
    }

    fn explicit_numerology(&self) -> bool {
        self.preset.is_some()
            || self.n_clusters.is_some()
            || self.cluster_size.is_some()
            || self.n_active.is_some()
            || self.amplitude.is_some()
            || self.oversampling.is_some()
    }

    /// Numerology for `scheme`. Without any numerology keys the integer scheme
    /// runs on the small config, where it is solvable exactly; everything else
    /// runs on the reference config.
    pub fn frame_config(&self, scheme: SchemeId) -> Result<FrameConfig> {
        let base = match self.preset.as_deref() {
            Some("reference") => FrameConfig::reference(),
            Some("small") => FrameConfig::small(),
            Some(other) => bail!("unknown preset {other:?} (expected reference or small)"),
            None if scheme == SchemeId::IlpP4 && !self.explicit_numerology() => FrameConfig::small(),
            None => FrameConfig::reference(),
        };
        Ok(FrameConfig::new(
            self.n_clusters.unwrap_or(base.n_clusters),
            self.cluster_size.unwrap_or(base.cluster_size),
            self.n_active.unwrap_or(base.n_active),
            self.amplitude.unwrap_or(base.amplitude),
            self.oversampling.unwrap_or(base.oversampling),
        )?)
    }

    pub fn schemes(&self, default: &[SchemeId]) -> Result<Vec<SchemeId>> {
        match &self.scheme {
            Some(list) => {
                let ids = list.ids()?;
                if ids.is_empty() {
                    bail!("no scheme given");
                }
                Ok(ids)
            }
            None => Ok(default.to_vec()),
        }
    }

    pub fn scheme_options(&self) -> Result<SchemeOptions> {
        let mut opts = SchemeOptions::default();
        if let Some(p) = self.levels {
            opts.levels = p;
        }
        if let Some(eta) = self.eta {
            opts.heuristic.eta = eta;
        }
        if let Some(u) = self.slm_candidates {
            opts.slm_candidates = u;
        }
        if let Some(m) = self.pts_blocks {
            opts.pts = PtsConfig::exhaustive(m);
        }
        if let Some(s) = &self.samples {
            let set: SampleSet = s.parse()?;
            opts.heuristic.samples = set;
            opts.integer.samples = set;
        }
        Ok(opts)
    }

    pub fn execution(&self) -> Execution {
        self.execution.unwrap_or_default()
    }
}
