//! Command-line runner for the PAPR experiments: CCDF curves, error rates,
//! per-frame timing and single-frame inspection.

mod config;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use ncim_papr::harness::{
    ber_csv, optimize_one, run_ber, run_bench, run_ccdf, write_outputs, ExperimentSpec, Sidecar,
};
use ncim_papr::{Execution, SchemeId};
use serde::Serialize;

use config::{FileConfig, SchemeList};

#[derive(Parser, Debug)]
#[command(name = "ncim-papr", version, about = "PAPR reduction experiments for non-coherent OFDM with index modulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Empirical PAPR CCDF per scheme (second peak for `none`).
    Ccdf(Common),
    /// Cluster and bit error rates over a Rayleigh channel per scheme.
    Ber(Common),
    /// Mean wall time per frame per scheme, single-threaded.
    Bench(Common),
    /// Run each scheme on one frame and print the result as JSON.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Trial index of the frame to optimize.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheme ids, comma separated: none, oslm-p1, ilp-p4, heuristic, slm, pts.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files and JSON sidecars.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SNR points in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Number of discretization angles for the integer scheme.
    #[arg(long)]
    levels: Option<usize>,
    /// Sign-exchange restart threshold of the heuristic.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "slm-candidates")]
    slm_candidates: Option<usize>,
    #[arg(long = "pts-blocks")]
    pts_blocks: Option<usize>,
    /// Samples the integer and heuristic schemes minimize over: N or NR.
    #[arg(long)]
    samples: Option<String>,
    /// Numerology preset: reference or small.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long = "channel-variance")]
    channel_variance: Option<f64>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn resolve(&self) -> Result<FileConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let flags = FileConfig {
            preset: self.preset.clone(),
            scheme: self.scheme.clone().map(SchemeList::One),
            n_trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            snr_db: self.snr.clone(),
            channel_variance: self.channel_variance,
            levels: self.levels,
            eta: self.eta,
            slm_candidates: self.slm_candidates,
            pts_blocks: self.pts_blocks,
            samples: self.samples.clone(),
            execution: self.sequential.then_some(Execution::Sequential),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        if merged.seed.is_none() {
            eprintln!("note: no seed given, using 0");
        }
        Ok(merged)
    }
}

const DEFAULT_OUT: &str = "results";
const DEFAULT_CHANNEL_VARIANCE: f64 = 1.0;
const DEFAULT_SNR_DB: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];

fn specs(cfg: &FileConfig, default_schemes: &[SchemeId], default_trials: u64) -> Result<Vec<ExperimentSpec>> {
    let options = cfg.scheme_options()?;
    cfg.schemes(default_schemes)?
        .into_iter()
        .map(|id| {
            let mut spec = ExperimentSpec::new(
                cfg.frame_config(id)?,
                id,
                cfg.n_trials.unwrap_or(default_trials),
                cfg.seed.unwrap_or(0),
            );
            spec.options = options.clone();
            spec.execution = cfg.execution();
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

fn out_dir(cfg: &FileConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn ccdf(cfg: &FileConfig) -> Result<()> {
    let dir = out_dir(cfg);
    for spec in specs(cfg, &SchemeId::ALL, 20_000)? {
        let run = run_ccdf(&spec)?;
        let sidecar = Sidecar {
            experiment: "ccdf",
            spec: &spec,
            bits_per_frame: spec.config.bits_per_frame(),
            snr_db: None,
            channel_variance: None,
        };
        let (csv, _) = write_outputs(&dir, &format!("ccdf-{}", spec.scheme), &run.curve.to_csv(), &sidecar)?;
        let at = |p: f64| run.curve.threshold_at(p).map_or("-".to_string(), |t| format!("{t:.1} dB"));
        println!("{:<10} ccdf 1e-2 at {}  ({})", spec.scheme, at(1e-2), csv.display());
    }
    Ok(())
}

fn ber(cfg: &FileConfig) -> Result<()> {
    let dir = out_dir(cfg);
    let snrs = cfg.snr_db.clone().unwrap_or_else(|| DEFAULT_SNR_DB.to_vec());
    if snrs.is_empty() {
        bail!("no SNR points given");
    }
    let variance = cfg.channel_variance.unwrap_or(DEFAULT_CHANNEL_VARIANCE);
    for spec in specs(cfg, &[SchemeId::None, SchemeId::Heuristic], 12_500)? {
        let rows = run_ber(&spec, variance, &snrs)?;
        let sidecar = Sidecar {
            experiment: "ber",
            spec: &spec,
            bits_per_frame: spec.config.bits_per_frame(),
            snr_db: Some(&snrs),
            channel_variance: Some(variance),
        };
        let (csv, _) = write_outputs(&dir, &format!("ber-{}", spec.scheme), &ber_csv(&rows), &sidecar)?;
        println!("{:<10} {} SNR points  ({})", spec.scheme, rows.len(), csv.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchSidecar<'a> {
    experiment: &'a str,
    specs: &'a [ExperimentSpec],
}

fn bench(cfg: &FileConfig) -> Result<()> {
    let dir = out_dir(cfg);
    let specs = specs(cfg, &SchemeId::ALL, 100)?;
    let table = run_bench(&specs)?;
    let csv_path = dir.join("bench.csv");
    let json_path = dir.join("bench.json");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&csv_path, table.to_csv())?;
    let mut json = serde_json::to_string_pretty(&BenchSidecar { experiment: "bench", specs: &specs })?;
    json.push('\n');
    std::fs::write(&json_path, json)?;
    for row in &table.rows {
        println!("{:<10} {:.3e} s/frame", row.scheme, row.mean_seconds);
    }
    println!("({})", csv_path.display());
    Ok(())
}

fn optimize(cfg: &FileConfig, trial: u64) -> Result<()> {
    for spec in specs(cfg, &SchemeId::ALL, 1)? {
        let summary = optimize_one(&spec, trial)?;
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Ccdf(c) => ccdf(&c.resolve()?),
        Command::Ber(c) => ber(&c.resolve()?),
        Command::Bench(c) => bench(&c.resolve()?),
        Command::Optimize { common, trial } => optimize(&common.resolve()?, *trial),
    }
}
