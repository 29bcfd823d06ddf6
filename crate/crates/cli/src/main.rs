// SPDX-License-Identifier: Apache-2.0

//! `rtqec`: simulate surface-code memories, evaluate decoders in the
//! real-time loop, and print latency and resource budgets.

mod commands;
mod plot;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

const CSV_SCHEMAS: &str = "\
CSV schemas:
  evaluate --csv   decoder,feedback_period,delay_ns,n,fidelity,stderr,shots,successes,raw_fidelity
  scale --format csv   d,dim_x,h,p_lstm,dsp,utilization_pct,latency_ns

Binary formats: datasets QECDS1, defect exports QECDF1, weights QECNW1.
Every command accepts --json (machine-readable stdout), --seed, --workers and --manifest.";

#[derive(Parser, Debug)]
#[command(name = "rtqec", version, about = "Real-time surface-code memory simulation and decoding", after_help = CSV_SCHEMAS)]
struct Cli {
    /// Print a machine-readable JSON result on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Root seed for all randomness; a fresh one is drawn and recorded if absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write the run manifest.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a memory experiment and write a QECDS1 dataset.
    Simulate(commands::SimulateArgs),
    /// Run the closed loop (or decode a dataset) and report F(n) and eps_L.
    Evaluate(commands::EvaluateArgs),
    /// Project decoder resources versus code distance.
    Scale(commands::ScaleArgs),
    /// Print the closed-loop latency budget and a feasibility verdict.
    Budget(commands::BudgetArgs),
    /// Write a zero or random QECNW1 weight file.
    WeightsInit(commands::WeightsInitArgs),
    /// Re-execute the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
struct RerunArgs {
    /// Manifest written by an earlier run.
    manifest_file: PathBuf,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Effective arguments, including the seed actually used.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub outputs: Vec<PathBuf>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub rtqec: String,
    pub dataset_format: String,
    pub weights_format: String,
    pub weights_version: u8,
}

impl Versions {
    fn current() -> Versions {
        Versions {
            rtqec: env!("CARGO_PKG_VERSION").to_string(),
            dataset_format: String::from_utf8_lossy(rtqec::noise_sim::dataset::DATASET_MAGIC).into_owned(),
            weights_format: String::from_utf8_lossy(rtqec::qlstm::WEIGHT_MAGIC).into_owned(),
            weights_version: rtqec::qlstm::WEIGHT_VERSION,
        }
    }
}

/// Result of one command, before the manifest is written.
pub struct Outcome {
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    /// Default manifest location when `--manifest` is absent.
    pub manifest_hint: Option<PathBuf>,
    pub json: serde_json::Value,
    pub text: String,
    pub uses_seed: bool,
}

fn manifest_beside(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn execute(argv: Vec<String>) -> Result<()> {
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    if let Command::Rerun(r) = &cli.command {
        let text = std::fs::read_to_string(&r.manifest_file)
            .with_context(|| format!("reading manifest {}", r.manifest_file.display()))?;
        let m: RunManifest = serde_json::from_str(&text).context("parsing manifest")?;
        return execute(m.argv);
    }
    if let Some(n) = cli.workers {
        anyhow::ensure!(n > 0, "--workers must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let seed = cli.seed.unwrap_or_else(rand::random);
    let start = Instant::now();
    let (name, out) = match &cli.command {
        Command::Simulate(a) => ("simulate", commands::simulate(a, seed)?),
        Command::Evaluate(a) => ("evaluate", commands::evaluate(a, seed)?),
        Command::Scale(a) => ("scale", commands::scale(a)?),
        Command::Budget(a) => ("budget", commands::budget(a)?),
        Command::WeightsInit(a) => ("weights-init", commands::weights_init(a, seed)?),
        Command::Rerun(_) => unreachable!("handled above"),
    };
    let mut effective = argv.clone();
    if out.uses_seed && cli.seed.is_none() {
        effective.extend(["--seed".to_string(), seed.to_string()]);
    }
    let manifest = RunManifest {
        command: name.to_string(),
        argv: effective,
        config: out.config,
        seed: out.uses_seed.then_some(seed),
        versions: Versions::current(),
        outputs: out.outputs,
        duration_s: start.elapsed().as_secs_f64(),
    };
    let manifest_path = cli.manifest.clone().or(out.manifest_hint);
    if let Some(path) = &manifest_path {
        std::fs::write(path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing manifest {}", path.display()))?;
    }
    // A closed pipe (e.g. `| head`) is not an error of the run.
    let mut stdout = std::io::stdout().lock();
    if cli.json {
        let mut json = out.json;
        if let Some(obj) = json.as_object_mut() {
            obj.insert("command".into(), name.into());
            obj.insert("seed".into(), manifest.seed.into());
            obj.insert("manifest".into(), serde_json::to_value(&manifest_path)?);
        }
        let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&json)?);
    } else {
        let _ = write!(stdout, "{}", out.text);
        if out.uses_seed && cli.seed.is_none() {
            let _ = writeln!(stdout, "seed: {seed}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
