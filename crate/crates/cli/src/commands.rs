// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use rtqec::code_model::{Basis, CodeLayout, Pauli, Sign};
use rtqec::noise_sim::dataset::{import_dataset, export_dataset, DatasetHeader, DatasetMeta};
use rtqec::noise_sim::{sample_memory, InjectionSchedule, InjectionSpec, NoiseParams};
use rtqec::qlstm::{load_weights, QLstmWeights};
use rtqec::realtime_loop::{
    check_feasibility, check_throughput, decode_offline, nn_period_ns, run, DecoderKind, DecoderSet, ExperimentResult,
    FidelityPoint, LatencyBudget, LoopConfig, MissPolicy, NnWeights,
};
use rtqec::scaling_estimator::{default_distances, max_supported_distance, project_all, to_csv, to_markdown, REFERENCE_DSP_CAPACITY};
use rtqec::syndrome::export_defects;

use crate::{manifest_beside, plot, Outcome};

fn parse_basis(s: &str) -> Result<Basis, String> {
    s.parse::<Pauli>().map_err(|_| format!("basis must be Z or X, got '{s}'"))
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s.to_ascii_lowercase().as_str() {
        "plus" | "+" | "+1" => Ok(Sign::Plus),
        "minus" | "-" | "-1" => Ok(Sign::Minus),
        _ => Err(format!("prepared state must be plus or minus, got '{s}'")),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

/// Code and noise flags shared by `simulate` and live `evaluate`.
#[derive(Args, Debug, Clone)]
pub struct ExperimentArgs {
    /// Code distance (odd, >= 3).
    #[arg(long, default_value_t = 3)]
    pub distance: usize,
    /// Stabilizer rounds per shot (evaluate: largest n of the sweep).
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Logical measurement basis.
    #[arg(long, value_parser = parse_basis)]
    pub basis: Option<Basis>,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    /// NoiseParams JSON (keys p1, p2, p_idle, p_meas); defaults otherwise.
    #[arg(long, value_name = "PATH")]
    pub noise_file: Option<PathBuf>,
    /// Rotation injection such as `D2:X:40deg:each-round` or `D9:Z:30:round-3`.
    #[arg(long, value_name = "SPEC")]
    pub inject: Vec<String>,
}

impl ExperimentArgs {
    fn noise(&self) -> Result<NoiseParams> {
        let noise = match &self.noise_file {
            Some(p) => read_json(p, "noise file")?,
            None => NoiseParams::default(),
        };
        noise.validate()?;
        Ok(noise)
    }

    fn injections(&self, layout: &CodeLayout, basis: Basis, rounds: usize) -> Result<Vec<InjectionSpec>> {
        let mut out = Vec::new();
        for s in &self.inject {
            let inj = InjectionSpec::parse(s, layout).with_context(|| format!("--inject {s}"))?;
            if inj.axis == basis {
                bail!(
                    "--inject {s}: a {}-rotation cannot flip the {basis}-basis logical; use --basis {} or a {}-axis injection",
                    inj.axis,
                    basis.conjugate(),
                    basis.conjugate()
                );
            }
            if let InjectionSchedule::BeforeRound(k) = inj.schedule {
                ensure!(k >= 1 && k <= rounds, "--inject {s}: round {k} outside 1..={rounds}");
            }
            out.push(inj);
        }
        Ok(out)
    }
}

fn layout(distance: usize) -> Result<CodeLayout> {
    CodeLayout::build(distance).with_context(|| format!("--distance {distance}"))
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Dataset file to write (QECDS1).
    #[arg(long, short)]
    pub output: PathBuf,
    /// Also write the per-shot defect streams (QECDF1).
    #[arg(long, value_name = "PATH")]
    pub defects: Option<PathBuf>,
}

pub fn simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome> {
    let layout = layout(a.exp.distance)?;
    let rounds = a.exp.rounds.unwrap_or(20);
    let basis = a.exp.basis.unwrap_or(Pauli::Z);
    ensure!(rounds >= 1, "--rounds must be at least 1");
    ensure!(a.exp.shots >= 1, "--shots must be at least 1");
    let noise = a.exp.noise()?;
    let injections = a.exp.injections(&layout, basis, rounds)?;
    let records = sample_memory(&layout, basis, rounds, &noise, &injections, a.exp.shots as usize, seed)?;
    let meta = DatasetMeta {
        noise,
        injections: injections.clone(),
    };
    export_dataset(&records, &a.output, a.exp.distance, seed, meta.clone())
        .with_context(|| format!("writing {}", a.output.display()))?;
    let mut outputs = vec![a.output.clone()];
    if let Some(p) = &a.defects {
        let header = DatasetHeader {
            distance: a.exp.distance,
            rounds,
            basis,
            shots: records.len() as u64,
            seed,
            meta,
        };
        export_defects(&layout, &header, &records, p).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    let flips = records.iter().filter(|r| r.measured_flip()).count();
    let config = json!({
        "distance": a.exp.distance, "rounds": rounds, "basis": basis, "shots": a.exp.shots,
        "noise": noise, "injections": injections.iter().map(ToString::to_string).collect::<Vec<_>>(),
    });
    let text = format!(
        "wrote {} shots ({} rounds, {basis} basis, d={}) to {}\nlogical flips before decoding: {flips}\n",
        records.len(),
        rounds,
        a.exp.distance,
        a.output.display()
    );
    Ok(Outcome {
        json: json!({ "config": config, "outputs": outputs, "logical_flips": flips }),
        config,
        manifest_hint: Some(manifest_beside(&a.output)),
        outputs,
        text,
        uses_seed: true,
    })
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Decode a recorded dataset instead of running the live loop.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["rounds", "basis", "noise_file", "inject"])]
    pub dataset: Option<PathBuf>,
    /// LoopConfig JSON; flags below override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Decoders to compare (none, nn, mwpm).
    #[arg(long, value_delimiter = ',', default_value = "mwpm")]
    pub decoder: Vec<DecoderKind>,
    /// QECNW1 weights of the X-type decoder.
    #[arg(long, value_name = "PATH")]
    pub weights_x: Option<PathBuf>,
    /// QECNW1 weights of the Z-type decoder.
    #[arg(long, value_name = "PATH")]
    pub weights_z: Option<PathBuf>,
    /// Feedback every m rounds (0 = final round only); several values sweep.
    #[arg(long, value_delimiter = ',')]
    pub feedback_period: Vec<usize>,
    /// Delay between measurement end and feedback pulse; several values sweep.
    #[arg(long, value_delimiter = ',')]
    pub delay_ns: Vec<u64>,
    #[arg(long)]
    pub qec_cycle_ns: Option<u64>,
    /// Skip the final Pauli-frame update from the readout defects.
    #[arg(long)]
    pub no_final_pfu: bool,
    /// Prepared logical eigenstate (plus or minus).
    #[arg(long, value_parser = parse_sign)]
    pub prepared: Option<Sign>,
    /// What an infeasible delay does to a scheduled correction (retain, lose).
    #[arg(long, value_parser = parse_miss)]
    pub on_miss: Option<MissPolicy>,
    /// LatencyBudget JSON; Table I defaults otherwise.
    #[arg(long, value_name = "PATH")]
    pub budget_file: Option<PathBuf>,
    /// Per-(decoder, m, delay, n) fidelities.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Full results, including fits and feasibility reports.
    #[arg(long, value_name = "PATH")]
    pub json_out: Option<PathBuf>,
    /// Fidelity-decay plot.
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
}

fn parse_miss(s: &str) -> Result<MissPolicy, String> {
    match s {
        "retain" => Ok(MissPolicy::Retain),
        "lose" => Ok(MissPolicy::Lose),
        _ => Err(format!("expected retain or lose, got '{s}'")),
    }
}

fn load_nn(a: &EvaluateArgs, layout: &CodeLayout) -> Result<Option<NnWeights>> {
    if !a.decoder.contains(&DecoderKind::Nn) {
        return Ok(None);
    }
    let (Some(x), Some(z)) = (&a.weights_x, &a.weights_z) else {
        bail!("decoder nn needs --weights-x and --weights-z (rtqec weights-init writes placeholder files)");
    };
    let x = load_weights(x).with_context(|| format!("loading {}", x.display()))?;
    let z = load_weights(z).with_context(|| format!("loading {}", z.display()))?;
    let dim = layout.stabilizers_per_type();
    ensure!(x.input_size == dim && z.input_size == dim, "weights expect {} inputs per round, d={} has {dim}", x.input_size, layout.distance);
    Ok(Some(NnWeights { x, z }))
}

/// One evaluated configuration.
#[derive(serde::Serialize)]
struct Series {
    decoder: DecoderKind,
    feedback_period: usize,
    delay_ns: u64,
    #[serde(flatten)]
    result: SeriesResult,
}

#[derive(serde::Serialize)]
#[serde(untagged)]
enum SeriesResult {
    Live(Box<ExperimentResult>),
    Offline { points: Vec<FidelityPoint> },
}

impl Series {
    fn points(&self) -> &[FidelityPoint] {
        match &self.result {
            SeriesResult::Live(r) => &r.points,
            SeriesResult::Offline { points } => points,
        }
    }

    fn epsilon(&self) -> Option<(f64, f64)> {
        match &self.result {
            SeriesResult::Live(r) => r.fit.as_ref().map(|f| (f.epsilon, f.stderr)),
            SeriesResult::Offline { .. } => None,
        }
    }

    fn label(&self) -> String {
        format!("{:?} m={} delay={}ns", self.decoder, self.feedback_period, self.delay_ns).to_lowercase()
    }
}

fn series_csv(series: &[Series]) -> String {
    let mut s = String::from("decoder,feedback_period,delay_ns,n,fidelity,stderr,shots,successes,raw_fidelity\n");
    for ser in series {
        let dec = format!("{:?}", ser.decoder).to_lowercase();
        for p in ser.points() {
            let _ = writeln!(
                s,
                "{dec},{},{},{},{:.6},{:.6},{},{},{:.6}",
                ser.feedback_period,
                ser.delay_ns,
                p.n,
                p.fidelity,
                p.stderr,
                p.shots,
                p.successes,
                p.raw_fidelity()
            );
        }
    }
    s
}

fn series_table(series: &[Series]) -> String {
    let mut s = String::new();
    let ns: Vec<usize> = series.first().map(|x| x.points().iter().map(|p| p.n).collect()).unwrap_or_default();
    let _ = write!(s, "{:>4}", "n");
    for ser in series {
        let _ = write!(s, "  {:>28}", ser.label());
    }
    s.push('\n');
    for (i, n) in ns.iter().enumerate() {
        let _ = write!(s, "{n:>4}");
        for ser in series {
            let p = &ser.points()[i];
            let _ = write!(s, "  {:>28}", format!("{:.4} +- {:.4}", p.fidelity, p.stderr));
        }
        s.push('\n');
    }
    for ser in series {
        if let Some((e, se)) = ser.epsilon() {
            let _ = writeln!(s, "eps_L [{}] = {:.4} +- {:.4}", ser.label(), e, se);
        }
    }
    s
}

pub fn evaluate(a: &EvaluateArgs, seed: u64) -> Result<Outcome> {
    let mut cfg: LoopConfig = match &a.config {
        Some(p) => read_json(p, "loop config")?,
        None => LoopConfig::default(),
    };
    cfg.distance = a.exp.distance;
    if let Some(r) = a.exp.rounds {
        cfg.rounds = r;
    }
    if let Some(b) = a.exp.basis {
        cfg.basis = b;
    }
    if let Some(c) = a.qec_cycle_ns {
        cfg.qec_cycle_ns = c;
    }
    if a.no_final_pfu {
        cfg.final_pfu = false;
    }
    if let Some(p) = a.prepared {
        cfg.prepared = p;
    }
    if let Some(m) = a.on_miss {
        cfg.on_miss = m;
    }
    cfg.validate()?;
    ensure!(a.exp.shots >= 1, "--shots must be at least 1");
    let budget: LatencyBudget = match &a.budget_file {
        Some(p) => read_json(p, "budget file")?,
        None => LatencyBudget::default(),
    };
    let periods = if a.feedback_period.is_empty() { vec![cfg.feedback_period] } else { a.feedback_period.clone() };
    let delays = if a.delay_ns.is_empty() { vec![cfg.delay_ns] } else { a.delay_ns.clone() };

    let mut series = Vec::new();
    let mut warnings = Vec::new();
    let config;
    if let Some(path) = &a.dataset {
        let (header, records) = import_dataset(path).with_context(|| format!("reading {}", path.display()))?;
        ensure!(!records.is_empty(), "dataset {} holds no shots", path.display());
        ensure!(
            a.feedback_period.is_empty() && a.delay_ns.is_empty(),
            "recorded shots carry no feedback; drop --feedback-period/--delay-ns or evaluate live"
        );
        let layout = layout(header.distance)?;
        let nn = load_nn(a, &layout)?;
        let decoders = DecoderSet::new(&layout, &header.meta.noise, header.basis, nn)?;
        for &d in &a.decoder {
            let p = decode_offline(d, &decoders, &records)?;
            series.push(Series {
                decoder: d,
                feedback_period: 0,
                delay_ns: cfg.delay_ns,
                result: SeriesResult::Offline { points: vec![p] },
            });
        }
        config = json!({ "dataset": path, "decoders": a.decoder, "distance": header.distance,
            "rounds": header.rounds, "basis": header.basis, "shots": records.len(), "noise": header.meta.noise });
    } else {
        let layout = layout(cfg.distance)?;
        let noise = a.exp.noise()?;
        let injections = a.exp.injections(&layout, cfg.basis, cfg.rounds)?;
        let nn = load_nn(a, &layout)?;
        let decoders = DecoderSet::new(&layout, &noise, cfg.basis, nn)?;
        for &d in &a.decoder {
            for &m in &periods {
                for &delay in &delays {
                    let c = LoopConfig {
                        decoder: d,
                        feedback_period: m,
                        delay_ns: delay,
                        ..cfg
                    };
                    let r = run(&c, &decoders, &budget, &noise, &injections, a.exp.shots, seed)?;
                    if !r.feasibility.feasible && m > 0 {
                        warnings.push(format!(
                            "delay {delay} ns < {} ns closed-loop latency: feedback pulses miss their slots ({:?} policy)",
                            r.feasibility.required_ns, c.on_miss
                        ));
                    }
                    warnings.extend(r.fit_warnings.iter().cloned());
                    series.push(Series {
                        decoder: d,
                        feedback_period: m,
                        delay_ns: delay,
                        result: SeriesResult::Live(Box::new(r)),
                    });
                }
            }
        }
        config = json!({ "loop": cfg, "decoders": a.decoder, "feedback_periods": periods, "delays_ns": delays,
            "shots": a.exp.shots, "noise": noise, "budget": budget,
            "injections": injections.iter().map(ToString::to_string).collect::<Vec<_>>() });
    }

    let csv = series_csv(&series);
    let mut outputs = Vec::new();
    if let Some(p) = &a.csv {
        std::fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    if let Some(p) = &a.json_out {
        let full = json!({ "config": config, "series": series });
        std::fs::write(p, serde_json::to_string_pretty(&full)?).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    if let Some(p) = &a.svg {
        let curves: Vec<plot::Curve> = series
            .iter()
            .map(|s| plot::Curve {
                label: s.label(),
                points: s.points().iter().map(|p| (p.n as f64, p.fidelity, p.stderr)).collect(),
                epsilon: s.epsilon().map(|e| e.0),
            })
            .collect();
        std::fs::write(p, plot::fidelity_svg(&curves)).with_context(|| format!("writing {}", p.display()))?;
        outputs.push(p.clone());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let throughput = check_throughput(cfg.qec_cycle_ns, nn_period_ns());
    let feasibility = check_feasibility(&cfg, &budget);
    let mut text = series_table(&series);
    let _ = writeln!(
        text,
        "closed-loop latency {} ns; decoder period {} ns vs cycle {} ns: backlog {} ns/round",
        feasibility.required_ns, throughput.period_ns, throughput.qec_cycle_ns, throughput.backlog_per_round_ns
    );
    Ok(Outcome {
        json: json!({ "config": config, "series": series, "warnings": warnings, "throughput": throughput }),
        config,
        manifest_hint: a.csv.as_ref().map(|p| manifest_beside(p)),
        outputs,
        text,
        uses_seed: a.dataset.is_none(),
    })
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    /// Odd distances to project (default 3,5,...,17).
    #[arg(long, value_delimiter = ',')]
    pub distances: Vec<usize>,
    /// table, csv or markdown.
    #[arg(long, default_value = "table")]
    pub format: String,
    /// DSP slices available for the capacity verdict.
    #[arg(long, default_value_t = REFERENCE_DSP_CAPACITY)]
    pub capacity: u64,
}

pub fn scale(a: &ScaleArgs) -> Result<Outcome> {
    let ds = if a.distances.is_empty() { default_distances() } else { a.distances.clone() };
    let rows = project_all(&ds)?;
    let cap = max_supported_distance(a.capacity);
    let fmt_d = |d: Option<usize>| d.map_or("none".to_string(), |d| d.to_string());
    let body = match a.format.as_str() {
        "csv" => to_csv(&rows),
        "markdown" | "md" => to_markdown(&rows),
        "table" => {
            let mut s = format!("{:>3} {:>6} {:>4} {:>8} {:>6} {:>7} {:>11}\n", "d", "dim(x)", "h", "P_LSTM", "DSP", "DSP %", "latency ns");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:>3} {:>6} {:>4} {:>8} {:>6} {:>6.1}% {:>11}",
                    r.d, r.dim_x, r.h, r.p_lstm, r.dsp, r.utilization_pct, r.latency_ns
                );
            }
            s
        }
        other => bail!("--format must be table, csv or markdown, got '{other}'"),
    };
    let text = if a.format == "csv" {
        body
    } else {
        format!(
            "{body}largest d for {} DSPs: {} (one decoder), {} (X and Z decoders)\n",
            a.capacity,
            fmt_d(cap.single_decoder),
            fmt_d(cap.dual_decoder)
        )
    };
    Ok(Outcome {
        config: json!({ "distances": ds, "capacity": a.capacity }),
        outputs: Vec::new(),
        manifest_hint: None,
        json: json!({ "rows": rows, "capacity": cap }),
        text,
        uses_seed: false,
    })
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    /// Delay between measurement end and feedback pulse.
    #[arg(long, default_value_t = 550)]
    pub delay: u64,
    /// QEC cycle for the throughput check.
    #[arg(long, default_value_t = 1250)]
    pub qec_cycle_ns: u64,
    /// LatencyBudget JSON; individual flags below override it.
    #[arg(long, value_name = "PATH")]
    pub budget_file: Option<PathBuf>,
    #[arg(long)]
    pub daq_sampling_ns: Option<u64>,
    #[arg(long)]
    pub syndrome_ns: Option<u64>,
    #[arg(long)]
    pub nn_core_ns: Option<u64>,
    #[arg(long)]
    pub pfu_ns: Option<u64>,
    #[arg(long)]
    pub adc_ns: Option<u64>,
    #[arg(long)]
    pub demod_ns: Option<u64>,
    #[arg(long)]
    pub classify_ns: Option<u64>,
    #[arg(long)]
    pub comm_ns: Option<u64>,
    #[arg(long)]
    pub backplane_ns: Option<u64>,
    #[arg(long)]
    pub trigger_ns: Option<u64>,
    #[arg(long)]
    pub wavegen_ns: Option<u64>,
    #[arg(long)]
    pub dac_ns: Option<u64>,
}

pub fn budget(a: &BudgetArgs) -> Result<Outcome> {
    let mut b: LatencyBudget = match &a.budget_file {
        Some(p) => read_json(p, "budget file")?,
        None => LatencyBudget::default(),
    };
    for (field, value) in [
        (&mut b.daq_sampling_ns, a.daq_sampling_ns),
        (&mut b.syndrome_ns, a.syndrome_ns),
        (&mut b.nn_core_ns, a.nn_core_ns),
        (&mut b.pfu_ns, a.pfu_ns),
        (&mut b.adc_ns, a.adc_ns),
        (&mut b.demod_ns, a.demod_ns),
        (&mut b.classify_ns, a.classify_ns),
        (&mut b.comm_ns, a.comm_ns),
        (&mut b.backplane_ns, a.backplane_ns),
        (&mut b.trigger_ns, a.trigger_ns),
        (&mut b.wavegen_ns, a.wavegen_ns),
        (&mut b.dac_ns, a.dac_ns),
    ] {
        if let Some(v) = value {
            *field = v;
        }
    }
    let cfg = LoopConfig {
        delay_ns: a.delay,
        qec_cycle_ns: a.qec_cycle_ns,
        ..LoopConfig::default()
    };
    let feas = check_feasibility(&cfg, &b);
    let thr = check_throughput(a.qec_cycle_ns, nn_period_ns());
    let mut text = String::new();
    for (name, ns) in b.rows() {
        let _ = writeln!(text, "{name:<24} {ns:>5} ns");
    }
    let verdict = if feas.feasible { "feasible" } else { "INFEASIBLE" };
    let _ = writeln!(text, "delay {} ns: {verdict} (slack {} ns)", a.delay, feas.slack_ns);
    let _ = writeln!(
        text,
        "throughput: period {} ns vs cycle {} ns, backlog {} ns/round",
        thr.period_ns, thr.qec_cycle_ns, thr.backlog_per_round_ns
    );
    let rows: serde_json::Map<String, serde_json::Value> = b.rows().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
    Ok(Outcome {
        config: json!({ "budget": b, "delay_ns": a.delay, "qec_cycle_ns": a.qec_cycle_ns }),
        outputs: Vec::new(),
        manifest_hint: None,
        json: json!({
            "budget": b, "rows": rows, "decoder_subtotal_ns": b.decoder_subtotal(),
            "electronics_subtotal_ns": b.electronics_subtotal(), "total_ns": b.total(),
            "feasibility": feas, "throughput": thr,
        }),
        text,
        uses_seed: false,
    })
}

#[derive(Args, Debug)]
pub struct WeightsInitArgs {
    /// Stabilizer type of the decoder (X or Z).
    #[arg(long, value_parser = parse_basis)]
    pub kind: Pauli,
    #[arg(long, default_value_t = 3)]
    pub distance: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    /// All-zero weights (the decoder never signals a flip).
    #[arg(long)]
    pub zeros: bool,
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn weights_init(a: &WeightsInitArgs, seed: u64) -> Result<Outcome> {
    let layout = layout(a.distance)?;
    ensure!(a.hidden >= 1, "--hidden must be at least 1");
    let dim = layout.stabilizers_per_type();
    let w = if a.zeros {
        QLstmWeights::zeros(a.kind, dim, a.hidden)
    } else {
        QLstmWeights::random(a.kind, dim, a.hidden, &mut ChaCha8Rng::seed_from_u64(seed))
    };
    w.save(&a.output).with_context(|| format!("writing {}", a.output.display()))?;
    let params = w.lstm_parameter_count() + w.dense_parameter_count();
    Ok(Outcome {
        config: json!({ "kind": a.kind, "distance": a.distance, "hidden": a.hidden, "zeros": a.zeros }),
        outputs: vec![a.output.clone()],
        manifest_hint: None,
        json: json!({ "output": a.output, "parameters": params, "lstm_parameters": w.lstm_parameter_count() }),
        text: format!("wrote {}-type weights ({params} parameters) to {}\n", a.kind, a.output.display()),
        uses_seed: !a.zeros,
    })
}
