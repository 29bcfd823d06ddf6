// SPDX-License-Identifier: Apache-2.0

//! Closed-loop memory experiments on a simulated timeline.
//!
//! Each shot streams rounds through the syndrome preprocessor into one
//! decoder per stabilizer type. Decoders report the cumulative logical flip
//! since preparation; the frame absorbs the change since the last update.
//! Every `m` rounds the frame is realised as feedback pulses (if the delay
//! covers the closed-loop latency); otherwise it is only tracked. The
//! reported outcome is the raw logical parity times the tracked sign,
//! optionally toggled by a final PFU that decodes the readout defects.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{Basis, CodeLayout, Pauli, Sign, StabilizerType};
use crate::feedback::{apply_verdict, final_pfu, plan_feedback, FeedbackError, PauliFrame};
use crate::mwpm::{build_graph, decode, DetectorGraph, GraphScope, MatchError};
use crate::noise_sim::{memory_circuit, shot_seed, InjectionSpec, NoiseParams, ShotRecord, ShotSimulator, SimError};
use crate::qlstm::{self, DecoderState, QLstmWeights, QlstmError, CYCLE_NS, THROUGHPUT_CYCLES};
use crate::syndrome::{compute_defects, Preprocessor, SyndromeError};

#[derive(Debug, Error)]
pub enum LoopError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Syndrome(#[from] SyndromeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Qlstm(#[from] QlstmError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Closed-loop latency contributions in ns. Defaults follow the measured
/// hardware breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyBudget {
    pub daq_sampling_ns: u64,
    pub syndrome_ns: u64,
    pub nn_core_ns: u64,
    pub pfu_ns: u64,
    pub adc_ns: u64,
    pub demod_ns: u64,
    pub classify_ns: u64,
    pub comm_ns: u64,
    pub backplane_ns: u64,
    pub trigger_ns: u64,
    pub wavegen_ns: u64,
    pub dac_ns: u64,
}

impl Default for LatencyBudget {
    fn default() -> Self {
        LatencyBudget {
            daq_sampling_ns: 222,
            syndrome_ns: 20,
            nn_core_ns: 124,
            pfu_ns: 4,
            adc_ns: 12,
            demod_ns: 32,
            classify_ns: 4,
            comm_ns: 36,
            backplane_ns: 8,
            trigger_ns: 16,
            wavegen_ns: 32,
            dac_ns: 40,
        }
    }
}

impl LatencyBudget {
    pub fn decoder_subtotal(&self) -> u64 {
        self.syndrome_ns + self.nn_core_ns + self.pfu_ns
    }

    pub fn electronics_subtotal(&self) -> u64 {
        self.adc_ns
            + self.demod_ns
            + self.classify_ns
            + self.comm_ns
            + self.backplane_ns
            + self.trigger_ns
            + self.wavegen_ns
            + self.dac_ns
    }

    pub fn total(&self) -> u64 {
        self.daq_sampling_ns + self.decoder_subtotal() + self.electronics_subtotal()
    }

    /// `(name, ns)` rows in table order.
    pub fn rows(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("DAQ sampling", self.daq_sampling_ns),
            ("Syndrome preprocessing", self.syndrome_ns),
            ("NN decoder core", self.nn_core_ns),
            ("Pauli-frame update", self.pfu_ns),
            ("Subtotal (decoder)", self.decoder_subtotal()),
            ("ADC", self.adc_ns),
            ("IQ demodulation", self.demod_ns),
            ("State classification", self.classify_ns),
            ("Digital communication", self.comm_ns),
            ("Backplane", self.backplane_ns),
            ("Trigger", self.trigger_ns),
            ("Waveform generation", self.wavegen_ns),
            ("DAC", self.dac_ns),
            ("Subtotal (electronics)", self.electronics_subtotal()),
            ("Total", self.total()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    None,
    Nn,
    Mwpm,
}

impl std::str::FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(DecoderKind::None),
            "nn" => Ok(DecoderKind::Nn),
            "mwpm" => Ok(DecoderKind::Mwpm),
            other => Err(format!("unknown decoder '{other}' (none, nn, mwpm)")),
        }
    }
}

/// What an infeasible delay does to a scheduled correction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissPolicy {
    /// No pulse; the frame keeps the flip and the final PFU still applies it.
    #[default]
    Retain,
    /// The controller clears its frame as if the pulse had landed; the
    /// correction is lost.
    Lose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub distance: usize,
    /// Largest round count `N`; fidelities are reported for `n = 1..=N`.
    pub rounds: usize,
    /// Feedback every `m` rounds; 0 means final-round correction only.
    pub feedback_period: usize,
    /// Gap between the end of a measurement and the feedback pulse.
    pub delay_ns: u64,
    pub qec_cycle_ns: u64,
    pub decoder: DecoderKind,
    pub final_pfu: bool,
    pub basis: Basis,
    pub prepared: Sign,
    pub on_miss: MissPolicy,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            distance: 3,
            rounds: 10,
            feedback_period: 0,
            delay_ns: 550,
            qec_cycle_ns: 1250,
            decoder: DecoderKind::Mwpm,
            final_pfu: true,
            basis: Pauli::Z,
            prepared: Sign::Plus,
            on_miss: MissPolicy::Retain,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), LoopError> {
        if self.rounds == 0 {
            return Err(LoopError::Config("rounds must be at least 1".into()));
        }
        if self.qec_cycle_ns == 0 {
            return Err(LoopError::Config("qec_cycle_ns must be positive".into()));
        }
        Ok(())
    }

    /// Whether feedback is played after round `n` of an `rounds`-round shot.
    pub fn is_feedback_round(&self, n: usize) -> bool {
        self.feedback_period > 0 && n.is_multiple_of(self.feedback_period)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub delay_ns: u64,
    pub required_ns: u64,
    pub feasible: bool,
    pub slack_ns: i64,
    /// Rounds after which feedback is scheduled (for `rounds = N`).
    pub feedback_rounds: Vec<usize>,
}

/// A pulse lands in its slot iff the delay covers the closed-loop latency.
pub fn check_feasibility(config: &LoopConfig, budget: &LatencyBudget) -> FeasibilityReport {
    let required = budget.total();
    FeasibilityReport {
        delay_ns: config.delay_ns,
        required_ns: required,
        feasible: config.delay_ns >= required,
        slack_ns: config.delay_ns as i64 - required as i64,
        feedback_rounds: (1..=config.rounds).filter(|&n| config.is_feedback_round(n)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub qec_cycle_ns: u64,
    pub period_ns: u64,
    pub slack_ns: i64,
    /// Queue growth per round; zero when the decoder keeps up.
    pub backlog_per_round_ns: u64,
}

impl ThroughputReport {
    pub fn zero_backlog(&self) -> bool {
        self.backlog_per_round_ns == 0
    }

    /// Accumulated queueing delay after `rounds` rounds.
    pub fn backlog_after(&self, rounds: u64) -> u64 {
        self.backlog_per_round_ns * rounds.saturating_sub(1)
    }
}

/// One decoder input per QEC cycle against the decoder's throughput period.
pub fn check_throughput(qec_cycle_ns: u64, period_ns: u64) -> ThroughputReport {
    ThroughputReport {
        qec_cycle_ns,
        period_ns,
        slack_ns: qec_cycle_ns as i64 - period_ns as i64,
        backlog_per_round_ns: period_ns.saturating_sub(qec_cycle_ns),
    }
}

/// Throughput period of the modelled NN pipeline in ns (184).
pub fn nn_period_ns() -> u64 {
    u64::from(THROUGHPUT_CYCLES * CYCLE_NS)
}

/// Quantized decoders for both stabilizer types.
#[derive(Debug, Clone)]
pub struct NnWeights {
    pub x: QLstmWeights,
    pub z: QLstmWeights,
}

impl NnWeights {
    fn get(&self, kind: StabilizerType) -> &QLstmWeights {
        match kind {
            Pauli::X => &self.x,
            Pauli::Z => &self.z,
        }
    }

    fn check(&self, layout: &CodeLayout) -> Result<(), LoopError> {
        for kind in [Pauli::X, Pauli::Z] {
            let w = self.get(kind);
            if w.kind != kind {
                return Err(LoopError::Config(format!("{kind}-type decoder loaded a {}-type weight file", w.kind)));
            }
            if w.input_size != layout.stabilizers_per_type() {
                return Err(LoopError::Config(format!(
                    "{kind}-type weights expect {} inputs, layout has {} stabilizers per type",
                    w.input_size,
                    layout.stabilizers_per_type()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GraphKey {
    kind: StabilizerType,
    scope: GraphScope,
    rounds: usize,
}

/// Decoder inputs shared by all shots: NN weights and cached MWPM graphs.
pub struct DecoderSet {
    layout: CodeLayout,
    noise: NoiseParams,
    basis: Basis,
    nn: Option<NnWeights>,
    graphs: Mutex<HashMap<GraphKey, Arc<DetectorGraph>>>,
}

impl DecoderSet {
    pub fn new(layout: &CodeLayout, noise: &NoiseParams, basis: Basis, nn: Option<NnWeights>) -> Result<DecoderSet, LoopError> {
        if let Some(w) = &nn {
            w.check(layout)?;
        }
        Ok(DecoderSet {
            layout: layout.clone(),
            noise: *noise,
            basis,
            nn,
            graphs: Mutex::new(HashMap::new()),
        })
    }

    fn graph(&self, kind: StabilizerType, scope: GraphScope, rounds: usize) -> Result<Arc<DetectorGraph>, LoopError> {
        // An open-top graph over k rounds does not depend on the total.
        let rounds = match scope {
            GraphScope::OpenTop(k) => k,
            GraphScope::Closed => rounds,
        };
        let key = GraphKey { kind, scope, rounds };
        if let Some(g) = self.graphs.lock().expect("graph cache").get(&key) {
            return Ok(g.clone());
        }
        let g = Arc::new(build_graph(&self.layout, self.basis, rounds, &self.noise, kind, scope)?);
        self.graphs.lock().expect("graph cache").insert(key, g.clone());
        Ok(g)
    }
}

/// Graphs one `rounds`-round batch needs, resolved before the shot loop.
struct MwpmPlan {
    open: HashMap<(StabilizerType, usize), Arc<DetectorGraph>>,
    closed: Option<Arc<DetectorGraph>>,
}

enum TypeDecoder<'a> {
    None,
    Nn { weights: &'a QLstmWeights, state: DecoderState, last: bool },
    Mwpm { rows: Vec<Vec<bool>> },
}

impl TypeDecoder<'_> {
    fn push(&mut self, row: &[bool]) -> Result<(), LoopError> {
        match self {
            TypeDecoder::None => {}
            TypeDecoder::Nn { weights, state, last } => {
                *last = qlstm::step(weights, state, row)?.flip;
            }
            TypeDecoder::Mwpm { rows } => rows.push(row.to_vec()),
        }
        Ok(())
    }

    /// Cumulative flip after the rounds pushed so far.
    fn cumulative(&self, kind: StabilizerType, plan: &Option<MwpmPlan>) -> Result<bool, LoopError> {
        Ok(match self {
            TypeDecoder::None => false,
            TypeDecoder::Nn { last, .. } => *last,
            TypeDecoder::Mwpm { rows } => {
                let plan = plan.as_ref().expect("mwpm plan");
                let g = &plan.open[&(kind, rows.len())];
                decode(g, &g.nodes_from_rows(rows, None))?.flip
            }
        })
    }

    /// Cumulative flip including the final-readout defects.
    fn finish(&mut self, final_row: &[bool], plan: &Option<MwpmPlan>) -> Result<bool, LoopError> {
        Ok(match self {
            TypeDecoder::None => false,
            TypeDecoder::Nn { weights, state, .. } => qlstm::step(weights, state, final_row)?.flip,
            TypeDecoder::Mwpm { rows } => {
                let g = plan.as_ref().and_then(|p| p.closed.as_ref()).expect("closed graph");
                decode(g, &g.nodes_from_rows(rows, Some(final_row)))?.flip
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub corrected: Sign,
    pub raw: Sign,
    pub pulses: u32,
    /// Frame corrections lost because the pulse could not make its slot.
    pub missed: u32,
}

struct Batch<'a> {
    config: LoopConfig,
    layout: &'a CodeLayout,
    budget: LatencyBudget,
    decoders: &'a DecoderSet,
    plan: Option<MwpmPlan>,
}

impl Batch<'_> {
    fn decoder(&self, kind: StabilizerType) -> TypeDecoder<'_> {
        match self.config.decoder {
            DecoderKind::None => TypeDecoder::None,
            DecoderKind::Nn => {
                let w = self.decoders.nn.as_ref().expect("checked").get(kind);
                TypeDecoder::Nn {
                    weights: w,
                    state: DecoderState::new(w.hidden_size),
                    last: false,
                }
            }
            DecoderKind::Mwpm => TypeDecoder::Mwpm { rows: Vec::new() },
        }
    }

    fn run_shot(&self, circuit: &crate::noise_sim::circuit::MemoryCircuit, injections: &[InjectionSpec], seed: u64) -> Result<ShotOutcome, LoopError> {
        let cfg = &self.config;
        let n_rounds = circuit.rounds;
        let feasible = cfg.delay_ns >= self.budget.total();
        let mut sim = ShotSimulator::new(circuit, injections, seed, cfg.prepared);
        let mut pre = Preprocessor::new(cfg.basis);
        let mut dz = self.decoder(Pauli::Z);
        let mut dx = self.decoder(Pauli::X);
        // Cumulative flips already absorbed into the frame.
        let (mut seen_z, mut seen_x) = (false, false);
        let mut frame = PauliFrame::default();
        let mut pending = Vec::new();
        let mut out = ShotOutcome::default();

        for n in 1..=n_rounds {
            let bits = sim.run_round().to_vec();
            let (fz, fx) = pre.push_round(self.layout, &bits, &pending)?;
            pending.clear();
            let (rz, rx) = (fz.defects().to_vec(), fx.defects().to_vec());
            dz.push(&rz)?;
            dx.push(&rx)?;

            let feedback = cfg.is_feedback_round(n);
            let track_last = n == n_rounds && !cfg.final_pfu;
            if feedback || track_last {
                let cz = dz.cumulative(Pauli::Z, &self.plan)?;
                let cx = dx.cumulative(Pauli::X, &self.plan)?;
                frame = apply_verdict(frame, cx ^ seen_x, cz ^ seen_z);
                (seen_z, seen_x) = (cz, cx);
            }
            if feedback && !frame.is_trivial() {
                let time = n as u64 * cfg.qec_cycle_ns + cfg.delay_ns;
                let (plan, reset) = plan_feedback(frame, self.layout, n, time);
                if feasible {
                    for p in &plan.pulses {
                        sim.apply_pulse(p.target, p.gate);
                    }
                    out.pulses += plan.pulses.len() as u32;
                    pending = plan.cancellations;
                    frame = reset;
                } else {
                    out.missed += plan.pulses.len() as u32;
                    if cfg.on_miss == MissPolicy::Lose {
                        frame = reset;
                    }
                }
            }
        }

        let record = sim.finish();
        let fin = pre.finalize(self.layout, &record.data_bits, &pending)?;
        let verdict = if cfg.final_pfu {
            let measured = match cfg.basis {
                Pauli::Z => &mut dz,
                Pauli::X => &mut dx,
            };
            let seen = if cfg.basis == Pauli::Z { seen_z } else { seen_x };
            Some(measured.finish(&fin.defects, &self.plan)? ^ seen)
        } else {
            None
        };
        let raw_parity = self
            .layout
            .logical_support(cfg.basis)
            .iter()
            .fold(false, |acc, &q| acc ^ record.data_bits[q]);
        out.raw = Sign::from_parity(raw_parity);
        out.corrected = final_pfu(frame, cfg.basis, self.layout, &record.data_bits, &fin, verdict)?;
        Ok(out)
    }
}

/// Logical fidelity after `n` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub n: usize,
    pub shots: u64,
    pub successes: u64,
    pub fidelity: f64,
    /// Binomial standard error.
    pub stderr: f64,
    /// Shots whose raw readout (pulses included, no frame) matched.
    pub raw_successes: u64,
    pub pulses: u64,
    pub missed: u64,
}

impl FidelityPoint {
    fn from_counts(n: usize, shots: u64, successes: u64, raw_successes: u64, pulses: u64, missed: u64) -> FidelityPoint {
        let f = successes as f64 / shots as f64;
        FidelityPoint {
            n,
            shots,
            successes,
            fidelity: f,
            stderr: binomial_stderr(f, shots),
            raw_successes,
            pulses,
            missed,
        }
    }

    pub fn raw_fidelity(&self) -> f64 {
        self.raw_successes as f64 / self.shots as f64
    }
}

pub fn binomial_stderr(f: f64, shots: u64) -> f64 {
    (f * (1.0 - f) / shots as f64).sqrt()
}

/// Per-shot outcomes of an `n`-round experiment; shot `i` uses
/// `shot_seed(batch_seed(seed, n), i)`.
#[allow(clippy::too_many_arguments)]
pub fn run_shots(
    config: &LoopConfig,
    n: usize,
    decoders: &DecoderSet,
    budget: &LatencyBudget,
    noise: &NoiseParams,
    injections: &[InjectionSpec],
    shots: u64,
    seed: u64,
) -> Result<Vec<ShotOutcome>, LoopError> {
    config.validate()?;
    if shots == 0 {
        return Err(SimError::ZeroShots.into());
    }
    let layout = &decoders.layout;
    if decoders.basis != config.basis || decoders.noise != *noise {
        return Err(LoopError::Config("decoder set was built for a different basis or noise model".into()));
    }
    if config.decoder == DecoderKind::Nn && decoders.nn.is_none() {
        return Err(LoopError::Config("decoder = nn needs weight files for both stabilizer types".into()));
    }
    let circuit = memory_circuit(layout, config.basis, n, noise, injections)?;
    let cfg = LoopConfig { rounds: n, ..*config };
    let plan = if cfg.decoder == DecoderKind::Mwpm {
        let mut open = HashMap::new();
        for k in (1..=n).filter(|&k| cfg.is_feedback_round(k) || (k == n && !cfg.final_pfu)) {
            for kind in [Pauli::Z, Pauli::X] {
                open.insert((kind, k), decoders.graph(kind, GraphScope::OpenTop(k), n)?);
            }
        }
        let closed = if cfg.final_pfu {
            Some(decoders.graph(cfg.basis, GraphScope::Closed, n)?)
        } else {
            None
        };
        Some(MwpmPlan { open, closed })
    } else {
        None
    };
    let batch = Batch {
        config: cfg,
        layout,
        budget: *budget,
        decoders,
        plan,
    };
    let base = batch_seed(seed, n);
    (0..shots)
        .into_par_iter()
        .map(|i| batch.run_shot(&circuit, injections, shot_seed(base, i)))
        .collect()
}

/// Fidelity after `n` rounds over `shots` shots.
#[allow(clippy::too_many_arguments)]
pub fn run_point(
    config: &LoopConfig,
    n: usize,
    decoders: &DecoderSet,
    budget: &LatencyBudget,
    noise: &NoiseParams,
    injections: &[InjectionSpec],
    shots: u64,
    seed: u64,
) -> Result<FidelityPoint, LoopError> {
    let outcomes = run_shots(config, n, decoders, budget, noise, injections, shots, seed)?;
    let successes = outcomes.iter().filter(|o| o.corrected == config.prepared).count() as u64;
    let raw_successes = outcomes.iter().filter(|o| o.raw == config.prepared).count() as u64;
    let pulses = outcomes.iter().map(|o| u64::from(o.pulses)).sum();
    let missed = outcomes.iter().map(|o| u64::from(o.missed)).sum();
    Ok(FidelityPoint::from_counts(n, shots, successes, raw_successes, pulses, missed))
}

/// Decodes recorded shots (prepared in the `+1` eigenstate, no feedback)
/// with the final-round decoder only and returns their fidelity.
pub fn decode_offline(decoder: DecoderKind, decoders: &DecoderSet, records: &[ShotRecord]) -> Result<FidelityPoint, LoopError> {
    let first = records.first().ok_or(SimError::ZeroShots)?;
    let (n, basis) = (first.rounds, first.basis);
    if basis != decoders.basis || records.iter().any(|r| r.rounds != n || r.basis != basis) {
        return Err(LoopError::Config("records must share one round count and the decoder set's basis".into()));
    }
    if decoder == DecoderKind::Nn && decoders.nn.is_none() {
        return Err(LoopError::Config("decoder = nn needs weight files for both stabilizer types".into()));
    }
    let layout = &decoders.layout;
    let graph = match decoder {
        DecoderKind::Mwpm => Some(decoders.graph(basis, GraphScope::Closed, n)?),
        _ => None,
    };
    let verdicts: Vec<(bool, bool)> = records
        .par_iter()
        .map(|rec| {
            let defects = compute_defects(layout, rec)?;
            let verdict = match decoder {
                DecoderKind::None => false,
                DecoderKind::Mwpm => {
                    let g = graph.as_ref().expect("built above");
                    decode(g, &g.defect_nodes(&defects))?.flip
                }
                DecoderKind::Nn => {
                    let w = decoders.nn.as_ref().expect("checked").get(basis);
                    let mut state = DecoderState::new(w.hidden_size);
                    for row in defects.rows(basis) {
                        qlstm::step(w, &mut state, row)?;
                    }
                    qlstm::step(w, &mut state, &defects.final_frame.defects)?.flip
                }
            };
            let raw = layout.logical_support(basis).iter().fold(false, |acc, &q| acc ^ rec.data_bits[q]);
            Ok::<_, LoopError>((raw ^ verdict, raw))
        })
        .collect::<Result<_, _>>()?;
    let shots = records.len() as u64;
    let successes = verdicts.iter().filter(|(c, _)| !c).count() as u64;
    let raw_successes = verdicts.iter().filter(|(_, r)| !r).count() as u64;
    Ok(FidelityPoint::from_counts(n, shots, successes, raw_successes, 0, 0))
}

/// Seed of the `n`-round batch.
pub fn batch_seed(seed: u64, n: usize) -> u64 {
    shot_seed(seed ^ 0x05EE_D0FB_A7C4, n as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: LoopConfig,
    pub noise: NoiseParams,
    pub injections: Vec<String>,
    pub shots: u64,
    pub seed: u64,
    pub points: Vec<FidelityPoint>,
    pub fit: Option<DecayFit>,
    pub fit_warnings: Vec<String>,
    pub feasibility: FeasibilityReport,
    pub throughput: ThroughputReport,
}

impl ExperimentResult {
    /// `n,fidelity,stderr,shots,successes`, one line per round count.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,fidelity,stderr,shots,successes\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{:.6},{:.6},{},{}", p.n, p.fidelity, p.stderr, p.shots, p.successes);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Runs `n = 1..=config.rounds`, each with its own shot batch, and fits the
/// decay of the fidelities.
pub fn run(
    config: &LoopConfig,
    decoders: &DecoderSet,
    budget: &LatencyBudget,
    noise: &NoiseParams,
    injections: &[InjectionSpec],
    shots: u64,
    seed: u64,
) -> Result<ExperimentResult, LoopError> {
    config.validate()?;
    let feasibility = check_feasibility(config, budget);
    if !feasibility.feasible && config.feedback_period > 0 {
        log::warn!(
            "delay {} ns is below the {} ns closed-loop latency: feedback pulses will miss their slots",
            feasibility.delay_ns,
            feasibility.required_ns
        );
    }
    let mut points = Vec::with_capacity(config.rounds);
    for n in 1..=config.rounds {
        points.push(run_point(config, n, decoders, budget, noise, injections, shots, seed)?);
    }
    let input: Vec<DecayPoint> = points
        .iter()
        .map(|p| DecayPoint {
            n: p.n,
            fidelity: p.fidelity,
            shots: Some(p.shots),
        })
        .collect();
    let (fit, fit_warnings) = match fit_decay(&input) {
        Ok(f) => {
            let w = f.warnings.clone();
            (Some(f), w)
        }
        Err(e) => (None, vec![e.to_string()]),
    };
    Ok(ExperimentResult {
        config: *config,
        noise: *noise,
        injections: injections.iter().map(ToString::to_string).collect(),
        shots,
        seed,
        points,
        fit,
        fit_warnings,
        feasibility,
        throughput: check_throughput(config.qec_cycle_ns, nn_period_ns()),
    })
}

/// Fidelity at `config.rounds` for each delay.
#[allow(clippy::too_many_arguments)]
pub fn delay_sweep(
    config: &LoopConfig,
    delays_ns: &[u64],
    decoders: &DecoderSet,
    budget: &LatencyBudget,
    noise: &NoiseParams,
    injections: &[InjectionSpec],
    shots: u64,
    seed: u64,
) -> Result<Vec<(u64, bool, FidelityPoint)>, LoopError> {
    delays_ns
        .iter()
        .map(|&delay| {
            let cfg = LoopConfig { delay_ns: delay, ..*config };
            let feasible = check_feasibility(&cfg, budget).feasible;
            Ok((delay, feasible, run_point(&cfg, cfg.rounds, decoders, budget, noise, injections, shots, seed)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: usize,
    pub fidelity: f64,
    /// Shots behind the estimate; `None` fits with uniform weights.
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub epsilon: f64,
    pub stderr: f64,
    /// Fitted slope `ln(1 - 2 epsilon)`.
    pub slope: f64,
    pub chi2_reduced: f64,
    /// `ln(2F-1) - slope * n` per point used.
    pub residuals: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points with F > 0.5, got {0}")]
    TooFewPoints(usize),
    #[error("fidelity {0} outside (0, 1]")]
    OutOfRange(f64),
}

/// Weighted least squares of `ln(2F - 1) = n ln(1 - 2 eps)` through the
/// origin. With shot counts the weights are inverse variances predicted by
/// the current fit (iterated); the standard error is inflated by
/// `sqrt(chi2_red)` when the scatter exceeds the binomial expectation.
pub fn fit_decay(points: &[DecayPoint]) -> Result<DecayFit, FitError> {
    let mut warnings = Vec::new();
    if let Some(p) = points.iter().find(|p| !(p.fidelity > 0.0 && p.fidelity <= 1.0)) {
        return Err(FitError::OutOfRange(p.fidelity));
    }
    let used: Vec<&DecayPoint> = points
        .iter()
        .filter(|p| {
            let keep = p.fidelity > 0.5 && p.n > 0;
            if !keep {
                let msg = format!("excluded n={} with F={} (ln(2F-1) undefined)", p.n, p.fidelity);
                log::warn!("{msg}");
                warnings.push(msg);
            }
            keep
        })
        .collect();
    if used.len() < 3 {
        return Err(FitError::TooFewPoints(used.len()));
    }
    let ys: Vec<f64> = used.iter().map(|p| (2.0 * p.fidelity - 1.0).ln()).collect();
    let ns: Vec<f64> = used.iter().map(|p| p.n as f64).collect();
    let weighted = used.iter().all(|p| p.shots.is_some_and(|s| s > 0));

    let solve = |w: &[f64]| -> (f64, f64) {
        let sxx: f64 = w.iter().zip(&ns).map(|(w, n)| w * n * n).sum();
        let sxy: f64 = w.iter().zip(&ns).zip(&ys).map(|((w, n), y)| w * n * y).sum();
        (sxy / sxx, sxx)
    };
    let mut w = vec![1.0; used.len()];
    let (mut slope, mut sxx) = solve(&w);
    if weighted {
        for _ in 0..4 {
            w = used
                .iter()
                .map(|p| {
                    let shots = p.shots.expect("weighted") as f64;
                    let f_hat = 0.5 * (1.0 + (slope * p.n as f64).exp());
                    let f_hat = f_hat.clamp(0.5 / shots, 1.0 - 0.5 / shots);
                    let var_f = f_hat * (1.0 - f_hat) / shots;
                    let dy = 2.0 / (2.0 * f_hat - 1.0);
                    1.0 / (var_f * dy * dy)
                })
                .collect();
            (slope, sxx) = solve(&w);
        }
    }
    let residuals: Vec<(usize, f64)> = used.iter().zip(&ys).map(|(p, y)| (p.n, y - slope * p.n as f64)).collect();
    let dof = (used.len() - 1) as f64;
    let chi2: f64 = residuals.iter().zip(&w).map(|((_, r), w)| w * r * r).sum();
    let chi2_reduced = chi2 / dof;
    let se_slope = if weighted {
        (1.0 / sxx).sqrt() * chi2_reduced.sqrt().max(1.0)
    } else {
        (chi2_reduced / sxx).sqrt()
    };
    let slope = slope.min(0.0);
    let epsilon = 0.5 * (1.0 - slope.exp());
    Ok(DecayFit {
        epsilon,
        stderr: 0.5 * slope.exp() * se_slope,
        slope,
        chi2_reduced,
        residuals,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_budget_subtotals() {
        let b = LatencyBudget::default();
        assert_eq!(b.decoder_subtotal(), 148);
        assert_eq!(b.electronics_subtotal(), 180);
        assert_eq!(b.total(), 550);
    }

    #[test]
    fn feasibility_threshold() {
        let b = LatencyBudget::default();
        let at = |d| check_feasibility(&LoopConfig { delay_ns: d, ..LoopConfig::default() }, &b).feasible;
        assert!(at(550));
        assert!(!at(549));
        assert!(!at(500));
    }

    #[test]
    fn throughput_cases() {
        assert!(check_throughput(1250, 184).zero_backlog());
        let r = check_throughput(184, 184);
        assert!(r.zero_backlog());
        assert_eq!(r.slack_ns, 0);
        let r = check_throughput(150, 184);
        assert_eq!(r.backlog_per_round_ns, 34);
        assert_eq!(r.backlog_after(3), 68);
        assert_eq!(nn_period_ns(), 184);
    }

    fn synth(eps: f64) -> Vec<DecayPoint> {
        (1..=10)
            .map(|n| DecayPoint {
                n,
                fidelity: 0.5 * (1.0 + (1.0 - 2.0 * eps).powi(n as i32)),
                shots: None,
            })
            .collect()
    }

    #[test]
    fn fit_inverts_exact_decay() {
        for eps in [0.0, 0.01, 0.069, 0.2] {
            let f = fit_decay(&synth(eps)).unwrap();
            assert!((f.epsilon - eps).abs() < 1e-12, "{eps} -> {}", f.epsilon);
        }
    }

    #[test]
    fn fit_excludes_low_points_and_needs_three() {
        let mut pts = synth(0.069);
        pts.push(DecayPoint { n: 40, fidelity: 0.45, shots: None });
        let f = fit_decay(&pts).unwrap();
        assert_eq!(f.warnings.len(), 1);
        assert!(matches!(fit_decay(&pts[..2]), Err(FitError::TooFewPoints(2))));
        assert!(matches!(
            fit_decay(&[DecayPoint { n: 1, fidelity: 1.2, shots: None }]),
            Err(FitError::OutOfRange(_))
        ));
    }

    #[test]
    fn decoder_kind_parses() {
        assert_eq!("MWPM".parse::<DecoderKind>().unwrap(), DecoderKind::Mwpm);
        assert!("blossom".parse::<DecoderKind>().is_err());
    }
}
