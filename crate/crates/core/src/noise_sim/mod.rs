// SPDX-License-Identifier: Apache-2.0

//! Stochastic Pauli-frame sampler for the repeated-stabilizer memory experiment.
//!
//! Each shot prepares the data qubits transversally, runs `N` rounds of
//! H/CZ stabilizer measurements without ancilla reset, and reads all data
//! qubits out in the preparation basis. Shots draw from independent
//! counter-derived RNG streams, so results do not depend on how the shots
//! are spread over worker threads.

pub mod circuit;
pub mod dataset;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{Basis, CodeLayout, Pauli, Sign};
use circuit::{
    execute_segment, ElementaryFault, FaultSource, FramePair, Location, MemoryCircuit, NoiseClass, PauliBits, Segment,
    SegmentOutcome, SingleFault,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("probability {name} = {value} outside [0, 0.5]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("ancilla reset is not modelled; no_ancilla_reset must stay true")]
    AncillaReset,
    #[error("injection target {0} is not a data qubit")]
    InjectionTarget(String),
    #[error("injection angle {0} deg outside [0, 180]")]
    InjectionAngle(f64),
    #[error("malformed injection spec {0:?} (expected e.g. D2:X:40deg:each-round)")]
    InjectionSyntax(String),
    #[error("at least one round is required")]
    ZeroRounds,
    #[error("at least one shot is required")]
    ZeroShots,
    #[error(transparent)]
    Layout(#[from] crate::code_model::LayoutError),
}

/// Circuit-level noise strengths. With the defaults the d=3 MWPM-corrected
/// memory loses about 0.7% fidelity per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Depolarizing after each single-qubit gate.
    pub p1: f64,
    /// Two-qubit depolarizing after each CZ.
    pub p2: f64,
    /// Depolarizing on each data qubit during the measurement window.
    pub p_idle: f64,
    /// Classical flip of each recorded measurement bit.
    pub p_meas: f64,
    /// Ancillas are never reset between rounds; fixed to `true`.
    pub no_ancilla_reset: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p1: 0.001,
            p2: 0.005,
            p_idle: 0.002,
            p_meas: 0.01,
            no_ancilla_reset: true,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        NoiseParams {
            p1: 0.0,
            p2: 0.0,
            p_idle: 0.0,
            p_meas: 0.0,
            no_ancilla_reset: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [("p1", self.p1), ("p2", self.p2), ("p_idle", self.p_idle), ("p_meas", self.p_meas)] {
            if !(0.0..=0.5).contains(&value) {
                return Err(SimError::InvalidProbability { name, value });
            }
        }
        if !self.no_ancilla_reset {
            return Err(SimError::AncillaReset);
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_idle == 0.0 && self.p_meas == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionSchedule {
    EachRound,
    /// Only before the given (1-based) round.
    BeforeRound(usize),
}

/// Artificial rotation `X(theta)` / `Z(theta)` on one data qubit, applied
/// before the stabilizer cycle of the scheduled rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    /// Data-qubit index (0-based; `D2` is 1).
    pub target: usize,
    pub axis: Pauli,
    pub theta_deg: f64,
    pub schedule: InjectionSchedule,
}

impl InjectionSpec {
    /// Probability that the following parity checks project the rotation onto a Pauli flip.
    pub fn flip_probability(&self) -> f64 {
        let half = self.theta_deg.to_radians() / 2.0;
        half.sin().powi(2)
    }

    pub fn applies_to(&self, round: usize) -> bool {
        match self.schedule {
            InjectionSchedule::EachRound => true,
            InjectionSchedule::BeforeRound(k) => k == round,
        }
    }

    pub fn validate(&self, layout: &CodeLayout) -> Result<(), SimError> {
        if self.target >= layout.num_data() {
            return Err(SimError::InjectionTarget(format!("qubit #{}", self.target)));
        }
        if !(0.0..=180.0).contains(&self.theta_deg) {
            return Err(SimError::InjectionAngle(self.theta_deg));
        }
        Ok(())
    }

    /// Parses `D2:X:40deg:each-round` or `D9:Z:30:round-3`.
    pub fn parse(spec: &str, layout: &CodeLayout) -> Result<InjectionSpec, SimError> {
        let bad = || SimError::InjectionSyntax(spec.to_string());
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let target = if parts[0].starts_with(['A', 'a']) {
            return Err(SimError::InjectionTarget(parts[0].to_string()));
        } else {
            layout
                .data_index(parts[0])
                .map_err(|_| SimError::InjectionTarget(parts[0].to_string()))?
        };
        let axis = Pauli::from_str(parts[1]).map_err(|_| bad())?;
        let theta_deg: f64 = parts[2]
            .trim_end_matches("deg")
            .trim_end_matches('°')
            .parse()
            .map_err(|_| bad())?;
        let schedule = match parts.get(3) {
            None | Some(&"each-round") => InjectionSchedule::EachRound,
            Some(s) => {
                let k = s.strip_prefix("round-").ok_or_else(bad)?;
                InjectionSchedule::BeforeRound(k.parse().map_err(|_| bad())?)
            }
        };
        let inj = InjectionSpec {
            target,
            axis,
            theta_deg,
            schedule,
        };
        inj.validate(layout)?;
        Ok(inj)
    }
}

impl fmt::Display for InjectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}:{}:{}deg:", self.target + 1, self.axis, self.theta_deg)?;
        match self.schedule {
            InjectionSchedule::EachRound => write!(f, "each-round"),
            InjectionSchedule::BeforeRound(k) => write!(f, "round-{k}"),
        }
    }
}

/// Raw bits of one shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub rounds: usize,
    /// `a_n^i`, row-major by round then global ancilla index.
    pub ancilla_bits: Vec<bool>,
    /// Final data-qubit outcomes `d^i`.
    pub data_bits: Vec<bool>,
    /// Net physical error anticommutes with `Z_L` (X-type error chain).
    pub truth_x_flip: bool,
    /// Net physical error anticommutes with `X_L` (Z-type error chain).
    pub truth_z_flip: bool,
    pub basis: Basis,
    pub seed: u64,
}

impl ShotRecord {
    pub fn num_ancillas(&self) -> usize {
        self.ancilla_bits.len() / self.rounds.max(1)
    }

    /// Ancilla outcomes of round `n` (1-based).
    pub fn round_bits(&self, n: usize) -> &[bool] {
        let k = self.num_ancillas();
        &self.ancilla_bits[(n - 1) * k..n * k]
    }

    /// Label for the logical operator read out in this shot's basis.
    pub fn measured_flip(&self) -> bool {
        match self.basis {
            Pauli::Z => self.truth_x_flip,
            Pauli::X => self.truth_z_flip,
        }
    }
}

/// Derives the per-shot seed from the run seed and shot index.
pub fn shot_seed(seed: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(index))
}

/// Fault source backed by a per-shot RNG.
struct RandomFaults<'a> {
    rng: ChaCha8Rng,
    noise: &'a NoiseParams,
}

impl FaultSource for RandomFaults<'_> {
    fn single(&mut self, _loc: Location, class: NoiseClass) -> PauliBits {
        let p = class.probability(self.noise);
        if p > 0.0 && self.rng.gen::<f64>() < p {
            PauliBits::from_index(self.rng.gen_range(1..4))
        } else {
            PauliBits::I
        }
    }

    fn pair(&mut self, _loc: Location) -> (PauliBits, PauliBits) {
        let p = self.noise.p2;
        if p > 0.0 && self.rng.gen::<f64>() < p {
            let k = self.rng.gen_range(1..16usize);
            (PauliBits::from_index(k >> 2), PauliBits::from_index(k))
        } else {
            (PauliBits::I, PauliBits::I)
        }
    }

    fn measurement_flip(&mut self, _loc: Location) -> bool {
        self.noise.p_meas > 0.0 && self.rng.gen::<f64>() < self.noise.p_meas
    }

    fn gauge(&mut self) -> bool {
        self.rng.gen()
    }
}

/// Round-by-round simulation of one shot; lets a controller inject feedback
/// pulses between rounds.
pub struct ShotSimulator<'c> {
    circuit: &'c MemoryCircuit,
    injections: &'c [InjectionSpec],
    faults: RandomFaults<'c>,
    pulse_rng: ChaCha8Rng,
    frames: FramePair,
    prepared: Sign,
    completed_rounds: usize,
    ancilla_bits: Vec<bool>,
    current: Vec<bool>,
    seed: u64,
}

impl<'c> ShotSimulator<'c> {
    pub fn new(circuit: &'c MemoryCircuit, injections: &'c [InjectionSpec], seed: u64, prepared: Sign) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pulse_rng = rng.clone();
        pulse_rng.set_stream(1);
        let mut sim = ShotSimulator {
            circuit,
            injections,
            faults: RandomFaults {
                rng,
                noise: &circuit.noise,
            },
            pulse_rng,
            frames: FramePair::new(circuit.num_qubits()),
            prepared,
            completed_rounds: 0,
            ancilla_bits: Vec::with_capacity(circuit.rounds * circuit.layout.num_ancillas()),
            current: vec![false; circuit.layout.num_ancillas()],
            seed,
        };
        execute_segment(circuit, Segment::Prep, &mut sim.frames, &mut sim.faults);
        sim
    }

    pub fn completed_rounds(&self) -> usize {
        self.completed_rounds
    }

    /// Runs the next stabilizer round and returns its ancilla outcomes `a_n`.
    pub fn run_round(&mut self) -> &[bool] {
        assert!(self.completed_rounds < self.circuit.rounds, "all rounds already executed");
        let n = self.completed_rounds + 1;
        for inj in self.injections.iter().filter(|inj| inj.applies_to(n)) {
            let p = inj.flip_probability();
            if p > 0.0 && self.faults.rng.gen::<f64>() < p {
                self.frames.apply_error(inj.target, PauliBits::axis(inj.axis));
            }
        }
        let out = execute_segment(self.circuit, Segment::Round(n), &mut self.frames, &mut self.faults);
        for (slot, bit) in out.ancilla {
            self.current[slot] = bit;
        }
        self.ancilla_bits.extend_from_slice(&self.current);
        self.completed_rounds = n;
        &self.current
    }

    /// Applies a physical Pauli gate (feedback pulse) to a data qubit. The
    /// gate carries single-qubit gate noise drawn from a separate stream, so
    /// the main noise realisation is unchanged by pulses.
    pub fn apply_pulse(&mut self, data_qubit: usize, gate: Pauli) {
        self.frames.apply_error(data_qubit, PauliBits::axis(gate));
        let p = self.circuit.noise.p1;
        if p > 0.0 && self.pulse_rng.gen::<f64>() < p {
            let err = PauliBits::from_index(self.pulse_rng.gen_range(1..4));
            self.frames.apply_error(data_qubit, err);
        }
    }

    /// Runs any remaining rounds plus the final readout.
    pub fn finish(mut self) -> ShotRecord {
        while self.completed_rounds < self.circuit.rounds {
            self.run_round();
        }
        let out = execute_segment(self.circuit, Segment::Readout, &mut self.frames, &mut self.faults);
        finish_record(self.circuit, &self.frames, out, self.prepared, self.ancilla_bits, self.seed)
    }
}

fn finish_record(
    circuit: &MemoryCircuit,
    frames: &FramePair,
    out: SegmentOutcome,
    prepared: Sign,
    ancilla_bits: Vec<bool>,
    seed: u64,
) -> ShotRecord {
    let layout = &circuit.layout;
    // Reference readout: +1 eigenstate reads all zeros; the -1 eigenstate
    // differs by the conjugate logical string.
    let mut data_bits = vec![false; layout.num_data()];
    if prepared.is_minus() {
        for &q in layout.logical_support(circuit.basis.conjugate()) {
            data_bits[q] = true;
        }
    }
    let mut classical = vec![false; layout.num_data()];
    for (q, flip, meas_flip) in out.data {
        data_bits[q] ^= flip;
        classical[q] = meas_flip;
    }

    // After the readout basis change the measured logical's error shows in
    // the x bits, the other one in the z bits.
    let err = &frames.error;
    let measured = circuit.basis;
    let measured_flip = layout
        .logical_support(measured)
        .iter()
        .fold(false, |acc, &q| acc ^ err.x[q] ^ classical[q]);
    let other_flip = layout
        .logical_support(measured.conjugate())
        .iter()
        .fold(false, |acc, &q| acc ^ err.z[q]);
    let (truth_x_flip, truth_z_flip) = match measured {
        Pauli::Z => (measured_flip, other_flip),
        Pauli::X => (other_flip, measured_flip),
    };

    ShotRecord {
        rounds: circuit.rounds,
        ancilla_bits,
        data_bits,
        truth_x_flip,
        truth_z_flip,
        basis: circuit.basis,
        seed,
    }
}

/// Runs the circuit with exactly one elementary fault and no gauge
/// randomness, so every outcome is a deterministic flip pattern.
pub fn probe_fault(circuit: &MemoryCircuit, fault: ElementaryFault) -> ShotRecord {
    let na = circuit.layout.num_ancillas();
    let mut frames = FramePair::new(circuit.num_qubits());
    let mut source = SingleFault(fault);
    let mut ancilla_bits = Vec::with_capacity(circuit.rounds * na);
    let mut current = vec![false; na];
    for segment in circuit.segments() {
        if segment < fault.location.segment {
            // Nothing has happened yet: all outcomes match the reference.
            if let Segment::Round(_) = segment {
                ancilla_bits.extend_from_slice(&current);
            }
            continue;
        }
        let out = execute_segment(circuit, segment, &mut frames, &mut source);
        match segment {
            Segment::Round(_) => {
                for (slot, bit) in out.ancilla {
                    current[slot] = bit;
                }
                ancilla_bits.extend_from_slice(&current);
            }
            Segment::Readout => return finish_record(circuit, &frames, out, Sign::Plus, ancilla_bits, 0),
            Segment::Prep => {}
        }
    }
    unreachable!("segments end with the readout")
}

fn check_inputs(layout: &CodeLayout, rounds: usize, noise: &NoiseParams, injections: &[InjectionSpec]) -> Result<(), SimError> {
    if rounds == 0 {
        return Err(SimError::ZeroRounds);
    }
    noise.validate()?;
    for inj in injections {
        inj.validate(layout)?;
    }
    Ok(())
}

/// Samples shots `range` of a run; shot `i` always uses `shot_seed(seed, i)`.
pub fn sample_range(
    circuit: &MemoryCircuit,
    injections: &[InjectionSpec],
    seed: u64,
    range: std::ops::Range<u64>,
) -> Vec<ShotRecord> {
    range
        .into_par_iter()
        .map(|i| ShotSimulator::new(circuit, injections, shot_seed(seed, i), Sign::Plus).finish())
        .collect()
}

/// Samples `shots` independent memory-experiment shots.
pub fn sample_memory(
    layout: &CodeLayout,
    basis: Basis,
    rounds: usize,
    noise: &NoiseParams,
    injections: &[InjectionSpec],
    shots: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>, SimError> {
    check_inputs(layout, rounds, noise, injections)?;
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let circuit = MemoryCircuit::new(layout, basis, rounds, *noise);
    Ok(sample_range(&circuit, injections, seed, 0..shots as u64))
}

/// Validated circuit for repeated use (e.g. by the closed-loop runner).
pub fn memory_circuit(
    layout: &CodeLayout,
    basis: Basis,
    rounds: usize,
    noise: &NoiseParams,
    injections: &[InjectionSpec],
) -> Result<MemoryCircuit, SimError> {
    check_inputs(layout, rounds, noise, injections)?;
    Ok(MemoryCircuit::new(layout, basis, rounds, *noise))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> CodeLayout {
        CodeLayout::build(3).unwrap()
    }

    #[test]
    fn noiseless_z_checks_are_quiet_and_labels_clear() {
        let l = d3();
        let shots = sample_memory(&l, Pauli::Z, 5, &NoiseParams::noiseless(), &[], 50, 7).unwrap();
        let z = l.ancillas_of(Pauli::Z);
        for s in &shots {
            assert!(!s.truth_x_flip && !s.truth_z_flip);
            for n in 1..=5 {
                // Z checks are deterministic (+1) from the Z-basis preparation.
                for &i in &z {
                    assert!(!s.round_bits(n)[i]);
                }
            }
            // Without reset the stabilizer value s_n = a_n ^ a_{n-1} is what stays fixed.
            for n in 2..=5 {
                let s_n: Vec<bool> = s.round_bits(n).iter().zip(s.round_bits(n - 1)).map(|(a, b)| a ^ b).collect();
                assert_eq!(s_n, s.round_bits(1));
            }
        }
        // The first-round X checks are genuinely random across shots.
        let x1 = l.ancillas_of(Pauli::X)[0];
        let ones = shots.iter().filter(|s| s.round_bits(1)[x1]).count();
        assert!(ones > 5 && ones < 45, "{ones}");
    }

    #[test]
    fn deterministic_given_seed() {
        let l = d3();
        let a = sample_memory(&l, Pauli::X, 4, &NoiseParams::default(), &[], 64, 11).unwrap();
        let b = sample_memory(&l, Pauli::X, 4, &NoiseParams::default(), &[], 64, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_memory(&l, Pauli::X, 4, &NoiseParams::default(), &[], 64, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = d3();
        assert!(matches!(
            sample_memory(&l, Pauli::Z, 0, &NoiseParams::default(), &[], 1, 0),
            Err(SimError::ZeroRounds)
        ));
        let bad = NoiseParams { p2: 0.7, ..NoiseParams::default() };
        assert!(matches!(
            sample_memory(&l, Pauli::Z, 1, &bad, &[], 1, 0),
            Err(SimError::InvalidProbability { name: "p2", .. })
        ));
        assert!(matches!(InjectionSpec::parse("A2:X:40deg", &l), Err(SimError::InjectionTarget(_))));
        assert!(matches!(InjectionSpec::parse("D2:X:200", &l), Err(SimError::InjectionAngle(_))));
        assert!(matches!(InjectionSpec::parse("D2:Y:20", &l), Err(SimError::InjectionSyntax(_))));
    }

    #[test]
    fn injection_parsing() {
        let l = d3();
        let inj = InjectionSpec::parse("D2:X:40deg:each-round", &l).unwrap();
        assert_eq!(inj.target, 1);
        assert_eq!(inj.axis, Pauli::X);
        assert_eq!(inj.theta_deg, 40.0);
        assert_eq!(inj.schedule, InjectionSchedule::EachRound);
        let inj = InjectionSpec::parse("D9:Z:30:round-3", &l).unwrap();
        assert_eq!(inj.schedule, InjectionSchedule::BeforeRound(3));
        assert_eq!(InjectionSpec::parse(&inj.to_string(), &l).unwrap(), inj);
    }

    #[test]
    fn pi_rotation_on_d2_flips_z_logical_deterministically() {
        let l = d3();
        let inj = InjectionSpec {
            target: 1,
            axis: Pauli::X,
            theta_deg: 180.0,
            schedule: InjectionSchedule::BeforeRound(1),
        };
        let shots = sample_memory(&l, Pauli::Z, 3, &NoiseParams::noiseless(), &[inj], 20, 3).unwrap();
        // A2 = {D1,D2,D4,D5}: the only Z check touching D2.
        let touching = l.stabilizers_touching(1, Pauli::Z);
        assert_eq!(touching, vec![1]);
        for s in &shots {
            // D2 lies on Z_L, so X on D2 anticommutes with it.
            assert!(s.truth_x_flip);
            // Without reset the raw bits alternate; s_n = a_n ^ a_{n-1} stays put.
            let mut prev = vec![false; l.num_ancillas()];
            for n in 1..=3 {
                let a = s.round_bits(n);
                for &i in &l.ancillas_of(Pauli::Z) {
                    assert_eq!(a[i] ^ prev[i], touching.contains(&i));
                }
                prev = a.to_vec();
            }
        }
    }
}
