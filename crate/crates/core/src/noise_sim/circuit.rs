// SPDX-License-Identifier: Apache-2.0

//! Memory-experiment circuit and its Pauli-frame executor.
//!
//! The circuit is stored as three op lists: preparation, one stabilizer
//! round (repeated), and the final transversal readout. Every noisy location
//! is an explicit op, so the same executor drives both Monte-Carlo sampling
//! and single-fault probing.

use crate::code_model::{Basis, CodeLayout, Pauli};

use super::NoiseParams;

/// One-qubit Pauli as `(x, z)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliBits {
    pub x: bool,
    pub z: bool,
}

impl PauliBits {
    pub const I: PauliBits = PauliBits { x: false, z: false };
    pub const X: PauliBits = PauliBits { x: true, z: false };
    pub const Y: PauliBits = PauliBits { x: true, z: true };
    pub const Z: PauliBits = PauliBits { x: false, z: true };

    /// Index 0..4 in the order I, X, Y, Z.
    pub fn from_index(i: usize) -> PauliBits {
        [Self::I, Self::X, Self::Y, Self::Z][i & 3]
    }

    pub fn axis(axis: Pauli) -> PauliBits {
        match axis {
            Pauli::X => Self::X,
            Pauli::Z => Self::Z,
        }
    }
}

/// Which noise parameter governs a noisy location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseClass {
    Gate1,
    Gate2,
    Idle,
    Measure,
}

impl NoiseClass {
    pub fn probability(self, noise: &NoiseParams) -> f64 {
        match self {
            NoiseClass::Gate1 => noise.p1,
            NoiseClass::Gate2 => noise.p2,
            NoiseClass::Idle => noise.p_idle,
            NoiseClass::Measure => noise.p_meas,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    H(usize),
    Cz(usize, usize),
    Depolarize1(usize, NoiseClass),
    Depolarize2(usize, usize),
    /// Z measurement of an ancilla without reset; `slot` is the global ancilla index.
    MeasureAncilla { qubit: usize, slot: usize },
    /// Z measurement of a data qubit during the final readout.
    MeasureData { qubit: usize },
    /// Random Z on every qubit after a fresh |0> preparation.
    PrepGauge,
}

/// Segment of the circuit an op belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Prep,
    Round(usize),
    Readout,
}

/// A noisy location: segment plus op index inside that segment's op list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub segment: Segment,
    pub op: usize,
}

#[derive(Debug, Clone)]
pub struct MemoryCircuit {
    pub layout: CodeLayout,
    pub basis: Basis,
    pub rounds: usize,
    pub noise: NoiseParams,
    pub prep: Vec<Op>,
    pub round: Vec<Op>,
    pub readout: Vec<Op>,
}

impl MemoryCircuit {
    pub fn new(layout: &CodeLayout, basis: Basis, rounds: usize, noise: NoiseParams) -> MemoryCircuit {
        let nd = layout.num_data();
        let na = layout.num_ancillas();
        let anc = |i: usize| nd + i;

        let mut prep = vec![Op::PrepGauge];
        if basis == Pauli::X {
            for q in 0..nd {
                prep.push(Op::H(q));
                prep.push(Op::Depolarize1(q, NoiseClass::Gate1));
            }
        }

        let mut round = Vec::new();
        let ancilla_h = |ops: &mut Vec<Op>| {
            for i in 0..na {
                ops.push(Op::H(anc(i)));
                ops.push(Op::Depolarize1(anc(i), NoiseClass::Gate1));
            }
        };
        ancilla_h(&mut round);
        for step in 0..4 {
            let pairs: Vec<(usize, usize, Pauli)> = layout
                .ancilla_qubits
                .iter()
                .enumerate()
                .filter_map(|(i, a)| a.schedule[step].map(|q| (anc(i), q, a.kind)))
                .collect();
            let basis_change = |ops: &mut Vec<Op>| {
                for &(_, q, kind) in &pairs {
                    if kind == Pauli::X {
                        ops.push(Op::H(q));
                        ops.push(Op::Depolarize1(q, NoiseClass::Gate1));
                    }
                }
            };
            basis_change(&mut round);
            for &(a, q, _) in &pairs {
                round.push(Op::Cz(a, q));
                round.push(Op::Depolarize2(a, q));
            }
            basis_change(&mut round);
        }
        ancilla_h(&mut round);
        for i in 0..na {
            round.push(Op::MeasureAncilla { qubit: anc(i), slot: i });
        }
        for q in 0..nd {
            round.push(Op::Depolarize1(q, NoiseClass::Idle));
        }

        let mut readout = Vec::new();
        if basis == Pauli::X {
            for q in 0..nd {
                readout.push(Op::H(q));
                readout.push(Op::Depolarize1(q, NoiseClass::Gate1));
            }
        }
        for q in 0..nd {
            readout.push(Op::MeasureData { qubit: q });
        }

        MemoryCircuit {
            layout: layout.clone(),
            basis,
            rounds,
            noise,
            prep,
            round,
            readout,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_data() + self.layout.num_ancillas()
    }

    pub fn ops(&self, segment: Segment) -> &[Op] {
        match segment {
            Segment::Prep => &self.prep,
            Segment::Round(_) => &self.round,
            Segment::Readout => &self.readout,
        }
    }

    /// Every segment in execution order.
    pub fn segments(&self) -> impl Iterator<Item = Segment> {
        std::iter::once(Segment::Prep)
            .chain((1..=self.rounds).map(Segment::Round))
            .chain(std::iter::once(Segment::Readout))
    }
}

/// Decides what happens at each noisy location.
pub trait FaultSource {
    fn single(&mut self, loc: Location, class: NoiseClass) -> PauliBits;
    fn pair(&mut self, loc: Location) -> (PauliBits, PauliBits);
    fn measurement_flip(&mut self, loc: Location) -> bool;
    /// Random gauge bit; `false` in deterministic probes.
    fn gauge(&mut self) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl Frame {
    pub fn new(n: usize) -> Frame {
        Frame {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    pub fn apply(&mut self, q: usize, p: PauliBits) {
        self.x[q] ^= p.x;
        self.z[q] ^= p.z;
    }

    fn h(&mut self, q: usize) {
        std::mem::swap(&mut self.x[q], &mut self.z[q]);
    }

    fn cz(&mut self, a: usize, b: usize) {
        self.z[a] ^= self.x[b];
        self.z[b] ^= self.x[a];
    }
}

/// Two frames evolved in lock-step: `full` (errors plus random gauge, drives
/// outcomes) and `error` (physical errors and corrections only, drives labels).
#[derive(Debug, Clone)]
pub struct FramePair {
    pub full: Frame,
    pub error: Frame,
}

impl FramePair {
    pub fn new(n: usize) -> FramePair {
        FramePair {
            full: Frame::new(n),
            error: Frame::new(n),
        }
    }

    pub fn apply_error(&mut self, q: usize, p: PauliBits) {
        self.full.apply(q, p);
        self.error.apply(q, p);
    }
}

/// Outcomes produced while executing one segment.
#[derive(Debug, Default, Clone)]
pub struct SegmentOutcome {
    /// `(slot, flipped)` per ancilla measurement.
    pub ancilla: Vec<(usize, bool)>,
    /// `(qubit, flipped, classical_flip)` per data measurement.
    pub data: Vec<(usize, bool, bool)>,
}

/// Executes one segment, returning measurement flips relative to the
/// noiseless all-zero reference.
pub fn execute_segment<S: FaultSource>(
    circuit: &MemoryCircuit,
    segment: Segment,
    frames: &mut FramePair,
    source: &mut S,
) -> SegmentOutcome {
    let mut out = SegmentOutcome::default();
    for (i, op) in circuit.ops(segment).iter().enumerate() {
        let loc = Location { segment, op: i };
        match *op {
            Op::H(q) => {
                frames.full.h(q);
                frames.error.h(q);
            }
            Op::Cz(a, b) => {
                frames.full.cz(a, b);
                frames.error.cz(a, b);
            }
            Op::Depolarize1(q, class) => {
                let p = source.single(loc, class);
                frames.apply_error(q, p);
            }
            Op::Depolarize2(a, b) => {
                let (pa, pb) = source.pair(loc);
                frames.apply_error(a, pa);
                frames.apply_error(b, pb);
            }
            Op::MeasureAncilla { qubit, slot } => {
                let flip = source.measurement_flip(loc);
                out.ancilla.push((slot, frames.full.x[qubit] ^ flip));
                if source.gauge() {
                    frames.full.z[qubit] ^= true;
                }
            }
            Op::MeasureData { qubit } => {
                let flip = source.measurement_flip(loc);
                out.data.push((qubit, frames.full.x[qubit] ^ flip, flip));
            }
            Op::PrepGauge => {
                for q in 0..frames.full.z.len() {
                    if source.gauge() {
                        frames.full.z[q] ^= true;
                    }
                }
            }
        }
    }
    out
}

/// A single elementary fault at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementaryFault {
    pub location: Location,
    pub kind: FaultKind,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Single(PauliBits),
    Pair(PauliBits, PauliBits),
    MeasurementFlip,
}

impl MemoryCircuit {
    /// Enumerates every non-identity Pauli (or flip) at every noisy location
    /// with non-zero probability.
    pub fn elementary_faults(&self) -> Vec<ElementaryFault> {
        let mut faults = Vec::new();
        for segment in self.segments() {
            for (i, op) in self.ops(segment).iter().enumerate() {
                let location = Location { segment, op: i };
                match *op {
                    Op::Depolarize1(_, class) => {
                        let p = class.probability(&self.noise);
                        if p > 0.0 {
                            for k in 1..4 {
                                faults.push(ElementaryFault {
                                    location,
                                    kind: FaultKind::Single(PauliBits::from_index(k)),
                                    probability: p / 3.0,
                                });
                            }
                        }
                    }
                    Op::Depolarize2(..) => {
                        let p = self.noise.p2;
                        if p > 0.0 {
                            for k in 1..16 {
                                faults.push(ElementaryFault {
                                    location,
                                    kind: FaultKind::Pair(PauliBits::from_index(k >> 2), PauliBits::from_index(k)),
                                    probability: p / 15.0,
                                });
                            }
                        }
                    }
                    Op::MeasureAncilla { .. } | Op::MeasureData { .. }
                        if self.noise.p_meas > 0.0 => {
                            faults.push(ElementaryFault {
                                location,
                                kind: FaultKind::MeasurementFlip,
                                probability: self.noise.p_meas,
                            });
                        }
                    _ => {}
                }
            }
        }
        faults
    }
}

/// Fault source that fires exactly one elementary fault and is otherwise silent.
pub struct SingleFault(pub ElementaryFault);

impl FaultSource for SingleFault {
    fn single(&mut self, loc: Location, _class: NoiseClass) -> PauliBits {
        match self.0.kind {
            FaultKind::Single(p) if loc == self.0.location => p,
            _ => PauliBits::I,
        }
    }

    fn pair(&mut self, loc: Location) -> (PauliBits, PauliBits) {
        match self.0.kind {
            FaultKind::Pair(a, b) if loc == self.0.location => (a, b),
            _ => (PauliBits::I, PauliBits::I),
        }
    }

    fn measurement_flip(&mut self, loc: Location) -> bool {
        self.0.kind == FaultKind::MeasurementFlip && loc == self.0.location
    }

    fn gauge(&mut self) -> bool {
        false
    }
}
