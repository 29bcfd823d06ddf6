// SPDX-License-Identifier: Apache-2.0

//! Syndrome preprocessing: ancilla outcomes to defect streams.
//!
//! Without ancilla reset the stabilizer value is the change of the ancilla
//! outcome, `s_n = a_n ^ a_{n-1}`, and the defect is the change of the
//! stabilizer value, `x_n = s_n ^ s_{n-1}`, with `a_0 = 0`. For the type
//! matching the preparation basis `s_0 = 0`; for the complementary type
//! `s_0 = s_1`, so its first-round defects vanish. The final transversal
//! readout closes the measured type with `x_m = s_n ^ s_m`, where `s_m` is
//! the data-bit parity over the stabilizer support.
//!
//! A frame keeps only `(a_{n-1}, s_{n-1})`, one pair of bits per stabilizer.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{Basis, CodeLayout, Pauli, StabilizerType};
use crate::noise_sim::dataset::{pack_bits, write_header, DatasetError, DatasetHeader, DEFECT_MAGIC};
use crate::noise_sim::ShotRecord;

/// Clock cycles spent per preprocessing step (20 ns at 250 MHz).
pub const SYNDROME_CYCLES: u32 = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyndromeError {
    #[error("expected {expected} ancilla bits, got {found}")]
    Width { expected: usize, found: usize },
    #[error("round {found} does not follow round {previous}")]
    RoundDiscontinuity { previous: usize, found: usize },
    #[error("cancellation for A{} targets round {target} while processing round {round}", .stabilizer + 1)]
    StaleCancellation { stabilizer: usize, target: usize, round: usize },
    #[error("{basis}-basis readout cannot finalize a {kind}-type frame")]
    BasisMismatch { basis: Basis, kind: StabilizerType },
}

/// Pending `XOR 1` on the defect of one stabilizer in one round, issued when
/// a feedback pulse anticommutes with that stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CancellationInstruction {
    /// Round whose defect is corrected; `rounds + 1` addresses the final readout.
    pub round: usize,
    /// Global ancilla index.
    pub stabilizer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeFrame {
    kind: StabilizerType,
    round: usize,
    /// Global ancilla indices of this type, in label order.
    ancillas: Vec<usize>,
    prev_a: Vec<bool>,
    stabilizer_values: Vec<bool>,
    defects: Vec<bool>,
}

impl SyndromeFrame {
    fn first_round(kind: StabilizerType, ancillas: Vec<usize>, a1: Vec<bool>, basis: Basis) -> SyndromeFrame {
        // a_0 = 0 so s_1 = a_1.
        let s1 = a1.clone();
        let defects = if kind == basis { s1.clone() } else { vec![false; s1.len()] };
        SyndromeFrame {
            kind,
            round: 1,
            ancillas,
            prev_a: a1,
            stabilizer_values: s1,
            defects,
        }
    }

    pub fn kind(&self) -> StabilizerType {
        self.kind
    }

    /// Index `n` of the last processed round.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn ancillas(&self) -> &[usize] {
        &self.ancillas
    }

    /// `s_n` per stabilizer.
    pub fn stabilizer_values(&self) -> &[bool] {
        &self.stabilizer_values
    }

    /// `x_n` per stabilizer.
    pub fn defects(&self) -> &[bool] {
        &self.defects
    }

    fn local(&self, stabilizer: usize) -> Option<usize> {
        self.ancillas.iter().position(|&a| a == stabilizer)
    }

    /// Processes round `round` given this type's ancilla outcomes in label
    /// order. Pending cancellations for other stabilizer types are ignored;
    /// ones addressed to another round are rejected. Returns the cycle cost.
    pub fn step(&mut self, round: usize, bits: &[bool], pending: &[CancellationInstruction]) -> Result<u32, SyndromeError> {
        if round != self.round + 1 {
            return Err(SyndromeError::RoundDiscontinuity {
                previous: self.round,
                found: round,
            });
        }
        if bits.len() != self.ancillas.len() {
            return Err(SyndromeError::Width {
                expected: self.ancillas.len(),
                found: bits.len(),
            });
        }
        let cancel = self.cancellation_mask(round, pending)?;
        for i in 0..bits.len() {
            let s = bits[i] ^ self.prev_a[i];
            self.defects[i] = s ^ self.stabilizer_values[i] ^ cancel[i];
            self.stabilizer_values[i] = s;
            self.prev_a[i] = bits[i];
        }
        self.round = round;
        Ok(SYNDROME_CYCLES)
    }

    fn cancellation_mask(&self, round: usize, pending: &[CancellationInstruction]) -> Result<Vec<bool>, SyndromeError> {
        let mut mask = vec![false; self.ancillas.len()];
        for c in pending {
            let Some(i) = self.local(c.stabilizer) else { continue };
            if c.round != round {
                return Err(SyndromeError::StaleCancellation {
                    stabilizer: c.stabilizer,
                    target: c.round,
                    round,
                });
            }
            mask[i] ^= true;
        }
        Ok(mask)
    }

    /// Closes the frame with the transversal data readout.
    pub fn finalize(
        &self,
        layout: &CodeLayout,
        data_bits: &[bool],
        basis: Basis,
        pending: &[CancellationInstruction],
    ) -> Result<FinalFrame, SyndromeError> {
        if basis != self.kind {
            return Err(SyndromeError::BasisMismatch { basis, kind: self.kind });
        }
        if data_bits.len() != layout.num_data() {
            return Err(SyndromeError::Width {
                expected: layout.num_data(),
                found: data_bits.len(),
            });
        }
        let cancel = self.cancellation_mask(self.round + 1, pending)?;
        let s_m: Vec<bool> = self
            .ancillas
            .iter()
            .map(|&a| layout.ancilla_qubits[a].support.iter().fold(false, |acc, &q| acc ^ data_bits[q]))
            .collect();
        let x_m = s_m
            .iter()
            .zip(&self.stabilizer_values)
            .zip(&cancel)
            .map(|((sm, sn), c)| sm ^ sn ^ c)
            .collect();
        Ok(FinalFrame {
            kind: self.kind,
            stabilizer_values: s_m,
            defects: x_m,
        })
    }
}

/// Stabilizers and defects generated by the final data readout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalFrame {
    pub kind: StabilizerType,
    /// `s_m` per stabilizer of the measured type.
    pub stabilizer_values: Vec<bool>,
    /// `x_m` per stabilizer of the measured type.
    pub defects: Vec<bool>,
}

fn select(bits: &[bool], ancillas: &[usize]) -> Vec<bool> {
    ancillas.iter().map(|&a| bits[a]).collect()
}

/// Builds the Z-type and X-type frames from the first round's outcomes
/// (all ancillas, global order).
pub fn init_frames(
    layout: &CodeLayout,
    basis: Basis,
    first_round_bits: &[bool],
) -> Result<(SyndromeFrame, SyndromeFrame), SyndromeError> {
    if first_round_bits.len() != layout.num_ancillas() {
        return Err(SyndromeError::Width {
            expected: layout.num_ancillas(),
            found: first_round_bits.len(),
        });
    }
    let make = |kind| {
        let anc = layout.ancillas_of(kind);
        let a1 = select(first_round_bits, &anc);
        SyndromeFrame::first_round(kind, anc, a1, basis)
    };
    Ok((make(Pauli::Z), make(Pauli::X)))
}

/// Both frames of one shot, fed with whole-device ancilla rounds.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    basis: Basis,
    frames: Option<(SyndromeFrame, SyndromeFrame)>,
}

impl Preprocessor {
    pub fn new(basis: Basis) -> Preprocessor {
        Preprocessor { basis, frames: None }
    }

    /// Processes the next round. Returns the frames `(z, x)`.
    pub fn push_round(
        &mut self,
        layout: &CodeLayout,
        bits: &[bool],
        pending: &[CancellationInstruction],
    ) -> Result<(&SyndromeFrame, &SyndromeFrame), SyndromeError> {
        match &mut self.frames {
            None => {
                if let Some(c) = pending.first() {
                    return Err(SyndromeError::StaleCancellation {
                        stabilizer: c.stabilizer,
                        target: c.round,
                        round: 1,
                    });
                }
                self.frames = Some(init_frames(layout, self.basis, bits)?);
            }
            Some((z, x)) => {
                if bits.len() != layout.num_ancillas() {
                    return Err(SyndromeError::Width {
                        expected: layout.num_ancillas(),
                        found: bits.len(),
                    });
                }
                let round = z.round() + 1;
                let zb = select(bits, z.ancillas());
                let xb = select(bits, x.ancillas());
                z.step(round, &zb, pending)?;
                x.step(round, &xb, pending)?;
            }
        }
        let (z, x) = self.frames.as_ref().expect("initialised above");
        Ok((z, x))
    }

    pub fn frame(&self, kind: StabilizerType) -> Option<&SyndromeFrame> {
        self.frames.as_ref().map(|(z, x)| if kind == Pauli::Z { z } else { x })
    }

    pub fn finalize(
        &self,
        layout: &CodeLayout,
        data_bits: &[bool],
        pending: &[CancellationInstruction],
    ) -> Result<FinalFrame, SyndromeError> {
        let frame = self.frame(self.basis).expect("finalize after at least one round");
        frame.finalize(layout, data_bits, self.basis, pending)
    }
}

/// Full defect history of one shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotDefects {
    /// Z-type defects per round (`rounds x (d^2-1)/2`).
    pub z: Vec<Vec<bool>>,
    /// X-type defects per round.
    pub x: Vec<Vec<bool>>,
    /// Final-readout defects for the measured type.
    pub final_frame: FinalFrame,
}

impl ShotDefects {
    pub fn rows(&self, kind: StabilizerType) -> &[Vec<bool>] {
        match kind {
            Pauli::Z => &self.z,
            Pauli::X => &self.x,
        }
    }

    pub fn total(&self, kind: StabilizerType) -> usize {
        let rows: usize = self.rows(kind).iter().flatten().filter(|&&b| b).count();
        let fin = if self.final_frame.kind == kind {
            self.final_frame.defects.iter().filter(|&&b| b).count()
        } else {
            0
        };
        rows + fin
    }
}

/// Runs the preprocessing over a recorded shot (no feedback, no cancellations).
pub fn compute_defects(layout: &CodeLayout, record: &ShotRecord) -> Result<ShotDefects, SyndromeError> {
    let mut pre = Preprocessor::new(record.basis);
    let mut z = Vec::with_capacity(record.rounds);
    let mut x = Vec::with_capacity(record.rounds);
    for n in 1..=record.rounds {
        let (fz, fx) = pre.push_round(layout, record.round_bits(n), &[])?;
        z.push(fz.defects().to_vec());
        x.push(fx.defects().to_vec());
    }
    let final_frame = pre.finalize(layout, &record.data_bits, &[])?;
    Ok(ShotDefects { z, x, final_frame })
}

/// Writes the `QECDF1` defect companion file: the dataset header followed,
/// per shot, by Z-type defect rows, X-type defect rows, final-readout
/// defects and the two truth bits, each section bit-packed and byte-padded.
pub fn export_defects(
    layout: &CodeLayout,
    header: &DatasetHeader,
    records: &[ShotRecord],
    path: impl AsRef<Path>,
) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, DEFECT_MAGIC, &DatasetHeader { shots: records.len() as u64, ..header.clone() })?;
    let mut buf = Vec::new();
    for (index, r) in records.iter().enumerate() {
        let defects = compute_defects(layout, r).map_err(|e| DatasetError::Shape {
            index: index as u64,
            rounds: r.rounds,
            ancillas: r.ancilla_bits.len(),
            data: r.data_bits.len(),
            expected: e.to_string(),
        })?;
        buf.clear();
        pack_bits(&defects.z.concat(), &mut buf);
        pack_bits(&defects.x.concat(), &mut buf);
        pack_bits(&defects.final_frame.defects, &mut buf);
        buf.push(r.truth_x_flip as u8 | (r.truth_z_flip as u8) << 1);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> CodeLayout {
        CodeLayout::build(3).unwrap()
    }

    fn bits_with(ones: &[usize], n: usize) -> Vec<bool> {
        (0..n).map(|i| ones.contains(&i)).collect()
    }

    #[test]
    fn zero_in_zero_out() {
        let l = d3();
        let (z, x) = init_frames(&l, Pauli::Z, &[false; 8]).unwrap();
        assert!(z.defects().iter().chain(x.defects()).all(|&b| !b));
    }

    #[test]
    fn first_round_rules_z_basis() {
        let l = d3();
        // A2 is global index 1, the first Z-type stabilizer.
        let (z, x) = init_frames(&l, Pauli::Z, &bits_with(&[1], 8)).unwrap();
        assert_eq!(z.defects(), &[true, false, false, false]);
        assert!(x.defects().iter().all(|&b| !b));
        // X-type outcomes never produce first-round defects in the Z basis.
        let (_, x) = init_frames(&l, Pauli::Z, &bits_with(&[0, 2, 5, 7], 8)).unwrap();
        assert!(x.defects().iter().all(|&b| !b));
    }

    #[test]
    fn first_round_rules_x_basis() {
        let l = d3();
        let (z, x) = init_frames(&l, Pauli::X, &bits_with(&[0], 8)).unwrap();
        assert_eq!(x.defects(), &[true, false, false, false]);
        assert!(z.defects().iter().all(|&b| !b));
    }

    #[test]
    fn constant_bits_give_no_defects() {
        let l = d3();
        let a = bits_with(&[0, 3, 6], 8);
        let mut pre = Preprocessor::new(Pauli::X);
        pre.push_round(&l, &a, &[]).unwrap();
        // Constant stabilizer value 1 on a non-reset ancilla alternates a_n.
        let mut prev = a.clone();
        for _ in 0..4 {
            let next: Vec<bool> = prev.iter().zip(&a).map(|(p, s)| p ^ s).collect();
            let (z, x) = pre.push_round(&l, &next, &[]).unwrap();
            assert!(z.defects().iter().chain(x.defects()).all(|&b| !b));
            prev = next;
        }
    }

    #[test]
    fn cancellation_removes_feedback_defect() {
        let l = d3();
        let mut pre = Preprocessor::new(Pauli::Z);
        pre.push_round(&l, &[false; 8], &[]).unwrap();
        // X on D1 after round 1 flips A2 from round 2 on.
        let a2 = bits_with(&[1], 8);
        let (z, _) = pre.push_round(&l, &a2, &[]).unwrap();
        assert!(z.defects()[0], "raw defect on A2");

        let mut pre = Preprocessor::new(Pauli::Z);
        pre.push_round(&l, &[false; 8], &[]).unwrap();
        let cancel = [CancellationInstruction { round: 2, stabilizer: 1 }];
        let (z, _) = pre.push_round(&l, &a2, &cancel).unwrap();
        assert!(z.defects().iter().all(|&b| !b));
        // a_3 = a_2 ^ s_3 = 1 ^ 1 = 0: the flipped stabilizer stays flipped quietly.
        let (z, _) = pre.push_round(&l, &[false; 8], &[]).unwrap();
        assert!(z.defects().iter().all(|&b| !b));
    }

    #[test]
    fn errors() {
        let l = d3();
        let (mut z, x) = init_frames(&l, Pauli::Z, &[false; 8]).unwrap();
        assert_eq!(
            z.step(3, &[false; 4], &[]),
            Err(SyndromeError::RoundDiscontinuity { previous: 1, found: 3 })
        );
        assert_eq!(z.step(2, &[false; 3], &[]), Err(SyndromeError::Width { expected: 4, found: 3 }));
        let stale = [CancellationInstruction { round: 5, stabilizer: 1 }];
        assert!(matches!(z.step(2, &[false; 4], &stale), Err(SyndromeError::StaleCancellation { .. })));
        assert!(matches!(
            x.finalize(&l, &[false; 9], Pauli::Z, &[]),
            Err(SyndromeError::BasisMismatch { .. })
        ));
        assert!(init_frames(&l, Pauli::Z, &[false; 7]).is_err());
    }

    #[test]
    fn final_frame_a2_rule() {
        let l = d3();
        let (z, _) = init_frames(&l, Pauli::Z, &[false; 8]).unwrap();
        let d = [true, true, false, false, false, false, false, false, false];
        let f = z.finalize(&l, &d, Pauli::Z, &[]).unwrap();
        // s_m^2 = d1 ^ d2 ^ d4 ^ d5 = 0.
        assert!(!f.stabilizer_values[0]);
        assert!(!f.defects[0]);

        let mut d4 = [false; 9];
        d4[3] = true;
        let f = z.finalize(&l, &d4, Pauli::Z, &[]).unwrap();
        let expect: Vec<bool> = l
            .ancillas_of(Pauli::Z)
            .iter()
            .map(|&a| l.ancilla_qubits[a].support.contains(&3))
            .collect();
        assert_eq!(f.defects, expect);
        assert_eq!(expect, [true, false, true, false]);
    }

    #[test]
    fn latency_is_five_cycles() {
        let l = d3();
        let (mut z, _) = init_frames(&l, Pauli::Z, &[false; 8]).unwrap();
        for n in 2..6 {
            assert_eq!(z.step(n, &[false; 4], &[]).unwrap(), 5);
        }
    }
}
