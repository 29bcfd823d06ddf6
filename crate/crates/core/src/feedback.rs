// SPDX-License-Identifier: Apache-2.0

//! Pauli-frame registers and feedback-pulse planning.
//!
//! The frame holds one sign per logical operator. The Z-type decoder sees X
//! errors and toggles `sign_z`; the X-type decoder toggles `sign_x`. A plan
//! restores a negative sign with a physical gate on a representative data
//! qubit at the end of the conjugate logical string (D1 and D9 at d=3) and
//! asks the syndrome module to cancel the defects that gate causes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{Basis, CodeLayout, Pauli, Sign};
use crate::syndrome::{CancellationInstruction, FinalFrame};

/// Frame update cost in cycles (4 ns).
pub const PFU_CYCLES: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeedbackError {
    #[error("final frame holds {found}-type defects but the logical was measured in the {basis} basis")]
    BasisMismatch { basis: Basis, found: Pauli },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PauliFrame {
    pub sign_x: Sign,
    pub sign_z: Sign,
}

impl PauliFrame {
    pub fn sign(&self, logical: Pauli) -> Sign {
        match logical {
            Pauli::X => self.sign_x,
            Pauli::Z => self.sign_z,
        }
    }

    pub fn is_trivial(&self) -> bool {
        !self.sign_x.is_minus() && !self.sign_z.is_minus()
    }
}

/// Toggles `sign_x` on an X-type verdict and `sign_z` on a Z-type one.
pub fn apply_verdict(frame: PauliFrame, verdict_x: bool, verdict_z: bool) -> PauliFrame {
    PauliFrame {
        sign_x: frame.sign_x.toggled_if(verdict_x),
        sign_z: frame.sign_z.toggled_if(verdict_z),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pulse {
    /// Data-qubit index.
    pub target: usize,
    pub gate: Pauli,
    pub time_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackPlan {
    /// Round after whose measurement the pulses are played.
    pub round: usize,
    pub pulses: Vec<Pulse>,
    pub cancellations: Vec<CancellationInstruction>,
}

impl FeedbackPlan {
    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }
}

/// Data qubit that receives the physical gate restoring `logical`: an end of
/// the conjugate logical string, so the gate anticommutes with `logical`.
pub fn pulse_target(layout: &CodeLayout, logical: Pauli) -> usize {
    match logical {
        // X gate on the first qubit of Z_L (D1).
        Pauli::Z => layout.logical_z_support[0],
        // Z gate on the last qubit of X_L (D9).
        Pauli::X => *layout.logical_x_support.last().expect("non-empty logical"),
    }
}

/// Emits a pulse for every negative sign and returns the reset frame.
/// Cancellations address `round + 1`, the first round that sees the pulse
/// (the final readout when `round` is the last round).
pub fn plan_feedback(frame: PauliFrame, layout: &CodeLayout, round: usize, time_ns: u64) -> (FeedbackPlan, PauliFrame) {
    let mut plan = FeedbackPlan {
        round,
        ..FeedbackPlan::default()
    };
    for logical in [Pauli::Z, Pauli::X] {
        if !frame.sign(logical).is_minus() {
            continue;
        }
        let gate = logical.conjugate();
        let target = pulse_target(layout, logical);
        plan.pulses.push(Pulse { target, gate, time_ns });
        // A gate of type P anticommutes with the stabilizers of the other type.
        for stabilizer in layout.stabilizers_touching(target, gate.conjugate()) {
            plan.cancellations.push(CancellationInstruction {
                round: round + 1,
                stabilizer,
            });
        }
    }
    (plan, PauliFrame::default())
}

/// Corrected eigenvalue of the measured logical: raw parity of the data bits
/// on its support, times the tracked sign, toggled by the final-round verdict
/// when a final PFU is performed.
pub fn final_pfu(
    frame: PauliFrame,
    basis: Basis,
    layout: &CodeLayout,
    data_bits: &[bool],
    final_frame: &FinalFrame,
    final_verdict: Option<bool>,
) -> Result<Sign, FeedbackError> {
    if final_frame.kind != basis {
        return Err(FeedbackError::BasisMismatch {
            basis,
            found: final_frame.kind,
        });
    }
    let parity = layout.logical_support(basis).iter().fold(false, |acc, &q| acc ^ data_bits[q]);
    Ok(Sign::from_parity(parity)
        .times(frame.sign(basis))
        .toggled_if(final_verdict.unwrap_or(false)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> CodeLayout {
        CodeLayout::build(3).unwrap()
    }

    fn minus() -> Sign {
        Sign::Minus
    }

    #[test]
    fn verdicts_toggle_signs() {
        let f = apply_verdict(PauliFrame::default(), true, false);
        assert_eq!(f, PauliFrame { sign_x: minus(), sign_z: Sign::Plus });
        assert_eq!(apply_verdict(f, true, false), PauliFrame::default());
        assert_eq!(apply_verdict(f, false, false), f);
    }

    #[test]
    fn sign_z_restored_by_x_on_d1() {
        let l = d3();
        let frame = PauliFrame { sign_x: Sign::Plus, sign_z: minus() };
        let (plan, reset) = plan_feedback(frame, &l, 4, 1000);
        assert!(reset.is_trivial());
        assert_eq!(plan.pulses, vec![Pulse { target: 0, gate: Pauli::X, time_ns: 1000 }]);
        // A2 is global ancilla 1.
        assert_eq!(plan.cancellations, vec![CancellationInstruction { round: 5, stabilizer: 1 }]);
    }

    #[test]
    fn sign_x_restored_by_z_on_d9() {
        let l = d3();
        let frame = PauliFrame { sign_x: minus(), sign_z: Sign::Plus };
        let (plan, _) = plan_feedback(frame, &l, 2, 0);
        assert_eq!(plan.pulses.len(), 1);
        assert_eq!((plan.pulses[0].target, plan.pulses[0].gate), (8, Pauli::Z));
        // Oracle: scan every X-type support for D9.
        let expect: Vec<usize> = l
            .ancilla_qubits
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == Pauli::X && a.support.contains(&8))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(expect, vec![7]);
        let got: Vec<usize> = plan.cancellations.iter().map(|c| c.stabilizer).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn trivial_frame_gives_empty_plan() {
        let (plan, frame) = plan_feedback(PauliFrame::default(), &d3(), 1, 0);
        assert!(plan.is_empty() && plan.cancellations.is_empty());
        assert!(frame.is_trivial());
    }

    #[test]
    fn targets_at_larger_distance_sit_on_both_logicals_ends() {
        let l = CodeLayout::build(5).unwrap();
        let x = pulse_target(&l, Pauli::Z);
        let z = pulse_target(&l, Pauli::X);
        assert_eq!((x, z), (0, 24));
        assert_eq!(l.stabilizers_touching(x, Pauli::Z).len(), 1);
        assert_eq!(l.stabilizers_touching(z, Pauli::X).len(), 1);
    }

    #[test]
    fn final_pfu_sign_composition() {
        let l = d3();
        let fin = FinalFrame {
            kind: Pauli::Z,
            stabilizer_values: vec![false; 4],
            defects: vec![false; 4],
        };
        let data = [false; 9];
        let plus = final_pfu(PauliFrame::default(), Pauli::Z, &l, &data, &fin, None).unwrap();
        assert_eq!(plus, Sign::Plus);
        let f = PauliFrame { sign_x: Sign::Plus, sign_z: minus() };
        assert_eq!(final_pfu(f, Pauli::Z, &l, &data, &fin, None).unwrap(), minus());
        assert_eq!(final_pfu(f, Pauli::Z, &l, &data, &fin, Some(true)).unwrap(), Sign::Plus);
        assert!(matches!(
            final_pfu(f, Pauli::X, &l, &data, &fin, None),
            Err(FeedbackError::BasisMismatch { .. })
        ));
    }

    #[test]
    fn plan_serializes() {
        let frame = PauliFrame { sign_x: minus(), sign_z: minus() };
        let (plan, _) = plan_feedback(frame, &d3(), 3, 42);
        let back: FeedbackPlan = serde_json::from_str(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }
}
