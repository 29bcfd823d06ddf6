// SPDX-License-Identifier: Apache-2.0

//! Rotated surface-code layout.
//!
//! Data qubits sit on a `d x d` grid numbered row-major (`D1` top-left).
//! Ancillas sit at plaquette centres; bulk plaquette `(r, c)` is Z-type when
//! `r + c` is even. Weight-2 X checks live on the top/bottom boundaries and
//! weight-2 Z checks on the left/right boundaries. Ancillas are numbered by
//! the row-major position of their plaquette centre, which at `d = 3` gives
//! Z-type `A2, A4, A5, A7` and X-type `A1, A3, A6, A8`.
//!
//! `Z_L` is the top row and `X_L` the right column; they meet on `D_d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pauli axis used for stabilizer types, measurement bases and physical gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Z,
}

/// Stabilizer type (X-type checks detect Z errors and vice versa).
pub type StabilizerType = Pauli;
/// Preparation / logical-measurement basis.
pub type Basis = Pauli;

impl Pauli {
    /// The other axis.
    pub fn conjugate(self) -> Pauli {
        match self {
            Pauli::X => Pauli::Z,
            Pauli::Z => Pauli::X,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Pauli::X => 0,
            Pauli::Z => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Pauli> {
        match tag {
            0 => Some(Pauli::X),
            1 => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pauli::X => write!(f, "X"),
            Pauli::Z => write!(f, "Z"),
        }
    }
}

impl FromStr for Pauli {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X" | "x" => Ok(Pauli::X),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(LayoutError::UnknownPauli(other.to_string())),
        }
    }
}

/// Logical eigenvalue / Pauli-frame sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn from_parity(odd: bool) -> Sign {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn flipped(self) -> Sign {
        Sign::from_parity(!self.is_minus())
    }

    /// Toggles when `flip` is set.
    pub fn toggled_if(self, flip: bool) -> Sign {
        Sign::from_parity(self.is_minus() ^ flip)
    }

    pub fn times(self, other: Sign) -> Sign {
        Sign::from_parity(self.is_minus() ^ other.is_minus())
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("code distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),
    #[error("unknown Pauli axis {0:?}")]
    UnknownPauli(String),
    #[error("unknown data qubit {0:?}")]
    UnknownDataQubit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataQubit {
    pub label: String,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ancilla {
    pub label: String,
    pub kind: StabilizerType,
    /// Plaquette coordinate; the ancilla sits at `(row + 0.5, col + 0.5)`.
    pub row: i32,
    pub col: i32,
    /// Data-qubit indices of the stabilizer support, ascending.
    pub support: Vec<usize>,
    /// Data qubit touched in each of the four CZ layers, if any.
    pub schedule: [Option<usize>; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLayout {
    pub distance: usize,
    pub data_qubits: Vec<DataQubit>,
    pub ancilla_qubits: Vec<Ancilla>,
    pub logical_z_support: Vec<usize>,
    pub logical_x_support: Vec<usize>,
}

impl CodeLayout {
    /// Builds the rotated layout for an odd distance `d >= 3`.
    pub fn build(distance: usize) -> Result<CodeLayout, LayoutError> {
        if distance < 3 || distance.is_multiple_of(2) {
            return Err(LayoutError::InvalidDistance(distance));
        }
        let d = distance as i32;
        let data_qubits = (0..distance * distance)
            .map(|i| DataQubit {
                label: format!("D{}", i + 1),
                row: i / distance,
                col: i % distance,
            })
            .collect();

        let mut ancilla_qubits = Vec::with_capacity(distance * distance - 1);
        for r in -1..d {
            for c in -1..d {
                let Some(kind) = plaquette_kind(r, c, d) else {
                    continue;
                };
                let corner = |dr: i32, dc: i32| -> Option<usize> {
                    let (qr, qc) = (r + dr, c + dc);
                    (qr >= 0 && qr < d && qc >= 0 && qc < d).then(|| (qr * d + qc) as usize)
                };
                let (nw, ne, sw, se) = (corner(0, 0), corner(0, 1), corner(1, 0), corner(1, 1));
                // The last two CZs of a check leave a two-qubit hook: vertical
                // for Z checks (across the Z_L row), horizontal for X checks
                // (across the X_L column), so a hook never shortens a logical.
                let schedule = match kind {
                    Pauli::Z => [nw, sw, ne, se],
                    Pauli::X => [nw, ne, sw, se],
                };
                let mut support: Vec<usize> = schedule.iter().flatten().copied().collect();
                support.sort_unstable();
                ancilla_qubits.push(Ancilla {
                    label: format!("A{}", ancilla_qubits.len() + 1),
                    kind,
                    row: r,
                    col: c,
                    support,
                    schedule,
                });
            }
        }

        let logical_z_support = (0..distance).collect();
        let logical_x_support = (0..distance).map(|r| r * distance + distance - 1).collect();
        Ok(CodeLayout {
            distance,
            data_qubits,
            ancilla_qubits,
            logical_z_support,
            logical_x_support,
        })
    }

    pub fn num_data(&self) -> usize {
        self.data_qubits.len()
    }

    pub fn num_ancillas(&self) -> usize {
        self.ancilla_qubits.len()
    }

    /// Global ancilla indices of the given type, in label order.
    pub fn ancillas_of(&self, kind: StabilizerType) -> Vec<usize> {
        self.ancilla_qubits
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of stabilizers of one type, `(d^2 - 1) / 2`.
    pub fn stabilizers_per_type(&self) -> usize {
        (self.distance * self.distance - 1) / 2
    }

    /// Position of a global ancilla index within its type's ordering.
    pub fn local_index(&self, ancilla: usize) -> usize {
        let kind = self.ancilla_qubits[ancilla].kind;
        self.ancilla_qubits[..ancilla].iter().filter(|a| a.kind == kind).count()
    }

    pub fn logical_support(&self, logical: Pauli) -> &[usize] {
        match logical {
            Pauli::Z => &self.logical_z_support,
            Pauli::X => &self.logical_x_support,
        }
    }

    /// Stabilizers (global indices) of `kind` whose support contains `data`.
    pub fn stabilizers_touching(&self, data: usize, kind: StabilizerType) -> Vec<usize> {
        self.ancilla_qubits
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == kind && a.support.contains(&data))
            .map(|(i, _)| i)
            .collect()
    }

    /// Parses `D<k>` (1-based) into a data-qubit index.
    pub fn data_index(&self, label: &str) -> Result<usize, LayoutError> {
        let err = || LayoutError::UnknownDataQubit(label.to_string());
        let digits = label.trim().strip_prefix(['D', 'd']).ok_or_else(err)?;
        let k: usize = digits.parse().map_err(|_| err())?;
        if k == 0 || k > self.num_data() {
            return Err(err());
        }
        Ok(k - 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}

/// Type of the check centred at plaquette `(r, c)`, or `None` if no check lives there.
fn plaquette_kind(r: i32, c: i32, d: i32) -> Option<StabilizerType> {
    let bulk_r = (0..d - 1).contains(&r);
    let bulk_c = (0..d - 1).contains(&c);
    let bulk_kind = |r: i32, c: i32| if (r + c) % 2 == 0 { Pauli::Z } else { Pauli::X };
    match (bulk_r, bulk_c) {
        (true, true) => Some(bulk_kind(r, c)),
        // Top/bottom boundary: X check where the adjacent bulk plaquette is Z.
        (false, true) => {
            let inner = if r < 0 { 0 } else { d - 2 };
            (bulk_kind(inner, c) == Pauli::Z).then_some(Pauli::X)
        }
        // Left/right boundary: Z check where the adjacent bulk plaquette is X.
        (true, false) => {
            let inner = if c < 0 { 0 } else { d - 2 };
            (bulk_kind(r, inner) == Pauli::X).then_some(Pauli::Z)
        }
        (false, false) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(layout: &CodeLayout, support: &[usize]) -> Vec<String> {
        support.iter().map(|&q| layout.data_qubits[q].label.clone()).collect()
    }

    #[test]
    fn distance_three_matches_device_labels() {
        let l = CodeLayout::build(3).unwrap();
        assert_eq!(l.num_data(), 9);
        assert_eq!(l.num_ancillas(), 8);
        let z: Vec<_> = l.ancillas_of(Pauli::Z).iter().map(|&i| l.ancilla_qubits[i].label.clone()).collect();
        let x: Vec<_> = l.ancillas_of(Pauli::X).iter().map(|&i| l.ancilla_qubits[i].label.clone()).collect();
        assert_eq!(z, ["A2", "A4", "A5", "A7"]);
        assert_eq!(x, ["A1", "A3", "A6", "A8"]);
        assert_eq!(labels(&l, &l.ancilla_qubits[1].support), ["D1", "D2", "D4", "D5"]);
        assert_eq!(labels(&l, &l.ancilla_qubits[3].support), ["D3", "D6"]);
        assert_eq!(labels(&l, &l.ancilla_qubits[6].support), ["D5", "D6", "D8", "D9"]);
        assert_eq!(labels(&l, &l.logical_z_support), ["D1", "D2", "D3"]);
        assert_eq!(labels(&l, &l.logical_x_support), ["D3", "D6", "D9"]);
    }

    #[test]
    fn rejects_bad_distance() {
        for d in [0, 1, 2, 4, 6] {
            assert_eq!(CodeLayout::build(d), Err(LayoutError::InvalidDistance(d)));
        }
    }

    #[test]
    fn distance_five_counts() {
        let l = CodeLayout::build(5).unwrap();
        assert_eq!(l.num_data(), 25);
        assert_eq!(l.ancillas_of(Pauli::Z).len(), 12);
        assert_eq!(l.ancillas_of(Pauli::X).len(), 12);
    }

    #[test]
    fn data_label_parsing() {
        let l = CodeLayout::build(3).unwrap();
        assert_eq!(l.data_index("D2").unwrap(), 1);
        assert_eq!(l.data_index("d9").unwrap(), 8);
        assert!(l.data_index("D10").is_err());
        assert!(l.data_index("A2").is_err());
        assert!(l.data_index("D0").is_err());
    }

    #[test]
    fn cz_layers_touch_each_data_qubit_once() {
        for d in [3, 5, 7] {
            let l = CodeLayout::build(d).unwrap();
            for step in 0..4 {
                let mut seen = vec![false; l.num_data()];
                for a in &l.ancilla_qubits {
                    if let Some(q) = a.schedule[step] {
                        assert!(!seen[q], "d={d} step={step} reuses D{}", q + 1);
                        seen[q] = true;
                    }
                }
            }
        }
    }
}
