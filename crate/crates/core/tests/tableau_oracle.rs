// SPDX-License-Identifier: Apache-2.0

//! Cross-checks the Pauli-frame simulator against a full stabilizer tableau
//! that runs the same gate list with genuine random measurement collapse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtqec::code_model::{Basis, CodeLayout, Pauli};
use rtqec::noise_sim::circuit::{ElementaryFault, FaultKind, Location, MemoryCircuit, Op, PauliBits};
use rtqec::noise_sim::{probe_fault, NoiseParams, ShotRecord};
use rtqec::syndrome::compute_defects;

/// Aaronson-Gottesman tableau: rows `0..n` destabilizers, `n..2n`
/// stabilizers, row `2n` scratch.
struct Tableau {
    n: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

impl Tableau {
    fn new(n: usize) -> Tableau {
        let mut x = vec![vec![false; n]; 2 * n + 1];
        let mut z = vec![vec![false; n]; 2 * n + 1];
        for i in 0..n {
            x[i][i] = true;
            z[n + i][i] = true;
        }
        Tableau {
            n,
            x,
            z,
            r: vec![false; 2 * n + 1],
        }
    }

    fn h(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] & self.z[i][a];
            std::mem::swap(&mut self.x[i][a], &mut self.z[i][a]);
        }
    }

    fn cnot(&mut self, a: usize, b: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] & self.z[i][b] & !(self.x[i][b] ^ self.z[i][a]);
            self.x[i][b] ^= self.x[i][a];
            self.z[i][a] ^= self.z[i][b];
        }
    }

    fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cnot(a, b);
        self.h(b);
    }

    fn pauli(&mut self, q: usize, p: PauliBits) {
        for i in 0..2 * self.n {
            self.r[i] ^= (p.x & self.z[i][q]) ^ (p.z & self.x[i][q]);
        }
    }

    fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
        let (x2, z2) = (i32::from(x2), i32::from(z2));
        match (x1, z1) {
            (false, false) => 0,
            (true, true) => z2 - x2,
            (true, false) => z2 * (2 * x2 - 1),
            (false, true) => x2 * (1 - 2 * z2),
        }
    }

    fn rowsum(&mut self, h: usize, i: usize) {
        let mut total = 2 * i32::from(self.r[h]) + 2 * i32::from(self.r[i]);
        for j in 0..self.n {
            total += Self::g(self.x[i][j], self.z[i][j], self.x[h][j], self.z[h][j]);
        }
        self.r[h] = total.rem_euclid(4) == 2;
        for j in 0..self.n {
            self.x[h][j] ^= self.x[i][j];
            self.z[h][j] ^= self.z[i][j];
        }
    }

    fn measure(&mut self, a: usize, rng: &mut ChaCha8Rng) -> bool {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&p| self.x[p][a]) {
            for i in 0..2 * n {
                if i != p && self.x[i][a] {
                    self.rowsum(i, p);
                }
            }
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = vec![false; n];
            self.z[p] = vec![false; n];
            self.z[p][a] = true;
            let out = rng.gen();
            self.r[p] = out;
            out
        } else {
            let s = 2 * n;
            self.x[s] = vec![false; n];
            self.z[s] = vec![false; n];
            self.r[s] = false;
            for i in 0..n {
                if self.x[i][a] {
                    self.rowsum(s, i + n);
                }
            }
            self.r[s]
        }
    }
}

/// Runs the circuit on the tableau with at most one fault.
fn run(circuit: &MemoryCircuit, fault: Option<ElementaryFault>, seed: u64) -> ShotRecord {
    let nq = circuit.num_qubits();
    let na = circuit.layout.num_ancillas();
    let mut t = Tableau::new(nq);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ancilla_bits = Vec::new();
    let mut current = vec![false; na];
    let mut data_bits = vec![false; circuit.layout.num_data()];
    for segment in circuit.segments() {
        for (i, op) in circuit.ops(segment).iter().enumerate() {
            let here = fault.filter(|f| f.location == Location { segment, op: i });
            match *op {
                Op::H(q) => t.h(q),
                Op::Cz(a, b) => t.cz(a, b),
                Op::Depolarize1(q, _) => {
                    if let Some(ElementaryFault { kind: FaultKind::Single(p), .. }) = here {
                        t.pauli(q, p);
                    }
                }
                Op::Depolarize2(a, b) => {
                    if let Some(ElementaryFault { kind: FaultKind::Pair(pa, pb), .. }) = here {
                        t.pauli(a, pa);
                        t.pauli(b, pb);
                    }
                }
                Op::MeasureAncilla { qubit, slot } => {
                    current[slot] = t.measure(qubit, &mut rng) ^ here.is_some();
                }
                Op::MeasureData { qubit } => {
                    data_bits[qubit] = t.measure(qubit, &mut rng) ^ here.is_some();
                }
                Op::PrepGauge => {}
            }
        }
        if let rtqec::noise_sim::circuit::Segment::Round(_) = segment {
            ancilla_bits.extend_from_slice(&current);
        }
    }
    ShotRecord {
        rounds: circuit.rounds,
        ancilla_bits,
        data_bits,
        truth_x_flip: false,
        truth_z_flip: false,
        basis: circuit.basis,
        seed,
    }
}

fn logical_parity(layout: &CodeLayout, basis: Basis, data: &[bool]) -> bool {
    layout.logical_support(basis).iter().fold(false, |acc, &q| acc ^ data[q])
}

fn check(basis: Basis, rounds: usize) {
    let layout = CodeLayout::build(3).unwrap();
    let circuit = MemoryCircuit::new(&layout, basis, rounds, NoiseParams::default());

    for seed in 0..8 {
        let rec = run(&circuit, None, seed);
        let d = compute_defects(&layout, &rec).unwrap();
        assert_eq!(d.total(Pauli::X) + d.total(Pauli::Z), 0, "noiseless defects, seed {seed}");
        assert!(!logical_parity(&layout, basis, &rec.data_bits));
    }

    let faults = circuit.elementary_faults();
    assert!(faults.len() > 500);
    for (k, f) in faults.iter().enumerate() {
        let probe = probe_fault(&circuit, *f);
        let expect = compute_defects(&layout, &probe).unwrap();
        for seed in [k as u64, k as u64 + 1_000_000] {
            let rec = run(&circuit, Some(*f), seed);
            let got = compute_defects(&layout, &rec).unwrap();
            assert_eq!(got, expect, "defects differ for {f:?}");
            assert_eq!(
                logical_parity(&layout, basis, &rec.data_bits),
                probe.measured_flip(),
                "logical label differs for {f:?}"
            );
        }
    }
}

#[test]
fn single_faults_match_tableau_z_basis() {
    check(Pauli::Z, 2);
}

#[test]
fn single_faults_match_tableau_x_basis() {
    check(Pauli::X, 2);
}
