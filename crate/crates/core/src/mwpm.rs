// SPDX-License-Identifier: Apache-2.0

//! Exact minimum-weight perfect matching over a space-time detector graph.
//!
//! The graph for one stabilizer type is learnt by probing the circuit with
//! every elementary fault and running the syndrome preprocessing on the
//! result. A fault with one or two defects of that type becomes an edge
//! (one-defect faults connect to the boundary node); faults with more
//! defects are counted and skipped, as are edges whose logical effect is
//! ambiguous between parallel faults.
//!
//! Matching runs Floyd-Warshall once per graph, then an exact subset DP over
//! the shot's defects, or branch-and-bound past [`DP_LIMIT`] defects.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::code_model::{Basis, CodeLayout, Pauli, StabilizerType};
use crate::noise_sim::circuit::MemoryCircuit;
use crate::noise_sim::{probe_fault, NoiseParams, ShotRecord, SimError};
use crate::syndrome::{compute_defects, ShotDefects, SyndromeError};

/// Largest defect count handled by the subset DP.
pub const DP_LIMIT: usize = 16;
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Syndrome(#[from] SyndromeError),
    #[error("defect node {0} is outside the graph")]
    UnknownNode(usize),
    #[error("no finite-weight matching exists for the given defects")]
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    /// Second endpoint; equals [`DetectorGraph::boundary`] for boundary edges.
    pub b: usize,
    pub probability: f64,
    pub weight: f64,
    /// Whether the fault flips the tracked logical.
    pub flip: bool,
}

/// Counts gathered while probing faults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProbeStats {
    pub faults: usize,
    pub edges_from_faults: usize,
    /// Faults with more than two defects of this type.
    pub hyperedges_skipped: usize,
    /// Faults with no defect of this type but a logical flip.
    pub undetectable_logical: usize,
    /// Parallel faults disagreeing on the logical effect of one edge.
    pub flip_conflicts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectorGraph {
    pub kind: StabilizerType,
    /// Stabilizers of this type per detector row.
    pub width: usize,
    /// Number of detector rows, including the final-readout row if present.
    pub rows: usize,
    pub edges: Vec<Edge>,
    pub stats: ProbeStats,
    #[serde(skip)]
    dist: Vec<f64>,
    #[serde(skip)]
    parity: Vec<bool>,
}

/// Edge weight `ln((1-p)/p)`, clamped at zero for `p >= 0.5`.
pub fn edge_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln().max(0.0)
}

/// Probability that exactly one of two independent mechanisms fires.
pub fn compose(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

impl DetectorGraph {
    /// Builds the graph from explicit edges; parallel edges are merged.
    pub fn from_edges(kind: StabilizerType, width: usize, rows: usize, edges: &[Edge]) -> DetectorGraph {
        let mut merged: BTreeMap<(usize, usize), Edge> = BTreeMap::new();
        let mut conflicts = 0;
        for e in edges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            merged
                .entry(key)
                .and_modify(|m| {
                    if m.flip != e.flip {
                        conflicts += 1;
                        if e.probability > m.probability {
                            m.flip = e.flip;
                        }
                    }
                    m.probability = compose(m.probability, e.probability);
                })
                .or_insert(Edge {
                    a: key.0,
                    b: key.1,
                    ..*e
                });
        }
        let mut edges: Vec<Edge> = merged.into_values().collect();
        for e in &mut edges {
            e.weight = edge_weight(e.probability);
        }
        let mut g = DetectorGraph {
            kind,
            width,
            rows,
            edges,
            stats: ProbeStats {
                flip_conflicts: conflicts,
                ..ProbeStats::default()
            },
            dist: Vec::new(),
            parity: Vec::new(),
        };
        g.all_pairs();
        g
    }

    pub fn num_nodes(&self) -> usize {
        self.width * self.rows + 1
    }

    pub fn boundary(&self) -> usize {
        self.width * self.rows
    }

    /// Node of stabilizer `local` (index within its type) in detector row `row` (1-based).
    pub fn node(&self, row: usize, local: usize) -> usize {
        (row - 1) * self.width + local
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn all_pairs(&mut self) {
        let n = self.num_nodes();
        let mut dist = vec![f64::INFINITY; n * n];
        let mut parity = vec![false; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for e in &self.edges {
            for (u, v) in [(e.a, e.b), (e.b, e.a)] {
                if e.weight < dist[u * n + v] {
                    dist[u * n + v] = e.weight;
                    parity[u * n + v] = e.flip;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                let pik = parity[i * n + k];
                for j in 0..n {
                    let via = dik + dist[k * n + j];
                    if via < dist[i * n + j] - TIE_EPS {
                        dist[i * n + j] = via;
                        parity[i * n + j] = pik ^ parity[k * n + j];
                    }
                }
            }
        }
        self.dist = dist;
        self.parity = parity;
    }

    /// Shortest-path weight between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.num_nodes() + b]
    }

    /// Logical parity along the chosen shortest path.
    pub fn path_flip(&self, a: usize, b: usize) -> bool {
        self.parity[a * self.num_nodes() + b]
    }

    /// Defect nodes of a shot: every set defect in the first `self.rows` rows
    /// of this type, with the final-readout row counted as row `rounds + 1`.
    pub fn defect_nodes(&self, defects: &ShotDefects) -> Vec<usize> {
        let fin = (defects.final_frame.kind == self.kind).then_some(defects.final_frame.defects.as_slice());
        self.nodes_from_rows(defects.rows(self.kind), fin)
    }

    /// Defect nodes from per-round rows plus an optional final-readout row;
    /// rows beyond the graph's depth are ignored.
    pub fn nodes_from_rows(&self, rows: &[Vec<bool>], final_row: Option<&[bool]>) -> Vec<usize> {
        rows.iter()
            .map(Vec::as_slice)
            .chain(final_row)
            .take(self.rows)
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(move |(i, _)| r * self.width + i)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}

/// Which rows a graph covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphScope {
    /// All rounds plus, for the measured type, the final-readout row.
    Closed,
    /// Rounds `1..=k` only: errors after round `k` are invisible and
    /// round-`k` measurement errors reach the boundary.
    OpenTop(usize),
}

/// Probes every elementary fault of a `rounds`-round memory experiment and
/// builds the detector graph of stabilizer type `kind`.
pub fn build_graph(
    layout: &CodeLayout,
    basis: Basis,
    rounds: usize,
    noise: &NoiseParams,
    kind: StabilizerType,
    scope: GraphScope,
) -> Result<DetectorGraph, MatchError> {
    noise.validate()?;
    if rounds == 0 {
        return Err(SimError::ZeroRounds.into());
    }
    let (sim_rounds, rows) = match scope {
        GraphScope::Closed => (rounds, rounds + usize::from(kind == basis)),
        GraphScope::OpenTop(k) => (k.clamp(1, rounds), k.clamp(1, rounds)),
    };
    let circuit = MemoryCircuit::new(layout, basis, sim_rounds, *noise);
    let width = layout.stabilizers_per_type();
    let faults = circuit.elementary_faults();

    let probed: Vec<(Vec<usize>, bool, f64)> = faults
        .par_iter()
        .map(|f| {
            let record = probe_fault(&circuit, *f);
            let defects = compute_defects(layout, &record).expect("probe records are well formed");
            (signature(&defects, kind, width, rows), logical_flip(&record, kind), f.probability)
        })
        .collect();

    let boundary = width * rows;
    let mut stats = ProbeStats {
        faults: faults.len(),
        ..ProbeStats::default()
    };
    let mut edges = Vec::new();
    for (sig, flip, p) in probed {
        match sig.as_slice() {
            [] => stats.undetectable_logical += usize::from(flip),
            [a] => edges.push(Edge { a: *a, b: boundary, probability: p, weight: 0.0, flip }),
            [a, b] => edges.push(Edge { a: *a, b: *b, probability: p, weight: 0.0, flip }),
            _ => stats.hyperedges_skipped += 1,
        }
    }
    stats.edges_from_faults = edges.len();
    let mut graph = DetectorGraph::from_edges(kind, width, rows, &edges);
    stats.flip_conflicts = graph.stats.flip_conflicts;
    graph.stats = stats;
    // An open-top round-1 graph of the complementary type is legitimately empty.
    if graph.is_empty() && scope == GraphScope::Closed {
        log::warn!("detector graph for {kind}-type stabilizers has no edges (all fault probabilities are zero)");
    }
    Ok(graph)
}

fn signature(defects: &ShotDefects, kind: StabilizerType, width: usize, rows: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for (r, row) in defects.rows(kind).iter().enumerate().take(rows) {
        out.extend(row.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| r * width + i));
    }
    let n = defects.rows(kind).len();
    if defects.final_frame.kind == kind && rows > n {
        out.extend(
            defects
                .final_frame
                .defects
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| n * width + i),
        );
    }
    out
}

/// Logical tracked by the decoder of stabilizer type `kind`: Z-type checks
/// see X errors, which flip `Z_L`.
pub fn logical_flip(record: &ShotRecord, kind: StabilizerType) -> bool {
    match kind {
        Pauli::Z => record.truth_x_flip,
        Pauli::X => record.truth_z_flip,
    }
}

/// Outcome of one matching.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    /// `(defect, partner)` with `None` for the boundary, in the order the
    /// defects were given.
    pub pairs: Vec<(usize, Option<usize>)>,
    pub weight: f64,
    pub flip: bool,
    /// Another minimum-weight matching implies the opposite flip.
    pub ambiguous: bool,
}

/// Exact minimum-weight matching of `defects` (graph node indices).
pub fn decode(graph: &DetectorGraph, defects: &[usize]) -> Result<MatchResult, MatchError> {
    let bnd = graph.boundary();
    if let Some(&bad) = defects.iter().find(|&&d| d >= bnd) {
        return Err(MatchError::UnknownNode(bad));
    }
    let k = defects.len();
    let pair = |i: usize, j: usize| graph.distance(defects[i], defects[j]);
    let pair_flip = |i: usize, j: usize| graph.path_flip(defects[i], defects[j]);
    let to_b = |i: usize| graph.distance(defects[i], bnd);
    let b_flip = |i: usize| graph.path_flip(defects[i], bnd);
    let costs = Costs {
        k,
        pair: (0..k * k).map(|x| pair(x / k, x % k)).collect(),
        pair_flip: (0..k * k).map(|x| pair_flip(x / k, x % k)).collect(),
        bnd: (0..k).map(to_b).collect(),
        bnd_flip: (0..k).map(b_flip).collect(),
    };
    let (weight, partner, flips) = if k <= DP_LIMIT {
        costs.subset_dp()
    } else {
        costs.branch_and_bound()
    };
    if !weight.is_finite() {
        return Err(MatchError::Infeasible);
    }
    let mut flip = false;
    let mut pairs = Vec::new();
    for i in 0..k {
        match partner[i] {
            None => {
                flip ^= costs.bnd_flip[i];
                pairs.push((defects[i], None));
            }
            Some(j) if j > i => {
                flip ^= costs.pair_flip[i * k + j];
                pairs.push((defects[i], Some(defects[j])));
            }
            Some(_) => {}
        }
    }
    Ok(MatchResult {
        pairs,
        weight,
        flip,
        ambiguous: flips == 0b11,
    })
}

/// Dense cost tables for one matching problem.
struct Costs {
    k: usize,
    pair: Vec<f64>,
    pair_flip: Vec<bool>,
    bnd: Vec<f64>,
    bnd_flip: Vec<bool>,
}

/// Bit 0 set: flip `false` reachable at minimum cost; bit 1: flip `true`.
type FlipSet = u8;

fn shift_flips(set: FlipSet, flip: bool) -> FlipSet {
    if flip {
        ((set & 1) << 1) | ((set >> 1) & 1)
    } else {
        set
    }
}

impl Costs {
    /// Returns (weight, partner per defect, reachable flip set).
    fn subset_dp(&self) -> (f64, Vec<Option<usize>>, FlipSet) {
        let k = self.k;
        let full = (1usize << k) - 1;
        let mut best = vec![f64::INFINITY; 1 << k];
        let mut flips = vec![0u8; 1 << k];
        // Chosen partner of the lowest defect in each mask; k means boundary.
        let mut choice = vec![usize::MAX; 1 << k];
        best[0] = 0.0;
        flips[0] = 1;
        for mask in 1..=full {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut options: Vec<(usize, f64, FlipSet)> = Vec::new();
            let mut m = rest;
            while m != 0 {
                let j = m.trailing_zeros() as usize;
                m &= m - 1;
                let sub = rest & !(1 << j);
                let c = best[sub] + self.pair[i * k + j];
                options.push((j, c, shift_flips(flips[sub], self.pair_flip[i * k + j])));
            }
            options.push((k, best[rest] + self.bnd[i], shift_flips(flips[rest], self.bnd_flip[i])));
            for (j, c, f) in options {
                if !c.is_finite() {
                    continue;
                }
                if c < best[mask] - TIE_EPS {
                    best[mask] = c;
                    flips[mask] = f;
                    choice[mask] = j;
                } else if c <= best[mask] + TIE_EPS {
                    flips[mask] |= f;
                }
            }
        }
        let mut partner = vec![None; k];
        let mut mask = full;
        while mask != 0 && best[full].is_finite() {
            let i = mask.trailing_zeros() as usize;
            let j = choice[mask];
            if j == k {
                mask &= !(1 << i);
            } else {
                partner[i] = Some(j);
                partner[j] = Some(i);
                mask &= !(1 << i) & !(1 << j);
            }
        }
        (best[full], partner, flips[full])
    }

    fn branch_and_bound(&self) -> (f64, Vec<Option<usize>>, FlipSet) {
        let k = self.k;
        let share: Vec<f64> = (0..k)
            .map(|i| {
                (0..k)
                    .filter(|&j| j != i)
                    .map(|j| self.pair[i * k + j] / 2.0)
                    .fold(self.bnd[i], f64::min)
            })
            .collect();
        let mut search = Search {
            costs: self,
            share,
            best: f64::INFINITY,
            best_partner: vec![None; k],
            flips: 0,
            partner: vec![None; k],
            matched: vec![false; k],
        };
        search.run(0.0, false);
        (search.best, search.best_partner, search.flips)
    }
}

struct Search<'a> {
    costs: &'a Costs,
    share: Vec<f64>,
    best: f64,
    best_partner: Vec<Option<usize>>,
    flips: FlipSet,
    partner: Vec<Option<usize>>,
    matched: Vec<bool>,
}

impl Search<'_> {
    fn bound(&self) -> f64 {
        (0..self.costs.k).filter(|&i| !self.matched[i]).map(|i| self.share[i]).sum()
    }

    fn run(&mut self, cost: f64, flip: bool) {
        let k = self.costs.k;
        if cost + self.bound() > self.best + TIE_EPS {
            return;
        }
        let Some(i) = (0..k).find(|&i| !self.matched[i]) else {
            let f: FlipSet = if flip { 2 } else { 1 };
            if cost < self.best - TIE_EPS {
                self.best = cost;
                self.best_partner = self.partner.clone();
                self.flips = f;
            } else {
                self.flips |= f;
            }
            return;
        };
        self.matched[i] = true;
        // Partners ascending, boundary last, matching the DP's preference.
        for j in i + 1..k {
            let c = self.costs.pair[i * k + j];
            if self.matched[j] || !c.is_finite() {
                continue;
            }
            self.matched[j] = true;
            self.partner[i] = Some(j);
            self.partner[j] = Some(i);
            self.run(cost + c, flip ^ self.costs.pair_flip[i * k + j]);
            self.partner[j] = None;
            self.matched[j] = false;
        }
        let c = self.costs.bnd[i];
        if c.is_finite() {
            self.partner[i] = None;
            self.run(cost + c, flip ^ self.costs.bnd_flip[i]);
        }
        self.partner[i] = None;
        self.matched[i] = false;
    }
}

/// Decodes a recorded shot with a closed graph of the measured type and
/// returns the inferred flip of the measured logical.
pub fn decode_shot(graph: &DetectorGraph, layout: &CodeLayout, record: &ShotRecord) -> Result<MatchResult, MatchError> {
    let defects = compute_defects(layout, record)?;
    decode(graph, &graph.defect_nodes(&defects))
}
