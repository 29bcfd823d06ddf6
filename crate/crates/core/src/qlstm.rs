// SPDX-License-Identifier: Apache-2.0

//! Quantized LSTM decoder with a dense single-neuron head.
//!
//! Weights are signed 6-bit integers read as `q / 2^frac_bits`. Activations
//! are unsigned fixed point with 8 fractional bits: `h`, `i`, `f`, `o` and
//! `c~` live in `[0, 256]`, the cell `c` in `[0, 511]`. Gate accumulators are
//! exact at scale `2^(frac_bits + 8)` and saturate to 24-bit signed before
//! activation. Every rounding is half away from zero.
//!
//! [`FloatWeights`] with [`step_float`] runs the same cell in `f64` and is
//! the oracle for the integer path.

use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::code_model::StabilizerType;

pub const WEIGHT_MAGIC: &[u8; 6] = b"QECNW1";
pub const WEIGHT_VERSION: u8 = 1;
pub const DEFAULT_FRAC_BITS: u8 = 4;
pub const WEIGHT_MIN: i8 = -32;
pub const WEIGHT_MAX: i8 = 31;

/// Fractional bits of every stored activation.
pub const ACT_BITS: u32 = 8;
pub const ACT_ONE: i64 = 1 << ACT_BITS;
/// Largest stored cell value, just below 2.0.
pub const CELL_MAX: i64 = 2 * ACT_ONE - 1;
const ACC_MIN: i64 = -(1 << 23);
const ACC_MAX: i64 = (1 << 23) - 1;
const MAX_FRAC_BITS: u8 = 12;

/// Input-to-verdict latency of one decoder step (124 ns).
pub const LATENCY_CYCLES: u32 = 31;
/// Minimum spacing between consecutive steps (184 ns).
pub const THROUGHPUT_CYCLES: u32 = 46;
/// Clock period at 250 MHz.
pub const CYCLE_NS: u32 = 4;

const HEADER_LEN: usize = 6 + 1 + 1 + 2 + 2 + 1;

/// Gate order used by every tensor group and by the file format.
pub const GATES: [&str; 4] = ["i", "f", "c", "o"];

#[derive(Debug, Error)]
pub enum QlstmError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a QECNW1 weight file")]
    BadMagic,
    #[error("unsupported weight file version {0}")]
    Version(u8),
    #[error("unsupported frac_bits {0}")]
    FracBits(u8),
    #[error("unknown stabilizer type tag {0}")]
    TypeTag(u8),
    #[error("{tensor}[{index}] = {value} is outside the 6-bit range")]
    Range { tensor: String, index: usize, value: i8 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("input width {found}, decoder expects {expected}")]
    InputWidth { expected: usize, found: usize },
}

/// Quantized weights of one decoder instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QLstmWeights {
    pub kind: StabilizerType,
    pub version: u8,
    pub frac_bits: u8,
    pub input_size: usize,
    pub hidden_size: usize,
    /// Input matrices, `hidden x input`, row-major, gate order i, f, c, o.
    pub w_x: [Vec<i8>; 4],
    /// Recurrent matrices, `hidden x hidden`, row-major.
    pub w_h: [Vec<i8>; 4],
    pub b: [Vec<i8>; 4],
    pub w_d: Vec<i8>,
    pub b_d: i8,
}

impl QLstmWeights {
    pub fn zeros(kind: StabilizerType, input_size: usize, hidden_size: usize) -> QLstmWeights {
        let mat = |r: usize, c: usize| vec![0i8; r * c];
        QLstmWeights {
            kind,
            version: WEIGHT_VERSION,
            frac_bits: DEFAULT_FRAC_BITS,
            input_size,
            hidden_size,
            w_x: std::array::from_fn(|_| mat(hidden_size, input_size)),
            w_h: std::array::from_fn(|_| mat(hidden_size, hidden_size)),
            b: std::array::from_fn(|_| mat(hidden_size, 1)),
            w_d: mat(1, hidden_size),
            b_d: 0,
        }
    }

    /// Uniform draws over the whole 6-bit range.
    pub fn random<R: Rng + ?Sized>(kind: StabilizerType, input_size: usize, hidden_size: usize, rng: &mut R) -> QLstmWeights {
        let mut w = QLstmWeights::zeros(kind, input_size, hidden_size);
        for t in w.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.gen_range(WEIGHT_MIN..=WEIGHT_MAX);
            }
        }
        w.b_d = rng.gen_range(WEIGHT_MIN..=WEIGHT_MAX);
        w
    }

    /// `4 (dim*h + h^2 + h)`.
    pub fn lstm_parameter_count(&self) -> usize {
        lstm_parameter_count(self.input_size, self.hidden_size)
    }

    /// `h + 1`.
    pub fn dense_parameter_count(&self) -> usize {
        self.hidden_size + 1
    }

    fn tensors(&self) -> Vec<(String, &[i8])> {
        let mut out = Vec::with_capacity(13);
        for (g, t) in GATES.iter().zip(&self.w_x) {
            out.push((format!("W_x^{g}"), t.as_slice()));
        }
        for (g, t) in GATES.iter().zip(&self.w_h) {
            out.push((format!("W_h^{g}"), t.as_slice()));
        }
        for (g, t) in GATES.iter().zip(&self.b) {
            out.push((format!("b^{g}"), t.as_slice()));
        }
        out.push(("W_d".into(), self.w_d.as_slice()));
        out.push(("b_d".into(), std::slice::from_ref(&self.b_d)));
        out
    }

    fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<i8>> {
        self.w_x
            .iter_mut()
            .chain(self.w_h.iter_mut())
            .chain(self.b.iter_mut())
            .chain(std::iter::once(&mut self.w_d))
    }

    fn expected_lengths(&self) -> [usize; 13] {
        let (n, h) = (self.input_size, self.hidden_size);
        [n * h, n * h, n * h, n * h, h * h, h * h, h * h, h * h, h, h, h, h, h]
    }

    pub fn validate(&self) -> Result<(), QlstmError> {
        if self.frac_bits > MAX_FRAC_BITS {
            return Err(QlstmError::FracBits(self.frac_bits));
        }
        if self.input_size == 0 || self.hidden_size == 0 {
            return Err(QlstmError::Shape("input and hidden sizes must be non-zero".into()));
        }
        let tensors = self.tensors();
        for ((name, t), want) in tensors[..13].iter().zip(self.expected_lengths()) {
            if t.len() != want {
                return Err(QlstmError::Shape(format!("{name} has {} entries, expected {want}", t.len())));
            }
        }
        for (name, t) in &tensors {
            if let Some((index, &value)) = t.iter().enumerate().find(|(_, &v)| !(WEIGHT_MIN..=WEIGHT_MAX).contains(&v)) {
                return Err(QlstmError::Range {
                    tensor: name.clone(),
                    index,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.lstm_parameter_count() + self.dense_parameter_count());
        out.extend_from_slice(WEIGHT_MAGIC);
        out.push(self.version);
        out.push(self.frac_bits);
        out.extend_from_slice(&(self.input_size as u16).to_le_bytes());
        out.extend_from_slice(&(self.hidden_size as u16).to_le_bytes());
        out.push(self.kind.tag());
        for (_, t) in self.tensors() {
            out.extend(t.iter().map(|&v| v as u8));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<QLstmWeights, QlstmError> {
        if bytes.len() < 6 || &bytes[..6] != WEIGHT_MAGIC {
            return Err(QlstmError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(QlstmError::Shape("truncated header".into()));
        }
        let version = bytes[6];
        if version != WEIGHT_VERSION {
            return Err(QlstmError::Version(version));
        }
        let frac_bits = bytes[7];
        let input_size = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        let hidden_size = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
        let kind = StabilizerType::from_tag(bytes[12]).ok_or(QlstmError::TypeTag(bytes[12]))?;
        let mut w = QLstmWeights::zeros(kind, input_size, hidden_size);
        w.frac_bits = frac_bits;
        let want: usize = w.expected_lengths().iter().sum::<usize>() + 1;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != want {
            return Err(QlstmError::Shape(format!(
                "payload has {} bytes, header implies {want}",
                payload.len()
            )));
        }
        let mut cursor = payload.iter().map(|&b| b as i8);
        for t in w.tensors_mut() {
            for v in t.iter_mut() {
                *v = cursor.next().expect("length checked");
            }
        }
        w.b_d = cursor.next().expect("length checked");
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), QlstmError> {
        self.validate()?;
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn dequantize(&self) -> FloatWeights {
        let scale = 1.0 / f64::from(1u32 << self.frac_bits);
        let f = |t: &[i8]| t.iter().map(|&v| f64::from(v) * scale).collect::<Vec<f64>>();
        FloatWeights {
            input_size: self.input_size,
            hidden_size: self.hidden_size,
            w_x: std::array::from_fn(|g| f(&self.w_x[g])),
            w_h: std::array::from_fn(|g| f(&self.w_h[g])),
            b: std::array::from_fn(|g| f(&self.b[g])),
            w_d: f(&self.w_d),
            b_d: f64::from(self.b_d) * scale,
        }
    }
}

pub fn lstm_parameter_count(input_size: usize, hidden_size: usize) -> usize {
    4 * (input_size * hidden_size + hidden_size * hidden_size + hidden_size)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<QLstmWeights, QlstmError> {
    QLstmWeights::from_bytes(&fs::read(path)?)
}

/// Recurrent state in activation fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderState {
    /// `h_n`, each in `[0, 256]`.
    pub h: Vec<u16>,
    /// `c_n`, each in `[0, 511]`.
    pub c: Vec<u16>,
    pub round: u32,
}

impl DecoderState {
    pub fn new(hidden_size: usize) -> DecoderState {
        DecoderState {
            h: vec![0; hidden_size],
            c: vec![0; hidden_size],
            round: 0,
        }
    }

    pub fn reset(&mut self) {
        self.h.iter_mut().for_each(|v| *v = 0);
        self.c.iter_mut().for_each(|v| *v = 0);
        self.round = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeVerdict {
    /// `y_n` scaled by 256.
    pub y: u16,
    /// Dense pre-activation at scale `2^(frac_bits + 8)`.
    pub pre_activation: i32,
    pub flip: bool,
    pub latency_cycles: u32,
    pub throughput_cycles: u32,
}

impl DecodeVerdict {
    pub fn y_value(&self) -> f64 {
        f64::from(self.y) / ACT_ONE as f64
    }
}

/// Division by `2^shift` rounding half away from zero.
fn round_shift(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        return v;
    }
    let half = 1i64 << (shift - 1);
    if v >= 0 {
        (v + half) >> shift
    } else {
        -((-v + half) >> shift)
    }
}

fn sigmoid_fixed(acc: i64, frac_bits: u32) -> i64 {
    round_shift(acc + (1i64 << (frac_bits + ACT_BITS)), frac_bits + 1).clamp(0, ACT_ONE)
}

fn relu_fixed(acc: i64, frac_bits: u32) -> i64 {
    round_shift(acc, frac_bits).clamp(0, ACT_ONE)
}

fn check_width(expected: usize, found: usize) -> Result<(), QlstmError> {
    if expected != found {
        return Err(QlstmError::InputWidth { expected, found });
    }
    Ok(())
}

/// Advances `state` by one round of defects and returns the verdict.
pub fn step(weights: &QLstmWeights, state: &mut DecoderState, x: &[bool]) -> Result<DecodeVerdict, QlstmError> {
    check_width(weights.input_size, x.len())?;
    let (n, h) = (weights.input_size, weights.hidden_size);
    let frac = u32::from(weights.frac_bits);
    let mut gates = [vec![0i64; h], vec![0i64; h], vec![0i64; h], vec![0i64; h]];
    for (g, out) in gates.iter_mut().enumerate() {
        let (wx, wh, b) = (&weights.w_x[g], &weights.w_h[g], &weights.b[g]);
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = i64::from(b[j]) * ACT_ONE;
            for k in 0..n {
                if x[k] {
                    acc += i64::from(wx[j * n + k]) * ACT_ONE;
                }
            }
            for k in 0..h {
                acc += i64::from(wh[j * h + k]) * i64::from(state.h[k]);
            }
            let acc = acc.clamp(ACC_MIN, ACC_MAX);
            *slot = if g == 2 { relu_fixed(acc, frac) } else { sigmoid_fixed(acc, frac) };
        }
    }
    let [i, f, ct, o] = &gates;
    for j in 0..h {
        let c = round_shift(f[j] * i64::from(state.c[j]) + i[j] * ct[j], ACT_BITS).clamp(0, CELL_MAX);
        let hv = round_shift(o[j] * c.min(ACT_ONE), ACT_BITS).clamp(0, ACT_ONE);
        state.c[j] = c as u16;
        state.h[j] = hv as u16;
    }
    state.round += 1;

    let mut acc = i64::from(weights.b_d) * ACT_ONE;
    for k in 0..h {
        acc += i64::from(weights.w_d[k]) * i64::from(state.h[k]);
    }
    let acc = acc.clamp(ACC_MIN, ACC_MAX);
    Ok(DecodeVerdict {
        y: sigmoid_fixed(acc, frac) as u16,
        pre_activation: acc as i32,
        flip: acc > 0,
        latency_cycles: LATENCY_CYCLES,
        throughput_cycles: THROUGHPUT_CYCLES,
    })
}

/// Real-valued weights with the same layout as [`QLstmWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct FloatWeights {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_x: [Vec<f64>; 4],
    pub w_h: [Vec<f64>; 4],
    pub b: [Vec<f64>; 4],
    pub w_d: Vec<f64>,
    pub b_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub round: u32,
}

impl FloatState {
    pub fn new(hidden_size: usize) -> FloatState {
        FloatState {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
            round: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatVerdict {
    pub y: f64,
    pub pre_activation: f64,
    pub flip: bool,
}

/// `clip(0.5 x + 0.5, 0, 1)`.
pub fn hard_sigmoid(x: f64) -> f64 {
    (0.5 * x + 0.5).clamp(0.0, 1.0)
}

/// `clip(x, 0, 1)`.
pub fn clipped_relu(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// The cell of [`step`] in double precision, including the cell clip at
/// `511/256`.
pub fn step_float(weights: &FloatWeights, state: &mut FloatState, x: &[bool]) -> Result<FloatVerdict, QlstmError> {
    check_width(weights.input_size, x.len())?;
    let (n, h) = (weights.input_size, weights.hidden_size);
    let cell_max = CELL_MAX as f64 / ACT_ONE as f64;
    let mut gates = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
    for (g, out) in gates.iter_mut().enumerate() {
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = weights.b[g][j];
            for k in 0..n {
                if x[k] {
                    acc += weights.w_x[g][j * n + k];
                }
            }
            for k in 0..h {
                acc += weights.w_h[g][j * h + k] * state.h[k];
            }
            *slot = if g == 2 { clipped_relu(acc) } else { hard_sigmoid(acc) };
        }
    }
    let [i, f, ct, o] = &gates;
    for j in 0..h {
        let c = (f[j] * state.c[j] + i[j] * ct[j]).clamp(0.0, cell_max);
        state.c[j] = c;
        state.h[j] = o[j] * clipped_relu(c);
    }
    state.round += 1;
    let pre: f64 = weights.b_d + weights.w_d.iter().zip(&state.h).map(|(w, h)| w * h).sum::<f64>();
    Ok(FloatVerdict {
        y: hard_sigmoid(pre),
        pre_activation: pre,
        flip: pre > 0.0,
    })
}

/// One decoder step scheduled by [`PipelineModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineEvent {
    pub arrival: u64,
    pub start: u64,
    pub done: u64,
    /// Cycles spent waiting for the previous step to clear the pipeline.
    pub queue: u64,
}

/// Deterministic issue model: a step starts when its input has arrived and
/// at least `period` cycles after the previous start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineModel {
    pub latency: u32,
    pub period: u32,
}

impl Default for PipelineModel {
    fn default() -> Self {
        PipelineModel {
            latency: LATENCY_CYCLES,
            period: THROUGHPUT_CYCLES,
        }
    }
}

impl PipelineModel {
    pub fn schedule(&self, arrivals: &[u64]) -> Vec<PipelineEvent> {
        let mut prev_start: Option<u64> = None;
        arrivals
            .iter()
            .map(|&arrival| {
                let start = match prev_start {
                    Some(p) => arrival.max(p + u64::from(self.period)),
                    None => arrival,
                };
                prev_start = Some(start);
                PipelineEvent {
                    arrival,
                    start,
                    done: start + u64::from(self.latency),
                    queue: start - arrival,
                }
            })
            .collect()
    }

    /// Queue growth per round for a fixed inter-arrival gap.
    pub fn backlog_per_round(&self, gap: u64) -> u64 {
        u64::from(self.period).saturating_sub(gap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::Pauli;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_half() {
        let w = QLstmWeights::zeros(Pauli::Z, 4, 32);
        let mut s = DecoderState::new(32);
        for x in [[false; 4], [true; 4]] {
            let v = step(&w, &mut s, &x).unwrap();
            assert_eq!(v.y, 128);
            assert!(!v.flip);
            assert!(s.h.iter().chain(&s.c).all(|&v| v == 0));
        }
        let mut fs = FloatState::new(32);
        let v = step_float(&w.dequantize(), &mut fs, &[true; 4]).unwrap();
        assert_eq!(v.y, 0.5);
        assert!(!v.flip);
    }

    #[test]
    fn d3_parameter_counts() {
        let w = QLstmWeights::zeros(Pauli::X, 4, 32);
        assert_eq!(w.lstm_parameter_count(), 4736);
        assert_eq!(w.dense_parameter_count(), 33);
    }

    #[test]
    fn round_shift_is_half_away_from_zero() {
        assert_eq!(round_shift(3, 1), 2);
        assert_eq!(round_shift(-3, 1), -2);
        assert_eq!(round_shift(5, 2), 1);
        assert_eq!(round_shift(6, 2), 2);
        assert_eq!(round_shift(-6, 2), -2);
        assert_eq!(round_shift(-5, 2), -1);
    }

    #[test]
    fn activation_fixed_points_match_float() {
        for acc in -20_000i64..20_000 {
            let x = acc as f64 / 4096.0;
            let s = sigmoid_fixed(acc, 4) as f64 / 256.0;
            let r = relu_fixed(acc, 4) as f64 / 256.0;
            assert!((s - hard_sigmoid(x)).abs() <= 0.5 / 256.0 + 1e-12);
            assert!((r - clipped_relu(x)).abs() <= 0.5 / 256.0 + 1e-12);
        }
    }

    #[test]
    fn bytes_round_trip_and_rejections() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = QLstmWeights::random(Pauli::Z, 4, 32, &mut rng);
        let bytes = w.to_bytes();
        let back = QLstmWeights::from_bytes(&bytes).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.to_bytes(), bytes);

        let mut bad = bytes.clone();
        bad[HEADER_LEN + 7] = 40;
        assert!(matches!(QLstmWeights::from_bytes(&bad), Err(QlstmError::Range { value: 40, .. })));
        assert!(matches!(
            QLstmWeights::from_bytes(&bytes[..bytes.len() - 1]),
            Err(QlstmError::Shape(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(QLstmWeights::from_bytes(&bad), Err(QlstmError::BadMagic)));
        let mut bad = bytes.clone();
        bad[6] = 9;
        assert!(matches!(QLstmWeights::from_bytes(&bad), Err(QlstmError::Version(9))));
        let mut bad = bytes;
        bad[12] = 7;
        assert!(matches!(QLstmWeights::from_bytes(&bad), Err(QlstmError::TypeTag(7))));
    }

    #[test]
    fn width_is_checked() {
        let w = QLstmWeights::zeros(Pauli::Z, 4, 8);
        let mut s = DecoderState::new(8);
        assert!(matches!(
            step(&w, &mut s, &[false; 3]),
            Err(QlstmError::InputWidth { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn reset_matches_fresh_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = QLstmWeights::random(Pauli::Z, 4, 16, &mut rng);
        let mut s = DecoderState::new(16);
        for _ in 0..5 {
            step(&w, &mut s, &[true, false, true, true]).unwrap();
        }
        s.reset();
        assert_eq!(s, DecoderState::new(16));
        s.reset();
        assert_eq!(s, DecoderState::new(16));
        let mut fresh = DecoderState::new(16);
        let a = step(&w, &mut s, &[true; 4]).unwrap();
        let b = step(&w, &mut fresh, &[true; 4]).unwrap();
        assert_eq!((a, &s), (b, &fresh));
    }

    #[test]
    fn pipeline_without_and_with_backlog() {
        let p = PipelineModel::default();
        let arrivals: Vec<u64> = (0..10).map(|k| k * 50).collect();
        for e in p.schedule(&arrivals) {
            assert_eq!(e.queue, 0);
            assert_eq!(e.done - e.arrival, 31);
        }
        let arrivals: Vec<u64> = (0..10).map(|k| k * 40).collect();
        let ev = p.schedule(&arrivals);
        for (k, e) in ev.iter().enumerate() {
            assert_eq!(e.queue, 6 * k as u64);
        }
        assert_eq!(p.backlog_per_round(40), 6);
        assert_eq!(p.backlog_per_round(46), 0);
    }

    fn arb_weights() -> impl Strategy<Value = (QLstmWeights, Vec<Vec<bool>>)> {
        (1usize..6, 1usize..12, any::<u64>(), 1usize..25).prop_map(|(n, h, seed, rounds)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = QLstmWeights::random(Pauli::Z, n, h, &mut rng);
            // Push some tensors to the rails to exercise saturation.
            if seed % 3 == 0 {
                w.w_h.iter_mut().flatten().for_each(|v| *v = WEIGHT_MAX);
                w.b.iter_mut().flatten().for_each(|v| *v = WEIGHT_MAX);
            }
            let xs = (0..rounds).map(|_| (0..n).map(|_| rng.gen()).collect()).collect();
            (w, xs)
        })
    }

    proptest! {
        #[test]
        fn activations_stay_in_range((w, xs) in arb_weights()) {
            let mut s = DecoderState::new(w.hidden_size);
            for x in &xs {
                let v = step(&w, &mut s, x).unwrap();
                prop_assert!(v.y <= 256);
                prop_assert!(s.h.iter().all(|&h| h <= 256));
                prop_assert!(s.c.iter().all(|&c| c <= 511));
                prop_assert_eq!(v.flip, v.pre_activation > 0);
            }
        }

        #[test]
        fn threshold_matches_float_sign_test((w, xs) in arb_weights()) {
            let fw = w.dequantize();
            let mut s = FloatState::new(w.hidden_size);
            for x in &xs {
                let v = step_float(&fw, &mut s, x).unwrap();
                prop_assert_eq!(v.flip, v.y > 0.5);
            }
        }

        #[test]
        fn zero_prefix_is_input_independent(seed in any::<u64>(), k in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = QLstmWeights::random(Pauli::X, 4, 8, &mut rng);
            let mut a = DecoderState::new(8);
            let mut b = DecoderState::new(8);
            for _ in 0..k {
                step(&w, &mut a, &[false; 4]).unwrap();
                step(&w, &mut b, &[false; 4]).unwrap();
            }
            prop_assert_eq!(a, b);
        }
    }
}
