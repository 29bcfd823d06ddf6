// SPDX-License-Identifier: Apache-2.0

//! First-order resource projections for the LSTM decoder versus distance,
//! anchored to the d=3 implementation (399 DSP slices, 124 ns, h=32).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// DSP slices of the reference high-end device.
pub const REFERENCE_DSP_CAPACITY: u64 = 12_288;
pub const ANCHOR_DSP: f64 = 399.0;
pub const ANCHOR_LATENCY_NS: f64 = 124.0;
pub const ANCHOR_HIDDEN: f64 = 32.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScalingError {
    #[error("distance {0} is not an odd integer >= 3")]
    InvalidDistance(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub d: usize,
    pub dim_x: usize,
    pub h: usize,
    pub p_lstm: u64,
    pub dsp: u64,
    pub latency_ns: u64,
    /// Percent of [`REFERENCE_DSP_CAPACITY`].
    pub utilization_pct: f64,
}

/// Half away from zero, for non-negative inputs.
fn round(x: f64) -> u64 {
    x.round() as u64
}

pub fn hidden_size(d: usize) -> usize {
    round(ANCHOR_HIDDEN * d as f64 / 3.0) as usize
}

pub fn project(d: usize) -> Result<ScalingRow, ScalingError> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(ScalingError::InvalidDistance(d));
    }
    let dim_x = (d * d - 1) / 2;
    let h = hidden_size(d);
    let ratio = h as f64 / ANCHOR_HIDDEN;
    let dsp = round(ANCHOR_DSP * ratio * ratio);
    Ok(ScalingRow {
        d,
        dim_x,
        h,
        p_lstm: crate::qlstm::lstm_parameter_count(dim_x, h) as u64,
        dsp,
        latency_ns: round(ANCHOR_LATENCY_NS * ratio),
        utilization_pct: 100.0 * dsp as f64 / REFERENCE_DSP_CAPACITY as f64,
    })
}

pub fn project_all(distances: &[usize]) -> Result<Vec<ScalingRow>, ScalingError> {
    distances.iter().map(|&d| project(d)).collect()
}

/// Odd distances 3..=17.
pub fn default_distances() -> Vec<usize> {
    (3..=17).step_by(2).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub capacity: u64,
    /// Largest d whose single decoder fits.
    pub single_decoder: Option<usize>,
    /// Largest d whose X and Z decoders fit together.
    pub dual_decoder: Option<usize>,
}

/// Projected DSP grows monotonically in d, so scanning upward until the
/// first miss finds the largest fit.
pub fn max_supported_distance(capacity: u64) -> CapacityReport {
    let largest = |copies: u64| {
        let mut best = None;
        for d in (3..).step_by(2) {
            let row = project(d).expect("odd d >= 3");
            if copies * row.dsp > capacity {
                break;
            }
            best = Some(d);
        }
        best
    };
    CapacityReport {
        capacity,
        single_decoder: largest(1),
        dual_decoder: largest(2),
    }
}

pub fn to_csv(rows: &[ScalingRow]) -> String {
    let mut s = String::from("d,dim_x,h,p_lstm,dsp,utilization_pct,latency_ns\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.1},{}",
            r.d, r.dim_x, r.h, r.p_lstm, r.dsp, r.utilization_pct, r.latency_ns
        );
    }
    s
}

pub fn to_markdown(rows: &[ScalingRow]) -> String {
    let mut s = String::from("| d | dim(x) | h | P_LSTM | DSP (% of 12288) | Latency (ns) |\n|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} ({:.1}%) | {} |",
            r.d, r.dim_x, r.h, r.p_lstm, r.dsp, r.utilization_pct, r.latency_ns
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_row() {
        let r = project(3).unwrap();
        assert_eq!((r.dim_x, r.h, r.p_lstm, r.dsp, r.latency_ns), (4, 32, 4736, 399, 124));
        assert!((r.utilization_pct - 3.25).abs() < 0.01);
    }

    #[test]
    fn d5_row() {
        let r = project(5).unwrap();
        // 399 * 53^2 / 32^2 = 1094.52; the published 1094 truncates.
        assert_eq!((r.dim_x, r.h, r.p_lstm, r.dsp, r.latency_ns), (12, 53, 13992, 1095, 205));
    }

    #[test]
    fn rejects_even_and_small() {
        for d in [0, 1, 2, 4, 16] {
            assert_eq!(project(d), Err(ScalingError::InvalidDistance(d)));
        }
    }

    #[test]
    fn capacity_readings() {
        let r = max_supported_distance(REFERENCE_DSP_CAPACITY);
        assert_eq!((r.single_decoder, r.dual_decoder), (Some(15), Some(11)));
        assert_eq!(max_supported_distance(399).single_decoder, Some(3));
        assert_eq!(max_supported_distance(398).single_decoder, None);
        assert_eq!(max_supported_distance(0), CapacityReport { capacity: 0, single_decoder: None, dual_decoder: None });
    }

    #[test]
    fn monotone_and_cubic() {
        let rows = project_all(&(3..=41).step_by(2).collect::<Vec<_>>()).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].dsp > w[0].dsp && w[1].latency_ns > w[0].latency_ns && w[1].p_lstm > w[0].p_lstm);
        }
        // P / d^3 flattens once the quadratic terms dominate.
        let k = |r: &ScalingRow| r.p_lstm as f64 / (r.d as f64).powi(3);
        let last = rows.len() - 1;
        assert!((k(&rows[last]) - k(&rows[last - 1])).abs() / k(&rows[last]) < 0.02);
    }

    #[test]
    fn tables_render() {
        let rows = project_all(&default_distances()).unwrap();
        assert_eq!(to_csv(&rows).lines().count(), 9);
        assert!(to_markdown(&rows).contains("| 3 | 4 | 32 | 4736 | 399 (3.2%) | 124 |"));
    }
}
