// SPDX-License-Identifier: Apache-2.0

//! Real-time surface-code memory: circuit-level simulation, syndrome
//! preprocessing, a fixed-point QLSTM decoder, an exact MWPM reference
//! decoder and the feedback loop that ties them together.

pub mod code_model;
pub mod noise_sim;
pub mod syndrome;
pub mod qlstm;
pub mod mwpm;
pub mod feedback;
pub mod realtime_loop;
pub mod scaling_estimator;
