// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulation, calibration and benchmarking of baseband-controlled composite
//! qubits (CQBs): two capacitively coupled transmons operated at their
//! avoided crossing and driven by single-period flux pulses.

// NaN must fail validation, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod device;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod format;
pub mod gates;
pub mod linalg;
pub mod noise;
pub mod propagator;
pub mod protocols;
pub mod rb;
pub mod rng;
pub mod waveform;

pub use error::{Error, ErrorClass, Result};
