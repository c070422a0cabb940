// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulated tune-up of single-CQB gates and of the CZ hold time.

mod cz;
mod pipeline;
mod scan;

pub use cz::{calibrate_cz, CzCalibration, CzMode, CzTarget};
pub use pipeline::{
    fine_scan_chained, measure_delta_ramsey, run_pipeline, scan_amplitude_for_half_excitation,
    scan_correction_time, CalibrationReport, FineParam, FineScanResult, PipelineConfig, RamseyResult,
};
pub use scan::{dominant_frequency, parabolic_peak, MeasurementMode, ScanResult};

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::linalg::{axis_angle, rx, rz, trace_fidelity2, Unitary2};
use crate::propagator::{unitary_of_waveform, ZFrame};
use crate::waveform::{synth_xy_pulse, Axis, GateWindowSpec, Sign, WindowLayout};

/// Calibrated single-CQB gate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedGateSet {
    pub epsilon_p_hz: f64,
    pub pulse_freq_hz: f64,
    pub t_d: f64,
    pub t_c: f64,
    pub t_xy: f64,
    pub measured_gap_hz: f64,
    /// Trace infidelity of the X(π/2) window vs the ideal gate.
    pub residual_infidelity: f64,
    /// Lab-frame azimuth of the X+ rotation axis [rad].
    pub x_axis_azimuth: f64,
    pub sample_period: f64,
}

impl CalibratedGateSet {
    /// Builds a gate set from a known window and measures its frame and
    /// residual error against `spec`.
    pub fn characterize(
        spec: &CqbSpec,
        measured_gap_hz: f64,
        epsilon_p_hz: f64,
        pulse_freq_hz: f64,
        t_c: f64,
        sample_period: f64,
    ) -> Result<Self> {
        let window = GateWindowSpec::for_gap(measured_gap_hz, epsilon_p_hz, pulse_freq_hz, t_c, sample_period);
        let mut set = Self {
            epsilon_p_hz,
            pulse_freq_hz,
            t_d: window.t_d,
            t_c,
            t_xy: window.t_xy,
            measured_gap_hz,
            residual_infidelity: f64::NAN,
            x_axis_azimuth: 0.0,
            sample_period,
        };
        set.validate()?;
        let u = unitary_of_waveform(spec, &synth_xy_pulse(&window, Axis::X, Sign::Plus)?, ZFrame::Lab)?;
        let (n, _) = axis_angle(&u);
        set.x_axis_azimuth = n[1].atan2(n[0]).rem_euclid(TAU);
        set.residual_infidelity = 1.0 - trace_fidelity2(&set.to_gate_frame(&u), &rx(FRAC_PI_2));
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon_p_hz", self.epsilon_p_hz),
            ("pulse_freq_hz", self.pulse_freq_hz),
            ("t_d", self.t_d),
            ("measured_gap_hz", self.measured_gap_hz),
            ("sample_period", self.sample_period),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("uncalibrated gate set: {name} = {v}")));
            }
        }
        for (name, v) in [("t_c", self.t_c), ("t_xy", self.t_xy), ("x_axis_azimuth", self.x_axis_azimuth)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("uncalibrated gate set: {name} = {v}")));
            }
        }
        self.window().layout().map(|_| ())
    }

    pub fn window(&self) -> GateWindowSpec {
        GateWindowSpec {
            epsilon_p_hz: self.epsilon_p_hz,
            pulse_freq_hz: self.pulse_freq_hz,
            t_d: self.t_d,
            t_c: self.t_c,
            t_xy: self.t_xy,
            sample_period: self.sample_period,
        }
    }

    pub fn layout(&self) -> Result<WindowLayout> {
        self.window().layout()
    }

    pub fn t_delta(&self) -> f64 {
        1.0 / self.measured_gap_hz
    }

    /// Z phase accumulated per idle sample under the measured gap.
    pub fn z_step(&self) -> f64 {
        TAU * self.measured_gap_hz * self.sample_period
    }

    /// Excess azimuth of the Y axis over π/2 caused by snapping t_xy.
    pub fn y_axis_offset(&self) -> Result<f64> {
        let n_xy = self.layout()?.n_xy;
        Ok(self.z_step() * n_xy as f64 - FRAC_PI_2)
    }

    /// Maps a lab-frame unitary to the frame whose x axis is the X+ axis.
    pub fn to_gate_frame(&self, u: &Unitary2) -> Unitary2 {
        rz(-self.x_axis_azimuth) * u * rz(self.x_axis_azimuth)
    }
}
