// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Back-to-back compilation of gate sequences into detuning waveforms.
//!
//! Z rotations are idle time. Requested Z phase is collected in a per-CQB
//! ledger and realized as an integer number of idle samples just before the
//! next X/Y window (and at the end of a sequence); whatever the grid cannot
//! represent is carried forward.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::clifford::{clifford_to_primitives, CliffordId};
use super::primitive::{sequence_unitary, GateKind, GatePrimitive};
use crate::calibration::CalibratedGateSet;
use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::propagator::{unitary_of_waveform, ZFrame};
use crate::waveform::{synth_xy_pulse, Annotation, Axis, Sign, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeqItem {
    Clifford(CliffordId),
    Gate(GatePrimitive),
}

impl From<CliffordId> for SeqItem {
    fn from(c: CliffordId) -> Self {
        SeqItem::Clifford(c)
    }
}

impl From<GatePrimitive> for SeqItem {
    fn from(g: GatePrimitive) -> Self {
        SeqItem::Gate(g)
    }
}

/// How X(−π/2) and Y(−π/2) are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeMode {
    /// Negated sinusoid.
    #[default]
    SignFlip,
    /// Z(π)·X(+π/2)·Z(π).
    ZSandwich,
}

/// Per-CQB frame bookkeeping carried between compiled segments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ZLedger {
    /// Z phase requested but not yet realized [rad].
    pub phase: [f64; 2],
    /// Phase rate during a CZ [rad/s].
    pub eta: [f64; 2],
    /// Elapsed time per CQB [s].
    pub time: [f64; 2],
}

impl ZLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_eta(eta_a: f64, eta_b: f64) -> Self {
        Self {
            eta: [eta_a, eta_b],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase.iter().chain(&self.eta).chain(&self.time).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("Z ledger".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompiledSequence {
    pub waveform: Waveform,
    /// Primitives with resolved start, duration and snap error.
    pub timing: Vec<GatePrimitive>,
    /// Ideal gate-frame unitary of the compiled primitives.
    pub ideal: Unitary2Serde,
}

/// Serializable wrapper so timing reports can embed the ideal unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2Serde(pub Unitary2);

impl Serialize for Unitary2Serde {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = &self.0;
        let rows: Vec<[[f64; 2]; 2]> = (0..2)
            .map(|r| [[m[(r, 0)].re, m[(r, 0)].im], [m[(r, 1)].re, m[(r, 1)].im]])
            .collect();
        rows.serialize(s)
    }
}

impl CompiledSequence {
    /// Gate-frame unitary of the compiled waveform under `spec`.
    pub fn realized_unitary(&self, spec: &CqbSpec, calib: &CalibratedGateSet) -> Result<Unitary2> {
        let u = unitary_of_waveform(spec, &self.waveform, ZFrame::Lab)?;
        Ok(calib.to_gate_frame(&u))
    }

    pub fn infidelity(&self, spec: &CqbSpec, calib: &CalibratedGateSet) -> Result<f64> {
        let u = self.realized_unitary(spec, calib)?;
        Ok(crate::linalg::infidelity2(&u, &self.ideal.0))
    }
}

/// Emission stream of one CQB.
#[derive(Debug, Clone)]
pub(crate) struct Track<'a> {
    calib: &'a CalibratedGateSet,
    mode: NegativeMode,
    x_window: Vec<f64>,
    y_window: Vec<f64>,
    y_offset: f64,
    step: f64,
    pub(crate) samples: Vec<f64>,
    pub(crate) annotations: Vec<Annotation>,
    pub(crate) timing: Vec<GatePrimitive>,
    pub(crate) pending: f64,
    pub(crate) ideal: Unitary2,
    start_time: f64,
}

impl<'a> Track<'a> {
    pub(crate) fn new(calib: &'a CalibratedGateSet, mode: NegativeMode, pending: f64, start_time: f64) -> Result<Self> {
        calib.validate()?;
        if !pending.is_finite() {
            return Err(Error::NonFinite("Z ledger".into()));
        }
        let window = calib.window();
        Ok(Self {
            calib,
            mode,
            x_window: synth_xy_pulse(&window, Axis::X, Sign::Plus)?.samples().to_vec(),
            y_window: synth_xy_pulse(&window, Axis::Y, Sign::Plus)?.samples().to_vec(),
            y_offset: calib.y_axis_offset()?,
            step: calib.z_step(),
            samples: Vec::new(),
            annotations: Vec::new(),
            timing: Vec::new(),
            pending,
            ideal: Unitary2::identity(),
            start_time,
        })
    }

    pub(crate) fn dt(&self) -> f64 {
        self.calib.sample_period
    }

    pub(crate) fn now(&self) -> f64 {
        self.start_time + self.samples.len() as f64 * self.dt()
    }

    pub(crate) fn step(&self) -> f64 {
        self.step
    }

    fn annotate(&mut self, label: &str, start: usize) {
        if self.samples.len() > start {
            self.annotations.push(Annotation {
                label: label.to_string(),
                start,
                end: self.samples.len(),
            });
        }
    }

    /// Representative of `phase` mod 2π in [−step/2, 2π − step/2).
    fn reduce(&self, phase: f64) -> f64 {
        let t = phase.rem_euclid(TAU);
        if t >= TAU - 0.5 * self.step {
            t - TAU
        } else {
            t
        }
    }

    /// Idle samples that best realize `phase`, never negative.
    pub(crate) fn idle_count(&self, phase: f64) -> usize {
        (self.reduce(phase) / self.step).round().max(0.0) as usize
    }

    /// Realizes the pending phase as idle time; returns the sample count.
    pub(crate) fn flush(&mut self) -> usize {
        let n = self.idle_count(self.pending);
        let start = self.samples.len();
        self.samples.extend(std::iter::repeat(0.0).take(n));
        self.annotate("Z", start);
        self.pending = self.reduce(self.pending) - n as f64 * self.step;
        n
    }

    /// Zero-detuning samples that are not meant as a Z rotation.
    pub(crate) fn pad(&mut self, n: usize, label: &str) {
        let start = self.samples.len();
        self.samples.extend(std::iter::repeat(0.0).take(n));
        self.pending -= n as f64 * self.step;
        self.annotate(label, start);
    }

    /// Zero-detuning samples during which the frame advances by `phase`.
    pub(crate) fn hold(&mut self, n: usize, phase: f64, label: &str) {
        let start = self.samples.len();
        self.samples.extend(std::iter::repeat(0.0).take(n));
        self.pending -= phase;
        self.annotate(label, start);
    }

    fn window(&mut self, axis: Axis, sign: Sign) {
        let src = match axis {
            Axis::X => &self.x_window,
            Axis::Y => &self.y_window,
        };
        let f = sign.factor();
        let start = self.samples.len();
        self.samples.extend(src.iter().map(|v| f * v));
        let label = match (axis, sign) {
            (Axis::X, Sign::Plus) => "X+",
            (Axis::X, Sign::Minus) => "X-",
            (Axis::Y, Sign::Plus) => "Y+",
            (Axis::Y, Sign::Minus) => "Y-",
        };
        self.annotate(label, start);
    }

    fn xy(&mut self, axis: Axis, sign: Sign) {
        let offset = if axis == Axis::Y { self.y_offset } else { 0.0 };
        let (sign, sandwich) = match (sign, self.mode) {
            (Sign::Minus, NegativeMode::ZSandwich) => (Sign::Plus, true),
            _ => (sign, false),
        };
        if sandwich {
            self.pending += PI;
        }
        self.pending += offset;
        self.flush();
        self.window(axis, sign);
        self.pending -= offset;
        if sandwich {
            self.pending += PI;
        }
    }

    /// Emits one single-CQB primitive and records its timing.
    pub(crate) fn push(&mut self, g: &GatePrimitive) -> Result<()> {
        let t0 = self.now();
        let n0 = self.samples.len();
        let mut rec = *g;
        rec.start = t0;
        match g.kind {
            GateKind::XHalf(s) => {
                self.xy(Axis::X, s);
                rec.snap_error = self.window_snap();
            }
            GateKind::YHalf(s) => {
                self.xy(Axis::Y, s);
                rec.snap_error = self.window_snap();
            }
            GateKind::Z(a) => {
                self.pending += a;
                self.flush();
                rec.snap_error = -self.pending / (TAU * self.calib.measured_gap_hz);
            }
            GateKind::Idle(d) => {
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(Error::Config(format!("idle duration {d} must be ≥ 0")));
                }
                let n = (d / self.dt()).round() as usize;
                self.pad(n, "I");
                rec.snap_error = n as f64 * self.dt() - d;
            }
            GateKind::Cz => {
                return Err(Error::Config("CZ in a single-CQB sequence".into()));
            }
        }
        rec.duration = (self.samples.len() - n0) as f64 * self.dt();
        self.ideal = sequence_unitary(std::slice::from_ref(g))? * self.ideal;
        self.timing.push(rec);
        Ok(())
    }

    pub(crate) fn push_clifford(&mut self, c: CliffordId) -> Result<()> {
        let start = self.samples.len();
        for g in clifford_to_primitives(c) {
            self.push(&g)?;
        }
        self.annotate(&c.to_string(), start);
        Ok(())
    }

    pub(crate) fn push_item(&mut self, item: &SeqItem) -> Result<()> {
        match item {
            SeqItem::Clifford(c) => self.push_clifford(*c),
            SeqItem::Gate(g) => self.push(g),
        }
    }

    fn window_snap(&self) -> f64 {
        let (td, _) = self.calib.window().snap_errors();
        td
    }

    pub(crate) fn into_waveform(self) -> Result<(Waveform, Vec<GatePrimitive>, Unitary2, f64)> {
        let mut w = Waveform::new(self.samples, self.calib.sample_period)?.with_start_time(self.start_time);
        for a in &self.annotations {
            w.annotate(a.label.clone(), a.start, a.end);
        }
        Ok((w, self.timing, self.ideal, self.pending))
    }
}

/// Compiles `seq` for CQB `qubit` (0 = A, 1 = B) and updates its ledger
/// entry with the carried residual phase and elapsed time.
pub fn compile_sequence(
    seq: &[SeqItem],
    calib: &CalibratedGateSet,
    ledger: &mut ZLedger,
    qubit: usize,
    mode: NegativeMode,
) -> Result<CompiledSequence> {
    if qubit > 1 {
        return Err(Error::Config(format!("qubit index {qubit} (expected 0 or 1)")));
    }
    ledger.validate()?;
    let mut track = Track::new(calib, mode, ledger.phase[qubit], ledger.time[qubit])?;
    for item in seq {
        track.push_item(item)?;
    }
    if !seq.is_empty() {
        track.flush();
    }
    let (waveform, timing, ideal, pending) = track.into_waveform()?;
    ledger.phase[qubit] = pending;
    ledger.time[qubit] += waveform.duration();
    Ok(CompiledSequence {
        waveform,
        timing,
        ideal: Unitary2Serde(ideal),
    })
}

/// Ideal gate-frame unitary of a sequence.
pub fn ideal_unitary(seq: &[SeqItem]) -> Result<Unitary2> {
    seq.iter().try_fold(Unitary2::identity(), |acc, item| {
        let u = match item {
            SeqItem::Clifford(c) => super::clifford::clifford_unitary(*c),
            SeqItem::Gate(g) => sequence_unitary(std::slice::from_ref(g))?,
        };
        Ok(u * acc)
    })
}
