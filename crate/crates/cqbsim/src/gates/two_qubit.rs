// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-CQB circuits: per-CQB tracks joined at each CZ.
//!
//! A CZ first pads the earlier track so both start together. During the
//! schedule each CQB frame advances by η·T_CZ, which the ledger records; the
//! compensating idle is emitted lazily before that CQB's next X/Y window. At
//! the end both tracks receive final Z idles chosen jointly so they finish
//! on the same sample with the smallest residual frame error.

use std::f64::consts::PI;

use serde::Serialize;

use super::circuit::{CircuitOp, Target};
use super::clifford::clifford_unitary;
use super::compiler::{NegativeMode, SeqItem, Track, ZLedger};
use super::primitive::{sequence_unitary, GateKind, GatePrimitive};
use crate::calibration::{CalibratedGateSet, CzCalibration};
use crate::device::TwoCqbSpec;
use crate::error::{Error, Result};
use crate::linalg::{kron2, rz, wrap_pi, Unitary2, Unitary4, C64};
use crate::propagator::{two_cqb_unitary, TwoQubitDrive};
use crate::waveform::Waveform;

/// Samples searched for the final joint alignment.
pub const ALIGN_SEARCH: usize = 2000;

/// Frame error above which a CZ resynchronization is reported as failed.
pub const MAX_RESYNC_RESIDUAL: f64 = PI / 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoQubitProgram {
    pub a: Waveform,
    pub b: Waveform,
    /// Pair detuning: parking outside CZ schedules.
    pub pair_detuning_hz: Vec<f64>,
    /// ζ during CZ schedules, zero elsewhere.
    pub zeta_cz_hz: Vec<f64>,
    pub timing: Vec<(Target, GatePrimitive)>,
    /// Largest carried frame error at the end [rad].
    pub residual_phase: f64,
    /// Per-CQB Z phase still owed at the end (the ledger entries) [rad].
    pub frame_phase: [f64; 2],
    #[serde(skip)]
    pub ideal: Unitary4,
}

pub fn cz_ideal() -> Unitary4 {
    let mut u = Unitary4::identity();
    u[(3, 3)] = C64::new(-1.0, 0.0);
    u
}

fn lift(target: Target, u: &Unitary2) -> Unitary4 {
    match target {
        Target::A => kron2(u, &Unitary2::identity()),
        _ => kron2(&Unitary2::identity(), u),
    }
}

fn item_unitary(item: &SeqItem) -> Result<Unitary2> {
    match item {
        SeqItem::Clifford(c) => Ok(clifford_unitary(*c)),
        SeqItem::Gate(g) => sequence_unitary(std::slice::from_ref(g)),
    }
}

/// Compiles a two-CQB circuit. `calib[0]` drives CQB A, `calib[1]` CQB B.
pub fn compile_two_qubit(
    ops: &[CircuitOp],
    two: &TwoCqbSpec,
    calib: [&CalibratedGateSet; 2],
    cz: &CzCalibration,
    ledger: &mut ZLedger,
    mode: NegativeMode,
) -> Result<TwoQubitProgram> {
    ledger.validate()?;
    cz.validate()?;
    if (calib[0].sample_period - calib[1].sample_period).abs() > 1e-18
        || (calib[0].sample_period - cz.schedule.sample_period).abs() > 1e-18
    {
        return Err(Error::Config("CQB gate sets and CZ use different sample periods".into()));
    }
    let mut tracks = [
        Track::new(calib[0], mode, ledger.phase[0], ledger.time[0])?,
        Track::new(calib[1], mode, ledger.phase[1], ledger.time[1])?,
    ];
    let eta = [cz.eta_a, cz.eta_b];
    ledger.eta = eta;
    let cz_det = cz.schedule.detuning_trace()?;
    let cz_zeta = cz.schedule.zeta_trace(&two.zz_profile)?;
    let mut detuning = Vec::new();
    let mut zeta = Vec::new();
    let mut timing = Vec::new();
    let mut ideal = Unitary4::identity();
    let fill = |v: &mut Vec<f64>, len: usize, x: f64| v.resize(len.max(v.len()), x);
    for op in ops {
        match (op.target, op.item) {
            (Target::Both, SeqItem::Gate(GatePrimitive { kind: GateKind::Cz, .. })) => {
                let len = tracks[0].samples.len().max(tracks[1].samples.len());
                for t in tracks.iter_mut() {
                    let gap = len - t.samples.len();
                    t.pad(gap, "sync");
                }
                fill(&mut detuning, len, two.parking_detuning_hz);
                fill(&mut zeta, len, 0.0);
                let mut rec = GatePrimitive::cz();
                rec.start = tracks[0].now();
                rec.duration = cz.duration;
                for (q, t) in tracks.iter_mut().enumerate() {
                    t.hold(cz_det.len(), eta[q] * cz.duration, "CZ");
                }
                detuning.extend_from_slice(&cz_det);
                zeta.extend_from_slice(&cz_zeta);
                timing.push((Target::Both, rec));
                ideal = cz_ideal() * ideal;
            }
            (Target::Both, _) => return Err(Error::Config("only CZ may target both CQBs".into())),
            (t, item) => {
                let q = t.index().expect("single target");
                let before = tracks[q].timing.len();
                tracks[q].push_item(&item)?;
                timing.extend(tracks[q].timing[before..].iter().map(|g| (t, *g)));
                ideal = lift(t, &item_unitary(&item)?) * ideal;
            }
        }
    }
    // Final joint alignment.
    let (la, lb) = (tracks[0].samples.len() as i64, tracks[1].samples.len() as i64);
    let steps = [tracks[0].step(), tracks[1].step()];
    let pend = [tracks[0].pending, tracks[1].pending];
    let cost = |na: i64, nb: i64| {
        wrap_pi(pend[0] - na as f64 * steps[0])
            .abs()
            .max(wrap_pi(pend[1] - nb as f64 * steps[1]).abs())
    };
    let mut best = (f64::INFINITY, 0i64, 0i64);
    for nb in 0..=ALIGN_SEARCH as i64 {
        let na = nb + lb - la;
        if na < 0 {
            continue;
        }
        let c = cost(na, nb);
        if c < best.0 - 1e-15 {
            best = (c, na, nb);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Numeric("final alignment exceeds the search window".into()));
    }
    let n_final = [best.1 as usize, best.2 as usize];
    for (q, t) in tracks.iter_mut().enumerate() {
        t.pad(n_final[q], "Z");
        t.pending = wrap_pi(t.pending);
    }
    let total = tracks[0].samples.len();
    fill(&mut detuning, total, two.parking_detuning_hz);
    fill(&mut zeta, total, 0.0);
    let [ta, tb] = tracks;
    let (a, _, _, pa) = ta.into_waveform()?;
    let (b, _, _, pb) = tb.into_waveform()?;
    ledger.phase = [pa, pb];
    ledger.time[0] += a.duration();
    ledger.time[1] += b.duration();
    Ok(TwoQubitProgram {
        a,
        b,
        pair_detuning_hz: detuning,
        zeta_cz_hz: zeta,
        timing,
        residual_phase: best.0,
        frame_phase: [pa, pb],
        ideal,
    })
}

/// A single calibrated CZ followed by compensatory Z idles on both CQBs.
pub fn cz_with_resync(
    two: &TwoCqbSpec,
    calib: [&CalibratedGateSet; 2],
    cz: &CzCalibration,
    ledger: &mut ZLedger,
) -> Result<TwoQubitProgram> {
    let op = CircuitOp {
        target: Target::Both,
        item: GatePrimitive::cz().into(),
    };
    let p = compile_two_qubit(&[op], two, calib, cz, ledger, NegativeMode::SignFlip)?;
    if p.residual_phase > MAX_RESYNC_RESIDUAL {
        return Err(Error::Numeric(format!(
            "CZ resynchronization leaves {:.3e} rad",
            p.residual_phase
        )));
    }
    Ok(p)
}

impl TwoQubitProgram {
    /// Gate-frame computational-block propagator. With `residual_zz` the
    /// parking ζ acts outside CZ schedules too.
    pub fn realized_unitary(
        &self,
        two: &TwoCqbSpec,
        calib: [&CalibratedGateSet; 2],
        residual_zz: bool,
    ) -> Result<Unitary4> {
        let zeta: Vec<f64> = if residual_zz {
            let park = two.residual_zeta()?;
            self.zeta_cz_hz
                .iter()
                .map(|&z| if z != 0.0 { z } else { park })
                .collect()
        } else {
            self.zeta_cz_hz.clone()
        };
        let u = two_cqb_unitary(
            two,
            &TwoQubitDrive {
                eps_a: self.a.samples(),
                eps_b: self.b.samples(),
                zeta: &zeta,
                dt: self.a.sample_period(),
            },
        )?;
        let (za, zb) = (calib[0].x_axis_azimuth, calib[1].x_axis_azimuth);
        Ok(kron2(&rz(-za), &rz(-zb)) * u * kron2(&rz(za), &rz(zb)))
    }

    /// Ideal unitary with the still-owed ledger phases left unapplied.
    pub fn frame_ideal(&self) -> Unitary4 {
        kron2(&rz(-self.frame_phase[0]), &rz(-self.frame_phase[1])) * self.ideal
    }

    /// Infidelity against [`Self::frame_ideal`].
    pub fn infidelity(&self, two: &TwoCqbSpec, calib: [&CalibratedGateSet; 2], residual_zz: bool) -> Result<f64> {
        let u = self.realized_unitary(two, calib, residual_zz)?;
        Ok(1.0 - crate::linalg::trace_fidelity4(&u, &self.frame_ideal()))
    }

    /// Infidelity against the bare ideal circuit.
    pub fn raw_infidelity(&self, two: &TwoCqbSpec, calib: [&CalibratedGateSet; 2], residual_zz: bool) -> Result<f64> {
        let u = self.realized_unitary(two, calib, residual_zz)?;
        Ok(1.0 - crate::linalg::trace_fidelity4(&u, &self.ideal))
    }
}
