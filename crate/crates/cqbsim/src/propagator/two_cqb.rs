// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-CQB evolution with an effective σz⊗σz coupling ζ(t).
//!
//! `H = π(Δ_A σz⊗I + Δ_B I⊗σz) − π(ε_A σx⊗I + ε_B I⊗σx) + (πζ/2) σz⊗σz`
//! (angular units, all rates in Hz). Samples where both detunings vanish are
//! diagonal and propagated exactly; otherwise each sample uses the symmetric
//! split ZZ(dt/2)·(U_A⊗U_B)·ZZ(dt/2).

use std::f64::consts::PI;

use nalgebra::{SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use super::step_unitary;
use crate::device::{TwoCqbSpec, ZzProfile};
use crate::error::{Error, Result};
use crate::linalg::{kron2, Unitary4, C64};
use crate::waveform::GaussianRamp;

/// Parking → operating → parking detuning schedule of a CZ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzSchedule {
    pub parking_detuning_hz: f64,
    pub operating_detuning_hz: f64,
    /// Length of each Gaussian ramp.
    pub ramp_duration: f64,
    /// 1/e² constant of the ramps; at most a quarter of the ramp length.
    pub ramp_time_constant: f64,
    pub hold: f64,
    pub sample_period: f64,
}

impl CzSchedule {
    fn n(&self, t: f64) -> usize {
        (t / self.sample_period).round() as usize
    }

    pub fn n_ramp(&self) -> usize {
        self.n(self.ramp_duration)
    }

    pub fn n_hold(&self) -> usize {
        self.n(self.hold)
    }

    pub fn n_samples(&self) -> usize {
        2 * self.n_ramp() + self.n_hold()
    }

    pub fn duration(&self) -> f64 {
        self.n_samples() as f64 * self.sample_period
    }

    pub fn detuning_trace(&self) -> Result<Vec<f64>> {
        let dt = self.sample_period;
        let mut out = Vec::with_capacity(self.n_samples());
        if self.n_ramp() > 0 {
            let up = GaussianRamp::new(
                self.parking_detuning_hz,
                self.operating_detuning_hz,
                self.ramp_time_constant,
                self.n_ramp() as f64 * dt,
            )?;
            out.extend(up.sample(dt)?.samples());
        }
        out.extend(std::iter::repeat(self.operating_detuning_hz).take(self.n_hold()));
        if self.n_ramp() > 0 {
            let down = GaussianRamp::new(
                self.operating_detuning_hz,
                self.parking_detuning_hz,
                self.ramp_time_constant,
                self.n_ramp() as f64 * dt,
            )?;
            out.extend(down.sample(dt)?.samples());
        }
        Ok(out)
    }

    pub fn zeta_trace(&self, profile: &ZzProfile) -> Result<Vec<f64>> {
        self.detuning_trace()?
            .into_iter()
            .map(|d| profile.zeta_at(d))
            .collect()
    }
}

/// Magnitude of the conditional phase 2π∫ζ dt for a held ζ trace.
pub fn zz_phase(zeta: &[f64], dt: f64) -> f64 {
    2.0 * PI * zeta.iter().sum::<f64>() * dt
}

/// Sampled two-CQB drive; all slices share one length.
#[derive(Debug, Clone, Copy)]
pub struct TwoQubitDrive<'a> {
    pub eps_a: &'a [f64],
    pub eps_b: &'a [f64],
    pub zeta: &'a [f64],
    pub dt: f64,
}

fn diag_step(gap_a: f64, gap_b: f64, zeta: f64, t: f64) -> [C64; 4] {
    // Energies (angular) of |00>, |01>, |10>, |11>.
    let e = [
        PI * (gap_a + gap_b) + 0.5 * PI * zeta,
        PI * (gap_a - gap_b) - 0.5 * PI * zeta,
        PI * (-gap_a + gap_b) - 0.5 * PI * zeta,
        PI * (-gap_a - gap_b) + 0.5 * PI * zeta,
    ];
    e.map(|x| C64::from_polar(1.0, -x * t))
}

fn zz_half(zeta: f64, t: f64) -> [C64; 4] {
    let p = C64::from_polar(1.0, -0.5 * PI * zeta * t);
    [p, p.conj(), p.conj(), p]
}

fn scale_rows(d: &[C64; 4], m: &mut Unitary4) {
    for r in 0..4 {
        for c in 0..4 {
            m[(r, c)] *= d[r];
        }
    }
}

/// Computational-block propagator of a two-CQB drive.
pub fn two_cqb_unitary(spec: &TwoCqbSpec, drive: &TwoQubitDrive) -> Result<Unitary4> {
    let n = drive.zeta.len();
    if drive.eps_a.len() != n || drive.eps_b.len() != n {
        return Err(Error::Config("two-CQB drive traces differ in length".into()));
    }
    let all = drive.eps_a.iter().chain(drive.eps_b).chain(drive.zeta);
    if all.clone().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("two-CQB drive".into()));
    }
    let (ga, gb) = (spec.cqb_a.gap_hz, spec.cqb_b.gap_hz);
    let dt = drive.dt;
    let mut u = Unitary4::identity();
    let mut k = 0;
    while k < n {
        let (a, b, z) = (drive.eps_a[k], drive.eps_b[k], drive.zeta[k]);
        let mut j = k + 1;
        while j < n && drive.eps_a[j] == a && drive.eps_b[j] == b && drive.zeta[j] == z {
            j += 1;
        }
        let run = j - k;
        if a == 0.0 && b == 0.0 {
            scale_rows(&diag_step(ga, gb, z, run as f64 * dt), &mut u);
        } else {
            let local = kron2(&step_unitary(ga, a, dt), &step_unitary(gb, b, dt));
            let h = zz_half(z, 0.5 * dt);
            let mut step = local;
            scale_rows(&h, &mut step);
            for c in 0..4 {
                for r in 0..4 {
                    step[(r, c)] *= h[c];
                }
            }
            for _ in 0..run {
                u = step * u;
            }
        }
        k = j;
    }
    Ok(u)
}

/// Two-CQB state: a computational-block pure state or a 9×9 density matrix
/// over {0, 1, leak}⊗{0, 1, leak}.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoCqbState {
    Pure(Vector4<C64>),
    Density(Box<SMatrix<C64, 9, 9>>),
}

const COMP: [usize; 4] = [0, 1, 3, 4];

/// Evolves through a CZ schedule with both CQBs held at ε = 0.
pub fn evolve_two_cqb(spec: &TwoCqbSpec, state: &TwoCqbState, schedule: &CzSchedule) -> Result<TwoCqbState> {
    let zeta = schedule.zeta_trace(&spec.zz_profile)?;
    let zeros = vec![0.0; zeta.len()];
    let u = two_cqb_unitary(
        spec,
        &TwoQubitDrive {
            eps_a: &zeros,
            eps_b: &zeros,
            zeta: &zeta,
            dt: schedule.sample_period,
        },
    )?;
    Ok(match state {
        TwoCqbState::Pure(v) => TwoCqbState::Pure(u * v),
        TwoCqbState::Density(rho) => {
            let mut u9 = SMatrix::<C64, 9, 9>::identity();
            for (r, &i) in COMP.iter().enumerate() {
                for (c, &j) in COMP.iter().enumerate() {
                    u9[(i, j)] = u[(r, c)];
                }
            }
            TwoCqbState::Density(Box::new(u9 * **rho * u9.adjoint()))
        }
    })
}
