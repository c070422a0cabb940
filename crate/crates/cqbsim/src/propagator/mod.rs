// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution under sampled detuning waveforms.
//!
//! Computational-block Hamiltonian (angular units, Δ and ε in Hz):
//! `H = π (Δ σz − ε σx)`, with |0⟩ the upper eigenstate at ε = 0. Idling for a
//! time t is then the rotation `Z(2πΔt)`. Each sample is treated as a
//! constant level and propagated with its exact 2×2 exponential.

mod lindblad;
mod two_cqb;

pub use lindblad::{evolve_lindblad, DissipatorStep, LeakageRates, Superop3};
pub use two_cqb::{
    evolve_two_cqb, two_cqb_unitary, zz_phase, CzSchedule, TwoCqbState, TwoQubitDrive,
};

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::linalg::{expm_pauli, rz, to_special, Mat3, Unitary2, C64, ONE, ZERO};
use crate::waveform::Waveform;

/// Basis index of the leakage level.
pub const LEAK: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZFrame {
    Lab,
    /// Rotating with the idle precession Z(2πΔt); for reporting only.
    RotatingAtDelta,
}

/// Density matrix over {|0⟩, |1⟩, |leak⟩}.
#[derive(Debug, Clone, PartialEq)]
pub struct CqbState {
    pub rho: Mat3,
    pub time: f64,
}

impl CqbState {
    pub fn basis(k: usize) -> Self {
        let mut rho = Mat3::zeros();
        rho[(k, k)] = ONE;
        Self { rho, time: 0.0 }
    }

    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn excited() -> Self {
        Self::basis(1)
    }

    pub fn leaked() -> Self {
        Self::basis(LEAK)
    }

    /// Pure state a|0⟩ + b|1⟩ (normalized internally).
    pub fn pure(a: C64, b: C64) -> Self {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let v = [a / n, b / n, ZERO];
        let rho = Matrix3::from_fn(|i, j| v[i] * v[j].conj());
        Self { rho, time: 0.0 }
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.rho[(0, 0)].re, self.rho[(1, 1)].re, self.rho[(2, 2)].re]
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::max_abs_diff(&self.rho, &self.rho.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Bloch vector of the computational block.
    pub fn bloch(&self) -> [f64; 3] {
        let r01 = self.rho[(0, 1)];
        [
            2.0 * r01.re,
            -2.0 * r01.im,
            self.rho[(0, 0)].re - self.rho[(1, 1)].re,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix".into()));
        }
        if self.hermiticity_error() > 1e-10 {
            return Err(Error::Numeric("density matrix not Hermitian".into()));
        }
        if (self.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric("density matrix trace ≠ 1".into()));
        }
        if self.min_eigenvalue() < -1e-9 {
            return Err(Error::Numeric("density matrix not positive semidefinite".into()));
        }
        Ok(())
    }

    /// Applies a computational-block unitary; the leak level is untouched.
    pub fn apply_unitary(&mut self, u: &Unitary2) {
        let u3 = embed3(u);
        self.rho = u3 * self.rho * u3.adjoint();
    }
}

pub(crate) fn embed3(u: &Unitary2) -> Mat3 {
    let mut m = Mat3::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(u);
    m[(2, 2)] = ONE;
    m
}

pub(crate) fn check_finite(w: &Waveform) -> Result<()> {
    if w.samples().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("waveform samples".into()));
    }
    Ok(())
}

/// Consecutive equal samples as (value, count).
pub(crate) fn runs(samples: &[f64]) -> impl Iterator<Item = (f64, usize)> + '_ {
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= samples.len() {
            return None;
        }
        let v = samples[i];
        let start = i;
        while i < samples.len() && samples[i] == v {
            i += 1;
        }
        Some((v, i - start))
    })
}

/// Propagator of a constant level `epsilon_hz` held for `t`.
pub fn step_unitary(gap_hz: f64, epsilon_hz: f64, t: f64) -> Unitary2 {
    expm_pauli([-PI * epsilon_hz, 0.0, PI * gap_hz], t)
}

/// Lab-frame propagator of a sample sequence, not phase-normalized.
pub fn propagate_samples(gap_hz: f64, samples: &[f64], dt: f64) -> Unitary2 {
    let mut u = Unitary2::identity();
    for (v, n) in runs(samples) {
        u = step_unitary(gap_hz, v, n as f64 * dt) * u;
    }
    u
}

/// Applies the time-ordered sample propagators to `state`.
pub fn evolve_coherent(spec: &CqbSpec, state: &CqbState, w: &Waveform) -> Result<CqbState> {
    check_finite(w)?;
    let u = propagate_samples(spec.gap_hz, w.samples(), w.sample_period());
    let mut out = state.clone();
    out.apply_unitary(&u);
    out.time += w.duration();
    Ok(out)
}

/// Computational-block propagator of `w`, normalized to det = 1.
pub fn unitary_of_waveform(spec: &CqbSpec, w: &Waveform, frame: ZFrame) -> Result<Unitary2> {
    check_finite(w)?;
    let u = propagate_samples(spec.gap_hz, w.samples(), w.sample_period());
    let u = match frame {
        ZFrame::Lab => u,
        ZFrame::RotatingAtDelta => rz(-2.0 * PI * spec.gap_hz * w.duration()) * u,
    };
    Ok(to_special(&u))
}

/// Bloch trajectory sampled after every waveform sample.
pub fn bloch_trajectory(spec: &CqbSpec, psi0: Vector2<C64>, w: &Waveform) -> Result<Vec<[f64; 3]>> {
    check_finite(w)?;
    let mut psi = psi0;
    let dt = w.sample_period();
    let mut out = Vec::with_capacity(w.len() + 1);
    let push = |p: &Vector2<C64>, out: &mut Vec<[f64; 3]>| {
        let b = crate::linalg::bloch(p);
        out.push([b[0], b[1], b[2]]);
    };
    push(&psi, &mut out);
    for &e in w.samples() {
        psi = step_unitary(spec.gap_hz, e, dt) * psi;
        push(&psi, &mut out);
    }
    Ok(out)
}
