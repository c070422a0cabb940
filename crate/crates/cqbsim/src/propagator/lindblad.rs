// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Three-level Lindblad evolution with leakage to |leak⟩.
//!
//! Collapse channels: |0⟩→|leak⟩, |1⟩→|leak⟩, |0⟩↔|1⟩ at equal rates Γ_CQB/2
//! each way, and pure dephasing of the computational block. The dissipator
//! alone is solved exactly; it is combined with the coherent sample
//! propagators by Strang splitting. Zero-detuning runs commute with the
//! dissipator and are taken in a single exact step.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use super::{check_finite, embed3, runs, step_unitary, CqbState};
use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Unitary2, C64};
use crate::waveform::Waveform;

/// Largest accepted dt·Γ for any single rate.
pub const MAX_RATE_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LeakageRates {
    /// |1⟩ → |leak⟩ [1/s].
    pub leak_from_1: f64,
    /// |0⟩ → |leak⟩ [1/s].
    pub leak_from_0: f64,
    /// Intra-subspace relaxation Γ_CQB, split equally up and down [1/s].
    pub gamma_cqb: f64,
    /// Pure dephasing of the |0⟩/|1⟩ coherence [1/s].
    #[serde(default)]
    pub dephasing: f64,
}

impl LeakageRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("leak_from_1", self.leak_from_1),
            ("leak_from_0", self.leak_from_0),
            ("gamma_cqb", self.gamma_cqb),
            ("dephasing", self.dephasing),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::field(format!("rates.{name}"), "must be finite and ≥ 0"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.leak_from_1 == 0.0 && self.leak_from_0 == 0.0 && self.gamma_cqb == 0.0 && self.dephasing == 0.0
    }

    fn max_rate(&self) -> f64 {
        let g = 0.5 * self.gamma_cqb;
        (self.leak_from_0 + g).max(self.leak_from_1 + g) + self.dephasing
    }
}

/// Exact dissipator propagator over a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipatorStep {
    pop: [[f64; 2]; 2],
    dec01: f64,
    dec0l: f64,
    dec1l: f64,
}

impl DissipatorStep {
    pub fn new(rates: &LeakageRates, t: f64) -> Self {
        let g = 0.5 * rates.gamma_cqb;
        let out0 = rates.leak_from_0 + g;
        let out1 = rates.leak_from_1 + g;
        // exp(M t) for the symmetric rate matrix M = [[-out0, g], [g, -out1]].
        let m = -0.5 * (out0 + out1);
        let d = -0.5 * (out0 - out1);
        let s = d.hypot(g);
        let e = (m * t).exp();
        let ch = (s * t).cosh();
        let sh_over_s = if s * t < 1e-8 { t } else { (s * t).sinh() / s };
        let pop = [
            [e * (ch + sh_over_s * d), e * sh_over_s * g],
            [e * sh_over_s * g, e * (ch - sh_over_s * d)],
        ];
        let phi = rates.dephasing;
        Self {
            pop,
            dec01: (-(0.5 * (out0 + out1) + phi) * t).exp(),
            dec0l: (-(0.5 * out0 + 0.25 * phi) * t).exp(),
            dec1l: (-(0.5 * out1 + 0.25 * phi) * t).exp(),
        }
    }

    pub fn apply(&self, rho: &mut Mat3) {
        // Complex diagonals keep the map linear on non-Hermitian inputs.
        let p0 = rho[(0, 0)];
        let p1 = rho[(1, 1)];
        let q0 = p0 * self.pop[0][0] + p1 * self.pop[0][1];
        let q1 = p0 * self.pop[1][0] + p1 * self.pop[1][1];
        rho[(0, 0)] = q0;
        rho[(1, 1)] = q1;
        rho[(2, 2)] += (p0 + p1) - (q0 + q1);
        rho[(0, 1)] *= self.dec01;
        rho[(1, 0)] *= self.dec01;
        rho[(0, 2)] *= self.dec0l;
        rho[(2, 0)] *= self.dec0l;
        rho[(1, 2)] *= self.dec1l;
        rho[(2, 1)] *= self.dec1l;
    }
}

fn conj_apply(u: &Unitary2, rho: &mut Mat3) {
    let u3 = embed3(u);
    *rho = u3 * *rho * u3.adjoint();
}

pub fn evolve_lindblad(
    spec: &CqbSpec,
    rates: &LeakageRates,
    state: &CqbState,
    w: &Waveform,
) -> Result<CqbState> {
    rates.validate()?;
    check_finite(w)?;
    let dt = w.sample_period();
    if dt * rates.max_rate() > MAX_RATE_STEP {
        return Err(Error::Config(format!(
            "sample period {dt:e} s too long for rate {:e} 1/s",
            rates.max_rate()
        )));
    }
    let half = DissipatorStep::new(rates, 0.5 * dt);
    let mut rho = state.rho;
    for (v, n) in runs(w.samples()) {
        let t = n as f64 * dt;
        if v == 0.0 {
            conj_apply(&step_unitary(spec.gap_hz, 0.0, t), &mut rho);
            DissipatorStep::new(rates, t).apply(&mut rho);
        } else {
            let u = step_unitary(spec.gap_hz, v, dt);
            for _ in 0..n {
                half.apply(&mut rho);
                conj_apply(&u, &mut rho);
                half.apply(&mut rho);
            }
        }
    }
    Ok(CqbState {
        rho,
        time: state.time + w.duration(),
    })
}

/// Linear map on column-stacked 3×3 density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superop3(pub SMatrix<C64, 9, 9>);

impl Superop3 {
    pub fn identity() -> Self {
        Self(SMatrix::identity())
    }

    /// Builds the map by propagating the nine matrix units.
    pub fn from_fn(mut f: impl FnMut(&Mat3) -> Result<Mat3>) -> Result<Self> {
        let mut m = SMatrix::<C64, 9, 9>::zeros();
        for col in 0..9 {
            let mut e = Mat3::zeros();
            e[col] = C64::new(1.0, 0.0);
            let out = f(&e)?;
            for row in 0..9 {
                m[(row, col)] = out[row];
            }
        }
        Ok(Self(m))
    }

    pub fn from_waveform(spec: &CqbSpec, rates: &LeakageRates, w: &Waveform) -> Result<Self> {
        Self::from_fn(|e| {
            let st = CqbState { rho: *e, time: 0.0 };
            Ok(evolve_lindblad(spec, rates, &st, w)?.rho)
        })
    }

    /// Exact zero-detuning idle of duration `t`.
    pub fn idle(spec: &CqbSpec, rates: &LeakageRates, t: f64) -> Self {
        let u = step_unitary(spec.gap_hz, 0.0, t);
        let d = DissipatorStep::new(rates, t);
        Self::from_fn(|e| {
            let mut r = *e;
            conj_apply(&u, &mut r);
            d.apply(&mut r);
            Ok(r)
        })
        .expect("infallible")
    }

    pub fn from_unitary(u: &Unitary2) -> Self {
        Self::from_fn(|e| {
            let mut r = *e;
            conj_apply(u, &mut r);
            Ok(r)
        })
        .expect("infallible")
    }

    pub fn apply(&self, rho: &Mat3) -> Mat3 {
        let v = SMatrix::<C64, 9, 1>::from_column_slice(rho.as_slice());
        let out = self.0 * v;
        Mat3::from_column_slice(out.as_slice())
    }

    /// `other` after `self`.
    pub fn then(&self, other: &Superop3) -> Superop3 {
        Superop3(other.0 * self.0)
    }
}
