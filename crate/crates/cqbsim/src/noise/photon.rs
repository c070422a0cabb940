// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dephasing by photon-number fluctuations of a coherently driven readout
//! resonator.
//!
//! For a transmon the coherence follows the dispersive polaron solution
//!
//! ```text
//! c(τ) = exp[-(1/T2 + Γ)τ - i(ω_a + B)τ] · exp[A (1 - exp(-(κ/2 + iχ + iΔ_r)τ))]
//! ```
//!
//! with H = Δ_r a†a + χ a†a σz + drive, steady-state amplitudes
//! α_± = -iε / (κ/2 + i(Δ_r ± χ)), n̄ = |α_-|² (cavity settled with the
//! qubit in the ground state), and
//!
//! ```text
//! -iB - Γ = -2iχ α_+ α_-*
//! A       = -2iχ (α_- - α_+) α_-* / (κ/2 + i(Δ_r + χ))
//! ```
//!
//! A CQB sees the same fluctuations only through the quadratic map of
//! [`photon_noise_sensitivity`], simulated here as Ornstein–Uhlenbeck Stark
//! shifts on each transmon.

use std::f64::consts::{E, TAU};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{photon_noise_sensitivity, CqbSpec, TransmonSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::rng;

/// Resonator seen by one transmon. Frequencies are cyclic [Hz].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonNoiseSpec {
    pub n_bar: f64,
    pub kappa_hz: f64,
    pub chi_hz: f64,
    /// Drive detuning from the bare resonator Δ_r.
    #[serde(default)]
    pub detuning_hz: f64,
    /// Qubit detuning from the Ramsey clock ω_a.
    #[serde(default)]
    pub clock_detuning_hz: f64,
}

impl PhotonNoiseSpec {
    pub fn from_transmon(t: &TransmonSpec, n_bar: f64) -> Result<Self> {
        let missing = |f: &str| Error::field(format!("{}.{f}", t.name), "required for photon noise");
        let s = Self {
            n_bar,
            kappa_hz: t.kappa_hz.ok_or_else(|| missing("kappa_hz"))?,
            chi_hz: t.chi_hz.ok_or_else(|| missing("chi_hz"))?,
            detuning_hz: 0.0,
            clock_detuning_hz: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_bar >= 0.0 && self.n_bar.is_finite()) {
            return Err(Error::field("n_bar", "must be ≥ 0"));
        }
        if !(self.kappa_hz > 0.0 && self.kappa_hz.is_finite()) {
            return Err(Error::field("kappa_hz", "must be > 0"));
        }
        if !(self.chi_hz.is_finite() && self.detuning_hz.is_finite() && self.clock_detuning_hz.is_finite()) {
            return Err(Error::field("chi_hz", "must be finite"));
        }
        Ok(())
    }

    /// (Γ [1/s], B [rad/s], A) of the closed form.
    pub fn gambetta_terms(&self) -> (f64, f64, C64) {
        let k2 = 0.5 * TAU * self.kappa_hz;
        let chi = TAU * self.chi_hz;
        let dr = TAU * self.detuning_hz;
        let den_m = c(k2, dr - chi);
        let drive = self.n_bar.sqrt() * den_m.norm();
        let a_m = c(0.0, -drive) / den_m;
        let a_p = c(0.0, -drive) / c(k2, dr + chi);
        let prod = c(0.0, -2.0 * chi) * a_p * a_m.conj();
        let a = c(0.0, -2.0 * chi) * (a_m - a_p) * a_m.conj() / c(k2, dr + chi);
        (-prod.re, -prod.im, a)
    }

    /// Low-frequency Stark-shift standard deviation 2χ√n̄ [Hz].
    pub fn stark_sigma_hz(&self) -> f64 {
        2.0 * self.chi_hz.abs() * self.n_bar.sqrt()
    }

    /// Photon-number correlation time 2/κ [s].
    pub fn correlation_time(&self) -> f64 {
        2.0 / (TAU * self.kappa_hz)
    }
}

/// Complex Ramsey coherence of a transmon after free evolution `tau`.
pub fn gambetta_coherence(spec: &PhotonNoiseSpec, base_t2r: f64, tau: f64) -> C64 {
    let (gamma, b, a) = spec.gambetta_terms();
    let lam = c(0.5 * TAU * spec.kappa_hz, TAU * (spec.chi_hz + spec.detuning_hz));
    let wa = TAU * spec.clock_detuning_hz;
    let lin = c(-(1.0 / base_t2r + gamma) * tau, -(wa + b) * tau);
    (lin + a * (C64::from(1.0) - (-lam * tau).exp())).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyCurve {
    pub tau: Vec<f64>,
    /// Excited-state probability (1 + Re c)/2.
    pub p_e: Vec<f64>,
    /// |c(τ)|.
    pub envelope: Vec<f64>,
    /// First time at which the envelope reaches 1/e [s].
    pub t_1e: f64,
}

/// First root of `f(t) = 1/e` for a decaying envelope starting at 1.
fn one_over_e(f: impl Fn(f64) -> f64, scale: f64) -> Result<f64> {
    let target = 1.0 / E;
    let mut lo = 0.0;
    let mut step = scale / 64.0;
    let mut hi = step;
    let mut n = 0;
    while f(hi) > target {
        lo = hi;
        hi += step;
        n += 1;
        if n % 256 == 0 {
            step *= 2.0;
        }
        if n > 20_000 {
            return Err(Error::Convergence("envelope never reaches 1/e".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Transmon Ramsey curve with a driven resonator; the 1/e time is solved on
/// the continuous envelope, not the grid.
pub fn gambetta_ramsey(spec: &PhotonNoiseSpec, base_t2r: f64, taus: &[f64]) -> Result<RamseyCurve> {
    spec.validate()?;
    if !(base_t2r > 0.0) {
        return Err(Error::field("base_t2r", "must be > 0"));
    }
    let coh: Vec<C64> = taus.iter().map(|&t| gambetta_coherence(spec, base_t2r, t)).collect();
    let t_1e = one_over_e(|t| gambetta_coherence(spec, base_t2r, t).norm(), base_t2r)?;
    Ok(RamseyCurve {
        tau: taus.to_vec(),
        p_e: coh.iter().map(|z| 0.5 * (1.0 + z.re)).collect(),
        envelope: coh.iter().map(|z| z.norm()).collect(),
        t_1e,
    })
}

/// Linear interpolation of the first 1/e crossing on a sampled envelope.
pub(crate) fn grid_one_over_e(tau: &[f64], env: &[f64]) -> Option<(usize, f64)> {
    let target = 1.0 / E;
    (1..env.len()).find(|&i| env[i] <= target && env[i - 1] > target).map(|i| {
        let f = (env[i - 1] - target) / (env[i - 1] - env[i]);
        (i, tau[i - 1] + f * (tau[i] - tau[i - 1]))
    })
}

/// Which frequency the Stark shifts act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarkTarget {
    /// First-order shift of transmon A alone.
    Transmon,
    /// Quadratic CQB shift (δE_A − δE_B)²/(2Δ).
    Cqb,
}

/// Monte Carlo Ramsey under OU Stark shifts 2χ_i δn_i(t); `photon[i]`
/// belongs to transmon i. Fluctuations are zero-mean: the static Stark
/// offset is absorbed by the operating point.
#[allow(clippy::too_many_arguments)]
pub fn stark_ramsey_monte_carlo(
    spec: &CqbSpec,
    photon: &[PhotonNoiseSpec; 2],
    target: StarkTarget,
    base_t2r: f64,
    taus: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<RamseyCurve> {
    photon.iter().try_for_each(PhotonNoiseSpec::validate)?;
    if n_traj < 100 {
        return Err(Error::Config("photon Monte Carlo needs ≥ 100 trajectories".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) || taus.first().map_or(true, |&t| t < 0.0) {
        return Err(Error::Config("τ grid must be non-negative and increasing".into()));
    }
    let corr = photon.iter().map(PhotonNoiseSpec::correlation_time).fold(f64::INFINITY, f64::min);
    let dt = corr / 20.0;
    let sig = [photon[0].stark_sigma_hz(), photon[1].stark_sigma_hz()];
    let decay = [
        (-dt / photon[0].correlation_time()).exp(),
        (-dt / photon[1].correlation_time()).exp(),
    ];
    let kick = [(1.0 - decay[0] * decay[0]).sqrt(), (1.0 - decay[1] * decay[1]).sqrt()];
    let phases: Vec<Vec<f64>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k);
            let mut draw = || -> f64 { StandardNormal.sample(&mut r) };
            let mut x = [sig[0] * draw(), sig[1] * draw()];
            let mut phase = 0.0;
            let mut t = 0.0;
            let mut out = Vec::with_capacity(taus.len());
            for &tau in taus {
                while t + dt <= tau {
                    let df = match target {
                        StarkTarget::Transmon => x[0],
                        StarkTarget::Cqb => photon_noise_sensitivity(spec, x[0], x[1]),
                    };
                    phase += TAU * df * dt;
                    t += dt;
                    for i in 0..2 {
                        x[i] = decay[i] * x[i] + sig[i] * kick[i] * draw();
                    }
                }
                // Partial step up to τ without advancing the process.
                let df = match target {
                    StarkTarget::Transmon => x[0],
                    StarkTarget::Cqb => photon_noise_sensitivity(spec, x[0], x[1]),
                };
                out.push(phase + TAU * df * (tau - t));
            }
            out
        })
        .collect();
    let mut coh = vec![C64::from(0.0); taus.len()];
    for traj in &phases {
        for (acc, &p) in coh.iter_mut().zip(traj) {
            *acc += C64::from_polar(1.0, -p);
        }
    }
    let coh: Vec<C64> = coh
        .iter()
        .zip(taus)
        .map(|(z, &t)| z / n_traj as f64 * (-t / base_t2r).exp())
        .collect();
    let envelope: Vec<f64> = coh.iter().map(|z| z.norm()).collect();
    let t_1e = grid_one_over_e(taus, &envelope)
        .map(|(_, t)| t)
        .ok_or_else(|| Error::Convergence("Monte Carlo envelope never reaches 1/e on the τ grid".into()))?;
    Ok(RamseyCurve {
        tau: taus.to_vec(),
        p_e: coh.iter().map(|z| 0.5 * (1.0 + z.re)).collect(),
        envelope,
        t_1e,
    })
}
