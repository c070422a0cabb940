// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Initialization by a Landau–Zener sweep through a driven transition, and
//! readout by an adiabatic ramp away from degeneracy.
//!
//! Diabatic labels follow H = π(Δσz − εσx) with ε = ω₁ − ω₂: the transmon
//! state |g₁e₂⟩ is (|0⟩ + |1⟩)/√2 and |e₁g₂⟩ is (|0⟩ − |1⟩)/√2. |0⟩ is the
//! upper eigenstate at degeneracy. Far from degeneracy both the drive and
//! the slow dispersive readout address dressed eigenstates, which are
//! labeled by the diabatic state they are adiabatically connected to.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::linalg::{expm_pauli, C64};
use crate::propagator::{evolve_coherent, CqbState, LEAK};
use crate::waveform::{Waveform, DEFAULT_SAMPLE_PERIOD};

/// 1 − exp(−2πΩ²/ε̇) with Ω in rad/s and ε̇ in rad/s².
pub fn lz_excitation_probability(omega: f64, sweep_rate: f64) -> Result<f64> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::field("omega", "must be ≥ 0"));
    }
    if !(sweep_rate > 0.0 && sweep_rate.is_finite()) {
        return Err(Error::field("sweep_rate", "must be > 0"));
    }
    Ok(-(-TAU * omega * omega / sweep_rate).exp_m1())
}

/// The same probability with Ω in Hz and ε̇ in Hz/s.
pub fn lz_excitation_probability_hz(omega_hz: f64, sweep_rate_hz_per_s: f64) -> Result<f64> {
    lz_excitation_probability(TAU * omega_hz, TAU * sweep_rate_hz_per_s)
}

/// Coherent linear sweep of H = (ε̇t/2)σz + Ωσx (angular units) with the
/// detuning ε̇t running from −`half_span` to +`half_span`. Starts in the
/// instantaneous ground state and returns the probability of ending in it.
pub fn simulate_lz_sweep(omega: f64, sweep_rate: f64, half_span: f64, steps: usize) -> Result<f64> {
    if !(omega >= 0.0 && sweep_rate > 0.0 && half_span > 0.0) || steps == 0 {
        return Err(Error::Config("LZ sweep needs Ω ≥ 0, ε̇ > 0, span > 0 and steps > 0".into()));
    }
    let t_end = half_span / sweep_rate;
    let ground = |t: f64| {
        let (s, c) = (0.5 * omega.atan2(0.5 * sweep_rate * t)).sin_cos();
        Vector2::new(C64::from(-s), C64::from(c))
    };
    let dt = 2.0 * t_end / steps as f64;
    let mut psi = ground(-t_end);
    for k in 0..steps {
        let t = -t_end + (k as f64 + 0.5) * dt;
        psi = expm_pauli([omega, 0.0, 0.5 * sweep_rate * t], dt) * psi;
    }
    Ok(ground(t_end).dotc(&psi).norm_sqr())
}

/// Bloch-axis angle of H(ε) from the z axis.
fn mixing_angle(gap_hz: f64, epsilon_hz: f64) -> f64 {
    (-epsilon_hz).atan2(gap_hz)
}

/// Upper and lower eigenvectors of H(ε).
pub fn eigenstates(gap_hz: f64, epsilon_hz: f64) -> [Vector2<C64>; 2] {
    let (s, c) = (0.5 * mixing_angle(gap_hz, epsilon_hz)).sin_cos();
    [
        Vector2::new(C64::from(c), C64::from(s)),
        Vector2::new(C64::from(-s), C64::from(c)),
    ]
}

/// Index (0 = upper, 1 = lower) of the dressed state at ε that is mostly
/// |g₁e₂⟩.
fn g1e2_branch(gap_hz: f64, epsilon_hz: f64) -> usize {
    let plus = Vector2::new(C64::from(1.0), C64::from(1.0)) * C64::from(0.5f64.sqrt());
    let [up, lo] = eigenstates(gap_hz, epsilon_hz);
    if up.dotc(&plus).norm_sqr() >= lo.dotc(&plus).norm_sqr() {
        0
    } else {
        1
    }
}

/// Rising half-Gaussian exp(−2(t − T)²/τ²) over T = 2τ, shifted and
/// rescaled to run exactly from 0 to 1. τ is the 1/e² time constant.
fn gaussian_rise(tau: f64, dt: f64) -> Vec<f64> {
    let t_total = 2.0 * tau;
    let n = (t_total / dt).round() as usize;
    if n == 0 {
        return Vec::new();
    }
    let g = |t: f64| (-2.0 * (t - t_total).powi(2) / (tau * tau)).exp();
    let g0 = g(0.0);
    (0..n)
        .map(|k| (g((k as f64 + 0.5) * dt) - g0) / (1.0 - g0))
        .collect()
}

/// Far-detuned bias used for initialization and readout: transmon 1 at its
/// minimum and transmon 2 at its maximum.
pub fn default_far_detuning(spec: &CqbSpec) -> f64 {
    spec.transmon_a.f_min_hz - spec.transmon_b.f_max_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LzStage {
    /// Excitation probability from the closed form.
    Formula,
    /// Coherent two-level sweep.
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSchedule {
    /// Drive strength Ω_QB; the Autler–Townes splitting is 2Ω [Hz].
    pub omega_hz: f64,
    /// Qubit–drive detuning sweep rate [Hz/s].
    pub sweep_rate_hz_per_s: f64,
    /// Detuning range covered by the sweep [Hz].
    pub sweep_span_hz: f64,
    /// Bias detuning ε during the sweep [Hz].
    pub epsilon_start_hz: f64,
    /// 1/e² time constant of the Gaussian return ramp [s]; zero is sudden.
    pub ramp_tau: f64,
    pub sample_period: f64,
    pub lz_stage: LzStage,
}

impl InitSchedule {
    /// 10 MHz drive, 80 MHz sweep in 140 ns, 50 ns return ramp.
    pub fn default_for(spec: &CqbSpec) -> Self {
        Self {
            omega_hz: 10e6,
            sweep_rate_hz_per_s: 80e6 / 140e-9,
            sweep_span_hz: 80e6,
            epsilon_start_hz: default_far_detuning(spec),
            ramp_tau: 50e-9,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            lz_stage: LzStage::Formula,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_hz", self.omega_hz),
            ("sweep_rate_hz_per_s", self.sweep_rate_hz_per_s),
            ("sweep_span_hz", self.sweep_span_hz),
            ("sample_period", self.sample_period),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::field(name, "must be > 0"));
            }
        }
        if !(self.ramp_tau >= 0.0 && self.ramp_tau.is_finite()) {
            return Err(Error::field("ramp_tau", "must be ≥ 0"));
        }
        if !(self.epsilon_start_hz.is_finite() && self.epsilon_start_hz != 0.0) {
            return Err(Error::field("epsilon_start_hz", "must be finite and nonzero"));
        }
        Ok(())
    }

    /// 2πΩ²/ε̇ in angular units.
    pub fn adiabaticity(&self) -> f64 {
        TAU * (TAU * self.omega_hz).powi(2) / (TAU * self.sweep_rate_hz_per_s)
    }

    pub fn sweep_duration(&self) -> f64 {
        self.sweep_span_hz / self.sweep_rate_hz_per_s
    }

    pub fn ramp_duration(&self) -> f64 {
        2.0 * self.ramp_tau
    }

    pub fn total_duration(&self) -> f64 {
        self.sweep_duration() + self.ramp_duration()
    }

    /// ε(t) of the return ramp from `epsilon_start_hz` to degeneracy.
    pub fn return_ramp(&self) -> Result<Waveform> {
        let rise = gaussian_rise(self.ramp_tau, self.sample_period);
        let samples = rise.iter().map(|s| self.epsilon_start_hz * (1.0 - s)).collect();
        Waveform::new(samples, self.sample_period)
    }
}

/// Fidelity below which the return ramp is flagged as non-adiabatic.
pub const INIT_FIDELITY_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitResult {
    #[serde(skip)]
    pub state: CqbState,
    pub excitation_probability: f64,
    pub adiabaticity: f64,
    /// Eigenstate at degeneracy the dressed |g₁e₂⟩ branch connects to.
    pub prepared_index: usize,
    /// Overlap with that eigenstate, including the LZ stage.
    pub fidelity: f64,
    /// Same, conditioned on a successful LZ stage.
    pub ramp_fidelity: f64,
    pub total_duration: f64,
    pub adiabatic: bool,
}

impl InitResult {
    pub fn require_adiabatic(&self) -> Result<()> {
        if self.adiabatic {
            Ok(())
        } else {
            Err(Error::Numeric(format!(
                "non-adiabatic return ramp: eigenstate fidelity {:.6}",
                self.ramp_fidelity
            )))
        }
    }
}

/// LZ stage, then a coherent Gaussian return ramp. Population the sweep
/// leaves in |g₁g₂⟩ is reported on the leak level.
pub fn simulate_initialization(spec: &CqbSpec, sched: &InitSchedule) -> Result<InitResult> {
    spec.validate()?;
    sched.validate()?;
    let p_exc = match sched.lz_stage {
        LzStage::Formula => lz_excitation_probability_hz(sched.omega_hz, sched.sweep_rate_hz_per_s)?,
        LzStage::Coherent => {
            let steps = ((sched.sweep_duration() / sched.sample_period).ceil() as usize * 50).max(20_000);
            simulate_lz_sweep(
                TAU * sched.omega_hz,
                TAU * sched.sweep_rate_hz_per_s,
                PI * sched.sweep_span_hz,
                steps,
            )?
        }
    };
    let branch = g1e2_branch(spec.gap_hz, sched.epsilon_start_hz);
    let psi = eigenstates(spec.gap_hz, sched.epsilon_start_hz)[branch];
    let start = CqbState::pure(psi[0], psi[1]);
    let ramped = evolve_coherent(spec, &start, &sched.return_ramp()?)?;
    let pops = ramped.populations();
    // Adiabatic following keeps the energy ordering.
    let prepared_index = branch;
    let ramp_fidelity = pops[prepared_index];
    let mut rho = ramped.rho * C64::from(p_exc);
    rho[(LEAK, LEAK)] += C64::from(1.0 - p_exc);
    let state = CqbState {
        rho,
        time: sched.total_duration(),
    };
    Ok(InitResult {
        excitation_probability: p_exc,
        adiabaticity: sched.adiabaticity(),
        prepared_index,
        fidelity: p_exc * ramp_fidelity,
        ramp_fidelity,
        total_duration: sched.total_duration(),
        adiabatic: ramp_fidelity >= INIT_FIDELITY_THRESHOLD,
        state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutBasis {
    /// Measurement at degeneracy: only in-subspace versus leaked.
    EigenAtDegeneracy,
    /// Ramp away from degeneracy first: full |0⟩/|1⟩/leak classification.
    DiabaticAfterRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRamp {
    /// 1/e² time constant [s].
    pub tau: f64,
    pub epsilon_final_hz: f64,
    pub sample_period: f64,
}

impl ReadoutRamp {
    /// 50 ns ramp to the far-detuned bias.
    pub fn default_for(spec: &CqbSpec) -> Self {
        Self {
            tau: 50e-9,
            epsilon_final_hz: default_far_detuning(spec),
            sample_period: DEFAULT_SAMPLE_PERIOD,
        }
    }

    pub fn waveform(&self) -> Result<Waveform> {
        if !(self.tau >= 0.0 && self.sample_period > 0.0 && self.epsilon_final_hz.is_finite()) {
            return Err(Error::Config("readout ramp needs τ ≥ 0, dt > 0 and finite ε".into()));
        }
        let rise = gaussian_rise(self.tau, self.sample_period);
        // Slow near degeneracy, where the gap is smallest.
        let samples = rise.iter().rev().map(|s| self.epsilon_final_hz * (1.0 - s)).collect();
        Waveform::new(samples, self.sample_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutResult {
    pub basis: ReadoutBasis,
    /// Absent at degeneracy, where |0⟩ and |1⟩ are indistinguishable.
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub p_subspace: f64,
    pub p_leak: f64,
}

impl ReadoutResult {
    /// Applies an assignment matrix `m[reported][true]` to the |0⟩/|1⟩
    /// outcomes; columns must sum to one.
    pub fn with_confusion(mut self, m: [[f64; 2]; 2]) -> Result<Self> {
        for col in 0..2 {
            let s = m[0][col] + m[1][col];
            if (s - 1.0).abs() > 1e-9 || m.iter().any(|r| !(0.0..=1.0).contains(&r[col])) {
                return Err(Error::field("confusion", "columns must be probabilities summing to 1"));
            }
        }
        if let (Some(p0), Some(p1)) = (self.p0, self.p1) {
            self.p0 = Some(m[0][0] * p0 + m[0][1] * p1);
            self.p1 = Some(m[1][0] * p0 + m[1][1] * p1);
        }
        Ok(self)
    }
}

/// Classifies `state` in the requested basis. After the ramp, |0⟩ is the
/// dressed state continuously connected to the upper eigenstate.
pub fn simulate_readout_mapping(
    spec: &CqbSpec,
    state: &CqbState,
    basis: ReadoutBasis,
    ramp: &ReadoutRamp,
) -> Result<ReadoutResult> {
    state.validate()?;
    let pops = state.populations();
    let p_leak = pops[LEAK];
    let p_subspace = pops[0] + pops[1];
    let (p0, p1) = match basis {
        ReadoutBasis::EigenAtDegeneracy => (None, None),
        ReadoutBasis::DiabaticAfterRamp => {
            let out = evolve_coherent(spec, state, &ramp.waveform()?)?;
            let [up, lo] = eigenstates(spec.gap_hz, ramp.epsilon_final_hz);
            let block = out.rho.fixed_view::<2, 2>(0, 0).into_owned();
            let pop = |v: &Vector2<C64>| (v.adjoint() * block * v)[(0, 0)].re;
            (Some(pop(&up)), Some(pop(&lo)))
        }
    };
    Ok(ReadoutResult {
        basis,
        p0,
        p1,
        p_subspace,
        p_leak,
    })
}
