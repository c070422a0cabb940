// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ramsey and Hahn-echo Monte Carlo under quasi-static flux noise.
//!
//! Ramsey is X(π/2), k·Z(2π), X(π/2); echo is X(π/2), k/2·Z(2π), Y(π/2)
//! Y(π/2), k/2·Z(2π), X(π/2). Both return |1⟩ when noiseless. Each
//! trajectory shifts ε by the detuning its flux offsets produce, through the
//! gate windows and the idles alike.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decay::{DecayFit, DecayModel, FitParam};
use super::flux::{epsilon_offset, FluxNoiseSpec};
use super::photon::grid_one_over_e;
use crate::calibration::CalibratedGateSet;
use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::propagator::{propagate_samples, step_unitary};
use crate::rng;
use crate::waveform::{synth_xy_pulse, Axis, Sign};

pub const MIN_TRAJECTORIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceProtocol {
    Ramsey,
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub protocol: CoherenceProtocol,
    /// Requested free-evolution times [s]; each is rounded to whole Z(2π)
    /// periods (even for echo).
    pub taus: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    /// Leakage out of the CQB subspace during the sequence [1/s].
    #[serde(default)]
    pub leak_rate: f64,
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj < MIN_TRAJECTORIES {
            return Err(Error::Config(format!(
                "n_traj = {} below the minimum of {MIN_TRAJECTORIES}",
                self.n_traj
            )));
        }
        if self.taus.len() < 3 || self.taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Config("coherence τ grid needs ≥ 3 non-negative times".into()));
        }
        if !(self.leak_rate >= 0.0) {
            return Err(Error::field("leak_rate", "must be ≥ 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceResult {
    pub protocol: CoherenceProtocol,
    /// Realized free-evolution time per point [s].
    pub tau: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub pleak: Vec<f64>,
    /// Ensemble contrast 2·P(1|no leak) − 1 and its Monte Carlo error.
    pub contrast: Vec<f64>,
    pub contrast_stderr: Vec<f64>,
    /// T2 as the 1/e time of the contrast; absent when the grid never decays that far.
    pub fit: DecayFit,
    pub t2: Option<f64>,
}

fn p1(u: &Unitary2) -> f64 {
    u[(1, 0)].norm_sqr()
}

struct Windows {
    x: Vec<f64>,
    y: Vec<f64>,
    dt: f64,
}

impl Windows {
    fn unitary(&self, gap: f64, samples: &[f64], offset: f64) -> Unitary2 {
        let shifted: Vec<f64> = samples.iter().map(|s| s + offset).collect();
        propagate_samples(gap, &shifted, self.dt)
    }
}

/// Idle lengths in samples for `k` whole periods of the measured gap.
fn idle_samples(calib: &CalibratedGateSet, periods: u64) -> u64 {
    (periods as f64 * calib.t_delta() / calib.sample_period).round() as u64
}

/// Ensemble-averaged Ramsey or echo decay.
pub fn simulate_coherence(
    spec: &CqbSpec,
    calib: &CalibratedGateSet,
    noise: &FluxNoiseSpec,
    cfg: &CoherenceConfig,
) -> Result<CoherenceResult> {
    spec.validate()?;
    calib.validate()?;
    noise.validate()?;
    cfg.validate()?;
    let w = calib.window();
    let win = Windows {
        x: synth_xy_pulse(&w, Axis::X, Sign::Plus)?.samples().to_vec(),
        y: synth_xy_pulse(&w, Axis::Y, Sign::Plus)?.samples().to_vec(),
        dt: calib.sample_period,
    };
    let gate_time = win.x.len() as f64 * win.dt;
    let dt = calib.sample_period;
    // Whole periods per point; echo halves must be equal.
    let periods: Vec<u64> = cfg
        .taus
        .iter()
        .map(|&t| {
            let k = (t / calib.t_delta()).round() as u64;
            match cfg.protocol {
                CoherenceProtocol::Ramsey => k,
                CoherenceProtocol::Echo => 2 * k.div_ceil(2),
            }
        })
        .collect();
    let idle_t: Vec<f64> = periods.iter().map(|&k| idle_samples(calib, k) as f64 * dt).collect();
    let n_gates = match cfg.protocol {
        CoherenceProtocol::Ramsey => 2.0,
        CoherenceProtocol::Echo => 4.0,
    };
    // Variance split: noise slower than the whole sequence is common to
    // both echo halves, the rest is redrawn per half.
    let sigmas: Vec<(f64, f64)> = idle_t
        .iter()
        .map(|&t| {
            let t_seq = t + n_gates * gate_time;
            let split = 1.0 / t_seq;
            if noise.resample_segments {
                (
                    noise.band_variance(noise.f_low_hz, split).sqrt(),
                    noise.band_variance(split, noise.f_high_hz).sqrt(),
                )
            } else {
                (noise.variance().sqrt(), 0.0)
            }
        })
        .collect();
    let gap = spec.gap_hz;
    let per_traj: Vec<Vec<f64>> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(cfg.seed, k);
            // [slow, fast half 1, fast half 2] × transmon.
            let mut z = [[0.0f64; 2]; 3];
            for row in z.iter_mut() {
                row[0] = StandardNormal.sample(&mut r);
                row[1] = if noise.independent {
                    StandardNormal.sample(&mut r)
                } else {
                    row[0]
                };
            }
            idle_t
                .iter()
                .zip(&sigmas)
                .map(|(&t, &(s_slow, s_fast))| {
                    let off = |h: usize| -> f64 {
                        let d = [
                            s_slow * z[0][0] + s_fast * z[h][0],
                            s_slow * z[0][1] + s_fast * z[h][1],
                        ];
                        epsilon_offset(spec, d)
                    };
                    match cfg.protocol {
                        CoherenceProtocol::Ramsey => {
                            let e = off(1);
                            let x = win.unitary(gap, &win.x, e);
                            p1(&(x * step_unitary(gap, e, t) * x))
                        }
                        CoherenceProtocol::Echo => {
                            let (e1, e2) = (off(1), off(2));
                            let first = win.unitary(gap, &win.y, e1) * step_unitary(gap, e1, 0.5 * t) * win.unitary(gap, &win.x, e1);
                            let second = win.unitary(gap, &win.x, e2) * step_unitary(gap, e2, 0.5 * t) * win.unitary(gap, &win.y, e2);
                            p1(&(second * first))
                        }
                    }
                })
                .collect()
        })
        .collect();
    let n = cfg.n_traj as f64;
    let mut sum = vec![0.0; idle_t.len()];
    let mut sum2 = vec![0.0; idle_t.len()];
    for traj in &per_traj {
        for (i, &p) in traj.iter().enumerate() {
            sum[i] += p;
            sum2[i] += p * p;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr: Vec<f64> = sum2
        .iter()
        .zip(&mean)
        .map(|(s2, m)| ((s2 / n - m * m).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    let contrast: Vec<f64> = mean.iter().map(|m| 2.0 * m - 1.0).collect();
    let contrast_stderr: Vec<f64> = stderr.iter().map(|s| 2.0 * s).collect();
    let keep: Vec<f64> = idle_t
        .iter()
        .map(|&t| (-cfg.leak_rate * (t + n_gates * gate_time)).exp())
        .collect();
    let t2_hit = grid_one_over_e(&idle_t, &contrast);
    let (t2, t2_err) = match t2_hit {
        Some((i, t)) => {
            let slope = (contrast[i] - contrast[i - 1]) / (idle_t[i] - idle_t[i - 1]);
            let err = 0.5 * (contrast_stderr[i] + contrast_stderr[i - 1]) / slope.abs().max(1e-300);
            (Some(t), err)
        }
        None => (None, f64::NAN),
    };
    let model = match cfg.protocol {
        CoherenceProtocol::Ramsey => DecayModel::Ramsey,
        CoherenceProtocol::Echo => DecayModel::Echo,
    };
    Ok(CoherenceResult {
        protocol: cfg.protocol,
        p0: mean.iter().zip(&keep).map(|(m, k)| (1.0 - m) * k).collect(),
        p1: mean.iter().zip(&keep).map(|(m, k)| m * k).collect(),
        pleak: keep.iter().map(|k| 1.0 - k).collect(),
        fit: DecayFit {
            model,
            params: vec![FitParam {
                name: "t2".into(),
                value: t2.unwrap_or(f64::NAN),
                stderr: t2_err,
            }],
            residual_norm: 0.0,
            t1_cqb_lower_bound: None,
        },
        tau: idle_t,
        contrast,
        contrast_stderr,
        t2,
    })
}

/// Leading-order Ramsey contrast Re (1 − 2ia)^(−1/2) for independent
/// quasi-static offsets, a = 2π c σ_Σ² τ.
pub fn quasistatic_ramsey_contrast(spec: &CqbSpec, noise: &FluxNoiseSpec, tau: f64) -> f64 {
    let var_sum = if noise.independent { 2.0 } else { 4.0 } * noise.variance();
    let coeff = crate::device::flux_noise_sensitivity(spec, 1.0, 0.0);
    let a = std::f64::consts::TAU * coeff * var_sum * tau;
    let z = num_complex::Complex64::new(1.0, -2.0 * a).powf(-0.5);
    z.re
}
