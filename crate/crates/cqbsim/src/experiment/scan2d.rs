// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-pulse excitation maps over drive amplitude and frequency.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::format::{csv_row, fmt_f64};
use crate::linalg::Unitary2;
use crate::propagator::step_unitary;

/// P(|1⟩) after one full period ε_p·sin(2πf t) applied to |0⟩. Samples are
/// midpoint values on a `dt` grid; the last partial step keeps the period
/// exact.
pub fn single_pulse_excitation(gap_hz: f64, epsilon_p_hz: f64, freq_hz: f64, dt: f64) -> Result<f64> {
    if !(freq_hz > 0.0 && dt > 0.0 && epsilon_p_hz.is_finite()) {
        return Err(Error::Config("pulse needs f > 0, dt > 0 and finite amplitude".into()));
    }
    let period = 1.0 / freq_hz;
    let n = (period / dt).floor() as usize;
    let mut u = Unitary2::identity();
    for k in 0..n {
        let t = (k as f64 + 0.5) * dt;
        u = step_unitary(gap_hz, epsilon_p_hz * (TAU * freq_hz * t).sin(), dt) * u;
    }
    let rest = period - n as f64 * dt;
    if rest > 1e-6 * dt {
        let t = n as f64 * dt + 0.5 * rest;
        u = step_unitary(gap_hz, epsilon_p_hz * (TAU * freq_hz * t).sin(), rest) * u;
    }
    Ok(u[(1, 0)].norm_sqr())
}

/// Evenly spaced grid including both ends; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Config(format!("empty or inverted range [{lo:e}, {hi:e}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceMap {
    pub epsilon_p_hz: Vec<f64>,
    pub pulse_freq_hz: Vec<f64>,
    /// `probability[i][j]` at amplitude `i` and frequency `j`.
    pub probability: Vec<Vec<f64>>,
}

pub fn interference_map(spec: &CqbSpec, epsilon_p_hz: &[f64], pulse_freq_hz: &[f64], dt: f64) -> Result<InterferenceMap> {
    spec.validate()?;
    if epsilon_p_hz.is_empty() || pulse_freq_hz.is_empty() {
        return Err(Error::Config("interference map needs non-empty ranges".into()));
    }
    let probability = epsilon_p_hz
        .par_iter()
        .map(|&e| {
            pulse_freq_hz
                .iter()
                .map(|&f| single_pulse_excitation(spec.gap_hz, e, f, dt))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(InterferenceMap {
        epsilon_p_hz: epsilon_p_hz.to_vec(),
        pulse_freq_hz: pulse_freq_hz.to_vec(),
        probability,
    })
}

/// Linear interpolation of the first upward crossing of `level`.
pub fn first_crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    x.windows(2).zip(y.windows(2)).find_map(|(xs, ys)| {
        (ys[0] < level && ys[1] >= level).then(|| xs[0] + (level - ys[0]) / (ys[1] - ys[0]) * (xs[1] - xs[0]))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub pulse_freq_hz: f64,
    pub epsilon_p_hz: f64,
}

impl InterferenceMap {
    /// Rows are amplitudes, columns frequencies; headers in Hz.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon_p_hz/pulse_freq_hz");
        for f in &self.pulse_freq_hz {
            out.push(',');
            out.push_str(&fmt_f64(*f));
        }
        out.push('\n');
        for (e, row) in self.epsilon_p_hz.iter().zip(&self.probability) {
            out.push_str(&fmt_f64(*e));
            out.push(',');
            out.push_str(&csv_row(row));
        }
        out
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.probability.iter().map(|r| r[j]).collect()
    }

    /// Lowest amplitude reaching P = 1/2 in each frequency column.
    pub fn half_contour(&self) -> Vec<ContourPoint> {
        self.pulse_freq_hz
            .iter()
            .enumerate()
            .filter_map(|(j, &f)| {
                first_crossing(&self.epsilon_p_hz, &self.column(j), 0.5).map(|e| ContourPoint {
                    pulse_freq_hz: f,
                    epsilon_p_hz: e,
                })
            })
            .collect()
    }

    /// Contour points inside the box ±`rel` around (`freq`, `eps`).
    pub fn contour_near(&self, freq: f64, eps: f64, rel: f64) -> Vec<ContourPoint> {
        self.half_contour()
            .into_iter()
            .filter(|p| (p.pulse_freq_hz / freq - 1.0).abs() <= rel && (p.epsilon_p_hz / eps - 1.0).abs() <= rel)
            .collect()
    }
}

/// Lowest amplitude in [0, `eps_max`] giving P = 1/2 at `freq`, resolved on
/// `points` samples and refined by bisection.
pub fn half_excitation_amplitude(spec: &CqbSpec, freq: f64, eps_max: f64, points: usize, dt: f64) -> Result<Option<f64>> {
    let eps = linspace(0.0, eps_max, points.max(2))?;
    let p: Vec<f64> = eps
        .iter()
        .map(|&e| single_pulse_excitation(spec.gap_hz, e, freq, dt))
        .collect::<Result<_>>()?;
    let Some(i) = p.windows(2).position(|w| w[0] < 0.5 && w[1] >= 0.5) else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (eps[i], eps[i + 1]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if single_pulse_excitation(spec.gap_hz, mid, freq, dt)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
