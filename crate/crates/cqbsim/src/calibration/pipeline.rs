// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-CQB tune-up: amplitude, correction time, gap, then chained fine
//! scans of t_d and ε_p.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{dominant_frequency, parabolic_peak, MeasurementMode, ScanResult};
use super::CalibratedGateSet;
use crate::device::CqbSpec;
use crate::error::{Error, Result};
use crate::fit::{fit_separable, LmOptions};
use crate::linalg::Unitary2;
use crate::propagator::propagate_samples;
use crate::waveform::{synth_xy_pulse, Axis, GateWindowSpec, Sign, DEFAULT_SAMPLE_PERIOD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub pulse_freq_hz: f64,
    pub sample_period: f64,
    /// Starting guess for Δ; the device value when absent.
    pub initial_gap_hz: Option<f64>,
    pub amplitude_points: usize,
    pub tc_points: usize,
    pub fine_points: usize,
    /// Fine scans cover ±`fine_span` (relative) around the coarse value.
    pub fine_span: f64,
    pub fine_n_gates: usize,
    pub ramsey_m: usize,
    pub ramsey_max_n: usize,
    pub half_tolerance: f64,
    /// Fine t_d / ε_p alternations.
    pub rounds: usize,
    pub measurement: MeasurementMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pulse_freq_hz: 125e6,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            initial_gap_hz: None,
            amplitude_points: 201,
            tc_points: 101,
            fine_points: 81,
            fine_span: 0.02,
            fine_n_gates: 21,
            ramsey_m: 1,
            ramsey_max_n: 120,
            half_tolerance: 0.005,
            rounds: 2,
            measurement: MeasurementMode::Expectation,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_freq_hz > 0.0 && self.sample_period > 0.0) {
            return Err(Error::field("pulse_freq_hz", "pulse frequency and sample period must be > 0"));
        }
        if self.amplitude_points < 3 || self.tc_points < 3 || self.fine_points < 3 {
            return Err(Error::field("points", "scan grids need at least 3 points"));
        }
        if !(self.fine_span > 0.0 && self.fine_span < 0.5) {
            return Err(Error::field("fine_span", "must lie in (0, 0.5)"));
        }
        if !(self.half_tolerance > 0.0) {
            return Err(Error::field("half_tolerance", "must be > 0"));
        }
        if let Some(g) = self.initial_gap_hz {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::field("initial_gap_hz", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Probe outcome: P(|1⟩) after `u` acting on |0⟩.
fn p1(u: &Unitary2) -> f64 {
    u[(1, 0)].norm_sqr()
}

fn window_unitary(spec: &CqbSpec, w: &GateWindowSpec, axis: Axis, sign: Sign) -> Result<Unitary2> {
    let wf = synth_xy_pulse(w, axis, sign)?;
    Ok(propagate_samples(spec.gap_hz, wf.samples(), wf.sample_period()))
}

fn grid(lo: f64, hi: f64, n: usize, include_hi: bool) -> Vec<f64> {
    let den = if include_hi { n - 1 } else { n } as f64;
    (0..n).map(|k| lo + (hi - lo) * k as f64 / den).collect()
}

fn read_all(mode: &MeasurementMode, exact: &[f64], stage: u64) -> Result<Vec<f64>> {
    exact
        .iter()
        .enumerate()
        .map(|(k, &p)| mode.read(p, stage * 1_000_000 + k as u64))
        .collect()
}

/// Amplitude sweep of a single X+ window from |0⟩; returns the scan and
/// the first ε_p where P(|1⟩) reaches 1/2 within `tol`.
#[allow(clippy::too_many_arguments)]
pub fn scan_amplitude_for_half_excitation(
    spec: &CqbSpec,
    pulse_freq_hz: f64,
    amplitudes: &[f64],
    gap_guess_hz: f64,
    sample_period: f64,
    tol: f64,
    mode: &MeasurementMode,
) -> Result<(ScanResult, f64)> {
    let prob = |eps: f64| -> Result<f64> {
        let w = GateWindowSpec::for_gap(gap_guess_hz, eps, pulse_freq_hz, 0.0, sample_period);
        Ok(p1(&window_unitary(spec, &w, Axis::X, Sign::Plus)?))
    };
    let exact: Vec<f64> = amplitudes.par_iter().map(|&e| prob(e)).collect::<Result<_>>()?;
    let scan = ScanResult::new("epsilon_p_hz", amplitudes.to_vec(), read_all(mode, &exact, 1)?)?;
    let guess = scan
        .first_crossing(0.5)
        .ok_or_else(|| Error::Convergence("amplitude scan never reaches P(1) = 0.5".into()))?;
    // Bisect inside the bracketing grid cell until the tolerance is met.
    let i = scan.values.iter().rposition(|&v| v <= guess).unwrap_or(0);
    let (mut lo, mut hi) = (scan.values[i], scan.values[(i + 1).min(scan.values.len() - 1)]);
    let mut best = guess;
    for _ in 0..60 {
        let p = prob(best)?;
        if (p - 0.5).abs() <= 0.01 * tol {
            break;
        }
        if p < 0.5 {
            lo = best;
        } else {
            hi = best;
        }
        best = 0.5 * (lo + hi);
    }
    if (prob(best)? - 0.5).abs() > tol {
        return Err(Error::Convergence("half-excitation amplitude not resolved".into()));
    }
    Ok((scan, best))
}

/// X+ then X− with window length t_Δ + t_c for each t_c in `t_c_grid`;
/// the optimum maximizes the return probability.
pub fn scan_correction_time(
    spec: &CqbSpec,
    template: &GateWindowSpec,
    gap_guess_hz: f64,
    t_c_grid: &[f64],
    mode: &MeasurementMode,
) -> Result<(ScanResult, f64)> {
    let exact: Vec<f64> = t_c_grid
        .par_iter()
        .map(|&tc| {
            let w = GateWindowSpec::for_gap(gap_guess_hz, template.epsilon_p_hz, template.pulse_freq_hz, tc, template.sample_period);
            let up = window_unitary(spec, &w, Axis::X, Sign::Plus)?;
            let dn = window_unitary(spec, &w, Axis::X, Sign::Minus)?;
            Ok(1.0 - p1(&(dn * up)))
        })
        .collect::<Result<_>>()?;
    let scan = ScanResult::new("t_c_s", t_c_grid.to_vec(), read_all(mode, &exact, 2)?)?;
    let (lo, hi) = scan
        .probability
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    if hi - lo < 1e-6 {
        return Err(Error::Convergence("flat correction-time response".into()));
    }
    let i = scan.argmax().expect("non-empty scan");
    let peak = parabolic_peak(&scan.values, &scan.probability, i);
    Ok((scan, peak))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineParam {
    EpsilonP,
    /// Window length t_d (t_c follows from the measured gap).
    Td,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FineScanResult {
    pub param: FineParam,
    pub n_gates: usize,
    pub scan: ScanResult,
    pub refined: f64,
    /// |dP/dx| at the amplitude crossing, or the t_d contrast per unit
    /// relative change; x is the relative parameter change.
    pub sensitivity: f64,
}

/// Largest chain length whose worst-case snap phase stays below π/2.
pub fn max_chain_length(calib: &CalibratedGateSet) -> usize {
    (PI / calib.z_step()).floor() as usize
}

/// Refines ε_p (odd N chained X+, P(|1⟩) crossing 1/2) or t_d (N/2 chained
/// X+X− pairs, maximal return) over ±`span` in `points` steps.
pub fn fine_scan_chained(
    spec: &CqbSpec,
    calib: &CalibratedGateSet,
    n_gates: usize,
    param: FineParam,
    span: f64,
    points: usize,
    mode: &MeasurementMode,
) -> Result<FineScanResult> {
    calib.validate()?;
    if n_gates == 0 || n_gates > max_chain_length(calib) {
        return Err(Error::Config(format!(
            "chain of {n_gates} gates outside 1..={}",
            max_chain_length(calib)
        )));
    }
    let center = match param {
        FineParam::EpsilonP => calib.epsilon_p_hz,
        FineParam::Td => calib.t_d,
    };
    let values = grid(center * (1.0 - span), center * (1.0 + span), points, true);
    let window_at = |v: f64| {
        let mut w = calib.window();
        match param {
            FineParam::EpsilonP => w.epsilon_p_hz = v,
            FineParam::Td => w.t_d = v,
        }
        w
    };
    let exact: Vec<f64> = values
        .par_iter()
        .map(|&v| {
            let w = window_at(v);
            let up = window_unitary(spec, &w, Axis::X, Sign::Plus)?;
            Ok(match param {
                FineParam::EpsilonP => {
                    let u = (0..n_gates).fold(Unitary2::identity(), |acc, _| up * acc);
                    p1(&u)
                }
                FineParam::Td => {
                    let dn = window_unitary(spec, &w, Axis::X, Sign::Minus)?;
                    let pair = dn * up;
                    let u = (0..n_gates.div_ceil(2)).fold(Unitary2::identity(), |acc, _| pair * acc);
                    1.0 - p1(&u)
                }
            })
        })
        .collect::<Result<_>>()?;
    let stage = match param {
        FineParam::EpsilonP => 3,
        FineParam::Td => 4,
    };
    let scan = ScanResult::new(
        match param {
            FineParam::EpsilonP => "epsilon_p_hz",
            FineParam::Td => "t_d_s",
        },
        values.clone(),
        read_all(mode, &exact, stage)?,
    )?;
    let p = &scan.probability;
    let (refined, sensitivity) = match param {
        FineParam::EpsilonP => {
            if n_gates % 2 == 0 {
                return Err(Error::Config("amplitude fine scan needs an odd chain".into()));
            }
            let target = (n_gates as f64 * FRAC_PI_4).sin().powi(2);
            let crossing = (0..points - 1)
                .filter(|&i| (p[i] - target) * (p[i + 1] - target) <= 0.0 && p[i] != p[i + 1])
                .map(|i| {
                    let f = (target - p[i]) / (p[i + 1] - p[i]);
                    let x = values[i] + f * (values[i + 1] - values[i]);
                    let slope = (p[i + 1] - p[i]) / ((values[i + 1] - values[i]) / center);
                    (x, slope.abs())
                })
                .min_by(|a, b| (a.0 - center).abs().total_cmp(&(b.0 - center).abs()));
            crossing.ok_or_else(|| Error::Convergence("fine amplitude scan has no crossing".into()))?
        }
        FineParam::Td => {
            let best = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let on: Vec<f64> = values
                .iter()
                .zip(p)
                .filter(|(_, &q)| q >= best - 1e-12)
                .map(|(&v, _)| v)
                .collect();
            let mid = on.iter().sum::<f64>() / on.len() as f64;
            let dt = calib.sample_period;
            let snapped = (mid / dt).round() * dt;
            let worst = p.iter().cloned().fold(f64::INFINITY, f64::min);
            let contrast = (best - worst) / (2.0 * span);
            (snapped, contrast)
        }
    };
    Ok(FineScanResult {
        param,
        n_gates,
        scan,
        refined,
        sensitivity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyResult {
    pub gap_hz: f64,
    pub gap_stderr_hz: f64,
    /// Oscillation frequency in cycles per increment.
    pub cycles_per_step: f64,
    /// Idle per increment (m nominal quarter periods, snapped) [s].
    pub step_time: f64,
    pub m: usize,
    pub scan: ScanResult,
}

/// X(π/2), N·m nominal Z(π/2) idles, X(π/2) for N = 0..=max_n; the fitted
/// oscillation frequency gives Δ.
pub fn measure_delta_ramsey(
    spec: &CqbSpec,
    calib: &CalibratedGateSet,
    m: usize,
    max_n: usize,
    mode: &MeasurementMode,
) -> Result<RamseyResult> {
    calib.validate()?;
    if m % 2 == 0 {
        return Err(Error::Config(format!("Ramsey increment m = {m} must be odd to avoid aliasing")));
    }
    if max_n < 8 {
        return Err(Error::Config("Ramsey needs max_n ≥ 8".into()));
    }
    let dt = calib.sample_period;
    let n_step = (m as f64 * calib.t_delta() / 4.0 / dt).round() as usize;
    let step_time = n_step as f64 * dt;
    let x = window_unitary(spec, &calib.window(), Axis::X, Sign::Plus)?;
    let idle = propagate_samples(spec.gap_hz, &vec![0.0; n_step], dt);
    let mut exact = Vec::with_capacity(max_n + 1);
    let mut mid = Unitary2::identity();
    for _ in 0..=max_n {
        exact.push(p1(&(x * mid * x)));
        mid = idle * mid;
    }
    let ns: Vec<f64> = (0..=max_n).map(|k| k as f64).collect();
    let mut scan = ScanResult::new("n", ns.clone(), read_all(mode, &exact, 5)?)?;
    let (alias, spectrum) = dominant_frequency(&scan.probability)?;
    scan.spectrum = Some(spectrum);
    let expected = m as f64 / 4.0;
    let guess = (0..=m)
        .flat_map(|j| [j as f64 - alias, j as f64 + alias])
        .min_by(|a, b| (a - expected).abs().total_cmp(&(b - expected).abs()))
        .expect("candidates");
    let fit = fit_separable(
        |th, n| {
            let ph = TAU * th[0] * n;
            vec![1.0, ph.cos(), ph.sin()]
        },
        3,
        &ns,
        &scan.probability,
        None,
        &[guess],
        &LmOptions::default(),
    )?;
    let c = fit.params[0];
    Ok(RamseyResult {
        gap_hz: c / step_time,
        gap_stderr_hz: fit.stderr[0] / step_time,
        cycles_per_step: c,
        step_time,
        m,
        scan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub gate_set: CalibratedGateSet,
    /// Gate set after the coarse stages only.
    pub coarse: CalibratedGateSet,
    pub amplitude_scan: ScanResult,
    pub correction_scan: ScanResult,
    pub ramsey: RamseyResult,
    pub fine: Vec<FineScanResult>,
}

/// Runs every stage in order. Expectation-mode runs are deterministic.
pub fn run_pipeline(spec: &CqbSpec, cfg: &PipelineConfig) -> Result<CalibrationReport> {
    spec.validate()?;
    cfg.validate()?;
    let dt = cfg.sample_period;
    let gap0 = cfg.initial_gap_hz.unwrap_or(spec.gap_hz);
    let amps = grid(0.0, 2.0 * gap0, cfg.amplitude_points, true);
    let (amplitude_scan, eps0) = scan_amplitude_for_half_excitation(
        spec,
        cfg.pulse_freq_hz,
        &amps,
        gap0,
        dt,
        cfg.half_tolerance,
        &cfg.measurement,
    )?;
    let template = GateWindowSpec::for_gap(gap0, eps0, cfg.pulse_freq_hz, 0.0, dt);
    let tcs = grid(0.0, 1.0 / gap0, cfg.tc_points, false);
    let (correction_scan, tc0) = scan_correction_time(spec, &template, gap0, &tcs, &cfg.measurement)?;
    let first = CalibratedGateSet::characterize(spec, gap0, eps0, cfg.pulse_freq_hz, tc0, dt)?;
    let ramsey = measure_delta_ramsey(spec, &first, cfg.ramsey_m, cfg.ramsey_max_n, &cfg.measurement)?;
    let gap1 = ramsey.gap_hz;
    // Keep the physical window length; re-express it against the new gap.
    let tc1 = first.t_d - 1.0 / gap1;
    let coarse = CalibratedGateSet::characterize(spec, gap1, eps0, cfg.pulse_freq_hz, tc1, dt)?;
    let mut current = coarse;
    let mut fine = Vec::new();
    for _ in 0..cfg.rounds {
        let td = fine_scan_chained(spec, &current, cfg.fine_n_gates, FineParam::Td, cfg.fine_span, cfg.fine_points, &cfg.measurement)?;
        current = CalibratedGateSet::characterize(spec, gap1, current.epsilon_p_hz, cfg.pulse_freq_hz, td.refined - 1.0 / gap1, dt)?;
        fine.push(td);
        let eps = fine_scan_chained(spec, &current, cfg.fine_n_gates, FineParam::EpsilonP, cfg.fine_span, cfg.fine_points, &cfg.measurement)?;
        current = CalibratedGateSet::characterize(spec, gap1, eps.refined, cfg.pulse_freq_hz, current.t_c, dt)?;
        fine.push(eps);
    }
    Ok(CalibrationReport {
        gate_set: current,
        coarse,
        amplitude_scan,
        correction_scan,
        ramsey,
        fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::CalibratedGateSet;

    fn spec() -> CqbSpec {
        CqbSpec::bundled("cqb-a").unwrap()
    }

    #[test]
    fn zero_amplitude_gives_no_excitation() {
        let s = spec();
        let (scan, eps) = scan_amplitude_for_half_excitation(
            &s,
            125e6,
            &grid(0.0, 2.0 * s.gap_hz, 201, true),
            s.gap_hz,
            DEFAULT_SAMPLE_PERIOD,
            0.005,
            &MeasurementMode::Expectation,
        )
        .unwrap();
        assert!(scan.probability[0] < 1e-15);
        assert!((eps / 80e6 - 1.0).abs() < 0.25, "eps = {eps:e}");
    }

    #[test]
    fn half_amplitude_survives_finer_sampling() {
        let s = spec();
        let (_, eps) = scan_amplitude_for_half_excitation(
            &s,
            125e6,
            &grid(0.0, 2.0 * s.gap_hz, 201, true),
            s.gap_hz,
            DEFAULT_SAMPLE_PERIOD,
            0.005,
            &MeasurementMode::Expectation,
        )
        .unwrap();
        let w = GateWindowSpec::for_gap(s.gap_hz, eps, 125e6, 0.0, 0.5 * DEFAULT_SAMPLE_PERIOD);
        let p = p1(&window_unitary(&s, &w, Axis::X, Sign::Plus).unwrap());
        assert!((p - 0.5).abs() < 0.002, "p = {p}");
    }

    #[test]
    fn no_crossing_is_an_error() {
        let s = spec();
        let r = scan_amplitude_for_half_excitation(
            &s,
            125e6,
            &grid(0.0, 1e6, 11, true),
            s.gap_hz,
            DEFAULT_SAMPLE_PERIOD,
            0.005,
            &MeasurementMode::Expectation,
        );
        assert!(r.is_err());
    }

    #[test]
    fn ramsey_rejects_even_m() {
        let s = spec();
        let c = CalibratedGateSet::characterize(&s, s.gap_hz, 80e6, 125e6, 2e-9, DEFAULT_SAMPLE_PERIOD).unwrap();
        assert!(measure_delta_ramsey(&s, &c, 2, 64, &MeasurementMode::Expectation).is_err());
    }

    #[test]
    fn ramsey_recovers_gap_for_m_1_and_3() {
        let s = spec();
        let c = CalibratedGateSet::characterize(&s, 1.003 * s.gap_hz, 80e6, 125e6, 2e-9, DEFAULT_SAMPLE_PERIOD).unwrap();
        for m in [1, 3] {
            let r = measure_delta_ramsey(&s, &c, m, 120, &MeasurementMode::Expectation).unwrap();
            assert!((r.gap_hz / s.gap_hz - 1.0).abs() < 1e-6, "m = {m}: {}", r.gap_hz);
            assert!((r.cycles_per_step - m as f64 / 4.0).abs() < 0.01);
        }
    }

    #[test]
    fn ramsey_zero_length_is_x_pi() {
        let s = spec();
        let r = run_pipeline(&s, &PipelineConfig::default()).unwrap();
        let p0 = r.ramsey.scan.probability[0];
        assert!(p0 > 0.99, "P(1) after X(π/2)² = {p0}");
    }

    #[test]
    fn pipeline_reaches_fixed_point() {
        let s = spec();
        let r = run_pipeline(&s, &PipelineConfig::default()).unwrap();
        let g = r.gate_set;
        assert!(g.residual_infidelity < 1e-4, "{:e}", g.residual_infidelity);
        assert!(g.residual_infidelity <= r.coarse.residual_infidelity + 1e-15);
        assert!((g.measured_gap_hz / s.gap_hz - 1.0).abs() < 1e-4);
    }

    #[test]
    fn chained_scan_amplifies_errors() {
        let s = spec();
        let g = run_pipeline(&s, &PipelineConfig::default()).unwrap().gate_set;
        let mut off = g;
        off.epsilon_p_hz *= 1.01;
        let shift = |n: usize| {
            let w = off.window();
            let u = window_unitary(&s, &w, Axis::X, Sign::Plus).unwrap();
            let chain = (0..n).fold(Unitary2::identity(), |a, _| u * a);
            (p1(&chain) - (n as f64 * FRAC_PI_4).sin().powi(2)).abs()
        };
        assert!(shift(21) > 10.0 * shift(1), "{} vs {}", shift(21), shift(1));
        let one = fine_scan_chained(&s, &g, 1, FineParam::EpsilonP, 0.02, 81, &MeasurementMode::Expectation).unwrap();
        let many = fine_scan_chained(&s, &g, 21, FineParam::EpsilonP, 0.02, 81, &MeasurementMode::Expectation).unwrap();
        assert!(many.sensitivity > 10.0 * one.sensitivity);
        assert!(fine_scan_chained(&s, &g, 10_000, FineParam::EpsilonP, 0.02, 81, &MeasurementMode::Expectation).is_err());
    }
}
