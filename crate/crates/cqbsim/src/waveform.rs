// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sampled baseband detuning waveforms.
//!
//! Samples are zero-order-hold levels: sample `k` holds its value over
//! `[k·dt, (k+1)·dt)`. Analytic shapes are evaluated at interval midpoints.

use std::f64::consts::{SQRT_2, TAU};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::device::{flux_of_epsilon, CqbSpec};
use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// 10 GS/s.
pub const DEFAULT_SAMPLE_PERIOD: f64 = 1e-10;
pub const MIN_SAMPLES_PER_PERIOD: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub label: String,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_period: f64,
    start_time: f64,
    annotations: Vec<Annotation>,
    mean: f64,
}

fn mean_of(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_period: f64) -> Result<Self> {
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(Error::field("sample_period", "must be > 0"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("waveform samples".into()));
        }
        let mean = mean_of(&samples);
        Ok(Self {
            samples,
            sample_period,
            start_time: 0.0,
            annotations: Vec::new(),
            mean,
        })
    }

    pub fn empty(sample_period: f64) -> Self {
        Self {
            samples: Vec::new(),
            sample_period,
            start_time: 0.0,
            annotations: Vec::new(),
            mean: 0.0,
        }
    }

    pub fn zeros(n: usize, sample_period: f64) -> Self {
        let mut w = Self::empty(sample_period);
        w.samples = vec![0.0; n];
        w
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn with_start_time(mut self, t: f64) -> Self {
        self.start_time = t;
        self
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    /// Stored mean ε; always equal to the sample mean.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
    }

    pub fn annotate(&mut self, label: impl Into<String>, start: usize, end: usize) {
        debug_assert!(start <= end && end <= self.samples.len());
        self.annotations.push(Annotation {
            label: label.into(),
            start,
            end,
        });
    }

    /// Whole-waveform annotation.
    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        let n = self.samples.len();
        self.annotate(label, 0, n);
        self
    }

    /// Same trace held on a grid `factor` times finer.
    pub fn upsample_hold(&self, factor: usize) -> Self {
        let samples = self
            .samples
            .iter()
            .flat_map(|&x| std::iter::repeat(x).take(factor))
            .collect();
        let annotations = self
            .annotations
            .iter()
            .map(|a| Annotation {
                label: a.label.clone(),
                start: a.start * factor,
                end: a.end * factor,
            })
            .collect();
        Self {
            samples,
            sample_period: self.sample_period / factor as f64,
            start_time: self.start_time,
            annotations,
            mean: self.mean,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(40 * self.samples.len() + 32);
        out.push_str("time_s,epsilon_hz\n");
        for (k, x) in self.samples.iter().enumerate() {
            let t = self.start_time + k as f64 * self.sample_period;
            out.push_str(&fmt_f64(t));
            out.push(',');
            out.push_str(&fmt_f64(*x));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_csv().as_bytes())
    }

    /// Timing and annotation metadata as JSON.
    pub fn sidecar_json(&self) -> Result<String> {
        let side = Sidecar {
            sample_period_s: self.sample_period,
            start_time_s: self.start_time,
            n_samples: self.samples.len(),
            mean_epsilon_hz: self.mean,
            annotations: self.annotations.clone(),
        };
        crate::format::to_json_string(&side)
    }

    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.sidecar_json()?.as_bytes())
    }

    /// Reads a CSV written by [`Waveform::write_csv`] plus its JSON sidecar.
    pub fn read_pair(csv: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<Self> {
        let csv = csv.as_ref();
        let text = std::fs::read_to_string(csv).map_err(|e| Error::io(csv, e))?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "time_s,epsilon_hz" => {}
            _ => {
                return Err(Error::Parse {
                    what: csv.display().to_string(),
                    reason: "expected header `time_s,epsilon_hz`".into(),
                })
            }
        }
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v = line.split(',').nth(1).and_then(|s| s.trim().parse::<f64>().ok());
            match v {
                Some(x) => samples.push(x),
                None => {
                    return Err(Error::Parse {
                        what: csv.display().to_string(),
                        reason: format!("bad row {}", i + 2),
                    })
                }
            }
        }
        let sp = sidecar.as_ref();
        let stext = std::fs::read_to_string(sp).map_err(|e| Error::io(sp, e))?;
        let side: Sidecar = serde_json::from_str(&stext).map_err(|e| Error::Parse {
            what: sp.display().to_string(),
            reason: e.to_string(),
        })?;
        if side.n_samples != samples.len() {
            return Err(Error::Parse {
                what: sp.display().to_string(),
                reason: format!("sidecar lists {} samples, csv has {}", side.n_samples, samples.len()),
            });
        }
        let mut w = Waveform::new(samples, side.sample_period_s)?.with_start_time(side.start_time_s);
        for a in side.annotations {
            if a.start > a.end || a.end > w.len() {
                return Err(Error::Parse {
                    what: sp.display().to_string(),
                    reason: format!("annotation `{}` out of range", a.label),
                });
            }
            w.annotations.push(a);
        }
        Ok(w)
    }

    /// Per-sample reduced flux δf via the inverse detuning map.
    pub fn to_flux(&self, spec: &CqbSpec) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|&e| flux_of_epsilon(spec, e).map(|f| f.value()))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    sample_period_s: f64,
    start_time_s: f64,
    n_samples: usize,
    mean_epsilon_hz: f64,
    annotations: Vec<Annotation>,
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Timing and amplitude of one single-period gate window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateWindowSpec {
    pub epsilon_p_hz: f64,
    pub pulse_freq_hz: f64,
    /// Window duration t_d = t_Δ + t_c.
    pub t_d: f64,
    pub t_c: f64,
    /// X/Y onset offset, nominally t_Δ/4.
    pub t_xy: f64,
    pub sample_period: f64,
}

/// Integer-sample layout of a gate window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowLayout {
    pub n_window: usize,
    pub n_pulse: usize,
    pub n_xy: usize,
    pub x_start: usize,
    pub y_start: usize,
}

impl GateWindowSpec {
    /// Window for gap `gap_hz` with t_d = t_Δ + t_c and t_xy = t_Δ/4.
    pub fn for_gap(gap_hz: f64, epsilon_p_hz: f64, pulse_freq_hz: f64, t_c: f64, sample_period: f64) -> Self {
        let t_delta = 1.0 / gap_hz;
        Self {
            epsilon_p_hz,
            pulse_freq_hz,
            t_d: t_delta + t_c,
            t_c,
            t_xy: t_delta / 4.0,
            sample_period,
        }
    }

    pub fn layout(&self) -> Result<WindowLayout> {
        let dt = self.sample_period;
        if !(dt > 0.0) || !(self.pulse_freq_hz > 0.0) || !(self.t_d > 0.0) || !(self.t_xy >= 0.0) {
            return Err(Error::Config("gate window timing must be positive".into()));
        }
        let n_pulse = (1.0 / (self.pulse_freq_hz * dt)).round() as usize;
        if n_pulse < MIN_SAMPLES_PER_PERIOD {
            return Err(Error::Config(format!(
                "sample rate too coarse: {n_pulse} samples per pulse period (need ≥ {MIN_SAMPLES_PER_PERIOD})"
            )));
        }
        let n_window = (self.t_d / dt).round() as usize;
        let n_xy = (self.t_xy / dt).round() as usize;
        let base = n_window.saturating_sub(n_pulse) / 2;
        let x_start = base + n_xy / 2;
        let fits = n_window >= n_pulse + n_xy + 2 && x_start + n_pulse < n_window && x_start > n_xy;
        if !fits {
            return Err(Error::Config(format!(
                "window of {n_window} samples too short for a {n_pulse}-sample pulse shifted by ±{n_xy}/2"
            )));
        }
        Ok(WindowLayout {
            n_window,
            n_pulse,
            n_xy,
            x_start,
            y_start: x_start - n_xy,
        })
    }

    /// Snap errors (grid value − requested) for t_d and t_xy.
    pub fn snap_errors(&self) -> (f64, f64) {
        let dt = self.sample_period;
        let td = (self.t_d / dt).round() * dt - self.t_d;
        let txy = (self.t_xy / dt).round() * dt - self.t_xy;
        (td, txy)
    }
}

/// One sinusoid period inside a gate window, placed per the X/Y convention.
pub fn synth_xy_pulse(spec: &GateWindowSpec, axis: Axis, sign: Sign) -> Result<Waveform> {
    let lay = spec.layout()?;
    let start = match axis {
        Axis::X => lay.x_start,
        Axis::Y => lay.y_start,
    };
    let mut samples = vec![0.0; lay.n_window];
    let amp = spec.epsilon_p_hz * sign.factor();
    for k in 0..lay.n_pulse {
        let phase = TAU * (k as f64 + 0.5) / lay.n_pulse as f64;
        samples[start + k] = amp * phase.sin();
    }
    let mut w = Waveform::new(samples, spec.sample_period)?;
    let label = match (axis, sign) {
        (Axis::X, Sign::Plus) => "X+",
        (Axis::X, Sign::Minus) => "X-",
        (Axis::Y, Sign::Plus) => "Y+",
        (Axis::Y, Sign::Minus) => "Y-",
    };
    w.annotate(label, 0, lay.n_window);
    Ok(w)
}

/// Zero-detuning idle snapped to the grid. Returns the waveform and the
/// snap error (realized − requested duration).
pub fn synth_z_idle(duration: f64, sample_period: f64) -> Result<(Waveform, f64)> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Config("idle duration must be ≥ 0".into()));
    }
    let n = (duration / sample_period).round() as usize;
    let mut w = Waveform::zeros(n, sample_period);
    if n > 0 {
        w.annotate("Z", 0, n);
    }
    Ok((w, n as f64 * sample_period - duration))
}

/// Error-function ramp whose derivative is a Gaussian with 1/e² half-width τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRamp {
    pub from_hz: f64,
    pub to_hz: f64,
    pub time_constant: f64,
    pub duration: f64,
}

impl GaussianRamp {
    pub fn new(from_hz: f64, to_hz: f64, time_constant: f64, duration: f64) -> Result<Self> {
        if !(time_constant > 0.0) {
            return Err(Error::Config("ramp time constant must be > 0".into()));
        }
        if duration < 4.0 * time_constant * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "ramp duration {duration:e} s shorter than 4 time constants ({:e} s)",
                4.0 * time_constant
            )));
        }
        Ok(Self {
            from_hz,
            to_hz,
            time_constant,
            duration,
        })
    }

    /// Value at time `t` from the ramp start; exact endpoints by re-pinning.
    pub fn value(&self, t: f64) -> f64 {
        let half = 0.5 * self.duration;
        let g = |x: f64| erf(SQRT_2 * (x - half) / self.time_constant);
        let g0 = g(0.0);
        let g1 = g(self.duration);
        let s = (g(t.clamp(0.0, self.duration)) - g0) / (g1 - g0);
        self.from_hz + (self.to_hz - self.from_hz) * s
    }

    /// ∫₀ᵀ value(t) dt in closed form.
    pub fn integral(&self) -> f64 {
        // The re-pinned profile is antisymmetric about the midpoint, so the
        // area is the trapezoid of the endpoints.
        0.5 * (self.from_hz + self.to_hz) * self.duration
    }

    pub fn sample(&self, sample_period: f64) -> Result<Waveform> {
        let n = (self.duration / sample_period).round() as usize;
        let samples = (0..n)
            .map(|k| self.value((k as f64 + 0.5) * sample_period))
            .collect();
        Ok(Waveform::new(samples, sample_period)?.labeled("ramp"))
    }
}

pub fn synth_gaussian_ramp(
    from_hz: f64,
    to_hz: f64,
    time_constant: f64,
    duration: f64,
    sample_period: f64,
) -> Result<Waveform> {
    GaussianRamp::new(from_hz, to_hz, time_constant, duration)?.sample(sample_period)
}

/// Joins waveforms back to back; annotations are shifted to the new indices.
pub fn concat(waveforms: &[Waveform]) -> Result<Waveform> {
    let Some(first) = waveforms.first() else {
        return Ok(Waveform::empty(DEFAULT_SAMPLE_PERIOD));
    };
    let dt = first.sample_period;
    let total: usize = waveforms.iter().map(Waveform::len).sum();
    let mut samples = Vec::with_capacity(total);
    let mut annotations = Vec::new();
    for w in waveforms {
        if ((w.sample_period - dt) / dt).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "mismatched sample periods {:e} s and {:e} s",
                dt, w.sample_period
            )));
        }
        let off = samples.len();
        annotations.extend(w.annotations.iter().map(|a| Annotation {
            label: a.label.clone(),
            start: a.start + off,
            end: a.end + off,
        }));
        samples.extend_from_slice(&w.samples);
    }
    let mean = mean_of(&samples);
    Ok(Waveform {
        samples,
        sample_period: dt,
        start_time: first.start_time,
        annotations,
        mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroAverageReport {
    pub zero_average: bool,
    pub mean_hz: f64,
    pub max_abs_hz: f64,
}

pub fn check_zero_average(w: &Waveform, tolerance: f64) -> ZeroAverageReport {
    let mean = mean_of(&w.samples);
    let max_abs = w.max_abs();
    ZeroAverageReport {
        zero_average: mean.abs() <= tolerance * max_abs,
        mean_hz: mean,
        max_abs_hz: max_abs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window() -> GateWindowSpec {
        GateWindowSpec::for_gap(65.4e6, 76e6, 125e6, 1.2e-9, DEFAULT_SAMPLE_PERIOD)
    }

    #[test]
    fn zero_amplitude_is_all_zero() {
        let mut s = window();
        s.epsilon_p_hz = 0.0;
        let w = synth_xy_pulse(&s, Axis::X, Sign::Plus).unwrap();
        assert!(w.samples().iter().all(|&x| x == 0.0));
        assert_eq!(w.len(), (s.t_d / s.sample_period).round() as usize);
    }

    #[test]
    fn sinusoid_lasts_eight_ns() {
        let w = synth_xy_pulse(&window(), Axis::X, Sign::Plus).unwrap();
        let nz: Vec<usize> = (0..w.len()).filter(|&k| w.samples()[k] != 0.0).collect();
        let span = (nz[nz.len() - 1] - nz[0] + 1) as f64 * w.sample_period();
        assert!((span - 8e-9).abs() < 1e-15);
    }

    #[test]
    fn x_and_y_are_translates_by_t_xy() {
        let s = window();
        let x = synth_xy_pulse(&s, Axis::X, Sign::Plus).unwrap();
        let y = synth_xy_pulse(&s, Axis::Y, Sign::Plus).unwrap();
        let n_xy = s.layout().unwrap().n_xy;
        assert_eq!(n_xy, 38);
        assert!((n_xy as f64 * 1e-10 - 1.0 / (4.0 * 65.4e6)).abs() < 0.5e-10);
        for k in 0..x.len() - n_xy {
            assert_eq!(x.samples()[k + n_xy], y.samples()[k]);
        }
        for w in [&x, &y] {
            assert_eq!(w.samples()[0], 0.0);
            assert_eq!(*w.samples().last().unwrap(), 0.0);
            assert!(w.mean().abs() <= 1e-9 * s.epsilon_p_hz);
            assert!(check_zero_average(w, 1e-6).zero_average);
        }
    }

    #[test]
    fn window_errors() {
        let mut s = window();
        s.t_d = 9e-9;
        assert!(synth_xy_pulse(&s, Axis::X, Sign::Plus).is_err());
        let mut s = window();
        s.sample_period = 1e-9;
        assert!(matches!(s.layout(), Err(Error::Config(m)) if m.contains("coarse")));
    }

    #[test]
    fn z_idle_durations() {
        let (w, err) = synth_z_idle(0.0, 1e-10).unwrap();
        assert!(w.is_empty());
        assert_eq!(err, 0.0);
        let (w, err) = synth_z_idle(3.823e-9, 1e-10).unwrap();
        assert_eq!(w.len(), 38);
        assert!(err.abs() <= 0.5e-10);
    }

    #[test]
    fn ramp_properties() {
        let w = synth_gaussian_ramp(1.0, 1.0, 50e-9, 200e-9, 1e-10).unwrap();
        assert!(w.samples().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let r = GaussianRamp::new(-20e6, 80e6, 50e-9, 200e-9).unwrap();
        assert!((r.value(100e-9) - 30e6).abs() < 1e-6);
        let w = r.sample(1e-10).unwrap();
        let n = w.len();
        assert!((w.samples()[n / 2 - 1] + w.samples()[n / 2] - 60e6).abs() < 1e-6);
        let span = 100e6;
        assert!((w.samples()[0] + 20e6).abs() < 1e-4 * span);
        assert!((w.samples()[n - 1] - 80e6).abs() < 1e-4 * span);
        assert!(w.samples().windows(2).all(|p| p[1] >= p[0]));
        assert!(GaussianRamp::new(0.0, 1.0, 50e-9, 150e-9).is_err());
    }

    #[test]
    fn ramp_area_matches_quadrature() {
        let r = GaussianRamp::new(0.0, 1e6, 50e-9, 230e-9).unwrap();
        let n = 200_000;
        let h = r.duration / n as f64;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let wgt = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                wgt * r.value(k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((simpson - r.integral()).abs() < 1e-9 * r.integral());
        let w = r.sample(1e-10).unwrap();
        let riemann: f64 = w.samples().iter().sum::<f64>() * 1e-10;
        assert!((riemann - r.integral()).abs() < 1e-6 * r.integral());
    }

    #[test]
    fn concat_bookkeeping() {
        let e = concat(&[]).unwrap();
        assert!(e.is_empty());
        let x = synth_xy_pulse(&window(), Axis::X, Sign::Plus).unwrap();
        let parts = vec![x.clone(); 5];
        let c = concat(&parts).unwrap();
        assert_eq!(c.len(), 5 * x.len());
        assert!((c.duration() - 5.0 * x.duration()).abs() < 1e-18);
        for (i, a) in c.annotations().iter().enumerate() {
            assert_eq!(a.start, i * x.len());
            assert_eq!(a.end, (i + 1) * x.len());
        }
        let other = Waveform::zeros(3, 2e-10);
        assert!(concat(&[x, other]).is_err());
    }

    #[test]
    fn zero_average_detects_offsets() {
        let w = Waveform::new(vec![1.0; 10], 1e-10).unwrap();
        assert!(!check_zero_average(&w, 1e-6).zero_average);
        let n = 40;
        let half: Vec<f64> = (0..n)
            .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).sin())
            .collect();
        let w = Waveform::new(half, 1e-10).unwrap();
        let r = check_zero_average(&w, 1e-6);
        assert!(!r.zero_average);
        assert!((r.mean_hz - 2.0 / std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let w = synth_xy_pulse(&window(), Axis::Y, Sign::Minus).unwrap().with_start_time(2e-9);
        let (c, s) = (dir.path().join("w.csv"), dir.path().join("w.json"));
        w.write_csv(&c).unwrap();
        w.write_sidecar(&s).unwrap();
        let r = Waveform::read_pair(&c, &s).unwrap();
        assert_eq!(r.len(), w.len());
        assert_eq!(r.annotations(), w.annotations());
        for (a, b) in r.samples().iter().zip(w.samples()) {
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
        }
    }

    #[test]
    fn flux_export_inverts_detuning_map() {
        let spec = CqbSpec::bundled("cqb-a").unwrap();
        let w = synth_xy_pulse(&window(), Axis::X, Sign::Plus).unwrap();
        let f = w.to_flux(&spec).unwrap();
        for (df, eps) in f.iter().zip(w.samples()) {
            let back = crate::device::epsilon_of_flux(&spec, crate::device::FluxBias::new(*df).unwrap());
            assert!((back - eps).abs() < 1e-3);
        }
    }

    proptest! {
        #[test]
        fn concat_associative(a in 0usize..20, b in 0usize..20, c in 0usize..20) {
            let mk = |n: usize, v: f64| Waveform::new(vec![v; n], 1e-10).unwrap().labeled("s");
            let (x, y, z) = (mk(a, 1.0), mk(b, -2.0), mk(c, 0.5));
            let l = concat(&[concat(&[x.clone(), y.clone()]).unwrap(), z.clone()]).unwrap();
            let r = concat(&[x, concat(&[y, z]).unwrap()]).unwrap();
            prop_assert_eq!(l.samples(), r.samples());
            prop_assert_eq!(l.annotations(), r.annotations());
            prop_assert_eq!(l.len(), a + b + c);
        }

        #[test]
        fn ramp_monotone(from in -1e8f64..1e8, to in -1e8f64..1e8, tau in 1e-9f64..50e-9) {
            prop_assume!((from - to).abs() > 1.0);
            let w = synth_gaussian_ramp(from, to, tau, 4.0 * tau, 1e-10).unwrap();
            let s = (to - from).signum();
            prop_assert!(w.samples().windows(2).all(|p| s * (p[1] - p[0]) >= 0.0));
        }
    }
}
