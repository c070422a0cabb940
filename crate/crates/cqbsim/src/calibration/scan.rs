// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use rand_distr::{Binomial, Distribution};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::csv_row;
use crate::rng;

/// How a simulated probe turns an exact probability into a reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeasurementMode {
    #[default]
    Expectation,
    /// Binomial shot sampling; point `k` of a scan draws from stream `k`.
    Shots { shots: u64, seed: u64 },
}

impl MeasurementMode {
    pub fn read(&self, p: f64, index: u64) -> Result<f64> {
        let p = p.clamp(0.0, 1.0);
        match *self {
            MeasurementMode::Expectation => Ok(p),
            MeasurementMode::Shots { shots, seed } => {
                if shots == 0 {
                    return Err(Error::field("shots", "must be > 0"));
                }
                let mut r = rng::stream(seed, index);
                let b = Binomial::new(shots, p).map_err(|e| Error::Numeric(e.to_string()))?;
                Ok(b.sample(&mut r) as f64 / shots as f64)
            }
        }
    }
}

/// One swept parameter and the observed probability at each value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub parameter: String,
    pub values: Vec<f64>,
    pub probability: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
}

impl ScanResult {
    pub fn new(parameter: impl Into<String>, values: Vec<f64>, probability: Vec<f64>) -> Result<Self> {
        let s = Self {
            parameter: parameter.into(),
            values,
            probability,
            spectrum: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.probability.len() {
            return Err(Error::Config("scan values and probabilities differ in length".into()));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!("{} grid is not strictly increasing", self.parameter)));
        }
        if let Some(p) = self.probability.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Numeric(format!("probability {p} outside [0, 1]")));
        }
        Ok(())
    }

    /// Index of the largest observed probability (first on ties).
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &p) in self.probability.iter().enumerate() {
            if best.map_or(true, |b| p > self.probability[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// First upward crossing of `level`, linearly interpolated.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        let (v, p) = (&self.values, &self.probability);
        (0..v.len().saturating_sub(1)).find_map(|i| {
            if p[i] < level && p[i + 1] >= level {
                let f = (level - p[i]) / (p[i + 1] - p[i]);
                Some(v[i] + f * (v[i + 1] - v[i]))
            } else {
                None
            }
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},probability\n", self.parameter);
        for (v, p) in self.values.iter().zip(&self.probability) {
            out.push_str(&csv_row(&[*v, *p]));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::waveform::write_file(path.as_ref(), self.to_csv().as_bytes())
    }
}

/// Vertex of the parabola through three equally spaced points around `i`.
/// Falls back to `x[i]` at the edges or when the curvature is not negative.
pub fn parabolic_peak(x: &[f64], y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= x.len() {
        return x[i];
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let denom = a - 2.0 * b + c;
    if !(denom < 0.0) {
        return x[i];
    }
    let shift = 0.5 * (a - c) / denom;
    let h = 0.5 * (x[i + 1] - x[i - 1]);
    x[i] + shift.clamp(-1.0, 1.0) * h
}

/// Dominant nonzero frequency of uniformly spaced data, in cycles per
/// sample: mean removal, DFT, largest bin, then a 3-bin parabolic
/// refinement on the magnitude. Also returns the magnitude spectrum.
pub fn dominant_frequency(data: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = data.len();
    if n < 4 {
        return Err(Error::Config("need at least 4 points for a spectrum".into()));
    }
    let mean = data.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mag: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    let k = (1..=half)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .ok_or_else(|| Error::Numeric("empty spectrum".into()))?;
    if mag[k] <= 1e-12 * (1.0 + mean.abs()) * n as f64 {
        return Err(Error::Numeric("flat data has no dominant frequency".into()));
    }
    let kf = if k > 1 && k < half {
        let idx: Vec<f64> = (0..=half).map(|i| i as f64).collect();
        parabolic_peak(&idx, &mag, k)
    } else {
        k as f64
    };
    Ok((kf / n as f64, mag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn crossing_interpolates() {
        let s = ScanResult::new("x", vec![0.0, 1.0, 2.0], vec![0.0, 0.4, 0.8]).unwrap();
        assert!((s.first_crossing(0.5).unwrap() - 1.25).abs() < 1e-12);
        assert!(s.first_crossing(0.9).is_none());
    }

    #[test]
    fn rejects_bad_scans() {
        assert!(ScanResult::new("x", vec![0.0, 0.0], vec![0.1, 0.2]).is_err());
        assert!(ScanResult::new("x", vec![0.0, 1.0], vec![0.1, 1.2]).is_err());
    }

    #[test]
    fn parabola_vertex() {
        let x = [1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| -(v - 2.3).powi(2)).collect();
        assert!((parabolic_peak(&x, &y, 1) - 2.3).abs() < 1e-12);
    }

    #[test]
    fn dft_finds_tone() {
        let data: Vec<f64> = (0..200).map(|k| 0.5 + 0.4 * (TAU * 0.1234 * k as f64).cos()).collect();
        let (f, _) = dominant_frequency(&data).unwrap();
        assert!((f - 0.1234).abs() < 2e-3);
        assert!(dominant_frequency(&[1.0; 16]).is_err());
    }

    #[test]
    fn shots_are_reproducible() {
        let m = MeasurementMode::Shots { shots: 1000, seed: 5 };
        let a = m.read(0.3, 7).unwrap();
        assert_eq!(a, m.read(0.3, 7).unwrap());
        assert!((a - 0.3).abs() < 0.06);
        assert_eq!(MeasurementMode::Expectation.read(0.3, 0).unwrap(), 0.3);
    }
}
