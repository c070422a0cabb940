// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::device::{transmon_frequency, CqbSpec};
use crate::error::{Error, Result};
use crate::rng;

/// Power-law flux noise S(f) = A²/f^α on each transmon, in Φ0²/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluxNoiseSpec {
    /// A_Φ at 1 Hz [Φ0/√Hz].
    pub amplitude: f64,
    pub exponent: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    /// Independent noise per transmon; otherwise both see the same flux.
    pub independent: bool,
    /// Redraw the part of the spectrum above 1/T_seq for each echo segment.
    pub resample_segments: bool,
}

impl Default for FluxNoiseSpec {
    fn default() -> Self {
        Self {
            amplitude: 5e-6,
            exponent: 1.0,
            f_low_hz: 1.0,
            f_high_hz: 1e6,
            independent: true,
            resample_segments: true,
        }
    }
}

impl FluxNoiseSpec {
    pub fn with_amplitude(amplitude: f64) -> Self {
        Self {
            amplitude,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::field("amplitude", "must be ≥ 0"));
        }
        if !self.exponent.is_finite() {
            return Err(Error::field("exponent", "must be finite"));
        }
        if !(self.f_low_hz > 0.0 && self.f_high_hz > self.f_low_hz && self.f_high_hz.is_finite()) {
            return Err(Error::field("f_low_hz", "cutoffs must satisfy 0 < f_low < f_high"));
        }
        Ok(())
    }

    /// ∫ S(f) df over [lo, hi], clamped to the cutoffs.
    pub fn band_variance(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.clamp(self.f_low_hz, self.f_high_hz);
        let hi = hi.clamp(self.f_low_hz, self.f_high_hz);
        if hi <= lo {
            return 0.0;
        }
        let a2 = self.amplitude * self.amplitude;
        if (self.exponent - 1.0).abs() < 1e-12 {
            a2 * (hi / lo).ln()
        } else {
            let k = 1.0 - self.exponent;
            a2 * (hi.powf(k) - lo.powf(k)) / k
        }
    }

    pub fn variance(&self) -> f64 {
        self.band_variance(self.f_low_hz, self.f_high_hz)
    }
}

/// Quasi-static per-trajectory flux offsets (δφ_A, δφ_B) with the full-band
/// variance. Trajectory k uses RNG stream k of `seed`.
pub fn sample_quasistatic_flux(spec: &FluxNoiseSpec, n_traj: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    spec.validate()?;
    let sigma = spec.variance().sqrt();
    Ok((0..n_traj as u64)
        .map(|k| {
            let mut r = rng::stream(seed, k);
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = if spec.independent { StandardNormal.sample(&mut r) } else { a };
            [sigma * a, sigma * b]
        })
        .collect())
}

/// Detuning offset produced by flux offsets on the two transmons at the
/// operating point (transmon A at −φ*, B at +φ*).
pub fn epsilon_offset(spec: &CqbSpec, dphi: [f64; 2]) -> f64 {
    let (ta, tb, p) = (&spec.transmon_a, &spec.transmon_b, spec.phi_star);
    let da = transmon_frequency(ta, -p + dphi[0]) - transmon_frequency(ta, -p);
    let db = transmon_frequency(tb, p + dphi[1]) - transmon_frequency(tb, p);
    da - db
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::flux_noise_sensitivity;

    #[test]
    fn zero_amplitude_gives_zero_offsets() {
        let s = sample_quasistatic_flux(&FluxNoiseSpec::with_amplitude(0.0), 100, 3).unwrap();
        assert!(s.iter().all(|o| o[0] == 0.0 && o[1] == 0.0));
    }

    #[test]
    fn variance_matches_log_integral() {
        let spec = FluxNoiseSpec::default();
        let s = sample_quasistatic_flux(&spec, 100_000, 11).unwrap();
        let expect = spec.amplitude.powi(2) * (spec.f_high_hz / spec.f_low_hz).ln();
        for i in 0..2 {
            let v = s.iter().map(|o| o[i] * o[i]).sum::<f64>() / s.len() as f64;
            assert!((v / expect - 1.0).abs() < 0.02, "{v:e} vs {expect:e}");
        }
    }

    #[test]
    fn reproducible_and_correlation_flag() {
        let spec = FluxNoiseSpec::default();
        assert_eq!(sample_quasistatic_flux(&spec, 50, 4).unwrap(), sample_quasistatic_flux(&spec, 50, 4).unwrap());
        let shared = FluxNoiseSpec {
            independent: false,
            ..spec
        };
        assert!(sample_quasistatic_flux(&shared, 20, 4).unwrap().iter().all(|o| o[0] == o[1]));
        assert!(FluxNoiseSpec { f_high_hz: 0.5, ..spec }.validate().is_err());
    }

    #[test]
    fn power_law_band_integral() {
        let spec = FluxNoiseSpec {
            exponent: 0.5,
            ..FluxNoiseSpec::default()
        };
        let expect = spec.amplitude.powi(2) * 2.0 * (1e6f64.sqrt() - 1.0);
        assert!((spec.variance() / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_offset_reproduces_second_order_shift() {
        let spec = CqbSpec::bundled("cqb-a").unwrap();
        let d = [3e-5, -1e-5];
        let eps = epsilon_offset(&spec, d);
        let df = spec.gap_hz.hypot(eps) - spec.gap_hz;
        let approx = flux_noise_sensitivity(&spec, d[0], d[1]);
        assert!((df / approx - 1.0).abs() < 1e-2, "{df} vs {approx}");
    }
}
