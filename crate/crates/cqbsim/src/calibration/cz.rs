// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::device::TwoCqbSpec;
use crate::error::{Error, Result};
use crate::propagator::{two_cqb_unitary, zz_phase, CzSchedule, TwoQubitDrive};
use crate::waveform::DEFAULT_SAMPLE_PERIOD;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CzMode {
    /// Hold fixed; the operating detuning is solved for.
    FixedHold { hold: f64 },
    /// Operating detuning fixed; the hold is solved for and snapped.
    FixedDetuning { operating_detuning_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CzTarget {
    /// Conditional phase magnitude 2π∫ζ dt [rad].
    pub phase: f64,
    pub mode: CzMode,
    pub ramp_duration: f64,
    pub ramp_time_constant: f64,
    pub sample_period: f64,
    pub max_hold: f64,
}

impl Default for CzTarget {
    fn default() -> Self {
        Self {
            phase: PI,
            mode: CzMode::FixedHold { hold: 250e-9 },
            ramp_duration: 20e-9,
            ramp_time_constant: 5e-9,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            max_hold: 5e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzCalibration {
    pub schedule: CzSchedule,
    /// Single-CQB phase rates over the schedule [rad/s].
    pub eta_a: f64,
    pub eta_b: f64,
    /// 2π∫ζ dt over the realized schedule [rad].
    pub conditional_phase: f64,
    pub duration: f64,
}

impl CzCalibration {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.eta_a, self.eta_b, self.conditional_phase, self.duration];
        if vals.iter().any(|v| !v.is_finite()) || self.schedule.n_samples() == 0 {
            return Err(Error::Config("uncalibrated CZ".into()));
        }
        Ok(())
    }
}

fn schedule(two: &TwoCqbSpec, t: &CzTarget, operating: f64, hold: f64) -> CzSchedule {
    CzSchedule {
        parking_detuning_hz: two.parking_detuning_hz,
        operating_detuning_hz: operating,
        ramp_duration: t.ramp_duration,
        ramp_time_constant: t.ramp_time_constant,
        hold,
        sample_period: t.sample_period,
    }
}

fn phase_of(two: &TwoCqbSpec, s: &CzSchedule) -> Result<f64> {
    Ok(zz_phase(&s.zeta_trace(&two.zz_profile)?, s.sample_period))
}

/// Solves the CZ schedule for `target` and measures η_A, η_B from the
/// diagonal of the two-CQB propagator.
pub fn calibrate_cz(two: &TwoCqbSpec, target: &CzTarget) -> Result<CzCalibration> {
    two.validate()?;
    if !(target.phase > 0.0 && target.sample_period > 0.0 && target.ramp_duration >= 0.0) {
        return Err(Error::Config("CZ target phase, ramp and sample period must be positive".into()));
    }
    let profile = &two.zz_profile;
    let d_min = profile.detuning_hz[0];
    let dt = target.sample_period;
    let sched = match target.mode {
        CzMode::FixedDetuning { operating_detuning_hz } => {
            let zeta = profile.zeta_at(operating_detuning_hz)?;
            let ramps = phase_of(two, &schedule(two, target, operating_detuning_hz, 0.0))?;
            let needed = (target.phase - ramps) / (TAU * zeta.max(1e-300));
            if !(needed >= 0.0) || needed > target.max_hold {
                return Err(Error::Config(format!(
                    "ζ = {zeta:e} Hz cannot reach {} rad within {:e} s",
                    target.phase, target.max_hold
                )));
            }
            schedule(two, target, operating_detuning_hz, (needed / dt).round() * dt)
        }
        CzMode::FixedHold { hold } => {
            let f = |d: f64| -> Result<f64> { Ok(phase_of(two, &schedule(two, target, d, hold))? - target.phase) };
            let (mut lo, mut hi) = (d_min, two.parking_detuning_hz);
            if f(lo)? < 0.0 {
                return Err(Error::Config(format!(
                    "maximum ζ = {:e} Hz too small for {} rad in {hold:e} s",
                    profile.max_zeta(),
                    target.phase
                )));
            }
            if f(hi)? > 0.0 {
                return Err(Error::Config("conditional phase exceeds target even at parking".into()));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-9 {
                    break;
                }
            }
            schedule(two, target, 0.5 * (lo + hi), hold)
        }
    };
    let zeta = sched.zeta_trace(profile)?;
    let zeros = vec![0.0; zeta.len()];
    let u = two_cqb_unitary(
        two,
        &TwoQubitDrive {
            eps_a: &zeros,
            eps_b: &zeros,
            zeta: &zeta,
            dt,
        },
    )?;
    let arg = |k: usize| u[(k, k)].arg();
    let t = sched.duration();
    let zz = zz_phase(&zeta, dt);
    let unwrap = |theta: f64, near: f64| theta + TAU * ((near - theta) / TAU).round();
    let theta_a = unwrap(arg(2) - arg(0), TAU * two.cqb_a.gap_hz * t + 0.5 * zz);
    let theta_b = unwrap(arg(1) - arg(0), TAU * two.cqb_b.gap_hz * t + 0.5 * zz);
    let cond = (-(arg(3) - arg(2) - arg(1) + arg(0))).rem_euclid(TAU);
    let cal = CzCalibration {
        schedule: sched,
        eta_a: theta_a / t,
        eta_b: theta_b / t,
        conditional_phase: cond,
        duration: t,
    };
    cal.validate()?;
    Ok(cal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{optimal_cz_hold, ZzProfile};

    #[test]
    fn constant_zeta_without_ramps() {
        let mut two = TwoCqbSpec::bundled().unwrap();
        two.zz_profile = ZzProfile::constant(2e6, 400e6);
        let t = CzTarget {
            mode: CzMode::FixedDetuning { operating_detuning_hz: 6e6 },
            ramp_duration: 0.0,
            ..CzTarget::default()
        };
        let c = calibrate_cz(&two, &t).unwrap();
        assert!((c.schedule.hold - 1.0 / (2.0 * 2e6)).abs() < 1e-15);
        assert!((c.conditional_phase - PI).abs() < 1e-9);
    }

    #[test]
    fn bundled_schedule_is_290_ns() {
        let two = TwoCqbSpec::bundled().unwrap();
        let c = calibrate_cz(&two, &CzTarget::default()).unwrap();
        assert!((c.duration - 290e-9).abs() < 1e-12);
        assert!((c.schedule.hold - optimal_cz_hold(two.g23_hz)).abs() < 1e-15);
        assert!((c.conditional_phase - PI).abs() < 1e-3, "{}", c.conditional_phase);
        let expect_a = TAU * two.cqb_a.gap_hz;
        assert!((c.eta_a / expect_a - 1.0).abs() < 0.05);
    }

    #[test]
    fn weak_profile_is_rejected() {
        let mut two = TwoCqbSpec::bundled().unwrap();
        two.zz_profile = ZzProfile::constant(1e3, 400e6);
        assert!(calibrate_cz(&two, &CzTarget::default()).is_err());
    }
}
