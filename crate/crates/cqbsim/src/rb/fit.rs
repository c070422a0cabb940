// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Leakage-aware RB decay fits.
//!
//! The recovery probability and the computational-subspace total are fit
//! jointly:
//!
//! ```text
//! p_rec(m)   = (1/d + (1 − 1/d) λ^m) λ_leak^m
//! p_total(m) = λ_leak^m
//! ```
//!
//! With free SPAM the constants become `(a + b λ^m) λ_leak^m` and
//! `c λ_leak^m`. F = ((d − 1) λ + 1)/d and F_leak = λ_leak.

use serde::{Deserialize, Serialize};

use super::RbOutcome;
use crate::error::{Error, Result};
use crate::fit::{fit_separable, levenberg_marquardt, FitResult, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpamMode {
    /// Constants fixed at 1/d, 1 − 1/d and 1.
    #[default]
    Paper,
    /// Free amplitude and offset constants.
    Free,
}

/// Per-length averages over sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthStats {
    pub m: usize,
    pub sequences: usize,
    pub recovery: f64,
    pub recovery_sem: f64,
    pub total: f64,
    pub total_sem: f64,
    /// Mean computational-basis populations.
    pub populations: Vec<f64>,
    pub leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbFit {
    pub dimension: usize,
    pub spam: SpamMode,
    pub lambda: Estimate,
    pub lambda_leak: Estimate,
    pub fidelity: Estimate,
    pub fidelity_leak: Estimate,
    /// (a, b, c) of the free-SPAM form, or the fixed constants.
    pub spam_constants: [f64; 3],
    pub reduced_chi2: f64,
}

/// F = ((d − 1) λ + 1)/d.
pub fn fidelity_from_lambda(lambda: f64, d: usize) -> f64 {
    let d = d as f64;
    ((d - 1.0) * lambda + 1.0) / d
}

/// Smallest σ assigned to a point whose sample spread is zero.
pub const SEM_FLOOR: f64 = 1e-6;

/// Per-point σ for one curve, or `None` when no point has any spread.
/// Points with zero spread among noisy ones get a tenth of the curve's
/// mean σ: a handful of identical outcomes does not make a mean exact.
fn curve_sigmas(sem: &[f64]) -> Option<Vec<f64>> {
    let noisy: Vec<f64> = sem.iter().copied().filter(|&s| s > 0.0).collect();
    if noisy.is_empty() {
        return None;
    }
    let floor = (0.1 * noisy.iter().sum::<f64>() / noisy.len() as f64).max(SEM_FLOOR);
    Some(sem.iter().map(|&s| s.max(floor)).collect())
}

fn joint_sigmas(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    match (curve_sigmas(a), curve_sigmas(b)) {
        (None, None) => None,
        (sa, sb) => {
            let fill = |s: Option<Vec<f64>>, n: usize| s.unwrap_or_else(|| vec![SEM_FLOOR; n]);
            let mut v = fill(sa, a.len());
            v.extend(fill(sb, b.len()));
            Some(v)
        }
    }
}

/// Standard errors, inflated by √χ²_red when the model under-fits.
fn scaled(r: &FitResult, weighted: bool, k: usize) -> Estimate {
    let chi = r.reduced_chi2();
    let s = if weighted && chi.is_finite() && chi > 1.0 { chi.sqrt() } else { 1.0 };
    Estimate {
        value: r.params[k],
        stderr: s * r.stderr[k],
    }
}

fn check_lengths(stats: &[LengthStats]) -> Result<()> {
    if stats.len() < 3 {
        return Err(Error::Config("RB fits need ≥ 3 lengths".into()));
    }
    if stats.windows(2).any(|w| w[1].m <= w[0].m) {
        return Err(Error::Config("RB lengths must be strictly increasing".into()));
    }
    for w in stats.windows(2) {
        let tol = 3.0 * w[0].total_sem.hypot(w[1].total_sem) + 1e-9;
        if w[1].total > w[0].total + tol {
            return Err(Error::Numeric(format!(
                "non-monotone leakage curve: total {} at m = {} rises to {} at m = {}",
                w[0].total, w[0].m, w[1].total, w[1].m
            )));
        }
    }
    Ok(())
}

fn leak_guess(stats: &[LengthStats]) -> f64 {
    let (a, b) = (&stats[0], &stats[stats.len() - 1]);
    let r = (b.total / a.total).max(1e-6).powf(1.0 / (b.m - a.m) as f64);
    r.clamp(0.5, 1.0)
}

fn lambda_guess(stats: &[LengthStats], d: usize) -> f64 {
    let inv = 1.0 / d as f64;
    stats
        .iter()
        .find_map(|s| {
            let x = (s.recovery / s.total.max(1e-12) - inv) / (1.0 - inv);
            (x > 0.2 && x < 1.0).then(|| x.powf(1.0 / s.m as f64))
        })
        .unwrap_or(1.0)
        .clamp(0.5, 1.0)
}

/// Joint fit of recovery and total curves in dimension `d`.
pub fn fit_rb(stats: &[LengthStats], d: usize, spam: SpamMode) -> Result<RbFit> {
    if d < 2 {
        return Err(Error::Config(format!("RB dimension {d} < 2")));
    }
    check_lengths(stats)?;
    let n = stats.len();
    let m: Vec<f64> = stats.iter().map(|s| s.m as f64).collect();
    let x: Vec<f64> = (0..2 * n).map(|i| i as f64).collect();
    let y: Vec<f64> = stats.iter().map(|s| s.recovery).chain(stats.iter().map(|s| s.total)).collect();
    let rec_sem: Vec<f64> = stats.iter().map(|s| s.recovery_sem).collect();
    let tot_sem: Vec<f64> = stats.iter().map(|s| s.total_sem).collect();
    let sig = joint_sigmas(&rec_sem, &tot_sem);
    let p0 = [lambda_guess(stats, d), leak_guess(stats)];
    let inv = 1.0 / d as f64;
    let opts = LmOptions::default();
    let (res, constants) = match spam {
        SpamMode::Paper => {
            let model = |p: &[f64], xi: f64| {
                let i = xi as usize;
                let mi = m[i % n];
                let leak = p[1].powf(mi);
                if i < n {
                    (inv + (1.0 - inv) * p[0].powf(mi)) * leak
                } else {
                    leak
                }
            };
            let r = levenberg_marquardt(model, &x, &y, sig.as_deref(), &p0, &opts)?;
            (r, [inv, 1.0 - inv, 1.0])
        }
        SpamMode::Free => {
            let basis = |p: &[f64], xi: f64| {
                let i = xi as usize;
                let mi = m[i % n];
                let leak = p[1].powf(mi);
                if i < n {
                    vec![leak, p[0].powf(mi) * leak, 0.0]
                } else {
                    vec![0.0, 0.0, leak]
                }
            };
            let r = fit_separable(basis, 3, &x, &y, sig.as_deref(), &p0, &opts)?;
            let c = [r.params[2], r.params[3], r.params[4]];
            (r, c)
        }
    };
    let lambda = scaled(&res, sig.is_some(), 0);
    let lambda_leak = scaled(&res, sig.is_some(), 1);
    let scale = (d as f64 - 1.0) / d as f64;
    Ok(RbFit {
        dimension: d,
        spam,
        lambda,
        lambda_leak,
        fidelity: Estimate {
            value: fidelity_from_lambda(lambda.value, d),
            stderr: scale * lambda.stderr,
        },
        fidelity_leak: lambda_leak,
        spam_constants: constants,
        reduced_chi2: res.reduced_chi2(),
    })
}

/// Single-CQB fit (d = 2).
pub fn fit_single_with_leakage(stats: &[LengthStats], spam: SpamMode) -> Result<RbFit> {
    fit_rb(stats, 2, spam)
}

/// λ_leak from the computational-subspace total alone.
pub fn fit_leakage_only(stats: &[LengthStats]) -> Result<Estimate> {
    check_lengths(stats)?;
    let m: Vec<f64> = stats.iter().map(|s| s.m as f64).collect();
    let y: Vec<f64> = stats.iter().map(|s| s.total).collect();
    let sig = curve_sigmas(&stats.iter().map(|s| s.total_sem).collect::<Vec<_>>());
    let r = levenberg_marquardt(
        |p, mi| p[0].powf(mi),
        &m,
        &y,
        sig.as_deref(),
        &[leak_guess(stats)],
        &LmOptions::default(),
    )?;
    Ok(scaled(&r, sig.is_some(), 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzFidelity {
    /// ρ/λ.
    pub ratio: Estimate,
    pub fidelity: Estimate,
    /// ρ_leak/λ_leak.
    pub fidelity_leak: Estimate,
}

fn ratio(num: Estimate, den: Estimate) -> Estimate {
    let r = num.value / den.value;
    Estimate {
        value: r,
        stderr: r.abs() * (num.stderr / num.value).hypot(den.stderr / den.value),
    }
}

/// F_CZ = ((d − 1) ρ/λ + 1)/d with first-order error propagation.
pub fn interleaved_fidelity(rho: Estimate, lambda: Estimate, d: usize) -> Estimate {
    let r = ratio(rho, lambda);
    let scale = (d as f64 - 1.0) / d as f64;
    Estimate {
        value: fidelity_from_lambda(r.value, d),
        stderr: scale * r.stderr,
    }
}

/// Interleaved-CZ estimate from a reference and an interleaved outcome.
/// An interleaved decay slower than the reference beyond 2σ is rejected.
pub fn fit_interleaved_cz(reference: &RbOutcome, interleaved: &RbOutcome) -> Result<CzFidelity> {
    let (rf, it) = (&reference.fit, &interleaved.fit);
    if rf.dimension != 4 || it.dimension != 4 {
        return Err(Error::Config("interleaved CZ needs two-CQB outcomes".into()));
    }
    let same = reference.stats.len() == interleaved.stats.len()
        && reference.stats.iter().zip(&interleaved.stats).all(|(a, b)| a.m == b.m);
    if !same {
        return Err(Error::Config("reference and interleaved runs use different lengths".into()));
    }
    let (l, r) = (rf.lambda, it.lambda);
    if r.value - l.value > 2.0 * l.stderr.hypot(r.stderr) {
        return Err(Error::Numeric(format!(
            "unphysical interleaved improvement: ρ = {} > λ = {}",
            r.value, l.value
        )));
    }
    let r = interleaved_fidelity(r, l, 4);
    Ok(CzFidelity {
        ratio: ratio(it.lambda, rf.lambda),
        fidelity: r,
        fidelity_leak: ratio(it.lambda_leak, rf.lambda_leak),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(lambda: f64, leak: f64, d: usize, lengths: &[usize]) -> Vec<LengthStats> {
        let inv = 1.0 / d as f64;
        lengths
            .iter()
            .map(|&m| {
                let l = leak.powi(m as i32);
                LengthStats {
                    m,
                    sequences: 10,
                    recovery: (inv + (1.0 - inv) * lambda.powi(m as i32)) * l,
                    recovery_sem: 0.0,
                    total: l,
                    total_sem: 0.0,
                    populations: vec![],
                    leak: 1.0 - l,
                }
            })
            .collect()
    }

    #[test]
    fn formula_arithmetic() {
        assert_eq!(fidelity_from_lambda(1.0, 2), 1.0);
        assert!((fidelity_from_lambda(0.99, 2) - 0.995).abs() < 1e-15);
        let one = Estimate { value: 0.97, stderr: 0.0 };
        assert!((interleaved_fidelity(one, one, 4).value - 1.0).abs() < 1e-15);
        let rho = Estimate {
            value: 0.97 * 0.6933333333333334,
            stderr: 0.0,
        };
        assert!((interleaved_fidelity(rho, one, 4).value - 0.77).abs() < 1e-12);
    }

    #[test]
    fn exact_data_recovered() {
        let lengths = [1, 2, 4, 8, 16, 32, 64, 128];
        for spam in [SpamMode::Paper, SpamMode::Free] {
            let f = fit_rb(&synthetic(0.996, 0.998, 2, &lengths), 2, spam).unwrap();
            assert!((f.lambda.value - 0.996).abs() < 1e-8, "{spam:?} {:?}", f.lambda);
            assert!((f.lambda_leak.value - 0.998).abs() < 1e-8);
            let f4 = fit_rb(&synthetic(0.97, 0.999, 4, &lengths), 4, spam).unwrap();
            assert!((f4.lambda.value - 0.97).abs() < 1e-8);
        }
        let perfect = fit_rb(&synthetic(1.0, 1.0, 2, &lengths), 2, SpamMode::Paper).unwrap();
        assert!((perfect.fidelity.value - 1.0).abs() < 1e-12);
        assert!((perfect.fidelity_leak.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rising_total_rejected() {
        let mut s = synthetic(0.99, 0.99, 2, &[1, 10, 20, 40]);
        s[3].total = 0.99;
        assert!(matches!(fit_rb(&s, 2, SpamMode::Paper), Err(Error::Numeric(_))));
        assert!(fit_rb(&s[..2], 2, SpamMode::Paper).is_err());
    }
}
