// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Joint relaxation / leakage fit of three population curves.
//!
//! With the CQB prepared in one eigenstate at amplitude a = P(0):
//!
//! ```text
//! P_prep(t)  = a [1/2 + e^{-Γc t}/2] e^{-Γl t}
//! P_other(t) = a [1/2 - e^{-Γc t}/2] e^{-Γl t}
//! P_gg(t)    = 1 - a e^{-Γl t}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_separable, FitResult, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    T1Triple,
    Ramsey,
    Echo,
    GambettaRamsey,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub params: Vec<FitParam>,
    pub residual_norm: f64,
    /// 95% profile-likelihood lower bound on 1/Γc when Γc is consistent with 0.
    pub t1_cqb_lower_bound: Option<f64>,
}

impl DecayFit {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.param(name).map_or(f64::NAN, |p| p.value)
    }
}

/// Populations measured after preparing one CQB eigenstate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub time: Vec<f64>,
    pub prepared: Vec<f64>,
    pub other: Vec<f64>,
    pub leaked: Vec<f64>,
    /// Per-point standard deviation; estimated from residuals when absent.
    pub sigma: Option<f64>,
}

impl PopulationRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.time.len();
        if n < 4 || self.prepared.len() != n || self.other.len() != n || self.leaked.len() != n {
            return Err(Error::Config("population curves need ≥ 4 common time points".into()));
        }
        if self.time.windows(2).any(|w| w[1] <= w[0]) || self.time[0] < 0.0 {
            return Err(Error::Config("time grid must be non-negative and increasing".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::field("sigma", "must be > 0"));
            }
        }
        let tol = self.sigma.map_or(0.05, |s| 5.0 * s);
        let all = self.prepared.iter().chain(&self.other).chain(&self.leaked);
        for &p in all {
            if !p.is_finite() || p < -tol || p > 1.0 + tol {
                return Err(Error::Numeric(format!("non-physical population {p}")));
            }
        }
        Ok(())
    }
}

/// Δχ² for a 95% profile-likelihood limit on one parameter.
pub const PROFILE_DCHI2_95: f64 = 3.841_458_820_694_124;

struct Problem<'a> {
    t: Vec<f64>,
    y: Vec<f64>,
    sigma: Option<Vec<f64>>,
    rec: &'a PopulationRecord,
}

impl<'a> Problem<'a> {
    fn new(rec: &'a PopulationRecord, span: f64) -> Self {
        let t: Vec<f64> = rec.time.iter().map(|&t| t / span).collect();
        let y = rec
            .prepared
            .iter()
            .chain(&rec.other)
            .copied()
            .chain(rec.leaked.iter().map(|p| p - 1.0))
            .collect();
        let sigma = rec.sigma.map(|s| vec![s; 3 * t.len()]);
        Self { t, y, sigma, rec }
    }

    fn x(&self) -> Vec<f64> {
        (0..self.y.len()).map(|i| i as f64).collect()
    }

    fn basis(&self, gc: f64, gl: f64, i: usize) -> f64 {
        let n = self.t.len();
        let t = self.t[i % n];
        let el = (-gl * t).exp();
        let ec = (-gc * t).exp();
        match i / n {
            0 => (0.5 + 0.5 * ec) * el,
            1 => (0.5 - 0.5 * ec) * el,
            _ => -el,
        }
    }

    /// θ = [Γc, Γl] in units of 1/span.
    fn fit_free(&self, theta0: [f64; 2]) -> Result<FitResult> {
        fit_separable(
            |th, x| vec![self.basis(th[0], th[1], x as usize)],
            1,
            &self.x(),
            &self.y,
            self.sigma.as_deref(),
            &theta0,
            &LmOptions::default(),
        )
    }

    /// θ = [Γl] with Γc fixed.
    fn fit_fixed(&self, gc: f64, gl0: f64) -> Result<FitResult> {
        fit_separable(
            |th, x| vec![self.basis(gc, th[0], x as usize)],
            1,
            &self.x(),
            &self.y,
            self.sigma.as_deref(),
            &[gl0],
            &LmOptions::default(),
        )
    }

    fn best_of<F: Fn(f64) -> Result<FitResult>>(&self, f: F) -> Result<FitResult> {
        // Multi-start over log-spaced leakage-rate guesses.
        let mut best: Option<FitResult> = None;
        let mut last_err = None;
        for k in 0..5 {
            let gl0 = 0.1 * 10f64.powf(k as f64 * 0.5);
            match f(gl0) {
                Ok(fit) if best.as_ref().map_or(true, |b| fit.chi2 < b.chi2) => best = Some(fit),
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Convergence("no start converged".into())))
    }

    fn scale(&self, chi2_min: f64, n_params: usize) -> f64 {
        match self.rec.sigma {
            Some(_) => 1.0,
            None => chi2_min / (self.y.len() - n_params) as f64,
        }
    }
}

/// Joint fit of Γc (intra-CQB relaxation) and Γl (leakage) with a 95%
/// profile-likelihood lower bound on T1_CQB.
pub fn fit_t1_leakage(rec: &PopulationRecord) -> Result<DecayFit> {
    rec.validate()?;
    let span = rec.time[rec.time.len() - 1] - rec.time[0];
    if !(span > 0.0) {
        return Err(Error::Config("zero-length time record".into()));
    }
    let prob = Problem::new(rec, span);
    let free = prob.best_of(|gl0| prob.fit_free([1e-3, gl0]))?;
    let boundary = prob.best_of(|gl0| prob.fit_fixed(0.0, gl0))?;
    // Γc is a rate: below zero the constrained optimum sits on the boundary.
    let (gc, gc_err, gl, gl_err, amp, amp_err, chi2) = if free.params[0] >= 0.0 {
        let p = &free.params;
        (p[0], free.stderr[0], p[1], free.stderr[1], p[2], free.stderr[2], free.chi2)
    } else {
        let p = &boundary.params;
        (0.0, free.stderr[0], p[0], boundary.stderr[0], p[1], boundary.stderr[1], boundary.chi2)
    };
    let s2 = prob.scale(free.chi2.min(chi2), 3);
    let threshold = chi2 + PROFILE_DCHI2_95 * s2;
    let bound = if gc <= 2.0 * gc_err || gc_err == 0.0 {
        Some(profile_upper(&prob, gc, gl, threshold)?)
    } else {
        None
    };
    Ok(DecayFit {
        model: DecayModel::T1Triple,
        params: vec![
            FitParam {
                name: "gamma_cqb".into(),
                value: gc / span,
                stderr: gc_err / span,
            },
            FitParam {
                name: "gamma_leakage".into(),
                value: gl.max(0.0) / span,
                stderr: gl_err / span,
            },
            FitParam {
                name: "p_initial".into(),
                value: amp,
                stderr: amp_err,
            },
        ],
        residual_norm: chi2.sqrt(),
        t1_cqb_lower_bound: bound.map(|g| if g > 0.0 { span / g } else { f64::INFINITY }),
    })
}

/// Smallest Γc ≥ start whose profiled χ² reaches `threshold` (1/span units).
fn profile_upper(prob: &Problem, start: f64, gl: f64, threshold: f64) -> Result<f64> {
    let chi = |g: f64| prob.fit_fixed(g, gl.max(1e-6)).map(|f| f.chi2);
    if chi(start)? >= threshold {
        return Ok(start);
    }
    let mut lo = start;
    let mut hi = start.max(1e-6);
    let mut n = 0;
    while chi(hi)? < threshold {
        lo = hi;
        hi *= 2.0;
        n += 1;
        if n > 80 {
            return Err(Error::Convergence("profile likelihood never reaches the 95% level".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if chi(mid)? < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Noise-free populations of the three-curve model.
pub fn t1_leakage_model(time: &[f64], gamma_cqb: f64, gamma_leak: f64, p_initial: f64) -> PopulationRecord {
    let f = |t: f64, s: f64| p_initial * (0.5 + s * 0.5 * (-gamma_cqb * t).exp()) * (-gamma_leak * t).exp();
    PopulationRecord {
        time: time.to_vec(),
        prepared: time.iter().map(|&t| f(t, 1.0)).collect(),
        other: time.iter().map(|&t| f(t, -1.0)).collect(),
        leaked: time.iter().map(|&t| 1.0 - p_initial * (-gamma_leak * t).exp()).collect(),
        sigma: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    fn noisy(mut rec: PopulationRecord, sigma: f64, seed: u64) -> PopulationRecord {
        let mut r = rng::stream(seed, 0);
        let d = Normal::new(0.0, sigma).unwrap();
        for v in rec.prepared.iter_mut().chain(rec.other.iter_mut()).chain(rec.leaked.iter_mut()) {
            *v += d.sample(&mut r);
        }
        rec.sigma = Some(sigma);
        rec
    }

    #[test]
    fn constant_population_gives_zero_rates() {
        let t = grid(100e-6, 51);
        let fit = fit_t1_leakage(&t1_leakage_model(&t, 0.0, 0.0, 1.0)).unwrap();
        assert!(fit.value("gamma_cqb").abs() < 1e-3);
        assert!(fit.value("gamma_leakage").abs() < 1e-3);
    }

    #[test]
    fn recovers_leakage_rates_and_bounds_t1() {
        let t = grid(100e-6, 201);
        for (k, rate) in [1.0 / 27e-6, 1.0 / 41e-6].into_iter().enumerate() {
            let rec = noisy(t1_leakage_model(&t, 0.0, rate, 0.98), 0.01, 40 + k as u64);
            let fit = fit_t1_leakage(&rec).unwrap();
            let gl = fit.value("gamma_leakage");
            assert!((gl / rate - 1.0).abs() < 0.03, "{gl:e} vs {rate:e}");
            let bound = fit.t1_cqb_lower_bound.expect("Γc consistent with zero");
            assert!(bound > 100e-6, "{bound:e}");
        }
    }

    #[test]
    fn noiseless_record_bound_exceeds_two_ms() {
        let t = grid(100e-6, 201);
        let mut rec = t1_leakage_model(&t, 0.0, 1.0 / 27e-6, 1.0);
        rec.sigma = Some(0.01);
        let fit = fit_t1_leakage(&rec).unwrap();
        assert!(fit.t1_cqb_lower_bound.unwrap() > 2e-3, "{:?}", fit.t1_cqb_lower_bound);
    }

    #[test]
    fn resolves_finite_relaxation() {
        let t = grid(100e-6, 201);
        let rec = noisy(t1_leakage_model(&t, 1.0 / 30e-6, 1.0 / 50e-6, 1.0), 0.005, 3);
        let fit = fit_t1_leakage(&rec).unwrap();
        assert!((fit.value("gamma_cqb") * 30e-6 - 1.0).abs() < 0.05);
        assert!(fit.t1_cqb_lower_bound.is_none());
    }

    #[test]
    fn random_round_trips_within_five_percent() {
        let t = grid(200e-6, 1001);
        let mut r = rng::stream(77, 0);
        let u = rand_distr::Uniform::new(0.0f64, 1.0);
        for k in 0..20 {
            let draw = |x: f64| 1.0 / (100e-6 * (5e-6f64 / 100e-6).powf(x));
            let (gc, gl) = (draw(u.sample(&mut r)), draw(u.sample(&mut r)));
            let rec = noisy(t1_leakage_model(&t, gc, gl, 1.0), 0.005, 100 + k);
            let fit = fit_t1_leakage(&rec).unwrap();
            assert!((fit.value("gamma_leakage") / gl - 1.0).abs() < 0.05, "draw {k}");
            let e = fit.param("gamma_cqb").unwrap();
            assert!((e.value / gc - 1.0).abs() < 0.05, "draw {k}: {} ± {} vs {gc}", e.value, e.stderr);
        }
    }

    #[test]
    fn rejects_non_physical_populations() {
        let t = grid(1e-5, 10);
        let mut rec = t1_leakage_model(&t, 0.0, 1e5, 1.0);
        rec.prepared[3] = 1.4;
        assert!(fit_t1_leakage(&rec).is_err());
    }
}
