// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Weighted nonlinear least squares.
//!
//! [`levenberg_marquardt`] fits any scalar model `f(p, x)`; [`fit_separable`]
//! handles models that are linear combinations of nonlinear basis functions
//! by eliminating the linear coefficients at every step, then polishes all
//! parameters jointly so the covariance covers both sets.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative chi² decrease below which the fit is converged.
    pub ftol: f64,
    /// Relative parameter step below which the fit is converged.
    pub xtol: f64,
    pub lambda0: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-14,
            xtol: 1e-12,
            lambda0: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }
}

fn weights(n: usize, sigma: Option<&[f64]>) -> Result<Vec<f64>> {
    match sigma {
        None => Ok(vec![1.0; n]),
        Some(s) if s.len() != n => Err(Error::Config("sigma length differs from data".into())),
        Some(s) => s
            .iter()
            .map(|&v| {
                if v > 0.0 && v.is_finite() {
                    Ok(1.0 / v)
                } else {
                    Err(Error::Numeric(format!("non-positive uncertainty {v}")))
                }
            })
            .collect(),
    }
}

fn check_data(x: &[f64], y: &[f64], n_params: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Config("x and y differ in length".into()));
    }
    if x.len() < n_params {
        return Err(Error::Config(format!(
            "{} points cannot constrain {n_params} parameters",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data".into()));
    }
    Ok(())
}

fn residuals(model: &[f64], y: &[f64], w: &[f64]) -> DVector<f64> {
    DVector::from_iterator(y.len(), model.iter().zip(y).zip(w).map(|((&m, &yi), &wi)| (m - yi) * wi))
}

fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, p: &[f64], w: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(w.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(1e-8);
        q[k] = p[k] + h;
        let up = f(&q);
        q[k] = p[k] - h;
        let dn = f(&q);
        q[k] = p[k];
        for i in 0..w.len() {
            j[(i, k)] = (up[i] - dn[i]) / (2.0 * h) * w[i];
        }
    }
    j
}

/// Levenberg–Marquardt with Marquardt diagonal scaling. Without `sigma`
/// the covariance is scaled by the reduced chi².
pub fn levenberg_marquardt<F: Fn(&[f64], f64) -> f64>(
    f: F,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    p0: &[f64],
    opts: &LmOptions,
) -> Result<FitResult> {
    check_data(x, y, p0.len())?;
    let model = |p: &[f64]| x.iter().map(|&xi| f(p, xi)).collect::<Vec<f64>>();
    lm_vector(&model, y, sigma, p0, opts)
}

/// LM over a model that returns all predictions at once.
fn lm_vector<F: Fn(&[f64]) -> Vec<f64>>(
    f: &F,
    y: &[f64],
    sigma: Option<&[f64]>,
    p0: &[f64],
    opts: &LmOptions,
) -> Result<FitResult> {
    let w = weights(y.len(), sigma)?;
    let mut p = p0.to_vec();
    let mut r = residuals(&f(&p), y, &w);
    let mut chi2 = r.norm_squared();
    if !chi2.is_finite() {
        return Err(Error::NonFinite("initial residuals".into()));
    }
    let mut lambda = opts.lambda0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let j = jacobian(f, &p, &w);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..p.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residuals(&f(&trial), y, &w);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= chi2 {
                let rel_step = step
                    .iter()
                    .zip(&p)
                    .map(|(s, v)| s.abs() / (v.abs() + 1e-30))
                    .fold(0.0, f64::max);
                let rel_drop = (chi2 - ct) / chi2.max(1e-300);
                p = trial;
                r = rt;
                chi2 = ct;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel_drop < opts.ftol || rel_step < opts.xtol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!("no convergence after {iterations} iterations")));
    }
    finish(f, p, &w, chi2, sigma.is_some(), iterations)
}

fn finish<F: Fn(&[f64]) -> Vec<f64>>(
    f: &F,
    p: Vec<f64>,
    w: &[f64],
    chi2: f64,
    absolute_sigma: bool,
    iterations: usize,
) -> Result<FitResult> {
    let dof = w.len().saturating_sub(p.len());
    let j = jacobian(f, &p, w);
    let jtj = j.transpose() * &j;
    let mut cov = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-300).ok())
        .ok_or_else(|| Error::Numeric("singular normal matrix".into()))?;
    if !absolute_sigma && dof > 0 {
        cov *= chi2 / dof as f64;
    }
    let stderr = (0..p.len()).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
    Ok(FitResult {
        params: p,
        stderr,
        covariance: cov,
        chi2,
        dof,
        iterations,
    })
}

/// Model `y = Σ c_k φ_k(θ, x)`: `basis(θ, x)` returns all φ_k at `x`.
/// The result lists θ first, then the linear coefficients c.
pub fn fit_separable<B: Fn(&[f64], f64) -> Vec<f64>>(
    basis: B,
    n_linear: usize,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    theta0: &[f64],
    opts: &LmOptions,
) -> Result<FitResult> {
    check_data(x, y, theta0.len() + n_linear)?;
    let w = weights(x.len(), sigma)?;
    let design = |theta: &[f64]| -> DMatrix<f64> {
        let mut a = DMatrix::zeros(x.len(), n_linear);
        for (i, &xi) in x.iter().enumerate() {
            for (k, v) in basis(theta, xi).into_iter().take(n_linear).enumerate() {
                a[(i, k)] = v;
            }
        }
        a
    };
    let solve_linear = |a: &DMatrix<f64>| -> Option<DVector<f64>> {
        let aw = DMatrix::from_fn(x.len(), n_linear, |i, k| a[(i, k)] * w[i]);
        let b = DVector::from_iterator(x.len(), y.iter().zip(&w).map(|(yi, wi)| yi * wi));
        aw.svd(true, true).solve(&b, 1e-14).ok()
    };
    let reduced = |theta: &[f64]| -> Vec<f64> {
        let a = design(theta);
        match solve_linear(&a) {
            Some(c) => (&a * c).iter().copied().collect(),
            None => vec![f64::NAN; x.len()],
        }
    };
    let theta = if theta0.is_empty() {
        Vec::new()
    } else {
        lm_vector(&reduced, y, sigma, theta0, opts)?.params
    };
    let c = solve_linear(&design(&theta)).ok_or_else(|| Error::Numeric("linear sub-problem failed".into()))?;
    let mut p = theta.clone();
    p.extend(c.iter());
    let nt = theta.len();
    let full = |q: &[f64]| -> Vec<f64> { (&design(&q[..nt]) * DVector::from_column_slice(&q[nt..])).iter().copied().collect() };
    let chi2 = residuals(&full(&p), y, &w).norm_squared();
    finish(&full, p, &w, chi2, sigma.is_some(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exponential_exact() {
        let x: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|&t| 0.2 + 0.7 * (-t / 3.3).exp()).collect();
        let fit = levenberg_marquardt(
            |p, t| p[0] + p[1] * (-t / p[2]).exp(),
            &x,
            &y,
            None,
            &[0.0, 1.0, 1.0],
            &LmOptions::default(),
        )
        .unwrap();
        assert!((fit.params[2] - 3.3).abs() < 1e-8);
        assert!(fit.chi2 < 1e-20);
    }

    #[test]
    fn separable_matches_full() {
        let x: Vec<f64> = (0..60).map(|k| k as f64).collect();
        let mut r = rng::stream(1, 0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let y: Vec<f64> = x.iter().map(|&t| 0.5 + 0.4 * 0.97f64.powf(t) + noise.sample(&mut r)).collect();
        let sig = vec![0.01; x.len()];
        let sep = fit_separable(
            |th, t| vec![1.0, th[0].powf(t)],
            2,
            &x,
            &y,
            Some(&sig),
            &[0.9],
            &LmOptions::default(),
        )
        .unwrap();
        let full = levenberg_marquardt(
            |p, t| p[1] + p[2] * p[0].powf(t),
            &x,
            &y,
            Some(&sig),
            &[0.9, 0.4, 0.5],
            &LmOptions::default(),
        )
        .unwrap();
        for k in 0..3 {
            assert!((sep.params[k] - full.params[k]).abs() < 1e-6, "{k}");
            assert!((sep.stderr[k] / full.stderr[k] - 1.0).abs() < 1e-3);
        }
        assert!((sep.params[0] - 0.97).abs() < 4.0 * sep.stderr[0]);
    }

    #[test]
    fn rejects_bad_input() {
        let o = LmOptions::default();
        assert!(levenberg_marquardt(|p, t| p[0] * t, &[1.0], &[1.0, 2.0], None, &[1.0], &o).is_err());
        assert!(levenberg_marquardt(|p, t| p[0] * t, &[1.0, 2.0], &[1.0, f64::NAN], None, &[1.0], &o).is_err());
        assert!(levenberg_marquardt(|p, t| p[0] * t, &[1.0, 2.0], &[1.0, 2.0], Some(&[1.0, 0.0]), &[1.0], &o).is_err());
    }
}
