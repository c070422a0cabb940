// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sequence executors: ideal, analytic depolarizing channels, and
//! propagator-backed simulations of compiled waveforms.

use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use super::sequence::{element_unitary, TwoQubitElement};
use crate::calibration::CalibratedGateSet;
use crate::device::{CqbSpec, TwoCqbSpec};
use crate::error::{Error, Result};
use crate::gates::{clifford_unitary, compile_sequence, CliffordId, NegativeMode, SeqItem, ZLedger};
use crate::linalg::{kron2, rz, Mat3, C64};
use crate::propagator::{two_cqb_unitary, LeakageRates, Superop3, TwoQubitDrive};
use crate::waveform::{synth_xy_pulse, Axis, Sign, Waveform};

const NORM_TOL: f64 = 1e-6;

/// Final populations of one executed sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Populations {
    /// Computational-basis populations; index 0 is the recovery target.
    pub computational: Vec<f64>,
    pub leak: f64,
}

impl Populations {
    pub fn recovery(&self) -> f64 {
        self.computational[0]
    }

    /// Probability of remaining in the computational subspace.
    pub fn total(&self) -> f64 {
        self.computational.iter().sum()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok_range = |p: f64| p.is_finite() && (-NORM_TOL..=1.0 + NORM_TOL).contains(&p);
        if self.computational.len() != dim
            || !self.computational.iter().all(|&p| ok_range(p))
            || !ok_range(self.leak)
            || (self.total() + self.leak - 1.0).abs() > NORM_TOL
        {
            return Err(Error::Numeric(format!(
                "executor returned non-normalized populations {:?} + leak {}",
                self.computational, self.leak
            )));
        }
        Ok(())
    }
}

pub trait SingleExecutor: Sync {
    fn run(&self, seq: &[CliffordId]) -> Result<Populations>;
}

/// Executes independent sequences on CQB A and CQB B at the same time and
/// returns per-CQB marginals.
pub trait PairExecutor: Sync {
    fn run(&self, a: &[CliffordId], b: &[CliffordId]) -> Result<[Populations; 2]>;
}

pub trait TwoQubitExecutor: Sync {
    fn run(&self, seq: &[TwoQubitElement]) -> Result<Populations>;
}

fn conj2(u: &Matrix2<C64>, rho: &Matrix2<C64>) -> Matrix2<C64> {
    u * rho * u.adjoint()
}

/// Exact Clifford products.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdealExecutor;

impl SingleExecutor for IdealExecutor {
    fn run(&self, seq: &[CliffordId]) -> Result<Populations> {
        DepolarizingExecutor::new(0.0, 0.0)?.run(seq)
    }
}

/// Each Clifford is followed by a depolarizing channel of strength `p`
/// (λ = 1 − p) and a leak of probability `leak` (λ_leak = 1 − leak).
/// Readout errors `[P(1|0), P(0|1)]` act at the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepolarizingExecutor {
    pub depolarization: f64,
    pub leak: f64,
    pub readout: [f64; 2],
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::field(name, "must lie in [0, 1]"))
    }
}

impl DepolarizingExecutor {
    pub fn new(depolarization: f64, leak: f64) -> Result<Self> {
        check_prob("depolarization", depolarization)?;
        check_prob("leak", leak)?;
        Ok(Self {
            depolarization,
            leak,
            readout: [0.0, 0.0],
        })
    }

    pub fn with_readout(mut self, p1_given_0: f64, p0_given_1: f64) -> Result<Self> {
        check_prob("readout", p1_given_0)?;
        check_prob("readout", p0_given_1)?;
        self.readout = [p1_given_0, p0_given_1];
        Ok(self)
    }
}

impl SingleExecutor for DepolarizingExecutor {
    fn run(&self, seq: &[CliffordId]) -> Result<Populations> {
        let mut rho = Matrix2::<C64>::zeros();
        rho[(0, 0)] = C64::from(1.0);
        let keep = 1.0 - self.depolarization;
        for &c in seq {
            rho = conj2(&clifford_unitary(c), &rho);
            let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
            rho *= C64::from(keep);
            rho[(0, 0)] += 0.5 * self.depolarization * tr;
            rho[(1, 1)] += 0.5 * self.depolarization * tr;
            rho *= C64::from(1.0 - self.leak);
        }
        let (p0, p1) = (rho[(0, 0)].re, rho[(1, 1)].re);
        let [e0, e1] = self.readout;
        let r0 = (1.0 - e0) * p0 + e1 * p1;
        let r1 = e0 * p0 + (1.0 - e1) * p1;
        Ok(Populations {
            computational: vec![r0, r1],
            leak: 1.0 - p0 - p1,
        })
    }
}

/// Rates from a spec's `t1_leak_from_1_s`, `t1_leak_from_0_s` and `t2r_s`
/// annotations. Pure dephasing is what remains of 1/T2R after the leakage
/// contribution; Γ_CQB is taken as zero.
pub fn annotated_rates(spec: &CqbSpec) -> Result<LeakageRates> {
    let get = |k: &str| {
        spec.annotations
            .get(k)
            .copied()
            .filter(|v| *v > 0.0)
            .ok_or_else(|| Error::field(format!("annotations.{k}"), "required positive time"))
    };
    let l1 = 1.0 / get("t1_leak_from_1_s")?;
    let l0 = 1.0 / get("t1_leak_from_0_s")?;
    let dephasing = 1.0 / get("t2r_s")? - 0.5 * (l0 + l1);
    if dephasing < 0.0 {
        return Err(Error::field("annotations.t2r_s", "shorter than the leakage limit allows"));
    }
    let r = LeakageRates {
        leak_from_1: l1,
        leak_from_0: l0,
        gamma_cqb: 0.0,
        dephasing,
    };
    r.validate()?;
    Ok(r)
}

const WINDOW_LABELS: [(&str, Axis, Sign); 4] = [
    ("X+", Axis::X, Sign::Plus),
    ("X-", Axis::X, Sign::Minus),
    ("Y+", Axis::Y, Sign::Plus),
    ("Y-", Axis::Y, Sign::Minus),
];

/// Lindblad simulation of the compiled waveform. Window superoperators are
/// computed once; zero-detuning stretches are exact idles.
#[derive(Debug, Clone)]
pub struct PropagatorExecutor {
    spec: CqbSpec,
    calib: CalibratedGateSet,
    rates: LeakageRates,
    mode: NegativeMode,
    windows: Vec<(&'static str, Vec<f64>, Superop3)>,
}

impl PropagatorExecutor {
    pub fn new(spec: &CqbSpec, calib: &CalibratedGateSet, rates: LeakageRates, mode: NegativeMode) -> Result<Self> {
        rates.validate()?;
        calib.validate()?;
        let window = calib.window();
        let windows = WINDOW_LABELS
            .iter()
            .map(|&(label, axis, sign)| {
                let plus = synth_xy_pulse(&window, axis, Sign::Plus)?;
                let samples: Vec<f64> = plus.samples().iter().map(|v| sign.factor() * v).collect();
                let w = Waveform::new(samples.clone(), calib.sample_period)?;
                Ok((label, samples, Superop3::from_waveform(spec, &rates, &w)?))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            spec: spec.clone(),
            calib: *calib,
            rates,
            mode,
            windows,
        })
    }

    fn segment(&self, samples: &[f64], rho: &Mat3) -> Result<Mat3> {
        if samples.is_empty() {
            return Ok(*rho);
        }
        let dt = self.calib.sample_period;
        let op = if samples.iter().all(|&v| v == 0.0) {
            Superop3::idle(&self.spec, &self.rates, samples.len() as f64 * dt)
        } else {
            Superop3::from_waveform(&self.spec, &self.rates, &Waveform::new(samples.to_vec(), dt)?)?
        };
        Ok(op.apply(rho))
    }
}

impl SingleExecutor for PropagatorExecutor {
    fn run(&self, seq: &[CliffordId]) -> Result<Populations> {
        let items: Vec<SeqItem> = seq.iter().map(|&c| c.into()).collect();
        let compiled = compile_sequence(&items, &self.calib, &mut ZLedger::new(), 0, self.mode)?;
        let w = &compiled.waveform;
        let s = w.samples();
        let mut marks: Vec<_> = w
            .annotations()
            .iter()
            .filter_map(|a| {
                self.windows
                    .iter()
                    .find(|(label, _, _)| *label == a.label)
                    .map(|win| (a.start, a.end, win))
            })
            .collect();
        marks.sort_by_key(|m| m.0);
        let mut rho = Mat3::zeros();
        rho[(0, 0)] = C64::from(1.0);
        let mut pos = 0;
        for (start, end, (_, samples, op)) in marks {
            rho = self.segment(&s[pos..start], &rho)?;
            rho = if s[start..end] == samples[..] {
                op.apply(&rho)
            } else {
                self.segment(&s[start..end], &rho)?
            };
            pos = end;
        }
        rho = self.segment(&s[pos..], &rho)?;
        Ok(Populations {
            computational: vec![rho[(0, 0)].re, rho[(1, 1)].re],
            leak: rho[(2, 2)].re,
        })
    }
}

/// Two executors with no crosstalk.
#[derive(Debug, Clone)]
pub struct IndependentPair<A, B>(pub A, pub B);

impl<A: SingleExecutor, B: SingleExecutor> PairExecutor for IndependentPair<A, B> {
    fn run(&self, a: &[CliffordId], b: &[CliffordId]) -> Result<[Populations; 2]> {
        Ok([self.0.run(a)?, self.1.run(b)?])
    }
}

/// Coherent two-CQB simulation of two independently compiled tracks, with
/// the parking ζ acting throughout when `residual_zz` is set.
#[derive(Debug, Clone)]
pub struct CoupledPairExecutor {
    pub two: TwoCqbSpec,
    pub calib: [CalibratedGateSet; 2],
    pub mode: NegativeMode,
    pub residual_zz: bool,
}

impl PairExecutor for CoupledPairExecutor {
    fn run(&self, a: &[CliffordId], b: &[CliffordId]) -> Result<[Populations; 2]> {
        let mut ledger = ZLedger::new();
        let mut tracks = Vec::with_capacity(2);
        for (q, seq) in [a, b].into_iter().enumerate() {
            let items: Vec<SeqItem> = seq.iter().map(|&c| c.into()).collect();
            tracks.push(compile_sequence(&items, &self.calib[q], &mut ledger, q, self.mode)?.waveform);
        }
        let dt = tracks[0].sample_period();
        if (dt - tracks[1].sample_period()).abs() > 1e-18 {
            return Err(Error::Config("CQB gate sets use different sample periods".into()));
        }
        let n = tracks[0].len().max(tracks[1].len());
        let pad = |w: &Waveform| {
            let mut v = w.samples().to_vec();
            v.resize(n, 0.0);
            v
        };
        let (ea, eb) = (pad(&tracks[0]), pad(&tracks[1]));
        let z = if self.residual_zz { self.two.residual_zeta()? } else { 0.0 };
        let zeta = vec![z; n];
        let u = two_cqb_unitary(
            &self.two,
            &TwoQubitDrive {
                eps_a: &ea,
                eps_b: &eb,
                zeta: &zeta,
                dt,
            },
        )?;
        let (za, zb) = (self.calib[0].x_axis_azimuth, self.calib[1].x_axis_azimuth);
        let u = kron2(&rz(-za), &rz(-zb)) * u * kron2(&rz(za), &rz(zb));
        let p: Vec<f64> = (0..4).map(|k| u[(k, 0)].norm_sqr()).collect();
        let marginal = |c0: f64, c1: f64| Populations {
            computational: vec![c0, c1],
            leak: 0.0,
        };
        Ok([marginal(p[0] + p[1], p[2] + p[3]), marginal(p[0] + p[2], p[1] + p[3])])
    }
}

/// Depolarizing two-CQB channels: after every reference element with
/// strength `depolarization`, after every interleaved CZ with
/// `cz_depolarization`; leaks act the same way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepolarizingTwoQubit {
    pub depolarization: f64,
    pub leak: f64,
    pub cz_depolarization: f64,
    pub cz_leak: f64,
}

impl DepolarizingTwoQubit {
    pub fn new(depolarization: f64, leak: f64, cz_depolarization: f64, cz_leak: f64) -> Result<Self> {
        check_prob("depolarization", depolarization)?;
        check_prob("leak", leak)?;
        check_prob("cz_depolarization", cz_depolarization)?;
        check_prob("cz_leak", cz_leak)?;
        Ok(Self {
            depolarization,
            leak,
            cz_depolarization,
            cz_leak,
        })
    }

    pub fn ideal() -> Self {
        Self {
            depolarization: 0.0,
            leak: 0.0,
            cz_depolarization: 0.0,
            cz_leak: 0.0,
        }
    }

    /// Average gate fidelity of the CZ error channel alone.
    pub fn cz_average_fidelity(&self) -> f64 {
        1.0 - 0.75 * self.cz_depolarization
    }
}

impl TwoQubitExecutor for DepolarizingTwoQubit {
    fn run(&self, seq: &[TwoQubitElement]) -> Result<Populations> {
        let mut rho = Matrix4::<C64>::zeros();
        rho[(0, 0)] = C64::from(1.0);
        for e in seq {
            let u = element_unitary(e);
            rho = u * rho * u.adjoint();
            let (p, l) = match e {
                TwoQubitElement::Clifford(_) => (self.depolarization, self.leak),
                TwoQubitElement::InterleavedCz => (self.cz_depolarization, self.cz_leak),
            };
            let tr = rho.trace().re;
            rho *= C64::from(1.0 - p);
            for k in 0..4 {
                rho[(k, k)] += 0.25 * p * tr;
            }
            rho *= C64::from(1.0 - l);
        }
        let computational: Vec<f64> = (0..4).map(|k| rho[(k, k)].re).collect();
        let leak = 1.0 - computational.iter().sum::<f64>();
        Ok(Populations { computational, leak })
    }
}
