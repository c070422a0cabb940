// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the output. Exits non-zero when
//! a criterion outside `KNOWN_UNATTAINABLE` fails.

use std::error::Error as StdError;
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::path::Path;
use std::time::Instant;

use cqbsim::calibration::{calibrate_cz, run_pipeline, CalibrationReport, CzTarget, PipelineConfig};
use cqbsim::device::{flux_noise_sensitivity, flux_sensitivity_ratio, photon_noise_sensitivity, CqbSpec, TwoCqbSpec};
use cqbsim::experiment::scan2d::{interference_map, linspace, single_pulse_excitation};
use cqbsim::experiment::{self, ExperimentConfig, ExperimentId, ResultManifest};
use cqbsim::gates::{
    clifford_to_primitives, compile_sequence, cz_with_resync, recovery_clifford, CliffordGroup, CliffordId, GateKind,
    GatePrimitive, NegativeMode, SeqItem, ZLedger,
};
use cqbsim::noise::{fit_t1_leakage, simulate_coherence, CoherenceConfig, CoherenceProtocol, FluxNoiseSpec, PopulationRecord};
use cqbsim::protocols::{lz_excitation_probability, simulate_lz_sweep};
use cqbsim::rb::{
    annotated_rates, run_rb, run_simultaneous_rb, run_two_qubit_rb, CoupledPairExecutor, DepolarizingExecutor,
    DepolarizingTwoQubit, Estimate, PropagatorExecutor, RbConfig, RbMode,
};
use cqbsim::waveform::{Sign, DEFAULT_SAMPLE_PERIOD as DT};
use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

/// Criteria that the bundled parameters cannot meet; reported, not enforced.
/// 7: sin²(2πφ*)δω/Δ evaluates to 2.1228 at δω = 143 MHz, Δ = 65 MHz,
///    φ* = 0.28, not 2.108.
/// 9: quasi-static 1/f flux noise at the second-order operating point gives
///    T2R of tens of ms, far above the microsecond band.
const KNOWN_UNATTAINABLE: [u8; 2] = [7, 9];

type Res = Result<(bool, String), Box<dyn StdError>>;

struct Ctx {
    spec: CqbSpec,
    report: CalibrationReport,
    two: TwoCqbSpec,
}

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// exp(−i t h·σ) written out from the closed form.
fn expm(h: [f64; 3], t: f64) -> Matrix2<C> {
    let r = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if r == 0.0 {
        return Matrix2::identity();
    }
    let (s, co) = (r * t).sin_cos();
    let n = h.map(|x| x / r);
    let mi = C::new(0.0, -s);
    Matrix2::new(
        c(co) + mi * n[2],
        mi * C::new(n[0], -n[1]),
        mi * C::new(n[0], n[1]),
        c(co) - mi * n[2],
    )
}

fn rot(axis: usize, theta: f64) -> Matrix2<C> {
    let mut h = [0.0; 3];
    h[axis] = 0.5;
    expm(h, theta)
}

fn fid2(u: &Matrix2<C>, v: &Matrix2<C>) -> f64 {
    (u.adjoint() * v).trace().norm() / 2.0
}

/// RK4 for i dψ/dt = (h(t)·σ) ψ.
fn rk4(h: impl Fn(f64) -> [f64; 3], mut psi: Vector2<C>, t0: f64, t1: f64, steps: usize) -> Vector2<C> {
    let dt = (t1 - t0) / steps as f64;
    let f = |t: f64, p: &Vector2<C>| {
        let [x, y, z] = h(t);
        let a = c(z) * p[0] + C::new(x, -y) * p[1];
        let b = C::new(x, y) * p[0] - c(z) * p[1];
        Vector2::new(a, b) * C::new(0.0, -1.0)
    };
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let k1 = f(t, &psi);
        let k2 = f(t + 0.5 * dt, &(psi + k1 * c(0.5 * dt)));
        let k3 = f(t + 0.5 * dt, &(psi + k2 * c(0.5 * dt)));
        let k4 = f(t + dt, &(psi + k3 * c(dt)));
        psi += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
    }
    psi
}

/// Counts estimates within 2σ of `truth` and checks the seed average against
/// its own combined error.
fn seed_agreement(est: &[Estimate], truth: f64) -> (bool, String) {
    let n = est.len() as f64;
    let within = est.iter().filter(|e| (e.value - truth).abs() <= 2.0 * e.stderr).count();
    let mean = est.iter().map(|e| e.value).sum::<f64>() / n;
    let sem = est.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / n;
    let ok = within * 10 >= est.len() * 8 && (mean - truth).abs() <= 2.0 * sem;
    (ok, format!("{within}/{} seeds in 2σ, mean {:+.1}σ", est.len(), (mean - truth) / sem))
}

const MAP_POINTS: usize = 101;
const MAP_BUDGET_S: f64 = 60.0;
const CONTOUR_BOX: f64 = 0.25;
const CELL_TOL: f64 = 5e-3;

fn interference(ctx: &Ctx) -> Res {
    let eps = linspace(0.0, 160e6, MAP_POINTS)?;
    let freq = linspace(60e6, 250e6, MAP_POINTS)?;
    let t0 = Instant::now();
    let map = interference_map(&ctx.spec, &eps, &freq, DT)?;
    let secs = t0.elapsed().as_secs_f64();
    let near = map.contour_near(125e6, 80e6, CONTOUR_BOX);
    let closest = near
        .iter()
        .min_by(|a, b| (a.pulse_freq_hz - 125e6).abs().total_cmp(&(b.pulse_freq_hz - 125e6).abs()));

    // One cell against a continuous-drive RK4 solution.
    let (g, e, f) = (ctx.spec.gap_hz, 80e6, 125e6);
    let drive = |t: f64| [-PI * e * (TAU * f * t).sin(), 0.0, PI * g];
    let psi = rk4(drive, Vector2::new(c(1.0), c(0.0)), 0.0, 1.0 / f, 20_000);
    let cell = single_pulse_excitation(g, e, f, DT)?;
    let cell_err = (cell - psi[1].norm_sqr()).abs();

    let detail = match closest {
        Some(p) => format!(
            "{} contour points in box, nearest ({:.1} MHz, {:.1} MHz); cell vs RK4 {cell_err:.1e}; {secs:.2} s",
            near.len(),
            p.pulse_freq_hz / 1e6,
            p.epsilon_p_hz / 1e6
        ),
        None => format!("no contour point in box; {secs:.2} s"),
    };
    Ok((!near.is_empty() && secs < MAP_BUDGET_S && cell_err < CELL_TOL, detail))
}

const X_INFIDELITY_TOL: f64 = 1e-4;
const CHAIN_P0_MIN: f64 = 0.9999;

fn calibration_fixed_point(ctx: &Ctx) -> Res {
    let g = &ctx.report.gate_set;
    let x: SeqItem = GatePrimitive::x(Sign::Plus).into();
    let one = compile_sequence(&[x], g, &mut ZLedger::new(), 0, NegativeMode::SignFlip)?;
    let u = one.realized_unitary(&ctx.spec, g)?;
    let infid = 1.0 - fid2(&u, &rot(0, 2.0 * FRAC_PI_4));

    // Lab-frame propagation of the raw samples; |⟨0|U|0⟩|² ignores Z frames.
    let four = compile_sequence(&[x; 4], g, &mut ZLedger::new(), 0, NegativeMode::SignFlip)?;
    let w = &four.waveform;
    let u4 = w
        .samples()
        .iter()
        .fold(Matrix2::identity(), |acc, &e| expm([-PI * e, 0.0, PI * ctx.spec.gap_hz], w.sample_period()) * acc);
    let p0 = u4[(0, 0)].norm_sqr();
    Ok((
        infid < X_INFIDELITY_TOL && p0 > CHAIN_P0_MIN,
        format!("X(π/2) infidelity {infid:.2e}, P0 after 4×X(π/2) {p0:.7}"),
    ))
}

const MODEL_GAP_HZ: f64 = 65.4e6;
const GAP_REL_TOL: f64 = 1e-4;
const T_XY_NS: f64 = 3.823e-9;

fn z_timing(ctx: &Ctx) -> Res {
    let rel = |r: &CalibrationReport| (r.ramsey.gap_hz / MODEL_GAP_HZ - 1.0).abs();
    let main = rel(&ctx.report);
    // Same pipeline started from a 2% detuned guess.
    let cfg = PipelineConfig {
        initial_gap_hz: Some(0.98 * MODEL_GAP_HZ),
        ..PipelineConfig::default()
    };
    let off = rel(&run_pipeline(&ctx.spec, &cfg)?);
    let g = &ctx.report.gate_set;
    let snap = (g.t_xy - T_XY_NS).abs();
    let quarter = (g.t_xy - 0.25 / g.measured_gap_hz).abs();
    Ok((
        ctx.spec.gap_hz == MODEL_GAP_HZ && main < GAP_REL_TOL && off < GAP_REL_TOL && snap <= DT && quarter <= DT,
        format!(
            "Δ rel err {main:.1e} (from 0.98Δ: {off:.1e}); t_xy {:.4} ns, |t_xy − 3.823 ns| {:.1e} ns",
            g.t_xy * 1e9,
            snap * 1e9
        ),
    ))
}

fn primitive_oracle(p: &GatePrimitive) -> Matrix2<C> {
    match p.kind {
        GateKind::XHalf(s) => rot(0, s.factor() * 0.5 * PI),
        GateKind::YHalf(s) => rot(1, s.factor() * 0.5 * PI),
        GateKind::Z(a) => rot(2, a),
        GateKind::Idle(_) => Matrix2::identity(),
        GateKind::Cz => panic!("CZ in a single-CQB Clifford"),
    }
}

fn clifford_oracle(id: CliffordId) -> Matrix2<C> {
    clifford_to_primitives(id)
        .iter()
        .fold(Matrix2::identity(), |acc, p| primitive_oracle(p) * acc)
}

const ROUND_TRIPS: usize = 1000;
const SAME_CLASS: f64 = 1.0 - 1e-9;

fn clifford_algebra(_: &Ctx) -> Res {
    let ids: Vec<CliffordId> = CliffordId::all().collect();
    let us: Vec<Matrix2<C>> = ids.iter().map(|&i| clifford_oracle(i)).collect();
    let class = |u: &Matrix2<C>| us.iter().position(|v| fid2(v, u) > SAME_CLASS);
    let distinct = (0..24).all(|i| (0..24).all(|j| i == j || fid2(&us[i], &us[j]) < SAME_CLASS));
    let group = CliffordGroup::get();
    let mut closed = 0;
    let mut table_agrees = 0;
    for (a, ua) in ids.iter().zip(&us) {
        for (b, ub) in ids.iter().zip(&us) {
            if let Some(k) = class(&(ub * ua)) {
                closed += 1;
                if group.compose(&[*a, *b]) == ids[k] {
                    table_agrees += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut exact = 0;
    for _ in 0..ROUND_TRIPS {
        let len = rng.gen_range(1..=64);
        let mut seq: Vec<CliffordId> = (0..len)
            .map(|_| CliffordId::new(rng.gen_range(1..=24)))
            .collect::<Result<_, _>>()?;
        seq.push(recovery_clifford(&seq));
        let u = seq.iter().fold(Matrix2::identity(), |acc, &id| clifford_oracle(id) * acc);
        if fid2(&u, &Matrix2::identity()) > 1.0 - 1e-12 {
            exact += 1;
        }
    }
    Ok((
        distinct && closed == 576 && table_agrees == 576 && exact == ROUND_TRIPS,
        format!("24 distinct: {distinct}; closed {closed}/576, table {table_agrees}/576; round trips {exact}/{ROUND_TRIPS}"),
    ))
}

const RB_SEEDS: u64 = 10;
const RB_SHOTS: u32 = 1000;
const PLAUSIBLE_F: f64 = 0.9983;
const PLAUSIBLE_BAND: f64 = 0.002;

fn rb_oracle(ctx: &Ctx) -> Res {
    let lengths: Vec<usize> = (0..=8).map(|k| 1 << k).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1e-3, 3e-3, 1e-2] {
        for lambda_leak in [0.999, 0.995] {
            let exec = DepolarizingExecutor::new(p, 1.0 - lambda_leak)?;
            let (mut f, mut fl) = (Vec::new(), Vec::new());
            for seed in 0..RB_SEEDS {
                let mut cfg = RbConfig::new(lengths.clone(), 10, 500 + seed);
                cfg.shots = Some(RB_SHOTS);
                let o = run_rb(&cfg, &exec)?;
                f.push(o.fit.fidelity);
                fl.push(o.fit.fidelity_leak);
            }
            let (okf, df) = seed_agreement(&f, 1.0 - 0.5 * p);
            let (okl, dl) = seed_agreement(&fl, lambda_leak);
            ok &= okf && okl;
            parts.push(format!("p={p:.0e},λl={lambda_leak}: F {df}; Fl {dl}"));
        }
    }
    let exec = PropagatorExecutor::new(&ctx.spec, &ctx.report.gate_set, annotated_rates(&ctx.spec)?, NegativeMode::SignFlip)?;
    let demo = run_rb(&RbConfig::new((0..=7).map(|k| 1 << k).collect(), 10, 1), &exec)?;
    let fd = demo.fit.fidelity.value;
    let plausible = (fd - PLAUSIBLE_F).abs() <= PLAUSIBLE_BAND;
    parts.push(format!("noisy-model demo F {fd:.5} (band {PLAUSIBLE_F}±{PLAUSIBLE_BAND})"));
    Ok((ok && plausible, parts.join("; ")))
}

const LEAK_RATE_TOL: f64 = 0.03;
const RECORD_S: f64 = 100e-6;
const POP_SIGMA: f64 = 3e-3;

fn synthetic_record(gamma_leak: f64, seed: u64) -> PopulationRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, POP_SIGMA).unwrap();
    let p = 0.98;
    let time: Vec<f64> = (0..=100).map(|k| RECORD_S * k as f64 / 100.0).collect();
    let mut draw = |v: f64| v + noise.sample(&mut rng);
    // Γ_CQB = 0: nothing moves to the other CQB state.
    let prepared = time.iter().map(|&t| draw(p * (-gamma_leak * t).exp())).collect();
    let other = time.iter().map(|_| draw(0.0)).collect();
    let leaked = time.iter().map(|&t| draw(1.0 - p * (-gamma_leak * t).exp())).collect();
    PopulationRecord {
        time,
        prepared,
        other,
        leaked,
        sigma: Some(POP_SIGMA),
    }
}

fn leakage_fit(_: &Ctx) -> Res {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, t1, seed) in [("|1⟩", 27e-6, 61), ("|0⟩", 41e-6, 62)] {
        let fit = fit_t1_leakage(&synthetic_record(1.0 / t1, seed))?;
        let rel = (fit.value("gamma_leakage") * t1 - 1.0).abs();
        let bound = fit.t1_cqb_lower_bound.unwrap_or(0.0);
        ok &= rel < LEAK_RATE_TOL && bound > RECORD_S;
        parts.push(format!("{label}: Γl rel err {rel:.2e}, T1_CQB > {:.2} ms", bound * 1e3));
    }
    Ok((ok, parts.join("; ")))
}

const RATIO_TARGET: &str = "2.108";
const FD_REL_TOL: f64 = 1e-4;

fn second_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

fn sensitivities(ctx: &Ctx) -> Res {
    let a = &ctx.spec;
    let quoted = CqbSpec::symmetric(143e6, 65e6, 0.28)?;
    let ratio = flux_sensitivity_ratio(&quoted);
    let direct = (TAU * 0.28f64).sin().powi(2) * 143.0 / 65.0;
    let ratio_ok = format!("{ratio:.3}") == RATIO_TARGET && (ratio - direct).abs() < 1e-12;

    // Identical transmons; B sits at the mirror bias so common excursions add in ε.
    let s = CqbSpec::symmetric(a.delta_omega(), a.gap_hz, a.phi_star)?;
    let t = &s.transmon_a;
    let (dw, mean) = (0.5 * (t.f_max_hz - t.f_min_hz), 0.5 * (t.f_max_hz + t.f_min_hz));
    let e = |phi: f64| dw * (TAU * phi).cos() + mean;
    let mut worst: f64 = 0.0;
    for (d1, d2) in [(1.0, 1.0), (1.0, 0.0), (0.3, 0.7), (1.0, -0.5)] {
        let shift = |h: f64| s.gap_hz.hypot(e(s.phi_star + h * d1) - e(s.phi_star - h * d2)) - s.gap_hz;
        let fd = second_difference(shift, 1e-5);
        worst = worst.max((fd / (2.0 * flux_noise_sensitivity(&s, d1, d2)) - 1.0).abs());
    }
    for (d1, d2) in [(1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (0.5, 2.0)] {
        let shift = |h: f64| s.gap_hz.hypot(h * (d1 - d2)) - s.gap_hz;
        let fd = second_difference(shift, 1e4);
        worst = worst.max((fd / (2.0 * photon_noise_sensitivity(&s, d1, d2)) - 1.0).abs());
    }
    Ok((
        ratio_ok && worst < FD_REL_TOL,
        format!(
            "ratio {ratio:.4} vs {RATIO_TARGET} (CQB-A parameters: {:.4}); worst finite-difference rel err {worst:.1e}",
            flux_sensitivity_ratio(a)
        ),
    ))
}

const LZ_REL_TOL: f64 = 0.01;

/// Ground state of Ωσx + zσz without cancellation at large |z|.
fn lz_ground(omega: f64, z: f64) -> Vector2<C> {
    let r = omega.hypot(z);
    let v = if z >= 0.0 {
        Vector2::new(c(omega), c(-(z + r)))
    } else {
        Vector2::new(c(r - z), c(-omega))
    };
    v.normalize()
}

fn lz(_: &Ctx) -> Res {
    let half_span = 200.0;
    let mut worst_lib: f64 = 0.0;
    let mut worst_rk4: f64 = 0.0;
    for target in [0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99] {
        let rate = TAU / -(1.0f64 - target).ln();
        let p = lz_excitation_probability(1.0, rate)?;
        let lib = simulate_lz_sweep(1.0, rate, half_span, 200_000)?;
        let t_end = half_span / rate;
        let z = |t: f64| 0.5 * rate * t;
        let steps = (2.0 * t_end / 2e-4) as usize;
        let psi = rk4(|t| [1.0, 0.0, z(t)], lz_ground(1.0, z(-t_end)), -t_end, t_end, steps);
        let oracle = lz_ground(1.0, z(t_end)).dotc(&psi).norm_sqr();
        worst_lib = worst_lib.max((p / lib - 1.0).abs());
        worst_rk4 = worst_rk4.max((p / oracle - 1.0).abs());
    }
    Ok((
        worst_lib < LZ_REL_TOL && worst_rk4 < LZ_REL_TOL,
        format!("P ∈ [0.1, 0.99]: worst rel dev {worst_lib:.1e} (propagator), {worst_rk4:.1e} (RK4)"),
    ))
}

const T2R_BAND: (f64, f64) = (3e-6, 24e-6);

fn coherence(ctx: &Ctx) -> Res {
    let taus = linspace(0.0, 0.4, 41)?;
    let noise = FluxNoiseSpec::default();
    let mut ordered = true;
    let mut in_band = true;
    let mut t2 = Vec::new();
    for seed in 1..=5 {
        let run = |protocol| {
            let cfg = CoherenceConfig {
                protocol,
                taus: taus.clone(),
                n_traj: 400,
                seed,
                leak_rate: 0.0,
            };
            simulate_coherence(&ctx.spec, &ctx.report.gate_set, &noise, &cfg).map(|r| r.t2)
        };
        let (r, e) = (run(CoherenceProtocol::Ramsey)?, run(CoherenceProtocol::Echo)?);
        ordered &= matches!((r, e), (Some(r), Some(e)) if e > r) || matches!((r, e), (Some(_), None));
        in_band &= r.is_some_and(|r| (T2R_BAND.0..=T2R_BAND.1).contains(&r));
        t2.push((r.unwrap_or(f64::NAN), e.unwrap_or(f64::INFINITY)));
    }
    let fmt = |v: f64| format!("{:.1} ms", v * 1e3);
    let list: Vec<String> = t2.iter().map(|(r, e)| format!("{}/{}", fmt(*r), fmt(*e))).collect();
    Ok((
        ordered && in_band,
        format!(
            "T2E > T2R every seed: {ordered}; T2R in [3, 24] μs: {in_band}; T2R/T2E per seed {}",
            list.join(", ")
        ),
    ))
}

const CZ_DURATION_S: f64 = 290e-9;
const CZ_PHASE_TOL: f64 = 1e-3;
const CZ_INFIDELITY_TOL: f64 = 1e-2;

fn cz(ctx: &Ctx) -> Res {
    let two = &ctx.two;
    let pc = PipelineConfig::default();
    let (ga, gb) = (run_pipeline(&two.cqb_a, &pc)?.gate_set, run_pipeline(&two.cqb_b, &pc)?.gate_set);
    let cal = calibrate_cz(two, &CzTarget::default())?;
    let prog = cz_with_resync(two, [&ga, &gb], &cal, &mut ZLedger::new())?;
    let u = prog.realized_unitary(two, [&ga, &gb], false)?;
    let d = [u[(0, 0)], u[(1, 1)], u[(2, 2)], u[(3, 3)]];
    let phi = (d[0] * d[3] * d[1].conj() * d[2].conj()).arg();
    let phase_err = PI - phi.abs();
    let ideal = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(1.0), c(1.0), c(1.0), c(-1.0)));
    let infid = 1.0 - (u.adjoint() * ideal).trace().norm() / 4.0;
    let duration_ok = (cal.duration - CZ_DURATION_S).abs() < 1e-12;

    let exec = DepolarizingTwoQubit::new(2e-3, 1e-4, 0.03, 1e-3)?;
    let truth = exec.cz_average_fidelity();
    let mut est = Vec::new();
    for seed in 0..RB_SEEDS {
        let mut cfg = RbConfig::new((0..=6).map(|k| 1 << k).collect(), 10, 900 + seed);
        cfg.mode = RbMode::TwoQubitInterleaved;
        cfg.interleave_cz = true;
        cfg.shots = Some(RB_SHOTS);
        est.push(run_two_qubit_rb(&cfg, &exec)?.cz.ok_or("no interleaved arm")?.fidelity);
    }
    let (rb_ok, rb_detail) = seed_agreement(&est, truth);

    // Residual parking ZZ in simultaneous RB, for information only.
    let mut sim = RbConfig::new((0..=6).map(|k| 1 << k).collect(), 10, 3);
    sim.mode = RbMode::Simultaneous;
    let f_with = |residual_zz| -> Result<f64, cqbsim::Error> {
        let exec = CoupledPairExecutor {
            two: two.clone(),
            calib: [ga, gb],
            mode: NegativeMode::SignFlip,
            residual_zz,
        };
        Ok(run_simultaneous_rb(&sim, &sim, &exec, None)?.a.fit.fidelity.value)
    };
    let zz_delta = f_with(false)? - f_with(true)?;

    Ok((
        duration_ok && phase_err.abs() < CZ_PHASE_TOL && infid < CZ_INFIDELITY_TOL && rb_ok,
        format!(
            "duration {:.0} ns, |φ_zz| − π {:+.1e} rad, resynced infidelity {infid:.2e}; \
             interleaved F_CZ vs {truth:.4}: {rb_detail}; INFO residual-ZZ ΔF {zz_delta:+.1e}",
            cal.duration * 1e9,
            -phase_err
        ),
    ))
}

fn run_experiment(id: ExperimentId, dir: &Path, workers: usize) -> Result<ResultManifest, cqbsim::Error> {
    let mut cfg = ExperimentConfig::new(id, dir.to_path_buf());
    cfg.workers = workers;
    match id {
        ExperimentId::Rb => cfg.shots = Some(500),
        ExperimentId::Calibrate => cfg.shots = Some(2000),
        ExperimentId::Scan2d => {
            cfg.set("epsilon_points", json!(41))?;
            cfg.set("freq_points", json!(41))?;
        }
        _ => {}
    }
    if id.is_stochastic() || cfg.shots.is_some() {
        cfg.seed = Some(17);
    }
    experiment::run(&cfg)
}

fn determinism(_: &Ctx) -> Res {
    let root = tempfile::tempdir()?;
    let mut identical = 0;
    let mut failures = Vec::new();
    for id in ExperimentId::ALL {
        let runs = [1, 4, 4]
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let dir = root.path().join(format!("{}_{k}", id.name()));
                run_experiment(id, &dir, w).map(|m| (dir, m))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (d0, m0) = &runs[0];
        let same = runs[1..].iter().all(|(d, m)| {
            m.config_hash == m0.config_hash
                && m.files == m0.files
                && m0
                    .files
                    .iter()
                    .all(|f| std::fs::read(d0.join(&f.path)).ok() == std::fs::read(d.join(&f.path)).ok())
        });
        if same {
            identical += 1;
        } else {
            failures.push(id.name());
        }
    }
    Ok((
        failures.is_empty(),
        format!("{identical}/{} experiments byte-identical at workers 1, 4, 4 {failures:?}", ExperimentId::ALL.len()),
    ))
}

type Criterion = (u8, &'static str, fn(&Ctx) -> Res);

const CRITERIA: [Criterion; 11] = [
    (1, "interference map", interference),
    (2, "calibration fixed point", calibration_fixed_point),
    (3, "Z-timing arithmetic", z_timing),
    (4, "Clifford algebra", clifford_algebra),
    (5, "RB estimator oracle", rb_oracle),
    (6, "leakage-fit bound", leakage_fit),
    (7, "noise-sensitivity formulas", sensitivities),
    (8, "LZ formula vs dynamics", lz),
    (9, "coherence ordering", coherence),
    (10, "CZ conditional phase", cz),
    (11, "determinism", determinism),
];

fn main() {
    let spec = CqbSpec::bundled("cqb-a").expect("bundled CQB-A");
    let report = run_pipeline(&spec, &PipelineConfig::default()).expect("tune-up");
    let two = TwoCqbSpec::bundled().expect("bundled pair");
    let ctx = Ctx { spec, report, two };

    let mut unexpected = Vec::new();
    for (id, name, check) in CRITERIA {
        let t0 = Instant::now();
        let (pass, detail) = check(&ctx).unwrap_or_else(|e| (false, format!("error: {e}")));
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name}: {detail} [{:.1} s]", t0.elapsed().as_secs_f64());
        if !pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures (unattainable: {KNOWN_UNATTAINABLE:?})");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
