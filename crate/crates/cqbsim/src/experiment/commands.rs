// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::scan2d::{half_excitation_amplitude, interference_map, linspace, ContourPoint};
use super::{merge_params, Artifact, Device, ExperimentConfig, ExperimentId};
use crate::calibration::{calibrate_cz, run_pipeline, CalibratedGateSet, CzTarget, MeasurementMode, PipelineConfig};
use crate::device::{CqbSpec, TwoCqbSpec};
use crate::error::{Error, Result};
use crate::format::csv_row;
use crate::gates::{compile_sequence, compile_two_qubit, cz_with_resync, Circuit, NegativeMode, SeqItem, Target, TwoQubitProgram, ZLedger};
use crate::noise::{simulate_coherence, CoherenceConfig, CoherenceProtocol, FluxNoiseSpec};
use crate::protocols::{
    simulate_initialization, simulate_readout_mapping, InitSchedule, ReadoutBasis, ReadoutRamp,
};
use crate::rb::{
    annotated_rates, run_rb, run_simultaneous_rb, run_two_qubit_rb, CoupledPairExecutor, DepolarizingExecutor,
    DepolarizingTwoQubit, PropagatorExecutor, RbConfig, RbMode, RbOutcome, SpamMode,
};
use crate::propagator::LeakageRates;
use crate::waveform::DEFAULT_SAMPLE_PERIOD;

const DEFAULT_SINGLE: &str = "cqb-a";
const DEFAULT_PAIR: &str = "two-cqb";

fn param_str<'a>(cfg: &'a ExperimentConfig, key: &str) -> Option<&'a str> {
    cfg.params.get(key).and_then(Value::as_str)
}

fn circuit_of(cfg: &ExperimentConfig) -> Result<Circuit> {
    Circuit::parse(param_str(cfg, "circuit").unwrap_or(DEFAULT_CIRCUIT))
}

fn needs_pair(cfg: &ExperimentConfig) -> Result<bool> {
    Ok(match cfg.experiment {
        ExperimentId::Cz => true,
        ExperimentId::Rb => param_str(cfg, "mode").is_some_and(|m| m != "single"),
        ExperimentId::Compile => circuit_of(cfg)?.ops.iter().any(|op| op.target != Target::A),
        _ => false,
    })
}

pub(super) fn resolve_device(cfg: &ExperimentConfig) -> Result<Device> {
    if needs_pair(cfg)? {
        Ok(Device::Pair(TwoCqbSpec::resolve(cfg.spec.as_deref().unwrap_or(DEFAULT_PAIR))?))
    } else {
        Ok(Device::Single(CqbSpec::resolve(cfg.spec.as_deref().unwrap_or(DEFAULT_SINGLE))?))
    }
}

fn single(device: &Device) -> Result<&CqbSpec> {
    match device {
        Device::Single(s) => Ok(s),
        Device::Pair(_) => Err(Error::Config("expected a single-CQB spec".into())),
    }
}

fn pair(device: &Device) -> Result<&TwoCqbSpec> {
    match device {
        Device::Pair(p) => Ok(p),
        Device::Single(_) => Err(Error::Config("expected a two-CQB spec".into())),
    }
}

pub(super) fn execute(cfg: &ExperimentConfig, device: &Device) -> Result<Vec<Artifact>> {
    match cfg.experiment {
        ExperimentId::Scan2d => scan2d(cfg, single(device)?),
        ExperimentId::Calibrate => calibrate(cfg, single(device)?),
        ExperimentId::Rb => rb(cfg, device),
        ExperimentId::Coherence => coherence(cfg, single(device)?),
        ExperimentId::Init => init(cfg, single(device)?),
        ExperimentId::Cz => cz(cfg, pair(device)?),
        ExperimentId::Compile => compile(cfg, device),
    }
}

/// Gate set from a previous `calibrate` run, or a fresh pipeline run.
fn gate_set(spec: &CqbSpec, file: &Option<PathBuf>, pipeline: &PipelineConfig) -> Result<CalibratedGateSet> {
    match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let g: CalibratedGateSet = serde_json::from_str(&text).map_err(|e| Error::Parse {
                what: p.display().to_string(),
                reason: e.to_string(),
            })?;
            g.validate()?;
            Ok(g)
        }
        None => Ok(run_pipeline(spec, pipeline)?.gate_set),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Scan2dParams {
    epsilon_min_hz: f64,
    epsilon_max_hz: f64,
    epsilon_points: usize,
    freq_min_hz: f64,
    freq_max_hz: f64,
    freq_points: usize,
    sample_period: f64,
    /// Reference point the report measures the half contour against.
    reference_freq_hz: f64,
    reference_epsilon_hz: f64,
    reference_tolerance: f64,
}

impl Default for Scan2dParams {
    fn default() -> Self {
        Self {
            epsilon_min_hz: 0.0,
            epsilon_max_hz: 160e6,
            epsilon_points: 101,
            freq_min_hz: 60e6,
            freq_max_hz: 250e6,
            freq_points: 101,
            sample_period: DEFAULT_SAMPLE_PERIOD,
            reference_freq_hz: 125e6,
            reference_epsilon_hz: 80e6,
            reference_tolerance: 0.25,
        }
    }
}

#[derive(Debug, Serialize)]
struct Scan2dReport {
    params: Scan2dParams,
    half_contour: Vec<ContourPoint>,
    contour_near_reference: Vec<ContourPoint>,
    /// Half-excitation amplitude at the reference frequency.
    reference_half_epsilon_hz: Option<f64>,
}

fn scan2d(cfg: &ExperimentConfig, spec: &CqbSpec) -> Result<Vec<Artifact>> {
    let p = merge_params(&Scan2dParams::default(), &cfg.params)?;
    let eps = linspace(p.epsilon_min_hz, p.epsilon_max_hz, p.epsilon_points)?;
    let freqs = linspace(p.freq_min_hz, p.freq_max_hz, p.freq_points)?;
    if freqs[0] <= 0.0 {
        return Err(Error::field("freq_min_hz", "must be > 0"));
    }
    let map = interference_map(spec, &eps, &freqs, p.sample_period)?;
    let fine = (p.epsilon_max_hz - p.epsilon_min_hz).abs().max(p.epsilon_max_hz) / 0.1e6;
    let reference_half_epsilon_hz = if p.epsilon_max_hz > 0.0 {
        half_excitation_amplitude(spec, p.reference_freq_hz, p.epsilon_max_hz, (fine as usize).clamp(2, 4001), p.sample_period)?
    } else {
        None
    };
    let report = Scan2dReport {
        half_contour: map.half_contour(),
        contour_near_reference: map.contour_near(p.reference_freq_hz, p.reference_epsilon_hz, p.reference_tolerance),
        reference_half_epsilon_hz,
        params: p,
    };
    Ok(vec![Artifact::csv("scan2d.csv", map.to_csv()), Artifact::json("scan2d.json", &report)?])
}

fn calibrate(cfg: &ExperimentConfig, spec: &CqbSpec) -> Result<Vec<Artifact>> {
    let mut p = merge_params(&PipelineConfig::default(), &cfg.params)?;
    if let (Some(shots), Some(seed)) = (cfg.shots, cfg.seed) {
        p.measurement = MeasurementMode::Shots {
            shots: shots as u64,
            seed,
        };
    }
    let report = run_pipeline(spec, &p)?;
    Ok(vec![
        Artifact::json("gate_set.json", &report.gate_set)?,
        Artifact::json("calibration.json", &report)?,
        Artifact::csv("amplitude_scan.csv", report.amplitude_scan.to_csv()),
        Artifact::csv("correction_scan.csv", report.correction_scan.to_csv()),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ExecutorKind {
    /// Compiled waveforms through the Lindblad or two-CQB propagator.
    Propagator,
    /// Analytic depolarizing and leakage channels.
    Depolarizing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RbParams {
    mode: RbMode,
    lengths: Vec<usize>,
    sequences_per_length: usize,
    spam: SpamMode,
    executor: ExecutorKind,
    depolarization: f64,
    leak: f64,
    /// [P(1|0), P(0|1)] for the depolarizing executor.
    readout_error: [f64; 2],
    cz_depolarization: f64,
    cz_leak: f64,
    interleave_cz: bool,
    residual_zz: bool,
    negative_mode: NegativeMode,
    gate_set: Option<PathBuf>,
    pipeline: PipelineConfig,
}

impl Default for RbParams {
    fn default() -> Self {
        Self {
            mode: RbMode::Single,
            lengths: vec![1, 2, 4, 8, 16, 32, 64, 128],
            sequences_per_length: 10,
            spam: SpamMode::Paper,
            executor: ExecutorKind::Propagator,
            depolarization: 1e-3,
            leak: 1e-3,
            readout_error: [0.0, 0.0],
            cz_depolarization: 0.02,
            cz_leak: 0.0,
            interleave_cz: true,
            residual_zz: true,
            negative_mode: NegativeMode::SignFlip,
            gate_set: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

fn rb_outcome_files(tag: &str, o: &RbOutcome) -> [Artifact; 2] {
    [
        Artifact::csv(format!("rb_records{tag}.csv"), o.records_csv()),
        Artifact::csv(format!("rb_stats{tag}.csv"), o.stats_csv()),
    ]
}

fn rb(cfg: &ExperimentConfig, device: &Device) -> Result<Vec<Artifact>> {
    let p = merge_params(&RbParams::default(), &cfg.params)?;
    let seed = cfg.seed.ok_or_else(|| Error::field("seed", "required for `rb`"))?;
    let mut rc = RbConfig::new(p.lengths.clone(), p.sequences_per_length, seed);
    rc.mode = p.mode;
    rc.spam = p.spam;
    rc.shots = cfg.shots;
    let quiet = cfg.noiseless;
    let mut files = Vec::new();
    match p.mode {
        RbMode::Single => {
            let spec = single(device)?;
            let out = match p.executor {
                ExecutorKind::Propagator => {
                    let calib = gate_set(spec, &p.gate_set, &p.pipeline)?;
                    let rates = if quiet { LeakageRates::default() } else { annotated_rates(spec)? };
                    run_rb(&rc, &PropagatorExecutor::new(spec, &calib, rates, p.negative_mode)?)?
                }
                ExecutorKind::Depolarizing => {
                    let exec = if quiet {
                        DepolarizingExecutor::new(0.0, 0.0)?
                    } else {
                        DepolarizingExecutor::new(p.depolarization, p.leak)?
                            .with_readout(p.readout_error[0], p.readout_error[1])?
                    };
                    run_rb(&rc, &exec)?
                }
            };
            files.extend(rb_outcome_files("", &out));
            files.push(Artifact::json("rb_report.json", &out)?);
        }
        RbMode::Simultaneous => {
            let two = pair(device)?;
            let ga = gate_set(&two.cqb_a, &None, &p.pipeline)?;
            let gb = gate_set(&two.cqb_b, &None, &p.pipeline)?;
            let rb_b = rc.clone();
            let out = match p.executor {
                ExecutorKind::Propagator => {
                    let exec = CoupledPairExecutor {
                        two: two.clone(),
                        calib: [ga, gb],
                        mode: p.negative_mode,
                        residual_zz: p.residual_zz && !quiet,
                    };
                    run_simultaneous_rb(&rc, &rb_b, &exec, Some([&ga, &gb]))?
                }
                ExecutorKind::Depolarizing => {
                    let (d, l) = if quiet { (0.0, 0.0) } else { (p.depolarization, p.leak) };
                    let exec = crate::rb::IndependentPair(DepolarizingExecutor::new(d, l)?, DepolarizingExecutor::new(d, l)?);
                    run_simultaneous_rb(&rc, &rb_b, &exec, Some([&ga, &gb]))?
                }
            };
            files.extend(rb_outcome_files("_a", &out.a));
            files.extend(rb_outcome_files("_b", &out.b));
            files.push(Artifact::json("rb_report.json", &out)?);
        }
        RbMode::TwoQubitInterleaved => {
            pair(device)?;
            if p.executor != ExecutorKind::Depolarizing {
                return Err(Error::field("executor", "two-qubit RB runs on the depolarizing executor"));
            }
            rc.interleave_cz = p.interleave_cz;
            let exec = if quiet {
                DepolarizingTwoQubit::ideal()
            } else {
                DepolarizingTwoQubit::new(p.depolarization, p.leak, p.cz_depolarization, p.cz_leak)?
            };
            let out = run_two_qubit_rb(&rc, &exec)?;
            files.extend(rb_outcome_files("_reference", &out.reference));
            if let Some(i) = &out.interleaved {
                files.extend(rb_outcome_files("_interleaved", i));
            }
            #[derive(Serialize)]
            struct Report<'a> {
                #[serde(flatten)]
                outcome: &'a crate::rb::TwoQubitRbOutcome,
                /// Fidelity of the injected CZ channel, for comparison.
                injected_cz_fidelity: f64,
            }
            files.push(Artifact::json(
                "rb_report.json",
                &Report {
                    outcome: &out,
                    injected_cz_fidelity: exec.cz_average_fidelity(),
                },
            )?);
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoherenceParams {
    protocol: CoherenceProtocol,
    t_max_s: f64,
    points: usize,
    n_traj: usize,
    leak_rate: f64,
    noise: FluxNoiseSpec,
    gate_set: Option<PathBuf>,
    pipeline: PipelineConfig,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        Self {
            protocol: CoherenceProtocol::Ramsey,
            t_max_s: 0.4,
            points: 41,
            n_traj: 400,
            leak_rate: 0.0,
            noise: FluxNoiseSpec::default(),
            gate_set: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

fn coherence(cfg: &ExperimentConfig, spec: &CqbSpec) -> Result<Vec<Artifact>> {
    let mut p = merge_params(&CoherenceParams::default(), &cfg.params)?;
    if cfg.noiseless {
        p.noise.amplitude = 0.0;
        p.leak_rate = 0.0;
    }
    let calib = gate_set(spec, &p.gate_set, &p.pipeline)?;
    let c = CoherenceConfig {
        protocol: p.protocol,
        taus: linspace(0.0, p.t_max_s, p.points)?,
        n_traj: p.n_traj,
        seed: cfg.seed.ok_or_else(|| Error::field("seed", "required for `coherence`"))?,
        leak_rate: p.leak_rate,
    };
    let r = simulate_coherence(spec, &calib, &p.noise, &c)?;
    let mut csv = String::from("tau_s,p0,p1,pleak,contrast,contrast_stderr\n");
    for i in 0..r.tau.len() {
        csv.push_str(&csv_row(&[r.tau[i], r.p0[i], r.p1[i], r.pleak[i], r.contrast[i], r.contrast_stderr[i]]));
    }
    Ok(vec![Artifact::csv("coherence.csv", csv), Artifact::json("coherence.json", &r)?])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InitParams {
    schedule: InitSchedule,
    readout: ReadoutRamp,
}

fn init(cfg: &ExperimentConfig, spec: &CqbSpec) -> Result<Vec<Artifact>> {
    let defaults = InitParams {
        schedule: InitSchedule::default_for(spec),
        readout: ReadoutRamp::default_for(spec),
    };
    let p = merge_params(&defaults, &cfg.params)?;
    let result = simulate_initialization(spec, &p.schedule)?;
    let after_ramp = simulate_readout_mapping(spec, &result.state, ReadoutBasis::DiabaticAfterRamp, &p.readout)?;
    let at_degeneracy = simulate_readout_mapping(spec, &result.state, ReadoutBasis::EigenAtDegeneracy, &p.readout)?;
    #[derive(Serialize)]
    struct Report<'a> {
        params: &'a InitParams,
        initialization: &'a crate::protocols::InitResult,
        readout_after_ramp: crate::protocols::ReadoutResult,
        readout_at_degeneracy: crate::protocols::ReadoutResult,
    }
    let report = Report {
        params: &p,
        initialization: &result,
        readout_after_ramp: after_ramp,
        readout_at_degeneracy: at_degeneracy,
    };
    Ok(vec![
        Artifact::csv("init_ramp.csv", p.schedule.return_ramp()?.to_csv()),
        Artifact::csv("readout_ramp.csv", p.readout.waveform()?.to_csv()),
        Artifact::json("init.json", &report)?,
    ])
}

fn program_csv(p: &TwoQubitProgram) -> String {
    let dt = p.a.sample_period();
    let mut out = String::from("time_s,epsilon_a_hz,epsilon_b_hz,pair_detuning_hz,zeta_hz\n");
    for k in 0..p.a.len() {
        out.push_str(&csv_row(&[
            k as f64 * dt,
            p.a.samples()[k],
            p.b.samples()[k],
            p.pair_detuning_hz[k],
            p.zeta_cz_hz[k],
        ]));
    }
    out
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct CzParams {
    target: CzTarget,
    residual_zz: bool,
    pipeline: PipelineConfig,
}

fn cz(cfg: &ExperimentConfig, two: &TwoCqbSpec) -> Result<Vec<Artifact>> {
    let p = merge_params(&CzParams::default(), &cfg.params)?;
    let ga = gate_set(&two.cqb_a, &None, &p.pipeline)?;
    let gb = gate_set(&two.cqb_b, &None, &p.pipeline)?;
    let cal = calibrate_cz(two, &p.target)?;
    let mut ledger = ZLedger::new();
    let prog = cz_with_resync(two, [&ga, &gb], &cal, &mut ledger)?;
    #[derive(Serialize)]
    struct Report<'a> {
        params: &'a CzParams,
        calibration: crate::calibration::CzCalibration,
        phase_error_rad: f64,
        infidelity: f64,
        raw_infidelity: f64,
        program_duration_s: f64,
        residual_phase_rad: f64,
        frame_phase_rad: [f64; 2],
    }
    let report = Report {
        calibration: cal,
        phase_error_rad: cal.conditional_phase - p.target.phase,
        infidelity: prog.infidelity(two, [&ga, &gb], p.residual_zz)?,
        raw_infidelity: prog.raw_infidelity(two, [&ga, &gb], p.residual_zz)?,
        program_duration_s: prog.a.duration(),
        residual_phase_rad: prog.residual_phase,
        frame_phase_rad: prog.frame_phase,
        params: &p,
    };
    Ok(vec![Artifact::csv("cz_trace.csv", program_csv(&prog)), Artifact::json("cz.json", &report)?])
}

const DEFAULT_CIRCUIT: &str = "X+\nY+\n";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CompileParams {
    circuit: String,
    negative_mode: NegativeMode,
    gate_set: Option<PathBuf>,
    pipeline: PipelineConfig,
    cz: CzTarget,
}

impl Default for CompileParams {
    fn default() -> Self {
        Self {
            circuit: DEFAULT_CIRCUIT.into(),
            negative_mode: NegativeMode::SignFlip,
            gate_set: None,
            pipeline: PipelineConfig::default(),
            cz: CzTarget::default(),
        }
    }
}

fn compile(cfg: &ExperimentConfig, device: &Device) -> Result<Vec<Artifact>> {
    let p = merge_params(&CompileParams::default(), &cfg.params)?;
    let circuit = Circuit::parse(&p.circuit)?;
    match device {
        Device::Single(spec) => {
            let calib = gate_set(spec, &p.gate_set, &p.pipeline)?;
            let items: Vec<SeqItem> = circuit.ops.iter().map(|op| op.item).collect();
            let mut ledger = ZLedger::new();
            let c = compile_sequence(&items, &calib, &mut ledger, 0, p.negative_mode)?;
            #[derive(Serialize)]
            struct Report<'a> {
                gate_set: CalibratedGateSet,
                compiled: &'a crate::gates::CompiledSequence,
                infidelity: f64,
                duration_s: f64,
                pending_phase_rad: f64,
            }
            let report = Report {
                gate_set: calib,
                infidelity: c.infidelity(spec, &calib)?,
                duration_s: c.waveform.duration(),
                pending_phase_rad: ledger.phase[0],
                compiled: &c,
            };
            Ok(vec![
                Artifact::csv("waveform.csv", c.waveform.to_csv()),
                Artifact {
                    name: "waveform.json".into(),
                    role: super::FileRole::ReportJson,
                    contents: c.waveform.sidecar_json()?,
                },
                Artifact::json("compile.json", &report)?,
            ])
        }
        Device::Pair(two) => {
            if p.gate_set.is_some() {
                return Err(Error::field("gate_set", "two-CQB circuits calibrate both CQBs"));
            }
            let ga = gate_set(&two.cqb_a, &None, &p.pipeline)?;
            let gb = gate_set(&two.cqb_b, &None, &p.pipeline)?;
            let cal = calibrate_cz(two, &p.cz)?;
            let mut ledger = ZLedger::new();
            let prog = compile_two_qubit(&circuit.ops, two, [&ga, &gb], &cal, &mut ledger, p.negative_mode)?;
            #[derive(Serialize)]
            struct Report<'a> {
                program: &'a TwoQubitProgram,
                infidelity: f64,
                duration_s: f64,
            }
            let report = Report {
                infidelity: prog.infidelity(two, [&ga, &gb], false)?,
                duration_s: prog.a.duration(),
                program: &prog,
            };
            Ok(vec![Artifact::csv("program.csv", program_csv(&prog)), Artifact::json("compile.json", &report)?])
        }
    }
}
