// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Randomized benchmarking with leakage accounting.
//!
//! A length m counts every noisy reference element including the recovery,
//! so a sequence holds m − 1 random Cliffords. Sequence (i, j) of a run is
//! drawn from RNG substream (i, j) of the seed, and the same generator then
//! samples shot noise, so results do not depend on the thread count.

mod executor;
mod fit;
mod sequence;

pub use executor::{
    annotated_rates, CoupledPairExecutor, DepolarizingExecutor, DepolarizingTwoQubit, IdealExecutor, IndependentPair,
    PairExecutor, Populations, PropagatorExecutor, SingleExecutor, TwoQubitExecutor,
};
pub use fit::{
    fidelity_from_lambda, fit_interleaved_cz, fit_leakage_only, fit_rb, fit_single_with_leakage, interleaved_fidelity,
    CzFidelity, Estimate, LengthStats, RbFit, SpamMode,
};
pub use sequence::{
    element_unitary, op_unitary, random_clifford, recover_state, single_sequence, two_qubit_sequence, TwoQubitElement,
    TwoQubitOp,
};

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{csv_row, fmt_f64};
use crate::gates::{clifford_to_primitives, compile_sequence, CliffordId, NegativeMode, SeqItem, ZLedger};
use crate::calibration::CalibratedGateSet;
use crate::rng::{self, Rng};

pub const MIN_SEQUENCES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbMode {
    #[default]
    Single,
    Simultaneous,
    TwoQubitInterleaved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: RbMode,
    /// Interleave a CZ after every reference element (two-CQB mode only).
    #[serde(default)]
    pub interleave_cz: bool,
    #[serde(default)]
    pub spam: SpamMode,
    /// Finite-shot sampling of each sequence; exact populations when absent.
    #[serde(default)]
    pub shots: Option<u32>,
}

impl RbConfig {
    pub fn new(lengths: Vec<usize>, sequences_per_length: usize, seed: u64) -> Self {
        Self {
            lengths,
            sequences_per_length,
            seed,
            mode: RbMode::Single,
            interleave_cz: false,
            spam: SpamMode::Paper,
            shots: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() < 2 {
            return Err(Error::field("lengths", "need at least 2 lengths"));
        }
        if self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::field("lengths", "must be positive and strictly increasing"));
        }
        if self.sequences_per_length < MIN_SEQUENCES {
            return Err(Error::field(
                "sequences_per_length",
                format!("must be ≥ {MIN_SEQUENCES}"),
            ));
        }
        if self.shots == Some(0) {
            return Err(Error::field("shots", "must be > 0"));
        }
        if self.interleave_cz && self.mode != RbMode::TwoQubitInterleaved {
            return Err(Error::field("interleave_cz", "only valid in two-qubit-interleaved mode"));
        }
        Ok(())
    }

    fn expect_mode(&self, mode: RbMode) -> Result<()> {
        self.validate()?;
        if self.mode != mode {
            return Err(Error::Config(format!("RB config mode {:?}, expected {mode:?}", self.mode)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceRecord {
    pub m: usize,
    pub index: usize,
    pub populations: Populations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbOutcome {
    pub config: RbConfig,
    pub stats: Vec<LengthStats>,
    pub fit: RbFit,
    /// λ_leak from the total population alone.
    pub lambda_leak_only: Estimate,
    #[serde(skip)]
    pub records: Vec<SequenceRecord>,
}

impl RbOutcome {
    fn build(config: &RbConfig, records: Vec<SequenceRecord>, dim: usize) -> Result<Self> {
        let stats = aggregate(&records, config);
        Ok(Self {
            config: config.clone(),
            fit: fit_rb(&stats, dim, config.spam)?,
            lambda_leak_only: fit_leakage_only(&stats)?,
            stats,
            records,
        })
    }

    /// Raw per-sequence outcomes.
    pub fn records_csv(&self) -> String {
        let dim = self.records.first().map_or(0, |r| r.populations.computational.len());
        let mut out = String::from("m,sequence");
        for k in 0..dim {
            out.push_str(&format!(",p_{k}"));
        }
        out.push_str(",leak\n");
        for r in &self.records {
            out.push_str(&format!("{},{}", r.m, r.index));
            for p in r.populations.computational.iter().chain([&r.populations.leak]) {
                out.push(',');
                out.push_str(&fmt_f64(*p));
            }
            out.push('\n');
        }
        out
    }
}

impl RbOutcome {
    /// Per-length means and standard errors.
    pub fn stats_csv(&self) -> String {
        let mut out = String::from("m,sequences,recovery,recovery_sem,total,total_sem,leak\n");
        for s in &self.stats {
            out.push_str(&format!("{},{},", s.m, s.sequences));
            out.push_str(&csv_row(&[s.recovery, s.recovery_sem, s.total, s.total_sem, s.leak]));
        }
        out
    }
}

fn mean_sem(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(records: &[SequenceRecord], cfg: &RbConfig) -> Vec<LengthStats> {
    cfg.lengths
        .iter()
        .map(|&m| {
            let rs: Vec<&Populations> = records.iter().filter(|r| r.m == m).map(|r| &r.populations).collect();
            let dim = rs[0].computational.len();
            let (recovery, recovery_sem) = mean_sem(rs.iter().map(|p| p.recovery()));
            let (total, total_sem) = mean_sem(rs.iter().map(|p| p.total()));
            let n = rs.len() as f64;
            LengthStats {
                m,
                sequences: rs.len(),
                recovery,
                recovery_sem,
                total,
                total_sem,
                populations: (0..dim).map(|k| rs.iter().map(|p| p.computational[k]).sum::<f64>() / n).collect(),
                leak: rs.iter().map(|p| p.leak).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Multinomial resampling of `p` with `shots` draws.
fn sample_shots(p: &Populations, shots: u32, rng: &mut Rng) -> Result<Populations> {
    let n = shots as u64;
    let mut left = n;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(p.computational.len());
    for &q in &p.computational {
        let q = q.clamp(0.0, 1.0);
        let k = if left == 0 || mass <= 0.0 {
            0
        } else {
            let prob = (q / mass).clamp(0.0, 1.0);
            Binomial::new(left, prob).map_err(|e| Error::Numeric(e.to_string()))?.sample(rng)
        };
        counts.push(k);
        left -= k;
        mass -= q;
    }
    let f = |k: u64| k as f64 / n as f64;
    Ok(Populations {
        computational: counts.into_iter().map(f).collect(),
        leak: f(left),
    })
}

fn finish(p: Populations, dim: usize, shots: Option<u32>, rng: &mut Rng) -> Result<Populations> {
    p.validate(dim)?;
    match shots {
        Some(s) => sample_shots(&p, s, rng),
        None => Ok(p),
    }
}

fn grid(cfg: &RbConfig) -> Vec<(usize, usize)> {
    (0..cfg.lengths.len())
        .flat_map(|i| (0..cfg.sequences_per_length).map(move |j| (i, j)))
        .collect()
}

/// Single-CQB RB.
pub fn run_rb(cfg: &RbConfig, exec: &dyn SingleExecutor) -> Result<RbOutcome> {
    cfg.expect_mode(RbMode::Single)?;
    let records = grid(cfg)
        .into_par_iter()
        .map(|(i, j)| {
            let m = cfg.lengths[i];
            let mut r = rng::substream(cfg.seed, i as u64, j as u64);
            let seq = single_sequence(m - 1, &mut r);
            let populations = finish(exec.run(&seq)?, 2, cfg.shots, &mut r)?;
            Ok(SequenceRecord { m, index: j, populations })
        })
        .collect::<Result<Vec<_>>>()?;
    RbOutcome::build(cfg, records, 2)
}

/// Clifford start times [s] of a compiled single-CQB sequence.
pub fn clifford_boundaries(seq: &[CliffordId], calib: &CalibratedGateSet, mode: NegativeMode) -> Result<Vec<f64>> {
    let items: Vec<SeqItem> = seq.iter().map(|&c| c.into()).collect();
    let compiled = compile_sequence(&items, calib, &mut ZLedger::new(), 0, mode)?;
    let mut out = Vec::with_capacity(seq.len());
    let mut k = 0;
    for &c in seq {
        out.push(compiled.timing[k].start);
        k += clifford_to_primitives(c).len();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub m: usize,
    pub boundaries_a: Vec<f64>,
    pub boundaries_b: Vec<f64>,
    /// Whether every Clifford boundary coincides on both CQBs.
    pub synchronized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneousOutcome {
    pub a: RbOutcome,
    pub b: RbOutcome,
    pub timing: Option<TimingReport>,
}

/// Simultaneous RB: independent sequences on both CQBs, fitted separately
/// from per-CQB marginals. With gate sets supplied, the first sequence of
/// the shortest length m ≥ 4 is compiled for a boundary report.
pub fn run_simultaneous_rb(
    cfg_a: &RbConfig,
    cfg_b: &RbConfig,
    exec: &dyn PairExecutor,
    calib: Option<[&CalibratedGateSet; 2]>,
) -> Result<SimultaneousOutcome> {
    cfg_a.expect_mode(RbMode::Simultaneous)?;
    cfg_b.expect_mode(RbMode::Simultaneous)?;
    if cfg_a.lengths != cfg_b.lengths || cfg_a.sequences_per_length != cfg_b.sequences_per_length {
        return Err(Error::Config("simultaneous RB needs matching lengths and sequence counts".into()));
    }
    // Odd outer streams for B keep the sequences independent for equal seeds.
    let draw = |i: usize, j: usize| {
        let mut ra = rng::substream(cfg_a.seed, 2 * i as u64, j as u64);
        let mut rb = rng::substream(cfg_b.seed, 2 * i as u64 + 1, j as u64);
        let m = cfg_a.lengths[i];
        let (sa, sb) = (single_sequence(m - 1, &mut ra), single_sequence(m - 1, &mut rb));
        (sa, sb, ra, rb)
    };
    let pairs = grid(cfg_a)
        .into_par_iter()
        .map(|(i, j)| {
            let m = cfg_a.lengths[i];
            let (sa, sb, mut ra, mut rb) = draw(i, j);
            let [pa, pb] = exec.run(&sa, &sb)?;
            let rec = |p, r: &mut Rng, shots| -> Result<SequenceRecord> {
                Ok(SequenceRecord {
                    m,
                    index: j,
                    populations: finish(p, 2, shots, r)?,
                })
            };
            Ok((rec(pa, &mut ra, cfg_a.shots)?, rec(pb, &mut rb, cfg_b.shots)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rec_a, rec_b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let timing = match calib {
        Some([ca, cb]) => {
            let k = cfg_a.lengths.iter().position(|&m| m >= 4).unwrap_or(cfg_a.lengths.len() - 1);
            let (sa, sb, _, _) = draw(k, 0);
            let ba = clifford_boundaries(&sa, ca, NegativeMode::SignFlip)?;
            let bb = clifford_boundaries(&sb, cb, NegativeMode::SignFlip)?;
            let synchronized = ba.len() == bb.len() && ba.iter().zip(&bb).all(|(x, y)| (x - y).abs() < 1e-15);
            Some(TimingReport {
                m: cfg_a.lengths[k],
                boundaries_a: ba,
                boundaries_b: bb,
                synchronized,
            })
        }
        None => None,
    };
    Ok(SimultaneousOutcome {
        a: RbOutcome::build(cfg_a, rec_a, 2)?,
        b: RbOutcome::build(cfg_b, rec_b, 2)?,
        timing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoQubitRbOutcome {
    pub reference: RbOutcome,
    pub interleaved: Option<RbOutcome>,
    pub cz: Option<CzFidelity>,
}

fn run_two_qubit_arm(cfg: &RbConfig, exec: &dyn TwoQubitExecutor, interleaved: bool) -> Result<RbOutcome> {
    let arm = interleaved as u64;
    let records = grid(cfg)
        .into_par_iter()
        .map(|(i, j)| {
            let m = cfg.lengths[i];
            let mut r = rng::substream(cfg.seed, 2 * i as u64 + arm, j as u64);
            let seq = two_qubit_sequence(m - 1, interleaved, &mut r)?;
            let populations = finish(exec.run(&seq)?, 4, cfg.shots, &mut r)?;
            Ok(SequenceRecord { m, index: j, populations })
        })
        .collect::<Result<Vec<_>>>()?;
    RbOutcome::build(cfg, records, 4)
}

/// Two-CQB RB over the local Clifford group, with an interleaved-CZ arm
/// when `cfg.interleave_cz` is set.
pub fn run_two_qubit_rb(cfg: &RbConfig, exec: &dyn TwoQubitExecutor) -> Result<TwoQubitRbOutcome> {
    cfg.expect_mode(RbMode::TwoQubitInterleaved)?;
    let reference = run_two_qubit_arm(cfg, exec, false)?;
    let (interleaved, cz) = if cfg.interleave_cz {
        let it = run_two_qubit_arm(cfg, exec, true)?;
        let cz = fit_interleaved_cz(&reference, &it)?;
        (Some(it), Some(cz))
    } else {
        (None, None)
    };
    Ok(TwoQubitRbOutcome {
        reference,
        interleaved,
        cz,
    })
}
