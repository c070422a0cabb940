// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Random Clifford sequences and their recoveries.

use std::sync::OnceLock;

use nalgebra::Vector4;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::{cz_ideal, recovery_clifford, CliffordGroup, CliffordId};
use crate::linalg::{kron2, Unitary4, C64};
use crate::rng::Rng;

/// Uniform draw from the 24 single-CQB Cliffords.
pub fn random_clifford(rng: &mut Rng) -> CliffordId {
    CliffordId::new(rng.gen_range(1..=24u8)).expect("index in 1..=24")
}

/// `n_random` uniform Cliffords followed by the recovery.
pub fn single_sequence(n_random: usize, rng: &mut Rng) -> Vec<CliffordId> {
    let mut seq: Vec<CliffordId> = (0..n_random).map(|_| random_clifford(rng)).collect();
    seq.push(recovery_clifford(&seq));
    seq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwoQubitOp {
    /// Simultaneous single-CQB Cliffords on A and B.
    Local(CliffordId, CliffordId),
    Cz,
}

/// One noisy step of a two-CQB sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TwoQubitElement {
    /// A reference-group element, possibly a composite recovery.
    Clifford(Vec<TwoQubitOp>),
    /// The gate under test.
    InterleavedCz,
}

fn local_unitaries() -> &'static [Unitary4] {
    static LOCAL: OnceLock<Vec<Unitary4>> = OnceLock::new();
    LOCAL.get_or_init(|| {
        let g = CliffordGroup::get();
        let ids: Vec<CliffordId> = CliffordId::all().collect();
        ids.iter()
            .flat_map(|&a| ids.iter().map(move |&b| kron2(g.unitary(a), g.unitary(b))))
            .collect()
    })
}

fn local_pair(k: usize) -> TwoQubitOp {
    let a = CliffordId::new((k / 24) as u8 + 1).expect("pair index");
    let b = CliffordId::new((k % 24) as u8 + 1).expect("pair index");
    TwoQubitOp::Local(a, b)
}

pub fn op_unitary(op: &TwoQubitOp) -> Unitary4 {
    match *op {
        TwoQubitOp::Local(a, b) => local_unitaries()[(a.index() as usize - 1) * 24 + b.index() as usize - 1],
        TwoQubitOp::Cz => cz_ideal(),
    }
}

pub fn element_unitary(e: &TwoQubitElement) -> Unitary4 {
    match e {
        TwoQubitElement::Clifford(ops) => ops.iter().fold(Unitary4::identity(), |acc, op| op_unitary(op) * acc),
        TwoQubitElement::InterleavedCz => cz_ideal(),
    }
}

const RECOVERY_TOL: f64 = 1e-9;

/// Ops returning `psi` to |00⟩: one local pair when `psi` is a product
/// state, otherwise local pair, CZ, local pair.
pub fn recover_state(psi: &Vector4<C64>) -> Result<Vec<TwoQubitOp>> {
    let locals = local_unitaries();
    let to_zero = |v: &Vector4<C64>| (0..locals.len()).find(|&k| (locals[k] * v)[0].norm_sqr() > 1.0 - RECOVERY_TOL);
    if let Some(k) = to_zero(psi) {
        return Ok(vec![local_pair(k)]);
    }
    let cz = cz_ideal();
    for (k, u) in locals.iter().enumerate() {
        let phi = cz * (u * psi);
        // Product states have zero concurrence.
        if (phi[0] * phi[3] - phi[1] * phi[2]).norm() < RECOVERY_TOL {
            if let Some(j) = to_zero(&phi) {
                return Ok(vec![local_pair(k), TwoQubitOp::Cz, local_pair(j)]);
            }
        }
    }
    Err(Error::Numeric("no recovery found for a two-CQB stabilizer state".into()))
}

/// `n_random` random local layers, each followed by the CZ under test when
/// `interleaved`, then the state recovery (also followed by a CZ so every
/// reference element is paired).
pub fn two_qubit_sequence(n_random: usize, interleaved: bool, rng: &mut Rng) -> Result<Vec<TwoQubitElement>> {
    let mut seq = Vec::with_capacity(2 * (n_random + 1));
    let mut u = Unitary4::identity();
    for _ in 0..n_random {
        let e = TwoQubitElement::Clifford(vec![TwoQubitOp::Local(random_clifford(rng), random_clifford(rng))]);
        u = element_unitary(&e) * u;
        seq.push(e);
        if interleaved {
            u = cz_ideal() * u;
            seq.push(TwoQubitElement::InterleavedCz);
        }
    }
    let psi = u.column(0).into_owned();
    seq.push(TwoQubitElement::Clifford(recover_state(&psi)?));
    if interleaved {
        // CZ|00⟩ = |00⟩.
        seq.push(TwoQubitElement::InterleavedCz);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn final_state(seq: &[TwoQubitElement]) -> Vector4<C64> {
        let u = seq.iter().fold(Unitary4::identity(), |acc, e| element_unitary(e) * acc);
        u.column(0).into_owned()
    }

    #[test]
    fn single_sequences_compose_to_identity() {
        let g = CliffordGroup::get();
        for k in 0..50 {
            let mut r = rng::stream(3, k);
            let seq = single_sequence(k as usize, &mut r);
            assert_eq!(seq.len(), k as usize + 1);
            assert_eq!(g.compose(&seq), CliffordId::IDENTITY);
        }
    }

    #[test]
    fn two_qubit_recovery_returns_to_ground() {
        for interleaved in [false, true] {
            for k in 0..40 {
                let mut r = rng::stream(9, k);
                let seq = two_qubit_sequence(1 + k as usize % 7, interleaved, &mut r).unwrap();
                let p00 = final_state(&seq)[0].norm_sqr();
                assert!((p00 - 1.0).abs() < 1e-9, "p00 = {p00}");
            }
        }
    }

    #[test]
    fn entangled_state_needs_cz_in_recovery() {
        // CZ|++⟩.
        let s = 0.5f64;
        let psi = Vector4::new(C64::from(s), C64::from(s), C64::from(s), C64::from(-s));
        let rec = recover_state(&psi).unwrap();
        assert_eq!(rec.len(), 3);
        assert_eq!(rec[1], TwoQubitOp::Cz);
    }
}
