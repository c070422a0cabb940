// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! The 24 single-qubit Cliffords as short X/Y/Z primitive strings.
//!
//! Primitive lists are in time order: the first entry is applied first.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::primitive::{sequence_unitary, GatePrimitive};
use crate::error::{Error, Result};
use crate::linalg::{trace_fidelity2, Unitary2};
use crate::waveform::Sign;

pub const N_CLIFFORDS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct CliffordId(u8);

impl CliffordId {
    pub const IDENTITY: CliffordId = CliffordId(1);

    pub fn new(index: u8) -> Result<Self> {
        if (1..=N_CLIFFORDS as u8).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::Config(format!("Clifford index {index} outside 1..=24")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = CliffordId> {
        (1..=N_CLIFFORDS as u8).map(CliffordId)
    }

    fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u8> for CliffordId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CliffordId> for u8 {
    fn from(c: CliffordId) -> u8 {
        c.0
    }
}

impl fmt::Display for CliffordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

const Z90: f64 = FRAC_PI_2;
const Z180: f64 = PI;
const Z270: f64 = 3.0 * FRAC_PI_2;

pub fn clifford_to_primitives(c: CliffordId) -> Vec<GatePrimitive> {
    use Sign::{Minus as M, Plus as P};
    let x = GatePrimitive::x;
    let y = GatePrimitive::y;
    let z = GatePrimitive::z;
    match c.0 {
        1 => vec![GatePrimitive::identity()],
        2 => vec![x(P), x(P)],
        3 => vec![y(P), y(P)],
        4 => vec![z(Z180)],
        5 => vec![x(P), z(Z270)],
        6 => vec![x(P), z(Z90)],
        7 => vec![x(M), z(Z90)],
        8 => vec![x(M), z(Z270)],
        9 => vec![y(P), z(Z90)],
        10 => vec![y(P), z(Z270)],
        11 => vec![y(M), z(Z270)],
        12 => vec![y(M), z(Z90)],
        13 => vec![x(P)],
        14 => vec![x(M)],
        15 => vec![y(P)],
        16 => vec![y(M)],
        17 => vec![z(Z90)],
        18 => vec![z(Z270)],
        19 => vec![z(Z180), y(P)],
        20 => vec![z(Z180), y(M)],
        21 => vec![x(M), z(Z180)],
        22 => vec![x(P), z(Z180)],
        23 => vec![x(P), x(P), z(Z270)],
        24 => vec![z(Z270), x(M), x(M)],
        _ => unreachable!("CliffordId is validated on construction"),
    }
}

/// Group structure, built once from the ideal unitaries.
pub struct CliffordGroup {
    unitaries: Vec<Unitary2>,
    /// `mul[a][b]`: index of "a, then b".
    mul: Vec<[u8; N_CLIFFORDS]>,
    inverse: [u8; N_CLIFFORDS],
}

impl CliffordGroup {
    pub fn get() -> &'static CliffordGroup {
        static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
        GROUP.get_or_init(|| Self::build().expect("Clifford table is a closed group"))
    }

    /// Builds the table; fails if the decompositions are not a closed group.
    pub fn build() -> Result<Self> {
        let unitaries: Vec<Unitary2> = CliffordId::all()
            .map(|c| sequence_unitary(&clifford_to_primitives(c)))
            .collect::<Result<_>>()?;
        let find = |u: &Unitary2| -> Option<usize> {
            let hits: Vec<usize> = (0..N_CLIFFORDS)
                .filter(|&k| trace_fidelity2(&unitaries[k], u) > 1.0 - 1e-9)
                .collect();
            (hits.len() == 1).then(|| hits[0])
        };
        for (k, u) in unitaries.iter().enumerate() {
            if find(u) != Some(k) {
                return Err(Error::Numeric(format!("Clifford {} is not unique", k + 1)));
            }
        }
        let mut mul = vec![[0u8; N_CLIFFORDS]; N_CLIFFORDS];
        for a in 0..N_CLIFFORDS {
            for b in 0..N_CLIFFORDS {
                let p = unitaries[b] * unitaries[a];
                let k = find(&p).ok_or_else(|| {
                    Error::Numeric(format!("product C{} then C{} leaves the set", a + 1, b + 1))
                })?;
                mul[a][b] = k as u8 + 1;
            }
        }
        let mut inverse = [0u8; N_CLIFFORDS];
        for a in 0..N_CLIFFORDS {
            let b = (0..N_CLIFFORDS)
                .find(|&b| mul[a][b] == 1)
                .ok_or_else(|| Error::Numeric(format!("C{} has no inverse", a + 1)))?;
            inverse[a] = b as u8 + 1;
        }
        Ok(Self { unitaries, mul, inverse })
    }

    pub fn unitary(&self, c: CliffordId) -> &Unitary2 {
        &self.unitaries[c.slot()]
    }

    /// `a` followed by `b`.
    pub fn then(&self, a: CliffordId, b: CliffordId) -> CliffordId {
        CliffordId(self.mul[a.slot()][b.slot()])
    }

    pub fn inverse(&self, c: CliffordId) -> CliffordId {
        CliffordId(self.inverse[c.slot()])
    }

    /// Clifford equal to `u` up to global phase.
    pub fn find(&self, u: &Unitary2) -> Option<CliffordId> {
        (0..N_CLIFFORDS)
            .find(|&k| trace_fidelity2(&self.unitaries[k], u) > 1.0 - 1e-9)
            .map(|k| CliffordId(k as u8 + 1))
    }

    pub fn compose(&self, seq: &[CliffordId]) -> CliffordId {
        seq.iter().fold(CliffordId::IDENTITY, |acc, &c| self.then(acc, c))
    }
}

pub fn clifford_unitary(c: CliffordId) -> Unitary2 {
    *CliffordGroup::get().unitary(c)
}

/// The Clifford that, appended to `seq`, restores the identity class.
pub fn recovery_clifford(seq: &[CliffordId]) -> CliffordId {
    let g = CliffordGroup::get();
    g.inverse(g.compose(seq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::infidelity2;
    use crate::rng;
    use rand::Rng;

    fn id(k: u8) -> CliffordId {
        CliffordId::new(k).unwrap()
    }

    #[test]
    fn table_rows() {
        assert_eq!(clifford_to_primitives(id(1)), vec![GatePrimitive::identity()]);
        assert_eq!(
            clifford_to_primitives(id(2)),
            vec![GatePrimitive::x(Sign::Plus), GatePrimitive::x(Sign::Plus)]
        );
        assert_eq!(clifford_to_primitives(id(17)), vec![GatePrimitive::z(FRAC_PI_2)]);
        assert!(CliffordId::new(0).is_err() && CliffordId::new(25).is_err());
    }

    #[test]
    fn closure_over_all_products() {
        let g = CliffordGroup::build().unwrap();
        let mut count = 0;
        for a in CliffordId::all() {
            let mut seen = [false; N_CLIFFORDS];
            for b in CliffordId::all() {
                let p = g.unitary(b) * g.unitary(a);
                let k = g.find(&p).unwrap();
                assert_eq!(k, g.then(a, b));
                seen[k.slot()] = true;
                count += 1;
            }
            assert!(seen.iter().all(|&s| s), "row C{a} is not a permutation");
        }
        assert_eq!(count, 576);
    }

    #[test]
    fn unitaries_are_unitary() {
        for c in CliffordId::all() {
            assert!(crate::linalg::unitarity_error(&clifford_unitary(c)) < 1e-14);
        }
    }

    #[test]
    fn simple_recoveries() {
        assert_eq!(recovery_clifford(&[id(1)]), id(1));
        assert_eq!(recovery_clifford(&[id(2)]), id(2));
    }

    #[test]
    fn random_recoveries_are_exact() {
        let mut r = rng::stream(2024, 0);
        for _ in 0..1000 {
            let len = r.gen_range(1..=50);
            let seq: Vec<CliffordId> = (0..len).map(|_| id(r.gen_range(1..=24))).collect();
            let rec = recovery_clifford(&seq);
            let mut u = Unitary2::identity();
            for c in seq.iter().chain(std::iter::once(&rec)) {
                u = clifford_unitary(*c) * u;
            }
            assert!(infidelity2(&u, &Unitary2::identity()) < 1e-12);
        }
    }
}
