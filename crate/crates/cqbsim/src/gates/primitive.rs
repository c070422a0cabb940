// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rx, ry, rz, Unitary2};
use crate::waveform::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    XHalf(Sign),
    YHalf(Sign),
    /// Z rotation by an angle in [0, 2π).
    Z(f64),
    Cz,
    /// Logical identity lasting the given time [s].
    Idle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePrimitive {
    pub kind: GateKind,
    /// Filled in by the compiler.
    pub start: f64,
    pub duration: f64,
    pub snap_error: f64,
}

impl GatePrimitive {
    pub fn new(kind: GateKind) -> Self {
        let kind = match kind {
            GateKind::Z(a) => GateKind::Z(a.rem_euclid(TAU)),
            k => k,
        };
        Self {
            kind,
            start: 0.0,
            duration: 0.0,
            snap_error: 0.0,
        }
    }

    pub fn x(sign: Sign) -> Self {
        Self::new(GateKind::XHalf(sign))
    }

    pub fn y(sign: Sign) -> Self {
        Self::new(GateKind::YHalf(sign))
    }

    pub fn z(angle: f64) -> Self {
        Self::new(GateKind::Z(angle))
    }

    pub fn cz() -> Self {
        Self::new(GateKind::Cz)
    }

    pub fn identity() -> Self {
        Self::new(GateKind::Idle(0.0))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for GatePrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::XHalf(Sign::Plus) => write!(f, "X+"),
            GateKind::XHalf(Sign::Minus) => write!(f, "X-"),
            GateKind::YHalf(Sign::Plus) => write!(f, "Y+"),
            GateKind::YHalf(Sign::Minus) => write!(f, "Y-"),
            GateKind::Z(a) => write!(f, "Z {a:.10}"),
            GateKind::Cz => write!(f, "CZ"),
            GateKind::Idle(0.0) => write!(f, "I"),
            GateKind::Idle(t) => write!(f, "IDLE {t:e}"),
        }
    }
}

/// Ideal special-unitary matrix of a single-CQB primitive.
pub fn primitive_unitary(p: &GatePrimitive) -> Result<Unitary2> {
    Ok(match p.kind {
        GateKind::XHalf(s) => rx(s.factor() * FRAC_PI_2),
        GateKind::YHalf(s) => ry(s.factor() * FRAC_PI_2),
        GateKind::Z(a) => rz(a),
        GateKind::Idle(_) => Unitary2::identity(),
        GateKind::Cz => {
            return Err(Error::Config("CZ has no single-CQB unitary".into()));
        }
    })
}

/// Time-ordered product (first element applied first).
pub fn sequence_unitary(ps: &[GatePrimitive]) -> Result<Unitary2> {
    ps.iter()
        .try_fold(Unitary2::identity(), |acc, p| Ok(primitive_unitary(p)? * acc))
}
