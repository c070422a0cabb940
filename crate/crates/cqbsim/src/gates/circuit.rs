// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Line-oriented circuit text.
//!
//! One gate per line, optionally prefixed by the target CQB:
//!
//! ```text
//! # comment
//! X+
//! B Y-
//! A Z 1.5707963
//! CZ
//! C17
//! IDLE 2e-8
//! ```
//!
//! Unlabeled single-CQB gates act on A.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::clifford::CliffordId;
use super::compiler::SeqItem;
use super::primitive::{GateKind, GatePrimitive};
use crate::error::{Error, Result};
use crate::waveform::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    A,
    B,
    Both,
}

impl Target {
    pub fn index(self) -> Option<usize> {
        match self {
            Target::A => Some(0),
            Target::B => Some(1),
            Target::Both => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitOp {
    pub target: Target,
    pub item: SeqItem,
}

impl CircuitOp {
    pub fn is_cz(&self) -> bool {
        matches!(self.item, SeqItem::Gate(GatePrimitive { kind: GateKind::Cz, .. }))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub ops: Vec<CircuitOp>,
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        what: format!("circuit line {line}"),
        reason: reason.into(),
    }
}

fn parse_number(line: usize, tok: Option<&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("{what} needs an argument")))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite argument `{tok}`")));
    }
    Ok(v)
}

impl Circuit {
    pub fn parse(text: &str) -> Result<Self> {
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace().peekable();
            let label = match toks.peek().map(|t| t.trim_end_matches(':')) {
                Some("A") => Some(Target::A),
                Some("B") => Some(Target::B),
                _ => None,
            };
            if label.is_some() {
                toks.next();
            }
            let head = toks.next().ok_or_else(|| parse_err(n, "missing gate"))?;
            let upper = head.to_ascii_uppercase();
            let gate = match upper.as_str() {
                "X+" => GatePrimitive::x(Sign::Plus).into(),
                "X-" => GatePrimitive::x(Sign::Minus).into(),
                "Y+" => GatePrimitive::y(Sign::Plus).into(),
                "Y-" => GatePrimitive::y(Sign::Minus).into(),
                "I" => GatePrimitive::identity().into(),
                "CZ" => GatePrimitive::cz().into(),
                "Z" => GatePrimitive::z(parse_number(n, toks.next(), "Z")?).into(),
                "IDLE" => {
                    let t = parse_number(n, toks.next(), "IDLE")?;
                    if t < 0.0 {
                        return Err(parse_err(n, "negative idle"));
                    }
                    GatePrimitive::new(GateKind::Idle(t)).into()
                }
                c if c.starts_with('C') => {
                    let k: u8 = c[1..]
                        .parse()
                        .map_err(|_| parse_err(n, format!("unknown gate `{head}`")))?;
                    SeqItem::Clifford(CliffordId::new(k).map_err(|e| parse_err(n, e.to_string()))?)
                }
                _ => return Err(parse_err(n, format!("unknown gate `{head}`"))),
            };
            if let Some(extra) = toks.next() {
                return Err(parse_err(n, format!("unexpected token `{extra}`")));
            }
            let op = CircuitOp {
                target: label.unwrap_or(Target::A),
                item: gate,
            };
            let op = if op.is_cz() {
                if label.is_some() {
                    return Err(parse_err(n, "CZ acts on both CQBs and takes no label"));
                }
                CircuitOp {
                    target: Target::Both,
                    ..op
                }
            } else {
                op
            };
            ops.push(op);
        }
        Ok(Self { ops })
    }

    /// True when every op targets A alone.
    pub fn is_single_cqb(&self) -> bool {
        self.ops.iter().all(|o| o.target == Target::A)
    }

    /// Sequence for a single-CQB circuit.
    pub fn single_cqb_sequence(&self) -> Result<Vec<SeqItem>> {
        if !self.is_single_cqb() {
            return Err(Error::Config("circuit uses CQB B or CZ".into()));
        }
        Ok(self.ops.iter().map(|o| o.item).collect())
    }
}

impl FromStr for Circuit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            let body = match op.item {
                SeqItem::Clifford(c) => c.to_string(),
                SeqItem::Gate(g) => match g.kind {
                    GateKind::Z(a) => format!("Z {a:e}"),
                    GateKind::Idle(t) if t > 0.0 => format!("IDLE {t:e}"),
                    _ => g.to_string(),
                },
            };
            match op.target {
                Target::A | Target::Both => writeln!(f, "{body}")?,
                Target::B => writeln!(f, "B {body}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_tokens() {
        let c = Circuit::parse("# hdr\nX+\nB Y-\nA: Z 1.5707963\n\nCZ\nC17 # trailing\nIDLE 2e-8\nI\n").unwrap();
        assert_eq!(c.ops.len(), 7);
        assert_eq!(c.ops[1].target, Target::B);
        assert_eq!(c.ops[3].target, Target::Both);
        assert_eq!(c.ops[4].item, SeqItem::Clifford(CliffordId::new(17).unwrap()));
        assert!(!c.is_single_cqb());
    }

    #[test]
    fn round_trips_through_display() {
        let c = Circuit::parse("X+\nB Z 0.25\nCZ\nC3\nIDLE 1e-9\n").unwrap();
        assert_eq!(Circuit::parse(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn reports_line_numbers() {
        let e = Circuit::parse("X+\nQ+\n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(Circuit::parse("Z\n").is_err());
        assert!(Circuit::parse("C25\n").is_err());
        assert!(Circuit::parse("A CZ\n").is_err());
        assert!(Circuit::parse("X+ 3\n").is_err());
    }
}
