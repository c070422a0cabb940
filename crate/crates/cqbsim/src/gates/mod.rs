// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gate IR, the single-CQB Clifford table, and waveform compilation.

pub mod circuit;
pub mod clifford;
pub mod compiler;
pub mod primitive;
pub mod two_qubit;

pub use circuit::{Circuit, CircuitOp, Target};
pub use clifford::{clifford_to_primitives, clifford_unitary, recovery_clifford, CliffordGroup, CliffordId};
pub use compiler::{compile_sequence, ideal_unitary, CompiledSequence, NegativeMode, SeqItem, ZLedger};
pub use primitive::{primitive_unitary, sequence_unitary, GateKind, GatePrimitive};
pub use two_qubit::{compile_two_qubit, cz_ideal, cz_with_resync, TwoQubitProgram};
