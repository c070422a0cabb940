// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Flux and photon noise models, dephasing simulations and decay fits.

mod coherence;
mod decay;
mod flux;
mod photon;

pub use coherence::{
    quasistatic_ramsey_contrast, simulate_coherence, CoherenceConfig, CoherenceProtocol, CoherenceResult,
    MIN_TRAJECTORIES,
};
pub use decay::{
    fit_t1_leakage, t1_leakage_model, DecayFit, DecayModel, FitParam, PopulationRecord, PROFILE_DCHI2_95,
};
pub use flux::{epsilon_offset, sample_quasistatic_flux, FluxNoiseSpec};
pub use photon::{
    gambetta_coherence, gambetta_ramsey, stark_ramsey_monte_carlo, PhotonNoiseSpec, RamseyCurve, StarkTarget,
};
