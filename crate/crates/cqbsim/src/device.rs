// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Device parameters and the analytic flux / detuning / frequency maps.
//!
//! All frequencies are cyclic (Hz). Angular factors are applied by the
//! propagator only.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which the linearized detuning map is flagged valid.
pub const LINEAR_EPSILON_TOLERANCE: f64 = 0.01;

const BUNDLED_CQB_A: &str = include_str!("../data/cqb-a.json");
const BUNDLED_CQB_B: &str = include_str!("../data/cqb-b.json");
const BUNDLED_PAIR: &str = include_str!("../data/two-cqb.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    #[serde(default)]
    pub name: String,
    pub f_max_hz: f64,
    pub f_min_hz: f64,
    pub e_c_over_h_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_readout_hz: Option<f64>,
}

impl TransmonSpec {
    pub fn new(f_max_hz: f64, f_min_hz: f64, e_c_over_h_hz: f64) -> Result<Self> {
        let spec = Self {
            name: String::new(),
            f_max_hz,
            f_min_hz,
            e_c_over_h_hz,
            kappa_hz: None,
            chi_hz: None,
            f_readout_hz: None,
        };
        spec.validate("transmon")?;
        Ok(spec)
    }

    pub fn delta_omega(&self) -> f64 {
        0.5 * (self.f_max_hz - self.f_min_hz)
    }

    pub fn omega_bar(&self) -> f64 {
        0.5 * (self.f_max_hz + self.f_min_hz)
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        let f = |name: &str| format!("{prefix}.{name}");
        check_finite(self.f_max_hz, &f("f_max_hz"))?;
        check_finite(self.f_min_hz, &f("f_min_hz"))?;
        check_finite(self.e_c_over_h_hz, &f("e_c_over_h_hz"))?;
        if self.f_min_hz <= 0.0 {
            return Err(Error::field(f("f_min_hz"), "must be > 0"));
        }
        if self.f_max_hz <= self.f_min_hz {
            return Err(Error::field(f("f_max_hz"), "must exceed f_min_hz"));
        }
        if self.e_c_over_h_hz <= 0.0 {
            return Err(Error::field(f("e_c_over_h_hz"), "must be > 0"));
        }
        if let Some(k) = self.kappa_hz {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::field(f("kappa_hz"), "must be > 0"));
            }
        }
        if let Some(x) = self.chi_hz {
            if !x.is_finite() {
                return Err(Error::field(f("chi_hz"), "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqbSpec {
    #[serde(default)]
    pub name: String,
    pub transmon_a: TransmonSpec,
    pub transmon_b: TransmonSpec,
    /// Gap Δ at the avoided crossing [Hz].
    pub gap_hz: f64,
    /// Operating reduced flux φ*.
    pub phi_star: f64,
    /// Free-form measured values carried along for reference.
    #[serde(default)]
    pub annotations: BTreeMap<String, f64>,
}

impl CqbSpec {
    pub fn new(transmon_a: TransmonSpec, transmon_b: TransmonSpec, gap_hz: f64, phi_star: f64) -> Result<Self> {
        let spec = Self {
            name: String::new(),
            transmon_a,
            transmon_b,
            gap_hz,
            phi_star,
            annotations: BTreeMap::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Identical transmons with the given δω; convenient for analytic checks.
    pub fn symmetric(delta_omega_hz: f64, gap_hz: f64, phi_star: f64) -> Result<Self> {
        let t = TransmonSpec::new(4.0e9 + delta_omega_hz, 4.0e9 - delta_omega_hz, 200e6)?;
        Self::new(t.clone(), t, gap_hz, phi_star)
    }

    pub fn validate(&self) -> Result<()> {
        self.transmon_a.validate("transmon_a")?;
        self.transmon_b.validate("transmon_b")?;
        check_finite(self.gap_hz, "gap_hz")?;
        if self.gap_hz <= 0.0 {
            return Err(Error::field("gap_hz", "must be > 0"));
        }
        check_finite(self.phi_star, "phi_star")?;
        if !(self.phi_star > 0.0 && self.phi_star < 0.5) {
            return Err(Error::field("phi_star", "must lie in (0, 0.5)"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CqbSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "device spec".into(),
            reason: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// One of the bundled specs: `cqb-a` or `cqb-b`.
    pub fn bundled(name: &str) -> Result<Self> {
        match name {
            "cqb-a" => Self::from_json(BUNDLED_CQB_A),
            "cqb-b" => Self::from_json(BUNDLED_CQB_B),
            other => Err(Error::Config(format!("unknown bundled spec `{other}`"))),
        }
    }

    /// Bundled name, or a path to a JSON file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "cqb-a" | "cqb-b" => Self::bundled(name_or_path),
            path => Self::load(path),
        }
    }

    /// Mean δω of the two transmons.
    pub fn delta_omega(&self) -> f64 {
        0.5 * (self.transmon_a.delta_omega() + self.transmon_b.delta_omega())
    }

    /// Precession period t_Δ = 1/Δ.
    pub fn t_delta(&self) -> f64 {
        1.0 / self.gap_hz
    }

    /// Transmon mismatch |f_max,a − f_max,b| / Δ.
    pub fn asymmetry(&self) -> f64 {
        (self.transmon_a.f_max_hz - self.transmon_b.f_max_hz).abs() / self.gap_hz
    }

    pub fn with_gap(&self, gap_hz: f64) -> Self {
        let mut s = self.clone();
        s.gap_hz = gap_hz;
        s
    }
}

fn check_finite(x: f64, field: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::field(field, "must be finite"))
    }
}

/// Reduced-flux detuning from the degeneracy point.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FluxBias(f64);

impl FluxBias {
    pub fn new(df: f64) -> Result<Self> {
        if !df.is_finite() || df.abs() >= 0.5 {
            return Err(Error::field("flux_bias", "|δf| must be < 0.5"));
        }
        Ok(Self(df))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn transmon_frequency(spec: &TransmonSpec, phi: f64) -> f64 {
    spec.delta_omega() * (TAU * phi.rem_euclid(1.0)).cos() + spec.omega_bar()
}

pub fn epsilon_of_flux(spec: &CqbSpec, df: FluxBias) -> f64 {
    2.0 * spec.delta_omega() * (TAU * spec.phi_star).sin() * (TAU * df.value()).sin()
}

/// Small-δf linearization 4π δω sin(2πφ*) δf.
pub fn epsilon_linear(spec: &CqbSpec, df: FluxBias) -> f64 {
    2.0 * TAU * spec.delta_omega() * (TAU * spec.phi_star).sin() * df.value()
}

/// True when the linearized map is within [`LINEAR_EPSILON_TOLERANCE`] of the exact one.
pub fn linear_regime_valid(spec: &CqbSpec, df: FluxBias) -> bool {
    let exact = epsilon_of_flux(spec, df);
    if exact == 0.0 {
        return true;
    }
    ((epsilon_linear(spec, df) - exact) / exact).abs() <= LINEAR_EPSILON_TOLERANCE
}

/// Inverse of [`epsilon_of_flux`] on its principal branch.
pub fn flux_of_epsilon(spec: &CqbSpec, epsilon_hz: f64) -> Result<FluxBias> {
    let scale = 2.0 * spec.delta_omega() * (TAU * spec.phi_star).sin();
    let s = epsilon_hz / scale;
    if !s.is_finite() || s.abs() > 1.0 {
        return Err(Error::Numeric(format!(
            "detuning {epsilon_hz:e} Hz exceeds the flux-reachable range ±{scale:e} Hz"
        )));
    }
    FluxBias::new(s.asin() / TAU)
}

pub fn cqb_frequency(spec: &CqbSpec, epsilon_hz: f64) -> f64 {
    spec.gap_hz.hypot(epsilon_hz)
}

/// Second-order CQB frequency shift for flux excursions δφ1, δφ2 of the two transmons.
pub fn flux_noise_sensitivity(spec: &CqbSpec, dphi1: f64, dphi2: f64) -> f64 {
    let s = (TAU * spec.phi_star).sin();
    let dw = spec.delta_omega();
    2.0 * PI * PI * dw * dw * s * s / spec.gap_hz * (dphi1 + dphi2).powi(2)
}

/// Quadratic shift of a transmon at its flux sweet spot, 2π² δω δφ².
pub fn transmon_sweet_spot_sensitivity(spec: &TransmonSpec, dphi: f64) -> f64 {
    2.0 * PI * PI * spec.delta_omega() * dphi * dphi
}

/// |δf_CQB / δE| = sin²(2πφ*) δω / Δ.
pub fn flux_sensitivity_ratio(spec: &CqbSpec) -> f64 {
    (TAU * spec.phi_star).sin().powi(2) * spec.delta_omega() / spec.gap_hz
}

/// Second-order CQB frequency shift for transmon frequency shifts δE1, δE2.
pub fn photon_noise_sensitivity(spec: &CqbSpec, de1: f64, de2: f64) -> f64 {
    (de1 - de2).powi(2) / (2.0 * spec.gap_hz)
}

/// Tabulated effective ζ(detuning) with linear interpolation in |detuning|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZzProfile {
    pub detuning_hz: Vec<f64>,
    pub zeta_hz: Vec<f64>,
}

impl ZzProfile {
    pub fn new(detuning_hz: Vec<f64>, zeta_hz: Vec<f64>) -> Result<Self> {
        let p = Self { detuning_hz, zeta_hz };
        p.validate()?;
        Ok(p)
    }

    /// Flat profile, useful for analytic checks.
    pub fn constant(zeta_hz: f64, max_detuning_hz: f64) -> Self {
        Self {
            detuning_hz: vec![0.0, max_detuning_hz],
            zeta_hz: vec![zeta_hz, zeta_hz],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.detuning_hz.len() != self.zeta_hz.len() || self.detuning_hz.len() < 2 {
            return Err(Error::field(
                "zz_profile",
                "needs ≥ 2 points with matching detuning/zeta lengths",
            ));
        }
        if self.detuning_hz[0] < 0.0 {
            return Err(Error::field("zz_profile.detuning_hz", "must start at ≥ 0"));
        }
        for w in self.detuning_hz.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::field("zz_profile.detuning_hz", "must be strictly increasing"));
            }
        }
        for w in self.zeta_hz.windows(2) {
            if w[1] > w[0] {
                return Err(Error::field(
                    "zz_profile.zeta_hz",
                    "must be non-increasing away from zero detuning",
                ));
            }
        }
        if self.zeta_hz.iter().any(|z| !z.is_finite() || *z < 0.0) {
            return Err(Error::field("zz_profile.zeta_hz", "must be finite and ≥ 0"));
        }
        Ok(())
    }

    pub fn max_zeta(&self) -> f64 {
        self.zeta_hz[0]
    }

    pub fn zeta_at(&self, detuning_hz: f64) -> Result<f64> {
        let d = detuning_hz.abs();
        let xs = &self.detuning_hz;
        if !d.is_finite() || d < xs[0] || d > xs[xs.len() - 1] {
            return Err(Error::Numeric(format!(
                "detuning {detuning_hz:e} Hz outside the ζ profile range [{:e}, {:e}]",
                xs[0],
                xs[xs.len() - 1]
            )));
        }
        let k = xs.partition_point(|&x| x <= d).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[k - 1], xs[k]);
        let (z0, z1) = (self.zeta_hz[k - 1], self.zeta_hz[k]);
        Ok(z0 + (z1 - z0) * (d - x0) / (x1 - x0))
    }

    /// Smallest tabulated detuning at which ζ drops to `zeta_hz` (linear interpolation).
    pub fn detuning_for(&self, zeta_hz: f64) -> Result<f64> {
        let zs = &self.zeta_hz;
        if zeta_hz > zs[0] || zeta_hz < zs[zs.len() - 1] {
            return Err(Error::Numeric(format!("ζ = {zeta_hz:e} Hz not reachable in profile")));
        }
        for k in 1..zs.len() {
            if zs[k] <= zeta_hz {
                let (z0, z1) = (zs[k - 1], zs[k]);
                let (x0, x1) = (self.detuning_hz[k - 1], self.detuning_hz[k]);
                if z0 == z1 {
                    return Ok(x0);
                }
                return Ok(x0 + (x1 - x0) * (z0 - zeta_hz) / (z0 - z1));
            }
        }
        Ok(self.detuning_hz[zs.len() - 1])
    }
}

/// Implied hold time 4/g₂₃ of an optimal interaction (cyclic g₂₃).
pub fn optimal_cz_hold(g23_hz: f64) -> f64 {
    4.0 / g23_hz
}

/// Constant ζ that accumulates φ_zz = π over [`optimal_cz_hold`]: g₂₃/8.
pub fn zeta_from_coupling(g23_hz: f64) -> f64 {
    g23_hz / 8.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoCqbSpec {
    pub name: String,
    pub cqb_a: CqbSpec,
    pub cqb_b: CqbSpec,
    pub g23_hz: f64,
    /// Detuning from the CZ crossing while the pair idles.
    pub parking_detuning_hz: f64,
    pub zz_profile: ZzProfile,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecRef {
    Named(String),
    Inline(Box<CqbSpec>),
}

#[derive(Deserialize)]
struct TwoCqbFile {
    #[serde(default)]
    name: String,
    cqb_a: SpecRef,
    cqb_b: SpecRef,
    g23_hz: f64,
    parking_detuning_hz: f64,
    zz_profile: ZzProfile,
}

impl TwoCqbSpec {
    pub fn validate(&self) -> Result<()> {
        self.cqb_a.validate()?;
        self.cqb_b.validate()?;
        if !(self.g23_hz > 0.0 && self.g23_hz.is_finite()) {
            return Err(Error::field("g23_hz", "must be > 0"));
        }
        self.zz_profile.validate()?;
        self.zz_profile
            .zeta_at(self.parking_detuning_hz)
            .map_err(|_| Error::field("parking_detuning_hz", "outside zz_profile range"))?;
        Ok(())
    }

    /// Parses a pair file; string references to CQB specs resolve against
    /// bundled names first, then paths relative to `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let f: TwoCqbFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "two-CQB spec".into(),
            reason: e.to_string(),
        })?;
        let resolve = |r: SpecRef| -> Result<CqbSpec> {
            match r {
                SpecRef::Inline(s) => {
                    s.validate()?;
                    Ok(*s)
                }
                SpecRef::Named(n) if n == "cqb-a" || n == "cqb-b" => CqbSpec::bundled(&n),
                SpecRef::Named(p) => match base_dir {
                    Some(d) => CqbSpec::load(d.join(p)),
                    None => CqbSpec::load(p),
                },
            }
        };
        let spec = Self {
            name: f.name,
            cqb_a: resolve(f.cqb_a)?,
            cqb_b: resolve(f.cqb_b)?,
            g23_hz: f.g23_hz,
            parking_detuning_hz: f.parking_detuning_hz,
            zz_profile: f.zz_profile,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    pub fn bundled() -> Result<Self> {
        Self::from_json(BUNDLED_PAIR, None)
    }

    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "cqb-pair" | "two-cqb" => Self::bundled(),
            p => Self::load(p),
        }
    }

    pub fn residual_zeta(&self) -> Result<f64> {
        self.zz_profile.zeta_at(self.parking_detuning_hz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q1() -> TransmonSpec {
        TransmonSpec::new(3.825e9, 3.540e9, 199.5e6).unwrap()
    }

    #[test]
    fn transmon_extremes() {
        let t = q1();
        assert!((transmon_frequency(&t, 0.0) - 3.825e9).abs() < 1e-3);
        assert!((transmon_frequency(&t, 0.5) - 3.540e9).abs() < 1e-3);
    }

    #[test]
    fn transmon_at_operating_bias() {
        let t = q1();
        let expected = 142.5e6 * (0.56 * PI).cos() + 3682.5e6;
        assert!((transmon_frequency(&t, 0.28) - expected).abs() < 1e-3);
    }

    #[test]
    fn epsilon_reference_point() {
        let s = CqbSpec::symmetric(143e6, 65e6, 0.28).unwrap();
        let df = FluxBias::new(0.01).unwrap();
        let expected = 2.0 * 143e6 * (0.56 * PI).sin() * (0.02 * PI).sin();
        assert!((epsilon_of_flux(&s, df) - expected).abs() < 1e-6);
        assert_eq!(epsilon_of_flux(&s, FluxBias::new(0.0).unwrap()), 0.0);
    }

    #[test]
    fn linearization_within_one_percent_up_to_half_percent_flux() {
        let s = CqbSpec::bundled("cqb-a").unwrap();
        for k in 1..=50 {
            let df = FluxBias::new(k as f64 * 1e-4).unwrap();
            assert!(linear_regime_valid(&s, df));
        }
        assert!(!linear_regime_valid(&s, FluxBias::new(0.05).unwrap()));
    }

    #[test]
    fn cqb_frequency_values() {
        let s = CqbSpec::bundled("cqb-a").unwrap();
        assert_eq!(cqb_frequency(&s, 0.0), 65.4e6);
        assert!((cqb_frequency(&s, 65.4e6) - 65.4e6 * 2f64.sqrt()).abs() < 1e-6);
        let e = (65.4f64.powi(2) + 80f64.powi(2)).sqrt() * 1e6;
        assert!((cqb_frequency(&s, 80e6) - e).abs() < 1e-6);
    }

    #[test]
    fn sensitivities_vanish_for_common_and_differential_modes() {
        let s = CqbSpec::bundled("cqb-a").unwrap();
        assert_eq!(flux_noise_sensitivity(&s, 0.0, 0.0), 0.0);
        assert_eq!(flux_noise_sensitivity(&s, 1e-3, -1e-3), 0.0);
        assert_eq!(photon_noise_sensitivity(&s, 3e5, 3e5), 0.0);
        let d = s.gap_hz / 10.0;
        assert!((photon_noise_sensitivity(&s, d, 0.0) - s.gap_hz / 200.0).abs() < 1e-9);
    }

    #[test]
    fn cqb_frequency_curvature_by_finite_differences() {
        let s = CqbSpec::bundled("cqb-a").unwrap();
        let h = 1e4;
        let f = |e: f64| cqb_frequency(&s, e);
        let d1 = (f(h) - f(-h)) / (2.0 * h);
        let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!(d1.abs() < 1e-12);
        assert!(((d2 - 1.0 / s.gap_hz) * s.gap_hz).abs() < 1e-6);
    }

    #[test]
    fn flux_inverse_roundtrip() {
        let s = CqbSpec::bundled("cqb-a").unwrap();
        for eps in [-150e6, -1e6, 0.0, 3e6, 80e6] {
            let df = flux_of_epsilon(&s, eps).unwrap();
            assert!((epsilon_of_flux(&s, df) - eps).abs() < 1e-4);
        }
        assert!(flux_of_epsilon(&s, 1e12).is_err());
    }

    #[test]
    fn loader_names_violated_field() {
        let mut v: serde_json::Value = serde_json::from_str(BUNDLED_CQB_A).unwrap();
        v["gap_hz"] = serde_json::json!(-1.0);
        let err = CqbSpec::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("gap_hz"), "{err}");
        let mut v: serde_json::Value = serde_json::from_str(BUNDLED_CQB_A).unwrap();
        v["transmon_b"]["f_min_hz"] = serde_json::json!(5e9);
        let err = CqbSpec::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("transmon_b.f_max_hz"), "{err}");
        let mut v: serde_json::Value = serde_json::from_str(BUNDLED_CQB_A).unwrap();
        v["phi_star"] = serde_json::json!(0.7);
        assert!(CqbSpec::from_json(&v.to_string()).unwrap_err().to_string().contains("phi_star"));
    }

    #[test]
    fn bundled_specs_load() {
        let a = CqbSpec::bundled("cqb-a").unwrap();
        let b = CqbSpec::bundled("cqb-b").unwrap();
        assert_eq!(a.gap_hz, 65.4e6);
        assert_eq!(b.gap_hz, 70.2e6);
        assert!(a.asymmetry() < 0.1);
        let pair = TwoCqbSpec::bundled().unwrap();
        assert_eq!(pair.g23_hz, 16e6);
        assert!(pair.residual_zeta().unwrap() > 0.0);
    }

    #[test]
    fn coupling_derivation() {
        assert!((optimal_cz_hold(16e6) - 250e-9).abs() < 1e-18);
        let z = zeta_from_coupling(16e6);
        assert!((TAU * z * optimal_cz_hold(16e6) - PI).abs() < 1e-12);
    }

    #[test]
    fn profile_interpolation_and_range() {
        let pair = TwoCqbSpec::bundled().unwrap();
        let p = &pair.zz_profile;
        assert!((p.zeta_at(6e6).unwrap() - 2e6).abs() < 1.0);
        assert!(p.zeta_at(5e8).is_err());
        let d = p.detuning_for(2e6).unwrap();
        assert!((d - 6e6).abs() < 1.0);
        assert!(ZzProfile::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn epsilon_is_odd(df in -0.49f64..0.49) {
            let s = CqbSpec::bundled("cqb-a").unwrap();
            let p = epsilon_of_flux(&s, FluxBias::new(df).unwrap());
            let m = epsilon_of_flux(&s, FluxBias::new(-df).unwrap());
            prop_assert_eq!(p, -m);
        }

        #[test]
        fn transmon_periodic(phi in -3.0f64..3.0) {
            let t = q1();
            let a = transmon_frequency(&t, phi);
            let b = transmon_frequency(&t, phi + 1.0);
            prop_assert!((a - b).abs() <= 1e-5);
        }
    }
}
