//! Experiment configurations. Every parameter block defaults to the acceptance settings, so
//! `{"version": 1, "seed": 0, "experiment": {"kind": "darcy-converge"}}` is a complete config.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use crate::HarnessError;
use psifno::fno::Activation;
use psifno::navier_stokes::{taylor_green_scaled, NsConfig};
use psifno::spectral::l2_norm;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    SpectralCheck(#[serde(default)] SpectralCheckParams),
    DarcyConverge(#[serde(default)] DarcyConvergeParams),
    NsConverge(#[serde(default)] NsConvergeParams),
    DarcyEmulate(#[serde(default)] DarcyEmulateParams),
    NsEmulate(#[serde(default)] NsEmulateParams),
    FtEmulate(#[serde(default)] FtEmulateParams),
    DeeponetExport(#[serde(default)] DeepOnetParams),
    PropertySuite(#[serde(default)] PropertySuiteParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::SpectralCheck(_) => "spectral-check",
            Experiment::DarcyConverge(_) => "darcy-converge",
            Experiment::NsConverge(_) => "ns-converge",
            Experiment::DarcyEmulate(_) => "darcy-emulate",
            Experiment::NsEmulate(_) => "ns-emulate",
            Experiment::FtEmulate(_) => "ft-emulate",
            Experiment::DeeponetExport(_) => "deeponet-export",
            Experiment::PropertySuite(_) => "property-suite",
        }
    }

    /// Default parameters for a kind name.
    pub fn default_for(kind: &str) -> Result<Experiment, HarnessError> {
        Ok(match kind {
            "spectral-check" => Experiment::SpectralCheck(Default::default()),
            "darcy-converge" => Experiment::DarcyConverge(Default::default()),
            "ns-converge" => Experiment::NsConverge(Default::default()),
            "darcy-emulate" => Experiment::DarcyEmulate(Default::default()),
            "ns-emulate" => Experiment::NsEmulate(Default::default()),
            "ft-emulate" => Experiment::FtEmulate(Default::default()),
            "deeponet-export" => Experiment::DeeponetExport(Default::default()),
            "property-suite" => Experiment::PropertySuite(Default::default()),
            other => return Err(HarnessError::ConfigInvalid(format!("unknown experiment kind {other:?}"))),
        })
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            seed,
            output: None,
            experiment,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let invalid = |e: serde_json::Error| HarnessError::ConfigInvalid(e.to_string());
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(invalid)?;
        // an omitted parameter block means all defaults
        if let Some(exp) = value.get_mut("experiment").and_then(|e| e.as_object_mut()) {
            exp.entry("params").or_insert_with(|| serde_json::json!({}));
        }
        let cfg: ExperimentConfig = serde_json::from_value(value).map_err(invalid)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::ConfigInvalid(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let bad = |m: &str| Err(HarnessError::ConfigInvalid(m.into()));
        match &self.experiment {
            Experiment::SpectralCheck(p) => {
                if p.dims.iter().any(|d| *d == 0 || *d > 3) || p.max_n == 0 {
                    return bad("spectral-check needs dims in 1..=3 and max_n >= 1");
                }
            }
            Experiment::DarcyConverge(p) => {
                if p.n.len() < 2 || p.k.is_empty() || !(p.lambda > 0.0 && p.lambda < 1.0) {
                    return bad("darcy-converge needs two resolutions, one k and lambda in (0,1)");
                }
                // a = 1 + amplitude·sin(x₁+…+x_d)
                if !(p.amplitude.abs() <= 1.0 - p.lambda / 2.0) {
                    return bad("darcy-converge coefficient amplitude must be at most 1 - lambda/2");
                }
            }
            Experiment::NsConverge(p) => {
                if p.taus.len() < 2 || p.schemes.is_empty() {
                    return bad("ns-converge needs two time steps and one scheme");
                }
                let u0 = taylor_green_scaled(p.amplitude, p.nu, 0.0, p.n)
                    .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
                for &tau in &p.taus {
                    ns_check(p.n, p.nu, p.t_final, tau, l2_norm(&u0))?;
                }
            }
            Experiment::DarcyEmulate(p) => {
                if p.n.is_empty() || !(p.eps > 0.0) {
                    return bad("darcy-emulate needs resolutions and a positive eps");
                }
            }
            Experiment::NsEmulate(p) => {
                if !(p.eps_total > 0.0) {
                    return bad("ns-emulate needs a positive eps_total");
                }
                ns_check(p.n, p.nu, p.t_final, p.tau, p.u_bound)?;
            }
            Experiment::FtEmulate(p) => {
                if p.cases.is_empty() || !(p.eps > 0.0) {
                    return bad("ft-emulate needs cases and a positive eps");
                }
            }
            Experiment::DeeponetExport(p) => {
                if p.cases.is_empty() || p.probes == 0 {
                    return bad("deeponet-export needs cases and probes");
                }
            }
            Experiment::PropertySuite(_) => {}
        }
        Ok(())
    }
}

/// Time-step and CFL conditions of the Navier-Stokes schemes.
fn ns_check(n: usize, nu: f64, t_final: f64, tau: f64, u_bound: f64) -> Result<(), HarnessError> {
    let cfg = NsConfig {
        d: 2,
        n,
        nu,
        t_final,
        tau,
        u_bound,
        inner_iterations: None,
    };
    cfg.validate().map_err(|e| HarnessError::ConfigInvalid(format!("tau = {tau}: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralCheckParams {
    pub dims: Vec<usize>,
    pub max_n: usize,
    pub probes: usize,
    pub roundtrip_tol: f64,
    pub parseval_tol: f64,
    pub product_tol: f64,
    pub leray_tol: f64,
}

impl Default for SpectralCheckParams {
    fn default() -> Self {
        SpectralCheckParams {
            dims: vec![1, 2],
            max_n: 16,
            probes: 2,
            roundtrip_tol: 1e-12,
            parseval_tol: 1e-10,
            product_tol: 1e-12,
            leray_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManufacturedKind {
    /// Trigonometric polynomial solution (spectral accuracy).
    BandLimited,
    /// Finite-regularity solution with best-approximation rate `N^{-(k+1/2)}`.
    Rough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DarcyConvergeParams {
    pub d: usize,
    pub lambda: f64,
    pub k: Vec<u32>,
    pub n: Vec<usize>,
    pub amplitude: f64,
    pub solution: ManufacturedKind,
    /// Pass if the fitted `H¹` rate is at least `k - slope_margin`.
    pub slope_margin: f64,
}

impl Default for DarcyConvergeParams {
    fn default() -> Self {
        DarcyConvergeParams {
            d: 2,
            lambda: 0.5,
            k: vec![1, 2],
            n: vec![8, 16, 32, 64],
            amplitude: 0.3,
            solution: ManufacturedKind::Rough,
            slope_margin: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsConvergeParams {
    pub schemes: Vec<Scheme>,
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub taus: Vec<f64>,
    /// Taylor-Green amplitude; `U` is set to the initial `L²` norm.
    pub amplitude: f64,
    pub first_range: [f64; 2],
    pub second_range: [f64; 2],
}

impl Default for NsConvergeParams {
    fn default() -> Self {
        NsConvergeParams {
            schemes: vec![Scheme::First, Scheme::Second],
            n: 16,
            nu: 0.05,
            t_final: 0.48,
            taus: vec![0.04, 0.02, 0.01],
            amplitude: 1.0 / 256.0,
            first_range: [0.8, 1.2],
            second_range: [1.7, 2.3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DarcyEmulateParams {
    pub d: usize,
    pub lambda: f64,
    pub k: u32,
    pub n: Vec<usize>,
    pub eps: f64,
    pub probes: usize,
    /// Decay rate and mode count of the random coefficients.
    pub ell: f64,
    pub modes: usize,
    pub activation: Activation,
    /// Largest allowed `max/min` of `depth/log N` and of `width/N^d` over the sweep.
    pub spread_limit: f64,
}

impl Default for DarcyEmulateParams {
    fn default() -> Self {
        DarcyEmulateParams {
            d: 2,
            lambda: 0.5,
            k: 1,
            n: vec![8, 16, 32],
            eps: 1e-3,
            probes: 20,
            ell: 0.8,
            modes: 3,
            activation: Activation::Tanh,
            spread_limit: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsEmulateParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "U")]
    pub u_bound: f64,
    pub eps_total: f64,
    pub taylor_green_amplitude: f64,
    pub random_fields: usize,
    pub random_norm: f64,
    pub random_modes: usize,
    pub activation: Activation,
}

impl Default for NsEmulateParams {
    fn default() -> Self {
        NsEmulateParams {
            n: 8,
            nu: 0.05,
            tau: 0.01,
            t_final: 0.04,
            u_bound: 0.25,
            eps_total: 1e-3,
            taylor_green_amplitude: 0.05,
            random_fields: 5,
            random_norm: 0.2,
            random_modes: 3,
            activation: Activation::Tanh,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCase {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FtEmulateParams {
    pub cases: Vec<GridCase>,
    /// `L²` bound of the probe fields.
    pub bound: f64,
    pub eps: f64,
    pub probes: usize,
    pub activation: Activation,
}

impl Default for FtEmulateParams {
    fn default() -> Self {
        FtEmulateParams {
            cases: vec![GridCase { d: 1, n: 4 }, GridCase { d: 2, n: 2 }, GridCase { d: 2, n: 4 }],
            bound: 1.0,
            eps: 1e-3,
            probes: 10,
            activation: Activation::Tanh,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeepOnetParams {
    pub cases: Vec<GridCase>,
    pub lift: usize,
    pub depth: usize,
    pub probes: usize,
    /// Off-grid agreement tolerance relative to the output scale.
    pub tolerance: f64,
    pub gram_tolerance: f64,
    pub write_export: bool,
}

impl Default for DeepOnetParams {
    fn default() -> Self {
        DeepOnetParams {
            cases: vec![GridCase { d: 1, n: 6 }, GridCase { d: 2, n: 3 }],
            lift: 3,
            depth: 2,
            probes: 100,
            tolerance: 1e-9,
            gram_tolerance: 1e-10,
            write_export: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContractionParams {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub pairs: usize,
    pub ell: f64,
    pub modes: usize,
}

impl Default for ContractionParams {
    fn default() -> Self {
        ContractionParams {
            d: 2,
            n: 16,
            lambda: 0.5,
            pairs: 100,
            ell: 0.8,
            modes: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: f64,
    /// `‖u⁰‖ = U`; the time step is the largest the CFL condition allows.
    pub norm: f64,
    pub modes: usize,
    pub steps: usize,
    pub reference_iterations: usize,
    /// Steps at which the inner-iterate decay is checked.
    pub decay_steps: usize,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams {
            n: 16,
            nu: 0.05,
            norm: 0.5,
            modes: 4,
            steps: 20,
            reference_iterations: 60,
            decay_steps: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PropertySuiteParams {
    pub contraction: ContractionParams,
    pub stability: StabilityParams,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"version": 1, "seed": 3, "experiment": {"kind": "darcy-converge"}}"#)
            .unwrap();
        assert_eq!(cfg.experiment, Experiment::DarcyConverge(DarcyConvergeParams::default()));
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn every_kind_round_trips() {
        for kind in [
            "spectral-check",
            "darcy-converge",
            "ns-converge",
            "darcy-emulate",
            "ns-emulate",
            "ft-emulate",
            "deeponet-export",
            "property-suite",
        ] {
            let cfg = ExperimentConfig::new(Experiment::default_for(kind).unwrap(), u64::MAX - 7);
            assert_eq!(cfg.experiment.kind(), kind);
            let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json(), cfg.to_json());
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"version": 2, "seed": 0, "experiment": {"kind": "ns-emulate"}}"#),
            Err(HarnessError::ConfigInvalid(_))
        ));
        assert!(Experiment::default_for("training").is_err());
        let text = r#"{"version": 1, "seed": 0, "experiment": {"kind": "darcy-converge", "params": {"n": [8]}}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        // unit-amplitude Taylor-Green breaks the CFL condition at N = 16
        let text = r#"{"version": 1, "seed": 0, "experiment": {"kind": "ns-converge", "params": {"amplitude": 1.0}}}"#;
        let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("CFL"), "{err}");
        let text = r#"{"version": 1, "seed": 0, "experiment": {"kind": "ns-converge", "params": {"T": 0.5}}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap_err().to_string().contains("integer"));
    }
}
