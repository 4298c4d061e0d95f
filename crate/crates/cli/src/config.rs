//! Experiment configurations: JSON documents with per-command defaults and
//! flat `--set key=value` overrides.
//!
//! Every command resolves to one fully-populated config struct that is
//! embedded verbatim in the output manifest, so a run can be reproduced
//! from its manifest alone.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

fn default_out_dir() -> String {
    "out".into()
}

fn default_seed() -> u64 {
    20260808
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: String,
    pub spin: f64,
    pub n: usize,
    /// Homogeneous invariant start (used when `profile` is absent).
    pub rho: Option<f64>,
    /// Profile preset for a profile-associated start.
    pub profile: Option<String>,
    pub rho_hat: Option<f64>,
    pub times: Vec<f64>,
    pub replicas: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub bins: Option<usize>,
    pub test_functions: Vec<String>,
    #[serde(default)]
    pub write_snapshots: bool,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            model: "dkmp".into(),
            spin: 0.5,
            n: 16,
            rho: Some(1.0),
            profile: None,
            rho_hat: None,
            times: vec![0.01],
            replicas: 1,
            seed: 7,
            bins: None,
            test_functions: vec!["1".into(), "cos:1".into()],
            write_snapshots: false,
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroConfig {
    pub model: String,
    pub spin: f64,
    pub profile: String,
    pub rho_hat: f64,
    pub n_list: Vec<usize>,
    pub times: Vec<f64>,
    pub replicas: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub bins: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for HydroConfig {
    fn default() -> Self {
        // the default run is the pinned convergence experiment: the L1
        // noise floor at these (N, R) needs the coarse 8-bin profile
        HydroConfig {
            model: "dkmp".into(),
            spin: 0.5,
            profile: "sine:2,1".into(),
            rho_hat: 4.0,
            n_list: vec![64, 128, 256],
            times: vec![0.05],
            replicas: 200,
            seed: default_seed(),
            bins: 8,
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractConfig {
    pub model: String,
    pub spin: f64,
    /// Criterion scan bounds (particle models).
    pub n_max: u64,
    pub index_max: u64,
    /// Basic-coupling parameters (gkmp).
    pub coupling_runs: u64,
    pub coupling_sites: usize,
    pub coupling_micro_t: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for AttractConfig {
    fn default() -> Self {
        AttractConfig {
            model: "dkmp".into(),
            spin: 0.5,
            n_max: 40,
            index_max: 80,
            coupling_runs: 100,
            coupling_sites: 64,
            coupling_micro_t: 1000.0,
            seed: default_seed(),
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Fault injection: scales the diffusion coefficient fed to the
    /// gradient suite. Anything but 1.0 must turn the suite red; kept as a
    /// negative control of the harness.
    #[serde(default = "one")]
    pub corrupt_diffusion: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

fn one() -> f64 {
    1.0
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: default_seed(),
            corrupt_diffusion: 1.0,
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEntry {
    pub model: String,
    pub spin: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub entries: Vec<MomentEntry>,
    pub draws: u64,
    pub max_order: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig {
            entries: vec![
                MomentEntry { model: "gkmp".into(), spin: 0.5, rho: 1.0 },
                MomentEntry { model: "gkmp".into(), spin: 1.0, rho: 2.0 },
                MomentEntry { model: "dkmp".into(), spin: 0.5, rho: 1.0 },
                MomentEntry { model: "dkmp".into(), spin: 0.5, rho: 2.0 },
                MomentEntry { model: "harm".into(), spin: 0.5, rho: 1.0 },
                MomentEntry { model: "harm".into(), spin: 1.0, rho: 2.0 },
            ],
            draws: 1_000_000,
            max_order: 4,
            seed: default_seed(),
            out_dir: default_out_dir(),
        }
    }
}

/// Load a config: defaults, optionally replaced by a JSON file, then flat
/// `--set key=value` overrides, then flag-level overrides.
pub fn resolve<C>(
    config_path: Option<&Path>,
    sets: &[String],
    seed_flag: Option<u64>,
    out_dir_flag: Option<&str>,
) -> Result<C, CliError>
where
    C: Serialize + DeserializeOwned + Default,
{
    let mut value = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str::<serde_json::Value>(&text)
                .map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?
        }
        None => serde_json::to_value(C::default()).expect("defaults serialize"),
    };
    let map = value
        .as_object_mut()
        .ok_or_else(|| CliError::Validation("config must be a JSON object".into()))?;
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set '{set}' is not key=value")))?;
        let parsed = serde_json::from_str::<serde_json::Value>(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        map.insert(key.to_string(), parsed);
    }
    if let Some(seed) = seed_flag {
        map.insert("seed".into(), serde_json::json!(seed));
    }
    if let Some(dir) = out_dir_flag {
        map.insert("out_dir".into(), serde_json::json!(dir));
    }
    serde_json::from_value(value).map_err(|e| CliError::Validation(format!("config: {e}")))
}

/// FNV-1a 64-bit hash of the canonical config JSON; embedded in manifests
/// as a content fingerprint.
pub fn content_hash(config: &impl Serialize) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
