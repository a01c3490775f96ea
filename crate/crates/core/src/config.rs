//! Run configuration: a single JSON document holding the forcing profile,
//! gravity, orbit keys, grid resolutions, probe settings and the seed. See
//! `bounce-lab --help` for the schema and defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;
use crate::impact::MapParams;
use crate::orbits::ProbeConfig;
use crate::variational::gcd;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub forcing: ForcingProfile,
    pub g: f64,
    /// Override for the embedding threshold; default `4‖ḟ‖ + 1`.
    #[serde(default)]
    pub v_star: Option<f64>,
    /// Orbit keys (p, q) for find-orbits and sweep.
    #[serde(default)]
    pub keys: Vec<(u32, u32)>,
    /// Initial states (t, v) for simulate.
    #[serde(default)]
    pub initial_conditions: Vec<(f64, f64)>,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    /// Seed of the stability-probe perturbations.
    #[serde(default)]
    pub seed: u64,
    /// Nodes per axis of the fixed-point sweep grid.
    #[serde(default = "default_sweep_grid_n")]
    pub sweep_grid_n: usize,
    /// Energy window of the sweep as multiples of the resonant energy.
    #[serde(default = "default_e_window")]
    pub e_window: (f64, f64),
    /// Iterate orders checked by twist-check.
    #[serde(default = "default_twist_q")]
    pub twist_q: Vec<u32>,
    #[serde(default = "default_twist_e_range")]
    pub twist_e_range: (f64, f64),
    #[serde(default = "default_twist_grid_n")]
    pub twist_grid_n: usize,
    /// Forcing multipliers for the sweep command (applied to `forcing`).
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_probe_n")]
    pub probe_perturbations: usize,
    #[serde(default = "default_probe_distance")]
    pub probe_distance: f64,
    #[serde(default = "default_probe_periods")]
    pub probe_max_periods: usize,
    /// Default output directory; `--out` overrides.
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_n_steps() -> usize {
    100
}
fn default_sweep_grid_n() -> usize {
    96
}
fn default_e_window() -> (f64, f64) {
    (0.55, 1.45)
}
fn default_twist_q() -> Vec<u32> {
    vec![1, 2, 3]
}
fn default_twist_e_range() -> (f64, f64) {
    (5.0, 50.0)
}
fn default_twist_grid_n() -> usize {
    32
}
fn default_probe_n() -> usize {
    100
}
fn default_probe_distance() -> f64 {
    1e-6
}
fn default_probe_periods() -> usize {
    10_000
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid run configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Config(format!("field `g` must be positive, got {}", self.g)));
        }
        for &(p, q) in &self.keys {
            if p == 0 || q == 0 || gcd(p, q) != 1 {
                return Err(Error::Config(format!(
                    "field `keys`: ({p},{q}) must be positive and coprime"
                )));
            }
        }
        if let Some(v) = self.v_star {
            if !(v > 0.0) {
                return Err(Error::Config("field `v_star` must be positive".into()));
            }
        }
        let positives = [
            ("e_window.0", self.e_window.0),
            ("e_window.1", self.e_window.1),
            ("twist_e_range.0", self.twist_e_range.0),
            ("twist_e_range.1", self.twist_e_range.1),
            ("probe_distance", self.probe_distance),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(Error::Config(format!("field `{name}` must be positive, got {value}")));
            }
        }
        if self.e_window.0 >= self.e_window.1 {
            return Err(Error::Config("field `e_window` must be increasing".into()));
        }
        if self.twist_e_range.0 >= self.twist_e_range.1 {
            return Err(Error::Config("field `twist_e_range` must be increasing".into()));
        }
        for (name, value) in [
            ("sweep_grid_n", self.sweep_grid_n),
            ("twist_grid_n", self.twist_grid_n),
            ("n_steps", self.n_steps),
            ("probe_perturbations", self.probe_perturbations),
            ("probe_max_periods", self.probe_max_periods),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("field `{name}` must be positive")));
            }
        }
        Ok(())
    }

    pub fn map_params(&self, profile: &ForcingProfile) -> Result<MapParams> {
        match self.v_star {
            Some(v) => MapParams::with_v_star(profile, self.g, v),
            None => MapParams::for_profile(profile, self.g),
        }
    }

    pub fn probe(&self) -> ProbeConfig {
        ProbeConfig {
            n_perturbations: self.probe_perturbations,
            distance: self.probe_distance,
            max_periods: self.probe_max_periods,
            seed: self.seed,
        }
    }
}
