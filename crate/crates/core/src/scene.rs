//! Physical constants of a deployment and seeded random topologies.
//!
//! All powers are converted to linear milliwatts on ingestion. Positions
//! are in meters in a global frame where every transmit array lies in a
//! plane parallel to x-y with default boresight +z.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::{Error, Result, Vec3};

/// Scene parameters. Per-pair lists (`noise_dbm`, `p_max_dbm`, `weights`)
/// hold one value per pair; a single value is broadcast by
/// [`SceneConfig::resolved`].
///
/// When deserializing, missing fields take their [`Default`] values, except
/// that a missing per-pair list becomes a single default entry so that it
/// broadcasts to whatever `pairs` is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Number of transmitter/user pairs K.
    pub pairs: usize,
    /// Number of scatterer clusters Q.
    pub clusters: usize,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// Inter-element spacing in meters.
    pub spacing: f64,
    pub mx: usize,
    pub my: usize,
    /// Directivity factor p of the cosine pattern.
    pub directivity: u32,
    /// Maximum boresight zenith angle in radians.
    pub theta_max: f64,
    #[serde(deserialize_with = "scalar_or_list", default = "default_noise")]
    pub noise_dbm: Vec<f64>,
    #[serde(deserialize_with = "scalar_or_list", default = "default_budget")]
    pub p_max_dbm: Vec<f64>,
    /// User weights alpha_k.
    #[serde(deserialize_with = "scalar_or_list", default = "default_weight")]
    pub weights: Vec<f64>,
    /// Average scattering power of each cluster, used as its RCS.
    pub scattering_power: f64,
    pub seed: u64,
}

fn default_noise() -> Vec<f64> {
    vec![-80.0]
}

fn default_budget() -> Vec<f64> {
    vec![0.0]
}

fn default_weight() -> Vec<f64> {
    vec![1.0]
}

fn scalar_or_list<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl Default for SceneConfig {
    /// K = 4, Q = 6, lambda = 0.125 m, d = 2 lambda, 2x2 arrays, p = 4,
    /// theta_max = pi/3, noise -80 dBm, budget 0 dBm, unit weights,
    /// scattering power 0.5.
    fn default() -> Self {
        let pairs = 4;
        Self {
            pairs,
            clusters: 6,
            wavelength: 0.125,
            spacing: 0.25,
            mx: 2,
            my: 2,
            directivity: 4,
            theta_max: PI / 3.0,
            noise_dbm: vec![-80.0; pairs],
            p_max_dbm: vec![0.0; pairs],
            weights: vec![1.0; pairs],
            scattering_power: 0.5,
            seed: 0,
        }
    }
}

impl SceneConfig {
    /// Elements per array, M = Mx * My.
    pub fn elements(&self) -> usize {
        self.mx * self.my
    }

    /// Broadcasts single-valued per-pair lists to K entries and validates.
    pub fn resolved(mut self) -> Result<Self> {
        let k = self.pairs;
        for list in [&mut self.noise_dbm, &mut self.p_max_dbm, &mut self.weights] {
            if list.len() == 1 && k > 1 {
                let v = list[0];
                *list = vec![v; k];
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Sets the same transmit budget for every pair.
    pub fn set_p_max_dbm(&mut self, dbm: f64) {
        self.p_max_dbm = vec![dbm; self.pairs];
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.pairs == 0 {
            return bad("pairs must be at least 1".into());
        }
        if self.mx == 0 || self.my == 0 {
            return bad(format!("array must have at least one element (mx = {}, my = {})", self.mx, self.my));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return bad(format!("wavelength must be positive, got {}", self.wavelength));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad(format!("spacing must be positive, got {}", self.spacing));
        }
        if !(0.0..=PI / 2.0).contains(&self.theta_max) {
            return bad(format!("theta_max must lie in [0, pi/2], got {}", self.theta_max));
        }
        if !(self.scattering_power >= 0.0 && self.scattering_power.is_finite()) {
            return bad(format!("scattering_power must be nonnegative, got {}", self.scattering_power));
        }
        for (name, list) in [
            ("noise_dbm", &self.noise_dbm),
            ("p_max_dbm", &self.p_max_dbm),
            ("weights", &self.weights),
        ] {
            if list.len() != self.pairs {
                return bad(format!("{name} has {} entries, expected {}", list.len(), self.pairs));
            }
            if list.iter().any(|v| !v.is_finite()) {
                return bad(format!("{name} contains a non-finite value"));
            }
        }
        if self.weights.iter().any(|&a| a < 0.0) {
            return bad("weights must be nonnegative".into());
        }
        Ok(())
    }

    /// Noise powers delta_k^2 in mW.
    pub fn noise_mw(&self) -> Vec<f64> {
        self.noise_dbm.iter().map(|&v| dbm_to_linear(v)).collect()
    }

    /// Transmit budgets P_k,max in mW.
    pub fn budgets_mw(&self) -> Vec<f64> {
        self.p_max_dbm.iter().map(|&v| dbm_to_linear(v)).collect()
    }
}

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Random deployment drawn for one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub tx_centers: Vec<[f64; 3]>,
    /// `element_positions[k][m]`.
    pub element_positions: Vec<Vec<[f64; 3]>>,
    pub users: Vec<[f64; 3]>,
    pub clusters: Vec<[f64; 3]>,
    /// Radar cross section of each cluster (m^2).
    pub rcs: Vec<f64>,
    /// Random scattering phase of each cluster, in [0, 2 pi).
    pub phases: Vec<f64>,
}

impl Topology {
    pub fn element(&self, k: usize, m: usize) -> Vec3 {
        Vec3::from(self.element_positions[k][m])
    }

    pub fn user(&self, n: usize) -> Vec3 {
        Vec3::from(self.users[n])
    }

    pub fn cluster(&self, q: usize) -> Vec3 {
        Vec3::from(self.clusters[q])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Offset of element `m` (0-based) from its array center.
pub fn element_offset(config: &SceneConfig, m: usize) -> [f64; 3] {
    let mx = config.mx as f64;
    let my = config.my as f64;
    let col = (m % config.mx) as f64;
    let row = (m / config.mx) as f64;
    [
        config.spacing * (col - (mx - 1.0) / 2.0),
        config.spacing * (row - (my - 1.0) / 2.0),
        0.0,
    ]
}

/// UPA element coordinates for every array center.
pub fn element_positions(config: &SceneConfig, tx_centers: &[[f64; 3]]) -> Vec<Vec<[f64; 3]>> {
    tx_centers
        .iter()
        .map(|c| {
            (0..config.elements())
                .map(|m| {
                    let o = element_offset(config, m);
                    [c[0] + o[0], c[1] + o[1], c[2] + o[2]]
                })
                .collect()
        })
        .collect()
}

/// Draws a topology: array centers at `[U(0,80), 20, 0]`, clusters at
/// `[U(0,100), 6, U(20,40)]`, users at `[U(0,100), 2, U(80,100)]`, cluster
/// phases `U[0, 2 pi)`. The RNG is ChaCha8 seeded from `config.seed`.
pub fn generate_topology(config: &SceneConfig) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tx_centers: Vec<[f64; 3]> = (0..config.pairs)
        .map(|_| [rng.gen_range(0.0..80.0), 20.0, 0.0])
        .collect();
    let mut clusters = Vec::with_capacity(config.clusters);
    let mut phases = Vec::with_capacity(config.clusters);
    for _ in 0..config.clusters {
        let x = rng.gen_range(0.0..100.0);
        let z = rng.gen_range(20.0..40.0);
        clusters.push([x, 6.0, z]);
        phases.push(rng.gen_range(0.0..2.0 * PI));
    }
    let users = (0..config.pairs)
        .map(|_| {
            let x = rng.gen_range(0.0..100.0);
            let z = rng.gen_range(80.0..100.0);
            [x, 2.0, z]
        })
        .collect();
    Topology {
        element_positions: element_positions(config, &tx_centers),
        tx_centers,
        users,
        clusters,
        rcs: vec![config.scattering_power; config.clusters],
        phases,
    }
}
