use std::path::Path;

use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::units::db_to_linear;
use super::RandomStream;
use crate::{Error, Result};

/// Noise power of a simulated drop, dBW.
pub const DROP_NOISE_DBW: f64 = -120.0;
/// Range of per-UE pathloss in a simulated drop, dB.
pub const DROP_PATHLOSS_DB: (f64, f64) = (-150.0, -60.0);
/// Transmit power budget of every UE in a simulated drop, W.
pub const DROP_POWER_W: f64 = 1.0;

/// Large-scale description of one UE.
#[derive(Clone, Debug, PartialEq)]
pub struct UserEquipment {
    pub pathloss_db: f64,
    pub power: f64,
    pub sparsity: usize,
}

impl UserEquipment {
    pub fn new(pathloss_db: f64, power: f64, sparsity: usize) -> Self {
        Self {
            pathloss_db,
            power,
            sparsity,
        }
    }
}

/// One problem instance: `F` sub-channels, `K` UEs and the noise floor.
///
/// Pathloss and noise are kept in dB as given and converted to linear once
/// at construction, so serialization round-trips exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    subchannels: usize,
    noise_dbw: f64,
    noise_power: f64,
    ues: Vec<UserEquipment>,
    gains: Vec<f64>,
}

impl Scenario {
    pub fn new(subchannels: usize, noise_dbw: f64, ues: Vec<UserEquipment>) -> Result<Self> {
        if subchannels == 0 {
            return Err(Error::InvalidScenario("F must be at least 1".into()));
        }
        if ues.is_empty() {
            return Err(Error::InvalidScenario("K must be at least 1".into()));
        }
        let noise_power = db_to_linear(noise_dbw);
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "noise power {noise_dbw} dBW is not a positive finite power"
            )));
        }
        let mut gains = Vec::with_capacity(ues.len());
        for (k, ue) in ues.iter().enumerate() {
            let gain = db_to_linear(ue.pathloss_db);
            if !(gain.is_finite() && gain > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "UE {k}: pathloss {} dB is not a positive finite gain",
                    ue.pathloss_db
                )));
            }
            if !(ue.power.is_finite() && ue.power > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "UE {k}: power budget {} W must be positive",
                    ue.power
                )));
            }
            if ue.sparsity == 0 || ue.sparsity > subchannels {
                return Err(Error::InvalidScenario(format!(
                    "UE {k}: sparsity {} outside [1, {subchannels}]",
                    ue.sparsity
                )));
            }
            gains.push(gain);
        }
        Ok(Self {
            subchannels,
            noise_dbw,
            noise_power,
            ues,
            gains,
        })
    }

    /// Every UE with the same pathloss, power and sparsity.
    pub fn symmetric(
        subchannels: usize,
        ues: usize,
        noise_dbw: f64,
        pathloss_db: f64,
        power: f64,
        sparsity: usize,
    ) -> Result<Self> {
        Self::new(
            subchannels,
            noise_dbw,
            vec![UserEquipment::new(pathloss_db, power, sparsity); ues],
        )
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn noise_dbw(&self) -> f64 {
        self.noise_dbw
    }

    /// Linear noise power σ².
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn ues(&self) -> &[UserEquipment] {
        &self.ues
    }

    /// Linear pathloss gain a²_k.
    pub fn gain(&self, k: usize) -> f64 {
        self.gains[k]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn power(&self, k: usize) -> f64 {
        self.ues[k].power
    }

    pub fn sparsity(&self, k: usize) -> usize {
        self.ues[k].sparsity
    }

    /// Same UEs with every sparsity replaced by `d`.
    pub fn with_sparsity(&self, d: usize) -> Result<Self> {
        let ues = self
            .ues
            .iter()
            .map(|ue| UserEquipment {
                sparsity: d,
                ..ue.clone()
            })
            .collect();
        Self::new(self.subchannels, self.noise_dbw, ues)
    }

    pub fn to_toml(&self) -> String {
        let file = ScenarioFile {
            f: self.subchannels,
            k: self.ues.len(),
            sigma2_dbw: self.noise_dbw,
            pathloss_db: self.ues.iter().map(|u| u.pathloss_db).collect(),
            power_w: self.ues.iter().map(|u| u.power).collect(),
            sparsity: self.ues.iter().map(|u| u.sparsity).collect(),
        };
        toml::to_string(&file).expect("scenario fields are always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        let k = file.k;
        for (name, len) in [
            ("pathloss_dB", file.pathloss_db.len()),
            ("power_W", file.power_w.len()),
            ("sparsity", file.sparsity.len()),
        ] {
            if len != k {
                return Err(Error::InvalidScenario(format!(
                    "{name} has {len} entries but K = {k}"
                )));
            }
        }
        let ues = file
            .pathloss_db
            .iter()
            .zip(&file.power_w)
            .zip(&file.sparsity)
            .map(|((&pl, &p), &d)| UserEquipment::new(pl, p, d))
            .collect();
        Self::new(file.f, file.sigma2_dbw, ues)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}

/// On-disk layout of a scenario.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "F")]
    f: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "sigma2_dBW")]
    sigma2_dbw: f64,
    #[serde(rename = "pathloss_dB")]
    pathloss_db: Vec<f64>,
    #[serde(rename = "power_W")]
    power_w: Vec<f64>,
    sparsity: Vec<usize>,
}

/// Random UE drop with the simulation settings: 1 W per UE, -120 dBW noise,
/// pathloss uniform in [-150, -60] dB, common sparsity `d`.
pub fn make_drop(subchannels: usize, ues: usize, d: usize, rng: RandomStream) -> Result<Scenario> {
    if subchannels == 0 || ues == 0 {
        return Err(Error::InvalidScenario(format!(
            "drop needs F >= 1 and K >= 1 (got F = {subchannels}, K = {ues})"
        )));
    }
    if d == 0 || d > subchannels {
        return Err(Error::InvalidScenario(format!(
            "drop sparsity {d} outside [1, {subchannels}]"
        )));
    }
    let (lo, hi) = DROP_PATHLOSS_DB;
    let pathloss = Uniform::new_inclusive(lo, hi).expect("static range");
    let mut rng = rng.rng();
    let ues = (0..ues)
        .map(|_| UserEquipment::new(pathloss.sample(&mut rng), DROP_POWER_W, d))
        .collect();
    Scenario::new(subchannels, DROP_NOISE_DBW, ues)
}
