//! Scenario and experiment configuration.
//!
//! The on-disk format is TOML: a `[world]` section, an `[imu]` section in
//! datasheet-style units, optional `[[events]]` entries, and a top-level
//! `methods` list. Every field has a default matching the benchmark
//! scenario, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ins::{ImuNoiseModel, DEG};
use crate::sim::Event;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Method names to run; see [`Method`] for accepted spellings.
    pub methods: Vec<String>,
    pub world: WorldParams,
    pub imu: ImuConfig,
    pub events: Vec<EventConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            methods: vec![
                "NCL".into(),
                "EKF".into(),
                "CI-trace".into(),
                "CI-det".into(),
                "WCI".into(),
            ],
            world: WorldParams::default(),
            imu: ImuConfig::default(),
            events: Vec::new(),
        }
    }
}

/// World, trajectory, and filter initialization parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldParams {
    pub n_agents: usize,
    /// Anchor positions [m].
    pub anchors: Vec<[f64; 3]>,
    /// Range noise standard deviation [m].
    pub sigma_r: f64,
    /// Range measurement rate [Hz]; must divide the IMU rate.
    pub uwb_rate_hz: f64,
    /// Body-frame IMU-to-ranging-module offset [m].
    pub lever_arm: [f64; 3],
    /// Initial position error standard deviation [m].
    pub sigma_p0: f64,
    /// Initial velocity error standard deviation [m/s].
    pub sigma_v0: f64,
    /// Initial attitude error standard deviation, all three axes [deg].
    pub sigma_phi0_deg: f64,
    /// WCI error horizon T_a [s].
    pub wci_horizon: f64,
    /// Monte-Carlo runs.
    pub n_runs: usize,
    pub imu_rate_hz: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// True initial positions are drawn uniformly in this box, centered at
    /// the origin [m].
    pub init_box: [f64; 3],
    /// Center-side prediction when an agent's packets are lost:
    /// "zoh" or "freeze".
    pub center_loss_handling: String,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            n_agents: 8,
            anchors: vec![
                [100.0, 100.0, 0.0],
                [-100.0, 100.0, 100.0],
                [-100.0, -100.0, 0.0],
                [100.0, -100.0, 100.0],
            ],
            sigma_r: 0.1,
            uwb_rate_hz: 5.0,
            lever_arm: [0.1, 0.0, 0.1],
            sigma_p0: 0.3,
            sigma_v0: 0.1,
            sigma_phi0_deg: 3.0,
            wci_horizon: 5.0,
            n_runs: 10,
            imu_rate_hz: 200.0,
            duration_s: 120.0,
            seed: 1,
            init_box: [60.0, 60.0, 20.0],
            center_loss_handling: "zoh".into(),
        }
    }
}

/// IMU stochastic parameters in datasheet units (ADIS16465-class defaults).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuConfig {
    /// Angular random walk [deg/√h].
    pub gyro_arw_deg_sqrt_hr: f64,
    /// Velocity random walk [m/s/√h].
    pub accel_vrw_m_s_sqrt_hr: f64,
    /// Initial (per-run constant) gyro bias standard deviation [deg/h].
    pub gyro_bias_sigma_deg_hr: f64,
    /// Initial (per-run constant) accelerometer bias standard deviation [µg].
    pub accel_bias_sigma_ug: f64,
    /// Gravity magnitude [m/s²].
    pub gravity: f64,
}

impl Default for ImuConfig {
    fn default() -> Self {
        ImuConfig {
            gyro_arw_deg_sqrt_hr: 0.15,
            accel_vrw_m_s_sqrt_hr: 0.012,
            gyro_bias_sigma_deg_hr: 2.0,
            accel_bias_sigma_ug: 300.0,
            gravity: 9.80665,
        }
    }
}

impl ImuConfig {
    pub fn to_noise_model(&self) -> ImuNoiseModel {
        ImuNoiseModel {
            gyro_arw: self.gyro_arw_deg_sqrt_hr * DEG / 60.0,
            accel_vrw: self.accel_vrw_m_s_sqrt_hr / 60.0,
            gyro_bias_sigma0: self.gyro_bias_sigma_deg_hr * DEG / 3600.0,
            accel_bias_sigma0: self.accel_bias_sigma_ug * 1e-6 * self.gravity,
            gravity: self.gravity,
        }
    }
}

/// One scheduled event. `agent` is 1-based, matching the scenario
/// descriptions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub time_s: f64,
    /// "packet_loss", "offline", or "rejoin".
    pub kind: String,
    pub agent: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

impl EventConfig {
    pub fn to_event(&self) -> Result<Event> {
        let agent = (self.agent as usize)
            .checked_sub(1)
            .ok_or_else(|| Error::Config("event agent ids are 1-based".into()))?;
        match self.kind.as_str() {
            "packet_loss" => {
                let prob = self.prob.ok_or_else(|| {
                    Error::Config("packet_loss event requires `prob`".into())
                })?;
                if !(0.0..=1.0).contains(&prob) {
                    return Err(Error::Config(format!("loss probability {prob} outside [0, 1]")));
                }
                Ok(Event::PacketLoss { agent, prob })
            }
            "offline" => Ok(Event::Offline { agent }),
            "rejoin" => Ok(Event::Rejoin { agent }),
            other => Err(Error::Config(format!("unknown event kind `{other}`"))),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.world;
        if w.n_agents == 0 {
            return Err(Error::Config("n_agents must be at least 1".into()));
        }
        for (name, v) in [
            ("sigma_r", w.sigma_r),
            ("uwb_rate_hz", w.uwb_rate_hz),
            ("imu_rate_hz", w.imu_rate_hz),
            ("duration_s", w.duration_s),
            ("sigma_p0", w.sigma_p0),
            ("sigma_v0", w.sigma_v0),
            ("sigma_phi0_deg", w.sigma_phi0_deg),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if w.wci_horizon < 0.0 {
            return Err(Error::Config("wci_horizon must be non-negative".into()));
        }
        if w.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        let ratio = w.imu_rate_hz / w.uwb_rate_hz;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::Config(format!(
                "imu_rate_hz / uwb_rate_hz must be an integer, got {ratio}"
            )));
        }
        match w.center_loss_handling.as_str() {
            "zoh" | "freeze" => {}
            other => {
                return Err(Error::Config(format!(
                    "center_loss_handling must be `zoh` or `freeze`, got `{other}`"
                )))
            }
        }
        for m in &self.methods {
            Method::from_str(m)?;
        }
        for e in &self.events {
            if e.time_s < 0.0 || e.time_s > w.duration_s {
                return Err(Error::Config(format!(
                    "event at {} s outside the run duration",
                    e.time_s
                )));
            }
            if e.agent == 0 || e.agent as usize > w.n_agents {
                return Err(Error::Config(format!("event agent {} out of range", e.agent)));
            }
            e.to_event()?;
        }
        Ok(())
    }

    pub fn parsed_methods(&self) -> Vec<Method> {
        self.methods
            .iter()
            .map(|m| Method::from_str(m).expect("validated"))
            .collect()
    }

    pub fn schedule(&self) -> Result<crate::sim::EventSchedule> {
        let mut entries = Vec::with_capacity(self.events.len());
        for e in &self.events {
            entries.push((e.time_s, e.to_event()?));
        }
        Ok(crate::sim::EventSchedule::new(entries))
    }
}

/// One of the benchmarked estimation methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// No cooperation: anchor ranges only.
    Ncl,
    /// Centralized joint EKF over all agents.
    Ekf,
    /// Distributed CI with the trace criterion.
    CiTrace,
    /// Distributed CI with the determinant criterion.
    CiDet,
    /// Distributed weighted CI with the INS-error weighting matrix.
    Wci,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ncl,
        Method::Ekf,
        Method::CiTrace,
        Method::CiDet,
        Method::Wci,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Ncl => "NCL",
            Method::Ekf => "EKF",
            Method::CiTrace => "CI-trace",
            Method::CiDet => "CI-det",
            Method::Wci => "WCI",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ncl" => Ok(Method::Ncl),
            "ekf" | "ccl" => Ok(Method::Ekf),
            "ci-trace" | "citrace" => Ok(Method::CiTrace),
            "ci-det" | "cidet" => Ok(Method::CiDet),
            "wci" => Ok(Method::Wci),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// How stacked measurements are applied within an epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    /// One stacked batch per source kind (the default).
    Concurrent,
    /// One update per measurement row, in arrival order.
    Sequential,
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<UpdateMode> {
        match s.to_ascii_lowercase().as_str() {
            "concurrent" => Ok(UpdateMode::Concurrent),
            "sequential" => Ok(UpdateMode::Sequential),
            other => Err(Error::Config(format!("unknown update mode `{other}`"))),
        }
    }
}

/// A fully resolved experiment: scenario plus command-line selections.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    pub skip_transient_s: f64,
    pub update_mode: UpdateMode,
}

impl ExperimentSpec {
    pub fn from_scenario(scenario: ScenarioConfig, out_dir: PathBuf) -> Self {
        let methods = scenario.parsed_methods();
        ExperimentSpec {
            scenario,
            methods,
            out_dir,
            skip_transient_s: 0.0,
            update_mode: UpdateMode::Concurrent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_is_identity() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_toml();
        let parsed = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(parsed, cfg);
        let text2 = parsed.to_toml();
        assert_eq!(text, text2);
    }

    #[test]
    fn empty_file_uses_defaults() {
        let parsed = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(parsed, ScenarioConfig::default());
    }

    #[test]
    fn events_round_trip() {
        let text = r#"
[world]
duration_s = 120.0

[[events]]
time_s = 30.0
kind = "packet_loss"
agent = 1
prob = 0.05

[[events]]
time_s = 90.0
kind = "offline"
agent = 1
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.events.len(), 2);
        let parsed_again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(parsed_again, cfg);
    }

    #[test]
    fn bad_rate_ratio_is_rejected() {
        let text = "[world]\nimu_rate_hz = 200.0\nuwb_rate_hz = 5.3\n";
        assert!(ScenarioConfig::from_toml(text).is_err());
    }

    #[test]
    fn unknown_method_is_rejected() {
        let text = "methods = [\"UKF\"]\n";
        assert!(ScenarioConfig::from_toml(text).is_err());
    }

    #[test]
    fn parse_error_mentions_location() {
        let err = ScenarioConfig::from_toml("[world\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line"), "diagnostic should carry a line: {msg}");
    }

    #[test]
    fn imu_units_convert_to_si() {
        let imu = ImuConfig::default();
        let m = imu.to_noise_model();
        assert!((m.gyro_arw - 4.3633e-5).abs() < 1e-8);
        assert!((m.accel_vrw - 2e-4).abs() < 1e-12);
        assert!((m.gyro_bias_sigma0 - 9.6963e-6).abs() < 1e-9);
        assert!((m.accel_bias_sigma0 - 2.9420e-3).abs() < 1e-6);
    }
}
