//! Declarative experiment description, loaded from TOML.
//!
//! ```toml
//! name = "675"
//! seed = 1
//! hours = 24
//! hour_length = 10.0
//!
//! [line]
//! r_series = 2.713
//! l_series = 0.02159
//! c_shunt = 12e-6
//! v_nominal = 2401.78
//! i_nominal = 98.0
//!
//! [fault]
//! kind = "hif"
//! r_p_bounds = [150.0, 170.0]
//! # ...
//!
//! [schedule]
//! hours = [0, 1, 2]
//! offset = 6.0
//! duration = 2.0
//!
//! [pmu]
//! rate = 30.0
//! snr_db = 60.0
//! ```
//!
//! Every section except `line` is optional and falls back to the defaults
//! of the corresponding module.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::LineParams;
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::hif::{HifParams, ResistanceProcess};
use crate::relay::{derive_settings, OcSettings, DEFAULT_MARGIN};
use crate::waveform::{
    FaultInterval, FaultModel, FaultSchedule, LoadProfile, SimSetup, DEFAULT_F_SIM, DEFAULT_HOUR_LENGTH,
    DEFAULT_LOAD_PF,
};
use crate::zone::DetectorConfig;

pub const PRESETS: [&str; 3] = ["671", "675", "634"];

/// Which compressed hours carry a fault, plus any extra explicit intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub hours: Vec<usize>,
    /// Seconds into each listed hour at which the fault starts.
    pub offset: f64,
    /// Fault length (second).
    pub duration: f64,
    pub intervals: Vec<FaultInterval>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            hours: Vec::new(),
            offset: 6.0,
            duration: 2.0,
            intervals: Vec::new(),
        }
    }
}

impl ScheduleSpec {
    pub fn every_hour(hours: usize) -> ScheduleSpec {
        ScheduleSpec {
            hours: (0..hours).collect(),
            ..Default::default()
        }
    }

    pub fn resolve(&self, hour_length: f64) -> FaultSchedule {
        let mut s = FaultSchedule::hourly(self.hours.iter().copied(), hour_length, self.offset, self.duration);
        s.intervals.extend(self.intervals.iter().copied());
        s.intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PmuSpec {
    pub rate: f64,
    /// Per-channel SNR in dB; `inf` gives noise-free phasors.
    pub snr_db: f64,
    pub f_sim: f64,
}

impl PmuSpec {
    pub fn noise(&self) -> Option<f64> {
        self.snr_db.is_finite().then_some(self.snr_db)
    }
}

impl Default for PmuSpec {
    fn default() -> Self {
        PmuSpec {
            rate: 30.0,
            snr_db: 60.0,
            f_sim: DEFAULT_F_SIM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaySpec {
    pub margin: f64,
    /// Explicit settings; derived from the line when absent.
    pub settings: Option<OcSettings>,
}

impl Default for RelaySpec {
    fn default() -> Self {
        RelaySpec {
            margin: DEFAULT_MARGIN,
            settings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Master seed; waveform, noise and clustering seeds derive from it.
    #[serde(default)]
    pub seed: u64,
    /// Number of compressed hours simulated.
    #[serde(default = "default_hours")]
    pub hours: usize,
    #[serde(default = "default_hour_length")]
    pub hour_length: f64,
    #[serde(default = "default_pf")]
    pub load_power_factor: f64,
    pub line: LineParams,
    #[serde(default)]
    pub load: LoadProfile,
    #[serde(default)]
    pub fault: Option<FaultModel>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub pmu: PmuSpec,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub relay: RelaySpec,
}

fn default_hours() -> usize {
    24
}

fn default_hour_length() -> f64 {
    DEFAULT_HOUR_LENGTH
}

fn default_pf() -> f64 {
    DEFAULT_LOAD_PF
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Scenario> {
        let sc: Scenario = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| e.in_scenario(&self.name);
        self.line.validate().map_err(wrap)?;
        self.load.validate().map_err(wrap)?;
        self.estimator.validate().map_err(wrap)?;
        self.detector.validate().map_err(wrap)?;
        if let Some(FaultModel::Hif(p)) = &self.fault {
            p.validate().map_err(wrap)?;
        }
        if self.hours == 0 || !(self.hour_length > 0.0) {
            return Err(wrap(Error::Config("hours and hour_length must be positive".into())));
        }
        if !(self.pmu.rate > 0.0) {
            return Err(wrap(Error::Config("pmu rate must be > 0".into())));
        }
        let end = self.duration();
        for f in &self.schedule.resolve(self.hour_length).intervals {
            if !(f.duration > 0.0) || f.start < 0.0 || f.end() > end {
                return Err(wrap(Error::Config(format!(
                    "fault interval {}..{} s outside the {end} s run",
                    f.start,
                    f.end()
                ))));
            }
        }
        if !self.schedule.hours.is_empty() && self.fault.is_none() {
            return Err(wrap(Error::Config("schedule lists faults but no fault model is set".into())));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.hours as f64 * self.hour_length
    }

    pub fn fault_schedule(&self) -> FaultSchedule {
        self.schedule.resolve(self.hour_length)
    }

    pub fn relay_settings(&self) -> Result<OcSettings> {
        match self.relay.settings {
            Some(s) => Ok(s),
            None => derive_settings(&self.line, self.relay.margin),
        }
    }

    pub fn sim_setup(&self) -> SimSetup {
        SimSetup {
            line: self.line,
            load: self.load.clone(),
            load_power_factor: self.load_power_factor,
            hour_length: self.hour_length,
            fault: self.fault,
            schedule: self.fault_schedule(),
            f_sim: self.pmu.f_sim,
            duration: self.duration(),
            seed: self.seed,
        }
    }

    pub fn hif(&self) -> Option<&HifParams> {
        match &self.fault {
            Some(FaultModel::Hif(p)) => Some(p),
            _ => None,
        }
    }

    /// Built-in scenario by name: "671", "675" or "634".
    pub fn preset(name: &str) -> Result<Scenario> {
        let (line, hif) = match name {
            "671" => (
                line(1.2842, 10.221e-3, 26e-6, 207.0),
                hif((99.25, 121.30), (122.68, 149.95), 340.0, 850.0, 1.11, 671),
            ),
            "675" => (
                line(2.7126, 21.587e-3, 12e-6, 98.0),
                hif((104.91, 128.23), (130.17, 159.10), 340.0, 850.0, 1.17, 675),
            ),
            "634" => (
                line(1.3990, 11.133e-3, 24e-6, 190.0),
                hif((78.61, 96.07), (97.14, 118.73), 340.0, 850.0, 0.88, 634),
            ),
            other => return Err(Error::Config(format!("unknown preset '{other}' (expected 671, 675 or 634)"))),
        };
        let sc = Scenario {
            name: name.to_string(),
            seed: 1,
            hours: 24,
            hour_length: DEFAULT_HOUR_LENGTH,
            load_power_factor: DEFAULT_LOAD_PF,
            line,
            load: LoadProfile::default(),
            fault: Some(FaultModel::Hif(hif)),
            schedule: ScheduleSpec::every_hour(24),
            pmu: PmuSpec::default(),
            estimator: EstimatorConfig {
                window_len: 20,
                ..Default::default()
            },
            detector: DetectorConfig {
                margin: 2.5,
                guard: 20,
                ..Default::default()
            },
            relay: RelaySpec::default(),
        };
        sc.validate()?;
        Ok(sc)
    }
}

fn line(r: f64, l: f64, c: f64, i_nominal: f64) -> LineParams {
    LineParams {
        r_series: r,
        l_series: l,
        c_shunt: c,
        v_nominal: 2401.78,
        f_nominal: 60.0,
        i_nominal,
    }
}

fn hif(r_p: (f64, f64), r_n: (f64, f64), v_p: f64, v_n: f64, sigma: f64, seed: u64) -> HifParams {
    HifParams {
        r_p_bounds: r_p,
        r_n_bounds: r_n,
        v_p,
        v_n,
        tau: 2e-3,
        sigma_step: sigma,
        seed,
        process: ResistanceProcess::Walk,
    }
}
