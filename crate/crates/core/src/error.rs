use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration failed: target {target:.3} A not reachable (fault RMS spans {low:.3}..{high:.3} A)")]
    Calibration { target: f64, low: f64, high: f64 },

    #[error("integration unstable at t = {t:.6} s (|state| exceeded limit)")]
    Instability { t: f64 },

    #[error("sending-end current below floor at t = {t:.6} s; estimate withheld")]
    LowCurrent { t: f64 },

    #[error("regression rank deficient (condition number {cond:.3e}); estimate withheld")]
    RankDeficient { cond: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("scenario '{scenario}': {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the errors that mean "no estimate for this window" rather
    /// than a broken run.
    pub fn is_withheld(&self) -> bool {
        matches!(self, Error::LowCurrent { .. } | Error::RankDeficient { .. })
    }

    pub(crate) fn in_scenario(self, name: &str) -> Error {
        Error::Scenario {
            scenario: name.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
