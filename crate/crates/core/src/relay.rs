//! Overcurrent relay baseline: pickup, CT ratio, tap and multiple of pickup.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circuit::LineParams;
use crate::error::{Error, Result};
use crate::waveform::WaveformFrame;

/// Standard CT primaries (A) with a 5 A secondary.
pub const STANDARD_CT_PRIMARIES: [f64; 6] = [50.0, 100.0, 150.0, 200.0, 250.0, 300.0];
pub const CT_SECONDARY: f64 = 5.0;
pub const DEFAULT_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcSettings {
    /// Primary pickup current (A).
    pub pickup: f64,
    pub ct_primary: f64,
    pub ct_secondary: f64,
    /// Secondary pickup (A).
    pub tap: f64,
    pub margin: f64,
}

impl OcSettings {
    pub fn ct_turns(&self) -> f64 {
        self.ct_primary / self.ct_secondary
    }

    pub fn ct_label(&self) -> String {
        format!("{}:{}", self.ct_primary, self.ct_secondary)
    }
}

/// Pickup at `i_nominal · (1 + margin)` on the smallest standard CT that
/// carries it. Pickups above the list round up to the next 50 A step.
pub fn derive_settings(p: &LineParams, margin: f64) -> Result<OcSettings> {
    if !(margin > 0.0) {
        return Err(Error::InvalidParameter(format!("relay margin must be > 0, got {margin}")));
    }
    if !(p.i_nominal > 0.0) {
        return Err(Error::InvalidParameter("i_nominal must be > 0".into()));
    }
    let pickup = p.i_nominal * (1.0 + margin);
    let ct_primary = STANDARD_CT_PRIMARIES
        .iter()
        .copied()
        .find(|c| *c >= pickup)
        .unwrap_or_else(|| (pickup / 50.0).ceil() * 50.0);
    Ok(OcSettings {
        pickup,
        ct_primary,
        ct_secondary: CT_SECONDARY,
        tap: pickup / (ct_primary / CT_SECONDARY),
        margin,
    })
}

/// Multiple of pickup and trip decision for a secondary current.
pub fn evaluate(i_relay_secondary: f64, s: &OcSettings) -> (f64, bool) {
    let m = i_relay_secondary / s.tap;
    (m, m > 1.0)
}

/// RMS over a fixed-length sliding window.
#[derive(Debug, Clone)]
pub struct SlidingRms {
    buf: Vec<f64>,
    pos: usize,
    filled: usize,
    sum: f64,
}

impl SlidingRms {
    pub fn new(len: usize) -> SlidingRms {
        SlidingRms {
            buf: vec![0.0; len.max(1)],
            pos: 0,
            filled: 0,
            sum: 0.0,
        }
    }

    /// Push a sample; returns the RMS once the window is full.
    pub fn push(&mut self, x: f64) -> Option<f64> {
        let sq = x * x;
        self.sum += sq - self.buf[self.pos];
        self.buf[self.pos] = sq;
        self.pos += 1;
        if self.pos == self.buf.len() {
            self.pos = 0;
            // resync to keep round-off from accumulating
            self.sum = self.buf.iter().sum();
        }
        self.filled = (self.filled + 1).min(self.buf.len());
        (self.filled == self.buf.len()).then(|| (self.sum.max(0.0) / self.buf.len() as f64).sqrt())
    }
}

/// Relay result for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcOutcome {
    pub settings: OcSettings,
    /// Largest secondary RMS seen (A).
    pub max_secondary: f64,
    pub max_m: f64,
    pub tripped: bool,
    /// Mean secondary RMS over each fault interval, first cycle excluded.
    pub fault_secondary: Vec<f64>,
}

/// True-RMS relay on the sending-end current.
#[derive(Debug, Clone)]
pub struct OcMonitor {
    settings: OcSettings,
    rms: SlidingRms,
    window: usize,
    max_primary: f64,
    fault_run: usize,
    fault_acc: (f64, usize),
    fault_means: Vec<f64>,
}

impl OcMonitor {
    /// `window` is the number of simulation samples in one cycle.
    pub fn new(settings: OcSettings, window: usize) -> OcMonitor {
        OcMonitor {
            settings,
            rms: SlidingRms::new(window),
            window: window.max(1),
            max_primary: 0.0,
            fault_run: 0,
            fault_acc: (0.0, 0),
            fault_means: Vec::new(),
        }
    }

    fn close_fault(&mut self) {
        if self.fault_acc.1 > 0 {
            self.fault_means.push(self.fault_acc.0 / self.fault_acc.1 as f64);
        }
        self.fault_acc = (0.0, 0);
        self.fault_run = 0;
    }

    pub fn push(&mut self, f: &WaveformFrame) {
        let rms = self.rms.push(f.i_send);
        if let Some(r) = rms {
            self.max_primary = self.max_primary.max(r);
        }
        if f.fault_active {
            self.fault_run += 1;
            if let Some(r) = rms {
                if self.fault_run > self.window {
                    self.fault_acc.0 += r;
                    self.fault_acc.1 += 1;
                }
            }
        } else if self.fault_run > 0 {
            self.close_fault();
        }
    }

    pub fn finish(mut self) -> OcOutcome {
        self.close_fault();
        let turns = self.settings.ct_turns();
        let max_secondary = self.max_primary / turns;
        let (max_m, tripped) = evaluate(max_secondary, &self.settings);
        OcOutcome {
            settings: self.settings,
            max_secondary,
            max_m,
            tripped,
            fault_secondary: self.fault_means.iter().map(|r| r / turns).collect(),
        }
    }
}

/// OC report CSV: `pickup, ct, tap, max_M, tripped`.
pub fn write_oc_csv<W: Write>(out: W, o: &OcOutcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pickup", "ct", "tap", "max_M", "tripped"])?;
    w.write_record([
        o.settings.pickup.to_string(),
        o.settings.ct_label(),
        o.settings.tap.to_string(),
        o.max_m.to_string(),
        o.tripped.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}
