//! Synchrophasor extraction from point-on-wave frames.
//!
//! Each report is a full-cycle DFT at the nominal frequency over the
//! trailing cycle, referenced to absolute time so a steady cosine yields a
//! constant angle. Reports are decimated to the PMU rate and may carry
//! additive complex Gaussian noise at a given SNR.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::WaveformFrame;

/// One synchronized report from both line ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasorSample {
    pub t: f64,
    pub v_send: Complex64,
    pub i_send: Complex64,
    pub v_recv: Complex64,
    pub i_recv: Complex64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmuConfig {
    pub f_sim: f64,
    pub f_nominal: f64,
    /// Reporting rate (reports per second).
    pub rate: f64,
    /// Per-channel SNR; `None` for noise-free reports.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let k = r.round();
    ((r - k).abs() < 1e-9 * r.max(1.0) && k >= 1.0).then_some(k as usize)
}

/// Streaming extractor: push frames in order, collect reports.
pub struct PhasorExtractor {
    cfg: PmuConfig,
    per_cycle: usize,
    decimation: usize,
    twiddle: Vec<Complex64>,
    ring: Vec<[f64; 4]>,
    filled: usize,
    noise: Option<(f64, ChaCha8Rng)>,
}

impl PhasorExtractor {
    pub fn new(cfg: PmuConfig) -> Result<PhasorExtractor> {
        if !(cfg.rate > 0.0) {
            return Err(Error::Config(format!("reporting rate must be > 0, got {}", cfg.rate)));
        }
        let per_cycle = integer_ratio(cfg.f_sim, cfg.f_nominal).ok_or_else(|| {
            Error::Config(format!(
                "f_sim {} is not an integer multiple of the nominal frequency {}",
                cfg.f_sim, cfg.f_nominal
            ))
        })?;
        let decimation = integer_ratio(cfg.f_sim, cfg.rate).ok_or_else(|| {
            Error::Config(format!(
                "f_sim {} is not an integer multiple of the reporting rate {}",
                cfg.f_sim, cfg.rate
            ))
        })?;
        let twiddle = (0..per_cycle)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / per_cycle as f64))
            .collect();
        let noise = cfg
            .snr_db
            .map(|snr| (10f64.powf(-snr / 20.0), ChaCha8Rng::seed_from_u64(cfg.seed)));
        Ok(PhasorExtractor {
            cfg,
            per_cycle,
            decimation,
            twiddle,
            ring: vec![[0.0; 4]; per_cycle],
            filled: 0,
            noise,
        })
    }

    pub fn config(&self) -> &PmuConfig {
        &self.cfg
    }

    /// Frames between consecutive reports.
    pub fn decimation(&self) -> usize {
        self.decimation
    }

    pub fn push(&mut self, frame: &WaveformFrame) -> Option<PhasorSample> {
        let n = (frame.t * self.cfg.f_sim).round() as u64;
        let slot = (n % self.per_cycle as u64) as usize;
        self.ring[slot] = [frame.v_send, frame.i_send, frame.v_recv, frame.i_recv];
        self.filled = (self.filled + 1).min(self.per_cycle);
        if self.filled < self.per_cycle || !n.is_multiple_of(self.decimation as u64) {
            return None;
        }
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        for (row, tw) in self.ring.iter().zip(&self.twiddle) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += tw * v;
            }
        }
        let scale = SQRT_2 / self.per_cycle as f64;
        for a in acc.iter_mut() {
            *a *= scale;
        }
        if let Some((eps, rng)) = self.noise.as_mut() {
            for a in acc.iter_mut() {
                let sd = *eps * a.norm();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *a += Complex64::new(sd * re, sd * im);
            }
        }
        Some(PhasorSample {
            t: frame.t,
            v_send: acc[0],
            i_send: acc[1],
            v_recv: acc[2],
            i_recv: acc[3],
            rate: self.cfg.rate,
        })
    }
}

/// Batch form of [`PhasorExtractor`].
pub fn extract_phasors<'a>(
    frames: impl IntoIterator<Item = &'a WaveformFrame>,
    cfg: PmuConfig,
) -> Result<Vec<PhasorSample>> {
    let mut ex = PhasorExtractor::new(cfg)?;
    Ok(frames.into_iter().filter_map(|f| ex.push(f)).collect())
}

/// Phasor CSV: `t, vs_mag, vs_ang, is_mag, is_ang, vr_mag, vr_ang, ir_mag, ir_ang, rate`.
pub fn write_phasor_csv<W: Write>(out: W, samples: &[PhasorSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "vs_mag", "vs_ang", "is_mag", "is_ang", "vr_mag", "vr_ang", "ir_mag", "ir_ang", "rate",
    ])?;
    for s in samples {
        let mut rec = vec![s.t.to_string()];
        for z in [s.v_send, s.i_send, s.v_recv, s.i_recv] {
            rec.push(z.norm().to_string());
            rec.push(z.arg().to_string());
        }
        rec.push(s.rate.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
