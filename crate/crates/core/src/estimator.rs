//! Line eigenvalue estimation from windows of phasor reports.
//!
//! Two strategies:
//!
//! * `impedance`: average the apparent series impedance
//!   `(V_send - V_recv) / I_send` over the window, read `R` and `L` off it
//!   and take the closed-form eigenvalues with the configured shunt `C`.
//! * `discrete-ls`: fit a one-step map `x[k+1] = A_d x[k] + B_d u[k]` on
//!   the complex phasor states `x = (I_send, V_recv)`, `u = V_send`, and map
//!   the eigenvalues of `A_d` to continuous time with `rate · ln(λ_d)`.
//!   With `raw_discrete` the log is skipped and `rate · λ_d` is reported.
//!
//! Windows that cannot support an estimate are withheld, never zero-filled.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{angle_deg, eigenvalues_closed_form, healthy_matrix, LineParams, Polar};
use crate::error::{Error, Result};
use crate::pmu::PhasorSample;

const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Impedance,
    DiscreteLs,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Impedance => "impedance",
            Strategy::DiscreteLs => "discrete-ls",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impedance" => Ok(Strategy::Impedance),
            "discrete-ls" => Ok(Strategy::DiscreteLs),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub strategy: Strategy,
    /// Phasor reports per estimate.
    pub window_len: usize,
    /// Reports between consecutive estimates.
    pub stride: usize,
    /// Report `rate · λ_d` instead of `rate · ln(λ_d)` (discrete-ls only).
    pub raw_discrete: bool,
    /// Minimum |I_send| as a fraction of the nominal current.
    pub current_floor: f64,
    /// Floor on the estimated inductance (henry).
    pub min_inductance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            strategy: Strategy::Impedance,
            window_len: 10,
            stride: 1,
            raw_discrete: false,
            current_floor: 1e-3,
            min_inductance: 1e-6,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let min_window = match self.strategy {
            Strategy::Impedance => 1,
            Strategy::DiscreteLs => 4,
        };
        if self.window_len < min_window {
            return Err(Error::Config(format!(
                "window_len must be >= {min_window} for {}",
                self.strategy.as_str()
            )));
        }
        if self.stride < 1 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// One point of an eigenvalue trajectory. `lambda` is `None` when the
/// window was withheld.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub t: f64,
    pub lambda: Option<Complex64>,
    pub strategy: Strategy,
}

impl EigenSample {
    pub fn withheld(&self) -> bool {
        self.lambda.is_none()
    }

    pub fn polar(&self) -> Option<Polar> {
        self.lambda.map(Polar::of)
    }
}

/// Apparent-impedance estimate; returns the `Im <= 0` eigenvalue.
pub fn estimate_impedance(window: &[PhasorSample], line: &LineParams, cfg: &EstimatorConfig) -> Result<EigenSample> {
    let last = window.last().ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let floor = cfg.current_floor * line.i_nominal;
    let mut z = Complex64::new(0.0, 0.0);
    for s in window {
        if !(s.i_send.norm() >= floor) {
            return Err(Error::LowCurrent { t: s.t });
        }
        z += (s.v_send - s.v_recv) / s.i_send;
    }
    z /= window.len() as f64;
    let w0 = line.omega();
    let r_hat = z.re.max(0.0);
    let l_hat = z.im.max(w0 * cfg.min_inductance) / w0;
    let m = healthy_matrix(&line.with_series(r_hat, l_hat))?;
    Ok(EigenSample {
        t: last.t,
        lambda: Some(eigenvalues_closed_form(&m).lambda_minus),
        strategy: Strategy::Impedance,
    })
}

/// Least-squares fit of the one-step phasor map.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFit {
    pub a_d: [[Complex64; 2]; 2],
    pub b_d: [Complex64; 2],
    pub eigenvalues: [Complex64; 2],
    pub condition: f64,
}

/// Fit `x[k+1] = A_d x[k] + B_d u[k]` with `x = (I_send, V_recv)`,
/// `u = V_send` over the window.
pub fn fit_discrete_map(window: &[PhasorSample]) -> Result<DiscreteFit> {
    if window.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: window.len(),
        });
    }
    let rows = window.len() - 1;
    let mut phi = DMatrix::<Complex64>::zeros(rows, 3);
    let mut y = DMatrix::<Complex64>::zeros(rows, 2);
    for k in 0..rows {
        let (s, n) = (&window[k], &window[k + 1]);
        phi[(k, 0)] = s.i_send;
        phi[(k, 1)] = s.v_recv;
        phi[(k, 2)] = s.v_send;
        y[(k, 0)] = n.i_send;
        y[(k, 1)] = n.v_recv;
    }
    // Column equilibration so the condition number reflects excitation,
    // not the volt/ampere scale difference.
    let mut scale = [0.0; 3];
    for (j, sc) in scale.iter_mut().enumerate() {
        let norm = phi.column(j).norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient { cond: f64::INFINITY });
        }
        *sc = norm;
        phi.column_mut(j).unscale_mut(norm);
    }
    let svd = phi.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::RankDeficient { cond });
    }
    let theta = svd
        .solve(&y, 0.0)
        .map_err(|_| Error::RankDeficient { cond })?;
    let t = |r: usize, c: usize| theta[(r, c)] / scale[r];
    let a_d = [[t(0, 0), t(1, 0)], [t(0, 1), t(1, 1)]];
    let b_d = [t(2, 0), t(2, 1)];
    Ok(DiscreteFit {
        eigenvalues: complex_eigen2(&a_d),
        a_d,
        b_d,
        condition: cond,
    })
}

/// Eigenvalues of a complex 2×2 matrix, larger magnitude first.
pub fn complex_eigen2(a: &[[Complex64; 2]; 2]) -> [Complex64; 2] {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let sq = (tr * tr - 4.0 * det).sqrt();
    let (p, m) = (tr + sq, tr - sq);
    let q = 0.5 * if p.norm() >= m.norm() { p } else { m };
    if q.norm() == 0.0 {
        return [q, q];
    }
    [q, det / q]
}

pub fn estimate_discrete_ls(window: &[PhasorSample], rate: f64, raw: bool) -> Result<EigenSample> {
    let fit = fit_discrete_map(window)?;
    let mapped: Vec<(Complex64, Complex64)> = fit
        .eigenvalues
        .iter()
        .filter(|mu| mu.norm() > 0.0)
        .map(|mu| (*mu, rate * mu.ln()))
        .collect();
    let (mu, lam) = mapped
        .into_iter()
        .min_by(|a, b| a.1.im.total_cmp(&b.1.im))
        .ok_or(Error::RankDeficient { cond: fit.condition })?;
    Ok(EigenSample {
        t: window.last().expect("non-empty").t,
        lambda: Some(if raw { rate * mu } else { lam }),
        strategy: Strategy::DiscreteLs,
    })
}

/// Slide the estimator over a phasor stream.
pub struct EigenEstimator {
    cfg: EstimatorConfig,
    line: LineParams,
}

impl EigenEstimator {
    pub fn new(cfg: EstimatorConfig, line: LineParams) -> Result<EigenEstimator> {
        cfg.validate()?;
        line.validate()?;
        Ok(EigenEstimator { cfg, line })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn estimate(&self, window: &[PhasorSample]) -> Result<EigenSample> {
        match self.cfg.strategy {
            Strategy::Impedance => estimate_impedance(window, &self.line, &self.cfg),
            Strategy::DiscreteLs => {
                let rate = window.first().map_or(1.0, |s| s.rate);
                estimate_discrete_ls(window, rate, self.cfg.raw_discrete)
            }
        }
    }

    /// Estimates for every full window, in input order. Withheld windows
    /// appear with `lambda = None`; other errors abort.
    pub fn run(&self, phasors: &[PhasorSample]) -> Result<Vec<EigenSample>> {
        let w = self.cfg.window_len;
        if phasors.len() < w {
            return Ok(Vec::new());
        }
        (w - 1..phasors.len())
            .step_by(self.cfg.stride)
            .map(|end| {
                let window = &phasors[end + 1 - w..=end];
                match self.estimate(window) {
                    Ok(s) => Ok(s),
                    Err(e) if e.is_withheld() => Ok(EigenSample {
                        t: window[w - 1].t,
                        lambda: None,
                        strategy: self.cfg.strategy,
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect()
    }
}

/// Eigen trajectory CSV: `t, re, im, mag, angle_deg, strategy, withheld_flag`.
pub fn write_eigen_csv<W: Write>(out: W, samples: &[EigenSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "re", "im", "mag", "angle_deg", "strategy", "withheld_flag"])?;
    for s in samples {
        let rec = match s.lambda {
            Some(l) => [
                s.t.to_string(),
                l.re.to_string(),
                l.im.to_string(),
                l.norm().to_string(),
                angle_deg(l).to_string(),
                s.strategy.as_str().to_string(),
                "0".to_string(),
            ],
            None => [
                s.t.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                s.strategy.as_str().to_string(),
                "1".to_string(),
            ],
        };
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
