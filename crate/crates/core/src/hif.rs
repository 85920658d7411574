//! Anti-parallel source-diode model of a high-impedance arcing fault.
//!
//! The branch voltage is
//!
//! ```text
//! w(i) = R_p i sgp(i) + v_p sgp(i) + R_n i (1 - sgp(i)) + v_n sgn(i)
//! ```
//!
//! with `sgp(i) = 1` for `i > 0` (else 0) and `sgn(i) = -1` for `i <= 0`
//! (else 0). `v_p` and `v_n` are arc thresholds that oppose conduction, so
//! the branch conducts forward once the driving voltage exceeds `v_p`,
//! backward once it falls below `-v_n`, and is open in between.
//! `R_p` and `R_n` wander as clamped Gaussian processes updated every `tau`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::{LineParams, NO_FAULT_OHMS};
use crate::error::{Error, Result};
use crate::waveform::{FaultModel, FaultSchedule, LoadProfile, SimSetup, Simulator};

/// How the half-cycle resistances evolve between updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResistanceProcess {
    /// Clamped Gaussian random walk.
    #[default]
    Walk,
    /// Independent clamped Gaussian draws around the bound midpoint.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HifParams {
    /// (min, max) resistance for positive half-cycles (ohm).
    pub r_p_bounds: (f64, f64),
    /// (min, max) resistance for negative half-cycles (ohm).
    pub r_n_bounds: (f64, f64),
    /// Positive arc threshold (volt).
    pub v_p: f64,
    /// Negative arc threshold (volt).
    pub v_n: f64,
    /// Resistance update interval (second).
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Standard deviation of each resistance step (ohm).
    pub sigma_step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub process: ResistanceProcess,
}

fn default_tau() -> f64 {
    2e-3
}

impl HifParams {
    /// Linear resistive branch: `w(i) = W i` exactly.
    pub fn linear(w: f64) -> HifParams {
        HifParams {
            r_p_bounds: (w, w),
            r_n_bounds: (w, w),
            v_p: 0.0,
            v_n: 0.0,
            tau: default_tau(),
            sigma_step: 0.0,
            seed: 0,
            process: ResistanceProcess::Walk,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("r_p_bounds", self.r_p_bounds), ("r_n_bounds", self.r_n_bounds)] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must satisfy 0 < min <= max, got ({lo}, {hi})"
                )));
            }
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be > 0".into()));
        }
        if !(self.sigma_step >= 0.0) {
            return Err(Error::InvalidParameter("sigma_step must be >= 0".into()));
        }
        if !(self.v_p >= 0.0 && self.v_n >= 0.0) {
            return Err(Error::InvalidParameter("arc voltages must be >= 0".into()));
        }
        Ok(())
    }

    /// Scale both resistance ranges and the step size by `k`.
    pub fn scaled(&self, k: f64) -> HifParams {
        HifParams {
            r_p_bounds: (self.r_p_bounds.0 * k, self.r_p_bounds.1 * k),
            r_n_bounds: (self.r_n_bounds.0 * k, self.r_n_bounds.1 * k),
            sigma_step: self.sigma_step * k,
            ..*self
        }
    }
}

/// Indicator of the positive half-cycle: 1 iff `i > 0`.
pub fn sgp(i: f64) -> i32 {
    if i > 0.0 {
        1
    } else {
        0
    }
}

/// Indicator of the negative half-cycle: -1 iff `i <= 0`, else 0.
pub fn sgn_arc(i: f64) -> i32 {
    if i > 0.0 {
        0
    } else {
        -1
    }
}

/// Current resistances plus the RNG driving their evolution.
#[derive(Debug, Clone)]
pub struct HifState {
    pub r_p_current: f64,
    pub r_n_current: f64,
    pub next_update_time: f64,
    rng: ChaCha8Rng,
}

fn midpoint((lo, hi): (f64, f64)) -> f64 {
    0.5 * (lo + hi)
}

impl HifState {
    pub fn new(params: &HifParams) -> HifState {
        Self::with_seed(params, params.seed)
    }

    pub fn with_seed(params: &HifParams, seed: u64) -> HifState {
        HifState {
            r_p_current: midpoint(params.r_p_bounds),
            r_n_current: midpoint(params.r_n_bounds),
            next_update_time: params.tau,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Advance the resistance processes to time `t`.
    pub fn advance(&mut self, params: &HifParams, t: f64) {
        while t >= self.next_update_time {
            let (dp, dn) = if params.sigma_step > 0.0 {
                let normal = Normal::new(0.0, params.sigma_step).expect("finite sigma");
                (normal.sample(&mut self.rng), normal.sample(&mut self.rng))
            } else {
                (0.0, 0.0)
            };
            let (base_p, base_n) = match params.process {
                ResistanceProcess::Walk => (self.r_p_current, self.r_n_current),
                ResistanceProcess::Iid => (midpoint(params.r_p_bounds), midpoint(params.r_n_bounds)),
            };
            self.r_p_current = (base_p + dp).clamp(params.r_p_bounds.0, params.r_p_bounds.1);
            self.r_n_current = (base_n + dn).clamp(params.r_n_bounds.0, params.r_n_bounds.1);
            self.next_update_time += params.tau;
        }
    }
}

/// Value-style wrapper around [`HifState::advance`].
pub fn step_resistances(mut state: HifState, params: &HifParams, t: f64) -> HifState {
    state.advance(params, t);
    state
}

/// Branch voltage for a given branch current.
pub fn fault_branch_voltage(i: f64, state: &HifState, params: &HifParams) -> f64 {
    let p = sgp(i) as f64;
    let n = sgn_arc(i) as f64;
    state.r_p_current * i * p + params.v_p * p + state.r_n_current * i * (1.0 - p) + params.v_n * n
}

/// Which piece of the piecewise-linear branch law is conducting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSegment {
    Forward,
    Reverse,
    Open,
}

/// Instantaneous branch law frozen at one time step. The branch hangs off
/// a node fed through `r_source` from an open-circuit voltage `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchLaw {
    pub r_p: f64,
    pub r_n: f64,
    pub v_p: f64,
    pub v_n: f64,
}

impl BranchLaw {
    pub fn no_fault() -> BranchLaw {
        Self::resistive(NO_FAULT_OHMS)
    }

    pub fn resistive(w: f64) -> BranchLaw {
        BranchLaw {
            r_p: w,
            r_n: w,
            v_p: 0.0,
            v_n: 0.0,
        }
    }

    pub fn from_state(state: &HifState, params: &HifParams) -> BranchLaw {
        BranchLaw {
            r_p: state.r_p_current,
            r_n: state.r_n_current,
            v_p: params.v_p,
            v_n: params.v_n,
        }
    }

    /// Segment consistent with open-circuit voltage `u`.
    pub fn segment_for(&self, u: f64) -> BranchSegment {
        if u > self.v_p {
            BranchSegment::Forward
        } else if u <= -self.v_n {
            BranchSegment::Reverse
        } else {
            BranchSegment::Open
        }
    }

    /// `(g, e)` such that the branch current is `g (u - e)` on `seg`.
    pub fn linearized(&self, seg: BranchSegment, r_source: f64) -> (f64, f64) {
        match seg {
            BranchSegment::Forward => (1.0 / (r_source + self.r_p), self.v_p),
            BranchSegment::Reverse => (1.0 / (r_source + self.r_n), -self.v_n),
            BranchSegment::Open => (0.0, 0.0),
        }
    }

    pub fn current(&self, u: f64, r_source: f64) -> f64 {
        let (g, e) = self.linearized(self.segment_for(u), r_source);
        g * (u - e)
    }
}

/// Knobs for [`calibrate_to_target`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Search range for the resistance multiplier.
    pub multiplier_range: (f64, f64),
    /// Relative RMS error at which bisection stops.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub f_sim: f64,
    /// Load power factor used for the calibration run.
    pub load_power_factor: f64,
    /// Cycles simulated before the fault is applied.
    pub settle_cycles: usize,
    /// Faulted cycles; the first `skip_cycles` of them are not measured.
    pub fault_cycles: usize,
    pub skip_cycles: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            multiplier_range: (1e-3, 1e3),
            rel_tol: 2e-3,
            max_iter: 80,
            f_sim: crate::waveform::DEFAULT_F_SIM,
            load_power_factor: crate::waveform::DEFAULT_LOAD_PF,
            settle_cycles: 6,
            fault_cycles: 60,
            skip_cycles: 6,
        }
    }
}

/// Steady-fault RMS of the branch current at unity load, measured on the
/// full waveform simulator.
pub fn simulated_fault_rms(params: &HifParams, line: &LineParams, opts: &CalibrationOptions) -> Result<f64> {
    let period = 1.0 / line.f_nominal;
    let onset = opts.settle_cycles as f64 * period;
    let fault_len = opts.fault_cycles as f64 * period;
    let setup = SimSetup {
        line: *line,
        load: LoadProfile::flat(),
        load_power_factor: opts.load_power_factor,
        hour_length: 3600.0,
        fault: Some(FaultModel::Hif(*params)),
        schedule: FaultSchedule::single(onset, fault_len),
        f_sim: opts.f_sim,
        duration: onset + fault_len,
        seed: 0,
    };
    let from = onset + opts.skip_cycles as f64 * period;
    let mut sum = 0.0;
    let mut n = 0usize;
    for frame in Simulator::new(&setup)? {
        let frame = frame?;
        if frame.t >= from && frame.fault_active {
            sum += frame.i_fault * frame.i_fault;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Config("calibration window is empty".into()));
    }
    Ok((sum / n as f64).sqrt())
}

/// Scale the resistance ranges of `params` so that the steady fault current
/// on `line` has RMS `target_rms`. Bisection on the log of the multiplier;
/// fault RMS falls monotonically as resistance grows.
pub fn calibrate_to_target(
    params: &HifParams,
    target_rms: f64,
    line: &LineParams,
    opts: &CalibrationOptions,
) -> Result<HifParams> {
    if !(target_rms > 0.0) {
        return Err(Error::InvalidParameter("target RMS must be > 0".into()));
    }
    params.validate()?;
    let rms_at = |k: f64| simulated_fault_rms(&params.scaled(k), line, opts);

    let (mut lo, mut hi) = opts.multiplier_range;
    let rms_lo = rms_at(lo)?;
    let rms_hi = rms_at(hi)?;
    if !(rms_hi <= target_rms && target_rms <= rms_lo) {
        return Err(Error::Calibration {
            target: target_rms,
            low: rms_hi,
            high: rms_lo,
        });
    }
    let mut best = (lo, rms_lo);
    for _ in 0..opts.max_iter {
        let mid = (lo * hi).sqrt();
        let rms = rms_at(mid)?;
        if (rms - target_rms).abs() < (best.1 - target_rms).abs() {
            best = (mid, rms);
        }
        if ((rms - target_rms) / target_rms).abs() <= opts.rel_tol {
            break;
        }
        if rms > target_rms {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(params.scaled(best.0))
}
