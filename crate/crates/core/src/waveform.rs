//! Point-on-wave simulation of the line section.
//!
//! Topology: ideal source `v_s` → series `R` → node `m` → series `L` →
//! receiving node `r`. At `r` a shunt `C` sits in parallel with a
//! constant-impedance R-L load whose admittance follows the hourly
//! profile. The fault branch hangs off node `m`, which makes `R` and the
//! branch a divider exactly as in the faulted state matrix.
//!
//! States are `[i_L, v_c, i_load]`; integration is trapezoidal. The fault
//! branch is piecewise linear, so each step solves the linear system for
//! the segment used last, checks the resulting node voltage against that
//! segment and re-solves on the implied one when it disagrees.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::LineParams;
use crate::error::{Error, Result};
use crate::hif::{BranchLaw, BranchSegment, HifParams, HifState};

/// 128 samples per 60 Hz cycle.
pub const DEFAULT_F_SIM: f64 = 7680.0;
pub const DEFAULT_LOAD_PF: f64 = 0.98;
/// Compressed-day length of one simulated hour (second).
pub const DEFAULT_HOUR_LENGTH: f64 = 10.0;
const INSTABILITY_FACTOR: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Step,
    #[default]
    Linear,
}

/// Hourly load multipliers applied to the base load admittance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub multipliers: Vec<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl Default for LoadProfile {
    /// Residential-commercial day shape normalized to a peak of 1.0 at 15:00.
    fn default() -> Self {
        LoadProfile {
            multipliers: vec![
                0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.68, 0.75, 0.80, 0.84, 0.88, 0.92, 0.95, 0.97,
                0.99, 1.00, 0.99, 0.96, 0.93, 0.90, 0.85, 0.78, 0.71, 0.66,
            ],
            interpolation: Interpolation::Linear,
        }
    }
}

impl LoadProfile {
    pub fn flat() -> LoadProfile {
        LoadProfile {
            multipliers: vec![1.0; 24],
            interpolation: Interpolation::Step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.multipliers.len() != 24 {
            return Err(Error::InvalidParameter(format!(
                "load profile needs 24 hourly multipliers, got {}",
                self.multipliers.len()
            )));
        }
        if let Some(m) = self.multipliers.iter().find(|m| !(**m > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "load multipliers must be > 0, got {m}"
            )));
        }
        Ok(())
    }

    /// Multiplier at simulated time `t` when each hour lasts `hour_length`.
    pub fn multiplier(&self, t: f64, hour_length: f64) -> f64 {
        let pos = (t / hour_length).max(0.0);
        let h = pos.floor() as usize;
        let cur = self.multipliers[h % 24];
        match self.interpolation {
            Interpolation::Step => cur,
            Interpolation::Linear => {
                let next = self.multipliers[(h + 1) % 24];
                cur + (next - cur) * (pos - h as f64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultInterval {
    pub start: f64,
    pub duration: f64,
}

impl FaultInterval {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FaultSchedule {
    pub intervals: Vec<FaultInterval>,
}

impl FaultSchedule {
    pub fn none() -> FaultSchedule {
        FaultSchedule::default()
    }

    pub fn single(start: f64, duration: f64) -> FaultSchedule {
        FaultSchedule {
            intervals: vec![FaultInterval { start, duration }],
        }
    }

    /// One fault per compressed hour, `offset` seconds into each listed hour.
    pub fn hourly(hours: impl IntoIterator<Item = usize>, hour_length: f64, offset: f64, duration: f64) -> FaultSchedule {
        FaultSchedule {
            intervals: hours
                .into_iter()
                .map(|h| FaultInterval {
                    start: h as f64 * hour_length + offset,
                    duration,
                })
                .collect(),
        }
    }

    pub fn active(&self, t: f64) -> bool {
        self.intervals.iter().any(|f| f.contains(t))
    }
}

/// What the ground branch at node `m` looks like while a fault is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FaultModel {
    Hif(HifParams),
    Resistive { ohms: f64 },
}

/// Base R-L load (at multiplier 1) that draws `i_nominal` from the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadBase {
    pub r: f64,
    pub l: f64,
}

impl LoadBase {
    /// Solve for the load impedance magnitude at power factor `pf` that makes
    /// the healthy sending-end current equal `i_nominal`.
    pub fn for_nominal(line: &LineParams, pf: f64) -> Result<LoadBase> {
        // The load branch carries an inductor state, so pf = 1 is excluded.
        if !(pf > 0.0 && pf < 1.0) {
            return Err(Error::InvalidParameter(format!("load power factor must be in (0, 1), got {pf}")));
        }
        let w = line.omega();
        let sin = (1.0 - pf * pf).sqrt();
        let current = |zmag: f64| {
            let base = LoadBase {
                r: zmag * pf,
                l: zmag * sin / w,
            };
            steady_state(line, &base, 1.0, None).i_send.norm()
        };
        let scale = line.v_nominal.max(1e-12) / line.i_nominal;
        let (mut lo, mut hi) = (1e-6 * scale, 1e6 * scale);
        let target = line.i_nominal;
        if line.v_nominal == 0.0 {
            return Ok(LoadBase { r: scale * pf, l: scale * sin / w });
        }
        if !(current(lo) > target && current(hi) < target) {
            return Err(Error::InvalidParameter(
                "no load impedance reaches i_nominal for this line (check R, L, C and v_nominal)".into(),
            ));
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if current(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-14 {
                break;
            }
        }
        let z = (lo * hi).sqrt();
        Ok(LoadBase {
            r: z * pf,
            l: z * sin / w,
        })
    }

    pub fn impedance(&self, multiplier: f64, omega: f64) -> Complex64 {
        Complex64::new(self.r, omega * self.l) / multiplier
    }
}

/// RMS phasors of the sinusoidal steady state (cosine reference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub v_send: Complex64,
    pub i_send: Complex64,
    pub i_line: Complex64,
    pub v_recv: Complex64,
    pub i_recv: Complex64,
}

/// Phasor solution with an optional linear fault resistance at node `m`.
pub fn steady_state(line: &LineParams, load: &LoadBase, multiplier: f64, fault_ohms: Option<f64>) -> SteadyState {
    let w = line.omega();
    let j = Complex64::i();
    let z_load = load.impedance(multiplier, w);
    let z_cap = 1.0 / (j * w * line.c_shunt);
    let z_par = z_load * z_cap / (z_load + z_cap);
    let z_right = j * w * line.l_series + z_par;
    let z_m = match fault_ohms {
        Some(f) => z_right * f / (z_right + f),
        None => z_right,
    };
    let vs = Complex64::new(line.v_nominal, 0.0);
    let i_send = vs / (line.r_series + z_m);
    let v_m = vs - line.r_series * i_send;
    let i_line = v_m / z_right;
    let v_recv = i_line * z_par;
    SteadyState {
        v_send: vs,
        i_send,
        i_line,
        v_recv,
        i_recv: v_recv / z_load,
    }
}

/// Everything needed for one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub line: LineParams,
    pub load: LoadProfile,
    pub load_power_factor: f64,
    pub hour_length: f64,
    pub fault: Option<FaultModel>,
    pub schedule: FaultSchedule,
    pub f_sim: f64,
    pub duration: f64,
    pub seed: u64,
}

/// Instantaneous quantities at both line ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformFrame {
    pub t: f64,
    pub v_send: f64,
    pub i_send: f64,
    pub v_recv: f64,
    pub i_recv: f64,
    pub fault_active: bool,
    /// Current into the fault branch (not part of the CSV dump).
    pub i_fault: f64,
}

/// Streaming trapezoidal integrator; yields one frame per time step,
/// starting with the initial state at `t = 0`.
pub struct Simulator {
    line: LineParams,
    load: LoadProfile,
    load_base: LoadBase,
    hour_length: f64,
    fault: Option<FaultModel>,
    hif_state: Option<HifState>,
    schedule: FaultSchedule,
    h: f64,
    f_sim: f64,
    n: u64,
    n_total: u64,
    x: Vector3<f64>,
    deriv: Vector3<f64>,
    segment: BranchSegment,
    limit_i: f64,
    limit_v: f64,
    failed: bool,
    started: bool,
}

struct StepModel {
    a: Matrix3<f64>,
    b: Vector3<f64>,
    g: f64,
    e: f64,
}

impl Simulator {
    pub fn new(setup: &SimSetup) -> Result<Simulator> {
        let line = setup.line;
        line.validate()?;
        setup.load.validate()?;
        if let Some(FaultModel::Hif(p)) = &setup.fault {
            p.validate()?;
        }
        if let Some(FaultModel::Resistive { ohms }) = setup.fault {
            if !(ohms >= 0.0) || line.r_series + ohms == 0.0 {
                return Err(Error::InvalidParameter(format!("invalid fault resistance {ohms}")));
            }
        }
        let per_cycle = setup.f_sim / line.f_nominal;
        if !(per_cycle >= 64.0 - 1e-9) {
            return Err(Error::Config(format!(
                "f_sim must give at least 64 samples per cycle, got {per_cycle:.1}"
            )));
        }
        if !(setup.duration > 0.0) {
            return Err(Error::Config("duration must be > 0".into()));
        }
        if !(setup.hour_length > 0.0) {
            return Err(Error::Config("hour length must be > 0".into()));
        }
        let load_base = LoadBase::for_nominal(&line, setup.load_power_factor)?;
        let hif_state = match &setup.fault {
            Some(FaultModel::Hif(p)) => Some(HifState::with_seed(p, p.seed ^ setup.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))),
            _ => None,
        };
        let m0 = setup.load.multiplier(0.0, setup.hour_length);
        let ss = steady_state(&line, &load_base, m0, None);
        let s2 = std::f64::consts::SQRT_2;
        let x = Vector3::new(s2 * ss.i_line.re, s2 * ss.v_recv.re, s2 * ss.i_recv.re);
        let mut sim = Simulator {
            line,
            load: setup.load.clone(),
            load_base,
            hour_length: setup.hour_length,
            fault: setup.fault,
            hif_state,
            schedule: setup.schedule.clone(),
            h: 1.0 / setup.f_sim,
            f_sim: setup.f_sim,
            n: 0,
            n_total: (setup.duration * setup.f_sim).round() as u64,
            x,
            deriv: Vector3::zeros(),
            segment: BranchSegment::Forward,
            limit_i: INSTABILITY_FACTOR * line.i_nominal * s2,
            limit_v: INSTABILITY_FACTOR * line.v_nominal.max(1.0) * s2,
            failed: false,
            started: false,
        };
        // Settle the branch segment and derivative at t = 0.
        let (seg, model) = sim.consistent_model_at(0.0, &sim.x.clone());
        sim.segment = seg;
        sim.deriv = model.a * sim.x + model.b;
        Ok(sim)
    }

    pub fn load_base(&self) -> LoadBase {
        self.load_base
    }

    pub fn source_voltage(&self, t: f64) -> f64 {
        std::f64::consts::SQRT_2 * self.line.v_nominal * (self.line.omega() * t).cos()
    }

    fn law_at(&mut self, t: f64) -> (BranchLaw, bool) {
        let active = self.fault.is_some() && self.schedule.active(t);
        if let Some(FaultModel::Hif(p)) = &self.fault {
            let state = self.hif_state.as_mut().expect("hif state exists for hif fault");
            state.advance(p, t);
            if active {
                return (BranchLaw::from_state(state, p), true);
            }
        }
        match (active, self.fault) {
            (true, Some(FaultModel::Resistive { ohms })) => (BranchLaw::resistive(ohms), true),
            _ => (BranchLaw::no_fault(), false),
        }
    }

    fn model(&self, t: f64, law: &BranchLaw, seg: BranchSegment) -> StepModel {
        let r = self.line.r_series;
        let l = self.line.l_series;
        let c = self.line.c_shunt;
        let m = self.load.multiplier(t, self.hour_length);
        let r_ld = self.load_base.r / m;
        let l_ld = self.load_base.l / m;
        let (g, e) = law.linearized(seg, r);
        let k = 1.0 - r * g;
        let vs = self.source_voltage(t);
        let a = Matrix3::new(
            -r * k / l, -1.0 / l, 0.0,
            1.0 / c, 0.0, -1.0 / c,
            0.0, 1.0 / l_ld, -r_ld / l_ld,
        );
        let b = Vector3::new((k * vs + r * g * e) / l, 0.0, 0.0);
        StepModel { a, b, g, e }
    }

    fn consistent_model_at(&mut self, t: f64, x: &Vector3<f64>) -> (BranchSegment, StepModel) {
        let (law, _) = self.law_at(t);
        let u = self.source_voltage(t) - self.line.r_series * x[0];
        let seg = law.segment_for(u);
        (seg, self.model(t, &law, seg))
    }

    fn frame(&self, t: f64, x: &Vector3<f64>, model: &StepModel, active: bool) -> WaveformFrame {
        let vs = self.source_voltage(t);
        let u = vs - self.line.r_series * x[0];
        let i_fault = model.g * (u - model.e);
        WaveformFrame {
            t,
            v_send: vs,
            i_send: x[0] + i_fault,
            v_recv: x[1],
            i_recv: x[2],
            fault_active: active,
            i_fault,
        }
    }

    fn step(&mut self) -> Result<WaveformFrame> {
        let t1 = (self.n + 1) as f64 / self.f_sim;
        let (law, active) = self.law_at(t1);
        let half = 0.5 * self.h;
        let rhs0 = self.x + self.deriv * half;
        let vs1 = self.source_voltage(t1);

        let mut seg = self.segment;
        let mut solved = None;
        for _ in 0..3 {
            let model = self.model(t1, &law, seg);
            let lhs = Matrix3::identity() - model.a * half;
            let rhs = rhs0 + model.b * half;
            let x1 = lhs.lu().solve(&rhs).ok_or(Error::Instability { t: t1 })?;
            let implied = law.segment_for(vs1 - self.line.r_series * x1[0]);
            let done = implied == seg;
            solved = Some((seg, model, x1));
            if done {
                break;
            }
            seg = implied;
        }
        let (seg, model, x1) = solved.expect("at least one solve");
        if !(x1[0].abs() < self.limit_i && x1[2].abs() < self.limit_i && x1[1].abs() < self.limit_v) {
            return Err(Error::Instability { t: t1 });
        }
        self.deriv = model.a * x1 + model.b;
        self.x = x1;
        self.segment = seg;
        self.n += 1;
        Ok(self.frame(t1, &x1, &model, active))
    }
}

impl Iterator for Simulator {
    type Item = Result<WaveformFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if !self.started {
            self.started = true;
            let x = self.x;
            let (law, active) = self.law_at(0.0);
            let model = self.model(0.0, &law, self.segment);
            return Some(Ok(self.frame(0.0, &x, &model, active)));
        }
        if self.n >= self.n_total {
            return None;
        }
        match self.step() {
            Ok(f) => Some(Ok(f)),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Point-on-wave CSV: `t, v_send, i_send, v_recv, i_recv, fault_active`.
pub fn write_waveform_csv<W: Write>(out: W, frames: impl IntoIterator<Item = Result<WaveformFrame>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "v_send", "i_send", "v_recv", "i_recv", "fault_active"])?;
    for f in frames {
        let f = f?;
        w.write_record(&[
            f.t.to_string(),
            f.v_send.to_string(),
            f.i_send.to_string(),
            f.v_recv.to_string(),
            f.i_recv.to_string(),
            u8::from(f.fault_active).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum;

    fn line() -> LineParams {
        LineParams {
            r_series: 2.7,
            l_series: 0.0216,
            c_shunt: 12e-6,
            v_nominal: 2401.8,
            f_nominal: 60.0,
            i_nominal: 98.0,
        }
    }

    fn setup(fault: Option<FaultModel>, schedule: FaultSchedule, duration: f64, f_sim: f64) -> SimSetup {
        SimSetup {
            line: line(),
            load: LoadProfile::flat(),
            load_power_factor: 0.85,
            hour_length: 3600.0,
            fault,
            schedule,
            f_sim,
            duration,
            seed: 1,
        }
    }

    fn hif() -> HifParams {
        HifParams {
            r_p_bounds: (150.0, 170.0),
            r_n_bounds: (175.0, 200.0),
            v_p: 300.0,
            v_n: 700.0,
            tau: 2e-3,
            sigma_step: 0.0,
            seed: 3,
            process: crate::hif::ResistanceProcess::Walk,
        }
    }

    fn run(s: &SimSetup) -> Vec<WaveformFrame> {
        Simulator::new(s).unwrap().collect::<Result<Vec<_>>>().unwrap()
    }

    fn cycle_rms(frames: &[WaveformFrame], f: impl Fn(&WaveformFrame) -> f64) -> f64 {
        spectrum::rms(&frames.iter().map(f).collect::<Vec<_>>())
    }

    #[test]
    fn healthy_rms_matches_phasor_solution() {
        let s = setup(None, FaultSchedule::none(), 0.25, DEFAULT_F_SIM);
        let frames = run(&s);
        assert_eq!(frames.len(), 1921);
        assert!(frames.windows(2).all(|w| w[1].t > w[0].t));
        // independent phasor solution of R + jωL + (load ‖ C)
        let p = line();
        let base = LoadBase::for_nominal(&p, 0.85).unwrap();
        let w = p.omega();
        let zl = Complex64::new(base.r, w * base.l);
        let zc = Complex64::new(0.0, -1.0 / (w * p.c_shunt));
        let z_total = Complex64::new(p.r_series, w * p.l_series) + zl * zc / (zl + zc);
        let expected = p.v_nominal / z_total.norm();
        assert!((expected / p.i_nominal - 1.0).abs() < 1e-9);
        let tail = &frames[frames.len() - 128..];
        let got = cycle_rms(tail, |f| f.i_send);
        assert!((got / expected - 1.0).abs() < 5e-3, "rms {got} vs {expected}");
    }

    #[test]
    fn zero_source_stays_zero() {
        let mut s = setup(None, FaultSchedule::none(), 0.05, DEFAULT_F_SIM);
        s.line.v_nominal = 0.0;
        for f in run(&s) {
            assert_eq!((f.v_send, f.i_send, f.v_recv, f.i_recv), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn rejects_coarse_time_step() {
        let s = setup(None, FaultSchedule::none(), 0.05, 60.0 * 32.0);
        assert!(matches!(Simulator::new(&s), Err(Error::Config(_))));
    }

    #[test]
    fn energy_balance_per_cycle() {
        let s = setup(Some(FaultModel::Hif(hif())), FaultSchedule::single(0.05, 1.0), 0.3, DEFAULT_F_SIM);
        let frames = run(&s);
        let p = line();
        let h = 1.0 / DEFAULT_F_SIM;
        for start in [256usize, 1024, 2048] {
            let cyc = &frames[start..=start + 128];
            let trap = |g: &dyn Fn(&WaveformFrame) -> f64| -> f64 {
                cyc.windows(2).map(|w| 0.5 * h * (g(&w[0]) + g(&w[1]))).sum()
            };
            let e_in = trap(&|f| f.v_send * f.i_send);
            let e_r = trap(&|f| p.r_series * f.i_send * f.i_send);
            let e_fault = trap(&|f| (f.v_send - p.r_series * f.i_send) * f.i_fault);
            let e_out = trap(&|f| f.v_recv * f.i_recv);
            let il = |f: &WaveformFrame| f.i_send - f.i_fault;
            let (a, b) = (&cyc[0], &cyc[cyc.len() - 1]);
            let stored = 0.5 * p.l_series * (il(b).powi(2) - il(a).powi(2))
                + 0.5 * p.c_shunt * (b.v_recv.powi(2) - a.v_recv.powi(2));
            let residual = e_in - e_r - e_fault - e_out - stored;
            assert!(residual.abs() < 0.01 * e_in, "residual {residual} of {e_in}");
        }
    }

    #[test]
    fn halving_step_barely_moves_rms() {
        let sched = FaultSchedule::single(0.05, 1.0);
        let coarse = run(&setup(Some(FaultModel::Hif(hif())), sched.clone(), 0.2, DEFAULT_F_SIM));
        let fine = run(&setup(Some(FaultModel::Hif(hif())), sched, 0.2, 2.0 * DEFAULT_F_SIM));
        let a = cycle_rms(&coarse[coarse.len() - 128..], |f| f.i_send);
        let b = cycle_rms(&fine[fine.len() - 256..], |f| f.i_send);
        assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
        let a = cycle_rms(&coarse[coarse.len() - 128..], |f| f.i_fault);
        let b = cycle_rms(&fine[fine.len() - 256..], |f| f.i_fault);
        assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn harmonic_content_only_with_hif() {
        let clean = run(&setup(None, FaultSchedule::none(), 0.2, DEFAULT_F_SIM));
        let faulted = run(&setup(Some(FaultModel::Hif(hif())), FaultSchedule::single(0.0, 1.0), 0.2, DEFAULT_F_SIM));
        let ratio = |frames: &[WaveformFrame]| {
            let x: Vec<f64> = frames[frames.len() - 1280..].iter().map(|f| f.i_send).collect();
            let fund = spectrum::harmonic_rms(&x, 128, 1);
            (spectrum::harmonic_rms(&x, 128, 2) / fund, spectrum::harmonic_rms(&x, 128, 3) / fund)
        };
        let (h2, h3) = ratio(&clean);
        assert!(h2 + h3 < 1e-3, "clean {h2} {h3}");
        let (h2, h3) = ratio(&faulted);
        assert!(h2 > 1e-3 && h3 > 1e-3, "faulted {h2} {h3}");
    }

    #[test]
    fn onset_transient_is_short() {
        let onset = 0.1;
        let s = setup(Some(FaultModel::Hif(hif())), FaultSchedule::single(onset, 1.0), 0.4, DEFAULT_F_SIM);
        let frames = run(&s);
        let n0 = (onset * DEFAULT_F_SIM) as usize;
        // deviation from the periodic faulted waveform, measured one cycle ahead
        let peak = frames[n0..].iter().map(|f| f.i_send.abs()).fold(0.0, f64::max);
        let dev: Vec<f64> = (n0..n0 + 1280).map(|n| (frames[n].i_send - frames[n + 128].i_send).abs() / peak).collect();
        assert!(dev[..32].iter().cloned().fold(0.0, f64::max) > 1e-3, "no onset transient");
        let settled = dev.iter().rposition(|d| *d > 0.01).map_or(0, |k| k + 1);
        assert!((settled as f64) / DEFAULT_F_SIM < 0.010, "transient lasts {} ms", settled as f64 / DEFAULT_F_SIM * 1e3);
    }

    #[test]
    fn waveform_is_deterministic_and_csv_has_header() {
        let mut h = hif();
        h.sigma_step = 4.0;
        let s = setup(Some(FaultModel::Hif(h)), FaultSchedule::single(0.02, 0.05), 0.1, DEFAULT_F_SIM);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_waveform_csv(&mut a, Simulator::new(&s).unwrap()).unwrap();
        write_waveform_csv(&mut b, Simulator::new(&s).unwrap()).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("t,v_send,i_send,v_recv,i_recv,fault_active\n"));
        assert_eq!(text.lines().count(), 1 + 769);
    }

    #[test]
    fn load_profile_interpolation() {
        let mut p = LoadProfile::default();
        assert_eq!(p.multiplier(15.0 * 10.0, 10.0), 1.0);
        assert!((p.multiplier(15.5 * 10.0, 10.0) - 0.995).abs() < 1e-12);
        p.interpolation = Interpolation::Step;
        assert_eq!(p.multiplier(15.5 * 10.0, 10.0), 1.0);
        assert_eq!(p.multiplier(23.9 * 10.0 + 240.0, 10.0), 0.66);
        p.multipliers[3] = 0.0;
        assert!(p.validate().is_err());
    }
}
