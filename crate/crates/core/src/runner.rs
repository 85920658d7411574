//! End-to-end experiment runs: simulation → phasors → eigenvalues →
//! zones and alarms, with the overcurrent baseline on the same waveforms.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Polar;
use crate::error::{Error, Result};
use crate::estimator::{write_eigen_csv, EigenEstimator, EigenSample, EstimatorConfig, Strategy};
use crate::pmu::{write_phasor_csv, PhasorExtractor, PhasorSample, PmuConfig};
use crate::relay::{write_oc_csv, OcMonitor, OcOutcome};
use crate::scenario::Scenario;
use crate::spectrum::{harmonic_rms, mean, rms};
use crate::waveform::{FaultInterval, Simulator, WaveformFrame};
use crate::zone::{write_events_csv, write_zone_outlines, write_zone_snapshots, DetectionEvent, Detector, EventKind, Zone};

const NOISE_SEED_SALT: u64 = 0xA076_1D64_78BD_642F;

/// Fault-branch current content over one fault interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSpectrum {
    pub rms: f64,
    pub dc: f64,
    pub fundamental: f64,
    pub h2: f64,
    pub h3: f64,
}

impl FaultSpectrum {
    fn of(samples: &[f64], per_cycle: usize) -> Option<FaultSpectrum> {
        // Skip the first cycle and keep whole cycles only.
        let cycles = (samples.len() / per_cycle).checked_sub(1)?;
        if cycles == 0 {
            return None;
        }
        let x = &samples[per_cycle..per_cycle * (cycles + 1)];
        Some(FaultSpectrum {
            rms: rms(x),
            dc: mean(x),
            fundamental: harmonic_rms(x, per_cycle, 1),
            h2: harmonic_rms(x, per_cycle, 2),
            h3: harmonic_rms(x, per_cycle, 3),
        })
    }

    fn average(all: &[FaultSpectrum]) -> Option<FaultSpectrum> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        let avg = |f: fn(&FaultSpectrum) -> f64| all.iter().map(f).sum::<f64>() / n;
        Some(FaultSpectrum {
            rms: avg(|s| s.rms),
            dc: avg(|s| s.dc),
            fundamental: avg(|s| s.fundamental),
            h2: avg(|s| s.h2),
            h3: avg(|s| s.h3),
        })
    }
}

/// Mean and spread of a set of eigenvalue estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenStats {
    pub count: usize,
    pub mean_re: f64,
    pub mean_im: f64,
    pub mean_polar: Polar,
    /// Root-mean-square distance from the mean.
    pub std: f64,
    pub mean_magnitude: f64,
}

impl EigenStats {
    pub fn of(values: &[Complex64]) -> Option<EigenStats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mu = values.iter().sum::<Complex64>() / n;
        let var = values.iter().map(|z| (z - mu).norm_sqr()).sum::<f64>() / n;
        Some(EigenStats {
            count: values.len(),
            mean_re: mu.re,
            mean_im: mu.im,
            mean_polar: Polar::of(mu),
            std: var.sqrt(),
            mean_magnitude: values.iter().map(|z| z.norm()).sum::<f64>() / n,
        })
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.mean_re, self.mean_im)
    }
}

fn lambdas_in(eigen: &[EigenSample], from: f64, to: f64) -> Vec<Complex64> {
    eigen
        .iter()
        .filter(|s| s.t >= from && s.t < to)
        .filter_map(|s| s.lambda)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultOutcome {
    pub index: usize,
    pub hour: usize,
    pub start: f64,
    pub end: f64,
    pub detected: bool,
    pub alarm_t: Option<f64>,
    pub latency: Option<f64>,
    pub cleared: bool,
    pub pre_fault: Option<EigenStats>,
    pub in_fault: Option<EigenStats>,
    /// |in-fault mean − pre-fault mean| in pre-fault standard deviations.
    pub excursion_sigmas: Option<f64>,
    pub relay_secondary: Option<f64>,
    pub spectrum: Option<FaultSpectrum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub rate: f64,
    pub snr_db: f64,
    pub strategy: Strategy,
    pub raw_discrete: bool,
    pub window_len: usize,
    pub i_nominal: f64,
    pub hours: usize,
    pub hour_length: f64,
    pub f_sim: f64,
    pub simulated_seconds: f64,
    pub frames: usize,
    pub phasor_reports: usize,
    pub estimates: usize,
    pub withheld: usize,
    pub zone_refits: usize,
    pub faults: Vec<FaultOutcome>,
    pub detected: usize,
    pub missed: usize,
    pub false_alarms: usize,
    pub false_alarm_times: Vec<f64>,
    pub events: usize,
    /// No fault scheduled and no event raised.
    pub clean: bool,
    pub relay: OcOutcome,
    pub fault_current: Option<FaultSpectrum>,
    pub healthy: Option<EigenStats>,
}

impl RunReport {
    pub fn all_detected(&self) -> bool {
        self.missed == 0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned plain-text summary.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "scenario {}  seed {}  rate {} Hz  SNR {} dB  strategy {}{}  window {}",
            self.scenario,
            self.seed,
            self.rate,
            self.snr_db,
            self.strategy.as_str(),
            if self.raw_discrete { " (raw)" } else { "" },
            self.window_len
        );
        let _ = writeln!(
            s,
            "simulated {:.1} s at {} Hz ({} frames), {} reports, {} estimates ({} withheld), {} zone fits",
            self.simulated_seconds, self.f_sim, self.frames, self.phasor_reports, self.estimates, self.withheld, self.zone_refits
        );
        s.push('\n');
        let _ = writeln!(s, "Fault magnitudes");
        let _ = writeln!(s, "  {:<22}{:>10.2} A", "nominal", self.i_nominal);
        if let Some(f) = &self.fault_current {
            let _ = writeln!(s, "  {:<22}{:>10.2} A", "fault RMS", f.rms);
            let _ = writeln!(s, "  {:<22}{:>10.3} A", "DC", f.dc);
            let _ = writeln!(s, "  {:<22}{:>10.3} A", "2nd harmonic", f.h2);
            let _ = writeln!(s, "  {:<22}{:>10.3} A", "3rd harmonic", f.h3);
        }
        s.push('\n');
        let r = &self.relay;
        let _ = writeln!(s, "Overcurrent relay");
        let _ = writeln!(s, "  {:<22}{:>10.2} A", "pickup", r.settings.pickup);
        let _ = writeln!(s, "  {:<22}{:>10}", "CT ratio", r.settings.ct_label());
        let _ = writeln!(s, "  {:<22}{:>10.3} A", "tap", r.settings.tap);
        if let Some(max) = r.fault_secondary.iter().copied().reduce(f64::max) {
            let _ = writeln!(s, "  {:<22}{:>10.3} A", "fault at relay (max)", max);
        }
        let _ = writeln!(s, "  {:<22}{:>10.3}", "max M", r.max_m);
        let _ = writeln!(s, "  {:<22}{:>10}", "tripped", r.tripped);
        s.push('\n');
        let _ = writeln!(
            s,
            "Detection: {}/{} faults detected, {} missed, {} false alarms{}",
            self.detected,
            self.faults.len(),
            self.missed,
            self.false_alarms,
            if self.clean { " (clean run)" } else { "" }
        );
        if let Some(h) = &self.healthy {
            let _ = writeln!(
                s,
                "Healthy eigenvalue: {:.2}∠{:.1}  std {:.3}",
                h.mean_polar.magnitude, h.mean_polar.angle_deg, h.std
            );
        }
        if !self.faults.is_empty() {
            s.push('\n');
            let _ = writeln!(
                s,
                "{:>4} {:>8} {:>9} {:>8}  {:>20} {:>9}  {:>20} {:>9} {:>9} {:>8} {:>8}",
                "hour", "start", "alarm", "latency", "pre mean", "pre std", "fault mean", "fault std", "excursion", "relay A", "detected"
            );
            let polar = |p: &Option<EigenStats>| {
                p.map(|e| format!("{:.2}∠{:.1}", e.mean_polar.magnitude, e.mean_polar.angle_deg))
                    .unwrap_or_else(|| "-".into())
            };
            let num = |v: Option<f64>, d: usize| v.map(|x| format!("{x:.d$}")).unwrap_or_else(|| "-".into());
            for f in &self.faults {
                let _ = writeln!(
                    s,
                    "{:>4} {:>8.2} {:>9} {:>8}  {:>20} {:>9}  {:>20} {:>9} {:>9} {:>8} {:>8}",
                    f.hour,
                    f.start,
                    num(f.alarm_t, 3),
                    num(f.latency, 3),
                    polar(&f.pre_fault),
                    num(f.pre_fault.map(|e| e.std), 3),
                    polar(&f.in_fault),
                    num(f.in_fault.map(|e| e.std), 3),
                    num(f.excursion_sigmas, 1),
                    num(f.relay_secondary, 3),
                    if f.detected { "yes" } else { "no" },
                );
            }
        }
        s
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub report: RunReport,
    pub phasors: Vec<PhasorSample>,
    pub eigen: Vec<EigenSample>,
    pub events: Vec<DetectionEvent>,
    pub zones: Vec<Vec<Zone>>,
}

impl RunOutputs {
    /// Write all CSV and report files into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let file = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        write_phasor_csv(file("phasors.csv")?, &self.phasors)?;
        write_eigen_csv(file("eigen.csv")?, &self.eigen)?;
        write_events_csv(file("events.csv")?, &self.events)?;
        write_zone_snapshots(file("zones.txt")?, &self.zones)?;
        write_zone_outlines(file("zone_outlines.csv")?, &self.zones, 72)?;
        write_oc_csv(file("oc.csv")?, &self.report.relay)?;
        let mut json = file("report.json")?;
        json.write_all(self.report.to_json()?.as_bytes())?;
        json.write_all(b"\n")?;
        json.flush()?;
        let mut txt = file("report.txt")?;
        txt.write_all(self.report.to_table().as_bytes())?;
        txt.flush()?;
        Ok(())
    }

    /// Only the plot-ready files: eigen trajectory and zone outlines.
    pub fn write_plot_data(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_eigen_csv(BufWriter::new(File::create(dir.join("eigen.csv"))?), &self.eigen)?;
        write_zone_outlines(BufWriter::new(File::create(dir.join("zone_outlines.csv"))?), &self.zones, 180)?;
        Ok(())
    }
}

/// Products of one simulation pass.
struct SimProducts {
    phasors: Vec<Vec<PhasorSample>>,
    relay: OcOutcome,
    spectra: Vec<FaultSpectrum>,
    frames: usize,
}

fn noise_seed(seed: u64) -> u64 {
    seed.wrapping_mul(NOISE_SEED_SALT) ^ 0x5EED
}

fn simulate(s: &Scenario, rates: &[f64], mut waveform: Option<&mut dyn Write>) -> Result<SimProducts> {
    let setup = s.sim_setup();
    let per_cycle = (s.pmu.f_sim / s.line.f_nominal).round() as usize;
    let mut extractors = rates
        .iter()
        .map(|&rate| {
            PhasorExtractor::new(PmuConfig {
                f_sim: s.pmu.f_sim,
                f_nominal: s.line.f_nominal,
                rate,
                snr_db: s.pmu.noise(),
                seed: noise_seed(s.seed),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut phasors = vec![Vec::new(); rates.len()];
    let mut relay = OcMonitor::new(s.relay_settings()?, per_cycle);
    let mut fault_buf: Vec<f64> = Vec::new();
    let mut spectra = Vec::new();
    let mut csv = waveform.as_mut().map(csv::Writer::from_writer);
    if let Some(w) = csv.as_mut() {
        w.write_record(["t", "v_send", "i_send", "v_recv", "i_recv", "fault_active"])?;
    }
    let mut frames = 0usize;
    let close = |buf: &mut Vec<f64>, spectra: &mut Vec<FaultSpectrum>| {
        if !buf.is_empty() {
            if let Some(sp) = FaultSpectrum::of(buf, per_cycle) {
                spectra.push(sp);
            }
            buf.clear();
        }
    };
    for frame in Simulator::new(&setup)? {
        let f: WaveformFrame = frame?;
        frames += 1;
        for (ex, out) in extractors.iter_mut().zip(phasors.iter_mut()) {
            if let Some(p) = ex.push(&f) {
                out.push(p);
            }
        }
        relay.push(&f);
        if f.fault_active {
            fault_buf.push(f.i_fault);
        } else {
            close(&mut fault_buf, &mut spectra);
        }
        if let Some(w) = csv.as_mut() {
            w.write_record([
                f.t.to_string(),
                f.v_send.to_string(),
                f.i_send.to_string(),
                f.v_recv.to_string(),
                f.i_recv.to_string(),
                u8::from(f.fault_active).to_string(),
            ])?;
        }
    }
    close(&mut fault_buf, &mut spectra);
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(SimProducts {
        phasors,
        relay: relay.finish(),
        spectra,
        frames,
    })
}

/// Estimation, detection and scoring for one phasor stream.
fn analyze(
    s: &Scenario,
    rate: f64,
    estimator: EstimatorConfig,
    phasors: Vec<PhasorSample>,
    relay: OcOutcome,
    spectra: &[FaultSpectrum],
    frames: usize,
) -> Result<RunOutputs> {
    let eigen = EigenEstimator::new(estimator, s.line)?.run(&phasors)?;
    let mut detector = Detector::new(s.detector, s.name.clone())?;
    let events = detector.run(&eigen)?;
    let zones = detector.history().to_vec();

    let window_secs = estimator.window_len as f64 / rate;
    let grace = (estimator.window_len + s.detector.confirm_count) as f64 / rate;
    let schedule: Vec<FaultInterval> = s.fault_schedule().intervals;
    let alarms: Vec<&DetectionEvent> = events.iter().filter(|e| e.kind == EventKind::Alarm).collect();
    let in_window = |t: f64, f: &FaultInterval| t >= f.start && t <= f.end() + grace;

    let mut faults = Vec::with_capacity(schedule.len());
    let mut prev_end = 0.0;
    for (i, f) in schedule.iter().enumerate() {
        let alarm_t = alarms.iter().find(|a| in_window(a.t, f)).map(|a| a.t);
        let cleared = events
            .iter()
            .any(|e| e.kind == EventKind::Clear && e.t > f.start && alarm_t.is_some_and(|a| e.t > a));
        let pre = EigenStats::of(&lambdas_in(&eigen, prev_end + window_secs, f.start));
        let during = EigenStats::of(&lambdas_in(&eigen, f.start + window_secs, f.end()));
        let excursion = match (pre, during) {
            (Some(p), Some(d)) if p.std > 0.0 => Some((d.mean() - p.mean()).norm() / p.std),
            _ => None,
        };
        faults.push(FaultOutcome {
            index: i,
            hour: (f.start / s.hour_length).floor() as usize,
            start: f.start,
            end: f.end(),
            detected: alarm_t.is_some(),
            alarm_t,
            latency: alarm_t.map(|a| a - f.start),
            cleared,
            pre_fault: pre,
            in_fault: during,
            excursion_sigmas: excursion,
            relay_secondary: relay.fault_secondary.get(i).copied(),
            spectrum: spectra.get(i).copied(),
        });
        prev_end = f.end();
    }
    let false_alarm_times: Vec<f64> = alarms
        .iter()
        .filter(|a| !schedule.iter().any(|f| in_window(a.t, f)))
        .map(|a| a.t)
        .collect();
    let healthy_values: Vec<Complex64> = eigen
        .iter()
        .filter(|e| !schedule.iter().any(|f| e.t >= f.start && e.t <= f.end() + window_secs))
        .filter_map(|e| e.lambda)
        .collect();
    let detected = faults.iter().filter(|f| f.detected).count();
    let report = RunReport {
        scenario: s.name.clone(),
        seed: s.seed,
        rate,
        snr_db: s.pmu.snr_db,
        strategy: estimator.strategy,
        raw_discrete: estimator.raw_discrete,
        window_len: estimator.window_len,
        i_nominal: s.line.i_nominal,
        hours: s.hours,
        hour_length: s.hour_length,
        f_sim: s.pmu.f_sim,
        simulated_seconds: s.duration(),
        frames,
        phasor_reports: phasors.len(),
        estimates: eigen.len(),
        withheld: eigen.iter().filter(|e| e.withheld()).count(),
        zone_refits: zones.len(),
        detected,
        missed: faults.len() - detected,
        false_alarms: false_alarm_times.len(),
        false_alarm_times,
        events: events.len(),
        clean: schedule.is_empty() && events.is_empty(),
        faults,
        relay,
        fault_current: FaultSpectrum::average(spectra),
        healthy: EigenStats::of(&healthy_values),
    };
    Ok(RunOutputs {
        report,
        phasors,
        eigen,
        events,
        zones,
    })
}

/// Run one scenario end to end.
pub fn run(s: &Scenario) -> Result<RunOutputs> {
    run_inner(s, None).map_err(|e| e.in_scenario(&s.name))
}

/// As [`run`], also streaming the point-on-wave frames as CSV into `waveform`.
pub fn run_with_waveform(s: &Scenario, waveform: &mut dyn Write) -> Result<RunOutputs> {
    run_inner(s, Some(waveform)).map_err(|e| e.in_scenario(&s.name))
}

fn run_inner(s: &Scenario, waveform: Option<&mut dyn Write>) -> Result<RunOutputs> {
    s.validate()?;
    let mut sim = simulate(s, &[s.pmu.rate], waveform)?;
    let phasors = sim.phasors.pop().expect("one rate");
    analyze(s, s.pmu.rate, s.estimator, phasors, sim.relay, &sim.spectra, sim.frames)
}

/// Run independent scenarios on the thread pool; results keep input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<RunOutputs>> {
    scenarios.par_iter().map(run).collect()
}

/// Raw discrete-map eigenvalue magnitudes at one rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScaling {
    pub mean_magnitude: f64,
    pub pre_fault_mean_magnitude: Option<f64>,
    pub in_fault_mean_magnitude: Option<f64>,
    pub estimates: usize,
    pub withheld: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    pub report: RunReport,
    pub raw: RawScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub rates: Vec<RateResult>,
    /// Raw-discrete mean |λ| at each rate over that at the first rate.
    pub raw_ratios: Vec<f64>,
    /// Largest relative deviation of the healthy mean eigenvalue across rates.
    pub healthy_mean_spread: Option<f64>,
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Rate sweep, scenario {}", self.scenario);
        let _ = writeln!(
            s,
            "{:>6} {:>9} {:>7} {:>20} {:>9} {:>20} {:>9} {:>12} {:>8}",
            "rate", "detected", "false", "healthy mean", "std", "mean fault", "std", "raw mean|λ|", "ratio"
        );
        let polar = |p: Option<EigenStats>| {
            p.map(|e| format!("{:.2}∠{:.1}", e.mean_polar.magnitude, e.mean_polar.angle_deg))
                .unwrap_or_else(|| "-".into())
        };
        for (r, ratio) in self.rates.iter().zip(&self.raw_ratios) {
            let fault_vals: Vec<EigenStats> = r.report.faults.iter().filter_map(|f| f.in_fault).collect();
            let fault_mean = if fault_vals.is_empty() {
                None
            } else {
                let mu = fault_vals.iter().map(|e| e.mean()).sum::<Complex64>() / fault_vals.len() as f64;
                let sd = fault_vals.iter().map(|e| e.std).sum::<f64>() / fault_vals.len() as f64;
                Some(EigenStats {
                    count: fault_vals.len(),
                    mean_re: mu.re,
                    mean_im: mu.im,
                    mean_polar: Polar::of(mu),
                    std: sd,
                    mean_magnitude: mu.norm(),
                })
            };
            let _ = writeln!(
                s,
                "{:>6} {:>9} {:>7} {:>20} {:>9.3} {:>20} {:>9.3} {:>12.3} {:>8.3}",
                r.rate,
                format!("{}/{}", r.report.detected, r.report.faults.len()),
                r.report.false_alarms,
                polar(r.report.healthy),
                r.report.healthy.map_or(f64::NAN, |h| h.std),
                polar(fault_mean),
                fault_mean.map_or(f64::NAN, |h| h.std),
                r.raw.mean_magnitude,
                ratio,
            );
        }
        if let Some(spread) = self.healthy_mean_spread {
            let _ = writeln!(s, "healthy mean spread across rates: {:.4}%", 100.0 * spread);
        }
        s
    }
}

fn raw_scaling(s: &Scenario, phasors: &[PhasorSample]) -> Result<RawScaling> {
    let cfg = EstimatorConfig {
        strategy: Strategy::DiscreteLs,
        raw_discrete: true,
        window_len: s.estimator.window_len.max(4),
        ..s.estimator
    };
    let eigen = EigenEstimator::new(cfg, s.line)?.run(phasors)?;
    let window_secs = cfg.window_len as f64 / phasors.first().map_or(1.0, |p| p.rate);
    let schedule = s.fault_schedule().intervals;
    let mags = |pred: &dyn Fn(f64) -> bool| -> Option<f64> {
        let v: Vec<f64> = eigen
            .iter()
            .filter(|e| pred(e.t))
            .filter_map(|e| e.lambda.map(|l| l.norm()))
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let in_fault = |t: f64| schedule.iter().any(|f| t >= f.start + window_secs && t < f.end());
    let near_fault = |t: f64| schedule.iter().any(|f| t >= f.start && t < f.end() + window_secs);
    Ok(RawScaling {
        mean_magnitude: mags(&|_| true).ok_or(Error::InsufficientData { needed: 1, got: 0 })?,
        pre_fault_mean_magnitude: mags(&|t| !near_fault(t)),
        in_fault_mean_magnitude: mags(&in_fault),
        estimates: eigen.len(),
        withheld: eigen.iter().filter(|e| e.withheld()).count(),
    })
}

/// Simulate once and evaluate every reporting rate on the shared waveform.
pub fn rate_sweep(s: &Scenario, rates: &[f64]) -> Result<(SweepReport, Vec<RunOutputs>)> {
    rate_sweep_inner(s, rates).map_err(|e| e.in_scenario(&s.name))
}

fn rate_sweep_inner(s: &Scenario, rates: &[f64]) -> Result<(SweepReport, Vec<RunOutputs>)> {
    if rates.is_empty() {
        return Err(Error::Config("rate sweep needs at least one rate".into()));
    }
    s.validate()?;
    let sim = simulate(s, rates, None)?;
    let results: Vec<(RunOutputs, RawScaling)> = rates
        .par_iter()
        .zip(sim.phasors.into_par_iter())
        .map(|(&rate, phasors)| {
            let raw = raw_scaling(s, &phasors)?;
            let out = analyze(s, rate, s.estimator, phasors, sim.relay.clone(), &sim.spectra, sim.frames)?;
            Ok((out, raw))
        })
        .collect::<Result<Vec<_>>>()?;
    let base = results[0].1.mean_magnitude;
    let raw_ratios = results.iter().map(|(_, r)| r.mean_magnitude / base).collect();
    let means: Vec<Complex64> = results
        .iter()
        .filter_map(|(o, _)| o.report.healthy.map(|h| h.mean()))
        .collect();
    let healthy_mean_spread = (means.len() == results.len()).then(|| {
        let m0 = means[0];
        means.iter().map(|m| (m - m0).norm() / m0.norm()).fold(0.0, f64::max)
    });
    let report = SweepReport {
        scenario: s.name.clone(),
        rates: results
            .iter()
            .map(|(o, raw)| RateResult {
                rate: o.report.rate,
                report: o.report.clone(),
                raw: *raw,
            })
            .collect(),
        raw_ratios,
        healthy_mean_spread,
    };
    Ok((report, results.into_iter().map(|(o, _)| o).collect()))
}
