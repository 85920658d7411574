use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eigenzone::estimator::Strategy;
use eigenzone::hif::{calibrate_to_target, simulated_fault_rms, CalibrationOptions};
use eigenzone::runner::{rate_sweep, run, run_with_waveform};
use eigenzone::scenario::Scenario;
use eigenzone::waveform::FaultModel;

#[derive(Parser)]
#[command(name = "eigenzone", version, about = "High-impedance fault detection from line eigenvalues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end and write CSVs and reports.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also dump the point-on-wave waveform (large).
        #[arg(long)]
        waveform: bool,
        /// Exit nonzero if any scheduled fault is missed.
        #[arg(long)]
        assert: bool,
    },
    /// Simulate once and compare several reporting rates.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Reporting rates to compare.
        #[arg(long, value_delimiter = ',', default_value = "30,60,120")]
        rates: Vec<f64>,
        #[arg(long)]
        assert: bool,
    },
    /// Scale the HIF resistances so the fault current hits a target RMS.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Target fault RMS (A).
        #[arg(long)]
        target: f64,
        /// Write the calibrated scenario to this file.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Write plot-ready eigen trajectory and zone outline CSVs.
    PlotData {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario: 671, 675 or 634.
    #[arg(long)]
    preset: Option<String>,
    /// PMU reporting rate (reports per second).
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-channel SNR in dB (`inf` for noise-free).
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Report rate·λ_d instead of rate·ln(λ_d) (discrete-ls).
    #[arg(long)]
    raw_discrete: bool,
    /// Number of compressed hours to simulate.
    #[arg(long)]
    hours: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: eigenzone::Error| e.to_string())
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match (&self.scenario, &self.preset) {
            (Some(path), _) => Scenario::load(path).with_context(|| format!("loading {}", path.display()))?,
            (None, Some(name)) => Scenario::preset(name)?,
            (None, None) => bail!("pass --scenario <file> or --preset <name>"),
        };
        if let Some(r) = self.rate {
            s.pmu.rate = r;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(snr) = self.snr {
            s.pmu.snr_db = snr;
        }
        if let Some(st) = self.strategy {
            s.estimator.strategy = st;
        }
        if self.raw_discrete {
            s.estimator.raw_discrete = true;
        }
        if let Some(h) = self.hours {
            s.hours = h;
            s.schedule.hours.retain(|x| *x < h);
        }
        s.validate()?;
        Ok(s)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, waveform, assert } => {
            let s = common.scenario()?;
            std::fs::create_dir_all(&common.out)?;
            let out = if waveform {
                let mut w = BufWriter::new(File::create(common.out.join("waveform.csv"))?);
                run_with_waveform(&s, &mut w)?
            } else {
                run(&s)?
            };
            out.write_to(&common.out)?;
            write_text(&common.out.join("scenario.toml"), &s.to_toml_string()?)?;
            print!("{}", out.report.to_table());
            if assert && !out.report.all_detected() {
                eprintln!("{} scheduled fault(s) missed", out.report.missed);
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep { common, rates, assert } => {
            let s = common.scenario()?;
            let (report, outputs) = rate_sweep(&s, &rates)?;
            for o in &outputs {
                o.write_to(&common.out.join(format!("rate_{}", o.report.rate)))?;
            }
            write_text(&common.out.join("sweep.json"), &(report.to_json()? + "\n"))?;
            let table = report.to_table();
            write_text(&common.out.join("sweep.txt"), &table)?;
            print!("{table}");
            if assert && outputs.iter().any(|o| !o.report.all_detected()) {
                eprintln!("missed faults at one or more rates");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Calibrate { common, target, write } => {
            let mut s = common.scenario()?;
            let Some(FaultModel::Hif(p)) = s.fault else {
                bail!("scenario '{}' has no HIF fault model", s.name);
            };
            let opts = CalibrationOptions {
                f_sim: s.pmu.f_sim,
                load_power_factor: s.load_power_factor,
                ..Default::default()
            };
            let cal = calibrate_to_target(&p, target, &s.line, &opts)?;
            let got = simulated_fault_rms(&cal, &s.line, &opts)?;
            println!("target {target:.3} A, calibrated fault RMS {got:.3} A");
            println!("r_p_bounds = [{}, {}]", cal.r_p_bounds.0, cal.r_p_bounds.1);
            println!("r_n_bounds = [{}, {}]", cal.r_n_bounds.0, cal.r_n_bounds.1);
            println!("sigma_step = {}", cal.sigma_step);
            s.fault = Some(FaultModel::Hif(cal));
            if let Some(path) = write {
                write_text(&path, &s.to_toml_string()?)?;
                println!("wrote {}", path.display());
            }
        }
        Command::PlotData { common } => {
            let s = common.scenario()?;
            let out = run(&s)?;
            out.write_plot_data(&common.out)?;
            println!("wrote eigen.csv and zone_outlines.csv to {}", common.out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
