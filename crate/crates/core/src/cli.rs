//! Command-line front end and output artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_config, CycleMode, CycleTask, OutputFormat, Preset, RunConfig, Task};
use crate::error::{Error, Result};
use crate::lambda::{REF_OVERLAP0_SQ, REF_OVERLAP2_SQ};
use crate::mesolve::Trajectory;
use crate::protocol::{
    bose_einstein_occupation, find_limiting_cycle, parameter_sweep, run_cycle,
    stirap_dephasing_estimate, thermal_populations, CycleResult, CycleSummary, SweepPoint,
};
use crate::rabi::{check_truncation_convergence, RabiParams, TruncationReport};

/// Trajectory CSV columns, in order.
pub const TRAJECTORY_COLUMNS: [&str; 11] = [
    "t", "P0", "P1", "P2", "PPhi", "n_exp", "photons_cum", "vp_conv", "omega_s", "omega_p", "kappa",
];

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_JSON: &str = "trajectory.json";
pub const AMPLITUDES_CSV: &str = "amplitudes.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";

#[derive(Debug, Parser)]
#[command(name = "vpdetect", version, about = "Virtual-photon conversion and photodetection cycles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the cycle or ground-state analysis described by a TOML file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Run a named preset: fig1b, fig2a, fig2b or rabi-groundstate.
    Preset {
        name: Preset,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Independent cycles over a list of values of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values, or `start:stop:count`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl clap::ValueEnum for Preset {
    fn value_variants<'a>() -> &'a [Self] {
        &Preset::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

impl clap::ValueEnum for OutputFormat {
    fn value_variants<'a>() -> &'a [Self] {
        &[OutputFormat::Csv, OutputFormat::Json]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationInfo {
    pub epsilon: f64,
    pub g: f64,
    pub n_fock: usize,
    pub last_change: f64,
    /// In units of `omega_c`.
    pub energy_e0: f64,
}

impl From<&TruncationReport> for TruncationInfo {
    fn from(r: &TruncationReport) -> Self {
        Self {
            epsilon: r.ground.params.epsilon,
            g: r.ground.params.g,
            n_fock: r.n_fock,
            last_change: r.last_change,
            energy_e0: r.ground.energy_e0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalInfo {
    /// `null` at T = 0.
    pub beta_omega_c: Option<f64>,
    pub populations: [f64; 4],
    /// `<A^dag A>` in the four-level thermal state.
    pub n_thermal: f64,
    pub n_bose_einstein: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DephasingInfo {
    pub kappa: f64,
    /// Separation read as the distance between pulse peaks, `2 tau`.
    pub t_sep_peaks: f64,
    pub p2_peaks: f64,
    /// Separation read as the pulse width `t_w`.
    pub t_sep_width: f64,
    pub p2_width: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitingInfo {
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub name: String,
    pub status: &'static str,
    pub cycle: CycleSummary,
    pub limiting_cycle: Option<LimitingInfo>,
    pub thermal: ThermalInfo,
    pub dephasing: DephasingInfo,
    pub truncation: TruncationInfo,
    pub config: crate::config::ConfigDocument,
}

#[derive(Debug, Clone, Serialize)]
pub struct RabiReport {
    pub name: String,
    pub status: &'static str,
    pub truncation: TruncationInfo,
    pub gap: f64,
    pub mean_photons: f64,
    pub norm_sq: f64,
    pub parity_violation: f64,
    /// `|<0g|Phi>|^2`.
    pub overlap02: f64,
    /// `|<2g|Phi>|^2`.
    pub overlap22: f64,
    /// Values used by the four-level model.
    pub reference_overlap02: f64,
    pub reference_overlap22: f64,
    pub deviation0: f64,
    pub deviation2: f64,
    #[serde(skip)]
    pub amp_g: Vec<f64>,
    #[serde(skip)]
    pub amp_e: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct ErrorReport<'a> {
    name: &'a str,
    status: &'static str,
    error: String,
}

pub enum RunOutput {
    Rabi(RabiReport),
    Cycle {
        report: Box<CycleReport>,
        trajectory: Trajectory,
    },
}

pub fn rabi_report(name: &str, rabi: &RabiParams, tol: f64) -> Result<RabiReport> {
    let trunc = check_truncation_convergence(rabi, tol)?;
    let gs = &trunc.ground;
    let (o0, o2) = (gs.overlap0_sq(), gs.overlap2_sq());
    Ok(RabiReport {
        name: name.to_string(),
        status: "ok",
        truncation: TruncationInfo::from(&trunc),
        gap: gs.gap,
        mean_photons: gs.mean_photons,
        norm_sq: gs.norm_sq(),
        parity_violation: gs.parity_violation(),
        overlap02: o0,
        overlap22: o2,
        reference_overlap02: REF_OVERLAP0_SQ,
        reference_overlap22: REF_OVERLAP2_SQ,
        deviation0: o0 - REF_OVERLAP0_SQ,
        deviation2: o2 - REF_OVERLAP2_SQ,
        amp_g: gs.amp_g.iter().map(|a| a.re).collect(),
        amp_e: gs.amp_e.iter().map(|a| a.re).collect(),
    })
}

fn run_task(task: &CycleTask) -> Result<(CycleResult, Option<LimitingInfo>)> {
    let scenario = task.scenario();
    match task.cycles {
        CycleMode::Single => Ok((run_cycle(&scenario)?, None)),
        CycleMode::Limiting => {
            let lc = find_limiting_cycle(&scenario, task.cycle_tol, task.max_iter)?;
            let info = LimitingInfo {
                iterations: lc.iterations,
                residual: lc.residual,
                tol: task.cycle_tol,
            };
            Ok((lc.cycle, Some(info)))
        }
    }
}

/// Runs the computation described by `config` without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let task = match &config.task {
        Task::RabiGroundState => {
            return Ok(RunOutput::Rabi(rabi_report(config.name(), &config.rabi, config.truncation_tol)?))
        }
        Task::Cycle(t) => t,
    };
    let trunc = check_truncation_convergence(&config.rabi, config.truncation_tol)?;
    let (result, limiting) = run_task(task)?;
    let scenario = task.scenario();
    let p = &task.params;
    let report = CycleReport {
        name: config.name().to_string(),
        status: "ok",
        cycle: result.summary(&scenario),
        limiting_cycle: limiting,
        thermal: ThermalInfo {
            beta_omega_c: (!p.is_zero_temperature()).then(|| p.beta_omega_c()),
            populations: thermal_populations(p),
            n_thermal: result.n_thermal,
            n_bose_einstein: bose_einstein_occupation(p),
        },
        dephasing: DephasingInfo {
            kappa: p.kappa_max,
            t_sep_peaks: 2.0 * p.tau,
            p2_peaks: stirap_dephasing_estimate(p.kappa_max, 2.0 * p.tau, p.tau),
            t_sep_width: p.t_w,
            p2_width: stirap_dephasing_estimate(p.kappa_max, p.t_w, p.tau),
        },
        truncation: TruncationInfo::from(&trunc),
        config: config.to_document(),
    };
    Ok(RunOutput::Cycle {
        report: Box::new(report),
        trajectory: result.trajectory,
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory table with 17 significant digits per entry.
pub fn trajectory_csv(trajectory: &Trajectory) -> Result<String> {
    let columns = trajectory_columns(trajectory)?;
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for i in 0..trajectory.times.len() {
        let row: Vec<String> = columns.iter().map(|c| fmt_num(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn trajectory_columns(trajectory: &Trajectory) -> Result<Vec<&[f64]>> {
    TRAJECTORY_COLUMNS
        .iter()
        .map(|&name| {
            if name == "t" {
                Ok(trajectory.times.as_slice())
            } else {
                trajectory
                    .series(name)
                    .ok_or_else(|| Error::ContractViolation(format!("trajectory lacks series '{name}'")))
            }
        })
        .collect()
}

pub fn trajectory_json(trajectory: &Trajectory) -> Result<String> {
    let columns = trajectory_columns(trajectory)?;
    let mut map = serde_json::Map::new();
    for (name, col) in TRAJECTORY_COLUMNS.iter().zip(columns) {
        map.insert((*name).to_string(), serde_json::to_value(col).map_err(json_err)?);
    }
    serde_json::to_string_pretty(&map).map_err(json_err)
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(json_err)
}

/// Writes the artifacts of a finished run; returns the paths written.
pub fn write_outputs(dir: &Path, output: &RunOutput, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    match output {
        RunOutput::Rabi(report) => {
            written.push(write_file(dir, SUMMARY_FILE, &to_json(report)?)?);
            let mut csv = String::from("n,amp_g,amp_e\n");
            for (n, (g, e)) in report.amp_g.iter().zip(&report.amp_e).enumerate() {
                let _ = writeln!(csv, "{n},{},{}", fmt_num(*g), fmt_num(*e));
            }
            written.push(write_file(dir, AMPLITUDES_CSV, &csv)?);
        }
        RunOutput::Cycle { report, trajectory } => {
            written.push(write_file(dir, SUMMARY_FILE, &to_json(report)?)?);
            written.push(match format {
                OutputFormat::Csv => write_file(dir, TRAJECTORY_CSV, &trajectory_csv(trajectory)?)?,
                OutputFormat::Json => write_file(dir, TRAJECTORY_JSON, &trajectory_json(trajectory)?)?,
            });
        }
    }
    Ok(written)
}

/// Records a failed run in `summary.json`.
pub fn write_error(dir: &Path, name: &str, error: &Error) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let report = ErrorReport {
        name,
        status: "error",
        error: error.to_string(),
    };
    write_file(dir, SUMMARY_FILE, &to_json(&report)?)
}

pub fn sweep_csv(axis: &str, points: &[SweepPoint]) -> String {
    let mut out = format!(
        "{axis},photons_total,photons_thermal,vp_pairs_detected,j_total,j_thermal,j_extra,P0_final,P1_final,P2_final,PPhi_final,p2_peak,p2_at_switch\n"
    );
    for pt in points {
        let s = &pt.summary;
        let mut row = vec![
            pt.value,
            s.photons_total,
            s.photons_thermal,
            s.vp_pairs_detected,
            s.j_total,
            s.j_thermal,
            s.j_extra,
        ];
        row.extend_from_slice(&s.final_populations);
        row.push(s.p2_peak);
        let mut cells: Vec<String> = row.into_iter().map(fmt_num).collect();
        cells.push(s.p2_at_switch.map(fmt_num).unwrap_or_default());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::Config(format!("cannot parse sweep values '{s}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad(spec))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad(spec))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad(spec))?;
        return match n {
            0 => Err(bad(spec)),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(s)))
        .collect::<Result<_>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad(spec));
    }
    Ok(values)
}

pub fn run_sweep(config: &RunConfig, axis: &str, values: &[f64]) -> Result<Vec<SweepPoint>> {
    let task = config
        .cycle()
        .ok_or_else(|| Error::Config("sweeps need a cycle configuration, not rabi-groundstate".into()))?;
    parameter_sweep(&task.scenario(), axis, values)
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn default_out(config: Option<&RunConfig>, cli: Option<PathBuf>, fallback: &str) -> PathBuf {
    cli.or_else(|| config.and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(fallback))
}

fn run_and_write(config: Result<RunConfig>, name: &str, out: Option<PathBuf>, format: Option<OutputFormat>) -> i32 {
    let dir = default_out(config.as_ref().ok(), out, name);
    let result = config.and_then(|c| {
        let output = execute(&c)?;
        write_outputs(&dir, &output, format.unwrap_or(c.format))
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(w) = write_error(&dir, name, &e) {
                eprintln!("error: {w}");
            }
            1
        }
    }
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, out, format } => {
            let name = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            run_and_write(load_config(&config), &name, out, format)
        }
        Command::Preset { name, out, format } => run_and_write(RunConfig::preset(name), name.name(), out, format),
        Command::Sweep { config, axis, values, out } => {
            let loaded = load_config(&config);
            let dir = default_out(loaded.as_ref().ok(), out, "sweep");
            let result = loaded.and_then(|c| {
                let values = parse_values(&values)?;
                let points = run_sweep(&c, &axis, &values)?;
                fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                Ok(vec![
                    write_file(&dir, SWEEP_CSV, &sweep_csv(&axis, &points))?,
                    write_file(&dir, SWEEP_JSON, &to_json(&points)?)?,
                ])
            });
            match result {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    let _ = write_error(&dir, "sweep", &e);
                    1
                }
            }
        }
    }
}
