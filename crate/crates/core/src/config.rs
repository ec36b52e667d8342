//! Run configuration documents.
//!
//! A document is flat TOML with an optional `[physical]` table. Keys absent
//! from the document take the values of the selected preset (or of `fig1b`
//! when no preset is named). Physical quantities are converted into the
//! dimensionless units of the engine: times in `1/omega0`, frequencies in
//! `omega0`, where `omega0 = 2 pi * omega0_hz`.

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{KappaProfile, LambdaParams, PulseSchedule, PulseShape, DEFAULT_RISE_TIME};
use crate::mesolve::IntegratorConfig;
use crate::protocol::{
    InitialState, Scenario, ALWAYS_ON_WINDOW, DEFAULT_CYCLE_TOL, DEFAULT_MAX_ITER,
    SWITCHABLE_WINDOW, SWITCH_ON_TIME,
};
use crate::rabi::{ground_state_analysis, RabiParams, DEFAULT_FOCK};

const PLANCK: f64 = 6.626_070_15e-34;
const BOLTZMANN: f64 = 1.380_649e-23;
/// Relative slack when a dimensionless key and its physical counterpart agree.
const UNIT_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig1b,
    Fig2a,
    Fig2b,
    RabiGroundstate,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig1b, Preset::Fig2a, Preset::Fig2b, Preset::RabiGroundstate];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1b => "fig1b",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::RabiGroundstate => "rabi-groundstate",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{s}' (expected one of fig1b, fig2a, fig2b, rabi-groundstate)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterMode {
    AlwaysOn,
    Switchable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Thermal,
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    Single,
    Limiting,
}

/// Optional physical-units block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalUnits {
    /// `omega0 / 2 pi` in Hz.
    pub omega0_hz: Option<f64>,
    /// `omega_c / 2 pi` in Hz.
    pub omega_c_hz: Option<f64>,
    /// `eps' / 2 pi` in Hz.
    pub eps_prime_hz: Option<f64>,
    pub temperature_kelvin: Option<f64>,
    pub t_w_s: Option<f64>,
    pub tau_s: Option<f64>,
    /// `1 / kappa` in seconds.
    pub kappa_lifetime_s: Option<f64>,
    /// `1 / gamma` in seconds.
    pub gamma_lifetime_s: Option<f64>,
}

/// Raw document as written by the user; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub preset: Option<Preset>,
    pub format: Option<OutputFormat>,
    pub out_dir: Option<PathBuf>,

    pub omega0: Option<f64>,
    pub t_w: Option<f64>,
    pub tau: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub omega_c: Option<f64>,
    pub eps_prime: Option<f64>,
    pub energy_e0: Option<f64>,
    /// `inf` selects T = 0.
    pub beta_omega_c: Option<f64>,
    /// Inverse temperature in units of `1/omega0`; alternative to `beta_omega_c`.
    pub beta: Option<f64>,
    pub overlap0_sq: Option<f64>,
    pub overlap2_sq: Option<f64>,
    pub omega_s_peak: Option<f64>,
    pub omega_p_peak: Option<f64>,

    pub rabi_epsilon: Option<f64>,
    pub rabi_g: Option<f64>,
    pub n_fock: Option<usize>,
    pub truncation_tol: Option<f64>,

    pub meter: Option<MeterMode>,
    pub t_sm: Option<f64>,
    pub rise_time: Option<f64>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub initial: Option<InitialKind>,
    pub cycles: Option<CycleMode>,
    pub cycle_tol: Option<f64>,
    pub max_iter: Option<usize>,

    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub sample_count: Option<usize>,

    pub physical: Option<PhysicalUnits>,
}

/// Fully resolved and validated protocol settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleTask {
    pub params: LambdaParams,
    pub schedule: PulseSchedule,
    pub profile: KappaProfile,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: InitialKind,
    pub cycles: CycleMode,
    pub cycle_tol: f64,
    pub max_iter: usize,
    pub integrator: IntegratorConfig,
}

impl CycleTask {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            params: self.params,
            schedule: self.schedule,
            profile: self.profile,
            t_start: self.t_start,
            t_end: self.t_end,
            initial: match self.initial {
                InitialKind::Thermal => InitialState::Thermal,
                InitialKind::Ground => InitialState::Ground,
            },
            integrator: self.integrator,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    RabiGroundState,
    Cycle(Box<CycleTask>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub format: OutputFormat,
    pub out_dir: Option<PathBuf>,
    pub rabi: RabiParams,
    pub truncation_tol: f64,
    pub task: Task,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Result<Self> {
        parse_document(ConfigDocument {
            preset: Some(preset),
            ..Default::default()
        })
    }

    pub fn name(&self) -> &'static str {
        self.preset.name()
    }

    pub fn cycle(&self) -> Option<&CycleTask> {
        match &self.task {
            Task::Cycle(c) => Some(c),
            Task::RabiGroundState => None,
        }
    }

    /// Document with every resolved value written out explicitly.
    pub fn to_document(&self) -> ConfigDocument {
        let mut doc = ConfigDocument {
            preset: Some(self.preset),
            format: Some(self.format),
            out_dir: self.out_dir.clone(),
            rabi_epsilon: Some(self.rabi.epsilon),
            rabi_g: Some(self.rabi.g),
            n_fock: Some(self.rabi.n_fock),
            truncation_tol: Some(self.truncation_tol),
            ..Default::default()
        };
        if let Task::Cycle(c) = &self.task {
            let p = &c.params;
            doc.omega0 = Some(p.omega0);
            doc.t_w = Some(p.t_w);
            doc.tau = Some(p.tau);
            doc.kappa = Some(p.kappa_max);
            doc.gamma = Some(p.gamma);
            doc.omega_c = Some(p.omega_c);
            doc.eps_prime = Some(p.eps_prime);
            doc.energy_e0 = Some(p.energy_e0);
            doc.beta = Some(p.beta);
            doc.overlap0_sq = Some(p.c0.norm_sqr());
            doc.overlap2_sq = Some(p.c2.norm_sqr());
            doc.omega_s_peak = Some(c.schedule.omega_s_peak);
            doc.omega_p_peak = Some(c.schedule.omega_p_peak);
            match c.profile {
                KappaProfile::AlwaysOn => doc.meter = Some(MeterMode::AlwaysOn),
                KappaProfile::Switchable { t_sm, rise_time } => {
                    doc.meter = Some(MeterMode::Switchable);
                    doc.t_sm = Some(t_sm);
                    doc.rise_time = Some(rise_time);
                }
            }
            doc.t_start = Some(c.t_start);
            doc.t_end = Some(c.t_end);
            doc.initial = Some(c.initial);
            doc.cycles = Some(c.cycles);
            doc.cycle_tol = Some(c.cycle_tol);
            doc.max_iter = Some(c.max_iter);
            doc.abs_tol = Some(c.integrator.abs_tol);
            doc.rel_tol = Some(c.integrator.rel_tol);
            doc.max_step = Some(c.integrator.max_step);
            doc.sample_count = Some(c.integrator.sample_count);
        }
        doc
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_document()).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    parse_document(doc)
}

fn merge(name: &str, dimensionless: Option<f64>, physical: Option<f64>) -> Result<Option<f64>> {
    match (dimensionless, physical) {
        (Some(a), Some(b)) => {
            if (a - b).abs() > UNIT_AGREEMENT * a.abs().max(b.abs()) {
                Err(Error::Config(format!(
                    "conflicting values for '{name}': {a} given directly, {b} from the physical block"
                )))
            } else {
                Ok(Some(a))
            }
        }
        (a, b) => Ok(a.or(b)),
    }
}

/// Dimensionless values implied by the physical block, keyed like the flat document.
#[derive(Debug, Default)]
struct Converted {
    t_w: Option<f64>,
    tau: Option<f64>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    omega_c: Option<f64>,
    eps_prime: Option<f64>,
    beta_omega_c: Option<f64>,
}

fn convert_physical(ph: &PhysicalUnits) -> Result<Converted> {
    let positive = |name: &str, v: Option<f64>| -> Result<Option<f64>> {
        match v {
            Some(x) if !(x > 0.0) || !x.is_finite() => Err(Error::Config(format!(
                "physical.{name} must be positive and finite, got {x}"
            ))),
            other => Ok(other),
        }
    };
    let omega0_hz = positive("omega0_hz", ph.omega0_hz)?;
    let omega_c_hz = positive("omega_c_hz", ph.omega_c_hz)?;
    let eps_prime_hz = positive("eps_prime_hz", ph.eps_prime_hz)?;
    let temperature = positive("temperature_kelvin", ph.temperature_kelvin)?;
    let t_w_s = positive("t_w_s", ph.t_w_s)?;
    let tau_s = positive("tau_s", ph.tau_s)?;
    let kappa_s = positive("kappa_lifetime_s", ph.kappa_lifetime_s)?;
    let gamma_s = positive("gamma_lifetime_s", ph.gamma_lifetime_s)?;

    let needs_scale = omega_c_hz.is_some()
        || eps_prime_hz.is_some()
        || t_w_s.is_some()
        || tau_s.is_some()
        || kappa_s.is_some()
        || gamma_s.is_some();
    if needs_scale && omega0_hz.is_none() {
        return Err(Error::Config(
            "physical block needs omega0_hz to convert times and frequencies".into(),
        ));
    }
    if temperature.is_some() && omega_c_hz.is_none() {
        return Err(Error::Config(
            "physical.temperature_kelvin needs physical.omega_c_hz".into(),
        ));
    }
    let w0 = omega0_hz.map(|f| 2.0 * std::f64::consts::PI * f).unwrap_or(1.0);
    let time = |s: Option<f64>| s.map(|x| w0 * x);
    let rate = |s: Option<f64>| s.map(|x| 1.0 / (w0 * x));
    let freq = |hz: Option<f64>| hz.zip(omega0_hz).map(|(f, f0)| f / f0);
    Ok(Converted {
        t_w: time(t_w_s),
        tau: time(tau_s),
        kappa: rate(kappa_s),
        gamma: rate(gamma_s),
        omega_c: freq(omega_c_hz),
        eps_prime: freq(eps_prime_hz),
        beta_omega_c: temperature
            .zip(omega_c_hz)
            .map(|(t, f)| PLANCK * f / (BOLTZMANN * t)),
    })
}

pub fn parse_document(doc: ConfigDocument) -> Result<RunConfig> {
    let preset = doc.preset.unwrap_or(Preset::Fig1b);
    let conv = match &doc.physical {
        Some(ph) => convert_physical(ph)?,
        None => Converted::default(),
    };

    let rabi = RabiParams::new(
        doc.rabi_epsilon.unwrap_or(1.0),
        doc.rabi_g.unwrap_or(0.5),
        doc.n_fock.unwrap_or(DEFAULT_FOCK),
    )?;
    let truncation_tol = doc.truncation_tol.unwrap_or(1e-8);
    if !(truncation_tol > 0.0) {
        return Err(Error::Config("truncation_tol must be positive".into()));
    }

    let task = if preset == Preset::RabiGroundstate {
        Task::RabiGroundState
    } else {
        Task::Cycle(Box::new(resolve_cycle(preset, &doc, &conv, &rabi)?))
    };

    Ok(RunConfig {
        preset,
        format: doc.format.unwrap_or_default(),
        out_dir: doc.out_dir,
        rabi,
        truncation_tol,
        task,
    })
}

fn resolve_cycle(preset: Preset, doc: &ConfigDocument, conv: &Converted, rabi: &RabiParams) -> Result<CycleTask> {
    let switchable_default = preset == Preset::Fig1b;
    let omega_c = merge("omega_c", doc.omega_c, conv.omega_c)?;
    let mut params = LambdaParams::reference(0.0);
    if let Some(w) = omega_c {
        params.omega_c = w;
        params.eps_prime = crate::lambda::REF_EPS_PRIME_OVER_OMEGA_C * w;
    }
    let e0 = match doc.energy_e0 {
        Some(e) => e,
        None => ground_state_analysis(rabi)?.energy_e0 * params.omega_c,
    };
    params.energy_e0 = e0;

    let set = |slot: &mut f64, name: &str, a: Option<f64>, b: Option<f64>| -> Result<()> {
        if let Some(v) = merge(name, a, b)? {
            *slot = v;
        }
        Ok(())
    };
    set(&mut params.omega0, "omega0", doc.omega0, None)?;
    set(&mut params.t_w, "t_w", doc.t_w, conv.t_w)?;
    set(&mut params.tau, "tau", doc.tau, conv.tau)?;
    set(&mut params.kappa_max, "kappa", doc.kappa, conv.kappa)?;
    // gamma defaults to kappa
    params.gamma = params.kappa_max;
    set(&mut params.gamma, "gamma", doc.gamma, conv.gamma)?;
    set(&mut params.eps_prime, "eps_prime", doc.eps_prime, conv.eps_prime)?;

    let default_beta_omega_c = if switchable_default { f64::INFINITY } else { params.beta_omega_c() };
    let beta_omega_c = merge("beta_omega_c", doc.beta_omega_c, conv.beta_omega_c)?;
    let from_ratio = beta_omega_c.map(|b| if b.is_infinite() { b } else { b / params.omega_c });
    let beta = match (doc.beta, from_ratio) {
        (Some(b), Some(r)) if b != r => merge("beta", Some(b), Some(r))?.unwrap_or(b),
        (b, r) => b.or(r).unwrap_or(if default_beta_omega_c.is_infinite() {
            f64::INFINITY
        } else {
            default_beta_omega_c / params.omega_c
        }),
    };
    if !(beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    params.beta = beta;

    for (name, v) in [("overlap0_sq", doc.overlap0_sq), ("overlap2_sq", doc.overlap2_sq)] {
        if let Some(x) = v {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {x}")));
            }
        }
    }
    let c0 = Complex64::new(doc.overlap0_sq.unwrap_or(params.c0.norm_sqr()).sqrt(), 0.0);
    let c2 = Complex64::new(doc.overlap2_sq.unwrap_or(params.c2.norm_sqr()).sqrt(), 0.0);
    let reference = params;
    params.c0 = c0;
    params.c2 = c2;
    // pulse peaks follow omega0 and the overlaps unless set explicitly
    let mut schedule = PulseSchedule::from_params(&reference).rescaled_for_overlaps(&reference, c0, c2);
    schedule.shape = PulseShape::Gaussian;
    if let Some(v) = doc.omega_s_peak {
        schedule.omega_s_peak = v;
    }
    if let Some(v) = doc.omega_p_peak {
        schedule.omega_p_peak = v;
    }

    let meter = doc.meter.unwrap_or(if switchable_default { MeterMode::Switchable } else { MeterMode::AlwaysOn });
    let profile = match meter {
        MeterMode::AlwaysOn => {
            if doc.t_sm.is_some() || doc.rise_time.is_some() {
                return Err(Error::Config("t_sm and rise_time need meter = \"switchable\"".into()));
            }
            KappaProfile::AlwaysOn
        }
        MeterMode::Switchable => KappaProfile::Switchable {
            t_sm: doc.t_sm.unwrap_or(SWITCH_ON_TIME),
            rise_time: doc.rise_time.unwrap_or(DEFAULT_RISE_TIME),
        },
    };
    let window = if meter == MeterMode::Switchable { SWITCHABLE_WINDOW } else { ALWAYS_ON_WINDOW };
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        abs_tol: doc.abs_tol.unwrap_or(defaults.abs_tol),
        rel_tol: doc.rel_tol.unwrap_or(defaults.rel_tol),
        max_step: doc.max_step.unwrap_or(defaults.max_step),
        sample_count: doc.sample_count.unwrap_or(defaults.sample_count),
    };
    let cycles = doc.cycles.unwrap_or(if switchable_default { CycleMode::Single } else { CycleMode::Limiting });
    let task = CycleTask {
        params,
        schedule,
        profile,
        t_start: doc.t_start.unwrap_or(window.0),
        t_end: doc.t_end.unwrap_or(window.1),
        initial: doc.initial.unwrap_or(InitialKind::Thermal),
        cycles,
        cycle_tol: doc.cycle_tol.unwrap_or(DEFAULT_CYCLE_TOL),
        max_iter: doc.max_iter.unwrap_or(DEFAULT_MAX_ITER),
        integrator,
    };
    if !(task.cycle_tol > 0.0) || task.max_iter == 0 {
        return Err(Error::Config("cycle_tol must be positive and max_iter at least 1".into()));
    }
    task.scenario().validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(task)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_values() {
        let c = parse_config("").unwrap();
        assert_eq!(c.preset, Preset::Fig1b);
        let t = c.cycle().unwrap();
        assert_eq!(t.params.t_w, 15.0);
        assert_eq!(t.params.tau, 10.5);
        assert!((t.params.kappa_max - 1.0 / 75.0).abs() < 1e-18);
        assert_eq!(t.params.gamma, t.params.kappa_max);
        assert!((t.params.eps_prime / t.params.omega_c - 5.9).abs() < 1e-12);
        assert!(t.params.is_zero_temperature());
        assert!((t.params.c0.norm_sqr() - 0.42).abs() < 1e-12);
        assert!((t.params.c2.norm_sqr() - 0.05).abs() < 1e-12);
        assert_eq!((t.t_start, t.t_end), (-75.0, 450.0));
        assert!(matches!(t.profile, KappaProfile::Switchable { t_sm, .. } if t_sm == 90.0));
    }

    #[test]
    fn fig2a_defaults() {
        let c = parse_config("preset = \"fig2a\"").unwrap();
        let t = c.cycle().unwrap();
        assert!((t.params.beta_omega_c() - 1.95).abs() < 1e-12);
        assert_eq!(t.profile, KappaProfile::AlwaysOn);
        assert_eq!((t.t_start, t.t_end), (-75.0, 350.0));
        assert_eq!(t.cycles, CycleMode::Limiting);
    }

    #[test]
    fn physical_units_convert() {
        let c = parse_config(
            "[physical]\nomega0_hz = 50e6\nt_w_s = 48e-9\nomega_c_hz = 2.03e9\ntemperature_kelvin = 0.05\nkappa_lifetime_s = 240e-9\n",
        )
        .unwrap();
        let t = c.cycle().unwrap();
        let want = 2.0 * std::f64::consts::PI * 50e6 * 48e-9;
        assert!((t.params.t_w - want).abs() < 1e-12);
        assert!((t.params.t_w - 15.08).abs() < 5e-3);
        assert!((t.params.omega_c - 40.6).abs() < 1e-12);
        assert!((t.params.beta_omega_c() - 1.95).abs() < 5e-3);
        assert!((1.0 / t.params.kappa_max - 75.4).abs() < 0.05);
    }

    #[test]
    fn conflicting_entries_rejected() {
        let e = parse_config("kappa = 0.1\n[physical]\nomega0_hz = 50e6\nkappa_lifetime_s = 240e-9\n");
        assert!(matches!(e, Err(Error::Config(ref m)) if m.contains("kappa")), "{e:?}");
        // agreeing entries are accepted
        let k = 1.0 / (2.0 * std::f64::consts::PI * 50e6 * 240e-9);
        let ok = parse_config(&format!("kappa = {k}\n[physical]\nomega0_hz = 50e6\nkappa_lifetime_s = 240e-9\n"));
        assert!(ok.is_ok());
        // duplicated keys are a parse error
        assert!(parse_config("kappa = 0.1\nkappa = 0.2\n").is_err());
    }

    #[test]
    fn parse_errors_name_the_problem() {
        let e = parse_config("t_w = \"wide\"\n").unwrap_err().to_string();
        assert!(e.contains("line 1") || e.contains("t_w"), "{e}");
        let e = parse_config("t_ww = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("t_ww"), "{e}");
        assert!(parse_config("preset = \"fig9\"").is_err());
        assert!(parse_config("t_start = -10.0").is_err());
        assert!(parse_config("[physical]\nt_w_s = 48e-9\n").is_err());
        assert!(parse_config("preset = \"fig2a\"\nt_sm = 3.0").is_err());
    }

    #[test]
    fn zero_temperature_key() {
        let c = parse_config("preset = \"fig2a\"\nbeta_omega_c = inf\n").unwrap();
        assert!(c.cycle().unwrap().params.is_zero_temperature());
    }

    #[test]
    fn presets_round_trip() {
        for p in Preset::ALL {
            let c = RunConfig::preset(p).unwrap();
            let text = c.to_toml().unwrap();
            let back = parse_config(&text).unwrap();
            assert_eq!(back, c, "{}\n{text}", p.name());
        }
    }
}
