//! Conversion/photodetection cycles on the four-level model.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{
    atomic_operators, atomic_rates, cavity_absorption_factor, control_matrix, photon_number,
    projected_annihilation, KappaProfile, LambdaParams, PulseSchedule, DIM, PHI, U0, U1, U2,
};
use crate::mesolve::{
    integrate_with_probes, Channel, Counter, DensityMatrix, IntegrationDiagnostics,
    IntegratorConfig, LindbladProblem, Trajectory, COUNTER_SERIES,
};
use crate::rabi::{ground_state_analysis, RabiParams, DEFAULT_FOCK};

/// Default cycle windows and switch-on time, in units of `1/omega0`.
pub const SWITCHABLE_WINDOW: (f64, f64) = (-75.0, 450.0);
pub const ALWAYS_ON_WINDOW: (f64, f64) = (-75.0, 350.0);
pub const SWITCH_ON_TIME: f64 = 90.0;

pub const DEFAULT_CYCLE_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 20;

/// Rabi parameters of the reference device: `epsilon = omega_c`, `g = 0.5 omega_c`.
pub fn reference_rabi_params() -> RabiParams {
    RabiParams {
        epsilon: 1.0,
        g: 0.5,
        n_fock: DEFAULT_FOCK,
    }
}

/// Two-level Rabi ground energy at the reference coupling, in units of `omega_c`.
pub fn reference_ground_energy() -> Result<f64> {
    Ok(ground_state_analysis(&reference_rabi_params())?.energy_e0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Thermal,
    /// `|0u>`.
    Ground,
    Explicit(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: LambdaParams,
    pub schedule: PulseSchedule,
    pub profile: KappaProfile,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: InitialState,
    pub integrator: IntegratorConfig,
}

impl Scenario {
    /// Switchable meter at T = 0 over `[-75, 450]`, switched on at 90.
    pub fn switchable_meter() -> Result<Self> {
        let params = LambdaParams::reference(reference_ground_energy()?).zero_temperature();
        Ok(Self {
            schedule: PulseSchedule::from_params(&params),
            params,
            profile: KappaProfile::switchable(SWITCH_ON_TIME),
            t_start: SWITCHABLE_WINDOW.0,
            t_end: SWITCHABLE_WINDOW.1,
            initial: InitialState::Thermal,
            integrator: IntegratorConfig::default(),
        })
    }

    /// Always-on meter at `beta omega_c = 1.95` over `[-75, 350]`.
    pub fn always_on_meter() -> Result<Self> {
        let params = LambdaParams::reference(reference_ground_energy()?);
        Ok(Self {
            schedule: PulseSchedule::from_params(&params),
            params,
            profile: KappaProfile::AlwaysOn,
            t_start: ALWAYS_ON_WINDOW.0,
            t_end: ALWAYS_ON_WINDOW.1,
            initial: InitialState::Thermal,
            integrator: IntegratorConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.profile.validate()?;
        self.integrator.validate()?;
        let p = &self.params;
        if !(self.t_start < -p.tau - 2.0 * p.t_w) {
            return Err(Error::InvalidParameter(format!(
                "t_start = {} must precede -tau - 2 t_w = {}",
                self.t_start,
                -p.tau - 2.0 * p.t_w
            )));
        }
        if !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must exceed t_start = {}",
                self.t_end, self.t_start
            )));
        }
        if !(self.schedule.omega_s_peak >= 0.0 && self.schedule.omega_p_peak >= 0.0) {
            return Err(Error::InvalidParameter("pulse peaks must be non-negative".into()));
        }
        if let InitialState::Explicit(rho) = &self.initial {
            if rho.dim() != DIM {
                return Err(Error::InvalidParameter(format!(
                    "explicit initial state must be {DIM}x{DIM}"
                )));
            }
        }
        Ok(())
    }

    /// Protocol duration `t_M`.
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// New overlaps at fixed drive amplitudes; pulse peaks scale with them.
    pub fn with_overlaps(mut self, c0: Complex64, c2: Complex64) -> Self {
        self.schedule = self.schedule.rescaled_for_overlaps(&self.params, c0, c2);
        self.params.c0 = c0;
        self.params.c2 = c2;
        self
    }

    pub fn initial_state(&self) -> DensityMatrix {
        match &self.initial {
            InitialState::Thermal => thermal_state(&self.params),
            InitialState::Ground => DensityMatrix::pure(DIM, U0),
            InitialState::Explicit(rho) => rho.clone(),
        }
    }

    /// Sets a numeric parameter by name.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut s = self.clone();
        let p = &mut s.params;
        match axis {
            "kappa" | "kappa_max" => p.kappa_max = value,
            "gamma" => p.gamma = value,
            "t_w" => p.t_w = value,
            "tau" => p.tau = value,
            "omega0" => {
                let scale = value / p.omega0;
                s.schedule.omega_s_peak *= scale;
                s.schedule.omega_p_peak *= scale;
                p.omega0 = value;
            }
            "omega_c" => p.omega_c = value,
            "eps_prime" => p.eps_prime = value,
            "energy_e0" => p.energy_e0 = value,
            "beta" => p.beta = value,
            "beta_omega_c" => p.beta = value / p.omega_c,
            "omega_s_peak" => s.schedule.omega_s_peak = value,
            "omega_p_peak" => s.schedule.omega_p_peak = value,
            "overlap0_sq" | "overlap2_sq" => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::InvalidParameter(format!("{axis} must lie in [0, 1]")));
                }
                let amp = Complex64::new(value.sqrt(), 0.0);
                let (c0, c2) = if axis == "overlap0_sq" { (amp, p.c2) } else { (p.c0, amp) };
                s = s.with_overlaps(c0, c2);
            }
            "t_sm" | "rise_time" => match &mut s.profile {
                KappaProfile::Switchable { t_sm, rise_time } => {
                    if axis == "t_sm" {
                        *t_sm = value;
                    } else {
                        *rise_time = value;
                    }
                }
                KappaProfile::AlwaysOn => {
                    return Err(Error::Config(format!(
                        "axis {axis} needs a switchable meter"
                    )))
                }
            },
            "t_start" => s.t_start = value,
            "t_end" => s.t_end = value,
            other => return Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
        s.validate()?;
        Ok(s)
    }
}

pub const SWEEP_AXES: &[&str] = &[
    "kappa", "gamma", "t_w", "tau", "omega0", "omega_c", "eps_prime", "energy_e0", "beta",
    "beta_omega_c", "omega_s_peak", "omega_p_peak", "overlap0_sq", "overlap2_sq", "t_sm",
    "rise_time", "t_start", "t_end",
];

/// Gibbs state over the four retained levels with energies `-eps' + n omega_c`
/// for `|n u>` and `E0` for `|Phi>`.
pub fn thermal_state(params: &LambdaParams) -> DensityMatrix {
    DensityMatrix::from_trusted(crate::linalg::HermitianMatrix::from_real_diagonal(&thermal_populations(params)).into_matrix())
}

pub fn thermal_populations(params: &LambdaParams) -> [f64; 4] {
    if params.is_zero_temperature() {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let e = level_energies(params);
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let w = e.map(|x| (-params.beta * (x - e_min)).exp());
    let z: f64 = w.iter().sum();
    w.map(|x| x / z)
}

/// Lab-frame energies of `|0u>, |1u>, |2u>, |Phi>`.
pub fn level_energies(params: &LambdaParams) -> [f64; 4] {
    [
        -params.eps_prime,
        -params.eps_prime + params.omega_c,
        -params.eps_prime + 2.0 * params.omega_c,
        params.energy_e0,
    ]
}

/// `<A^dag A>` in the four-level Gibbs state.
pub fn thermal_photon_number(params: &LambdaParams) -> f64 {
    let p = thermal_populations(params);
    p[U1] + 2.0 * p[U2]
}

/// Bose-Einstein occupation of the untruncated mode, for comparison.
pub fn bose_einstein_occupation(params: &LambdaParams) -> f64 {
    if params.is_zero_temperature() {
        0.0
    } else {
        1.0 / params.beta_omega_c().exp_m1()
    }
}

/// Full master-equation problem for a scenario, with the emitted-photon counter.
pub fn build_problem(scenario: &Scenario) -> LindbladProblem {
    let params = scenario.params;
    let schedule = scenario.schedule;
    let profile = scenario.profile;

    let h = Arc::new(move |t: f64| {
        let (s, p) = schedule.amplitudes(t, &params);
        control_matrix(s, p)
    });
    let kappa = Arc::new(move |t: f64| params.kappa_max * profile.fraction(t));
    let absorption = cavity_absorption_factor(&params);
    let a = projected_annihilation();

    let emission = Channel {
        operator: a.clone(),
        rate: kappa.clone(),
    };
    let k = kappa.clone();
    let absorb = Channel {
        operator: a.adjoint(),
        rate: Arc::new(move |t| k(t) * absorption),
    };
    let mut problem = LindbladProblem::new(DIM, h)
        .with_channel(emission)
        .with_channel(absorb)
        .with_counter(Counter {
            observable: photon_number(),
            rate: kappa,
        });
    for (op, rate) in atomic_operators().into_iter().zip(atomic_rates(&params)) {
        problem = problem.with_channel(Channel::constant(op, rate));
    }
    problem
}

#[derive(Debug, Clone)]
pub struct CycleResult {
    pub trajectory: Trajectory,
    /// `int kappa <A^dag A> dt` over the cycle.
    pub photons_total: f64,
    /// `kappa_mean * <A^dag A>_th * t_M`.
    pub photons_thermal: f64,
    pub vp_pairs_detected: f64,
    pub j_total: f64,
    pub j_thermal: f64,
    pub j_extra: f64,
    pub kappa_mean: f64,
    pub n_thermal: f64,
    pub t_m: f64,
    /// `P2` at the meter switch-on time (switchable meter only).
    pub p2_at_switch: Option<f64>,
    pub initial_state: DensityMatrix,
    pub final_state: DensityMatrix,
}

impl CycleResult {
    pub fn summary(&self, scenario: &Scenario) -> CycleSummary {
        CycleSummary {
            photons_total: self.photons_total,
            photons_thermal: self.photons_thermal,
            vp_pairs_detected: self.vp_pairs_detected,
            j_total: self.j_total,
            j_thermal: self.j_thermal,
            j_extra: self.j_extra,
            kappa_mean: self.kappa_mean,
            n_thermal: self.n_thermal,
            t_m: self.t_m,
            initial_populations: self.initial_state.populations(),
            final_populations: self.final_state.populations(),
            p2_peak: self
                .trajectory
                .population_series(U2)
                .into_iter()
                .fold(0.0, f64::max),
            p2_at_switch: self.p2_at_switch,
            adiabaticity_product: scenario.schedule.adiabaticity_product(&scenario.params),
            integration: self.trajectory.diagnostics,
        }
    }
}

/// Scalar results of one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub photons_total: f64,
    pub photons_thermal: f64,
    pub vp_pairs_detected: f64,
    pub j_total: f64,
    pub j_thermal: f64,
    pub j_extra: f64,
    pub kappa_mean: f64,
    pub n_thermal: f64,
    pub t_m: f64,
    pub initial_populations: Vec<f64>,
    pub final_populations: Vec<f64>,
    pub p2_peak: f64,
    pub p2_at_switch: Option<f64>,
    pub adiabaticity_product: f64,
    pub integration: IntegrationDiagnostics,
}

/// Runs one cycle and fills the per-sample observables
/// `P0, P1, P2, PPhi, n_exp, photons_cum, vp_conv, omega_s, omega_p, kappa`.
pub fn run_cycle(scenario: &Scenario) -> Result<CycleResult> {
    scenario.validate()?;
    let params = &scenario.params;
    let problem = build_problem(scenario);
    let rho0 = scenario.initial_state();

    let probes: Vec<f64> = match scenario.profile {
        KappaProfile::Switchable { t_sm, .. } if t_sm > scenario.t_start && t_sm < scenario.t_end => {
            vec![t_sm]
        }
        _ => Vec::new(),
    };
    let mut trajectory = integrate_with_probes(
        &rho0,
        scenario.t_start,
        scenario.t_end,
        &problem,
        &scenario.integrator,
        &probes,
    )?;

    let t_m = scenario.duration();
    let n_thermal = thermal_photon_number(params);
    let kappa_integral = params.kappa_max * scenario.profile.fraction_integral(scenario.t_start, scenario.t_end);
    let kappa_mean = kappa_integral / t_m;
    let photons_total = *trajectory
        .series(COUNTER_SERIES)
        .and_then(|s| s.last())
        .expect("cycle problems carry a photon counter");
    let photons_thermal = kappa_mean * n_thermal * t_m;
    let j_total = photons_total / t_m;
    let j_thermal = kappa_mean * n_thermal;

    let n_op = photon_number();
    let obs = &mut trajectory.observables;
    let states = &trajectory.states;
    let times = &trajectory.times;
    for (name, k) in [("P0", U0), ("P1", U1), ("P2", U2), ("PPhi", PHI)] {
        obs.insert(name.into(), states.iter().map(|s| s.population(k)).collect());
    }
    obs.insert("n_exp".into(), states.iter().map(|s| s.expectation(&n_op)).collect());
    let pulses: Vec<(f64, f64)> = times.iter().map(|&t| scenario.schedule.amplitudes(t, params)).collect();
    obs.insert("omega_s".into(), pulses.iter().map(|p| p.0).collect());
    obs.insert("omega_p".into(), pulses.iter().map(|p| p.1).collect());
    obs.insert(
        "kappa".into(),
        times.iter().map(|&t| params.kappa_max * scenario.profile.fraction(t)).collect(),
    );
    let vp = converted_vp_series(&trajectory, params, &scenario.profile);
    trajectory.observables.insert("vp_conv".into(), vp);

    let p2_at_switch = trajectory.probes.first().map(|p| p.state.population(U2));
    let final_state = trajectory.final_state().clone();
    Ok(CycleResult {
        photons_total,
        photons_thermal,
        vp_pairs_detected: (photons_total - photons_thermal) / 2.0,
        j_total,
        j_thermal,
        j_extra: j_total - j_thermal,
        kappa_mean,
        n_thermal,
        t_m,
        p2_at_switch,
        initial_state: rho0,
        final_state,
        trajectory,
    })
}

/// Cumulative emitted photons minus the thermal baseline
/// `int_{t_start}^t kappa(s) <A^dag A>_th ds`.
pub fn converted_vp_series(trajectory: &Trajectory, params: &LambdaParams, profile: &KappaProfile) -> Vec<f64> {
    let n_th = thermal_photon_number(params);
    let Some(cum) = trajectory.series(COUNTER_SERIES) else {
        return Vec::new();
    };
    let t0 = trajectory.times[0];
    trajectory
        .times
        .iter()
        .zip(cum)
        .map(|(&t, &n)| n - params.kappa_max * profile.fraction_integral(t0, t) * n_th)
        .collect()
}

#[derive(Debug, Clone)]
pub struct LimitingCycle {
    pub cycle: CycleResult,
    pub iterations: usize,
    pub residual: f64,
}

/// Feeds each cycle's final state back as the next initial state until the
/// entrywise change over a cycle drops below `tol`.
pub fn find_limiting_cycle(scenario: &Scenario, tol: f64, max_iter: usize) -> Result<LimitingCycle> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let mut current = scenario.clone();
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let cycle = run_cycle(&current)?;
        residual = cycle.final_state.max_abs_diff(&cycle.initial_state);
        if residual < tol {
            return Ok(LimitingCycle {
                cycle,
                iterations: iteration,
                residual,
            });
        }
        current.initial = InitialState::Explicit(cycle.final_state);
    }
    Err(Error::CycleNotConverged {
        iterations: max_iter,
        residual,
    })
}

/// Final `|2u>` population after STIRAP under meter-induced dephasing,
/// `1/3 + 2/3 exp(-3 kappa_phi t_sep^2 / (16 tau))` with `kappa_phi = 3 kappa / 2`.
pub fn stirap_dephasing_estimate(kappa: f64, t_sep: f64, tau: f64) -> f64 {
    let kappa_phi = 1.5 * kappa;
    if kappa_phi == 0.0 || t_sep == 0.0 {
        return 1.0;
    }
    1.0 / 3.0 + 2.0 / 3.0 * (-3.0 * kappa_phi * t_sep * t_sep / (16.0 * tau)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: CycleSummary,
}

/// Independent cycles for each value of `axis`, evaluated in parallel and
/// returned in input order.
pub fn parameter_sweep(base: &Scenario, axis: &str, values: &[f64]) -> Result<Vec<SweepPoint>> {
    let scenarios = values
        .iter()
        .map(|&v| base.with_axis(axis, v))
        .collect::<Result<Vec<_>>>()?;
    scenarios
        .par_iter()
        .zip(values.par_iter())
        .map(|(s, &value)| {
            let r = run_cycle(s)?;
            Ok(SweepPoint {
                value,
                summary: r.summary(s),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_state_reference_values() {
        let p = LambdaParams::reference(reference_ground_energy().unwrap());
        let pops = thermal_populations(&p);
        // oracle: direct Boltzmann weights with beta*omega_c = 1.95 and
        // beta*(E0 + eps') = 1.95 * (5.9 - 0.1332942354616302)
        let b = 1.95f64;
        let w = [1.0, (-b).exp(), (-2.0 * b).exp(), (-b * (5.9 - 0.1332942354616302)).exp()];
        let z: f64 = w.iter().sum();
        for k in 0..4 {
            assert!((pops[k] - w[k] / z).abs() < 1e-12);
        }
        assert!((pops[0] - 0.860).abs() < 5e-4);
        assert!((pops[1] - 0.122).abs() < 5e-4);
        assert!((pops[2] - 0.017).abs() < 5e-4);
        assert!(pops[3] < 1e-4);
        assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_zero_temperature() {
        let p = LambdaParams::reference(-0.13).zero_temperature();
        assert_eq!(thermal_populations(&p), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(thermal_photon_number(&p), 0.0);
        assert_eq!(bose_einstein_occupation(&p), 0.0);
    }

    #[test]
    fn thermal_normalized_for_any_beta() {
        let base = LambdaParams::reference(-0.13);
        for bw in [1e-3, 0.1, 1.0, 1.95, 10.0, 700.0] {
            let p = LambdaParams { beta: bw / base.omega_c, ..base };
            let s: f64 = thermal_populations(&p).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "beta omega_c = {bw}");
        }
    }

    #[test]
    fn dephasing_formula() {
        assert_eq!(stirap_dephasing_estimate(0.0, 21.0, 10.5), 1.0);
        assert!((stirap_dephasing_estimate(1e12, 21.0, 10.5) - 1.0 / 3.0).abs() < 1e-15);
        // 3 * (3/2)(1/75) * 21^2 / (16 * 10.5) = 0.1575
        let want = 1.0 / 3.0 + 2.0 / 3.0 * (-0.1575f64).exp();
        let got = stirap_dephasing_estimate(1.0 / 75.0, 21.0, 10.5);
        assert!((got - want).abs() < 1e-14);
        assert!((got - 0.903).abs() < 1e-3);
    }

    #[test]
    fn scenario_validation() {
        let s = Scenario::always_on_meter().unwrap();
        assert!(s.validate().is_ok());
        let late = Scenario { t_start: -30.0, ..s.clone() };
        assert!(late.validate().is_err());
        let empty = Scenario { t_end: -80.0, ..s.clone() };
        assert!(empty.validate().is_err());
        assert!(matches!(s.with_axis("bogus", 1.0), Err(Error::Config(_))));
        assert!(matches!(s.with_axis("t_sm", 1.0), Err(Error::Config(_))));
        assert!(s.with_axis("kappa", -1.0).is_err());
    }

    #[test]
    fn axis_updates() {
        let s = Scenario::always_on_meter().unwrap();
        assert_eq!(s.with_axis("kappa", 0.5).unwrap().params.kappa_max, 0.5);
        assert_eq!(s.with_axis("t_w", 2.0).unwrap().params.t_w, 2.0);
        let b = s.with_axis("beta_omega_c", 3.0).unwrap();
        assert!((b.params.beta_omega_c() - 3.0).abs() < 1e-12);
        let o = s.with_axis("omega0", 2.0).unwrap();
        assert_eq!(o.schedule.omega_s_peak, 2.0);
        let z = s.with_axis("overlap2_sq", 0.0).unwrap();
        assert_eq!(z.schedule.omega_s_peak, 0.0);
        assert_eq!(z.params.c2.norm(), 0.0);
        for axis in SWEEP_AXES {
            let sw = Scenario::switchable_meter().unwrap();
            let v = match *axis {
                "t_start" => -80.0,
                "t_end" => 400.0,
                "overlap0_sq" | "overlap2_sq" => 0.3,
                "beta" => 0.01,
                _ => 1.5,
            };
            let r = sw.with_axis(axis, v);
            assert!(!matches!(r, Err(Error::Config(_))), "axis {axis}");
        }
    }
}
