//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use vpdetect::cli::{execute, RunOutput};
use vpdetect::config::{Preset, RunConfig};
use vpdetect::lambda::{ket_bra, PulseSchedule, U0, U2};
use vpdetect::mesolve::{integrate, Channel, DensityMatrix, IntegratorConfig, LindbladProblem};
use vpdetect::protocol::{
    find_limiting_cycle, run_cycle, stirap_dephasing_estimate, thermal_populations, Scenario,
};
use vpdetect::rabi::{check_truncation_convergence, ground_state_analysis, RabiParams};

// Targets and tolerances.
const OVERLAP0_TARGET: f64 = 0.42;
const OVERLAP0_TOL: f64 = 0.02;
const OVERLAP2_TARGET: f64 = 0.05;
const OVERLAP2_TOL: f64 = 0.01;
const TRUNCATION_TOL: f64 = 1e-8;
const GROUND_STATE_BUDGET: Duration = Duration::from_secs(1);
const PARITY_TOL: f64 = 1e-10;
const STIRAP_MIN_P2: f64 = 0.99;
const NULL_MAX_TRANSFER: f64 = 0.01;
const FIG1B_MIN_P2_SWITCH: f64 = 0.99;
const FIG1B_PHOTONS: f64 = 2.0;
const FIG1B_PHOTONS_TOL: f64 = 0.05;
const FIG1B_MIN_FINAL_P0: f64 = 0.98;
const FIG1B_BUDGET: Duration = Duration::from_secs(10);
const CYCLE_TOL: f64 = 1e-6;
const CYCLE_MAX_ITER: usize = 20;
const GIBBS_TOL: f64 = 0.02;
const PAIRS_VS_P0_TOL: f64 = 0.05;
const LINEARITY_TOL: f64 = 1e-6;
const NCONV_TOL: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-7;
const DEPHASING_EXPECTED: f64 = 0.903;
const DEPHASING_TOL: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = check_truncation_convergence(&RabiParams::new(1.0, 0.5, 40).unwrap(), TRUNCATION_TOL).unwrap();
    let elapsed = start.elapsed();
    let (o0, o2) = (report.ground.overlap0_sq(), report.ground.overlap2_sq());
    let pass = (o0 - OVERLAP0_TARGET).abs() <= OVERLAP0_TOL
        && (o2 - OVERLAP2_TARGET).abs() <= OVERLAP2_TOL
        && elapsed < GROUND_STATE_BUDGET;
    outcome(
        pass,
        format!(
            "two-level Rabi eps=1 g=0.5 n_fock={}: |<0g|Phi>|^2={o0:.6} (target {OVERLAP0_TARGET}±{OVERLAP0_TOL}, deviation {:+.4}), \
             |<2g|Phi>|^2={o2:.6} (target {OVERLAP2_TARGET}±{OVERLAP2_TOL}, deviation {:+.4}), {:.1} ms",
            report.n_fock,
            o0 - OVERLAP0_TARGET,
            o2 - OVERLAP2_TARGET,
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let eps = 0.5 + 1.5 * i as f64 / 4.0;
            let g = j as f64 / 4.0;
            let gs = ground_state_analysis(&RabiParams::new(eps, g, 40).unwrap()).unwrap();
            for n in 0..gs.amp_g.len() {
                let forbidden = if n % 2 == 1 { gs.amp_g[n] } else { gs.amp_e[n] };
                worst = worst.max(forbidden.norm());
            }
        }
    }
    outcome(worst < PARITY_TOL, format!("max parity-forbidden amplitude over 5x5 grid = {worst:.2e}"))
}

fn ideal_scenario() -> Scenario {
    let mut s = Scenario::always_on_meter().unwrap();
    s.params = s.params.zero_temperature();
    s.params.kappa_max = 0.0;
    s.params.gamma = 0.0;
    s
}

fn criterion_3() -> Outcome {
    let ideal = ideal_scenario();
    let p2 = run_cycle(&ideal).unwrap().final_state.population(U2);
    let null = ideal.clone().with_overlaps(ideal.params.c0, Complex64::new(0.0, 0.0));
    let r = run_cycle(&null).unwrap();
    let null_peak = r.trajectory.population_series(U2).into_iter().fold(0.0, f64::max);
    outcome(
        p2 >= STIRAP_MIN_P2 && null_peak <= NULL_MAX_TRANSFER,
        format!("ideal STIRAP final P2 = {p2:.5} (>= {STIRAP_MIN_P2}); c2=0 max P2 = {null_peak:.2e} (<= {NULL_MAX_TRANSFER})"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let r = run_cycle(&Scenario::switchable_meter().unwrap()).unwrap();
    let elapsed = start.elapsed();
    let p2 = r.p2_at_switch.unwrap();
    let p0 = r.final_state.population(U0);
    let pass = p2 >= FIG1B_MIN_P2_SWITCH
        && (r.photons_total - FIG1B_PHOTONS).abs() <= FIG1B_PHOTONS_TOL
        && p0 >= FIG1B_MIN_FINAL_P0
        && elapsed < FIG1B_BUDGET;
    outcome(
        pass,
        format!(
            "P2(t_sm) = {p2:.5}, photons = {:.5}, final P0 = {p0:.5}, {:.2} s",
            r.photons_total,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let s = Scenario::always_on_meter().unwrap();
    let lc = find_limiting_cycle(&s, CYCLE_TOL, CYCLE_MAX_ITER).unwrap();
    let start = lc.cycle.initial_state.populations();
    let gibbs = thermal_populations(&s.params);
    let gibbs_dev = start.iter().zip(gibbs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pairs = lc.cycle.vp_pairs_detected;
    let pairs_dev = (pairs - gibbs[U0]).abs();
    let pass = lc.iterations <= CYCLE_MAX_ITER && gibbs_dev <= GIBBS_TOL && pairs_dev <= PAIRS_VS_P0_TOL;
    outcome(
        pass,
        format!(
            "converged in {} iterations (residual {:.1e}); start populations {:?} vs Gibbs {:?}: max deviation {gibbs_dev:.4} (<= {GIBBS_TOL}); \
             VP pairs {pairs:.4} vs thermal P0 {:.4}: deviation {pairs_dev:.4} (<= {PAIRS_VS_P0_TOL})",
            lc.iterations,
            lc.residual,
            start.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            gibbs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            gibbs[U0]
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut s = Scenario::always_on_meter().unwrap();
    s.schedule = PulseSchedule::off();
    let r = run_cycle(&s).unwrap();
    let cum = r.trajectory.series("photons_cum").unwrap();
    let vp = r.trajectory.series("vp_conv").unwrap();
    let rate = s.params.kappa_max * r.n_thermal;
    let t0 = r.trajectory.times[0];
    let mut worst_rel = 0.0f64;
    for (&t, &n) in r.trajectory.times.iter().zip(cum).skip(1) {
        let line = rate * (t - t0);
        worst_rel = worst_rel.max((n - line).abs() / line);
    }
    let worst_vp = vp.iter().map(|x| x.abs()).fold(0.0, f64::max);
    outcome(
        worst_rel < LINEARITY_TOL && worst_vp < NCONV_TOL,
        format!("max relative deviation from kappa <A^dag A>_th t = {worst_rel:.2e}; max |N_conv| = {worst_vp:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for preset in [Preset::Fig1b, Preset::Fig2a, Preset::Fig2b] {
        let config = RunConfig::preset(preset).unwrap();
        let RunOutput::Cycle { report, .. } = execute(&config).unwrap() else {
            unreachable!("cycle preset")
        };
        let d = report.cycle.integration;
        pass &= d.max_trace_drift <= TRACE_TOL && d.min_eigenvalue >= -POSITIVITY_TOL;
        notes.push(format!("{}: drift {:.1e}, min eig {:.1e}", preset.name(), d.max_trace_drift, d.min_eigenvalue));
    }

    let cfg = IntegratorConfig {
        sample_count: 201,
        ..Default::default()
    };
    let kappa = 0.5;
    let lower = ket_bra(0, 1).view((0, 0), (2, 2)).into_owned();
    let decay = LindbladProblem::constant(CMat::zeros(2, 2)).with_channel(Channel::constant(lower, kappa));
    let traj = integrate(&DensityMatrix::pure(2, 1), 0.0, 3.0 / kappa, &decay, &cfg).unwrap();
    let decay_err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.population(1) - (-kappa * t).exp()).abs())
        .fold(0.0, f64::max);

    let omega = 0.8;
    let mut h = CMat::zeros(2, 2);
    h[(0, 1)] = c(omega / 2.0);
    h[(1, 0)] = c(omega / 2.0);
    let traj = integrate(&DensityMatrix::pure(2, 0), 0.0, 30.0, &LindbladProblem::constant(h), &cfg).unwrap();
    let rabi_err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.population(1) - (omega * t / 2.0).sin().powi(2)).abs())
        .fold(0.0, f64::max);

    let (h, jumps, rho0) = random_lindbladian_3(42);
    let liou = liouvillian(&h, &jumps);
    let mut problem = LindbladProblem::constant(h);
    for (op, rate) in &jumps {
        problem = problem.with_channel(Channel::constant(op.clone(), *rate));
    }
    let traj = integrate(&DensityMatrix::new(rho0.clone()).unwrap(), 0.0, 6.0, &problem, &cfg).unwrap();
    let v0 = vec_of(&rho0);
    let super_err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| max_abs(&(s.as_matrix() - unvec(&(expm(&(&liou * c(*t))) * &v0), 3))))
        .fold(0.0, f64::max);

    pass &= decay_err < ORACLE_TOL && rabi_err < ORACLE_TOL && super_err < ORACLE_TOL;
    notes.push(format!(
        "decay oracle {decay_err:.1e}, Rabi oracle {rabi_err:.1e}, superoperator oracle {super_err:.1e}"
    ));
    outcome(pass, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let kappa = 1.0 / 75.0;
    let tau = 10.5;
    let p2 = stirap_dephasing_estimate(kappa, 2.0 * tau, tau);
    outcome(
        (p2 - DEPHASING_EXPECTED).abs() <= DEPHASING_TOL,
        format!("P2 estimate (kappa = 1/75, tau = 10.5, t_sep = 2 tau) = {p2:.5}, expected {DEPHASING_EXPECTED} ± {DEPHASING_TOL}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("ground-state overlaps", criterion_1),
        ("parity selection", criterion_2),
        ("ideal STIRAP", criterion_3),
        ("switchable-meter cycle", criterion_4),
        ("always-on limiting cycle", criterion_5),
        ("thermal-baseline linearity", criterion_6),
        ("integrator properties", criterion_7),
        ("dephasing estimate", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", i + 1, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
