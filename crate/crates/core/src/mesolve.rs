//! Time-dependent Lindblad master equation for small dense systems.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::JumpChannel;
use crate::linalg::{hermitian_deviation, min_eigenvalue, trace, CMatrix, HermitianMatrix};
use crate::ode::{self, StepControl, StepStats};

pub const DM_HERMITIAN_TOL: f64 = 1e-10;
pub const DM_TRACE_TOL: f64 = 1e-8;
pub const DM_POSITIVITY_TOL: f64 = 1e-8;
/// Hard limits enforced during integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
pub const POSITIVITY_LIMIT: f64 = 1e-6;

/// Series name of the accumulated counter integral.
pub const COUNTER_SERIES: &str = "photons_cum";

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::with_tolerance(m, DM_HERMITIAN_TOL)?;
        let tr = trace(h.as_matrix());
        if (tr - Complex64::new(1.0, 0.0)).norm() > DM_TRACE_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let lam = min_eigenvalue(&h)?;
        if lam < -DM_POSITIVITY_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix has negative eigenvalue {lam:e}"
            )));
        }
        Ok(Self(h.into_matrix()))
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(m)
    }

    /// `|k><k|` in dimension `dim`.
    pub fn pure(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    /// Diagonal state from populations (validated).
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        let n = p.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(p[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.population(k)).collect()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn expectation(&self, observable: &CMatrix) -> f64 {
        trace(&(observable * &self.0)).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&HermitianMatrix::with_tolerance(self.0.clone(), DM_HERMITIAN_TOL)?)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.0)
    }

    /// Entrywise max of `|self - other|`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub sample_count: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_step: 0.1,
            sample_count: 2000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("abs_tol and rel_tol must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        if self.sample_count < 2 {
            return Err(Error::InvalidParameter("sample_count must be at least 2".into()));
        }
        Ok(())
    }

    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }
}

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type HamiltonianFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// A jump operator with a time-dependent rate.
#[derive(Clone)]
pub struct Channel {
    pub operator: CMatrix,
    pub rate: RateFn,
}

impl Channel {
    pub fn constant(operator: CMatrix, rate: f64) -> Self {
        Self {
            operator,
            rate: Arc::new(move |_| rate),
        }
    }
}

/// Accumulates `int rate(t) <observable>_t dt` alongside the state.
#[derive(Clone)]
pub struct Counter {
    pub observable: CMatrix,
    pub rate: RateFn,
}

/// `d rho/dt = -i[H(t), rho] + sum_k rate_k(t) D[L_k] rho`.
#[derive(Clone)]
pub struct LindbladProblem {
    pub dim: usize,
    pub hamiltonian: HamiltonianFn,
    pub channels: Vec<Channel>,
    pub counter: Option<Counter>,
}

impl LindbladProblem {
    pub fn new(dim: usize, hamiltonian: HamiltonianFn) -> Self {
        Self {
            dim,
            hamiltonian,
            channels: Vec::new(),
            counter: None,
        }
    }

    pub fn constant(h: CMatrix) -> Self {
        let dim = h.nrows();
        Self::new(dim, Arc::new(move |_| h.clone()))
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channels.push(channel);
        self
    }

    pub fn with_counter(mut self, counter: Counter) -> Self {
        self.counter = Some(counter);
        self
    }

    /// Snapshot of the channels at time `t`.
    pub fn channels_at(&self, t: f64) -> Vec<JumpChannel> {
        self.channels
            .iter()
            .map(|c| JumpChannel {
                operator: c.operator.clone(),
                rate: (c.rate)(t),
            })
            .collect()
    }
}

/// Right-hand side of the master equation for a fixed Hamiltonian and
/// channel list.
pub fn lindblad_rhs(rho: &CMatrix, h: &CMatrix, channels: &[JumpChannel]) -> Result<CMatrix> {
    let minus_i = Complex64::new(0.0, -1.0);
    let mut d = (h * rho - rho * h) * minus_i;
    for ch in channels {
        if !(ch.rate >= 0.0) {
            return Err(Error::ContractViolation(format!(
                "jump rate must be non-negative, got {}",
                ch.rate
            )));
        }
        if ch.rate == 0.0 {
            continue;
        }
        let l = &ch.operator;
        let ld = l.adjoint();
        let ldl = &ld * l;
        let term = l * rho * &ld - (&ldl * rho + rho * &ldl) * Complex64::new(0.5, 0.0);
        d += term * Complex64::new(ch.rate, 0.0);
    }
    Ok(d)
}

/// Problem with `L^dag L` cached for the hot loop.
struct Prepared<'a> {
    problem: &'a LindbladProblem,
    jumps: Vec<(CMatrix, CMatrix, CMatrix)>,
}

impl<'a> Prepared<'a> {
    fn new(problem: &'a LindbladProblem) -> Self {
        let jumps = problem
            .channels
            .iter()
            .map(|c| {
                let ld = c.operator.adjoint();
                let ldl = &ld * &c.operator;
                (c.operator.clone(), ld, ldl)
            })
            .collect();
        Self { problem, jumps }
    }

    fn rhs(&self, t: f64, rho: &CMatrix) -> Result<CMatrix> {
        let h = (self.problem.hamiltonian)(t);
        let mut d = (&h * rho - rho * &h) * Complex64::new(0.0, -1.0);
        for (ch, (l, ld, ldl)) in self.problem.channels.iter().zip(&self.jumps) {
            let rate = (ch.rate)(t);
            if !(rate >= 0.0) {
                return Err(Error::ContractViolation(format!(
                    "jump rate must be non-negative, got {rate} at t = {t}"
                )));
            }
            if rate == 0.0 {
                continue;
            }
            let term = l * rho * ld - (ldl * rho + rho * ldl) * Complex64::new(0.5, 0.0);
            d += term * Complex64::new(rate, 0.0);
        }
        Ok(d)
    }
}

fn unpack(y: &[f64], dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        Complex64::new(y[k], y[k + 1])
    })
}

fn pack(m: &CMatrix, out: &mut [f64]) {
    let dim = m.nrows();
    for i in 0..dim {
        for j in 0..dim {
            let k = 2 * (i * dim + j);
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
        }
    }
}

fn symmetrize(y: &mut [f64], dim: usize) {
    for i in 0..dim {
        let k = 2 * (i * dim + i);
        y[k + 1] = 0.0;
        for j in (i + 1)..dim {
            let a = 2 * (i * dim + j);
            let b = 2 * (j * dim + i);
            let re = 0.5 * (y[a] + y[b]);
            let im = 0.5 * (y[a + 1] - y[b + 1]);
            y[a] = re;
            y[b] = re;
            y[a + 1] = im;
            y[b + 1] = -im;
        }
    }
}

fn trace_of(y: &[f64], dim: usize) -> f64 {
    (0..dim).map(|i| y[2 * (i * dim + i)]).sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationDiagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    /// Max `|tr rho - 1|` over accepted steps and samples.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue seen over all samples.
    pub min_eigenvalue: f64,
}

/// State sampled at an extra requested time.
#[derive(Debug, Clone)]
pub struct Probe {
    pub t: f64,
    pub state: DensityMatrix,
    pub counter: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: BTreeMap<String, Vec<f64>>,
    pub probes: Vec<Probe>,
    pub diagnostics: IntegrationDiagnostics,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least two samples")
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(Vec::as_slice)
    }

    pub fn population_series(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(k)).collect()
    }
}

pub fn uniform_grid(t_start: f64, t_end: f64, count: usize) -> Vec<f64> {
    let span = t_end - t_start;
    (0..count)
        .map(|k| {
            if k + 1 == count {
                t_end
            } else {
                t_start + span * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

/// Integrates the master equation on `[t_start, t_end]`, sampling on a
/// uniform grid of `config.sample_count` points.
pub fn integrate(
    rho0: &DensityMatrix,
    t_start: f64,
    t_end: f64,
    problem: &LindbladProblem,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_with_probes(rho0, t_start, t_end, problem, config, &[])
}

/// As [`integrate`], additionally returning the state at each `probe_times`
/// entry (which must lie inside the window).
pub fn integrate_with_probes(
    rho0: &DensityMatrix,
    t_start: f64,
    t_end: f64,
    problem: &LindbladProblem,
    config: &IntegratorConfig,
    probe_times: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    let dim = problem.dim;
    if rho0.dim() != dim {
        return Err(Error::ContractViolation(format!(
            "initial state has dimension {}, problem has {dim}",
            rho0.dim()
        )));
    }
    if !(t_end > t_start) {
        return Err(Error::ContractViolation(format!(
            "t_end ({t_end}) must exceed t_start ({t_start})"
        )));
    }
    if probe_times.iter().any(|&t| !(t >= t_start && t <= t_end)) {
        return Err(Error::ContractViolation("probe time outside the window".into()));
    }

    // merged, tagged sample schedule: Ok(grid index) or Err(probe index)
    let grid = uniform_grid(t_start, t_end, config.sample_count);
    let mut schedule: Vec<(f64, std::result::Result<usize, usize>)> = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, Ok(k)))
        .chain(probe_times.iter().enumerate().map(|(k, &t)| (t, Err(k))))
        .collect();
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0));
    let times: Vec<f64> = schedule.iter().map(|s| s.0).collect();

    let prepared = Prepared::new(problem);
    let has_counter = problem.counter.is_some();
    let n_state = 2 * dim * dim;
    let mut y0 = vec![0.0; n_state + has_counter as usize];
    pack(rho0.as_matrix(), &mut y0);

    let mut states: Vec<Option<DensityMatrix>> = vec![None; grid.len()];
    let mut counter_series = vec![0.0; grid.len()];
    let mut probes: Vec<Option<Probe>> = vec![None; probe_times.len()];
    let mut max_drift = (rho0.trace() - 1.0).abs();
    let mut min_eig = f64::INFINITY;

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let rho = unpack(y, dim);
        let d = prepared.rhs(t, &rho)?;
        pack(&d, dy);
        if let Some(c) = &problem.counter {
            dy[n_state] = (c.rate)(t) * trace(&(&c.observable * &rho)).re;
        }
        Ok(())
    };

    let after_step = |t: f64, y: &mut [f64]| -> Result<()> {
        symmetrize(y, dim);
        let drift = (trace_of(y, dim) - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::TraceDrift {
                t,
                drift,
                limit: TRACE_DRIFT_LIMIT,
            });
        }
        Ok(())
    };

    let mut sample_drift = 0.0f64;
    let on_sample = |i: usize, t: f64, y: &[f64]| -> Result<()> {
        let mut ys = y.to_vec();
        symmetrize(&mut ys, dim);
        let rho = unpack(&ys, dim);
        sample_drift = sample_drift.max((trace(&rho).re - 1.0).abs());
        let lam = min_eigenvalue(&HermitianMatrix::from_trusted(rho.clone()))?;
        min_eig = min_eig.min(lam);
        if lam < -POSITIVITY_LIMIT {
            return Err(Error::Positivity {
                t,
                min_eigenvalue: lam,
            });
        }
        let counter = if has_counter { ys[n_state] } else { 0.0 };
        match schedule[i].1 {
            Ok(k) => {
                states[k] = Some(DensityMatrix::from_trusted(rho));
                counter_series[k] = counter;
            }
            Err(k) => {
                probes[k] = Some(Probe {
                    t,
                    state: DensityMatrix::from_trusted(rho),
                    counter,
                });
            }
        }
        Ok(())
    };

    let control = StepControl {
        abs_tol: config.abs_tol,
        rel_tol: config.rel_tol,
        max_step: config.max_step,
    };
    let StepStats {
        accepted,
        rejected,
        rhs_evals,
    } = ode::integrate(rhs, t_start, t_end, &y0, control, &times, after_step, on_sample)?;

    let states: Vec<DensityMatrix> = states
        .into_iter()
        .map(|s| s.expect("every grid point is sampled"))
        .collect();
    let probes = probes
        .into_iter()
        .map(|p| p.expect("every probe is sampled"))
        .collect();
    let mut observables = BTreeMap::new();
    if has_counter {
        observables.insert(COUNTER_SERIES.to_string(), counter_series);
    }
    Ok(Trajectory {
        times: grid,
        states,
        observables,
        probes,
        diagnostics: IntegrationDiagnostics {
            accepted_steps: accepted,
            rejected_steps: rejected,
            rhs_evals,
            max_trace_drift: max_drift.max(sample_drift),
            min_eigenvalue: min_eig,
        },
    })
}
