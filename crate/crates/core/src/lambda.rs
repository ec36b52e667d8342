//! Reduced four-level system `{|0u>, |1u>, |2u>, |Phi>}` driven by STIRAP
//! pulses and coupled to a meter and to an atomic bath.
//!
//! Time is measured in units of `1/omega0` and rates in units of `omega0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};

pub const DIM: usize = 4;
pub const U0: usize = 0;
pub const U1: usize = 1;
pub const U2: usize = 2;
pub const PHI: usize = 3;

/// Mode frequency of the reference device in units of the peak Rabi
/// frequency (2.03 GHz / 50 MHz).
pub const REF_OMEGA_C: f64 = 40.6;
pub const REF_T_W: f64 = 15.0;
pub const REF_TAU: f64 = 10.5;
/// `1/kappa = 5 T_W`.
pub const REF_KAPPA: f64 = 1.0 / 75.0;
pub const REF_EPS_PRIME_OVER_OMEGA_C: f64 = 5.9;
pub const REF_BETA_OMEGA_C: f64 = 1.95;
pub const REF_OVERLAP0_SQ: f64 = 0.42;
pub const REF_OVERLAP2_SQ: f64 = 0.05;

/// Default logistic rise time of the switchable meter.
pub const DEFAULT_RISE_TIME: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    /// Peak Rabi frequency; the unit of frequency.
    pub omega0: f64,
    /// Gaussian pulse width.
    pub t_w: f64,
    /// Half separation of the pulse centres.
    pub tau: f64,
    pub kappa_max: f64,
    pub gamma: f64,
    pub omega_c: f64,
    pub eps_prime: f64,
    pub energy_e0: f64,
    /// Inverse temperature; `f64::INFINITY` encodes T = 0.
    pub beta: f64,
    /// `<0g|Phi>`.
    pub c0: Complex64,
    /// `<2g|Phi>`.
    pub c2: Complex64,
}

impl LambdaParams {
    /// Reference parameter set with the ground energy `e0` given in units of
    /// the mode frequency.
    pub fn reference(e0_over_omega_c: f64) -> Self {
        Self {
            omega0: 1.0,
            t_w: REF_T_W,
            tau: REF_TAU,
            kappa_max: REF_KAPPA,
            gamma: REF_KAPPA,
            omega_c: REF_OMEGA_C,
            eps_prime: REF_EPS_PRIME_OVER_OMEGA_C * REF_OMEGA_C,
            energy_e0: e0_over_omega_c * REF_OMEGA_C,
            beta: REF_BETA_OMEGA_C / REF_OMEGA_C,
            c0: Complex64::new(REF_OVERLAP0_SQ.sqrt(), 0.0),
            c2: Complex64::new(REF_OVERLAP2_SQ.sqrt(), 0.0),
        }
    }

    pub fn zero_temperature(mut self) -> Self {
        self.beta = f64::INFINITY;
        self
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta.is_infinite()
    }

    /// `beta * omega_c`, infinite at T = 0.
    pub fn beta_omega_c(&self) -> f64 {
        self.beta * self.omega_c
    }

    /// `exp(-beta * energy)`, exactly 0 at T = 0 for positive energies.
    pub fn boltzmann(&self, energy: f64) -> f64 {
        if self.is_zero_temperature() {
            if energy > 0.0 {
                0.0
            } else if energy == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            (-self.beta * energy).exp()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("omega0", self.omega0), ("t_w", self.t_w), ("tau", self.tau)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("kappa_max", self.kappa_max),
            ("gamma", self.gamma),
            ("omega_c", self.omega_c),
            ("eps_prime", self.eps_prime),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !self.energy_e0.is_finite() {
            return Err(Error::InvalidParameter("energy_e0 must be finite".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive or infinite, got {}",
                self.beta
            )));
        }
        for (name, c) in [("c0", self.c0), ("c2", self.c2)] {
            if !(c.norm() <= 1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "|{name}| must not exceed 1, got {}",
                    c.norm()
                )));
            }
        }
        Ok(())
    }
}

/// Pulse envelope family. Only Gaussians are needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    #[default]
    Gaussian,
}

impl PulseShape {
    pub fn envelope(self, x: f64) -> f64 {
        match self {
            PulseShape::Gaussian => (-x * x).exp(),
        }
    }
}

/// Stokes and pump amplitudes in the counterintuitive order: the Stokes
/// pulse peaks at `-tau`, the pump at `+tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub shape: PulseShape,
    pub omega_s_peak: f64,
    pub omega_p_peak: f64,
}

impl PulseSchedule {
    pub fn from_params(params: &LambdaParams) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            omega_s_peak: params.omega0,
            omega_p_peak: params.omega0,
        }
    }

    pub fn off() -> Self {
        Self {
            shape: PulseShape::Gaussian,
            omega_s_peak: 0.0,
            omega_p_peak: 0.0,
        }
    }

    /// `(omega_s(t), omega_p(t))`.
    pub fn amplitudes(&self, t: f64, params: &LambdaParams) -> (f64, f64) {
        let s = self.omega_s_peak * self.shape.envelope((t + params.tau) / params.t_w);
        let p = self.omega_p_peak * self.shape.envelope((t - params.tau) / params.t_w);
        (s, p)
    }

    /// Rescales the peaks for new ground-state overlaps at fixed drive
    /// strength: the pump couples through `<0g|Phi>`, the Stokes through
    /// `<2g|Phi>`.
    pub fn rescaled_for_overlaps(&self, old: &LambdaParams, c0: Complex64, c2: Complex64) -> Self {
        let ratio = |new: Complex64, old: Complex64, peak: f64| {
            if old.norm() > 0.0 {
                peak * new.norm() / old.norm()
            } else {
                peak
            }
        };
        Self {
            shape: self.shape,
            omega_p_peak: ratio(c0, old.c0, self.omega_p_peak),
            omega_s_peak: ratio(c2, old.c2, self.omega_s_peak),
        }
    }

    pub fn stokes_peak_time(&self, params: &LambdaParams) -> f64 {
        -params.tau
    }

    pub fn pump_peak_time(&self, params: &LambdaParams) -> f64 {
        params.tau
    }

    /// `max_t[omega_s(t)] * T_W`; transfer is near complete when this is >~ 10.
    pub fn adiabaticity_product(&self, params: &LambdaParams) -> f64 {
        self.omega_s_peak * params.t_w
    }
}

/// Gaussian pulses with both peaks at `omega0`.
pub fn gaussian_pulses(t: f64, params: &LambdaParams) -> (f64, f64) {
    PulseSchedule::from_params(params).amplitudes(t, params)
}

/// Resonant rotating-frame control Hamiltonian. The `|1u>` row is zero.
pub fn control_hamiltonian(t: f64, params: &LambdaParams, schedule: &PulseSchedule) -> HermitianMatrix {
    let (s, p) = schedule.amplitudes(t, params);
    HermitianMatrix::from_trusted(control_matrix(s, p))
}

pub(crate) fn control_matrix(omega_s: f64, omega_p: f64) -> CMatrix {
    let mut h = CMatrix::zeros(DIM, DIM);
    let hp = Complex64::new(omega_p / 2.0, 0.0);
    let hs = Complex64::new(omega_s / 2.0, 0.0);
    h[(U0, PHI)] = hp;
    h[(PHI, U0)] = hp;
    h[(U2, PHI)] = hs;
    h[(PHI, U2)] = hs;
    h
}

/// `|i><j|` on the four-level space.
pub fn ket_bra(i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(DIM, DIM);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

/// Mode annihilation operator restricted to the `|n u>` states:
/// `|0u><1u| + sqrt(2) |1u><2u|`. It annihilates `|Phi>` and so does its adjoint.
pub fn projected_annihilation() -> CMatrix {
    let mut a = CMatrix::zeros(DIM, DIM);
    a[(U0, U1)] = Complex64::new(1.0, 0.0);
    a[(U1, U2)] = Complex64::new(2f64.sqrt(), 0.0);
    a
}

/// Photon-number operator `A^dag A = diag(0, 1, 2, 0)`.
pub fn photon_number() -> CMatrix {
    let a = projected_annihilation();
    a.adjoint() * a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KappaProfile {
    AlwaysOn,
    /// Logistic switch-on centred at `t_sm`.
    Switchable { t_sm: f64, rise_time: f64 },
}

impl KappaProfile {
    pub fn switchable(t_sm: f64) -> Self {
        KappaProfile::Switchable {
            t_sm,
            rise_time: DEFAULT_RISE_TIME,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let KappaProfile::Switchable { t_sm, rise_time } = *self {
            if !t_sm.is_finite() || !(rise_time > 0.0) || !rise_time.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "switchable meter needs finite t_sm and positive rise_time, got {t_sm}, {rise_time}"
                )));
            }
        }
        Ok(())
    }

    /// Fraction of `kappa_max` active at time `t`.
    pub fn fraction(&self, t: f64) -> f64 {
        match *self {
            KappaProfile::AlwaysOn => 1.0,
            KappaProfile::Switchable { t_sm, rise_time } => logistic((t - t_sm) / rise_time),
        }
    }

    /// `int_{t0}^{t1} fraction(t) dt`, in closed form.
    pub fn fraction_integral(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            KappaProfile::AlwaysOn => t1 - t0,
            KappaProfile::Switchable { t_sm, rise_time } => {
                rise_time * (softplus((t1 - t_sm) / rise_time) - softplus((t0 - t_sm) / rise_time))
            }
        }
    }
}

pub fn kappa_profile_value(profile: &KappaProfile, params: &LambdaParams, t: f64) -> f64 {
    params.kappa_max * profile.fraction(t)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// A Lindblad jump operator together with its instantaneous rate.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub operator: CMatrix,
    pub rate: f64,
}

/// Detailed-balance factor for mode absorption, `exp(-beta omega_c)`.
pub fn cavity_absorption_factor(params: &LambdaParams) -> f64 {
    params.boltzmann(params.omega_c)
}

/// Emission `{A, kappa(t)}` and absorption `{A^dag, kappa(t) exp(-beta omega_c)}`.
pub fn cavity_channels(params: &LambdaParams, profile: &KappaProfile, t: f64) -> Vec<JumpChannel> {
    let a = projected_annihilation();
    let kappa = kappa_profile_value(profile, params, t);
    let absorption = JumpChannel {
        operator: a.adjoint(),
        rate: kappa * cavity_absorption_factor(params),
    };
    vec![JumpChannel { operator: a, rate: kappa }, absorption]
}

/// Constant rates of the four atomic channels, in the order
/// `Phi -> 0u`, `0u -> Phi`, `Phi -> 2u`, `2u -> Phi`.
///
/// Decay rates scale with `|<n g|Phi>|^2`. Repump rates follow detailed
/// balance with the transition energies `E0 + eps'` and `E0 + eps' - 2 omega_c`,
/// which keeps the four-level Gibbs state stationary.
pub fn atomic_rates(params: &LambdaParams) -> [f64; 4] {
    let g0 = params.gamma * params.c0.norm_sqr();
    let g2 = params.gamma * params.c2.norm_sqr();
    let gap0 = params.energy_e0 + params.eps_prime;
    let gap2 = gap0 - 2.0 * params.omega_c;
    [g0, g0 * params.boltzmann(gap0), g2, g2 * params.boltzmann(gap2)]
}

pub fn atomic_operators() -> [CMatrix; 4] {
    [
        ket_bra(U0, PHI),
        ket_bra(PHI, U0),
        ket_bra(U2, PHI),
        ket_bra(PHI, U2),
    ]
}

pub fn atomic_channels(params: &LambdaParams) -> Vec<JumpChannel> {
    atomic_operators()
        .into_iter()
        .zip(atomic_rates(params))
        .map(|(operator, rate)| JumpChannel { operator, rate })
        .collect()
}
