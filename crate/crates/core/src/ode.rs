//! Adaptive Dormand-Prince 5(4) integrator with continuous output.
//!
//! Works on flat real state vectors. Samples at requested times are produced
//! from the fourth-order dense interpolant of each accepted step.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 10_000_000;

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` (with `t1 > t0`).
///
/// * `after_step(t, y)` may adjust the state after each accepted step.
/// * `on_sample(i, t, y)` receives `y(sample_times[i])`; times must be
///   non-decreasing and inside `[t0, t1]`.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F, P, S>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    control: StepControl,
    sample_times: &[f64],
    mut after_step: P,
    mut on_sample: S,
) -> Result<StepStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    P: FnMut(f64, &mut [f64]) -> Result<()>,
    S: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    if !(t1 > t0) {
        return Err(Error::ContractViolation(format!(
            "integration window must satisfy t_end > t_start, got [{t0}, {t1}]"
        )));
    }
    if !(control.abs_tol > 0.0 && control.rel_tol > 0.0 && control.max_step > 0.0) {
        return Err(Error::InvalidParameter(
            "abs_tol, rel_tol and max_step must be positive".into(),
        ));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.iter().any(|&t| t < t0 || t > t1)
    {
        return Err(Error::ContractViolation(
            "sample times must be sorted and inside the window".into(),
        ));
    }

    let n = y0.len();
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        on_sample(next_sample, t0, &y)?;
        next_sample += 1;
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut dense = vec![0.0; n];
    let mut buf = vec![0.0; n];

    f(t, &y, &mut k1)?;
    stats.rhs_evals += 1;

    let mut h = initial_step(&mut f, t, &y, &k1, control, t1 - t0, &mut stats)?;
    let mut last_rejected = false;

    while t < t1 {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut last = false;
        if t + h >= t1 || t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ys, &mut k2)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ys, &mut k3)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ys, &mut k4)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ys, &mut k5)?;
        for i in 0..n {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ys, &mut k6)?;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y_new, &mut k7)?;
        stats.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = control.abs_tol + control.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t1 } else { t + h };

            if next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                for i in 0..n {
                    dense[i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                    let ts = sample_times[next_sample];
                    if ts == t_new {
                        buf.copy_from_slice(&y_new);
                    } else {
                        let theta = (ts - t) / h;
                        let theta1 = 1.0 - theta;
                        for i in 0..n {
                            let r2 = y_new[i] - y[i];
                            let r3 = h * k1[i] - r2;
                            let r4 = r2 - h * k7[i] - r3;
                            buf[i] = y[i] + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * dense[i])));
                        }
                    }
                    on_sample(next_sample, ts, &buf)?;
                    next_sample += 1;
                }
            }

            std::mem::swap(&mut y, &mut y_new);
            t = t_new;
            after_step(t, &mut y)?;
            // the hook may have touched y, so k1 is re-evaluated instead of reusing k7
            f(t, &y, &mut k1)?;
            stats.rhs_evals += 1;

            let mut fac = if err > 0.0 { SAFETY * err.powf(-0.2) } else { FAC_MAX };
            fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
            h = (h * fac).min(control.max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(FAC_MIN)
            } else {
                FAC_MIN
            };
            h *= fac;
            last_rejected = true;
        }
    }
    Ok(stats)
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    control: StepControl,
    span: f64,
    stats: &mut StepStats,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let sc: Vec<f64> = y
        .iter()
        .map(|v| control.abs_tol + control.rel_tol * v.abs())
        .collect();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..n).map(|i| (v(i) / sc[i]).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(&|i| y[i]);
    let d1 = rms(&|i| f0[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(control.max_step).min(span);

    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t + h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let d2 = rms(&|i| f1[i] - f0[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(control.max_step).min(span))
}
