//! Fock-truncated quantum Rabi model and its ground-state structure.
//!
//! Energies are in units of the mode frequency (`omega_c = 1`). The product
//! basis is interleaved: index `2n` is `|n, g>` and `2n + 1` is `|n, e>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigensolve, CMatrix, HermitianMatrix};

pub const MIN_FOCK: usize = 4;
pub const DEFAULT_FOCK: usize = 40;
pub const FOCK_CAP: usize = 512;
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    /// Atomic splitting.
    pub epsilon: f64,
    /// Atom-mode coupling.
    pub g: f64,
    /// Number of retained Fock states `|0> .. |n_fock - 1>`.
    pub n_fock: usize,
}

impl RabiParams {
    pub fn new(epsilon: f64, g: f64, n_fock: usize) -> Result<Self> {
        let p = Self { epsilon, g, n_fock };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "g must be non-negative, got {}",
                self.g
            )));
        }
        if self.n_fock < MIN_FOCK {
            return Err(Error::InvalidParameter(format!(
                "n_fock must be at least {MIN_FOCK}, got {}",
                self.n_fock
            )));
        }
        Ok(())
    }

    pub fn with_fock(self, n_fock: usize) -> Self {
        Self { n_fock, ..self }
    }
}

#[inline]
pub fn index(n: usize, excited: bool) -> usize {
    2 * n + excited as usize
}

/// `H = eps |e><e| + g (a + a^dag)(|g><e| + |e><g|) + a^dag a`.
pub fn build_rabi_hamiltonian(params: &RabiParams) -> Result<HermitianMatrix> {
    params.validate()?;
    let nf = params.n_fock;
    let dim = 2 * nf;
    let mut h = CMatrix::zeros(dim, dim);
    for n in 0..nf {
        h[(index(n, false), index(n, false))] = Complex64::new(n as f64, 0.0);
        h[(index(n, true), index(n, true))] = Complex64::new(n as f64 + params.epsilon, 0.0);
        if n + 1 < nf {
            // <n+1| a^dag |n> = sqrt(n+1); sigma_x flips the spin.
            let c = Complex64::new(params.g * ((n + 1) as f64).sqrt(), 0.0);
            for (a, b) in [
                (index(n, false), index(n + 1, true)),
                (index(n, true), index(n + 1, false)),
            ] {
                h[(a, b)] = c;
                h[(b, a)] = c;
            }
        }
    }
    Ok(HermitianMatrix::from_trusted(h))
}

/// Lowest eigenstate of the Rabi Hamiltonian, split by spin component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiGroundState {
    pub params: RabiParams,
    pub energy_e0: f64,
    /// Gap to the first excited level.
    pub gap: f64,
    /// `<n g|Phi>`.
    pub amp_g: Vec<Complex64>,
    /// `<n e|Phi>`.
    pub amp_e: Vec<Complex64>,
    pub mean_photons: f64,
}

impl RabiGroundState {
    /// `|<0g|Phi>|^2`.
    pub fn overlap0_sq(&self) -> f64 {
        self.amp_g[0].norm_sqr()
    }

    /// `|<2g|Phi>|^2`.
    pub fn overlap2_sq(&self) -> f64 {
        self.amp_g[2].norm_sqr()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp_g
            .iter()
            .chain(self.amp_e.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Largest amplitude that parity forbids (odd n with g, even n with e).
    pub fn parity_violation(&self) -> f64 {
        let odd_g = self.amp_g.iter().skip(1).step_by(2);
        let even_e = self.amp_e.iter().step_by(2);
        odd_g.chain(even_e).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn ground_state_analysis(params: &RabiParams) -> Result<RabiGroundState> {
    let h = build_rabi_hamiltonian(params)?;
    let eig = hermitian_eigensolve(&h)?;
    let gap = eig.values[1] - eig.values[0];
    if gap < DEGENERACY_TOL {
        return Err(Error::DegenerateGroundState {
            gap,
            tolerance: DEGENERACY_TOL,
        });
    }

    let v = eig.vector(0);
    // Fix the global phase on <0g|Phi>; fall back to the largest component
    // if that amplitude vanishes.
    let pivot = if v[0].norm() > 1e-12 {
        v[0]
    } else {
        v.iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0))
    };
    let phase = pivot.conj() / pivot.norm();

    let nf = params.n_fock;
    let mut amp_g = Vec::with_capacity(nf);
    let mut amp_e = Vec::with_capacity(nf);
    let mut mean_photons = 0.0;
    for n in 0..nf {
        let cg = v[index(n, false)] * phase;
        let ce = v[index(n, true)] * phase;
        mean_photons += n as f64 * (cg.norm_sqr() + ce.norm_sqr());
        amp_g.push(cg);
        amp_e.push(ce);
    }
    // remove round-off imaginary part of the pivot
    if v[0].norm() > 1e-12 {
        amp_g[0] = Complex64::new(amp_g[0].norm(), 0.0);
    }

    Ok(RabiGroundState {
        params: *params,
        energy_e0: eig.values[0],
        gap,
        amp_g,
        amp_e,
        mean_photons,
    })
}

/// Result of the truncation doubling check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n_fock: usize,
    /// Largest change in `E0`, `|<0g|Phi>|^2`, `|<2g|Phi>|^2` against `2 n_fock`.
    pub last_change: f64,
    pub ground: RabiGroundState,
}

/// Doubles `n_fock` from `params.n_fock` until the ground energy and both
/// target overlaps move by less than `tol` under another doubling.
pub fn check_truncation_convergence(params: &RabiParams, tol: f64) -> Result<TruncationReport> {
    check_truncation_convergence_capped(params, tol, FOCK_CAP)
}

/// Same as [`check_truncation_convergence`] with an explicit hard cap.
pub fn check_truncation_convergence_capped(
    params: &RabiParams,
    tol: f64,
    cap: usize,
) -> Result<TruncationReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    params.validate()?;
    let mut n = params.n_fock;
    let mut current = ground_state_analysis(params)?;
    let mut last_change = f64::INFINITY;
    while 2 * n <= cap {
        let next = ground_state_analysis(&params.with_fock(2 * n))?;
        last_change = (next.energy_e0 - current.energy_e0)
            .abs()
            .max((next.overlap0_sq() - current.overlap0_sq()).abs())
            .max((next.overlap2_sq() - current.overlap2_sq()).abs());
        if last_change < tol {
            return Ok(TruncationReport {
                n_fock: n,
                last_change,
                ground: current,
            });
        }
        n *= 2;
        current = next;
    }
    Err(Error::TruncationNotConverged {
        cap,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_hamiltonian_is_diagonal() {
        let h = build_rabi_hamiltonian(&RabiParams::new(1.0, 0.0, 4).unwrap()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { (i / 2) as f64 + (i % 2) as f64 } else { 0.0 };
                assert_eq!(h.get(i, j), Complex64::new(want, 0.0), "({i},{j})");
            }
        }
    }

    #[test]
    fn coupling_matrix_element() {
        let h = build_rabi_hamiltonian(&RabiParams::new(1.0, 0.5, 6).unwrap()).unwrap();
        // |0g> (index 0) <-> |1e> (index 3): g * sqrt(1)
        assert_eq!(h.get(0, 3), Complex64::new(0.5, 0.0));
        // |1g> (2) <-> |2e> (5): g * sqrt(2)
        assert!((h.get(2, 5).re - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        // no coupling within the same spin
        assert_eq!(h.get(0, 2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn small_truncation_rejected() {
        assert!(matches!(
            RabiParams::new(1.0, 0.5, 3),
            Err(Error::InvalidParameter(_))
        ));
        let bad = RabiParams { epsilon: 1.0, g: 0.5, n_fock: 2 };
        assert!(build_rabi_hamiltonian(&bad).is_err());
        assert!(RabiParams::new(0.0, 0.5, 8).is_err());
        assert!(RabiParams::new(1.0, -0.1, 8).is_err());
    }

    #[test]
    fn decoupled_ground_state_is_vacuum() {
        let gs = ground_state_analysis(&RabiParams::new(1.0, 0.0, 4).unwrap()).unwrap();
        assert!(gs.energy_e0.abs() < 1e-14);
        assert!((gs.overlap0_sq() - 1.0).abs() < 1e-14);
        assert!(gs.amp_g[0].re > 0.0 && gs.amp_g[0].im == 0.0);
        assert!(gs.mean_photons.abs() < 1e-14);
        let rest: f64 = gs.norm_sq() - gs.overlap0_sq();
        assert!(rest.abs() < 1e-14);
    }

    #[test]
    fn usc_ground_state_structure() {
        let gs = ground_state_analysis(&RabiParams::new(1.0, 0.5, 40).unwrap()).unwrap();
        assert!(gs.amp_g[1].norm_sqr() < 1e-10);
        assert!(gs.parity_violation() < 1e-10);
        assert!((gs.norm_sq() - 1.0).abs() < 1e-10);
        assert!(gs.amp_g[0].re >= 0.0 && gs.amp_g[0].im == 0.0);
        // frozen from an independent dense diagonalization (numpy eigh, n_fock = 64)
        assert!((gs.energy_e0 - (-0.1332942354616302)).abs() < 1e-10);
        assert!((gs.overlap0_sq() - 0.9250568589502182).abs() < 1e-9);
        assert!((gs.overlap2_sq() - 0.008734924517761334).abs() < 1e-9);
        assert!(gs.mean_photons > 0.0);
    }

    #[test]
    fn truncation_convergence() {
        let zero = check_truncation_convergence(&RabiParams::new(1.0, 0.0, 4).unwrap(), 1e-8).unwrap();
        assert_eq!(zero.n_fock, 4);

        // Doubling oracle values (numpy eigh on the same Hamiltonian):
        // g = 0.5 settles at 8, g = 2.0 at 32 when started from 4.
        let half = check_truncation_convergence(&RabiParams::new(1.0, 0.5, 4).unwrap(), 1e-8).unwrap();
        let deep = check_truncation_convergence(&RabiParams::new(1.0, 2.0, 4).unwrap(), 1e-8).unwrap();
        assert_eq!(half.n_fock, 8);
        assert!(half.n_fock <= 64);
        assert_eq!(deep.n_fock, 32);
        assert!(deep.n_fock > half.n_fock);
        assert!(check_truncation_convergence(&RabiParams::new(1.0, 0.5, 4).unwrap(), 0.0).is_err());
    }

    #[test]
    fn truncation_cap_is_reported() {
        // an absurd coupling keeps moving up to the cap
        let err = check_truncation_convergence_capped(&RabiParams::new(1.0, 40.0, 4).unwrap(), 1e-8, 32);
        assert!(matches!(err, Err(Error::TruncationNotConverged { cap: 32, .. })));
    }

    #[test]
    fn vacuum_depletes_monotonically() {
        let mut prev = f64::INFINITY;
        for k in 0..=10 {
            let g = 0.1 * k as f64;
            let gs = ground_state_analysis(&RabiParams::new(1.0, g, 40).unwrap()).unwrap();
            assert!(gs.overlap0_sq() <= prev + 1e-14, "g = {g}");
            prev = gs.overlap0_sq();
        }
    }
}
