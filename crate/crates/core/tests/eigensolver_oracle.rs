mod common;

use common::*;
use vpdetect::linalg::{hermitian_eigensolve, HermitianMatrix};

/// Number of eigenvalues below `sigma`, from the signs of the pivots of an
/// unpivoted LDL^H factorization of `H - sigma I` (Sylvester's law of inertia).
fn count_below(h: &CMat, sigma: f64) -> usize {
    let n = h.nrows();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] -= c(sigma);
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut d = a[(k, k)].re;
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in (k + 1)..n {
            let f = a[(i, k)] / d;
            for j in (k + 1)..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
        }
    }
    negatives
}

/// k-th smallest eigenvalue by bisection on the inertia count.
fn bisect_eigenvalue(h: &CMat, k: usize) -> f64 {
    let bound: f64 = h.iter().map(|z| z.norm()).sum::<f64>() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(h, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn random_6x6_matches_inertia_bisection() {
    let mut r = rng(20240611);
    for trial in 0..50 {
        let h = random_hermitian(&mut r, 6, 3.0);
        let eig = hermitian_eigensolve(&HermitianMatrix::new(h.clone()).unwrap()).unwrap();
        for k in 0..6 {
            let oracle = bisect_eigenvalue(&h, k);
            assert!(
                (eig.values[k] - oracle).abs() < 1e-8,
                "trial {trial} k {k}: {} vs {oracle}",
                eig.values[k]
            );
            let v = eig.vector(k);
            let residual = &h * &v - &v * c(eig.values[k]);
            assert!(residual.norm() < 1e-10);
        }
        let gram = eig.vectors.adjoint() * &eig.vectors;
        assert!(max_abs(&(gram - CMat::identity(6, 6))) < 1e-12);
    }
}

#[test]
fn degenerate_spectrum() {
    // unitary conjugate of diag(1, 1, 1, -2, -2, 5)
    let mut r = rng(7);
    let q = random_matrix(&mut r, 6).qr().q();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(
        [1.0, 1.0, 1.0, -2.0, -2.0, 5.0].map(c).to_vec(),
    ));
    let mut h = &q * d * q.adjoint();
    h = (&h + h.adjoint()) * c(0.5);
    let eig = hermitian_eigensolve(&HermitianMatrix::new(h).unwrap()).unwrap();
    let want = [-2.0, -2.0, 1.0, 1.0, 1.0, 5.0];
    for (a, b) in eig.values.iter().zip(want) {
        assert!((a - b).abs() < 1e-10);
    }
}
