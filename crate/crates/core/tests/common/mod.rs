#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0u32;
    while norm1 / 2f64.powi(s as i32) > 0.25 {
        s += 1;
    }
    let scaled = a / c(2f64.powi(s as i32));
    let mut term = CMat::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacked Liouvillian: `vec(A X B) = (B^T kron A) vec(X)`.
pub fn liouvillian(h: &CMat, jumps: &[(CMat, f64)]) -> CMat {
    let n = h.nrows();
    let id = CMat::identity(n, n);
    let mi = Complex64::new(0.0, -1.0);
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * mi;
    for (op, rate) in jumps {
        let ldl = op.adjoint() * op;
        let d = kron(&op.conjugate(), op) - kron(&id, &ldl) * c(0.5) - kron(&ldl.transpose(), &id) * c(0.5);
        l += d * c(*rate);
    }
    l
}

pub fn vec_of(m: &CMat) -> DMatrix<Complex64> {
    let n = m.nrows();
    DMatrix::from_fn(n * n, 1, |k, _| m[(k % n, k / n)])
}

pub fn unvec(v: &CMat, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[(i + j * n, 0)])
}

pub fn random_hermitian(rng: &mut StdRng, n: usize, scale: f64) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    });
    (&a + a.adjoint()) * c(0.5)
}

pub fn random_matrix(rng: &mut StdRng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random full-rank density matrix `B B^dag / tr`.
pub fn random_density(rng: &mut StdRng, n: usize) -> CMat {
    let b = random_matrix(rng, n);
    let r = &b * b.adjoint();
    let tr = r.trace();
    r / tr
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random constant 3-level problem: Hamiltonian plus three jump operators.
pub fn random_lindbladian_3(seed: u64) -> (CMat, Vec<(CMat, f64)>, CMat) {
    let mut r = rng(seed);
    let h = random_hermitian(&mut r, 3, 1.0);
    let jumps = (0..3)
        .map(|_| {
            let rate = r.gen_range(0.05..0.5);
            (random_matrix(&mut r, 3), rate)
        })
        .collect();
    let rho0 = random_density(&mut r, 3);
    (h, jumps, rho0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
