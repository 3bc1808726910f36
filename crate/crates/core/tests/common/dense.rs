//! Dense-matrix reference implementations.
//!
//! Everything here is built from explicit `2^n × 2^n` matrices assembled by
//! Kronecker products of Pauli matrices, so it shares no code with the
//! bitwise kernels it checks. Only meant for `n ≤ 4`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use falqon_core::graph::WeightedGraph;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// `op` on qubit `q` of `n`. Qubit `q` is bit `q` of the basis index, so it
/// is the `q`-th factor counted from the right of the Kronecker product.
pub fn on_qubit(op: &CMat, q: usize, n: usize) -> CMat {
    let mut m = CMat::identity(1, 1);
    for k in (0..n).rev() {
        let f = if k == q { op.clone() } else { CMat::identity(2, 2) };
        m = m.kronecker(&f);
    }
    m
}

/// `-Σ w (I - Z_u Z_v) / 2`.
pub fn problem_matrix(g: &WeightedGraph) -> CMat {
    let n = g.n();
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for e in g.edges() {
        let zz = on_qubit(&pauli_z(), e.u, n) * on_qubit(&pauli_z(), e.v, n);
        h -= (CMat::identity(dim, dim) - zz) * c(0.5 * e.w);
    }
    h
}

/// `Σ X_i`.
pub fn driver_matrix(n: usize) -> CMat {
    let dim = 1 << n;
    (0..n).fold(CMat::zeros(dim, dim), |acc, q| acc + on_qubit(&pauli_x(), q, n))
}

/// `exp(-i t H)` for a real symmetric `H`, via its eigendecomposition.
pub fn evolve(h: &CMat, t: f64) -> CMat {
    let real = h.map(|z| z.re);
    let eig = real.symmetric_eigen();
    let v = eig.eigenvectors.map(c);
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|l| Complex64::cis(-t * l)));
    &v * phases * v.transpose()
}

/// `(1/√2)^n Σ (-1)^popcount(x) |x>`, built as a Kronecker power.
pub fn minus_state(n: usize) -> CVec {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = CMat::from_row_slice(2, 1, &[c(h), c(-h)]);
    let mut v = CMat::identity(1, 1);
    for _ in 0..n {
        v = v.kronecker(&one);
    }
    CVec::from_column_slice(v.as_slice())
}

pub fn expectation(psi: &CVec, op: &CMat) -> Complex64 {
    psi.dotc(&(op * psi))
}

/// `i <psi| [H_d, H_p] |psi>` from explicit matrices.
pub fn commutator(psi: &CVec, hd: &CMat, hp: &CMat) -> f64 {
    let comm = hd * hp - hp * hd;
    (Complex64::i() * expectation(psi, &comm)).re
}

/// `exp(-i dt beta H_d) exp(-i dt b H_p)`.
pub fn layer(hd: &CMat, hp: &CMat, dt: f64, beta: f64, b: f64) -> CMat {
    evolve(hd, dt * beta) * evolve(hp, dt * b)
}

/// The feedback loop, driven by dense matrices: returns `(betas, energies)`
/// with `energies[0]` taken on the initial state.
pub fn falqon(g: &WeightedGraph, dt: f64, ell: usize) -> (Vec<f64>, Vec<f64>) {
    let hp = problem_matrix(g);
    let hd = driver_matrix(g.n());
    let mut psi = minus_state(g.n());
    let mut betas = Vec::new();
    let mut energies = vec![expectation(&psi, &hp).re];
    for _ in 0..ell {
        let beta = -commutator(&psi, &hd, &hp);
        psi = layer(&hd, &hp, dt, beta, 1.0) * psi;
        betas.push(beta);
        energies.push(expectation(&psi, &hp).re);
    }
    (betas, energies)
}

/// Lowest two eigenvalues of `(H_d + H_p) / 2` by full diagonalization.
pub fn midpoint_gap(g: &WeightedGraph) -> f64 {
    let h = (driver_matrix(g.n()) + problem_matrix(g)).map(|z| 0.5 * z.re);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1] - ev[0]
}
