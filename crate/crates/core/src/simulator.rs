//! Statevector kernels for one Trotterized layer
//! `exp(-i dt beta H_d) exp(-i dt b H_p)` and the observables recorded after
//! each layer.
//!
//! All updates are in place. The driver factor is exact because the single
//! qubit `X_i` terms commute: it is a product of `n` independent rotations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{check_qubits, ProblemDiagonal, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

/// Coefficients of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerParams {
    pub dt: f64,
    /// Driver coefficient.
    pub beta: f64,
    /// Problem coefficient (1 for the feedback loop).
    pub b: f64,
}

impl StateVector {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n, MAX_QUBITS)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(Self { n, amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n, MAX_QUBITS)?;
        if index >= 1 << n {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.amps.len() {
            return Err(Error::DimensionMismatch { expected: self.amps.len(), got: len });
        }
        Ok(())
    }
}

/// `|->^{\otimes n}`: amplitude `(-1)^{popcount(x)} / 2^{n/2}`.
pub fn init_minus_state(n: usize) -> Result<StateVector> {
    check_qubits(n, MAX_QUBITS)?;
    let mag = 0.5f64.powf(n as f64 / 2.0);
    let amps = (0..1usize << n)
        .map(|x| Complex64::new(if x.count_ones() % 2 == 0 { mag } else { -mag }, 0.0))
        .collect();
    Ok(StateVector { n, amps })
}

/// `amps[x] *= exp(-i dt b diag[x])`.
pub fn apply_problem_phase(state: &mut StateVector, diag: &ProblemDiagonal, dt: f64, b: f64) -> Result<()> {
    state.check_dim(diag.dim())?;
    let s = dt * b;
    if s == 0.0 {
        return Ok(());
    }
    for (a, &d) in state.amps.iter_mut().zip(diag.values()) {
        *a *= Complex64::cis(-s * d);
    }
    Ok(())
}

/// Precomputed `exp(-i dt b diag[x])` for loops with a fixed problem coefficient.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    phases: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(diag: &ProblemDiagonal, dt: f64, b: f64) -> Self {
        Self { phases: diag.values().iter().map(|&d| Complex64::cis(-dt * b * d)).collect() }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        state.check_dim(self.phases.len())?;
        for (a, p) in state.amps.iter_mut().zip(&self.phases) {
            *a *= p;
        }
        Ok(())
    }
}

/// `exp(-i dt beta sum_i X_i)`: each qubit pair `(a0, a1)` maps to
/// `(c a0 - i s a1, -i s a0 + c a1)` with `c = cos(beta dt)`, `s = sin(beta dt)`.
pub fn apply_driver_rotations(state: &mut StateVector, dt: f64, beta: f64) -> Result<()> {
    let theta = dt * beta;
    if theta == 0.0 {
        return Ok(());
    }
    let (s, c) = theta.sin_cos();
    let mis = Complex64::new(0.0, -s);
    let amps = &mut state.amps;
    for q in 0..state.n {
        let stride = 1usize << q;
        for block in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * c + x1 * mis;
                *a1 = x0 * mis + x1 * c;
            }
        }
    }
    Ok(())
}

/// Applies one full layer: problem phase first, then the driver.
pub fn apply_layer(state: &mut StateVector, diag: &ProblemDiagonal, p: LayerParams) -> Result<()> {
    apply_problem_phase(state, diag, p.dt, p.b)?;
    apply_driver_rotations(state, p.dt, p.beta)
}

/// `<psi|H_p|psi>`.
pub fn expect_problem(state: &StateVector, diag: &ProblemDiagonal) -> Result<f64> {
    state.check_dim(diag.dim())?;
    Ok(state.amps.iter().zip(diag.values()).map(|(a, d)| d * a.norm_sqr()).sum())
}

/// Feedback quantity `A = i<[H_d, H_p]> = -2 Im <H_d psi | H_p psi>`.
///
/// `(H_d psi)[x]` is accumulated on the fly, so no scratch vector is allocated.
pub fn commutator_expectation(state: &StateVector, diag: &ProblemDiagonal) -> Result<f64> {
    state.check_dim(diag.dim())?;
    let amps = &state.amps;
    let mut im = 0.0;
    for (x, (&d, a)) in diag.values().iter().zip(amps).enumerate() {
        let mut chi = Complex64::new(0.0, 0.0);
        for q in 0..state.n {
            chi += amps[x ^ (1 << q)];
        }
        // Im(conj(chi) * d * a)
        im += d * (chi.re * a.im - chi.im * a.re);
    }
    Ok(-2.0 * im)
}

/// Total population on `ground_set`.
pub fn success_probability(state: &StateVector, ground_set: &[usize]) -> Result<f64> {
    ground_set
        .iter()
        .map(|&g| {
            state
                .amps
                .get(g)
                .map(|a| a.norm_sqr())
                .ok_or_else(|| Error::invalid(format!("ground index {g} out of range")))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::hamiltonian::build_problem_diagonal;
    use std::f64::consts::FRAC_PI_2;

    fn triangle() -> ProblemDiagonal {
        build_problem_diagonal(&WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn minus_states() {
        let s = init_minus_state(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amps[0], h.into()) && close(s.amps[1], (-h).into()));
        let s = init_minus_state(2).unwrap();
        let want = [0.5, -0.5, -0.5, 0.5];
        assert!(s.amps.iter().zip(want).all(|(a, w)| close(*a, w.into())));
        for n in 1..12 {
            assert!((init_minus_state(n).unwrap().norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_cases() {
        let hp = triangle();
        let mut s = init_minus_state(3).unwrap();
        apply_driver_rotations(&mut s, 0.3, 1.0).unwrap();
        let before = s.clone();
        apply_problem_phase(&mut s, &hp, 0.1, 0.0).unwrap();
        apply_driver_rotations(&mut s, 0.1, 0.0).unwrap();
        assert_eq!(s, before);
        let zero = build_problem_diagonal(&WeightedGraph::new(3, []).unwrap()).unwrap();
        apply_problem_phase(&mut s, &zero, 0.1, 1.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn x_rotation_by_pi() {
        let mut s = StateVector::basis(1, 0).unwrap();
        apply_driver_rotations(&mut s, 1.0, FRAC_PI_2).unwrap();
        assert!(s.amps[0].norm() < 1e-15);
        assert!(close(s.amps[1], Complex64::new(0.0, -1.0)));
    }

    #[test]
    fn triangle_observables() {
        let hp = triangle();
        let s = init_minus_state(3).unwrap();
        assert!((expect_problem(&s, &hp).unwrap() + 1.5).abs() < 1e-15);
        assert!(commutator_expectation(&s, &hp).unwrap().abs() < 1e-15);
        assert!((success_probability(&s, hp.ground_set()).unwrap() - 0.75).abs() < 1e-15);
        let g = StateVector::basis(3, hp.ground_set()[0]).unwrap();
        assert_eq!(expect_problem(&g, &hp).unwrap(), hp.e_min());
        assert_eq!(success_probability(&g, hp.ground_set()).unwrap(), 1.0);
        for x in 0..8 {
            assert_eq!(commutator_expectation(&StateVector::basis(3, x).unwrap(), &hp).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_errors() {
        let hp = triangle();
        let mut s = init_minus_state(2).unwrap();
        assert!(matches!(apply_problem_phase(&mut s, &hp, 0.1, 1.0), Err(Error::DimensionMismatch { .. })));
        assert!(expect_problem(&s, &hp).is_err());
        assert!(commutator_expectation(&s, &hp).is_err());
        assert!(success_probability(&s, &[7]).is_err());
        assert!(init_minus_state(0).is_err());
        assert!(matches!(init_minus_state(25), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn phase_table_matches_direct() {
        let hp = triangle();
        let mut a = init_minus_state(3).unwrap();
        apply_driver_rotations(&mut a, 0.2, 0.7).unwrap();
        let mut b = a.clone();
        apply_problem_phase(&mut a, &hp, 0.01, 1.0).unwrap();
        PhaseTable::new(&hp, 0.01, 1.0).apply(&mut b).unwrap();
        assert_eq!(a, b);
    }
}
