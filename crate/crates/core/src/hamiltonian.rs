//! The MaxCut problem Hamiltonian (stored as its diagonal), the transverse
//! driver, ground-state data and the spectral scalars used as conditioning
//! features by the surrogate.
//!
//! Basis convention: bit `k` of a basis index is qubit `k`; `z_k = +1` when
//! the bit is 0 and `-1` when it is 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::lanczos::{lowest_eigenvalues, LanczosConfig};

/// Largest qubit count for which a diagonal or state vector is allocated.
pub const MAX_QUBITS: usize = 24;
/// Largest instance for which the midpoint gap is computed.
pub const MAX_MIDPOINT_QUBITS: usize = 14;
/// Relative tolerance separating degenerate from distinct diagonal values.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `H_p = -sum_(i,j) w_ij (1 - Z_i Z_j) / 2` as its computational-basis diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDiagonal {
    n: usize,
    diag: Vec<f64>,
    e_min: f64,
    ground_set: Vec<usize>,
}

impl ProblemDiagonal {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.diag
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Basis indices attaining `e_min` within [`DEGENERACY_TOL`], ascending.
    pub fn ground_set(&self) -> &[usize] {
        &self.ground_set
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }
}

pub fn check_qubits(n: usize, limit: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("need at least one qubit"));
    }
    if n > limit {
        return Err(Error::ResourceLimit(format!("{n} qubits exceeds the limit of {limit}")));
    }
    Ok(())
}

pub fn build_problem_diagonal(graph: &WeightedGraph) -> Result<ProblemDiagonal> {
    let n = graph.n();
    check_qubits(n, MAX_QUBITS)?;
    let mut diag = vec![0.0; 1usize << n];
    for e in graph.edges() {
        let (mu, mv) = (1usize << e.u, 1usize << e.v);
        for (x, d) in diag.iter_mut().enumerate() {
            // (1 - z_u z_v) / 2 is 1 exactly when the two bits differ.
            if ((x & mu) != 0) != ((x & mv) != 0) {
                *d -= e.w;
            }
        }
    }
    let (e_min, ground_set) = ground_data(&diag, DEGENERACY_TOL);
    Ok(ProblemDiagonal { n, diag, e_min, ground_set })
}

/// Smallest value and every index within `tol_rel * |e_min|` of it.
pub fn ground_data(diag: &[f64], tol_rel: f64) -> (f64, Vec<usize>) {
    let e_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = e_min + tol_rel * e_min.abs();
    let set = diag.iter().enumerate().filter(|(_, &d)| d <= cut).map(|(i, _)| i).collect();
    (e_min, set)
}

/// Distance from `e_min` to the next distinct diagonal value.
pub fn gap_problem(diag: &[f64], tol_rel: f64) -> Result<f64> {
    let (e_min, _) = ground_data(diag, tol_rel);
    let cut = e_min + tol_rel * e_min.abs();
    diag.iter()
        .copied()
        .filter(|&d| d > cut)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        .map(|next| next - e_min)
        .ok_or_else(|| Error::DegenerateSpectrum("diagonal has a single distinct value".into()))
}

/// The transverse driver `H_d = sum_i X_i` on `n` qubits, applied implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriverSpec {
    pub n: usize,
}

impl DriverSpec {
    /// `out = H_d x` for a real vector.
    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        for (idx, o) in out.iter_mut().enumerate() {
            *o = (0..self.n).map(|i| x[idx ^ (1 << i)]).sum();
        }
    }
}

/// Spectral gap of `(H_d + H_p) / 2`.
pub fn gap_midpoint(graph: &WeightedGraph) -> Result<f64> {
    let n = graph.n();
    check_qubits(n, MAX_MIDPOINT_QUBITS)?;
    let hp = build_problem_diagonal(graph)?;
    gap_midpoint_with(&hp, LanczosConfig::default())
}

pub fn gap_midpoint_with(hp: &ProblemDiagonal, cfg: LanczosConfig) -> Result<f64> {
    let driver = DriverSpec { n: hp.n };
    let d = hp.values();
    let apply = |x: &[f64], y: &mut [f64]| {
        driver.apply_real(x, y);
        for ((y, x), d) in y.iter_mut().zip(x).zip(d) {
            *y = 0.5 * (*y + d * x);
        }
    };
    let ev = lowest_eigenvalues(hp.dim(), 2, apply, cfg)?;
    Ok((ev[1] - ev[0]).max(0.0))
}

/// Label of the scalar layout written by [`ScalarFeatures::to_vec`].
pub const SCALAR_FORMAT: &str = "scalars-v1:v_count,ground_energy,gap_problem,gap_midpoint,sqrt_v,ln_v";
pub const SCALAR_DIM: usize = 6;

/// Graph-level conditioning scalars in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarFeatures {
    pub v_count: f64,
    pub ground_energy: f64,
    pub gap_problem: f64,
    pub gap_midpoint: f64,
    pub size_sqrt: f64,
    pub size_log: f64,
}

impl ScalarFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.v_count, self.ground_energy, self.gap_problem, self.gap_midpoint, self.size_sqrt, self.size_log]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != SCALAR_DIM {
            return Err(Error::DimensionMismatch { expected: SCALAR_DIM, got: v.len() });
        }
        Ok(Self {
            v_count: v[0],
            ground_energy: v[1],
            gap_problem: v[2],
            gap_midpoint: v[3],
            size_sqrt: v[4],
            size_log: v[5],
        })
    }
}

pub fn scalar_features(graph: &WeightedGraph) -> Result<ScalarFeatures> {
    check_qubits(graph.n(), MAX_MIDPOINT_QUBITS)?;
    let hp = build_problem_diagonal(graph)?;
    scalar_features_with(graph.n(), &hp)
}

pub fn scalar_features_with(n: usize, hp: &ProblemDiagonal) -> Result<ScalarFeatures> {
    let v = n as f64;
    Ok(ScalarFeatures {
        v_count: v,
        ground_energy: hp.e_min(),
        gap_problem: gap_problem(hp.values(), DEGENERACY_TOL)?,
        gap_midpoint: gap_midpoint_with(hp, LanczosConfig::default())?,
        size_sqrt: v.sqrt(),
        size_log: v.ln(),
    })
}
