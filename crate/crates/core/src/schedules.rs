//! Layer sequences driving the simulator: the FALQON feedback loop, digitized
//! linear annealing, replay of arbitrary curves, and the unweighted baseline.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::graph::WeightedGraph;
use crate::hamiltonian::{build_problem_diagonal, ProblemDiagonal};
use crate::metrics::approx_ratio;
use crate::simulator::{
    apply_driver_rotations, apply_problem_phase, commutator_expectation, expect_problem, init_minus_state,
    success_probability, PhaseTable, StateVector,
};

/// Time step used for every reference curve.
pub const NOMINAL_DT: f64 = 0.01;
/// Number of layers of every reference curve.
pub const NOMINAL_ELL: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveSource {
    Falqon,
    Surrogate,
    UnweightedBaseline,
    External,
}

impl CurveSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveSource::Falqon => "falqon",
            CurveSource::Surrogate => "surrogate",
            CurveSource::UnweightedBaseline => "unweighted-baseline",
            CurveSource::External => "external",
        }
    }
}

impl FromStr for CurveSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "falqon" => CurveSource::Falqon,
            "surrogate" => CurveSource::Surrogate,
            "unweighted-baseline" => CurveSource::UnweightedBaseline,
            "external" => CurveSource::External,
            _ => return Err(Error::parse(format!("unknown curve source {s:?}"))),
        })
    }
}

fn check_dt_ell(dt: f64, ell: usize) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive and finite, got {dt}")));
    }
    if ell == 0 {
        return Err(Error::invalid("need at least one layer"));
    }
    Ok(())
}

/// Driver coefficients `beta_1..beta_ell` for a fixed time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCurve {
    dt: f64,
    betas: Vec<f64>,
    source: CurveSource,
}

impl ParameterCurve {
    pub fn new(dt: f64, betas: Vec<f64>, source: CurveSource) -> Result<Self> {
        check_dt_ell(dt, betas.len())?;
        if let Some(j) = betas.iter().position(|b| !b.is_finite()) {
            return Err(Error::NonFinite(format!("curve entry {}", j + 1)));
        }
        Ok(Self { dt, betas, source })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn ell(&self) -> usize {
        self.betas.len()
    }

    pub fn source(&self) -> CurveSource {
        self.source
    }

    pub fn with_source(mut self, source: CurveSource) -> Self {
        self.source = source;
        self
    }

    pub fn header(&self) -> String {
        format!("# dt={} ell={} source={}", sig17(self.dt), self.ell(), self.source.as_str())
    }

    /// Curve file text. `extra_comments` go after the header, one `# ` line each.
    pub fn to_text(&self, extra_comments: &[String]) -> String {
        let mut s = self.header();
        s.push('\n');
        for c in extra_comments {
            writeln!(s, "# {c}").unwrap();
        }
        for b in &self.betas {
            s.push_str(&sig17(*b));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty curve file"))?;
        let fields = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::parse(format!("bad curve header {header:?}")))?;
        let (mut dt, mut ell, mut source) = (None, None, None);
        for f in fields.split_whitespace() {
            match f.split_once('=') {
                Some(("dt", v)) => dt = Some(v.parse::<f64>().map_err(|e| Error::parse(format!("dt: {e}")))?),
                Some(("ell", v)) => ell = Some(v.parse::<usize>().map_err(|e| Error::parse(format!("ell: {e}")))?),
                Some(("source", v)) => source = Some(v.parse::<CurveSource>()?),
                _ => return Err(Error::parse(format!("unknown header field {f:?}"))),
            }
        }
        let (dt, ell, source) = match (dt, ell, source) {
            (Some(d), Some(l), Some(s)) => (d, l, s),
            _ => return Err(Error::parse("curve header needs dt, ell and source")),
        };
        let betas = lines
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|e| Error::parse(format!("curve value {l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if betas.len() != ell {
            return Err(Error::parse(format!("header says ell={ell} but file has {} values", betas.len())));
        }
        Self::new(dt, betas, source)
    }

    pub fn write(&self, path: &Path, extra_comments: &[String]) -> Result<()> {
        std::fs::write(path, self.to_text(extra_comments))?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Digitized annealing schedule: pairs `(a_j, b_j)` weighting `H_d` and `H_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleCurve {
    dt: f64,
    pairs: Vec<(f64, f64)>,
}

impl ScheduleCurve {
    pub fn new(dt: f64, pairs: Vec<(f64, f64)>) -> Result<Self> {
        check_dt_ell(dt, pairs.len())?;
        if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::NonFinite("schedule".into()));
        }
        Ok(Self { dt, pairs })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn ell(&self) -> usize {
        self.pairs.len()
    }
}

/// Anything that can be replayed layer by layer.
pub trait LayerSequence {
    fn dt(&self) -> f64;
    fn ell(&self) -> usize;
    /// `(driver coefficient, problem coefficient)` of layer `j` (1-based).
    fn coefficients(&self, j: usize) -> (f64, f64);
}

impl LayerSequence for ParameterCurve {
    fn dt(&self) -> f64 {
        self.dt
    }
    fn ell(&self) -> usize {
        self.betas.len()
    }
    fn coefficients(&self, j: usize) -> (f64, f64) {
        (self.betas[j - 1], 1.0)
    }
}

impl LayerSequence for ScheduleCurve {
    fn dt(&self) -> f64 {
        self.dt
    }
    fn ell(&self) -> usize {
        self.pairs.len()
    }
    fn coefficients(&self, j: usize) -> (f64, f64) {
        self.pairs[j - 1]
    }
}

/// Observables after layer `layer` (layer 0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerRecord {
    pub layer: usize,
    /// Driver coefficient applied in this layer; `None` for layer 0.
    pub beta: Option<f64>,
    /// Problem coefficient applied in this layer; `None` for layer 0.
    pub problem_coef: Option<f64>,
    pub energy: f64,
    pub approx_ratio: f64,
    pub success_prob: f64,
    /// `A_j` evaluated on this layer's state, when the run computed it.
    pub feedback: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<LayerRecord>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "layer,beta,energy,approx_ratio,success_prob,feedback_A";

impl Trajectory {
    pub fn ell(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn approx_ratios(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.approx_ratio).collect()
    }

    pub fn success_probs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.success_prob).collect()
    }

    pub fn last(&self) -> &LayerRecord {
        self.records.last().expect("trajectory includes layer 0")
    }

    /// CSV body with the fixed header; empty cells for absent values.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(sig17).unwrap_or_default();
        let mut s = String::from(TRAJECTORY_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.layer,
                opt(r.beta),
                sig17(r.energy),
                sig17(r.approx_ratio),
                sig17(r.success_prob),
                opt(r.feedback)
            )
            .unwrap();
        }
        s
    }
}

fn record(
    layer: usize,
    coef: Option<(f64, f64)>,
    state: &StateVector,
    hp: &ProblemDiagonal,
    feedback: Option<f64>,
) -> Result<LayerRecord> {
    let energy = expect_problem(state, hp)?;
    Ok(LayerRecord {
        layer,
        beta: coef.map(|c| c.0),
        problem_coef: coef.map(|c| c.1),
        energy,
        approx_ratio: approx_ratio(energy, hp.e_min())?,
        success_prob: success_probability(state, hp.ground_set())?,
        feedback,
    })
}

/// Runs the feedback loop `beta_j = -A_{j-1}` for `ell` layers from `|->^n`.
pub fn run_falqon(graph: &WeightedGraph, dt: f64, ell: usize) -> Result<(ParameterCurve, Trajectory)> {
    let hp = build_problem_diagonal(graph)?;
    run_falqon_with(&hp, dt, ell)
}

pub fn run_falqon_with(hp: &ProblemDiagonal, dt: f64, ell: usize) -> Result<(ParameterCurve, Trajectory)> {
    check_dt_ell(dt, ell)?;
    let mut state = init_minus_state(hp.n())?;
    let phase = PhaseTable::new(hp, dt, 1.0);
    let mut a = commutator_expectation(&state, hp)?;
    let mut records = Vec::with_capacity(ell + 1);
    records.push(record(0, None, &state, hp, Some(a))?);
    let mut betas = Vec::with_capacity(ell);
    for j in 1..=ell {
        let beta = -a;
        phase.apply(&mut state)?;
        apply_driver_rotations(&mut state, dt, beta)?;
        a = commutator_expectation(&state, hp)?;
        betas.push(beta);
        records.push(record(j, Some((beta, 1.0)), &state, hp, Some(a))?);
    }
    let curve = ParameterCurve::new(dt, betas, CurveSource::Falqon)?;
    Ok((curve, Trajectory { records }))
}

/// Linear schedule `a_j = 1 - t_j/T`, `b_j = t_j/T` with `t_j = j dt`, `T = ell dt`.
pub fn linear_schedule(dt: f64, ell: usize) -> Result<ScheduleCurve> {
    check_dt_ell(dt, ell)?;
    let pairs = (1..=ell)
        .map(|j| {
            let frac = j as f64 / ell as f64;
            (1.0 - frac, frac)
        })
        .collect();
    ScheduleCurve::new(dt, pairs)
}

/// Applies a fixed layer sequence from `|->^n`; nothing is fed back from the state.
pub fn replay_curve<C: LayerSequence + ?Sized>(graph: &WeightedGraph, curve: &C) -> Result<Trajectory> {
    let hp = build_problem_diagonal(graph)?;
    replay_curve_with(&hp, curve)
}

pub fn replay_curve_with<C: LayerSequence + ?Sized>(hp: &ProblemDiagonal, curve: &C) -> Result<Trajectory> {
    let dt = curve.dt();
    let mut state = init_minus_state(hp.n())?;
    let mut records = Vec::with_capacity(curve.ell() + 1);
    records.push(record(0, None, &state, hp, None)?);
    for j in 1..=curve.ell() {
        let (beta, b) = curve.coefficients(j);
        apply_problem_phase(&mut state, hp, dt, b)?;
        apply_driver_rotations(&mut state, dt, beta)?;
        records.push(record(j, Some((beta, b)), &state, hp, None)?);
    }
    Ok(Trajectory { records })
}

/// The feedback curve of the unit-weight copy of `graph`.
pub fn unweighted_baseline(graph: &WeightedGraph, dt: f64, ell: usize) -> Result<ParameterCurve> {
    let (curve, _) = run_falqon(&graph.with_unit_weights(), dt, ell)?;
    Ok(curve.with_source(CurveSource::UnweightedBaseline))
}
