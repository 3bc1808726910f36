//! Figures of merit and per-layer deviation statistics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::schedules::{ParameterCurve, Trajectory};

/// `r_A = energy / e_min`.
pub fn approx_ratio(energy: f64, e_min: f64) -> Result<f64> {
    if !(e_min < 0.0) {
        return Err(Error::invalid(format!("approximation ratio needs e_min < 0, got {e_min}")));
    }
    Ok(energy / e_min)
}

/// Per-layer absolute deviations (layers `1..=ell`) of a candidate from a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSeries {
    pub beta: Vec<f64>,
    pub approx_ratio: Vec<f64>,
    pub success_prob: Vec<f64>,
}

impl DeviationSeries {
    pub fn ell(&self) -> usize {
        self.beta.len()
    }
}

pub fn deviations(
    reference: (&ParameterCurve, &Trajectory),
    candidate: (&ParameterCurve, &Trajectory),
) -> Result<DeviationSeries> {
    let (rc, rt) = reference;
    let (cc, ct) = candidate;
    if rc.ell() != cc.ell() {
        return Err(Error::DimensionMismatch { expected: rc.ell(), got: cc.ell() });
    }
    if rc.dt() != cc.dt() {
        return Err(Error::invalid(format!("time steps differ: {} vs {}", rc.dt(), cc.dt())));
    }
    for t in [rt, ct] {
        if t.ell() != rc.ell() {
            return Err(Error::DimensionMismatch { expected: rc.ell(), got: t.ell() });
        }
    }
    let abs_diff = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).skip(1).map(|(x, y)| (x - y).abs()).collect();
    Ok(DeviationSeries {
        beta: rc.betas().iter().zip(cc.betas()).map(|(a, b)| (a - b).abs()).collect(),
        approx_ratio: abs_diff(rt.approx_ratios(), ct.approx_ratios()),
        success_prob: abs_diff(rt.success_probs(), ct.success_probs()),
    })
}

/// Per-layer mean, sample standard deviation and maximum over instances.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub max: Vec<f64>,
}

pub const AGGREGATE_CSV_HEADER: &str = "layer,mean,std,max";

impl AggregateSeries {
    /// One row per layer; the first row is layer `first_layer`.
    pub fn to_csv(&self, first_layer: usize) -> String {
        let mut s = String::from(AGGREGATE_CSV_HEADER);
        s.push('\n');
        for (i, ((m, sd), mx)) in self.mean.iter().zip(&self.std).zip(&self.max).enumerate() {
            writeln!(s, "{},{},{},{}", first_layer + i, sig17(*m), sig17(*sd), sig17(*mx)).unwrap();
        }
        s
    }

    /// Mean of the per-layer means.
    pub fn layer_average(&self) -> f64 {
        self.mean.iter().sum::<f64>() / self.mean.len() as f64
    }
}

/// Two-pass statistics; the standard deviation uses `N - 1` and is 0 for `N = 1`.
pub fn aggregate<S: AsRef<[f64]>>(series: &[S]) -> Result<AggregateSeries> {
    let first = series.first().ok_or_else(|| Error::invalid("cannot aggregate an empty set"))?.as_ref();
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.as_ref().len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: bad.as_ref().len() });
    }
    let count = series.len() as f64;
    let mut mean = vec![0.0; len];
    let mut max = vec![f64::NEG_INFINITY; len];
    for s in series {
        for (j, &x) in s.as_ref().iter().enumerate() {
            mean[j] += x;
            max[j] = max[j].max(x);
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut std = vec![0.0; len];
    if series.len() > 1 {
        for s in series {
            for (j, &x) in s.as_ref().iter().enumerate() {
                std[j] += (x - mean[j]).powi(2);
            }
        }
        std.iter_mut().for_each(|v| *v = (*v / (count - 1.0)).sqrt());
    }
    Ok(AggregateSeries { mean, std, max })
}
