//! Curve-matching loss terms and their analytic gradients.
//!
//! All norms are plain sums over the layer index (no division by the curve
//! length). The spectral term weights the discrete Fourier coefficients
//! `F_m = Σ_j β_j e^{-2πi m j / ℓ}` by `ω_m⁴` with the folded angular
//! frequency `ω_m = 2π min(m, ℓ - m) / ℓ`, so both halves of the spectrum of a
//! real curve carry the weight of their physical frequency.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative weights `c1..c6` of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub level: f64,
    pub slope: f64,
    pub curvature: f64,
    pub spectral: f64,
    pub tv: f64,
    pub scalar: f64,
}

impl LossWeights {
    pub const NOMINAL: LossWeights = LossWeights {
        level: 1.9700633,
        slope: 0.3553681,
        curvature: 1.7610852,
        spectral: 8.7863e-2,
        tv: 5.5548618e-1,
        scalar: 1.0,
    };

    pub fn as_array(&self) -> [f64; 6] {
        [self.level, self.slope, self.curvature, self.spectral, self.tv, self.scalar]
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid(format!("loss weights must be finite and nonnegative: {self:?}")));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::NOMINAL
    }
}

/// Unweighted term values and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub level: f64,
    pub slope: f64,
    pub curvature: f64,
    pub spectral: f64,
    pub tv: f64,
    pub scalar: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn new(terms: [f64; 6], w: &LossWeights) -> Self {
        let total = terms.iter().zip(w.as_array()).map(|(t, c)| c * t).sum();
        let [level, slope, curvature, spectral, tv, scalar] = terms;
        Self { level, slope, curvature, spectral, tv, scalar, total }
    }

    pub fn terms(&self) -> [f64; 6] {
        [self.level, self.slope, self.curvature, self.spectral, self.tv, self.scalar]
    }
}

/// Forward differences `β_{j+1} - β_j`.
pub fn finite_diff1(curve: &[f64]) -> Result<Vec<f64>> {
    if curve.len() < 2 {
        return Err(Error::invalid(format!("first difference needs at least 2 points, got {}", curve.len())));
    }
    Ok(curve.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Central second differences `β_{j+1} - 2β_j + β_{j-1}` for `1 <= j <= ℓ-2`.
pub fn finite_diff2(curve: &[f64]) -> Result<Vec<f64>> {
    if curve.len() < 3 {
        return Err(Error::invalid(format!("second difference needs at least 3 points, got {}", curve.len())));
    }
    Ok(curve.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect())
}

/// `Σ |β_{j+1} - β_j|`.
pub fn total_variation(curve: &[f64]) -> f64 {
    curve.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Folded angular frequency of DFT bin `m` for a length-`ell` signal.
pub fn angular_frequency(m: usize, ell: usize) -> f64 {
    2.0 * PI * m.min(ell - m) as f64 / ell as f64
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn dft(curve: &[f64], inverse: bool) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = curve.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    transform(&mut buf, inverse);
    buf
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    if buf.is_empty() {
        return;
    }
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let fft = if inverse { p.plan_fft_inverse(buf.len()) } else { p.plan_fft_forward(buf.len()) };
        fft.process(buf);
    });
}

/// `Σ_m ω_m⁴ |F_m|²`.
pub fn spectral_penalty(curve: &[f64]) -> f64 {
    let ell = curve.len();
    dft(curve, false).iter().enumerate().map(|(m, f)| angular_frequency(m, ell).powi(4) * f.norm_sqr()).sum()
}

/// Value and gradient of [`spectral_penalty`].
pub fn spectral_penalty_grad(curve: &[f64]) -> (f64, Vec<f64>) {
    let ell = curve.len();
    let mut spec = dft(curve, false);
    let mut value = 0.0;
    for (m, f) in spec.iter_mut().enumerate() {
        let w = angular_frequency(m, ell).powi(4);
        value += w * f.norm_sqr();
        *f *= w;
    }
    // d|F_m|²/dβ_j = 2 Re(conj(F_m) e^{-2πimj/ℓ}); summed over m this is an
    // unnormalized inverse transform of the weighted spectrum.
    transform(&mut spec, true);
    (value, spec.iter().map(|c| 2.0 * c.re).collect())
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: a.len() });
    }
    if a.len() < 3 {
        return Err(Error::invalid(format!("curves need at least 3 points, got {}", a.len())));
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Terms `[level, slope, curvature, spectral, tv]` of a prediction against a target.
fn curve_terms(pred: &[f64], target: &[f64]) -> Result<[f64; 5]> {
    check_pair(pred, target)?;
    Ok([
        sq_dist(pred, target),
        sq_dist(&finite_diff1(pred)?, &finite_diff1(target)?),
        sq_dist(&finite_diff2(pred)?, &finite_diff2(target)?),
        spectral_penalty(pred),
        total_variation(pred),
    ])
}

/// Weighted curve loss and its gradient with respect to `pred`.
fn curve_terms_grad(pred: &[f64], target: &[f64], w: &LossWeights) -> Result<([f64; 5], Vec<f64>)> {
    check_pair(pred, target)?;
    let ell = pred.len();
    let r: Vec<f64> = pred.iter().zip(target).map(|(a, b)| a - b).collect();
    let mut g: Vec<f64> = r.iter().map(|x| 2.0 * w.level * x).collect();
    let d1 = finite_diff1(&r)?;
    for (j, d) in d1.iter().enumerate() {
        let k = 2.0 * w.slope * d;
        g[j + 1] += k;
        g[j] -= k;
    }
    let d2 = finite_diff2(&r)?;
    for (j, d) in d2.iter().enumerate() {
        let k = 2.0 * w.curvature * d;
        g[j + 2] += k;
        g[j + 1] -= 2.0 * k;
        g[j] += k;
    }
    let (spectral, gs) = spectral_penalty_grad(pred);
    g.iter_mut().zip(&gs).for_each(|(a, b)| *a += w.spectral * b);
    let mut tv = 0.0;
    for j in 0..ell - 1 {
        let d = pred[j + 1] - pred[j];
        tv += d.abs();
        // Subgradient 0 at ties.
        let s = w.tv * if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 };
        g[j + 1] += s;
        g[j] -= s;
    }
    let terms = [
        r.iter().map(|x| x * x).sum(),
        d1.iter().map(|x| x * x).sum(),
        d2.iter().map(|x| x * x).sum(),
        spectral,
        tv,
    ];
    Ok((terms, g))
}

fn check_scalars(s_hat: &[f64], s: &[f64]) -> Result<()> {
    if s_hat.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: s_hat.len() });
    }
    Ok(())
}

/// Student objective: curve match against the teacher plus the scalar head term.
pub fn distill_loss(student: &[f64], teacher: &[f64], s_hat: &[f64], s: &[f64], w: &LossWeights) -> Result<LossBreakdown> {
    check_scalars(s_hat, s)?;
    let [a, b, c, d, e] = curve_terms(student, teacher)?;
    Ok(LossBreakdown::new([a, b, c, d, e, sq_dist(s_hat, s)], w))
}

/// [`distill_loss`] with gradients with respect to the student curve and `s_hat`.
pub fn distill_loss_grad(
    student: &[f64],
    teacher: &[f64],
    s_hat: &[f64],
    s: &[f64],
    w: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>, Vec<f64>)> {
    check_scalars(s_hat, s)?;
    let ([a, b, c, d, e], g) = curve_terms_grad(student, teacher, w)?;
    let gs = s_hat.iter().zip(s).map(|(x, y)| 2.0 * w.scalar * (x - y)).collect();
    Ok((LossBreakdown::new([a, b, c, d, e, sq_dist(s_hat, s)], w), g, gs))
}

/// Teacher objective: the curve terms of [`distill_loss`] against a reference, no scalar term.
pub fn teacher_loss(teacher: &[f64], reference: &[f64], w: &LossWeights) -> Result<LossBreakdown> {
    let [a, b, c, d, e] = curve_terms(teacher, reference)?;
    Ok(LossBreakdown::new([a, b, c, d, e, 0.0], w))
}

/// [`teacher_loss`] with its gradient with respect to the teacher curve.
pub fn teacher_loss_grad(teacher: &[f64], reference: &[f64], w: &LossWeights) -> Result<(LossBreakdown, Vec<f64>)> {
    let ([a, b, c, d, e], g) = curve_terms_grad(teacher, reference, w)?;
    Ok((LossBreakdown::new([a, b, c, d, e, 0.0], w), g))
}
