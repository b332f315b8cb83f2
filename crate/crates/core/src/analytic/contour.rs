//! S(y) by inverse Mellin transform: (1/2πi)∫ y^s φ̃(s) F(s) ds.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, Certified};
use crate::smoothing::{decay_moment, mellin_phi, ExpGlueBump, MellinTable};

use super::series::SeriesFactorization;

/// Largest truncation height accepted for the vertical integral.
pub const MAX_HEIGHT: f64 = 400.0;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContourConfig {
    /// Re s of the vertical line.
    pub abscissa: f64,
    /// Truncation height T.
    pub height: f64,
    /// Order k of the decay moment used for the tail.
    pub moment_order: usize,
    pub accuracy: f64,
}

impl ContourConfig {
    /// Picks k and the smallest T with tail bound below `target` for y <= y_max.
    pub fn for_line(series: &SeriesFactorization, abscissa: f64, y_max: f64, target: f64) -> Result<Self> {
        if abscissa <= 0.0 {
            return Err(Error::InvalidArgument("truncation height is only certified for abscissa > 0".into()));
        }
        let f_abs = series.f_abs(abscissa)?;
        let mut best: Option<(f64, usize)> = None;
        for k in 2..=6 {
            let m = decay_moment(&ExpGlueBump, k, abscissa);
            let t = (y_max.powf(abscissa) * f_abs * m / (PI * (k - 1) as f64 * target)).powf(1.0 / (k - 1) as f64);
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, k));
            }
        }
        let (height, k) = best.expect("non-empty range");
        let height = height.max(4.0);
        if height > MAX_HEIGHT {
            return Err(Error::WorkEstimate {
                what: "contour height".into(),
                estimate: height,
                limit: MAX_HEIGHT,
                suggestion: "loosen the tail target or lower y".into(),
            });
        }
        Ok(Self {
            abscissa,
            height,
            moment_order: k,
            accuracy: (target * 0.1).max(1e-12),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourValue {
    pub value: f64,
    /// |fine - coarse| between the two Gauss rules.
    pub quadrature_estimate: f64,
    /// Propagated error of the cached φ̃ and F values.
    pub evaluation_error: f64,
    /// Bound for ∫_T^∞, or an estimate on lines without an a-priori |F| bound.
    pub tail: f64,
}

impl ContourValue {
    pub fn total_error(&self) -> f64 {
        self.quadrature_estimate + self.evaluation_error + self.tail
    }
}

#[derive(Clone, Debug)]
struct LineRule {
    t: Vec<f64>,
    w: Vec<f64>,
    /// φ̃(c+it) F(c+it)
    product: Vec<Complex64>,
    /// |φ̃| err(F) + |F| err(φ̃)
    eval_err: Vec<f64>,
}

fn panels(scale: f64, height: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let fine_end = (8.0 * scale).min(height);
    let n_fine = 32;
    for i in 0..n_fine {
        let a = fine_end * i as f64 / n_fine as f64;
        out.push((a, a + fine_end / n_fine as f64));
    }
    let n_coarse = ((height - fine_end) / 0.5).ceil().max(0.0) as usize;
    for i in 0..n_coarse {
        let a = fine_end + (height - fine_end) * i as f64 / n_coarse as f64;
        out.push((a, a + (height - fine_end) / n_coarse as f64));
    }
    out
}

fn build_rule(
    series: &SeriesFactorization,
    mellin: &MellinTable,
    c: f64,
    height: f64,
    order: usize,
    accuracy: f64,
) -> Result<LineRule> {
    let (x, wt) = gauss_legendre(order);
    let mut t = Vec::new();
    let mut w = Vec::new();
    for (a, b) in panels(c.abs(), height) {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&wt) {
            t.push(mid + half * xi);
            w.push(half * wi);
        }
    }
    let values: Vec<Result<(Complex64, f64)>> = t
        .par_iter()
        .map(|&ti| {
            let s = Complex64::new(c, ti);
            let f = series.f_product(s, accuracy)?;
            let m = mellin.eval(s);
            Ok((m * f.value, m.norm() * f.error + f.value.norm() * mellin.accuracy()))
        })
        .collect();
    let mut product = Vec::with_capacity(t.len());
    let mut eval_err = Vec::with_capacity(t.len());
    for v in values {
        let (p, e) = v?;
        product.push(p);
        eval_err.push(e);
    }
    Ok(LineRule { t, w, product, eval_err })
}

impl LineRule {
    fn apply(&self, c: f64, y: f64) -> (f64, f64) {
        let ly = y.ln();
        let mut acc = 0.0;
        let mut err = 0.0;
        for i in 0..self.t.len() {
            let ys = Complex64::from_polar(y.powf(c), self.t[i] * ly);
            acc += self.w[i] * (ys * self.product[i]).re;
            err += self.w[i] * self.eval_err[i];
        }
        (acc / PI, err * y.powf(c) / PI)
    }
}

/// Vertical-line evaluator with φ̃ F cached on the quadrature nodes, so
/// that many values of y cost one pass over the nodes each.
#[derive(Clone, Debug)]
pub struct ContourEvaluator {
    config: ContourConfig,
    fine: LineRule,
    coarse: LineRule,
    /// y^c-free tail constant: F_abs M_k T^{1-k} / (π (k-1)), if certified.
    tail_constant: Option<f64>,
    /// sup of |φ̃ F| near the top of the line, for uncertified tails.
    top_sample: f64,
}

impl ContourEvaluator {
    pub fn new(series: &SeriesFactorization, config: ContourConfig) -> Result<Self> {
        let ContourConfig { abscissa: c, height, moment_order: k, accuracy } = config;
        if height > MAX_HEIGHT || height <= 0.0 {
            return Err(Error::ParamOutOfRange {
                field: "height".into(),
                message: format!("must lie in (0, {MAX_HEIGHT}]"),
            });
        }
        if k < 2 {
            return Err(Error::ParamOutOfRange {
                field: "moment_order".into(),
                message: "must be at least 2".into(),
            });
        }
        let mellin = MellinTable::new(height, accuracy)?;
        let fine = build_rule(series, &mellin, c, height, 20, accuracy)?;
        let coarse = build_rule(series, &mellin, c, height, 12, accuracy)?;
        let tail_constant = if c > 0.0 {
            let m = decay_moment(&ExpGlueBump, k, c);
            Some(series.f_abs(c)? * m * height.powf(1.0 - k as f64) / (PI * (k - 1) as f64))
        } else {
            None
        };
        let n = fine.t.len();
        let top_sample = fine.product[n - n / 10..].iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(Self { config, fine, coarse, tail_constant, top_sample })
    }

    pub fn config(&self) -> &ContourConfig {
        &self.config
    }

    pub fn nodes(&self) -> usize {
        self.fine.t.len() + self.coarse.t.len()
    }

    pub fn eval(&self, y: f64) -> Result<ContourValue> {
        if y <= 0.0 {
            return Err(Error::InvalidArgument(format!("y must be positive, got {y}")));
        }
        let c = self.config.abscissa;
        let (value, evaluation_error) = self.fine.apply(c, y);
        let (coarse, _) = self.coarse.apply(c, y);
        let tail = match self.tail_constant {
            Some(k) => k * y.powf(c),
            // |φ̃F| decays at least like t^{-k}; integrate that from the top sample
            None => {
                let k = self.config.moment_order as f64;
                y.powf(c) * self.top_sample * self.config.height / ((k - 1.0) * PI)
            }
        };
        Ok(ContourValue {
            value,
            quadrature_estimate: (value - coarse).abs(),
            evaluation_error,
            tail,
        })
    }
}

/// One-shot contour evaluation of S(y).
pub fn s_via_contour(series: &SeriesFactorization, y: f64, config: ContourConfig) -> Result<ContourValue> {
    ContourEvaluator::new(series, config)?.eval(y)
}

/// Res_{s=0} y^s φ̃(s) F(s) by the trapezoid rule on |s| = radius.
pub fn residue_at_zero(series: &SeriesFactorization, y: f64, radius: f64, points: usize) -> Result<Certified<f64>> {
    let eval = |n: usize| -> Result<f64> {
        let vals: Vec<Result<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let e = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / n as f64);
                let s = e * radius;
                let f = series.f_product(s, 1e-13)?.value;
                let m = mellin_phi(s, 1e-13)?.value;
                Ok((s * y.ln()).exp() * m * f * s)
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for v in vals {
            acc += v?;
        }
        Ok(acc.re / n as f64)
    };
    let a = eval(points)?;
    let b = eval(points / 2)?;
    Ok(Certified::new(a, (a - b).abs() + 1e-12 * a.abs()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoContourReport {
    pub y: f64,
    pub right_line: ContourValue,
    pub residue: Certified<f64>,
    pub left_line: ContourValue,
    pub gap: f64,
}

/// Compares the line Re s = c with residue plus the line Re s = c' < 0.
pub fn two_contour_check(
    series: &SeriesFactorization,
    ys: &[f64],
    right: ContourConfig,
    left_abscissa: f64,
    radius: f64,
) -> Result<Vec<TwoContourReport>> {
    let r_eval = ContourEvaluator::new(series, right)?;
    let left = ContourConfig { abscissa: left_abscissa, ..right };
    let l_eval = ContourEvaluator::new(series, left)?;
    ys.iter()
        .map(|&y| {
            let right_line = r_eval.eval(y)?;
            let left_line = l_eval.eval(y)?;
            let residue = residue_at_zero(series, y, radius, 256)?;
            let gap = (right_line.value - residue.value - left_line.value).abs();
            Ok(TwoContourReport { y, right_line, residue, left_line, gap })
        })
        .collect()
}
