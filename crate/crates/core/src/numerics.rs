//! Floating-point plumbing shared by every module: compensated summation,
//! Gauss–Legendre rules and an adaptive Gauss–Kronrod integrator.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
///
/// Also tracks `sum |x_i|` and the term count so that callers can attach an
/// a-posteriori rounding certificate to the result.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
    abs: f64,
    terms: u64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn add_raw(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        self.add_raw(v);
        self.abs += v.abs();
        self.terms += 1;
    }

    /// Folds another accumulator into this one. The order of merges is part
    /// of the result, so callers merge in a fixed order.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add_raw(other.sum);
        self.add_raw(other.comp);
        self.abs += other.abs;
        self.terms += other.terms;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn abs_total(&self) -> f64 {
        self.abs
    }

    /// Bound on the rounding error of `value()` relative to the exact sum
    /// of the (already rounded) inputs.
    pub fn error_bound(&self) -> f64 {
        let u = f64::EPSILON / 2.0;
        2.0 * u * self.value().abs() + 4.0 * (self.terms as f64) * u * u * self.abs
    }

    pub fn to_bits(&self) -> SumBits {
        SumBits {
            sum: self.sum.to_bits(),
            comp: self.comp.to_bits(),
            abs: self.abs.to_bits(),
            terms: self.terms,
        }
    }

    pub fn from_bits(bits: &SumBits) -> Self {
        Self {
            sum: f64::from_bits(bits.sum),
            comp: f64::from_bits(bits.comp),
            abs: f64::from_bits(bits.abs),
            terms: bits.terms,
        }
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Exact bit image of a [`NeumaierSum`], used for checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumBits {
    pub sum: u64,
    pub comp: u64,
    pub abs: u64,
    pub terms: u64,
}

/// Compensated sum of a slice.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// Complex companion of [`NeumaierSum`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn error_bound(&self) -> f64 {
        self.re.error_bound().hypot(self.im.error_bound())
    }
}

/// A value together with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified<T> {
    pub value: T,
    pub error: f64,
}

impl<T> Certified<T> {
    pub fn new(value: T, error: f64) -> Self {
        Self { value, error }
    }
}

/// Values that can be integrated: real or complex.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    #[inline]
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    #[inline]
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                let jf = j as f64;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed composite Gauss–Legendre rule: `panels` equal panels on [a, b].
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mid = lo + 0.5 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<T: QuadValue>(&self, f: impl Fn(f64) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (&x, &w)| acc + f(x) * w)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron = kron + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Settings for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
    pub max_segments: usize,
}

impl QuadConfig {
    pub fn new(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            initial_panels: 1,
            max_segments: 20_000,
        }
    }

    pub fn panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels.max(1);
        self
    }

    pub fn max_segments(mut self, n: usize) -> Self {
        self.max_segments = n;
        self
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration with bisection of the worst
/// segment. The returned error is the sum of the per-segment |K15 - G7|.
pub fn integrate<T: QuadValue>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    cfg: QuadConfig,
) -> Result<Certified<T>> {
    if a == b {
        return Ok(Certified::new(T::default(), 0.0));
    }
    let mut heap = BinaryHeap::new();
    let n0 = cfg.initial_panels.max(1);
    let h = (b - a) / n0 as f64;
    for k in 0..n0 {
        let lo = a + h * k as f64;
        let hi = if k + 1 == n0 { b } else { lo + h };
        let (value, error) = gk15(&f, lo, hi);
        heap.push(Segment { a: lo, b: hi, value, error });
    }
    let mut total_err: f64 = heap.iter().map(|s| s.error).sum();
    while total_err > cfg.abs_tol {
        if heap.len() >= cfg.max_segments {
            return Err(Error::Accuracy {
                what: "adaptive quadrature".into(),
                requested: cfg.abs_tol,
                achieved: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution.
            return Err(Error::Accuracy {
                what: "adaptive quadrature (interval underflow)".into(),
                requested: cfg.abs_tol,
                achieved: total_err,
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Sum in interval order so the result does not depend on heap layout.
    let mut segs: Vec<Segment<T>> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().fold(T::default(), |acc, s| acc + s.value);
    let error = segs.iter().map(|s| s.error).sum();
    Ok(Certified::new(value, error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut s = NeumaierSum::new();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn sum_bits_round_trip() {
        let s: NeumaierSum = [0.1, 0.2, 0.3].into_iter().collect();
        assert_eq!(NeumaierSum::from_bits(&s.to_bits()), s);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        // degree 19 is exact for 10 nodes
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((approx - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_matches_closed_forms() {
        let r = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, QuadConfig::new(1e-13)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let c = integrate(
            |t: f64| Complex64::new(0.0, 3.0 * t).exp(),
            0.0,
            1.0,
            QuadConfig::new(1e-13),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 3.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((c.value - exact).norm() < 1e-13);
    }

    #[test]
    fn adaptive_reports_failure() {
        let cfg = QuadConfig::new(1e-30).max_segments(4);
        assert!(integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, cfg).is_err());
    }
}
