//! Character sums over the family χ_{8d}, the partial sums S, S*, S̃ and
//! the quadratic forms 𝒩, 𝒟.

pub mod afe;
pub mod scan;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arith::{chi8d, is_valid_core, kronecker, FactoredInteger, SmallestPrimeFactor, SquarefreeSieve};
use crate::error::{Error, Result};
use crate::numerics::NeumaierSum;
use crate::resonator::{b_factor, enumerate_support, r_tilde_value, CoefficientTable, SignState, DEFAULT_SUPPORT_CAP};
use crate::smoothing::{canonical_smoothness_constant, psi_with, ExpGlueBump, TestFunction};

pub use afe::{afe_central_value, afe_oracle, AfeValue};
pub use scan::{pigeonhole_extract, DiscriminantScan, RatioReport, ScanTotals, WorkLimits};

/// Σ_{n <= 2x} χ_{8d}(n) φ(n/x)/√n, evaluated term by term.
pub fn truncated_sum(d: u64, x: f64, phi: &dyn TestFunction) -> Result<f64> {
    if !is_valid_core(d) {
        return Err(Error::InvalidDiscriminant { d });
    }
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("x must be positive, got {x}")));
    }
    let n_max = (phi.support() * x).floor() as u64;
    let mut acc = NeumaierSum::new();
    for n in 1..=n_max.max(1) {
        let c = chi8d(d, n)?;
        if c != 0 {
            acc.add(c as f64 * phi.value(n as f64 / x) / (n as f64).sqrt());
        }
    }
    Ok(acc.value())
}

/// R(d) = Σ_{n in support} r(n) χ_{8d}(n).
pub fn big_r(d: u64, table: &CoefficientTable) -> Result<f64> {
    if !is_valid_core(d) {
        return Err(Error::InvalidDiscriminant { d });
    }
    let chi: Vec<i32> = table
        .primes()
        .iter()
        .map(|&p| kronecker(8 * d as i64, p as i64))
        .collect();
    let s = table.support();
    let mut acc = NeumaierSum::new();
    for i in 0..s.len() {
        let sign: i32 = s.factor_indices(i).iter().map(|&j| chi[j as usize]).product();
        if sign != 0 {
            acc.add(sign as f64 * s.r[i]);
        }
    }
    Ok(acc.value())
}

/// (2/π²) D ∏_{p ∈ 𝒫⁻} (1 + r'(p)²).
pub fn denominator_asymptotic(table: &CoefficientTable) -> f64 {
    let d = table.params().d;
    let prod: f64 = table
        .pminus()
        .iter()
        .map(|&p| {
            let rp = table.r_prime(p);
            1.0 + rp * rp
        })
        .product();
    2.0 / (std::f64::consts::PI * std::f64::consts::PI) * d * prod
}

#[derive(Clone, Debug)]
struct EllTerm {
    l: u64,
    /// r̃(ℓ) d(ℓ) / √ℓ
    weight: f64,
    /// (p, b factor at p) for p | ℓ
    primes: Vec<(u64, f64)>,
}

/// Evaluator for S(y) and its companions over ℓ built from 𝒫⁻ only.
#[derive(Clone)]
pub struct PartialSumKernel {
    phi: Arc<dyn TestFunction>,
    ells: Vec<EllTerm>,
    /// b(m, 1) for m <= m_max
    b1: Vec<f64>,
    /// largest ℓm² the kernel can see
    reach: f64,
    y_max: f64,
}

impl std::fmt::Debug for PartialSumKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartialSumKernel")
            .field("ells", &self.ells.len())
            .field("m_max", &(self.b1.len() - 1))
            .field("y_max", &self.y_max)
            .finish()
    }
}

impl PartialSumKernel {
    /// Kernel answering S, S*, S̃ for y <= `y_max`, with the canonical φ.
    pub fn new(table: &CoefficientTable, y_max: f64) -> Result<Self> {
        Self::with_test_function(table, y_max, Arc::new(ExpGlueBump))
    }

    pub fn with_test_function(table: &CoefficientTable, y_max: f64, phi: Arc<dyn TestFunction>) -> Result<Self> {
        let minus: Vec<(u64, f64)> = table.pminus().iter().map(|&p| (p, table.r_at(p))).collect();
        Self::from_minus_band(&minus, y_max, phi)
    }

    /// Kernel from explicit (p, r₋(p)) pairs.
    pub fn from_minus_band(minus: &[(u64, f64)], y_max: f64, phi: Arc<dyn TestFunction>) -> Result<Self> {
        if !(y_max > 0.0 && y_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("y_max must be positive, got {y_max}")));
        }
        // S(2y) and ψ both need twice the φ reach
        let reach = 2.0 * phi.support().max(2.0) * y_max;
        let mut minus = minus.to_vec();
        minus.sort_by_key(|t| t.0);
        let primes: Vec<u64> = minus.iter().map(|t| t.0).collect();
        let w: Vec<f64> = minus
            .iter()
            .map(|&(p, r)| 2.0 * r_tilde_value(p, r) / (p as f64).sqrt())
            .collect();
        let support = enumerate_support(&primes, &w, reach, DEFAULT_SUPPORT_CAP)?;
        let beta: Vec<f64> = minus.iter().map(|&(p, r)| b_factor(p, r)).collect();
        let ells = (0..support.len())
            .map(|i| EllTerm {
                l: support.n[i],
                weight: support.r[i],
                primes: support
                    .factor_indices(i)
                    .iter()
                    .map(|&j| (primes[j as usize], beta[j as usize]))
                    .collect(),
            })
            .collect();
        let m_max = reach.sqrt().floor() as usize + 1;
        let spf = SmallestPrimeFactor::new(m_max);
        let mut b1 = vec![1.0; m_max + 1];
        for m in 2..=m_max {
            let p = spf.get(m);
            let k = m / p;
            b1[m] = if p == 2 || k % p == 0 {
                b1[k]
            } else {
                let f = match primes.binary_search(&(p as u64)) {
                    Ok(j) => beta[j],
                    Err(_) => b_factor(p as u64, 0.0),
                };
                b1[k] * f
            };
        }
        Ok(Self {
            phi,
            ells,
            b1,
            reach,
            y_max,
        })
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn test_function(&self) -> &dyn TestFunction {
        self.phi.as_ref()
    }

    /// ℓ values with their weights r̃(ℓ)d(ℓ)/√ℓ.
    pub fn ell_weights(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.ells.iter().map(|e| (e.l, e.weight))
    }

    fn check_y(&self, y: f64, factor: f64) -> Result<()> {
        if !(y > 0.0) || y * factor > self.reach * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "y = {y} outside the kernel range (0, {}]",
                self.y_max
            )));
        }
        Ok(())
    }

    /// b(m, ℓ) from the cached b(m, 1).
    fn b(&self, m: usize, ell: &EllTerm) -> f64 {
        let mut v = self.b1[m];
        for &(p, f) in &ell.primes {
            if m as u64 % p == 0 {
                v /= f;
            }
        }
        v
    }

    /// Σ_ℓ w(ℓ) Σ_{ℓm² <= cutoff·y} b(m,ℓ)/m g(ℓm²/y).
    fn weighted_sum(&self, y: f64, cutoff: f64, absolute: bool, g: impl Fn(f64) -> f64) -> NeumaierSum {
        let bound = cutoff * y;
        let mut acc = NeumaierSum::new();
        for ell in &self.ells {
            let lf = ell.l as f64;
            if lf > bound {
                break;
            }
            let w = if absolute { ell.weight.abs() } else { ell.weight };
            let mut m = 1usize;
            loop {
                let arg = lf * (m * m) as f64;
                if arg > bound {
                    break;
                }
                let v = g(arg / y);
                if v != 0.0 {
                    acc.add(w * self.b(m, ell) / m as f64 * v);
                }
                m += 1;
            }
        }
        acc
    }

    pub fn s_of_y(&self, y: f64) -> Result<f64> {
        let c = self.phi.support();
        self.check_y(y, c)?;
        Ok(self.weighted_sum(y, c, false, |u| self.phi.value(u)).value())
    }

    pub fn s_star(&self, y: f64) -> Result<f64> {
        let c = self.phi.support();
        self.check_y(y, c)?;
        Ok(self.weighted_sum(y, c, true, |_| 1.0).value())
    }

    /// S̃(y) with ψ(u) = φ(u) - φ(u/2) inside the sum.
    pub fn s_tilde(&self, y: f64) -> Result<f64> {
        let c = 2.0 * self.phi.support();
        self.check_y(y, c)?;
        let phi = self.phi.as_ref();
        Ok(self.weighted_sum(y, c, false, |u| psi_with(phi, u)).value())
    }

    /// S(y) - S(2y).
    pub fn s_tilde_identity(&self, y: f64) -> Result<f64> {
        Ok(self.s_of_y(y)? - self.s_of_y(2.0 * y)?)
    }

    /// |y dS/dy| from the termwise derivative, and C_φ S*(y).
    pub fn derivative_bound_check(&self, y: f64) -> Result<(f64, f64)> {
        let c = self.phi.support();
        self.check_y(y, c)?;
        let lhs = self
            .weighted_sum(y, c, false, |u| u * self.phi.derivative(u))
            .value()
            .abs();
        let rhs = canonical_smoothness_constant() * self.s_star(y)?;
        Ok((lhs, rhs))
    }

    /// Compare the cached b(m, 1), b(m, ℓ) against fresh factorization.
    pub fn spot_check(&self, table: &CoefficientTable, samples: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        let m_max = self.b1.len() - 1;
        let step = (m_max / samples.max(1)).max(1);
        for ell in self.ells.iter().take(samples.max(1)) {
            let lf = FactoredInteger::new(ell.l);
            for m in (1..=m_max).step_by(step).chain([ell.l as usize].into_iter().filter(|&v| v <= m_max)) {
                let fresh = table.b_weight(&FactoredInteger::new(m as u64), &lf);
                worst = worst.max((fresh - self.b(m, ell)).abs());
            }
        }
        Ok(worst)
    }
}

/// (2/(log x)²) Σ_{p ∈ 𝒫⁺} (ε_p/p) Σ_ℓ w(ℓ) Σ_m b(m,ℓ)/m φ(ℓpm²/x),
/// evaluated directly with fresh b weights.
pub fn sigma1(table: &CoefficientTable, kernel: &PartialSumKernel) -> f64 {
    let x = table.params().x;
    let lx = x.ln();
    let phi = kernel.test_function();
    let cut = phi.support() * x;
    let mut outer = NeumaierSum::new();
    for (&p, &e) in table.pplus().iter().zip(table.epsilon()) {
        let mut inner = NeumaierSum::new();
        for (l, w) in kernel.ell_weights() {
            if (l * p) as f64 > cut {
                break;
            }
            let lf = FactoredInteger::new(l);
            let mut m = 1u64;
            while ((l * p) as f64) * ((m * m) as f64) <= cut {
                let v = phi.value((l * p * m * m) as f64 / x);
                if v != 0.0 {
                    inner.add(w * table.b_weight(&FactoredInteger::new(m), &lf) / m as f64 * v);
                }
                m += 1;
            }
        }
        outer.add(e as f64 / p as f64 * inner.value());
    }
    2.0 / (lx * lx) * outer.value()
}

/// Σ₁ rewritten through the sign rule: -(2/(log x)²) Σ |S(x/p)|/p.
pub fn sigma1_from_signs(table: &CoefficientTable, signs: &SignState) -> f64 {
    let lx = table.params().x.ln();
    let mut acc = NeumaierSum::new();
    for (&p, (&s, &e)) in signs.primes.iter().zip(signs.s_values.iter().zip(&signs.epsilon)) {
        acc.add(e as f64 * s / p as f64);
    }
    2.0 / (lx * lx) * acc.value()
}

/// The Σ₂ display: Σ_ℓ w(ℓ) Σ_m b(m,ℓ)/m φ(ℓm²/x) with fresh b weights.
pub fn sigma2(table: &CoefficientTable, kernel: &PartialSumKernel) -> f64 {
    let x = table.params().x;
    let phi = kernel.test_function();
    let cut = phi.support() * x;
    let mut acc = NeumaierSum::new();
    for (l, w) in kernel.ell_weights() {
        if l as f64 > cut {
            break;
        }
        let lf = FactoredInteger::new(l);
        let mut m = 1u64;
        while (l * m * m) as f64 <= cut {
            let v = phi.value((l * m * m) as f64 / x);
            if v != 0.0 {
                acc.add(w * table.b_weight(&FactoredInteger::new(m), &lf) / m as f64 * v);
            }
            m += 1;
        }
    }
    acc.value()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityResult {
    pub n: u64,
    #[serde(rename = "D")]
    pub d: f64,
    pub exact_count: f64,
    pub main_term: f64,
    pub error: f64,
    pub relative_error: f64,
}

/// Σ_{D/2 < d <= D} μ²(2d) χ_{8d}(n) against (3/π²) D ∏_{p | 2n} p/(p+1).
pub fn orthogonality_check(n: u64, d_scale: f64) -> Result<OrthogonalityResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let hi = d_scale.floor() as u64;
    let lo = (d_scale / 2.0).floor() as u64 + 1;
    let sieve = SquarefreeSieve::new(hi.max(1));
    let flags = sieve.flags(lo, hi);
    let mut count = 0i64;
    for (i, &sf) in flags.iter().enumerate() {
        let d = lo + i as u64;
        if sf && d % 2 == 1 {
            count += crate::arith::chi8d_unchecked(d, n) as i64;
        }
    }
    let f = FactoredInteger::new(2 * n);
    let prod: f64 = f.primes().map(|p| p as f64 / (p as f64 + 1.0)).product();
    let main = 3.0 / (std::f64::consts::PI * std::f64::consts::PI) * d_scale * prod;
    let exact = count as f64;
    Ok(OrthogonalityResult {
        n,
        d: d_scale,
        exact_count: exact,
        main_term: main,
        error: exact - main,
        relative_error: (exact - main).abs() / main,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub y: f64,
    pub s: f64,
    pub s_star: f64,
    pub s_tilde: f64,
    pub s_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicWindow {
    pub a: f64,
    pub integral: f64,
    pub u_cap: f64,
}

/// U = exp(√(log x) (log log x)²).
pub fn dyadic_cap(x: f64) -> f64 {
    let lx = x.ln();
    (lx.sqrt() * lx.ln().powi(2)).exp()
}

/// S, S*, S̃ and S(y) - S(2y) on a logarithmic grid.
pub fn scan_s(kernel: &PartialSumKernel, y_lo: f64, y_hi: f64, npoints: usize) -> Result<Vec<ScanRow>> {
    if !(y_lo > 0.0 && y_hi >= y_lo && npoints >= 1) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < y_lo <= y_hi and npoints >= 1, got [{y_lo}, {y_hi}] with {npoints}"
        )));
    }
    let (a, b) = (y_lo.ln(), y_hi.ln());
    (0..npoints)
        .map(|i| {
            let t = if npoints == 1 { 0.0 } else { i as f64 / (npoints - 1) as f64 };
            let y = (a + (b - a) * t).exp();
            Ok(ScanRow {
                y,
                s: kernel.s_of_y(y)?,
                s_star: kernel.s_star(y)?,
                s_tilde: kernel.s_tilde(y)?,
                s_diff: kernel.s_tilde_identity(y)?,
            })
        })
        .collect()
}

/// The grid point A in [2, U] maximizing ∫_{A/2}^{A} |S̃| dy/y, by the
/// trapezoid rule in log y over grid points.
pub fn best_dyadic_window(rows: &[ScanRow], x: f64) -> Option<DyadicWindow> {
    let u_cap = dyadic_cap(x);
    let mut best: Option<DyadicWindow> = None;
    for (j, row) in rows.iter().enumerate() {
        let a = row.y;
        if a < 2.0 || a > u_cap || rows[0].y > a / 2.0 * (1.0 + 1e-12) {
            continue;
        }
        let window: Vec<&ScanRow> = rows[..=j].iter().filter(|r| r.y >= a / 2.0 * (1.0 - 1e-12)).collect();
        if window.len() < 2 {
            continue;
        }
        let integral: f64 = window
            .windows(2)
            .map(|w| 0.5 * (w[0].s_tilde.abs() + w[1].s_tilde.abs()) * (w[1].y / w[0].y).ln())
            .sum();
        if best.as_ref().map_or(true, |b| integral > b.integral) {
            best = Some(DyadicWindow { a, integral, u_cap });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::{build_params, Mode, Overrides};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_params(l: f64, x: f64, b: f64, d: f64) -> crate::resonator::ResonatorParams {
        build_params(
            1.0 / 9.0,
            d,
            Mode::Explicit,
            &Overrides {
                l: Some(l),
                x: Some(x),
                b: Some(b),
                ..Default::default()
            },
        )
        .unwrap()
    }

    /// Everything evaluated from scratch: b by trial division, r̃ and d(ℓ)
    /// from factorizations.
    fn s_oracle(table: &CoefficientTable, y: f64, g: impl Fn(f64) -> f64, cut: f64) -> f64 {
        let mut acc = 0.0;
        for l in 1..=(cut * y) as u64 {
            let lf = FactoredInteger::new(l);
            if !lf.is_squarefree() || lf.primes().any(|p| !table.is_minus(p)) {
                continue;
            }
            let rt: f64 = lf.primes().map(|p| table.r_tilde(p)).product();
            let w = rt * crate::arith::divisor_count(&lf) as f64 / (l as f64).sqrt();
            let mut m = 1u64;
            while (l * m * m) as f64 <= cut * y {
                acc += w * table.b_weight(&FactoredInteger::new(m), &lf) / m as f64 * g((l * m * m) as f64 / y);
                m += 1;
            }
        }
        acc
    }

    #[test]
    fn truncated_sum_examples() {
        assert_eq!(truncated_sum(1, 1.0, &ExpGlueBump).unwrap(), 1.0);
        assert!(truncated_sum(4, 1.0, &ExpGlueBump).is_err());
        assert!(truncated_sum(2, 1.0, &ExpGlueBump).is_err());
        // x < 1: only n = 1 survives, weighted by φ(1/x)
        let v = truncated_sum(3, 0.8, &ExpGlueBump).unwrap();
        assert_eq!(v, crate::smoothing::phi(1.25));
        struct Zero;
        impl TestFunction for Zero {
            fn value(&self, _: f64) -> f64 {
                0.0
            }
            fn derivative(&self, _: f64) -> f64 {
                0.0
            }
            fn derivatives(&self, _: f64, o: usize) -> Vec<f64> {
                vec![0.0; o + 1]
            }
            fn plateau(&self) -> f64 {
                1.0
            }
            fn support(&self) -> f64 {
                2.0
            }
        }
        assert_eq!(truncated_sum(5, 30.0, &Zero).unwrap(), 0.0);
    }

    #[test]
    fn big_r_examples() {
        let p = small_params(2.0, 200.0, 200.0, 1e6);
        let t = CoefficientTable::new(&p).unwrap();
        for &d in &[1u64, 3, 5, 7, 11, 101] {
            let mut direct = 0.0;
            for (n, r) in t.support().iter() {
                direct += r * kronecker(8 * d as i64, n as i64) as f64;
            }
            let rev: f64 = t
                .support()
                .iter()
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .map(|(n, r)| r * kronecker(8 * d as i64, n as i64) as f64)
                .sum();
            let v = big_r(d, &t).unwrap();
            assert!((v - direct).abs() < 1e-12 && (v - rev).abs() < 1e-12);
        }
        let tiny = small_params(1.45, 60.0, 56.0, 1e6);
        let mut tiny = tiny;
        tiny.z = 1.0;
        let t1 = CoefficientTable::new(&tiny).unwrap();
        assert_eq!(t1.support().len(), 1);
        assert_eq!(big_r(3, &t1).unwrap(), 1.0);
        // support {1, p} with χ(p) = -1: d = 1, p = 3 gives (8|3) = -1
        let mut two = small_params(1.45, 60.0, 56.0, 1e6);
        two.z = 7.0;
        let t2 = CoefficientTable::new(&two).unwrap();
        assert_eq!(t2.support().n, vec![1, 7]);
        assert_eq!(kronecker(8 * 3, 7), -1);
        assert!((big_r(3, &t2).unwrap() - (1.0 - t2.r_at(7))).abs() < 1e-15);
    }

    #[test]
    fn denominator_asymptotic_examples() {
        let mut p = small_params(2.0, 200.0, 200.0, 1e6);
        p.pminus_lo = 1e6;
        p.pminus_hi = 1e6 + 1.0;
        let t = CoefficientTable::new(&p).unwrap();
        assert!(t.pminus().is_empty());
        let base = 2.0 / std::f64::consts::PI.powi(2) * 1e6;
        assert!((denominator_asymptotic(&t) - base).abs() < 1e-6);
    }

    #[test]
    fn s_examples() {
        let p = small_params(1.45, 60.0, 56.0, 1e6);
        let t = CoefficientTable::new(&p).unwrap();
        let k = PartialSumKernel::new(&t, 200.0).unwrap();
        assert_eq!(k.s_of_y(0.5).unwrap(), 0.0);
        assert_eq!(k.s_of_y(1.0).unwrap(), 1.0);
        assert!((k.s_star(0.5).unwrap() - 1.0).abs() < 1e-15);
        for &y in &[0.7, 1.9, 3.0, 7.3, 18.0, 55.5, 120.0] {
            let oracle = s_oracle(&t, y, crate::smoothing::phi, 2.0);
            let s = k.s_of_y(y).unwrap();
            assert!((s - oracle).abs() < 1e-12, "y={y}: {s} vs {oracle}");
            assert!(k.s_star(y).unwrap() >= s.abs());
            let st = k.s_tilde(y).unwrap();
            assert!((st - k.s_tilde_identity(y).unwrap()).abs() <= 1e-10);
            assert!(st.abs() <= s.abs() + k.s_of_y(2.0 * y).unwrap().abs() + 1e-15);
        }
        assert!((k.s_tilde(3.0).unwrap() - (k.s_of_y(3.0).unwrap() - k.s_of_y(6.0).unwrap())).abs() <= 1e-10);
        let mut prev = 0.0;
        for i in 0..200 {
            let v = k.s_star(0.5 + i as f64 * 0.5).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!(k.s_of_y(1e4).is_err());
        assert!(k.spot_check(&t, 8).unwrap() < 1e-15);
    }

    #[test]
    fn empty_band_kernel() {
        let k = PartialSumKernel::from_minus_band(&[], 50.0, Arc::new(ExpGlueBump)).unwrap();
        let y = 40.0;
        let mut direct = 0.0;
        let mut m = 1u64;
        while (m * m) as f64 <= 2.0 * y {
            let b: f64 = FactoredInteger::new(m)
                .primes()
                .filter(|&p| p != 2)
                .map(|p| p as f64 / (p as f64 + 1.0))
                .product();
            direct += b / m as f64 * crate::smoothing::phi((m * m) as f64 / y);
            m += 1;
        }
        assert!((k.s_of_y(y).unwrap() - direct).abs() < 1e-14);
        assert_eq!(k.s_tilde(0.2).unwrap(), 0.0);
    }

    #[test]
    fn sigma_identities() {
        let p = small_params(1.45, 60.0, 56.0, 1e6);
        let t = CoefficientTable::new(&p).unwrap();
        let k = PartialSumKernel::new(&t, p.x).unwrap();
        let signs = crate::resonator::assign_signs(&t, |y| k.s_of_y(y)).unwrap();
        let t = t.with_signs(&signs).unwrap();
        let s1 = sigma1(&t, &k);
        let s1_alt = sigma1_from_signs(&t, &signs);
        assert!(s1 <= 0.0);
        assert!((s1 - s1_alt).abs() <= 1e-12 * s1.abs().max(1e-300));
        let lx = p.x.ln();
        let abs_form: f64 = -2.0 / (lx * lx)
            * signs
                .primes
                .iter()
                .zip(&signs.s_values)
                .map(|(&q, s)| s.abs() / q as f64)
                .sum::<f64>();
        assert!((s1 - abs_form).abs() <= 1e-12 * s1.abs());
        let s2 = sigma2(&t, &k);
        let sx = k.s_of_y(p.x).unwrap();
        assert!((s2 - sx).abs() <= 1e-12 * sx.abs());
    }

    #[test]
    fn derivative_bound_examples() {
        let p = small_params(1.45, 60.0, 56.0, 1e6);
        let t = CoefficientTable::new(&p).unwrap();
        let k = PartialSumKernel::new(&t, 100.0).unwrap();
        // at y = 1 the only active term sits at u = 1 where φ' = 0
        let (lhs, rhs) = k.derivative_bound_check(1.0).unwrap();
        assert_eq!(lhs, 0.0);
        assert!(rhs > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let y = rng.gen_range(0.5..100.0);
            let (lhs, rhs) = k.derivative_bound_check(y).unwrap();
            assert!(lhs <= rhs, "y={y}");
        }
        // single term kernel: y in (1/2, 1) has only ℓ = m = 1 active
        let single = PartialSumKernel::from_minus_band(&[], 0.9, Arc::new(ExpGlueBump)).unwrap();
        let y = 0.7;
        let u = 1.0 / y;
        let (lhs, rhs) = single.derivative_bound_check(y).unwrap();
        assert!((lhs - (u * crate::smoothing::phi_prime(u)).abs()).abs() < 1e-15);
        assert!((single.s_star(y).unwrap() - 1.0).abs() < 1e-15);
        assert!(lhs <= rhs);
    }

    #[test]
    fn orthogonality_small() {
        let r = orthogonality_check(1, 20.0).unwrap();
        assert_eq!(r.exact_count, 5.0);
        let f = 3.0 / std::f64::consts::PI.powi(2) * 20.0 * 2.0 / 3.0;
        assert!((r.main_term - f).abs() < 1e-12);
        let r9 = orthogonality_check(9, 1e4).unwrap();
        let r1 = orthogonality_check(1, 1e4).unwrap();
        assert!((r9.main_term / r1.main_term - 0.75).abs() < 1e-14);
        assert!(r1.relative_error < 0.05 && r9.relative_error < 0.05);
    }

    #[test]
    fn dyadic_window_respects_cap() {
        let p = small_params(1.45, 60.0, 56.0, 1e6);
        let t = CoefficientTable::new(&p).unwrap();
        let u = dyadic_cap(p.x);
        let k = PartialSumKernel::new(&t, 2.0 * u).unwrap();
        let rows = scan_s(&k, 1.0, 2.0 * u, 120).unwrap();
        for r in &rows {
            assert!((r.s_tilde - r.s_diff).abs() < 1e-10);
        }
        let w = best_dyadic_window(&rows, p.x).unwrap();
        assert!(w.a >= 2.0 && w.a <= u);
        assert!(w.integral > 0.0);
    }
}
