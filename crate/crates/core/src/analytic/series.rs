//! The Dirichlet series F(s) and its factors ζ(2s+1), G(s), H(s).

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::arith::{primes_up_to, SmallestPrimeFactor};
use crate::error::{Error, Result};
use crate::numerics::Certified;
use crate::resonator::{b_factor, r_tilde_value, CoefficientTable};

use super::zeta::zeta;

/// Upper bound for Σ_{p > P} p^{-a}, a > 1, from π(t) < 1.25506 t / log t.
pub fn prime_tail_bound(a: f64, p: f64) -> f64 {
    assert!(a > 1.0 && p >= 17.0);
    1.25506 * a * p.powf(1.0 - a) / ((a - 1.0) * p.ln())
}

/// Absolute ζ targets below the rounding floor are not attainable.
fn zeta_target(accuracy: f64) -> f64 {
    accuracy.max(1e-13)
}

fn cpow(p: f64, s: Complex64) -> Complex64 {
    (s * p.ln()).exp()
}

#[derive(Clone, Copy, Debug)]
struct MinusPrime {
    p: u64,
    r_tilde: f64,
    /// 1 - b factor = 1/(p + 1 + r² p)
    c: f64,
}

/// Lower-order Dirichlet coefficients for the direct evaluation of F,
/// grouped by which negative-band primes divide k.
#[derive(Debug)]
struct Convolution {
    k_max: usize,
    /// per mask: (log k, e₁(k))
    groups: Vec<Vec<(f64, f64)>>,
}

/// Evaluators for F(s) = Σ_ℓ Σ_m r̃(ℓ)d(ℓ) ℓ^{-1/2-s} b(m,ℓ) m^{-1-2s} and
/// its factorization.
#[derive(Debug)]
pub struct SeriesFactorization {
    minus: Vec<MinusPrime>,
    convolution: OnceLock<Convolution>,
    direct_cutoff: usize,
}

/// Default number of Dirichlet coefficients in the direct evaluation.
pub const DEFAULT_DIRECT_CUTOFF: usize = 2_000_000;
/// Largest negative band handled by the direct evaluation.
pub const MAX_DIRECT_BAND: usize = 16;
/// Prime cutoff of the accelerated residual product in G.
const ACCELERATED_CUTOFF: u64 = 4000;

impl SeriesFactorization {
    pub fn new(table: &CoefficientTable) -> Self {
        let minus: Vec<(u64, f64)> = table.pminus().iter().map(|&p| (p, table.r_at(p))).collect();
        Self::from_minus_band(&minus)
    }

    /// From (p, r₋(p)) pairs of the negative band.
    pub fn from_minus_band(minus: &[(u64, f64)]) -> Self {
        let mut minus: Vec<MinusPrime> = minus
            .iter()
            .map(|&(p, r)| MinusPrime {
                p,
                r_tilde: r_tilde_value(p, r),
                c: 1.0 - b_factor(p, r),
            })
            .collect();
        minus.sort_by_key(|m| m.p);
        Self {
            minus,
            convolution: OnceLock::new(),
            direct_cutoff: DEFAULT_DIRECT_CUTOFF,
        }
    }

    pub fn with_direct_cutoff(mut self, k_max: usize) -> Self {
        self.direct_cutoff = k_max;
        self.convolution = OnceLock::new();
        self
    }

    pub fn band(&self) -> Vec<u64> {
        self.minus.iter().map(|m| m.p).collect()
    }

    fn is_minus(&self, p: u64) -> bool {
        self.minus.binary_search_by_key(&p, |m| m.p).is_ok()
    }

    /// H(s) = ∏_{p ∈ 𝒫⁻} (1 + 2 r̃(p) p^{-1/2-s}).
    pub fn h(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for m in &self.minus {
            let f = 1.0 + 2.0 * m.r_tilde * cpow(m.p as f64, -(s + 0.5));
            if f.norm() < 1e-12 {
                return Err(Error::VanishingFactor { p: m.p });
            }
            acc *= f;
        }
        Ok(acc)
    }

    /// ∏_{p ∈ 𝒫⁻} (1 + 2|r̃(p)| p^{-1/2-σ}), an upper bound for |H| on Re s = σ.
    pub fn h_abs(&self, sigma: f64) -> f64 {
        self.minus
            .iter()
            .map(|m| 1.0 + 2.0 * m.r_tilde.abs() * (m.p as f64).powf(-0.5 - sigma))
            .product()
    }

    /// Euler factor of G at p ∈ 𝒫⁻: 1 - c p^{-w} / (1 + 2 r̃ p^{-1/2-s}).
    fn minus_factor(m: &MinusPrime, s: Complex64) -> Result<Complex64> {
        let p = m.p as f64;
        let den = 1.0 + 2.0 * m.r_tilde * cpow(p, -(s + 0.5));
        if den.norm() < 1e-12 {
            return Err(Error::VanishingFactor { p: m.p });
        }
        Ok(1.0 - m.c * cpow(p, -(2.0 * s + 1.0)) / den)
    }

    /// Generic odd-prime factor 1 - p^{-w}/(p+1).
    fn generic_factor(p: u64, w: Complex64) -> Complex64 {
        let pf = p as f64;
        1.0 - cpow(pf, -w) / (pf + 1.0)
    }

    /// G(s) as the truncated Euler product with a rigorous tail bound.
    pub fn g_plain(&self, s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
        if s.re < -0.24 {
            return Err(Error::InvalidArgument(format!("G product needs Re(s) >= -0.24, got {}", s.re)));
        }
        let w = 2.0 * s + 1.0;
        let a = 2.0 * s.re + 2.0;
        let mut p_max = 10_000.0f64;
        while prime_tail_bound(a, p_max) * 1.1 > 0.25 * accuracy {
            p_max *= 2.0;
            if p_max > 4e8 {
                return Err(Error::Accuracy {
                    what: format!("G({s}) Euler product"),
                    requested: accuracy,
                    achieved: prime_tail_bound(a, p_max),
                });
            }
        }
        let primes = primes_up_to(p_max as u64);
        let mut acc = Complex64::new(1.0, 0.0);
        for &p in primes.iter().skip(1) {
            if let Ok(i) = self.minus.binary_search_by_key(&p, |m| m.p) {
                acc *= Self::minus_factor(&self.minus[i], s)?;
            } else {
                acc *= Self::generic_factor(p, w);
            }
        }
        let tail = 1.1 * prime_tail_bound(a, p_max);
        let rounding = 1e-16 * primes.len() as f64;
        let err = acc.norm() * ((tail.exp() - 1.0) + rounding);
        Ok(Certified::new(acc, err))
    }

    /// G(s) through ζ-accelerated residual products; converges for
    /// Re(s) > -1/2.
    pub fn g(&self, s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
        let w = 2.0 * s + 1.0;
        if w.re <= -0.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!("accelerated G needs Re(s) > -1/2, got {}", s.re)));
        }
        let two = 2.0f64;
        let z1 = zeta(w + 1.0, zeta_target(accuracy * 0.01))?;
        let z2 = zeta(w + 2.0, zeta_target(accuracy * 0.01))?;
        let z4 = zeta(2.0 * w + 4.0, zeta_target(accuracy * 0.01))?;
        let f2a = 1.0 - cpow(two, -(w + 1.0));
        let f2b = 1.0 + cpow(two, -(w + 2.0));
        let mut acc = z2.value / (f2a * z1.value * f2b * z4.value);
        let rel_zeta = z1.error / z1.value.norm() + z2.error / z2.value.norm() + z4.error / z4.value.norm();
        let primes = primes_up_to(ACCELERATED_CUTOFF);
        for &p in primes.iter().skip(1) {
            let pf = p as f64;
            let a = cpow(pf, -(w + 1.0));
            let b = cpow(pf, -(w + 2.0));
            acc *= Self::generic_factor(p, w) / ((1.0 - a) * (1.0 + b));
        }
        for m in &self.minus {
            acc *= Self::minus_factor(m, s)? / Self::generic_factor(m.p, w);
        }
        // residual factor - 1 is bounded by 2 p^{-Re(w)-3} beyond the cutoff
        let tail = 2.2 * prime_tail_bound(w.re + 3.0, ACCELERATED_CUTOFF as f64);
        let err = acc.norm() * ((tail.exp() - 1.0) + 1.01 * rel_zeta + 1e-15);
        Ok(Certified::new(acc, err))
    }

    /// ζ(2s+1) G(s) H(s).
    pub fn f_product(&self, s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
        let z = zeta(2.0 * s + 1.0, zeta_target(accuracy * 0.1))?;
        let g = self.g(s, accuracy * 0.1)?;
        let h = self.h(s)?;
        let v = z.value * g.value * h;
        let err = h.norm() * (z.error * (g.value.norm() + g.error) + z.value.norm() * g.error) + 2e-14 * v.norm();
        Ok(Certified::new(v, err))
    }

    /// ζ(2s+1) G(s) H(s) with G from the plain Euler product.
    pub fn f_product_plain(&self, s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
        let z = zeta(2.0 * s + 1.0, zeta_target(accuracy * 0.1))?;
        let g = self.g_plain(s, accuracy * 0.5)?;
        let h = self.h(s)?;
        let v = z.value * g.value * h;
        let err = h.norm() * (z.error * (g.value.norm() + g.error) + z.value.norm() * g.error) + 2e-14 * v.norm();
        Ok(Certified::new(v, err))
    }

    /// ζ(1+2σ) ∏(1 + 2|r̃(p)| p^{-1/2-σ}), bounding |F| on Re(s) = σ > 0.
    pub fn f_abs(&self, sigma: f64) -> Result<f64> {
        let z = zeta(Complex64::new(1.0 + 2.0 * sigma, 0.0), 1e-10)?;
        Ok((z.value.re + z.error) * self.h_abs(sigma))
    }

    /// a'_p with e₁(p^j) = p^{-j} a'_p.
    fn e1_prime_weight(&self, p: u64) -> f64 {
        if p == 2 {
            return 1.0;
        }
        let pf = p as f64;
        match self.minus.binary_search_by_key(&p, |m| m.p) {
            Ok(i) => 1.0 - pf * self.minus[i].c,
            Err(_) => 1.0 / (pf + 1.0),
        }
    }

    fn convolution(&self) -> Result<&Convolution> {
        if self.minus.len() > MAX_DIRECT_BAND {
            return Err(Error::WorkEstimate {
                what: "direct F evaluation".into(),
                estimate: (1u64 << self.minus.len().min(63)) as f64,
                limit: (1u64 << MAX_DIRECT_BAND) as f64,
                suggestion: format!("use at most {MAX_DIRECT_BAND} primes in the negative band"),
            });
        }
        Ok(self.convolution.get_or_init(|| {
            let k_max = self.direct_cutoff;
            let spf = SmallestPrimeFactor::new(k_max);
            let mut e1 = vec![0.0f64; k_max + 1];
            let mut mask = vec![0u16; k_max + 1];
            e1[1] = 1.0;
            for k in 2..=k_max {
                let p = spf.get(k);
                let mut rest = k / p;
                let mut pj = p as f64;
                while rest % p == 0 {
                    rest /= p;
                    pj *= p as f64;
                }
                e1[k] = e1[rest] * self.e1_prime_weight(p as u64) / pj;
                mask[k] = mask[rest];
                if let Ok(i) = self.minus.binary_search_by_key(&(p as u64), |m| m.p) {
                    mask[k] |= 1 << i;
                }
            }
            let mut groups = vec![Vec::new(); 1 << self.minus.len()];
            for k in 1..=k_max {
                groups[mask[k] as usize].push(((k as f64).ln(), e1[k]));
            }
            Convolution { k_max, groups }
        }))
    }

    /// Rankin bound for Σ_{k > K} |e_ℓ(k)| k^{-σ_w}, uniform in ℓ.
    fn convolution_tail(&self, sigma_w: f64, k_max: usize) -> f64 {
        let kf = k_max as f64;
        let p_cut = 100_000u64;
        let primes = primes_up_to(p_cut);
        let mut best = f64::INFINITY;
        for i in 1..20 {
            let gamma = 0.05 * i as f64;
            let beta = 1.0 + sigma_w - gamma;
            if beta <= 0.0 {
                continue;
            }
            let mut log_prod = 0.0;
            for &p in &primes {
                let a = if p == 2 || self.is_minus(p) { 1.0 } else { self.e1_prime_weight(p) };
                let q = (p as f64).powf(-gamma);
                log_prod += (1.0 + a * q / (1.0 - q)).ln();
            }
            // beyond the cutoff a_p q/(1-q) <= 2 p^{-1-γ}
            log_prod += 2.0 * prime_tail_bound(1.0 + gamma, p_cut as f64);
            best = best.min((log_prod - beta * kf.ln()).exp());
        }
        best
    }

    /// F(s) from ζ(w)/ζ(w+1) Σ_ℓ r̃(ℓ)d(ℓ)ℓ^{-1/2-s} E_ℓ(w), where E_ℓ is the
    /// rapidly convergent quotient series summed to the direct cutoff.
    pub fn f_direct(&self, s: Complex64) -> Result<Certified<Complex64>> {
        if s.re < 0.05 {
            return Err(Error::InvalidArgument(format!("direct F needs Re(s) >= 0.05, got {}", s.re)));
        }
        let conv = self.convolution()?;
        let w = 2.0 * s + 1.0;
        let n = self.minus.len();
        let mut e_mask = vec![Complex64::new(0.0, 0.0); 1 << n];
        let mut abs_total = 0.0;
        for (mask, group) in conv.groups.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(lk, e) in group.iter().rev() {
                let t = (-w * lk).exp() * e;
                abs_total += t.norm();
                acc += t;
            }
            e_mask[mask] = acc;
        }
        let weights: Vec<f64> = self.minus.iter().map(|m| self.e1_prime_weight(m.p)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        let mut ell_abs = 0.0;
        for l_mask in 0..(1usize << n) {
            let mut coef = 1.0;
            let mut log_l = 0.0;
            for (i, m) in self.minus.iter().enumerate() {
                if l_mask >> i & 1 == 1 {
                    coef *= 2.0 * m.r_tilde;
                    log_l += (m.p as f64).ln();
                }
            }
            if coef == 0.0 {
                continue;
            }
            let mut e_l = Complex64::new(0.0, 0.0);
            for (k_mask, &v) in e_mask.iter().enumerate() {
                let mut f = 1.0;
                for (i, &a) in weights.iter().enumerate() {
                    if (k_mask & l_mask) >> i & 1 == 1 {
                        f /= a;
                    }
                }
                e_l += v * f;
            }
            let pref = coef * (-(s + 0.5) * log_l).exp();
            ell_abs += pref.norm();
            total += pref * e_l;
        }
        let zw = zeta(w, 1e-13)?;
        let zw1 = zeta(w + 1.0, 1e-13)?;
        let ratio = zw.value / zw1.value;
        let value = ratio * total;
        let tail = self.convolution_tail(w.re, conv.k_max);
        let rel = zw.error / zw.value.norm() + zw1.error / zw1.value.norm();
        let err = ratio.norm() * (ell_abs * tail + 1e-15 * abs_total * ell_abs.max(1.0)) + value.norm() * (1.01 * rel + 2e-14);
        Ok(Certified::new(value, err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_prime() -> SeriesFactorization {
        let l: f64 = 1.45;
        let band: Vec<(u64, f64)> = [7u64, 11, 13]
            .iter()
            .map(|&p| (p, crate::resonator::r_minus_value(p, l)))
            .collect();
        SeriesFactorization::from_minus_band(&band).with_direct_cutoff(400_000)
    }

    #[test]
    fn h_examples() {
        let empty = SeriesFactorization::from_minus_band(&[]);
        assert_eq!(empty.h(Complex64::new(0.3, 1.0)).unwrap(), Complex64::new(1.0, 0.0));
        let f = three_prime();
        let far = f.h(Complex64::new(60.0, 0.0)).unwrap();
        assert!((far - 1.0).norm() < 1e-40);
        // a factor 1 + 2r̃ 3^{-1/2-s} vanishes at s = 0 when r̃ = -√3/2
        let m = MinusPrime {
            p: 3,
            r_tilde: -(3f64).sqrt() / 2.0,
            c: 0.1,
        };
        let v = SeriesFactorization {
            minus: vec![m],
            convolution: OnceLock::new(),
            direct_cutoff: 10,
        };
        assert!(matches!(v.h(Complex64::new(0.0, 0.0)), Err(Error::VanishingFactor { p: 3 })));
    }

    #[test]
    fn g_at_one_without_band() {
        let empty = SeriesFactorization::from_minus_band(&[]);
        let g = empty.g_plain(Complex64::new(1.0, 0.0), 1e-10).unwrap();
        let mut oracle = 1.0;
        for p in primes_up_to(2_000_000).into_iter().skip(1) {
            let pf = p as f64;
            oracle *= 1.0 - 1.0 / ((pf + 1.0) * pf.powi(3));
        }
        assert!((g.value.re - oracle).abs() < 1e-12);
        assert!((g.value.re - 0.988_939_056_149_95).abs() < 1e-12);
        let acc = empty.g(Complex64::new(1.0, 0.0), 1e-12).unwrap();
        assert!((acc.value - g.value).norm() < 1e-11);
    }

    #[test]
    fn accelerated_matches_plain() {
        let f = three_prime();
        for &(re, im) in &[(0.05, 0.0), (0.1, 3.0), (0.5, -7.0), (-0.2, 2.0)] {
            let s = Complex64::new(re, im);
            let a = f.g(s, 1e-10).unwrap();
            let b = f.g_plain(s, if re < 0.0 { 1e-5 } else { 1e-8 }).unwrap();
            assert!((a.value - b.value).norm() <= a.error + b.error, "s={s}");
        }
        assert!((f.g(Complex64::new(40.0, 1.0), 1e-12).unwrap().value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn direct_matches_product() {
        let f = three_prime();
        for &(re, im) in &[(0.3, 0.2), (0.05, 1.0), (1.0, -4.0)] {
            let s = Complex64::new(re, im);
            let a = f.f_direct(s).unwrap();
            let b = f.f_product(s, 1e-10).unwrap();
            assert!((a.value - b.value).norm() <= a.error + b.error, "s={s}: {} vs {}", a.value, b.value);
            assert!(a.error < 1e-6);
        }
        let s = Complex64::new(0.4, 2.5);
        let a = f.f_direct(s).unwrap().value;
        let b = f.f_direct(s.conj()).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn empty_band_direct_is_b_series() {
        let empty = SeriesFactorization::from_minus_band(&[]).with_direct_cutoff(200_000);
        let s = Complex64::new(1.0, 0.0);
        // Σ_m b(m,1) m^{-3} directly
        let spf = SmallestPrimeFactor::new(200_000);
        let mut direct = 0.0;
        for m in (1..=200_000usize).rev() {
            let mut b = 1.0;
            let mut k = m;
            while k > 1 {
                let p = spf.get(k);
                while k % p == 0 {
                    k /= p;
                }
                if p != 2 {
                    b *= p as f64 / (p as f64 + 1.0);
                }
            }
            direct += b / (m as f64).powi(3);
        }
        let v = empty.f_direct(s).unwrap();
        assert!((v.value.re - direct).abs() < 1e-10);
    }

    #[test]
    fn tail_bound_dominates() {
        let primes = primes_up_to(2_000_000);
        let exact: f64 = primes.iter().filter(|&&p| p > 1000).map(|&p| (p as f64).powf(-2.1)).sum();
        assert!(exact <= prime_tail_bound(2.1, 1000.0));
    }
}
