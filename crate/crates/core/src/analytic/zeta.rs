//! Riemann and Hurwitz zeta by Euler–Maclaurin summation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::Certified;

/// B_2, B_4, …, B_30.
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

pub const DEFAULT_TERMS: usize = 50;
pub const DEFAULT_CORRECTIONS: usize = 10;

/// ζ(s, α) = Σ_{k>=0} (k+α)^{-s} with N direct terms and K Bernoulli
/// corrections. The error bound is |s+2K+1|/(σ+2K+1) times the first
/// omitted correction, valid for σ > -2K-1.
pub fn hurwitz_em(s: Complex64, alpha: f64, n: usize, k: usize) -> Certified<Complex64> {
    assert!(alpha > 0.0 && k >= 1 && k < BERNOULLI_EVEN.len());
    assert!(s.re > -((2 * k) as f64) - 1.0, "Euler–Maclaurin remainder needs Re(s) > -2K-1");
    let mut acc = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    let mut add = |v: Complex64| {
        let y = v - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    };
    for j in 0..n {
        add(pow_real(j as f64 + alpha, -s));
    }
    let a = n as f64 + alpha;
    let a_pow = pow_real(a, -s);
    add(a_pow * a / (s - 1.0));
    add(a_pow * 0.5);
    // rising factorial s(s+1)…(s+2j-2) / (2j)! times a^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut a_term = a_pow / a;
    let mut last = Complex64::new(0.0, 0.0);
    for j in 1..=k + 1 {
        let term = rising / fact * BERNOULLI_EVEN[j - 1] * a_term;
        if j <= k {
            add(term);
        } else {
            last = term;
        }
        let m = 2.0 * j as f64;
        rising *= (s + (m - 1.0)) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        a_term /= a * a;
    }
    let sigma = s.re;
    let factor = (s + (2 * k + 1) as f64).norm() / (sigma + (2 * k + 1) as f64);
    Certified::new(acc, factor * last.norm())
}

fn pow_real(base: f64, exponent: Complex64) -> Complex64 {
    (exponent * base.ln()).exp()
}

/// ζ(s) to absolute `accuracy`, raising N from the default as needed.
pub fn zeta(s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
    if (s - 1.0).norm() == 0.0 {
        return Err(Error::InvalidArgument("ζ has a pole at s = 1".into()));
    }
    if s.re <= -((2 * DEFAULT_CORRECTIONS) as f64) {
        return Err(Error::Accuracy {
            what: format!("ζ({s})"),
            requested: accuracy,
            achieved: f64::INFINITY,
        });
    }
    let mut n = DEFAULT_TERMS.max(s.im.abs().ceil() as usize);
    let mut best = f64::INFINITY;
    for _ in 0..12 {
        let r = hurwitz_em(s, 1.0, n, DEFAULT_CORRECTIONS);
        let err = r.error + 1e-16 * r.value.norm() * (n as f64).sqrt();
        if err <= accuracy {
            return Ok(Certified::new(r.value, err));
        }
        best = best.min(err);
        n *= 2;
    }
    Err(Error::Accuracy {
        what: format!("ζ({s})"),
        requested: accuracy,
        achieved: best,
    })
}

/// ζ(s, α) for real s and α > 0 with a default term budget.
pub fn hurwitz_zeta_real(s: f64, alpha: f64) -> Certified<f64> {
    let r = hurwitz_em(Complex64::new(s, 0.0), alpha, 16, 8);
    Certified::new(r.value.re, r.error)
}
