//! Smooth cutoffs φ, ψ, ψ_σ, the central-value weight V and the Mellin
//! transform of φ.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{integrate, Certified, CompositeRule, QuadConfig};

/// A cutoff with φ ≡ 1 on [0, plateau] and φ ≡ 0 on [support, ∞).
pub trait TestFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// `[φ(x), φ'(x), …, φ^(order)(x)]`.
    fn derivatives(&self, x: f64, order: usize) -> Vec<f64>;
    fn plateau(&self) -> f64;
    fn support(&self) -> f64;
}

/// Truncated Taylor series in one variable.
#[derive(Clone, Debug)]
struct Jet(Vec<f64>);

impl Jet {
    fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    fn affine(&self, scale: f64, shift: f64) -> Self {
        let mut c: Vec<f64> = self.0.iter().map(|v| v * scale).collect();
        c[0] += shift;
        Jet(c)
    }

    fn add(&self, other: &Jet) -> Self {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn mul(&self, other: &Jet) -> Self {
        let n = self.0.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.0[i] * other.0[j];
            }
        }
        Jet(c)
    }

    fn recip(&self) -> Self {
        let a = &self.0;
        let n = a.len();
        let mut b = vec![0.0; n];
        b[0] = 1.0 / a[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Jet(b)
    }

    fn exp(&self) -> Self {
        let a = &self.0;
        let n = a.len();
        let mut e = vec![0.0; n];
        e[0] = a[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    /// Convert Taylor coefficients to derivatives.
    fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }
}

// Beyond this glue exponent the transition is flat to below 1e-300.
const GLUE_CUTOFF: f64 = 700.0;

/// The exp-glue bump: 1 on [0, 1], f(2-x)/(f(2-x)+f(x-1)) with
/// f(t) = exp(-1/t) on (1, 2), 0 on [2, ∞).
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpGlueBump;

impl ExpGlueBump {
    /// g(x) = 1/(2-x) - 1/(x-1), so that φ = 1/(1 + e^g) on (1, 2).
    fn glue_exponent(x: f64) -> f64 {
        1.0 / (2.0 - x) - 1.0 / (x - 1.0)
    }
}

impl TestFunction for ExpGlueBump {
    fn value(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 1.0;
        }
        if x >= 2.0 {
            return 0.0;
        }
        let g = Self::glue_exponent(x);
        if g <= 0.0 {
            1.0 / (1.0 + g.exp())
        } else {
            let e = (-g).exp();
            e / (1.0 + e)
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        if x <= 1.0 || x >= 2.0 {
            return 0.0;
        }
        let g = Self::glue_exponent(x);
        if g.abs() > GLUE_CUTOFF {
            return 0.0;
        }
        let dg = 1.0 / ((2.0 - x) * (2.0 - x)) + 1.0 / ((x - 1.0) * (x - 1.0));
        let e = (-g.abs()).exp();
        // φ(1-φ) = e/(1+e)^2 for either sign of g
        -dg * e / ((1.0 + e) * (1.0 + e))
    }

    fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        out[0] = self.value(x);
        if x <= 1.0 || x >= 2.0 {
            return out;
        }
        let g0 = Self::glue_exponent(x);
        if g0.abs() > GLUE_CUTOFF {
            return out;
        }
        let t = Jet::variable(x, order);
        let inv_right = t.affine(-1.0, 2.0).recip();
        let inv_left = t.affine(1.0, -1.0).recip();
        let g = inv_right.add(&inv_left.affine(-1.0, 0.0));
        let jet = if g0 <= 0.0 {
            g.exp().affine(1.0, 1.0).recip()
        } else {
            let e = g.affine(-1.0, 0.0).exp();
            e.mul(&e.affine(1.0, 1.0).recip())
        };
        jet.derivatives()
    }

    fn plateau(&self) -> f64 {
        1.0
    }

    fn support(&self) -> f64 {
        2.0
    }
}

/// The canonical cutoff.
pub fn phi(x: f64) -> f64 {
    ExpGlueBump.value(x)
}

pub fn phi_prime(x: f64) -> f64 {
    ExpGlueBump.derivative(x)
}

/// ψ(x) = φ(x) - φ(x/2), supported on [1, 4].
pub fn psi(x: f64) -> f64 {
    psi_with(&ExpGlueBump, x)
}

pub fn psi_with(f: &dyn TestFunction, x: f64) -> f64 {
    f.value(x) - f.value(x / 2.0)
}

/// ψ_σ(x) = x^σ ψ(x).
pub fn psi_sigma(x: f64, sigma: f64) -> f64 {
    assert!(x > 0.0, "psi_sigma needs x > 0");
    let p = psi(x);
    if p == 0.0 {
        0.0
    } else {
        x.powf(sigma) * p
    }
}

/// C_φ = max over the transition of |u φ'(u)|.
pub fn smoothness_constant(f: &dyn TestFunction) -> f64 {
    let (a, b) = (f.plateau(), f.support());
    let h = |u: f64| (u * f.derivative(u)).abs();
    let n = 4000;
    let step = (b - a) / n as f64;
    let mut best = (a, 0.0);
    for i in 1..n {
        let u = a + step * i as f64;
        let v = h(u);
        if v > best.1 {
            best = (u, v);
        }
    }
    // golden-section refinement around the grid maximum
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if h(m1) < h(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.1.max(h(0.5 * (lo + hi))) * (1.0 + 1e-12)
}

/// C_φ for the canonical bump, computed once.
pub fn canonical_smoothness_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| smoothness_constant(&ExpGlueBump))
}

/// (u^s - 1)/s, continuous at s = 0.
fn expm1_over_s(s: Complex64, log_u: f64) -> Complex64 {
    let z = s * log_u;
    if z.norm() < 0.1 {
        // log u · Σ z^k/(k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for k in 1..14 {
            term = term * z / (k as f64 + 1.0);
            acc += term;
        }
        acc * log_u
    } else {
        (z.exp() - 1.0) / s
    }
}

/// φ̃(s) - 1/s, an entire function.
pub fn mellin_phi_regular(f: &dyn TestFunction, s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
    let (a, b) = (f.plateau(), f.support());
    let panels = 4 + (s.im.abs() * (b / a).ln() / 2.0).ceil() as usize;
    let r = integrate(
        |u: f64| -expm1_over_s(s, u.ln()) * f.derivative(u),
        a,
        b,
        QuadConfig::new(accuracy).panels(panels),
    )
    .map_err(|_| Error::Accuracy {
        what: format!("Mellin transform at s = {s}"),
        requested: accuracy,
        achieved: f64::NAN,
    })?;
    Ok(r)
}

/// φ̃(s) = ∫₀^∞ φ(u) u^{s-1} du, continued to s ≠ 0 through
/// φ̃(s) = 1/s - (1/s)∫ φ'(u)(u^s - 1) du.
pub fn mellin_phi(s: Complex64, accuracy: f64) -> Result<Certified<Complex64>> {
    if s.re <= -10.0 {
        return Err(Error::InvalidArgument(format!("Mellin transform requested at Re(s) = {} <= -10", s.re)));
    }
    if s.norm() == 0.0 {
        return Err(Error::InvalidArgument("φ̃ has a pole at s = 0".into()));
    }
    let reg = mellin_phi_regular(&ExpGlueBump, s, accuracy)?;
    Ok(Certified::new(s.inv() + reg.value, reg.error))
}

/// Fixed-rule evaluator of φ̃ for repeated use along a contour with
/// |Im s| <= `t_max`. The rule is checked against the adaptive integrator
/// on construction.
#[derive(Clone, Debug)]
pub struct MellinTable {
    log_u: Vec<f64>,
    weight: Vec<f64>,
    t_max: f64,
    accuracy: f64,
}

impl MellinTable {
    pub fn new(t_max: f64, accuracy: f64) -> Result<Self> {
        let f = ExpGlueBump;
        let panels = 8 + (t_max * std::f64::consts::LN_2 / 3.0).ceil() as usize;
        let rule = CompositeRule::new(1.0, 2.0, panels, 20);
        let log_u = rule.nodes.iter().map(|u| u.ln()).collect();
        let weight = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&u, &w)| w * f.derivative(u))
            .collect();
        let table = Self { log_u, weight, t_max, accuracy };
        for &(re, im) in &[(0.2, 0.0), (0.2, t_max), (-0.15, 0.5 * t_max), (0.05, 1.0)] {
            let s = Complex64::new(re, im);
            let reference = mellin_phi_regular(&f, s, accuracy * 0.1)?;
            let gap = (table.regular(s) - reference.value).norm();
            if gap > accuracy {
                return Err(Error::Accuracy {
                    what: "fixed Mellin rule".into(),
                    requested: accuracy,
                    achieved: gap,
                });
            }
        }
        Ok(table)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// φ̃(s) - 1/s.
    pub fn regular(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&lu, &w) in self.log_u.iter().zip(&self.weight) {
            acc -= expm1_over_s(s, lu) * w;
        }
        acc
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        s.inv() + self.regular(s)
    }
}

/// ∫ |φ^(k)(u)| u^{σ+k-1} du over the transition region. With it,
/// |φ̃(s)| <= M_k(σ) / |s (s+1) … (s+k-1)| for Re(s) = σ.
pub fn decay_moment(f: &dyn TestFunction, k: usize, sigma: f64) -> f64 {
    assert!(k >= 1, "decay moment needs k >= 1");
    let (a, b) = (f.plateau(), f.support());
    let eval = |panels: usize| {
        CompositeRule::new(a, b, panels, 8)
            .integrate(|u: f64| f.derivatives(u, k)[k].abs() * u.powf(sigma + k as f64 - 1.0))
    };
    let coarse = eval(200);
    let fine = eval(800);
    fine.max(coarse) * (1.0 + 1e-3)
}

/// Decay bound for |φ̃(σ+it)| from the k-th moment.
pub fn mellin_decay_bound(moment: f64, k: usize, s: Complex64) -> f64 {
    let mut denom = 1.0;
    for j in 0..k {
        denom *= (s + j as f64).norm();
    }
    moment / denom
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 2.0 {
        // series for the lower function
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        1.0 - sum * log_prefactor.exp()
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        log_prefactor.exp() * h
    }
}

/// Central-value weight V(x) = Γ(1/4, x²)/Γ(1/4).
///
/// The branch point follows the argument x = 1.5 (x² = 2.25 = a + 2).
pub fn afe_weight_v(x: f64) -> f64 {
    assert!(x >= 0.0, "V is defined on x >= 0");
    gamma_q(0.25, x * x)
}

/// Upper bound for V(x): Γ(a, X) <= X^{a-1} e^{-X} for a < 1.
pub fn afe_weight_bound(x: f64) -> f64 {
    let big_x = x * x;
    (-big_x + (0.25 - 1.0) * big_x.ln() - ln_gamma(0.25)).exp()
}
