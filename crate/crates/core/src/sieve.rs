//! Large-sieve inequality for short Dirichlet polynomials against smoothed
//! dyadic sums, with an explicit constant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CompositeRule;
use crate::smoothing::{psi_with, ExpGlueBump, TestFunction};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirichletPolynomial {
    terms: Vec<(u64, Complex64)>,
}

impl DirichletPolynomial {
    pub fn new(mut terms: Vec<(u64, Complex64)>) -> Result<Self> {
        terms.sort_by_key(|t| t.0);
        if terms.iter().any(|t| t.0 == 0) {
            return Err(Error::InvalidArgument("Dirichlet polynomial indices must be positive".into()));
        }
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("repeated index in Dirichlet polynomial".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// P(t) = Σ a_n n^{-it}
    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(n, a)| a * Complex64::from_polar(1.0, -t * (n as f64).ln()))
            .sum()
    }

    /// Replaces every n by kn.
    pub fn dilate(&self, k: u64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(n, a)| (n * k, a)).collect(),
        }
    }
}

/// ∫_{-α}^{α} |P(t)|² dt as Σ a_m ā_n 2 sin(α log(m/n))/log(m/n).
pub fn lhs_closed_form(p: &DirichletPolynomial, alpha: f64) -> f64 {
    let mut acc = 0.0;
    for &(m, am) in p.terms() {
        for &(n, an) in p.terms() {
            let k = if m == n {
                2.0 * alpha
            } else {
                let lam = (m as f64 / n as f64).ln();
                2.0 * (alpha * lam).sin() / lam
            };
            acc += (am * an.conj()).re * k;
        }
    }
    acc.max(0.0)
}

/// ∫_{-α}^{α} |P(t)|² dt by Gauss–Legendre quadrature.
pub fn lhs_integral(p: &DirichletPolynomial, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::ParamOutOfRange {
            field: "alpha".into(),
            message: "must be positive".into(),
        });
    }
    let span = p
        .terms()
        .first()
        .zip(p.terms().last())
        .map(|(a, b)| (b.0 as f64 / a.0 as f64).ln())
        .unwrap_or(0.0);
    let panels = 4 + (alpha * span).ceil() as usize;
    Ok(CompositeRule::new(-alpha, alpha, panels, 24).integrate(|t| p.eval(t).norm_sqr()))
}

/// f_σ(u) = ψ_σ(e^{-u}) = e^{-σu} ψ(e^{-u}).
pub fn f_sigma(f: &dyn TestFunction, u: f64, sigma: f64) -> f64 {
    (-sigma * u).exp() * psi_with(f, (-u).exp())
}

/// Support [u_lo, u_hi] of f_σ.
fn f_support(f: &dyn TestFunction) -> (f64, f64) {
    (-(2.0 * f.support()).ln(), -f.plateau().ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified64 {
    pub value: f64,
    pub error: f64,
}

/// ∫ |Σ a_n ψ_σ(n/y)|² dy/y over the full support of the integrand.
pub fn rhs_integral(p: &DirichletPolynomial, sigma: f64, f: &dyn TestFunction) -> Result<Certified64> {
    if !(sigma.abs() < 0.5) {
        return Err(Error::ParamOutOfRange {
            field: "sigma".into(),
            message: format!("|sigma| must be below 1/2, got {sigma}"),
        });
    }
    if p.is_empty() {
        return Ok(Certified64 { value: 0.0, error: 0.0 });
    }
    let (u_lo, u_hi) = f_support(f);
    let logs: Vec<(f64, Complex64)> = p.terms().iter().map(|&(n, a)| ((n as f64).ln(), a)).collect();
    // y = e^v, the n-th term lives on v - log n ∈ [u_lo, u_hi]
    let v_lo = logs[0].0 + u_lo;
    let v_hi = logs[logs.len() - 1].0 + u_hi;
    let integrand = |v: f64| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let start = logs.partition_point(|t| v - t.0 > u_hi);
        for &(ln, a) in &logs[start..] {
            let u = v - ln;
            if u < u_lo {
                break;
            }
            acc += a * f_sigma(f, u, sigma);
        }
        acc.norm_sqr()
    };
    let panels = ((v_hi - v_lo) / 0.05).ceil() as usize;
    let fine = CompositeRule::new(v_lo, v_hi, panels, 20).integrate(integrand);
    let coarse = CompositeRule::new(v_lo, v_hi, panels, 12).integrate(integrand);
    Ok(Certified64 {
        value: fine,
        error: (fine - coarse).abs() + 1e-14 * fine,
    })
}

/// f̂_σ(ξ) = ∫ f_σ(u) e^{-2πiuξ} du.
pub fn f_hat(f: &dyn TestFunction, sigma: f64, xi: f64) -> Complex64 {
    let (a, b) = f_support(f);
    let panels = 64 + (8.0 * xi.abs() * (b - a)).ceil() as usize;
    CompositeRule::new(a, b, panels, 20)
        .integrate(|u| Complex64::from_polar(f_sigma(f, u, sigma), -2.0 * PI * u * xi))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibleAlpha {
    /// supp f_σ ⊆ [-C, C]
    pub support_c: f64,
    pub alpha: f64,
    /// inf |f̂_σ(ξ)|² over |ξ| <= 2πα, |σ| <= 1/2
    pub inf_fhat_sq: f64,
    /// inf |f̂_σ(ξ)|² over |ξ| <= α/(2π), |σ| <= 1/2
    pub inf_fhat_sq_narrow: f64,
    /// 1/inf over the wide window; the constant used in the check
    pub constant: f64,
    /// 2π/inf over the narrow window, from the Fourier-side derivation
    pub derived_constant: f64,
    pub sigma_grid: Vec<f64>,
}

/// α = 1/(10πC) and the explicit constant from inf |f̂_σ|².
pub fn admissible_alpha(f: &dyn TestFunction) -> Result<AdmissibleAlpha> {
    let (a, b) = f_support(f);
    let support_c = a.abs().max(b.abs());
    let alpha = 1.0 / (10.0 * PI * support_c);
    let sigma_grid: Vec<f64> = (0..=20).map(|i| -0.5 + 0.05 * i as f64).collect();
    let inf_over = |xi_max: f64| -> f64 {
        let pts: Vec<(f64, f64)> = sigma_grid
            .iter()
            .flat_map(|&s| (0..=40).map(move |j| (s, -xi_max + 2.0 * xi_max * j as f64 / 40.0)))
            .collect();
        pts.par_iter()
            .map(|&(s, xi)| f_hat(f, s, xi).norm_sqr())
            .reduce(|| f64::INFINITY, f64::min)
    };
    let inf_fhat_sq = inf_over(2.0 * PI * alpha);
    let inf_fhat_sq_narrow = inf_over(alpha / (2.0 * PI));
    if !(inf_fhat_sq > 1e-12) {
        return Err(Error::Accuracy {
            what: "inf |f̂| over the admissible window".into(),
            requested: 1e-12,
            achieved: inf_fhat_sq,
        });
    }
    Ok(AdmissibleAlpha {
        support_c,
        alpha,
        inf_fhat_sq,
        inf_fhat_sq_narrow,
        constant: 1.0 / inf_fhat_sq,
        derived_constant: 2.0 * PI / inf_fhat_sq_narrow,
        sigma_grid,
    })
}

/// H_σ(x) = ∫ f_σ(u) f_σ(u+x) du.
pub fn autocorrelation(f: &dyn TestFunction, sigma: f64, x: f64) -> f64 {
    let (a, b) = f_support(f);
    let (lo, hi) = (a.max(a - x), b.min(b - x));
    if lo >= hi {
        return 0.0;
    }
    CompositeRule::new(lo, hi, 48, 20).integrate(|u| f_sigma(f, u, sigma) * f_sigma(f, u + x, sigma))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutocorrelationReport {
    pub sigma: f64,
    /// max over the ξ grid of |Ĥ_σ(ξ) - |f̂_σ(ξ)|²|
    pub max_gap: f64,
    pub energy: f64,
    pub parseval: f64,
    pub parseval_gap: f64,
    pub max_asymmetry: f64,
}

/// Fourier transform of H_σ against |f̂_σ|², plus Parseval.
pub fn autocorrelation_identity_check(f: &dyn TestFunction, sigma: f64, xi_grid: &[f64]) -> AutocorrelationReport {
    let (a, b) = f_support(f);
    let w = b - a;
    let rule = CompositeRule::new(-w, w, 96, 20);
    let h_vals: Vec<f64> = rule.nodes.par_iter().map(|&x| autocorrelation(f, sigma, x)).collect();
    let max_gap = xi_grid
        .par_iter()
        .map(|&xi| {
            let mut h_hat = Complex64::new(0.0, 0.0);
            for ((&x, &wt), &h) in rule.nodes.iter().zip(&rule.weights).zip(&h_vals) {
                h_hat += Complex64::from_polar(wt * h, -2.0 * PI * xi * x);
            }
            (h_hat - f_hat(f, sigma, xi).norm_sqr()).norm()
        })
        .reduce(|| 0.0, f64::max);
    let energy = autocorrelation(f, sigma, 0.0);
    // |f̂|² decays faster than any power; 40 covers it to rounding level
    let parseval = CompositeRule::new(-40.0, 40.0, 800, 16).integrate(|xi| f_hat(f, sigma, xi).norm_sqr());
    let max_asymmetry = [0.1, 0.37, 0.8, 1.2]
        .iter()
        .map(|&x| (autocorrelation(f, sigma, x) - autocorrelation(f, sigma, -x)).abs())
        .fold(0.0, f64::max);
    AutocorrelationReport {
        sigma,
        max_gap,
        energy,
        parseval,
        parseval_gap: (energy - parseval).abs(),
        max_asymmetry,
    }
}

pub const MAX_TRIAL_LENGTH: usize = 50;
pub const MAX_TRIAL_INDEX: u64 = 10_000;

/// Random polynomial for one trial: length 1..=50, distinct n <= 10⁴,
/// coefficients uniform on the unit disk.
pub fn random_polynomial(seed: u64, trial: u64) -> DirichletPolynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let len = rng.gen_range(1..=MAX_TRIAL_LENGTH);
    let idx = sample(&mut rng, MAX_TRIAL_INDEX as usize, len);
    let mut terms: Vec<(u64, Complex64)> = idx
        .into_iter()
        .map(|i| {
            let r = rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * 2.0 * PI;
            (i as u64 + 1, Complex64::from_polar(r, th))
        })
        .collect();
    terms.sort_by_key(|t| t.0);
    DirichletPolynomial { terms }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub sigma: f64,
    pub length: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SieveReport {
    pub alpha: f64,
    pub inf_fhat_sq: f64,
    pub constant: f64,
    pub derived_constant: f64,
    pub worst_ratio: f64,
    pub worst: Option<TrialResult>,
    pub trials: u64,
    pub seed: u64,
    pub sigmas: Vec<f64>,
    pub failures: usize,
}

/// lhs <= rhs / inf|f̂|² on seeded random polynomials.
pub fn sieve_inequality_check(trials: u64, seed: u64, sigmas: &[f64], adm: &AdmissibleAlpha) -> Result<SieveReport> {
    let f = ExpGlueBump;
    let jobs: Vec<(u64, f64)> = (0..trials).flat_map(|t| sigmas.iter().map(move |&s| (t, s))).collect();
    let results: Vec<Result<TrialResult>> = jobs
        .par_iter()
        .map(|&(trial, sigma)| {
            let p = random_polynomial(seed, trial);
            let lhs = lhs_closed_form(&p, adm.alpha);
            let rhs = rhs_integral(&p, sigma, &f)?;
            Ok(TrialResult {
                trial,
                sigma,
                length: p.terms().len(),
                lhs,
                rhs: rhs.value,
                ratio: lhs / rhs.value,
            })
        })
        .collect();
    let mut worst: Option<TrialResult> = None;
    let mut failures = 0;
    for r in results {
        let r = r?;
        if r.lhs > adm.constant * r.rhs {
            failures += 1;
        }
        if worst.as_ref().map_or(true, |w| r.ratio > w.ratio) {
            worst = Some(r);
        }
    }
    Ok(SieveReport {
        alpha: adm.alpha,
        inf_fhat_sq: adm.inf_fhat_sq,
        constant: adm.constant,
        derived_constant: adm.derived_constant,
        worst_ratio: worst.as_ref().map_or(0.0, |w| w.ratio),
        worst,
        trials,
        seed,
        sigmas: sigmas.to_vec(),
        failures,
    })
}

pub const DEFAULT_SIGMAS: [f64; 5] = [0.0, 0.25, -0.25, 0.45, -0.45];
