//! Numerical verification of the truncation, factorization and resonance
//! inequalities at desk scale.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charsums::PartialSumKernel;
use crate::error::{Error, Result};
use crate::resonator::CoefficientTable;

use super::series::SeriesFactorization;
use super::zeta::zeta;

/// Largest number of primes for which all squarefree products are listed.
pub const MAX_ENUMERATED_PRIMES: usize = 22;

fn loglog_sq(d: f64) -> f64 {
    d.ln().ln().powi(2)
}

/// All squarefree products n of the table primes with r(n) and d(n).
fn all_products(table: &CoefficientTable) -> Result<Vec<(f64, f64, f64)>> {
    let primes = table.primes();
    if primes.len() > MAX_ENUMERATED_PRIMES {
        return Err(Error::WorkEstimate {
            what: "squarefree products of the table primes".into(),
            estimate: 2f64.powi(primes.len() as i32),
            limit: 2f64.powi(MAX_ENUMERATED_PRIMES as i32),
            suggestion: "use a smaller explicit band".into(),
        });
    }
    let mut out = vec![(1.0, 1.0, 1.0)];
    for &p in primes {
        let r = table.r_at(p);
        let k = out.len();
        for i in 0..k {
            let (n, rn, dn) = out[i];
            out.push((n * p as f64, rn * r, dn * 2.0));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankinTail {
    pub m1: f64,
    pub tail: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquaresGap {
    pub m2: f64,
    /// g ≡ 1
    pub gap_unit: f64,
    /// g(p) = p/(p+1)
    pub gap_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankinReport {
    pub products: usize,
    pub absolute_sum: f64,
    pub absolute_product: f64,
    pub absolute_gap: f64,
    pub alpha: f64,
    pub tails: Vec<RankinTail>,
    pub squares: Vec<SquaresGap>,
    pub passed: bool,
}

/// Checks the absolute identity, the Rankin tail bound and the truncated
/// square sums for the coefficient table.
pub fn verify_rankin_truncations(table: &CoefficientTable) -> Result<RankinReport> {
    let params = table.params();
    let all = all_products(table)?;
    let primes = table.primes();
    let term = |&(n, r, d): &(f64, f64, f64)| r.abs() * d / n.sqrt();
    let mut absolute_sum = 0.0;
    for t in all.iter().rev() {
        absolute_sum += term(t);
    }
    let absolute_product: f64 = primes
        .iter()
        .map(|&p| 1.0 + 2.0 * table.r_at(p).abs() / (p as f64).sqrt())
        .product();
    let absolute_gap = (absolute_sum - absolute_product).abs() / absolute_product;

    let alpha = 1.0 / loglog_sq(params.d.max(16.0));
    let rankin_product: f64 = primes
        .iter()
        .map(|&p| 1.0 + 2.0 * table.r_at(p).abs() * (p as f64).powf(alpha - 0.5))
        .product();
    let n_max = all.last().map(|t| t.0).unwrap_or(1.0);
    let mut m1_values = vec![1.0, params.z, n_max / 2.0, 2.0 * n_max];
    m1_values.retain(|&m| m >= 1.0);
    let tails: Vec<RankinTail> = m1_values
        .iter()
        .map(|&m1| {
            let tail: f64 = all.iter().filter(|t| t.0 > m1).map(term).sum();
            RankinTail {
                m1,
                tail,
                bound: m1.powf(-alpha) * rankin_product,
            }
        })
        .collect();

    let prod_unit: f64 = primes.iter().map(|&p| 1.0 + table.r_at(p).powi(2)).product();
    let prod_ratio: f64 = primes
        .iter()
        .map(|&p| 1.0 + table.r_at(p).powi(2) * p as f64 / (p as f64 + 1.0))
        .product();
    // r² g(n) for every product, with g(p) = p/(p+1)
    let mut squares_terms: Vec<(f64, f64, f64)> = vec![(1.0, 1.0, 1.0)];
    for &p in primes {
        let r2 = table.r_at(p).powi(2);
        let k = squares_terms.len();
        for i in 0..k {
            let (n, u, v) = squares_terms[i];
            squares_terms.push((n * p as f64, u * r2, v * r2 * p as f64 / (p as f64 + 1.0)));
        }
    }
    squares_terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let squares: Vec<SquaresGap> = [params.z, n_max, 2.0 * n_max]
        .iter()
        .map(|&m2| {
            let (mut u, mut v) = (0.0, 0.0);
            for t in squares_terms.iter().filter(|t| t.0 <= m2).rev() {
                u += t.1;
                v += t.2;
            }
            SquaresGap {
                m2,
                gap_unit: (u - prod_unit).abs() / prod_unit,
                gap_ratio: (v - prod_ratio).abs() / prod_ratio,
            }
        })
        .collect();
    let passed = absolute_gap < 1e-10
        && tails.iter().all(|t| t.tail <= t.bound * (1.0 + 1e-12))
        && squares
            .iter()
            .filter(|s| s.m2 >= n_max)
            .all(|s| s.gap_unit < 0.01 && s.gap_ratio < 0.01);
    Ok(RankinReport {
        products: all.len(),
        absolute_sum,
        absolute_product,
        absolute_gap,
        alpha,
        tails,
        squares,
        passed,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationRow {
    pub s_re: f64,
    pub s_im: f64,
    pub direct_re: f64,
    pub direct_im: f64,
    pub product_re: f64,
    pub product_im: f64,
    pub gap: f64,
    pub certificate: f64,
}

/// Standard 12-point grid with Re(s) in [0.05, 1].
pub fn factorization_grid() -> Vec<Complex64> {
    let mut out = Vec::new();
    for &re in &[0.05, 0.1, 0.25, 0.5, 0.75, 1.0] {
        for &im in &[0.5, 7.0] {
            out.push(Complex64::new(re, im));
        }
    }
    out
}

/// F_direct against ζ(2s+1) G(s) H(s) with G from the plain Euler product.
pub fn factorization_check(series: &SeriesFactorization, grid: &[Complex64], accuracy: f64) -> Result<Vec<FactorizationRow>> {
    grid.par_iter()
        .map(|&s| {
            let d = series.f_direct(s)?;
            let p = series.f_product_plain(s, accuracy * 0.1)?;
            Ok(FactorizationRow {
                s_re: s.re,
                s_im: s.im,
                direct_re: d.value.re,
                direct_im: d.value.im,
                product_re: p.value.re,
                product_im: p.value.im,
                gap: (d.value - p.value).norm(),
                certificate: d.error + p.error,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogGBound {
    pub points: usize,
    pub max_abs_log: f64,
    pub at: (f64, f64),
}

/// max |log G(s)| over Re(s) in {-0.24, …, 1}, |Im s| <= 20.
pub fn log_g_grid(series: &SeriesFactorization) -> Result<LogGBound> {
    let mut pts = Vec::new();
    for &re in &[-0.24, -0.15, -0.05, 0.0, 0.25, 0.5, 1.0] {
        for j in -20..=20 {
            pts.push(Complex64::new(re, j as f64));
        }
    }
    let vals: Vec<Result<(f64, Complex64)>> = pts
        .par_iter()
        .map(|&s| Ok((series.g(s, 1e-10)?.value.ln().norm(), s)))
        .collect();
    let mut best = (0.0, Complex64::new(0.0, 0.0));
    for v in vals {
        let v = v?;
        if v.0 > best.0 {
            best = v;
        }
    }
    Ok(LogGBound {
        points: pts.len(),
        max_abs_log: best.0,
        at: (best.1.re, best.1.im),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrigReport {
    pub max_identity_error: f64,
    pub minimum: f64,
    pub argmin: f64,
    pub expected: f64,
}

/// (2cos θ + 1) cos θ on [5π/6, 7π/6]: identity with 2Re{e^{iθ}cos θ} - |cos θ|
/// and its minimum.
pub fn trig_check(samples: usize) -> TrigReport {
    let (lo, hi) = (5.0 * PI / 6.0, 7.0 * PI / 6.0);
    let f = |t: f64| (2.0 * t.cos() + 1.0) * t.cos();
    let mut max_err: f64 = 0.0;
    let mut min = (f(lo), lo);
    for i in 0..=samples {
        let t = lo + (hi - lo) * i as f64 / samples as f64;
        let lhs = 2.0 * (Complex64::from_polar(1.0, t) * t.cos()).re - t.cos().abs();
        max_err = max_err.max((lhs - f(t)).abs());
        if f(t) < min.0 {
            min = (f(t), t);
        }
    }
    if f(hi) < min.0 {
        min = (f(hi), hi);
    }
    TrigReport {
        max_identity_error: max_err,
        minimum: min.0,
        argmin: min.1,
        expected: (3.0 - 3f64.sqrt()) / 2.0,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonancePoint {
    pub t: f64,
    pub log_ratio: f64,
    pub log_zeta_sq: f64,
    pub log_g_sq: f64,
    pub minus_gain: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub sigma: f64,
    pub t_center: f64,
    pub half_width: f64,
    pub points: Vec<ResonancePoint>,
    pub min_log_ratio: f64,
    pub min_minus_gain: f64,
    /// Σ 2L(1 + cos θ_p + cos 2θ_p)/(p log p) over the negative band.
    pub shape: f64,
    pub center_ratio: f64,
    pub center_minus_gain: f64,
}

/// log(|F(σ+it)|² / ∏_{𝒫⁻}(1 + 2|r̃(p)|/√p)) across the resonance window,
/// σ = 1/(log x)², |t - 1/(2 log L)| <= `half_width`.
pub fn resonance_bound(table: &CoefficientTable, half_width: f64, samples: usize) -> Result<ResonanceReport> {
    let params = table.params();
    let series = SeriesFactorization::new(table);
    let sigma = 1.0 / params.log_x().powi(2);
    let t_center = 1.0 / (2.0 * params.l.ln());
    let denom: f64 = table
        .pminus()
        .iter()
        .map(|&p| (1.0 + 2.0 * table.r_tilde(p).abs() / (p as f64).sqrt()).ln())
        .sum();
    let ts: Vec<f64> = (0..samples)
        .map(|i| t_center - half_width + 2.0 * half_width * i as f64 / (samples.max(2) - 1) as f64)
        .collect();
    let mut all_t = ts.clone();
    all_t.push(t_center);
    let points: Vec<Result<ResonancePoint>> = all_t
        .par_iter()
        .map(|&t| {
            let s = Complex64::new(sigma, t);
            let z = zeta(2.0 * s + 1.0, 1e-12)?.value;
            let g = series.g(s, 1e-12)?.value;
            let h = series.h(s)?;
            let log_zeta_sq = 2.0 * z.norm().ln();
            let log_g_sq = 2.0 * g.norm().ln();
            let minus_gain = 2.0 * h.norm().ln() - denom;
            Ok(ResonancePoint {
                t,
                log_ratio: log_zeta_sq + log_g_sq + minus_gain,
                log_zeta_sq,
                log_g_sq,
                minus_gain,
            })
        })
        .collect();
    let mut points: Vec<ResonancePoint> = points.into_iter().collect::<Result<_>>()?;
    let center = points.pop().expect("centre point");
    let shape = table
        .pminus()
        .iter()
        .map(|&p| {
            let pf = p as f64;
            let th = pf.ln() / (2.0 * params.l.ln());
            2.0 * params.l * (1.0 + th.cos() + (2.0 * th).cos()) / (pf * pf.ln())
        })
        .sum();
    Ok(ResonanceReport {
        sigma,
        t_center,
        half_width,
        min_log_ratio: points.iter().map(|p| p.log_ratio).fold(f64::INFINITY, f64::min),
        min_minus_gain: points.iter().map(|p| p.minus_gain).fold(f64::INFINITY, f64::min),
        points,
        shape,
        center_ratio: center.log_ratio.exp(),
        center_minus_gain: center.minus_gain,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sigma2Row {
    pub y: f64,
    pub s: f64,
    pub circle_term: f64,
    pub line_term: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sigma2Report {
    pub radius: f64,
    pub max_circle_log_h: f64,
    pub line_abscissa: f64,
    pub line_sup: f64,
    pub line_sup_bound: f64,
    pub rows: Vec<Sigma2Row>,
    /// Smallest C with |S(y)| <= C (circle + line) on the grid.
    pub fitted_constant: f64,
}

fn circle_sup_h(series: &SeriesFactorization, radius: f64, n: usize) -> Result<(f64, f64)> {
    let mut sup: f64 = 0.0;
    let mut max_re_log = f64::NEG_INFINITY;
    for j in 0..n {
        let s = Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64);
        let h = series.h(s)?;
        sup = sup.max(h.norm());
        max_re_log = max_re_log.max(h.norm().ln());
    }
    Ok((sup, max_re_log))
}

/// Both terms of the shifted-contour bound for S(y) and the fitted constant.
pub fn sigma2_bound_check(table: &CoefficientTable, kernel: &PartialSumKernel, y_grid: &[f64]) -> Result<Sigma2Report> {
    let params = table.params();
    let series = SeriesFactorization::new(table);
    let ll2 = loglog_sq(params.d.max(16.0));
    let line = -1.0 / ll2;
    let mut line_sup: f64 = 0.0;
    for j in 0..=20_000 {
        let t = j as f64 * 0.01;
        line_sup = line_sup.max(series.h(Complex64::new(line, t))?.norm());
    }
    let line_sup_bound = series.h_abs(line);
    let mut rows = Vec::new();
    let mut fitted: f64 = 0.0;
    let mut max_circle_log_h = f64::NEG_INFINITY;
    let mut radius_report = 0.0;
    for &y in y_grid {
        let lm = params.x.max(y).ln();
        let radius = 1.0 / lm;
        let (sup, max_log) = circle_sup_h(&series, radius, 720)?;
        max_circle_log_h = max_circle_log_h.max(max_log);
        radius_report = radius;
        let circle_term = lm * sup;
        let line_term = ll2 * (-(y.ln()) / ll2).exp() * line_sup;
        let s = kernel.s_of_y(y)?;
        fitted = fitted.max(s.abs() / (circle_term + line_term));
        rows.push(Sigma2Row { y, s, circle_term, line_term });
    }
    Ok(Sigma2Report {
        radius: radius_report,
        max_circle_log_h,
        line_abscissa: line,
        line_sup,
        line_sup_bound,
        rows,
        fitted_constant: fitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::{build_params, Mode, Overrides};

    fn small_table() -> CoefficientTable {
        // 𝒫⁻ = {7, 11, 13}, 𝒫⁺ = {17, 19}
        let o = Overrides {
            l: Some(1.45),
            x: Some(20.0),
            b: Some(20.0),
            z: Some(400.0),
            ..Default::default()
        };
        let p = build_params(0.1, 1e6, Mode::Explicit, &o).unwrap();
        CoefficientTable::new(&p).unwrap()
    }

    #[test]
    fn rankin_identities() {
        let t = small_table();
        assert_eq!(t.pminus(), &[7, 11, 13]);
        let r = verify_rankin_truncations(&t).unwrap();
        assert!(r.absolute_gap < 1e-10);
        assert!(r.passed, "{r:?}");
        let last = r.tails.last().unwrap();
        assert_eq!(last.tail, 0.0);
    }

    #[test]
    fn trig_minimum_at_endpoints() {
        let r = trig_check(100_000);
        assert!(r.max_identity_error < 1e-12);
        assert!((r.minimum - r.expected).abs() < 1e-9);
        let (lo, hi) = (5.0 * PI / 6.0, 7.0 * PI / 6.0);
        assert!((r.argmin - lo).abs() < 1e-9 || (r.argmin - hi).abs() < 1e-9);
        assert!(((2.0 * hi.cos() + 1.0) * hi.cos() - r.expected).abs() < 1e-12);
    }

    #[test]
    fn factorization_on_grid() {
        let t = small_table();
        let series = SeriesFactorization::new(&t).with_direct_cutoff(1_000_000);
        let rows = factorization_check(&series, &factorization_grid(), 1e-6).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert!(r.gap <= r.certificate, "{r:?}");
            assert!(r.certificate < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn log_g_bounded() {
        let series = SeriesFactorization::new(&small_table());
        let b = log_g_grid(&series).unwrap();
        assert!(b.max_abs_log < 10.0);
        assert_eq!(b.points, 7 * 41);
    }

    #[test]
    fn resonance_ratio_exceeds_one() {
        let o = Overrides {
            l: Some(2.5),
            x: Some(1e6),
            b: Some(1e4),
            z: Some(4e6),
            ..Default::default()
        };
        let p = build_params(1.0 / 9.0, 1e6, Mode::Explicit, &o).unwrap();
        let t = CoefficientTable::new(&p).unwrap();
        let r = resonance_bound(&t, 1.0 / 1e6f64.ln().ln().powi(2), 21).unwrap();
        assert!(r.center_ratio > 1.0, "{}", r.center_ratio);
        assert!(r.min_minus_gain > 0.0);
        assert!((r.center_ratio - 1.349).abs() < 1e-3);
    }

    #[test]
    fn sigma2_bound_shape() {
        let t = small_table();
        let kernel = PartialSumKernel::new(&t, 40.0).unwrap();
        let ys = [2.0, 3.0, 5.0, 8.0, 13.0, 20.0, 40.0];
        let r = sigma2_bound_check(&t, &kernel, &ys).unwrap();
        assert!(r.max_circle_log_h < 0.0);
        // fitted on first run, frozen as a regression baseline
        assert!((r.fitted_constant - 0.212_437_883_236_865).abs() < 1e-9);
        assert!(r.line_sup.is_finite() && r.line_sup <= r.line_sup_bound);
        for row in &r.rows {
            assert!(row.s.abs() <= r.fitted_constant * (row.circle_term + row.line_term) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn minus_gain_positive_in_window() {
        let t = small_table();
        let r = resonance_bound(&t, 1.0 / 1e6f64.ln().ln().powi(2), 21).unwrap();
        assert!(r.min_minus_gain > 0.0, "{r:?}");
        assert!(r.shape > 0.0);
    }
}
