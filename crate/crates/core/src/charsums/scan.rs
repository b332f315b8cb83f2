//! The d-outer evaluation of 𝒩 and 𝒟 and the pigeonhole extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{jacobi, kronecker, primes_up_to, SmallestPrimeFactor, SquarefreeSieve};
use crate::error::{Error, Result};
use crate::numerics::{NeumaierSum, SumBits};
use crate::resonator::CoefficientTable;
use crate::smoothing::TestFunction;

/// Number of consecutive d per chunk. Fixed so that results do not depend
/// on the worker count.
pub const SCAN_CHUNK: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkLimits {
    pub max_d: f64,
    pub max_support: usize,
    pub max_x: f64,
}

impl Default for WorkLimits {
    fn default() -> Self {
        Self {
            max_d: 1e8,
            max_support: 100_000,
            max_x: 1e6,
        }
    }
}

impl WorkLimits {
    pub fn check(&self, d: f64, support: usize, x: f64) -> Result<()> {
        if d > self.max_d {
            return Err(Error::WorkEstimate {
                what: "exact scan over d".into(),
                estimate: d,
                limit: self.max_d,
                suggestion: format!(
                    "use D <= {:.0e} or the asymptotic denominator (2/π²)·D·∏(1 + r'(p)²)",
                    self.max_d
                ),
            });
        }
        if support > self.max_support {
            return Err(Error::WorkEstimate {
                what: "resonator support".into(),
                estimate: support as f64,
                limit: self.max_support as f64,
                suggestion: "lower Z or narrow the prime bands".into(),
            });
        }
        if x > self.max_x {
            return Err(Error::WorkEstimate {
                what: "truncated sum length x".into(),
                estimate: x,
                limit: self.max_x,
                suggestion: format!("use x <= {:.0e}", self.max_x),
            });
        }
        Ok(())
    }
}

/// Partial reduction over one chunk of d. Floating fields are stored as
/// bit patterns so that checkpoints restore them exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkResult {
    pub index: usize,
    pub numerator: SumBits,
    pub denominator: SumBits,
    pub plain: SumBits,
    pub admissible: u64,
    pub weighted: u64,
    /// (d, bits of T(d)) for the smallest weighted T(d), if any.
    pub min: Option<(u64, u64)>,
    /// (d, bits of T(d)) for every admissible d, when requested.
    pub pairs: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanTotals {
    pub numerator: f64,
    pub numerator_error: f64,
    pub denominator: f64,
    pub denominator_error: f64,
    pub admissible: u64,
    pub weighted: u64,
    pub extremal_d: Option<u64>,
    pub extremal_value: f64,
    /// Plain mean of T(d) over all admissible d.
    pub plain_average: f64,
}

pub struct DiscriminantScan<'a> {
    table: &'a CoefficientTable,
    lo: u64,
    hi: u64,
    n_max: usize,
    weights: Vec<f64>,
    spf: SmallestPrimeFactor,
    small_primes: Vec<u64>,
    prime_slot: Vec<u32>,
    /// table prime → slot in `small_primes` when small enough
    table_slots: Vec<Option<u32>>,
    sieve: SquarefreeSieve,
    keep_pairs: bool,
}

impl<'a> DiscriminantScan<'a> {
    /// Scan over D/2 < d <= D with cutoff φ(n/x), x taken from the table.
    pub fn new(table: &'a CoefficientTable, phi: &dyn TestFunction, limits: &WorkLimits, keep_pairs: bool) -> Result<Self> {
        let params = table.params();
        limits.check(params.d, table.support().len(), params.x)?;
        let hi = params.d.floor() as u64;
        let lo = (params.d / 2.0).floor() as u64 + 1;
        let n_max = ((phi.support() * params.x).floor() as usize).max(1);
        let mut weights = vec![0.0; n_max + 1];
        for (n, w) in weights.iter_mut().enumerate().skip(1) {
            *w = phi.value(n as f64 / params.x) / (n as f64).sqrt();
        }
        let spf = SmallestPrimeFactor::new(n_max);
        let small_primes = primes_up_to(n_max as u64);
        let mut prime_slot = vec![u32::MAX; n_max + 1];
        for (i, &p) in small_primes.iter().enumerate() {
            prime_slot[p as usize] = i as u32;
        }
        let table_slots = table
            .primes()
            .iter()
            .map(|&p| (p as usize <= n_max).then(|| prime_slot[p as usize]))
            .collect();
        Ok(Self {
            table,
            lo,
            hi,
            n_max,
            weights,
            spf,
            small_primes,
            prime_slot,
            table_slots,
            sieve: SquarefreeSieve::new(hi.max(1)),
            keep_pairs,
        })
    }

    pub fn range(&self) -> (u64, u64) {
        (self.lo, self.hi)
    }

    pub fn chunk_count(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            ((self.hi - self.lo) / SCAN_CHUNK + 1) as usize
        }
    }

    /// T(d) and R(d) for one admissible d. `chi_p` and `chi_n` are scratch.
    fn evaluate(&self, d: u64, chi_p: &mut [i8], chi_n: &mut [i8]) -> (f64, f64) {
        let a = 8 * d;
        for (c, &p) in chi_p.iter_mut().zip(&self.small_primes) {
            *c = if p == 2 { 0 } else { jacobi(a % p, p) as i8 };
        }
        chi_n[1] = 1;
        let mut t = NeumaierSum::new();
        for n in 2..=self.n_max {
            let p = self.spf.get(n);
            chi_n[n] = chi_p[self.prime_slot[p] as usize] * chi_n[n / p];
        }
        for n in 1..=self.n_max {
            if chi_n[n] != 0 {
                t.add(chi_n[n] as f64 * self.weights[n]);
            }
        }
        let chi_table: Vec<i8> = self
            .table
            .primes()
            .iter()
            .zip(&self.table_slots)
            .map(|(&p, slot)| match slot {
                Some(s) => chi_p[*s as usize],
                None => kronecker(a as i64, p as i64) as i8,
            })
            .collect();
        let s = self.table.support();
        let mut r = NeumaierSum::new();
        for i in 0..s.len() {
            let mut sign = 1i8;
            for &j in s.factor_indices(i) {
                sign *= chi_table[j as usize];
            }
            if sign != 0 {
                r.add(sign as f64 * s.r[i]);
            }
        }
        (t.value(), r.value())
    }

    pub fn run_chunk(&self, index: usize) -> ChunkResult {
        let start = self.lo + index as u64 * SCAN_CHUNK;
        let end = (start + SCAN_CHUNK).min(self.hi + 1);
        let flags = self.sieve.flags(start, end - 1);
        let mut chi_p = vec![0i8; self.small_primes.len()];
        let mut chi_n = vec![0i8; self.n_max + 1];
        let mut num = NeumaierSum::new();
        let mut den = NeumaierSum::new();
        let mut plain = NeumaierSum::new();
        let mut admissible = 0;
        let mut weighted = 0;
        let mut min: Option<(u64, f64)> = None;
        let mut pairs = Vec::new();
        for (i, &sf) in flags.iter().enumerate() {
            let d = start + i as u64;
            if !sf || d % 2 == 0 {
                continue;
            }
            admissible += 1;
            let (t, r) = self.evaluate(d, &mut chi_p, &mut chi_n);
            let w = r * r;
            plain.add(t);
            if w > 0.0 {
                weighted += 1;
                num.add(w * t);
                den.add(w);
                if min.map_or(true, |(_, v)| t < v) {
                    min = Some((d, t));
                }
            }
            if self.keep_pairs {
                pairs.push((d, t.to_bits()));
            }
        }
        ChunkResult {
            index,
            numerator: num.to_bits(),
            denominator: den.to_bits(),
            plain: plain.to_bits(),
            admissible,
            weighted,
            min: min.map(|(d, v)| (d, v.to_bits())),
            pairs,
        }
    }

    /// Every chunk, evaluated in parallel on the current rayon pool and
    /// returned in chunk order.
    pub fn run_all(&self) -> Vec<ChunkResult> {
        (0..self.chunk_count()).into_par_iter().map(|i| self.run_chunk(i)).collect()
    }
}

/// Fold chunk results in index order.
pub fn combine_chunks(chunks: &[ChunkResult]) -> ScanTotals {
    let mut sorted: Vec<&ChunkResult> = chunks.iter().collect();
    sorted.sort_by_key(|c| c.index);
    let mut num = NeumaierSum::new();
    let mut den = NeumaierSum::new();
    let mut plain = NeumaierSum::new();
    let mut admissible = 0;
    let mut weighted = 0;
    let mut min: Option<(u64, f64)> = None;
    for c in sorted {
        num.merge(&NeumaierSum::from_bits(&c.numerator));
        den.merge(&NeumaierSum::from_bits(&c.denominator));
        plain.merge(&NeumaierSum::from_bits(&c.plain));
        admissible += c.admissible;
        weighted += c.weighted;
        if let Some((d, bits)) = c.min {
            let v = f64::from_bits(bits);
            if min.map_or(true, |(_, m)| v < m) {
                min = Some((d, v));
            }
        }
    }
    ScanTotals {
        numerator: num.value(),
        numerator_error: num.error_bound(),
        denominator: den.value(),
        denominator_error: den.error_bound(),
        admissible,
        weighted,
        extremal_d: min.map(|m| m.0),
        extremal_value: min.map_or(f64::NAN, |m| m.1),
        plain_average: if admissible > 0 {
            plain.value() / admissible as f64
        } else {
            f64::NAN
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    #[serde(rename = "N")]
    pub n: f64,
    pub n_error: f64,
    #[serde(rename = "Den")]
    pub den: f64,
    pub den_error: f64,
    pub den_asymptotic: f64,
    pub ratio: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// |𝒟 - 𝒟_asymptotic| / D^{5/6}; measured, not a certified bound.
    pub offdiag_bound_observed: f64,
    pub extremal_d: u64,
    /// The discriminant 8d*.
    pub extremal_discriminant: u64,
    pub extremal_value: f64,
    pub admissible: u64,
    pub weighted: u64,
    pub plain_average: f64,
    pub pigeonhole_holds: bool,
}

/// Assemble the ratio report; the pigeonhole inequality is checked with a
/// relative slack of 1e-9.
pub fn pigeonhole_extract(
    table: &CoefficientTable,
    totals: &ScanTotals,
    sigma1: f64,
    sigma2: f64,
    den_asymptotic: f64,
) -> Result<RatioReport> {
    if totals.denominator <= 0.0 {
        return Err(Error::EmptyAdmissibleSet);
    }
    let d_star = totals.extremal_d.ok_or(Error::EmptyAdmissibleSet)?;
    let ratio = totals.numerator / totals.denominator;
    let d_scale = table.params().d;
    Ok(RatioReport {
        n: totals.numerator,
        n_error: totals.numerator_error,
        den: totals.denominator,
        den_error: totals.denominator_error,
        den_asymptotic,
        ratio,
        sigma1,
        sigma2,
        offdiag_bound_observed: (totals.denominator - den_asymptotic).abs() / d_scale.powf(5.0 / 6.0),
        extremal_d: d_star,
        extremal_discriminant: 8 * d_star,
        extremal_value: totals.extremal_value,
        admissible: totals.admissible,
        weighted: totals.weighted,
        plain_average: totals.plain_average,
        pigeonhole_holds: totals.extremal_value <= ratio + 1e-9 * ratio.abs(),
    })
}

/// 𝒩 and 𝒟 from the ℓ₁, ℓ₂-outer expansion
/// Σ r(ℓ₁)r(ℓ₂) Σ_n φ(n/x)/√n Σ_d μ²(2d) χ_{8d}(ℓ₁ℓ₂n). Only for tiny
/// instances: D <= 200, at most 8 support entries, x <= 20.
pub fn quadratic_forms_oracle(table: &CoefficientTable, phi: &dyn TestFunction) -> Result<(f64, f64)> {
    let params = table.params();
    let support = table.support();
    if params.d > 200.0 || support.len() > 8 || params.x > 20.0 {
        return Err(Error::WorkEstimate {
            what: "ℓ₁ℓ₂-outer oracle".into(),
            estimate: params.d * (support.len() * support.len()) as f64 * params.x,
            limit: 200.0 * 64.0 * 20.0,
            suggestion: "restrict to D <= 200, support <= 8, x <= 20".into(),
        });
    }
    let hi = params.d.floor() as u64;
    let lo = (params.d / 2.0).floor() as u64 + 1;
    let ds: Vec<u64> = (lo..=hi).filter(|&d| crate::arith::is_valid_core(d)).collect();
    let family_sum = |m: u64| -> f64 { ds.iter().map(|&d| kronecker(8 * d as i64, m as i64) as f64).sum() };
    let n_max = (phi.support() * params.x).floor() as u64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (l1, r1) in support.iter() {
        for (l2, r2) in support.iter() {
            den += r1 * r2 * family_sum(l1 * l2);
            for n in 1..=n_max {
                let w = phi.value(n as f64 / params.x) / (n as f64).sqrt();
                if w != 0.0 {
                    num += r1 * r2 * w * family_sum(l1 * l2 * n);
                }
            }
        }
    }
    Ok((num, den))
}
