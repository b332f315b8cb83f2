//! Parameter schedule and resonator coefficients.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::{primes_in, FactoredInteger};
use crate::error::{Error, Result};

pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Asymptotic,
    Explicit,
}

/// Desk-scale overrides for explicit mode. `l` is mandatory there.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub l: Option<f64>,
    pub pminus_lo: Option<f64>,
    pub pminus_hi: Option<f64>,
    pub b: Option<f64>,
    pub x: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub delta: f64,
    pub x: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub pminus_lo: f64,
    pub pminus_hi: f64,
    pub mode: Mode,
}

fn out_of_range(field: &str, message: impl Into<String>) -> Error {
    Error::ParamOutOfRange {
        field: field.into(),
        message: message.into(),
    }
}

fn positive_finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(out_of_range(field, format!("must be a positive finite number, got {v}")))
    }
}

/// Smallest D for which the literal schedule has Y > e^e.
pub fn min_feasible_d(a: f64) -> f64 {
    let delta = 2.0 / 9.0 - a;
    let rate = (delta / 2.0).min(a / 4.0);
    (std::f64::consts::E / rate).exp()
}

/// L^{θ}, the band endpoints for θ = 5π/3 and 7π/3.
fn band_from_l(l: f64) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    (l.powf(5.0 * pi / 3.0), l.powf(7.0 * pi / 3.0))
}

pub fn build_params(a: f64, d: f64, mode: Mode, overrides: &Overrides) -> Result<ResonatorParams> {
    if !(a > 0.0 && a < 2.0 / 9.0) {
        return Err(out_of_range("a", format!("need 0 < a < 2/9, got {a}")));
    }
    if !(d.is_finite() && d >= 2.0) {
        return Err(out_of_range("D", format!("need D >= 2, got {d}")));
    }
    let delta = 2.0 / 9.0 - a;
    let (x, z, l, band, b) = match mode {
        Mode::Asymptotic => {
            let x = d.powf(a);
            let z = (x * d.powf(delta)).min(x.powf(1.5));
            let y = (z / x).sqrt();
            if y <= std::f64::consts::E.exp() {
                return Err(Error::DegenerateSchedule {
                    y,
                    a,
                    min_d: min_feasible_d(a),
                });
            }
            let l = (y.ln() * y.ln().ln()).sqrt();
            (x, z, l, band_from_l(l), x)
        }
        Mode::Explicit => {
            let l = positive_finite("L", overrides.l.ok_or_else(|| out_of_range("L", "explicit mode requires L"))?)?;
            if l <= 1.0 {
                return Err(out_of_range("L", format!("need L > 1, got {l}")));
            }
            let x = positive_finite("x", overrides.x.unwrap_or_else(|| d.powf(a)))?;
            let z = positive_finite("Z", overrides.z.unwrap_or_else(|| (x * d.powf(delta)).min(x.powf(1.5))))?;
            let default_band = band_from_l(l);
            let lo = positive_finite("pminus_lo", overrides.pminus_lo.unwrap_or(default_band.0))?;
            let hi = positive_finite("pminus_hi", overrides.pminus_hi.unwrap_or(default_band.1))?;
            let b = positive_finite("B", overrides.b.unwrap_or(x))?;
            (x, z, l, (lo, hi), b)
        }
    };
    if band.0 >= band.1 {
        return Err(out_of_range("pminus_lo", format!("band [{}, {}) is empty", band.0, band.1)));
    }
    if b / 4.0 < 2.0 {
        return Err(out_of_range("B", format!("need B/4 >= 2, got B = {b}")));
    }
    if b > x * (1.0 + 1e-15) {
        return Err(out_of_range("B", format!("need B <= x = {x}, got {b}")));
    }
    if z < 1.0 {
        return Err(out_of_range("Z", format!("need Z >= 1, got {z}")));
    }
    Ok(ResonatorParams {
        a,
        d,
        delta,
        x,
        z,
        y: (z / x).sqrt(),
        l,
        b,
        pminus_lo: band.0,
        pminus_hi: band.1,
        mode,
    })
}

impl ResonatorParams {
    pub fn in_pminus(&self, p: u64) -> bool {
        let v = p as f64;
        p > 2 && v >= self.pminus_lo && v < self.pminus_hi
    }

    pub fn in_pplus(&self, p: u64) -> bool {
        let v = p as f64;
        p > 2 && v >= self.b / 4.0 && v <= self.b && !self.in_pminus(p)
    }

    pub fn log_x(&self) -> f64 {
        self.x.ln()
    }

    /// Odd primes of the negative band, ascending.
    pub fn pminus_primes(&self) -> Vec<u64> {
        let lo = self.pminus_lo.max(2.0);
        let mut v = primes_in(lo, self.pminus_hi.max(lo));
        v.retain(|&p| self.in_pminus(p));
        v
    }

    /// Odd primes in [B/4, B] outside the negative band, ascending.
    pub fn pplus_primes(&self) -> Vec<u64> {
        let mut v = primes_in(self.b / 4.0, self.b.floor() + 1.0);
        v.retain(|&p| self.in_pplus(p));
        v
    }
}

/// cos(log p / log L²) · L / (√p log p).
pub fn r_minus_value(p: u64, l: f64) -> f64 {
    let lp = (p as f64).ln();
    (lp / (2.0 * l.ln())).cos() * l / ((p as f64).sqrt() * lp)
}

pub fn r_minus(p: u64, params: &ResonatorParams) -> f64 {
    if params.in_pminus(p) {
        r_minus_value(p, params.l)
    } else {
        0.0
    }
}

pub fn r_plus(p: u64, epsilon: i8, params: &ResonatorParams) -> Result<f64> {
    if !params.in_pplus(p) {
        return Err(Error::InvalidArgument(format!("{p} is not in the positive prime band")));
    }
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::InvalidArgument(format!("sign must be ±1, got {epsilon}")));
    }
    let lx = params.log_x();
    Ok(epsilon as f64 / ((p as f64).sqrt() * lx * lx))
}

/// r'(p) = r(p)·sqrt(p/(p+1)).
pub fn r_prime_value(p: u64, r: f64) -> f64 {
    let p = p as f64;
    r * (p / (p + 1.0)).sqrt()
}

/// r̃(p) = r(p) / ((1 + 1/p)(1 + r'(p)²)).
pub fn r_tilde_value(p: u64, r: f64) -> f64 {
    let rp = r_prime_value(p, r);
    r / ((1.0 + 1.0 / p as f64) * (1.0 + rp * rp))
}

/// Per-prime factor of b(m, ℓ) for an odd prime p dividing m but not ℓ.
pub fn b_factor(p: u64, r_minus: f64) -> f64 {
    let q = p as f64 / (p as f64 + 1.0);
    let r2 = r_minus * r_minus;
    q * (1.0 + r2) / (1.0 + r2 * q)
}

/// Squarefree support in flat arrays; `factors[offsets[i]..offsets[i+1]]`
/// are indices into the table's prime list.
#[derive(Clone, Debug, Default)]
pub struct Support {
    pub n: Vec<u64>,
    pub r: Vec<f64>,
    pub offsets: Vec<u32>,
    pub factors: Vec<u32>,
}

impl Support {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    pub fn factor_indices(&self, i: usize) -> &[u32] {
        &self.factors[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.n.iter().copied().zip(self.r.iter().copied())
    }
}

/// Resonator values on the prime bands plus the enumerated support up to Z.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    params: ResonatorParams,
    /// 𝒫⁻ ∪ 𝒫⁺, ascending.
    primes: Vec<u64>,
    r_prime_values: Vec<f64>,
    in_minus: Vec<bool>,
    pminus: Vec<u64>,
    pplus: Vec<u64>,
    epsilon: Vec<i8>,
    support: Support,
    support_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignState {
    pub primes: Vec<u64>,
    pub s_values: Vec<f64>,
    pub epsilon: Vec<i8>,
}

impl SignState {
    /// All signs +1, with no evaluator values attached.
    pub fn positive(primes: &[u64]) -> Self {
        Self {
            primes: primes.to_vec(),
            s_values: vec![f64::NAN; primes.len()],
            epsilon: vec![1; primes.len()],
        }
    }
}

/// ε = -sgn(s) with sgn(0) = +1 for the tie, i.e. ε = +1 iff s <= 0.
pub fn sign_from_value(s: f64) -> i8 {
    if s > 0.0 {
        -1
    } else {
        1
    }
}

impl CoefficientTable {
    /// Table with every ε_p = +1.
    pub fn new(params: &ResonatorParams) -> Result<Self> {
        Self::with_cap(params, DEFAULT_SUPPORT_CAP)
    }

    pub fn with_cap(params: &ResonatorParams, support_cap: usize) -> Result<Self> {
        let pminus = params.pminus_primes();
        let pplus = params.pplus_primes();
        let signs = SignState::positive(&pplus);
        Self::assemble(params.clone(), pminus, pplus, &signs.epsilon, support_cap)
    }

    fn assemble(params: ResonatorParams, pminus: Vec<u64>, pplus: Vec<u64>, epsilon: &[i8], cap: usize) -> Result<Self> {
        let mut merged: Vec<(u64, f64, bool)> = pminus
            .iter()
            .map(|&p| (p, r_minus_value(p, params.l), true))
            .chain(pplus.iter().zip(epsilon).map(|(&p, &e)| {
                let lx = params.log_x();
                (p, e as f64 / ((p as f64).sqrt() * lx * lx), false)
            }))
            .collect();
        merged.sort_by_key(|t| t.0);
        let primes: Vec<u64> = merged.iter().map(|t| t.0).collect();
        let r_prime_values: Vec<f64> = merged.iter().map(|t| t.1).collect();
        let in_minus = merged.iter().map(|t| t.2).collect();
        let support = enumerate_support(&primes, &r_prime_values, params.z, cap)?;
        Ok(Self {
            params,
            primes,
            r_prime_values,
            in_minus,
            pminus,
            pplus,
            epsilon: epsilon.to_vec(),
            support,
            support_cap: cap,
        })
    }

    /// Same table with the 𝒫⁺ signs replaced.
    pub fn with_signs(&self, signs: &SignState) -> Result<Self> {
        if signs.primes != self.pplus {
            return Err(Error::InvalidArgument("sign state does not match the positive band".into()));
        }
        if signs.epsilon.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidArgument("signs must be ±1".into()));
        }
        Self::assemble(
            self.params.clone(),
            self.pminus.clone(),
            self.pplus.clone(),
            &signs.epsilon,
            self.support_cap,
        )
    }

    pub fn params(&self) -> &ResonatorParams {
        &self.params
    }

    pub fn pminus(&self) -> &[u64] {
        &self.pminus
    }

    pub fn pplus(&self) -> &[u64] {
        &self.pplus
    }

    pub fn epsilon(&self) -> &[i8] {
        &self.epsilon
    }

    pub fn epsilon_of(&self, p: u64) -> Option<i8> {
        self.pplus.binary_search(&p).ok().map(|i| self.epsilon[i])
    }

    /// 𝒫⁻ ∪ 𝒫⁺ ascending, aligned with the support's factor indices.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// r(p), zero off the bands.
    pub fn r_at(&self, p: u64) -> f64 {
        match self.primes.binary_search(&p) {
            Ok(i) => self.r_prime_values[i],
            Err(_) => 0.0,
        }
    }

    pub fn is_minus(&self, p: u64) -> bool {
        self.primes.binary_search(&p).map(|i| self.in_minus[i]).unwrap_or(false)
    }

    /// r₋(p): the negative-band value, zero elsewhere.
    pub fn r_minus_at(&self, p: u64) -> f64 {
        if self.is_minus(p) {
            self.r_at(p)
        } else {
            0.0
        }
    }

    pub fn r_prime(&self, p: u64) -> f64 {
        r_prime_value(p, self.r_at(p))
    }

    pub fn r_tilde(&self, p: u64) -> f64 {
        r_tilde_value(p, self.r_at(p))
    }

    pub fn r_full(&self, n: &FactoredInteger) -> f64 {
        if !n.is_squarefree() || !n.is_odd() {
            return 0.0;
        }
        n.primes().map(|p| self.r_at(p)).product()
    }

    /// b(m, ℓ), product over odd p | m with p ∤ ℓ.
    pub fn b_weight(&self, m: &FactoredInteger, l: &FactoredInteger) -> f64 {
        m.primes()
            .filter(|&p| p != 2 && !l.divides(p))
            .map(|p| b_factor(p, self.r_minus_at(p)))
            .product()
    }

    /// Σ_{p ∈ 𝒫⁺} r(p)².
    pub fn pplus_energy(&self) -> f64 {
        let lx = self.params.log_x();
        self.pplus.iter().map(|&p| 1.0 / (p as f64 * lx.powi(4))).sum()
    }

    /// sha256 over (n, r(n) bits) of the support, hex encoded.
    pub fn support_digest(&self) -> String {
        let mut h = Sha256::new();
        for (n, r) in self.support.iter() {
            h.update(n.to_le_bytes());
            h.update(r.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn document(&self) -> TableDocument {
        TableDocument {
            params: self.params.clone(),
            pminus: self.pminus.clone(),
            pplus: self.pplus.clone(),
            epsilon: self.epsilon.clone(),
            support_len: self.support.len(),
            support_digest: self.support_digest(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub params: ResonatorParams,
    pub pminus: Vec<u64>,
    pub pplus: Vec<u64>,
    pub epsilon: Vec<i8>,
    pub support_len: usize,
    pub support_digest: String,
}

/// All products of distinct primes from `primes` (ascending) up to `z`,
/// sorted by n, with r(n) the product of `r` over the factors.
pub fn enumerate_support(primes: &[u64], r: &[f64], z: f64, cap: usize) -> Result<Support> {
    assert_eq!(primes.len(), r.len());
    let limit = if z >= u64::MAX as f64 { u64::MAX } else { z.floor() as u64 };
    let mut rows: Vec<(u64, f64, Vec<u32>)> = Vec::new();
    let mut stack: Vec<u32> = Vec::new();
    fn dfs(
        start: usize,
        n: u64,
        rv: f64,
        primes: &[u64],
        r: &[f64],
        limit: u64,
        cap: usize,
        stack: &mut Vec<u32>,
        rows: &mut Vec<(u64, f64, Vec<u32>)>,
    ) -> bool {
        if rows.len() >= cap {
            return false;
        }
        rows.push((n, rv, stack.clone()));
        for i in start..primes.len() {
            let p = primes[i];
            match n.checked_mul(p) {
                Some(m) if m <= limit => {
                    if r[i] == 0.0 {
                        continue;
                    }
                    stack.push(i as u32);
                    let ok = dfs(i + 1, m, rv * r[i], primes, r, limit, cap, stack, rows);
                    stack.pop();
                    if !ok {
                        return false;
                    }
                }
                _ => break,
            }
        }
        true
    }
    if limit >= 1 && !dfs(0, 1, 1.0, primes, r, limit, cap, &mut stack, &mut rows) {
        return Err(Error::SupportTooLarge { cap, z });
    }
    rows.sort_by_key(|row| row.0);
    let mut s = Support {
        offsets: vec![0],
        ..Default::default()
    };
    for (n, rv, f) in rows {
        s.n.push(n);
        s.r.push(rv);
        s.factors.extend(f);
        s.offsets.push(s.factors.len() as u32);
    }
    Ok(s)
}

/// ε_p = -sgn(S(x/p)) over 𝒫⁺, evaluated through `s_of_y`.
pub fn assign_signs<F>(table: &CoefficientTable, mut s_of_y: F) -> Result<SignState>
where
    F: FnMut(f64) -> Result<f64>,
{
    let x = table.params().x;
    let mut s_values = Vec::with_capacity(table.pplus().len());
    for &p in table.pplus() {
        s_values.push(s_of_y(x / p as f64)?);
    }
    let epsilon = s_values.iter().map(|&s| sign_from_value(s)).collect();
    Ok(SignState {
        primes: table.pplus().to_vec(),
        s_values,
        epsilon,
    })
}
