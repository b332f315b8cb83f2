//! Integer kernels: Kronecker symbols, squarefree and prime sieves, and
//! small factorizations.

use crate::error::{Error, Result};

/// Default number of integers held by one window of a segmented sieve.
pub const DEFAULT_SIEVE_WINDOW: usize = 1 << 22;

/// Jacobi symbol (a | n) for odd positive `n`, binary algorithm.
pub fn jacobi(a: u64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1, "Jacobi symbol needs an odd modulus");
    let mut a = a % n;
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        let z = a.trailing_zeros();
        a >>= z;
        let r = n % 8;
        if z % 2 == 1 && (r == 3 || r == 5) {
            t = -t;
        }
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol (m | n) for arbitrary integers.
pub fn kronecker(m: i64, n: i64) -> i32 {
    let m = m as i128;
    let mut n = n as i128;
    if n == 0 {
        return if m == 1 || m == -1 { 1 } else { 0 };
    }
    let mut result = 1;
    if n < 0 {
        n = -n;
        if m < 0 {
            result = -1;
        }
    }
    let v = (n as u128).trailing_zeros();
    if v > 0 {
        if m % 2 == 0 {
            return 0;
        }
        let r = m.rem_euclid(8);
        if v % 2 == 1 && (r == 3 || r == 5) {
            result = -result;
        }
        n >>= v;
    }
    if n == 1 {
        return result;
    }
    let a = m.rem_euclid(n);
    result * jacobi(a as u64, n as u64)
}

/// Trial-division squarefree test.
pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

/// `true` iff `d` is a valid core for the discriminant 8d, i.e. 2d is
/// squarefree.
pub fn is_valid_core(d: u64) -> bool {
    d % 2 == 1 && is_squarefree(d)
}

/// The character n ↦ (8d | n).
pub fn chi8d(d: u64, n: u64) -> Result<i32> {
    if !is_valid_core(d) {
        return Err(Error::InvalidDiscriminant { d });
    }
    Ok(chi8d_unchecked(d, n))
}

/// As [`chi8d`] without validating `d`.
#[inline]
pub fn chi8d_unchecked(d: u64, n: u64) -> i32 {
    kronecker(8 * d as i64, n as i64)
}

/// All primes `p <= n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Segmented squarefree sieve. Holds the primes up to `sqrt(hi)` so that
/// consecutive windows of a long scan share them.
#[derive(Clone, Debug)]
pub struct SquarefreeSieve {
    base_primes: Vec<u64>,
    limit: u64,
    window: usize,
}

impl SquarefreeSieve {
    /// Sieve able to answer any window inside [1, limit].
    pub fn new(limit: u64) -> Self {
        Self::with_window(limit, DEFAULT_SIEVE_WINDOW)
    }

    pub fn with_window(limit: u64, window: usize) -> Self {
        Self {
            base_primes: primes_up_to(isqrt(limit.max(1))),
            limit,
            window: window.max(1),
        }
    }

    /// Flags `mu(n)^2` for n in [lo, hi].
    pub fn flags(&self, lo: u64, hi: u64) -> Vec<bool> {
        assert!(lo >= 1 && lo <= hi, "squarefree window needs 1 <= lo <= hi");
        assert!(hi <= self.limit, "window exceeds the sieve limit");
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        let mut start = lo;
        while start <= hi {
            let end = hi.min(start + self.window as u64 - 1);
            let mut seg = vec![true; (end - start + 1) as usize];
            for &p in &self.base_primes {
                let q = p * p;
                if q > end {
                    break;
                }
                let mut k = start.div_ceil(q) * q;
                while k <= end {
                    seg[(k - start) as usize] = false;
                    k += q;
                }
            }
            out.extend_from_slice(&seg);
            start = end + 1;
        }
        out
    }
}

/// Indicator of squarefree n for n in [lo, hi].
pub fn squarefree_sieve(lo: u64, hi: u64) -> Vec<bool> {
    SquarefreeSieve::new(hi).flags(lo, hi)
}

/// Primes in the half-open real interval [lo, hi).
pub fn primes_in(lo: f64, hi: f64) -> Vec<u64> {
    assert!(lo >= 2.0 && lo <= hi, "primes_in needs 2 <= lo <= hi");
    let first = lo.ceil() as u64;
    // integers strictly below hi
    let last = (hi.ceil() as u64).saturating_sub(1);
    if last < first {
        return Vec::new();
    }
    let base = primes_up_to(isqrt(last));
    let mut out = Vec::new();
    let mut start = first;
    let window = DEFAULT_SIEVE_WINDOW as u64;
    while start <= last {
        let end = last.min(start + window - 1);
        let mut seg = vec![true; (end - start + 1) as usize];
        for &p in &base {
            if p * p > end {
                break;
            }
            let mut k = (start.div_ceil(p) * p).max(p * p);
            while k <= end {
                seg[(k - start) as usize] = false;
                k += p;
            }
        }
        for (i, &is_p) in seg.iter().enumerate() {
            let n = start + i as u64;
            if is_p && n >= 2 {
                out.push(n);
            }
        }
        start = end + 1;
    }
    out
}

/// Positive integer with its prime factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredInteger {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredInteger {
    /// Factor by trial division.
    pub fn new(n: u64) -> Self {
        assert!(n >= 1, "FactoredInteger needs n >= 1");
        let mut m = n;
        let mut factors = Vec::new();
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            factors.push((m, 1));
        }
        Self { n, factors }
    }

    /// Build from (prime, exponent) pairs; primes must be strictly increasing.
    pub fn from_factors(factors: Vec<(u64, u32)>) -> Result<Self> {
        let mut n: u64 = 1;
        let mut prev = 1;
        for &(p, e) in &factors {
            if p <= prev || e == 0 {
                return Err(Error::InvalidArgument(
                    "factors must have strictly increasing primes and positive exponents".into(),
                ));
            }
            prev = p;
            n = n
                .checked_mul(p.checked_pow(e).ok_or_else(|| Error::InvalidArgument("overflow".into()))?)
                .ok_or_else(|| Error::InvalidArgument("overflow".into()))?;
        }
        Ok(Self { n, factors })
    }

    /// Squarefree integer from distinct increasing primes.
    pub fn from_primes(primes: &[u64]) -> Self {
        let n = primes.iter().product();
        Self {
            n,
            factors: primes.iter().map(|&p| (p, 1)).collect(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    pub fn divides(&self, p: u64) -> bool {
        self.factors.iter().any(|&(q, _)| q == p)
    }
}

/// Number of divisors.
pub fn divisor_count(n: &FactoredInteger) -> u64 {
    n.factors().iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Smallest-prime-factor table on [0, limit].
#[derive(Clone, Debug)]
pub struct SmallestPrimeFactor {
    spf: Vec<u32>,
}

impl SmallestPrimeFactor {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    /// Smallest prime factor of `n` (n >= 2).
    #[inline]
    pub fn get(&self, n: usize) -> usize {
        self.spf[n] as usize
    }

    /// Distinct prime factors of `n`, increasing.
    pub fn distinct_primes(&self, mut n: usize) -> Vec<u64> {
        let mut out = Vec::new();
        while n > 1 {
            let p = self.get(n);
            out.push(p as u64);
            while n % p == 0 {
                n /= p;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn euler_criterion(m: i64, p: u64) -> i32 {
        let a = m.rem_euclid(p as i64) as u64;
        if a == 0 {
            return 0;
        }
        let mut base = a as u128;
        let mut e = (p - 1) / 2;
        let mut acc: u128 = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p as u128;
            }
            base = base * base % p as u128;
            e >>= 1;
        }
        if acc == 1 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(8, 1), 1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(euler_criterion(8, 3), -1);
        assert_eq!(kronecker(24, 5), 1);
        assert_eq!(euler_criterion(24, 5), 1);
        assert_eq!(kronecker(8, 2), 0);
    }

    #[test]
    fn kronecker_signs_and_edges() {
        assert_eq!(kronecker(5, 0), 0);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(-3, -1), -1);
        assert_eq!(kronecker(3, -1), 1);
        assert_eq!(kronecker(-1, 3), -1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(-7, 2), 1);
        assert_eq!(kronecker(6, 9), 0);
    }

    #[test]
    fn chi8d_examples() {
        assert_eq!(chi8d(1, 9).unwrap(), 1);
        assert_eq!(chi8d(3, 24).unwrap(), 0);
        assert_eq!(chi8d(5, 7).unwrap(), -1);
        assert_eq!(euler_criterion(40, 7), -1);
        assert!(matches!(chi8d(9, 5), Err(Error::InvalidDiscriminant { d: 9 })));
        assert!(chi8d(2, 5).is_err());
    }

    #[test]
    fn quadratic_reciprocity_small_primes() {
        let ps = primes_up_to(199);
        for &p in ps.iter().filter(|&&p| p > 2) {
            for &q in ps.iter().filter(|&&q| q > 2 && q != p) {
                let lhs = kronecker(p as i64, q as i64) * kronecker(q as i64, p as i64);
                let rhs = if ((p - 1) / 2 * ((q - 1) / 2)) % 2 == 0 { 1 } else { -1 };
                assert_eq!(lhs, rhs, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn chi8d_on_squares_is_coprimality() {
        for d in (1..500u64).filter(|&d| is_valid_core(d)) {
            for k in 1..23u64 {
                let n = k * k;
                if n >= 500 {
                    break;
                }
                let coprime = gcd(n, 8 * d) == 1;
                assert_eq!(chi8d(d, n).unwrap(), coprime as i32, "d={d} n={n}");
            }
        }
    }

    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }

    #[test]
    fn squarefree_examples() {
        let f = squarefree_sieve(1, 10);
        let set: Vec<u64> = (1..=10).filter(|&n| f[n as usize - 1]).collect();
        assert_eq!(set, vec![1, 2, 3, 5, 6, 7, 10]);
        assert_eq!(squarefree_sieve(49, 49), vec![false]);
        assert_eq!(squarefree_sieve(1, 1), vec![true]);
    }

    #[test]
    fn small_windows_match_default() {
        let a = SquarefreeSieve::with_window(5000, 7).flags(1000, 5000);
        let b = squarefree_sieve(1000, 5000);
        assert_eq!(a, b);
    }

    #[test]
    fn primes_in_examples() {
        let p = primes_in(37.7, 161.0);
        assert_eq!(p.first(), Some(&41));
        assert_eq!(p.get(1), Some(&43));
        assert_eq!(p.last(), Some(&157));
        let oracle: Vec<u64> = (38..161).filter(|&n| FactoredInteger::new(n).factors() == [(n, 1)]).collect();
        assert_eq!(p, oracle);
        assert!(primes_in(4.0, 5.0).is_empty());
        assert_eq!(primes_in(2.0, 3.0), vec![2]);
        assert!(primes_in(2.0, 2.0).is_empty());
    }

    #[test]
    fn divisor_count_examples() {
        assert_eq!(divisor_count(&FactoredInteger::new(1)), 1);
        assert_eq!(divisor_count(&FactoredInteger::new(6)), 4);
        let oracle = (1..=12u64).filter(|k| 12 % k == 0).count() as u64;
        assert_eq!(divisor_count(&FactoredInteger::new(12)), oracle);
        assert_eq!(oracle, 6);
    }

    #[test]
    fn factored_integer_invariants() {
        for n in 1..2000u64 {
            let f = FactoredInteger::new(n);
            let prod: u64 = f.factors().iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
            assert!(f.factors().windows(2).all(|w| w[0].0 < w[1].0));
        }
        assert!(FactoredInteger::from_factors(vec![(3, 1), (2, 1)]).is_err());
        assert_eq!(FactoredInteger::from_factors(vec![(2, 2), (3, 1)]).unwrap().n(), 12);
    }

    #[test]
    fn spf_distinct_primes() {
        let spf = SmallestPrimeFactor::new(1000);
        assert_eq!(spf.distinct_primes(360), vec![2, 3, 5]);
        assert_eq!(spf.distinct_primes(997), vec![997]);
        assert!(spf.distinct_primes(1).is_empty());
    }

    proptest! {
        #[test]
        fn kronecker_is_multiplicative(m in -1_000_000i64..1_000_000, a in 1i64..1_000_000, b in 1i64..1_000_000) {
            prop_assert_eq!(kronecker(m, a * b), kronecker(m, a) * kronecker(m, b));
        }

        #[test]
        fn kronecker_zero_iff_common_factor(m in -100_000i64..100_000, n in 1i64..100_000) {
            let g = gcd(m.unsigned_abs(), n as u64);
            prop_assert_eq!(kronecker(m, n) == 0, g != 1);
        }

        #[test]
        fn squarefree_window_matches_trial_division(lo in 1u64..200_000, len in 0u64..3000) {
            let hi = lo + len;
            let flags = squarefree_sieve(lo, hi);
            for (i, &f) in flags.iter().enumerate() {
                prop_assert_eq!(f, is_squarefree(lo + i as u64));
            }
        }
    }
}
