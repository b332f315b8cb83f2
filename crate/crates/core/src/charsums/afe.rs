//! Central values L(1/2, χ_{8d}) by the smoothed sum and by an independent
//! periodic Hurwitz decomposition.

use serde::{Deserialize, Serialize};

use crate::analytic::hurwitz_zeta_real;
use crate::arith::{chi8d_unchecked, is_valid_core, kronecker};
use crate::error::{Error, Result};
use crate::numerics::{Certified, NeumaierSum};
use crate::smoothing::{afe_weight_bound, afe_weight_v};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AfeValue {
    pub d: u64,
    pub conductor: u64,
    pub value: f64,
    /// Bound for the discarded terms n > √q log q.
    pub tail_bound: f64,
    pub terms: u64,
}

/// 2 Σ_{n <= √q log q} χ(n) n^{-1/2} V(n √(π/q)) with q = 8d.
pub fn afe_central_value(d: u64) -> Result<AfeValue> {
    if !is_valid_core(d) {
        return Err(Error::InvalidDiscriminant { d });
    }
    let q = 8 * d;
    let qf = q as f64;
    let n_max = (qf.sqrt() * qf.ln()).floor() as u64;
    let scale = (std::f64::consts::PI / qf).sqrt();
    let mut acc = NeumaierSum::new();
    for n in 1..=n_max {
        let c = chi8d_unchecked(d, n);
        if c != 0 {
            acc.add(c as f64 * afe_weight_v(n as f64 * scale) / (n as f64).sqrt());
        }
    }
    // Σ_{n > N} n^{-1/2} V(n√(π/q)) with V monotone, bounded termwise until
    // the terms drop below 1e-30 (geometric decay past that point)
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let t = afe_weight_bound(n as f64 * scale).min(1.0) / (n as f64).sqrt();
        tail += t;
        if t < 1e-30 * tail.max(1e-300) || t == 0.0 || n > n_max + 1_000_000 {
            break;
        }
        n += 1;
    }
    Ok(AfeValue {
        d,
        conductor: q,
        value: 2.0 * acc.value(),
        tail_bound: 2.0 * tail,
        terms: n_max,
    })
}

/// q^{-1/2} Σ_{a=1}^{q} χ(a) ζ(1/2, a/q).
pub fn afe_oracle(d: u64) -> Result<Certified<f64>> {
    if !is_valid_core(d) {
        return Err(Error::InvalidDiscriminant { d });
    }
    let q = 8 * d;
    let mut acc = NeumaierSum::new();
    let mut err = 0.0;
    for a in 1..q {
        let c = kronecker(q as i64, a as i64);
        if c == 0 {
            continue;
        }
        let h = hurwitz_zeta_real(0.5, a as f64 / q as f64);
        acc.add(c as f64 * h.value);
        err += h.error + 4.0 * f64::EPSILON * h.value.abs();
    }
    let norm = 1.0 / (q as f64).sqrt();
    Ok(Certified::new(acc.value() * norm, (err + acc.error_bound()) * norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conductor_eight() {
        let v = afe_central_value(1).unwrap();
        let o = afe_oracle(1).unwrap();
        assert!((v.value - 0.373_691_712_912_547_3).abs() < 1e-7);
        assert!((o.value - 0.373_691_712_912_547_3).abs() < 1e-12);
        assert!(v.tail_bound < 1e-6);
        assert!(afe_central_value(2).is_err());
        assert!(afe_oracle(9).is_err());
    }

    #[test]
    fn small_conductors_agree() {
        for d in (1..200).filter(|&d| is_valid_core(d)) {
            let v = afe_central_value(d).unwrap();
            let o = afe_oracle(d).unwrap();
            assert!((v.value - o.value).abs() < 1e-6, "d={d}");
            assert!(v.value > -1e-6);
        }
    }
}
