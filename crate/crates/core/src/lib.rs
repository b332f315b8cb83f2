pub mod arith;
pub mod error;
pub mod numerics;
pub mod smoothing;
pub mod resonator;
pub mod analytic;
pub mod charsums;
pub mod sieve;
pub mod cli;
