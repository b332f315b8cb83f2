//! Dirichlet-series side: ζ, the factors G and H, contour evaluation of S
//! and the resonance checks.

pub mod checks;
pub mod contour;
pub mod series;
pub mod zeta;

pub use contour::{residue_at_zero, s_via_contour, two_contour_check, ContourConfig, ContourEvaluator, ContourValue, TwoContourReport};
pub use series::{prime_tail_bound, SeriesFactorization};
pub use zeta::{hurwitz_zeta_real, zeta};
