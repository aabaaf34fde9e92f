//! Numeric abstractions shared by the probabilistic and metric code.
//!
//! Lattice math is written against [`Real`] so it runs in `f32` or `f64`.
//! Quantities that must be exact (split fractions, mask rates, WordPiece pair
//! scores) use rationals instead of floats.

use std::fmt::Debug;
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used for log-probabilities.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Send + Sync + 'static
{
    /// Absolute tolerance under which two log-scores are treated as tied.
    fn tie_tolerance() -> Self {
        Self::epsilon().sqrt()
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp<R: Real>(a: R, b: R) -> R {
    if a == R::neg_infinity() {
        return b;
    }
    if b == R::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact fraction in `[0, 1]`.
pub type Fraction = Ratio<u64>;

/// Converts a decimal `f64` such as `0.8` or `0.15` into the nearest simple
/// fraction. Denominators are bounded so that user-facing decimals map to
/// their intended value rather than the binary float's expansion.
pub fn fraction_from_f64(value: f64) -> Option<Fraction> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return None;
    }
    const MAX_DEN: u64 = 1_000_000;
    // Smallest denominator that reproduces the decimal to ~1e-12.
    for den in 1..=MAX_DEN {
        let num = (value * den as f64).round();
        if ((num / den as f64) - value).abs() < 1e-12 {
            return Some(Ratio::new(num as u64, den));
        }
    }
    let num = (value * MAX_DEN as f64).round() as u64;
    Some(Ratio::new(num, MAX_DEN))
}

/// `floor(fraction * n)` computed exactly.
pub fn floor_scaled(fraction: Fraction, n: usize) -> usize {
    let n = n as u128;
    let num = *fraction.numer() as u128;
    let den = *fraction.denom() as u128;
    (num * n / den) as usize
}

/// `round_half_up(fraction * n)` computed exactly.
pub fn round_half_up_scaled(fraction: Fraction, n: usize) -> usize {
    let n = n as u128;
    let num = *fraction.numer() as u128;
    let den = *fraction.denom() as u128;
    ((2 * num * n + den) / (2 * den)) as usize
}

/// `ceil(fraction * n)` computed exactly.
pub fn ceil_scaled(fraction: Fraction, n: usize) -> usize {
    let n = n as u128;
    let num = *fraction.numer() as u128;
    let den = *fraction.denom() as u128;
    (num * n).div_ceil(den) as usize
}
