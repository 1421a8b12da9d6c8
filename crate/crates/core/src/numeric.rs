//! Scalar types shared by every engine.
//!
//! Construction and validation of piecewise-linear trajectories run in exact
//! rational arithmetic ([`Rational`]). Everything that needs square roots
//! (ball geometry, event prediction) runs over a [`Real`]: plain `f64` or the
//! binary floating point type [`Wide`] with a compile-time mantissa width.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_base::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

/// An ordered field with the handful of conversions the engines need.
pub trait Field:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// `true` when arithmetic is exact, so comparisons need no tolerance.
    const EXACT: bool;
    /// Mantissa bits; `0` for exact types.
    const PRECISION_BITS: u32;

    fn from_i64(v: i64) -> Self;
    /// Exact conversion of the binary value of `v` where the type allows it.
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Round-trippable textual form.
    fn to_repr(&self) -> String;
    fn parse_repr(s: &str) -> Option<Self>;

    /// Nearest value to an exact rational.
    fn from_rational(r: &Rational) -> Self {
        let p = Self::parse_repr(&r.numer().to_string()).expect("integer literal");
        let q = Self::parse_repr(&r.denom().to_string()).expect("integer literal");
        p / q
    }

    /// A tolerance calibrated for double precision, rescaled to this type's
    /// mantissa width (zero for exact types).
    fn scaled_tol(base: f64) -> Self {
        if Self::EXACT {
            return Self::zero();
        }
        let extra = Self::PRECISION_BITS.saturating_sub(53).min(900) as i32;
        Self::from_f64(base) * Self::from_f64(2f64.powi(-extra))
    }

    /// Time gap under which two predicted events count as simultaneous.
    fn tie_tolerance() -> Self {
        Self::scaled_tol(1e-12)
    }

    fn zero() -> Self {
        Self::from_i64(0)
    }

    fn one() -> Self {
        Self::from_i64(1)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn is_zero_value(&self) -> bool {
        *self == Self::zero()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// Total order that treats incomparable values (NaN) as equal.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

/// A field with square roots (approximate by nature).
pub trait Real: Field {
    fn sqrt(&self) -> Self;
}

impl Field for f64 {
    const EXACT: bool = false;
    const PRECISION_BITS: u32 = 53;

    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_repr(&self) -> String {
        // `{:?}` prints the shortest string that parses back to the same bits.
        format!("{self:?}")
    }
    fn parse_repr(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Real for f64 {
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

impl Field for Rational {
    const EXACT: bool = true;
    const PRECISION_BITS: u32 = 0;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_f64(v: f64) -> Self {
        Rational::from_float(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_repr(&self) -> String {
        self.to_string()
    }
    fn parse_repr(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero_value(&self) -> bool {
        Zero::is_zero(self)
    }
}

type Inner = FBig<HalfEven, 2>;

/// Binary floating point number with a `BITS`-bit mantissa, rounding half to
/// even after every operation.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Wide<const BITS: usize>(Inner);

/// The quad-and-a-bit precision used for ill-conditioned verification runs.
pub type Wide128 = Wide<128>;
pub type Wide256 = Wide<256>;

impl<const BITS: usize> Wide<BITS> {
    fn wrap(v: Inner) -> Self {
        Wide(v.with_precision(BITS).value())
    }

    fn decimal_digits() -> usize {
        // ceil(BITS * log10(2)) plus two guard digits
        (BITS as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
    }
}

impl<const BITS: usize> Debug for Wide<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_repr())
    }
}

impl<const BITS: usize> Display for Wide<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_repr())
    }
}

macro_rules! wide_binop {
    ($tr:ident, $m:ident) => {
        impl<const BITS: usize> $tr for Wide<BITS> {
            type Output = Self;
            fn $m(self, rhs: Self) -> Self {
                Wide::wrap($tr::$m(self.0, rhs.0))
            }
        }
    };
}

wide_binop!(Add, add);
wide_binop!(Sub, sub);
wide_binop!(Mul, mul);
wide_binop!(Div, div);

impl<const BITS: usize> Neg for Wide<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        Wide(-self.0)
    }
}

impl<const BITS: usize> Field for Wide<BITS> {
    const EXACT: bool = false;
    const PRECISION_BITS: u32 = BITS as u32;

    fn from_i64(v: i64) -> Self {
        Wide::wrap(Inner::from(v))
    }
    fn from_f64(v: f64) -> Self {
        Wide::wrap(Inner::try_from(v).expect("finite float"))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn to_repr(&self) -> String {
        let dec = self
            .0
            .clone()
            .with_base_and_precision::<10>(Self::decimal_digits())
            .value();
        dec.to_string()
    }
    fn parse_repr(s: &str) -> Option<Self> {
        let dec = FBig::<HalfEven, 10>::from_str(s.trim()).ok()?;
        Some(Wide(dec.with_base_and_precision::<2>(BITS).value()))
    }
}

impl<const BITS: usize> Real for Wide<BITS> {
    fn sqrt(&self) -> Self {
        Wide::wrap(self.0.sqrt())
    }
}

/// Euclidean inner product of two equally long slices.
pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn convert_vec<S: Field, T: Field>(v: &[S]) -> Vec<T> {
    v.iter().map(|x| T::from_f64(x.to_f64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_sqrt_beats_double() {
        let two = Wide128::from_i64(2);
        let r = two.sqrt();
        let err = (r.clone() * r - two).abs();
        assert!(err < Wide128::from_f64(1e-35));
    }

    #[test]
    fn rationals_convert_to_nearest() {
        let third = Rational::from_ratio(1, 3);
        assert_eq!(f64::from_rational(&third), 1.0 / 3.0);
        let w = Wide128::from_rational(&third);
        assert_eq!(w, Wide128::from_i64(1) / Wide128::from_i64(3));
        assert_eq!(Rational::from_rational(&third), third);
    }

    #[test]
    fn wide_repr_round_trip() {
        let x = Wide128::from_i64(1) / Wide128::from_i64(3);
        let back = Wide128::parse_repr(&x.to_repr()).unwrap();
        assert_eq!(x, back);
        let y = Wide256::from_f64(-0.1) / Wide256::from_i64(7);
        assert_eq!(Wide256::parse_repr(&y.to_repr()).unwrap(), y);
    }

    #[test]
    fn f64_repr_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            assert_eq!(f64::parse_repr(&x.to_repr()), Some(x));
        }
    }

    #[test]
    fn rational_is_exact() {
        let a = Rational::from_ratio(1, 3);
        let b = Rational::from_ratio(2, 3);
        assert_eq!(a + b, Rational::one());
        assert_eq!(Rational::from_f64(0.5), Rational::from_ratio(1, 2));
        assert_eq!(Rational::parse_repr("-3/4"), Some(Rational::from_ratio(-3, 4)));
    }

    #[test]
    fn tie_tolerance_shrinks_with_precision() {
        assert!(Wide128::tie_tolerance().to_f64() < 1e-30);
        assert!(Rational::tie_tolerance().is_zero_value());
    }
}
