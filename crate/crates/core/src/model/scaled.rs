//! Nonnegative numbers stored as `mantissa * 2^exp` with an `i64` exponent.
//!
//! Joint probabilities over a few hundred variables routinely fall below
//! 1e-300, outside the range of a bare `f64`. Potentials therefore carry a
//! shared power-of-two scale, and every probability or bound that leaves the
//! table layer is reported as a [`ScaledValue`]. Comparisons go through the
//! (exponent, mantissa) pair, so no ratio or difference of two bounds can
//! overflow.

use std::cmp::Ordering;
use std::fmt;

/// A finite nonnegative value `mantissa * 2^exp`.
///
/// Nonzero values are kept normalized with the mantissa in `[1, 2)`; zero is
/// canonically `(0.0, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledValue {
    mantissa: f64,
    exp: i64,
}

/// 2^k as an f64, saturating to 0 and infinity outside the representable range.
pub(crate) fn pow2(k: i64) -> f64 {
    if k < -1074 {
        0.0
    } else if k < -1022 {
        // subnormal powers of two are exact
        f64::from_bits(1u64 << (k + 1074))
    } else if k <= 1023 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        f64::INFINITY
    }
}

impl ScaledValue {
    pub fn zero() -> Self {
        ScaledValue { mantissa: 0.0, exp: 0 }
    }

    pub fn one() -> Self {
        ScaledValue { mantissa: 1.0, exp: 0 }
    }

    /// Decomposes a finite nonnegative `f64` exactly.
    pub fn from_f64(x: f64) -> Self {
        assert!(
            x.is_finite() && x >= 0.0,
            "scaled values must be finite and nonnegative, got {x}"
        );
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        if raw_exp == 0 {
            // subnormal: shift into the normal range first (exact)
            let normal = Self::from_f64(x * pow2(200));
            return ScaledValue { mantissa: normal.mantissa, exp: normal.exp - 200 };
        }
        let mantissa = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
        ScaledValue { mantissa, exp: raw_exp - 1023 }
    }

    /// Interprets a table entry under a potential's scale exponent.
    pub fn from_parts(entry: f64, scale_exp: i64) -> Self {
        let mut v = Self::from_f64(entry);
        if !v.is_zero() {
            v.exp += scale_exp;
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut m = self.mantissa * other.mantissa; // in [1, 4)
        let mut e = self.exp + other.exp;
        if m >= 2.0 {
            m *= 0.5;
            e += 1;
        }
        ScaledValue { mantissa: m, exp: e }
    }

    pub fn mul_f64(self, f: f64) -> Self {
        self.mul(Self::from_f64(f))
    }

    /// `self / other`; panics if `other` is zero.
    pub fn div(self, other: Self) -> Self {
        assert!(!other.is_zero(), "division of a scaled value by zero");
        if self.is_zero() {
            return Self::zero();
        }
        let mut m = self.mantissa / other.mantissa; // in (0.5, 2)
        let mut e = self.exp - other.exp;
        if m < 1.0 {
            m *= 2.0;
            e -= 1;
        }
        ScaledValue { mantissa: m, exp: e }
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        let m = hi.mantissa + lo.mantissa * pow2(lo.exp - hi.exp);
        let mut v = Self::from_f64(m);
        v.exp += hi.exp;
        v
    }

    /// `max(self - other, 0)`.
    pub fn sub_clamped(self, other: Self) -> Self {
        if other >= self {
            return Self::zero();
        }
        let m = self.mantissa - other.mantissa * pow2(other.exp - self.exp);
        if m <= 0.0 {
            return Self::zero();
        }
        let mut v = Self::from_f64(m);
        v.exp += self.exp;
        v
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn log2(&self) -> Option<f64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp as f64 + self.mantissa.log2())
        }
    }

    pub fn log10(&self) -> Option<f64> {
        self.log2().map(|l| l * std::f64::consts::LOG10_2)
    }

    /// Collapses to a plain `f64`, saturating on exponent overflow in either
    /// direction (tiny values become 0, huge ones become infinity).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.mantissa * pow2(self.exp)
        }
    }

    /// True when `|self - other| <= rel_tol * max(self, other)`.
    pub fn rel_close(self, other: Self, rel_tol: f64) -> bool {
        if self == other {
            return true;
        }
        let hi = self.max(other);
        let lo = if self >= other { other } else { self };
        hi.sub_clamped(lo) <= hi.mul_f64(rel_tol)
    }

    /// True when `self <= other * (1 + rel_slack)`.
    pub fn le_within(self, other: Self, rel_slack: f64) -> bool {
        self <= other.mul_f64(1.0 + rel_slack)
    }
}

impl PartialEq for ScaledValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScaledValue {}

impl PartialOrd for ScaledValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScaledValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exp
                .cmp(&other.exp)
                .then(self.mantissa.partial_cmp(&other.mantissa).expect("mantissa is never NaN")),
        }
    }
}

impl fmt::Display for ScaledValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let plain = self.to_f64();
        if plain.is_finite() && plain != 0.0 {
            write!(f, "{plain}")
        } else {
            // outside f64 range: render from the base-10 logarithm
            let l = self.log10().expect("nonzero value has a logarithm");
            let e = l.floor();
            write!(f, "{:.6}e{}", 10f64.powf(l - e), e as i64)
        }
    }
}
