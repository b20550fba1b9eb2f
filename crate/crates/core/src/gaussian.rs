//! Exact arithmetic in the ring of Gaussian integers `Z[i]`.
//!
//! Components are `i64`. Every ring operation is checked: overflow surfaces as
//! [`Error::Overflow`] instead of wrapping. The operator impls (`+`, `-`, `*`)
//! are convenience wrappers that panic on overflow; library code paths use the
//! `checked_*` forms.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

/// A Gaussian integer `re + im·i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

/// Selector for [`ring_op`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Conj,
    Norm,
}

/// Result of [`ring_op`]: a ring element, or an integer for `Norm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingValue {
    Element(GaussianInt),
    Integer(i64),
}

/// Dispatches one of the basic ring operations. `Conj` and `Norm` ignore `b`.
pub fn ring_op(a: GaussianInt, b: GaussianInt, op: RingOp) -> Result<RingValue> {
    Ok(match op {
        RingOp::Add => RingValue::Element(a.checked_add(b)?),
        RingOp::Sub => RingValue::Element(a.checked_sub(b)?),
        RingOp::Mul => RingValue::Element(a.checked_mul(b)?),
        RingOp::Conj => RingValue::Element(a.conj()),
        RingOp::Norm => RingValue::Integer(a.norm()?),
    })
}

/// `⌊(2p + d) / 2d⌋`, i.e. `p/d` rounded half up, for `d > 0`.
fn round_half_up_ratio(p: i128, d: i128) -> i128 {
    (2 * p + d).div_euclid(2 * d)
}

fn to_i64(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(what))
}

impl GaussianInt {
    pub const ZERO: Self = Self { re: 0, im: 0 };
    pub const ONE: Self = Self { re: 1, im: 0 };
    pub const I: Self = Self { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: i64) -> Self {
        Self { re, im: 0 }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    /// True for the four units `±1, ±i`.
    pub fn is_unit(self) -> bool {
        self.re.unsigned_abs() + self.im.unsigned_abs() == 1
    }

    pub fn is_real(self) -> bool {
        self.im == 0
    }

    pub fn checked_add(self, o: Self) -> Result<Self> {
        Ok(Self {
            re: self.re.checked_add(o.re).ok_or(Error::Overflow("add"))?,
            im: self.im.checked_add(o.im).ok_or(Error::Overflow("add"))?,
        })
    }

    pub fn checked_sub(self, o: Self) -> Result<Self> {
        Ok(Self {
            re: self.re.checked_sub(o.re).ok_or(Error::Overflow("sub"))?,
            im: self.im.checked_sub(o.im).ok_or(Error::Overflow("sub"))?,
        })
    }

    pub fn checked_mul(self, o: Self) -> Result<Self> {
        let (a, b, c, d) = (self.re as i128, self.im as i128, o.re as i128, o.im as i128);
        Ok(Self {
            re: to_i64(a * c - b * d, "mul")?,
            im: to_i64(a * d + b * c, "mul")?,
        })
    }

    pub fn checked_neg(self) -> Result<Self> {
        Ok(Self {
            re: self.re.checked_neg().ok_or(Error::Overflow("neg"))?,
            im: self.im.checked_neg().ok_or(Error::Overflow("neg"))?,
        })
    }

    pub fn checked_scale(self, k: i64) -> Result<Self> {
        self.checked_mul(Self::real(k))
    }

    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    /// `re² + im²`.
    pub fn norm(self) -> Result<i64> {
        let (a, b) = (self.re as i128, self.im as i128);
        to_i64(a * a + b * b, "norm")
    }

    pub fn abs(self) -> f64 {
        (self.re as f64).hypot(self.im as f64)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }

    /// `self · conj(m)` and `norm(m)` in i128, the exact numerator and
    /// denominator of `self / m`.
    fn ratio_parts(self, m: Self) -> Result<(i128, i128, i128)> {
        if m.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (a, b, c, d) = (self.re as i128, self.im as i128, m.re as i128, m.im as i128);
        Ok((a * c + b * d, b * c - a * d, c * c + d * d))
    }

    /// Rounded quotient `[self / m]`, each component rounded half up
    /// (`-1/2 ≤ x - [x] < 1/2`). Exact: no floating point involved.
    pub fn div_round(self, m: Self) -> Result<Self> {
        let (p, q, d) = self.ratio_parts(m)?;
        Ok(Self {
            re: to_i64(round_half_up_ratio(p, d), "div_round")?,
            im: to_i64(round_half_up_ratio(q, d), "div_round")?,
        })
    }

    /// Floor quotient `⌊self / m⌋`, componentwise. Exact.
    pub fn div_floor(self, m: Self) -> Result<Self> {
        let (p, q, d) = self.ratio_parts(m)?;
        Ok(Self {
            re: to_i64(p.div_euclid(d), "div_floor")?,
            im: to_i64(q.div_euclid(d), "div_floor")?,
        })
    }

    /// Remainder of rounded division, `self - m·[self/m]`. Satisfies
    /// `norm(r) ≤ norm(m)/2`.
    pub fn rem_round(self, m: Self) -> Result<Self> {
        let q = self.div_round(m)?;
        self.checked_sub(m.checked_mul(q)?)
    }

    /// Floor-modulo `self - m·⌊self/m⌋`: the representative in the
    /// fundamental region `F_m`. Exact counterpart of [`crate::mod_c`].
    pub fn rem_floor(self, m: Self) -> Result<Self> {
        let q = self.div_floor(m)?;
        self.checked_sub(m.checked_mul(q)?)
    }

    /// True if `m` divides `self` exactly.
    pub fn is_divisible_by(self, m: Self) -> Result<bool> {
        let (p, q, d) = self.ratio_parts(m)?;
        Ok(p % d == 0 && q % d == 0)
    }

    /// The unit `u` such that `u · self` has `re > 0, im ≥ 0`.
    /// Returns 1 for zero.
    pub fn normalizing_unit(self) -> Self {
        let (a, b) = (self.re, self.im);
        if a > 0 && b >= 0 || self.is_zero() {
            Self::ONE
        } else if b > 0 && a <= 0 {
            Self::new(0, -1)
        } else if a < 0 && b <= 0 {
            Self::new(-1, 0)
        } else {
            Self::I
        }
    }

    /// First-quadrant associate: `re > 0, im ≥ 0`.
    pub fn normalized(self) -> Self {
        self * self.normalizing_unit()
    }

    /// Greatest common divisor, normalized to the first-quadrant associate.
    pub fn gcd(self, other: Self) -> Result<Self> {
        if self.is_zero() && other.is_zero() {
            return Err(Error::InvalidInput("gcd(0, 0) is undefined".into()));
        }
        let (mut a, mut b) = (self, other);
        while !b.is_zero() {
            let r = a.rem_round(b)?;
            a = b;
            b = r;
        }
        Ok(a.normalized())
    }

    /// Extended Euclid: returns `(g, u, v)` with `u·self + v·other = g`,
    /// `g = gcd(self, other)`.
    pub fn extended_gcd(self, other: Self) -> Result<(Self, Self, Self)> {
        if self.is_zero() && other.is_zero() {
            return Err(Error::InvalidInput("gcd(0, 0) is undefined".into()));
        }
        let (mut r0, mut r1) = (self, other);
        let (mut s0, mut s1) = (Self::ONE, Self::ZERO);
        let (mut t0, mut t1) = (Self::ZERO, Self::ONE);
        while !r1.is_zero() {
            let q = r0.div_round(r1)?;
            let r2 = r0.checked_sub(q.checked_mul(r1)?)?;
            let s2 = s0.checked_sub(q.checked_mul(s1)?)?;
            let t2 = t0.checked_sub(q.checked_mul(t1)?)?;
            (r0, r1) = (r1, r2);
            (s0, s1) = (s1, s2);
            (t0, t1) = (t1, t2);
        }
        let unit = r0.normalizing_unit();
        let (g, u, v) = (
            r0.checked_mul(unit)?,
            s0.checked_mul(unit)?,
            t0.checked_mul(unit)?,
        );
        let lhs = u.checked_mul(self)?.checked_add(v.checked_mul(other)?)?;
        if lhs != g {
            return Err(Error::Overflow("extended_gcd identity"));
        }
        Ok((g, u, v))
    }

    /// `x` with `self·x ≡ 1 (mod m)`, reduced into `F_m`.
    pub fn mod_inverse(self, m: Self) -> Result<Self> {
        if m.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (g, u, _) = self.extended_gcd(m)?;
        if !g.is_unit() {
            return Err(Error::NoInverse { a: self, m });
        }
        // g is normalized, so a unit g is exactly 1.
        u.rem_floor(m)
    }

    pub fn is_coprime(self, other: Self) -> Result<bool> {
        Ok(self.gcd(other)?.norm()? == 1)
    }
}

impl Add for GaussianInt {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.checked_add(o).expect("Gaussian integer overflow")
    }
}

impl Sub for GaussianInt {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.checked_sub(o).expect("Gaussian integer overflow")
    }
}

impl Mul for GaussianInt {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.checked_mul(o).expect("Gaussian integer overflow")
    }
}

impl Neg for GaussianInt {
    type Output = Self;
    fn neg(self) -> Self {
        self.checked_neg().expect("Gaussian integer overflow")
    }
}

impl From<i64> for GaussianInt {
    fn from(re: i64) -> Self {
        Self::real(re)
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let imag = |v: i64| match v {
            1 => "i".to_string(),
            -1 => "-i".to_string(),
            v => format!("{v}i"),
        };
        match (self.re, self.im) {
            (re, 0) => write!(f, "{re}"),
            (0, im) => write!(f, "{}", imag(im)),
            (re, im) if im > 0 => write!(f, "{re}+{}", imag(im)),
            (re, im) => write!(f, "{re}{}", imag(im)),
        }
    }
}

/// Splits a complex literal such as `"3-4i"`, `"-2.5i"`, `"7"` into its real
/// and imaginary text parts. Accepts whitespace and the Unicode minus sign.
pub(crate) fn split_complex_literal(s: &str) -> Option<(String, String)> {
    let t: String = s
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c == '\u{2212}' { '-' } else { c })
        .collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Some((t, "0".into()));
    };
    // The imaginary part starts at the last sign that is not the leading one
    // and not part of an exponent.
    let bytes = body.as_bytes();
    let mut split = 0;
    for (k, &c) in bytes.iter().enumerate().skip(1) {
        if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = k;
        }
    }
    let (re, im) = body.split_at(split);
    let im = match im {
        "" | "+" => "1".to_string(),
        "-" => "-1".to_string(),
        s => s.strip_prefix('+').unwrap_or(s).to_string(),
    };
    let re = if re.is_empty() {
        "0".to_string()
    } else {
        re.to_string()
    };
    Some((re, im))
}

impl FromStr for GaussianInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (re, im) = split_complex_literal(s).ok_or_else(|| err("empty"))?;
        let re = re.parse::<i64>().map_err(|e| err(&e.to_string()))?;
        let im = im.parse::<i64>().map_err(|e| err(&e.to_string()))?;
        Ok(Self { re, im })
    }
}

impl Serialize for GaussianInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GaussianInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(v) => Ok(Self::real(v)),
        }
    }
}
