//! Floating-point modulo arithmetic for complex numbers against a
//! Gaussian-integer modulus.
//!
//! `mod_c` reduces into the fundamental region `F_M = {M(a+bi): 0 ≤ a,b < 1}`
//! and `circ_dist` returns the wrapped difference in the centered region
//! `S_M = {M(c+di): -1/2 ≤ c,d < 1/2}`. Coordinates relative to `M` are
//! computed as `z·conj(M)/|M|²`, which is exact for lattice inputs of
//! moderate size. Coordinates within [`COORD_SNAP`] of the next integer
//! boundary are snapped onto it so noise-free inputs follow the half-open
//! conventions exactly.

use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;
use num_complex::Complex64;

pub type ComplexVal = Complex64;

/// Absolute tolerance on coordinates `z/M` for snapping onto integers.
pub const COORD_SNAP: f64 = 1e-9;

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < COORD_SNAP {
        r
    } else {
        x
    }
}

fn to_int(x: f64, what: &'static str) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(what));
    }
    if x.abs() >= 9.0e18 {
        return Err(Error::Overflow(what));
    }
    Ok(x as i64)
}

/// `⌊x⌋` with snapping.
pub fn floor_snapped(x: f64) -> f64 {
    snap(x).floor()
}

/// `[x] = ⌊x + 1/2⌋`, so that `-1/2 ≤ x - [x] < 1/2`.
pub fn round_half_up(x: f64) -> f64 {
    snap(x + 0.5).floor()
}

/// Componentwise floor `⌊Re z⌋ + ⌊Im z⌋ i`.
pub fn floor_c(z: ComplexVal) -> Result<GaussianInt> {
    Ok(GaussianInt::new(
        to_int(z.re.floor(), "floor_c")?,
        to_int(z.im.floor(), "floor_c")?,
    ))
}

/// Componentwise rounding `[z]`.
pub fn round_c(z: ComplexVal) -> Result<GaussianInt> {
    Ok(GaussianInt::new(
        to_int(round_half_up(z.re), "round_c")?,
        to_int(round_half_up(z.im), "round_c")?,
    ))
}

/// Coordinates `(a, b)` with `z = M(a + bi)`.
pub fn coordinates(z: ComplexVal, m: GaussianInt) -> Result<(f64, f64)> {
    if m.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite("coordinates"));
    }
    let (c, d) = (m.re as f64, m.im as f64);
    let n = c * c + d * d;
    Ok(((z.re * c + z.im * d) / n, (z.im * c - z.re * d) / n))
}

/// Rounded quotient `[n/m]` for a complex numerator.
pub fn rounded_quotient(n: ComplexVal, m: GaussianInt) -> Result<GaussianInt> {
    let (a, b) = coordinates(n, m)?;
    Ok(GaussianInt::new(
        to_int(round_half_up(a), "rounded_quotient")?,
        to_int(round_half_up(b), "rounded_quotient")?,
    ))
}

/// `⟨N⟩_M = N - M⌊N/M⌋`, the representative of `N` in `F_M`.
pub fn mod_c(n: ComplexVal, m: GaussianInt) -> Result<ComplexVal> {
    let (a, b) = coordinates(n, m)?;
    let k = GaussianInt::new(
        to_int(floor_snapped(a), "mod_c")?,
        to_int(floor_snapped(b), "mod_c")?,
    );
    Ok(n - m.to_complex() * k.to_complex())
}

/// Circular distance `d_M(x, y) = x - y - [(x-y)/M]·M`, which lies in `S_M`.
pub fn circ_dist(x: ComplexVal, y: ComplexVal, m: GaussianInt) -> Result<ComplexVal> {
    let diff = x - y;
    let k = rounded_quotient(diff, m)?;
    Ok(diff - m.to_complex() * k.to_complex())
}

/// `⟨x⟩_m` for a real modulus, always in `[0, m)`.
pub fn mod_real(x: f64, m: f64) -> f64 {
    let r = x.rem_euclid(m);
    // rem_euclid can round up to m itself for tiny negative x
    if r >= m {
        0.0
    } else {
        r
    }
}

/// Real circular distance `x - y - [(x-y)/m]·m`, in `[-m/2, m/2)`.
pub fn circ_dist_real(x: f64, y: f64, m: f64) -> f64 {
    let d = x - y;
    d - round_half_up(d / m) * m
}

/// Componentwise floor-modulo by a positive real integer modulus.
pub fn mod_real_c(z: ComplexVal, m: f64) -> ComplexVal {
    ComplexVal::new(mod_real(z.re, m), mod_real(z.im, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// `F_M`, coordinates in `[0, 1)²`.
    Fundamental,
    /// `S_M`, coordinates in `[-1/2, 1/2)²`.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub modulus: GaussianInt,
    pub kind: RegionKind,
}

impl Region {
    pub fn new(modulus: GaussianInt, kind: RegionKind) -> Result<Self> {
        if modulus.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self { modulus, kind })
    }

    pub fn fundamental(modulus: GaussianInt) -> Result<Self> {
        Self::new(modulus, RegionKind::Fundamental)
    }

    pub fn centered(modulus: GaussianInt) -> Result<Self> {
        Self::new(modulus, RegionKind::Centered)
    }

    /// Half-open membership test on the coordinates `z/M`.
    pub fn contains(&self, z: ComplexVal) -> bool {
        self.contains_with_tolerance(z, 0.0)
    }

    /// Membership with the coordinate interval widened by `tol` on both ends.
    pub fn contains_with_tolerance(&self, z: ComplexVal, tol: f64) -> bool {
        let Ok((a, b)) = coordinates(z, self.modulus) else {
            return false;
        };
        let (lo, hi) = match self.kind {
            RegionKind::Fundamental => (0.0, 1.0),
            RegionKind::Centered => (-0.5, 0.5),
        };
        let inside = |x: f64| x >= lo - tol && x < hi + tol;
        inside(a) && inside(b)
    }
}

pub fn in_region(z: ComplexVal, region: &Region) -> bool {
    region.contains(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GaussianInt {
        s.parse().unwrap()
    }
    fn c(re: f64, im: f64) -> ComplexVal {
        ComplexVal::new(re, im)
    }
    fn close(a: ComplexVal, b: ComplexVal, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn floor_fixtures() {
        assert_eq!(floor_c(c(1.04, 0.28)).unwrap(), GaussianInt::ONE);
        assert_eq!(floor_c(c(-0.5, 0.0)).unwrap(), g("-1"));
        assert_eq!(floor_c(c(-3.0, 7.0)).unwrap(), g("-3+7i"));
        assert!(floor_c(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn modulo_fixtures() {
        let n = c(2.0, 5.0);
        assert!(close(mod_c(n, g("3+4i")).unwrap(), c(-1.0, 1.0), 1e-12));
        assert!(close(mod_c(n, g("4")).unwrap(), c(2.0, 1.0), 1e-12));
        let inside = c(1.0, 2.0);
        assert_eq!(mod_c(inside, g("4")).unwrap(), inside);
        assert_eq!(mod_c(n, GaussianInt::ZERO), Err(Error::DivisionByZero));
    }

    #[test]
    fn circular_distance_fixtures() {
        let (x, y) = (c(3.0, 3.0), c(1.0, -2.0));
        assert!(close(circ_dist(x, y, g("4")).unwrap(), c(-2.0, 1.0), 1e-12));
        // Direct evaluation gives -1+i; the quotient needed for -1-i is not a
        // Gaussian integer.
        assert!(close(circ_dist(x, y, g("3+4i")).unwrap(), c(-1.0, 1.0), 1e-12));
        assert_eq!(circ_dist(x, x, g("3+4i")).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn rounded_quotient_on_complex_input() {
        assert_eq!(rounded_quotient(c(19.0, 8.0), g("3+4i")).unwrap(), g("4-2i"));
        assert_eq!(rounded_quotient(c(0.5, 0.0), g("1")).unwrap(), g("1"));
        assert_eq!(rounded_quotient(c(-0.5, 0.0), g("1")).unwrap(), g("0"));
        assert_eq!(rounded_quotient(c(5.0, 10.0), g("4+4i")).unwrap(), g("2+i"));
    }

    #[test]
    fn region_membership() {
        let m = g("3+4i");
        let f = Region::fundamental(m).unwrap();
        let s = Region::centered(m).unwrap();
        assert!(in_region(c(0.0, 0.0), &f));
        assert!(in_region(c(-1.0, 1.0), &f));
        let corner = m.to_complex() * c(0.5, 0.5);
        assert!(!in_region(corner, &s));
        assert!(in_region(-corner, &s));
        assert!(Region::fundamental(GaussianInt::ZERO).is_err());
    }

    #[test]
    fn real_helpers() {
        assert_eq!(mod_real(-0.3, 10.0), 9.7);
        assert_eq!(mod_real(-1e-30, 10.0), 0.0);
        assert_eq!(circ_dist_real(1.0, 9.0, 10.0), 2.0);
        assert_eq!(circ_dist_real(0.0, 5.0, 10.0), -5.0);
        assert_eq!(circ_dist_real(5.0, 0.0, 10.0), -5.0);
    }
}
