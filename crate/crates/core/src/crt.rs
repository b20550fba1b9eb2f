//! Exact reconstruction from error-free remainders.
//!
//! The moduli are `M·Γ_i` with `M ≥ 1` a positive integer and `Γ_i` pairwise
//! coprime Gaussian integers whose product `Γ` is a positive integer. All the
//! precomputation (`γ_i = Γ/Γ_i`, `γ̄_i = γ_i⁻¹ mod Γ_i`) is exact.

use crate::complex_mod::{self, mod_c, mod_real, ComplexVal};
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;
use serde::{Deserialize, Serialize};

/// Residues mod `M` must agree within this fraction of `M` on the
/// error-free path.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusSystem {
    m: i64,
    cofactors: Vec<GaussianInt>,
    gamma: i64,
    partials: Vec<GaussianInt>,
    inverses: Vec<GaussianInt>,
    /// `⟨γ̄_i γ_i⟩_Γ`, the CRT basis reduced into `F_Γ`.
    basis: Vec<GaussianInt>,
}

impl ModulusSystem {
    /// Validates the moduli and precomputes the CRT basis.
    pub fn build(m: i64, cofactors: Vec<GaussianInt>) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidGcd(m));
        }
        if cofactors.is_empty() {
            return Err(Error::InvalidInput("empty cofactor list".into()));
        }
        for &c in &cofactors {
            if c.norm()? < 2 {
                return Err(Error::ModulusTooSmall(c));
            }
        }
        for (i, &a) in cofactors.iter().enumerate() {
            for &b in &cofactors[i + 1..] {
                if !a.is_coprime(b)? {
                    return Err(Error::NotCoprime(a, b));
                }
            }
        }
        let product = cofactors
            .iter()
            .try_fold(GaussianInt::ONE, |acc, &c| acc.checked_mul(c))?;
        if product.im != 0 || product.re <= 0 {
            return Err(Error::NonRealProduct(product));
        }
        let gamma = product.re;
        // full moduli M·Γ_i must be representable
        for &c in &cofactors {
            c.checked_scale(m)?;
        }
        GaussianInt::real(gamma).checked_scale(m)?;

        let big_gamma = GaussianInt::real(gamma);
        let mut partials = Vec::with_capacity(cofactors.len());
        let mut inverses = Vec::with_capacity(cofactors.len());
        let mut basis = Vec::with_capacity(cofactors.len());
        for (i, &c) in cofactors.iter().enumerate() {
            let partial = cofactors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .try_fold(GaussianInt::ONE, |acc, (_, &x)| acc.checked_mul(x))?;
            let inv = partial.mod_inverse(c)?;
            let e = inv.checked_mul(partial)?.rem_floor(big_gamma)?;
            partials.push(partial);
            inverses.push(inv);
            basis.push(e);
        }
        Ok(Self {
            m,
            cofactors,
            gamma,
            partials,
            inverses,
            basis,
        })
    }

    pub fn len(&self) -> usize {
        self.cofactors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cofactors.is_empty()
    }

    /// The common divisor `M`.
    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn cofactors(&self) -> &[GaussianInt] {
        &self.cofactors
    }

    /// `Γ = Π Γ_i`, a positive integer.
    pub fn gamma(&self) -> i64 {
        self.gamma
    }

    /// `γ_i = Γ / Γ_i`.
    pub fn partials(&self) -> &[GaussianInt] {
        &self.partials
    }

    /// `γ̄_i`, the inverse of `γ_i` modulo `Γ_i`, reduced into `F_{Γ_i}`.
    pub fn inverses(&self) -> &[GaussianInt] {
        &self.inverses
    }

    pub fn basis(&self) -> &[GaussianInt] {
        &self.basis
    }

    /// `M·Γ_i` for channel `i`.
    pub fn full_modulus(&self, i: usize) -> GaussianInt {
        self.cofactors[i] * GaussianInt::real(self.m)
    }

    pub fn full_moduli(&self) -> Vec<GaussianInt> {
        (0..self.len()).map(|i| self.full_modulus(i)).collect()
    }

    /// `MΓ`, the side of the square `F_{MΓ}` of uniquely determinable values.
    pub fn dynamic_range(&self) -> i64 {
        self.m * self.gamma
    }

    /// `⟨Σ γ̄_i γ_i q_i⟩_Γ`, computed exactly.
    pub fn combine(&self, q: &[GaussianInt]) -> Result<GaussianInt> {
        if q.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: q.len(),
            });
        }
        let g = GaussianInt::real(self.gamma);
        let mut acc = GaussianInt::ZERO;
        for (&e, &qi) in self.basis.iter().zip(q) {
            let term = e.checked_mul(qi.rem_floor(g)?)?;
            acc = acc.checked_add(term)?.rem_floor(g)?;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonSolution {
    pub n: ComplexVal,
    pub r_common: ComplexVal,
    pub q: Vec<GaussianInt>,
    pub n0: GaussianInt,
}

/// `r_i = ⟨N⟩_{MΓ_i}` for every channel.
pub fn remainder_vector(n: ComplexVal, sys: &ModulusSystem) -> Result<Vec<ComplexVal>> {
    (0..sys.len()).map(|i| mod_c(n, sys.full_modulus(i))).collect()
}

/// Splits `z` into `⌊z⌋` and the fractional part in `F_1`.
pub fn split_floor(z: ComplexVal) -> Result<(GaussianInt, ComplexVal)> {
    let fl = complex_mod::floor_c(z)?;
    Ok((fl, z - fl.to_complex()))
}

/// Reconstruction for a system with `M = 1`:
/// `N = ⟨r_1 - ⌊r_1⌋ + Σ γ̄_i γ_i ⌊r_i⌋⟩_Γ`.
///
/// Inconsistent remainders are not detected; use [`verify_remainders`].
pub fn reconstruct_coprime(remainders: &[ComplexVal], sys: &ModulusSystem) -> Result<ComplexVal> {
    if sys.m() != 1 {
        return Err(Error::Precondition(format!(
            "direct reconstruction needs M = 1, got M = {}",
            sys.m()
        )));
    }
    if remainders.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: remainders.len(),
        });
    }
    let (_, frac) = split_floor(remainders[0])?;
    let floors = remainders
        .iter()
        .map(|&r| complex_mod::floor_c(r))
        .collect::<Result<Vec<_>>>()?;
    // frac ∈ [0,1)² and Γ is an integer, so the reduction acts on the
    // integer part only.
    let base = sys.combine(&floors)?;
    Ok(base.to_complex() + frac)
}

/// True if `remainders` are the remainders of `n` within `tol·|MΓ_i|`.
pub fn verify_remainders(
    n: ComplexVal,
    remainders: &[ComplexVal],
    sys: &ModulusSystem,
    tol: f64,
) -> Result<bool> {
    if remainders.len() != sys.len() {
        return Ok(false);
    }
    for (i, &r) in remainders.iter().enumerate() {
        let m = sys.full_modulus(i);
        let d = complex_mod::circ_dist(r, n, m)?;
        if d.norm() > tol * m.abs() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Error-free reconstruction for general `M` via the common remainder.
pub fn solve_common(remainders: &[ComplexVal], sys: &ModulusSystem) -> Result<CommonSolution> {
    if remainders.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: remainders.len(),
        });
    }
    let m = sys.m() as f64;
    let r_common = ComplexVal::new(mod_real(remainders[0].re, m), mod_real(remainders[0].im, m));
    for (index, &r) in remainders.iter().enumerate() {
        let dev_re = complex_mod::circ_dist_real(r.re, r_common.re, m).abs();
        let dev_im = complex_mod::circ_dist_real(r.im, r_common.im, m).abs();
        let deviation = dev_re.max(dev_im);
        if deviation > CONSISTENCY_TOL * m {
            return Err(Error::InconsistentRemainders { index, deviation });
        }
    }
    let q = remainders
        .iter()
        .map(|&r| complex_mod::round_c((r - r_common) / m))
        .collect::<Result<Vec<_>>>()?;
    let n0 = sys.combine(&q)?;
    let n = n0.to_complex() * m + r_common;
    Ok(CommonSolution { n, r_common, q, n0 })
}

/// A system of real positive integer moduli, used by the per-axis
/// real-valued baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSystem {
    moduli: Vec<i64>,
    m: i64,
    cofactors: Vec<i64>,
    gamma: i64,
    basis: Vec<i64>,
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn inverse_mod_i64(a: i64, m: i64) -> Option<i64> {
    let (mut r0, mut r1) = (a.rem_euclid(m) as i128, m as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as i64)
}

impl RealSystem {
    /// Builds from the full moduli `m_i`; `M` is their gcd and the cofactors
    /// `m_i / M` must be pairwise coprime and at least 2.
    pub fn build(moduli: &[i64]) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidInput("empty moduli list".into()));
        }
        if let Some(&bad) = moduli.iter().find(|&&x| x < 2) {
            return Err(Error::ModulusTooSmall(GaussianInt::real(bad)));
        }
        let m = moduli.iter().fold(0, |g, &x| gcd_i64(g, x));
        let cofactors: Vec<i64> = moduli.iter().map(|&x| x / m).collect();
        if moduli.len() > 1 {
            if let Some(&bad) = cofactors.iter().find(|&&x| x < 2) {
                return Err(Error::ModulusTooSmall(GaussianInt::real(bad)));
            }
        }
        for (i, &a) in cofactors.iter().enumerate() {
            for &b in &cofactors[i + 1..] {
                if gcd_i64(a, b) != 1 {
                    return Err(Error::NotCoprime(GaussianInt::real(a), GaussianInt::real(b)));
                }
            }
        }
        let gamma = cofactors
            .iter()
            .try_fold(1i64, |acc, &c| acc.checked_mul(c))
            .ok_or(Error::Overflow("real system product"))?;
        gamma
            .checked_mul(m)
            .ok_or(Error::Overflow("real dynamic range"))?;
        let mut basis = Vec::with_capacity(cofactors.len());
        for &c in &cofactors {
            let partial = gamma / c;
            let inv = if c == 1 {
                0
            } else {
                inverse_mod_i64(partial, c).ok_or(Error::NoInverse {
                    a: GaussianInt::real(partial),
                    m: GaussianInt::real(c),
                })?
            };
            basis.push(((inv as i128 * partial as i128) % gamma as i128) as i64);
        }
        Ok(Self {
            moduli: moduli.to_vec(),
            m,
            cofactors,
            gamma,
            basis,
        })
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn cofactors(&self) -> &[i64] {
        &self.cofactors
    }

    pub fn gamma(&self) -> i64 {
        self.gamma
    }

    pub fn dynamic_range(&self) -> i64 {
        self.m * self.gamma
    }

    /// `⟨Σ γ̄_i γ_i q_i⟩_Γ` over the integers.
    pub fn combine(&self, q: &[i64]) -> i64 {
        let g = self.gamma as i128;
        let acc = self.basis.iter().zip(q).fold(0i128, |acc, (&e, &qi)| {
            (acc + e as i128 * (qi as i128).rem_euclid(g)) % g
        });
        acc.rem_euclid(g) as i64
    }
}
