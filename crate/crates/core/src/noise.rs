//! Wrapped complex Gaussian noise: sampling, the lattice-sum density, the
//! mass of an unwrapped Gaussian inside `S_M`, and SNR conversions.
//!
//! `sigma` is always the standard deviation of each real component; the
//! complex error then has variance `2σ²`.

use crate::complex_mod::{circ_dist, mod_c, ComplexVal, Region};
use crate::crt::ModulusSystem;
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;
use crate::mle::NoisyRemainders;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Default number of lattice shells in [`wrapped_pdf`].
pub const DEFAULT_TRUNCATION: u32 = 3;

/// Default grid size per axis for [`three_sigma_check`].
pub const DEFAULT_QUADRATURE_GRID: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedGaussianSpec {
    pub center: ComplexVal,
    pub modulus: GaussianInt,
    pub sigma: f64,
    pub truncation: u32,
}

impl WrappedGaussianSpec {
    pub fn new(center: ComplexVal, modulus: GaussianInt, sigma: f64) -> Result<Self> {
        if modulus.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidSigma {
                index: 0,
                value: sigma,
            });
        }
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::NonFinite("wrapped Gaussian center"));
        }
        Ok(Self {
            center,
            modulus,
            sigma,
            truncation: DEFAULT_TRUNCATION,
        })
    }

    pub fn with_truncation(mut self, k: u32) -> Self {
        self.truncation = k;
        self
    }
}

/// Complex Gaussian with independent components of standard deviation `sigma`.
pub fn sample_error<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> ComplexVal {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    ComplexVal::new(sigma * re, sigma * im)
}

/// `⟨N + W⟩_M` with `W` complex Gaussian. No truncation is involved.
pub fn sample_wrapped<R: Rng + ?Sized>(spec: &WrappedGaussianSpec, rng: &mut R) -> Result<ComplexVal> {
    mod_c(spec.center + sample_error(spec.sigma, rng), spec.modulus)
}

/// Density of the wrapped Gaussian at `r ∈ F_M`, as the lattice sum
/// recentered on `d_M(r, N)` and truncated to `|k_1|, |k_2| ≤ K`.
pub fn wrapped_pdf(r: ComplexVal, spec: &WrappedGaussianSpec) -> Result<f64> {
    let region = Region::fundamental(spec.modulus)?;
    if !region.contains_with_tolerance(r, 1e-12) {
        return Err(Error::OutsideRegion(format!(
            "{r} is not in the fundamental region of {}",
            spec.modulus
        )));
    }
    let d = circ_dist(r, spec.center, spec.modulus)?;
    let m = spec.modulus.to_complex();
    let two_var = 2.0 * spec.sigma * spec.sigma;
    let k = spec.truncation as i64;
    let mut total = 0.0;
    for k1 in -k..=k {
        for k2 in -k..=k {
            let z = d + m * ComplexVal::new(k1 as f64, k2 as f64);
            total += (-z.norm_sqr() / two_var).exp();
        }
    }
    Ok(total / (PI * two_var))
}

/// Mass of the unwrapped Gaussian inside `S_M`,
/// `(1/2πσ²) ∬_{S_M} exp(-|z|²/2σ²)`, by the midpoint rule on an
/// `n × n` grid over the coordinates `z/M ∈ [-1/2, 1/2)²`.
pub fn three_sigma_check_with_grid(modulus: GaussianInt, sigma: f64, n: usize) -> Result<f64> {
    if modulus.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma {
            index: 0,
            value: sigma,
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("quadrature grid must be nonempty".into()));
    }
    let m = modulus.to_complex();
    let two_var = 2.0 * sigma * sigma;
    let h = 1.0 / n as f64;
    let mut total = 0.0;
    for a in 0..n {
        let c = -0.5 + (a as f64 + 0.5) * h;
        let mut row = 0.0;
        for b in 0..n {
            let d = -0.5 + (b as f64 + 0.5) * h;
            let z = m * ComplexVal::new(c, d);
            row += (-z.norm_sqr() / two_var).exp();
        }
        total += row;
    }
    // dz = |M|² dc dd
    Ok(total * h * h * m.norm_sqr() / (PI * two_var))
}

pub fn three_sigma_check(modulus: GaussianInt, sigma: f64) -> Result<f64> {
    three_sigma_check_with_grid(modulus, sigma, DEFAULT_QUADRATURE_GRID)
}

/// `10 log10(|M|² / 3σ²)`.
pub fn snr_sigma(modulus_magnitude: f64, sigma: f64) -> f64 {
    10.0 * (modulus_magnitude * modulus_magnitude / (3.0 * sigma * sigma)).log10()
}

/// `σ` giving the stated SNR for a modulus of magnitude `|M|`.
pub fn sigma_for_snr(modulus_magnitude: f64, snr_db: f64) -> f64 {
    modulus_magnitude / 3f64.sqrt() * 10f64.powf(-snr_db / 20.0)
}

/// Remainder SNR for the relative noise level `u = σ/|M|`:
/// `-20 log10(√3·u)`.
pub fn snr_from_u(u: f64) -> f64 {
    -20.0 * (3f64.sqrt() * u).log10()
}

pub fn u_from_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0) / 3f64.sqrt()
}

/// `σ_i = u·|MΓ_i|` for every channel.
pub fn channel_sigmas(sys: &ModulusSystem, u: f64) -> Vec<f64> {
    (0..sys.len()).map(|i| u * sys.full_modulus(i).abs()).collect()
}

/// Noisy remainders `⟨N + Δr_i⟩_{MΓ_i}` together with the drawn errors.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDraw {
    pub obs: NoisyRemainders,
    pub deltas: Vec<ComplexVal>,
}

pub fn draw_remainders<R: Rng + ?Sized>(
    n: ComplexVal,
    sys: &ModulusSystem,
    sigmas: &[f64],
    rng: &mut R,
) -> Result<NoisyDraw> {
    if sigmas.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: sigmas.len(),
        });
    }
    let mut values = Vec::with_capacity(sys.len());
    let mut deltas = Vec::with_capacity(sys.len());
    for (i, &s) in sigmas.iter().enumerate() {
        let e = sample_error(s, rng);
        values.push(mod_c(n + e, sys.full_modulus(i))?);
        deltas.push(e);
    }
    Ok(NoisyDraw {
        obs: NoisyRemainders::new(values, sigmas.to_vec())?,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn g(s: &str) -> GaussianInt {
        s.parse().unwrap()
    }
    fn c(re: f64, im: f64) -> ComplexVal {
        ComplexVal::new(re, im)
    }

    #[test]
    fn samples_stay_in_region() {
        let m = g("3+4i");
        let spec = WrappedGaussianSpec::new(c(1.0, 2.0), m, 2.0).unwrap();
        let region = Region::fundamental(m).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..1000 {
            assert!(region.contains(sample_wrapped(&spec, &mut rng).unwrap()));
        }
    }

    #[test]
    fn tiny_sigma_returns_reduced_center() {
        let m = g("3+4i");
        let spec = WrappedGaussianSpec::new(c(2.0, 5.0), m, 1e-14).unwrap();
        let s = sample_wrapped(&spec, &mut stream_rng(0, 0)).unwrap();
        assert!((s - c(-1.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn pdf_single_term_and_symmetry() {
        let m = g("7");
        let spec = WrappedGaussianSpec::new(c(3.0, 3.0), m, 0.8).unwrap();
        let r = c(3.5, 2.2);
        let d = circ_dist(r, spec.center, m).unwrap();
        let direct = (-d.norm_sqr() / (2.0 * 0.64)).exp() / (2.0 * PI * 0.64);
        let k0 = wrapped_pdf(r, &spec.with_truncation(0)).unwrap();
        assert!((k0 - direct).abs() < 1e-15);
        let p1 = wrapped_pdf(c(3.4, 3.0), &spec).unwrap();
        let p2 = wrapped_pdf(c(2.6, 3.0), &spec).unwrap();
        assert!((p1 - p2).abs() < 1e-14);
        assert!(wrapped_pdf(c(7.5, 0.0), &spec).is_err());
    }

    #[test]
    fn snr_fixtures() {
        assert!(snr_sigma(3f64.sqrt() * 2.0, 2.0).abs() < 1e-12);
        let (m, u) = (12.5, 0.013);
        assert!((snr_sigma(m, u * m) - snr_from_u(u)).abs() < 1e-12);
        assert!((snr_from_u(1e-2) - 35.2287874528).abs() < 1e-8);
        assert!((u_from_snr(snr_from_u(0.004)) - 0.004).abs() < 1e-15);
        assert!((sigma_for_snr(5.0, snr_sigma(5.0, 0.3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn quadrature_bounds() {
        let m = g("3+4i");
        assert!(three_sigma_check(m, 5.0 / (6.0 * 2f64.sqrt())).unwrap() > 0.9946);
        assert!(three_sigma_check(m, 5.0 / 2f64.sqrt()).unwrap() < 0.9);
    }
}
