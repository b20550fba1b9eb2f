//! Maximum-likelihood reconstruction from noisy remainders.
//!
//! The likelihood objective `Σ |d_{MΓ_i}(r̃_i, z)|² / σ_i²` is minimized in
//! two stages. The common remainder `r̂^c ∈ F_M` minimizes the weighted
//! circular spread of the residues `⟨r̃_i⟩_M`; the problem separates into the
//! real and imaginary axes, and on each axis the minimizer is one of `L`
//! closed-form candidates (shifted weighted means over the sorted residues).
//! The folding integers then follow by rounding and the exact CRT basis.

use crate::complex_mod::{self, mod_real, ComplexVal};
use crate::crt::{ModulusSystem, RealSystem};
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;
use serde::{Deserialize, Serialize};

/// Largest grid the brute-force oracle will scan.
pub const ORACLE_GRID_LIMIT: u128 = 100_000_000;

/// Noisy remainders with the per-axis standard deviation of each channel's
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyRemainders {
    pub values: Vec<ComplexVal>,
    pub sigmas: Vec<f64>,
}

impl NoisyRemainders {
    pub fn new(values: Vec<ComplexVal>, sigmas: Vec<f64>) -> Result<Self> {
        if values.len() != sigmas.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                got: sigmas.len(),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("noisy remainder"));
        }
        validate_sigmas(&sigmas)?;
        Ok(Self { values, sigmas })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn validate_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.is_empty() {
        return Err(Error::InvalidInput("no channels".into()));
    }
    for (index, &value) in sigmas.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidSigma { index, value });
        }
    }
    Ok(())
}

/// Normalized inverse-variance weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `w_i = σ_i⁻² / Σ_j σ_j⁻²`.
pub fn compute_weights(sigmas: &[f64]) -> Result<Weights> {
    validate_sigmas(sigmas)?;
    let inv: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
    let total: f64 = inv.iter().sum();
    Ok(Weights(inv.into_iter().map(|v| v / total).collect()))
}

/// Instrumented operation counts for one estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    /// Candidate objective evaluations (both axes).
    pub evaluations: u64,
    /// Real multiplications spent finding the common remainder.
    pub common_stage_mults: u64,
    /// Real multiplications spent on folding integers and the final value.
    pub reconstruction_mults: u64,
}

impl OpCounter {
    pub fn total_mults(&self) -> u64 {
        self.common_stage_mults + self.reconstruction_mults
    }
}

/// `⟨r̃_i⟩_M` taken separately on each axis.
pub fn common_residues(values: &[ComplexVal], m: i64) -> Vec<ComplexVal> {
    let m = m as f64;
    values.iter().map(|v| complex_mod::mod_real_c(*v, m)).collect()
}

/// Circular difference of two residues in `[0, m)`, mapped into `[-m/2, m/2)`.
fn wrapped_diff(x: f64, y: f64, m: f64) -> f64 {
    let d = x - y;
    if d >= 0.5 * m {
        d - m
    } else if d < -0.5 * m {
        d + m
    } else {
        d
    }
}

/// The `L` candidates of one axis with their objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCandidates {
    /// Channel indices sorting the residues ascending.
    pub order: Vec<usize>,
    /// `c_k` for `k = 1..=L`.
    pub candidates: Vec<f64>,
    pub objectives: Vec<f64>,
    /// Index into `candidates` of the minimizer.
    pub best: usize,
    pub evaluations: u64,
    pub mults: u64,
}

impl AxisCandidates {
    pub fn best_value(&self) -> f64 {
        self.candidates[self.best]
    }

    pub fn best_objective(&self) -> f64 {
        self.objectives[self.best]
    }
}

/// `Σ w_i d_m(residue_i, c)²` on one axis.
pub fn axis_objective(residues: &[f64], w: &Weights, m: f64, c: f64) -> f64 {
    residues
        .iter()
        .zip(w.as_slice())
        .map(|(&r, &wi)| {
            let d = wrapped_diff(r, c, m);
            wi * d * d
        })
        .sum()
}

/// Builds and scores the candidate set for one axis. `residues` must lie in
/// `[0, m)`. Ties go to the smallest candidate value.
pub fn axis_candidate_set(residues: &[f64], w: &Weights, m: i64) -> Result<AxisCandidates> {
    let l = residues.len();
    if l == 0 || w.len() != l {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            got: l,
        });
    }
    if m < 1 {
        return Err(Error::InvalidGcd(m));
    }
    let mf = m as f64;
    if let Some(r) = residues.iter().find(|&&r| !(0.0..mf).contains(&r)) {
        return Err(Error::OutsideRegion(format!("axis residue {r} not in [0, {m})")));
    }
    let ws = w.as_slice();
    let mut mults = 0u64;

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| residues[a].total_cmp(&residues[b]).then(a.cmp(&b)));

    // Weighted mean relative to the first residue so identical residues
    // reproduce themselves exactly.
    let base = residues[0];
    let mean = base
        + residues
            .iter()
            .zip(ws)
            .map(|(&r, &wi)| wi * (r - base))
            .sum::<f64>();
    mults += l as u64;

    // one offset M·Σw per candidate
    mults += l as u64;
    let mut candidates = Vec::with_capacity(l);
    let mut prefix = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        prefix += ws[idx];
        let c = if k + 1 == l {
            // M·Σw = M ≡ 0
            mod_real(mean, mf)
        } else {
            mod_real(mean + mf * prefix, mf)
        };
        candidates.push(c);
    }

    let mut objectives = Vec::with_capacity(l);
    let mut best = 0;
    for (k, &c) in candidates.iter().enumerate() {
        let obj = axis_objective(residues, w, mf, c);
        mults += 2 * l as u64;
        objectives.push(obj);
        if k > 0 {
            let (bo, bc) = (objectives[best], candidates[best]);
            if obj < bo || (obj == bo && c < bc) {
                best = k;
            }
        }
    }
    Ok(AxisCandidates {
        order,
        candidates,
        objectives,
        best,
        evaluations: l as u64,
        mults,
    })
}

/// Common-remainder estimate with the per-axis details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonEstimate {
    pub value: ComplexVal,
    pub re: AxisCandidates,
    pub im: AxisCandidates,
}

impl CommonEstimate {
    /// `Σ w_i |d_M(r̃_i^c, r̂^c)|²`, the sum of the two axis objectives.
    pub fn objective(&self) -> f64 {
        self.re.best_objective() + self.im.best_objective()
    }
}

/// `arg min_{x ∈ F_M} Σ w_i |d_M(residue_i, x)|²` via the 2L candidates.
pub fn estimate_common_detailed(residues: &[ComplexVal], w: &Weights, m: i64) -> Result<CommonEstimate> {
    let re: Vec<f64> = residues.iter().map(|r| r.re).collect();
    let im: Vec<f64> = residues.iter().map(|r| r.im).collect();
    let re = axis_candidate_set(&re, w, m)?;
    let im = axis_candidate_set(&im, w, m)?;
    Ok(CommonEstimate {
        value: ComplexVal::new(re.best_value(), im.best_value()),
        re,
        im,
    })
}

pub fn estimate_common(residues: &[ComplexVal], w: &Weights, m: i64) -> Result<ComplexVal> {
    Ok(estimate_common_detailed(residues, w, m)?.value)
}

/// Reconstruction output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n_hat: ComplexVal,
    pub r_c_hat: ComplexVal,
    pub q_hat: Vec<GaussianInt>,
    pub n0_hat: GaussianInt,
    /// Likelihood objective `Σ |d_{MΓ_i}(r̃_i, N̂)|² / σ_i²` at `N̂`.
    pub objective: f64,
    pub evaluations: u64,
    pub ops: OpCounter,
}

/// Full estimate `N̂ = M·N̂_0 + r̂^c` with `N̂_0 = ⟨Σ γ̄_i γ_i q̂_i⟩_Γ`.
pub fn estimate(obs: &NoisyRemainders, sys: &ModulusSystem) -> Result<Estimate> {
    if obs.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: obs.len(),
        });
    }
    let w = compute_weights(&obs.sigmas)?;
    let m = sys.m();
    let residues = common_residues(&obs.values, m);
    let common = estimate_common_detailed(&residues, &w, m)?;
    let r_c = common.value;
    let mf = m as f64;
    let q_hat = obs
        .values
        .iter()
        .map(|&r| complex_mod::round_c((r - r_c) / mf))
        .collect::<Result<Vec<_>>>()?;
    let n0 = sys.combine(&q_hat)?;
    let n_hat = n0.to_complex() * mf + r_c;
    let l = sys.len() as u64;
    let ops = OpCounter {
        evaluations: common.re.evaluations + common.im.evaluations,
        common_stage_mults: common.re.mults + common.im.mults,
        // q̂_i: two scalings each; basis products: four each; M·N̂_0: two
        reconstruction_mults: 2 * l + 4 * l + 2,
    };
    Ok(Estimate {
        n_hat,
        r_c_hat: r_c,
        q_hat,
        n0_hat: n0,
        objective: objective(n_hat, obs, sys)?,
        evaluations: ops.evaluations,
        ops,
    })
}

/// `Σ |d_{MΓ_i}(r̃_i, z)|² / σ_i²`.
pub fn objective(z: ComplexVal, obs: &NoisyRemainders, sys: &ModulusSystem) -> Result<f64> {
    if obs.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: obs.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&r, &s)) in obs.values.iter().zip(&obs.sigmas).enumerate() {
        let d = complex_mod::circ_dist(r, z, sys.full_modulus(i))?;
        total += d.norm_sqr() / (s * s);
    }
    Ok(total)
}

/// Nearest-integer rounding by the 1.5·2⁵² trick; valid for |x| < 2⁵¹.
/// Ties may go either way, which leaves `|x - round(x)|` unchanged.
#[inline(always)]
fn nearest(x: f64) -> f64 {
    const SHIFT: f64 = 6_755_399_441_055_744.0;
    (x + SHIFT) - SHIFT
}

/// Brute-force minimizer of the likelihood objective over the grid
/// `{(a + bi)·step : 0 ≤ a·step, b·step < MΓ}`. Returns the best grid point
/// and its objective. Intended for small systems in tests.
pub fn oracle_grid_mle(obs: &NoisyRemainders, sys: &ModulusSystem, step: f64) -> Result<(ComplexVal, f64)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if obs.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: obs.len(),
        });
    }
    let range = sys.dynamic_range() as f64;
    let per_axis = (range / step).ceil() as u128;
    let points = per_axis * per_axis;
    if points > ORACLE_GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: ORACLE_GRID_LIMIT,
        });
    }
    let n = per_axis as usize;

    // d_P(r, z) = P·(u - [u]) with u = (r - z)/P; |d|² = |P|²·|u - [u]|².
    // u is affine in the grid indices, so each channel is described by its
    // value at the origin and its increments along the two grid axes.
    struct Chan {
        u0: (f64, f64),
        dx: (f64, f64),
        dy: (f64, f64),
        scale: f64,
    }
    let chans: Vec<Chan> = obs
        .values
        .iter()
        .zip(&obs.sigmas)
        .enumerate()
        .map(|(i, (&r, &s))| {
            let p = sys.full_modulus(i).to_complex();
            let inv = p.inv();
            let u0 = r * inv;
            let dx = -ComplexVal::new(step, 0.0) * inv;
            let dy = -ComplexVal::new(0.0, step) * inv;
            Chan {
                u0: (u0.re, u0.im),
                dx: (dx.re, dx.im),
                dy: (dy.re, dy.im),
                scale: p.norm_sqr() / (s * s),
            }
        })
        .collect();

    let mut best = (f64::INFINITY, 0usize, 0usize);
    for b in 0..n {
        let yb = b as f64;
        for a in 0..n {
            let xa = a as f64;
            let mut total = 0.0;
            for c in &chans {
                let ur = c.u0.0 + xa * c.dx.0 + yb * c.dy.0;
                let ui = c.u0.1 + xa * c.dx.1 + yb * c.dy.1;
                let fr = ur - nearest(ur);
                let fi = ui - nearest(ui);
                total += c.scale * (fr * fr + fi * fi);
            }
            if total < best.0 {
                best = (total, a, b);
            }
        }
    }
    let z = ComplexVal::new(best.1 as f64 * step, best.2 as f64 * step);
    Ok((z, best.0))
}

/// One-axis estimate for a system of real moduli: residues mod `M`, the
/// `L`-candidate search, then the integer CRT on the rounded quotients.
/// Returns a value in `[0, MΓ)`.
pub fn estimate_real_axis(values: &[f64], sigmas: &[f64], sys: &RealSystem) -> Result<f64> {
    let (whole, rc) = estimate_real_axis_split(values, sigmas, sys)?;
    Ok(whole as f64 + rc)
}

/// [`estimate_real_axis`] as the integer multiple of `M` and the common
/// remainder, before they are added.
pub fn estimate_real_axis_split(values: &[f64], sigmas: &[f64], sys: &RealSystem) -> Result<(i64, f64)> {
    if values.len() != sys.len() || sigmas.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: values.len().min(sigmas.len()),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("noisy remainder"));
    }
    let w = compute_weights(sigmas)?;
    let m = sys.m();
    let mf = m as f64;
    let residues: Vec<f64> = values.iter().map(|&v| mod_real(v, mf)).collect();
    let rc = axis_candidate_set(&residues, &w, m)?.best_value();
    let q: Vec<i64> = values
        .iter()
        .map(|&v| complex_mod::round_half_up((v - rc) / mf) as i64)
        .collect();
    Ok((sys.combine(&q) * m, rc))
}

/// Two independent real-valued estimates: the real parts of the remainders
/// against `re_sys`, the imaginary parts against `im_sys`.
pub fn estimate_dual_real(
    obs: &NoisyRemainders,
    re_sys: &RealSystem,
    im_sys: &RealSystem,
) -> Result<ComplexVal> {
    let re: Vec<f64> = obs.values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = obs.values.iter().map(|v| v.im).collect();
    Ok(ComplexVal::new(
        estimate_real_axis(&re, &obs.sigmas, re_sys)?,
        estimate_real_axis(&im, &obs.sigmas, im_sys)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crt::remainder_vector;

    fn g(s: &str) -> GaussianInt {
        s.parse().unwrap()
    }
    fn c(re: f64, im: f64) -> ComplexVal {
        ComplexVal::new(re, im)
    }

    #[test]
    fn weight_fixtures() {
        let w = compute_weights(&[0.7, 0.7, 0.7]).unwrap();
        assert!(w.as_slice().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        let w = compute_weights(&[0.2, 0.3, 0.4]).unwrap();
        let want = [0.5902, 0.2623, 0.1475];
        for (a, b) in w.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 5e-5, "{a} vs {b}");
        }
        assert_eq!(compute_weights(&[2.0]).unwrap().as_slice(), &[1.0]);
        assert!(matches!(
            compute_weights(&[1.0, 0.0]),
            Err(Error::InvalidSigma { index: 1, .. })
        ));
    }

    #[test]
    fn residue_fixtures() {
        assert_eq!(common_residues(&[c(-3.0, 6.0)], 2), vec![c(1.0, 0.0)]);
        let r = common_residues(&[c(-0.3, 10.4)], 10)[0];
        assert!((r - c(9.7, 0.4)).norm() < 1e-12);
        assert_eq!(common_residues(&[c(3.5, 0.25)], 10), vec![c(3.5, 0.25)]);
    }

    #[test]
    fn axis_candidates_wraparound() {
        let w = compute_weights(&[1.0, 1.0]).unwrap();
        let ax = axis_candidate_set(&[1.0, 9.0], &w, 10).unwrap();
        assert_eq!(ax.candidates, vec![0.0, 5.0]);
        assert_eq!(ax.objectives, vec![1.0, 16.0]);
        assert_eq!(ax.best_value(), 0.0);
        assert_eq!(ax.evaluations, 2);

        let ax = axis_candidate_set(&[2.0, 4.0], &w, 10).unwrap();
        assert_eq!(ax.candidates, vec![8.0, 3.0]);
        assert_eq!(ax.best_value(), 3.0);
        assert_eq!(ax.best_objective(), 1.0);
        assert_eq!(ax.objectives[0], 16.0);
    }

    #[test]
    fn single_residue_is_its_own_estimate() {
        let w = compute_weights(&[1.0]).unwrap();
        let ax = axis_candidate_set(&[3.25], &w, 10).unwrap();
        assert_eq!(ax.candidates, vec![3.25]);
        assert_eq!(ax.best_objective(), 0.0);
    }

    #[test]
    fn tie_goes_to_smallest() {
        let w = compute_weights(&[1.0, 1.0]).unwrap();
        let ax = axis_candidate_set(&[0.0, 5.0], &w, 10).unwrap();
        // candidates ⟨2.5+5⟩ = 7.5 and 2.5, each at distance 2.5 from both
        assert_eq!(ax.objectives[0], ax.objectives[1]);
        assert_eq!(ax.best_value(), 2.5);
    }

    #[test]
    fn equal_residues_reproduce_exactly() {
        let w = compute_weights(&[0.3, 0.9, 1.7]).unwrap();
        let r = c(7.123456789, 0.000123);
        let est = estimate_common(&[r, r, r], &w, 10).unwrap();
        assert_eq!(est, r);
    }

    #[test]
    fn zero_noise_estimate_is_exact() {
        let sys = ModulusSystem::build(2, vec![g("1+4i"), g("-3-4i"), g("13+16i")]).unwrap();
        let n = c(17.0, 18.0);
        let obs = NoisyRemainders::new(remainder_vector(n, &sys).unwrap(), vec![1.0; 3]).unwrap();
        let est = estimate(&obs, &sys).unwrap();
        assert_eq!(est.n_hat, n);
        assert_eq!(est.r_c_hat, c(1.0, 0.0));
        assert_eq!(est.n0_hat, g("8+9i"));
        assert_eq!(est.objective, 0.0);
        assert_eq!(est.evaluations, 6);
    }

    #[test]
    fn symmetric_errors_cancel() {
        let sys = ModulusSystem::build(10, vec![g("3+4i"), g("3-4i")]).unwrap();
        let n = c(120.0, 130.0);
        let rems = remainder_vector(n, &sys).unwrap();
        let noisy = vec![rems[0] + c(1.0, 0.5), rems[1] - c(1.0, 0.5)];
        let obs = NoisyRemainders::new(noisy, vec![1.0, 1.0]).unwrap();
        let est = estimate(&obs, &sys).unwrap();
        assert!((est.n_hat - n).norm() < 1e-9, "{}", est.n_hat);
    }

    #[test]
    fn objective_is_shift_invariant() {
        let sys = ModulusSystem::build(10, vec![g("3+4i"), g("3-4i")]).unwrap();
        let obs = NoisyRemainders::new(vec![c(3.3, 7.1), c(12.0, -4.5)], vec![0.5, 0.8]).unwrap();
        let z = c(37.2, 81.9);
        let a = objective(z, &obs, &sys).unwrap();
        let b = objective(z + c(250.0, 0.0), &obs, &sys).unwrap();
        let d = objective(z + c(0.0, 250.0), &obs, &sys).unwrap();
        assert!((a - b).abs() < 1e-9 && (a - d).abs() < 1e-9);
    }

    #[test]
    fn oracle_refuses_huge_grids() {
        let sys = ModulusSystem::build(10, vec![g("3+4i"), g("3-4i")]).unwrap();
        let obs = NoisyRemainders::new(vec![c(0.0, 0.0); 2], vec![1.0; 2]).unwrap();
        assert!(matches!(
            oracle_grid_mle(&obs, &sys, 0.01),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(oracle_grid_mle(&obs, &sys, 0.0).is_err());
    }

    #[test]
    fn oracle_finds_zero_noise_point() {
        let sys = ModulusSystem::build(2, vec![g("2+i"), g("2-i")]).unwrap();
        let n = c(3.0, 7.5);
        let obs = NoisyRemainders::new(remainder_vector(n, &sys).unwrap(), vec![1.0; 2]).unwrap();
        let (z, obj) = oracle_grid_mle(&obs, &sys, 0.25).unwrap();
        assert_eq!(z, n);
        assert!(obj < 1e-18);
    }

    #[test]
    fn real_axis_zero_noise() {
        let sys = RealSystem::build(&[30, 40, 70]).unwrap();
        for n in [0.0, 17.25, 555.5, 839.0] {
            let vals: Vec<f64> = sys.moduli().iter().map(|&m| mod_real(n, m as f64)).collect();
            assert_eq!(estimate_real_axis(&vals, &[1.0; 3], &sys).unwrap(), n);
        }
    }
}
