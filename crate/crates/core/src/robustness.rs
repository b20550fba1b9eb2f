//! Conditions under which the estimate preserves errors, i.e.
//! `N̂ - N = Δr̄ = Σ w_i Δr_i`, together with the resulting error bounds,
//! the closed-form RMSE in that regime and a Monte-Carlo estimate of the
//! probability of error preservation.

use crate::complex_mod::ComplexVal;
use crate::crt::ModulusSystem;
use crate::error::{Error, Result};
use crate::mle::{compute_weights, Weights};
use crate::rng::stream_rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest channel count accepted by the exhaustive subset sweep.
pub const MAX_SUBSET_CHANNELS: usize = 24;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorVector {
    pub deltas: Vec<ComplexVal>,
    pub weights: Weights,
}

impl ErrorVector {
    pub fn new(deltas: Vec<ComplexVal>, weights: Weights) -> Result<Self> {
        if deltas.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                got: deltas.len(),
            });
        }
        Ok(Self { deltas, weights })
    }

    pub fn from_sigmas(deltas: Vec<ComplexVal>, sigmas: &[f64]) -> Result<Self> {
        Self::new(deltas, compute_weights(sigmas)?)
    }
}

/// `Δr̄ = Σ w_i Δr_i`.
pub fn weighted_mean_error(ev: &ErrorVector) -> ComplexVal {
    ev.deltas
        .iter()
        .zip(ev.weights.as_slice())
        .map(|(d, &w)| d * w)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Re,
    Im,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetViolation {
    pub axis: Axis,
    /// Channel indices of `V`.
    pub subset: Vec<usize>,
    /// Mean over `V` minus mean over the complement.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub holds: bool,
    pub first_violation: Option<SubsetViolation>,
    /// Smallest distance from any subset difference to the edge of
    /// `[-M/2, M/2)`; negative when the condition fails. Infinite for `L = 1`.
    pub margin: f64,
}

struct AxisSweep {
    holds: bool,
    first: Option<(u32, f64)>,
    margin: f64,
}

fn sweep_axis(values: &[f64], w: &[f64], m: f64) -> AxisSweep {
    let l = values.len();
    let half = 0.5 * m;
    let mut out = AxisSweep {
        holds: true,
        first: None,
        margin: f64::INFINITY,
    };
    let full: u32 = if l == 32 { u32::MAX } else { (1u32 << l) - 1 };
    for mask in 1..full {
        let (mut sw_in, mut sx_in, mut sw_out, mut sx_out) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..l {
            if mask >> i & 1 == 1 {
                sw_in += w[i];
                sx_in += w[i] * values[i];
            } else {
                sw_out += w[i];
                sx_out += w[i] * values[i];
            }
        }
        let diff = sx_in / sw_in - sx_out / sw_out;
        out.margin = out.margin.min((diff + half).min(half - diff));
        let inside = (-half..half).contains(&diff);
        if !inside && out.holds {
            out.holds = false;
            out.first = Some((mask, diff));
        }
    }
    out
}

fn check_channels(l: usize) -> Result<()> {
    if l > MAX_SUBSET_CHANNELS {
        return Err(Error::TooManyChannels {
            channels: l,
            limit: MAX_SUBSET_CHANNELS,
        });
    }
    Ok(())
}

/// Tests, for every nonempty proper subset `V` of the channels, that the
/// weighted mean error over `V` minus that over its complement lies in
/// `S_M`. The check separates into the two axes.
pub fn subset_condition(ev: &ErrorVector, m: i64) -> Result<SubsetCheck> {
    let l = ev.deltas.len();
    check_channels(l)?;
    if m < 1 {
        return Err(Error::InvalidGcd(m));
    }
    let w = ev.weights.as_slice();
    let mf = m as f64;
    let re: Vec<f64> = ev.deltas.iter().map(|d| d.re).collect();
    let im: Vec<f64> = ev.deltas.iter().map(|d| d.im).collect();
    let sr = sweep_axis(&re, w, mf);
    let si = sweep_axis(&im, w, mf);
    let to_violation = |axis, (mask, difference): (u32, f64)| SubsetViolation {
        axis,
        subset: (0..l).filter(|i| mask >> i & 1 == 1).collect(),
        difference,
    };
    let first_violation = sr
        .first
        .map(|f| to_violation(Axis::Re, f))
        .or_else(|| si.first.map(|f| to_violation(Axis::Im, f)));
    Ok(SubsetCheck {
        holds: sr.holds && si.holds,
        first_violation,
        margin: sr.margin.min(si.margin),
    })
}

/// The subset condition for the errors of one axis only.
pub fn axis_subset_condition(values: &[f64], w: &Weights, m: f64) -> Result<bool> {
    check_channels(values.len())?;
    if values.len() != w.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            got: values.len(),
        });
    }
    Ok(sweep_axis(values, w.as_slice(), m).holds)
}

/// `N ∈ M·H`: `M ≤ Re N, Im N < M(Γ - 1)`.
pub fn in_robust_region(n: ComplexVal, sys: &ModulusSystem) -> bool {
    let lo = sys.m() as f64;
    let hi = (sys.m() * (sys.gamma() - 1)) as f64;
    (lo..hi).contains(&n.re) && (lo..hi).contains(&n.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommonShift {
    /// Per-axis correction in `{M, 0, -M}`.
    pub correction: ComplexVal,
    /// `Δr^c = Δr̄ + correction`.
    pub delta_rc: ComplexVal,
    /// `r̂^c = r^c + Δr^c = ⟨r^c + Δr̄⟩_M`.
    pub r_c_hat: ComplexVal,
}

/// Predicted common-remainder estimate when the subset condition holds.
pub fn predicted_common_shift(r_c: ComplexVal, mean_err: ComplexVal, m: i64) -> Result<CommonShift> {
    let mf = m as f64;
    if !(mean_err.re.abs() < 0.5 * mf && mean_err.im.abs() < 0.5 * mf) {
        return Err(Error::Precondition(format!(
            "weighted mean error {mean_err} must lie strictly within M/2 = {} on both axes",
            0.5 * mf
        )));
    }
    let corr = |x: f64| {
        if x < 0.0 {
            mf
        } else if x >= mf {
            -mf
        } else {
            0.0
        }
    };
    let s = r_c + mean_err;
    let correction = ComplexVal::new(corr(s.re), corr(s.im));
    let delta_rc = mean_err + correction;
    Ok(CommonShift {
        correction,
        delta_rc,
        r_c_hat: r_c + delta_rc,
    })
}

/// `√(2 Σ w_i² σ_i²)`.
pub fn theoretical_rmse(sigmas: &[f64]) -> Result<f64> {
    let w = compute_weights(sigmas)?;
    let v: f64 = w
        .as_slice()
        .iter()
        .zip(sigmas)
        .map(|(wi, s)| wi * wi * s * s)
        .sum();
    Ok((2.0 * v).sqrt())
}

/// True if `N̂ - N = Δr̄` within `tol·M` on both axes.
pub fn is_error_preserving(n: ComplexVal, n_hat: ComplexVal, mean_err: ComplexVal, m: i64, tol: f64) -> bool {
    let d = n_hat - n - mean_err;
    let lim = tol * m as f64;
    d.re.abs() <= lim && d.im.abs() <= lim
}

/// `Δr_i - e ∈ S_M` for all `i`, where `e` is the reconstruction error.
/// The robustness analysis assumes this; reports carry it as a flag.
pub fn necessary_condition(deltas: &[ComplexVal], error: ComplexVal, m: i64) -> bool {
    let half = 0.5 * m as f64;
    deltas.iter().all(|d| {
        let x = d - error;
        (-half..half).contains(&x.re) && (-half..half).contains(&x.im)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub condition_holds: bool,
    pub first_violating_subset: Option<SubsetViolation>,
    pub margin: f64,
    pub weighted_mean: ComplexVal,
    /// `|Re Δr̄|, |Im Δr̄| < M/2`.
    pub mean_within_half: bool,
    pub in_region: bool,
    /// Present when the mean error is within `M/2` on both axes.
    pub predicted_shift: Option<CommonShift>,
    /// `Δr_i - Δr̄ ∈ S_M` for all `i`.
    pub assumption_holds: bool,
}

/// Full robustness diagnosis for a true value `n` and remainder errors
/// `deltas` on `sys`.
pub fn analyze(
    n: ComplexVal,
    deltas: &[ComplexVal],
    sigmas: &[f64],
    sys: &ModulusSystem,
) -> Result<RobustnessReport> {
    let ev = ErrorVector::from_sigmas(deltas.to_vec(), sigmas)?;
    let check = subset_condition(&ev, sys.m())?;
    let mean = weighted_mean_error(&ev);
    let half = 0.5 * sys.m() as f64;
    let mean_within_half = mean.re.abs() < half && mean.im.abs() < half;
    let r_c = crate::complex_mod::mod_real_c(n, sys.m() as f64);
    let predicted_shift = if mean_within_half {
        Some(predicted_common_shift(r_c, mean, sys.m())?)
    } else {
        None
    };
    Ok(RobustnessReport {
        condition_holds: check.holds,
        first_violating_subset: check.first_violation,
        margin: check.margin,
        weighted_mean: mean,
        mean_within_half,
        in_region: in_robust_region(n, sys),
        predicted_shift,
        assumption_holds: necessary_condition(deltas, mean, sys.m()),
    })
}

/// Wilson score interval for `successes` out of `n` at 95%.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub trials: u64,
    /// Axis events that satisfied the condition, out of `2·trials`.
    pub axis_successes: u64,
    /// Trials where both axes satisfied it.
    pub joint_successes: u64,
    pub p_axis: f64,
    /// `p_axis²`, from independence of the two axes.
    pub p_joint_predicted: f64,
    pub p_joint_empirical: f64,
    /// Wilson 95% interval for the joint rate.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ProbabilityEstimate {
    /// Binomial standard error of a joint rate near the prediction.
    pub fn joint_standard_error(&self) -> f64 {
        let p = self.p_joint_predicted;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Monte-Carlo probability that Gaussian remainder errors with per-axis
/// standard deviations `sigmas` satisfy the subset condition. Trial `t`
/// draws from stream `t` of `seed`.
pub fn error_preserving_probability(
    sigmas: &[f64],
    m: i64,
    trials: u64,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if m < 1 {
        return Err(Error::InvalidGcd(m));
    }
    check_channels(sigmas.len())?;
    let w = compute_weights(sigmas)?;
    let ws = w.as_slice();
    let mf = m as f64;
    let (axis_successes, joint_successes) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let mut draw = || -> Vec<f64> {
                sigmas
                    .iter()
                    .map(|s| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect()
            };
            let x = draw();
            let y = draw();
            let ok_x = sweep_axis(&x, ws, mf).holds;
            let ok_y = sweep_axis(&y, ws, mf).holds;
            (ok_x as u64 + ok_y as u64, (ok_x && ok_y) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p_axis = axis_successes as f64 / (2 * trials) as f64;
    let (ci_low, ci_high) = wilson_interval(joint_successes, trials);
    Ok(ProbabilityEstimate {
        trials,
        axis_successes,
        joint_successes,
        p_axis,
        p_joint_predicted: p_axis * p_axis,
        p_joint_empirical: joint_successes as f64 / trials as f64,
        ci_low,
        ci_high,
    })
}
