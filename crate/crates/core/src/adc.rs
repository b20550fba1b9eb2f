//! Multi-channel self-reset ADC simulation.
//!
//! A complex bandlimited signal is sampled at the Nyquist rate. Each channel
//! with modulus `MΓ_i = ρ_i e^{iθ_i}` rotates the noisy sample by `e^{-iθ_i}`,
//! folds both components into `[0, ρ_i)`, and rotates back; the result is
//! the remainder `⟨f⟩_{MΓ_i}`. Samples are then recovered either with the
//! complex MLE estimator or with two independent real-valued estimators on
//! real moduli (one set for each axis).

use crate::complex_mod::{mod_real, rounded_quotient, ComplexVal};
use crate::crt::{ModulusSystem, RealSystem};
use crate::error::{Error, Result};
use crate::gaussian::GaussianInt;
use crate::mle::{estimate, estimate_real_axis_split, NoisyRemainders};
use crate::noise::sample_error;
use crate::rng::{derive_seed, stream_rng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coefficient indices run over `-HALF_SPAN..=HALF_SPAN`.
pub const HALF_SPAN: i64 = 30;
pub const COEFFICIENTS: usize = (2 * HALF_SPAN + 1) as usize;

const SIGNAL_SALT: u64 = 0x5349_474e;
const NOISE_SALT: u64 = 0x4e4f_4953;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SignalMode {
    /// Coefficients uniform in `[-1, 1]`, drawn from the given seed.
    Random { seed: u64 },
    /// Every `a_k = a`, `b_k = b`.
    Constant { a: f64, b: f64 },
}

/// `g(t) = Σ_k (a_k + i b_k)·A·sinc(t - k)` for `k = -30..=30`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedSignal {
    pub amplitude: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl BandlimitedSignal {
    /// Sample at integer time `n`, where the sinc sum collapses to one term.
    pub fn sample(&self, n: i64) -> ComplexVal {
        if !(-HALF_SPAN..=HALF_SPAN).contains(&n) {
            return ComplexVal::new(0.0, 0.0);
        }
        let k = (n + HALF_SPAN) as usize;
        ComplexVal::new(self.a[k], self.b[k]) * self.amplitude
    }

    /// The nonzero Nyquist-rate samples, `n = -30..=30`.
    pub fn samples(&self) -> Vec<ComplexVal> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| ComplexVal::new(a, b) * self.amplitude)
            .collect()
    }

    /// Coefficients rounded to multiples of `2^-bits`, as a converter with
    /// finite resolution would deliver them. With `bits ≤ 30` and moderate
    /// amplitudes every remainder of such samples is exactly representable.
    pub fn quantized(mut self, bits: u32) -> Self {
        let scale = (bits as f64).exp2();
        for x in self.a.iter_mut().chain(self.b.iter_mut()) {
            *x = (*x * scale).round() / scale;
        }
        self
    }

    /// `g(t)` at arbitrary real time.
    pub fn value_at(&self, t: f64) -> ComplexVal {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(i, (&a, &b))| {
                let k = i as f64 - HALF_SPAN as f64;
                ComplexVal::new(a, b) * sinc(t - k)
            })
            .sum::<ComplexVal>()
            * self.amplitude
    }
}

pub fn gen_signal(mode: SignalMode, amplitude: f64) -> Result<BandlimitedSignal> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(Error::InvalidInput(format!(
            "amplitude must be finite and nonnegative, got {amplitude}"
        )));
    }
    let (a, b) = match mode {
        SignalMode::Random { seed } => {
            let mut rng = stream_rng(derive_seed(seed, SIGNAL_SALT), 0);
            let mut a = Vec::with_capacity(COEFFICIENTS);
            let mut b = Vec::with_capacity(COEFFICIENTS);
            for _ in 0..COEFFICIENTS {
                a.push(rng.random_range(-1.0..=1.0));
                b.push(rng.random_range(-1.0..=1.0));
            }
            (a, b)
        }
        SignalMode::Constant { a, b } => {
            if !(-1.0..=1.0).contains(&a) || !(-1.0..=1.0).contains(&b) {
                return Err(Error::InvalidInput(format!(
                    "coefficients must lie in [-1, 1], got ({a}, {b})"
                )));
            }
            (vec![a; COEFFICIENTS], vec![b; COEFFICIENTS])
        }
    };
    Ok(BandlimitedSignal { amplitude, a, b })
}

/// One SR-ADC pair with modulus `ρ e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub modulus: GaussianInt,
    pub rho: f64,
    pub theta: f64,
}

impl Channel {
    pub fn new(modulus: GaussianInt) -> Result<Self> {
        if modulus.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self {
            modulus,
            rho: modulus.abs(),
            theta: (modulus.im as f64).atan2(modulus.re as f64),
        })
    }
}

/// Channels built from the full moduli `MΓ_i` of a system.
pub fn channel_bank(sys: &ModulusSystem) -> Vec<Channel> {
    sys.full_moduli()
        .into_iter()
        .map(|m| Channel::new(m).expect("system moduli are nonzero"))
        .collect()
}

/// Folds `sample` in the rotated frame: returns `y ∈ F_ρ` and the remainder
/// `r = y·e^{iθ} ∈ F_{MΓ}`.
///
/// The number of resets is a Gaussian integer `k` with `sample = r + kMΓ`,
/// so `r` is formed as `sample - kMΓ` once `k` is known. That removes the
/// rounding of the rotation and keeps noiseless recovery bit-exact.
pub fn channel_fold(sample: ComplexVal, channel: &Channel) -> (ComplexVal, ComplexVal) {
    let rot = ComplexVal::from_polar(1.0, channel.theta);
    let f = sample * rot.conj();
    let y = ComplexVal::new(mod_real(f.re, channel.rho), mod_real(f.im, channel.rho));
    let rotated = y * rot;
    let r = match rounded_quotient(sample - rotated, channel.modulus) {
        Ok(k) => sample - channel.modulus.to_complex() * k.to_complex(),
        Err(_) => rotated,
    };
    (y, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Keep the representative in `[0, MΓ)²`.
    None,
    /// Shift into `[-MΓ/2, MΓ/2)²`.
    Signed,
}

/// A recovered value split into its integer lattice part and the common
/// remainder, so centering can shift the integer part before the two are
/// added and no low-order bits of negative values are lost.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Parts {
    whole: ComplexVal,
    frac: ComplexVal,
}

impl Parts {
    fn value(self) -> ComplexVal {
        self.whole + self.frac
    }

    fn centered(self, range: f64, centering: Centering) -> ComplexVal {
        let axis = |w: f64, f: f64| match centering {
            Centering::Signed if w + f >= 0.5 * range => (w - range) + f,
            _ => w + f,
        };
        ComplexVal::new(
            axis(self.whole.re, self.frac.re),
            axis(self.whole.im, self.frac.im),
        )
    }
}

fn mle_parts(obs: &NoisyRemainders, sys: &ModulusSystem) -> Result<Parts> {
    let est = estimate(obs, sys)?;
    Ok(Parts {
        whole: est.n0_hat.to_complex() * sys.m() as f64,
        frac: est.r_c_hat,
    })
}

fn dual_real_parts(obs: &NoisyRemainders, sys: &RealSystem) -> Result<Parts> {
    let re: Vec<f64> = obs.values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = obs.values.iter().map(|v| v.im).collect();
    let (wr, fr) = estimate_real_axis_split(&re, &obs.sigmas, sys)?;
    let (wi, fi) = estimate_real_axis_split(&im, &obs.sigmas, sys)?;
    Ok(Parts {
        whole: ComplexVal::new(wr as f64, wi as f64),
        frac: ComplexVal::new(fr, fi),
    })
}

/// Recovery method with its moduli.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// Complex MLE on Gaussian-integer moduli.
    MleCcrt(ModulusSystem),
    /// Independent real-valued MLE on each axis; both axes use the same
    /// real moduli.
    DualReal(RealSystem),
}

impl Recovery {
    pub fn name(&self) -> &'static str {
        match self {
            Recovery::MleCcrt(_) => "mle_ccrt",
            Recovery::DualReal(_) => "dual_real",
        }
    }

    /// Side of the square of uniquely recoverable values.
    pub fn dynamic_range(&self) -> f64 {
        match self {
            Recovery::MleCcrt(s) => s.dynamic_range() as f64,
            Recovery::DualReal(s) => s.dynamic_range() as f64,
        }
    }

    /// `σ_i = u·|modulus_i|` for each channel.
    pub fn sigmas(&self, u: f64) -> Vec<f64> {
        match self {
            Recovery::MleCcrt(s) => (0..s.len()).map(|i| u * s.full_modulus(i).abs()).collect(),
            Recovery::DualReal(s) => s.moduli().iter().map(|&m| u * m as f64).collect(),
        }
    }

    /// Observes one sample through the channels with independent noise per
    /// channel and recovers it, before centering.
    pub fn observe_and_recover<R: Rng + ?Sized>(
        &self,
        sample: ComplexVal,
        sigmas: &[f64],
        rng: &mut R,
    ) -> Result<ComplexVal> {
        Ok(self.observe_parts(sample, sigmas, rng)?.value())
    }

    fn observe_parts<R: Rng + ?Sized>(
        &self,
        sample: ComplexVal,
        sigmas: &[f64],
        rng: &mut R,
    ) -> Result<Parts> {
        match self {
            Recovery::MleCcrt(sys) => {
                let values = channel_bank(sys)
                    .iter()
                    .zip(sigmas)
                    .map(|(ch, &s)| channel_fold(sample + sample_error(s, rng), ch).1)
                    .collect();
                mle_parts(&NoisyRemainders::new(values, sigmas.to_vec())?, sys)
            }
            Recovery::DualReal(sys) => {
                let values = sys
                    .moduli()
                    .iter()
                    .zip(sigmas)
                    .map(|(&m, &s)| {
                        let f = sample + sample_error(s, rng);
                        let m = m as f64;
                        ComplexVal::new(mod_real(f.re, m), mod_real(f.im, m))
                    })
                    .collect();
                dual_real_parts(&NoisyRemainders::new(values, sigmas.to_vec())?, sys)
            }
        }
    }
}

/// Per-signal recovery outcome. Each sample counts as one trial for the
/// fail rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub rrse: f64,
    pub tfr: f64,
    pub tau: f64,
    pub success: Vec<bool>,
    pub failures: u64,
    pub samples: u64,
}

/// `√(Σ|g - ĝ|² / Σ|g|²)`; zero when both sums vanish.
pub fn rrse(truth: &[ComplexVal], recovered: &[ComplexVal]) -> f64 {
    let num: f64 = truth.iter().zip(recovered).map(|(g, h)| (g - h).norm_sqr()).sum();
    let den: f64 = truth.iter().map(|g| g.norm_sqr()).sum();
    if num == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Fraction of errors with `|Re e| ≥ τ` or `|Im e| ≥ τ`.
pub fn tfr_metric(errors: &[ComplexVal], tau: f64) -> Result<f64> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    if errors.is_empty() {
        return Ok(0.0);
    }
    let fails = errors.iter().filter(|e| !within(**e, tau)).count();
    Ok(fails as f64 / errors.len() as f64)
}

fn within(e: ComplexVal, tau: f64) -> bool {
    e.re.abs() < tau && e.im.abs() < tau
}

/// Observes and recovers every sample of `signal` with noise level `u`.
pub fn run_recovery<R: Rng + ?Sized>(
    signal: &BandlimitedSignal,
    recovery: &Recovery,
    u: f64,
    centering: Centering,
    tau: f64,
    rng: &mut R,
) -> Result<TrialReport> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise level must be nonnegative, got {u}"
        )));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    let sigmas = recovery.sigmas(u);
    let range = recovery.dynamic_range();
    let truth = signal.samples();
    let mut recovered = Vec::with_capacity(truth.len());
    for &g in &truth {
        let parts = if u == 0.0 {
            recover_noiseless(recovery, g)?
        } else {
            recovery.observe_parts(g, &sigmas, rng)?
        };
        recovered.push(parts.centered(range, centering));
    }
    let success: Vec<bool> = truth
        .iter()
        .zip(&recovered)
        .map(|(g, h)| within(g - h, tau))
        .collect();
    let failures = success.iter().filter(|s| !**s).count() as u64;
    let samples = truth.len() as u64;
    Ok(TrialReport {
        rrse: rrse(&truth, &recovered),
        tfr: failures as f64 / samples as f64,
        tau,
        success,
        failures,
        samples,
    })
}

/// Noiseless observation with equal weights.
fn recover_noiseless(recovery: &Recovery, g: ComplexVal) -> Result<Parts> {
    match recovery {
        Recovery::MleCcrt(sys) => {
            let values = channel_bank(sys).iter().map(|ch| channel_fold(g, ch).1).collect();
            mle_parts(&NoisyRemainders::new(values, vec![1.0; sys.len()])?, sys)
        }
        Recovery::DualReal(sys) => {
            let values = sys
                .moduli()
                .iter()
                .map(|&m| ComplexVal::new(mod_real(g.re, m as f64), mod_real(g.im, m as f64)))
                .collect();
            dual_real_parts(&NoisyRemainders::new(values, vec![1.0; sys.len()])?, sys)
        }
    }
}

/// Settings for a batch of independent signal realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcCampaign {
    pub recovery: Recovery,
    pub amplitude: f64,
    /// Constant coefficients, or `None` for fresh random coefficients per
    /// trial.
    pub constant: Option<(f64, f64)>,
    pub u: f64,
    pub trials: u64,
    pub seed: u64,
    pub centering: Centering,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcSummary {
    pub rrse_mean: f64,
    /// Failed samples over all samples of all trials.
    pub tfr: f64,
    pub trials: u64,
    pub samples: u64,
}

/// Runs `trials` realizations; trial `t` uses noise stream `t` and, for
/// random coefficients, signal seed derived from `(seed, t)`.
pub fn run_campaign(c: &AdcCampaign) -> Result<AdcSummary> {
    if c.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let reports = (0..c.trials)
        .into_par_iter()
        .map(|t| {
            let mode = match c.constant {
                Some((a, b)) => SignalMode::Constant { a, b },
                None => SignalMode::Random {
                    seed: derive_seed(c.seed, t),
                },
            };
            let signal = gen_signal(mode, c.amplitude)?;
            let mut rng = stream_rng(derive_seed(c.seed, NOISE_SALT), t);
            run_recovery(&signal, &c.recovery, c.u, c.centering, c.tau, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let rrse_sum = neumaier_sum(reports.iter().map(|r| r.rrse));
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let samples: u64 = reports.iter().map(|r| r.samples).sum();
    Ok(AdcSummary {
        rrse_mean: rrse_sum / c.trials as f64,
        tfr: failures as f64 / samples as f64,
        trials: c.trials,
        samples,
    })
}

/// Compensated summation in iteration order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
