//! Monte-Carlo campaigns. Each returns typed rows; [`Table`] turns them
//! into CSV.
//!
//! Trial `t` of every grid point draws from stream `t` of the run seed, so
//! neighbouring grid points share their random numbers and curves are
//! smooth. Results are collected in trial order and summed sequentially,
//! which makes them independent of the worker count.

use anyhow::{Context, Result};
use ccrt::adc::{neumaier_sum, run_campaign, AdcCampaign, Centering, Recovery};
use ccrt::mle::estimate;
use ccrt::noise::{channel_sigmas, draw_remainders};
use ccrt::rng::{derive_seed, stream_rng};
use ccrt::robustness::{
    error_preserving_probability, is_error_preserving, theoretical_rmse, weighted_mean_error, ErrorVector,
};
use ccrt::{ComplexVal, ModulusSystem, OpCounter};
use rand::Rng;
use rayon::prelude::*;

use crate::config::NoisePoint;

/// Relative tolerance for "error preserving" in the fail-rate campaign.
pub const PRESERVING_TOL: f64 = 1e-9;

const PREDICTION_SALT: u64 = 0x7072_6564;

/// Uniform point with both coordinates in `[M, M(Γ-1))`.
pub fn draw_point<R: Rng + ?Sized>(sys: &ModulusSystem, rng: &mut R) -> ComplexVal {
    let lo = sys.m() as f64;
    let hi = (sys.m() * (sys.gamma() - 1)) as f64;
    ComplexVal::new(rng.random_range(lo..hi), rng.random_range(lo..hi))
}

/// Outcome of one reconstruction trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub error: ComplexVal,
    pub mean_error: ComplexVal,
    pub preserved: bool,
}

pub fn run_trial(sys: &ModulusSystem, sigmas: &[f64], seed: u64, t: u64) -> Result<TrialOutcome> {
    let mut rng = stream_rng(seed, t);
    let n = draw_point(sys, &mut rng);
    let draw = draw_remainders(n, sys, sigmas, &mut rng)?;
    let est = estimate(&draw.obs, sys)?;
    let mean_error = weighted_mean_error(&ErrorVector::from_sigmas(draw.deltas, sigmas)?);
    Ok(TrialOutcome {
        error: est.n_hat - n,
        mean_error,
        preserved: is_error_preserving(n, est.n_hat, mean_error, sys.m(), PRESERVING_TOL),
    })
}

fn run_trials(sys: &ModulusSystem, sigmas: &[f64], trials: u64, seed: u64) -> Result<Vec<TrialOutcome>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(sys, sigmas, seed, t))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub snr_db: f64,
    pub u: f64,
    pub trials: u64,
    pub rmse: f64,
    pub rmse_theory: f64,
    pub ratio: f64,
}

pub fn rmse_point(sys: &ModulusSystem, point: NoisePoint, trials: u64, seed: u64) -> Result<RmseRow> {
    let sigmas = channel_sigmas(sys, point.u);
    let outcomes = run_trials(sys, &sigmas, trials, seed)?;
    let mse = neumaier_sum(outcomes.iter().map(|o| o.error.norm_sqr())) / trials as f64;
    let rmse = mse.sqrt();
    let rmse_theory = theoretical_rmse(&sigmas)?;
    Ok(RmseRow {
        snr_db: point.snr_db,
        u: point.u,
        trials,
        rmse,
        rmse_theory,
        ratio: rmse / rmse_theory,
    })
}

pub fn rmse_campaign(
    sys: &ModulusSystem,
    points: &[NoisePoint],
    trials: u64,
    seed: u64,
) -> Result<Vec<RmseRow>> {
    points.iter().map(|&p| rmse_point(sys, p, trials, seed)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfrRow {
    pub snr_db: f64,
    pub u: f64,
    pub trials: u64,
    pub tau: f64,
    /// Trials with a component error of at least `tau`.
    pub tfr_robust: f64,
    /// Trials that were not error preserving.
    pub tfr_preserving: f64,
    /// `1 - p_axis²` from the subset-condition probability.
    pub tfr_preserving_predicted: f64,
}

pub fn tfr_point(sys: &ModulusSystem, point: NoisePoint, trials: u64, tau: f64, seed: u64) -> Result<TfrRow> {
    let sigmas = channel_sigmas(sys, point.u);
    let outcomes = run_trials(sys, &sigmas, trials, seed)?;
    let robust_fail = outcomes
        .iter()
        .filter(|o| o.error.re.abs() >= tau || o.error.im.abs() >= tau)
        .count();
    let preserving_fail = outcomes.iter().filter(|o| !o.preserved).count();
    let predicted =
        error_preserving_probability(&sigmas, sys.m(), trials, derive_seed(seed, PREDICTION_SALT))?;
    let n = trials as f64;
    Ok(TfrRow {
        snr_db: point.snr_db,
        u: point.u,
        trials,
        tau,
        tfr_robust: robust_fail as f64 / n,
        tfr_preserving: preserving_fail as f64 / n,
        tfr_preserving_predicted: 1.0 - predicted.p_joint_predicted,
    })
}

pub fn tfr_campaign(
    sys: &ModulusSystem,
    points: &[NoisePoint],
    trials: u64,
    tau: f64,
    seed: u64,
) -> Result<Vec<TfrRow>> {
    points
        .iter()
        .map(|&p| tfr_point(sys, p, trials, tau, seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbRow {
    pub k: f64,
    pub sigmas: Vec<f64>,
    pub p_axis: f64,
    pub p_joint_predicted: f64,
    pub p_joint_empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Binomial standard error of the joint rate at the prediction.
    pub joint_se: f64,
}

/// Probability of the subset condition for `σ_i = base_i + k`.
pub fn prob_campaign(m: i64, sigma_base: &[f64], ks: &[f64], trials: u64, seed: u64) -> Result<Vec<ProbRow>> {
    ks.iter()
        .map(|&k| {
            let sigmas: Vec<f64> = sigma_base.iter().map(|b| b + k).collect();
            let est = error_preserving_probability(&sigmas, m, trials, seed)
                .with_context(|| format!("probability at k = {k}"))?;
            Ok(ProbRow {
                k,
                sigmas,
                p_axis: est.p_axis,
                p_joint_predicted: est.p_joint_predicted,
                p_joint_empirical: est.p_joint_empirical,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                joint_se: est.joint_standard_error(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcRow {
    pub snr_db: f64,
    pub u: f64,
    pub method: &'static str,
    pub rrse_mean: f64,
    pub tfr: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcSettings {
    pub amplitude: f64,
    pub constant: Option<(f64, f64)>,
    pub centering: Centering,
    pub tau: f64,
    pub trials: u64,
    pub seed: u64,
}

/// One row per grid point and method, grid-major.
pub fn adc_campaign(recoveries: &[Recovery], points: &[NoisePoint], s: &AdcSettings) -> Result<Vec<AdcRow>> {
    let mut rows = Vec::with_capacity(points.len() * recoveries.len());
    for p in points {
        for r in recoveries {
            let summary = run_campaign(&AdcCampaign {
                recovery: r.clone(),
                amplitude: s.amplitude,
                constant: s.constant,
                u: p.u,
                trials: s.trials,
                seed: s.seed,
                centering: s.centering,
                tau: s.tau,
            })?;
            rows.push(AdcRow {
                snr_db: p.snr_db,
                u: p.u,
                method: r.name(),
                rrse_mean: summary.rrse_mean,
                tfr: summary.tfr,
                trials: s.trials,
                seed: s.seed,
            });
        }
    }
    Ok(rows)
}

/// Conjugate pairs of Gaussian primes with distinct prime norms, used to
/// build a system of any size for operation counting.
const PRIME_PAIRS: [(i64, i64); 8] = [(1, 4), (2, 5), (1, 6), (4, 5), (2, 7), (5, 6), (3, 8), (5, 8)];

/// Largest channel count [`default_system`] supports.
pub const MAX_DEFAULT_CHANNELS: usize = 2 * PRIME_PAIRS.len() + 1;

/// `M = 10` with `L/2` conjugate prime pairs, plus the real prime 3 when
/// `L` is odd.
pub fn default_system(l: usize) -> Result<ModulusSystem> {
    anyhow::ensure!(
        (1..=MAX_DEFAULT_CHANNELS).contains(&l),
        "channel count must be in 1..={MAX_DEFAULT_CHANNELS}, got {l}"
    );
    let mut cofactors = Vec::with_capacity(l);
    for &(a, b) in PRIME_PAIRS.iter().take(l / 2) {
        cofactors.push(ccrt::GaussianInt::new(a, b));
        cofactors.push(ccrt::GaussianInt::new(a, -b));
    }
    if l % 2 == 1 {
        cofactors.push(ccrt::GaussianInt::real(3));
    }
    Ok(ModulusSystem::build(10, cofactors)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpsRow {
    pub channels: usize,
    pub ops: OpCounter,
    pub bound: u64,
}

/// Counts for one estimate on a seeded noisy instance.
pub fn count_ops(sys: &ModulusSystem, seed: u64) -> Result<OpsRow> {
    let mut rng = stream_rng(seed, 0);
    let n = draw_point(sys, &mut rng);
    let sigmas = channel_sigmas(sys, 0.01);
    let draw = draw_remainders(n, sys, &sigmas, &mut rng)?;
    let est = estimate(&draw.obs, sys)?;
    let l = sys.len() as u64;
    Ok(OpsRow {
        channels: sys.len(),
        ops: est.ops,
        bound: 8 * l * l,
    })
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
    }
}

// `{}` on f64 prints the shortest string that round-trips, so equal values
// always give equal bytes.
fn f(x: f64) -> String {
    format!("{x}")
}

pub fn rmse_table(rows: &[RmseRow]) -> Table {
    let mut t = Table::new(&["snr_db", "u", "trials", "rmse", "rmse_theory", "ratio"]);
    for r in rows {
        t.rows.push(vec![
            f(r.snr_db),
            f(r.u),
            r.trials.to_string(),
            f(r.rmse),
            f(r.rmse_theory),
            f(r.ratio),
        ]);
    }
    t
}

pub fn tfr_table(rows: &[TfrRow]) -> Table {
    let mut t = Table::new(&[
        "snr_db",
        "u",
        "trials",
        "tau",
        "tfr_robust",
        "tfr_preserving",
        "tfr_preserving_predicted",
    ]);
    for r in rows {
        t.rows.push(vec![
            f(r.snr_db),
            f(r.u),
            r.trials.to_string(),
            f(r.tau),
            f(r.tfr_robust),
            f(r.tfr_preserving),
            f(r.tfr_preserving_predicted),
        ]);
    }
    t
}

pub fn prob_table(rows: &[ProbRow]) -> Table {
    let channels = rows.first().map_or(0, |r| r.sigmas.len());
    let mut header = vec!["k".to_string()];
    header.extend((1..=channels).map(|i| format!("sigma{i}")));
    header.extend(
        [
            "p_axis",
            "p_joint_predicted",
            "p_joint_empirical",
            "ci_low",
            "ci_high",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for r in rows {
        let mut row = vec![f(r.k)];
        row.extend(r.sigmas.iter().map(|&s| f(s)));
        row.extend(
            [
                r.p_axis,
                r.p_joint_predicted,
                r.p_joint_empirical,
                r.ci_low,
                r.ci_high,
            ]
            .map(f),
        );
        t.rows.push(row);
    }
    t
}

pub fn adc_table(rows: &[AdcRow]) -> Table {
    let mut t = Table::new(&["snr_db", "u", "method", "rrse_mean", "tfr", "trials", "seed"]);
    for r in rows {
        t.rows.push(vec![
            f(r.snr_db),
            f(r.u),
            r.method.to_string(),
            f(r.rrse_mean),
            f(r.tfr),
            r.trials.to_string(),
            r.seed.to_string(),
        ]);
    }
    t
}

pub fn ops_table(rows: &[OpsRow]) -> Table {
    let mut t = Table::new(&[
        "channels",
        "evaluations",
        "common_stage_mults",
        "bound_8l2",
        "reconstruction_mults",
        "total_mults",
    ]);
    for r in rows {
        t.rows.push(vec![
            r.channels.to_string(),
            r.ops.evaluations.to_string(),
            r.ops.common_stage_mults.to_string(),
            r.bound.to_string(),
            r.ops.reconstruction_mults.to_string(),
            r.ops.total_mults().to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(snr_db: f64) -> NoisePoint {
        NoisePoint {
            snr_db,
            u: ccrt::noise::u_from_snr(snr_db),
        }
    }

    fn small_system() -> ModulusSystem {
        let c = ["3+4i", "3-4i", "4"].iter().map(|s| s.parse().unwrap()).collect();
        ModulusSystem::build(10, c).unwrap()
    }

    #[test]
    fn default_systems_build_for_every_size() {
        for l in 1..=MAX_DEFAULT_CHANNELS {
            let sys = default_system(l).unwrap();
            assert_eq!(sys.len(), l);
        }
        assert!(default_system(0).is_err());
        assert!(default_system(MAX_DEFAULT_CHANNELS + 1).is_err());
    }

    #[test]
    fn rmse_matches_theory_at_high_snr() {
        let row = rmse_point(&small_system(), point(45.0), 2000, 1).unwrap();
        assert!((row.ratio - 1.0).abs() < 0.1, "{row:?}");
    }

    #[test]
    fn fail_rates_vanish_at_high_snr() {
        let row = tfr_point(&small_system(), point(50.0), 500, 2.5, 1).unwrap();
        assert_eq!(row.tfr_robust, 0.0);
        assert_eq!(row.tfr_preserving, 0.0);
        assert!(row.tfr_preserving_predicted < 1e-3);
    }

    #[test]
    fn tables_are_rectangular() {
        let rows = prob_campaign(10, &[2.4, 2.5], &[0.0, 1.0], 200, 1).unwrap();
        let t = prob_table(&rows);
        assert_eq!(t.header.len(), 8);
        assert!(t.rows.iter().all(|r| r.len() == t.header.len()));
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("k,sigma1,sigma2,p_axis,"));
    }

    #[test]
    fn counts_stay_within_quadratic_bound() {
        for l in [1, 2, 4, 8] {
            let row = count_ops(&default_system(l).unwrap(), 3).unwrap();
            assert_eq!(row.ops.evaluations, 2 * l as u64);
            assert!(row.ops.common_stage_mults <= row.bound);
        }
    }
}
