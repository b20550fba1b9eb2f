//! Command-line interface of the `ccrt` binary.

use anyhow::{Context, Result};
use ccrt::crt::solve_common;
use ccrt::mle::estimate;
use ccrt::{ComplexVal, GaussianInt, ModulusSystem, NoisyRemainders};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use crate::campaigns::{self, AdcSettings, Table};
use crate::config::{invalid, Campaign, ConfigError, ExperimentConfig, SystemConfig};
use crate::output::{sha256_hex, write_atomic, write_outputs, Manifest};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Default fail-rate threshold for the ADC campaign, where `M = 1`.
pub const DEFAULT_ADC_TAU: f64 = 0.25;

#[derive(Debug, Parser)]
#[command(
    name = "ccrt",
    version,
    about = "Robust complex-valued CRT reconstruction and experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// Common factor M.
    #[arg(long)]
    pub m: Option<i64>,
    /// Comma-separated Gaussian cofactors, e.g. `1+4i,-3-4i`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cofactors: Vec<String>,
    /// Comma-separated complex remainders.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub remainders: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error-free reconstruction from exact remainders.
    Reconstruct(SystemArgs),
    /// Maximum-likelihood estimate from noisy remainders.
    Estimate {
        #[command(flatten)]
        system: SystemArgs,
        /// Comma-separated per-axis noise standard deviations.
        #[arg(long, value_delimiter = ',')]
        sigmas: Vec<f64>,
    },
    /// RMSE against SNR.
    SimRmse,
    /// Trial fail rates against SNR.
    SimTfr,
    /// Probability of the error-preserving condition.
    SimProb,
    /// Self-reset ADC signal recovery.
    SimAdc,
    /// Counted real multiplications per estimate.
    CountOps {
        /// Channel counts for the built-in system family.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        channels: Vec<usize>,
    },
}

/// Exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

/// Formats integral values exactly (`17+18i`) and others with full
/// precision (`1.5-2i`).
pub fn fmt_complex(z: ComplexVal) -> String {
    let integral = |x: f64| x.fract() == 0.0 && x.abs() < 9.0e15;
    if integral(z.re) && integral(z.im) {
        return GaussianInt::new(z.re as i64, z.im as i64).to_string();
    }
    let re = z.re + 0.0;
    let im = z.im + 0.0;
    if im == 0.0 {
        format!("{re}")
    } else if re == 0.0 {
        format!("{im}i")
    } else if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

fn fmt_list(q: &[GaussianInt]) -> String {
    let items: Vec<String> = q.iter().map(|g| g.to_string()).collect();
    format!("[{}]", items.join(", "))
}

struct Loaded {
    config: ExperimentConfig,
    text: String,
}

fn load(global: &GlobalArgs) -> Result<Option<Loaded>> {
    match &global.config {
        None => Ok(None),
        Some(p) => {
            let (config, text) = ExperimentConfig::load(p)?;
            Ok(Some(Loaded { config, text }))
        }
    }
}

fn require_config(global: &GlobalArgs, campaign: Campaign) -> Result<Loaded> {
    let loaded = load(global)?.ok_or_else(|| invalid("--config", "required by this subcommand"))?;
    loaded.config.validate(campaign)?;
    Ok(loaded)
}

fn parse_complex_list(items: &[String], key: &str) -> Result<Vec<ComplexVal>, ConfigError> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.trim()
                .parse::<ComplexVal>()
                .map_err(|e| invalid(&format!("{key}[{i}]"), format!("`{s}`: {e}")))
        })
        .collect()
}

/// System and remainders from flags, falling back to the config.
fn direct_inputs(
    args: &SystemArgs,
    config: Option<&ExperimentConfig>,
) -> Result<(ModulusSystem, Vec<ComplexVal>)> {
    let sys = if args.m.is_some() || !args.cofactors.is_empty() {
        let m = args
            .m
            .ok_or_else(|| invalid("--m", "required with --cofactors"))?;
        SystemConfig {
            m,
            cofactors: args.cofactors.clone(),
        }
        .build("--cofactors")?
    } else {
        config
            .and_then(|c| c.system.as_ref())
            .ok_or_else(|| invalid("system", "give --m and --cofactors or a config [system] block"))?
            .build("system")?
    };
    let remainders = if !args.remainders.is_empty() {
        parse_complex_list(&args.remainders, "--remainders")?
    } else {
        let input = config
            .and_then(|c| c.input.as_ref())
            .ok_or_else(|| invalid("input.remainders", "give --remainders or a config [input] block"))?;
        parse_complex_list(&input.remainders, "input.remainders")?
    };
    if remainders.len() != sys.len() {
        return Err(invalid(
            "remainders",
            format!("{} values for {} channels", remainders.len(), sys.len()),
        )
        .into());
    }
    Ok((sys, remainders))
}

fn output_path(global: &GlobalArgs, config: &ExperimentConfig) -> Option<PathBuf> {
    global.out.clone().or_else(|| config.output.clone())
}

fn emit(
    global: &GlobalArgs,
    loaded: &Loaded,
    campaign: Campaign,
    seed: u64,
    table: &Table,
    started: Instant,
    stdout: &mut dyn Write,
) -> Result<()> {
    let csv = table.to_csv()?;
    match output_path(global, &loaded.config) {
        None => stdout.write_all(&csv)?,
        Some(path) => {
            let manifest = Manifest {
                campaign: campaign.name().to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                threads: rayon::current_num_threads(),
                config_sha256: sha256_hex(loaded.text.as_bytes()),
                config: loaded.config.clone(),
                csv_path: path.clone(),
                csv_sha256: sha256_hex(&csv),
                rows: table.rows.len(),
                wall_time_s: started.elapsed().as_secs_f64(),
            };
            write_outputs(&path, &csv, &manifest)?;
            writeln!(stdout, "wrote {} rows to {}", table.rows.len(), path.display())?;
        }
    }
    Ok(())
}

fn run_campaign(global: &GlobalArgs, campaign: Campaign, stdout: &mut dyn Write) -> Result<()> {
    let started = Instant::now();
    let loaded = require_config(global, campaign)?;
    let c = &loaded.config;
    let seed = global.seed.unwrap_or(c.seed);
    let trials = c.trials();
    let table = match campaign {
        Campaign::Rmse => campaigns::rmse_table(&campaigns::rmse_campaign(
            &c.system()?,
            &c.noise()?,
            trials,
            seed,
        )?),
        Campaign::Tfr => {
            let sys = c.system()?;
            let tau = c.tau.unwrap_or(sys.m() as f64 / 4.0);
            campaigns::tfr_table(&campaigns::tfr_campaign(&sys, &c.noise()?, trials, tau, seed)?)
        }
        Campaign::Prob => {
            let p = c.prob.as_ref().expect("validated");
            campaigns::prob_table(&campaigns::prob_campaign(p.m, &p.sigma_base, &p.k, trials, seed)?)
        }
        Campaign::Adc => {
            let a = c.adc.as_ref().expect("validated");
            let settings = AdcSettings {
                amplitude: a.amplitude,
                constant: a.constant.map(|[x, y]| (x, y)),
                centering: a.centering,
                tau: c.tau.unwrap_or(DEFAULT_ADC_TAU),
                trials,
                seed,
            };
            campaigns::adc_table(&campaigns::adc_campaign(
                &c.recoveries()?,
                &c.noise()?,
                &settings,
            )?)
        }
    };
    emit(global, &loaded, campaign, seed, &table, started, stdout)
}

fn count_ops(global: &GlobalArgs, channels: &[usize], stdout: &mut dyn Write) -> Result<()> {
    let loaded = load(global)?;
    let seed = global
        .seed
        .or_else(|| loaded.as_ref().map(|l| l.config.seed))
        .unwrap_or(0);
    let systems = match loaded.as_ref().and_then(|l| l.config.system.as_ref()) {
        Some(s) => vec![s.build("system")?],
        None => {
            if channels.is_empty() {
                return Err(invalid("--channels", "list must be nonempty").into());
            }
            channels
                .iter()
                .map(|&l| {
                    campaigns::default_system(l).map_err(|e| invalid("--channels", e.to_string()).into())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let rows = systems
        .iter()
        .map(|s| campaigns::count_ops(s, seed))
        .collect::<Result<Vec<_>>>()?;
    let csv = campaigns::ops_table(&rows).to_csv()?;
    let out = global
        .out
        .clone()
        .or_else(|| loaded.as_ref().and_then(|l| l.config.output.clone()));
    match out {
        None => stdout.write_all(&csv)?,
        Some(p) => write_atomic(&p, &csv)?,
    }
    Ok(())
}

/// Runs one parsed command, writing human-readable output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(invalid("--threads", "must be at least 1").into());
        }
        // a pool may already exist when called from tests; that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let g = &cli.global;
    match &cli.command {
        Command::Reconstruct(args) => {
            let loaded = load(g)?;
            let (sys, remainders) = direct_inputs(args, loaded.as_ref().map(|l| &l.config))?;
            let sol = solve_common(&remainders, &sys).context("reconstruction failed")?;
            writeln!(stdout, "N = {}", fmt_complex(sol.n))?;
            writeln!(stdout, "r_common = {}", fmt_complex(sol.r_common))?;
            writeln!(stdout, "N0 = {}", sol.n0)?;
            writeln!(stdout, "q = {}", fmt_list(&sol.q))?;
            writeln!(stdout, "Gamma = {}", sys.gamma())?;
        }
        Command::Estimate { system, sigmas } => {
            let loaded = load(g)?;
            let config = loaded.as_ref().map(|l| &l.config);
            let (sys, values) = direct_inputs(system, config)?;
            let sigmas = if !sigmas.is_empty() {
                sigmas.clone()
            } else {
                config
                    .and_then(|c| c.input.as_ref())
                    .and_then(|i| i.sigmas.clone())
                    .ok_or_else(|| invalid("input.sigmas", "give --sigmas or a config [input] sigmas list"))?
            };
            let obs = NoisyRemainders::new(values, sigmas).map_err(|e| invalid("sigmas", e.to_string()))?;
            let est = estimate(&obs, &sys)?;
            writeln!(stdout, "N_hat = {}", fmt_complex(est.n_hat))?;
            writeln!(stdout, "r_common_hat = {}", fmt_complex(est.r_c_hat))?;
            writeln!(stdout, "N0_hat = {}", est.n0_hat)?;
            writeln!(stdout, "q_hat = {}", fmt_list(&est.q_hat))?;
            writeln!(stdout, "objective = {}", est.objective)?;
            writeln!(stdout, "evaluations = {}", est.evaluations)?;
            writeln!(stdout, "common_stage_mults = {}", est.ops.common_stage_mults)?;
        }
        Command::SimRmse => run_campaign(g, Campaign::Rmse, stdout)?,
        Command::SimTfr => run_campaign(g, Campaign::Tfr, stdout)?,
        Command::SimProb => run_campaign(g, Campaign::Prob, stdout)?,
        Command::SimAdc => run_campaign(g, Campaign::Adc, stdout)?,
        Command::CountOps { channels } => count_ops(g, channels, stdout)?,
    }
    Ok(())
}
