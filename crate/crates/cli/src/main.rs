//! `wiretap`: train, evaluate and sweep seeded modular wiretap codes.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use wiretap_core::experiment::{parse_fading, Campaign, ExperimentConfig};
use wiretap_core::metrics::equivocation_rate;
use wiretap_core::reliability::Autoencoder;
use wiretap_core::Error;

#[derive(Parser)]
#[command(
    name = "wiretap",
    version,
    about = "Seeded modular wiretap codes over fading channels"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config file; defaults to the built-in profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in profile used when no config file is given.
    #[arg(long, global = true, default_value = "smoke")]
    profile: String,
    /// Master RNG seed, overriding the config.
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
    /// Output directory for models and CSVs.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Model file to load (evaluation) or write (training).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Hash seed in hex, overriding the config.
    #[arg(long, global = true)]
    uhf_seed: Option<String>,
    /// Monte-Carlo trials, overriding the config.
    #[arg(long, global = true)]
    trials: Option<u64>,
}

#[derive(Args, Clone)]
struct Point {
    /// `awgn` or `rayleigh-T-tap`.
    #[arg(long, default_value = "awgn")]
    fading: String,
    #[arg(long, default_value_t = 16)]
    blocklength: usize,
}

#[derive(Args, Clone)]
struct EveLink {
    /// Eve's Eb/N0 in dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eve_db: f64,
    /// Eve's fading variance; defaults to Bob's.
    #[arg(long)]
    omega_z: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or retrain) the reliability layer for one scenario.
    Train(Point),
    /// Bob's block error rate on the secret message.
    EvalBler(Point),
    /// Leakage I(M; Z^n) to Eve, estimated with a fresh critic.
    EvalLeakage {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        eve: EveLink,
    },
    /// Equivocation rate derived from the leakage estimate.
    EvalEquivocation {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        eve: EveLink,
    },
    /// Constant-rate sweep over blocklengths, fadings and Eve levels.
    SweepBlocklength,
    /// Leakage versus number of fading taps.
    SweepTaps,
    /// Leakage for each configured fading variance of Eve's link.
    SweepVariance,
    /// Distance histograms of quantized encodings across all seeds.
    SeedAnalysis,
    /// Stochastic-degradation check of Eve's link against Bob's.
    DegradationCheck {
        #[arg(long, default_value_t = 16)]
        blocklength: usize,
        #[command(flatten)]
        eve: EveLink,
    },
}

fn load_config(global: &Global) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::profile(&global.profile)?,
    };
    if let Some(seed) = global.rng_seed {
        config.seed = seed;
    }
    if let Some(hex) = &global.uhf_seed {
        let digits = hex.trim_start_matches("0x").trim_start_matches("0X");
        config.uhf_seed = u32::from_str_radix(digits, 16)
            .map_err(|_| Error::Config(format!("--uhf-seed: cannot parse {hex:?}")))?;
    }
    if let Some(trials) = global.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

/// Campaign with the `--model` file, if any, registered for `point`.
fn campaign_for(
    global: &Global,
    config: ExperimentConfig,
    point: Option<&Point>,
) -> anyhow::Result<(Campaign, usize, usize)> {
    let mut campaign = Campaign::new(config, &global.out)?;
    let (taps, n) = match point {
        Some(p) => (parse_fading("--fading", &p.fading)?, p.blocklength),
        None => (0, 0),
    };
    if let (Some(path), Some(_)) = (&global.model, point) {
        let model = Autoencoder::load(path)?;
        if model.params().n != n {
            return Err(Error::Config(format!(
                "--model has blocklength {}, requested {n}",
                model.params().n
            ))
            .into());
        }
        campaign.insert_model(taps, model);
    }
    Ok((campaign, taps, n))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = load_config(&cli.global)?;
    let omega_y = config.omega_y;
    match &cli.command {
        Command::Train(point) => {
            let taps = parse_fading("--fading", &point.fading)?;
            let mut campaign = Campaign::new(config, &cli.global.out)?;
            let default_path = campaign.model_path(taps, point.blocklength);
            if default_path.exists() {
                std::fs::remove_file(&default_path)
                    .with_context(|| format!("removing stale {}", default_path.display()))?;
            }
            let model = campaign.model(taps, point.blocklength)?.clone();
            if let Some(path) = &cli.global.model {
                model.save(path)?;
                println!("model {}", path.display());
            } else {
                println!("model {}", default_path.display());
            }
        }
        Command::EvalBler(point) => {
            let (mut campaign, taps, n) = campaign_for(&cli.global, config, Some(point))?;
            let r = campaign.bler(taps, n)?;
            println!("trials {}", r.trials);
            println!("errors {}", r.error_count);
            println!("p_e {}", r.p_e);
            println!("ci95 {} {}", r.ci_low, r.ci_high);
            println!("word_error_rate {}", r.word_error_rate());
        }
        Command::EvalLeakage { point, eve } | Command::EvalEquivocation { point, eve } => {
            let (mut campaign, taps, n) = campaign_for(&cli.global, config, Some(point))?;
            let omega_z = eve.omega_z.unwrap_or(omega_y);
            let est = campaign.leakage(taps, n, eve.eve_db, omega_z)?;
            println!("leakage_bits {}", est.value_bits);
            println!("leakage_nats {}", est.value_nats);
            println!("std_error_bits {}", est.std_error_bits);
            println!("eval_samples {}", est.sample_count);
            if matches!(cli.command, Command::EvalEquivocation { .. }) {
                let k = campaign.config().params(n)?.k;
                let e = equivocation_rate(est.value_bits, k, n)?;
                println!("equivocation_rate {}", e.rate);
                println!("secure_rate {}", e.secure_rate);
            }
        }
        Command::SweepBlocklength => {
            let mut campaign = Campaign::new(config, &cli.global.out)?;
            report(campaign.run_const_rates()?);
        }
        Command::SweepTaps => {
            let mut campaign = Campaign::new(config, &cli.global.out)?;
            report(campaign.run_taps()?);
        }
        Command::SweepVariance => {
            let mut campaign = Campaign::new(config, &cli.global.out)?;
            report(campaign.run_variance()?);
        }
        Command::SeedAnalysis => {
            let mut campaign = Campaign::new(config, &cli.global.out)?;
            if let Some(path) = &cli.global.model {
                let model = Autoencoder::load(path)?;
                let (taps, n) = (
                    campaign.config().seed_fading,
                    campaign.config().seed_blocklength,
                );
                if model.params().n != n {
                    return Err(Error::Config(format!(
                        "--model has blocklength {}, seed analysis uses {n}",
                        model.params().n
                    ))
                    .into());
                }
                campaign.insert_model(taps, model);
            }
            report(campaign.run_seed_analysis()?);
        }
        Command::DegradationCheck { blocklength, eve } => {
            let campaign = Campaign::new(config, &cli.global.out)?;
            let omega_z = eve.omega_z.unwrap_or(omega_y);
            let degraded = campaign.degradation_check(*blocklength, eve.eve_db, omega_z)?;
            println!("degraded {degraded}");
        }
    }
    Ok(())
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        info!("wrote {}", p.display());
        println!("{}", p.display());
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Parse(_) | Error::Contract(_)) => 2,
        Some(Error::TrainingFailure { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
