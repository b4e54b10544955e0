//! Experiment configuration and the sweep campaigns built on it.
//!
//! Config files are flat `key = value` lines grouped under `[section]`
//! headers; `#` starts a comment and lists are comma separated. Every
//! experiment point draws from an RNG substream keyed by a label describing
//! the point, so a CSV's contents do not depend on what else was run.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use crate::analysis::{max_pairwise_distance, seed_dispersion, SeedDispersion};
use crate::channel::{is_stochastically_degraded, noise_variance, ChannelModel, FadingProfile};
use crate::error::{Error, Result};
use crate::metrics::{
    equivocation_rate, estimate_bler, estimate_leakage, BlerResult, WiretapSystem,
};
use crate::mine::{MiEstimate, MineConfig};
use crate::reliability::{build_autoencoder, Autoencoder, CodeParams, TrainConfig};
use crate::rng::substream;
use crate::seclayer::Seed;

pub const SMOKE_CONFIG: &str = include_str!("../configs/smoke.cfg");
pub const FULL_CONFIG: &str = include_str!("../configs/full.cfg");

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub uhf_seed: u32,
    pub secure_rate: f64,
    pub reliability_rate: f64,
    pub blocklengths: Vec<usize>,
    pub bob_ebn0_db: f64,
    pub omega_y: f64,
    /// Tap counts of the constant-rate scenarios; 0 is AWGN.
    pub fadings: Vec<usize>,
    pub eve_ebn0_db: Vec<f64>,
    pub taps: Vec<usize>,
    pub taps_blocklengths: Vec<usize>,
    pub taps_eve_ebn0_db: f64,
    pub omega_z: Vec<f64>,
    pub variance_fadings: Vec<usize>,
    pub variance_eve_ebn0_db: f64,
    pub train: TrainConfig,
    pub mine: MineConfig,
    pub trials: u64,
    pub seed_blocklength: usize,
    pub seed_fading: usize,
    pub quantizer_levels: usize,
}

impl ExperimentConfig {
    pub fn smoke() -> Self {
        Self::parse(SMOKE_CONFIG).expect("shipped smoke config is valid")
    }

    pub fn full() -> Self {
        Self::parse(FULL_CONFIG).expect("shipped full config is valid")
    }

    /// Built-in profile by name.
    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "smoke" => Ok(Self::smoke()),
            "full" => Ok(Self::full()),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses a complete config; every key is required and unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = parse_sections(text)?;
        let mut take = |key: &str| -> Result<String> {
            entries
                .remove(key)
                .ok_or_else(|| Error::Config(format!("missing key {key}")))
        };
        let config = Self {
            name: take("experiment.name")?,
            seed: parse_value("experiment.seed", &take("experiment.seed")?)?,
            uhf_seed: parse_hex("experiment.uhf_seed", &take("experiment.uhf_seed")?)?,
            secure_rate: parse_value("code.secure_rate", &take("code.secure_rate")?)?,
            reliability_rate: parse_value(
                "code.reliability_rate",
                &take("code.reliability_rate")?,
            )?,
            blocklengths: parse_list("code.blocklengths", &take("code.blocklengths")?)?,
            bob_ebn0_db: parse_value("channel.bob_ebn0_db", &take("channel.bob_ebn0_db")?)?,
            omega_y: parse_value("channel.omega_y", &take("channel.omega_y")?)?,
            fadings: parse_fadings("channel.fadings", &take("channel.fadings")?)?,
            eve_ebn0_db: parse_list("channel.eve_ebn0_db", &take("channel.eve_ebn0_db")?)?,
            taps: parse_list("channel.taps", &take("channel.taps")?)?,
            taps_blocklengths: parse_list(
                "channel.taps_blocklengths",
                &take("channel.taps_blocklengths")?,
            )?,
            taps_eve_ebn0_db: parse_value(
                "channel.taps_eve_ebn0_db",
                &take("channel.taps_eve_ebn0_db")?,
            )?,
            omega_z: parse_list("channel.omega_z", &take("channel.omega_z")?)?,
            variance_fadings: parse_fadings(
                "channel.variance_fadings",
                &take("channel.variance_fadings")?,
            )?,
            variance_eve_ebn0_db: parse_value(
                "channel.variance_eve_ebn0_db",
                &take("channel.variance_eve_ebn0_db")?,
            )?,
            train: TrainConfig {
                epochs: parse_value("train.epochs", &take("train.epochs")?)?,
                batches_per_epoch: parse_value(
                    "train.batches_per_epoch",
                    &take("train.batches_per_epoch")?,
                )?,
                batch_size: parse_value("train.batch_size", &take("train.batch_size")?)?,
                learning_rate: parse_value("train.learning_rate", &take("train.learning_rate")?)?,
                validation_words: parse_value(
                    "train.validation_words",
                    &take("train.validation_words")?,
                )?,
            },
            mine: MineConfig {
                epochs: parse_value("mine.epochs", &take("mine.epochs")?)?,
                samples: parse_value("mine.samples", &take("mine.samples")?)?,
                batch_size: parse_value("mine.batch_size", &take("mine.batch_size")?)?,
                learning_rate: parse_value("mine.learning_rate", &take("mine.learning_rate")?)?,
                decay: parse_value("mine.decay", &take("mine.decay")?)?,
                ema_rate: parse_value("mine.ema_rate", &take("mine.ema_rate")?)?,
                eval_samples: parse_value("mine.eval_samples", &take("mine.eval_samples")?)?,
                hidden_width: parse_value("mine.hidden_width", &take("mine.hidden_width")?)?,
                hidden_layers: parse_value("mine.hidden_layers", &take("mine.hidden_layers")?)?,
                precision: parse_value("mine.precision", &take("mine.precision")?)?,
            },
            trials: parse_value("eval.trials", &take("eval.trials")?)?,
            seed_blocklength: parse_value(
                "eval.seed_blocklength",
                &take("eval.seed_blocklength")?,
            )?,
            seed_fading: parse_fading("eval.seed_fading", &take("eval.seed_fading")?)?,
            quantizer_levels: parse_value(
                "eval.quantizer_levels",
                &take("eval.quantizer_levels")?,
            )?,
        };
        if let Some(key) = entries.keys().min() {
            return Err(Error::Config(format!("unknown key {key}")));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        if self.blocklengths.is_empty() {
            return bad("code.blocklengths", "empty grid");
        }
        for &n in self
            .blocklengths
            .iter()
            .chain(&self.taps_blocklengths)
            .chain([&self.seed_blocklength])
        {
            let params = CodeParams::from_rates(n, self.secure_rate, self.reliability_rate)
                .map_err(|e| Error::Config(format!("code: blocklength {n}: {e}")))?;
            Seed::from_value(self.uhf_seed, params.q as u32)
                .map_err(|e| Error::Config(format!("experiment.uhf_seed: {e} (q={})", params.q)))?;
        }
        if !(self.omega_y > 0.0) || self.omega_z.iter().any(|&w| !(w > 0.0)) {
            return bad("channel.omega_z", "fading variances must be positive");
        }
        if self.taps.contains(&0) {
            return bad("channel.taps", "tap counts must be positive");
        }
        if self.trials == 0 {
            return bad("eval.trials", "must be positive");
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 || self.train.batches_per_epoch == 0
        {
            return bad("train", "epochs and batch sizes must be positive");
        }
        if self.quantizer_levels < 2 {
            return bad("eval.quantizer_levels", "need at least 2 levels");
        }
        self.mine.validate()
    }

    pub fn params(&self, n: usize) -> Result<CodeParams> {
        CodeParams::from_rates(n, self.secure_rate, self.reliability_rate)
    }
}

/// `section.key → value`, with duplicate keys rejected.
fn parse_sections(text: &str) -> Result<HashMap<String, String>> {
    let mut section = String::new();
    let mut entries = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        if section.is_empty() {
            return Err(Error::Config(format!(
                "line {}: key outside a section",
                lineno + 1
            )));
        }
        let full = format!("{section}.{}", key.trim());
        if entries
            .insert(full.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::Config(format!("duplicate key {full}")));
        }
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_value(key, v.trim()))
        .collect()
}

fn parse_hex(key: &str, value: &str) -> Result<u32> {
    let digits = value.trim_start_matches("0x").trim_start_matches("0X");
    u32::from_str_radix(digits, 16)
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

/// `awgn` → 0, `rayleigh-T-tap` → T.
pub fn parse_fading(key: &str, value: &str) -> Result<usize> {
    if value == "awgn" {
        return Ok(0);
    }
    value
        .strip_prefix("rayleigh-")
        .and_then(|v| v.strip_suffix("-tap"))
        .and_then(|t| t.parse().ok())
        .filter(|&t: &usize| t > 0)
        .ok_or_else(|| Error::Config(format!("{key}: unknown fading {value:?}")))
}

fn parse_fadings(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| parse_fading(key, v.trim()))
        .collect()
}

/// One row of a blocklength sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlocklengthRow {
    pub blocklength: usize,
    pub bler: BlerResult,
    pub leakage: MiEstimate,
    pub equivocation_rate: f64,
}

/// One row of a taps sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapsRow {
    pub num_taps: usize,
    pub leakage_awgn: MiEstimate,
    pub leakage_rayleigh: MiEstimate,
}

/// Seed-dispersion outcome with the largest pairwise TV per metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedReport {
    pub per_seed: Vec<SeedDispersion>,
    pub max_tv_hamming: f64,
    pub max_tv_lee: f64,
}

fn db_tag(db: f64) -> String {
    format!("{db}")
}

/// Trains or loads models and evaluates metrics, caching every result.
pub struct Campaign {
    config: ExperimentConfig,
    out: PathBuf,
    models: HashMap<(usize, usize), Autoencoder>,
    blers: HashMap<String, BlerResult>,
    leakages: HashMap<String, MiEstimate>,
}

impl Campaign {
    pub fn new(config: ExperimentConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            out: out.into(),
            models: HashMap::new(),
            blers: HashMap::new(),
            leakages: HashMap::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn profile(&self, taps: usize, variance: f64) -> FadingProfile {
        if taps == 0 {
            FadingProfile::awgn()
        } else {
            FadingProfile::rayleigh(taps, variance)
        }
    }

    pub fn bob_channel(&self, taps: usize, n: usize) -> Result<ChannelModel> {
        let params = self.config.params(n)?;
        ChannelModel::new(
            self.profile(taps, self.config.omega_y),
            params.noise_spec(self.config.bob_ebn0_db),
        )
    }

    pub fn eve_channel(
        &self,
        taps: usize,
        n: usize,
        eve_db: f64,
        omega_z: f64,
    ) -> Result<ChannelModel> {
        let params = self.config.params(n)?;
        ChannelModel::new(self.profile(taps, omega_z), params.noise_spec(eve_db))
    }

    pub fn model_path(&self, taps: usize, n: usize) -> PathBuf {
        let label = self.profile(taps, self.config.omega_y).label();
        self.out.join("models").join(format!(
            "{label}_n_{n}_bob_{}.model",
            db_tag(self.config.bob_ebn0_db)
        ))
    }

    /// Registers an externally supplied model for `(taps, n)`.
    pub fn insert_model(&mut self, taps: usize, model: Autoencoder) {
        self.models.insert((taps, model.params().n), model);
    }

    /// Model trained for Bob's `taps`-tap link at blocklength `n`; loaded
    /// from the output directory when present, trained and saved otherwise.
    pub fn model(&mut self, taps: usize, n: usize) -> Result<&Autoencoder> {
        if !self.models.contains_key(&(taps, n)) {
            let path = self.model_path(taps, n);
            let model = if path.exists() {
                info!("loading {}", path.display());
                Autoencoder::load(&path)?
            } else {
                let channel = self.bob_channel(taps, n)?;
                let label = format!(
                    "train/{}/n{n}/bob{}",
                    channel.profile.label(),
                    db_tag(self.config.bob_ebn0_db)
                );
                let mut rng = substream(self.config.seed, &label);
                info!("training {label}");
                let mut model = build_autoencoder(self.config.params(n)?, &mut rng)?;
                let history = model.train(&channel, &self.config.train, &mut rng)?;
                if let Some(last) = history.epochs.last() {
                    info!(
                        "{label}: final validation word error rate {:.3e}",
                        last.validation_bler
                    );
                }
                if let Some(dir) = path.parent() {
                    fs::create_dir_all(dir)?;
                }
                model.save(&path)?;
                model
            };
            self.models.insert((taps, n), model);
        }
        Ok(&self.models[&(taps, n)])
    }

    pub fn system(
        &mut self,
        taps: usize,
        n: usize,
        eve_db: f64,
        omega_z: f64,
    ) -> Result<WiretapSystem> {
        let bob = self.bob_channel(taps, n)?;
        let eve = self.eve_channel(taps, n, eve_db, omega_z)?;
        let q = self.config.params(n)?.q as u32;
        let seed = Seed::from_value(self.config.uhf_seed, q)
            .map_err(|e| Error::Config(format!("experiment.uhf_seed: {e}")))?;
        let model = self.model(taps, n)?.clone();
        WiretapSystem::new(model, seed, bob, eve)
    }

    /// Bob's secret-message error rate with the campaign's trial budget.
    pub fn bler(&mut self, taps: usize, n: usize) -> Result<BlerResult> {
        let label = format!(
            "bler/{}/n{n}/bob{}",
            self.profile(taps, self.config.omega_y).label(),
            db_tag(self.config.bob_ebn0_db)
        );
        if let Some(r) = self.blers.get(&label) {
            return Ok(*r);
        }
        let system = self.system(taps, n, self.config.bob_ebn0_db, self.config.omega_y)?;
        let result = estimate_bler(
            &system,
            self.config.trials,
            &mut substream(self.config.seed, &label),
        )?;
        info!(
            "{label}: p_e {:.3e} [{:.3e}, {:.3e}]",
            result.p_e, result.ci_low, result.ci_high
        );
        self.blers.insert(label, result);
        Ok(result)
    }

    /// Leakage to Eve over a `taps`-tap link with fading variance `omega_z`,
    /// for the model trained on Bob's `taps`-tap link.
    pub fn leakage(
        &mut self,
        taps: usize,
        n: usize,
        eve_db: f64,
        omega_z: f64,
    ) -> Result<MiEstimate> {
        let label = format!(
            "leakage/{}/n{n}/eve{}/omega{omega_z}",
            self.profile(taps, 1.0).label(),
            db_tag(eve_db)
        );
        if let Some(r) = self.leakages.get(&label) {
            return Ok(*r);
        }
        let system = self.system(taps, n, eve_db, omega_z)?;
        let estimate = estimate_leakage(
            &system,
            &self.config.mine,
            &mut substream(self.config.seed, &label),
        )?;
        info!(
            "{label}: {:.4} ± {:.4} bits",
            estimate.value_bits, estimate.std_error_bits
        );
        self.leakages.insert(label, estimate);
        Ok(estimate)
    }

    pub fn blocklength_sweep(
        &mut self,
        taps: usize,
        eve_db: f64,
        omega_z: f64,
    ) -> Result<Vec<BlocklengthRow>> {
        let blocklengths = self.config.blocklengths.clone();
        blocklengths
            .into_iter()
            .map(|n| {
                let bler = self.bler(taps, n)?;
                let leakage = self.leakage(taps, n, eve_db, omega_z)?;
                let k = self.config.params(n)?.k;
                let equivocation = equivocation_rate(leakage.value_bits, k, n)?;
                Ok(BlocklengthRow {
                    blocklength: n,
                    bler,
                    leakage,
                    equivocation_rate: equivocation.rate,
                })
            })
            .collect()
    }

    pub fn blocklength_csv_path(&self, taps: usize, eve_db: f64, omega_z: f64) -> PathBuf {
        let label = self.profile(taps, 1.0).label();
        let stem = format!(
            "leakage_bler_vs_blocklength_bob_{}_eve_{}",
            db_tag(self.config.bob_ebn0_db),
            db_tag(eve_db)
        );
        let base = self.out.join("const_rates");
        if omega_z == self.config.omega_y {
            base.join(label).join(format!("{stem}.csv"))
        } else {
            base.join("degraded")
                .join(label)
                .join(format!("{stem}_omega_z_{omega_z}.csv"))
        }
    }

    pub fn write_blocklength_sweep(
        &mut self,
        taps: usize,
        eve_db: f64,
        omega_z: f64,
    ) -> Result<PathBuf> {
        let rows = self.blocklength_sweep(taps, eve_db, omega_z)?;
        let path = self.blocklength_csv_path(taps, eve_db, omega_z);
        write_csv(
            &path,
            &[
                "blocklength",
                "bler_source_msg",
                "mi_leakage_eve",
                "equivocation_rate",
            ],
            rows.iter().map(|r| {
                vec![
                    r.blocklength.to_string(),
                    r.bler.p_e.to_string(),
                    r.leakage.value_bits.to_string(),
                    r.equivocation_rate.to_string(),
                ]
            }),
        )?;
        Ok(path)
    }

    /// Every constant-rate CSV: each configured fading at each Eve level.
    pub fn run_const_rates(&mut self) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for taps in self.config.fadings.clone() {
            for eve_db in self.config.eve_ebn0_db.clone() {
                paths.push(self.write_blocklength_sweep(taps, eve_db, self.config.omega_y)?);
            }
        }
        Ok(paths)
    }

    /// Leakage of each `T`-tap system against the AWGN system at blocklength `n`.
    pub fn taps_sweep(&mut self, n: usize) -> Result<Vec<TapsRow>> {
        let eve_db = self.config.taps_eve_ebn0_db;
        let omega = self.config.omega_y;
        let awgn = self.leakage(0, n, eve_db, omega)?;
        self.config
            .taps
            .clone()
            .into_iter()
            .map(|t| {
                Ok(TapsRow {
                    num_taps: t,
                    leakage_awgn: awgn,
                    leakage_rayleigh: self.leakage(t, n, eve_db, omega)?,
                })
            })
            .collect()
    }

    pub fn run_taps(&mut self) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for n in self.config.taps_blocklengths.clone() {
            let rows = self.taps_sweep(n)?;
            let path = self.out.join("const_rates").join("num_taps").join(format!(
                "leakage_num_taps_eve_{}_n_{n}.csv",
                db_tag(self.config.taps_eve_ebn0_db)
            ));
            write_csv(
                &path,
                &["num_taps", "leakage_awgn", "leakage_rayleigh"],
                rows.iter().map(|r| {
                    vec![
                        r.num_taps.to_string(),
                        r.leakage_awgn.value_bits.to_string(),
                        r.leakage_rayleigh.value_bits.to_string(),
                    ]
                }),
            )?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Blocklength sweeps for each fading-variance value of Eve's link.
    pub fn run_variance(&mut self) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for taps in self.config.variance_fadings.clone() {
            for omega_z in self.config.omega_z.clone() {
                paths.push(self.write_blocklength_sweep(
                    taps,
                    self.config.variance_eve_ebn0_db,
                    omega_z,
                )?);
            }
        }
        Ok(paths)
    }

    /// Distance histograms of every seed for the configured model.
    pub fn seed_analysis(&mut self) -> Result<SeedReport> {
        let (taps, n) = (self.config.seed_fading, self.config.seed_blocklength);
        let levels = self.config.quantizer_levels;
        let q = self.config.params(n)?.q as u32;
        let model = self.model(taps, n)?;
        let per_seed = seed_dispersion(model, &Seed::all(q)?, levels)?;
        let (max_tv_hamming, max_tv_lee) = max_pairwise_distance(&per_seed)?;
        Ok(SeedReport {
            per_seed,
            max_tv_hamming,
            max_tv_lee,
        })
    }

    pub fn run_seed_analysis(&mut self) -> Result<Vec<PathBuf>> {
        let report = self.seed_analysis()?;
        let dir = self.out.join("seeds");
        let chosen = report
            .per_seed
            .iter()
            .find(|r| r.seed.element().value() == self.config.uhf_seed)
            .ok_or_else(|| Error::Config("experiment.uhf_seed: not a valid seed".into()))?;
        let mut paths = Vec::new();
        for (tag, hist) in [("hamming", &chosen.hamming), ("lee", &chosen.lee)] {
            let path = dir.join(format!("{tag}_seed_{}.csv", self.config.uhf_seed));
            let mut buf = Vec::new();
            hist.write_csv(&mut buf)?;
            write_atomic(&path, &buf)?;
            paths.push(path);
        }
        let path = dir.join("seed_dispersion_summary.csv");
        write_csv(
            &path,
            &["metric", "seeds", "pairs_per_seed", "max_pairwise_tv"],
            [
                ("hamming", report.max_tv_hamming, chosen.hamming.total()),
                ("lee", report.max_tv_lee, chosen.lee.total()),
            ]
            .into_iter()
            .map(|(m, tv, total)| {
                vec![
                    m.to_string(),
                    report.per_seed.len().to_string(),
                    total.to_string(),
                    tv.to_string(),
                ]
            }),
        )?;
        paths.push(path);
        Ok(paths)
    }

    /// Whether Eve's `taps`-tap link at `eve_db`, `omega_z` is stochastically
    /// degraded with respect to Bob's.
    pub fn degradation_check(&self, n: usize, eve_db: f64, omega_z: f64) -> Result<bool> {
        let params = self.config.params(n)?;
        let sigma_y = noise_variance(params.noise_spec(self.config.bob_ebn0_db))?;
        let sigma_z = noise_variance(params.noise_spec(eve_db))?;
        is_stochastically_degraded(self.config.omega_y, sigma_y, omega_z, sigma_z)
    }
}

/// Writes a CSV with a header row, atomically replacing any previous file.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
