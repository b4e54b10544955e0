//! Neural mutual-information estimation with the Donsker–Varadhan bound.
//!
//! A critic `T(x, z)` is trained to maximize
//! `mean T(x_i, z_i) − log mean exp T(x_i, z_π(i))`, where the second batch
//! pairs each `x` with the observation of a random other sample. The value
//! of the bound at the trained critic is a lower-bound estimate of `I(X; Z)`.

use std::f64::consts::LN_2;

use log::debug;
use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{contract, Error, Result};
use crate::nn::{adam_step, Activation, AdamState, DenseNetwork, LrSchedule, Real};
use crate::seclayer::SecretMessage;

/// Floating-point type the critic is trained in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Self::F32),
            "f64" => Ok(Self::F64),
            other => Err(Error::Parse(format!("unknown precision {other:?}"))),
        }
    }
}

/// Critic training and evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MineConfig {
    pub epochs: usize,
    /// Size of the fixed training set revisited every epoch.
    pub samples: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Per-epoch multiplicative learning-rate decay.
    pub decay: f64,
    /// Retention of the moving average used in the denominator gradient.
    pub ema_rate: f64,
    /// Fresh samples for the reported estimate.
    pub eval_samples: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub precision: Precision,
}

impl Default for MineConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            samples: 200_000,
            batch_size: 1000,
            learning_rate: 1e-3,
            decay: 0.95,
            ema_rate: 0.99,
            eval_samples: 100_000,
            hidden_width: 400,
            hidden_layers: 4,
            precision: Precision::F64,
        }
    }
}

impl MineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("samples", self.samples),
            ("batch_size", self.batch_size),
            ("eval_samples", self.eval_samples),
            ("hidden_width", self.hidden_width),
            ("hidden_layers", self.hidden_layers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("mine.{name} must be positive")));
            }
        }
        if self.samples % self.batch_size != 0 {
            return Err(Error::Config(format!(
                "mine.batch_size {} must divide mine.samples {}",
                self.batch_size, self.samples
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(
                "mine learning rate/decay out of range".into(),
            ));
        }
        if !(self.ema_rate >= 0.0 && self.ema_rate < 1.0) {
            return Err(Error::Config("mine.ema_rate must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            base_lr: self.learning_rate,
            decay: self.decay,
        }
    }
}

/// Source of i.i.d. pairs `(x, z)` from the joint distribution under test.
pub trait SampleSource {
    fn x_dim(&self) -> usize;
    fn z_dim(&self) -> usize;
    /// `count` aligned rows of features and observations.
    fn draw<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<(Array2<f64>, Array2<f64>)>;
}

/// Statistics network `T_θ`: ReLU hidden layers and a linear scalar head.
#[derive(Debug, Clone, PartialEq)]
pub struct MineCritic<F: Real = f64> {
    network: DenseNetwork<F>,
}

impl<F: Real> MineCritic<F> {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        config: &MineConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut widths = vec![input_dim];
        widths.extend(std::iter::repeat_n(
            config.hidden_width,
            config.hidden_layers,
        ));
        widths.push(1);
        let mut activations = vec![Activation::Relu; config.hidden_layers];
        activations.push(Activation::Linear);
        Ok(Self {
            network: DenseNetwork::init(&widths, &activations, rng)?,
        })
    }

    pub fn from_network(network: DenseNetwork<F>) -> Result<Self> {
        contract!(
            network.output_dim() == 1,
            "critic must have a scalar output"
        );
        Ok(Self { network })
    }

    pub fn network(&self) -> &DenseNetwork<F> {
        &self.network
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn scores(&self, inputs: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let out = self.network.predict(inputs.mapv(F::lit).view())?;
        Ok(out.iter().map(|v| v.as_f64()).collect())
    }
}

/// Mutual-information estimate of a trained critic on held-out data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub value_bits: f64,
    pub value_nats: f64,
    pub sample_count: usize,
    /// Standard error across evaluation batches, in bits.
    pub std_error_bits: f64,
}

impl MiEstimate {
    fn from_batches(values_nats: &[f64], sample_count: usize) -> Self {
        let count = values_nats.len() as f64;
        let mean = values_nats.iter().sum::<f64>() / count;
        let var = if values_nats.len() > 1 {
            values_nats.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        Self {
            value_bits: mean / LN_2,
            value_nats: mean,
            sample_count,
            std_error_bits: (var / count).sqrt() / LN_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MineHistory {
    /// Mean uncorrected bound per epoch, in nats.
    pub epoch_objective: Vec<f64>,
}

/// `mean(joint) − log mean exp(marginal)`, with max-shifted log-sum-exp.
pub fn dv_objective(joint_scores: &[f64], marginal_scores: &[f64]) -> Result<f64> {
    contract!(
        !joint_scores.is_empty() && !marginal_scores.is_empty(),
        "score batches must be nonempty"
    );
    let mean_joint = joint_scores.iter().sum::<f64>() / joint_scores.len() as f64;
    Ok(mean_joint - log_mean_exp(marginal_scores))
}

fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Bits mapped to ±1 features (`0 → −1`, `1 → +1`).
pub fn message_features(messages: &[SecretMessage]) -> Result<Array2<f64>> {
    contract!(!messages.is_empty(), "no messages");
    let k = messages[0].len();
    contract!(
        messages.iter().all(|m| m.len() == k),
        "messages have differing lengths"
    );
    Ok(Array2::from_shape_fn((messages.len(), k), |(i, j)| {
        2.0 * messages[i].bits()[j] as f64 - 1.0
    }))
}

/// Joint inputs `x_i ‖ z_i` and marginal inputs `x_i ‖ z_π(i)` for a fresh
/// uniform permutation `π`.
pub fn make_sample_pairs<R: Rng + ?Sized>(
    features: ArrayView2<'_, f64>,
    observations: ArrayView2<'_, f64>,
    rng: &mut R,
) -> Result<(Array2<f64>, Array2<f64>)> {
    contract!(
        features.nrows() == observations.nrows(),
        "{} feature rows vs {} observation rows",
        features.nrows(),
        observations.nrows()
    );
    let mut perm: Vec<usize> = (0..observations.nrows()).collect();
    perm.shuffle(rng);
    let shuffled = observations.select(Axis(0), &perm);
    let joint = concatenate![Axis(1), features, observations];
    let marginal = concatenate![Axis(1), features, shuffled];
    Ok((joint, marginal))
}

/// Maximizes the bound over a fixed training set with Adam.
///
/// The denominator's gradient uses a moving average of `mean exp(T)` in
/// place of the batch value; reported objectives are the plain bound.
pub fn train_mine<F: Real, S: SampleSource, R: Rng + ?Sized>(
    critic: &mut MineCritic<F>,
    source: &S,
    config: &MineConfig,
    rng: &mut R,
) -> Result<MineHistory> {
    config.validate()?;
    contract!(
        critic.input_dim() == source.x_dim() + source.z_dim(),
        "critic input {} != {} + {}",
        critic.input_dim(),
        source.x_dim(),
        source.z_dim()
    );
    let (features, observations) = source.draw(config.samples, rng)?;
    let schedule = config.schedule();
    let mut adam = AdamState::new(&critic.network);
    let mut log_ema: Option<f64> = None;
    let mut history = MineHistory::default();
    let batch = config.batch_size;
    let mut order: Vec<usize> = (0..config.samples).collect();

    for epoch in 0..config.epochs {
        let lr = schedule.lr(epoch);
        order.shuffle(rng);
        let mut objective_sum = 0.0;
        let batches = config.samples / batch;
        for chunk in order.chunks(batch) {
            let x = features.select(Axis(0), chunk);
            let z = observations.select(Axis(0), chunk);
            let (joint, marginal) = make_sample_pairs(x.view(), z.view(), rng)?;
            let inputs = concatenate![Axis(0), joint, marginal].mapv(F::lit);
            let acts = critic.network.forward(inputs.view())?;
            let scores: Vec<f64> = acts.output().iter().map(|v| v.as_f64()).collect();
            let (t_joint, t_marg) = scores.split_at(chunk.len());

            let objective = dv_objective(t_joint, t_marg)?;
            if !objective.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    reason: format!("non-finite DV objective {objective}"),
                });
            }
            objective_sum += objective;

            let log_batch = log_mean_exp(t_marg);
            let updated = match log_ema {
                None => log_batch,
                Some(prev) => log_add_exp(
                    prev + config.ema_rate.ln(),
                    log_batch + (1.0 - config.ema_rate).ln(),
                ),
            };
            log_ema = Some(updated);

            // Loss = −mean(T_joint) + mean(exp T_marg) / ema.
            let n = chunk.len() as f64;
            let mut grad = Array2::<F>::zeros((2 * chunk.len(), 1));
            grad.slice_mut(s![..chunk.len(), 0]).fill(F::lit(-1.0 / n));
            for (g, &t) in grad.slice_mut(s![chunk.len().., 0]).iter_mut().zip(t_marg) {
                *g = F::lit((t - updated).exp() / n);
            }
            let grads = critic.network.backward(&acts, grad.view())?;
            adam_step(&mut critic.network, &grads, &mut adam, lr)?;
        }
        let mean = objective_sum / batches as f64;
        debug!("mine epoch {epoch}: lr {lr:.2e} DV {:.4} bits", mean / LN_2);
        history.epoch_objective.push(mean);
    }
    Ok(history)
}

/// Evaluates the bound on `eval_samples` fresh pairs, in batches of `batch_size`.
pub fn estimate_mi<F: Real, S: SampleSource, R: Rng + ?Sized>(
    critic: &MineCritic<F>,
    source: &S,
    eval_samples: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<MiEstimate> {
    contract!(eval_samples > 0 && batch_size > 0, "empty evaluation");
    let mut values = Vec::new();
    let mut remaining = eval_samples;
    while remaining > 0 {
        let count = remaining.min(batch_size);
        let (x, z) = source.draw(count, rng)?;
        let (joint, marginal) = make_sample_pairs(x.view(), z.view(), rng)?;
        let t_joint = critic.scores(joint.view())?;
        let t_marg = critic.scores(marginal.view())?;
        values.push(dv_objective(&t_joint, &t_marg)?);
        remaining -= count;
    }
    Ok(MiEstimate::from_batches(&values, eval_samples))
}

/// Fresh critic, trained and evaluated on `source`.
pub fn estimate_with_fresh_critic<F: Real, S: SampleSource, R: Rng + ?Sized>(
    source: &S,
    config: &MineConfig,
    rng: &mut R,
) -> Result<(MiEstimate, MineHistory)> {
    let mut critic = MineCritic::<F>::new(source.x_dim() + source.z_dim(), config, rng)?;
    let history = train_mine(&mut critic, source, config, rng)?;
    let estimate = estimate_mi(&critic, source, config.eval_samples, config.batch_size, rng)?;
    Ok((estimate, history))
}

/// [`estimate_with_fresh_critic`] in the configured precision.
pub fn run_mine<S: SampleSource, R: Rng + ?Sized>(
    source: &S,
    config: &MineConfig,
    rng: &mut R,
) -> Result<(MiEstimate, MineHistory)> {
    match config.precision {
        Precision::F32 => estimate_with_fresh_critic::<f32, _, _>(source, config, rng),
        Precision::F64 => estimate_with_fresh_critic::<f64, _, _>(source, config, rng),
    }
}
