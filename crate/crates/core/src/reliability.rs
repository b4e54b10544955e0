//! Learned reliability layer: a one-hot autoencoder trained end to end
//! through the sampled channel.
//!
//! Encoder: one-hot `2^q` → FC+ReLU `2^q` → FC+linear `n` → per-block energy
//! normalization (`‖x‖² = n`). Decoder: FC+ReLU `n → 2^q` → FC+softmax over
//! the `2^q` words.

use std::io::{BufRead, Write};
use std::path::Path;

use log::debug;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::channel::{ChannelBatch, ChannelModel, NoiseSpec};
use crate::error::{contract, Error, Result};
use crate::gf2q::bits_to_value;
use crate::nn::{
    adam_step, cross_entropy, load_network, save_network, Activation, AdamState, DenseNetwork,
    Gradients,
};

/// Largest `q` the one-hot representation is allowed to enumerate.
pub const MAX_INFO_BITS: usize = 16;

/// Dimensions of a wiretap code: `k` secret bits, `q` reliability-layer
/// input bits, blocklength `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeParams {
    pub k: usize,
    pub q: usize,
    pub n: usize,
}

impl CodeParams {
    pub fn new(k: usize, q: usize, n: usize) -> Result<Self> {
        if !(1 <= k && k < q && q <= n) {
            return Err(Error::Config(format!(
                "code parameters must satisfy 1 <= k < q <= n, got k={k} q={q} n={n}"
            )));
        }
        if q > MAX_INFO_BITS || q < 2 {
            return Err(Error::Config(format!(
                "q={q} unsupported (2 <= q <= {MAX_INFO_BITS})"
            )));
        }
        Ok(Self { k, q, n })
    }

    /// Derives `k = R_s·n` and `q = R_r·n`; both must be integers.
    pub fn from_rates(n: usize, secure_rate: f64, reliability_rate: f64) -> Result<Self> {
        let to_int = |rate: f64, name: &str| {
            let v = rate * n as f64;
            if (v - v.round()).abs() > 1e-9 {
                Err(Error::Config(format!(
                    "{name}·n = {v} is not an integer for n={n}"
                )))
            } else {
                Ok(v.round() as usize)
            }
        };
        Self::new(
            to_int(secure_rate, "secure rate")?,
            to_int(reliability_rate, "reliability rate")?,
            n,
        )
    }

    pub fn secure_rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn reliability_rate(&self) -> f64 {
        self.q as f64 / self.n as f64
    }

    pub fn words(&self) -> usize {
        1 << self.q
    }

    pub fn noise_spec(&self, ebn0_db: f64) -> NoiseSpec {
        NoiseSpec::new(ebn0_db, self.reliability_rate())
    }
}

/// Power-normalized channel input block.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword(Vec<f64>);

impl Codeword {
    pub fn symbols(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Scales `x` to energy `n = x.len()`.
pub fn normalize_power(x: &[f64]) -> Result<Codeword> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot normalize a block of norm {norm}"
        )));
    }
    let scale = (x.len() as f64).sqrt() / norm;
    Ok(Codeword(x.iter().map(|v| v * scale).collect()))
}

/// Row-wise normalization; returns the normalized rows and the input norms.
pub fn normalize_rows(u: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Vec<f64>)> {
    let scale = (u.ncols() as f64).sqrt();
    let mut x = u.to_owned();
    let mut norms = Vec::with_capacity(u.nrows());
    for (i, mut row) in x.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate(format!(
                "encoder output row {i} has norm {norm}"
            )));
        }
        row *= scale / norm;
        norms.push(norm);
    }
    Ok((x, norms))
}

/// Backward pass of [`normalize_rows`]: `du = (√n/‖u‖)(g − û(û·g))`.
pub fn normalize_rows_backward(
    normalized: ArrayView2<'_, f64>,
    norms: &[f64],
    grad: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let scale = (normalized.ncols() as f64).sqrt();
    let mut du = grad.to_owned();
    for ((mut d, x), &norm) in du.rows_mut().into_iter().zip(normalized.rows()).zip(norms) {
        let unit = x.mapv(|v| v / scale);
        let proj = unit.dot(&d);
        d.scaled_add(-proj, &unit);
        d *= scale / norm;
    }
    du
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_words: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batches_per_epoch: 1000,
            batch_size: 1000,
            learning_rate: 1e-3,
            validation_words: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_bler: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// Validation word error rate of the untrained model.
    pub initial_bler: f64,
    pub epochs: Vec<EpochStats>,
}

/// Loss and parameter gradients of one batch.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    pub encoder: Gradients<f64>,
    pub decoder: Gradients<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    params: CodeParams,
    encoder: DenseNetwork<f64>,
    decoder: DenseNetwork<f64>,
}

pub fn build_autoencoder<R: Rng + ?Sized>(params: CodeParams, rng: &mut R) -> Result<Autoencoder> {
    let words = params.words();
    let n = params.n;
    let encoder = DenseNetwork::init(
        &[words, words, n],
        &[Activation::Relu, Activation::Linear],
        rng,
    )?;
    let decoder = DenseNetwork::init(
        &[n, words, words],
        &[Activation::Relu, Activation::Softmax],
        rng,
    )?;
    Ok(Autoencoder {
        params,
        encoder,
        decoder,
    })
}

impl Autoencoder {
    pub fn from_parts(
        params: CodeParams,
        encoder: DenseNetwork<f64>,
        decoder: DenseNetwork<f64>,
    ) -> Result<Self> {
        let words = params.words();
        contract!(
            encoder.input_dim() == words && encoder.output_dim() == params.n,
            "encoder must map {words} -> {}",
            params.n
        );
        contract!(
            decoder.input_dim() == params.n && decoder.output_dim() == words,
            "decoder must map {} -> {words}",
            params.n
        );
        Ok(Self {
            params,
            encoder,
            decoder,
        })
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn encoder(&self) -> &DenseNetwork<f64> {
        &self.encoder
    }

    pub fn decoder(&self) -> &DenseNetwork<f64> {
        &self.decoder
    }

    pub fn encoder_mut(&mut self) -> &mut DenseNetwork<f64> {
        &mut self.encoder
    }

    pub fn decoder_mut(&mut self) -> &mut DenseNetwork<f64> {
        &mut self.decoder
    }

    fn one_hot_identity(&self) -> Array2<f64> {
        Array2::eye(self.params.words())
    }

    /// All `2^q` codewords as rows, in word order.
    pub fn codebook_matrix(&self) -> Result<Array2<f64>> {
        let raw = self.encoder.predict(self.one_hot_identity().view())?;
        Ok(normalize_rows(raw.view())?.0)
    }

    pub fn codebook(&self) -> Result<Vec<Codeword>> {
        Ok(self
            .codebook_matrix()?
            .rows()
            .into_iter()
            .map(|r| Codeword(r.to_vec()))
            .collect())
    }

    pub fn encode_index(&self, word: usize) -> Result<Codeword> {
        contract!(word < self.params.words(), "word {word} out of range");
        let mut one_hot = Array2::zeros((1, self.params.words()));
        one_hot[[0, word]] = 1.0;
        let raw = self.encoder.predict(one_hot.view())?;
        normalize_power(raw.row(0).as_slice().expect("standard layout"))
    }

    /// Encodes a `q`-bit word (MSB first).
    pub fn encode_message(&self, word: &[u8]) -> Result<Codeword> {
        contract!(
            word.len() == self.params.q,
            "word length {} != q={}",
            word.len(),
            self.params.q
        );
        self.encode_index(bits_to_value(word)? as usize)
    }

    /// Decoder softmax output for each observation row.
    pub fn probabilities(&self, observations: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.decoder.predict(observations)
    }

    pub fn decode_batch(&self, observations: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let probs = self.probabilities(observations)?;
        Ok(probs.rows().into_iter().map(argmax).collect())
    }

    /// Decodes one observation into a `q`-bit word (MSB first).
    pub fn decode_observation(&self, y: &[f64]) -> Result<Vec<u8>> {
        contract!(
            y.len() == self.params.n,
            "observation length {} != n={}",
            y.len(),
            self.params.n
        );
        let obs = ArrayView2::from_shape((1, y.len()), y).expect("row vector");
        let word = self.decode_batch(obs)?[0];
        Ok(crate::gf2q::value_to_bits(word as u32, self.params.q))
    }

    /// Exact loss and gradients for `words` sent through fixed channel draws.
    pub fn batch_gradients(
        &self,
        words: &[usize],
        channel: &ChannelBatch,
    ) -> Result<BatchGradients> {
        contract!(
            channel.len() == words.len(),
            "{} words but {} channel realizations",
            words.len(),
            channel.len()
        );
        let identity = self.one_hot_identity();
        let enc_acts = self.encoder.forward(identity.view())?;
        let (codebook, norms) = normalize_rows(enc_acts.output().view())?;
        let x = codebook.select(Axis(0), words);
        let y = channel.transmit(x.view())?;

        let dec_acts = self.decoder.forward(y.view())?;
        let (loss, logits_grad) = cross_entropy(dec_acts.logits().view(), words)?;
        let decoder = self
            .decoder
            .backward_from_logits(&dec_acts, logits_grad.view())?;

        let grad_x = channel.backward(decoder.input.view())?;
        let mut grad_codebook = Array2::zeros(codebook.dim());
        for (&w, g) in words.iter().zip(grad_x.rows()) {
            let mut row = grad_codebook.row_mut(w);
            row += &g;
        }
        let grad_raw = normalize_rows_backward(codebook.view(), &norms, grad_codebook.view());
        let encoder = self.encoder.backward(&enc_acts, grad_raw.view())?;
        Ok(BatchGradients {
            loss,
            encoder,
            decoder,
        })
    }

    /// Word error rate over `count` uniform words through `channel`.
    pub fn word_error_rate<R: Rng + ?Sized>(
        &self,
        channel: &ChannelModel,
        count: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let codebook = self.codebook_matrix()?;
        let mut errors = 0usize;
        let mut remaining = count;
        while remaining > 0 {
            let chunk = remaining.min(10_000);
            let words: Vec<usize> = (0..chunk)
                .map(|_| rng.random_range(0..self.params.words()))
                .collect();
            let x = codebook.select(Axis(0), &words);
            let y = channel
                .sample_batch(chunk, self.params.n, rng)
                .transmit(x.view())?;
            let decoded = self.decode_batch(y.view())?;
            errors += words.iter().zip(&decoded).filter(|(a, b)| a != b).count();
            remaining -= chunk;
        }
        Ok(errors as f64 / count as f64)
    }

    /// End-to-end training through fresh channel draws for every sample.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        channel: &ChannelModel,
        config: &TrainConfig,
        rng: &mut R,
    ) -> Result<TrainHistory> {
        contract!(config.batch_size > 0, "batch size must be positive");
        let mut enc_state = AdamState::new(&self.encoder);
        let mut dec_state = AdamState::new(&self.decoder);
        let mut history = TrainHistory {
            initial_bler: self.word_error_rate(channel, config.validation_words, rng)?,
            epochs: Vec::with_capacity(config.epochs),
        };
        for epoch in 0..config.epochs {
            let mut loss_sum = 0.0;
            for _ in 0..config.batches_per_epoch {
                let words: Vec<usize> = (0..config.batch_size)
                    .map(|_| rng.random_range(0..self.params.words()))
                    .collect();
                let draws = channel.sample_batch(config.batch_size, self.params.n, rng);
                let grads = self.batch_gradients(&words, &draws)?;
                if !grads.loss.is_finite()
                    || !grads.encoder.is_finite()
                    || !grads.decoder.is_finite()
                {
                    return Err(Error::TrainingFailure {
                        epoch,
                        reason: format!("non-finite loss {}", grads.loss),
                    });
                }
                loss_sum += grads.loss;
                adam_step(
                    &mut self.encoder,
                    &grads.encoder,
                    &mut enc_state,
                    config.learning_rate,
                )?;
                adam_step(
                    &mut self.decoder,
                    &grads.decoder,
                    &mut dec_state,
                    config.learning_rate,
                )?;
            }
            let mean_loss = loss_sum / config.batches_per_epoch.max(1) as f64;
            let validation_bler = self.word_error_rate(channel, config.validation_words, rng)?;
            debug!("epoch {epoch}: loss {mean_loss:.5} validation BLER {validation_bler:.5}");
            history.epochs.push(EpochStats {
                epoch,
                mean_loss,
                validation_bler,
            });
        }
        Ok(history)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "autoencoder 1")?;
        writeln!(
            out,
            "code {} {} {}",
            self.params.k, self.params.q, self.params.n
        )?;
        save_network(&self.encoder, &mut out)?;
        save_network(&self.decoder, &mut out)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: &mut R) -> Result<Self> {
        let header = crate::nn::persist_next_line(input)?;
        if header.trim() != "autoencoder 1" {
            return Err(Error::Parse(format!("bad autoencoder header `{header}`")));
        }
        let code = crate::nn::persist_next_line(input)?;
        let fields: Vec<usize> = code
            .split_whitespace()
            .skip(1)
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad code line `{code}`")))
            })
            .collect::<Result<_>>()?;
        if !code.starts_with("code ") || fields.len() != 3 {
            return Err(Error::Parse(format!("bad code line `{code}`")));
        }
        let params = CodeParams::new(fields[0], fields[1], fields[2])?;
        let encoder = load_network(input)?;
        let decoder = load_network(input)?;
        Self::from_parts(params, encoder, decoder)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Config(format!("cannot open model file {}: {e}", path.display()))
        })?;
        Self::read_from(&mut std::io::BufReader::new(file))
    }
}
