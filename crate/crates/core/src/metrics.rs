//! System-level metrics of the composed wiretap code: Bob's block error
//! rate on the secret message, leakage to Eve and the equivocation rate.

use log::warn;
use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use crate::channel::ChannelModel;
use crate::error::{contract, Error, Result};
use crate::mine::{run_mine, MiEstimate, MineConfig, SampleSource};
use crate::reliability::{Autoencoder, CodeParams, Codeword};
use crate::seclayer::{RandomizationBits, RandomizedWord, SecretMessage, SecurityLayer, Seed};

/// Blocklengths above this are outside the regime where the neural
/// estimator is trusted.
pub const MINE_MAX_BLOCKLENGTH: usize = 16;

const CHUNK: usize = 10_000;

/// Security layer, trained reliability layer and both receivers' links.
#[derive(Debug, Clone)]
pub struct WiretapSystem {
    security: SecurityLayer,
    autoencoder: Autoencoder,
    codebook: Array2<f64>,
    pub bob: ChannelModel,
    pub eve: ChannelModel,
}

impl WiretapSystem {
    pub fn new(
        autoencoder: Autoencoder,
        seed: Seed,
        bob: ChannelModel,
        eve: ChannelModel,
    ) -> Result<Self> {
        let params = autoencoder.params();
        contract!(
            seed.width() as usize == params.q,
            "seed width {} != q={}",
            seed.width(),
            params.q
        );
        let codebook = autoencoder.codebook_matrix()?;
        Ok(Self {
            security: SecurityLayer::new(params.k, seed)?,
            autoencoder,
            codebook,
            bob,
            eve,
        })
    }

    pub fn params(&self) -> CodeParams {
        self.autoencoder.params()
    }

    pub fn seed(&self) -> Seed {
        self.security.seed()
    }

    pub fn autoencoder(&self) -> &Autoencoder {
        &self.autoencoder
    }

    pub fn security(&self) -> &SecurityLayer {
        &self.security
    }

    /// Same code, different eavesdropper link.
    pub fn with_eve(&self, eve: ChannelModel) -> Self {
        Self {
            eve,
            ..self.clone()
        }
    }

    /// Message indices, reliability-layer words and codewords of `count`
    /// uniform `(m, b)` draws.
    fn draw_transmissions<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> (Vec<u32>, Vec<usize>, Array2<f64>) {
        let p = self.params();
        let messages: Vec<u32> = (0..count)
            .map(|_| rng.random_range(0..1u32 << p.k))
            .collect();
        let words: Vec<usize> = messages
            .iter()
            .map(|&m| {
                let b = rng.random_range(0..1u32 << (p.q - p.k));
                self.security.encode_index(m, b) as usize
            })
            .collect();
        let x = self.codebook.select(Axis(0), &words);
        (messages, words, x)
    }
}

/// `e_r(φ_s(m, b))`.
pub fn full_encode(
    system: &WiretapSystem,
    m: &SecretMessage,
    b: &RandomizationBits,
) -> Result<Codeword> {
    let v = system.security.encode(m, b)?;
    system.autoencoder.encode_message(v.bits())
}

/// `ψ_s(d_r(y))`.
pub fn full_decode(system: &WiretapSystem, y: &[f64]) -> Result<SecretMessage> {
    let word = system.autoencoder.decode_observation(y)?;
    system.security.decode(&RandomizedWord::new(word)?)
}

/// Monte-Carlo error count with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerResult {
    /// Trials whose decoded secret message differed from the sent one.
    pub error_count: u64,
    /// Trials whose decoded reliability-layer word was wrong.
    pub word_error_count: u64,
    pub trials: u64,
    pub p_e: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BlerResult {
    pub fn from_counts(error_count: u64, word_error_count: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(error_count, trials);
        Self {
            error_count,
            word_error_count,
            trials,
            p_e: error_count as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn word_error_rate(&self) -> f64 {
        self.word_error_count as f64 / self.trials as f64
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Bob's error rate on the secret message over fresh `m`, `b`, fading and noise.
pub fn estimate_bler<R: Rng + ?Sized>(
    system: &WiretapSystem,
    trials: u64,
    rng: &mut R,
) -> Result<BlerResult> {
    contract!(trials >= 1, "at least one trial required");
    let p = system.params();
    let mut errors = 0u64;
    let mut word_errors = 0u64;
    let mut remaining = trials;
    while remaining > 0 {
        let count = remaining.min(CHUNK as u64) as usize;
        let (messages, words, x) = system.draw_transmissions(count, rng);
        let y = system
            .bob
            .sample_batch(count, p.n, rng)
            .transmit(x.view())?;
        let decoded = system.autoencoder.decode_batch(y.view())?;
        for ((&m, &v), &sent) in messages.iter().zip(&decoded).zip(&words) {
            if system.security.decode_index(v as u32) != m {
                errors += 1;
            }
            if v != sent {
                word_errors += 1;
            }
        }
        remaining -= count as u64;
    }
    Ok(BlerResult::from_counts(errors, word_errors, trials))
}

/// Pairs `(±1-encoded m, Z^n)` generated through the full system and Eve's link.
#[derive(Debug, Clone, Copy)]
pub struct LeakageSource<'a> {
    system: &'a WiretapSystem,
}

impl<'a> LeakageSource<'a> {
    pub fn new(system: &'a WiretapSystem) -> Self {
        Self { system }
    }
}

impl SampleSource for LeakageSource<'_> {
    fn x_dim(&self) -> usize {
        self.system.params().k
    }

    fn z_dim(&self) -> usize {
        self.system.params().n
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let p = self.system.params();
        let (messages, _, x) = self.system.draw_transmissions(count, rng);
        let z = self
            .system
            .eve
            .sample_batch(count, p.n, rng)
            .transmit(x.view())?;
        Ok((signed_message_bits(&messages, p.k), z))
    }
}

fn signed_message_bits(messages: &[u32], k: usize) -> Array2<f64> {
    Array2::from_shape_fn((messages.len(), k), |(i, j)| {
        if (messages[i] >> (k - 1 - j)) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    })
}

/// `I(M; Z^n)` from a fresh critic trained on the full system.
pub fn estimate_leakage<R: Rng + ?Sized>(
    system: &WiretapSystem,
    config: &MineConfig,
    rng: &mut R,
) -> Result<MiEstimate> {
    let n = system.params().n;
    if n > MINE_MAX_BLOCKLENGTH {
        warn!("blocklength {n} exceeds {MINE_MAX_BLOCKLENGTH}; leakage estimate may be unreliable");
    }
    Ok(run_mine(&LeakageSource::new(system), config, rng)?.0)
}

/// Eve's residual uncertainty per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivocation {
    /// Leakage after clamping negatives to zero.
    pub leakage_bits: f64,
    pub rate: f64,
    pub secure_rate: f64,
}

/// `R_e = (k − L)/n`; small negative estimates are clamped to zero.
pub fn equivocation_rate(leakage_bits: f64, k: usize, n: usize) -> Result<Equivocation> {
    contract!(n > 0 && k > 0, "k and n must be positive");
    if !leakage_bits.is_finite() || leakage_bits > k as f64 {
        return Err(Error::InconsistentEstimate(format!(
            "leakage {leakage_bits} bits exceeds message entropy {k} bits"
        )));
    }
    let leakage = if leakage_bits < 0.0 {
        warn!("negative leakage estimate {leakage_bits:.4} bits clamped to 0");
        0.0
    } else {
        leakage_bits
    };
    Ok(Equivocation {
        leakage_bits: leakage,
        rate: (k as f64 - leakage) / n as f64,
        secure_rate: k as f64 / n as f64,
    })
}

/// Leakage estimate together with its derived equivocation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageReport {
    pub estimate: MiEstimate,
    pub equivocation: Equivocation,
}

pub fn leakage_report<R: Rng + ?Sized>(
    system: &WiretapSystem,
    config: &MineConfig,
    rng: &mut R,
) -> Result<LeakageReport> {
    let estimate = estimate_leakage(system, config, rng)?;
    let p = system.params();
    Ok(LeakageReport {
        estimate,
        equivocation: equivocation_rate(estimate.value_bits, p.k, p.n)?,
    })
}

/// Decoded secret messages for a batch of Bob observations.
pub fn decode_batch(system: &WiretapSystem, observations: ArrayView2<'_, f64>) -> Result<Vec<u32>> {
    Ok(system
        .autoencoder
        .decode_batch(observations)?
        .into_iter()
        .map(|v| system.security.decode_index(v as u32))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingProfile, NoiseSpec};
    use crate::reliability::build_autoencoder;
    use crate::rng::from_seed;

    fn untrained(n: usize, k: usize, q: usize) -> Autoencoder {
        build_autoencoder(CodeParams::new(k, q, n).unwrap(), &mut from_seed(1)).unwrap()
    }

    fn awgn(db: f64) -> ChannelModel {
        ChannelModel::new(FadingProfile::awgn(), NoiseSpec::new(db, 0.5)).unwrap()
    }

    #[test]
    fn equivocation_examples() {
        let e = equivocation_rate(0.0, 4, 16).unwrap();
        assert_eq!(e.rate, 0.25);
        assert_eq!(e.secure_rate, 0.25);
        assert_eq!(equivocation_rate(4.0, 4, 16).unwrap().rate, 0.0);
        assert!((equivocation_rate(0.8, 4, 16).unwrap().rate - 0.2).abs() < 1e-15);
        assert_eq!(equivocation_rate(-0.01, 4, 16).unwrap().rate, 0.25);
        assert!(matches!(
            equivocation_rate(4.2, 4, 16),
            Err(Error::InconsistentEstimate(_))
        ));
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(50, 1000);
        assert!(lo < 0.05 && 0.05 < hi);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn seed_width_must_match() {
        let ae = untrained(8, 2, 4);
        assert!(
            WiretapSystem::new(ae, Seed::from_value(1, 8).unwrap(), awgn(5.0), awgn(0.0)).is_err()
        );
    }

    #[test]
    fn untrained_system_at_high_noise_is_at_chance() {
        let ae = untrained(8, 2, 4);
        let loud = ChannelModel::with_noise_variance(FadingProfile::awgn(), 1e4).unwrap();
        let system = WiretapSystem::new(ae, Seed::from_value(3, 4).unwrap(), loud, loud).unwrap();
        let r = estimate_bler(&system, 40_000, &mut from_seed(2)).unwrap();
        let chance = 1.0 - 0.25;
        assert!((r.p_e - chance).abs() < 0.01, "{}", r.p_e);
        assert!(r.ci_low <= r.p_e && r.p_e <= r.ci_high);
    }

    #[test]
    fn full_chain_matches_table_lookup() {
        let ae = untrained(8, 2, 4);
        let system =
            WiretapSystem::new(ae, Seed::from_value(5, 4).unwrap(), awgn(5.0), awgn(0.0)).unwrap();
        let m = SecretMessage::from_value(2, 2);
        let b = RandomizationBits::from_value(1, 2);
        let x = full_encode(&system, &m, &b).unwrap();
        let v = system.security().encode_index(2, 1) as usize;
        let row = system.codebook.row(v);
        for (a, b) in x.symbols().iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn leakage_source_shapes_and_encoding() {
        let ae = untrained(8, 2, 4);
        let system =
            WiretapSystem::new(ae, Seed::from_value(5, 4).unwrap(), awgn(5.0), awgn(0.0)).unwrap();
        let (x, z) = LeakageSource::new(&system)
            .draw(7, &mut from_seed(3))
            .unwrap();
        assert_eq!(x.dim(), (7, 2));
        assert_eq!(z.dim(), (7, 8));
        assert!(x.iter().all(|&v| v == 1.0 || v == -1.0));
        assert_eq!(
            signed_message_bits(&[0b10], 2),
            ndarray::array![[1.0, -1.0]]
        );
    }
}
