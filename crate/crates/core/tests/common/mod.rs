//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use wiretap_core::channel::{ChannelModel, FadingProfile};
use wiretap_core::gf2q::ReductionPolynomial;
use wiretap_core::metrics::{LeakageSource, WiretapSystem};
use wiretap_core::mine::SampleSource;
use wiretap_core::nn::{cross_entropy, Activation, DenseNetwork};
use wiretap_core::reliability::{
    build_autoencoder, normalize_rows, normalize_rows_backward, Autoencoder, CodeParams,
};
use wiretap_core::rng::from_seed;
use wiretap_core::Result;

/// Shift-and-add product reduced by long division, independent of the
/// library's multiplication routine.
pub fn reference_mul(a: u32, b: u32, width: u32) -> u32 {
    let poly = ReductionPolynomial::for_width(width).unwrap();
    let full = poly.mask() as u64 | (1u64 << width);
    let mut product = 0u64;
    for i in 0..width {
        if b >> i & 1 == 1 {
            product ^= (a as u64) << i;
        }
    }
    for bit in (width..2 * width).rev() {
        if product >> bit & 1 == 1 {
            product ^= full << (bit - width);
        }
    }
    product as u32
}

/// Unit-variance Gaussian pair with correlation `rho`.
pub struct GaussianPair {
    pub rho: f64,
}

impl GaussianPair {
    pub fn truth_bits(&self) -> f64 {
        -0.5 * (1.0 - self.rho * self.rho).log2()
    }
}

impl SampleSource for GaussianPair {
    fn x_dim(&self) -> usize {
        1
    }
    fn z_dim(&self) -> usize {
        1
    }
    fn draw<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let mut x = Array2::zeros((count, 1));
        let mut z = Array2::zeros((count, 1));
        let c = (1.0 - self.rho * self.rho).sqrt();
        for i in 0..count {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            x[[i, 0]] = a;
            z[[i, 0]] = self.rho * a + c * b;
        }
        Ok((x, z))
    }
}

const STEP: f64 = 1e-6;

/// Relative error; magnitudes below `1e-6` are compared on that scale, where
/// central differences are dominated by rounding.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// `(f(θ+h) − f(θ−h)) / 2h` for the parameter reached through `slot`.
fn central<T>(state: &mut T, slot: impl Fn(&mut T) -> &mut f64, loss: impl Fn(&T) -> f64) -> f64 {
    let orig = *slot(state);
    *slot(state) = orig + STEP;
    let up = loss(state);
    *slot(state) = orig - STEP;
    let down = loss(state);
    *slot(state) = orig;
    (up - down) / (2.0 * STEP)
}

/// Worst error over every weight, bias and input of a network under the loss
/// `Σ c ⊙ f(x)`.
pub fn network_error(widths: &[usize], activations: &[Activation], seed: u64) -> f64 {
    let mut rng = from_seed(seed);
    let mut net = DenseNetwork::<f64>::init(widths, activations, &mut rng).unwrap();
    let mut x = random_matrix(5, widths[0], &mut rng);
    let c = random_matrix(5, *widths.last().unwrap(), &mut rng);
    let grads = net
        .backward(&net.forward(x.view()).unwrap(), c.view())
        .unwrap();
    let loss =
        |net: &DenseNetwork<f64>, x: &Array2<f64>| (net.predict(x.view()).unwrap() * &c).sum();

    let mut worst = 0.0f64;
    for l in 0..net.layers().len() {
        let (rows, cols) = net.layers()[l].weights.dim();
        for i in 0..rows {
            for j in 0..cols {
                let numeric = central(
                    &mut net,
                    |n| &mut n.layers_mut()[l].weights[[i, j]],
                    |n| loss(n, &x),
                );
                worst = worst.max(rel_error(grads.layers[l].weights[[i, j]], numeric));
            }
            let numeric = central(
                &mut net,
                |n| &mut n.layers_mut()[l].bias[i],
                |n| loss(n, &x),
            );
            worst = worst.max(rel_error(grads.layers[l].bias[i], numeric));
        }
    }
    for r in 0..x.nrows() {
        for col in 0..x.ncols() {
            let numeric = central(&mut x, |x| &mut x[[r, col]], |x| loss(&net, x));
            worst = worst.max(rel_error(grads.input[[r, col]], numeric));
        }
    }
    worst
}

/// Softmax cross-entropy with respect to the logits.
pub fn cross_entropy_error(seed: u64) -> f64 {
    let mut rng = from_seed(seed);
    let mut z = random_matrix(6, 5, &mut rng);
    let classes = [0, 4, 2, 2, 1, 3];
    let (_, grad) = cross_entropy(z.view(), &classes).unwrap();
    let mut worst = 0.0f64;
    for i in 0..6 {
        for j in 0..5 {
            let numeric = central(
                &mut z,
                |z| &mut z[[i, j]],
                |z| cross_entropy(z.view(), &classes).unwrap().0,
            );
            worst = worst.max(rel_error(grad[[i, j]], numeric));
        }
    }
    worst
}

/// Decoder trained through cross-entropy, fused softmax backward.
pub fn decoder_loss_error(seed: u64) -> f64 {
    let mut rng = from_seed(seed);
    let mut net = DenseNetwork::<f64>::init(
        &[4, 8, 6],
        &[Activation::Relu, Activation::Softmax],
        &mut rng,
    )
    .unwrap();
    let x = random_matrix(7, 4, &mut rng);
    let classes = [0, 1, 2, 3, 4, 5, 0];
    let loss = |net: &DenseNetwork<f64>| {
        let acts = net.forward(x.view()).unwrap();
        cross_entropy(acts.logits().view(), &classes).unwrap().0
    };
    let acts = net.forward(x.view()).unwrap();
    let (_, lg) = cross_entropy(acts.logits().view(), &classes).unwrap();
    let grads = net.backward_from_logits(&acts, lg.view()).unwrap();
    let mut worst = 0.0f64;
    for l in 0..2 {
        let (rows, cols) = net.layers()[l].weights.dim();
        for i in 0..rows {
            for j in 0..cols {
                let numeric = central(&mut net, |n| &mut n.layers_mut()[l].weights[[i, j]], loss);
                worst = worst.max(rel_error(grads.layers[l].weights[[i, j]], numeric));
            }
        }
    }
    worst
}

pub fn normalization_error(seed: u64) -> f64 {
    let mut rng = from_seed(seed);
    let mut u = random_matrix(3, 5, &mut rng);
    let c = random_matrix(3, 5, &mut rng);
    let (x, norms) = normalize_rows(u.view()).unwrap();
    let grad = normalize_rows_backward(x.view(), &norms, c.view());
    let loss = |u: &Array2<f64>| (normalize_rows(u.view()).unwrap().0 * &c).sum();
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..5 {
            let numeric = central(&mut u, |u| &mut u[[i, j]], loss);
            worst = worst.max(rel_error(grad[[i, j]], numeric));
        }
    }
    worst
}

/// Input gradient of a fixed 3-tap fading realization.
pub fn channel_error(seed: u64) -> f64 {
    let mut rng = from_seed(seed);
    let model = ChannelModel::with_noise_variance(FadingProfile::rayleigh(3, 1.0), 0.3).unwrap();
    let batch = model.sample_batch(4, 6, &mut rng);
    let mut x = random_matrix(4, 6, &mut rng);
    let c = random_matrix(4, 6, &mut rng);
    let grad = batch.backward(c.view()).unwrap();
    let loss = |x: &Array2<f64>| (batch.transmit(x.view()).unwrap() * &c).sum();
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..6 {
            let numeric = central(&mut x, |x| &mut x[[i, j]], loss);
            worst = worst.max(rel_error(grad[[i, j]], numeric));
        }
    }
    worst
}

fn part(ae: &mut Autoencoder, decoder: bool) -> &mut DenseNetwork<f64> {
    if decoder {
        ae.decoder_mut()
    } else {
        ae.encoder_mut()
    }
}

/// Every encoder and decoder parameter through
/// encoder → normalization → fixed channel → decoder → cross-entropy.
pub fn autoencoder_error(seed: u64) -> f64 {
    let mut rng = from_seed(seed);
    let params = CodeParams::new(2, 4, 8).unwrap();
    let mut ae = build_autoencoder(params, &mut rng).unwrap();
    let model = ChannelModel::with_noise_variance(FadingProfile::rayleigh(2, 1.0), 0.5).unwrap();
    let words: Vec<usize> = (0..12).map(|i| (i * 5) % 16).collect();
    let channel = model.sample_batch(words.len(), params.n, &mut rng);
    let grads = ae.batch_gradients(&words, &channel).unwrap();
    let loss = |ae: &Autoencoder| ae.batch_gradients(&words, &channel).unwrap().loss;

    let mut worst = 0.0f64;
    for (decoder, analytic) in [(false, &grads.encoder), (true, &grads.decoder)] {
        for l in 0..analytic.layers.len() {
            let (rows, cols) = analytic.layers[l].weights.dim();
            for i in 0..rows {
                for j in 0..cols {
                    let numeric = central(
                        &mut ae,
                        |a| &mut part(a, decoder).layers_mut()[l].weights[[i, j]],
                        loss,
                    );
                    worst = worst.max(rel_error(analytic.layers[l].weights[[i, j]], numeric));
                }
                let numeric = central(
                    &mut ae,
                    |a| &mut part(a, decoder).layers_mut()[l].bias[i],
                    loss,
                );
                worst = worst.max(rel_error(analytic.layers[l].bias[i], numeric));
            }
        }
    }
    worst
}

/// Worst error of every check, labelled.
pub fn all_gradient_errors() -> Vec<(&'static str, f64)> {
    vec![
        (
            "relu+linear",
            network_error(&[4, 7, 3], &[Activation::Relu, Activation::Linear], 1),
        ),
        (
            "relu+softmax",
            network_error(&[3, 6, 5], &[Activation::Relu, Activation::Softmax], 2),
        ),
        (
            "deep critic",
            network_error(
                &[6, 9, 9, 9, 1],
                &[
                    Activation::Relu,
                    Activation::Relu,
                    Activation::Relu,
                    Activation::Linear,
                ],
                3,
            ),
        ),
        ("cross-entropy", cross_entropy_error(4)),
        ("decoder+loss", decoder_loss_error(5)),
        ("normalization", normalization_error(6)),
        ("channel", channel_error(7)),
        ("end-to-end", autoencoder_error(8)),
    ]
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `I(M; Z^n)` in bits for an AWGN or single-tap Rayleigh eavesdropper,
/// averaging `log p(z|m) − log p(z)` over `samples` draws with both
/// densities in closed form (Gaussian mixtures over the codebook; the tap
/// is integrated on a 400-point midpoint grid). Returns `(mean, std error)`.
pub fn exact_leakage<R: Rng + ?Sized>(
    system: &WiretapSystem,
    samples: usize,
    rng: &mut R,
) -> (f64, f64) {
    let p = system.params();
    let profile = system.eve.profile;
    assert!(
        profile.taps <= 1,
        "closed-form leakage needs at most one tap"
    );
    let sigma2 = system.eve.noise_std().powi(2);
    let codebook = system.autoencoder().codebook_matrix().unwrap();
    let energies: Vec<f64> = codebook.rows().into_iter().map(|c| c.dot(&c)).collect();
    // (tap, log weight) pairs of the fading law.
    let grid: Vec<(f64, f64)> = if profile.is_awgn() {
        vec![(1.0, 0.0)]
    } else {
        let w2 = profile.variance;
        let cells = 400;
        let dh = 6.0 * w2.sqrt() / cells as f64;
        (0..cells)
            .map(|i| {
                let h = (i as f64 + 0.5) * dh;
                (h, (2.0 * h / w2).ln() - h * h / w2 + dh.ln())
            })
            .collect()
    };
    let randomizations = 1u32 << (p.q - p.k);
    let (x, z) = LeakageSource::new(system).draw(samples, rng).unwrap();
    let mut terms = Vec::with_capacity(samples);
    let mut scratch = vec![0.0; grid.len()];
    for (xr, zr) in x.rows().into_iter().zip(z.rows()) {
        let m = xr
            .iter()
            .fold(0u32, |acc, &b| (acc << 1) | u32::from(b > 0.0));
        let zz = zr.dot(&zr);
        let log_lik: Vec<f64> = codebook
            .rows()
            .into_iter()
            .zip(&energies)
            .map(|(c, &e)| {
                let a = zr.dot(&c);
                for (s, &(h, lw)) in scratch.iter_mut().zip(&grid) {
                    *s = lw - (zz - 2.0 * h * a + h * h * e) / (2.0 * sigma2);
                }
                log_sum_exp(&scratch)
            })
            .collect();
        let given_m: Vec<f64> = (0..randomizations)
            .map(|b| log_lik[system.security().encode_index(m, b) as usize])
            .collect();
        let cond = log_sum_exp(&given_m) - (randomizations as f64).ln();
        let marginal = log_sum_exp(&log_lik) - (p.words() as f64).ln();
        terms.push((cond - marginal) / std::f64::consts::LN_2);
    }
    let mean = terms.iter().sum::<f64>() / samples as f64;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
    (mean, (var / samples as f64).sqrt())
}
