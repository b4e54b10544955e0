//! MINE against sources whose mutual information is known in closed form.

mod common;

use common::GaussianPair;
use ndarray::Array2;
use rand::Rng;
use wiretap_core::mine::{
    dv_objective, estimate_mi, run_mine, train_mine, MineConfig, MineCritic, Precision,
    SampleSource,
};
use wiretap_core::rng::from_seed;
use wiretap_core::Result;

/// `k` uniform bits observed noiselessly, each repeated `copies` times as ±1.
struct NoiselessBits {
    k: usize,
    copies: usize,
}

impl SampleSource for NoiselessBits {
    fn x_dim(&self) -> usize {
        self.k
    }
    fn z_dim(&self) -> usize {
        self.k * self.copies
    }
    fn draw<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let x = Array2::from_shape_simple_fn((count, self.k), || {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        });
        let z = Array2::from_shape_fn((count, self.z_dim()), |(i, j)| x[[i, j / self.copies]]);
        Ok((x, z))
    }
}

fn small_config() -> MineConfig {
    MineConfig {
        samples: 50_000,
        hidden_width: 64,
        hidden_layers: 2,
        eval_samples: 50_000,
        ..MineConfig::default()
    }
}

#[test]
fn gaussian_correlations() {
    for (seed, rho) in [(1u64, 0.0), (2, 0.5), (3, 0.9)] {
        let source = GaussianPair { rho };
        let (est, _) = run_mine(&source, &small_config(), &mut from_seed(seed)).unwrap();
        let truth = source.truth_bits();
        let err = est.value_bits - truth;
        assert!(
            err.abs() <= 0.08,
            "rho={rho}: estimate {} vs {truth}",
            est.value_bits
        );
        assert!(
            err <= 0.05,
            "rho={rho}: estimate {} overshoots {truth}",
            est.value_bits
        );
        if rho == 0.0 {
            assert!(
                (-0.02..=0.05).contains(&est.value_bits),
                "independent: {}",
                est.value_bits
            );
        }
    }
}

#[test]
fn noiseless_discrete_message_is_fully_recovered() {
    let source = NoiselessBits { k: 2, copies: 2 };
    let config = MineConfig {
        precision: Precision::F32,
        ..small_config()
    };
    let (est, _) = run_mine(&source, &config, &mut from_seed(4)).unwrap();
    assert!(est.value_bits >= 1.8, "estimate {}", est.value_bits);
    assert!(
        est.value_bits <= 2.0 + 0.1,
        "estimate {} exceeds H(M)",
        est.value_bits
    );
}

#[test]
fn repeated_evaluation_is_consistent() {
    let source = GaussianPair { rho: 0.7 };
    let config = MineConfig {
        samples: 20_000,
        epochs: 10,
        ..small_config()
    };
    let mut rng = from_seed(5);
    let mut critic = MineCritic::<f64>::new(2, &config, &mut rng).unwrap();
    train_mine(&mut critic, &source, &config, &mut rng).unwrap();
    let a = estimate_mi(&critic, &source, 50_000, 1000, &mut rng).unwrap();
    let b = estimate_mi(&critic, &source, 50_000, 1000, &mut rng).unwrap();
    let se = (a.std_error_bits.powi(2) + b.std_error_bits.powi(2)).sqrt();
    assert!(
        (a.value_bits - b.value_bits).abs() <= 3.0 * se,
        "{} vs {} (se {se})",
        a.value_bits,
        b.value_bits
    );
    assert!(a.value_bits <= source.truth_bits() + 0.05);
}

#[test]
fn dv_matches_direct_evaluation() {
    let mut rng = from_seed(6);
    for _ in 0..100 {
        let joint: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
        let marginal: Vec<f64> = (0..80).map(|_| rng.random_range(-3.0..3.0)).collect();
        let direct = joint.iter().sum::<f64>() / 50.0
            - (marginal.iter().map(|t| t.exp()).sum::<f64>() / 80.0).ln();
        assert!((dv_objective(&joint, &marginal).unwrap() - direct).abs() < 1e-10);
        // Shifting every score leaves the bound unchanged.
        let shift = |v: &[f64]| v.iter().map(|t| t + 500.0).collect::<Vec<_>>();
        assert!((dv_objective(&shift(&joint), &shift(&marginal)).unwrap() - direct).abs() < 1e-10);
    }
}

mod leakage {
    use super::common::exact_leakage;
    use wiretap_core::channel::{ChannelModel, FadingProfile};
    use wiretap_core::metrics::{estimate_leakage, WiretapSystem};
    use wiretap_core::mine::MineConfig;
    use wiretap_core::reliability::{build_autoencoder, CodeParams, TrainConfig};
    use wiretap_core::rng::from_seed;
    use wiretap_core::seclayer::Seed;

    fn system(eve: ChannelModel) -> WiretapSystem {
        let params = CodeParams::from_rates(4, 0.25, 0.5).unwrap();
        let mut rng = from_seed(71);
        let mut ae = build_autoencoder(params, &mut rng).unwrap();
        let bob = ChannelModel::new(FadingProfile::awgn(), params.noise_spec(5.0)).unwrap();
        let config = TrainConfig {
            epochs: 2,
            batches_per_epoch: 200,
            batch_size: 500,
            validation_words: 1000,
            ..TrainConfig::default()
        };
        ae.train(&bob, &config, &mut rng).unwrap();
        WiretapSystem::new(ae, Seed::from_value(3, 2).unwrap(), bob, eve).unwrap()
    }

    #[test]
    fn closed_form_limits() {
        let quiet = system(ChannelModel::with_noise_variance(FadingProfile::awgn(), 1e-4).unwrap());
        let (bits, _) = exact_leakage(&quiet, 2000, &mut from_seed(72));
        assert!((bits - 1.0).abs() < 1e-3, "noiseless leakage {bits}");
        let loud = quiet.with_eve(
            ChannelModel::with_noise_variance(FadingProfile::rayleigh(1, 1.0), 1e4).unwrap(),
        );
        let (bits, se) = exact_leakage(&loud, 2000, &mut from_seed(73));
        assert!(
            bits.abs() < 3.0 * se + 1e-3,
            "drowned leakage {bits} ± {se}"
        );
    }

    #[test]
    fn mine_tracks_closed_form_on_a_learned_code() {
        let params = CodeParams::from_rates(4, 0.25, 0.5).unwrap();
        for (seed, profile) in [
            (74, FadingProfile::awgn()),
            (75, FadingProfile::rayleigh(1, 1.0)),
        ] {
            let eve = ChannelModel::new(profile, params.noise_spec(0.0)).unwrap();
            let sys = system(eve);
            let (truth, se) = exact_leakage(&sys, 20_000, &mut from_seed(seed));
            let config = MineConfig {
                samples: 50_000,
                eval_samples: 50_000,
                hidden_width: 64,
                hidden_layers: 2,
                ..MineConfig::default()
            };
            let est = estimate_leakage(&sys, &config, &mut from_seed(seed + 10)).unwrap();
            assert!(
                (est.value_bits - truth).abs() <= 0.08 && est.value_bits <= truth + 0.05 + 2.0 * se,
                "{}: MINE {} vs exact {truth} ± {se}",
                profile.label(),
                est.value_bits
            );
        }
    }
}
