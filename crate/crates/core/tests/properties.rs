//! Invariants over randomly generated inputs.

use proptest::prelude::*;
use wiretap_core::analysis::{hamming_distance, lee_distance, Quantizer};
use wiretap_core::channel::{transmit, ChannelRealization};
use wiretap_core::metrics::equivocation_rate;
use wiretap_core::reliability::normalize_power;

const LEVELS: usize = 16;

fn words(len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..LEVELS as u32, len)
}

fn triple() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u32>)> {
    (1usize..=16).prop_flat_map(|n| (words(n), words(n), words(n)))
}

proptest! {
    #[test]
    fn distance_axioms((u, v, w) in triple()) {
        for d in [
            |a: &[u32], b: &[u32]| hamming_distance(a, b).unwrap(),
            |a: &[u32], b: &[u32]| lee_distance(a, b, LEVELS).unwrap(),
        ] {
            prop_assert_eq!(d(&u, &u), 0);
            prop_assert_eq!(d(&u, &v), d(&v, &u));
            prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w));
            prop_assert_eq!(d(&u, &v) == 0, u == v);
        }
        let (h, l) = (hamming_distance(&u, &v).unwrap(), lee_distance(&u, &v, LEVELS).unwrap());
        prop_assert!(l >= h);
        prop_assert!(l <= h * LEVELS / 2);
    }

    #[test]
    fn quantizer_is_monotone(lo in -5.0f64..0.0, width in 0.1f64..10.0, mut xs in prop::collection::vec(-20.0f64..20.0, 2..50)) {
        let q = Quantizer::new(LEVELS, lo, lo + width).unwrap();
        xs.sort_by(f64::total_cmp);
        let symbols = q.quantize(&xs);
        prop_assert!(symbols.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(symbols.iter().all(|&s| (s as usize) < LEVELS));
    }

    #[test]
    fn noiseless_channel_is_linear(
        taps in prop::collection::vec(0.0f64..2.0, 0..10),
        x1 in prop::collection::vec(-3.0f64..3.0, 8),
        x2 in prop::collection::vec(-3.0f64..3.0, 8),
        a in -2.0f64..2.0,
    ) {
        let r = ChannelRealization::noiseless(taps, 8);
        let mixed: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + q).collect();
        let y = transmit(&mixed, &r).unwrap();
        let (y1, y2) = (transmit(&x1, &r).unwrap(), transmit(&x2, &r).unwrap());
        for i in 0..8 {
            prop_assert!((y[i] - (a * y1[i] + y2[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn channel_is_causal(taps in prop::collection::vec(0.0f64..2.0, 1..6), x in prop::collection::vec(-3.0f64..3.0, 8), j in 0usize..8) {
        let r = ChannelRealization::noiseless(taps, 8);
        let mut bumped = x.clone();
        bumped[j] += 1.0;
        let (y, yb) = (transmit(&x, &r).unwrap(), transmit(&bumped, &r).unwrap());
        for i in 0..j {
            prop_assert_eq!(y[i], yb[i]);
        }
    }

    #[test]
    fn normalization_fixes_energy(x in prop::collection::vec(-10.0f64..10.0, 1..32)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        let c = normalize_power(&x).unwrap();
        prop_assert!((c.energy() - x.len() as f64).abs() < 1e-9 * x.len() as f64);
    }

    #[test]
    fn equivocation_within_bounds(k in 1usize..8, frac in 0.0f64..=1.0) {
        let n = 4 * k;
        let e = equivocation_rate(frac * k as f64, k, n).unwrap();
        prop_assert!(e.rate >= 0.0 && e.rate <= e.secure_rate);
        prop_assert!((e.secure_rate - k as f64 / n as f64).abs() < 1e-15);
        prop_assert!(equivocation_rate(k as f64 + 0.01, k, n).is_err());
    }
}
