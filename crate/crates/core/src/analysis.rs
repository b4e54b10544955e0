//! Seed-dispersion study: distance statistics between quantized encodings
//! of distinct messages sharing the same randomization bits.

use std::io::Write;

use crate::error::{contract, Result};
use crate::reliability::Autoencoder;
use crate::seclayer::{SecurityLayer, Seed};

/// Uniform mid-rise quantizer with `levels` cells over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    levels: usize,
    lo: f64,
    hi: f64,
}

impl Quantizer {
    pub fn new(levels: usize, lo: f64, hi: f64) -> Result<Self> {
        contract!(
            levels >= 2,
            "quantizer needs at least 2 levels, got {levels}"
        );
        contract!(
            hi > lo && lo.is_finite() && hi.is_finite(),
            "invalid range [{lo}, {hi}]"
        );
        Ok(Self { levels, lo, hi })
    }

    /// Range spanning every symbol of `values`.
    pub fn spanning(levels: usize, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        Self::new(levels, lo, hi)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn quantize_symbol(&self, x: f64) -> u32 {
        let clipped = x.clamp(self.lo, self.hi);
        let cell = ((clipped - self.lo) / (self.hi - self.lo) * self.levels as f64).floor();
        (cell as usize).min(self.levels - 1) as u32
    }

    pub fn quantize(&self, x: &[f64]) -> Vec<u32> {
        x.iter().map(|&v| self.quantize_symbol(v)).collect()
    }
}

pub fn hamming_distance(u: &[u32], v: &[u32]) -> Result<usize> {
    contract!(
        u.len() == v.len(),
        "length mismatch {} vs {}",
        u.len(),
        v.len()
    );
    Ok(u.iter().zip(v).filter(|(a, b)| a != b).count())
}

/// `Σ min(|u_i − v_i|, l − |u_i − v_i|)` over the alphabet `{0, …, l−1}`.
pub fn lee_distance(u: &[u32], v: &[u32], levels: usize) -> Result<usize> {
    contract!(
        u.len() == v.len(),
        "length mismatch {} vs {}",
        u.len(),
        v.len()
    );
    contract!(
        u.iter().chain(v).all(|&s| (s as usize) < levels),
        "symbol outside alphabet of size {levels}"
    );
    Ok(u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as usize;
            d.min(levels - d)
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceMetric {
    Hamming,
    Lee,
}

impl DistanceMetric {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Hamming => "hamming",
            Self::Lee => "lee",
        }
    }
}

/// Counts indexed by integer distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceHistogram {
    pub metric: DistanceMetric,
    pub counts: Vec<u64>,
}

impl DistanceHistogram {
    pub fn new(metric: DistanceMetric, max_distance: usize) -> Self {
        Self {
            metric,
            counts: vec![0; max_distance + 1],
        }
    }

    pub fn record(&mut self, distance: usize) {
        if distance >= self.counts.len() {
            self.counts.resize(distance + 1, 0);
        }
        self.counts[distance] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bins,counts` rows for the occupied range of distances.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bins", "counts"])?;
        let first = self.counts.iter().position(|&c| c > 0).unwrap_or(0);
        let last = self.counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        for (bin, count) in self.counts.iter().enumerate().take(last + 1).skip(first) {
            w.write_record([bin.to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Total-variation distance between the normalized histograms.
pub fn histogram_distance(a: &DistanceHistogram, b: &DistanceHistogram) -> Result<f64> {
    contract!(
        a.metric == b.metric,
        "cannot compare {} with {}",
        a.metric.tag(),
        b.metric.tag()
    );
    let (ta, tb) = (a.total() as f64, b.total() as f64);
    contract!(ta > 0.0 && tb > 0.0, "empty histogram");
    let len = a.counts.len().max(b.counts.len());
    let at = |h: &DistanceHistogram, i: usize| h.counts.get(i).copied().unwrap_or(0) as f64;
    Ok(0.5
        * (0..len)
            .map(|i| (at(a, i) / ta - at(b, i) / tb).abs())
            .sum::<f64>())
}

/// Both distance histograms for one seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedDispersion {
    pub seed: Seed,
    pub hamming: DistanceHistogram,
    pub lee: DistanceHistogram,
}

/// Histograms over all ordered `m₁ ≠ m₂` and all `b`, for each seed in `seeds`.
///
/// The quantizer range is the min/max over the whole codebook, shared by
/// every seed.
pub fn seed_dispersion(
    model: &Autoencoder,
    seeds: &[Seed],
    levels: usize,
) -> Result<Vec<SeedDispersion>> {
    let p = model.params();
    let codebook = model.codebook_matrix()?;
    let quantizer = Quantizer::spanning(levels, codebook.iter().copied())?;
    let symbols: Vec<Vec<u32>> = codebook
        .rows()
        .into_iter()
        .map(|r| quantizer.quantize(&r.to_vec()))
        .collect();

    let messages = 1u32 << p.k;
    let randomizations = 1u32 << (p.q - p.k);
    seeds
        .iter()
        .map(|&seed| {
            contract!(
                seed.width() as usize == p.q,
                "seed width {} != q={}",
                seed.width(),
                p.q
            );
            let layer = SecurityLayer::new(p.k, seed)?;
            let mut hamming = DistanceHistogram::new(DistanceMetric::Hamming, p.n);
            let mut lee = DistanceHistogram::new(DistanceMetric::Lee, p.n * levels / 2);
            for m1 in 0..messages {
                for m2 in (0..messages).filter(|&m2| m2 != m1) {
                    for b in 0..randomizations {
                        let u = &symbols[layer.encode_index(m1, b) as usize];
                        let v = &symbols[layer.encode_index(m2, b) as usize];
                        hamming.record(hamming_distance(u, v)?);
                        lee.record(lee_distance(u, v, levels)?);
                    }
                }
            }
            Ok(SeedDispersion { seed, hamming, lee })
        })
        .collect()
}

/// Largest pairwise total-variation distance, per metric, across seeds.
pub fn max_pairwise_distance(results: &[SeedDispersion]) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0f64);
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            worst.0 = worst.0.max(histogram_distance(&a.hamming, &b.hamming)?);
            worst.1 = worst.1.max(histogram_distance(&a.lee, &b.lee)?);
        }
    }
    Ok(worst)
}
