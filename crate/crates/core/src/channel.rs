//! Real-valued T-tap Rayleigh block-fading channel with intersymbol
//! interference.
//!
//! `y_i = Σ_{t<T} |H_t| x_{i−t} + N_i`, where symbols before the start of
//! the block are zero, `|H_t|` is Rayleigh with `E|H_t|² = ω²/T` and
//! `N_i ~ N(0, σ²)` with `σ² = (2 R_r E_b/N₀)⁻¹`. Taps are drawn once per
//! block and independently across blocks. `T = 0` is the AWGN channel.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, Result};

/// Tap count and total average power of the fading taps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingProfile {
    pub taps: usize,
    pub variance: f64,
}

impl FadingProfile {
    pub fn awgn() -> Self {
        Self {
            taps: 0,
            variance: 1.0,
        }
    }

    pub fn rayleigh(taps: usize, variance: f64) -> Self {
        Self { taps, variance }
    }

    pub fn is_awgn(&self) -> bool {
        self.taps == 0
    }

    /// Average power `E|H_t|²` of each tap.
    pub fn tap_power(&self) -> f64 {
        self.variance / self.taps as f64
    }

    /// Short tag, e.g. `awgn` or `rayleigh-3-tap`.
    pub fn label(&self) -> String {
        if self.is_awgn() {
            "awgn".to_string()
        } else {
            format!("rayleigh-{}-tap", self.taps)
        }
    }
}

/// Per-bit SNR and the reliability-layer rate used to scale it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub ebn0_db: f64,
    pub rate: f64,
}

impl NoiseSpec {
    pub fn new(ebn0_db: f64, rate: f64) -> Self {
        Self { ebn0_db, rate }
    }
}

/// `σ² = 1 / (2 R_r 10^(Eb/N0 / 10))`. The only dB → linear conversion in the crate.
pub fn noise_variance(spec: NoiseSpec) -> Result<f64> {
    contract!(
        spec.rate > 0.0 && spec.rate.is_finite(),
        "rate must be positive, got {}",
        spec.rate
    );
    contract!(spec.ebn0_db.is_finite(), "Eb/N0 must be finite");
    Ok(1.0 / (2.0 * spec.rate * 10f64.powf(spec.ebn0_db / 10.0)))
}

/// Draws Rayleigh tap magnitudes `sqrt(G₁² + G₂²)`, `G ~ N(0, ω²/(2T))`.
pub fn sample_taps<R: Rng + ?Sized>(profile: &FadingProfile, rng: &mut R) -> Vec<f64> {
    let mut taps = vec![0.0; profile.taps];
    sample_taps_into(profile, rng, &mut taps);
    taps
}

fn sample_taps_into<R: Rng + ?Sized>(profile: &FadingProfile, rng: &mut R, out: &mut [f64]) {
    let scale = (profile.tap_power() / 2.0).sqrt();
    for tap in out.iter_mut() {
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        *tap = scale * g1.hypot(g2);
    }
}

/// One block's worth of channel randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub tap_magnitudes: Vec<f64>,
    pub noise: Vec<f64>,
}

impl ChannelRealization {
    pub fn noiseless(tap_magnitudes: Vec<f64>, n: usize) -> Self {
        Self {
            tap_magnitudes,
            noise: vec![0.0; n],
        }
    }
}

pub fn transmit(x: &[f64], realization: &ChannelRealization) -> Result<Vec<f64>> {
    contract!(
        x.len() == realization.noise.len(),
        "codeword length {} != noise length {}",
        x.len(),
        realization.noise.len()
    );
    contract!(
        realization.tap_magnitudes.iter().all(|&h| h >= 0.0),
        "tap magnitudes must be nonnegative"
    );
    let mut y = realization.noise.clone();
    convolve_add(x, &realization.tap_magnitudes, &mut y);
    Ok(y)
}

/// `y_i += Σ_t h_t x_{i−t}` over the block, zero before its start.
#[inline]
fn convolve_add(x: &[f64], taps: &[f64], y: &mut [f64]) {
    for (t, &h) in taps.iter().enumerate() {
        for i in t..y.len() {
            y[i] += h * x[i - t];
        }
    }
}

/// Adjoint of the convolution: `g_x[j] += Σ_t h_t g_y[j+t]`.
#[inline]
pub(crate) fn convolve_adjoint_add(grad_y: &[f64], taps: &[f64], grad_x: &mut [f64]) {
    for (t, &h) in taps.iter().enumerate() {
        for j in 0..grad_x.len().saturating_sub(t) {
            grad_x[j] += h * grad_y[j + t];
        }
    }
}

/// A fully specified link: fading profile plus noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub profile: FadingProfile,
    pub noise: NoiseSpec,
    sigma: f64,
}

impl ChannelModel {
    pub fn new(profile: FadingProfile, noise: NoiseSpec) -> Result<Self> {
        contract!(
            profile.variance > 0.0 && profile.variance.is_finite(),
            "fading variance must be positive"
        );
        let sigma = noise_variance(noise)?.sqrt();
        Ok(Self {
            profile,
            noise,
            sigma,
        })
    }

    /// Overrides the noise variance directly (no Eb/N0 bookkeeping).
    pub fn with_noise_variance(profile: FadingProfile, variance: f64) -> Result<Self> {
        contract!(variance >= 0.0, "noise variance must be nonnegative");
        Ok(Self {
            profile,
            noise: NoiseSpec::new(f64::NAN, f64::NAN),
            sigma: variance.sqrt(),
        })
    }

    pub fn noise_std(&self) -> f64 {
        self.sigma
    }

    pub fn sample_realization<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> ChannelRealization {
        let mut taps = vec![1.0; self.profile.taps.max(1)];
        if !self.profile.is_awgn() {
            sample_taps_into(&self.profile, rng, &mut taps);
        }
        let noise = self.sample_noise(n, rng);
        ChannelRealization {
            tap_magnitudes: taps,
            noise,
        }
    }

    fn sample_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                self.sigma * g
            })
            .collect()
    }

    /// Fresh realization applied to `x`, written into `y`; the drawn taps land in `taps`.
    pub(crate) fn apply_into<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        y: &mut [f64],
        taps: &mut Vec<f64>,
        rng: &mut R,
    ) {
        taps.clear();
        taps.resize(self.profile.taps.max(1), 1.0);
        if !self.profile.is_awgn() {
            sample_taps_into(&self.profile, rng, taps);
        }
        for v in y.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v = self.sigma * g;
        }
        convolve_add(x, taps, y);
    }

    /// One realization per row, drawn in the same order as [`Self::sample_realization`].
    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        batch: usize,
        n: usize,
        rng: &mut R,
    ) -> ChannelBatch {
        let width = self.profile.taps.max(1);
        let mut taps = Array2::ones((batch, width));
        let mut noise = Array2::zeros((batch, n));
        for (mut h, mut z) in taps.rows_mut().into_iter().zip(noise.rows_mut()) {
            if !self.profile.is_awgn() {
                sample_taps_into(
                    &self.profile,
                    rng,
                    h.as_slice_mut().expect("standard layout"),
                );
            }
            for v in z.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *v = self.sigma * g;
            }
        }
        ChannelBatch { taps, noise }
    }

    pub fn apply<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        let mut taps = Vec::new();
        self.apply_into(x, &mut y, &mut taps, rng);
        y
    }
}

/// Independent block realizations for a batch of codewords (one row each).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBatch {
    pub taps: Array2<f64>,
    pub noise: Array2<f64>,
}

impl ChannelBatch {
    pub fn len(&self) -> usize {
        self.noise.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn realization(&self, row: usize) -> ChannelRealization {
        ChannelRealization {
            tap_magnitudes: self.taps.row(row).to_vec(),
            noise: self.noise.row(row).to_vec(),
        }
    }

    pub fn transmit(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        contract!(
            x.dim() == self.noise.dim(),
            "codeword batch {:?} does not match channel batch {:?}",
            x.dim(),
            self.noise.dim()
        );
        let mut y = self.noise.clone();
        for ((xr, mut yr), h) in x.rows().into_iter().zip(y.rows_mut()).zip(self.taps.rows()) {
            let yr = yr.as_slice_mut().expect("standard layout");
            let h = h.to_vec();
            convolve_add(&xr.to_vec(), &h, yr);
        }
        Ok(y)
    }

    /// Gradient with respect to the channel inputs given `dL/dy`.
    pub fn backward(&self, grad_y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        contract!(
            grad_y.dim() == self.noise.dim(),
            "gradient batch {:?} does not match channel batch {:?}",
            grad_y.dim(),
            self.noise.dim()
        );
        let mut grad_x = Array2::zeros(grad_y.dim());
        for ((g, mut gx), h) in grad_y
            .rows()
            .into_iter()
            .zip(grad_x.rows_mut())
            .zip(self.taps.rows())
        {
            let gx = gx.as_slice_mut().expect("standard layout");
            convolve_adjoint_add(&g.to_vec(), &h.to_vec(), gx);
        }
        Ok(grad_x)
    }
}

/// Complementary CDF of a Rayleigh magnitude with `E|H|² = ω²`.
pub fn rayleigh_ccdf(x: f64, omega_sq: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-x * x / omega_sq).exp()
    }
}

/// Single-tap stochastic degradation of Eve's channel with respect to Bob's.
///
/// Holds iff `F̄_{H_Y}(h/σ_Y²) ≥ F̄_{H_Z}(h/σ_Z²)` for all `h ≥ 0`. With
/// Rayleigh magnitudes both sides are `exp(−h²/(σ⁴ω²))`, so the ordering
/// reduces to `σ_Y⁴ ω_Y² ≥ σ_Z⁴ ω_Z²`.
pub fn is_stochastically_degraded(
    omega_y_sq: f64,
    sigma_y_sq: f64,
    omega_z_sq: f64,
    sigma_z_sq: f64,
) -> Result<bool> {
    for (name, v) in [
        ("omega_y^2", omega_y_sq),
        ("sigma_y^2", sigma_y_sq),
        ("omega_z^2", omega_z_sq),
        ("sigma_z^2", sigma_z_sq),
    ] {
        contract!(v > 0.0 && v.is_finite(), "{name} must be positive, got {v}");
    }
    Ok(sigma_y_sq * sigma_y_sq * omega_y_sq >= sigma_z_sq * sigma_z_sq * omega_z_sq)
}
