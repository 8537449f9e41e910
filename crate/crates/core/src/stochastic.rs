//! Seeded channel and energy-arrival processes.
//!
//! Every run owns an [`RngStream`]. The draws for slot `t` come from a ChaCha8
//! generator keyed by the stream and positioned on stream `2t`; the baseline
//! policies use stream `2t + 1`. A slot's randomness is therefore a pure
//! function of `(master_seed, run_id, t)` and does not depend on which policy
//! consumed how many numbers in earlier slots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SlotState, SystemConfig};

/// Cap on channel rejection-sampling attempts per user.
pub const REJECTION_LIMIT: usize = 1_000_000;

/// Relative gap used to make tied SNR draws strictly ascending.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingDistribution {
    /// Unit-mean exponential fade.
    Exponential,
    /// Uniform fade on `[0, width]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub dist: FadingDistribution,
    /// Upper end of the uniform fade; ignored for exponential fading.
    pub uniform_width: f64,
    /// Linear SNR per unit fade.
    pub snr_scale: f64,
    /// Draws outside `[gamma_lo, gamma_hi]` (or equal to zero) are redrawn.
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

impl ChannelModel {
    /// Unit-parameter fading scaled by `gamma_hi` and conditioned on the window.
    pub fn for_window(dist: FadingDistribution, gamma_lo: f64, gamma_hi: f64) -> Self {
        ChannelModel {
            dist,
            uniform_width: 1.0,
            snr_scale: gamma_hi,
            gamma_lo,
            gamma_hi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr_scale > 0.0 && self.snr_scale.is_finite()) {
            return Err(Error::Config(format!(
                "channel snr_scale must be positive, got {}",
                self.snr_scale
            )));
        }
        if !(self.gamma_lo >= 0.0 && self.gamma_lo < self.gamma_hi && self.gamma_hi.is_finite()) {
            return Err(Error::Config(format!(
                "channel window needs 0 <= gamma_lo < gamma_hi, got [{}, {}]",
                self.gamma_lo, self.gamma_hi
            )));
        }
        if self.dist == FadingDistribution::Uniform && !(self.uniform_width > 0.0) {
            return Err(Error::Config(format!(
                "uniform fading width must be positive, got {}",
                self.uniform_width
            )));
        }
        Ok(())
    }

    /// One unscaled fade.
    pub fn sample_fade<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.dist {
            FadingDistribution::Exponential => Exp1.sample(rng),
            FadingDistribution::Uniform => rng.gen::<f64>() * self.uniform_width,
        }
    }

    /// One SNR draw conditioned on the clamp window.
    pub fn sample_snr<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..REJECTION_LIMIT {
            let g = self.snr_scale * self.sample_fade(rng);
            if g > 0.0 && g >= self.gamma_lo && g <= self.gamma_hi {
                return Ok(g);
            }
        }
        Err(Error::RejectionLimit(REJECTION_LIMIT))
    }
}

/// Compound-Poisson energy arrivals: `floor + Σ_{i≤N} U_i`, `N ~ Poisson(λ)`,
/// `U_i ~ Uniform(0, alpha_mark)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalModel {
    pub lambda: f64,
    pub alpha_mark: f64,
    pub floor: f64,
}

impl ArrivalModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("alpha_mark", self.alpha_mark),
            ("floor", self.floor),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "arrival {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.floor + self.lambda * self.alpha_mark / 2.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = if self.lambda > 0.0 {
            Poisson::new(self.lambda)
                .expect("validated lambda")
                .sample(rng) as u64
        } else {
            0
        };
        let marks: f64 = (0..n).map(|_| rng.gen::<f64>() * self.alpha_mark).sum();
        self.floor + marks
    }
}

/// Reproducible per-run randomness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: [u8; 32],
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Derives the stream for `(master_seed, run_id)`.
///
/// A SplitMix64 sequence seeded with `master_seed` is advanced once, mixed
/// with `run_id`, and re-seeded; its next four outputs form the 256-bit
/// ChaCha8 key.
pub fn stream_for_run(master_seed: u64, run_id: u64) -> RngStream {
    let mut outer = SplitMix64(master_seed);
    let base = outer.next() ^ run_id.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut inner = SplitMix64(base);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&inner.next().to_le_bytes());
    }
    RngStream { key }
}

impl RngStream {
    /// Generator for the channel and arrival draws of slot `t`.
    pub fn slot_rng(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(2 * t);
        rng
    }

    /// Generator for policy randomness in slot `t`.
    pub fn policy_rng(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(2 * t + 1);
        rng
    }
}

/// Sorts ascending and nudges ties down so the order is strict.
pub fn sort_strict(gamma: &mut [f64]) {
    gamma.sort_by(f64::total_cmp);
    for i in (0..gamma.len().saturating_sub(1)).rev() {
        if gamma[i] >= gamma[i + 1] {
            gamma[i] = gamma[i + 1] * (1.0 - TIE_EPS);
        }
    }
}

/// Channel SNRs and arrived energy for slot `t`.
pub fn draw_slot(stream: &RngStream, cfg: &SystemConfig, t: u64) -> Result<SlotState> {
    let mut rng = stream.slot_rng(t);
    let mut gamma = (0..cfg.users)
        .map(|_| cfg.channel.sample_snr(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    sort_strict(&mut gamma);
    let e_a = cfg.arrival.sample(&mut rng);
    Ok(SlotState { t, gamma, e_a })
}
