//! Seeded randomness for every mechanism in the library.
//!
//! All noise flows through an explicit [`NoiseSource`]; there is no ambient
//! global randomness. A source is keyed by `(seed, stream, mode)` and two
//! sources with the same key produce bit-identical draw sequences, which is
//! what makes whole pipelines replayable. Distinct stream ids under the same
//! seed yield independent sequences (ChaCha stream separation), so parallel
//! trials can each own `stream = trial index`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Whether a source draws real noise or produces the deterministic trace.
///
/// In [`NoiseMode::ZeroNoise`] every Laplace draw is exactly 0 and a
/// Bernoulli(p) coin comes up kept only for p >= 1, i.e. records are dropped
/// unless their keep probability is certain. Shuffles are the identity and
/// categorical draws resolve to the first maximum-weight index. The mode
/// exists for golden trace tests; it is not private.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Live,
    ZeroNoise,
}

/// Deterministic, stream-separable noise generator.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha12Rng,
    seed: u64,
    stream: u64,
    mode: NoiseMode,
}

impl NoiseSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::with_mode(seed, stream, NoiseMode::Live)
    }

    pub fn zero_noise(seed: u64, stream: u64) -> Self {
        Self::with_mode(seed, stream, NoiseMode::ZeroNoise)
    }

    pub fn with_mode(seed: u64, stream: u64, mode: NoiseMode) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            seed,
            stream,
            mode,
        }
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh source with the same seed and mode on a different stream.
    pub fn substream(&self, stream: u64) -> Self {
        Self::with_mode(self.seed, stream, self.mode)
    }

    /// One draw from the Laplace distribution with the given scale.
    pub fn laplace(&mut self, scale: f64) -> Result<f64> {
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::NonPositiveScale(scale));
        }
        if self.mode == NoiseMode::ZeroNoise {
            return Ok(0.0);
        }
        // Inverse CDF on u ~ U(-1/2, 1/2); reject the measure-zero edge
        // where 1 - 2|u| underflows to 0.
        let u = loop {
            let v: f64 = self.rng.gen::<f64>() - 0.5;
            if 1.0 - 2.0 * v.abs() > 0.0 {
                break v;
            }
        };
        Ok(-scale * u.signum() * (-2.0 * u.abs()).ln_1p())
    }

    /// Bernoulli keep/drop coin with keep probability `p`.
    pub fn keep(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(p));
        }
        match self.mode {
            NoiseMode::ZeroNoise => Ok(p >= 1.0),
            NoiseMode::Live => Ok(self.rng.gen::<f64>() < p),
        }
    }

    /// Uniform draw in [0, 1). Zero-noise mode returns 0.
    pub fn uniform(&mut self) -> f64 {
        match self.mode {
            NoiseMode::ZeroNoise => 0.0,
            NoiseMode::Live => self.rng.gen::<f64>(),
        }
    }

    /// Uniform index in [0, n). Zero-noise mode returns 0.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        match self.mode {
            NoiseMode::ZeroNoise => 0,
            NoiseMode::Live => self.rng.gen_range(0..n),
        }
    }

    /// Uniform in-place shuffle; identity in zero-noise mode.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        if self.mode == NoiseMode::Live {
            xs.shuffle(&mut self.rng);
        }
    }

    /// Index draw proportional to the given nonnegative weights.
    ///
    /// Zero-noise mode picks the first index attaining the maximum weight,
    /// the deterministic analogue of the mechanism concentrating on its mode.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        debug_assert!(!weights.is_empty());
        if self.mode == NoiseMode::ZeroNoise {
            let mut best = 0;
            for (i, w) in weights.iter().enumerate() {
                if *w > weights[best] {
                    best = i;
                }
            }
            return best;
        }
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0 && total.is_finite());
        let mut u = self.rng.gen::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }

    /// Standard normal draw (Box-Muller); zero-noise mode returns 0.
    ///
    /// Used by the experiment harness to synthesize Gaussian datasets from
    /// the same seeded stream space as the mechanism noise.
    pub fn standard_normal(&mut self) -> f64 {
        if self.mode == NoiseMode::ZeroNoise {
            return 0.0;
        }
        let u1: f64 = loop {
            let v = self.rng.gen::<f64>();
            if v > 0.0 {
                break v;
            }
        };
        let u2: f64 = self.rng.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
