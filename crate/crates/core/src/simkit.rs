//! Point-source benchmark generator: a square sensor grid measuring two
//! classes of bandpass sources plus sensor noise.
//!
//! A scene places `N1` sources of the class to maximize and `N2` sources of
//! the class to minimize uniformly over a `sqrt(C) x sqrt(C)` unit grid.
//! Each source is white Gaussian noise bandpass-filtered to a random band
//! inside [1, 9] Hz at 20 Hz sampling, propagates with gain `exp(-d/sigma)`
//! (with `sigma` fixed so the farthest sensor sees the configured maximal
//! attenuation) and an integer-sample delay proportional to distance
//! (maximal delay 100 ms = 2 samples). Class-2 sources carry `power_ratio`
//! (nominally 150) times the per-source power of class-1 sources, with the
//! ratio applied per source. Independent white sensor noise is added to
//! both class mixtures.
//!
//! All randomness flows through ChaCha8, a counter-based stream cipher RNG,
//! so a `(config, seed)` pair reproduces bit-for-bit on any platform.
//! Sub-streams (scene layout, each source, each noise floor) use seeds
//! derived by [`derive_seed`], a SplitMix64-style mix, so Monte Carlo
//! workers never share a stream.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{estimate_covariance, CovariancePair, ProblemDims};
use crate::mat::Mat;

/// Order of the windowed-sinc bandpass FIR (129 taps, linear phase).
pub const FIR_ORDER: usize = 128;

/// Minimal passband width in Hz the generator will draw.
pub const MIN_BAND_WIDTH: f64 = 1.0;

/// Scene and synthesis parameters. Defaults follow the benchmark model:
/// 20 Hz sampling, bands in [1, 9] Hz, 0.5% maximal attenuation, 100 ms
/// maximal delay, 150x class-2 source power, sensor noise standard
/// deviation of twice the maximal attenuation, T = 10000 samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Sensor count; must be a perfect square.
    pub c: usize,
    /// Lags per sensor in the covariance expansion.
    pub l: usize,
    pub fs: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub max_attenuation: f64,
    /// Maximal propagation delay in seconds (at the grid diagonal).
    pub max_delay: f64,
    pub power_ratio: f64,
    /// Sensor noise standard deviation.
    pub noise_amp: f64,
    /// Source counts; `None` draws uniformly from [1, 2C]. Zero is allowed
    /// as a test hook for noise-only scenes.
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    /// Samples per class stream.
    pub t: usize,
}

impl SceneConfig {
    pub fn new(c: usize, l: usize) -> Self {
        SceneConfig {
            c,
            l,
            fs: 20.0,
            band_lo: 1.0,
            band_hi: 9.0,
            max_attenuation: 0.005,
            max_delay: 0.1,
            power_ratio: 150.0,
            noise_amp: 2.0 * 0.005,
            n1: None,
            n2: None,
            t: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = (self.c as f64).sqrt().round() as usize;
        if g * g != self.c || self.c == 0 {
            return Err(Error::InvalidConfig(format!(
                "C={} is not a perfect square",
                self.c
            )));
        }
        if self.l < 1 {
            return Err(Error::InvalidConfig("need L >= 1".into()));
        }
        if !(self.band_lo > 0.0 && self.band_hi > self.band_lo && self.band_hi < self.fs / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "band [{}, {}] must sit inside (0, fs/2)",
                self.band_lo, self.band_hi
            )));
        }
        if self.t < self.c * self.l {
            return Err(Error::InvalidConfig(format!(
                "T={} must be at least CL={}",
                self.t,
                self.c * self.l
            )));
        }
        if !(self.max_attenuation > 0.0 && self.max_attenuation < 1.0) {
            return Err(Error::InvalidConfig(
                "max_attenuation must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn grid_side(&self) -> usize {
        (self.c as f64).sqrt().round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceClass {
    /// Contributes to the numerator stream x1.
    X1,
    /// Contributes to the denominator stream x2.
    X2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Source {
    pub pos: (f64, f64),
    /// Passband in Hz.
    pub band: (f64, f64),
    pub class: SourceClass,
}

/// A generated scene: sensor grid, sources, and the seed all synthesis
/// randomness derives from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub sensors: Vec<(f64, f64)>,
    pub sources: Vec<Source>,
    pub seed: u64,
}

/// Lag-expanded sample matrices for both classes, `T x CL` each; column
/// `c*L + l` at row `t` holds stream sample `(t - l)` of sensor `c`.
#[derive(Debug, Clone)]
pub struct SignalSet {
    pub x1: Mat,
    pub x2: Mat,
    pub c: usize,
    pub l: usize,
}

/// SplitMix64-style seed derivation: stream `idx` of a master seed.
pub fn derive_seed(seed: u64, idx: u64) -> u64 {
    let mut z = seed
        .wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lay out the grid and draw source positions, bands, and (when not fixed)
/// source counts. Deterministic in `(config, seed)`.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene> {
    config.validate()?;
    let g = config.grid_side();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));

    let sensors: Vec<(f64, f64)> = (0..g)
        .flat_map(|i| (0..g).map(move |j| (i as f64, j as f64)))
        .collect();

    let n1 = config
        .n1
        .unwrap_or_else(|| rng.gen_range(1..=2 * config.c));
    let n2 = config
        .n2
        .unwrap_or_else(|| rng.gen_range(1..=2 * config.c));

    let side = (g - 1) as f64;
    let mut draw = |class: SourceClass| -> Source {
        let pos = (rng.gen_range(0.0..=side), rng.gen_range(0.0..=side));
        let lo = rng.gen_range(config.band_lo..=config.band_hi - MIN_BAND_WIDTH);
        let hi = rng.gen_range(lo + MIN_BAND_WIDTH..=config.band_hi);
        Source {
            pos,
            band: (lo, hi),
            class,
        }
    };
    let mut sources = Vec::with_capacity(n1 + n2);
    for _ in 0..n1 {
        sources.push(draw(SourceClass::X1));
    }
    for _ in 0..n2 {
        sources.push(draw(SourceClass::X2));
    }

    Ok(Scene {
        sensors,
        sources,
        seed,
    })
}

/// Windowed-sinc bandpass taps (Hamming window, `FIR_ORDER + 1` taps) for a
/// passband `[lo, hi]` Hz at sampling rate `fs`.
fn bandpass_taps(lo: f64, hi: f64, fs: f64) -> Vec<f64> {
    let m = FIR_ORDER as f64;
    let f1 = lo / fs;
    let f2 = hi / fs;
    let sinc = |x: f64| {
        if x.abs() < 1e-12 {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        }
    };
    (0..=FIR_ORDER)
        .map(|n| {
            let k = n as f64 - m / 2.0;
            let ideal = 2.0 * f2 * sinc(2.0 * f2 * k) - 2.0 * f1 * sinc(2.0 * f1 * k);
            let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / m).cos();
            ideal * window
        })
        .collect()
}

/// Valid-mode FIR convolution: output length `x.len() - taps.len() + 1`.
fn fir_filter(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let order = taps.len() - 1;
    (order..x.len())
        .map(|t| taps.iter().enumerate().map(|(i, h)| h * x[t - i]).sum())
        .collect()
}

/// One unit-power source stream of length `n`: bandpass-filtered white
/// Gaussian noise, normalized to unit sample power after filtering.
fn source_stream(band: (f64, f64), fs: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let resolution = fs / FIR_ORDER as f64;
    if band.1 - band.0 < resolution {
        return Err(Error::InvalidConfig(format!(
            "band [{}, {}] narrower than the filter resolution {resolution}",
            band.0, band.1
        )));
    }
    let taps = bandpass_taps(band.0, band.1, fs);
    let white: Vec<f64> = (0..n + FIR_ORDER)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut s = fir_filter(&taps, &white);
    let power = s.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let scale = 1.0 / power.sqrt().max(1e-300);
    s.iter_mut().for_each(|x| *x *= scale);
    Ok(s)
}

/// Synthesize both class streams of a scene and lag-expand them.
/// Grid diagonal: the largest sensor-to-sensor distance on a unit-spaced
/// `sqrt(C) x sqrt(C)` grid, used to normalize attenuation and delay.
pub fn grid_diagonal(c: usize) -> f64 {
    let g = (c as f64).sqrt().round() as usize;
    if g > 1 {
        std::f64::consts::SQRT_2 * (g - 1) as f64
    } else {
        1.0
    }
}

/// Distance gain `max_attenuation^(d / d_max)`: unit at the source and
/// exactly `max_attenuation` at distance `d_max` (`powf(a, 1.0)` is exact).
pub fn attenuation(max_attenuation: f64, d: f64, d_max: f64) -> f64 {
    max_attenuation.powf(d / d_max)
}

pub fn synthesize(scene: &Scene, config: &SceneConfig) -> Result<SignalSet> {
    config.validate()?;
    let c = config.c;
    let l = config.l;
    let t = config.t;
    let d_max = grid_diagonal(c);
    let max_delay_samples = (config.max_delay * config.fs).round() as usize;

    // Raw per-class sensor streams, with L-1 lead samples for lag expansion.
    let t_raw = t + l - 1;
    let mut raw1 = Mat::zeros(t_raw, c);
    let mut raw2 = Mat::zeros(t_raw, c);

    for (si, source) in scene.sources.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scene.seed, 2 + si as u64));
        let stream = source_stream(source.band, config.fs, t_raw + max_delay_samples, &mut rng)?;
        let amp = match source.class {
            SourceClass::X1 => 1.0,
            SourceClass::X2 => config.power_ratio.sqrt(),
        };
        let raw = match source.class {
            SourceClass::X1 => &mut raw1,
            SourceClass::X2 => &mut raw2,
        };
        for (ci, sensor) in scene.sensors.iter().enumerate() {
            let dx = sensor.0 - source.pos.0;
            let dy = sensor.1 - source.pos.1;
            let d = (dx * dx + dy * dy).sqrt();
            let gain = amp * attenuation(config.max_attenuation, d, d_max);
            let delay = ((d / d_max) * config.max_delay * config.fs).round() as usize;
            for ti in 0..t_raw {
                raw[(ti, ci)] += gain * stream[ti + max_delay_samples - delay];
            }
        }
    }

    for (stream_idx, raw) in [(0u64, &mut raw1), (1u64, &mut raw2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scene.seed, 1_000_000 + stream_idx));
        for ti in 0..t_raw {
            for ci in 0..c {
                raw[(ti, ci)] += config.noise_amp * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }

    let expand = |raw: &Mat| {
        Mat::from_fn(t, c * l, |ti, col| {
            let (ci, li) = (col / l, col % l);
            raw[(ti + l - 1 - li, ci)]
        })
    };
    Ok(SignalSet {
        x1: expand(&raw1),
        x2: expand(&raw2),
        c,
        l,
    })
}

/// Estimate the covariance pair of a signal set with `K` filters.
pub fn make_pair(signals: &SignalSet, k: usize) -> Result<CovariancePair> {
    let r1 = estimate_covariance(&signals.x1)?;
    let r2 = estimate_covariance(&signals.x2)?;
    CovariancePair::new(ProblemDims::new(signals.c, signals.l, k), r1, r2)
}

/// Convenience: scene, synthesis, and covariance estimation in one call.
pub fn simulate_pair(config: &SceneConfig, k: usize, seed: u64) -> Result<(Scene, CovariancePair)> {
    let scene = generate_scene(config, seed)?;
    let signals = synthesize(&scene, config)?;
    let pair = make_pair(&signals, k)?;
    Ok((scene, pair))
}
