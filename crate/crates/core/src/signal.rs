//! Stochastic signal models and block generators.
//!
//! All generators are deterministic in `(model, dimensions, seed)`. Blocks
//! are independent realizations: block `k` draws from its own random stream
//! and, for filtered processes, runs its own warm-up.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Purpose};

/// MA(3) system driven by skewed noise in the C3CS experiments.
pub const SKEWED_MA3: [f64; 4] = [1.0, 0.9, 0.385, -0.771];
/// MA(5) coloring filter for the C3CS noise experiments.
pub const NOISE_MA5: [f64; 6] = [1.0, -2.33, 0.75, 0.5, -1.3, -1.4];
/// AR part of the ARMA coloring filter used with harmonics (pole near w = 0.4).
pub const NOISE_ARMA_AR: [f64; 3] = [1.0, 1.4563, 0.81];
/// MA part of the ARMA coloring filter used with harmonics.
pub const NOISE_ARMA_MA: [f64; 3] = [1.0, 2.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Driver {
    /// Rate-1 exponential minus its mean: variance 1, third central moment 2.
    CenteredExponential,
    Gaussian,
}

impl Driver {
    pub fn variance(self) -> f64 {
        1.0
    }

    /// Third central moment of one driver sample.
    pub fn skewness(self) -> f64 {
        self.cumulant(3)
    }

    /// Cumulant of one driver sample; the exponential has `(q - 1)!`.
    pub fn cumulant(self, order: usize) -> f64 {
        match (self, order) {
            (_, 0) => 0.0,
            (_, 1) => 0.0,
            (_, 2) => 1.0,
            (Driver::Gaussian, _) => 0.0,
            (Driver::CenteredExponential, q) => (1..q).map(|i| i as f64).product(),
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Driver::CenteredExponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            Driver::Gaussian => StandardNormal.sample(rng),
        }
    }
}

/// Moving-average process `x(n) = sum_i h(i) w(n - i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaModel {
    pub coefficients: Vec<f64>,
    pub driver: Driver,
}

impl MaModel {
    pub fn new(coefficients: Vec<f64>, driver: Driver) -> Result<Self> {
        let model = Self {
            coefficients,
            driver,
        };
        model.validate()?;
        Ok(model)
    }

    /// The skewed MA(3) process of the C3CS experiments.
    pub fn skewed_ma3() -> Self {
        Self {
            coefficients: SKEWED_MA3.to_vec(),
            driver: Driver::CenteredExponential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.coefficients.first() {
            None => Err(invalid("MA model needs at least one coefficient")),
            Some(0.0) => Err(invalid("leading MA coefficient must be nonzero")),
            _ if !self.coefficients.iter().all(|c| c.is_finite()) => {
                Err(Error::NonFinite("MA coefficients"))
            }
            _ => Ok(()),
        }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn driver_skewness(&self) -> f64 {
        self.driver.skewness()
    }

    /// Diagonal slice `cum(x(n), x(n + lag), ..., x(n + lag))` of order `q`:
    /// `kappa_q sum_i h(i) h(i + lag)^(q - 1)`.
    pub fn slice_cumulant(&self, q: usize, lag: i64) -> f64 {
        let h = &self.coefficients;
        let at = |i: i64| if (0..h.len() as i64).contains(&i) { h[i as usize] } else { 0.0 };
        let sum: f64 = (0..h.len() as i64).map(|i| at(i) * at(i + lag).powi(q as i32 - 1)).sum();
        self.driver.cumulant(q) * sum
    }

    /// Output variance.
    pub fn power(&self) -> f64 {
        self.driver.variance() * self.coefficients.iter().map(|h| h * h).sum::<f64>()
    }
}

/// Sum of real sinusoids with independent uniform phases per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicModel {
    /// Cycles per sample, strictly increasing in (0, 0.5).
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl HarmonicModel {
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        let model = Self {
            frequencies,
            amplitudes,
        };
        model.validate()?;
        Ok(model)
    }

    /// Unit-amplitude harmonics at w = 0.1 and w = 0.2.
    pub fn two_tone() -> Self {
        Self {
            frequencies: vec![0.1, 0.2],
            amplitudes: vec![1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() != self.amplitudes.len() {
            return Err(invalid("harmonic model needs one amplitude per frequency"));
        }
        if !self.frequencies.iter().all(|&w| w > 0.0 && w < 0.5) {
            return Err(invalid("harmonic frequencies must lie in (0, 0.5)"));
        }
        if !self.frequencies.windows(2).all(|p| p[0] < p[1]) {
            return Err(invalid("harmonic frequencies must be strictly increasing"));
        }
        if !self.amplitudes.iter().all(|&a| a.is_finite() && a > 0.0) {
            return Err(invalid("harmonic amplitudes must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.amplitudes.iter().map(|a| 0.5 * a * a).sum()
    }

    /// Autocovariance `c2(tau) = sum a^2/2 cos(2 pi w tau)`.
    pub fn covariance(&self, lag: i64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, a)| 0.5 * a * a * (2.0 * PI * w * lag as f64).cos())
            .sum()
    }

    /// Diagonal fourth-order cumulant slice `c4(tau, tau, tau)`.
    pub fn fourth_order_slice(&self, lag: i64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, a)| -0.375 * a.powi(4) * (2.0 * PI * w * lag as f64).cos())
            .sum()
    }
}

/// Gaussian noise shaped by a rational filter `B(z) / A(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoredNoiseModel {
    pub ma_coefficients: Vec<f64>,
    /// `[1, a1, ..., ap]` for `A(z) = 1 + a1 z^-1 + ... + ap z^-p`; empty or
    /// `[1]` for a pure MA filter.
    pub ar_coefficients: Vec<f64>,
    pub target_snr_db: f64,
}

impl ColoredNoiseModel {
    pub fn new(ma_coefficients: Vec<f64>, ar_coefficients: Vec<f64>, target_snr_db: f64) -> Result<Self> {
        let model = Self {
            ma_coefficients,
            ar_coefficients,
            target_snr_db,
        };
        model.validate()?;
        Ok(model)
    }

    /// The MA(5) coloring used with the skewed MA(3) signal.
    pub fn ma5(target_snr_db: f64) -> Self {
        Self {
            ma_coefficients: NOISE_MA5.to_vec(),
            ar_coefficients: vec![1.0],
            target_snr_db,
        }
    }

    /// The ARMA(2,2) coloring with a strong pole near w = 0.4.
    pub fn arma_pole_04(target_snr_db: f64) -> Self {
        Self {
            ma_coefficients: NOISE_ARMA_MA.to_vec(),
            ar_coefficients: NOISE_ARMA_AR.to_vec(),
            target_snr_db,
        }
    }

    /// White noise (identity filter).
    pub fn white(target_snr_db: f64) -> Self {
        Self {
            ma_coefficients: vec![1.0],
            ar_coefficients: vec![1.0],
            target_snr_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ma_coefficients.is_empty() {
            return Err(invalid("noise filter needs at least one MA coefficient"));
        }
        if !self
            .ma_coefficients
            .iter()
            .chain(&self.ar_coefficients)
            .all(|c| c.is_finite())
            || !self.target_snr_db.is_finite()
        {
            return Err(Error::NonFinite("noise model"));
        }
        if let Some(&a0) = self.ar_coefficients.first() {
            if a0 != 1.0 {
                return Err(invalid("leading AR coefficient must be 1"));
            }
        }
        if !self.is_stable() {
            return Err(Error::UnstableModel);
        }
        Ok(())
    }

    fn ar_tail(&self) -> &[f64] {
        self.ar_coefficients.get(1..).unwrap_or(&[])
    }

    /// Schur-Cohn step-down test: all roots of `A(z)` strictly inside the
    /// unit circle.
    pub fn is_stable(&self) -> bool {
        let mut a: Vec<f64> = self.ar_tail().to_vec();
        while let Some(&k) = a.last() {
            if k.abs() >= 1.0 {
                return false;
            }
            let m = a.len();
            let denom = 1.0 - k * k;
            let prev: Vec<f64> = (0..m - 1)
                .map(|i| (a[i] - k * a[m - 2 - i]) / denom)
                .collect();
            a = prev;
        }
        true
    }

    pub fn memory(&self) -> usize {
        self.ma_coefficients
            .len()
            .max(self.ar_coefficients.len())
            .saturating_sub(1)
            .max(1)
    }

    /// Impulse response truncated once its tail energy is negligible.
    pub fn impulse_response(&self) -> Vec<f64> {
        const CAP: usize = 1 << 16;
        let mut filter = Filter::new(self);
        let mut g = Vec::new();
        let mut energy = 0.0;
        for n in 0..CAP {
            let v = filter.step(if n == 0 { 1.0 } else { 0.0 });
            energy += v * v;
            g.push(v);
            let min_len = 10 * (self.memory() + 1);
            if n >= min_len && n >= 64 {
                let tail: f64 = g[n - 63..=n].iter().map(|x| x * x).sum();
                if tail <= 1e-18 * energy {
                    break;
                }
            }
        }
        g
    }

    /// Output variance for a unit-variance white driver.
    pub fn power_gain(&self) -> f64 {
        self.impulse_response().iter().map(|g| g * g).sum()
    }

    /// Output autocorrelation at `lag` for a unit-variance white driver.
    pub fn autocorrelation(&self, lag: i64) -> f64 {
        let g = self.impulse_response();
        let lag = lag.unsigned_abs() as usize;
        g.iter().zip(g.iter().skip(lag)).map(|(a, b)| a * b).sum()
    }

    /// Power spectral density `|B|^2 / |A|^2` at `w` cycles per sample.
    pub fn power_spectrum(&self, w: f64) -> f64 {
        let eval = |c: &[f64]| {
            let (re, im) = c.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &c)| {
                let angle = -2.0 * PI * w * n as f64;
                (re + c * angle.cos(), im + c * angle.sin())
            });
            re * re + im * im
        };
        let den = if self.ar_coefficients.is_empty() {
            1.0
        } else {
            eval(&self.ar_coefficients)
        };
        eval(&self.ma_coefficients) / den
    }

    /// Warm-up discarded before each noise realization.
    pub fn warmup(&self) -> usize {
        (10 * self.memory()).max(self.impulse_response().len())
    }
}

/// Direct-form IIR filter state.
struct Filter<'a> {
    b: &'a [f64],
    a: &'a [f64],
    x_hist: Vec<f64>,
    y_hist: Vec<f64>,
}

impl<'a> Filter<'a> {
    fn new(model: &'a ColoredNoiseModel) -> Self {
        Self {
            b: &model.ma_coefficients,
            a: model.ar_tail(),
            x_hist: vec![0.0; model.ma_coefficients.len()],
            y_hist: vec![0.0; model.ar_tail().len()],
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        self.x_hist.rotate_right(1);
        self.x_hist[0] = x;
        let mut y: f64 = self.b.iter().zip(&self.x_hist).map(|(b, x)| b * x).sum();
        y -= self.a.iter().zip(&self.y_hist).map(|(a, y)| a * y).sum::<f64>();
        if !self.y_hist.is_empty() {
            self.y_hist.rotate_right(1);
            self.y_hist[0] = y;
        }
        y
    }
}

/// Prepared noise source: filter plus warm-up length, computed once.
struct NoiseSource<'a> {
    model: &'a ColoredNoiseModel,
    warmup: usize,
}

impl<'a> NoiseSource<'a> {
    fn new(model: &'a ColoredNoiseModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            warmup: model.warmup(),
        })
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let mut filter = Filter::new(self.model);
        for _ in 0..self.warmup {
            filter.step(StandardNormal.sample(rng));
        }
        for v in out.iter_mut() {
            *v = filter.step(StandardNormal.sample(rng));
        }
    }
}

/// `K` blocks of length `N`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStream {
    block_length: usize,
    data: Vec<f64>,
}

impl BlockStream {
    pub fn new(block_length: usize, data: Vec<f64>) -> Result<Self> {
        if block_length == 0 {
            return Err(invalid("block length must be positive"));
        }
        if data.is_empty() {
            return Err(Error::EmptyStream);
        }
        if data.len() % block_length != 0 {
            return Err(invalid("stream length is not a multiple of the block length"));
        }
        Ok(Self { block_length, data })
    }

    pub fn from_blocks<B: AsRef<[f64]>>(blocks: &[B]) -> Result<Self> {
        let n = blocks.first().ok_or(Error::EmptyStream)?.as_ref().len();
        let mut data = Vec::with_capacity(n * blocks.len());
        for b in blocks {
            crate::error::check_len("block", n, b.as_ref().len())?;
            data.extend_from_slice(b.as_ref());
        }
        Self::new(n, data)
    }

    /// Splits a contiguous series into consecutive blocks, dropping any
    /// incomplete tail.
    pub fn from_series(series: &[f64], block_length: usize) -> Result<Self> {
        if block_length == 0 {
            return Err(invalid("block length must be positive"));
        }
        let usable = series.len() / block_length * block_length;
        Self::new(block_length, series[..usable].to_vec())
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn block_count(&self) -> usize {
        self.data.len() / self.block_length
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.data[k * self.block_length..(k + 1) * self.block_length]
    }

    pub fn blocks(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.block_length)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Keeps the first `k` blocks.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.block_count() {
            return Err(invalid("truncation must keep between 1 and K blocks"));
        }
        Self::new(self.block_length, self.data[..k * self.block_length].to_vec())
    }

    /// Elementwise `self + scale * other`.
    pub fn add_scaled(&self, other: &BlockStream, scale: f64) -> Result<Self> {
        crate::error::check_len("stream length", self.data.len(), other.data.len())?;
        crate::error::check_len("block length", self.block_length, other.block_length)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        Self::new(self.block_length, data)
    }
}

fn check_dims(n: usize, k: usize, min_n: usize) -> Result<()> {
    if n < min_n {
        return Err(invalid("block length too short for the model"));
    }
    if k == 0 {
        return Err(invalid("block count must be at least 1"));
    }
    Ok(())
}

fn ma_window(model: &MaModel, rng: &mut ChaCha8Rng, out: &mut [f64], driver: &mut Vec<f64>) {
    let q = model.order();
    driver.clear();
    driver.extend((0..out.len() + q).map(|_| model.driver.sample(rng)));
    for (t, x) in out.iter_mut().enumerate() {
        *x = model
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, h)| h * driver[t + q - i])
            .sum();
    }
}

/// `K` independent length-`N` windows of a stationary MA process.
pub fn generate_ma_blocks(model: &MaModel, n: usize, k: usize, seed: u64) -> Result<BlockStream> {
    model.validate()?;
    check_dims(n, k, model.order() + 1)?;
    let mut data = vec![0.0; n * k];
    let mut driver = Vec::with_capacity(n + model.order());
    for (idx, block) in data.chunks_exact_mut(n).enumerate() {
        let mut rng = rng::stream(seed, Purpose::Driver, idx as u64);
        ma_window(model, &mut rng, block, &mut driver);
    }
    BlockStream::new(n, data)
}

/// One contiguous stationary MA series of the given length.
pub fn generate_ma_series(model: &MaModel, length: usize, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if length == 0 {
        return Err(invalid("series length must be positive"));
    }
    let mut out = vec![0.0; length];
    let mut rng = rng::stream(seed, Purpose::Series, 0);
    ma_window(model, &mut rng, &mut out, &mut Vec::new());
    Ok(out)
}

/// Filtered white Gaussian noise with the transient discarded.
pub fn colored_gaussian(model: &ColoredNoiseModel, length: usize, seed: u64) -> Result<Vec<f64>> {
    let source = NoiseSource::new(model)?;
    let mut out = vec![0.0; length];
    source.fill(&mut rng::stream(seed, Purpose::Noise, 0), &mut out);
    Ok(out)
}

/// Independent colored-noise blocks, unscaled (unit-variance driver).
pub fn colored_noise_blocks(model: &ColoredNoiseModel, n: usize, k: usize, seed: u64) -> Result<BlockStream> {
    check_dims(n, k, 1)?;
    let source = NoiseSource::new(model)?;
    let mut data = vec![0.0; n * k];
    for (idx, block) in data.chunks_exact_mut(n).enumerate() {
        source.fill(&mut rng::stream(seed, Purpose::Noise, idx as u64), block);
    }
    BlockStream::new(n, data)
}

/// Noise amplitude that puts `signal_power / noise_power` at the model's
/// target SNR. A silent signal leaves the noise at unit driver variance.
pub fn noise_scale(model: &ColoredNoiseModel, signal_power: f64) -> f64 {
    if signal_power <= 0.0 {
        return 1.0;
    }
    let target = 10f64.powf(model.target_snr_db / 10.0);
    (signal_power / (model.power_gain() * target)).sqrt()
}

/// Adds independent colored Gaussian noise blocks at the model's SNR.
pub fn add_colored_noise(
    stream: &BlockStream,
    model: &ColoredNoiseModel,
    signal_power: f64,
    seed: u64,
) -> Result<BlockStream> {
    let noise = colored_noise_blocks(model, stream.block_length(), stream.block_count(), seed)?;
    stream.add_scaled(&noise, noise_scale(model, signal_power))
}

/// `K` blocks of harmonics with fresh phases per block, optionally plus
/// colored noise at the noise model's target SNR.
pub fn generate_harmonic_blocks(
    model: &HarmonicModel,
    noise: Option<&ColoredNoiseModel>,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<BlockStream> {
    model.validate()?;
    check_dims(n, k, 2)?;
    let mut data = vec![0.0; n * k];
    for (idx, block) in data.chunks_exact_mut(n).enumerate() {
        let mut rng = rng::stream(seed, Purpose::Phase, idx as u64);
        for (w, a) in model.frequencies.iter().zip(&model.amplitudes) {
            let phase = rng.random_range(-PI..PI);
            for (t, x) in block.iter_mut().enumerate() {
                *x += a * (2.0 * PI * w * t as f64 + phase).cos();
            }
        }
    }
    let clean = BlockStream::new(n, data)?;
    match noise {
        Some(noise) => add_colored_noise(&clean, noise, model.power(), seed),
        None => Ok(clean),
    }
}
