//! Third-order cumulant containers, estimators and the analytic MA oracle.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_len, invalid, Error, Result};
use crate::mapping::SymmetricTripleIndex;
use crate::signal::{BlockStream, MaModel};

/// Vectorized third-order moment tensor of dimension `dim`.
///
/// Entry `(i1, i2, i3)` (zero-based) lives at `i1 * dim^2 + i2 * dim + i3`,
/// which is the one-based rule `(i1-1) d^2 + (i2-1) d + i3` shifted by one.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector {
    dim: usize,
    values: Vec<f64>,
}

impl CumulantVector {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        check_len("cumulant vector", dim * dim * dim, values.len())?;
        Ok(Self { dim, values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Zero-based tensor access.
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        let d = self.dim;
        self.values[(i1 * d + i2) * d + i3]
    }

    /// Largest deviation between an entry and any permutation of its index.
    pub fn permutation_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for l in 0..d {
                    let v = self.get(i, j, l);
                    for w in [
                        self.get(i, l, j),
                        self.get(j, i, l),
                        self.get(j, l, i),
                        self.get(l, i, j),
                        self.get(l, j, i),
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `c3(tau1, tau2)` of a stationary process over the hexagonal support of a
/// length-`n` block: `|tau1|, |tau2|, |tau1 - tau2| <= n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryCumulant {
    n: usize,
    // dense (2n-1)^2 grid; entries outside the hexagon stay zero
    grid: Vec<f64>,
}

impl StationaryCumulant {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "block length must be positive");
        let side = 2 * n - 1;
        Self {
            n,
            grid: vec![0.0; side * side],
        }
    }

    /// Fills every lag of the hexagon from `f`.
    pub fn from_fn(n: usize, mut f: impl FnMut(i64, i64) -> f64) -> Self {
        let mut c = Self::zeros(n);
        let m = c.max_lag();
        for t1 in -m..=m {
            for t2 in -m..=m {
                if c.in_support(t1, t2) {
                    let idx = c.offset(t1, t2);
                    c.grid[idx] = f(t1, t2);
                }
            }
        }
        c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_lag(&self) -> i64 {
        self.n as i64 - 1
    }

    pub fn in_support(&self, t1: i64, t2: i64) -> bool {
        let m = self.max_lag();
        t1.abs() <= m && t2.abs() <= m && (t1 - t2).abs() <= m
    }

    fn offset(&self, t1: i64, t2: i64) -> usize {
        let m = self.max_lag();
        let side = 2 * self.n - 1;
        (t1 + m) as usize * side + (t2 + m) as usize
    }

    /// Value at a lag pair; zero outside the support.
    pub fn get(&self, t1: i64, t2: i64) -> f64 {
        if self.in_support(t1, t2) {
            self.grid[self.offset(t1, t2)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, t1: i64, t2: i64, value: f64) -> Result<()> {
        if !self.in_support(t1, t2) {
            return Err(invalid("lag pair outside the hexagonal support"));
        }
        let idx = self.offset(t1, t2);
        self.grid[idx] = value;
        Ok(())
    }

    /// Lag pairs of the support with their values, lexicographic in
    /// `(tau1, tau2)`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let m = self.max_lag();
        (-m..=m)
            .flat_map(move |t1| (-m..=m).map(move |t2| (t1, t2)))
            .filter(move |&(t1, t2)| self.in_support(t1, t2))
            .map(move |(t1, t2)| (t1, t2, self.get(t1, t2)))
    }

    /// The six lag pairs that share a value under cumulant symmetry.
    pub fn symmetry_images(t1: i64, t2: i64) -> [(i64, i64); 6] {
        [
            (t1, t2),
            (t2, t1),
            (-t2, t1 - t2),
            (-t1, t2 - t1),
            (t2 - t1, -t1),
            (t1 - t2, -t2),
        ]
    }

    /// Replaces every value by the mean over its six symmetry images.
    pub fn symmetrize(&mut self) {
        let source = self.clone();
        let m = self.max_lag();
        for t1 in -m..=m {
            for t2 in -m..=m {
                if self.in_support(t1, t2) {
                    let mean = Self::symmetry_images(t1, t2)
                        .iter()
                        .map(|&(a, b)| source.get(a, b))
                        .sum::<f64>()
                        / 6.0;
                    let idx = self.offset(t1, t2);
                    self.grid[idx] = mean;
                }
            }
        }
    }

    /// Largest difference between a value and one of its symmetry images.
    pub fn symmetry_defect(&self) -> f64 {
        self.iter()
            .flat_map(|(t1, t2, v)| {
                Self::symmetry_images(t1, t2)
                    .into_iter()
                    .map(move |(a, b)| (v - self.get(a, b)).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Block tensor `E{x[k] o x[k] o x[k]}` implied by the cumulant.
    pub fn to_cumulant_vector(&self) -> CumulantVector {
        let n = self.n;
        let mut values = Vec::with_capacity(n * n * n);
        for i in 0..n as i64 {
            for j in 0..n as i64 {
                for l in 0..n as i64 {
                    values.push(self.get(j - i, l - i));
                }
            }
        }
        CumulantVector { dim: n, values }
    }
}

/// Whether estimators remove the sample mean first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanPolicy {
    Keep,
    Subtract,
    /// Subtract only when some mean is more than five standard errors from
    /// zero.
    #[default]
    Auto,
}

fn significant(mean: f64, mean_square: f64, count: usize) -> bool {
    if count < 2 {
        return false;
    }
    let var = (mean_square - mean * mean).max(0.0) * count as f64 / (count - 1) as f64;
    mean.abs() > 5.0 * (var / count as f64).sqrt()
}

/// Per-coordinate block means, or zeros when the policy keeps the data.
fn coordinate_means(stream: &BlockStream, policy: MeanPolicy) -> Vec<f64> {
    let d = stream.block_length();
    let k = stream.block_count();
    let mut mean = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for b in stream.blocks() {
        for i in 0..d {
            mean[i] += b[i];
            sq[i] += b[i] * b[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    sq.iter_mut().for_each(|s| *s /= k as f64);
    let apply = match policy {
        MeanPolicy::Keep => false,
        MeanPolicy::Subtract => true,
        MeanPolicy::Auto => mean.iter().zip(&sq).any(|(&m, &s)| significant(m, s, k)),
    };
    if apply {
        mean
    } else {
        vec![0.0; d]
    }
}

/// Symmetric third moments `(1/K) sum_k y_i y_j y_l` for `i <= j <= l`,
/// ordered as in [`SymmetricTripleIndex`].
pub fn third_moment_unique(stream: &BlockStream, policy: MeanPolicy) -> Vec<f64> {
    let d = stream.block_length();
    let means = coordinate_means(stream, policy);
    let index = SymmetricTripleIndex::new(d);
    let mut acc = vec![0.0; index.len()];
    let mut centered = vec![0.0; d];
    for b in stream.blocks() {
        for ((c, &x), &m) in centered.iter_mut().zip(b).zip(&means) {
            *c = x - m;
        }
        let mut t = 0;
        for i in 0..d {
            for j in i..d {
                let p = centered[i] * centered[j];
                for &yl in &centered[j..] {
                    acc[t] += p * yl;
                    t += 1;
                }
            }
        }
    }
    let k = stream.block_count() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    acc
}

/// `(1/K) sum_k vec(y[k] o y[k] o y[k])`, exactly permutation-symmetric.
pub fn empirical_third_moment_vector(stream: &BlockStream) -> Result<CumulantVector> {
    empirical_third_moment_vector_with(stream, MeanPolicy::default())
}

pub fn empirical_third_moment_vector_with(stream: &BlockStream, policy: MeanPolicy) -> Result<CumulantVector> {
    let unique = third_moment_unique(stream, policy);
    let index = SymmetricTripleIndex::new(stream.block_length());
    Ok(CumulantVector {
        dim: stream.block_length(),
        values: index.expand(&unique),
    })
}

/// `c3(tau1, tau2) = gamma3 * sum_n h(n) h(n + tau1) h(n + tau2)`.
pub fn analytic_ma_cumulant(model: &MaModel, n: usize) -> StationaryCumulant {
    let h = &model.coefficients;
    let gamma = model.driver_skewness();
    let tap = |i: i64| -> f64 {
        if i >= 0 && (i as usize) < h.len() {
            h[i as usize]
        } else {
            0.0
        }
    };
    StationaryCumulant::from_fn(n, |t1, t2| {
        gamma
            * (0..h.len() as i64)
                .map(|i| tap(i) * tap(i + t1) * tap(i + t2))
                .sum::<f64>()
    })
}

/// Lag-averaged third-order cumulant of Nyquist-grid blocks.
///
/// Each lag pair averages `x[n] x[n+tau1] x[n+tau2]` over every `n` that keeps
/// all three indices inside the block (unbiased divisor), then over blocks;
/// the result is symmetrized over the six images.
pub fn empirical_stationary_cumulant(stream: &BlockStream) -> Result<StationaryCumulant> {
    empirical_stationary_cumulant_with(stream, MeanPolicy::default())
}

pub fn empirical_stationary_cumulant_with(stream: &BlockStream, policy: MeanPolicy) -> Result<StationaryCumulant> {
    let n = stream.block_length();
    let samples = stream.as_slice();
    let total = samples.len();
    let grand = samples.iter().sum::<f64>() / total as f64;
    let grand_sq = samples.iter().map(|x| x * x).sum::<f64>() / total as f64;
    let mean = match policy {
        MeanPolicy::Keep => 0.0,
        MeanPolicy::Subtract => grand,
        MeanPolicy::Auto if significant(grand, grand_sq, total) => grand,
        MeanPolicy::Auto => 0.0,
    };
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let mut c = StationaryCumulant::zeros(n);
    let m = c.max_lag();
    let blocks = stream.block_count() as f64;
    for t1 in -m..=m {
        for t2 in -m..=m {
            if !c.in_support(t1, t2) {
                continue;
            }
            let lo = 0.max(-t1).max(-t2);
            let hi = (n as i64 - 1).min(n as i64 - 1 - t1).min(n as i64 - 1 - t2);
            let count = (hi - lo + 1) as f64;
            let mut acc = 0.0;
            for block in centered.chunks_exact(n) {
                for s in lo..=hi {
                    acc += block[s as usize] * block[(s + t1) as usize] * block[(s + t2) as usize];
                }
            }
            c.set(t1, t2, acc / (count * blocks))?;
        }
    }
    c.symmetrize();
    Ok(c)
}

/// Normalized squared error `||estimate - truth||^2 / ||truth||^2`.
pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    check_len("mse operands", truth.len(), estimate.len())?;
    let denom: f64 = truth.iter().map(|t| t * t).sum();
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let num: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(num / denom)
}
