//! Diagonal cumulant slices `c_q(tau, ..., tau)` from sparse-ruler samples.
//!
//! Sample `i` of a compressed block is `x[kN + m_i]`, so every ordered mark
//! pair `(m_i, m_j)` with `m_j - m_i = tau` yields one product
//! `y_i y_j^(q-1)` whose expectation is the lag-`tau` slice moment.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cumulant::StationaryCumulant;
use crate::error::{check_len, Error, Result};
use crate::sampler::SparseRuler;
use crate::signal::{BlockStream, HarmonicModel};

/// One-dimensional slice over lags `1-N..=N-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantSlice {
    q: usize,
    n: usize,
    values: Vec<f64>,
    /// Ordered mark pairs averaged per lag; all zero for analytic slices.
    pair_counts: Vec<usize>,
}

impl CumulantSlice {
    pub fn new(q: usize, n: usize, values: Vec<f64>, pair_counts: Vec<usize>) -> Result<Self> {
        if !(2..=4).contains(&q) {
            return Err(Error::UnsupportedOrder(q));
        }
        check_len("slice values", 2 * n - 1, values.len())?;
        check_len("slice pair counts", 2 * n - 1, pair_counts.len())?;
        Ok(Self {
            q,
            n,
            values,
            pair_counts,
        })
    }

    /// Builds an analytic slice from a lag function.
    pub fn from_fn(q: usize, n: usize, f: impl Fn(i64) -> f64) -> Result<Self> {
        let m = n as i64 - 1;
        let values = (-m..=m).map(f).collect();
        Self::new(q, n, values, vec![0; 2 * n - 1])
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_lag(&self) -> i64 {
        self.n as i64 - 1
    }

    /// Values ordered from lag `1-N` to `N-1`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pair_counts(&self) -> &[usize] {
        &self.pair_counts
    }

    pub fn get(&self, tau: i64) -> f64 {
        self.values[(tau + self.max_lag()) as usize]
    }

    pub fn pair_count(&self, tau: i64) -> usize {
        self.pair_counts[(tau + self.max_lag()) as usize]
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        -self.max_lag()..=self.max_lag()
    }

    /// Multiplies every value by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }
}

/// How the fourth-order estimator removes the Gaussian part
/// `3 E{x_i x_j} E{x_j^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourthOrderCorrection {
    /// Moments averaged over all blocks first, then combined.
    #[default]
    Pooled,
    /// Correction formed inside each block and then averaged. With a single
    /// pair at some lag it returns `-2 E{x_i x_j^3}`, a bias that does not
    /// shrink with the number of blocks.
    PerBlock,
}

/// Ordered pairs `(i, j)` with `marks[j] - marks[i] = tau`, by lag.
fn lag_pairs(ruler: &SparseRuler) -> Vec<Vec<(usize, usize)>> {
    let n = ruler.length() as i64;
    let marks = ruler.marks();
    let mut pairs = vec![Vec::new(); (2 * n - 1) as usize];
    for (i, &mi) in marks.iter().enumerate() {
        for (j, &mj) in marks.iter().enumerate() {
            let tau = mj as i64 - mi as i64;
            pairs[(tau + n - 1) as usize].push((i, j));
        }
    }
    pairs
}

fn slice_core(
    ruler: &SparseRuler,
    blocks: usize,
    q: usize,
    correction: FourthOrderCorrection,
    sample: impl Fn(usize, usize) -> f64,
) -> Result<CumulantSlice> {
    if !(2..=4).contains(&q) {
        return Err(Error::UnsupportedOrder(q));
    }
    if blocks == 0 {
        return Err(Error::EmptyStream);
    }
    let n = ruler.length();
    let pairs = lag_pairs(ruler);
    if let Some(pos) = pairs.iter().position(|p| p.is_empty()) {
        return Err(Error::RulerCoverage(pos as i64 - (n as i64 - 1)));
    }
    let kf = blocks as f64;
    let mut values = Vec::with_capacity(pairs.len());
    for lag_pairs in &pairs {
        let count = lag_pairs.len() as f64;
        let (mut main, mut a2, mut b2, mut per_block) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..blocks {
            let (mut s_main, mut s_a, mut s_b) = (0.0, 0.0, 0.0);
            for &(i, j) in lag_pairs {
                let (yi, yj) = (sample(k, i), sample(k, j));
                s_main += match q {
                    2 => yi * yj,
                    3 => yi * yj * yj,
                    _ => yi * yj * yj * yj,
                };
                if q == 4 {
                    s_a += yi * yj;
                    s_b += yj * yj;
                }
            }
            main += s_main / count;
            if q == 4 {
                a2 += s_a / count;
                b2 += s_b / count;
                per_block += (s_a / count) * (s_b / count);
            }
        }
        let value = match (q, correction) {
            (4, FourthOrderCorrection::Pooled) => main / kf - 3.0 * (a2 / kf) * (b2 / kf),
            (4, FourthOrderCorrection::PerBlock) => (main - 3.0 * per_block) / kf,
            _ => main / kf,
        };
        values.push(value);
    }
    let counts = pairs.iter().map(Vec::len).collect();
    CumulantSlice::new(q, n, values, counts)
}

/// Slice estimate from ruler-compressed blocks (`y_i[k] = x[kN + m_i]`).
pub fn estimate_slice(stream: &BlockStream, ruler: &SparseRuler, q: usize) -> Result<CumulantSlice> {
    estimate_slice_with(stream, ruler, q, FourthOrderCorrection::default())
}

pub fn estimate_slice_with(
    stream: &BlockStream,
    ruler: &SparseRuler,
    q: usize,
    correction: FourthOrderCorrection,
) -> Result<CumulantSlice> {
    check_len("compressed block length vs ruler marks", ruler.len(), stream.block_length())?;
    slice_core(ruler, stream.block_count(), q, correction, |k, i| stream.block(k)[i])
}

/// The same estimator evaluated on Nyquist-rate blocks at the ruler marks.
pub fn estimate_slice_uncompressed(
    stream: &BlockStream,
    ruler: &SparseRuler,
    q: usize,
    correction: FourthOrderCorrection,
) -> Result<CumulantSlice> {
    check_len("block length vs ruler length", ruler.length(), stream.block_length())?;
    let marks = ruler.marks();
    slice_core(ruler, stream.block_count(), q, correction, |k, i| stream.block(k)[marks[i]])
}

/// `c(tau, tau)` of a third-order cumulant.
pub fn slice_of_cumulant(c: &StationaryCumulant) -> CumulantSlice {
    CumulantSlice::from_fn(3, c.n(), |t| c.get(t, t)).expect("order 3 is supported")
}

/// Exact slice of a sum of random-phase real harmonics (zero for `q = 3`).
pub fn harmonic_slice(model: &HarmonicModel, n: usize, q: usize) -> Result<CumulantSlice> {
    match q {
        2 => CumulantSlice::from_fn(2, n, |t| model.covariance(t)),
        3 => CumulantSlice::from_fn(3, n, |_| 0.0),
        4 => CumulantSlice::from_fn(4, n, |t| model.fourth_order_slice(t)),
        _ => Err(Error::UnsupportedOrder(q)),
    }
}
