//! Compressive samplers: dense Gaussian `Phi` and sparse-ruler row selection.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::rng::{stream, Purpose};
use crate::signal::BlockStream;

/// Largest block length for which [`solve_minimal_ruler`] searches exactly.
pub const EXACT_RULER_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Gaussian,
    Ruler,
}

/// An `M x N` compression operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMatrix {
    kind: SamplerKind,
    matrix: DMatrix<f64>,
    marks: Option<Vec<usize>>,
}

impl SamplingMatrix {
    /// Wraps an arbitrary dense operator (treated as Gaussian-kind).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() > matrix.ncols() {
            return Err(invalid("sampler needs 1 <= M <= N"));
        }
        if !matrix.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("sampling matrix"));
        }
        Ok(Self {
            kind: SamplerKind::Gaussian,
            matrix,
            marks: None,
        })
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Ruler marks selected by the rows (ruler kind only).
    pub fn marks(&self) -> Option<&[usize]> {
        self.marks.as_deref()
    }

    pub fn ratio(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    /// `Phi x` for one block.
    pub fn apply(&self, block: &[f64]) -> Result<Vec<f64>> {
        check_len("sampler input block", self.n(), block.len())?;
        if let Some(marks) = &self.marks {
            return Ok(marks.iter().map(|&m| block[m]).collect());
        }
        let y = &self.matrix * DVector::from_column_slice(block);
        Ok(y.iter().copied().collect())
    }
}

/// Dense `M x N` sampler with i.i.d. standard normal entries.
///
/// Entries are drawn row-major from one stream, so the sampler for `M` is
/// the first `M` rows of the sampler for any larger `M` with the same seed.
pub fn gaussian_sampler(m: usize, n: usize, seed: u64) -> Result<SamplingMatrix> {
    if m == 0 || m > n {
        return Err(invalid("Gaussian sampler needs 1 <= M <= N"));
    }
    let mut rng = stream(seed, Purpose::Sampler, 0);
    let data: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(SamplingMatrix {
        kind: SamplerKind::Gaussian,
        matrix: DMatrix::from_row_slice(m, n, &data),
        marks: None,
    })
}

/// Mark set whose pairwise differences cover `0..length`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseRuler {
    length: usize,
    marks: Vec<usize>,
    minimal: bool,
}

impl SparseRuler {
    /// Validates coverage. The result is not claimed minimal.
    pub fn new(length: usize, marks: Vec<usize>) -> Result<Self> {
        let mut marks = marks;
        marks.sort_unstable();
        marks.dedup();
        if length < 2 {
            return Err(invalid("ruler length must be at least 2"));
        }
        if marks.first() != Some(&0) || marks.last() != Some(&(length - 1)) {
            return Err(invalid("ruler must contain 0 and N-1"));
        }
        if let Some(gap) = first_uncovered(length, &marks) {
            return Err(Error::RulerCoverage(gap as i64));
        }
        Ok(Self {
            length,
            marks,
            minimal: false,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// True when produced by the exact search.
    pub fn is_minimal(&self) -> bool {
        self.minimal
    }

    /// Sorted signed differences `m_j - m_i`.
    pub fn difference_set(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self
            .marks
            .iter()
            .flat_map(|&a| self.marks.iter().map(move |&b| b as i64 - a as i64))
            .collect();
        set.into_iter().collect()
    }

    /// Number of ordered pairs with difference `tau`.
    pub fn pair_count(&self, tau: i64) -> usize {
        self.marks
            .iter()
            .flat_map(|&a| self.marks.iter().map(move |&b| b as i64 - a as i64))
            .filter(|&d| d == tau)
            .count()
    }
}

fn first_uncovered(length: usize, marks: &[usize]) -> Option<usize> {
    let mut covered = alloc::vec![false; length];
    for &a in marks {
        for &b in marks {
            if b >= a && b - a < length {
                covered[b - a] = true;
            }
        }
    }
    covered.iter().position(|&c| !c)
}

/// Minimum-cardinality sparse ruler for `n` samples.
///
/// Exact for `n <= EXACT_RULER_LIMIT`; beyond it a nested-array construction
/// is returned with `is_minimal() == false`.
pub fn solve_minimal_ruler(n: usize) -> Result<SparseRuler> {
    solve_minimal_ruler_with_limit(n, EXACT_RULER_LIMIT)
}

pub fn solve_minimal_ruler_with_limit(n: usize, limit: usize) -> Result<SparseRuler> {
    if n < 2 {
        return Err(invalid("ruler length must be at least 2"));
    }
    if n > limit.min(64) {
        return nested_ruler(n);
    }
    let marks = RulerSearch::new(n).run();
    Ok(SparseRuler {
        length: n,
        marks,
        minimal: true,
    })
}

/// `{0..a-1} ∪ {a-1 + j a} ∪ {N-1}` with `a ≈ sqrt(N)`.
pub fn nested_ruler(n: usize) -> Result<SparseRuler> {
    if n < 2 {
        return Err(invalid("ruler length must be at least 2"));
    }
    let a = (1..=n).find(|a| a * a >= n).unwrap_or(1);
    let mut marks: Vec<usize> = (0..a.min(n)).collect();
    let mut m = 2 * a - 1;
    while m < n {
        marks.push(m);
        m += a;
    }
    marks.push(n - 1);
    SparseRuler::new(n, marks)
}

struct RulerSearch {
    n: usize,
    full: u64,
    failed: BTreeSet<u64>,
}

impl RulerSearch {
    fn new(n: usize) -> Self {
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self {
            n,
            full,
            failed: BTreeSet::new(),
        }
    }

    fn run(&mut self) -> Vec<usize> {
        let l = (self.n - 1) as f64;
        // k(k-1)/2 >= N-1 is necessary
        let mut k = num_traits::Float::ceil((1.0 + num_traits::Float::sqrt(1.0 + 8.0 * l)) / 2.0) as usize;
        k = k.max(2);
        let start = 1u64 | (1u64 << (self.n - 1));
        loop {
            self.failed.clear();
            if let Some(mask) = self.search(start, k - 2) {
                return (0..self.n).filter(|&i| mask >> i & 1 == 1).collect();
            }
            k += 1;
        }
    }

    fn differences(&self, marks: u64) -> u64 {
        let mut diff = 0u64;
        let mut rest = marks;
        while rest != 0 {
            let a = rest.trailing_zeros();
            diff |= marks >> a;
            rest &= rest - 1;
        }
        diff & self.full
    }

    fn reflect(&self, marks: u64) -> u64 {
        marks.reverse_bits() >> (64 - self.n)
    }

    fn search(&mut self, marks: u64, remaining: usize) -> Option<u64> {
        let missing = !self.differences(marks) & self.full;
        if missing == 0 {
            return Some(marks);
        }
        if remaining == 0 {
            return None;
        }
        let c = marks.count_ones() as usize;
        let r = remaining;
        if missing.count_ones() as usize > c * r + r * (r - 1) / 2 {
            return None;
        }
        let key = marks.min(self.reflect(marks));
        if self.failed.contains(&key) {
            return None;
        }
        let d = 63 - missing.leading_zeros() as usize;
        for a in 0..self.n - d {
            let add = (1u64 << a) | (1u64 << (a + d));
            let new = add & !marks;
            let cost = new.count_ones() as usize;
            if cost == 0 || cost > remaining {
                continue;
            }
            if let Some(found) = self.search(marks | add, remaining - cost) {
                return Some(found);
            }
        }
        self.failed.insert(key);
        None
    }
}

/// Binary row-selection sampler with rows at the ruler marks.
pub fn ruler_sampler(ruler: &SparseRuler) -> SamplingMatrix {
    marks_sampler(ruler.length(), ruler.marks())
}

fn marks_sampler(n: usize, marks: &[usize]) -> SamplingMatrix {
    let mut matrix = DMatrix::zeros(marks.len(), n);
    for (i, &m) in marks.iter().enumerate() {
        matrix[(i, m)] = 1.0;
    }
    SamplingMatrix {
        kind: SamplerKind::Ruler,
        matrix,
        marks: Some(marks.to_vec()),
    }
}

/// Grows a ruler to `m` marks by sampling unused positions uniformly.
pub fn extend_ruler(ruler: &SparseRuler, m: usize, seed: u64) -> Result<SparseRuler> {
    let n = ruler.length();
    if m < ruler.len() || m > n {
        return Err(invalid("extended ruler size must lie between |ruler| and N"));
    }
    let mut unused: Vec<usize> = (0..n).filter(|i| !ruler.marks().contains(i)).collect();
    let mut rng = stream(seed, Purpose::RulerExtension, m as u64);
    unused.shuffle(&mut rng);
    let mut marks = ruler.marks().to_vec();
    marks.extend_from_slice(&unused[..m - ruler.len()]);
    let mut out = SparseRuler::new(n, marks)?;
    out.minimal = ruler.minimal && m == ruler.len();
    Ok(out)
}

/// `y[k] = Phi x[k]` for every block.
pub fn compress(phi: &SamplingMatrix, stream: &BlockStream) -> Result<BlockStream> {
    check_len("sampler columns vs block length", phi.n(), stream.block_length())?;
    let mut out = Vec::with_capacity(phi.m() * stream.block_count());
    if let Some(marks) = phi.marks() {
        for block in stream.blocks() {
            out.extend(marks.iter().map(|&m| block[m]));
        }
    } else {
        let x = DMatrix::from_column_slice(stream.block_length(), stream.block_count(), stream.as_slice());
        let y = phi.matrix() * x;
        out.extend_from_slice(y.as_slice());
    }
    BlockStream::new(phi.m(), out)
}
