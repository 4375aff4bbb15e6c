//! Third-order cumulant reconstruction from compressive measurements.
//!
//! Two engines:
//!
//! * the alternative engine solves `c3y = Phi^(3) S c` by least squares, where
//!   `S` is a [`MappingMatrix`] (symmetry map `P_N` or hexagon map `T_N`);
//! * the direct engine relates block-lagged cross-cumulants of the sampler
//!   outputs to Nyquist-rate cumulant lags through a block-circulant operator
//!   and solves one small system per DFT bin.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cumulant::{CumulantVector, StationaryCumulant};
use crate::error::{check_len, invalid, Result};
use crate::mapping::{MappingMatrix, SymmetricTripleIndex};
use crate::numerics::{default_rank_tol, dft, LeastSquaresFactor};
use crate::sampler::SamplingMatrix;
use crate::signal::BlockStream;

/// Above this relative size the imaginary part left by the inverse DFT is
/// reported as suspicious.
pub const IMAGINARY_WARNING: f64 = 1e-6;

/// `C(m + 2, 3)`: distinct entries of a symmetric `m x m x m` tensor.
pub fn unique_moment_count(m: usize) -> u128 {
    let m = m as u128;
    (m + 2) * (m + 1) * m / 6
}

/// `N (N + 1) / 2`.
pub fn principal_dof(n: usize) -> u128 {
    let n = n as u128;
    n * (n + 1) / 2
}

/// `3 N^2 - 3 N + 1`.
pub fn hexagon_dof(n: usize) -> u128 {
    let n = n as u128;
    3 * n * n - 3 * n + 1
}

/// Solvability counts for one `(N, M)` pair. All flags are integer tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub n: usize,
    pub m: usize,
    pub unique_y_count: u128,
    pub dof_principal: u128,
    pub dof_hexagon: u128,
    pub feasible_principal: bool,
    pub feasible_hexagon: bool,
    /// `(3 N^2)^(1/3) / N`, the large-`N` limit of the smallest ratio.
    pub min_ratio_approx: f64,
}

pub fn feasibility(n: usize, m: usize) -> Result<FeasibilityReport> {
    if m == 0 || m > n {
        return Err(invalid("feasibility needs 1 <= M <= N"));
    }
    let unique_y_count = unique_moment_count(m);
    let dof_principal = principal_dof(n);
    let dof_hexagon = hexagon_dof(n);
    let nf = n as f64;
    Ok(FeasibilityReport {
        n,
        m,
        unique_y_count,
        dof_principal,
        dof_hexagon,
        feasible_principal: unique_y_count >= dof_principal,
        feasible_hexagon: unique_y_count >= dof_hexagon,
        min_ratio_approx: num_traits::Float::cbrt(3.0 * nf * nf) / nf,
    })
}

/// Smallest `M <= N` with `C(M + 2, 3) >= dof`, if any.
pub fn min_feasible_m(n: usize, dof: u128) -> Option<usize> {
    (1..=n).find(|&m| unique_moment_count(m) >= dof)
}

/// Upper bound on the rank of `Phi^(3) P_N` for an `M x N` sampler, attained
/// by Gaussian samplers except close to the counting boundary.
///
/// Principal lags `c(u, N-1)` only enter tensor entries that contain both
/// index `0` and index `N-1`; they form `sym(e_0 o e_{N-1} o w)`, which
/// `Phi^(3)` annihilates whenever `Phi w = 0`. That removes `N - M`
/// dimensions whatever the number of distinct compressed moments.
pub fn principal_structural_rank(n: usize, m: usize) -> usize {
    let dof = n * (n + 1) / 2;
    let unique = unique_moment_count(m).min(dof as u128) as usize;
    unique.min(dof - (n - m.min(n)))
}

/// Output of either engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Compact cumulant vector (alternative engine) or stacked lag-block
    /// vector (direct engine).
    pub values: Vec<f64>,
    pub residual_norm: f64,
    /// Smallest numerical rank over the solved systems.
    pub rank: usize,
    pub expected_rank: usize,
    pub rank_ok: bool,
    /// Wall-clock solve time; only measured with the `std` feature.
    pub runtime_ms: Option<f64>,
    /// `max |Im| / max |Re|` after the inverse DFT (direct engine only).
    pub imaginary_residue: f64,
}

impl ReconstructionResult {
    pub fn imaginary_warning(&self) -> bool {
        self.imaginary_residue > IMAGINARY_WARNING
    }
}

#[cfg(feature = "std")]
struct Stopwatch(std::time::Instant);

#[cfg(feature = "std")]
impl Stopwatch {
    fn start() -> Self {
        Self(std::time::Instant::now())
    }

    fn elapsed_ms(&self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64() * 1e3)
    }
}

#[cfg(not(feature = "std"))]
struct Stopwatch;

#[cfg(not(feature = "std"))]
impl Stopwatch {
    fn start() -> Self {
        Self
    }

    fn elapsed_ms(&self) -> Option<f64> {
        None
    }
}

fn map_is_permutation_invariant(map: &MappingMatrix) -> bool {
    let n = map.n();
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    (0..n).all(|a| {
        (0..n).all(|b| {
            (0..n).all(|c| {
                let col = map.column_of(idx(a, b, c));
                col == map.column_of(idx(b, a, c)) && col == map.column_of(idx(a, c, b))
            })
        })
    })
}

/// Rows `(i1, i2, i3)` of `Phi^(3) S`, never forming `Phi^(3)`: entry `q` is
/// the sum of `Phi[i1,a] Phi[i2,b] Phi[i3,c]` over `(a,b,c)` that `S` sends
/// to column `q`.
fn product_rows(phi: &DMatrix<f64>, map: &MappingMatrix, rows: &[[usize; 3]]) -> DMatrix<f64> {
    let n = phi.ncols();
    let mut out = DMatrix::zeros(rows.len(), map.cols());
    let mut acc = vec![0.0; map.cols()];
    for (r, &[i1, i2, i3]) in rows.iter().enumerate() {
        acc.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..n {
            let pa = phi[(i1, a)];
            if pa == 0.0 {
                continue;
            }
            for b in 0..n {
                let pab = pa * phi[(i2, b)];
                if pab == 0.0 {
                    continue;
                }
                let base = (a * n + b) * n;
                for c in 0..n {
                    acc[map.column_of(base + c)] += pab * phi[(i3, c)];
                }
            }
        }
        for (q, &v) in acc.iter().enumerate() {
            out[(r, q)] = v;
        }
    }
    out
}

/// Full `M^3 x cols` matrix `Phi^(3) S` in vec order. Meant for checks on
/// small sizes; the solver uses a reduced system.
pub fn system_matrix(phi: &SamplingMatrix, map: &MappingMatrix) -> Result<DMatrix<f64>> {
    check_len("mapping rows vs N^3", phi.n().pow(3), map.rows())?;
    let m = phi.m();
    let rows: Vec<[usize; 3]> = (0..m)
        .flat_map(|i| (0..m).flat_map(move |j| (0..m).map(move |l| [i, j, l])))
        .collect();
    Ok(product_rows(phi.matrix(), map, &rows))
}

/// Factored alternative-engine system, reusable across right-hand sides.
///
/// For a permutation-invariant mapping (such as `P_N`) all rows of
/// `Phi^(3) S` belonging to permutations of one index triple coincide. The
/// solver keeps one row per sorted triple, weighted by the square root of its
/// multiplicity, with the permutation-averaged data as right-hand side. This
/// has the same minimizer as the full `M^3`-row problem.
#[derive(Debug, Clone)]
pub struct AlternativeSolver {
    m: usize,
    rows: Vec<[usize; 3]>,
    weights: Vec<f64>,
    reduced: Option<SymmetricTripleIndex>,
    // unweighted rows, for the full residual
    rows_matrix: DMatrix<f64>,
    factor: LeastSquaresFactor<f64>,
}

impl AlternativeSolver {
    pub fn new(phi: &SamplingMatrix, map: &MappingMatrix) -> Result<Self> {
        Self::with_tolerance(phi, map, None)
    }

    pub fn with_tolerance(phi: &SamplingMatrix, map: &MappingMatrix, rel_tol: Option<f64>) -> Result<Self> {
        check_len("mapping rows vs N^3", phi.n().pow(3), map.rows())?;
        let m = phi.m();
        let (rows, weights, reduced) = if map_is_permutation_invariant(map) {
            let idx = SymmetricTripleIndex::new(m);
            let rows = idx.triples().to_vec();
            let weights = rows
                .iter()
                .map(|&t| num_traits::Float::sqrt(SymmetricTripleIndex::multiplicity(t) as f64))
                .collect();
            (rows, weights, Some(idx))
        } else {
            let rows: Vec<[usize; 3]> = (0..m)
                .flat_map(|i| (0..m).flat_map(move |j| (0..m).map(move |l| [i, j, l])))
                .collect();
            let weights = vec![1.0; rows.len()];
            (rows, weights, None)
        };
        let rows_matrix = product_rows(phi.matrix(), map, &rows);
        let mut weighted = rows_matrix.clone();
        for (r, &w) in weights.iter().enumerate() {
            weighted.row_mut(r).scale_mut(w);
        }
        // the tolerance refers to the full M^3-row system
        let tol = rel_tol.unwrap_or_else(|| default_rank_tol(m * m * m, map.cols()));
        let factor = LeastSquaresFactor::with_tolerance(weighted, tol)?;
        Ok(Self {
            m,
            rows,
            weights,
            reduced,
            rows_matrix,
            factor,
        })
    }

    pub fn cols(&self) -> usize {
        self.factor.cols()
    }

    pub fn rank(&self) -> usize {
        self.factor.rank()
    }

    pub fn rank_ok(&self) -> bool {
        self.rank() == self.cols()
    }

    pub fn condition_estimate(&self) -> f64 {
        self.factor.condition_estimate()
    }

    /// Whether the permutation-reduced system is in use.
    pub fn is_reduced(&self) -> bool {
        self.reduced.is_some()
    }

    /// Least-squares estimate of the compact cumulant vector.
    pub fn solve(&self, c3y: &CumulantVector) -> Result<ReconstructionResult> {
        let clock = Stopwatch::start();
        check_len("compressed moment dimension", self.m, c3y.dim())?;
        let m = self.m;
        let full = |[i, j, l]: [usize; 3]| (i * m + j) * m + l;
        let rhs: Vec<f64> = match &self.reduced {
            Some(_) => self
                .rows
                .iter()
                .zip(&self.weights)
                .map(|(&[i, j, l], &w)| {
                    let perms = [[i, j, l], [i, l, j], [j, i, l], [j, l, i], [l, i, j], [l, j, i]];
                    w * perms.iter().map(|&p| c3y.values()[full(p)]).sum::<f64>() / 6.0
                })
                .collect(),
            None => c3y.values().to_vec(),
        };
        let sol = self.factor.solve(&DVector::from_vec(rhs))?;
        let fitted = &self.rows_matrix * &sol.solution;
        let fitted_full: Vec<f64> = match &self.reduced {
            Some(idx) => idx.expand(fitted.as_slice()),
            None => fitted.iter().copied().collect(),
        };
        let residual_norm = num_traits::Float::sqrt(
            c3y.values()
                .iter()
                .zip(&fitted_full)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>(),
        );
        Ok(ReconstructionResult {
            values: sol.solution.iter().copied().collect(),
            residual_norm,
            rank: sol.rank,
            expected_rank: self.cols(),
            rank_ok: sol.rank == self.cols(),
            runtime_ms: clock.elapsed_ms(),
            imaginary_residue: 0.0,
        })
    }
}

/// One-shot alternative-engine reconstruction.
pub fn reconstruct_alternative(
    c3y: &CumulantVector,
    phi: &SamplingMatrix,
    map: &MappingMatrix,
) -> Result<ReconstructionResult> {
    let clock = Stopwatch::start();
    let mut out = AlternativeSolver::new(phi, map)?.solve(c3y)?;
    out.runtime_ms = clock.elapsed_ms();
    Ok(out)
}

/// `sum_{n=1-N}^{0} e1[n] e2[n+m1] e3[n+m2]` for filters supported on
/// `n = 1-N..=0`; element `0` of each slice is `n = 1-N`.
pub fn filter_cross_cumulant(e1: &[f64], e2: &[f64], e3: &[f64], m1: i64, m2: i64) -> Result<f64> {
    let n = e1.len();
    check_len("filter e2", n, e2.len())?;
    check_len("filter e3", n, e3.len())?;
    let at = |e: &[f64], t: i64| -> f64 {
        // t is a time index in 1-N..=0
        let idx = t + n as i64 - 1;
        if (0..n as i64).contains(&idx) {
            e[idx as usize]
        } else {
            0.0
        }
    };
    let mut acc = 0.0;
    for t in (1 - n as i64)..=0 {
        let a = at(e1, t);
        if a != 0.0 {
            acc += a * at(e2, t + m1) * at(e3, t + m2);
        }
    }
    Ok(acc)
}

/// Block-circulant operator of the direct engine.
///
/// Lag blocks are stacked with `tau2` as the outer and `tau1` as the inner
/// index, both running from `L` down to `-L`. Block `(tau1, tau2)` of a
/// Nyquist-rate cumulant holds `c(tau1 N + r, tau2 N + s)` at `r N + s`;
/// block `(tau1, tau2)` of the compressed side holds the cross-cumulants of
/// all output triples in vec order.
#[derive(Debug, Clone)]
pub struct DirectSystem {
    n: usize,
    m: usize,
    l: usize,
    // [C00, C01, C10, C11], each M^3 x N^2
    blocks: [DMatrix<f64>; 4],
}

impl DirectSystem {
    pub fn assemble(phi: &SamplingMatrix, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(invalid("direct engine needs L >= 1"));
        }
        let (m, n) = (phi.m(), phi.n());
        // e_i[-t] = Phi[i, t], stored from n = 1-N upward
        let filters: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..n).rev().map(|t| phi.matrix()[(i, t)]).collect())
            .collect();
        let mut blocks = [
            DMatrix::zeros(m * m * m, n * n),
            DMatrix::zeros(m * m * m, n * n),
            DMatrix::zeros(m * m * m, n * n),
            DMatrix::zeros(m * m * m, n * n),
        ];
        for (slot, (a, b)) in [(0i64, 0i64), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            let block = &mut blocks[slot];
            for i1 in 0..m {
                for i2 in 0..m {
                    for i3 in 0..m {
                        let row = (i1 * m + i2) * m + i3;
                        for r in 0..n {
                            for s in 0..n {
                                let m1 = a * n as i64 - r as i64;
                                let m2 = b * n as i64 - s as i64;
                                block[(row, r * n + s)] =
                                    filter_cross_cumulant(&filters[i1], &filters[i2], &filters[i3], m1, m2)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { n, m, l, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of lag blocks, `(2L + 1)^2`.
    pub fn period(&self) -> usize {
        let w = 2 * self.l + 1;
        w * w
    }

    /// `C[a, b]` for `a, b` in `{0, 1}`.
    pub fn block(&self, a: usize, b: usize) -> &DMatrix<f64> {
        assert!(a < 2 && b < 2, "block indices are 0 or 1");
        &self.blocks[2 * a + b]
    }

    /// Position of lag block `(tau1, tau2)` in the stacked vectors.
    pub fn block_index(&self, t1: i64, t2: i64) -> Option<usize> {
        let l = self.l as i64;
        if t1.abs() > l || t2.abs() > l {
            return None;
        }
        Some(((l - t2) * (2 * l + 1) + (l - t1)) as usize)
    }

    /// Lag pair of stacked block `j`.
    pub fn block_lags(&self, j: usize) -> (i64, i64) {
        let w = 2 * self.l + 1;
        let l = self.l as i64;
        (l - (j % w) as i64, l - (j / w) as i64)
    }

    // circulant shift d -> block
    fn shifted_blocks(&self) -> [(usize, &DMatrix<f64>); 4] {
        let w = 2 * self.l + 1;
        [
            (0, self.block(0, 0)),
            (1, self.block(1, 0)),
            (w, self.block(0, 1)),
            (w + 1, self.block(1, 1)),
        ]
    }

    pub fn rows(&self) -> usize {
        self.period() * self.m.pow(3)
    }

    pub fn cols(&self) -> usize {
        self.period() * self.n * self.n
    }

    /// Applies the circulant operator without materializing it.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("direct-system input", self.cols(), x.len())?;
        let (p, bx, by) = (self.period(), self.n * self.n, self.m.pow(3));
        let mut y = vec![0.0; p * by];
        for j in 0..p {
            let out = &mut y[j * by..(j + 1) * by];
            for (d, block) in self.shifted_blocks() {
                let src = (j + d) % p;
                let xv = DVector::from_column_slice(&x[src * bx..(src + 1) * bx]);
                let prod = block * xv;
                out.iter_mut().zip(prod.iter()).for_each(|(o, v)| *o += v);
            }
        }
        Ok(y)
    }

    /// The full block-circulant matrix.
    pub fn circulant(&self) -> DMatrix<f64> {
        let (p, bx, by) = (self.period(), self.n * self.n, self.m.pow(3));
        let mut c = DMatrix::zeros(p * by, p * bx);
        for j in 0..p {
            for (d, block) in self.shifted_blocks() {
                let src = (j + d) % p;
                c.view_mut((j * by, src * bx), (by, bx)).add_assign(block);
            }
        }
        c
    }

    /// `Q(l) = sum_d B_d exp(+2 pi i d l / P)`: the operator acting on DFT
    /// bin `l` of the stacked blocks.
    pub fn frequency_block(&self, bin: usize) -> DMatrix<Complex64> {
        let p = self.period();
        let mut q = DMatrix::<Complex64>::zeros(self.m.pow(3), self.n * self.n);
        for (d, block) in self.shifted_blocks() {
            let w = Complex64::from_polar(1.0, 2.0 * PI * ((d * bin) % p) as f64 / p as f64);
            q.zip_apply(block, |qv, bv| *qv += w * bv);
        }
        q
    }
}

trait AddAssignView {
    fn add_assign(&mut self, rhs: &DMatrix<f64>);
}

impl AddAssignView for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, rhs: &DMatrix<f64>) {
        self.zip_apply(rhs, |a, b| *a += b);
    }
}

fn blockwise_dft(v: &[f64], period: usize, width: usize) -> Result<Vec<Vec<Complex64>>> {
    // out[bin][coordinate]
    let mut out = vec![vec![Complex64::new(0.0, 0.0); width]; period];
    for c in 0..width {
        let series: Vec<Complex64> = (0..period).map(|j| Complex64::new(v[j * width + c], 0.0)).collect();
        for (bin, z) in dft(&series, false)?.into_iter().enumerate() {
            out[bin][c] = z;
        }
    }
    Ok(out)
}

/// Recovers the stacked Nyquist-rate cumulant blocks from stacked
/// compressed cross-cumulant blocks, one least-squares solve per DFT bin.
pub fn reconstruct_direct(c3y_long: &[f64], system: &DirectSystem) -> Result<ReconstructionResult> {
    let clock = Stopwatch::start();
    check_len("stacked compressed cumulant", system.rows(), c3y_long.len())?;
    let (p, bx, by) = (system.period(), system.n * system.n, system.m.pow(3));
    let y_hat = blockwise_dft(c3y_long, p, by)?;
    let mut x_hat = vec![vec![Complex64::new(0.0, 0.0); bx]; p];
    let mut min_rank = bx;
    for bin in 0..p {
        if bin > p / 2 {
            // real data: bin P - l is the conjugate problem of bin l
            x_hat[bin] = x_hat[p - bin].iter().map(|z| z.conj()).collect();
            continue;
        }
        let factor = LeastSquaresFactor::new(system.frequency_block(bin))?;
        let sol = factor.solve(&DVector::from_vec(y_hat[bin].clone()))?;
        min_rank = min_rank.min(sol.rank);
        x_hat[bin] = sol.solution.iter().copied().collect();
    }
    let mut values = vec![0.0; p * bx];
    let (mut max_re, mut max_im) = (0.0f64, 0.0f64);
    for c in 0..bx {
        let series: Vec<Complex64> = (0..p).map(|bin| x_hat[bin][c]).collect();
        for (j, z) in dft(&series, true)?.into_iter().enumerate() {
            values[j * bx + c] = z.re;
            max_re = max_re.max(z.re.abs());
            max_im = max_im.max(z.im.abs());
        }
    }
    let fitted = system.apply(&values)?;
    let residual_norm = num_traits::Float::sqrt(
        c3y_long
            .iter()
            .zip(&fitted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>(),
    );
    Ok(ReconstructionResult {
        values,
        residual_norm,
        rank: min_rank,
        expected_rank: bx,
        rank_ok: min_rank == bx,
        runtime_ms: clock.elapsed_ms(),
        imaginary_residue: if max_re > 0.0 { max_im / max_re } else { max_im },
    })
}

/// Stacks `c(tau1 N + r, tau2 N + s)` into the direct engine's layout.
pub fn stack_cumulant(system: &DirectSystem, c: impl Fn(i64, i64) -> f64) -> Vec<f64> {
    let (n, p) = (system.n as i64, system.period());
    let mut out = Vec::with_capacity(system.cols());
    for j in 0..p {
        let (t1, t2) = system.block_lags(j);
        for r in 0..n {
            for s in 0..n {
                out.push(c(t1 * n + r, t2 * n + s));
            }
        }
    }
    out
}

/// Reads lag `(t1, t2)` out of a stacked Nyquist-rate vector, if present.
pub fn stacked_value(system: &DirectSystem, stacked: &[f64], t1: i64, t2: i64) -> Option<f64> {
    let n = system.n as i64;
    let (b1, r) = (t1.div_euclid(n), t1.rem_euclid(n));
    let (b2, s) = (t2.div_euclid(n), t2.rem_euclid(n));
    let j = system.block_index(b1, b2)?;
    stacked.get(j * (system.n * system.n) + (r * n + s) as usize).copied()
}

/// Hexagon of the first `N` lags from a stacked direct-engine solution.
pub fn stacked_to_cumulant(system: &DirectSystem, stacked: &[f64]) -> Result<StationaryCumulant> {
    check_len("stacked cumulant", system.cols(), stacked.len())?;
    Ok(StationaryCumulant::from_fn(system.n, |t1, t2| {
        stacked_value(system, stacked, t1, t2).unwrap_or(0.0)
    }))
}

/// Empirical block-lagged cross-cumulants of a compressed stream whose
/// blocks are consecutive pieces of one record, stacked like
/// [`DirectSystem`] expects.
pub fn empirical_cross_cumulants(stream: &BlockStream, l: usize) -> Result<Vec<f64>> {
    let m = stream.block_length();
    let k = stream.block_count();
    if k <= 2 * l {
        return Err(invalid("need more blocks than 2L for block-lagged estimates"));
    }
    let w = 2 * l + 1;
    let li = l as i64;
    let mut out = Vec::with_capacity(w * w * m * m * m);
    for j in 0..w * w {
        let t1 = li - (j % w) as i64;
        let t2 = li - (j / w) as i64;
        let lo = 0i64.max(-t1).max(-t2);
        let hi = (k as i64).min(k as i64 - t1).min(k as i64 - t2);
        let count = (hi - lo) as f64;
        let mut acc = vec![0.0; m * m * m];
        for kk in lo..hi {
            let y0 = stream.block(kk as usize);
            let y1 = stream.block((kk + t1) as usize);
            let y2 = stream.block((kk + t2) as usize);
            for i1 in 0..m {
                for i2 in 0..m {
                    let p = y0[i1] * y1[i2];
                    let base = (i1 * m + i2) * m;
                    for i3 in 0..m {
                        acc[base + i3] += p * y2[i3];
                    }
                }
            }
        }
        out.extend(acc.into_iter().map(|v| v / count));
    }
    Ok(out)
}
