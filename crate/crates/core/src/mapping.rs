//! Structure matrices linking compact lag vectors to the vectorized `N^3`
//! cumulant tensor, and the index conventions they rely on.
//!
//! A [`MappingMatrix`] is binary with exactly one nonzero per row, so it is
//! stored as a row-to-column table and applied in `O(N^3)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::cumulant::{CumulantVector, StationaryCumulant};
use crate::error::{check_len, invalid, Result};

/// One-based vectorization index of tensor entry `(i1, i2, i3)` in a
/// `d x d x d` tensor: `(i1-1) d^2 + (i2-1) d + i3`.
pub fn vec_index(i1: usize, i2: usize, i3: usize, d: usize) -> Result<usize> {
    let ok = |i: usize| (1..=d).contains(&i);
    if !(ok(i1) && ok(i2) && ok(i3)) {
        return Err(invalid("tensor index out of range"));
    }
    Ok((i1 - 1) * d * d + (i2 - 1) * d + i3)
}

/// Ordered set of lag pairs with positional lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct LagIndexSet {
    n: usize,
    lags: Vec<(i64, i64)>,
    // dense (2n-1)^2 table, usize::MAX where the pair is absent
    lookup: Vec<usize>,
}

impl LagIndexSet {
    fn from_lags(n: usize, lags: Vec<(i64, i64)>) -> Self {
        let side = 2 * n - 1;
        let mut lookup = vec![usize::MAX; side * side];
        let m = n as i64 - 1;
        for (pos, &(a, b)) in lags.iter().enumerate() {
            lookup[(a + m) as usize * side + (b + m) as usize] = pos;
        }
        Self { n, lags, lookup }
    }

    /// Principal region `0 <= tau1 <= tau2 <= n-1`, ordered
    /// `(0,0), (0,1), ..., (0,n-1), (1,1), ..., (n-1,n-1)`.
    pub fn principal(n: usize) -> Self {
        let lags = (0..n as i64)
            .flat_map(|u| (u..n as i64).map(move |v| (u, v)))
            .collect();
        Self::from_lags(n, lags)
    }

    /// Hexagonal support in lexicographic `(tau1, tau2)` order.
    pub fn hexagon(n: usize) -> Self {
        let m = n as i64 - 1;
        let lags = (-m..=m)
            .flat_map(|a| (-m..=m).map(move |b| (a, b)))
            .filter(|&(a, b)| (a - b).abs() <= m)
            .collect();
        Self::from_lags(n, lags)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn lags(&self) -> &[(i64, i64)] {
        &self.lags
    }

    /// Zero-based position of a lag pair.
    pub fn index_of(&self, t1: i64, t2: i64) -> Option<usize> {
        let m = self.n as i64 - 1;
        if t1.abs() > m || t2.abs() > m {
            return None;
        }
        let side = 2 * self.n - 1;
        match self.lookup[(t1 + m) as usize * side + (t2 + m) as usize] {
            usize::MAX => None,
            pos => Some(pos),
        }
    }
}

/// Binary `rows x cols` matrix with one nonzero per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingMatrix {
    n: usize,
    cols: usize,
    row_to_col: Vec<usize>,
}

impl MappingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.row_to_col.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Zero-based column of the nonzero in a zero-based row.
    pub fn column_of(&self, row: usize) -> usize {
        self.row_to_col[row]
    }

    pub fn row_to_col(&self) -> &[usize] {
        &self.row_to_col
    }

    /// Number of nonzeros in every column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for &c in &self.row_to_col {
            counts[c] += 1;
        }
        counts
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols);
        for (r, &c) in self.row_to_col.iter().enumerate() {
            m[(r, c)] = 1.0;
        }
        m
    }
}

/// Symmetry mapping `P_N` (`N^3 x N(N+1)/2`).
///
/// Entry `(p_i(u,v,w), q(u,v))` is one for the six index permutations
/// `p_1..p_6` over `u in [0, N-1]`, `v in [u, N-1]`, `w in [1, N-v]`.
/// Coinciding assignments collapse to a single one.
pub fn build_p(n: usize) -> MappingMatrix {
    assert!(n >= 1, "block length must be positive");
    let nn = n * n;
    let mut row_to_col = vec![usize::MAX; n * nn];
    for u in 0..n {
        for v in u..n {
            let q = if u == 0 {
                v - u + 1
            } else {
                (1..=u).map(|j| n - j + 1).sum::<usize>() + v - u + 1
            };
            for w in 1..=n - v {
                let rows = [
                    (w - 1) * nn + (w + v - 1) * n + (w + u),
                    (w - 1) * nn + (w + u - 1) * n + (w + v),
                    (w + v - 1) * nn + (w - 1) * n + (w + u),
                    (w + v - 1) * nn + (w + u - 1) * n + w,
                    (w + u - 1) * nn + (w - 1) * n + (w + v),
                    (w + u - 1) * nn + (w + v - 1) * n + w,
                ];
                for p in rows {
                    let slot = &mut row_to_col[p - 1];
                    debug_assert!(*slot == usize::MAX || *slot == q - 1);
                    *slot = q - 1;
                }
            }
        }
    }
    debug_assert!(row_to_col.iter().all(|&c| c != usize::MAX));
    MappingMatrix {
        n,
        cols: n * (n + 1) / 2,
        row_to_col,
    }
}

/// Hexagon mapping `T_N` (`N^3 x (3N^2 - 3N + 1)`): the row of tensor entry
/// `(i, j, l)` points at lag pair `(j - i, l - i)` of
/// [`LagIndexSet::hexagon`].
pub fn build_t(n: usize) -> MappingMatrix {
    assert!(n >= 1, "block length must be positive");
    let hex = LagIndexSet::hexagon(n);
    let mut row_to_col = Vec::with_capacity(n * n * n);
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            for l in 0..n as i64 {
                row_to_col.push(hex.index_of(j - i, l - i).expect("tensor lags lie in the hexagon"));
            }
        }
    }
    MappingMatrix {
        n,
        cols: hex.len(),
        row_to_col,
    }
}

/// `map * c_compact` as a vectorized cumulant tensor.
pub fn expand(c_compact: &[f64], map: &MappingMatrix) -> Result<CumulantVector> {
    check_len("compact cumulant", map.cols(), c_compact.len())?;
    let values = map.row_to_col.iter().map(|&c| c_compact[c]).collect();
    CumulantVector::new(map.n, values)
}

/// Principal-region values in [`LagIndexSet::principal`] order.
pub fn compress_to_principal(c: &StationaryCumulant) -> Vec<f64> {
    LagIndexSet::principal(c.n())
        .lags()
        .iter()
        .map(|&(a, b)| c.get(a, b))
        .collect()
}

/// Hexagon values in [`LagIndexSet::hexagon`] order.
pub fn compress_to_hexagon(c: &StationaryCumulant) -> Vec<f64> {
    LagIndexSet::hexagon(c.n())
        .lags()
        .iter()
        .map(|&(a, b)| c.get(a, b))
        .collect()
}

/// Rebuilds a stationary cumulant from its principal-region vector.
pub fn principal_to_cumulant(n: usize, c_tilde: &[f64]) -> Result<StationaryCumulant> {
    let principal = LagIndexSet::principal(n);
    check_len("principal cumulant", principal.len(), c_tilde.len())?;
    Ok(StationaryCumulant::from_fn(n, |t1, t2| {
        // sort the triple (0, t1, t2) and read off the principal lags
        let mut s = [0, t1, t2];
        s.sort_unstable();
        let pos = principal
            .index_of(s[1] - s[0], s[2] - s[0])
            .expect("sorted lags are principal");
        c_tilde[pos]
    }))
}

/// Sorted index triples `i <= j <= l` of a symmetric `d x d x d` tensor in
/// lexicographic order, with their permutation multiplicities.
#[derive(Debug, Clone)]
pub struct SymmetricTripleIndex {
    dim: usize,
    triples: Vec<[usize; 3]>,
    full_to_unique: Vec<usize>,
}

impl SymmetricTripleIndex {
    pub fn new(dim: usize) -> Self {
        let mut triples = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                for l in j..dim {
                    triples.push([i, j, l]);
                }
            }
        }
        let mut full_to_unique = Vec::with_capacity(dim * dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                for l in 0..dim {
                    let mut s = [i, j, l];
                    s.sort_unstable();
                    full_to_unique.push(Self::position(dim, s));
                }
            }
        }
        Self {
            dim,
            triples,
            full_to_unique,
        }
    }

    fn position(dim: usize, [i, j, l]: [usize; 3]) -> usize {
        // triples before first index i, then pairs (j', l') with i <= j' < j,
        // then l - j
        let tet = |m: usize| m * (m + 1) * (m + 2) / 6;
        let tri = |m: usize| m * (m + 1) / 2;
        let before_i = tet(dim) - tet(dim - i);
        let before_j = tri(dim - i) - tri(dim - j);
        before_i + before_j + (l - j)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `C(d + 2, 3)`.
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    pub fn unique_of_full(&self, full: usize) -> usize {
        self.full_to_unique[full]
    }

    /// Number of distinct permutations of a sorted triple (1, 3 or 6).
    pub fn multiplicity(t: [usize; 3]) -> usize {
        match (t[0] == t[1], t[1] == t[2]) {
            (true, true) => 1,
            (false, false) => 6,
            _ => 3,
        }
    }

    /// Spreads unique values to every permutation.
    pub fn expand(&self, unique: &[f64]) -> Vec<f64> {
        self.full_to_unique.iter().map(|&u| unique[u]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_index_examples() {
        assert_eq!(vec_index(1, 1, 1, 5).unwrap(), 1);
        assert_eq!(vec_index(2, 1, 1, 3).unwrap(), 10);
        assert_eq!(vec_index(3, 3, 3, 3).unwrap(), 27);
        assert!(vec_index(0, 1, 1, 3).is_err());
        assert!(vec_index(1, 4, 1, 3).is_err());
    }

    #[test]
    fn p_shapes() {
        let p1 = build_p(1);
        assert_eq!((p1.rows(), p1.cols()), (1, 1));
        assert_eq!(p1.column_of(0), 0);
        let p3 = build_p(3);
        assert_eq!((p3.rows(), p3.cols()), (27, 6));
        assert_eq!(p3.column_of(vec_index(1, 1, 1, 3).unwrap() - 1), 0);
        // c3(1,1) is the 4th principal entry for N = 3
        assert_eq!(LagIndexSet::principal(3).index_of(1, 1), Some(3));
        assert_eq!(p3.column_of(vec_index(1, 2, 2, 3).unwrap() - 1), 3);
    }

    #[test]
    fn t_shapes() {
        let t1 = build_t(1);
        assert_eq!((t1.rows(), t1.cols()), (1, 1));
        let t3 = build_t(3);
        assert_eq!((t3.rows(), t3.cols()), (27, 19));
        let hex = LagIndexSet::hexagon(3);
        let row = vec_index(1, 2, 3, 3).unwrap() - 1;
        assert_eq!(t3.column_of(row), hex.index_of(1, 2).unwrap());
    }

    #[test]
    fn expand_n2() {
        let (a, b, d) = (1.0, 2.0, 3.0);
        let v = expand(&[a, b, d], &build_p(2)).unwrap();
        assert_eq!(v.values(), &[a, b, b, d, b, d, d, a]);
        assert!(expand(&[a, b], &build_p(2)).is_err());
    }

    #[test]
    fn all_ones_expand() {
        let p = build_p(4);
        let v = expand(&vec![1.0; p.cols()], &p).unwrap();
        assert!(v.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn principal_ordering() {
        let c = StationaryCumulant::from_fn(2, |t1, t2| match (t1, t2) {
            (0, 0) => 1.0,
            (0, 1) | (1, 0) => 2.0,
            (1, 1) => 3.0,
            _ => 0.0,
        });
        assert_eq!(compress_to_principal(&c), vec![1.0, 2.0, 3.0]);
        assert!(compress_to_principal(&StationaryCumulant::zeros(4))
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn lag_set_sizes() {
        for n in 1..=8 {
            assert_eq!(LagIndexSet::principal(n).len(), n * (n + 1) / 2);
            assert_eq!(LagIndexSet::hexagon(n).len(), 3 * n * n - 3 * n + 1);
        }
    }

    #[test]
    fn triple_index_positions() {
        for d in 1..=6 {
            let idx = SymmetricTripleIndex::new(d);
            assert_eq!(idx.len(), d * (d + 1) * (d + 2) / 6);
            for (pos, &t) in idx.triples().iter().enumerate() {
                assert_eq!(SymmetricTripleIndex::position(d, t), pos);
            }
        }
        let total: usize = SymmetricTripleIndex::new(4)
            .triples()
            .iter()
            .map(|&t| SymmetricTripleIndex::multiplicity(t))
            .sum();
        assert_eq!(total, 64);
    }

    fn test_cumulant(n: usize) -> StationaryCumulant {
        // arbitrary symmetric values: a function of the sorted lag triple
        let compact: Vec<f64> = (0..n * (n + 1) / 2).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        principal_to_cumulant(n, &compact).unwrap()
    }

    #[test]
    fn rows_have_one_entry() {
        for n in 1..=8 {
            for map in [build_p(n), build_t(n)] {
                let dense = map.to_dense();
                for r in 0..dense.nrows() {
                    assert_eq!(dense.row(r).sum(), 1.0);
                }
                assert!(map.column_counts().iter().all(|&c| c >= 1));
            }
        }
    }

    #[test]
    fn p_and_t_agree_on_symmetric_cumulants() {
        for n in 1..=6 {
            let c = test_cumulant(n);
            assert_eq!(c.symmetry_defect(), 0.0);
            let via_p = expand(&compress_to_principal(&c), &build_p(n)).unwrap();
            let via_t = expand(&compress_to_hexagon(&c), &build_t(n)).unwrap();
            assert_eq!(via_p, via_t);
            assert_eq!(via_p, c.to_cumulant_vector());
        }
    }

    #[test]
    fn expand_compress_round_trip() {
        for n in 1..=8 {
            let c = test_cumulant(n);
            let compact = compress_to_principal(&c);
            let back = principal_to_cumulant(n, &compact).unwrap();
            assert_eq!(compress_to_principal(&back), compact);
            assert_eq!(compress_to_hexagon(&back), compress_to_hexagon(&c));
            // read the compact vector back out of the expanded tensor
            let full = expand(&compact, &build_p(n)).unwrap();
            for (pos, &(a, b)) in LagIndexSet::principal(n).lags().iter().enumerate() {
                assert_eq!(full.get(0, a as usize, b as usize), compact[pos]);
            }
        }
    }
}
