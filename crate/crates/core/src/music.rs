//! MUSIC harmonic retrieval from a covariance or fourth-order slice.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ccss::CumulantSlice;
use crate::error::{invalid, Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

pub const DEFAULT_ORDER: usize = 12;
pub const DEFAULT_GRID: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpectrum {
    /// Frequencies in cycles per sample on `[0, 0.5]`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Local maxima above the median value, by frequency.
    pub peaks: Vec<f64>,
}

impl PseudoSpectrum {
    fn peak_indices(&self) -> Vec<usize> {
        self.peaks
            .iter()
            .filter_map(|p| self.grid.iter().position(|g| g == p))
            .collect()
    }

    /// The `k` highest peaks, returned in increasing frequency.
    pub fn dominant_peaks(&self, k: usize) -> Vec<f64> {
        let mut idx = self.peak_indices();
        idx.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]));
        idx.truncate(k);
        idx.sort_unstable();
        idx.into_iter().map(|i| self.grid[i]).collect()
    }

    /// Height of the highest peak inside `[lo, hi]`, if any.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.peak_indices()
            .into_iter()
            .filter(|&i| (lo..=hi).contains(&self.grid[i]))
            .map(|i| self.values[i])
            .reduce(f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Symmetric Toeplitz matrix with first row `slice(0..order)`.
pub fn slice_toeplitz(slice: &CumulantSlice, order: usize) -> Result<DMatrix<f64>> {
    if order as i64 > slice.max_lag() + 1 {
        return Err(invalid("MUSIC order exceeds the available lags"));
    }
    Ok(DMatrix::from_fn(order, order, |a, b| slice.get((a as i64 - b as i64).abs())))
}

/// MUSIC pseudospectrum.
///
/// Eigenvectors are ranked by eigenvalue magnitude: a fourth-order slice of
/// real harmonics is negative at lag zero, so its signal eigenvalues are the
/// most negative ones.
pub fn music(slice: &CumulantSlice, num_real_harmonics: usize, order: usize, grid_size: usize) -> Result<PseudoSpectrum> {
    let signal_dim = 2 * num_real_harmonics;
    if order <= signal_dim {
        return Err(invalid("MUSIC order must exceed twice the number of harmonics"));
    }
    if grid_size < 3 {
        return Err(invalid("MUSIC grid needs at least 3 points"));
    }
    if slice.q() == 2 {
        let scale = slice.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        if slice.lags().any(|t| (slice.get(t) - slice.get(-t)).abs() > 1e-9 * scale) {
            return Err(invalid("covariance slice is not symmetric"));
        }
    }
    let r = slice_toeplitz(slice, order)?;
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("MUSIC lag matrix"));
    }
    let eig = r.symmetric_eigen();
    let mut order_idx: Vec<usize> = (0..order).collect();
    order_idx.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let noise: Vec<usize> = order_idx[signal_dim..].to_vec();

    let grid: Vec<f64> = (0..grid_size).map(|i| 0.5 * i as f64 / (grid_size - 1) as f64).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&w| {
            let (c, s): (Vec<f64>, Vec<f64>) = (0..order)
                .map(|t| {
                    let phase = 2.0 * PI * w * t as f64;
                    (phase.cos(), phase.sin())
                })
                .unzip();
            let proj: f64 = noise
                .iter()
                .map(|&k| {
                    let u = eig.eigenvectors.column(k);
                    let re: f64 = u.iter().zip(&c).map(|(a, b)| a * b).sum();
                    let im: f64 = u.iter().zip(&s).map(|(a, b)| a * b).sum();
                    re * re + im * im
                })
                .sum();
            1.0 / proj.max(f64::MIN_POSITIVE)
        })
        .collect();

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let peaks = (1..grid_size - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > median)
        .map(|i| grid[i])
        .collect();
    Ok(PseudoSpectrum { grid, values, peaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccss::harmonic_slice;
    use alloc::vec;
    use crate::signal::HarmonicModel;

    #[test]
    fn exact_covariance_peaks() {
        let s = harmonic_slice(&HarmonicModel::two_tone(), 16, 2).unwrap();
        let p = music(&s, 2, DEFAULT_ORDER, DEFAULT_GRID).unwrap();
        let top = p.dominant_peaks(2);
        let res = 0.5 / (DEFAULT_GRID - 1) as f64;
        assert!((top[0] - 0.1).abs() <= res);
        assert!((top[1] - 0.2).abs() <= res);
        assert!(p.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn exact_fourth_order_peaks() {
        let s = harmonic_slice(&HarmonicModel::two_tone(), 16, 4).unwrap();
        let p = music(&s, 2, DEFAULT_ORDER, DEFAULT_GRID).unwrap();
        let top = p.dominant_peaks(2);
        assert!((top[0] - 0.1).abs() < 1e-3 && (top[1] - 0.2).abs() < 1e-3);
    }

    #[test]
    fn scale_invariant_peaks() {
        let s = harmonic_slice(&HarmonicModel::new(vec![0.12, 0.31], vec![1.0, 0.7]).unwrap(), 16, 2).unwrap();
        let a = music(&s, 2, 10, 1024).unwrap();
        let b = music(&s.scaled(37.0), 2, 10, 1024).unwrap();
        assert_eq!(a.dominant_peaks(2), b.dominant_peaks(2));
    }

    #[test]
    fn argument_errors() {
        let s = harmonic_slice(&HarmonicModel::two_tone(), 8, 2).unwrap();
        assert!(music(&s, 2, 4, 100).is_err());
        assert!(music(&s, 2, 9, 100).is_err());
        let mut v = s.values().to_vec();
        v[0] += 1.0;
        let bad = CumulantSlice::new(2, 8, v, s.pair_counts().to_vec()).unwrap();
        assert!(music(&bad, 2, 6, 100).is_err());
    }
}
