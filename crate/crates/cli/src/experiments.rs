//! Experiment runners. Each returns plain rows; writing is left to the caller.

use anyhow::{bail, ensure, Context, Result};
use cumsense_core::c3cs::{
    feasibility, hexagon_dof, min_feasible_m, principal_dof, principal_structural_rank, reconstruct_direct,
    stacked_to_cumulant, AlternativeSolver, DirectSystem, empirical_cross_cumulants,
};
use cumsense_core::ccss::{estimate_slice_with, harmonic_slice, CumulantSlice};
use cumsense_core::cumulant::{analytic_ma_cumulant, empirical_third_moment_vector, mse};
use cumsense_core::mapping::{build_p, build_t, expand, LagIndexSet, MappingMatrix};
use cumsense_core::music::{music, PseudoSpectrum};
use cumsense_core::rng::derive_seed;
use cumsense_core::sampler::{
    compress, extend_ruler, gaussian_sampler, ruler_sampler, solve_minimal_ruler, SparseRuler,
};
use cumsense_core::signal::{
    add_colored_noise, colored_gaussian, generate_harmonic_blocks, generate_ma_blocks, generate_ma_series,
    noise_scale, BlockStream,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Engine, ExperimentConfig, LagMap, SignalKind};

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `||est - truth||^2 / ||truth||^2`.
pub fn nmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    let energy = truth.iter().map(|t| t * t).sum::<f64>() / truth.len() as f64;
    ensure!(energy > 0.0, "reference slice is identically zero");
    Ok(mse(estimate, truth)? / energy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityRow {
    pub m: usize,
    pub ratio: f64,
    pub unique_moments: u64,
    pub dof_principal: u64,
    pub dof_hexagon: u64,
    pub feasible_principal: bool,
    pub feasible_hexagon: bool,
    pub principal_rank_bound: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityTable {
    pub rows: Vec<FeasibilityRow>,
    pub min_m_principal: Option<usize>,
    pub min_m_hexagon: Option<usize>,
}

pub fn feasibility_table(n: usize) -> Result<FeasibilityTable> {
    let rows = (1..=n)
        .map(|m| {
            let r = feasibility(n, m)?;
            Ok(FeasibilityRow {
                m,
                ratio: m as f64 / n as f64,
                unique_moments: u64::try_from(r.unique_y_count)?,
                dof_principal: u64::try_from(r.dof_principal)?,
                dof_hexagon: u64::try_from(r.dof_hexagon)?,
                feasible_principal: r.feasible_principal,
                feasible_hexagon: r.feasible_hexagon,
                principal_rank_bound: principal_structural_rank(n, m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeasibilityTable {
        rows,
        min_m_principal: min_feasible_m(n, principal_dof(n)),
        min_m_hexagon: min_feasible_m(n, hexagon_dof(n)),
    })
}

fn lag_map(cfg: &ExperimentConfig) -> MappingMatrix {
    match cfg.lag_map {
        LagMap::Principal => build_p(cfg.n),
        LagMap::Hexagon => build_t(cfg.n),
    }
}

fn lag_set(cfg: &ExperimentConfig) -> LagIndexSet {
    match cfg.lag_map {
        LagMap::Principal => LagIndexSet::principal(cfg.n),
        LagMap::Hexagon => LagIndexSet::hexagon(cfg.n),
    }
}

/// Independent blocks of the configured signal plus optional noise.
pub fn signal_blocks(cfg: &ExperimentConfig, k: usize, seed: u64) -> Result<BlockStream> {
    Ok(match cfg.signal {
        SignalKind::Ma => {
            let x = generate_ma_blocks(&cfg.ma_model, cfg.n, k, seed)?;
            match &cfg.noise {
                Some(noise) => add_colored_noise(&x, noise, cfg.ma_model.power(), seed)?,
                None => x,
            }
        }
        SignalKind::Harmonic => generate_harmonic_blocks(&cfg.harmonic_model, cfg.noise.as_ref(), cfg.n, k, seed)?,
    })
}

/// Consecutive blocks of one MA record plus optional noise.
fn contiguous_ma_blocks(cfg: &ExperimentConfig, k: usize, seed: u64) -> Result<BlockStream> {
    let len = k * cfg.n;
    let mut x = generate_ma_series(&cfg.ma_model, len, seed)?;
    if let Some(noise) = &cfg.noise {
        let scale = noise_scale(noise, cfg.ma_model.power());
        for (xi, v) in x.iter_mut().zip(colored_gaussian(noise, len, seed)?) {
            *xi += scale * v;
        }
    }
    Ok(BlockStream::from_series(&x, cfg.n)?)
}

/// Noise-free diagonal slice of the configured signal.
pub fn true_slice(cfg: &ExperimentConfig, q: usize) -> Result<CumulantSlice> {
    Ok(match cfg.signal {
        SignalKind::Harmonic => harmonic_slice(&cfg.harmonic_model, cfg.n, q)?,
        SignalKind::Ma => CumulantSlice::from_fn(q, cfg.n, |t| cfg.ma_model.slice_cumulant(q, t))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseRow {
    pub ratio: f64,
    pub m: usize,
    pub k: usize,
    pub mean_mse: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Fraction of trials whose system had the expected numerical rank.
    pub rank_ok_fraction: f64,
}

struct TrialPoint {
    mse: f64,
    rank_ok: bool,
}

fn c3cs_trial(cfg: &ExperimentConfig, map: &MappingMatrix, truth: &[f64], trial: usize) -> Result<Vec<TrialPoint>> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let x = signal_blocks(cfg, cfg.max_k(), seed)?;
    let mut out = Vec::new();
    for m in cfg.branch_counts() {
        // same seed for every M: the samplers are nested
        let phi = gaussian_sampler(m, cfg.n, seed)?;
        let solver = AlternativeSolver::new(&phi, map)?;
        let y = compress(&phi, &x)?;
        for &k in &cfg.k {
            let c3y = empirical_third_moment_vector(&y.truncated(k)?)?;
            let sol = solver.solve(&c3y)?;
            let est = expand(&sol.values, map)?;
            out.push(TrialPoint {
                mse: mse(est.values(), truth)?,
                rank_ok: solver.rank_ok(),
            });
        }
    }
    Ok(out)
}

/// MSE of the reconstructed `N^3` cumulant tensor against the analytic one,
/// per branch count and block count, averaged over trials.
pub fn c3cs_mse_sweep(cfg: &ExperimentConfig) -> Result<Vec<MseRow>> {
    cfg.validate()?;
    let map = lag_map(cfg);
    let truth = analytic_ma_cumulant(&cfg.ma_model, cfg.n).to_cumulant_vector();
    let trials: Vec<Vec<TrialPoint>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| c3cs_trial(cfg, &map, truth.values(), t).with_context(|| format!("trial {t}")))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut point = 0;
    for m in cfg.branch_counts() {
        for &k in &cfg.k {
            let mses: Vec<f64> = trials.iter().map(|t| t[point].mse).collect();
            let ok = trials.iter().filter(|t| t[point].rank_ok).count();
            let (mean_mse, stderr) = mean_stderr(&mses);
            rows.push(MseRow {
                ratio: m as f64 / cfg.n as f64,
                m,
                k,
                mean_mse,
                stderr,
                trials: cfg.trials,
                rank_ok_fraction: ok as f64 / cfg.trials as f64,
            });
            point += 1;
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverRow {
    pub tau1: i64,
    pub tau2: i64,
    pub estimate: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub engine: Engine,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub rank: usize,
    pub expected_rank: usize,
    pub rank_ok: bool,
    pub residual_norm: f64,
    /// Over the full `N^3` tensor.
    pub mse: f64,
    pub imaginary_residue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub rows: Vec<RecoverRow>,
    pub summary: RecoverySummary,
    pub runtime_ms: Option<f64>,
}

/// One reconstruction from simulated data with a Gaussian sampler.
pub fn c3cs_recover(cfg: &ExperimentConfig) -> Result<Recovery> {
    cfg.validate()?;
    let (n, m, k) = (cfg.n, cfg.m.unwrap_or(cfg.n), cfg.max_k());
    let truth = analytic_ma_cumulant(&cfg.ma_model, n);
    let phi = gaussian_sampler(m, n, cfg.seed)?;
    let (rows, sol, est_full) = match cfg.engine {
        Engine::Alternative => {
            let map = lag_map(cfg);
            let y = compress(&phi, &signal_blocks(cfg, k, cfg.seed)?)?;
            let sol = AlternativeSolver::new(&phi, &map)?.solve(&empirical_third_moment_vector(&y)?)?;
            let rows = lag_set(cfg)
                .lags()
                .iter()
                .zip(&sol.values)
                .map(|(&(tau1, tau2), &estimate)| RecoverRow { tau1, tau2, estimate, truth: truth.get(tau1, tau2) })
                .collect();
            let full = expand(&sol.values, &map)?;
            (rows, sol, full)
        }
        Engine::Direct => {
            let y = compress(&phi, &contiguous_ma_blocks(cfg, k, cfg.seed)?)?;
            let system = DirectSystem::assemble(&phi, cfg.block_lags)?;
            let sol = reconstruct_direct(&empirical_cross_cumulants(&y, cfg.block_lags)?, &system)?;
            let est = stacked_to_cumulant(&system, &sol.values)?;
            let rows = LagIndexSet::hexagon(n)
                .lags()
                .iter()
                .map(|&(tau1, tau2)| RecoverRow { tau1, tau2, estimate: est.get(tau1, tau2), truth: truth.get(tau1, tau2) })
                .collect();
            (rows, sol, est.to_cumulant_vector())
        }
    };
    let summary = RecoverySummary {
        engine: cfg.engine,
        n,
        m,
        k,
        rank: sol.rank,
        expected_rank: sol.expected_rank,
        rank_ok: sol.rank_ok,
        residual_norm: sol.residual_norm,
        mse: mse(est_full.values(), truth.to_cumulant_vector().values())?,
        imaginary_residue: sol.imaginary_residue,
    };
    Ok(Recovery { rows, summary, runtime_ms: sol.runtime_ms })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRow {
    pub ratio: f64,
    pub m: usize,
    pub k: usize,
    pub q: usize,
    pub mean_nmse: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Minimal ruler, grown to `cfg.m` marks when that is larger.
fn configured_ruler(cfg: &ExperimentConfig) -> Result<SparseRuler> {
    let ruler = solve_minimal_ruler(cfg.n)?;
    match cfg.m {
        Some(m) if m > ruler.len() => Ok(extend_ruler(&ruler, m, cfg.seed)?),
        _ => Ok(ruler),
    }
}

fn sweep_mark_counts(cfg: &ExperimentConfig, base: usize) -> Result<Vec<usize>> {
    let ms: Vec<usize> = match (&cfg.ratios, cfg.m) {
        (None, None) => (base..=cfg.n).collect(),
        _ => cfg.branch_counts().into_iter().filter(|&m| m >= base).collect(),
    };
    if ms.is_empty() {
        bail!("every requested M is below the minimal ruler size {base}");
    }
    Ok(ms)
}

/// Slice NMSE against the noise-free truth. Rulers grow from the minimal
/// ruler by random extra marks.
pub fn ccss_nmse_sweep(cfg: &ExperimentConfig) -> Result<Vec<NmseRow>> {
    cfg.validate()?;
    let ruler = solve_minimal_ruler(cfg.n)?;
    let ms = sweep_mark_counts(cfg, ruler.len())?;
    let truths = cfg.q.iter().map(|&q| true_slice(cfg, q)).collect::<Result<Vec<_>>>()?;
    let trials: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let seed = derive_seed(cfg.seed, t as u64);
            let x = signal_blocks(cfg, cfg.max_k(), seed)?;
            let mut out = Vec::new();
            for &m in &ms {
                let marks = extend_ruler(&ruler, m, seed)?;
                let y = compress(&ruler_sampler(&marks), &x)?;
                for &k in &cfg.k {
                    let yk = y.truncated(k)?;
                    for (&q, truth) in cfg.q.iter().zip(&truths) {
                        let s = estimate_slice_with(&yk, &marks, q, cfg.correction)?;
                        out.push(nmse(s.values(), truth.values())?);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut point = 0;
    for &m in &ms {
        for &k in &cfg.k {
            for &q in &cfg.q {
                let vals: Vec<f64> = trials.iter().map(|t| t[point]).collect();
                let (mean_nmse, stderr) = mean_stderr(&vals);
                rows.push(NmseRow { ratio: m as f64 / cfg.n as f64, m, k, q, mean_nmse, stderr, trials: cfg.trials });
                point += 1;
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRow {
    pub q: usize,
    pub tau: i64,
    pub estimate: f64,
    pub truth: f64,
    pub pairs: usize,
}

/// One slice estimate per configured order from a single realization.
pub fn slice_run(cfg: &ExperimentConfig) -> Result<(SparseRuler, Vec<SliceRow>)> {
    cfg.validate()?;
    let ruler = configured_ruler(cfg)?;
    let y = compress(&ruler_sampler(&ruler), &signal_blocks(cfg, cfg.max_k(), cfg.seed)?)?;
    let mut rows = Vec::new();
    for &q in &cfg.q {
        let s = estimate_slice_with(&y, &ruler, q, cfg.correction)?;
        let truth = true_slice(cfg, q)?;
        rows.extend(s.lags().map(|tau| SliceRow {
            q,
            tau,
            estimate: s.get(tau),
            truth: truth.get(tau),
            pairs: s.pair_count(tau),
        }));
    }
    Ok((ruler, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicRun {
    pub ruler: SparseRuler,
    /// One pseudospectrum per configured slice order.
    pub spectra: Vec<(usize, PseudoSpectrum)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub q: usize,
    pub frequency: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakRow {
    pub q: usize,
    /// 1 for the highest peak.
    pub rank: usize,
    pub frequency: f64,
    pub value: f64,
}

/// MUSIC on ruler-compressed harmonic data, once per slice order.
pub fn music_run(cfg: &ExperimentConfig) -> Result<MusicRun> {
    cfg.validate()?;
    ensure!(cfg.signal == SignalKind::Harmonic, "MUSIC runs on the harmonic signal");
    let ruler = configured_ruler(cfg)?;
    let y = compress(&ruler_sampler(&ruler), &signal_blocks(cfg, cfg.max_k(), cfg.seed)?)?;
    let p = cfg.harmonic_model.len();
    let spectra = cfg
        .q
        .iter()
        .map(|&q| {
            let s = estimate_slice_with(&y, &ruler, q, cfg.correction)?;
            Ok((q, music(&s, p, cfg.music_order, cfg.music_grid)?))
        })
        .collect::<Result<_>>()?;
    Ok(MusicRun { ruler, spectra })
}

impl MusicRun {
    pub fn spectrum_rows(&self) -> Vec<SpectrumRow> {
        self.spectra
            .iter()
            .flat_map(|(q, s)| {
                s.grid
                    .iter()
                    .zip(&s.values)
                    .map(|(&frequency, &value)| SpectrumRow { q: *q, frequency, value })
            })
            .collect()
    }

    pub fn peak_rows(&self) -> Vec<PeakRow> {
        let mut rows = Vec::new();
        for (q, s) in &self.spectra {
            let mut peaks: Vec<(f64, f64)> = s
                .grid
                .iter()
                .zip(&s.values)
                .filter(|(g, _)| s.peaks.contains(g))
                .map(|(&g, &v)| (g, v))
                .collect();
            peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
            rows.extend(peaks.into_iter().enumerate().map(|(i, (frequency, value))| PeakRow {
                q: *q,
                rank: i + 1,
                frequency,
                value,
            }));
        }
        rows
    }

    pub fn spectrum(&self, q: usize) -> Option<&PseudoSpectrum> {
        self.spectra.iter().find(|(qq, _)| *qq == q).map(|(_, s)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(kind);
        cfg.trials = 3;
        cfg
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert!((nmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(nmse(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn feasibility_minimums() {
        let t = feasibility_table(20).unwrap();
        assert_eq!(t.min_m_principal, Some(10));
        assert_eq!(t.min_m_hexagon, Some(19));
        assert_eq!(t.rows.len(), 20);
        assert!(t.rows[9].feasible_principal && !t.rows[8].feasible_principal);
    }

    #[test]
    fn c3cs_sweep_is_parallel_invariant() {
        let mut cfg = small(ExperimentKind::C3csMse);
        cfg.n = 8;
        cfg.k = vec![300, 600];
        cfg.ratios = Some("0.5:1.0:0.25".parse().unwrap());
        let a = c3cs_mse_sweep(&cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| c3cs_mse_sweep(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 3 * 2);
        assert_eq!(a[0].m, 4);
        assert_eq!(a.last().unwrap().rank_ok_fraction, 1.0);
    }

    #[test]
    fn recover_both_engines() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::C3csRecover);
        cfg.n = 6;
        cfg.m = Some(6);
        cfg.k = vec![20000];
        let alt = c3cs_recover(&cfg).unwrap();
        assert_eq!(alt.rows.len(), 21);
        assert!(alt.summary.rank_ok);
        assert!(alt.summary.mse < 0.5, "{:?}", alt.summary);
        cfg.engine = Engine::Direct;
        let direct = c3cs_recover(&cfg).unwrap();
        assert_eq!(direct.rows.len(), 91);
        assert!(direct.summary.rank_ok);
        assert!(direct.summary.mse < 0.5, "{:?}", direct.summary);
    }

    #[test]
    fn ccss_sweep_shape() {
        let mut cfg = small(ExperimentKind::CcssNmse);
        cfg.k = vec![500];
        let rows = ccss_nmse_sweep(&cfg).unwrap();
        // minimal ruler for 16 has 7 marks
        assert_eq!(rows.len(), (16 - 7 + 1) * 2);
        assert_eq!(rows[0].m, 7);
        assert!(rows.iter().all(|r| r.mean_nmse.is_finite() && r.mean_nmse >= 0.0));
        cfg.m = Some(3);
        assert!(ccss_nmse_sweep(&cfg).is_err());
    }

    #[test]
    fn slice_run_ma_third_order() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Slice);
        cfg.signal = SignalKind::Ma;
        cfg.n = 8;
        cfg.q = vec![3];
        cfg.k = vec![50000];
        let (ruler, rows) = slice_run(&cfg).unwrap();
        assert!(ruler.is_minimal());
        assert_eq!(rows.len(), 15);
        let est: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
        let truth: Vec<f64> = rows.iter().map(|r| r.truth).collect();
        assert!(nmse(&est, &truth).unwrap() < 0.05);
    }

    #[test]
    fn music_run_outputs() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Music);
        let run = music_run(&cfg).unwrap();
        assert_eq!(run.spectra.len(), 2);
        assert_eq!(run.spectrum_rows().len(), 2 * cfg.music_grid);
        let peaks = run.peak_rows();
        assert!(peaks.iter().any(|p| p.q == 4 && p.rank == 1));
        assert!(run.spectrum(3).is_none());
    }
}
