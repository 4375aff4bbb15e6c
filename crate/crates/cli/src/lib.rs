//! Experiment harness for the `cumsense` command-line tool: JSON configs,
//! Monte-Carlo sweeps and CSV output with provenance headers.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;

use anyhow::Result;
pub use cumsense_core;

use config::{ExperimentConfig, ExperimentKind};
use experiments::*;
use output::RunOutput;

/// Runs one configured experiment, writes its files into `dir` and returns
/// a human-readable summary.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<String> {
    cfg.validate()?;
    let mut out = RunOutput::create(dir, cfg)?;
    let mut summary = String::new();
    match cfg.experiment {
        ExperimentKind::Feasibility => {
            let table = feasibility_table(cfg.n)?;
            out.csv("feasibility.csv", &table.rows)?;
            let show = |m: Option<usize>| m.map_or_else(|| "none".to_string(), |m| m.to_string());
            summary = format!(
                "N = {}: min M (principal region) = {}, min M (hexagonal support) = {}",
                cfg.n,
                show(table.min_m_principal),
                show(table.min_m_hexagon)
            );
        }
        ExperimentKind::Ruler => {
            let ruler = cumsense_core::sampler::solve_minimal_ruler(cfg.n)?;
            let rows: Vec<Vec<String>> = ruler.marks().iter().map(|m| vec![m.to_string()]).collect();
            out.table("ruler.csv", &["mark".to_string()], &rows)?;
            let marks: Vec<String> = ruler.marks().iter().map(|m| m.to_string()).collect();
            summary = marks.join(",");
        }
        ExperimentKind::Gen => {
            let x = signal_blocks(cfg, cfg.max_k(), cfg.seed)?;
            let header: Vec<String> = std::iter::once("block".to_string())
                .chain((0..cfg.n).map(|i| format!("x{i}")))
                .collect();
            let rows: Vec<Vec<String>> = x
                .blocks()
                .enumerate()
                .map(|(k, b)| std::iter::once(k.to_string()).chain(b.iter().map(f64::to_string)).collect())
                .collect();
            out.table("blocks.csv", &header, &rows)?;
            summary = format!("{} blocks of length {}", x.block_count(), cfg.n);
        }
        ExperimentKind::C3csMse => {
            let rows = c3cs_mse_sweep(cfg)?;
            out.csv("c3cs_mse.csv", &rows)?;
            for r in &rows {
                summary += &format!("M/N = {:.3}  K = {:>6}  MSE = {:.4e} (+/- {:.1e})\n", r.ratio, r.k, r.mean_mse, r.stderr);
            }
        }
        ExperimentKind::C3csRecover => {
            let rec = c3cs_recover(cfg)?;
            out.csv("c3cs_recover.csv", &rec.rows)?;
            out.json("c3cs_recover.json", &rec.summary)?;
            let s = &rec.summary;
            summary = format!(
                "rank {}/{} (rank_ok = {}), residual {:.3e}, MSE {:.4e}",
                s.rank, s.expected_rank, s.rank_ok, s.residual_norm, s.mse
            );
            if let Some(ms) = rec.runtime_ms {
                summary += &format!(", solve {ms:.1} ms");
            }
        }
        ExperimentKind::CcssNmse => {
            let rows = ccss_nmse_sweep(cfg)?;
            out.csv("ccss_nmse.csv", &rows)?;
            for r in &rows {
                summary += &format!("q = {}  M/N = {:.3}  K = {:>6}  NMSE = {:.4e}\n", r.q, r.ratio, r.k, r.mean_nmse);
            }
        }
        ExperimentKind::Slice => {
            let (ruler, rows) = slice_run(cfg)?;
            out.csv("slice.csv", &rows)?;
            summary = format!("{} marks: {:?}", ruler.len(), ruler.marks());
        }
        ExperimentKind::Music => {
            let run = music_run(cfg)?;
            out.csv("music_spectrum.csv", &run.spectrum_rows())?;
            out.csv("music_peaks.csv", &run.peak_rows())?;
            for (q, s) in &run.spectra {
                summary += &format!("q = {q}: dominant peaks at {:?}\n", s.dominant_peaks(cfg.harmonic_model.len()));
            }
        }
    }
    out.finish()?;
    Ok(summary.trim_end().to_string())
}
