use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use cumsense_core::ccss::FourthOrderCorrection;
use cumsense_core::music::{DEFAULT_GRID, DEFAULT_ORDER};
use cumsense_core::signal::{ColoredNoiseModel, HarmonicModel, MaModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Feasibility,
    Ruler,
    Gen,
    C3csMse,
    C3csRecover,
    CcssNmse,
    Slice,
    Music,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Feasibility => "feasibility",
            Self::Ruler => "ruler",
            Self::Gen => "gen",
            Self::C3csMse => "c3cs-mse",
            Self::C3csRecover => "c3cs-recover",
            Self::CcssNmse => "ccss-nmse",
            Self::Slice => "slice",
            Self::Music => "music",
        }
    }

    fn uses_harmonics(self) -> bool {
        matches!(self, Self::CcssNmse | Self::Slice | Self::Music)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Ma,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Alternative,
    Direct,
}

/// Which compact lag set the alternative engine solves for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LagMap {
    Principal,
    Hexagon,
}

/// Inclusive `lo:hi:step` sweep of compression ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl RatioSweep {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }

    /// Branch counts `round(ratio * N)`, deduplicated in sweep order.
    pub fn branch_counts(&self, n: usize) -> Vec<usize> {
        let mut ms: Vec<usize> = Vec::new();
        for r in self.values() {
            let m = (r * n as f64).round() as usize;
            if !ms.contains(&m) {
                ms.push(m);
            }
        }
        ms
    }
}

impl std::str::FromStr for RatioSweep {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            bail!("expected lo:hi:step, got {s:?}");
        };
        Ok(Self {
            lo: lo.trim().parse().context("ratio lo")?,
            hi: hi.trim().parse().context("ratio hi")?,
            step: step.trim().parse().context("ratio step")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Block length.
    pub n: usize,
    /// Fixed branch count; sweeps use `ratios` when set.
    pub m: Option<usize>,
    pub ratios: Option<RatioSweep>,
    /// Number of blocks, one sweep point per entry.
    pub k: Vec<usize>,
    /// Slice orders.
    pub q: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub signal: SignalKind,
    pub ma_model: MaModel,
    pub harmonic_model: HarmonicModel,
    pub noise: Option<ColoredNoiseModel>,
    pub engine: Engine,
    pub lag_map: LagMap,
    /// Block lags `L` kept by the direct engine.
    pub block_lags: usize,
    pub correction: FourthOrderCorrection,
    pub music_order: usize,
    pub music_grid: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let harmonic = kind.uses_harmonics();
        Self {
            experiment: kind,
            n: if harmonic { 16 } else { 20 },
            m: match kind {
                ExperimentKind::C3csRecover => Some(12),
                _ => None,
            },
            ratios: match kind {
                ExperimentKind::C3csMse => Some(RatioSweep { lo: 0.5, hi: 1.0, step: 0.1 }),
                _ => None,
            },
            k: match kind {
                ExperimentKind::C3csMse => vec![2000, 10000],
                ExperimentKind::CcssNmse => vec![1000, 4000],
                ExperimentKind::Music | ExperimentKind::Slice => vec![4096],
                _ => vec![10000],
            },
            q: match kind {
                ExperimentKind::Slice => vec![4],
                _ => vec![2, 4],
            },
            trials: 50,
            seed: 1,
            signal: if harmonic { SignalKind::Harmonic } else { SignalKind::Ma },
            ma_model: MaModel::skewed_ma3(),
            harmonic_model: HarmonicModel::two_tone(),
            noise: match kind {
                ExperimentKind::Music => Some(ColoredNoiseModel::arma_pole_04(0.0)),
                _ => None,
            },
            engine: Engine::Alternative,
            lag_map: LagMap::Principal,
            block_lags: 1,
            correction: FourthOrderCorrection::Pooled,
            music_order: DEFAULT_ORDER,
            music_grid: DEFAULT_GRID,
            out: None,
        }
    }

    /// Reads a JSON config. Fields left out take the defaults of the named
    /// experiment.
    pub fn from_json(text: &str) -> Result<Self> {
        let given: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let serde_json::Value::Object(given) = given else {
            bail!("config must be a JSON object");
        };
        let kind: ExperimentKind = serde_json::from_value(
            given
                .get("experiment")
                .cloned()
                .context("config is missing \"experiment\"")?,
        )
        .context("unknown experiment kind")?;
        let serde_json::Value::Object(mut merged) = serde_json::to_value(Self::defaults(kind))? else {
            unreachable!("config serializes to an object");
        };
        merged.extend(given);
        serde_json::from_value(serde_json::Value::Object(merged)).context("invalid config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form. The output directory is left out:
    /// it does not change any result.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    /// Noise model for `--snr-db`: keeps the configured coloring, or picks
    /// the experiment's standard one.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        match &mut self.noise {
            Some(noise) => noise.target_snr_db = snr_db,
            None => {
                self.noise = Some(match self.signal {
                    SignalKind::Ma => ColoredNoiseModel::ma5(snr_db),
                    SignalKind::Harmonic => ColoredNoiseModel::arma_pole_04(snr_db),
                })
            }
        }
    }

    /// Branch counts for sweeps, in sweep order.
    pub fn branch_counts(&self) -> Vec<usize> {
        match (&self.ratios, self.m) {
            (Some(r), _) => r.branch_counts(self.n),
            (None, Some(m)) => vec![m],
            (None, None) => (1..=self.n).collect(),
        }
    }

    pub fn max_k(&self) -> usize {
        self.k.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        ensure!(self.n >= 2, "n must be at least 2");
        ensure!(self.n <= 4096, "n = {} is too large", self.n);
        if let Some(m) = self.m {
            ensure!((1..=self.n).contains(&m), "m must lie in 1..=n");
        }
        if let Some(r) = &self.ratios {
            ensure!(
                r.lo.is_finite() && r.hi.is_finite() && r.step.is_finite(),
                "ratios must be finite"
            );
            ensure!(r.step > 0.0 && r.lo > 0.0 && r.lo <= r.hi && r.hi <= 1.0, "ratios need 0 < lo <= hi <= 1 and step > 0");
            ensure!(
                r.branch_counts(self.n).iter().all(|&m| m >= 1),
                "a ratio rounds to zero branches"
            );
        }
        ensure!(!self.k.is_empty(), "k needs at least one block count");
        ensure!(self.k.iter().all(|&k| k >= 1), "block counts must be positive");
        ensure!(self.trials >= 1, "trials must be positive");
        ensure!(!self.q.is_empty(), "q needs at least one order");
        ensure!(self.q.iter().all(|q| (2..=4).contains(q)), "slice orders must be 2, 3 or 4");
        self.ma_model.validate()?;
        self.harmonic_model.validate()?;
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if kind == ExperimentKind::Music {
            ensure!(self.q.iter().all(|&q| q != 3), "MUSIC needs an even slice order");
            ensure!(
                self.music_order > 2 * self.harmonic_model.len() && self.music_order <= self.n,
                "MUSIC order must exceed twice the harmonic count and not exceed n"
            );
            ensure!(self.music_grid >= 3, "MUSIC grid needs at least 3 points");
        }
        if kind == ExperimentKind::C3csRecover && self.engine == Engine::Direct {
            ensure!(self.block_lags >= 1, "direct engine needs at least one block lag");
            ensure!(self.max_k() > 2 * self.block_lags, "need more blocks than 2L");
            ensure!(self.signal == SignalKind::Ma, "direct engine runs on the MA signal");
        }
        if matches!(kind, ExperimentKind::C3csMse | ExperimentKind::C3csRecover) {
            ensure!(self.signal == SignalKind::Ma, "C3CS experiments use the MA signal");
            ensure!(self.n <= 64, "C3CS experiments support n <= 64");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        for kind in [
            ExperimentKind::Feasibility,
            ExperimentKind::C3csMse,
            ExperimentKind::CcssNmse,
            ExperimentKind::Music,
        ] {
            let mut cfg = ExperimentConfig::defaults(kind);
            cfg.set_snr_db(-3.5);
            cfg.out = Some("x/y".into());
            let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
        }
    }

    #[test]
    fn partial_json_takes_experiment_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "music", "seed": 9}"#).unwrap();
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.seed, 9);
        assert!(cfg.noise.is_some());
        assert!(ExperimentConfig::from_json(r#"{"n": 4}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "music", "bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::defaults(ExperimentKind::C3csMse);
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn ratio_sweep_parsing() {
        let r: RatioSweep = "0.5:1.0:0.1".parse().unwrap();
        assert_eq!(r.values().len(), 6);
        assert_eq!(r.branch_counts(20), vec![10, 12, 14, 16, 18, 20]);
        assert!("0.5:1.0".parse::<RatioSweep>().is_err());
        assert!("a:1:0.1".parse::<RatioSweep>().is_err());
    }

    #[test]
    fn validation_rejects_bad_input() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::C3csMse);
        cfg.validate().unwrap();
        cfg.k.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Music);
        cfg.music_order = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::C3csRecover);
        cfg.m = Some(21);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Slice);
        // pole at 1.5: unstable
        cfg.noise = Some(ColoredNoiseModel {
            ma_coefficients: vec![1.0],
            ar_coefficients: vec![1.0, -1.5],
            target_snr_db: 0.0,
        });
        assert!(cfg.validate().is_err());
    }
}
