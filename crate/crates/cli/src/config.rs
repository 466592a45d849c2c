//! Run configuration: one TOML file, every key optional.

use std::path::{Path, PathBuf};

use iris_audit::analysis::ReportConfig;
use iris_audit::corpus::CROP_SIZE;
use iris_audit::encoding::PolarConfig;
use iris_audit::extract::{ExtractConfig, FilterConfig};
use iris_audit::matching::MatcherConfig;
use iris_audit::seed::derive_seed;
use iris_audit::segmentation::{QualityThresholds, SegmentationConfig};
use iris_audit::synth::{RealCorpusSpec, FIDELITY_MAX};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub paths: PathsConfig,
    pub curation: CurationConfig,
    pub segmentation: SegmentationConfig,
    pub quality: QualityThresholds,
    pub encoder: EncoderConfig,
    pub matcher: MatcherConfig,
    pub analysis: ReportConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            paths: PathsConfig::default(),
            curation: CurationConfig::default(),
            segmentation: SegmentationConfig::default(),
            quality: QualityThresholds::default(),
            encoder: EncoderConfig::default(),
            matcher: MatcherConfig::default(),
            analysis: ReportConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out: PathBuf,
    /// Existing real-frame manifest; when unset `synth` renders one.
    pub real_manifest: Option<PathBuf>,
    /// Existing generator outputs, one manifest per snapshot.
    pub fakes: Vec<FakeCorpus>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            out: PathBuf::from("out"),
            real_manifest: None,
            fakes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FakeCorpus {
    pub snapshot: u32,
    pub manifest: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    /// Minimum visible-iris pixel count; unset = 30% of the corpus maximum.
    pub blink_threshold: Option<usize>,
    pub crop_size: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            blink_threshold: None,
            crop_size: CROP_SIZE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub radial: usize,
    pub angular: usize,
    pub filters: usize,
    pub filter_size: usize,
    /// Unset = derived from the global seed.
    pub filter_seed: Option<u64>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        let polar = PolarConfig::default();
        let filters = FilterConfig::default();
        EncoderConfig {
            radial: polar.radial,
            angular: polar.angular,
            filters: filters.k,
            filter_size: filters.size,
            filter_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub identities: usize,
    pub frames_per_identity: usize,
    pub blink_rate: f64,
    pub border_rate: f64,
    pub snapshots: Vec<u32>,
    pub fakes_per_snapshot: u64,
    pub memorization_rate: f64,
    /// Per-snapshot fidelity levels; unset = snapshot number, capped at 14.
    pub fidelity_levels: Option<Vec<u8>>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let real = RealCorpusSpec::default();
        SynthConfig {
            identities: real.identities,
            frames_per_identity: real.frames_per_identity,
            blink_rate: real.blink_rate,
            border_rate: real.border_rate,
            snapshots: (1..=14).collect(),
            fakes_per_snapshot: 200,
            memorization_rate: 0.05,
            fidelity_levels: None,
        }
    }
}

impl SynthConfig {
    pub fn real_spec(&self) -> RealCorpusSpec {
        RealCorpusSpec {
            identities: self.identities,
            frames_per_identity: self.frames_per_identity,
            blink_rate: self.blink_rate,
            border_rate: self.border_rate,
            ..Default::default()
        }
    }

    pub fn fidelity_for(&self, position: usize, snapshot: u32) -> u8 {
        match &self.fidelity_levels {
            Some(levels) => levels[position],
            None => snapshot.clamp(1, FIDELITY_MAX as u32) as u8,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} outside [0, 1]")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn with_overrides(mut self, workers: Option<usize>, seed: Option<u64>) -> Self {
        if let Some(w) = workers {
            self.workers = w;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            segmentation: self.segmentation.clone(),
            quality: self.quality,
            polar: PolarConfig {
                radial: self.encoder.radial,
                angular: self.encoder.angular,
            },
            filters: FilterConfig {
                k: self.encoder.filters,
                size: self.encoder.filter_size,
            },
        }
    }

    pub fn filter_seed(&self) -> u64 {
        self.encoder
            .filter_seed
            .unwrap_or_else(|| derive_seed(self.seed, "encoding"))
    }

    /// Snapshots audited in this run, ascending.
    pub fn snapshots(&self) -> Vec<u32> {
        let mut s: Vec<u32> = if self.paths.fakes.is_empty() {
            self.synth.snapshots.clone()
        } else {
            self.paths.fakes.iter().map(|f| f.snapshot).collect()
        };
        s.sort_unstable();
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if self.curation.crop_size != CROP_SIZE {
            return Err(invalid(format!(
                "crop_size = {} but ISO framing expects {CROP_SIZE}",
                self.curation.crop_size
            )));
        }
        let e = &self.encoder;
        if e.filter_size == 0 || e.filters == 0 || e.filters > e.filter_size * e.filter_size - 1 {
            return Err(invalid(format!(
                "{} filters of side {} is not a valid bank",
                e.filters, e.filter_size
            )));
        }
        if e.radial <= 2 * (e.filter_size / 2) || e.angular < e.filter_size {
            return Err(invalid(format!(
                "polar grid {}x{} too small for filter side {}",
                e.radial, e.angular, e.filter_size
            )));
        }
        self.matcher
            .shifts()
            .validate(e.angular)
            .map_err(|err| invalid(err.to_string()))?;
        if self.matcher.min_overlap == 0 {
            return Err(invalid("min_overlap must be positive"));
        }
        unit_interval(
            "quality.min_usable_fraction",
            self.quality.min_usable_fraction,
        )?;
        let a = &self.analysis;
        if a.far_levels.is_empty() || a.far_levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(invalid("far_levels must be non-empty and inside (0, 1)"));
        }
        if let Some(f) = a.flag_far {
            if !a.far_levels.contains(&f) {
                return Err(invalid(format!("flag_far {f} is not one of far_levels")));
            }
        }
        if a.bins == 0 || a.flag_sigma < 0.0 {
            return Err(invalid("bins must be positive and flag_sigma non-negative"));
        }
        let s = &self.synth;
        if s.identities == 0 || s.frames_per_identity == 0 {
            return Err(invalid(
                "identities and frames_per_identity must be positive",
            ));
        }
        unit_interval("synth.blink_rate", s.blink_rate)?;
        unit_interval("synth.border_rate", s.border_rate)?;
        unit_interval("synth.memorization_rate", s.memorization_rate)?;
        let snaps = self.snapshots();
        if snaps.contains(&0) || snaps.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("snapshots must be distinct and at least 1"));
        }
        if let Some(levels) = &s.fidelity_levels {
            if levels.len() != s.snapshots.len() {
                return Err(invalid("fidelity_levels needs one entry per snapshot"));
            }
            if levels.iter().any(|l| !(1..=FIDELITY_MAX).contains(l)) {
                return Err(invalid(format!(
                    "fidelity levels must lie in 1..={FIDELITY_MAX}"
                )));
            }
        }
        let missing = |p: &Path| CliError::Config(format!("{} does not exist", p.display()));
        if let Some(p) = &self.paths.real_manifest {
            if !p.exists() {
                return Err(missing(p));
            }
        }
        for f in &self.paths.fakes {
            if !f.manifest.exists() {
                return Err(missing(&f.manifest));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.synth.snapshots.len(), 14);
        assert_eq!(cfg.synth.fakes_per_snapshot, 200);
        assert_eq!(cfg.encoder.radial, 64);
        assert_eq!(cfg.matcher.max_shift, 8);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_tables_and_overrides() {
        let cfg: RunConfig = toml::from_str(
            "seed = 9\n[synth]\nidentities = 3\nsnapshots = [2, 1]\n[matcher]\nmax_shift = 4\n[analysis]\nflag_far = 0.01\n",
        )
        .unwrap();
        assert_eq!(
            (cfg.seed, cfg.synth.identities, cfg.matcher.max_shift),
            (9, 3, 4)
        );
        assert_eq!(cfg.synth.frames_per_identity, 20);
        assert_eq!(cfg.snapshots(), vec![1, 2]);
        assert_eq!(cfg.synth.fidelity_for(0, 2), 2);
        cfg.validate().unwrap();
        let o = cfg.with_overrides(Some(3), Some(4));
        assert_eq!((o.workers, o.seed), (3, 4));
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "workers = 0",
            "[matcher]\nmax_shift = 256",
            "[synth]\nmemorization_rate = 1.5",
            "[synth]\nsnapshots = [1, 1]",
            "[synth]\nsnapshots = [1]\nfidelity_levels = [15]",
            "[analysis]\nflag_far = 0.5",
            "[curation]\ncrop_size = 256",
            "[paths]\nreal_manifest = \"/nonexistent/real.jsonl\"",
        ] {
            let cfg: RunConfig = toml::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
