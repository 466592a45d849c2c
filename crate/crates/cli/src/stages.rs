use std::fs;
use std::path::{Path, PathBuf};

use iris_audit::analysis::{
    build_report, heatmap_csv, histogram_svg, roc_svg, LeakageReport, ReportConfig, ReportInputs,
    SnapshotScores,
};
use iris_audit::corpus::{load_entries, mirror_augment, store_entries, CorpusEntry};
use iris_audit::curate::{curate_real, frame_fake, CurationCounts};
use iris_audit::encoding::{build_filter_bank, read_template, write_template, IrisTemplate};
use iris_audit::extract::{extract_batch, meta_for, ExtractError};
use iris_audit::matching::{
    all_pairs, read_score_csv, write_score_csv, MatcherConfig, PairType, ScoreRecord,
};
use iris_audit::seed::derive_seed;
use iris_audit::segmentation::QualityThresholds;
use iris_audit::synth::{render_real_corpus, sample_batch, GeneratorModel, LeakLedger};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CliError, RunConfig};

/// Output directory layout.
#[derive(Clone, Debug)]
pub struct Layout {
    pub out: PathBuf,
}

fn set_name(snapshot: Option<u32>) -> String {
    match snapshot {
        None => "real".into(),
        Some(s) => format!("snap{s:02}"),
    }
}

impl Layout {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Layout { out: out.into() }
    }

    pub fn manifests(&self) -> PathBuf {
        self.out.join("manifests")
    }

    pub fn reports(&self) -> PathBuf {
        self.out.join("reports")
    }

    pub fn plots(&self) -> PathBuf {
        self.out.join("plots")
    }

    pub fn scores(&self) -> PathBuf {
        self.out.join("scores")
    }

    pub fn raw_manifest(&self, snapshot: Option<u32>) -> PathBuf {
        match snapshot {
            None => self.manifests().join("real.jsonl"),
            Some(s) => self.manifests().join(format!("fake_snap{s:02}.jsonl")),
        }
    }

    pub fn raw_images(&self, snapshot: Option<u32>) -> PathBuf {
        self.out.join("corpus/raw").join(set_name(snapshot))
    }

    pub fn curated_manifest(&self, snapshot: Option<u32>) -> PathBuf {
        self.manifests()
            .join(format!("curated_{}.jsonl", set_name(snapshot)))
    }

    pub fn curated_images(&self, snapshot: Option<u32>) -> PathBuf {
        self.out.join("corpus/curated").join(set_name(snapshot))
    }

    pub fn leak_ledger(&self) -> PathBuf {
        self.manifests().join("leak_ledger.json")
    }

    pub fn templates(&self, snapshot: Option<u32>) -> PathBuf {
        self.out.join("templates").join(set_name(snapshot))
    }

    pub fn score_csv(&self, pair_type: PairType, snapshot: Option<u32>) -> PathBuf {
        match snapshot {
            None => self.scores().join(format!("{}.csv", pair_type.as_str())),
            Some(s) => self
                .scores()
                .join(format!("{}_snap{s:02}.csv", pair_type.as_str())),
        }
    }

    pub fn report_json(&self) -> PathBuf {
        self.reports().join("report.json")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn reset_dir(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        fs::remove_dir_all(path).map_err(io_err(path))?;
    }
    fs::create_dir_all(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_text(path, &text)
}

fn require(path: &Path, stage: &'static str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingStage {
            stage,
            path: path.display().to_string(),
        })
    }
}

fn in_pool<T: Send>(
    workers: usize,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?
        .install(f)
}

fn real_manifest(cfg: &RunConfig, layout: &Layout) -> PathBuf {
    cfg.paths
        .real_manifest
        .clone()
        .unwrap_or_else(|| layout.raw_manifest(None))
}

fn fake_manifest(cfg: &RunConfig, layout: &Layout, snapshot: u32) -> PathBuf {
    cfg.paths
        .fakes
        .iter()
        .find(|f| f.snapshot == snapshot)
        .map(|f| f.manifest.clone())
        .unwrap_or_else(|| layout.raw_manifest(Some(snapshot)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub real_entries: usize,
    pub ledgers: Vec<LeakLedger>,
}

/// Render the real corpus and one fake set per snapshot, unless the config
/// points at existing corpora.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary, CliError> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.paths.out);
    in_pool(cfg.workers, || {
        let seed = derive_seed(cfg.seed, "synth");
        let real: Vec<CorpusEntry> = match &cfg.paths.real_manifest {
            Some(p) => load_entries(p)?,
            None => {
                let (entries, _) = render_real_corpus(seed, &cfg.synth.real_spec())?;
                reset_dir(&layout.raw_images(None))?;
                store_entries(
                    &entries,
                    &layout.raw_images(None),
                    &layout.raw_manifest(None),
                )?;
                info!("rendered {} real frames", entries.len());
                entries
            }
        };
        let real_entries = real.len();
        let mut ledgers = Vec::new();
        if cfg.paths.fakes.is_empty() {
            let curated = curate_real(real, cfg.curation.blink_threshold, &cfg.segmentation)?;
            let training = mirror_augment(curated.crops);
            let generator_seed = derive_seed(seed, "generator");
            for (i, &snapshot) in cfg.synth.snapshots.iter().enumerate() {
                let model = GeneratorModel::new(
                    training.clone(),
                    cfg.synth.memorization_rate,
                    cfg.synth.fidelity_for(i, snapshot),
                    snapshot,
                    generator_seed,
                )?;
                let (fakes, ledger) = sample_batch(&model, cfg.synth.fakes_per_snapshot)?;
                let dir = layout.raw_images(Some(snapshot));
                reset_dir(&dir)?;
                store_entries(&fakes, &dir, &layout.raw_manifest(Some(snapshot)))?;
                info!(
                    "snapshot {snapshot}: {} fakes, {} planted leaks",
                    fakes.len(),
                    ledger.leaks.len()
                );
                ledgers.push(ledger);
            }
            write_json(&layout.leak_ledger(), &ledgers)?;
        } else {
            warn!("fake corpora supplied in the config; no generator output rendered");
        }
        Ok(SynthSummary {
            real_entries,
            ledgers,
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FakeCuration {
    pub snapshot: u32,
    pub input: usize,
    pub kept: usize,
    /// Outputs whose size does not match the generator crop.
    pub wrong_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub real: CurationCounts,
    pub fakes: Vec<FakeCuration>,
}

/// Blink-filter, crop and ISO-frame the real frames; ISO-frame the fakes.
pub fn cmd_curate(cfg: &RunConfig) -> Result<CurationReport, CliError> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.paths.out);
    in_pool(cfg.workers, || {
        let manifest = real_manifest(cfg, &layout);
        require(&manifest, "synth")?;
        let curated = curate_real(
            load_entries(&manifest)?,
            cfg.curation.blink_threshold,
            &cfg.segmentation,
        )?;
        reset_dir(&layout.curated_images(None))?;
        store_entries(
            &curated.framed,
            &layout.curated_images(None),
            &layout.curated_manifest(None),
        )?;
        info!("real frames: {:?}", curated.counts);

        let mut fakes = Vec::new();
        for snapshot in cfg.snapshots() {
            let manifest = fake_manifest(cfg, &layout, snapshot);
            require(&manifest, "synth")?;
            let entries = load_entries(&manifest)?;
            let framed: Vec<Option<CorpusEntry>> =
                entries.par_iter().map(|e| frame_fake(e).ok()).collect();
            let kept: Vec<CorpusEntry> = framed.into_iter().flatten().collect();
            let dir = layout.curated_images(Some(snapshot));
            reset_dir(&dir)?;
            store_entries(&kept, &dir, &layout.curated_manifest(Some(snapshot)))?;
            fakes.push(FakeCuration {
                snapshot,
                input: entries.len(),
                kept: kept.len(),
                wrong_size: entries.len() - kept.len(),
            });
        }
        let report = CurationReport {
            real: curated.counts,
            fakes,
        };
        write_json(&layout.reports().join("curation.json"), &report)?;
        Ok(report)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractFailure {
    pub id: String,
    pub stage: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetExtraction {
    pub set: String,
    pub input: usize,
    pub passed: usize,
    pub segmentation_failures: usize,
    pub quality_failures: usize,
    pub encoding_failures: usize,
    pub failures: Vec<ExtractFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub filter_seed: u64,
    pub quality: QualityThresholds,
    pub sets: Vec<SetExtraction>,
}

fn failure_detail(e: &ExtractError) -> String {
    match e {
        ExtractError::Quality(q) => {
            let reasons: Vec<String> = q.reasons.iter().map(|r| format!("{r:?}")).collect();
            format!(
                "{} (usable {:.3}, texture {:.3}, contrast {:.1})",
                reasons.join(","),
                q.usable_fraction,
                q.texture_energy,
                q.boundary_contrast
            )
        }
        other => other.to_string(),
    }
}

fn extract_set(
    cfg: &RunConfig,
    layout: &Layout,
    snapshot: Option<u32>,
    bank: &iris_audit::encoding::FilterBank,
) -> Result<SetExtraction, CliError> {
    let manifest = layout.curated_manifest(snapshot);
    require(&manifest, "curate")?;
    let entries = load_entries(&manifest)?;
    let items: Vec<_> = entries
        .iter()
        .map(|e| (e.image.clone(), meta_for(e)))
        .collect();
    drop(entries);
    let results = extract_batch(&items, bank, &cfg.extract_config());
    let dir = layout.templates(snapshot);
    reset_dir(&dir)?;
    results
        .par_iter()
        .filter_map(|r| r.as_ref().ok())
        .try_for_each(|t| write_template(t, &dir.join(format!("{}.irt", t.meta.id))))?;
    let mut s = SetExtraction {
        set: set_name(snapshot),
        input: items.len(),
        passed: 0,
        segmentation_failures: 0,
        quality_failures: 0,
        encoding_failures: 0,
        failures: Vec::new(),
    };
    for ((_, meta), r) in items.iter().zip(&results) {
        match r {
            Ok(_) => s.passed += 1,
            Err(e) => {
                match e {
                    ExtractError::Segmentation(_) => s.segmentation_failures += 1,
                    ExtractError::Quality(_) => s.quality_failures += 1,
                    ExtractError::Encoding(_) => s.encoding_failures += 1,
                }
                s.failures.push(ExtractFailure {
                    id: meta.id.clone(),
                    stage: e.stage().into(),
                    detail: failure_detail(e),
                });
            }
        }
    }
    info!("{}: {} of {} images passed", s.set, s.passed, s.input);
    Ok(s)
}

/// One template file per image that passes segmentation and the quality gate.
pub fn cmd_extract(cfg: &RunConfig) -> Result<ExtractionReport, CliError> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.paths.out);
    in_pool(cfg.workers, || {
        let bank = build_filter_bank(
            cfg.filter_seed(),
            cfg.encoder.filters,
            cfg.encoder.filter_size,
        )?;
        let mut sets = vec![extract_set(cfg, &layout, None, &bank)?];
        for s in cfg.snapshots() {
            sets.push(extract_set(cfg, &layout, Some(s), &bank)?);
        }
        let report = ExtractionReport {
            filter_seed: bank.seed(),
            quality: cfg.quality,
            sets,
        };
        write_json(&layout.reports().join("extraction.json"), &report)?;
        Ok(report)
    })
}

fn load_templates(dir: &Path) -> Result<Vec<IrisTemplate>, CliError> {
    require(dir, "extract")?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "irt"))
        .collect();
    paths.sort();
    paths
        .par_iter()
        .map(|p| read_template(p).map_err(CliError::from))
        .collect()
}

fn split(records: Vec<ScoreRecord>, pair_type: PairType) -> Vec<ScoreRecord> {
    records
        .into_iter()
        .filter(|r| r.pair_type == pair_type)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub genuine: usize,
    pub impostor_rr: usize,
    /// `(snapshot, R-F count, F-F count)`.
    pub snapshots: Vec<(u32, usize, usize)>,
}

/// Genuine and R-R tables once, R-F and F-F per snapshot.
pub fn cmd_match(cfg: &RunConfig) -> Result<MatchSummary, CliError> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.paths.out);
    let m: MatcherConfig = cfg.matcher;
    in_pool(cfg.workers, || {
        let real = load_templates(&layout.templates(None))?;
        let within = all_pairs(&real, &real, &m, cfg.workers)?;
        let genuine = split(within.clone(), PairType::Genuine);
        let rr = split(within, PairType::ImpostorRR);
        write_score_csv(
            &genuine,
            m.orientation,
            &layout.score_csv(PairType::Genuine, None),
        )?;
        write_score_csv(
            &rr,
            m.orientation,
            &layout.score_csv(PairType::ImpostorRR, None),
        )?;
        let mut summary = MatchSummary {
            genuine: genuine.len(),
            impostor_rr: rr.len(),
            snapshots: Vec::new(),
        };
        for s in cfg.snapshots() {
            let fakes = load_templates(&layout.templates(Some(s)))?;
            let rf = all_pairs(&real, &fakes, &m, cfg.workers)?;
            let ff = all_pairs(&fakes, &fakes, &m, cfg.workers)?;
            write_score_csv(
                &rf,
                m.orientation,
                &layout.score_csv(PairType::ImpostorRF, Some(s)),
            )?;
            write_score_csv(
                &ff,
                m.orientation,
                &layout.score_csv(PairType::ImpostorFF, Some(s)),
            )?;
            summary.snapshots.push((s, rf.len(), ff.len()));
        }
        info!("scored {summary:?}");
        Ok(summary)
    })
}

/// Report document: the leakage report plus the settings it depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub seed: u64,
    pub matcher: MatcherConfig,
    /// Quality thresholds in force, including the calibrated texture floor.
    pub quality: QualityThresholds,
    pub report: LeakageReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOutcome {
    pub leak_detected: bool,
    pub snapshots_flagged: Vec<u32>,
    pub report: PathBuf,
}

fn read_scores(
    layout: &Layout,
    pair_type: PairType,
    snapshot: Option<u32>,
    min_overlap: u64,
) -> Result<Vec<ScoreRecord>, CliError> {
    let path = layout.score_csv(pair_type, snapshot);
    require(&path, "match")?;
    Ok(read_score_csv(&path, min_overlap)?)
}

/// Leakage report, plots and the audit verdict.
pub fn cmd_report(cfg: &RunConfig) -> Result<ReportOutcome, CliError> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.paths.out);
    let min = cfg.matcher.min_overlap;
    let mut real = read_scores(&layout, PairType::Genuine, None, min)?;
    real.extend(read_scores(&layout, PairType::ImpostorRR, None, min)?);
    let mut snapshots = Vec::new();
    for s in cfg.snapshots() {
        snapshots.push(SnapshotScores {
            snapshot: s,
            rf: read_scores(&layout, PairType::ImpostorRF, Some(s), min)?,
            ff: read_scores(&layout, PairType::ImpostorFF, Some(s), min)?,
        });
    }
    let rc = ReportConfig {
        orientation: cfg.matcher.orientation,
        ..cfg.analysis.clone()
    };
    let report = build_report(
        &ReportInputs {
            real: &real,
            snapshots: &snapshots,
        },
        &rc,
    )?;

    let plots = layout.plots();
    for s in &report.snapshots {
        let dists: Vec<_> = [
            &report.genuine,
            &report.impostor_rr,
            &s.impostor_rf,
            &s.impostor_ff,
        ]
        .into_iter()
        .flatten()
        .collect();
        let svg = histogram_svg(
            &format!("Score distributions, snapshot {}", s.snapshot),
            &dists,
            rc.bins,
        );
        write_text(
            &plots.join(format!("distributions_snap{:02}.svg", s.snapshot)),
            &svg,
        )?;
    }
    let mut curves = Vec::new();
    if let Some(c) = &report.roc_rr {
        curves.push(("genuine vs R-R".to_string(), c));
    }
    for s in &report.snapshots {
        if let Some(c) = &s.roc {
            curves.push((format!("genuine vs R-F snapshot {}", s.snapshot), c));
        }
    }
    write_text(&plots.join("roc.svg"), &roc_svg("ROC", &curves))?;
    write_text(&plots.join("heatmap.csv"), &heatmap_csv(&report.heatmap))?;

    let outcome = ReportOutcome {
        leak_detected: report.verdict.leak_detected,
        snapshots_flagged: report.verdict.snapshots_flagged.clone(),
        report: layout.report_json(),
    };
    let doc = AuditReport {
        seed: cfg.seed,
        matcher: cfg.matcher,
        quality: cfg.quality,
        report,
    };
    write_json(&layout.report_json(), &doc)?;
    Ok(outcome)
}

/// Every stage in order.
pub fn run_all(cfg: &RunConfig) -> Result<ReportOutcome, CliError> {
    cmd_synth(cfg)?;
    cmd_curate(cfg)?;
    cmd_extract(cfg)?;
    cmd_match(cfg)?;
    cmd_report(cfg)
}
