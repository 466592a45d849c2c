//! Assembly of the per-run leakage report.

use serde::{Deserialize, Serialize};

use super::{
    binomial_band, distribution_shift, estimate_dof, far_thresholds, flag_leaks, heatmap_cell, roc,
    scores_of, summarize, AnalysisError, DistributionShift, DofEstimate, FarThreshold, FlaggedPair,
    HeatCell, Heatmap, RocCurve, ScoreDistribution, DEFAULT_FAR_LEVELS,
};
use crate::matching::{Orientation, PairType, ScoreRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub orientation: Orientation,
    pub far_levels: Vec<f64>,
    pub bins: usize,
    /// FAR level used for flagging; `None` picks the strictest attainable.
    pub flag_far: Option<f64>,
    /// Width of the binomial band on the expected false-flag count.
    pub flag_sigma: f64,
    /// ROC points kept in the serialized report.
    pub roc_points: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            orientation: Orientation::Distance,
            far_levels: DEFAULT_FAR_LEVELS.to_vec(),
            bins: 100,
            flag_far: None,
            flag_sigma: 3.0,
            roc_points: 1000,
        }
    }
}

pub struct SnapshotScores {
    pub snapshot: u32,
    pub rf: Vec<ScoreRecord>,
    pub ff: Vec<ScoreRecord>,
}

pub struct ReportInputs<'a> {
    /// Genuine and R-R records from the real set.
    pub real: &'a [ScoreRecord],
    pub snapshots: &'a [SnapshotScores],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub snapshot: u32,
    pub impostor_rf: Option<ScoreDistribution>,
    pub impostor_ff: Option<ScoreDistribution>,
    /// Genuine vs R-F.
    pub roc: Option<RocCurve>,
    pub shift: Option<DistributionShift>,
    pub dof: Option<DofEstimate>,
    pub heatmap_row: Vec<HeatCell>,
    pub insufficient_overlap: usize,
    pub flag_threshold: Option<f64>,
    pub flagged_pairs: Vec<FlaggedPair>,
    pub expected_false_flags: f64,
    pub false_flag_upper: f64,
    pub leak_detected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub flag_level: Option<f64>,
    pub leak_detected: bool,
    pub snapshots_flagged: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub orientation: Orientation,
    pub thresholds: Vec<FarThreshold>,
    pub genuine: Option<ScoreDistribution>,
    pub impostor_rr: Option<ScoreDistribution>,
    /// Genuine vs R-R.
    pub roc_rr: Option<RocCurve>,
    pub dof_rr: Option<DofEstimate>,
    pub snapshots: Vec<SnapshotReport>,
    pub heatmap: Heatmap,
    pub verdict: Verdict,
}

fn check_orientation(records: &[ScoreRecord], o: Orientation) -> Result<(), AnalysisError> {
    for r in records {
        if let Ok(s) = &r.outcome {
            if s.orientation != o {
                return Err(AnalysisError::OrientationError(s.orientation, o));
            }
        }
    }
    Ok(())
}

pub fn build_report(
    inputs: &ReportInputs,
    config: &ReportConfig,
) -> Result<LeakageReport, AnalysisError> {
    let o = config.orientation;
    check_orientation(inputs.real, o)?;
    for s in inputs.snapshots {
        check_orientation(&s.rf, o)?;
        check_orientation(&s.ff, o)?;
    }
    let genuine = summarize(
        &scores_of(inputs.real, PairType::Genuine),
        PairType::Genuine,
        o,
        config.bins,
    )
    .ok();
    let rr = summarize(
        &scores_of(inputs.real, PairType::ImpostorRR),
        PairType::ImpostorRR,
        o,
        config.bins,
    )
    .ok();
    let thresholds = match &rr {
        Some(rr) => far_thresholds(rr, &config.far_levels),
        None => config
            .far_levels
            .iter()
            .map(|&level| FarThreshold::UnattainableFar {
                level,
                min_level: f64::INFINITY,
            })
            .collect(),
    };
    let flag = match config.flag_far {
        Some(level) => thresholds.iter().find(|t| t.level() == level).copied(),
        None => thresholds
            .iter()
            .filter(|t| t.threshold().is_some())
            .min_by(|a, b| a.level().total_cmp(&b.level()))
            .copied(),
    };
    let flag = flag.filter(|t| t.threshold().is_some());

    let roc_rr = match (&genuine, &rr) {
        (Some(g), Some(r)) => Some(roc(g, r)?.decimate(config.roc_points)),
        _ => None,
    };
    let dof_rr = match (&rr, o) {
        (Some(r), Orientation::Distance) => estimate_dof(r).ok(),
        _ => None,
    };

    let mut snapshots = Vec::with_capacity(inputs.snapshots.len());
    for s in inputs.snapshots {
        let rf_scores = scores_of(&s.rf, PairType::ImpostorRF);
        let rf = summarize(&rf_scores, PairType::ImpostorRF, o, config.bins).ok();
        let ff = summarize(
            &scores_of(&s.ff, PairType::ImpostorFF),
            PairType::ImpostorFF,
            o,
            config.bins,
        )
        .ok();
        let roc_rf = match (&genuine, &rf) {
            (Some(g), Some(f)) => Some(roc(g, f)?.decimate(config.roc_points)),
            _ => None,
        };
        let shift = match (&rr, &rf) {
            (Some(a), Some(b)) => distribution_shift(a, b).ok(),
            _ => None,
        };
        let dof = match (&rf, o) {
            (Some(f), Orientation::Distance) => estimate_dof(f).ok(),
            _ => None,
        };
        let heatmap_row = thresholds
            .iter()
            .map(|t| heatmap_cell(&rf_scores, t, o))
            .collect();
        let (flag_threshold, flagged_pairs, expected, upper) = match flag {
            Some(t) => {
                let th = t.threshold().expect("filtered to attainable");
                let (_, hi) = binomial_band(rf_scores.len(), t.level(), config.flag_sigma);
                (
                    Some(th),
                    flag_leaks(&s.rf, th, o),
                    rf_scores.len() as f64 * t.level(),
                    hi,
                )
            }
            None => (None, Vec::new(), 0.0, 0.0),
        };
        snapshots.push(SnapshotReport {
            snapshot: s.snapshot,
            impostor_rf: rf,
            impostor_ff: ff,
            roc: roc_rf,
            shift,
            dof,
            heatmap_row,
            insufficient_overlap: s.rf.iter().filter(|r| r.outcome.is_err()).count(),
            leak_detected: flag.is_some() && flagged_pairs.len() as f64 > upper,
            flag_threshold,
            flagged_pairs,
            expected_false_flags: expected,
            false_flag_upper: upper,
        });
    }
    let heatmap = Heatmap {
        levels: thresholds.iter().map(FarThreshold::level).collect(),
        snapshots: snapshots.iter().map(|s| s.snapshot).collect(),
        cells: (0..thresholds.len())
            .map(|i| snapshots.iter().map(|s| s.heatmap_row[i]).collect())
            .collect(),
    };
    let snapshots_flagged: Vec<u32> = snapshots
        .iter()
        .filter(|s| s.leak_detected)
        .map(|s| s.snapshot)
        .collect();
    Ok(LeakageReport {
        orientation: o,
        thresholds,
        genuine,
        impostor_rr: rr,
        roc_rr,
        dof_rr,
        verdict: Verdict {
            flag_level: flag.map(|t| t.level()),
            leak_detected: !snapshots_flagged.is_empty(),
            snapshots_flagged,
        },
        snapshots,
        heatmap,
    })
}
