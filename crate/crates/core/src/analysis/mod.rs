//! Score-table analysis: distributions, ROC, FAR thresholds, leakage
//! heatmaps, flagged pairs, difference images and degrees of freedom.

mod dof;
mod plot;
mod report;

pub use dof::{estimate_dof, predict_effective_bits, DofEstimate, EffectiveBits};
pub use plot::{heatmap_csv, histogram_svg, roc_svg};
pub use report::{
    build_report, LeakageReport, ReportConfig, ReportInputs, SnapshotReport, SnapshotScores,
    Verdict,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RawImage;
use crate::matching::{Orientation, PairType, ScoreRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} scores, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("orientation mismatch: {0:?} vs {1:?}")]
    OrientationError(Orientation, Orientation),
    #[error("distribution has zero spread")]
    DegenerateDistribution,
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

pub const DEFAULT_QUANTILES: [f64; 9] = [0.001, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999];
pub const DEFAULT_FAR_LEVELS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub pair_type: PairType,
    pub orientation: Orientation,
    /// Sorted ascending. Omitted from serialized reports.
    #[serde(skip)]
    pub scores: Vec<f64>,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    /// `(p, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub histogram: Histogram,
}

/// Linear-interpolation quantile of sorted data at `h = (n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(
    scores: &[f64],
    pair_type: PairType,
    orientation: Orientation,
    bins: usize,
) -> Result<ScoreDistribution, AnalysisError> {
    summarize_with(scores, pair_type, orientation, bins, &DEFAULT_QUANTILES)
}

pub fn summarize_with(
    scores: &[f64],
    pair_type: PairType,
    orientation: Orientation,
    bins: usize,
    quantile_set: &[f64],
) -> Result<ScoreDistribution, AnalysisError> {
    if scores.len() < 2 {
        return Err(AnalysisError::InsufficientData {
            needed: 2,
            got: scores.len(),
        });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let bins = bins.max(1);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in &sorted {
        let b = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    Ok(ScoreDistribution {
        pair_type,
        orientation,
        count: sorted.len(),
        mean,
        std: var.sqrt(),
        quantiles: quantile_set
            .iter()
            .map(|&p| (p, quantile(&sorted, p)))
            .collect(),
        histogram: Histogram { edges, counts },
        scores: sorted,
    })
}

/// Valid scores of one pair type.
pub fn scores_of(records: &[ScoreRecord], pair_type: PairType) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.pair_type == pair_type)
        .filter_map(ScoreRecord::score)
        .collect()
}

/// Map scores so that "accepting" always means small values.
fn accept_key(v: f64, orientation: Orientation) -> f64 {
    match orientation {
        Orientation::Distance => v,
        Orientation::Similarity => -v,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(FPR, TPR)` sorted by FPR.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// Evenly thinned copy with at most `max_points` points, endpoints kept.
    pub fn decimate(&self, max_points: usize) -> RocCurve {
        let n = self.points.len();
        if n <= max_points || max_points < 2 {
            return self.clone();
        }
        let points = (0..max_points)
            .map(|i| self.points[i * (n - 1) / (max_points - 1)])
            .collect();
        RocCurve {
            points,
            auc: self.auc,
        }
    }
}

/// ROC with genuine as the positive class, swept over every distinct score
/// plus infinite sentinels.
pub fn roc(
    genuine: &ScoreDistribution,
    impostor: &ScoreDistribution,
) -> Result<RocCurve, AnalysisError> {
    if genuine.orientation != impostor.orientation {
        return Err(AnalysisError::OrientationError(
            genuine.orientation,
            impostor.orientation,
        ));
    }
    for d in [genuine, impostor] {
        if d.scores.is_empty() {
            return Err(AnalysisError::InsufficientData { needed: 1, got: 0 });
        }
    }
    let o = genuine.orientation;
    let key = |s: &[f64]| {
        let mut v: Vec<f64> = s.iter().map(|&x| accept_key(x, o)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (g, i) = (key(&genuine.scores), key(&impostor.scores));
    let (ng, ni) = (g.len() as f64, i.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut gi, mut ii) = (0, 0);
    while gi < g.len() || ii < i.len() {
        let t = match (g.get(gi), i.get(ii)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while gi < g.len() && g[gi] <= t {
            gi += 1;
        }
        while ii < i.len() && i[ii] <= t {
            ii += 1;
        }
        points.push((ii as f64 / ni, gi as f64 / ng));
    }
    // +inf sentinel coincides with the last point; keep it explicit
    points.push((1.0, 1.0));
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FarThreshold {
    Attainable { level: f64, threshold: f64 },
    UnattainableFar { level: f64, min_level: f64 },
}

impl FarThreshold {
    pub fn level(&self) -> f64 {
        match *self {
            FarThreshold::Attainable { level, .. }
            | FarThreshold::UnattainableFar { level, .. } => level,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            FarThreshold::Attainable { threshold, .. } => Some(threshold),
            FarThreshold::UnattainableFar { .. } => None,
        }
    }
}

/// Empirical impostor quantile at each FAR level on the accepting side.
pub fn far_thresholds(impostor_rr: &ScoreDistribution, levels: &[f64]) -> Vec<FarThreshold> {
    let n = impostor_rr.scores.len();
    let min_level = if n == 0 {
        f64::INFINITY
    } else {
        1.0 / n as f64
    };
    levels
        .iter()
        .map(|&level| {
            if n == 0 || level < min_level {
                return FarThreshold::UnattainableFar { level, min_level };
            }
            let p = match impostor_rr.orientation {
                Orientation::Distance => level,
                Orientation::Similarity => 1.0 - level,
            };
            FarThreshold::Attainable {
                level,
                threshold: quantile(&impostor_rr.scores, p),
            }
        })
        .collect()
}

/// Inclusive acceptance test.
pub fn beyond(score: f64, threshold: f64, orientation: Orientation) -> bool {
    match orientation {
        Orientation::Distance => score <= threshold,
        Orientation::Similarity => score >= threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HeatCell {
    Value {
        percent: f64,
        count: usize,
        total: usize,
    },
    EmptyCell,
    UnattainableFar,
}

impl HeatCell {
    pub fn percent(&self) -> Option<f64> {
        match *self {
            HeatCell::Value { percent, .. } => Some(percent),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub levels: Vec<f64>,
    pub snapshots: Vec<u32>,
    /// `cells[level][snapshot]`.
    pub cells: Vec<Vec<HeatCell>>,
}

pub fn heatmap_cell(rf: &[f64], threshold: &FarThreshold, orientation: Orientation) -> HeatCell {
    let Some(t) = threshold.threshold() else {
        return HeatCell::UnattainableFar;
    };
    if rf.is_empty() {
        return HeatCell::EmptyCell;
    }
    let count = rf.iter().filter(|&&s| beyond(s, t, orientation)).count();
    HeatCell::Value {
        percent: 100.0 * count as f64 / rf.len() as f64,
        count,
        total: rf.len(),
    }
}

pub fn leakage_heatmap(
    rf_by_snapshot: &[(u32, Vec<f64>)],
    thresholds: &[FarThreshold],
    orientation: Orientation,
) -> Heatmap {
    Heatmap {
        levels: thresholds.iter().map(FarThreshold::level).collect(),
        snapshots: rf_by_snapshot.iter().map(|(s, _)| *s).collect(),
        cells: thresholds
            .iter()
            .map(|t| {
                rf_by_snapshot
                    .iter()
                    .map(|(_, scores)| heatmap_cell(scores, t, orientation))
                    .collect()
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPair {
    pub id_a: String,
    pub id_b: String,
    pub score: f64,
    /// Distance past the threshold toward the genuine side (>= 0).
    pub margin: f64,
}

/// Pairs at or beyond `threshold`, most severe first.
pub fn flag_leaks(
    records: &[ScoreRecord],
    threshold: f64,
    orientation: Orientation,
) -> Vec<FlaggedPair> {
    let mut out: Vec<FlaggedPair> = records
        .iter()
        .filter_map(|r| {
            let s = r.score()?;
            beyond(s, threshold, orientation).then(|| FlaggedPair {
                id_a: r.id_a.clone(),
                id_b: r.id_b.clone(),
                score: s,
                margin: accept_key(threshold, orientation) - accept_key(s, orientation),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.margin
            .total_cmp(&a.margin)
            .then_with(|| (&a.id_a, &a.id_b).cmp(&(&b.id_a, &b.id_b)))
    });
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffSummary {
    pub mean_abs: f64,
    pub max_abs: u8,
}

pub fn diff_image(
    real: &RawImage,
    fake: &RawImage,
) -> Result<(RawImage, DiffSummary), AnalysisError> {
    if real.width() != fake.width() || real.height() != fake.height() {
        return Err(AnalysisError::DimensionMismatch(
            real.width(),
            real.height(),
            fake.width(),
            fake.height(),
        ));
    }
    let px: Vec<u8> = real
        .pixels()
        .iter()
        .zip(fake.pixels())
        .map(|(&a, &b)| a.abs_diff(b))
        .collect();
    let sum: u64 = px.iter().map(|&v| v as u64).sum();
    let summary = DiffSummary {
        mean_abs: sum as f64 / px.len() as f64,
        max_abs: px.iter().copied().max().unwrap_or(0),
    };
    let img = RawImage::new(real.width(), real.height(), px).expect("dimensions checked");
    Ok((img, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionShift {
    pub ks_statistic: f64,
    pub extreme_quantile_delta: f64,
}

pub const MIN_SHIFT_SAMPLES: usize = 100;

pub fn ks_statistic(a_sorted: &[f64], b_sorted: &[f64]) -> f64 {
    let (na, nb) = (a_sorted.len() as f64, b_sorted.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a_sorted.len() && j < b_sorted.len() {
        let t = a_sorted[i].min(b_sorted[j]);
        while i < a_sorted.len() && a_sorted[i] <= t {
            i += 1;
        }
        while j < b_sorted.len() && b_sorted[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS statistic plus the shift of the genuine-leaning extreme quantile.
/// A positive delta means the R-F tail reaches further toward genuine.
pub fn distribution_shift(
    rr: &ScoreDistribution,
    rf: &ScoreDistribution,
) -> Result<DistributionShift, AnalysisError> {
    if rr.orientation != rf.orientation {
        return Err(AnalysisError::OrientationError(
            rr.orientation,
            rf.orientation,
        ));
    }
    let got = rr.scores.len().min(rf.scores.len());
    if got < MIN_SHIFT_SAMPLES {
        return Err(AnalysisError::InsufficientData {
            needed: MIN_SHIFT_SAMPLES,
            got,
        });
    }
    let extreme_quantile_delta = match rr.orientation {
        Orientation::Distance => quantile(&rr.scores, 0.001) - quantile(&rf.scores, 0.001),
        Orientation::Similarity => quantile(&rf.scores, 0.999) - quantile(&rr.scores, 0.999),
    };
    Ok(DistributionShift {
        ks_statistic: ks_statistic(&rr.scores, &rf.scores),
        extreme_quantile_delta,
    })
}

/// `(mean - k sd, mean + k sd)` of a Binomial(n, p) count.
pub fn binomial_band(n: usize, p: f64, k_sigma: f64) -> (f64, f64) {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (mean - k_sigma * sd, mean + k_sigma * sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{MatchScore, PairType::*};
    use Orientation::*;

    fn dist(v: &[f64], o: Orientation) -> ScoreDistribution {
        summarize(v, ImpostorRR, o, 10).unwrap()
    }

    /// Independent oracle: brute-force AUC over all genuine/impostor pairs.
    fn mann_whitney(g: &[f64], i: &[f64], o: Orientation) -> f64 {
        let mut s = 0.0;
        for &a in g {
            for &b in i {
                let (a, b) = (accept_key(a, o), accept_key(b, o));
                s += if a < b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (g.len() * i.len()) as f64
    }

    /// Independent oracle: quantile by explicit order statistics.
    fn quantile_oracle(v: &[f64], p: f64) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = p * (s.len() as f64 - 1.0);
        let k = pos as usize;
        if k + 1 >= s.len() {
            return s[s.len() - 1];
        }
        s[k] * (1.0 - (pos - k as f64)) + s[k + 1] * (pos - k as f64)
    }

    #[test]
    fn summarize_examples() {
        let d = summarize(&[0.0, 1.0], Genuine, Distance, 2).unwrap();
        assert_eq!(d.mean, 0.5);
        assert_eq!(d.histogram.counts, vec![1, 1]);
        let c = summarize(&[0.3; 5], Genuine, Distance, 4).unwrap();
        assert_eq!(c.std, 0.0);
        assert_eq!(c.histogram.counts.iter().filter(|&&n| n > 0).count(), 1);
        assert!(matches!(
            summarize(&[1.0], Genuine, Distance, 4),
            Err(AnalysisError::InsufficientData { needed: 2, got: 1 })
        ));
        let ten = [0.42, 0.11, 0.93, 0.35, 0.5, 0.27, 0.81, 0.66, 0.05, 0.74];
        let d =
            summarize_with(&ten, Genuine, Distance, 5, &[0.0, 0.1, 0.33, 0.5, 0.9, 1.0]).unwrap();
        for &(p, q) in &d.quantiles {
            assert!((q - quantile_oracle(&ten, p)).abs() < 1e-12, "p={p}");
        }
        assert_eq!(d.histogram.counts.iter().sum::<u64>(), 10);
    }

    #[test]
    fn roc_examples() {
        let g = dist(&[0.1, 0.2], Distance);
        let i = dist(&[0.15, 0.3], Distance);
        let r = roc(&g, &i).unwrap();
        assert!((r.auc - 0.75).abs() < 1e-12);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        assert!(r
            .points
            .windows(2)
            .all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));

        let sep = roc(&dist(&[0.0, 0.1], Distance), &dist(&[0.5, 0.6], Distance)).unwrap();
        assert_eq!(sep.auc, 1.0);
        let same = roc(
            &dist(&[0.2, 0.4, 0.4], Distance),
            &dist(&[0.2, 0.4, 0.4], Distance),
        )
        .unwrap();
        assert!((same.auc - 0.5).abs() < 1e-9);
        let sim = roc(
            &dist(&[0.9, 0.8], Similarity),
            &dist(&[0.85, 0.7], Similarity),
        )
        .unwrap();
        assert!((sim.auc - 0.75).abs() < 1e-12);
        assert!(matches!(
            roc(&dist(&[0.1, 0.2], Distance), &dist(&[0.1, 0.2], Similarity)),
            Err(AnalysisError::OrientationError(..))
        ));
    }

    #[test]
    fn auc_matches_mann_whitney() {
        let mut rng = crate::seed::rng_for(3, "auc");
        use rand::Rng;
        for o in [Distance, Similarity] {
            let g: Vec<f64> = (0..300)
                .map(|_| (rng.gen_range(0..40) as f64) / 100.0)
                .collect();
            let i: Vec<f64> = (0..700)
                .map(|_| (rng.gen_range(20..70) as f64) / 100.0)
                .collect();
            let r = roc(&dist(&g, o), &dist(&i, o)).unwrap();
            assert!((r.auc - mann_whitney(&g, &i, o)).abs() < 1e-9);
        }
    }

    #[test]
    fn far_threshold_examples() {
        let u: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        let d = dist(&u, Distance);
        let t = far_thresholds(&d, &[1e-2, 1e-3, 1e-6]);
        // h = 999 * 0.01 = 9.99 between the 10th and 11th order statistics
        let oracle = u[9] + 0.99 * (u[10] - u[9]);
        assert!((t[0].threshold().unwrap() - oracle).abs() < 1e-12);
        assert!((t[0].threshold().unwrap() - 0.01).abs() < 2e-3);
        assert!(t[1].threshold().unwrap() < t[0].threshold().unwrap());
        assert!(matches!(t[2], FarThreshold::UnattainableFar { .. }));
        let s = far_thresholds(&dist(&u, Similarity), &[1e-2, 1e-3]);
        assert!(s[0].threshold().unwrap() < s[1].threshold().unwrap());
        assert!(s[0].threshold().unwrap() > 0.98);
    }

    #[test]
    fn heatmap_examples() {
        let t = FarThreshold::Attainable {
            level: 1e-2,
            threshold: 0.2,
        };
        assert_eq!(heatmap_cell(&[0.3, 0.5], &t, Distance).percent(), Some(0.0));
        assert_eq!(
            heatmap_cell(&[0.1, 0.2], &t, Distance).percent(),
            Some(100.0)
        );
        assert_eq!(heatmap_cell(&[], &t, Distance), HeatCell::EmptyCell);
        let u = FarThreshold::UnattainableFar {
            level: 1e-6,
            min_level: 1e-3,
        };
        let h = leakage_heatmap(&[(1, vec![0.1, 0.4]), (2, vec![])], &[t, u], Distance);
        assert_eq!(h.cells[0][0].percent(), Some(50.0));
        assert_eq!(h.cells[0][1], HeatCell::EmptyCell);
        assert_eq!(h.cells[1][0], HeatCell::UnattainableFar);
    }

    fn rec(a: &str, b: &str, v: f64) -> ScoreRecord {
        ScoreRecord {
            id_a: a.into(),
            id_b: b.into(),
            pair_type: ImpostorRF,
            outcome: Ok(MatchScore {
                value: v,
                orientation: Distance,
                best_shift: 0,
                overlap: 2000,
            }),
        }
    }

    #[test]
    fn flag_examples() {
        assert!(flag_leaks(&[], 0.3, Distance).is_empty());
        let f = flag_leaks(
            &[rec("a", "x", 0.3), rec("b", "y", 0.45), rec("c", "z", 0.02)],
            0.3,
            Distance,
        );
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].id_a, "c");
        assert_eq!(f[1].margin, 0.0);
    }

    #[test]
    fn diff_examples() {
        let a = RawImage::new(3, 1, vec![0, 100, 255]).unwrap();
        let (d, s) = diff_image(&a, &a).unwrap();
        assert!(d.pixels().iter().all(|&v| v == 0));
        assert_eq!(s.mean_abs, 0.0);
        let inv = RawImage::new(3, 1, vec![255, 155, 0]).unwrap();
        let (d, s) = diff_image(&a, &inv).unwrap();
        assert_eq!(d.pixels(), &[255, 55, 255]);
        assert_eq!(s.max_abs, 255);
        assert!(diff_image(&a, &RawImage::filled(2, 1, 0)).is_err());
    }

    #[test]
    fn shifted_copy_diff_matches_pixel_loop() {
        let (w, h) = (40, 30);
        let img =
            RawImage::new(w, h, (0..w * h).map(|i| ((i * 37) % 251) as u8).collect()).unwrap();
        let mut shifted = RawImage::filled(w, h, 0);
        for y in 0..h {
            for x in 2..w {
                shifted.set(x, y, img.get(x - 2, y));
            }
        }
        let (_, s) = diff_image(&img, &shifted).unwrap();
        let mut total = 0i64;
        for y in 0..h {
            for x in 0..w {
                total += (img.get(x, y) as i64 - shifted.get(x, y) as i64).abs();
            }
        }
        assert!(total > 0);
        assert!((s.mean_abs - total as f64 / (w * h) as f64).abs() < 1e-12);
    }

    #[test]
    fn shift_examples() {
        let v: Vec<f64> = (0..500)
            .map(|i| 0.4 + 0.2 * ((i * 7919) % 500) as f64 / 500.0)
            .collect();
        let a = dist(&v, Distance);
        let s = distribution_shift(&a, &a).unwrap();
        assert_eq!((s.ks_statistic, s.extreme_quantile_delta), (0.0, 0.0));
        let far: Vec<f64> = v.iter().map(|x| x + 10.0).collect();
        assert_eq!(
            distribution_shift(&a, &dist(&far, Distance))
                .unwrap()
                .ks_statistic,
            1.0
        );

        // 1% planted low-distance outliers
        let mut mixed = v.clone();
        for x in mixed.iter_mut().take(5) {
            *x = 0.05;
        }
        let m = distribution_shift(&a, &dist(&mixed, Distance)).unwrap();
        assert!(m.extreme_quantile_delta > 0.3);
        let mean_v = v.iter().sum::<f64>() / 500.0;
        let mean_m = mixed.iter().sum::<f64>() / 500.0;
        assert!((mean_v - mean_m).abs() < 0.01);
        assert!(matches!(
            distribution_shift(&dist(&v[..50], Distance), &a),
            Err(AnalysisError::InsufficientData {
                needed: 100,
                got: 50
            })
        ));
    }
}
