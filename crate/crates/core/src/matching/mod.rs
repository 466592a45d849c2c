//! Template comparison: masked fractional Hamming distance with rotation
//! compensation, score orientation and the all-pairs engine.

pub mod bits;
mod table;

pub use table::{read_score_csv, write_score_csv, TableError, CSV_HEADER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{IrisTemplate, TemplateDims, TemplateMeta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("joint mask overlap below {min} bits at every shift (best {best_overlap})")]
    InsufficientOverlap { best_overlap: u64, min: u64 },
    #[error("template dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: TemplateDims, b: TemplateDims },
    #[error("max shift {max_shift} must be below half of {cols} columns")]
    InvalidShiftRange { max_shift: u32, cols: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Symmetric angular search `-max_shift..=max_shift` (columns).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftRange {
    pub max_shift: u32,
}

impl Default for ShiftRange {
    fn default() -> Self {
        ShiftRange { max_shift: 8 }
    }
}

impl ShiftRange {
    pub fn new(max_shift: u32) -> Self {
        ShiftRange { max_shift }
    }

    pub fn validate(&self, cols: usize) -> Result<(), MatchError> {
        if 2 * self.max_shift as usize >= cols {
            return Err(MatchError::InvalidShiftRange {
                max_shift: self.max_shift,
                cols,
            });
        }
        Ok(())
    }

    /// Shifts in tie-break priority order: 0, -1, +1, -2, +2, ...
    pub fn ordered(&self) -> Vec<i64> {
        let mut v = vec![0];
        for s in 1..=self.max_shift as i64 {
            v.push(-s);
            v.push(s);
        }
        v
    }

    pub fn len(&self) -> usize {
        2 * self.max_shift as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Low scores mean the same iris.
    Distance,
    /// High scores mean the same iris.
    Similarity,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::Distance => "distance",
            Orientation::Similarity => "similarity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "distance" => Some(Orientation::Distance),
            "similarity" => Some(Orientation::Similarity),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub value: f64,
    pub orientation: Orientation,
    pub best_shift: i32,
    pub overlap: u64,
}

/// Convert between distance and similarity (`v -> 1 - v`).
pub fn orient(score: MatchScore, target: Orientation) -> MatchScore {
    if score.orientation == target {
        return score;
    }
    MatchScore {
        value: 1.0 - score.value,
        orientation: target,
        ..score
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum PairType {
    Genuine,
    ImpostorRR,
    ImpostorRF,
    ImpostorFF,
}

impl PairType {
    pub const ALL: [PairType; 4] = [
        PairType::Genuine,
        PairType::ImpostorRR,
        PairType::ImpostorRF,
        PairType::ImpostorFF,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PairType::Genuine => "genuine",
            PairType::ImpostorRR => "impostor_rr",
            PairType::ImpostorRF => "impostor_rf",
            PairType::ImpostorFF => "impostor_ff",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PairType::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

pub fn classify_pair(a: &TemplateMeta, b: &TemplateMeta) -> PairType {
    match (a.origin.is_real(), b.origin.is_real()) {
        (true, true) if a.identity == b.identity => PairType::Genuine,
        (true, true) => PairType::ImpostorRR,
        (false, false) => PairType::ImpostorFF,
        _ => PairType::ImpostorRF,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    pub max_shift: u32,
    pub min_overlap: u64,
    pub orientation: Orientation,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            max_shift: 8,
            min_overlap: 1024,
            orientation: Orientation::Distance,
        }
    }
}

impl MatcherConfig {
    pub fn shifts(&self) -> ShiftRange {
        ShiftRange::new(self.max_shift)
    }
}

/// Raw counts at one shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftCount {
    pub shift: i64,
    pub disagree: u64,
    pub overlap: u64,
}

fn check_dims(a: &IrisTemplate, b: &IrisTemplate) -> Result<TemplateDims, MatchError> {
    if a.dims() != b.dims() {
        return Err(MatchError::DimensionMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    Ok(a.dims())
}

/// `b` rotated by every shift of a range, in priority order.
pub struct RotatedTemplate {
    shifts: Vec<i64>,
    code: Vec<u64>,
    mask: Vec<u64>,
    words: usize,
}

impl RotatedTemplate {
    pub fn new(t: &IrisTemplate, shifts: &ShiftRange) -> Self {
        let mut r = RotatedTemplate {
            shifts: Vec::new(),
            code: Vec::new(),
            mask: Vec::new(),
            words: 0,
        };
        r.fill(t, shifts);
        r
    }

    /// Reuse the buffers for another template.
    pub fn fill(&mut self, t: &IrisTemplate, shifts: &ShiftRange) {
        let d = t.dims();
        self.shifts = shifts.ordered();
        self.words = d.words();
        self.code.resize(self.words * self.shifts.len(), 0);
        self.mask.resize(self.words * self.shifts.len(), 0);
        let wpr = d.words_per_ring();
        for (i, &s) in self.shifts.iter().enumerate() {
            let range = i * self.words..(i + 1) * self.words;
            bits::rotate_rings(
                t.code_words(),
                d.cols,
                wpr,
                s,
                &mut self.code[range.clone()],
            );
            bits::rotate_rings(t.mask_words(), d.cols, wpr, s, &mut self.mask[range]);
        }
    }

    fn counts<'a>(&'a self, a: &'a IrisTemplate) -> impl Iterator<Item = ShiftCount> + 'a {
        let (ac, am) = (&a.code_words()[..self.words], &a.mask_words()[..self.words]);
        self.shifts.iter().enumerate().map(move |(i, &shift)| {
            let range = i * self.words..(i + 1) * self.words;
            let (disagree, overlap) =
                bits::masked_disagreement(ac, am, &self.code[range.clone()], &self.mask[range]);
            ShiftCount {
                shift,
                disagree,
                overlap,
            }
        })
    }

    /// Best score of `a` against this rotated template.
    pub fn score_against(
        &self,
        a: &IrisTemplate,
        min_overlap: u64,
    ) -> Result<MatchScore, MatchError> {
        select_best(self.counts(a), min_overlap)
    }

    /// Scores of several templates against this one, identical to calling
    /// [`Self::score_against`] on each. Works word-tile by word-tile so the
    /// rotated copies stay in cache.
    pub fn score_block(
        &self,
        block: &[&IrisTemplate],
        min_overlap: u64,
    ) -> Vec<Result<MatchScore, MatchError>> {
        const TILE: usize = 128;
        let ns = self.shifts.len();
        let mut disagree = vec![0u64; block.len() * ns];
        let mut overlap = vec![0u64; block.len() * ns];
        let mut start = 0;
        while start < self.words {
            let end = (start + TILE).min(self.words);
            for s in 0..ns {
                let off = s * self.words;
                let (bc, bm) = (
                    &self.code[off + start..off + end],
                    &self.mask[off + start..off + end],
                );
                for (j, a) in block.iter().enumerate() {
                    let (d, o) = bits::masked_disagreement(
                        &a.code_words()[start..end],
                        &a.mask_words()[start..end],
                        bc,
                        bm,
                    );
                    disagree[j * ns + s] += d;
                    overlap[j * ns + s] += o;
                }
            }
            start = end;
        }
        (0..block.len())
            .map(|j| {
                let counts = self
                    .shifts
                    .iter()
                    .enumerate()
                    .map(|(s, &shift)| ShiftCount {
                        shift,
                        disagree: disagree[j * ns + s],
                        overlap: overlap[j * ns + s],
                    });
                select_best(counts, min_overlap)
            })
            .collect()
    }
}

/// Lowest fraction among shifts with enough overlap; earlier shifts win ties.
fn select_best(
    counts: impl Iterator<Item = ShiftCount>,
    min_overlap: u64,
) -> Result<MatchScore, MatchError> {
    let mut best: Option<ShiftCount> = None;
    let mut best_overlap = 0;
    for c in counts {
        best_overlap = best_overlap.max(c.overlap);
        if c.overlap < min_overlap.max(1) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                (c.disagree as u128) * (b.overlap as u128)
                    < (b.disagree as u128) * (c.overlap as u128)
            }
        };
        if better {
            best = Some(c);
        }
    }
    match best {
        Some(b) => Ok(MatchScore {
            value: b.disagree as f64 / b.overlap as f64,
            orientation: Orientation::Distance,
            best_shift: b.shift as i32,
            overlap: b.overlap,
        }),
        None => Err(MatchError::InsufficientOverlap {
            best_overlap,
            min: min_overlap,
        }),
    }
}

/// Counts at every shift, in priority order (0, -1, +1, ...).
pub fn shift_profile(
    a: &IrisTemplate,
    b: &IrisTemplate,
    shifts: &ShiftRange,
) -> Result<Vec<ShiftCount>, MatchError> {
    let d = check_dims(a, b)?;
    shifts.validate(d.cols)?;
    Ok(RotatedTemplate::new(b, shifts).counts(a).collect())
}

/// Minimum masked fractional Hamming distance over circular shifts of `b`.
pub fn fractional_hd(
    a: &IrisTemplate,
    b: &IrisTemplate,
    config: &MatcherConfig,
) -> Result<MatchScore, MatchError> {
    let d = check_dims(a, b)?;
    let shifts = config.shifts();
    shifts.validate(d.cols)?;
    RotatedTemplate::new(b, &shifts).score_against(a, config.min_overlap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub id_a: String,
    pub id_b: String,
    pub pair_type: PairType,
    pub outcome: Result<MatchScore, MatchError>,
}

impl ScoreRecord {
    pub fn score(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|s| s.value)
    }
}

fn validate_set(templates: &[&IrisTemplate], config: &MatcherConfig) -> Result<(), MatchError> {
    if let Some(first) = templates.first() {
        for t in templates {
            check_dims(first, t)?;
        }
        config.shifts().validate(first.dims().cols)?;
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, MatchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| MatchError::Pool(e.to_string()))
}

const BLOCK: usize = 16;

/// Records of every template in `a_side` against `tb`.
fn score_side(
    a_side: &[&IrisTemplate],
    tb: &IrisTemplate,
    r: &RotatedTemplate,
    config: &MatcherConfig,
) -> Vec<ScoreRecord> {
    let mut out = Vec::with_capacity(a_side.len());
    for chunk in a_side.chunks(BLOCK) {
        for (ta, outcome) in chunk.iter().zip(r.score_block(chunk, config.min_overlap)) {
            out.push(ScoreRecord {
                id_a: ta.meta.id.clone(),
                id_b: tb.meta.id.clone(),
                pair_type: classify_pair(&ta.meta, &tb.meta),
                outcome: outcome.map(|s| orient(s, config.orientation)),
            });
        }
    }
    out
}

fn sort_records(records: &mut [ScoreRecord]) {
    records.sort_by(|x, y| (&x.id_a, &x.id_b).cmp(&(&y.id_a, &y.id_b)));
}

/// Score every pair of `a x b`. When both arguments are the same slice, only
/// the `n(n-1)/2` unordered pairs are scored. Output is sorted by
/// `(id_a, id_b)` independently of `workers`.
pub fn all_pairs(
    a: &[IrisTemplate],
    b: &[IrisTemplate],
    config: &MatcherConfig,
    workers: usize,
) -> Result<Vec<ScoreRecord>, MatchError> {
    if std::ptr::eq(a, b) {
        all_pairs_within(a, config, workers)
    } else {
        all_pairs_cross(a, b, config, workers)
    }
}

pub fn all_pairs_cross(
    a: &[IrisTemplate],
    b: &[IrisTemplate],
    config: &MatcherConfig,
    workers: usize,
) -> Result<Vec<ScoreRecord>, MatchError> {
    use rayon::prelude::*;
    let all: Vec<&IrisTemplate> = a.iter().chain(b).collect();
    validate_set(&all, config)?;
    let shifts = config.shifts();
    let a_side: Vec<&IrisTemplate> = a.iter().collect();
    let mut records: Vec<ScoreRecord> = pool(workers)?.install(|| {
        b.par_iter()
            .map_init(
                || None::<RotatedTemplate>,
                |cache, tb| {
                    let rotated = match cache {
                        Some(r) => {
                            r.fill(tb, &shifts);
                            r
                        }
                        None => cache.insert(RotatedTemplate::new(tb, &shifts)),
                    };
                    score_side(&a_side, tb, rotated, config)
                },
            )
            .flatten_iter()
            .collect()
    });
    sort_records(&mut records);
    Ok(records)
}

pub fn all_pairs_within(
    set: &[IrisTemplate],
    config: &MatcherConfig,
    workers: usize,
) -> Result<Vec<ScoreRecord>, MatchError> {
    use rayon::prelude::*;
    let mut sorted: Vec<&IrisTemplate> = set.iter().collect();
    validate_set(&sorted, config)?;
    sorted.sort_by(|x, y| x.meta.id.cmp(&y.meta.id));
    let shifts = config.shifts();
    let mut records: Vec<ScoreRecord> = pool(workers)?.install(|| {
        (1..sorted.len())
            .into_par_iter()
            .map_init(
                || None::<RotatedTemplate>,
                |cache, j| {
                    let tb = sorted[j];
                    let rotated = match cache {
                        Some(r) => {
                            r.fill(tb, &shifts);
                            r
                        }
                        None => cache.insert(RotatedTemplate::new(tb, &shifts)),
                    };
                    score_side(&sorted[..j], tb, rotated, config)
                },
            )
            .flatten_iter()
            .collect()
    });
    sort_records(&mut records);
    Ok(records)
}
