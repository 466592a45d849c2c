//! Real-frame curation: blink filter, pupil-centred crop, ISO framing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    blink_filter, center_crop, default_blink_threshold, iso_frame, CorpusEntry, CorpusError,
    CROP_SIZE,
};
use crate::segmentation::{locate_pupil, SegmentationConfig};

/// Per-stage rejection counts; `input = blink + no_pupil + border + kept`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationCounts {
    pub input: usize,
    pub blink_threshold: usize,
    pub blink: usize,
    pub no_pupil: usize,
    pub border: usize,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curated {
    /// Pupil-centred `CROP_SIZE` crops (generator training input).
    pub crops: Vec<CorpusEntry>,
    /// The same crops in 640x480 ISO framing (template extraction input).
    pub framed: Vec<CorpusEntry>,
    pub counts: CurationCounts,
}

/// Curate real frames. `blink_threshold` defaults to 30% of the largest mask
/// coverage. Output order follows the input order.
pub fn curate_real(
    entries: Vec<CorpusEntry>,
    blink_threshold: Option<usize>,
    seg: &SegmentationConfig,
) -> Result<Curated, CorpusError> {
    let input = entries.len();
    let threshold = match blink_threshold {
        Some(t) => t,
        None => default_blink_threshold(&entries)?,
    };
    let (kept, discarded) = blink_filter(entries, threshold)?;
    enum Step {
        Ok(Box<(CorpusEntry, CorpusEntry)>),
        NoPupil,
        Border,
    }
    let steps: Vec<Step> = kept
        .par_iter()
        .map(|e| {
            let Ok(p) = locate_pupil(&e.image, seg) else {
                return Ok(Step::NoPupil);
            };
            let center = (p.cx.round() as i64, p.cy.round() as i64);
            match center_crop(e, center, CROP_SIZE) {
                Ok(crop) => {
                    let framed = CorpusEntry {
                        image: iso_frame(&crop.image)?,
                        mask: None,
                        ..crop.clone()
                    };
                    Ok(Step::Ok(Box::new((crop, framed))))
                }
                Err(CorpusError::BorderViolation { .. }) => Ok(Step::Border),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, CorpusError>>()?;
    let mut counts = CurationCounts {
        input,
        blink_threshold: threshold,
        blink: discarded.len(),
        ..Default::default()
    };
    let mut crops = Vec::new();
    let mut framed = Vec::new();
    for s in steps {
        match s {
            Step::Ok(pair) => {
                let (c, f) = *pair;
                crops.push(c);
                framed.push(f);
            }
            Step::NoPupil => counts.no_pupil += 1,
            Step::Border => counts.border += 1,
        }
    }
    counts.kept = crops.len();
    Ok(Curated {
        crops,
        framed,
        counts,
    })
}

/// ISO-frame a generator output.
pub fn frame_fake(entry: &CorpusEntry) -> Result<CorpusEntry, CorpusError> {
    Ok(CorpusEntry {
        image: iso_frame(&entry.image)?,
        mask: None,
        ..entry.clone()
    })
}
