//! Image-to-template pipeline: segmentation, quality gate, normalisation,
//! encoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusEntry, RawImage};
use crate::encoding::{
    encode, rubber_sheet, EncodingError, FilterBank, IrisTemplate, PolarConfig, TemplateMeta,
};
use crate::segmentation::{
    assess_quality, segment, QualityAssessment, QualityThresholds, SegmentationConfig,
    SegmentationError,
};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("segmentation failed: {0}")]
    Segmentation(#[from] SegmentationError),
    #[error("quality gate rejected the image: {:?}", .0.reasons)]
    Quality(QualityAssessment),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

impl ExtractError {
    /// Short stage label for rejection accounting.
    pub fn stage(&self) -> &'static str {
        match self {
            ExtractError::Segmentation(_) => "segmentation",
            ExtractError::Quality(_) => "quality",
            ExtractError::Encoding(_) => "encoding",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub k: usize,
    pub size: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { k: 8, size: 9 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub segmentation: SegmentationConfig,
    pub quality: QualityThresholds,
    pub polar: PolarConfig,
    pub filters: FilterConfig,
}

pub fn extract(
    image: &RawImage,
    meta: TemplateMeta,
    bank: &FilterBank,
    config: &ExtractConfig,
) -> Result<IrisTemplate, ExtractError> {
    let seg = segment(image, &config.segmentation)?;
    let quality = assess_quality(image, &seg, &config.quality);
    if !quality.pass {
        return Err(ExtractError::Quality(quality));
    }
    let polar = rubber_sheet(image, &seg, config.polar.radial, config.polar.angular)?;
    let mut template = encode(&polar, bank)?;
    template.meta = TemplateMeta {
        quality: Some(quality),
        ..meta
    };
    Ok(template)
}

/// Template metadata for a corpus entry (quality is filled in by `extract`).
pub fn meta_for(entry: &CorpusEntry) -> TemplateMeta {
    TemplateMeta {
        id: entry.id(),
        identity: entry.identity.clone(),
        origin: entry.origin,
        quality: None,
    }
}

/// Extract a batch in input order using the current rayon pool.
pub fn extract_batch(
    items: &[(RawImage, TemplateMeta)],
    bank: &FilterBank,
    config: &ExtractConfig,
) -> Vec<Result<IrisTemplate, ExtractError>> {
    items
        .par_iter()
        .map(|(img, meta)| extract(img, meta.clone(), bank, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_filter_bank;

    #[test]
    fn blank_frame_is_rejected_not_encoded() {
        let img = RawImage::filled(640, 480, 128);
        let bank = build_filter_bank(1, 8, 9).unwrap();
        let err = extract(
            &img,
            TemplateMeta::default(),
            &bank,
            &ExtractConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.stage(), "segmentation");
    }
}
