//! Corpus curation: blink filtering, pupil-centred cropping, mirroring and
//! ISO framing of generator outputs.

mod io;

pub use io::{
    load_entries, load_mask, load_png, read_manifest, save_mask, save_png, store_entries,
    write_manifest, ManifestRecord,
};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("image dimensions must be positive and match the pixel buffer ({width}x{height}, {len} pixels)")]
    InvalidImage {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("entry {identity}#{frame} has no segmentation mask")]
    MissingMask { identity: String, frame: u32 },
    #[error("crop window of size {size} around ({x}, {y}) exceeds the {width}x{height} frame")]
    BorderViolation {
        x: i64,
        y: i64,
        size: usize,
        width: usize,
        height: usize,
    },
    #[error("expected {expected_w}x{expected_h} input, got {width}x{height}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        width: usize,
        height: usize,
    },
    #[error("{path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Manifest {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// 8-bit grayscale frame, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, CorpusError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(CorpusError::InvalidImage {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(RawImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("positive dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }
}

/// Binary iris-region mask; `true` marks visible iris texture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SegMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, CorpusError> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(CorpusError::InvalidImage {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(SegMask {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("positive dimensions")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits).expect("positive dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    RealTraining,
    Synthetic { snapshot: u32, seed: u64 },
}

impl Origin {
    pub fn is_real(&self) -> bool {
        matches!(self, Origin::RealTraining)
    }

    fn sort_key(&self) -> (u8, u32, u64) {
        match *self {
            Origin::RealTraining => (0, 0, 0),
            Origin::Synthetic { snapshot, seed } => (1, snapshot, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub image: RawImage,
    pub mask: Option<SegMask>,
    pub identity: String,
    pub frame_index: u32,
    pub origin: Origin,
    pub mirrored: bool,
}

impl CorpusEntry {
    /// Stable identifier used for template ids and score tables.
    pub fn id(&self) -> String {
        entry_id(
            &self.origin,
            &self.identity,
            self.frame_index,
            self.mirrored,
        )
    }
}

pub fn entry_id(origin: &Origin, identity: &str, frame: u32, mirrored: bool) -> String {
    let base = match origin {
        Origin::RealTraining => format!("{identity}-f{frame:03}"),
        Origin::Synthetic { snapshot, seed } => format!("snap{snapshot:02}-seed{seed:03}"),
    };
    if mirrored {
        format!("{base}-m")
    } else {
        base
    }
}

/// Deterministic emission order: origin, then (identity, frame, mirrored).
pub fn entry_order(a: &CorpusEntry, b: &CorpusEntry) -> Ordering {
    a.origin
        .sort_key()
        .cmp(&b.origin.sort_key())
        .then_with(|| a.identity.cmp(&b.identity))
        .then_with(|| a.frame_index.cmp(&b.frame_index))
        .then_with(|| a.mirrored.cmp(&b.mirrored))
}

pub fn sort_entries(entries: &mut [CorpusEntry]) {
    entries.sort_by(entry_order);
}

pub fn mask_coverage(mask: &SegMask) -> usize {
    mask.bits.iter().filter(|&&b| b).count()
}

/// Default blink threshold: 30% of the largest coverage observed in the corpus.
pub fn default_blink_threshold(entries: &[CorpusEntry]) -> Result<usize, CorpusError> {
    let mut max = 0;
    for e in entries {
        max = max.max(mask_coverage(require_mask(e)?));
    }
    Ok((max as f64 * 0.3).ceil() as usize)
}

fn require_mask(entry: &CorpusEntry) -> Result<&SegMask, CorpusError> {
    entry.mask.as_ref().ok_or_else(|| CorpusError::MissingMask {
        identity: entry.identity.clone(),
        frame: entry.frame_index,
    })
}

/// Split entries into (kept, discarded); an entry is kept iff its mask
/// coverage is at least `threshold`. Order is preserved in both halves.
pub fn blink_filter(
    entries: Vec<CorpusEntry>,
    threshold: usize,
) -> Result<(Vec<CorpusEntry>, Vec<CorpusEntry>), CorpusError> {
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for entry in entries {
        if mask_coverage(require_mask(&entry)?) >= threshold {
            kept.push(entry);
        } else {
            discarded.push(entry);
        }
    }
    Ok((kept, discarded))
}

/// Top-left corner of a `size`x`size` window centred on `center`.
pub fn crop_origin(
    center: (i64, i64),
    size: usize,
    width: usize,
    height: usize,
) -> Result<(usize, usize), CorpusError> {
    let half = (size / 2) as i64;
    let (x0, y0) = (center.0 - half, center.1 - half);
    if x0 < 0 || y0 < 0 || x0 + size as i64 > width as i64 || y0 + size as i64 > height as i64 {
        return Err(CorpusError::BorderViolation {
            x: center.0,
            y: center.1,
            size,
            width,
            height,
        });
    }
    Ok((x0 as usize, y0 as usize))
}

/// Cut a `size`x`size` window around the pupil centre; no resampling.
pub fn center_crop(
    entry: &CorpusEntry,
    pupil_center: (i64, i64),
    size: usize,
) -> Result<CorpusEntry, CorpusError> {
    let (w, h) = (entry.image.width(), entry.image.height());
    let (x0, y0) = crop_origin(pupil_center, size, w, h)?;
    let mut pixels = Vec::with_capacity(size * size);
    for y in y0..y0 + size {
        pixels.extend_from_slice(&entry.image.pixels()[y * w + x0..y * w + x0 + size]);
    }
    let mask = entry
        .mask
        .as_ref()
        .map(|m| SegMask::from_fn(size, size, |x, y| m.get(x + x0, y + y0)));
    Ok(CorpusEntry {
        image: RawImage::new(size, size, pixels)?,
        mask,
        ..entry.clone()
    })
}

/// x-coordinate of a pixel after a left-right flip.
pub fn mirror_x(x: usize, width: usize) -> usize {
    width - 1 - x
}

pub fn mirror_image(image: &RawImage) -> RawImage {
    let w = image.width();
    let mut out = image.clone();
    for row in out.pixels_mut().chunks_mut(w) {
        row.reverse();
    }
    out
}

fn mirror_mask(mask: &SegMask) -> SegMask {
    let w = mask.width();
    let mut bits = mask.bits().to_vec();
    for row in bits.chunks_mut(w) {
        row.reverse();
    }
    SegMask::new(mask.width(), mask.height(), bits).expect("same dimensions")
}

/// Append a left-right-flipped duplicate of every entry.
pub fn mirror_augment(corpus: Vec<CorpusEntry>) -> Vec<CorpusEntry> {
    let flipped: Vec<CorpusEntry> = corpus
        .iter()
        .map(|e| CorpusEntry {
            image: mirror_image(&e.image),
            mask: e.mask.as_ref().map(mirror_mask),
            mirrored: !e.mirrored,
            ..e.clone()
        })
        .collect();
    let mut out = corpus;
    out.extend(flipped);
    out
}

pub const ISO_WIDTH: usize = 640;
pub const ISO_HEIGHT: usize = 480;
pub const CROP_SIZE: usize = 512;
const PAD_COLUMNS: usize = 86;
const PAD_GRAY: u8 = 128;

/// Pad a 512x512 crop with gray bars to 684x512 (4:3) and resize to 640x480.
pub fn iso_frame(image: &RawImage) -> Result<RawImage, CorpusError> {
    if image.width() != CROP_SIZE || image.height() != CROP_SIZE {
        return Err(CorpusError::DimensionMismatch {
            expected_w: CROP_SIZE,
            expected_h: CROP_SIZE,
            width: image.width(),
            height: image.height(),
        });
    }
    let padded = pad_columns(image, PAD_COLUMNS, PAD_GRAY);
    Ok(resize_bilinear(&padded, ISO_WIDTH, ISO_HEIGHT))
}

pub fn pad_columns(image: &RawImage, pad: usize, value: u8) -> RawImage {
    let w = image.width() + 2 * pad;
    let mut pixels = Vec::with_capacity(w * image.height());
    for row in image.pixels().chunks(image.width()) {
        pixels.extend(std::iter::repeat_n(value, pad));
        pixels.extend_from_slice(row);
        pixels.extend(std::iter::repeat_n(value, pad));
    }
    RawImage::new(w, image.height(), pixels).expect("padded dimensions are valid")
}

/// Bilinear resize with pixel-centre alignment and clamped borders.
pub fn resize_bilinear(image: &RawImage, width: usize, height: usize) -> RawImage {
    let sx = image.width() as f64 / width as f64;
    let sy = image.height() as f64 / height as f64;
    let max_x = (image.width() - 1) as f64;
    let max_y = (image.height() - 1) as f64;
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(image.height() - 1);
        let ty = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(image.width() - 1);
            let tx = fx - x0 as f64;
            let top = image.get(x0, y0) as f64 * (1.0 - tx) + image.get(x1, y0) as f64 * tx;
            let bot = image.get(x0, y1) as f64 * (1.0 - tx) + image.get(x1, y1) as f64 * tx;
            let v = top * (1.0 - ty) + bot * ty;
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    RawImage::new(width, height, pixels).expect("resize dimensions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(image: RawImage, mask: Option<SegMask>, frame: u32) -> CorpusEntry {
        CorpusEntry {
            image,
            mask,
            identity: "S001-L".into(),
            frame_index: frame,
            origin: Origin::RealTraining,
            mirrored: false,
        }
    }

    fn mask_with_coverage(w: usize, h: usize, n: usize) -> SegMask {
        let mut bits = vec![false; w * h];
        bits[..n].iter_mut().for_each(|b| *b = true);
        SegMask::new(w, h, bits).unwrap()
    }

    #[test]
    fn coverage_examples() {
        assert_eq!(mask_coverage(&SegMask::filled(768, 576, true)), 442368);
        assert_eq!(mask_coverage(&SegMask::filled(768, 576, false)), 0);
        let checker = SegMask::from_fn(4, 4, |x, y| (x + y) % 2 == 0);
        assert_eq!(mask_coverage(&checker), 8);
    }

    #[test]
    fn blink_filter_boundary_and_partition() {
        let img = RawImage::filled(10, 10, 0);
        let entries = vec![
            entry(img.clone(), Some(mask_with_coverage(10, 10, 0)), 0),
            entry(img.clone(), Some(mask_with_coverage(10, 10, 40)), 1),
            entry(img.clone(), Some(mask_with_coverage(10, 10, 39)), 2),
            entry(img.clone(), Some(mask_with_coverage(10, 10, 90)), 3),
        ];
        let (kept, discarded) = blink_filter(entries, 40).unwrap();
        let kept: Vec<u32> = kept.iter().map(|e| e.frame_index).collect();
        let gone: Vec<u32> = discarded.iter().map(|e| e.frame_index).collect();
        assert_eq!(kept, vec![1, 3]);
        assert_eq!(gone, vec![0, 2]);
    }

    #[test]
    fn blink_filter_counts_planted_frames() {
        let img = RawImage::filled(20, 20, 0);
        let entries: Vec<CorpusEntry> = (0..100)
            .map(|i| {
                let cov = if i % 10 == 3 { 50 } else { 300 + i as usize };
                entry(img.clone(), Some(mask_with_coverage(20, 20, cov)), i)
            })
            .collect();
        let threshold = default_blink_threshold(&entries).unwrap();
        let (kept, discarded) = blink_filter(entries, threshold).unwrap();
        assert_eq!(kept.len(), 90);
        assert_eq!(discarded.len(), 10);
    }

    #[test]
    fn blink_filter_requires_masks() {
        let e = entry(RawImage::filled(4, 4, 0), None, 0);
        assert!(matches!(
            blink_filter(vec![e], 1),
            Err(CorpusError::MissingMask { .. })
        ));
    }

    #[test]
    fn crop_origin_and_border() {
        assert_eq!(crop_origin((384, 288), 512, 768, 576).unwrap(), (128, 32));
        assert!(matches!(
            crop_origin((100, 288), 512, 768, 576),
            Err(CorpusError::BorderViolation { .. })
        ));
        // the window is half-open, so the far edge may touch the border
        assert!(crop_origin((512, 320), 512, 768, 576).is_ok());
        assert!(crop_origin((513, 320), 512, 768, 576).is_err());
    }

    #[test]
    fn crop_preserves_pixels_and_centres_pupil() {
        let img = RawImage::new(
            768,
            576,
            (0..768 * 576).map(|i| ((i * 31) % 251) as u8).collect(),
        )
        .unwrap();
        let e = entry(
            img.clone(),
            Some(SegMask::from_fn(768, 576, |x, _| x % 3 == 0)),
            0,
        );
        let c = center_crop(&e, (400, 300), 512).unwrap();
        assert_eq!((c.image.width(), c.image.height()), (512, 512));
        assert_eq!(c.image.get(256, 256), img.get(400, 300));
        assert_eq!(c.image.get(0, 0), img.get(144, 44));
        assert_eq!(c.mask.unwrap().get(1, 0), (145 % 3) == 0);

        let uniform = entry(RawImage::filled(768, 576, 93), None, 0);
        let c = center_crop(&uniform, (384, 288), 512).unwrap();
        assert!(c.image.pixels().iter().all(|&p| p == 93));
    }

    #[test]
    fn mirroring() {
        assert_eq!(mirror_x(200, 512), 311);
        let img = RawImage::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let corpus = vec![entry(img.clone(), None, 0), entry(img.clone(), None, 1)];
        let out = mirror_augment(corpus);
        assert_eq!(out.len(), 4);
        assert!(out[2].mirrored && out[3].mirrored);
        assert_eq!(out[2].image.pixels(), &[3, 2, 1, 6, 5, 4]);
        assert_eq!(mirror_image(&mirror_image(&img)), img);
    }

    #[test]
    fn iso_frame_dimensions_and_padding() {
        let img = RawImage::filled(512, 512, 40);
        let out = iso_frame(&img).unwrap();
        assert_eq!((out.width(), out.height()), (640, 480));
        assert_eq!(out.get(0, 0), 128);
        assert_eq!(out.get(639, 479), 128);
        // interior is the constant field up to quantization
        for &(x, y) in &[(320, 240), (100, 10), (539, 470)] {
            assert!((out.get(x, y) as i32 - 40).abs() <= 1);
        }
        let padded = pad_columns(&img, 86, 128);
        assert_eq!((padded.width(), padded.height()), (684, 512));
        assert!((0..512).all(|y| padded.get(0, y) == 128 && padded.get(85, y) == 128));
        assert!((0..512).all(|y| padded.get(86, y) == 40 && padded.get(683, y) == 128));
    }

    #[test]
    fn iso_frame_rejects_wrong_size() {
        assert!(matches!(
            iso_frame(&RawImage::filled(640, 480, 0)),
            Err(CorpusError::DimensionMismatch { .. })
        ));
    }
}
