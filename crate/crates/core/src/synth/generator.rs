use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{render_fresh, SynthError};
use crate::corpus::{CorpusEntry, Origin, RawImage};
use crate::raster::Plane;
use crate::seed::{derive_indexed, rng_for, rng_indexed};

pub const FIDELITY_MAX: u8 = 14;

/// Simulated generator snapshot.
#[derive(Clone, Debug)]
pub struct GeneratorModel {
    /// Pupil-centred training crops, all of one size.
    pub training: Vec<CorpusEntry>,
    pub memorization_rate: f64,
    pub fidelity_level: u8,
    pub snapshot: u32,
    pub seed: u64,
    pub leak_noise_sigma: f64,
    memorizable: Vec<usize>,
}

impl GeneratorModel {
    pub fn new(
        training: Vec<CorpusEntry>,
        memorization_rate: f64,
        fidelity_level: u8,
        snapshot: u32,
        seed: u64,
    ) -> Result<Self, SynthError> {
        if !(1..=FIDELITY_MAX).contains(&fidelity_level) {
            return Err(SynthError::BadFidelity(fidelity_level));
        }
        if !(0.0..=1.0).contains(&memorization_rate) {
            return Err(SynthError::SpecError(format!(
                "memorization rate {memorization_rate} outside [0, 1]"
            )));
        }
        // mirrored copies are training input only and never replayed
        let memorizable: Vec<usize> = training
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.mirrored)
            .map(|(i, _)| i)
            .collect();
        if memorizable.is_empty() {
            return Err(SynthError::EmptyTrainingCorpus);
        }
        let (w, h) = (training[0].image.width(), training[0].image.height());
        if training
            .iter()
            .any(|e| e.image.width() != w || e.image.height() != h)
        {
            return Err(SynthError::SpecError(
                "training images differ in size".into(),
            ));
        }
        Ok(GeneratorModel {
            training,
            memorization_rate,
            fidelity_level,
            snapshot,
            seed,
            leak_noise_sigma: 1.5,
            memorizable,
        })
    }

    pub fn image_size(&self) -> usize {
        self.training[0].image.width()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakRecord {
    pub index: u64,
    pub fake_id: String,
    pub source_id: String,
    pub source_identity: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakLedger {
    pub snapshot: u32,
    pub memorization_rate: f64,
    pub samples: u64,
    pub leaks: Vec<LeakRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSample {
    pub entry: CorpusEntry,
    pub leak: Option<LeakRecord>,
}

/// Sample `index`. The leak decision and source depend only on
/// `(model.seed, index)`, so leak sets are nested as the rate grows.
pub fn sample_generator(model: &GeneratorModel, index: u64) -> Result<GeneratedSample, SynthError> {
    let mut draw = rng_indexed(model.seed, "draw", index);
    let u: f64 = draw.gen();
    let pick = draw.gen_range(0..model.memorizable.len());
    let size = model.image_size();
    let origin = Origin::Synthetic {
        snapshot: model.snapshot,
        seed: index,
    };
    let fake_id = crate::corpus::entry_id(&origin, "", 0, false);
    let (image, leak) = if u < model.memorization_rate {
        let src = &model.training[model.memorizable[pick]];
        let normal = Normal::new(0.0, model.leak_noise_sigma)
            .map_err(|e| SynthError::SpecError(e.to_string()))?;
        let mut rng = rng_indexed(model.seed, "leak-noise", index);
        let px = src
            .image
            .pixels()
            .iter()
            .map(|&v| {
                (v as f64 + normal.sample(&mut rng))
                    .round()
                    .clamp(0.0, 255.0) as u8
            })
            .collect();
        let img =
            RawImage::new(src.image.width(), src.image.height(), px).expect("same dimensions");
        let record = LeakRecord {
            index,
            fake_id: fake_id.clone(),
            source_id: src.id(),
            source_identity: src.identity.clone(),
        };
        (img, Some(record))
    } else {
        (render_fresh(model.seed, index, size)?, None)
    };
    let image = apply_fidelity(
        &image,
        model.fidelity_level,
        derive_indexed(model.seed, "fidelity", index),
    )?;
    Ok(GeneratedSample {
        entry: CorpusEntry {
            image,
            mask: None,
            identity: String::new(),
            frame_index: 0,
            origin,
            mirrored: false,
        },
        leak,
    })
}

/// Samples `0..n` in index order plus their leak ledger.
pub fn sample_batch(
    model: &GeneratorModel,
    n: u64,
) -> Result<(Vec<CorpusEntry>, LeakLedger), SynthError> {
    use rayon::prelude::*;
    let samples: Result<Vec<GeneratedSample>, SynthError> = (0..n)
        .into_par_iter()
        .map(|i| sample_generator(model, i))
        .collect();
    let samples = samples?;
    let leaks = samples.iter().filter_map(|s| s.leak.clone()).collect();
    Ok((
        samples.into_iter().map(|s| s.entry).collect(),
        LeakLedger {
            snapshot: model.snapshot,
            memorization_rate: model.memorization_rate,
            samples: n,
            leaks,
        },
    ))
}

/// Artifact strength in [0, 1]: 1 at level 1, 0 at level 14.
pub fn fidelity_strength(level: u8) -> f64 {
    (FIDELITY_MAX as f64 - level as f64) / (FIDELITY_MAX as f64 - 1.0)
}

/// The smooth average eye every sample collapses toward at low fidelity.
pub fn mode_image(width: usize, height: usize) -> RawImage {
    let s = width.min(height) as f64 / 512.0;
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let (pr, ir) = (45.0 * s, 115.0 * s);
    let plane = Plane::from_fn(width, height, |x, y| {
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        if d < pr {
            18.0
        } else if d < ir {
            100.0
        } else {
            195.0
        }
    });
    plane.gaussian_blur(3.0 * s).to_raw()
}

/// Smooth, collapse toward the mode image and add saturated blobs, with
/// strength decreasing linearly from level 1 to level 14 (untouched).
pub fn apply_fidelity(image: &RawImage, level: u8, seed: u64) -> Result<RawImage, SynthError> {
    if !(1..=FIDELITY_MAX).contains(&level) {
        return Err(SynthError::BadFidelity(level));
    }
    if level == FIDELITY_MAX {
        return Ok(image.clone());
    }
    let a = fidelity_strength(level);
    let (w, h) = (image.width(), image.height());
    let blurred = Plane::from_raw(image).gaussian_blur(6.0 * a);
    let mode = Plane::from_raw(&mode_image(w, h));
    let mut out = Plane::from_fn(w, h, |x, y| {
        ((1.0 - a) * blurred.get(x, y) as f64 + a * mode.get(x, y) as f64) as f32
    });

    let s = w.min(h) as f64 / 512.0;
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let mut rng = rng_for(seed, "bubbles");
    let bubbles = (12.0 * a).round() as usize;
    for _ in 0..bubbles {
        let r = rng.gen_range(55.0..105.0) * s;
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let (bx, by) = (cx + r * phi.cos(), cy + r * phi.sin());
        let (ax, ay) = (rng.gen_range(5.0..12.0) * s, rng.gen_range(3.0..8.0) * s);
        let rot: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let (c, sn) = (rot.cos(), rot.sin());
        let reach = ax.max(ay).ceil() as i64 + 1;
        for y in (by as i64 - reach).max(0)..=(by as i64 + reach).min(h as i64 - 1) {
            for x in (bx as i64 - reach).max(0)..=(bx as i64 + reach).min(w as i64 - 1) {
                let (dx, dy) = (x as f64 - bx, y as f64 - by);
                let (u, v) = (dx * c + dy * sn, -dx * sn + dy * c);
                if (u / ax).powi(2) + (v / ay).powi(2) <= 1.0 {
                    out.set(x as usize, y as usize, 255.0);
                }
            }
        }
    }
    Ok(out.to_raw())
}
