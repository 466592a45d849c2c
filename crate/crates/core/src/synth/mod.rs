//! Parametric iris renderer and simulated generator.
//!
//! Real corpora are rendered from per-identity texture specs under varying
//! capture conditions. The simulated generator either replays a training
//! crop with slight noise (a planted leak) or renders a fresh identity, then
//! applies snapshot-dependent degradation. Every draw is a pure function of
//! `(seed, index)`.

mod generator;

pub use generator::{
    apply_fidelity, fidelity_strength, mode_image, sample_batch, sample_generator, GeneratedSample,
    GeneratorModel, LeakLedger, LeakRecord, FIDELITY_MAX,
};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusEntry, Origin, RawImage, SegMask};
use crate::raster::Plane;
use crate::seed::{derive_indexed, rng_for, rng_indexed};
use crate::segmentation::{BoundaryCircle, Segmentation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid render spec: {0}")]
    SpecError(String),
    #[error("generator has no training images to memorize")]
    EmptyTrainingCorpus,
    #[error("fidelity level {0} outside 1..=14")]
    BadFidelity(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Octave {
    /// Cells around the full circle.
    pub theta_cells: usize,
    /// Cells from pupil to iris boundary.
    pub rho_cells: usize,
    pub amplitude: f64,
}

pub const DEFAULT_OCTAVES: [Octave; 4] = [
    Octave {
        theta_cells: 16,
        rho_cells: 2,
        amplitude: 1.0,
    },
    Octave {
        theta_cells: 32,
        rho_cells: 4,
        amplitude: 0.7,
    },
    Octave {
        theta_cells: 64,
        rho_cells: 8,
        amplitude: 0.5,
    },
    Octave {
        theta_cells: 128,
        rho_cells: 16,
        amplitude: 0.35,
    },
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySpec {
    pub texture_seed: u64,
    pub iris_radius: f64,
    pub base_pupil_radius: f64,
    /// Pupil centre relative to the iris centre.
    pub pupil_offset: (f64, f64),
    pub octaves: Vec<Octave>,
    pub iris_gray: f64,
    /// Gray levels per unit of normalized texture.
    pub texture_gain: f64,
    pub pupil_gray: f64,
    pub sclera_gray: f64,
    pub skin_gray: f64,
}

impl IdentitySpec {
    /// Draw identity `index` of a population.
    pub fn sample(seed: u64, index: u64) -> Self {
        let mut rng = rng_indexed(seed, "identity", index);
        IdentitySpec {
            texture_seed: rng.gen(),
            iris_radius: rng.gen_range(105.0..125.0),
            base_pupil_radius: rng.gen_range(35.0..50.0),
            pupil_offset: (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
            octaves: DEFAULT_OCTAVES.to_vec(),
            iris_gray: rng.gen_range(85.0..120.0),
            texture_gain: rng.gen_range(22.0..30.0),
            pupil_gray: rng.gen_range(12.0..24.0),
            sclera_gray: rng.gen_range(185.0..205.0),
            skin_gray: rng.gen_range(155.0..175.0),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::SpecError(m));
        if !(self.base_pupil_radius > 0.0) {
            return bad(format!(
                "pupil radius {} must be positive",
                self.base_pupil_radius
            ));
        }
        if self.iris_radius <= self.base_pupil_radius {
            return bad(format!(
                "iris radius {} must exceed pupil radius {}",
                self.iris_radius, self.base_pupil_radius
            ));
        }
        if self
            .octaves
            .iter()
            .any(|o| o.theta_cells == 0 || o.rho_cells == 0)
        {
            return bad("octave with zero cells".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureSpec {
    /// Iris centre in the output frame.
    pub center: (f64, f64),
    pub dilation_factor: f64,
    pub rotation_deg: f64,
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    /// Upper-lid closure, 0 = open, 1 = fully closed.
    pub upper_lid: f64,
    pub lower_lid: f64,
    pub noise_seed: u64,
}

impl CaptureSpec {
    pub fn neutral(center: (f64, f64)) -> Self {
        CaptureSpec {
            center,
            dilation_factor: 1.0,
            rotation_deg: 0.0,
            noise_sigma: 0.0,
            blur_sigma: 0.0,
            upper_lid: 0.0,
            lower_lid: 0.0,
            noise_seed: 0,
        }
    }

    /// Random open-eye capture around `center`.
    pub fn sample(rng: &mut impl Rng, center: (f64, f64)) -> Self {
        CaptureSpec {
            center,
            dilation_factor: rng.gen_range(0.8..1.4),
            rotation_deg: rng.gen_range(-2.5..2.5),
            noise_sigma: rng.gen_range(1.0..2.5),
            blur_sigma: rng.gen_range(0.6..1.2),
            upper_lid: rng.gen_range(0.0..0.15),
            lower_lid: rng.gen_range(0.0..0.08),
            noise_seed: rng.gen(),
        }
    }
}

/// Seeded periodic value noise, one grid per octave.
pub struct Texture {
    octaves: Vec<(Octave, Vec<f64>)>,
    norm: f64,
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

impl Texture {
    pub fn new(seed: u64, octaves: &[Octave]) -> Self {
        let octaves: Vec<(Octave, Vec<f64>)> = octaves
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let mut rng = rng_indexed(seed, "octave", i as u64);
                let grid = (0..o.theta_cells * (o.rho_cells + 2))
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                (*o, grid)
            })
            .collect();
        let norm = octaves
            .iter()
            .map(|(o, _)| o.amplitude * o.amplitude)
            .sum::<f64>()
            .sqrt();
        Texture {
            octaves,
            norm: if norm > 0.0 { norm } else { 1.0 },
        }
    }

    /// Texture at normalized radius `rho` in [0, 1] and angle `theta`.
    pub fn eval(&self, rho: f64, theta: f64) -> f64 {
        let mut acc = 0.0;
        let t = theta.rem_euclid(2.0 * PI) / (2.0 * PI);
        for (o, grid) in &self.octaves {
            let u = t * o.theta_cells as f64;
            let i0 = (u.floor() as usize) % o.theta_cells;
            let i1 = (i0 + 1) % o.theta_cells;
            let fu = smooth(u - u.floor());
            let v = rho.clamp(0.0, 1.0) * o.rho_cells as f64;
            let j0 = (v.floor() as usize).min(o.rho_cells);
            let fv = smooth(v - j0 as f64);
            let at = |j: usize, i: usize| grid[j * o.theta_cells + i];
            let a = at(j0, i0) + (at(j0, i1) - at(j0, i0)) * fu;
            let b = at(j0 + 1, i0) + (at(j0 + 1, i1) - at(j0 + 1, i0)) * fu;
            acc += o.amplitude * (a + (b - a) * fv);
        }
        acc / self.norm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub image: RawImage,
    /// Visible iris texture.
    pub mask: SegMask,
    /// Ground-truth circles; `occlusion` equals `mask`.
    pub truth: Segmentation,
}

/// Normalized rubber-sheet coordinates `(rho, theta)` of a point `q`
/// relative to the pupil centre, for pupil radius `pr`, iris radius `ir` and
/// iris-minus-pupil centre offset `delta`.
fn polar_coords(q: (f64, f64), delta: (f64, f64), pr: f64, ir: f64) -> (f64, f64) {
    let d = ir - pr;
    let a = delta.0 * delta.0 + delta.1 * delta.1 - d * d;
    let b = -2.0 * (q.0 * delta.0 + q.1 * delta.1 + pr * d);
    let c = q.0 * q.0 + q.1 * q.1 - pr * pr;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let rho = (-b - disc.sqrt()) / (2.0 * a);
    let theta = (q.1 - rho * delta.1).atan2(q.0 - rho * delta.0);
    (rho, theta)
}

pub fn render_iris(
    identity: &IdentitySpec,
    capture: &CaptureSpec,
    width: usize,
    height: usize,
) -> Result<Rendered, SynthError> {
    identity.validate()?;
    let pr = identity.base_pupil_radius * capture.dilation_factor;
    let ir = identity.iris_radius;
    if !(pr > 0.0 && pr < ir) {
        return Err(SynthError::SpecError(format!(
            "dilated pupil radius {pr:.1} must lie in (0, {ir:.1})"
        )));
    }
    let (icx, icy) = capture.center;
    let (pcx, pcy) = (icx + identity.pupil_offset.0, icy + identity.pupil_offset.1);
    let pupil = BoundaryCircle {
        cx: pcx,
        cy: pcy,
        r: pr,
    };
    let iris = BoundaryCircle {
        cx: icx,
        cy: icy,
        r: ir,
    };
    let annulus = Segmentation {
        pupil,
        iris,
        occlusion: SegMask::filled(1, 1, true),
    };
    let upper_apex = icy - ir + capture.upper_lid * 2.0 * ir;
    let lower_apex = icy + ir - capture.lower_lid * 2.0 * ir;
    let curvature = 2.5 * ir;
    let lid = |x: f64, y: f64| {
        let dx = x - icx;
        y < upper_apex + dx * dx / curvature || y > lower_apex - dx * dx / curvature
    };
    let texture = Texture::new(identity.texture_seed, &identity.octaves);
    let rot = capture.rotation_deg.to_radians();
    let delta = (icx - pcx, icy - pcy);

    let mut plane = Plane::new(width, height, identity.sclera_gray as f32);
    let mut mask = SegMask::filled(width, height, false);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64, y as f64);
            let v = if lid(fx, fy) {
                identity.skin_gray
            } else if pupil.contains(fx, fy) {
                identity.pupil_gray
            } else if iris.contains(fx, fy) {
                let (rho, theta) = polar_coords((fx - pcx, fy - pcy), delta, pr, ir);
                identity.iris_gray + identity.texture_gain * texture.eval(rho, theta - rot)
            } else {
                identity.sclera_gray
            };
            plane.set(x, y, v as f32);
            if !lid(fx, fy) && annulus.in_annulus(x, y) {
                mask.set(x, y, true);
            }
        }
    }
    let mut plane = plane.gaussian_blur(capture.blur_sigma);
    if capture.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, capture.noise_sigma)
            .map_err(|e| SynthError::SpecError(e.to_string()))?;
        let mut rng = rng_for(capture.noise_seed, "noise");
        for v in plane.data.iter_mut() {
            *v += normal.sample(&mut rng) as f32;
        }
    }
    // stay clear of the specular threshold
    for v in plane.data.iter_mut() {
        *v = v.min(235.0);
    }
    Ok(Rendered {
        image: plane.to_raw(),
        truth: Segmentation {
            pupil,
            iris,
            occlusion: mask.clone(),
        },
        mask,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealCorpusSpec {
    pub identities: usize,
    pub frames_per_identity: usize,
    pub width: usize,
    pub height: usize,
    /// Probability that a frame is captured mid-blink.
    pub blink_rate: f64,
    /// Probability that the eye sits too close to the frame border to crop.
    pub border_rate: f64,
}

impl Default for RealCorpusSpec {
    fn default() -> Self {
        RealCorpusSpec {
            identities: 47,
            frames_per_identity: 20,
            width: 768,
            height: 576,
            blink_rate: 0.05,
            border_rate: 0.0,
        }
    }
}

/// Per-frame ground truth of a rendered real corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub identity: String,
    pub frame: u32,
    pub blink: bool,
    pub border: bool,
    pub capture: CaptureSpec,
}

/// Subject/eye label of identity `i`: `S001-L`, `S001-R`, `S002-L`, ...
pub fn identity_label(i: usize) -> String {
    format!(
        "S{:03}-{}",
        i / 2 + 1,
        if i.is_multiple_of(2) { 'L' } else { 'R' }
    )
}

pub fn render_frame(
    seed: u64,
    spec: &RealCorpusSpec,
    identity_index: usize,
    frame: u32,
) -> Result<(CorpusEntry, FrameTruth), SynthError> {
    let id = IdentitySpec::sample(seed, identity_index as u64);
    let label = identity_label(identity_index);
    let mut rng = rng_indexed(seed, &format!("capture/{label}"), frame as u64);
    let blink = rng.gen_bool(spec.blink_rate.clamp(0.0, 1.0));
    let border = rng.gen_bool(spec.border_rate.clamp(0.0, 1.0));
    let (w, h) = (spec.width as f64, spec.height as f64);
    let half = 256.0;
    // keep the pupil at least 14 px inside the croppable region
    let (lo_x, hi_x) = (half + 14.0, (w - half - 14.0).max(half + 14.0));
    let (lo_y, hi_y) = (half + 14.0, (h - half - 14.0).max(half + 14.0));
    let cx = if border {
        rng.gen_range(id.iris_radius + 5.0..half - 40.0)
    } else {
        rng.gen_range(lo_x..=hi_x)
    };
    let cy = rng.gen_range(lo_y..=hi_y);
    let mut capture =
        CaptureSpec::sample(&mut rng, (cx - id.pupil_offset.0, cy - id.pupil_offset.1));
    if blink {
        capture.upper_lid = rng.gen_range(0.75..1.0);
    }
    let r = render_iris(&id, &capture, spec.width, spec.height)?;
    let entry = CorpusEntry {
        image: r.image,
        mask: Some(r.mask),
        identity: label.clone(),
        frame_index: frame,
        origin: Origin::RealTraining,
        mirrored: false,
    };
    Ok((
        entry,
        FrameTruth {
            identity: label,
            frame,
            blink,
            border,
            capture,
        },
    ))
}

/// Render `identities x frames` real frames, sorted by (identity, frame).
pub fn render_real_corpus(
    seed: u64,
    spec: &RealCorpusSpec,
) -> Result<(Vec<CorpusEntry>, Vec<FrameTruth>), SynthError> {
    use rayon::prelude::*;
    let jobs: Vec<(usize, u32)> = (0..spec.identities)
        .flat_map(|i| (0..spec.frames_per_identity as u32).map(move |f| (i, f)))
        .collect();
    let out: Result<Vec<_>, _> = jobs
        .par_iter()
        .map(|&(i, f)| render_frame(seed, spec, i, f))
        .collect();
    Ok(out?.into_iter().unzip())
}

/// Render a never-seen identity as a pupil-centred `size x size` crop.
pub fn render_fresh(seed: u64, index: u64, size: usize) -> Result<RawImage, SynthError> {
    let id_seed = derive_indexed(seed, "fresh", index);
    let id = IdentitySpec::sample(id_seed, 0);
    let mut rng = rng_for(id_seed, "capture");
    let c = size as f64 / 2.0;
    let capture = CaptureSpec::sample(&mut rng, (c - id.pupil_offset.0, c - id.pupil_offset.1));
    Ok(render_iris(&id, &capture, size, size)?.image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::mask_coverage;

    #[test]
    fn mask_matches_rendered_annulus() {
        let id = IdentitySpec::sample(1, 0);
        let cap = CaptureSpec::neutral((256.0, 256.0));
        let r = render_iris(&id, &cap, 512, 512).unwrap();
        for y in 0..512 {
            for x in 0..512 {
                assert_eq!(r.mask.get(x, y), r.truth.in_annulus(x, y), "({x},{y})");
            }
        }
        let area = std::f64::consts::PI * (id.iris_radius.powi(2) - id.base_pupil_radius.powi(2));
        let cov = mask_coverage(&r.mask) as f64;
        assert!((cov / area - 1.0).abs() < 0.02);
    }

    #[test]
    fn rho_theta_inverts_the_rubber_sheet() {
        let (pr, ir, delta) = (40.0, 110.0, (2.0, -1.5));
        for &(rho, theta) in &[(0.0, 0.3), (0.5, 2.0), (0.99, -1.0), (0.25, 3.1)] {
            let p: (f64, f64) = (pr * f64::cos(theta), pr * f64::sin(theta));
            let i = (
                delta.0 + ir * f64::cos(theta),
                delta.1 + ir * f64::sin(theta),
            );
            let q = (p.0 + rho * (i.0 - p.0), p.1 + rho * (i.1 - p.1));
            let (r2, t2) = polar_coords(q, delta, pr, ir);
            assert!((r2 - rho).abs() < 1e-9);
            assert!((t2 - theta).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_geometry_rejected() {
        let mut id = IdentitySpec::sample(1, 0);
        id.iris_radius = id.base_pupil_radius;
        assert!(matches!(
            render_iris(&id, &CaptureSpec::neutral((100.0, 100.0)), 200, 200),
            Err(SynthError::SpecError(_))
        ));
        let id = IdentitySpec::sample(1, 0);
        let mut cap = CaptureSpec::neutral((100.0, 100.0));
        cap.dilation_factor = 10.0;
        assert!(render_iris(&id, &cap, 200, 200).is_err());
    }

    #[test]
    fn frames_are_deterministic_and_blinks_shrink_masks() {
        let spec = RealCorpusSpec {
            identities: 1,
            frames_per_identity: 1,
            blink_rate: 0.0,
            ..Default::default()
        };
        let (a, _) = render_frame(9, &spec, 0, 0).unwrap();
        let (b, _) = render_frame(9, &spec, 0, 0).unwrap();
        assert_eq!(a, b);
        let blink = RealCorpusSpec {
            blink_rate: 1.0,
            ..spec
        };
        let (c, t) = render_frame(9, &blink, 0, 0).unwrap();
        assert!(t.blink);
        let open = mask_coverage(a.mask.as_ref().unwrap());
        let closed = mask_coverage(c.mask.as_ref().unwrap());
        assert!((closed as f64) < 0.3 * open as f64, "{closed} vs {open}");
    }
}
