//! Pupil and iris boundary localisation, occlusion masking and the
//! pre-template quality gate.
//!
//! Boundaries are found with a circular integro-differential search: for a
//! candidate circle the mean intensity is integrated along its contour and
//! the radial step `L(r + d) - L(r - d)` is maximised. The search runs
//! exhaustively on the coarsest level of a Gaussian pyramid and is refined by
//! a +-4 px window on each finer level. The pupil search works on
//! log-intensities so that the dark pupil/iris edge wins over the brighter,
//! but relatively weaker, iris/sclera edge.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RawImage, SegMask};
use crate::raster::Plane;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("image {width}x{height} is smaller than the 128 px minimum")]
    ImageTooSmall { width: usize, height: usize },
    #[error("no pupil boundary above the contrast floor (best {best:.3})")]
    NoPupilFound { best: f64 },
    #[error("no iris boundary above the contrast floor (best {best:.3})")]
    NoIrisFound { best: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCircle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl BoundaryCircle {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        dx * dx + dy * dy < self.r * self.r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub pupil: BoundaryCircle,
    pub iris: BoundaryCircle,
    /// Usable iris texture; always a subset of the annulus between the circles.
    pub occlusion: SegMask,
}

impl Segmentation {
    pub fn in_annulus(&self, x: usize, y: usize) -> bool {
        let (fx, fy) = (x as f64, y as f64);
        !self.pupil.contains(fx, fy)
            && self.iris.contains(fx, fy)
            && !on_circle(&self.pupil, fx, fy)
    }
}

fn on_circle(c: &BoundaryCircle, x: f64, y: f64) -> bool {
    let (dx, dy) = (x - c.cx, y - c.cy);
    dx * dx + dy * dy == c.r * c.r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFailure {
    LowUsableArea,
    LowTexture,
    LowBoundaryContrast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityAssessment {
    pub usable_fraction: f64,
    pub texture_energy: f64,
    pub boundary_contrast: f64,
    pub pass: bool,
    pub reasons: Vec<QualityFailure>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityThresholds {
    pub min_usable_fraction: f64,
    /// Standard deviation of the Laplacian inside the usable annulus.
    pub min_texture_energy: f64,
    /// Smaller of the pupil and iris boundary steps, in gray levels.
    pub min_boundary_contrast: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds {
            min_usable_fraction: 0.40,
            min_texture_energy: DEFAULT_TEXTURE_FLOOR,
            min_boundary_contrast: 10.0,
        }
    }
}

/// Texture-energy floor calibrated on the synthetic corpus; see
/// [`calibrate_texture_floor`] and the `texture_floor_calibration` test.
pub const DEFAULT_TEXTURE_FLOOR: f64 = 2.31;

/// Half the 5th percentile of texture energies measured on clean renders.
pub fn calibrate_texture_floor(clean_energies: &[f64]) -> Option<f64> {
    if clean_energies.is_empty() {
        return None;
    }
    let mut v = clean_energies.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * 0.05).round() as usize;
    Some(0.5 * v[idx])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub pupil_radius_min: f64,
    pub pupil_radius_max: f64,
    /// Minimum log-intensity step across the pupil boundary.
    pub pupil_floor: f64,
    /// Minimum gray-level step across the iris boundary.
    pub iris_floor: f64,
    /// Maximum distance between iris and pupil centres.
    pub iris_center_offset: f64,
    pub pyramid_levels: usize,
    pub refine_window: i64,
    pub specular_threshold: u8,
    /// Half-width of the square dilation applied to specular pixels.
    pub specular_dilation: usize,
    /// Minimum vertical gray-level step for an eyelid edge point.
    pub eyelid_edge_floor: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            pupil_radius_min: 16.0,
            pupil_radius_max: 100.0,
            pupil_floor: 0.15,
            iris_floor: 12.0,
            iris_center_offset: 8.0,
            pyramid_levels: 3,
            refine_window: 4,
            specular_threshold: 250,
            specular_dilation: 3,
            eyelid_edge_floor: 30.0,
        }
    }
}

const STEP: f64 = 2.0;

/// Unit-circle sample directions restricted to angular arcs.
fn directions(n: usize, lateral_only: bool) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| 2.0 * PI * i as f64 / n as f64)
        .filter(|&a| {
            if !lateral_only {
                return true;
            }
            // keep |angle| <= 45 deg around 0 and pi
            let c = a.cos().abs();
            c >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12
        })
        .map(|a| (a.cos(), a.sin()))
        .collect()
}

/// Mean of the plane along a circle; `None` unless at least `min_frac` of the
/// samples fall inside.
fn contour_mean(
    plane: &Plane,
    cx: f64,
    cy: f64,
    r: f64,
    dirs: &[(f64, f64)],
    min_frac: f64,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(c, s) in dirs {
        if let Some(v) = plane.bilinear(cx + r * c, cy + r * s) {
            sum += v;
            n += 1;
        }
    }
    if n == 0 || (n as f64) < min_frac * dirs.len() as f64 {
        None
    } else {
        Some(sum / n as f64)
    }
}

fn dirs_for_radius(r: f64, lateral: bool, cap: usize) -> Vec<(f64, f64)> {
    let n = ((2.0 * PI * r).round() as usize).clamp(32, cap);
    directions(n, lateral)
}

/// Contour sample directions for integer radii `0..=max`.
struct DirTable(Vec<Vec<(f64, f64)>>);

impl DirTable {
    fn new(max: usize, lateral: bool, cap: usize) -> Self {
        DirTable(
            (0..=max)
                .map(|r| dirs_for_radius(r as f64, lateral, cap))
                .collect(),
        )
    }

    fn get(&self, r: f64) -> &[(f64, f64)] {
        let i = (r.round().max(0.0) as usize).min(self.0.len() - 1);
        &self.0[i]
    }
}

/// Precomputed bilinear taps of each integer-radius contour around an
/// integer centre; valid when the whole circle lies inside the plane.
struct RingTaps(Vec<Vec<(isize, isize, usize, usize, f64, f64)>>);

impl RingTaps {
    fn new(table: &DirTable, max: usize) -> Self {
        RingTaps(
            (0..=max)
                .map(|r| {
                    table
                        .get(r as f64)
                        .iter()
                        .map(|&(c, s)| {
                            let (x, y) = (r as f64 * c, r as f64 * s);
                            let (x0, y0) = (x.floor(), y.floor());
                            let (fx, fy) = (x - x0, y - y0);
                            (
                                x0 as isize,
                                y0 as isize,
                                (fx > 0.0) as usize,
                                (fy > 0.0) as usize,
                                fx,
                                fy,
                            )
                        })
                        .collect()
                })
                .collect(),
        )
    }

    fn mean(&self, plane: &Plane, cx: usize, cy: usize, r: usize) -> f64 {
        let taps = &self.0[r];
        let w = plane.width;
        let mut sum = 0.0;
        for &(dx, dy, ox, oy, fx, fy) in taps {
            let x0 = (cx as isize + dx) as usize;
            let y0 = (cy as isize + dy) as usize;
            let p00 = plane.data[y0 * w + x0] as f64;
            let p10 = plane.data[y0 * w + x0 + ox] as f64;
            let p01 = plane.data[(y0 + oy) * w + x0] as f64;
            let p11 = plane.data[(y0 + oy) * w + x0 + ox] as f64;
            let top = p00 + (p10 - p00) * fx;
            let bottom = p01 + (p11 - p01) * fx;
            sum += top + (bottom - top) * fy;
        }
        sum / taps.len() as f64
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    cx: f64,
    cy: f64,
    r: f64,
    score: f64,
}

/// Search space for one boundary.
struct CircleSearch<'a> {
    /// Full-resolution radius bounds, inclusive.
    r_min: f64,
    r_max: f64,
    lateral: bool,
    min_frac: f64,
    /// Optional centre constraint (full-res centre, max offset).
    anchor: Option<(f64, f64, f64)>,
    /// Radii whose inner sample ring would fall inside this radius are skipped.
    inner_exclusion: f64,
    refine: i64,
    pyramid: &'a [Plane],
}

const COARSE_SAMPLES: usize = 64;
const FINE_SAMPLES: usize = 360;

impl CircleSearch<'_> {
    fn radius_ok(&self, r: f64, scale: f64) -> bool {
        let full = r * scale;
        full >= self.r_min - 1e-9
            && full <= self.r_max + 1e-9
            && r - STEP >= 1.0
            && (r - STEP) * scale > self.inner_exclusion
    }

    fn center_ok(&self, cx: f64, cy: f64, scale: f64) -> bool {
        match self.anchor {
            None => true,
            Some((ax, ay, max)) => {
                let (dx, dy) = (
                    cx * scale + offset(scale) - ax,
                    cy * scale + offset(scale) - ay,
                );
                (dx * dx + dy * dy).sqrt() <= max + 1e-9
            }
        }
    }

    fn run(&self) -> Option<Candidate> {
        let top = self.pyramid.len() - 1;
        let coarse = &self.pyramid[top];
        let scale = (1u64 << top) as f64;
        let mut best: Option<Candidate> = None;

        let r_lo = (self.r_min / scale).floor().max(STEP + 1.0) as i64;
        let r_hi = (self.r_max / scale).ceil() as i64;
        let table = DirTable::new(
            (r_hi as f64 + STEP) as usize + 1,
            self.lateral,
            COARSE_SAMPLES,
        );
        let taps = RingTaps::new(&table, (r_hi as f64 + STEP) as usize + 1);
        let (x_range, y_range) = match self.anchor {
            Some((ax, ay, max)) => {
                let m = (max / scale).ceil() as i64 + 1;
                let (cx, cy) = (
                    to_level(ax, scale).round() as i64,
                    to_level(ay, scale).round() as i64,
                );
                ((cx - m)..=(cx + m), (cy - m)..=(cy + m))
            }
            None => (
                (0..=coarse.width as i64 - 1),
                (0..=coarse.height as i64 - 1),
            ),
        };
        let ring_lo = r_lo - STEP as i64;
        let mut rings: Vec<Option<f64>> = Vec::new();
        for cy in y_range {
            for cx in x_range.clone() {
                if cx < 0 || cy < 0 || cx >= coarse.width as i64 || cy >= coarse.height as i64 {
                    continue;
                }
                let (fx, fy) = (cx as f64, cy as f64);
                if !self.center_ok(fx, fy, scale) {
                    continue;
                }
                rings.clear();
                for rr in ring_lo..=r_hi + STEP as i64 {
                    let rr = rr as f64;
                    let mean = if self.anchor.is_none() {
                        if ring_inside(coarse, fx, fy, rr) {
                            Some(taps.mean(coarse, cx as usize, cy as usize, rr as usize))
                        } else {
                            None
                        }
                    } else {
                        contour_mean(coarse, fx, fy, rr, table.get(rr), self.min_frac)
                    };
                    rings.push(mean);
                }
                for r in r_lo..=r_hi {
                    if !self.radius_ok(r as f64, scale) {
                        continue;
                    }
                    let inner = rings[(r - STEP as i64 - ring_lo) as usize];
                    let outer = rings[(r + STEP as i64 - ring_lo) as usize];
                    if let (Some(i), Some(o)) = (inner, outer) {
                        consider(
                            &mut best,
                            Candidate {
                                cx: fx,
                                cy: fy,
                                r: r as f64,
                                score: o - i,
                            },
                        );
                    }
                }
            }
        }

        let mut current = best?;
        let w = self.refine;
        for level in (0..top).rev() {
            let plane = &self.pyramid[level];
            let scale = (1u64 << level) as f64;
            let cx0 = (current.cx * 2.0 + 0.5).round();
            let cy0 = (current.cy * 2.0 + 0.5).round();
            let r0 = (current.r * 2.0).round();
            let table = DirTable::new(
                (r0 + w as f64 + STEP) as usize + 1,
                self.lateral,
                FINE_SAMPLES,
            );
            let mut best: Option<Candidate> = None;
            for dy in -w..=w {
                for dx in -w..=w {
                    let (cx, cy) = (cx0 + dx as f64, cy0 + dy as f64);
                    if cx < 0.0 || cy < 0.0 || cx >= plane.width as f64 || cy >= plane.height as f64
                    {
                        continue;
                    }
                    if !self.center_ok(cx, cy, scale) {
                        continue;
                    }
                    for dr in -w..=w {
                        let r = r0 + dr as f64;
                        if !self.radius_ok(r, scale) {
                            continue;
                        }
                        if self.anchor.is_none() && !ring_inside(plane, cx, cy, r + STEP) {
                            continue;
                        }
                        let outer = contour_mean(
                            plane,
                            cx,
                            cy,
                            r + STEP,
                            table.get(r + STEP),
                            self.min_frac,
                        );
                        let inner = contour_mean(
                            plane,
                            cx,
                            cy,
                            r - STEP,
                            table.get(r - STEP),
                            self.min_frac,
                        );
                        if let (Some(o), Some(i)) = (outer, inner) {
                            consider(
                                &mut best,
                                Candidate {
                                    cx,
                                    cy,
                                    r,
                                    score: o - i,
                                },
                            );
                        }
                    }
                }
            }
            current = best.unwrap_or(Candidate {
                cx: cx0,
                cy: cy0,
                r: r0,
                score: f64::NEG_INFINITY,
            });
        }
        Some(current)
    }
}

/// Full-resolution position of level-pixel 0 relative to full-res pixel 0.
fn offset(scale: f64) -> f64 {
    (scale - 1.0) / 2.0
}

fn to_level(full: f64, scale: f64) -> f64 {
    (full - offset(scale)) / scale
}

fn ring_inside(plane: &Plane, cx: f64, cy: f64, r: f64) -> bool {
    cx - r >= 0.0
        && cy - r >= 0.0
        && cx + r <= (plane.width - 1) as f64
        && cy + r <= (plane.height - 1) as f64
}

fn consider(best: &mut Option<Candidate>, c: Candidate) {
    if best.is_none_or(|b| c.score > b.score) {
        *best = Some(c);
    }
}

fn pyramid(base: Plane, levels: usize) -> Vec<Plane> {
    let mut out = vec![base];
    for _ in 1..levels.max(1) {
        let next = out.last().unwrap().pyr_down();
        out.push(next);
    }
    out
}

fn check_size(image: &RawImage) -> Result<(), SegmentationError> {
    if image.width().min(image.height()) < 128 {
        return Err(SegmentationError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
        });
    }
    Ok(())
}

pub fn locate_pupil(
    image: &RawImage,
    config: &SegmentationConfig,
) -> Result<BoundaryCircle, SegmentationError> {
    check_size(image)?;
    let mut base = Plane::from_raw(image);
    base.data.iter_mut().for_each(|v| *v = (1.0 + *v).ln());
    let levels = pyramid(base, config.pyramid_levels);
    let search = CircleSearch {
        r_min: config.pupil_radius_min,
        r_max: config.pupil_radius_max,
        lateral: false,
        min_frac: 1.0,
        anchor: None,
        inner_exclusion: 0.0,
        refine: config.refine_window,
        pyramid: &levels,
    };
    let best = search.run();
    match best {
        Some(c) if c.score >= config.pupil_floor => Ok(BoundaryCircle {
            cx: c.cx,
            cy: c.cy,
            r: c.r,
        }),
        other => Err(SegmentationError::NoPupilFound {
            best: other.map_or(0.0, |c| c.score.max(0.0)),
        }),
    }
}

pub fn locate_iris(
    image: &RawImage,
    pupil: &BoundaryCircle,
    config: &SegmentationConfig,
) -> Result<BoundaryCircle, SegmentationError> {
    check_size(image)?;
    let levels = pyramid(Plane::from_raw(image), config.pyramid_levels);
    let search = CircleSearch {
        r_min: (pupil.r * 1.2).floor() + 1.0,
        r_max: pupil.r * 5.0,
        lateral: true,
        min_frac: 0.5,
        anchor: Some((pupil.cx, pupil.cy, config.iris_center_offset)),
        inner_exclusion: pupil.r + 1.0,
        refine: config.refine_window,
        pyramid: &levels,
    };
    match search.run() {
        Some(c) if c.score >= config.iris_floor => Ok(BoundaryCircle {
            cx: c.cx,
            cy: c.cy,
            r: c.r,
        }),
        other => Err(SegmentationError::NoIrisFound {
            best: other.map_or(0.0, |c| c.score.max(0.0)),
        }),
    }
}

/// `y = a*u^2 + b*u + c` with `u = x - x0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parabola {
    pub x0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Parabola {
    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.x0;
        self.a * u * u + self.b * u + self.c
    }
}

fn fit_parabola(points: &[(f64, f64)], x0: f64) -> Option<Parabola> {
    // normal equations for [a, b, c]
    let mut s = [0f64; 5];
    let mut t = [0f64; 3];
    for &(x, y) in points {
        let u = x - x0;
        let mut p = 1.0;
        for sk in s.iter_mut() {
            *sk += p;
            p *= u;
        }
        t[0] += y * u * u;
        t[1] += y * u;
        t[2] += y;
    }
    let m = [[s[4], s[3], s[2]], [s[3], s[2], s[1]], [s[2], s[1], s[0]]];
    let det = det3(&m);
    if det.abs() < 1e-9 {
        return None;
    }
    let mut sol = [0f64; 3];
    for (k, out) in sol.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = t[row];
        }
        *out = det3(&mk) / det;
    }
    Some(Parabola {
        x0,
        a: sol[0],
        b: sol[1],
        c: sol[2],
    })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Fit an eyelid boundary in the upper (or lower) half of the annulus.
/// Returns `None` when edge support is insufficient or inconsistent.
pub fn fit_eyelid(
    image: &RawImage,
    pupil: &BoundaryCircle,
    iris: &BoundaryCircle,
    upper: bool,
    edge_floor: f64,
) -> Option<Parabola> {
    let plane = Plane::from_raw(image).gaussian_blur(1.5);
    let h = plane.height as i64;
    let half_w = (0.7 * iris.r).floor() as i64;
    let mut points = Vec::new();
    let mut columns = 0usize;
    let mean3 = |x: usize, y0: i64| -> Option<f64> {
        let mut s = 0.0;
        for y in y0..y0 + 3 {
            s += plane.get_checked(x as i64, y)? as f64;
        }
        Some(s / 3.0)
    };
    for dx in (-half_w..=half_w).step_by(2) {
        let x = iris.cx.round() as i64 + dx;
        if x < 0 || x >= plane.width as i64 {
            continue;
        }
        columns += 1;
        let fdx = x as f64 - iris.cx;
        let iris_half = (iris.r * iris.r - fdx * fdx).max(0.0).sqrt();
        let pdx = x as f64 - pupil.cx;
        let pupil_half = if pdx.abs() < pupil.r {
            Some((pupil.r * pupil.r - pdx * pdx).sqrt())
        } else {
            None
        };
        let (y_start, y_end) = if upper {
            let start = (iris.cy - iris_half + 6.0).ceil() as i64;
            let end = match pupil_half {
                Some(ph) => (pupil.cy - ph - 4.0).floor() as i64,
                None => iris.cy.floor() as i64,
            };
            (start, end)
        } else {
            let start = match pupil_half {
                Some(ph) => (pupil.cy + ph + 4.0).ceil() as i64,
                None => iris.cy.ceil() as i64,
            };
            (start, (iris.cy + iris_half - 6.0).floor() as i64)
        };
        let mut best: Option<(f64, i64)> = None;
        for y in y_start.max(3)..=y_end.min(h - 4) {
            let (Some(above), Some(below)) = (mean3(x as usize, y - 3), mean3(x as usize, y + 1))
            else {
                continue;
            };
            let g = if upper { above - below } else { below - above };
            if best.is_none_or(|(bg, _)| g > bg) {
                best = Some((g, y));
            }
        }
        if let Some((g, y)) = best {
            if g >= edge_floor {
                points.push((x as f64, y as f64));
            }
        }
    }
    if columns == 0 || points.len() < 8 || (points.len() as f64) < 0.4 * columns as f64 {
        return None;
    }
    let first = fit_parabola(&points, iris.cx)?;
    let inliers: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| (first.eval(x) - y).abs() <= 3.0)
        .collect();
    if (inliers.len() as f64) < 0.7 * points.len() as f64 || inliers.len() < 8 {
        return None;
    }
    fit_parabola(&inliers, iris.cx)
}

pub fn occlusion_mask(
    image: &RawImage,
    pupil: &BoundaryCircle,
    iris: &BoundaryCircle,
    config: &SegmentationConfig,
) -> SegMask {
    let upper = fit_eyelid(image, pupil, iris, true, config.eyelid_edge_floor);
    let lower = fit_eyelid(image, pupil, iris, false, config.eyelid_edge_floor);
    let specular = dilated_specular(image, config.specular_threshold, config.specular_dilation);
    SegMask::from_fn(image.width(), image.height(), |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        if pupil.contains(fx, fy) || on_circle(pupil, fx, fy) || !iris.contains(fx, fy) {
            return false;
        }
        if specular[y * image.width() + x] {
            return false;
        }
        if upper.is_some_and(|p| fy < p.eval(fx)) {
            return false;
        }
        if lower.is_some_and(|p| fy > p.eval(fx)) {
            return false;
        }
        true
    })
}

/// Pixels at or above `threshold`, grown by a `(2r+1)`-square window.
fn dilated_specular(image: &RawImage, threshold: u8, r: usize) -> Vec<bool> {
    let (w, h) = (image.width(), image.height());
    let mut rows = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if image.get(x, y) >= threshold {
                let row = &mut rows[y * w..(y + 1) * w];
                row[x.saturating_sub(r)..(x + r + 1).min(w)].fill(true);
            }
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if rows[y * w + x] {
                for yy in y.saturating_sub(r)..(y + r + 1).min(h) {
                    out[yy * w + x] = true;
                }
            }
        }
    }
    out
}

pub fn segment(
    image: &RawImage,
    config: &SegmentationConfig,
) -> Result<Segmentation, SegmentationError> {
    let pupil = locate_pupil(image, config)?;
    let iris = locate_iris(image, &pupil, config)?;
    let occlusion = occlusion_mask(image, &pupil, &iris, config);
    Ok(Segmentation {
        pupil,
        iris,
        occlusion,
    })
}

/// Gray-level steps across the pupil and iris boundaries, measured on the
/// raw image (full circle for the pupil, lateral arcs for the iris).
pub fn boundary_steps(image: &RawImage, seg: &Segmentation) -> (f64, f64) {
    let plane = Plane::from_raw(image);
    let step = |c: &BoundaryCircle, lateral: bool| -> f64 {
        let d = 3.0;
        let outer = contour_mean(
            &plane,
            c.cx,
            c.cy,
            c.r + d,
            &dirs_for_radius(c.r + d, lateral, FINE_SAMPLES),
            0.25,
        );
        let inner = contour_mean(
            &plane,
            c.cx,
            c.cy,
            (c.r - d).max(1.0),
            &dirs_for_radius(c.r - d, lateral, FINE_SAMPLES),
            0.25,
        );
        match (outer, inner) {
            (Some(o), Some(i)) => (o - i).max(0.0),
            _ => 0.0,
        }
    };
    (step(&seg.pupil, false), step(&seg.iris, true))
}

/// Standard deviation of the 4-neighbour Laplacian over usable pixels whose
/// 3x3 neighbourhood is entirely usable.
pub fn texture_energy(image: &RawImage, usable: &SegMask) -> f64 {
    let (w, h) = (image.width(), image.height());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let all = (y - 1..=y + 1).all(|yy| (x - 1..=x + 1).all(|xx| usable.get(xx, yy)));
            if !all {
                continue;
            }
            let c = image.get(x, y) as f64;
            let lap = image.get(x - 1, y) as f64
                + image.get(x + 1, y) as f64
                + image.get(x, y - 1) as f64
                + image.get(x, y + 1) as f64
                - 4.0 * c;
            sum += lap;
            sum_sq += lap * lap;
            n += 1;
        }
    }
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    (sum_sq / n as f64 - mean * mean).max(0.0).sqrt()
}

pub fn annulus_area(seg: &Segmentation, width: usize, height: usize) -> usize {
    let mut n = 0;
    for y in 0..height {
        for x in 0..width {
            if seg.in_annulus(x, y) {
                n += 1;
            }
        }
    }
    n
}

pub fn assess_quality(
    image: &RawImage,
    seg: &Segmentation,
    thresholds: &QualityThresholds,
) -> QualityAssessment {
    let area = annulus_area(seg, image.width(), image.height());
    let usable = crate::corpus::mask_coverage(&seg.occlusion);
    let usable_fraction = if area == 0 {
        0.0
    } else {
        usable as f64 / area as f64
    };
    let energy = texture_energy(image, &seg.occlusion);
    let (pupil_step, iris_step) = boundary_steps(image, seg);
    verdict(
        usable_fraction,
        energy,
        pupil_step.min(iris_step),
        thresholds,
    )
}

/// Apply the thresholds to already-measured quality values. Each measure
/// fails strictly below its floor.
pub fn verdict(
    usable_fraction: f64,
    texture_energy: f64,
    boundary_contrast: f64,
    thresholds: &QualityThresholds,
) -> QualityAssessment {
    let mut reasons = Vec::new();
    if usable_fraction < thresholds.min_usable_fraction {
        reasons.push(QualityFailure::LowUsableArea);
    }
    if texture_energy < thresholds.min_texture_energy {
        reasons.push(QualityFailure::LowTexture);
    }
    if boundary_contrast < thresholds.min_boundary_contrast {
        reasons.push(QualityFailure::LowBoundaryContrast);
    }
    QualityAssessment {
        usable_fraction,
        texture_energy,
        boundary_contrast,
        pass: reasons.is_empty(),
        reasons,
    }
}
