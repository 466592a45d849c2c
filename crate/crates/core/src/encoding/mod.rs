//! Iris normalisation and binary encoding.
//!
//! The segmented annulus is unwrapped onto an `R x Θ` polar grid (rubber
//! sheet), then every interior grid point is filtered by a bank of `k`
//! zero-mean `s x s` kernels and each response is binarized by sign. The
//! angular axis wraps around, the radial axis is trimmed by `s/2` rows on
//! each side.

mod filters;
mod template;

pub use filters::{build_filter_bank, FilterBank};
pub use template::{read_template, write_template, IrisTemplate, TemplateDims, TemplateMeta};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RawImage, SegMask};
use crate::raster::Plane;
use crate::segmentation::Segmentation;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("iris radius {iris} must exceed pupil radius {pupil}")]
    GeometryError { pupil: f64, iris: f64 },
    #[error("{k} filters of side {size} exceed the {max}-dimensional zero-mean subspace")]
    RankError { k: usize, size: usize, max: usize },
    #[error("polar grid {radial}x{angular} too small for filter side {size}")]
    GridTooSmall {
        radial: usize,
        angular: usize,
        size: usize,
    },
    #[error("malformed filter taps: {0}")]
    BadTaps(String),
    #[error("malformed template file: {0}")]
    BadTemplate(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolarConfig {
    pub radial: usize,
    pub angular: usize,
}

impl Default for PolarConfig {
    fn default() -> Self {
        PolarConfig {
            radial: 64,
            angular: 512,
        }
    }
}

/// Normalised iris on an `radial x angular` grid, row-major by radius.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarIris {
    pub radial: usize,
    pub angular: usize,
    pub samples: Vec<f64>,
    pub valid: Vec<bool>,
}

impl PolarIris {
    pub fn sample(&self, r: usize, t: usize) -> f64 {
        self.samples[r * self.angular + t]
    }

    pub fn is_valid(&self, r: usize, t: usize) -> bool {
        self.valid[r * self.angular + t]
    }

    /// Column-shift by `c` (wrap-around): `out[t] = self[t - c]`.
    pub fn shift_columns(&self, c: i64) -> PolarIris {
        let n = self.angular as i64;
        let mut out = self.clone();
        for r in 0..self.radial {
            for t in 0..self.angular {
                let src = (t as i64 - c).rem_euclid(n) as usize;
                out.samples[r * self.angular + t] = self.samples[r * self.angular + src];
                out.valid[r * self.angular + t] = self.valid[r * self.angular + src];
            }
        }
        out
    }
}

pub fn rubber_sheet(
    image: &RawImage,
    seg: &Segmentation,
    radial: usize,
    angular: usize,
) -> Result<PolarIris, EncodingError> {
    rubber_sheet_plane(&Plane::from_raw(image), seg, radial, angular)
}

/// Rubber-sheet unwrapping of an arbitrary plane. Row 0 lies on the pupil
/// boundary and row `radial - 1` on the iris boundary; a sample is valid iff
/// every bilinear source neighbour is inside the image and usable.
pub fn rubber_sheet_plane(
    plane: &Plane,
    seg: &Segmentation,
    radial: usize,
    angular: usize,
) -> Result<PolarIris, EncodingError> {
    let (p, i) = (&seg.pupil, &seg.iris);
    if i.r <= p.r {
        return Err(EncodingError::GeometryError {
            pupil: p.r,
            iris: i.r,
        });
    }
    let mut samples = vec![0.0; radial * angular];
    let mut valid = vec![false; radial * angular];
    let denom = (radial.max(2) - 1) as f64;
    for t in 0..angular {
        let phi = t as f64 * 2.0 * PI / angular as f64;
        let (c, s) = (phi.cos(), phi.sin());
        let inner = (p.cx + p.r * c, p.cy + p.r * s);
        let outer = (i.cx + i.r * c, i.cy + i.r * s);
        for r in 0..radial {
            let f = r as f64 / denom;
            let x = inner.0 + (outer.0 - inner.0) * f;
            let y = inner.1 + (outer.1 - inner.1) * f;
            let idx = r * angular + t;
            if let Some(v) = plane.bilinear(x, y) {
                samples[idx] = v;
                valid[idx] = neighbours_usable(&seg.occlusion, x, y);
            }
        }
    }
    Ok(PolarIris {
        radial,
        angular,
        samples,
        valid,
    })
}

fn neighbours_usable(mask: &SegMask, x: f64, y: f64) -> bool {
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = if x > x0 as f64 { x0 + 1 } else { x0 };
    let y1 = if y > y0 as f64 { y0 + 1 } else { y0 };
    if x1 >= mask.width() || y1 >= mask.height() {
        return false;
    }
    mask.get(x0, y0) && mask.get(x1, y0) && mask.get(x0, y1) && mask.get(x1, y1)
}

/// Binarize filter responses into a template. Bits are 1 iff the response is
/// strictly positive; a mask bit is 1 iff the whole kernel footprint is valid.
pub fn encode(polar: &PolarIris, bank: &FilterBank) -> Result<IrisTemplate, EncodingError> {
    let s = bank.size();
    let h = s / 2;
    let (rows_in, cols) = (polar.radial, polar.angular);
    if rows_in < s || cols < s {
        return Err(EncodingError::GridTooSmall {
            radial: rows_in,
            angular: cols,
            size: s,
        });
    }
    let rows = rows_in - 2 * h;
    let k = bank.count();
    let dims = TemplateDims {
        rows,
        cols,
        filters: k,
    };
    let mut template = IrisTemplate::empty(dims, TemplateMeta::default());

    // invalid-sample prefix counts per column window, for the footprint check
    let invalid_in_row_window: Vec<Vec<u32>> = (0..rows_in)
        .map(|r| {
            (0..cols)
                .map(|t| {
                    (0..s)
                        .filter(|&j| {
                            let tt = (t + cols + j - h) % cols;
                            !polar.is_valid(r, tt)
                        })
                        .count() as u32
                })
                .collect()
        })
        .collect();

    let mut window = vec![0.0f64; s * s];
    for rp in 0..rows {
        let r = rp + h;
        for t in 0..cols {
            let footprint_valid = (0..s).all(|i| invalid_in_row_window[r - h + i][t] == 0);
            // relative to the centre sample: identical for zero-sum kernels,
            // and exactly zero on flat input
            let centre = polar.sample(r, t);
            for i in 0..s {
                let row = r - h + i;
                for j in 0..s {
                    let tt = (t + cols + j - h) % cols;
                    window[i * s + j] = polar.sample(row, tt) - centre;
                }
            }
            for f in 0..k {
                let response: f64 = bank.kernel(f).iter().zip(&window).map(|(a, b)| a * b).sum();
                template.set(rp, f, t, response > 0.0, footprint_valid);
            }
        }
    }
    Ok(template)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::BoundaryCircle;

    fn concentric(w: usize, h: usize, f: impl Fn(f64) -> f64) -> (Plane, Segmentation) {
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        let plane = Plane::from_fn(w, h, |x, y| {
            f(((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt()) as f32
        });
        let seg = Segmentation {
            pupil: BoundaryCircle { cx, cy, r: 40.0 },
            iris: BoundaryCircle { cx, cy, r: 110.0 },
            occlusion: SegMask::filled(w, h, true),
        };
        (plane, seg)
    }

    #[test]
    fn concentric_rings_give_constant_rows() {
        let (plane, seg) = concentric(300, 300, |d| 100.0 + 100.0 * (2.0 * PI * d / 128.0).cos());
        let polar = rubber_sheet_plane(&plane, &seg, 64, 512).unwrap();
        let range = 200.0;
        for r in 0..64 {
            let row = &polar.samples[r * 512..(r + 1) * 512];
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((hi - lo) / range < 1e-3, "row {r}: {}", (hi - lo) / range);
        }
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let (plane, mut seg) = concentric(100, 100, |_| 0.0);
        seg.iris.r = seg.pupil.r;
        assert!(matches!(
            rubber_sheet_plane(&plane, &seg, 8, 16),
            Err(EncodingError::GeometryError { .. })
        ));
    }

    #[test]
    fn occluded_wedge_marks_columns() {
        let (plane, mut seg) = concentric(300, 300, |d| d);
        let (cx, cy) = (150.0, 150.0);
        // occlude angles in [0, 2pi/8)
        seg.occlusion = SegMask::from_fn(300, 300, |x, y| {
            let a = (y as f64 - cy).atan2(x as f64 - cx).rem_euclid(2.0 * PI);
            a >= 2.0 * PI / 8.0
        });
        let polar = rubber_sheet_plane(&plane, &seg, 16, 512).unwrap();
        let invalid_cols = (0..512)
            .filter(|&t| (4..12).any(|r| !polar.is_valid(r, t)))
            .count();
        // 64 columns plus at most a couple of boundary columns on each side
        assert!((64..=68).contains(&invalid_cols), "{invalid_cols}");
    }

    fn random_polar(radial: usize, angular: usize, seed: u64) -> PolarIris {
        use rand::Rng;
        let mut rng = crate::seed::rng_for(seed, "polar");
        PolarIris {
            radial,
            angular,
            samples: (0..radial * angular)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
            valid: vec![true; radial * angular],
        }
    }

    #[test]
    fn constant_polar_encodes_to_zero_bits() {
        let bank = build_filter_bank(1, 8, 9).unwrap();
        let polar = PolarIris {
            radial: 64,
            angular: 512,
            samples: vec![77.0; 64 * 512],
            valid: vec![true; 64 * 512],
        };
        let t = encode(&polar, &bank).unwrap();
        assert_eq!(t.dims().bit_len(), 8 * 512 * 56);
        assert_eq!(t.code_ones(), 0);
        assert_eq!(t.mask_ones(), t.dims().bit_len());
    }

    #[test]
    fn negation_complements_nonzero_responses() {
        let bank = build_filter_bank(3, 4, 5).unwrap();
        let polar = random_polar(12, 40, 2);
        let mut neg = polar.clone();
        neg.samples.iter_mut().for_each(|v| *v = -*v);
        let a = encode(&polar, &bank).unwrap();
        let b = encode(&neg, &bank).unwrap();
        // random continuous samples give nonzero responses everywhere
        let d = a.dims();
        for r in 0..d.rows {
            for f in 0..d.filters {
                for t in 0..d.cols {
                    assert_ne!(a.code_bit(r, f, t), b.code_bit(r, f, t));
                }
            }
        }
    }

    #[test]
    fn single_invalid_sample_clears_footprint() {
        let bank = build_filter_bank(5, 3, 5).unwrap();
        let mut polar = random_polar(20, 32, 4);
        polar.valid[10 * 32 + 7] = false;
        let t = encode(&polar, &bank).unwrap();
        let cleared = t.dims().bit_len() - t.mask_ones();
        // rows 8..=12 (centres within 2 rows) x 5 columns x 3 filters
        assert_eq!(cleared, 5 * 5 * 3);
        polar.valid[10 * 32 + 7] = true;
        polar.valid[7] = false; // row 0, only touches centre row 2
        let t = encode(&polar, &bank).unwrap();
        assert_eq!(t.dims().bit_len() - t.mask_ones(), 5 * 3);
    }

    #[test]
    fn column_shift_equivariance() {
        let bank = build_filter_bank(9, 6, 7).unwrap();
        let polar = random_polar(16, 64, 11);
        let a = encode(&polar, &bank).unwrap();
        let b = encode(&polar.shift_columns(5), &bank).unwrap();
        let d = a.dims();
        for r in 0..d.rows {
            for f in 0..d.filters {
                for t in 0..d.cols {
                    assert_eq!(b.code_bit(r, f, (t + 5) % d.cols), a.code_bit(r, f, t));
                }
            }
        }
    }

    #[test]
    fn encode_is_deterministic() {
        let bank = build_filter_bank(9, 8, 9).unwrap();
        let polar = random_polar(20, 64, 3);
        assert_eq!(
            encode(&polar, &bank).unwrap(),
            encode(&polar, &bank).unwrap()
        );
    }
}
