//! Floating-point image planes used internally for filtering and sampling.

use crate::corpus::RawImage;

/// A single-channel `f32` image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, fill: f32) -> Self {
        Plane {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(image: &RawImage) -> Self {
        Plane {
            width: image.width(),
            height: image.height(),
            data: image.pixels().iter().map(|&p| p as f32).collect(),
        }
    }

    /// Round and clamp into an 8-bit image.
    pub fn to_raw(&self) -> RawImage {
        let pixels = self
            .data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        RawImage::new(self.width, self.height, pixels).expect("plane dimensions are valid")
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Value at integer coordinates, `None` outside the plane.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> Option<f32> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.data[y as usize * self.width + x as usize])
        }
    }

    /// Bilinear interpolation; `None` when any of the four neighbours is outside.
    #[inline]
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0) {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        if x0 >= self.width || y0 >= self.height {
            return None;
        }
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
        let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
        if x1 >= self.width || y1 >= self.height {
            return None;
        }
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        Some(top + (bottom - top) * fy)
    }

    /// Separable Gaussian blur with clamp-to-edge borders.
    pub fn gaussian_blur(&self, sigma: f64) -> Plane {
        if sigma <= 0.0 {
            return self.clone();
        }
        let kernel = gaussian_kernel(sigma);
        let radius = (kernel.len() / 2) as i64;
        let (w, h) = (self.width, self.height);
        let mut tmp = vec![0f32; w * h];
        for y in 0..h {
            let row = &self.data[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = 0f32;
                for (i, k) in kernel.iter().enumerate() {
                    let sx = (x as i64 + i as i64 - radius).clamp(0, w as i64 - 1) as usize;
                    acc += k * row[sx];
                }
                tmp[y * w + x] = acc;
            }
        }
        let mut out = vec![0f32; w * h];
        for y in 0..h {
            for (i, k) in kernel.iter().enumerate() {
                let sy = (y as i64 + i as i64 - radius).clamp(0, h as i64 - 1) as usize;
                let src = &tmp[sy * w..(sy + 1) * w];
                let dst = &mut out[y * w..(y + 1) * w];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += k * s;
                }
            }
        }
        Plane {
            width: w,
            height: h,
            data: out,
        }
    }

    /// Blur then 2x2-average down to half resolution.
    pub fn pyr_down(&self) -> Plane {
        let blurred = self.gaussian_blur(1.0);
        let w = (self.width / 2).max(1);
        let h = (self.height / 2).max(1);
        Plane::from_fn(w, h, |x, y| {
            let (x0, y0) = (2 * x, 2 * y);
            let x1 = (x0 + 1).min(self.width - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            0.25 * (blurred.get(x0, y0)
                + blurred.get(x1, y0)
                + blurred.get(x0, y1)
                + blurred.get(x1, y1))
        })
    }
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k.into_iter().map(|v| v as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_preserves_constant_field() {
        let p = Plane::new(20, 10, 77.0);
        let b = p.gaussian_blur(2.0);
        assert!(b.data.iter().all(|&v| (v - 77.0).abs() < 1e-3));
    }

    #[test]
    fn bilinear_matches_linear_ramp() {
        let p = Plane::from_fn(8, 8, |x, y| (2 * x + 3 * y) as f32);
        let v = p.bilinear(2.25, 3.5).unwrap();
        assert!((v - (4.5 + 10.5)).abs() < 1e-9);
        assert_eq!(p.bilinear(7.0, 7.0), Some(35.0));
        assert_eq!(p.bilinear(7.5, 1.0), None);
        assert_eq!(p.bilinear(-0.1, 1.0), None);
    }

    #[test]
    fn pyr_down_halves_dimensions() {
        let p = Plane::new(640, 480, 3.0);
        let d = p.pyr_down();
        assert_eq!((d.width, d.height), (320, 240));
    }
}
