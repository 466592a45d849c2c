use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{AnalysisError, ScoreDistribution};
use crate::encoding::IrisTemplate;
use crate::matching::Orientation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofEstimate {
    pub p: f64,
    pub sigma: f64,
    pub n_dof: f64,
}

impl DofEstimate {
    pub fn from_moments(p: f64, sigma: f64) -> Result<Self, AnalysisError> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(AnalysisError::DegenerateDistribution);
        }
        Ok(DofEstimate {
            p,
            sigma,
            n_dof: p * (1.0 - p) / (sigma * sigma),
        })
    }
}

/// Binomial degrees of freedom `p(1-p)/sigma^2` of an impostor distribution.
pub fn estimate_dof(impostor: &ScoreDistribution) -> Result<DofEstimate, AnalysisError> {
    if impostor.orientation != Orientation::Distance {
        return Err(AnalysisError::OrientationError(
            impostor.orientation,
            Orientation::Distance,
        ));
    }
    DofEstimate::from_moments(impostor.mean, impostor.std)
}

/// Impostor statistics predicted from the bit correlation structure inside
/// individual templates, without comparing any pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveBits {
    /// Code length.
    pub n_bits: usize,
    /// Expected jointly valid bits at shift 0.
    pub overlap: f64,
    pub predicted_p: f64,
    pub predicted_sigma: f64,
    pub n_eff: f64,
    pub templates_used: usize,
}

struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(rows: usize, cols: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: p.plan_fft_forward(cols),
            col_fwd: p.plan_fft_forward(rows),
            row_inv: p.plan_fft_inverse(cols),
            col_inv: p.plan_fft_inverse(rows),
        }
    }

    fn run(&self, data: &mut [Complex<f64>], inverse: bool) {
        let (rf, cf) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        rf.process(data);
        let mut col = vec![Complex::default(); self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                col[r] = data[r * self.cols + c];
            }
            cf.process(&mut col);
            for r in 0..self.rows {
                data[r * self.cols + c] = col[r];
            }
        }
        if inverse {
            let s = 1.0 / (self.rows * self.cols) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Predict the shift-0 impostor mean and spread from per-template
/// autocorrelations.
///
/// Each template is viewed as `k` planes of `+1/-1/0` values (0 = masked).
/// For independent templates `a`, `b` the variance of the agreement sum is
/// the sum over all filter pairs and spatial lags of `c_a(lag) c_b(lag) /
/// n(lag)`, where `c` is the raw cross-correlation and `n(lag)` the number
/// of positions at that lag. The product is averaged over distinct template
/// pairs, so no pair is ever matched. Uses up to `max_templates` evenly
/// spaced templates.
pub fn predict_effective_bits(
    templates: &[IrisTemplate],
    max_templates: usize,
) -> Option<EffectiveBits> {
    if templates.len() < 2 || max_templates < 2 {
        return None;
    }
    let dims = templates[0].dims();
    if templates.iter().any(|t| t.dims() != dims) {
        return None;
    }
    let m = templates.len().min(max_templates);
    let chosen: Vec<&IrisTemplate> = (0..m)
        .map(|i| &templates[i * templates.len() / m])
        .collect();
    let (rows, cols, k) = (dims.rows, dims.cols, dims.filters);
    let prow = 2 * rows;
    let plane = prow * cols;
    let fft = Fft2::new(prow, cols);
    let npairs = k * (k + 1) / 2;

    // lag sums over templates: S1 = sum c_a, S2 = sum c_a^2, per filter pair
    let mut s1 = vec![0.0f64; npairs * plane];
    let mut s2 = vec![0.0f64; npairs * plane];
    // plane sums (for the mean term) and valid counts
    let mut m1 = vec![0.0f64; k];
    let mut m2 = vec![0.0f64; k];
    let mut v1 = vec![0.0f64; k];
    let mut v2 = vec![0.0f64; k];

    let mut spectra = vec![vec![Complex::default(); plane]; k];
    let mut buf = vec![Complex::default(); plane];
    for t in &chosen {
        for (f, spec) in spectra.iter_mut().enumerate() {
            spec.fill(Complex::default());
            let (mut sum, mut valid) = (0.0, 0.0);
            for r in 0..rows {
                for c in 0..cols {
                    if t.mask_bit(r, f, c) {
                        let x = if t.code_bit(r, f, c) { 1.0 } else { -1.0 };
                        spec[r * cols + c] = Complex::new(x, 0.0);
                        sum += x;
                        valid += 1.0;
                    }
                }
            }
            m1[f] += sum;
            m2[f] += sum * sum;
            v1[f] += valid;
            v2[f] += valid * valid;
            fft.run(spec, false);
        }
        let mut idx = 0;
        for f in 0..k {
            for g in f..k {
                for ((b, x), y) in buf.iter_mut().zip(&spectra[f]).zip(&spectra[g]) {
                    *b = x.conj() * y;
                }
                fft.run(&mut buf, true);
                let off = idx * plane;
                for (i, v) in buf.iter().enumerate() {
                    s1[off + i] += v.re;
                    s2[off + i] += v.re * v.re;
                }
                idx += 1;
            }
        }
    }

    let n = m as f64;
    let pair_mean = |a: f64, b: f64| (a * a - b) / (n * (n - 1.0));
    let mut second = 0.0;
    let mut idx = 0;
    for f in 0..k {
        for g in f..k {
            let weight = if f == g { 1.0 } else { 2.0 };
            let off = idx * plane;
            for lr in 0..prow {
                let dr = if lr < rows { lr } else { prow - lr };
                if dr >= rows {
                    continue;
                }
                let positions = ((rows - dr) * cols) as f64;
                for lc in 0..cols {
                    let i = off + lr * cols + lc;
                    second += weight * pair_mean(s1[i], s2[i]) / positions;
                }
            }
            idx += 1;
        }
    }
    let spatial = (rows * cols) as f64;
    let mean_agree: f64 = (0..k).map(|f| pair_mean(m1[f], m2[f]) / spatial).sum();
    let overlap: f64 = (0..k).map(|f| pair_mean(v1[f], v2[f]) / spatial).sum();
    if overlap <= 0.0 {
        return None;
    }
    let var = (second - mean_agree * mean_agree).max(0.0);
    // HD = (overlap - agreement sum) / (2 overlap)
    let predicted_p = 0.5 - mean_agree / (2.0 * overlap);
    let predicted_sigma = var.sqrt() / (2.0 * overlap);
    let n_eff = if predicted_sigma > 0.0 {
        predicted_p * (1.0 - predicted_p) / (predicted_sigma * predicted_sigma)
    } else {
        f64::INFINITY
    };
    Some(EffectiveBits {
        n_bits: dims.bit_len(),
        overlap,
        predicted_p,
        predicted_sigma,
        n_eff,
        templates_used: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{TemplateDims, TemplateMeta};
    use crate::matching::PairType;
    use rand::Rng;

    #[test]
    fn analytic_dof() {
        let d = DofEstimate::from_moments(0.5, 0.0353).unwrap();
        assert!((d.n_dof - 200.6).abs() < 0.5, "{}", d.n_dof);
        let d2 = DofEstimate::from_moments(0.5, 2.0 * 0.0353).unwrap();
        assert!((d.n_dof / d2.n_dof - 4.0).abs() < 1e-9);
        assert_eq!(
            DofEstimate::from_moments(0.5, 0.0),
            Err(AnalysisError::DegenerateDistribution)
        );
    }

    #[test]
    fn similarity_distribution_rejected() {
        let s = super::super::summarize(
            &[0.4, 0.6],
            PairType::ImpostorRR,
            Orientation::Similarity,
            2,
        )
        .unwrap();
        assert!(matches!(
            estimate_dof(&s),
            Err(AnalysisError::OrientationError(..))
        ));
    }

    fn template(rng: &mut impl Rng, dims: TemplateDims, run: usize) -> IrisTemplate {
        // runs of `run` identical bits along the angle, at a random phase
        let mut code = vec![false; dims.bit_len()];
        let phase = rng.gen_range(0..run);
        for ring in 0..dims.rings() {
            for c in (0..dims.cols).step_by(run) {
                let b = rng.gen::<bool>();
                for j in c..c + run {
                    code[ring * dims.cols + (j + phase) % dims.cols] = b;
                }
            }
        }
        IrisTemplate::from_bits(
            dims,
            &code,
            &vec![true; dims.bit_len()],
            TemplateMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn independent_bits_predict_full_length() {
        let dims = TemplateDims {
            rows: 4,
            cols: 64,
            filters: 2,
        };
        let mut rng = crate::seed::rng_for(5, "dof");
        let ts: Vec<IrisTemplate> = (0..40).map(|_| template(&mut rng, dims, 1)).collect();
        let e = predict_effective_bits(&ts, 40).unwrap();
        assert_eq!(e.overlap, dims.bit_len() as f64);
        let ratio = e.n_eff / dims.bit_len() as f64;
        assert!((0.75..1.33).contains(&ratio), "{ratio}");
    }

    #[test]
    fn runs_of_four_shrink_the_dof() {
        // independent phases: xor correlation (1 - l/4)^2 summed over lags = 2.75
        let dims = TemplateDims {
            rows: 4,
            cols: 64,
            filters: 2,
        };
        let mut rng = crate::seed::rng_for(6, "dof");
        let ts: Vec<IrisTemplate> = (0..40).map(|_| template(&mut rng, dims, 4)).collect();
        let e = predict_effective_bits(&ts, 40).unwrap();
        let ratio = e.n_eff / (dims.bit_len() as f64 / 2.75);
        assert!((0.75..1.33).contains(&ratio), "{ratio}");
    }
}
