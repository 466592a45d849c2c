use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EncodingError;

/// Bank of `k` zero-mean `size x size` kernels.
///
/// Generated banks are orthonormal pseudo-random kernels; trained taps can be
/// loaded instead with [`FilterBank::from_taps`] or [`FilterBank::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    k: usize,
    size: usize,
    seed: u64,
    taps: Vec<f64>,
}

pub fn build_filter_bank(seed: u64, k: usize, size: usize) -> Result<FilterBank, EncodingError> {
    let max = (size * size).saturating_sub(1);
    if k > max || k == 0 {
        return Err(EncodingError::RankError { k, size, max });
    }
    let n = size * size;
    let mut rng = crate::seed::rng_for(seed, "filter-bank");
    let mut kernels: Vec<Vec<f64>> = Vec::with_capacity(k);
    while kernels.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for prev in &kernels {
                let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        kernels.push(v);
    }
    Ok(FilterBank {
        k,
        size,
        seed,
        taps: kernels.concat(),
    })
}

impl FilterBank {
    /// Wrap externally trained taps, `k` kernels of `size*size` values each.
    pub fn from_taps(k: usize, size: usize, taps: Vec<f64>) -> Result<Self, EncodingError> {
        if k == 0 || size == 0 || taps.len() != k * size * size {
            return Err(EncodingError::BadTaps(format!(
                "expected {} taps for {k} kernels of side {size}, got {}",
                k * size * size,
                taps.len()
            )));
        }
        if size.is_multiple_of(2) {
            return Err(EncodingError::BadTaps(format!(
                "kernel side {size} must be odd"
            )));
        }
        Ok(FilterBank {
            k,
            size,
            seed: 0,
            taps,
        })
    }

    /// Load a JSON tap file `{ "k": .., "size": .., "taps": [..] }`.
    pub fn load(path: &Path) -> Result<Self, EncodingError> {
        #[derive(Deserialize)]
        struct TapFile {
            k: usize,
            size: usize,
            taps: Vec<f64>,
        }
        let text = std::fs::read_to_string(path).map_err(|source| EncodingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: TapFile =
            serde_json::from_str(&text).map_err(|e| EncodingError::BadTaps(e.to_string()))?;
        Self::from_taps(file.k, file.size, file.taps)
    }

    pub fn count(&self) -> usize {
        self.k
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kernel(&self, i: usize) -> &[f64] {
        let n = self.size * self.size;
        &self.taps[i * n..(i + 1) * n]
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}
