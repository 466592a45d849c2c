//! Bit-packed iris templates and the `IRT1` file format.
//!
//! In memory each `(row, filter)` pair owns one angular ring of `cols` bits
//! stored in `ceil(cols / 64)` words, so rotation compensation is a per-ring
//! bit rotation. Padding bits are zero in both code and mask.
//!
//! On disk (`IRT1`, little-endian):
//!
//! ```text
//! "IRT1" | u32 rows | u32 cols | u32 filters
//! code bits, canonical order, packed LSB-first
//! mask bits, same layout
//! u32 metadata length | metadata JSON
//! ```
//!
//! The canonical bit index is `(row * filters + filter) * cols + col`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EncodingError;
use crate::corpus::Origin;
use crate::segmentation::QualityAssessment;

const MAGIC: &[u8; 4] = b"IRT1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemplateDims {
    pub rows: usize,
    pub cols: usize,
    pub filters: usize,
}

impl TemplateDims {
    pub fn bit_len(&self) -> usize {
        self.rows * self.cols * self.filters
    }

    pub fn rings(&self) -> usize {
        self.rows * self.filters
    }

    pub fn words_per_ring(&self) -> usize {
        self.cols.div_ceil(64)
    }

    pub fn words(&self) -> usize {
        self.rings() * self.words_per_ring()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateMeta {
    pub id: String,
    /// Subject+eye label; empty for synthetic samples.
    pub identity: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityAssessment>,
}

impl Default for TemplateMeta {
    fn default() -> Self {
        TemplateMeta {
            id: String::new(),
            identity: String::new(),
            origin: Origin::RealTraining,
            quality: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrisTemplate {
    dims: TemplateDims,
    code: Vec<u64>,
    mask: Vec<u64>,
    pub meta: TemplateMeta,
}

impl IrisTemplate {
    pub fn empty(dims: TemplateDims, meta: TemplateMeta) -> Self {
        IrisTemplate {
            dims,
            code: vec![0; dims.words()],
            mask: vec![0; dims.words()],
            meta,
        }
    }

    /// Build from canonical-order bit slices.
    pub fn from_bits(
        dims: TemplateDims,
        code: &[bool],
        mask: &[bool],
        meta: TemplateMeta,
    ) -> Result<Self, EncodingError> {
        if code.len() != dims.bit_len() || mask.len() != dims.bit_len() {
            return Err(EncodingError::BadTemplate(format!(
                "expected {} bits, got code {} / mask {}",
                dims.bit_len(),
                code.len(),
                mask.len()
            )));
        }
        let mut t = Self::empty(dims, meta);
        for (i, (&c, &m)) in code.iter().zip(mask).enumerate() {
            let (ring, col) = (i / dims.cols, i % dims.cols);
            let w = ring * dims.words_per_ring() + col / 64;
            if c {
                t.code[w] |= 1 << (col % 64);
            }
            if m {
                t.mask[w] |= 1 << (col % 64);
            }
        }
        Ok(t)
    }

    pub fn dims(&self) -> TemplateDims {
        self.dims
    }

    pub fn code_words(&self) -> &[u64] {
        &self.code
    }

    pub fn mask_words(&self) -> &[u64] {
        &self.mask
    }

    #[inline]
    fn locate(&self, row: usize, filter: usize, col: usize) -> (usize, u64) {
        let ring = row * self.dims.filters + filter;
        (
            ring * self.dims.words_per_ring() + col / 64,
            1u64 << (col % 64),
        )
    }

    pub fn set(&mut self, row: usize, filter: usize, col: usize, code: bool, mask: bool) {
        let (w, bit) = self.locate(row, filter, col);
        if code {
            self.code[w] |= bit;
        } else {
            self.code[w] &= !bit;
        }
        if mask {
            self.mask[w] |= bit;
        } else {
            self.mask[w] &= !bit;
        }
    }

    pub fn code_bit(&self, row: usize, filter: usize, col: usize) -> bool {
        let (w, bit) = self.locate(row, filter, col);
        self.code[w] & bit != 0
    }

    pub fn mask_bit(&self, row: usize, filter: usize, col: usize) -> bool {
        let (w, bit) = self.locate(row, filter, col);
        self.mask[w] & bit != 0
    }

    pub fn code_ones(&self) -> usize {
        self.code.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn mask_ones(&self) -> usize {
        self.mask.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn mask_density(&self) -> f64 {
        self.mask_ones() as f64 / self.dims.bit_len() as f64
    }

    /// Canonical-order bits.
    pub fn code_bits(&self) -> Vec<bool> {
        self.canonical(&self.code)
    }

    pub fn mask_bits(&self) -> Vec<bool> {
        self.canonical(&self.mask)
    }

    fn canonical(&self, words: &[u64]) -> Vec<bool> {
        let d = self.dims;
        let wpr = d.words_per_ring();
        let mut out = Vec::with_capacity(d.bit_len());
        for ring in 0..d.rings() {
            for col in 0..d.cols {
                out.push(words[ring * wpr + col / 64] >> (col % 64) & 1 == 1);
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims;
        let mut out = Vec::with_capacity(16 + 2 * d.bit_len().div_ceil(8));
        out.extend_from_slice(MAGIC);
        for v in [d.rows, d.cols, d.filters] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend(pack_lsb_first(&self.code_bits()));
        out.extend(pack_lsb_first(&self.mask_bits()));
        let meta = serde_json::to_vec(&self.meta).expect("template metadata serializes");
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend(meta);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
        let bad = |m: &str| EncodingError::BadTemplate(m.to_string());
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("missing IRT1 header"));
        }
        let u32_at = |off: usize| -> Result<usize, EncodingError> {
            let b = bytes.get(off..off + 4).ok_or_else(|| bad("truncated"))?;
            Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
        };
        let dims = TemplateDims {
            rows: u32_at(4)?,
            cols: u32_at(8)?,
            filters: u32_at(12)?,
        };
        let n = dims.bit_len();
        let nbytes = n.div_ceil(8);
        let mut off = 16;
        let code = bytes
            .get(off..off + nbytes)
            .ok_or_else(|| bad("truncated code"))?;
        off += nbytes;
        let mask = bytes
            .get(off..off + nbytes)
            .ok_or_else(|| bad("truncated mask"))?;
        off += nbytes;
        let meta_len = u32_at(off)?;
        off += 4;
        let meta_bytes = bytes
            .get(off..off + meta_len)
            .ok_or_else(|| bad("truncated metadata"))?;
        if off + meta_len != bytes.len() {
            return Err(bad("trailing bytes after metadata"));
        }
        let meta: TemplateMeta = serde_json::from_slice(meta_bytes)
            .map_err(|e| EncodingError::BadTemplate(e.to_string()))?;
        Self::from_bits(
            dims,
            &unpack_lsb_first(code, n),
            &unpack_lsb_first(mask, n),
            meta,
        )
    }
}

fn pack_lsb_first(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn unpack_lsb_first(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

pub fn write_template(template: &IrisTemplate, path: &Path) -> Result<(), EncodingError> {
    let io = |source| EncodingError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(&template.to_bytes()).map_err(io)
}

pub fn read_template(path: &Path) -> Result<IrisTemplate, EncodingError> {
    let bytes = fs::read(path).map_err(|source| EncodingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    IrisTemplate::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IrisTemplate {
        let dims = TemplateDims {
            rows: 3,
            cols: 70,
            filters: 2,
        };
        let code: Vec<bool> = (0..dims.bit_len()).map(|i| i % 3 == 0).collect();
        let mask: Vec<bool> = (0..dims.bit_len()).map(|i| i % 7 != 0).collect();
        let meta = TemplateMeta {
            id: "S001-L-f000".into(),
            identity: "S001-L".into(),
            origin: Origin::RealTraining,
            quality: None,
        };
        IrisTemplate::from_bits(dims, &code, &mask, meta).unwrap()
    }

    #[test]
    fn header_layout_is_bit_exact() {
        let t = sample();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..4], b"IRT1");
        assert_eq!(&bytes[4..16], &[3, 0, 0, 0, 70, 0, 0, 0, 2, 0, 0, 0]);
        // code bit 0 set, bits 1,2 clear, bit 3 set -> 0b0100_1001 in byte 0
        assert_eq!(bytes[16], 0b0100_1001);
        let nbytes = (3 * 70 * 2usize).div_ceil(8);
        // mask bit 0 clear (0 % 7 == 0), bits 1..=6 set
        assert_eq!(bytes[16 + nbytes], 0b0111_1110);
    }

    #[test]
    fn bytes_roundtrip() {
        let t = sample();
        assert_eq!(IrisTemplate::from_bytes(&t.to_bytes()).unwrap(), t);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.irt");
        write_template(&t, &p).unwrap();
        assert_eq!(read_template(&p).unwrap(), t);
    }

    #[test]
    fn corrupt_files_rejected() {
        let bytes = sample().to_bytes();
        assert!(IrisTemplate::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(IrisTemplate::from_bytes(&bad).is_err());
    }

    #[test]
    fn padding_bits_stay_clear() {
        let t = sample();
        let wpr = t.dims().words_per_ring();
        for ring in 0..t.dims().rings() {
            let last = t.code_words()[ring * wpr + wpr - 1];
            assert_eq!(last >> 6, 0);
            assert_eq!(t.mask_words()[ring * wpr + wpr - 1] >> 6, 0);
        }
    }
}
