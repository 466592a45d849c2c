//! Word-level primitives on packed rings.

/// Rotate a ring of `cols` bits so that `dst[t] = src[(t - k) mod cols]`.
/// `src` padding bits must be zero; `dst` padding is left zero.
#[inline]
pub fn rotate_ring(src: &[u64], cols: usize, k: usize, dst: &mut [u64]) {
    debug_assert_eq!(src.len(), dst.len());
    debug_assert!(k < cols);
    let n = src.len();
    if k == 0 {
        dst.copy_from_slice(src);
        return;
    }
    dst.fill(0);
    // left shift by k
    let (ws, bs) = (k / 64, k % 64);
    for i in ws..n {
        let mut v = src[i - ws] << bs;
        if bs > 0 && i > ws {
            v |= src[i - ws - 1] >> (64 - bs);
        }
        dst[i] |= v;
    }
    // right shift by cols - k
    let m = cols - k;
    let (wm, bm) = (m / 64, m % 64);
    for i in 0..n.saturating_sub(wm) {
        let mut v = src[i + wm] >> bm;
        if bm > 0 && i + wm + 1 < n {
            v |= src[i + wm + 1] << (64 - bm);
        }
        dst[i] |= v;
    }
    let tail = cols % 64;
    if tail != 0 {
        dst[n - 1] &= (1u64 << tail) - 1;
    }
}

/// Rotate every ring of a packed template buffer.
pub fn rotate_rings(src: &[u64], cols: usize, words_per_ring: usize, shift: i64, dst: &mut [u64]) {
    let k = shift.rem_euclid(cols as i64) as usize;
    for (s, d) in src
        .chunks_exact(words_per_ring)
        .zip(dst.chunks_exact_mut(words_per_ring))
    {
        rotate_ring(s, cols, k, d);
    }
}

/// Returns `(disagreeing valid bits, jointly valid bits)`.
#[inline]
pub fn masked_disagreement(
    a_code: &[u64],
    a_mask: &[u64],
    b_code: &[u64],
    b_mask: &[u64],
) -> (u64, u64) {
    let mut disagree = 0u64;
    let mut overlap = 0u64;
    for (((ac, am), bc), bm) in a_code.iter().zip(a_mask).zip(b_code).zip(b_mask) {
        let m = am & bm;
        disagree += ((ac ^ bc) & m).count_ones() as u64;
        overlap += m.count_ones() as u64;
    }
    (disagree, overlap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn to_bits(words: &[u64], cols: usize) -> Vec<bool> {
        (0..cols)
            .map(|t| words[t / 64] >> (t % 64) & 1 == 1)
            .collect()
    }

    proptest! {
        #[test]
        fn rotation_matches_naive(cols in 1usize..200, seed in any::<u64>(), shift in -300i64..300) {
            let n = cols.div_ceil(64);
            let mut state = seed | 1;
            let mut src: Vec<u64> = (0..n).map(|_| {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17; state
            }).collect();
            if cols % 64 != 0 {
                src[n - 1] &= (1u64 << (cols % 64)) - 1;
            }
            let mut dst = vec![0u64; n];
            rotate_rings(&src, cols, n, shift, &mut dst);
            let s = to_bits(&src, cols);
            let d = to_bits(&dst, cols);
            for t in 0..cols {
                let from = (t as i64 - shift).rem_euclid(cols as i64) as usize;
                prop_assert_eq!(d[t], s[from]);
            }
            if cols % 64 != 0 {
                prop_assert_eq!(dst[n - 1] >> (cols % 64), 0);
            }
        }
    }
}
