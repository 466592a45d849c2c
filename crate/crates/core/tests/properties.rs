use iris_audit::analysis::{
    far_thresholds, heatmap_cell, leakage_heatmap, quantile, roc, summarize, HeatCell,
    DEFAULT_FAR_LEVELS,
};
use iris_audit::corpus::{
    blink_filter, center_crop, mask_coverage, mirror_augment, mirror_image, CorpusEntry, Origin,
    RawImage, SegMask,
};
use iris_audit::encoding::{IrisTemplate, TemplateDims, TemplateMeta};
use iris_audit::matching::{fractional_hd, MatcherConfig, Orientation, PairType};
use iris_audit::synth::{sample_batch, GeneratorModel};
use proptest::prelude::*;

fn entry(w: usize, h: usize, pixels: Vec<u8>, coverage: usize) -> CorpusEntry {
    let mask = SegMask::from_fn(w, h, |x, y| y * w + x < coverage);
    CorpusEntry {
        image: RawImage::new(w, h, pixels).unwrap(),
        mask: Some(mask),
        identity: "S001-L".into(),
        frame_index: 0,
        origin: Origin::RealTraining,
        mirrored: false,
    }
}

fn template(dims: TemplateDims, code: &[bool], mask: &[bool]) -> IrisTemplate {
    IrisTemplate::from_bits(dims, code, mask, TemplateMeta::default()).unwrap()
}

fn bits(n: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), n)
}

/// Rate of scores accepted at `t` (inclusive, distance orientation).
fn accept_rate(scores: &[f64], t: f64) -> f64 {
    scores.iter().filter(|&&s| s <= t).count() as f64 / scores.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blink_filter_is_monotone(coverages in proptest::collection::vec(0usize..=64, 1..30), t1 in 0usize..70, dt in 0usize..20) {
        let entries: Vec<CorpusEntry> = coverages.iter().map(|&c| entry(8, 8, vec![0; 64], c)).collect();
        let (lo, _) = blink_filter(entries.clone(), t1).unwrap();
        let (hi, _) = blink_filter(entries, t1 + dt).unwrap();
        prop_assert!(hi.len() <= lo.len());
        for e in &hi {
            prop_assert!(lo.contains(e));
        }
    }

    #[test]
    fn mirroring_is_an_involution(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let px: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
        let img = RawImage::new(w, h, px).unwrap();
        prop_assert_eq!(&mirror_image(&mirror_image(&img)), &img);
        let e = entry(w, h, img.pixels().to_vec(), w * h / 2);
        let aug = mirror_augment(vec![e.clone()]);
        prop_assert_eq!(aug.len(), 2);
        prop_assert_eq!(&aug[0], &e);
        prop_assert!(aug[1].mirrored);
        prop_assert_eq!(mask_coverage(aug[1].mask.as_ref().unwrap()), w * h / 2);
        let back = mirror_augment(vec![aug[1].clone()]);
        prop_assert_eq!(&back[1].image, &e.image);
        prop_assert_eq!(&back[1].mask, &e.mask);
    }

    #[test]
    fn crop_copies_pixels_exactly(w in 10usize..40, h in 10usize..40, size in 1usize..10, cx in 0i64..40, cy in 0i64..40) {
        let px: Vec<u8> = (0..w * h).map(|i| (i * 7 % 251) as u8).collect();
        let e = entry(w, h, px, w * h / 3);
        match center_crop(&e, (cx, cy), size) {
            Ok(c) => {
                let half = (size / 2) as i64;
                let (x0, y0) = ((cx - half) as usize, (cy - half) as usize);
                for y in 0..size {
                    for x in 0..size {
                        prop_assert_eq!(c.image.get(x, y), e.image.get(x + x0, y + y0));
                        prop_assert_eq!(c.mask.as_ref().unwrap().get(x, y), e.mask.as_ref().unwrap().get(x + x0, y + y0));
                    }
                }
            }
            Err(_) => {
                let half = (size / 2) as i64;
                prop_assert!(cx - half < 0 || cy - half < 0 || cx - half + size as i64 > w as i64 || cy - half + size as i64 > h as i64);
            }
        }
    }

    #[test]
    fn hd_is_symmetric_and_bounded(a in bits(8 * 32 * 2), b in bits(8 * 32 * 2), ma in bits(8 * 32 * 2), mb in bits(8 * 32 * 2)) {
        let dims = TemplateDims { rows: 8, cols: 32, filters: 2 };
        let (ta, tb) = (template(dims, &a, &ma), template(dims, &b, &mb));
        let cfg = MatcherConfig { max_shift: 4, min_overlap: 1, orientation: Orientation::Distance };
        let ab = fractional_hd(&ta, &tb, &cfg);
        let ba = fractional_hd(&tb, &ta, &cfg);
        match (ab, ba) {
            (Ok(x), Ok(y)) => {
                prop_assert!((0.0..=1.0).contains(&x.value));
                prop_assert!(x.overlap >= 1);
                prop_assert_eq!(x.value, y.value);
                prop_assert_eq!(x.overlap, y.overlap);
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "asymmetric outcome {:?} {:?}", x, y),
        }
    }

    #[test]
    fn wider_shift_range_never_increases_distance(a in bits(8 * 32 * 2), b in bits(8 * 32 * 2), s in 0u32..8) {
        let dims = TemplateDims { rows: 8, cols: 32, filters: 2 };
        let full = vec![true; dims.bit_len()];
        let (ta, tb) = (template(dims, &a, &full), template(dims, &b, &full));
        let at = |m: u32| fractional_hd(&ta, &tb, &MatcherConfig { max_shift: m, min_overlap: 1, orientation: Orientation::Distance }).unwrap().value;
        prop_assert!(at(s + 1) <= at(s));
    }

    #[test]
    fn far_threshold_accepts_its_level(mut scores in proptest::collection::vec(0.0f64..1.0, 100..2000), li in 0usize..3) {
        let level = DEFAULT_FAR_LEVELS[li];
        scores.sort_by(f64::total_cmp);
        let d = summarize(&scores, PairType::ImpostorRR, Orientation::Distance, 10).unwrap();
        let t = far_thresholds(&d, &[level])[0];
        let n = scores.len() as f64;
        match t.threshold() {
            Some(th) => {
                let rate = accept_rate(&scores, th);
                prop_assert!((rate - level).abs() <= 1.0 / n + 1e-12, "rate {} level {}", rate, level);
            }
            None => prop_assert!(level < 1.0 / n),
        }
    }

    #[test]
    fn heatmap_rows_monotone_in_far(rr in proptest::collection::vec(0.0f64..1.0, 200..1500), rf in proptest::collection::vec(0.0f64..1.0, 1..300)) {
        let d = summarize(&rr, PairType::ImpostorRR, Orientation::Distance, 10).unwrap();
        let ts = far_thresholds(&d, &DEFAULT_FAR_LEVELS);
        let h = leakage_heatmap(&[(1, rf.clone())], &ts, Orientation::Distance);
        for w in h.cells.windows(2) {
            if let (Some(a), Some(b)) = (w[0][0].percent(), w[1][0].percent()) {
                prop_assert!(b <= a);
            }
        }
        for (i, t) in ts.iter().enumerate() {
            prop_assert_eq!(h.cells[i][0], heatmap_cell(&rf, t, Orientation::Distance));
            if let HeatCell::Value { percent, .. } = h.cells[i][0] {
                prop_assert!((0.0..=100.0).contains(&percent));
            }
        }
    }

    #[test]
    fn auc_equals_mann_whitney(g in proptest::collection::vec(0u8..20, 2..60), i in proptest::collection::vec(0u8..20, 2..60)) {
        let gs: Vec<f64> = g.iter().map(|&v| v as f64 / 20.0).collect();
        let is: Vec<f64> = i.iter().map(|&v| v as f64 / 20.0).collect();
        let gd = summarize(&gs, PairType::Genuine, Orientation::Distance, 5).unwrap();
        let id = summarize(&is, PairType::ImpostorRR, Orientation::Distance, 5).unwrap();
        let curve = roc(&gd, &id).unwrap();
        let mut u = 0.0;
        for &x in &gs {
            for &y in &is {
                u += if x < y { 1.0 } else if x == y { 0.5 } else { 0.0 };
            }
        }
        prop_assert!((curve.auc - u / (gs.len() * is.len()) as f64).abs() < 1e-9);
        for w in curve.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn quantiles_match_sort_and_interpolate(v in proptest::collection::vec(-100.0f64..100.0, 1..50), p in 0.0f64..=1.0) {
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let h = (s.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(s.len() - 1);
        let oracle = s[lo] + (h - lo as f64) * (s[hi] - s[lo]);
        prop_assert!((quantile(&s, p) - oracle).abs() < 1e-9);
    }

    #[test]
    fn leak_indices_depend_only_on_seed_and_rate(seed in any::<u64>(), lam in 0.0f64..1.0, extra in 0.0f64..0.5) {
        let training: Vec<CorpusEntry> = (0..4).map(|i| entry(16, 16, vec![i as u8 * 40; 256], 10)).collect();
        let m1 = GeneratorModel::new(training.clone(), lam, 14, 1, seed).unwrap();
        let m2 = GeneratorModel::new(training.clone(), lam, 3, 9, seed).unwrap();
        let (_, l1) = sample_batch(&m1, 40).unwrap();
        let (_, l2) = sample_batch(&m2, 40).unwrap();
        let idx = |l: &iris_audit::synth::LeakLedger| l.leaks.iter().map(|r| (r.index, r.source_id.clone())).collect::<Vec<_>>();
        prop_assert_eq!(idx(&l1), idx(&l2));
        let m3 = GeneratorModel::new(training, (lam + extra).min(1.0), 14, 1, seed).unwrap();
        let (_, l3) = sample_batch(&m3, 40).unwrap();
        let wider = idx(&l3);
        for x in idx(&l1) {
            prop_assert!(wider.contains(&x));
        }
    }
}
