use iris_audit::curate::curate_real;
use iris_audit::segmentation::{
    calibrate_texture_floor, segment, texture_energy, SegmentationConfig, DEFAULT_TEXTURE_FLOOR,
};
use iris_audit::synth::{render_real_corpus, RealCorpusSpec};

#[test]
fn texture_floor_calibration() {
    let spec = RealCorpusSpec {
        identities: 24,
        frames_per_identity: 2,
        blink_rate: 0.0,
        ..Default::default()
    };
    let (entries, _) = render_real_corpus(2024, &spec).unwrap();
    let cfg = SegmentationConfig::default();
    let curated = curate_real(entries, None, &cfg).unwrap();
    assert_eq!(curated.counts.kept, 48);
    let energies: Vec<f64> = curated
        .framed
        .iter()
        .map(|e| {
            let seg = segment(&e.image, &cfg).unwrap();
            texture_energy(&e.image, &seg.occlusion)
        })
        .collect();
    let floor = calibrate_texture_floor(&energies).unwrap();
    println!("calibrated texture floor {floor:.4}");
    assert!(
        (DEFAULT_TEXTURE_FLOOR - floor).abs() <= 0.1 * floor,
        "default {DEFAULT_TEXTURE_FLOOR} vs calibrated {floor}"
    );
}
