//! Minimal SVG and CSV renderings of analysis results.

use std::fmt::Write;

use super::{HeatCell, Heatmap, RocCurve, ScoreDistribution};
use crate::matching::PairType;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn color(p: PairType) -> &'static str {
    match p {
        PairType::Genuine => "#2a9d8f",
        PairType::ImpostorRR => "#264653",
        PairType::ImpostorRF => "#e76f51",
        PairType::ImpostorFF => "#e9c46a",
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = write!(
        out,
        r##"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="#000"/>"##,
        H - PAD,
        W - PAD
    );
}

/// Overlaid density histograms on a shared score axis.
pub fn histogram_svg(title: &str, dists: &[&ScoreDistribution], bins: usize) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let lo = dists
        .iter()
        .filter_map(|d| d.scores.first())
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = dists
        .iter()
        .filter_map(|d| d.scores.last())
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) || bins == 0 {
        out.push_str("</svg>\n");
        return out;
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let densities: Vec<Vec<f64>> = dists
        .iter()
        .map(|d| {
            let mut c = vec![0.0; bins];
            for &v in &d.scores {
                let b = (((v - lo) / span * bins as f64) as usize).min(bins - 1);
                c[b] += 1.0;
            }
            let n = d.scores.len().max(1) as f64;
            c.iter().map(|x| x / n).collect()
        })
        .collect();
    let ymax = densities
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max)
        .max(1e-12);
    let (pw, ph) = (W - 2.0 * PAD, H - 2.0 * PAD);
    for (d, dens) in dists.iter().zip(&densities) {
        let mut path = String::new();
        for (i, &v) in dens.iter().enumerate() {
            let x0 = PAD + pw * i as f64 / bins as f64;
            let x1 = PAD + pw * (i + 1) as f64 / bins as f64;
            let y = H - PAD - ph * v / ymax;
            let _ = write!(
                path,
                "{}{x0:.2} {y:.2} L{x1:.2} {y:.2} ",
                if i == 0 { "M" } else { "L" }
            );
        }
        let _ = write!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.trim_end(),
            color(d.pair_type)
        );
    }
    for (i, d) in dists.iter().enumerate() {
        let y = PAD + 16.0 * i as f64;
        let _ = write!(
            out,
            r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="11" fill="{}">{} (n={})</text>"#,
            W - PAD - 150.0,
            color(d.pair_type),
            d.pair_type.as_str(),
            d.count
        );
    }
    let _ = write!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">{lo:.3}</text><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{hi:.3}</text>"#,
        H - PAD + 15.0,
        W - PAD,
        H - PAD + 15.0
    );
    out.push_str("</svg>\n");
    out
}

pub fn roc_svg(title: &str, curves: &[(String, &RocCurve)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (pw, ph) = (W - 2.0 * PAD, H - 2.0 * PAD);
    let palette = [
        "#264653", "#e76f51", "#2a9d8f", "#e9c46a", "#8d99ae", "#9b2226",
    ];
    for (i, (label, curve)) in curves.iter().enumerate() {
        let mut path = String::new();
        for (j, &(fpr, tpr)) in curve.points.iter().enumerate() {
            let _ = write!(
                path,
                "{}{:.2} {:.2} ",
                if j == 0 { "M" } else { "L" },
                PAD + pw * fpr,
                H - PAD - ph * tpr
            );
        }
        let c = palette[i % palette.len()];
        let _ = write!(
            out,
            r#"<path d="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
            path.trim_end()
        );
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{c}">{label} AUC={:.4}</text>"#,
            W - PAD - 180.0,
            H - PAD - 16.0 * (curves.len() - i) as f64,
            curve.auc
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One row per FAR level, one column per snapshot; cells in percent.
pub fn heatmap_csv(h: &Heatmap) -> String {
    let mut out = String::from("far");
    for s in &h.snapshots {
        let _ = write!(out, ",snap{s:02}");
    }
    out.push('\n');
    for (level, row) in h.levels.iter().zip(&h.cells) {
        let _ = write!(out, "{level:e}");
        for c in row {
            match c {
                HeatCell::Value { percent, .. } => {
                    let _ = write!(out, ",{percent:.4}");
                }
                HeatCell::EmptyCell => out.push_str(",empty"),
                HeatCell::UnattainableFar => out.push_str(",unattainable"),
            }
        }
        out.push('\n');
    }
    out
}
