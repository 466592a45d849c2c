use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat};
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{CorpusEntry, CorpusError, Origin, RawImage, SegMask};

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn image_err(path: &Path, source: image::ImageError) -> CorpusError {
    CorpusError::Image {
        path: path.display().to_string(),
        source,
    }
}

/// Read any PNG and convert it to 8-bit grayscale.
pub fn load_png(path: &Path) -> Result<RawImage, CorpusError> {
    let img = image::open(path)
        .map_err(|e| image_err(path, e))?
        .into_luma8();
    let (w, h) = img.dimensions();
    RawImage::new(w as usize, h as usize, img.into_raw())
}

pub fn save_png(image: &RawImage, path: &Path) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let buf = GrayImage::from_raw(
        image.width() as u32,
        image.height() as u32,
        image.pixels().to_vec(),
    )
    .expect("buffer matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

/// Masks may be 1-bit or 8-bit; any nonzero pixel is set.
pub fn load_mask(path: &Path) -> Result<SegMask, CorpusError> {
    let img = load_png(path)?;
    SegMask::new(
        img.width(),
        img.height(),
        img.pixels().iter().map(|&p| p != 0).collect(),
    )
}

pub fn save_mask(mask: &SegMask, path: &Path) -> Result<(), CorpusError> {
    let img = RawImage::new(
        mask.width(),
        mask.height(),
        mask.bits()
            .iter()
            .map(|&b| if b { 255 } else { 0 })
            .collect(),
    )?;
    save_png(&img, path)
}

/// One line of a corpus manifest (JSON Lines).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub path: String,
    pub mask_path: Option<String>,
    pub identity: String,
    pub frame: u32,
    /// `"real"` or `"synthetic"`.
    pub origin: String,
    pub snapshot: Option<u32>,
    pub seed: Option<u64>,
    pub mirrored: bool,
}

impl ManifestRecord {
    pub fn origin(&self) -> super::Origin {
        match (self.origin.as_str(), self.snapshot, self.seed) {
            ("synthetic", Some(snapshot), Some(seed)) => {
                super::Origin::Synthetic { snapshot, seed }
            }
            _ => super::Origin::RealTraining,
        }
    }

    pub fn id(&self) -> String {
        super::entry_id(&self.origin(), &self.identity, self.frame, self.mirrored)
    }
}

pub fn write_manifest(records: &[ManifestRecord], path: &Path) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("manifest records serialize");
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Manifest {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

impl ManifestRecord {
    /// Record for `entry` with image paths relative to the manifest.
    pub fn for_entry(entry: &CorpusEntry, path: String, mask_path: Option<String>) -> Self {
        let (origin, snapshot, seed) = match entry.origin {
            Origin::RealTraining => ("real", None, None),
            Origin::Synthetic { snapshot, seed } => ("synthetic", Some(snapshot), Some(seed)),
        };
        ManifestRecord {
            path,
            mask_path,
            identity: entry.identity.clone(),
            frame: entry.frame_index,
            origin: origin.into(),
            snapshot,
            seed,
            mirrored: entry.mirrored,
        }
    }
}

/// `path` relative to `base` when both are relative or both absolute and
/// `base` has no `..` components; otherwise `path` unchanged.
fn relative_to(path: &Path, base: &Path) -> PathBuf {
    use std::path::Component;
    let plain = |p: &Path| p.components().all(|c| !matches!(c, Component::ParentDir));
    if path.is_absolute() != base.is_absolute() || !plain(base) {
        return path.to_path_buf();
    }
    fn norm(p: &Path) -> Vec<Component<'_>> {
        p.components()
            .filter(|c| !matches!(c, Component::CurDir))
            .collect()
    }
    let (p, b) = (norm(path), norm(base));
    let common = p.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &p[common..] {
        out.push(c);
    }
    out
}

/// Write each entry as `<image_dir>/<id>.png` (plus `<id>.mask.png`) and a
/// manifest whose paths are relative to the manifest's directory.
pub fn store_entries(
    entries: &[CorpusEntry],
    image_dir: &Path,
    manifest: &Path,
) -> Result<(), CorpusError> {
    let base = manifest.parent().unwrap_or(Path::new(""));
    let rel = relative_to(image_dir, base);
    let rel = rel.as_path();
    let records: Result<Vec<ManifestRecord>, CorpusError> = entries
        .par_iter()
        .map(|e| {
            let id = e.id();
            save_png(&e.image, &image_dir.join(format!("{id}.png")))?;
            let mask_path = match &e.mask {
                Some(m) => {
                    save_mask(m, &image_dir.join(format!("{id}.mask.png")))?;
                    Some(rel.join(format!("{id}.mask.png")).display().to_string())
                }
                None => None,
            };
            Ok(ManifestRecord::for_entry(
                e,
                rel.join(format!("{id}.png")).display().to_string(),
                mask_path,
            ))
        })
        .collect();
    write_manifest(&records?, manifest)
}

/// Load every entry listed in a manifest, in manifest order.
pub fn load_entries(manifest: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let base = manifest.parent().unwrap_or(Path::new(""));
    read_manifest(manifest)?
        .par_iter()
        .map(|r| {
            let image = load_png(&base.join(&r.path))?;
            let mask = match &r.mask_path {
                Some(p) => Some(load_mask(&base.join(p))?),
                None => None,
            };
            Ok(CorpusEntry {
                image,
                mask,
                identity: r.identity.clone(),
                frame_index: r.frame,
                origin: r.origin(),
                mirrored: r.mirrored,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = RawImage::new(5, 3, (0..15).map(|v| v * 17).collect()).unwrap();
        let p = dir.path().join("a/img.png");
        save_png(&img, &p).unwrap();
        assert_eq!(load_png(&p).unwrap(), img);

        let mask = SegMask::from_fn(5, 3, |x, y| x > y);
        let mp = dir.path().join("mask.png");
        save_mask(&mask, &mp).unwrap();
        assert_eq!(load_mask(&mp).unwrap(), mask);
    }

    #[test]
    fn manifest_roundtrip_and_error_location() {
        let dir = tempfile::tempdir().unwrap();
        let rec = ManifestRecord {
            path: "images/x.png".into(),
            mask_path: None,
            identity: String::new(),
            frame: 0,
            origin: "synthetic".into(),
            snapshot: Some(14),
            seed: Some(7),
            mirrored: false,
        };
        let p = dir.path().join("m.jsonl");
        write_manifest(std::slice::from_ref(&rec), &p).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), vec![rec.clone()]);
        assert_eq!(rec.id(), "snap14-seed007");

        std::fs::write(&p, "{\"path\": 3}\n").unwrap();
        let err = read_manifest(&p).unwrap_err();
        assert!(err.to_string().contains(":1:"));
    }

    #[test]
    fn stored_entries_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            CorpusEntry {
                image: RawImage::new(4, 2, (0..8).collect()).unwrap(),
                mask: Some(SegMask::from_fn(4, 2, |x, _| x > 1)),
                identity: "S001-L".into(),
                frame_index: 3,
                origin: Origin::RealTraining,
                mirrored: false,
            },
            CorpusEntry {
                image: RawImage::filled(3, 3, 9),
                mask: None,
                identity: String::new(),
                frame_index: 0,
                origin: Origin::Synthetic {
                    snapshot: 2,
                    seed: 5,
                },
                mirrored: false,
            },
        ];
        let manifest = dir.path().join("manifests/set.jsonl");
        store_entries(&entries, &dir.path().join("manifests/images"), &manifest).unwrap();
        assert_eq!(load_entries(&manifest).unwrap(), entries);
        let recs = read_manifest(&manifest).unwrap();
        assert_eq!(recs[0].path, "images/S001-L-f003.png");
        assert_eq!(recs[1].id(), "snap02-seed005");

        let sibling = dir.path().join("m/set.jsonl");
        store_entries(&entries, &dir.path().join("corpus/raw"), &sibling).unwrap();
        assert_eq!(
            read_manifest(&sibling).unwrap()[0].path,
            "../corpus/raw/S001-L-f003.png"
        );
        assert_eq!(load_entries(&sibling).unwrap(), entries);
    }

    #[test]
    fn relative_paths() {
        let r = |p: &str, b: &str| relative_to(Path::new(p), Path::new(b));
        assert_eq!(r("/a/b/c", "/a/b"), PathBuf::from("c"));
        assert_eq!(r("/a/x/c", "/a/b"), PathBuf::from("../x/c"));
        assert_eq!(
            r("out/corpus", "./out/manifests"),
            PathBuf::from("../corpus")
        );
        assert_eq!(r("out/corpus", ""), PathBuf::from("out/corpus"));
        assert_eq!(r("/abs", "rel"), PathBuf::from("/abs"));
        assert_eq!(r("x", "../y"), PathBuf::from("x"));
    }
}
