//! Score tables as CSV.

use std::path::Path;

use super::{MatchError, MatchScore, Orientation, PairType, ScoreRecord};

pub const CSV_HEADER: [&str; 8] = [
    "id_a",
    "id_b",
    "pair_type",
    "orientation",
    "score",
    "best_shift",
    "overlap",
    "status",
];

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path} row {row}: {message}")]
    Field {
        path: String,
        row: usize,
        message: String,
    },
}

/// Write records with scores rounded to six decimals.
pub fn write_score_csv(
    records: &[ScoreRecord],
    orientation: Orientation,
    path: &Path,
) -> Result<(), TableError> {
    let err = |source| TableError::Csv {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| err(e.into()))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in records {
        let row: [String; 8] = match &r.outcome {
            Ok(s) => [
                r.id_a.clone(),
                r.id_b.clone(),
                r.pair_type.as_str().into(),
                s.orientation.as_str().into(),
                format!("{:.6}", s.value),
                s.best_shift.to_string(),
                s.overlap.to_string(),
                "ok".into(),
            ],
            Err(e) => {
                let overlap = match e {
                    MatchError::InsufficientOverlap { best_overlap, .. } => *best_overlap,
                    _ => 0,
                };
                [
                    r.id_a.clone(),
                    r.id_b.clone(),
                    r.pair_type.as_str().into(),
                    orientation.as_str().into(),
                    String::new(),
                    String::new(),
                    overlap.to_string(),
                    "insufficient_overlap".into(),
                ]
            }
        };
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| err(e.into()))
}

pub fn read_score_csv(path: &Path, min_overlap: u64) -> Result<Vec<ScoreRecord>, TableError> {
    let p = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|source| TableError::Csv {
        path: p.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|source| TableError::Csv {
            path: p.clone(),
            source,
        })?;
        let field = |message: String| TableError::Field {
            path: p.clone(),
            row: i + 1,
            message,
        };
        if row.len() != CSV_HEADER.len() {
            return Err(field(format!("expected 8 fields, got {}", row.len())));
        }
        let pair_type = PairType::parse(&row[2])
            .ok_or_else(|| field(format!("bad pair type {:?}", &row[2])))?;
        let orientation = Orientation::parse(&row[3])
            .ok_or_else(|| field(format!("bad orientation {:?}", &row[3])))?;
        let overlap: u64 = row[6]
            .parse()
            .map_err(|_| field(format!("bad overlap {:?}", &row[6])))?;
        let outcome = match &row[7] {
            "ok" => Ok(MatchScore {
                value: row[4]
                    .parse()
                    .map_err(|_| field(format!("bad score {:?}", &row[4])))?,
                orientation,
                best_shift: row[5]
                    .parse()
                    .map_err(|_| field(format!("bad shift {:?}", &row[5])))?,
                overlap,
            }),
            "insufficient_overlap" => Err(MatchError::InsufficientOverlap {
                best_overlap: overlap,
                min: min_overlap,
            }),
            other => return Err(field(format!("bad status {other:?}"))),
        };
        out.push(ScoreRecord {
            id_a: row[0].to_string(),
            id_b: row[1].to_string(),
            pair_type,
            outcome,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_layout() {
        let recs = vec![
            ScoreRecord {
                id_a: "S001-L-f000".into(),
                id_b: "snap14-seed000".into(),
                pair_type: PairType::ImpostorRF,
                outcome: Ok(MatchScore {
                    value: 0.123_456_7,
                    orientation: Orientation::Distance,
                    best_shift: -3,
                    overlap: 150_000,
                }),
            },
            ScoreRecord {
                id_a: "a".into(),
                id_b: "b".into(),
                pair_type: PairType::Genuine,
                outcome: Err(MatchError::InsufficientOverlap {
                    best_overlap: 12,
                    min: 1024,
                }),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_score_csv(&recs, Orientation::Distance, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "id_a,id_b,pair_type,orientation,score,best_shift,overlap,status"
        );
        assert_eq!(
            lines[1],
            "S001-L-f000,snap14-seed000,impostor_rf,distance,0.123457,-3,150000,ok"
        );
        assert_eq!(lines[2], "a,b,genuine,distance,,,12,insufficient_overlap");
        let back = read_score_csv(&p, 1024).unwrap();
        assert_eq!(back[1], recs[1]);
        assert_eq!(back[0].score(), Some(0.123457));
    }
}
