use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Embedding;
use crate::loss::FrameRef;
use crate::multi_index::Posting;

/// One frame's embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub frame: FrameRef,
    pub embedding: Embedding,
    /// Set by the embedding producer for perfectly black frames.
    pub black: bool,
}

/// Wire form of an [`EmbeddingRecord`], one JSON object per line.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    video: String,
    shot: String,
    t: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    black: bool,
    vec: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<EmbeddingRecord>,
    /// Black frames skipped because exclusion was requested.
    pub dropped_black: usize,
}

impl Dataset {
    /// Embedding length shared by every record, if any.
    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.embedding.len())
    }
}

/// Reads JSON-lines embedding records. Blank lines are skipped; every record
/// must have the same vector length.
pub fn ingest_embeddings<R: BufRead>(source: R, exclude_black: bool) -> Result<Dataset> {
    let mut data = Dataset::default();
    let mut dim = None;
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            line: line_no,
            reason,
        };
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if !(raw.t.is_finite() && raw.t >= 0.0) {
            return Err(parse_err(format!(
                "timestamp {} must be finite and nonnegative",
                raw.t
            )));
        }
        match dim {
            None => dim = Some(raw.vec.len()),
            Some(d) if d != raw.vec.len() => {
                return Err(parse_err(format!(
                    "vector has {} components, expected {d}",
                    raw.vec.len()
                )))
            }
            Some(_) => {}
        }
        let embedding = Embedding::new(raw.vec).map_err(|e| parse_err(e.to_string()))?;
        if raw.black && exclude_black {
            data.dropped_black += 1;
            continue;
        }
        data.records.push(EmbeddingRecord {
            frame: FrameRef::new(raw.video, raw.shot, raw.t),
            embedding,
            black: raw.black,
        });
    }
    Ok(data)
}

/// Writes records in the format [`ingest_embeddings`] reads.
pub fn write_embeddings<W: Write>(records: &[EmbeddingRecord], mut sink: W) -> Result<()> {
    for rec in records {
        let raw = RawRecord {
            video: rec.frame.video_id.clone(),
            shot: rec.frame.shot_id.clone(),
            t: rec.frame.timestamp,
            black: rec.black,
            vec: rec.embedding.values().to_vec(),
        };
        serde_json::to_writer(&mut sink, &raw).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Sign-binarizes every record.
pub fn hash_records(records: &[EmbeddingRecord]) -> Vec<Posting> {
    records
        .iter()
        .map(|r| Posting {
            hash: r.embedding.binarize(),
            frame: r.frame.clone(),
        })
        .collect()
}
