//! Wire formats: embedding JSONL in, RTTM turns out (and back in for
//! scoring), plus flat `key=value` config files.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::core::{Config, Embedding};
use crate::error::{Error, Result};
use crate::pipeline::Turn;
use crate::scoring::Annotation;

/// One embedding record per line: `{"start": s, "end": s, "embedding": [..]}`.
#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingRecord {
    start: f64,
    end: f64,
    embedding: Vec<f64>,
}

/// Read an embedding stream. Segment ids are assigned by line order; the
/// dimension is fixed by the first record and enforced afterwards, and lines
/// must be ordered by start time.
pub fn read_embeddings<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Embedding>> {
    let mut out: Vec<Embedding> = Vec::new();
    let mut dim = None;
    let mut prev_start = f64::NEG_INFINITY;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source_name, lineno, format!("bad record: {e}")))?;
        match dim {
            None => dim = Some(rec.embedding.len()),
            Some(d) if d != rec.embedding.len() => {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("dimension drift: expected {d}, got {}", rec.embedding.len()),
                ))
            }
            _ => {}
        }
        if rec.start < prev_start {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("records must be ordered by start time ({} after {prev_start})", rec.start),
            ));
        }
        prev_start = rec.start;
        let e = Embedding::new(out.len(), rec.embedding, rec.start, rec.end)
            .map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        out.push(e);
    }
    Ok(out)
}

pub fn write_embeddings<W: Write>(mut w: W, segments: &[Embedding]) -> Result<()> {
    for e in segments {
        let rec = EmbeddingRecord {
            start: e.start,
            end: e.end,
            embedding: e.vector.clone(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(io::Error::from)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Parse RTTM speaker turns: ten space-separated fields per line,
/// `SPEAKER <file-id> <chan> <onset> <duration> <NA> <NA> <speaker> <NA> <NA>`.
pub fn parse_rttm<R: BufRead>(reader: R, source_name: &str) -> Result<Annotation> {
    let mut annotation = Annotation::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected 10 fields, got {}", fields.len()),
            ));
        }
        if fields[0] != "SPEAKER" {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected SPEAKER record, got '{}'", fields[0]),
            ));
        }
        let onset: f64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(source_name, lineno, format!("bad onset '{}'", fields[3])))?;
        let duration: f64 = fields[4].parse().map_err(|_| {
            Error::parse(source_name, lineno, format!("bad duration '{}'", fields[4]))
        })?;
        if !(duration > 0.0) {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("duration must be positive, got {duration}"),
            ));
        }
        annotation
            .push(fields[7], onset, onset + duration)
            .map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
    }
    Ok(annotation)
}

/// Emit RTTM with millisecond-resolution times.
pub fn write_rttm<W: Write>(mut w: W, file_id: &str, annotation: &Annotation) -> io::Result<()> {
    for t in annotation.turns() {
        writeln!(
            w,
            "SPEAKER {file_id} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            t.start,
            t.end - t.start,
            t.speaker
        )?;
    }
    Ok(())
}

/// Output turns as an annotation with `spk<label>` speaker names.
pub fn annotation_from_turns(turns: &[Turn]) -> Annotation {
    let mut a = Annotation::default();
    for t in turns {
        a.push(format!("spk{}", t.label), t.start, t.end)
            .expect("turns have positive duration");
    }
    a
}

/// Apply a flat `key=value` config file (blank lines and `#` comments
/// allowed) on top of `config`.
pub fn apply_config_file<R: BufRead>(
    reader: R,
    source_name: &str,
    config: &mut Config,
) -> Result<()> {
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            Error::parse(source_name, lineno, format!("expected key=value, got '{trimmed}'"))
        })?;
        config
            .apply_kv(key.trim(), value.trim())
            .map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
    }
    Ok(())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;
    use std::io::BufReader;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rttm_roundtrip_within_one_millisecond(
            turns in proptest::collection::vec((0u32..2, 0u32..100_000, 1u32..50_000), 1..10)
        ) {
            let mut a = Annotation::default();
            for (spk, start_ms, len_ms) in turns {
                let s = start_ms as f64 / 1000.0;
                a.push(format!("spk{spk}"), s, s + len_ms as f64 / 1000.0).unwrap();
            }
            let mut buf = Vec::new();
            write_rttm(&mut buf, "f", &a).unwrap();
            let back = parse_rttm(BufReader::new(buf.as_slice()), "f").unwrap();
            prop_assert_eq!(back.turns().len(), a.turns().len());
            for (x, y) in back.turns().iter().zip(a.turns()) {
                prop_assert_eq!(&x.speaker, &y.speaker);
                prop_assert!((x.start - y.start).abs() <= 0.001);
                prop_assert!((x.end - y.end).abs() <= 0.002);
            }
        }
    }
}
