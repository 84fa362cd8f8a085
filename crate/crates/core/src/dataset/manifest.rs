use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Segment};

pub const MANIFEST_FORMAT: &str = "alemannic-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a JSON-lines manifest: a header record, then one segment per line.
/// Blank lines are skipped; any malformed row fails with its line number.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<Segment>, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_manifest(BufReader::new(file)).map_err(|e| match e {
        DatasetError::Io { source, .. } => io_err(path, source),
        other => other,
    })
}

pub fn read_manifest(reader: impl BufRead) -> Result<Vec<Segment>, DatasetError> {
    let mut segments = Vec::new();
    let mut ids = HashSet::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: String::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| DatasetError::Manifest { line: line_no, message };
        if !header_seen {
            let header: Header =
                serde_json::from_str(&line).map_err(|e| bad(format!("expected manifest header: {e}")))?;
            if header.format != MANIFEST_FORMAT {
                return Err(bad(format!("unknown format `{}`", header.format)));
            }
            if header.version != MANIFEST_VERSION {
                return Err(bad(format!("unsupported version {}", header.version)));
            }
            header_seen = true;
            continue;
        }
        let seg: Segment = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        seg.validate().map_err(|m| bad(format!("segment `{}`: {m}", seg.id)))?;
        if !ids.insert(seg.id.clone()) {
            return Err(bad(format!("duplicate segment id `{}`", seg.id)));
        }
        segments.push(seg);
    }
    if !header_seen {
        return Err(DatasetError::Manifest {
            line: 1,
            message: "empty manifest: missing header".into(),
        });
    }
    Ok(segments)
}

/// Serializes a manifest to a string (header plus one line per segment).
pub fn manifest_to_string(segments: &[Segment]) -> String {
    let mut out = serde_json::to_string(&Header {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
    })
    .expect("header serializes");
    out.push('\n');
    for seg in segments {
        out.push_str(&serde_json::to_string(seg).expect("segment serializes"));
        out.push('\n');
    }
    out
}

/// Writes a manifest atomically: a temporary file in the target directory
/// is synced and renamed over `path`.
pub fn write_manifest(path: impl AsRef<Path>, segments: &[Segment]) -> Result<(), DatasetError> {
    write_atomic(path.as_ref(), manifest_to_string(segments).as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_reports_line() {
        let text = concat!(
            r#"{"format":"alemannic-manifest","version":1}"#,
            "\n",
            r#"{"id":"a","corpus":"STT","ipa_transcription":"a","standard_german":"a"}"#,
            "\n\n",
            r#"{"id":"b","corpus":"STT","standard_german":"b"}"#,
            "\n"
        );
        let err = read_manifest(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::Manifest { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("ipa_transcription"), "{err}");
    }

    #[test]
    fn header_is_required() {
        let err = read_manifest(&b""[..]).unwrap_err();
        assert!(err.to_string().contains("header"));
        let err = read_manifest(&br#"{"id":"a"}"#[..]).unwrap_err();
        assert!(matches!(err, DatasetError::Manifest { line: 1, .. }));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let row = r#"{"id":"a","corpus":"STT","ipa_transcription":"a","standard_german":"a"}"#;
        let text = format!("{{\"format\":\"alemannic-manifest\",\"version\":1}}\n{row}\n{row}\n");
        let err = read_manifest(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::Manifest { line: 3, .. }));
    }
}
