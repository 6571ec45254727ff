use std::fs;
use std::io::Write;
use std::path::Path;

use super::DocumentRecord;
use crate::error::{Error, Result};
use crate::raster::io::encode_pgm;
use crate::raster::GrayImage;

pub const RECORDS_FILE: &str = "records.jsonl";

/// Image blobs that go with a record.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub photo_id: GrayImage,
    pub face: Option<GrayImage>,
}

/// Simulated crash points for [`write_record_with_fault`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// After the blobs are on disk, before anything touches the record file.
    AfterBlobs,
    /// Halfway through writing the new record file.
    MidAppend,
}

pub fn photo_id_blob_path(id: &str) -> String {
    format!("blobs/{id}/photo_id.pgm")
}

pub fn face_blob_path(id: &str) -> String {
    format!("blobs/{id}/face.pgm")
}

fn injected(what: &str) -> Error {
    Error::io(what, std::io::Error::other("injected fault"))
}

/// Reads every record in the store. A missing file is an empty store.
pub fn read_records(dir: &Path) -> Result<Vec<DocumentRecord>> {
    let path = dir.join(RECORDS_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Writes the blobs, then appends one JSON line to `records.jsonl` and
/// returns its zero-based position. The append replaces the file through a
/// renamed temporary, so readers see either the old or the new contents.
pub fn write_record(dir: &Path, rec: &DocumentRecord, blobs: &Blobs) -> Result<usize> {
    write_record_with_fault(dir, rec, blobs, Fault::None)
}

pub fn write_record_with_fault(
    dir: &Path,
    rec: &DocumentRecord,
    blobs: &Blobs,
    fault: Fault,
) -> Result<usize> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = dir.join(RECORDS_FILE);
    let existing = match fs::read(&records) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(&records, e)),
    };
    let text = String::from_utf8_lossy(&existing);
    let taken = text.lines().filter(|l| !l.is_empty()).any(|l| {
        serde_json::from_str::<serde_json::Value>(l)
            .ok()
            .is_some_and(|v| v.get("id").and_then(|i| i.as_str()) == Some(rec.id.as_str()))
    });
    if taken {
        return Err(Error::DuplicateId(rec.id.clone()));
    }
    let position = text.lines().filter(|l| !l.is_empty()).count();

    let put = |rel: &str, img: &GrayImage| {
        let p = dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&p, encode_pgm(img)).map_err(|e| Error::io(p, e))
    };
    put(&rec.photo_id_blob, &blobs.photo_id)?;
    if let (Some(rel), Some(img)) = (&rec.face_blob, &blobs.face) {
        put(rel, img)?;
    }
    if fault == Fault::AfterBlobs {
        return Err(injected("after blobs"));
    }

    let mut line = serde_json::to_vec(rec)?;
    line.push(b'\n');
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    let tmp_path = tmp.path().to_path_buf();
    let io = |e| Error::io(tmp_path.clone(), e);
    tmp.write_all(&existing).map_err(io)?;
    if fault == Fault::MidAppend {
        tmp.write_all(&line[..line.len() / 2]).map_err(io)?;
        return Err(injected("mid append"));
    }
    tmp.write_all(&line).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&records)
        .map_err(|e| Error::io(&records, e.error))?;
    Ok(position)
}
