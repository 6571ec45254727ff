//! End-to-end processing of one captured document and the record store.

mod config;
mod report;
mod store;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autocrop::{crop_by_contours, crop_by_detail, fix_180, fix_orientation};
use crate::cleanse::clean_background;
use crate::deskew::{deskew, AngleEstimate};
use crate::error::{Error, Result};
use crate::mrz::{extract_and_parse, locate_mrz, MrzLocateConfig, MrzRecord};
use crate::photoid::{detect_face_external, expand_face_box, mask_photo_region, FaceBox};
use crate::raster::io::{read_image, write_pgm};
use crate::raster::{crop, Box, GrayImage};
use crate::textseg::{
    contour_char_boxes, detect_text_external, drop_oversized, mser_regions, vote_merge,
};

pub use config::{Mode, PipelineConfig};
pub use report::{timing_report, StageStats, TimingReport};
pub use store::{
    face_blob_path, photo_id_blob_path, read_records, write_record, write_record_with_fault, Blobs,
    Fault, RECORDS_FILE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    OrientationUncertain,
    #[serde(rename = "flipped_180")]
    Flipped180,
    MrzAbsent,
    ChecksFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub source_path: String,
    pub mode: Mode,
    pub mrz: Option<MrzRecord>,
    pub photo_id_blob: String,
    pub face_blob: Option<String>,
    pub crop_box: Box,
    pub deskew: AngleEstimate,
    pub rotated90: bool,
    /// Fused text-line boxes on the cropped card.
    pub text_lines: Vec<Box>,
    pub timings: Vec<StageTiming>,
    pub flags: BTreeSet<Flag>,
}

impl DocumentRecord {
    pub fn has_stage(&self, stage: &str) -> bool {
        self.timings.iter().any(|t| t.stage == stage)
    }
}

/// A processed document: the record plus the images it refers to.
#[derive(Debug, Clone)]
pub struct Processed {
    pub record: DocumentRecord,
    pub blobs: Blobs,
    /// Intermediate images by stage, filled when `emit_debug` is set.
    pub debug: Vec<(String, GrayImage)>,
}

pub const STAGES: [&str; 11] = [
    "deskew",
    "face_detect",
    "orientation",
    "crop_contour",
    "crop_detail",
    "fix_180",
    "photo_id",
    "clean",
    "segment",
    "vote",
    "mrz",
];

struct Clock {
    timings: Vec<StageTiming>,
}

/// Both crop stages report their errors as the autocrop stage.
fn error_stage(stage: &'static str) -> &'static str {
    match stage {
        "crop_contour" | "crop_detail" => "autocrop",
        other => other,
    }
}

impl Clock {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.at_stage(error_stage(stage)))?;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

/// Clockwise quarter turn of a box in an image of height `h`.
fn turn_box(b: Box, h: usize) -> Box {
    Box::new(h as i32 - b.y0 - b.h as i32, b.x0, b.h, b.w)
}

fn flip_box(b: Box, w: usize, h: usize) -> Box {
    Box::new(w as i32 - b.right(), h as i32 - b.bottom(), b.w, b.h)
}

/// Small-angle correction plus any quarter turn and flip, in (-180, 180].
fn total_correction(angle: f64, rotated90: bool, flipped: bool) -> f64 {
    let mut a = angle - if rotated90 { 90.0 } else { 0.0 } + if flipped { 180.0 } else { 0.0 };
    while a > 180.0 {
        a -= 360.0;
    }
    while a <= -180.0 {
        a += 360.0;
    }
    a
}

fn with_temp_pgm<T>(img: &GrayImage, f: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
    let file = tempfile::Builder::new()
        .suffix(".pgm")
        .tempfile()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    write_pgm(img, file.path())?;
    f(file.path())
}

/// Reads `path` and runs [`process_document`] on it.
pub fn process_path<R>(path: &Path, cfg: &PipelineConfig, reader: R) -> Result<Processed>
where
    R: Fn(&GrayImage) -> Result<char>,
{
    let img = read_image(path).map_err(|e| e.at_stage("read"))?;
    process_document(&img, &path.display().to_string(), cfg, reader)
}

/// Runs every stage on one captured image. `reader` stands in for OCR in
/// the MRZ stage.
pub fn process_document<R>(
    img: &GrayImage,
    source_path: &str,
    cfg: &PipelineConfig,
    reader: R,
) -> Result<Processed>
where
    R: Fn(&GrayImage) -> Result<char>,
{
    cfg.validate()?;
    let mut clock = Clock {
        timings: Vec::new(),
    };
    let mut flags = BTreeSet::new();
    let mut debug = Vec::new();
    let mut keep = |name: &str, img: &GrayImage| {
        if cfg.emit_debug {
            debug.push((name.to_string(), img.clone()));
        }
    };

    let d = clock.run("deskew", || deskew(img, cfg.deskew))?;
    keep("deskew", &d.image);
    let frame = d.image;

    let mut face: Option<FaceBox> = None;
    if let Some(cmd) = &cfg.face_adapter {
        let faces = clock.run("face_detect", || {
            with_temp_pgm(&frame, |p| {
                detect_face_external(p, cmd, cfg.adapter_timeout)
            })
        })?;
        face = faces.into_iter().next();
    }
    let face_found = cfg.face_adapter.as_ref().map(|_| face.is_some());

    let o = clock.run("orientation", || {
        Ok(fix_orientation(&frame, &cfg.layout, face_found))
    })?;
    if o.uncertain {
        flags.insert(Flag::OrientationUncertain);
    }
    if o.rotated90 {
        face = face.map(|f| FaceBox::new(turn_box(f.bbox, frame.height()), f.score));
    }
    keep("orientation", &o.image);

    let crop_res = clock.run("crop_contour", || crop_by_contours(&o.image, &cfg.layout))?;
    if cfg.mode == Mode::Offline {
        let detail = clock.run("crop_detail", || {
            crop_by_detail(&o.image, cfg.detail_window, cfg.detail_stride)
        })?;
        if cfg.emit_debug {
            keep("crop_detail", &crop(&o.image, &detail.bbox)?);
        }
    }
    let card = crop(&o.image, &crop_res.bbox).map_err(|e| e.at_stage("autocrop"))?;
    let face = face.map(|f| {
        FaceBox::new(
            f.bbox.translate(-crop_res.bbox.x0, -crop_res.bbox.y0),
            f.score,
        )
    });

    let (card, flipped) = clock.run("fix_180", || {
        let probe = locate_mrz(&card, &MrzLocateConfig::default())?;
        Ok(fix_180(
            &card,
            probe.map(|b| b.center_fraction(card.height())),
        ))
    })?;
    let face = match (face, flipped) {
        (Some(f), true) => Some(FaceBox::new(
            flip_box(f.bbox, card.width(), card.height()),
            f.score,
        )),
        (f, _) => f,
    };
    if flipped {
        flags.insert(Flag::Flipped180);
    }
    keep("card", &card);

    let mut face_img = None;
    let mut masked = card.clone();
    if let Some(f) = face {
        // A face box that misses the card has no photo region to mask.
        if let Ok(pid) = expand_face_box(&f, card.width(), card.height()) {
            clock.run("photo_id", || {
                face_img = Some(crop(&card, &f.bbox)?);
                masked = mask_photo_region(&card, &pid);
                Ok(())
            })?;
        }
    }

    let cleaned = clock.run("clean", || clean_background(&masked, &cfg.clean))?;
    keep("clean", &cleaned);

    let sources = clock.run("segment", || {
        let h = cleaned.height();
        let mut s = vec![
            drop_oversized(mser_regions(&cleaned, &cfg.mser)?, h),
            drop_oversized(contour_char_boxes(&cleaned, &cfg.layout)?, h),
        ];
        if let Some(cmd) = &cfg.text_adapter {
            s.push(with_temp_pgm(&cleaned, |p| {
                detect_text_external(p, cmd, cfg.adapter_timeout)
            })?);
        }
        Ok(s)
    })?;
    let lines = clock.run("vote", || {
        vote_merge(&sources, cleaned.width(), cleaned.height(), cfg.vote_min)
    })?;

    let mrz = clock.run("mrz", || match extract_and_parse(&card, &reader) {
        Ok(m) => Ok(m),
        Err(Error::MrzStructure(_) | Error::Alphabet(_) | Error::Reader(_)) => Ok(None),
        Err(e) => Err(e),
    })?;
    match &mrz {
        None => {
            flags.insert(Flag::MrzAbsent);
        }
        Some(m) if !m.checks.all_pass() => {
            flags.insert(Flag::ChecksFailed);
        }
        Some(_) => {}
    }

    let id = ulid::Ulid::new().to_string();
    let record = DocumentRecord {
        photo_id_blob: photo_id_blob_path(&id),
        face_blob: face_img.as_ref().map(|_| face_blob_path(&id)),
        id,
        source_path: source_path.to_string(),
        mode: cfg.mode,
        mrz,
        crop_box: crop_res.bbox,
        deskew: AngleEstimate {
            angle: total_correction(d.estimate.angle, o.rotated90, flipped),
            ..d.estimate
        },
        rotated90: o.rotated90,
        text_lines: lines.into_iter().map(|r| r.bbox).collect(),
        timings: clock.timings,
        flags,
    };
    Ok(Processed {
        record,
        blobs: Blobs {
            photo_id: card,
            face: face_img,
        },
        debug,
    })
}
