//! Face box to photo-ID box geometry and photo masking.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::adapter::run_detector;
use crate::error::{Error, Result};
use crate::raster::{Box, GrayImage};

/// A face detection. Detector boxes more than 10% away from square are
/// squared up around their center by [`FaceBox::normalized`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceBox {
    #[serde(rename = "box")]
    pub bbox: Box,
    pub score: f64,
}

impl FaceBox {
    pub fn new(bbox: Box, score: f64) -> Self {
        FaceBox { bbox, score }
    }

    pub fn normalized(self) -> Self {
        let b = self.bbox;
        let (lo, hi) = (b.w.min(b.h), b.w.max(b.h));
        if (hi - lo) as f64 <= 0.1 * hi as f64 {
            return self;
        }
        let grow = (hi - lo) as i32 / 2;
        let bbox = if b.w < b.h {
            Box::new(b.x0 - grow, b.y0, hi, hi)
        } else {
            Box::new(b.x0, b.y0 - grow, hi, hi)
        };
        FaceBox { bbox, ..self }
    }
}

/// The face box stretched vertically by 1.3 about its center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotoIdBox {
    /// Rounded and clamped to the image.
    #[serde(rename = "box")]
    pub bbox: Box,
    /// Rounded, before clamping.
    pub unclamped: Box,
    /// Top edge before rounding, in 1/20 px.
    pub y0_twentieths: i64,
    /// Height before rounding, in 1/20 px.
    pub h_twentieths: i64,
}

impl PhotoIdBox {
    /// Exact vertical center in 1/40 px.
    pub fn center_fortieths(&self) -> i64 {
        2 * self.y0_twentieths + self.h_twentieths
    }
}

/// Expands `face` to the photo-ID box: `dH = 0.3 H`, top moved up by
/// `dH / 2`, height `H + dH`, rounding half up, then clamped to the image.
pub fn expand_face_box(face: &FaceBox, width: usize, height: usize) -> Result<PhotoIdBox> {
    let b = face.bbox;
    if b.x0 < 0 || b.y0 < 0 || b.right() as i64 > width as i64 || b.bottom() as i64 > height as i64
    {
        return Err(Error::Geometry(format!(
            "face box {b:?} outside {width}x{height} image"
        )));
    }
    let h = b.h as i64;
    let shift = (3 * h + 10) / 20;
    let new_h = (13 * h + 5) / 10;
    let unclamped = Box::new(b.x0, b.y0 - shift as i32, b.w, new_h as u32);
    let bbox = if unclamped.is_empty() {
        unclamped
    } else {
        unclamped
            .clamp_to(width, height)
            .unwrap_or(Box::new(b.x0, b.y0, 0, 0))
    };
    Ok(PhotoIdBox {
        bbox,
        unclamped,
        y0_twentieths: 20 * b.y0 as i64 - 3 * h,
        h_twentieths: 26 * h,
    })
}

/// Blacks out the photo box; every other pixel is left untouched.
pub fn mask_photo_region(img: &GrayImage, p: &PhotoIdBox) -> GrayImage {
    let mut out = img.clone();
    if let Some(b) = p.bbox.clamp_to(img.width(), img.height()) {
        for y in b.y0..b.bottom() {
            for x in b.x0..b.right() {
                out.set(x as usize, y as usize, 0);
            }
        }
    }
    out
}

/// Runs an external face detector and returns its boxes, best score first.
pub fn detect_face_external(image: &Path, cmd: &str, timeout: Duration) -> Result<Vec<FaceBox>> {
    let mut faces: Vec<FaceBox> = run_detector(cmd, image, timeout)?
        .into_iter()
        .map(|d| FaceBox::new(d.bbox, d.score).normalized())
        .collect();
    faces.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(x: i32, y: i32, w: u32, h: u32) -> Box {
        expand_face_box(&FaceBox::new(Box::new(x, y, w, h), 1.0), 1000, 1000)
            .unwrap()
            .bbox
    }

    #[test]
    fn worked_examples() {
        assert_eq!(expand(100, 100, 80, 80), Box::new(100, 88, 80, 104));
        assert_eq!(expand(50, 200, 100, 100), Box::new(50, 185, 100, 130));
        assert_eq!(expand(10, 10, 30, 0), Box::new(10, 10, 30, 0));
    }

    #[test]
    fn clamps_at_the_edge() {
        let p = expand_face_box(&FaceBox::new(Box::new(0, 2, 40, 40), 1.0), 100, 100).unwrap();
        assert_eq!(p.unclamped, Box::new(0, -4, 40, 52));
        assert_eq!(p.bbox, Box::new(0, 0, 40, 48));
        assert!(expand_face_box(&FaceBox::new(Box::new(90, 0, 20, 20), 1.0), 100, 100).is_err());
    }

    #[test]
    fn masking() {
        let img = GrayImage::from_fn(20, 10, |x, y| (x * 10 + y) as u8 + 1);
        let full = PhotoIdBox {
            bbox: img.bounds(),
            unclamped: img.bounds(),
            y0_twentieths: 0,
            h_twentieths: 200,
        };
        assert!(mask_photo_region(&img, &full)
            .as_raw()
            .iter()
            .all(|&v| v == 0));
        let empty = PhotoIdBox {
            bbox: Box::new(3, 3, 0, 5),
            ..full
        };
        assert_eq!(mask_photo_region(&img, &empty), img);
        let part = PhotoIdBox {
            bbox: Box::new(2, 1, 4, 3),
            ..full
        };
        let m = mask_photo_region(&img, &part);
        assert_eq!(mask_photo_region(&m, &part), m);
        for y in 0..10 {
            for x in 0..20 {
                let inside = (2..6).contains(&x) && (1..4).contains(&y);
                assert_eq!(m.get(x, y), if inside { 0 } else { img.get(x, y) });
            }
        }
    }

    #[test]
    fn squares_up_oblong_detections() {
        let f = FaceBox::new(Box::new(10, 10, 50, 80), 0.5).normalized();
        assert_eq!(f.bbox, Box::new(-5, 10, 80, 80));
        let g = FaceBox::new(Box::new(10, 10, 76, 80), 0.5);
        assert_eq!(g.normalized(), g);
    }
}
