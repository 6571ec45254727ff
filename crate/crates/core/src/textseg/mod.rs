//! Text region proposals (MSER, contours, an external detector) and the
//! voting step that fuses them into glyph and line boxes.

mod mser;

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::adapter::run_detector;
use crate::autocrop::LayoutConfig;
use crate::error::{Error, Result};
use crate::raster::{
    adaptive_binarize, find_contours, label_components, BinaryImage, Box, GrayImage,
};

pub use mser::{ComponentTree, MserParams, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Mser,
    Contour,
    External,
    /// Output of [`vote_components`] / [`vote_merge`].
    Vote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    #[serde(rename = "box")]
    pub bbox: Box,
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pixels: Option<Vec<(u32, u32)>>,
}

impl TextRegion {
    pub fn new(bbox: Box, source: Source) -> Self {
        TextRegion {
            bbox,
            source,
            pixels: None,
        }
    }
}

fn reading_order(regions: &mut [TextRegion]) {
    regions.sort_by_key(|r| (r.bbox.y0, r.bbox.x0, r.bbox.w, r.bbox.h));
}

/// Maximally stable extremal regions of both polarities. Regions whose boxes
/// overlap an earlier one at IoU >= 0.8 are dropped.
pub fn mser_regions(img: &GrayImage, params: &MserParams) -> Result<Vec<TextRegion>> {
    params.validate()?;
    let mut found = mser::dark_regions(img, params);
    found.extend(mser::dark_regions(&img.invert(), params));
    let mut out: Vec<TextRegion> = Vec::new();
    for (bbox, px) in found {
        if out.iter().any(|r| r.bbox.iou(&bbox) >= 0.8) {
            continue;
        }
        out.push(TextRegion {
            bbox,
            source: Source::Mser,
            pixels: Some(px),
        });
    }
    reading_order(&mut out);
    Ok(out)
}

/// One region per character-like contour of the text-white mask.
pub fn contour_char_boxes(img: &GrayImage, cfg: &LayoutConfig) -> Result<Vec<TextRegion>> {
    let mask = adaptive_binarize(img, cfg.binarize_window, cfg.binarize_offset)?.invert();
    let mut out: Vec<TextRegion> = find_contours(&mask)
        .into_iter()
        .filter(|n| {
            let a = n.bbox.aspect();
            n.pixel_count >= cfg.min_glyph_area && cfg.aspect_low < a && a < cfg.aspect_high
        })
        .map(|n| TextRegion::new(n.bbox, Source::Contour))
        .collect();
    reading_order(&mut out);
    Ok(out)
}

/// Drops regions taller than a quarter of a page of height `height`; on a
/// whole card these are frames and borders, not glyphs.
pub fn drop_oversized(regions: Vec<TextRegion>, height: usize) -> Vec<TextRegion> {
    regions
        .into_iter()
        .filter(|r| r.bbox.h as usize * 4 <= height)
        .collect()
}

/// Boxes from an external text detector, in emitted order.
pub fn detect_text_external(image: &Path, cmd: &str, timeout: Duration) -> Result<Vec<TextRegion>> {
    Ok(run_detector(cmd, image, timeout)?
        .into_iter()
        .map(|d| TextRegion::new(d.bbox, Source::External))
        .collect())
}

/// Pixels covered by at least `min(min_votes, sources.len())` sources.
pub fn vote_mask(
    sources: &[Vec<TextRegion>],
    width: usize,
    height: usize,
    min_votes: usize,
) -> Result<BinaryImage> {
    if min_votes == 0 {
        return Err(Error::Parameter("min_votes must be at least 1".into()));
    }
    let need = min_votes.min(sources.len()).max(1) as u16;
    let mut votes = vec![0u16; width * height];
    let mut covered = vec![false; width * height];
    for regions in sources {
        covered.iter_mut().for_each(|c| *c = false);
        for r in regions {
            let Some(b) = r.bbox.clamp_to(width, height) else {
                continue;
            };
            for y in b.y0 as usize..b.bottom() as usize {
                covered[y * width + b.x0 as usize..y * width + b.right() as usize].fill(true);
            }
        }
        for (v, &c) in votes.iter_mut().zip(&covered) {
            *v += c as u16;
        }
    }
    let data = votes
        .iter()
        .map(|&v| {
            if v >= need && !sources.is_empty() {
                255
            } else {
                0
            }
        })
        .collect();
    BinaryImage::from_raw(width, height, data)
}

fn component_boxes(labels: &[u32], count: usize, width: usize) -> Vec<Box> {
    let mut ext = vec![[i32::MAX, i32::MAX, i32::MIN, i32::MIN]; count];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = ((i % width) as i32, (i / width) as i32);
        let e = &mut ext[l as usize - 1];
        e[0] = e[0].min(x);
        e[1] = e[1].min(y);
        e[2] = e[2].max(x);
        e[3] = e[3].max(y);
    }
    ext.iter()
        .map(|e| Box::from_corners(e[0], e[1], e[2], e[3]))
        .collect()
}

/// Glyph-level fusion: connected components of the vote mask.
pub fn vote_components(
    sources: &[Vec<TextRegion>],
    width: usize,
    height: usize,
    min_votes: usize,
) -> Result<Vec<TextRegion>> {
    let mask = vote_mask(sources, width, height, min_votes)?;
    let (labels, count) = label_components(&mask);
    let mut out: Vec<TextRegion> = component_boxes(&labels, count, width)
        .into_iter()
        .map(|b| TextRegion::new(b, Source::Vote))
        .collect();
    reading_order(&mut out);
    Ok(out)
}

/// Line-level fusion: vote components joined horizontally across gaps of up
/// to one median glyph width.
pub fn vote_merge(
    sources: &[Vec<TextRegion>],
    width: usize,
    height: usize,
    min_votes: usize,
) -> Result<Vec<TextRegion>> {
    let mask = vote_mask(sources, width, height, min_votes)?;
    let (labels, count) = label_components(&mask);
    let glyphs = component_boxes(&labels, count, width);
    if glyphs.is_empty() {
        return Ok(Vec::new());
    }
    let mut widths: Vec<u32> = glyphs.iter().map(|b| b.w).collect();
    widths.sort_unstable();
    let reach = widths[widths.len() / 2] as usize;

    let mut joined = vec![0u8; width * height];
    for y in 0..height {
        let row = &mask.as_raw()[y * width..(y + 1) * width];
        let mut last: Option<usize> = None;
        for x in 0..width {
            if row[x] == 0 {
                continue;
            }
            if let Some(p) = last {
                if x - p - 1 <= reach {
                    joined[y * width + p..y * width + x].fill(255);
                }
            }
            joined[y * width + x] = 255;
            last = Some(x);
        }
    }
    let joined = BinaryImage::from_raw(width, height, joined)?;
    let (line_labels, lines) = label_components(&joined);
    let mut ext = vec![None::<Box>; lines];
    let mut first = vec![usize::MAX; count];
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 && first[l as usize - 1] == usize::MAX {
            first[l as usize - 1] = i;
        }
    }
    for (g, b) in glyphs.iter().enumerate() {
        let l = line_labels[first[g]] as usize - 1;
        ext[l] = Some(ext[l].map_or(*b, |u: Box| u.union(b)));
    }
    let mut out: Vec<TextRegion> = ext
        .into_iter()
        .flatten()
        .map(|b| TextRegion::new(b, Source::Vote))
        .collect();
    reading_order(&mut out);
    Ok(out)
}
