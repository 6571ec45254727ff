//! Card localization in the captured frame and quarter-turn orientation fixes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    adaptive_binarize, find_contours, gaussian_blur, rotate, sobel_magnitude, Box, ContourNode,
    GrayImage, IntegralImage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropMethod {
    Contour,
    Detail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropResult {
    #[serde(rename = "box")]
    pub bbox: Box,
    pub method: CropMethod,
    pub elapsed_ms: f64,
    pub kept_contours: usize,
    /// Set when the detail windows form more than one separate cluster.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub target_aspect: f64,
    pub aspect_low: f64,
    pub aspect_high: f64,
    pub ratio_tolerance: f64,
    /// Extra margin around a contour crop, as a fraction of its size.
    pub crop_margin: f64,
    pub binarize_window: usize,
    pub binarize_offset: i32,
    /// Same-band siblings a glyph needs to count as text-line evidence.
    pub min_siblings: usize,
    /// Half-height of a text band, in median glyph heights.
    pub band_factor: f64,
    pub min_glyph_area: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            target_aspect: 1.58,
            aspect_low: 0.1,
            aspect_high: 10.0,
            ratio_tolerance: 0.12,
            crop_margin: 0.0,
            binarize_window: 35,
            binarize_offset: 12,
            min_siblings: 4,
            band_factor: 0.6,
            min_glyph_area: 8,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.aspect_low && self.aspect_low < self.aspect_high) {
            return Err(Error::Config("need 0 < aspect_low < aspect_high".into()));
        }
        if !(self.target_aspect > 1.0) {
            return Err(Error::Config("target_aspect must exceed 1".into()));
        }
        if !(0.0..1.0).contains(&self.ratio_tolerance) {
            return Err(Error::Config("ratio_tolerance must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn min_landscape_ratio(&self) -> f64 {
        self.target_aspect * (1.0 - self.ratio_tolerance)
    }

    fn glyph_like(&self, b: &Box, area: usize) -> bool {
        let a = b.aspect();
        area >= self.min_glyph_area && self.aspect_low < a && a < self.aspect_high
    }
}

/// Indices of the glyph candidates that have at least `min_siblings`
/// other candidates in their horizontal band.
pub(crate) fn text_line_members(boxes: &[Box], cfg: &LayoutConfig) -> Vec<usize> {
    if boxes.is_empty() {
        return Vec::new();
    }
    let mut heights: Vec<u32> = boxes.iter().map(|b| b.h).collect();
    heights.sort_unstable();
    let band = cfg.band_factor * heights[heights.len() / 2] as f64;
    let mut centers: Vec<(f64, usize)> = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.center().1, i))
        .collect();
    centers.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ys: Vec<f64> = centers.iter().map(|c| c.0).collect();
    let mut keep = Vec::new();
    for &(y, i) in &centers {
        let lo = ys.partition_point(|&v| v < y - band);
        let hi = ys.partition_point(|&v| v <= y + band);
        if hi - lo > cfg.min_siblings {
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep
}

fn evidence(nodes: &[ContourNode], members: &[usize], cfg: &LayoutConfig) -> usize {
    let candidates: Vec<Box> = members
        .iter()
        .map(|&i| &nodes[i])
        .filter(|n| cfg.glyph_like(&n.bbox, n.pixel_count))
        .map(|n| n.bbox)
        .collect();
    text_line_members(&candidates, cfg).len()
}

/// Real-time crop: the dark frame around the card shows up as a ring in the
/// text-polarity mask; its hole is the card. A frame without a ring is taken
/// as the card itself when its top-level contours read as text lines.
pub fn crop_by_contours(img: &GrayImage, cfg: &LayoutConfig) -> Result<CropResult> {
    let start = Instant::now();
    let smooth = gaussian_blur(img, 1.0)?;
    let mask = adaptive_binarize(&smooth, cfg.binarize_window, cfg.binarize_offset)?.invert();
    let nodes = find_contours(&mask);
    let (w, h) = (img.width(), img.height());

    let mut rings: Vec<usize> = (0..nodes.len())
        .filter(|&i| nodes[i].parent.is_none() && !nodes[i].holes.is_empty())
        .collect();
    rings.sort_by_key(|&i| std::cmp::Reverse(nodes[i].area));

    let mut found = None;
    for &i in &rings {
        let kept = evidence(&nodes, &nodes[i].children, cfg);
        if kept > 0 {
            let hole = *nodes[i]
                .holes
                .iter()
                .max_by_key(|b| b.area())
                .expect("ring has a hole");
            found = Some((hole, kept));
            break;
        }
    }
    if found.is_none() {
        let top: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();
        let kept = evidence(&nodes, &top, cfg);
        if kept > 0 {
            found = Some((img.bounds(), kept));
        }
    }
    let (card, kept) = found.ok_or(Error::NoCard)?;
    let mx = (cfg.crop_margin * card.w as f64).round() as i32;
    let my = (cfg.crop_margin * card.h as f64).round() as i32;
    let bbox = card.expand(mx, my).clamp_to(w, h).unwrap_or(card);
    Ok(CropResult {
        bbox,
        method: CropMethod::Contour,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        kept_contours: kept,
        low_confidence: false,
    })
}

fn window_starts(len: usize, win: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=len - win).step_by(stride).collect();
    if *v.last().expect("len >= win") != len - win {
        v.push(len - win);
    }
    v
}

/// Offline crop: bounding box of the windows whose mean Sobel magnitude is at
/// least half the best window's.
pub fn crop_by_detail(img: &GrayImage, win: usize, stride: usize) -> Result<CropResult> {
    let start = Instant::now();
    let (w, h) = (img.width(), img.height());
    if win == 0 || stride == 0 {
        return Err(Error::Parameter(
            "window and stride must be positive".into(),
        ));
    }
    if w < win || h < win {
        return Err(Error::Size(format!(
            "{w}x{h} image is smaller than the {win} px window"
        )));
    }
    let ii = IntegralImage::new(&sobel_magnitude(img));
    let xs = window_starts(w, win, stride);
    let ys = window_starts(h, win, stride);
    let scores: Vec<u64> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .map(|(x, y)| ii.sum(x, y, x + win, y + win))
        .collect();
    let best = scores.iter().copied().max().unwrap_or(0);
    let done = |bbox, low_confidence| CropResult {
        bbox,
        method: CropMethod::Detail,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        kept_contours: 0,
        low_confidence,
    };
    if best == 0 {
        return Ok(done(img.bounds(), false));
    }
    let kept: Vec<bool> = scores.iter().map(|&s| 2 * s >= best).collect();
    let mut bbox: Option<Box> = None;
    for (k, _) in kept.iter().enumerate().filter(|(_, &on)| on) {
        let (x, y) = (xs[k % xs.len()], ys[k / xs.len()]);
        let b = Box::new(x as i32, y as i32, win as u32, win as u32);
        bbox = Some(bbox.map_or(b, |u| u.union(&b)));
    }
    let clusters = grid_clusters(&kept, xs.len(), ys.len());
    Ok(done(bbox.expect("best window kept"), clusters > 1))
}

fn grid_clusters(on: &[bool], nx: usize, ny: usize) -> usize {
    let mut seen = vec![false; on.len()];
    let mut clusters = 0;
    for s in 0..on.len() {
        if !on[s] || seen[s] {
            continue;
        }
        clusters += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % nx) as isize, (i / nx) as isize);
            for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (px, py) = (x + dx, y + dy);
                if px < 0 || py < 0 || px >= nx as isize || py >= ny as isize {
                    continue;
                }
                let j = py as usize * nx + px as usize;
                if on[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    clusters
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oriented {
    pub image: GrayImage,
    pub rotated90: bool,
    pub uncertain: bool,
}

/// Turns a portrait card clockwise once. Near-square frames fit neither
/// orientation and are always flagged uncertain; there the face signal
/// decides (found: keep, not found: turn) and without it only a
/// taller-than-wide frame is turned.
pub fn fix_orientation(img: &GrayImage, cfg: &LayoutConfig, face_found: Option<bool>) -> Oriented {
    let r = img.width() as f64 / img.height() as f64;
    let min = cfg.min_landscape_ratio();
    let (turn, uncertain) = if r >= min {
        (false, false)
    } else if 1.0 / r >= min {
        (true, false)
    } else {
        match face_found {
            Some(found) => (!found, true),
            None => (r < 1.0, true),
        }
    };
    Oriented {
        image: if turn {
            rotate(img, -90.0, 0)
        } else {
            img.clone()
        },
        rotated90: turn,
        uncertain,
    }
}

/// Turns the card 180° when its MRZ band sits in the top 40%.
pub fn fix_180(img: &GrayImage, mrz_band_center_y: Option<f64>) -> (GrayImage, bool) {
    match mrz_band_center_y {
        Some(c) if c < 0.4 => (rotate(img, 180.0, 0), true),
        _ => (img.clone(), false),
    }
}
