use serde::{Deserialize, Serialize};

use super::locate::{locate_mrz, MrzBand, MrzLocateConfig};
use super::{parse_td3, MrzRecord, TD3_LINE_LEN};
use crate::autocrop::LayoutConfig;
use crate::error::{Error, Result};
use crate::raster::{crop, gaussian_blur, Box, GrayImage};
use crate::textseg::contour_char_boxes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedLines {
    pub lines: [String; 2],
    /// Set when a line had fewer than 44 readable slots and was filled
    /// with `<`.
    pub padded: bool,
    pub band: MrzBand,
}

const BAND_PAD: i32 = 6;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Reads the two MRZ lines off a cropped card with `reader`, one glyph box
/// at a time. `Ok(None)` when no band is found.
pub fn extract_lines<R>(card: &GrayImage, reader: R) -> Result<Option<ExtractedLines>>
where
    R: Fn(&GrayImage) -> Result<char>,
{
    let Some(band) = locate_mrz(card, &MrzLocateConfig::default())? else {
        return Ok(None);
    };
    let area = band
        .bbox
        .expand(BAND_PAD, BAND_PAD)
        .clamp_to(card.width(), card.height())
        .ok_or_else(|| Error::MrzStructure("band outside the card".into()))?;
    let strip = crop(card, &area)?;
    let boxes: Vec<Box> =
        contour_char_boxes(&gaussian_blur(&strip, 1.0)?, &LayoutConfig::default())?
            .into_iter()
            .map(|r| r.bbox)
            .collect();
    if boxes.len() < 4 {
        return Err(Error::MrzStructure(format!(
            "{} glyph boxes in the band",
            boxes.len()
        )));
    }
    let tall = 0.5 * median(boxes.iter().map(|b| b.h as f64).collect());
    let mut boxes: Vec<Box> = boxes.into_iter().filter(|b| b.h as f64 >= tall).collect();
    boxes.sort_by(|a, b| a.center().1.total_cmp(&b.center().1));

    // Two rows, split at the widest gap between vertical centers.
    let split = (1..boxes.len())
        .max_by(|&i, &j| {
            let gi = boxes[i].center().1 - boxes[i - 1].center().1;
            let gj = boxes[j].center().1 - boxes[j - 1].center().1;
            gi.total_cmp(&gj)
        })
        .expect("at least four boxes");
    let glyph_h = median(boxes.iter().map(|b| b.h as f64).collect());
    let rows = [&boxes[..split], &boxes[split..]];
    for row in rows {
        let ys: Vec<f64> = row.iter().map(|b| b.center().1).collect();
        let spread = ys.iter().cloned().fold(f64::MIN, f64::max)
            - ys.iter().cloned().fold(f64::MAX, f64::min);
        if spread > 0.75 * glyph_h {
            return Err(Error::MrzStructure("glyphs do not form two rows".into()));
        }
    }

    let mut padded = false;
    let mut lines = [String::new(), String::new()];
    for (k, row) in rows.iter().enumerate() {
        let mut row: Vec<Box> = row.to_vec();
        row.sort_by_key(|b| b.x0);
        let xs: Vec<f64> = row.iter().map(|b| b.center().0).collect();
        let diffs: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.is_empty() {
            return Err(Error::MrzStructure("row with a single glyph".into()));
        }
        let typical = median(diffs.clone());
        let pitch = median(diffs.into_iter().filter(|&d| d >= 0.5 * typical).collect());
        let origin = xs[0];

        let mut slots: Vec<Option<Box>> = Vec::new();
        for b in &row {
            let s = ((b.center().0 - origin) / pitch).round() as usize;
            if s >= TD3_LINE_LEN {
                return Err(Error::MrzStructure(format!(
                    "more than {TD3_LINE_LEN} glyphs in a row"
                )));
            }
            if slots.len() <= s {
                slots.resize(s + 1, None);
            }
            slots[s] = Some(slots[s].map_or(*b, |u: Box| u.union(b)));
        }
        let row_top = row.iter().map(|b| b.y0).min().expect("non-empty row");
        let row_bottom = row.iter().map(|b| b.bottom()).max().expect("non-empty row");
        let mut line = String::with_capacity(TD3_LINE_LEN);
        for (s, slot) in slots.iter().enumerate() {
            let b = slot.unwrap_or_else(|| {
                let cx = origin + s as f64 * pitch;
                let half = 0.5 * pitch;
                Box::new(
                    (cx - half) as i32,
                    row_top,
                    pitch as u32,
                    (row_bottom - row_top) as u32,
                )
            });
            let cell = b
                .translate(area.x0, area.y0)
                .clamp_to(card.width(), card.height())
                .ok_or_else(|| Error::MrzStructure("glyph outside the card".into()))?;
            let ch = match reader(&crop(card, &cell)?) {
                Ok(c) => c,
                Err(Error::Reader(_)) if slot.is_none() => '<',
                Err(e) => return Err(e),
            };
            line.push(ch);
        }
        if line.len() < TD3_LINE_LEN {
            padded = true;
            while line.len() < TD3_LINE_LEN {
                line.push('<');
            }
        }
        lines[k] = line;
    }
    Ok(Some(ExtractedLines {
        lines,
        padded,
        band,
    }))
}

/// [`extract_lines`] followed by TD3 parsing.
pub fn extract_and_parse<R>(card: &GrayImage, reader: R) -> Result<Option<MrzRecord>>
where
    R: Fn(&GrayImage) -> Result<char>,
{
    match extract_lines(card, reader)? {
        Some(x) => parse_td3(&x.lines[0], &x.lines[1]).map(Some),
        None => Ok(None),
    }
}
