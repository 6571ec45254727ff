//! Deterministic synthetic ID cards and passport pages with ground truth.

mod font;
pub(crate) mod rng;

use serde::{Deserialize, Serialize};

use crate::detmath;
use crate::error::{Error, Result};
use crate::mrz::{gen_mrz_lines, MrzFields, Sex};
use crate::raster::{rotate, rotate_into_canvas, Box, GrayImage, Point};

pub use font::{glyph_reader_for, Glyph, GlyphFont, GLYPH_H, GLYPH_W};
pub use rng::Lcg;

/// A line of card text placed at pixel `(column, row)` of the card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub row: i32,
    pub column: i32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CardSpec {
    pub card_w: usize,
    pub card_h: usize,
    /// Dark margin around the card on every side.
    pub canvas: usize,
    /// Degrees, counter-clockwise as displayed.
    pub rotation: f64,
    pub noise_sigma: f64,
    pub texture_amplitude: f64,
    pub text_lines: Vec<TextLine>,
    pub mrz: Option<MrzFields>,
    /// Photo placeholder, card coordinates.
    pub photo: Option<Box>,
    pub seed: u64,
    pub glyph_scale: usize,
    pub ink: u8,
    pub paper: u8,
    pub background: u8,
}

impl Default for CardSpec {
    fn default() -> Self {
        CardSpec {
            card_w: 1004,
            card_h: 636,
            canvas: 48,
            rotation: 0.0,
            noise_sigma: 0.0,
            texture_amplitude: 0.0,
            text_lines: Vec::new(),
            mrz: None,
            photo: None,
            seed: 0,
            glyph_scale: 3,
            ink: 20,
            paper: 235,
            background: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphTruth {
    #[serde(rename = "char")]
    pub ch: char,
    #[serde(rename = "box")]
    pub bbox: Box,
}

/// Where everything ended up in the rendered image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub card_box: Box,
    /// Card corner pixel centers: top-left, top-right, bottom-right, bottom-left.
    pub card_corners: [(f64, f64); 4],
    pub glyph_boxes: Vec<GlyphTruth>,
    /// One box per entry of `text_lines`, MRZ excluded.
    pub line_boxes: Vec<Box>,
    pub mrz_band: Option<Box>,
    pub mrz_lines: Option<[String; 2]>,
    pub photo_box: Option<Box>,
    pub rotation: f64,
}

const SURNAMES: &[&str] = &[
    "ERIKSSON",
    "MARTIN",
    "NOVAK",
    "GARCIA",
    "OKAFOR",
    "TANAKA",
    "SILVA",
    "MULLER",
    "KOWALSKI",
    "DUBOIS",
    "HANSEN",
    "ROSSI",
    "NGUYEN",
    "PETROV",
    "OBRIEN",
    "FISCHER",
    "LINDQVIST",
    "MORENO",
];
const GIVEN: &[&str] = &[
    "ANNA", "MARIA", "JOHN", "LUCA", "AMARA", "KENJI", "SOFIA", "PAUL", "EVA", "OMAR", "LENA",
    "IVAN", "NOOR", "MARC",
];
const STATES: &[&str] = &[
    "UTO", "GBR", "FRA", "DEU", "ITA", "ESP", "SWE", "NLD", "CAN", "AUS", "JPN", "BRA",
];
const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

fn random_date(rng: &mut Lcg, years: std::ops::Range<u64>) -> String {
    format!(
        "{:02}{:02}{:02}",
        rng.range(years.start, years.end) % 100,
        rng.range(1, 13),
        rng.range(1, 29)
    )
}

fn random_code(rng: &mut Lcg, len: usize) -> String {
    (0..len).map(|_| *rng.pick(ALNUM) as char).collect()
}

/// Random TD3 fields that fit the layout; the same seed gives the same holder.
pub fn random_mrz_fields(seed: u64) -> MrzFields {
    let mut rng = Lcg::new(seed.wrapping_mul(31).wrapping_add(0x5EED));
    let given_n = rng.range(1, 3) as usize;
    let given: Vec<&str> = (0..given_n).map(|_| *rng.pick(GIVEN)).collect();
    let personal_len = rng.range(0, 15) as usize;
    MrzFields {
        doc_type: "P".into(),
        issuing_state: rng.pick(STATES).to_string(),
        surname: rng.pick(SURNAMES).to_string(),
        given_names: given.join(" "),
        doc_number: random_code(&mut rng, 9),
        nationality: rng.pick(STATES).to_string(),
        birth_date: random_date(&mut rng, 40..100),
        sex: *rng.pick(&[Sex::M, Sex::F, Sex::Unspecified]),
        expiry_date: random_date(&mut rng, 24..35),
        personal_number: random_code(&mut rng, personal_len),
    }
}

impl CardSpec {
    /// A passport data page: photo, six text lines and a TD3 zone, upright
    /// and noise-free.
    pub fn passport(seed: u64) -> Self {
        let f = random_mrz_fields(seed);
        let sex = match f.sex {
            Sex::M => "M",
            Sex::F => "F",
            Sex::Unspecified => "X",
        };
        let texts = [
            format!("P {} {}", f.issuing_state, f.doc_number),
            f.surname.clone(),
            f.given_names.clone(),
            f.nationality.clone(),
            format!("{} {}", f.birth_date, sex),
            f.expiry_date.clone(),
        ];
        let text_lines = texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| TextLine {
                row: 120 + 50 * i as i32,
                column: 290,
                text,
            })
            .collect();
        CardSpec {
            text_lines,
            mrz: Some(f),
            photo: Some(Box::new(40, 110, 210, 273)),
            seed,
            ..CardSpec::default()
        }
    }

    pub fn with_rotation(mut self, degrees: f64) -> Self {
        self.rotation = degrees;
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_texture(mut self, amplitude: f64) -> Self {
        self.texture_amplitude = amplitude;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.card_w == 0 || self.card_h == 0 {
            return Err(Error::Spec("empty card".into()));
        }
        if self.glyph_scale == 0 {
            return Err(Error::Spec("glyph_scale must be at least 1".into()));
        }
        if !(0.0..=60.0).contains(&self.texture_amplitude) {
            return Err(Error::Spec(format!(
                "texture amplitude {}",
                self.texture_amplitude
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.rotation.is_finite() {
            return Err(Error::Spec(
                "noise_sigma and rotation must be finite, sigma ≥ 0".into(),
            ));
        }
        for line in &self.text_lines {
            if let Some(c) = line
                .text
                .chars()
                .find(|&c| c != ' ' && !crate::mrz::is_mrz_char(c))
            {
                return Err(Error::Spec(format!("no glyph for {c:?}")));
            }
        }
        Ok(())
    }
}

/// Draws `text` with its top-left cell corner at `(x, y)`, returning the ink
/// box of every glyph.
fn draw_text(
    img: &mut GrayImage,
    font: &GlyphFont,
    x: i32,
    y: i32,
    text: &str,
    ink: u8,
) -> Vec<GlyphTruth> {
    let s = font.scale as i32;
    let mut out = Vec::new();
    for (i, ch) in text.chars().enumerate() {
        if ch == ' ' {
            continue;
        }
        let g = font.glyph(ch).expect("validated glyph");
        let cx = x + i as i32 * font.advance() as i32;
        for (gy, row) in g.bits.iter().enumerate() {
            for (gx, &on) in row.iter().enumerate() {
                if !on {
                    continue;
                }
                for dy in 0..s {
                    for dx in 0..s {
                        let (px, py) = (cx + gx as i32 * s + dx, y + gy as i32 * s + dy);
                        if px >= 0
                            && py >= 0
                            && (px as usize) < img.width()
                            && (py as usize) < img.height()
                        {
                            img.set(px as usize, py as usize, ink);
                        }
                    }
                }
            }
        }
        let (x0, y0, x1, y1) = g.ink_span();
        out.push(GlyphTruth {
            ch,
            bbox: Box::from_corners(
                cx + x0 as i32 * s,
                y + y0 as i32 * s,
                cx + (x1 as i32 + 1) * s - 1,
                y + (y1 as i32 + 1) * s - 1,
            ),
        });
    }
    out
}

fn union_all(boxes: impl IntoIterator<Item = Box>) -> Option<Box> {
    boxes.into_iter().reduce(|a, b| a.union(&b))
}

/// Renders the card and reports where its parts landed.
pub fn render_card(spec: &CardSpec) -> Result<(GrayImage, GroundTruth)> {
    spec.validate()?;
    let font = GlyphFont::new(spec.glyph_scale);
    let m = spec.canvas;
    let (cw, ch) = (spec.card_w, spec.card_h);
    let (w, h) = (cw + 2 * m, ch + 2 * m);

    let a = spec.texture_amplitude;
    let tau = 2.0 * std::f64::consts::PI;
    let tx: Vec<f64> = (0..9)
        .map(|i| detmath::sin_cos(tau * i as f64 / 9.0).0)
        .collect();
    let ty: Vec<f64> = (0..13)
        .map(|i| detmath::sin_cos(tau * i as f64 / 13.0).0)
        .collect();
    let paper = spec.paper as f64;
    let mut img = GrayImage::from_fn(w, h, |x, y| {
        if x < m || y < m || x >= m + cw || y >= m + ch {
            return spec.background;
        }
        let (cx, cy) = (x - m, y - m);
        (paper + a * (tx[cx % 9] + ty[cy % 13]) / 2.0)
            .round()
            .clamp(0.0, 255.0) as u8
    });

    let photo = spec.photo.map(|p| p.translate(m as i32, m as i32));
    if let Some(p) = photo.and_then(|p| p.clamp_to(w, h)) {
        let (pcx, pcy) = (
            p.x0 as f64 + p.w as f64 / 2.0,
            p.y0 as f64 + p.h as f64 * 0.4,
        );
        let (rx, ry) = (p.w as f64 * 0.3, p.h as f64 * 0.25);
        for y in p.y0..p.bottom() {
            for x in p.x0..p.right() {
                let (dx, dy) = ((x as f64 - pcx) / rx, (y as f64 - pcy) / ry);
                let v = if dx * dx + dy * dy <= 1.0 { 140 } else { 70 };
                img.set(x as usize, y as usize, v);
            }
        }
    }

    let (mi, mj) = (m as i32, m as i32);
    let mut glyphs = Vec::new();
    let mut line_boxes = Vec::new();
    for line in &spec.text_lines {
        let g = draw_text(
            &mut img,
            &font,
            mi + line.column,
            mj + line.row,
            &line.text,
            spec.ink,
        );
        line_boxes.push(union_all(g.iter().map(|t| t.bbox)));
        glyphs.extend(g);
    }

    let mut mrz_band = None;
    let mut mrz_lines = None;
    if let Some(f) = &spec.mrz {
        let lines = gen_mrz_lines(f)?;
        let adv = font.advance() as i32;
        let s = font.scale as i32;
        let width = 44 * adv - s;
        let cell = font.cell_height() as i32;
        let y2 = ch as i32 - 12 * s - cell;
        let y1 = y2 - cell - 10;
        let x0 = (cw as i32 - width) / 2;
        let mut band = Vec::new();
        for (line, y) in lines.iter().zip([y1, y2]) {
            band.extend(draw_text(&mut img, &font, mi + x0, mj + y, line, spec.ink));
        }
        mrz_band = union_all(band.iter().map(|t| t.bbox));
        glyphs.extend(band);
        mrz_lines = Some(lines);
    }

    let card = Box::new(mi, mj, cw as u32, ch as u32);
    let theta = spec.rotation;
    let out = rotate(&img, theta, spec.background);
    let map = |p: (f64, f64)| {
        let q = rotate_into_canvas(Point::new(p.0, p.1), w, h, theta);
        (q.x, q.y)
    };
    let map_box = |b: Box| -> Box {
        if b.is_empty() {
            return b;
        }
        let (x0, y0) = (b.x0 as f64, b.y0 as f64);
        let (x1, y1) = ((b.right() - 1) as f64, (b.bottom() - 1) as f64);
        let pts = [map((x0, y0)), map((x1, y0)), map((x1, y1)), map((x0, y1))];
        let lo =
            |f: fn(&(f64, f64)) -> f64| pts.iter().map(f).fold(f64::MAX, f64::min).round() as i32;
        let hi =
            |f: fn(&(f64, f64)) -> f64| pts.iter().map(f).fold(f64::MIN, f64::max).round() as i32;
        Box::from_corners(lo(|p| p.0), lo(|p| p.1), hi(|p| p.0), hi(|p| p.1))
    };

    let (x0, y0) = (card.x0 as f64, card.y0 as f64);
    let (x1, y1) = ((card.right() - 1) as f64, (card.bottom() - 1) as f64);
    let truth = GroundTruth {
        card_box: map_box(card),
        card_corners: [map((x0, y0)), map((x1, y0)), map((x1, y1)), map((x0, y1))],
        glyph_boxes: glyphs
            .into_iter()
            .map(|g| GlyphTruth {
                ch: g.ch,
                bbox: map_box(g.bbox),
            })
            .collect(),
        line_boxes: line_boxes.into_iter().flatten().map(map_box).collect(),
        mrz_band: mrz_band.map(map_box),
        mrz_lines,
        photo_box: photo.map(map_box),
        rotation: theta,
    };

    let out = if spec.noise_sigma > 0.0 {
        let mut rng = Lcg::new(spec.seed);
        let sigma = spec.noise_sigma;
        let data = out
            .as_raw()
            .iter()
            .map(|&v| (v as f64 + (sigma * rng.gaussian()).round()).clamp(0.0, 255.0) as u8)
            .collect();
        out.with_data(data)
    } else {
        out
    };
    Ok((out, truth))
}
