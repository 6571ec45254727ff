use crate::error::{Error, Result};
use crate::raster::{otsu_threshold, GrayImage};

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;

const ROWS: [(char, [&str; GLYPH_H]); 37] = [
    (
        'A',
        [
            ".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#",
        ],
    ),
    (
        'B',
        [
            "####.", "#...#", "#...#", "####.", "#...#", "#...#", "####.",
        ],
    ),
    (
        'C',
        [
            ".###.", "#...#", "#....", "#....", "#....", "#...#", ".###.",
        ],
    ),
    (
        'D',
        [
            "####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####.",
        ],
    ),
    (
        'E',
        [
            "#####", "#....", "#....", "####.", "#....", "#....", "#####",
        ],
    ),
    (
        'F',
        [
            "#####", "#....", "#....", "####.", "#....", "#....", "#....",
        ],
    ),
    (
        'G',
        [
            ".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####",
        ],
    ),
    (
        'H',
        [
            "#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#",
        ],
    ),
    (
        'I',
        [
            ".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###.",
        ],
    ),
    (
        'J',
        [
            "..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##..",
        ],
    ),
    (
        'K',
        [
            "#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#",
        ],
    ),
    (
        'L',
        [
            "#....", "#....", "#....", "#....", "#....", "#....", "#####",
        ],
    ),
    (
        'M',
        [
            "#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#",
        ],
    ),
    (
        'N',
        [
            "#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#",
        ],
    ),
    (
        'O',
        [
            ".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.",
        ],
    ),
    (
        'P',
        [
            "####.", "#...#", "#...#", "####.", "#....", "#....", "#....",
        ],
    ),
    (
        'Q',
        [
            ".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#",
        ],
    ),
    (
        'R',
        [
            "####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#",
        ],
    ),
    (
        'S',
        [
            ".####", "#....", "#....", ".###.", "....#", "....#", "####.",
        ],
    ),
    (
        'T',
        [
            "#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..",
        ],
    ),
    (
        'U',
        [
            "#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.",
        ],
    ),
    (
        'V',
        [
            "#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#..",
        ],
    ),
    (
        'W',
        [
            "#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#.",
        ],
    ),
    (
        'X',
        [
            "#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#",
        ],
    ),
    (
        'Y',
        [
            "#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#..",
        ],
    ),
    (
        'Z',
        [
            "#####", "....#", "...#.", "..#..", ".#...", "#....", "#####",
        ],
    ),
    (
        '0',
        [
            ".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###.",
        ],
    ),
    (
        '1',
        [
            "..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###.",
        ],
    ),
    (
        '2',
        [
            ".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####",
        ],
    ),
    (
        '3',
        [
            "#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###.",
        ],
    ),
    (
        '4',
        [
            "...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#.",
        ],
    ),
    (
        '5',
        [
            "#####", "#....", "####.", "....#", "....#", "#...#", ".###.",
        ],
    ),
    (
        '6',
        [
            "..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '7',
        [
            "#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#...",
        ],
    ),
    (
        '8',
        [
            ".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '9',
        [
            ".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##..",
        ],
    ),
    (
        '<',
        [
            "...#.", "..#..", ".#...", "#....", ".#...", "..#..", "...#.",
        ],
    ),
];

/// 5×7 bitmap for one character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub ch: char,
    pub bits: [[bool; GLYPH_W]; GLYPH_H],
}

impl Glyph {
    /// Inked column/row span `(x0, y0, x1, y1)`, inclusive.
    pub fn ink_span(&self) -> (usize, usize, usize, usize) {
        let mut span = (GLYPH_W, GLYPH_H, 0, 0);
        for (y, row) in self.bits.iter().enumerate() {
            for (x, &on) in row.iter().enumerate() {
                if on {
                    span.0 = span.0.min(x);
                    span.1 = span.1.min(y);
                    span.2 = span.2.max(x);
                    span.3 = span.3.max(y);
                }
            }
        }
        span
    }
}

/// The bundled bitmap font over `[A-Z0-9<]`, drawn at an integer scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphFont {
    glyphs: Vec<Glyph>,
    pub scale: usize,
}

impl GlyphFont {
    pub fn new(scale: usize) -> Self {
        assert!(scale >= 1);
        let glyphs = ROWS
            .iter()
            .map(|(ch, rows)| {
                let mut bits = [[false; GLYPH_W]; GLYPH_H];
                for (y, row) in rows.iter().enumerate() {
                    for (x, b) in row.bytes().enumerate() {
                        bits[y][x] = b == b'#';
                    }
                }
                Glyph { ch: *ch, bits }
            })
            .collect();
        GlyphFont { glyphs, scale }
    }

    pub fn glyphs(&self) -> &[Glyph] {
        &self.glyphs
    }

    pub fn glyph(&self, ch: char) -> Option<&Glyph> {
        self.glyphs.iter().find(|g| g.ch == ch)
    }

    /// Horizontal advance per character cell, spacing included.
    pub fn advance(&self) -> usize {
        (GLYPH_W + 1) * self.scale
    }

    pub fn cell_height(&self) -> usize {
        GLYPH_H * self.scale
    }

    /// Nearest glyph to an image crop: Otsu ink mask, trimmed to its ink
    /// box and resampled onto each glyph's trimmed grid, compared by
    /// normalized Hamming distance.
    pub fn read(&self, img: &GrayImage) -> Result<char> {
        let (lo, hi) = img.min_max();
        if (hi - lo) < 40 {
            return Err(Error::Reader("blank glyph box".into()));
        }
        let mut hist = [0u64; 256];
        img.as_raw().iter().for_each(|&v| hist[v as usize] += 1);
        let t = otsu_threshold(&hist);
        let ink = |x: usize, y: usize| img.get(x, y) <= t;

        // Trim to rows and columns with a real share of ink; isolated specks
        // at the border do not stretch the box.
        let (w, h) = (img.width(), img.height());
        let mut cols = vec![0usize; w];
        let mut rows = vec![0usize; h];
        for y in 0..h {
            for x in 0..w {
                if ink(x, y) {
                    cols[x] += 1;
                    rows[y] += 1;
                }
            }
        }
        let (tc, tr) = ((0.1 * h as f64).max(2.0), (0.1 * w as f64).max(2.0));
        let span = |counts: &[usize], t: f64| {
            let first = counts.iter().position(|&c| c as f64 >= t)?;
            let last = counts.iter().rposition(|&c| c as f64 >= t)?;
            Some((first, last))
        };
        let ((x0, x1), (y0, y1)) = span(&cols, tc)
            .zip(span(&rows, tr))
            .ok_or_else(|| Error::Reader("no ink".into()))?;
        let (bw, bh) = ((x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64);

        let mut best = (f64::MAX, '<');
        for g in &self.glyphs {
            let (gx0, gy0, gx1, gy1) = g.ink_span();
            let (gw, gh) = (gx1 - gx0 + 1, gy1 - gy0 + 1);
            let mut diff = 0.0;
            for cy in 0..gh {
                for cx in 0..gw {
                    // Ink fraction of the crop region under this cell.
                    let (sx0, sx1) = (
                        x0 as f64 + bw * cx as f64 / gw as f64,
                        x0 as f64 + bw * (cx + 1) as f64 / gw as f64,
                    );
                    let (sy0, sy1) = (
                        y0 as f64 + bh * cy as f64 / gh as f64,
                        y0 as f64 + bh * (cy + 1) as f64 / gh as f64,
                    );
                    let (mut on, mut n) = (0usize, 0usize);
                    for y in sy0.floor() as usize..(sy1.ceil() as usize).min(y1 + 1) {
                        for x in sx0.floor() as usize..(sx1.ceil() as usize).min(x1 + 1) {
                            n += 1;
                            on += ink(x, y) as usize;
                        }
                    }
                    let frac = on as f64 / n.max(1) as f64;
                    let want = if g.bits[gy0 + cy][gx0 + cx] { 1.0 } else { 0.0 };
                    diff += (frac - want).abs();
                }
            }
            let mut score = diff / (gw * gh) as f64;
            // Shape of the ink box disambiguates narrow glyphs.
            score += 0.5 * ((bw / bh) - (gw as f64 / gh as f64)).abs();
            if score < best.0 {
                best = (score, g.ch);
            }
        }
        Ok(best.1)
    }
}

/// A glyph reader closure over `font`, the OCR stand-in for MRZ extraction.
pub fn glyph_reader_for(font: &GlyphFont) -> impl Fn(&GrayImage) -> Result<char> + Clone + '_ {
    move |img| font.read(img)
}
