use super::{BinaryImage, GrayImage};
use crate::error::{Error, Result};

/// Summed-area table with one row/column of zero padding.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    // (width+1) x (height+1)
    sums: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        Self::from_fn(img.width(), img.height(), |x, y| img.get(x, y) as u64)
    }

    /// Table over the image padded by `pad` replicated pixels on each side.
    /// Query coordinates are in padded space.
    pub fn padded(img: &GrayImage, pad: usize) -> Self {
        let p = pad as isize;
        Self::from_fn(img.width() + 2 * pad, img.height() + 2 * pad, |x, y| {
            img.get_clamped(x as isize - p, y as isize - p) as u64
        })
    }

    fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u64) -> Self {
        let stride = width + 1;
        let mut sums = vec![0u64; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0u64;
            for x in 0..width {
                row += f(x, y);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        IntegralImage {
            width,
            height,
            sums,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum over `[x0, x1) × [y0, y1)`.
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let s = self.width + 1;
        self.sums[y1 * s + x1] + self.sums[y0 * s + x0]
            - self.sums[y0 * s + x1]
            - self.sums[y1 * s + x0]
    }
}

/// Otsu threshold over the 256-bin histogram. Ties go to the lower
/// threshold; a single-valued histogram yields that value.
pub fn otsu_threshold(hist: &[u64; 256]) -> u8 {
    let n: u64 = hist.iter().sum();
    let total: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let occupied: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    if occupied.len() <= 1 {
        return occupied.first().copied().unwrap_or(0) as u8;
    }

    // Between-class variance is proportional to (N*S0 - n0*S)^2 / (n0*n1);
    // compared exactly as fractions with 256-bit products.
    let mut best: Option<(u128, u128, u8)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 0..256usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (n as i128 * s0 as i128 - n0 as i128 * total as i128).unsigned_abs();
        let num = d * d;
        let den = n0 as u128 * n1 as u128;
        let better = match best {
            None => true,
            Some((bn, bd, _)) => wide_mul(num, bd) > wide_mul(bn, den),
        };
        if better {
            best = Some((num, den, t as u8));
        }
    }
    best.map_or(0, |(_, _, t)| t)
}

fn wide_mul(a: u128, b: u128) -> (u128, u128) {
    let mask = u64::MAX as u128;
    let (a0, a1) = (a & mask, a >> 64);
    let (b0, b1) = (b & mask, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
    let lo = (p00 & mask) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

pub(crate) fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in img.as_raw() {
        hist[v as usize] += 1;
    }
    hist
}

/// Global Otsu binarization: pixels above the threshold become white.
pub fn otsu_binarize(img: &GrayImage) -> (BinaryImage, u8) {
    let t = otsu_threshold(&histogram(img));
    (BinaryImage::threshold(img, t), t)
}

/// Local-mean threshold: a pixel is white iff it exceeds the mean of its
/// `window`×`window` neighbourhood (replicated borders) minus `offset`.
pub fn adaptive_binarize(img: &GrayImage, window: usize, offset: i32) -> Result<BinaryImage> {
    if window.is_multiple_of(2) || window < 3 {
        return Err(Error::Parameter(format!("adaptive window {window}")));
    }
    let r = window / 2;
    let ii = IntegralImage::padded(img, r);
    let n = (window * window) as i64;
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            // Padded window centered on (x+r, y+r).
            let s = ii.sum(x, y, x + window, y + window) as i64;
            let v = img.get(x, y) as i64;
            // v > s/n - offset, compared in integers.
            out.push(if v * n > s - offset as i64 * n {
                255
            } else {
                0
            });
        }
    }
    Ok(BinaryImage::from_gray_unchecked(GrayImage::from_raw(
        w, h, out,
    )?))
}
