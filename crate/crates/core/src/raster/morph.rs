use std::str::FromStr;

use super::{BinaryImage, GrayImage, Kernel};
use crate::error::{Error, Result};

/// Grayscale morphology with a flat rectangular structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    /// `dilate(erode(img))`
    Open,
    /// `erode(dilate(img))`
    Close,
    /// `close(img) - img`, saturating.
    Blackhat,
}

impl FromStr for MorphOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erode" => Ok(MorphOp::Erode),
            "dilate" => Ok(MorphOp::Dilate),
            "open" => Ok(MorphOp::Open),
            "close" => Ok(MorphOp::Close),
            "blackhat" => Ok(MorphOp::Blackhat),
            other => Err(Error::Parameter(format!("unknown morphology op `{other}`"))),
        }
    }
}

pub fn morphology(img: &GrayImage, op: MorphOp, k: &Kernel) -> GrayImage {
    let (kw, kh) = (k.width(), k.height());
    match op {
        MorphOp::Erode => rank(img, kw, kh, u8::min),
        MorphOp::Dilate => rank(img, kw, kh, u8::max),
        MorphOp::Open => rank(&rank(img, kw, kh, u8::min), kw, kh, u8::max),
        MorphOp::Close => rank(&rank(img, kw, kh, u8::max), kw, kh, u8::min),
        MorphOp::Blackhat => {
            let closed = morphology(img, MorphOp::Close, k);
            closed.saturating_sub(img).expect("same dimensions")
        }
    }
}

impl BinaryImage {
    pub fn morph(&self, op: MorphOp, k: &Kernel) -> BinaryImage {
        BinaryImage::from_gray_unchecked(morphology(self.as_gray(), op, k))
    }
}

/// Separable running min/max over a `kw`×`kh` window, replicated borders.
fn rank(img: &GrayImage, kw: usize, kh: usize, pick: fn(u8, u8) -> u8) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let (rx, ry) = ((kw / 2) as isize, (kh / 2) as isize);
    let src = img.as_raw();
    let mut tmp = vec![0u8; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w as isize {
            let lo = (x - rx).max(0) as usize;
            let hi = (x + rx).min(w as isize - 1) as usize;
            tmp[y * w + x as usize] = row[lo..=hi].iter().copied().reduce(pick).unwrap();
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h as isize {
        let lo = (y - ry).max(0) as usize;
        let hi = (y + ry).min(h as isize - 1) as usize;
        for x in 0..w {
            let mut acc = tmp[lo * w + x];
            for yy in lo + 1..=hi {
                acc = pick(acc, tmp[yy * w + x]);
            }
            out[y as usize * w + x] = acc;
        }
    }
    img.with_data(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ops() {
        assert_eq!("blackhat".parse::<MorphOp>().unwrap(), MorphOp::Blackhat);
        assert!(matches!(
            "tophat".parse::<MorphOp>(),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn blackhat_of_constant_is_zero() {
        let img = GrayImage::new(20, 10, 143);
        let out = morphology(&img, MorphOp::Blackhat, &Kernel::rect(13, 5).unwrap());
        assert!(out.as_raw().iter().all(|&v| v == 0));
    }

    #[test]
    fn erode_removes_isolated_pixel() {
        let mut img = GrayImage::new(7, 7, 0);
        img.set(3, 3, 255);
        let out = morphology(&img, MorphOp::Erode, &Kernel::square(3).unwrap());
        assert!(out.as_raw().iter().all(|&v| v == 0));
    }

    #[test]
    fn blackhat_highlights_thin_dark_stroke() {
        // Rows 10..12 dark (40) on 200: close with 13x5 fills the 2-px band
        // (vertical extent 5 > 2), so the response is 160 on the stroke.
        let img = GrayImage::from_fn(40, 24, |_, y| if (10..12).contains(&y) { 40 } else { 200 });
        let out = morphology(&img, MorphOp::Blackhat, &Kernel::rect(13, 5).unwrap());
        for x in 0..40 {
            assert_eq!(out.get(x, 10), 160);
            assert_eq!(out.get(x, 11), 160);
            assert_eq!(out.get(x, 3), 0);
            assert_eq!(out.get(x, 20), 0);
        }
    }
}
