//! Two-step background cleaning: a local-threshold text mask, blurred into a
//! soft mask that pulls the background to white.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{adaptive_binarize, gaussian_blur, gaussian_taps, normalize, GrayImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanParams {
    pub window: usize,
    pub offset: i32,
    pub blur_sigma: f64,
    pub passes: usize,
    pub sharpen_amount: f64,
}

impl Default for CleanParams {
    fn default() -> Self {
        CleanParams {
            window: 25,
            offset: 40,
            blur_sigma: 2.0,
            passes: 2,
            sharpen_amount: 0.5,
        }
    }
}

impl CleanParams {
    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::Parameter("passes must be at least 1".into()));
        }
        if self.window.is_multiple_of(2) || self.window < 3 {
            return Err(Error::Parameter(format!("clean window {}", self.window)));
        }
        if !(self.blur_sigma > 0.0) {
            return Err(Error::Parameter(format!("blur sigma {}", self.blur_sigma)));
        }
        if !(self.sharpen_amount >= 0.0) {
            return Err(Error::Parameter(format!(
                "sharpen amount {}",
                self.sharpen_amount
            )));
        }
        Ok(())
    }
}

/// Background mask of one pass: 255 where the normalized image is bright
/// and above its local mean minus `offset`, 0 on text.
pub fn background_mask(img: &GrayImage, p: &CleanParams) -> Result<GrayImage> {
    let g = normalize(img);
    let local = adaptive_binarize(&g, p.window, p.offset)?;
    let data = g
        .as_raw()
        .iter()
        .zip(local.as_raw())
        .map(|(&v, &b)| if b == 255 && v >= 128 { 255 } else { 0 })
        .collect();
    Ok(img.with_data(data))
}

fn clean_once(img: &GrayImage, p: &CleanParams) -> Result<GrayImage> {
    let mask = background_mask(img, p)?;
    let taps = gaussian_taps(p.blur_sigma)?;
    let soft = crate::raster::blur_with_taps_f64(&mask, &taps);
    let data = img
        .as_raw()
        .iter()
        .zip(mask.as_raw())
        .zip(soft)
        .map(|((&v, &b), s)| {
            // Text pixels keep their value; the blur only feathers the background.
            let m = if b == 0 { 0.0 } else { s / 255.0 };
            (v as f64 * (1.0 - m) + 255.0 * m).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(img.with_data(data))
}

pub fn clean_background(img: &GrayImage, p: &CleanParams) -> Result<GrayImage> {
    p.validate()?;
    let mut out = img.clone();
    for _ in 0..p.passes {
        out = clean_once(&out, p)?;
    }
    Ok(out)
}

/// Unsharp mask with a σ = 1 blur.
pub fn sharpen(img: &GrayImage, amount: f64) -> Result<GrayImage> {
    if !(amount >= 0.0) {
        return Err(Error::Parameter(format!("sharpen amount {amount}")));
    }
    if amount == 0.0 {
        return Ok(img.clone());
    }
    let blurred = gaussian_blur(img, 1.0)?;
    let data = img
        .as_raw()
        .iter()
        .zip(blurred.as_raw())
        .map(|(&v, &b)| {
            let v = v as f64;
            (v + amount * (v - b as f64)).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(img.with_data(data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        let p = CleanParams::default();
        let white = GrayImage::new(40, 30, 255);
        assert_eq!(clean_background(&white, &p).unwrap(), white);
        let black = GrayImage::new(40, 30, 0);
        assert_eq!(clean_background(&black, &p).unwrap(), black);
    }

    #[test]
    fn two_passes_compose() {
        let img = GrayImage::from_fn(60, 40, |x, y| {
            if (20..24).contains(&x) && (10..30).contains(&y) {
                20
            } else {
                (180.0 + 25.0 * ((x as f64) * 0.7).sin()) as u8
            }
        });
        let two = clean_background(&img, &CleanParams::default()).unwrap();
        let one = CleanParams {
            passes: 1,
            ..CleanParams::default()
        };
        let twice = clean_background(&clean_background(&img, &one).unwrap(), &one).unwrap();
        assert_eq!(two, twice);
        assert!(two.as_raw().iter().zip(img.as_raw()).all(|(a, b)| a >= b));
        assert_eq!(two.get(21, 20), 20);
    }

    #[test]
    fn sharpen_rules() {
        let step = GrayImage::from_fn(20, 5, |x, _| if x < 10 { 50 } else { 200 });
        assert_eq!(sharpen(&step, 0.0).unwrap(), step);
        let flat = GrayImage::new(9, 9, 131);
        assert_eq!(sharpen(&flat, 3.0).unwrap(), flat);
        let s = sharpen(&step, 0.5).unwrap();
        assert!(s.get(10, 2) > 200);
        assert!(s.get(9, 2) < 50);
        assert_eq!(s.get(0, 2), 50);
        assert!(sharpen(&step, -1.0).is_err());
    }
}
