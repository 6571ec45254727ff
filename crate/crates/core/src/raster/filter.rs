use super::{BinaryImage, GrayImage, Kernel};
use crate::error::{Error, Result};

/// Luminance from interleaved RGB triplets (BT.601 weights).
pub fn to_gray(rgb: &[u8], width: usize, height: usize) -> Result<GrayImage> {
    if rgb.len() != 3 * width * height {
        return Err(Error::Dimension(format!(
            "{} bytes of RGB for a {width}x{height} image",
            rgb.len()
        )));
    }
    let data = rgb
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::from_raw(width, height, data)
}

/// Linear contrast stretch of the observed range onto 0..=255.
/// A constant image is returned unchanged.
pub fn normalize(img: &GrayImage) -> GrayImage {
    let (lo, hi) = img.min_max();
    if lo == hi {
        return img.clone();
    }
    let span = (hi - lo) as u32;
    // Integer round-half-up of (v - lo) * 255 / span.
    let mut lut = [0u8; 256];
    for (v, slot) in lut
        .iter_mut()
        .enumerate()
        .skip(lo as usize)
        .take(span as usize + 1)
    {
        let num = (v as u32 - lo as u32) * 255;
        *slot = ((2 * num + span) / (2 * span)) as u8;
    }
    img.map(|v| lut[v as usize])
}

/// Discrete 2-D correlation with replicated borders, rounded and clamped.
pub fn convolve2d(img: &GrayImage, k: &Kernel) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let (rx, ry) = ((k.width() / 2) as isize, (k.height() / 2) as isize);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in 0..k.height() {
                for kx in 0..k.width() {
                    let wgt = k.weight(kx, ky);
                    if wgt != 0.0 {
                        let v = img.get_clamped(x + kx as isize - rx, y + ky as isize - ry);
                        acc += wgt * v as f64;
                    }
                }
            }
            out.push(acc.round().clamp(0.0, 255.0) as u8);
        }
    }
    img.with_data(out)
}

/// Raw 3×3 Sobel responses `(gx, gy)` with replicated borders.
pub fn sobel_gradients(img: &GrayImage) -> (Vec<i32>, Vec<i32>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0i32; w * h];
    let mut gy = vec![0i32; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy) as i32;
            let (tl, t, tr) = (p(-1, -1), p(0, -1), p(1, -1));
            let (l, r) = (p(-1, 0), p(1, 0));
            let (bl, b, br) = (p(-1, 1), p(0, 1), p(1, 1));
            let i = y as usize * w + x as usize;
            gx[i] = (tr + 2 * r + br) - (tl + 2 * l + bl);
            gy[i] = (bl + 2 * b + br) - (tl + 2 * t + tr);
        }
    }
    (gx, gy)
}

/// L1 gradient magnitude `min(255, |Gx| + |Gy|)`.
pub fn sobel_magnitude(img: &GrayImage) -> GrayImage {
    let (gx, gy) = sobel_gradients(img);
    let data = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| (a.abs() + b.abs()).min(255) as u8)
        .collect();
    img.with_data(data)
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_taps(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("gaussian sigma {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let taps = gaussian_taps(sigma)?;
    Ok(blur_with_taps(img, &taps))
}

pub(crate) fn blur_with_taps(img: &GrayImage, taps: &[f64]) -> GrayImage {
    let out = blur_with_taps_f64(img, taps)
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    img.with_data(out)
}

/// Separable blur without the final rounding.
pub(crate) fn blur_with_taps_f64(img: &GrayImage, taps: &[f64]) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let r = (taps.len() / 2) as isize;
    let src = img.as_raw();
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let sx = (x + i as isize - r).clamp(0, w as isize - 1) as usize;
                acc += t * row[sx] as f64;
            }
            tmp[y * w + x as usize] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let sy = (y + i as isize - r).clamp(0, h as isize - 1) as usize;
                acc += t * tmp[sy * w + x];
            }
            out[y as usize * w + x] = acc;
        }
    }
    out
}

/// Canny edge detector: Gaussian (sigma 1.4), Sobel gradients, four-way
/// non-maximum suppression and 8-connected hysteresis.
///
/// A pixel is strong when its L1 magnitude exceeds `high` and weak when it
/// exceeds `low`.
pub fn canny(img: &GrayImage, low: u8, high: u8) -> Result<BinaryImage> {
    if low > high {
        return Err(Error::Parameter(format!("canny low {low} > high {high}")));
    }
    let (w, h) = (img.width(), img.height());
    let smooth = gaussian_blur(img, 1.4)?;
    let (gx, gy) = sobel_gradients(&smooth);
    let mag: Vec<i32> = gx.iter().zip(&gy).map(|(a, b)| a.abs() + b.abs()).collect();
    let at = |x: isize, y: isize| -> i32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // tan(22.5°) and tan(67.5°) scaled by 1e4 for integer sector tests.
    const T1: i64 = 4142;
    const T2: i64 = 24142;
    let mut thin = vec![0i32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0 {
                continue;
            }
            let (ax, ay) = (gx[i].abs() as i64, gy[i].abs() as i64);
            let (xi, yi) = (x as isize, y as isize);
            // Neighbours across the edge, along the gradient direction.
            let (a, b) = if ay * 10_000 <= T1 * ax {
                (at(xi - 1, yi), at(xi + 1, yi))
            } else if ay * 10_000 >= T2 * ax {
                (at(xi, yi - 1), at(xi, yi + 1))
            } else if (gx[i] > 0) == (gy[i] > 0) {
                (at(xi - 1, yi - 1), at(xi + 1, yi + 1))
            } else {
                (at(xi + 1, yi - 1), at(xi - 1, yi + 1))
            };
            // Strict on one side, non-strict on the other: plateaus of two
            // equal maxima keep exactly one pixel.
            if m > a && m >= b {
                thin[i] = m;
            }
        }
    }

    let (low, high) = (low as i32, high as i32);
    let mut out = BinaryImage::new(w, h);
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] > high && !out.is_set(i % w, i / w) {
            out.put(i % w, i / w, true);
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (jx + dx, jy + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        let k = ny * w + nx;
                        if thin[k] > low && !out.is_set(nx, ny) {
                            out.put(nx, ny, true);
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
