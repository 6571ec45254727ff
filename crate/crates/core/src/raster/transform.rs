use super::{Box, GrayImage, Point};
use crate::error::{Error, Result};

/// Rotates `p` about `center` by `angle` degrees, counter-clockwise as
/// displayed (image y axis points down).
pub fn rotate_point(p: Point, center: Point, angle: f64) -> Point {
    let (s, c) = crate::detmath::sin_cos(angle.to_radians());
    let (dx, dy) = (p.x - center.x, p.y - center.y);
    Point::new(center.x + dx * c + dy * s, center.y - dx * s + dy * c)
}

/// Canvas that holds a `w`×`h` frame rotated by `angle`. Each dimension keeps
/// the parity of the source so centers stay on the pixel grid.
pub fn rotated_canvas_size(w: usize, h: usize, angle: f64) -> (usize, usize) {
    let (s, c) = crate::detmath::sin_cos(angle.to_radians());
    let (s, c) = (s.abs(), c.abs());
    let fit = |v: f64, src: usize| {
        let mut n = (v - 1e-6).ceil().max(1.0) as usize;
        if (n + src) % 2 == 1 {
            n += 1;
        }
        n
    };
    (
        fit(w as f64 * c + h as f64 * s, w),
        fit(w as f64 * s + h as f64 * c, h),
    )
}

fn quarter_turns(angle: f64) -> Option<u32> {
    let q = angle / 90.0;
    (q == q.round()).then(|| q.rem_euclid(4.0) as u32)
}

/// Rotation about the image center with bilinear sampling onto an enlarged
/// canvas; samples from outside the source take `fill`. Exact multiples of
/// 90° are index permutations.
pub fn rotate(img: &GrayImage, angle: f64, fill: u8) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    if let Some(q) = quarter_turns(angle) {
        return match q {
            0 => img.clone(),
            1 => GrayImage::from_fn(h, w, |x, y| img.get(w - 1 - y, x)),
            2 => GrayImage::from_fn(w, h, |x, y| img.get(w - 1 - x, h - 1 - y)),
            _ => GrayImage::from_fn(h, w, |x, y| img.get(y, h - 1 - x)),
        };
    }
    let (ow, oh) = rotated_canvas_size(w, h, angle);
    let (s, c) = crate::detmath::sin_cos(angle.to_radians());
    let (scx, scy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (dcx, dcy) = ((ow as f64 - 1.0) / 2.0, (oh as f64 - 1.0) / 2.0);
    let src = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            fill as f64
        } else {
            img.get(x as usize, y as usize) as f64
        }
    };
    GrayImage::from_fn(ow, oh, |x, y| {
        let (dx, dy) = (x as f64 - dcx, y as f64 - dcy);
        // Inverse rotation back into the source frame.
        let sx = scx + dx * c - dy * s;
        let sy = scy + dx * s + dy * c;
        if sx <= -1.0 || sy <= -1.0 || sx >= w as f64 || sy >= h as f64 {
            return fill;
        }
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let top = src(x0, y0) * (1.0 - fx) + src(x0 + 1, y0) * fx;
        let bot = src(x0, y0 + 1) * (1.0 - fx) + src(x0 + 1, y0 + 1) * fx;
        (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8
    })
}

/// Maps a source-pixel coordinate into the canvas produced by
/// [`rotate`] for the same angle.
pub fn rotate_into_canvas(p: Point, w: usize, h: usize, angle: f64) -> Point {
    let (ow, oh) = match quarter_turns(angle) {
        Some(0) | Some(2) => (w, h),
        Some(_) => (h, w),
        None => rotated_canvas_size(w, h, angle),
    };
    let sc = Point::new((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let r = rotate_point(p, sc, angle);
    Point::new(
        r.x - sc.x + (ow as f64 - 1.0) / 2.0,
        r.y - sc.y + (oh as f64 - 1.0) / 2.0,
    )
}

/// Copies the part of `b` that lies inside the image.
pub fn crop(img: &GrayImage, b: &Box) -> Result<GrayImage> {
    let c = b
        .clamp_to(img.width(), img.height())
        .ok_or_else(|| Error::Geometry(format!("crop box {b:?} misses the image")))?;
    let (x0, y0) = (c.x0 as usize, c.y0 as usize);
    Ok(GrayImage::from_fn(c.w as usize, c.h as usize, |x, y| {
        img.get(x0 + x, y0 + y)
    }))
}
