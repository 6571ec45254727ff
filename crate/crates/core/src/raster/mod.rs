//! 8-bit raster primitives: images, kernels, boxes and the classical
//! operators (filtering, thresholding, morphology, contours, geometry) that
//! every later stage is built from.
//!
//! All operations are pure: they borrow their inputs and allocate outputs.

mod contour;
mod filter;
mod geometry;
pub mod io;
mod morph;
mod threshold;
mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contour::{find_contours, label_components, ContourNode};
pub(crate) use filter::blur_with_taps_f64;
pub use filter::{
    canny, convolve2d, gaussian_blur, gaussian_taps, normalize, sobel_gradients, sobel_magnitude,
    to_gray,
};
pub use geometry::{convex_hull, min_area_rect, Point};
pub use morph::{morphology, MorphOp};
pub use threshold::{adaptive_binarize, otsu_binarize, otsu_threshold, IntegralImage};
pub use transform::{crop, rotate, rotate_into_canvas, rotate_point, rotated_canvas_size};

/// Row-major 8-bit luminance raster.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    /// A `width`×`height` image filled with `value`.
    ///
    /// Panics if either dimension is zero.
    pub fn new(width: usize, height: usize, value: u8) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "image dimensions must be positive"
        );
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("{width}x{height} image")));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} bytes for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut img = GrayImage::new(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel lookup with replicated borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn bounds(&self) -> Box {
        Box::new(0, 0, self.width as u32, self.height as u32)
    }

    pub fn min_max(&self) -> (u8, u8) {
        self.data
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Same dimensions, new pixel buffer.
    pub(crate) fn with_data(&self, data: Vec<u8>) -> GrayImage {
        debug_assert_eq!(data.len(), self.data.len());
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Saturating per-pixel `self - other`.
    pub fn saturating_sub(&self, other: &GrayImage) -> Result<GrayImage> {
        self.same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.saturating_sub(b))
            .collect();
        Ok(self.with_data(data))
    }

    pub fn invert(&self) -> GrayImage {
        self.map(|v| 255 - v)
    }

    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Row-major raster whose pixels are either 0 or 255.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryImage(GrayImage);

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryImage")
            .field("width", &self.0.width)
            .field("height", &self.0.height)
            .finish_non_exhaustive()
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage(GrayImage::new(width, height, 0))
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::Parameter(format!("binary pixel value {bad}")));
        }
        Ok(BinaryImage(GrayImage::from_raw(width, height, data)?))
    }

    /// Pixels strictly above `threshold` become white.
    pub fn threshold(img: &GrayImage, threshold: u8) -> Self {
        BinaryImage(img.map(|v| if v > threshold { 255 } else { 0 }))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        BinaryImage(GrayImage::from_fn(width, height, |x, y| {
            if f(x, y) {
                255
            } else {
                0
            }
        }))
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y) != 0
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, on: bool) {
        self.0.set(x, y, if on { 255 } else { 0 });
    }

    pub fn as_raw(&self) -> &[u8] {
        self.0.as_raw()
    }

    pub fn as_gray(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_gray(self) -> GrayImage {
        self.0
    }

    pub fn count_set(&self) -> usize {
        self.0.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn invert(&self) -> BinaryImage {
        BinaryImage(self.0.invert())
    }

    /// Wraps a gray image already known to be two-valued.
    pub(crate) fn from_gray_unchecked(img: GrayImage) -> Self {
        debug_assert!(img.data.iter().all(|&v| v == 0 || v == 255));
        BinaryImage(img)
    }
}

/// Filter or structuring-element kernel with odd dimensions.
///
/// For morphology only the shape matters; weights are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::Kernel(format!("{width}x{height} is not odd-sized")));
        }
        if weights.len() != width * height {
            return Err(Error::Kernel(format!(
                "{} weights for a {width}x{height} kernel",
                weights.len()
            )));
        }
        Ok(Kernel {
            width,
            height,
            weights,
        })
    }

    /// Flat rectangular structuring element.
    pub fn rect(width: usize, height: usize) -> Result<Self> {
        Kernel::new(width, height, vec![1.0; width * height])
    }

    pub fn square(side: usize) -> Result<Self> {
        Kernel::rect(side, side)
    }

    pub fn identity() -> Self {
        Kernel {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    pub fn box_filter(side: usize) -> Result<Self> {
        let n = (side * side) as f64;
        Kernel::new(side, side, vec![1.0 / n; side * side])
    }

    pub fn sobel_x() -> Self {
        Kernel {
            width: 3,
            height: 3,
            weights: vec![-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0],
        }
    }

    pub fn sobel_y() -> Self {
        Kernel {
            width: 3,
            height: 3,
            weights: vec![-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, kx: usize, ky: usize) -> f64 {
        self.weights[ky * self.width + kx]
    }
}

/// Axis-aligned pixel rectangle `[x0, x0+w) × [y0, y0+h)`.
///
/// The origin may sit outside an image (before clamping).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Box {
    pub x0: i32,
    pub y0: i32,
    pub w: u32,
    pub h: u32,
}

impl Box {
    pub const fn new(x0: i32, y0: i32, w: u32, h: u32) -> Self {
        Box { x0, y0, w, h }
    }

    /// Box spanning the inclusive pixel range `[x0, x1] × [y0, y1]`.
    pub fn from_corners(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Box::new(
            x0,
            y0,
            (x1 - x0 + 1).max(0) as u32,
            (y1 - y0 + 1).max(0) as u32,
        )
    }

    /// Exclusive right edge.
    #[inline]
    pub fn right(&self) -> i32 {
        self.x0 + self.w as i32
    }

    /// Exclusive bottom edge.
    #[inline]
    pub fn bottom(&self) -> i32 {
        self.y0 + self.h as i32
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x0 as f64 + self.w as f64 / 2.0,
            self.y0 as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn aspect(&self) -> f64 {
        self.w as f64 / self.h as f64
    }

    pub fn intersect(&self, other: &Box) -> Option<Box> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Box::new(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32))
    }

    pub fn union(&self, other: &Box) -> Box {
        let x0 = self.x0.min(other.x0);
        let y0 = self.y0.min(other.y0);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Box::new(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32)
    }

    pub fn iou(&self, other: &Box) -> f64 {
        let inter = self.intersect(other).map_or(0, |b| b.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn contains(&self, other: &Box) -> bool {
        other.x0 >= self.x0
            && other.y0 >= self.y0
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    #[inline]
    pub fn contains_point(&self, x: i32, y: i32) -> bool {
        x >= self.x0 && y >= self.y0 && x < self.right() && y < self.bottom()
    }

    /// Intersection with a `width`×`height` image.
    pub fn clamp_to(&self, width: usize, height: usize) -> Option<Box> {
        self.intersect(&Box::new(0, 0, width as u32, height as u32))
    }

    /// Grow by `dx`/`dy` on every side (shrink when negative).
    pub fn expand(&self, dx: i32, dy: i32) -> Box {
        Box::new(
            self.x0 - dx,
            self.y0 - dy,
            (self.w as i32 + 2 * dx).max(0) as u32,
            (self.h as i32 + 2 * dy).max(0) as u32,
        )
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Box {
        Box::new(self.x0 + dx, self.y0 + dy, self.w, self.h)
    }
}

/// Oriented rectangle. `angle` is the direction of the `w` side in degrees,
/// counter-clockwise as displayed, normalized to (-90, 90].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedBox {
    pub center: (f64, f64),
    pub w: f64,
    pub h: f64,
    pub angle: f64,
}

impl RotatedBox {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corner points in image coordinates.
    pub fn corners(&self) -> [Point; 4] {
        let (s, c) = self.angle.to_radians().sin_cos();
        // Long-side direction in image coordinates (y grows downward).
        let u = (c, -s);
        let v = (s, c);
        let (hw, hh) = (self.w / 2.0, self.h / 2.0);
        let (cx, cy) = self.center;
        let at = |a: f64, b: f64| Point::new(cx + a * u.0 + b * v.0, cy + a * u.1 + b * v.1);
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }
}

/// Wraps an angle in degrees into (-90, 90].
pub fn normalize_half_turn(mut angle: f64) -> f64 {
    angle %= 180.0;
    if angle <= -90.0 {
        angle += 180.0;
    } else if angle > 90.0 {
        angle -= 180.0;
    }
    angle
}

/// Wraps an angle in degrees into (-180, 180].
pub fn normalize_full_turn(mut angle: f64) -> f64 {
    angle %= 360.0;
    if angle <= -180.0 {
        angle += 360.0;
    } else if angle > 180.0 {
        angle -= 360.0;
    }
    angle
}

/// Median of the outermost ring of pixels.
pub fn border_median(img: &GrayImage) -> u8 {
    let (w, h) = (img.width(), img.height());
    let mut hist = [0usize; 256];
    let mut n = 0usize;
    for x in 0..w {
        hist[img.get(x, 0) as usize] += 1;
        n += 1;
        if h > 1 {
            hist[img.get(x, h - 1) as usize] += 1;
            n += 1;
        }
    }
    for y in 1..h.saturating_sub(1) {
        hist[img.get(0, y) as usize] += 1;
        n += 1;
        if w > 1 {
            hist[img.get(w - 1, y) as usize] += 1;
            n += 1;
        }
    }
    let mid = n.div_ceil(2);
    let mut acc = 0;
    for (v, &c) in hist.iter().enumerate() {
        acc += c;
        if acc >= mid {
            return v as u8;
        }
    }
    255
}
