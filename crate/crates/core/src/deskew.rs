//! Skew estimation (spectrum, Hough, text block) and correction.
//!
//! Every estimator returns the *correction*: the angle that, passed to
//! [`rotate`], levels the text rows. Angles are degrees, counter-clockwise as
//! displayed. The spectrum and Hough estimators cannot tell rows from
//! columns and fold into (-45, 45]; the block estimator follows the long side
//! of the text block and covers (-90, 90]. Remaining quarter turns are left
//! to [`crate::autocrop::fix_orientation`].

use std::str::FromStr;
use std::time::Instant;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    adaptive_binarize, border_median, canny, gaussian_blur, label_components, min_area_rect,
    normalize_half_turn, rotate, GrayImage, Kernel, MorphOp, Point,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fft,
    Hough,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Auto,
    Fft,
    Hough,
    Block,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "fft" => Ok(MethodChoice::Fft),
            "hough" => Ok(MethodChoice::Hough),
            "block" => Ok(MethodChoice::Block),
            other => Err(Error::Parameter(format!("unknown deskew method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    pub angle: f64,
    pub confidence: f64,
    pub method: Method,
}

/// Minimum confidence for accepting the spectrum or Hough estimate.
pub const ACCEPT_CONFIDENCE: f64 = 0.6;

fn fold_quarter(mut a: f64) -> f64 {
    a = a.rem_euclid(90.0);
    if a > 45.0 {
        a -= 90.0;
    }
    a
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in (-0.5, 0.5) from the middle one.
fn parabola_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den.abs() < 1e-12 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

const FFT_STEP: f64 = 0.25;
const FFT_MAX_SIDE: usize = 1024;

/// Spectrum estimate: the log-magnitude spectrum of a Hann-windowed square
/// crop has bright arms normal to the text rows and card edges. After
/// removing the radial trend, peaks above mean + 2σ are fitted by a pair of
/// perpendicular lines through the center, sweeping 0.25° steps.
pub fn estimate_fft(img: &GrayImage) -> Result<AngleEstimate> {
    let side = img.width().min(img.height()).min(FFT_MAX_SIDE);
    if side < 64 {
        return Err(Error::Size(format!(
            "{}x{} is too small for the spectrum",
            img.width(),
            img.height()
        )));
    }
    let n = 1usize << (usize::BITS - 1 - side.leading_zeros());
    let (ox, oy) = ((img.width() - n) / 2, (img.height() - n) / 2);
    // Radial Hann taper: a separable window would leak an axis-aligned cross.
    let c = (n as f64 - 1.0) / 2.0;
    let taper: Vec<f64> = (0..n * n)
        .map(|i| {
            let (x, y) = ((i % n) as f64 - c, (i / n) as f64 - c);
            let r = (x * x + y * y).sqrt() / (n as f64 / 2.0);
            if r >= 1.0 {
                0.0
            } else {
                0.5 + 0.5 * (std::f64::consts::PI * r).cos()
            }
        })
        .collect();
    let (mut sw, mut swv) = (0.0, 0.0);
    for y in 0..n {
        for x in 0..n {
            sw += taper[y * n + x];
            swv += taper[y * n + x] * img.get(ox + x, oy + y) as f64;
        }
    }
    let mean = swv / sw;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let v = (img.get(ox + x, oy + y) as f64 - mean) * taper[y * n + x];
            buf.push(Complex::new(v, 0.0));
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = buf[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            buf[y * n + x] = col[y];
        }
    }

    // Centered log magnitude inside the inscribed disc, minus a small hub,
    // with the radial trend removed.
    let half = (n / 2) as f64;
    let hub = (n as f64 / 64.0).max(2.0);
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let mut ring_sum = vec![0.0; n / 2 + 1];
    let mut ring_n = vec![0usize; n / 2 + 1];
    for y in 0..n {
        for x in 0..n {
            let u = ((x + n / 2) % n) as f64 - half;
            let v = ((y + n / 2) % n) as f64 - half;
            let r = (u * u + v * v).sqrt();
            if r < hub || r >= half {
                continue;
            }
            let l = (1.0 + buf[y * n + x].norm()).ln();
            ring_sum[r as usize] += l;
            ring_n[r as usize] += 1;
            pts.push((u, v, l));
        }
    }
    for p in pts.iter_mut() {
        let r = (p.0 * p.0 + p.1 * p.1).sqrt() as usize;
        p.2 -= ring_sum[r] / ring_n[r] as f64;
    }
    let flat = AngleEstimate {
        angle: 0.0,
        confidence: 0.0,
        method: Method::Fft,
    };
    if buf.iter().all(|z| z.norm() < 1e-3) {
        return Ok(flat);
    }
    let m = pts.iter().map(|p| p.2).sum::<f64>() / pts.len() as f64;
    let sd = (pts.iter().map(|p| (p.2 - m).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    let peaks: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.2 > m + 2.0 * sd)
        .map(|p| (p.0, p.1))
        .collect();
    if peaks.len() < 2 {
        return Ok(flat);
    }

    let steps = (90.0 / FFT_STEP) as usize;
    // Mean absolute distance to the nearer of the two lines.
    let cost: Vec<f64> = (0..steps)
        .map(|k| {
            let (s, c) = (k as f64 * FFT_STEP).to_radians().sin_cos();
            peaks
                .iter()
                .map(|&(u, v)| {
                    let a = (u * s - v * c).abs();
                    let b = (u * c + v * s).abs();
                    a.min(b)
                })
                .sum::<f64>()
                / peaks.len() as f64
        })
        .collect();
    let (best, &lo) = cost
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty sweep");
    let hi = cost.iter().cloned().fold(f64::MIN, f64::max);
    let at = |k: isize| cost[k.rem_euclid(steps as isize) as usize];
    let off = parabola_offset(at(best as isize - 1), lo, at(best as isize + 1));
    let phi = (best as f64 + off) * FFT_STEP;
    // An arm along (u, v) = (cos φ, sin φ) is normal to rows skewed by 90° - φ.
    let skew = fold_quarter(90.0 - phi);
    Ok(AngleEstimate {
        angle: fold_quarter(-skew),
        confidence: if hi > 0.0 { 1.0 - lo / hi } else { 0.0 },
        method: Method::Fft,
    })
}

/// Hough estimate: Canny edges vote into a 1° × 1 px accumulator; the peak
/// cells are histogrammed by angle (folded to a quarter turn), the modal
/// bin refined by a parabola through its neighbours.
pub fn estimate_hough(img: &GrayImage) -> Result<AngleEstimate> {
    let edges = canny(img, 50, 150)?;
    let (w, h) = (img.width(), img.height());
    let diag = ((w * w + h * h) as f64).sqrt().ceil() as usize;
    let nr = 2 * diag + 1;
    let trig: Vec<(f64, f64)> = (0..180)
        .map(|t| (t as f64).to_radians().sin_cos())
        .collect();
    let mut acc = vec![0u32; 180 * nr];
    for y in 0..h {
        for x in 0..w {
            if !edges.is_set(x, y) {
                continue;
            }
            for (t, &(s, c)) in trig.iter().enumerate() {
                let r = (x as f64 * c + y as f64 * s).round() as isize + diag as isize;
                acc[t * nr + r as usize] += 1;
            }
        }
    }
    let max = acc.iter().copied().max().unwrap_or(0);
    let none = AngleEstimate {
        angle: 0.0,
        confidence: 0.0,
        method: Method::Hough,
    };
    if max < 10 {
        return Ok(none);
    }
    let floor = max / 2;
    let mut hist = [0f64; 90];
    for t in 0..180usize {
        for r in 0..nr {
            let v = acc[t * nr + r];
            if v < floor {
                continue;
            }
            let mut peak = true;
            'nb: for dt in [-1isize, 0, 1] {
                for dr in [-1isize, 0, 1] {
                    if dt == 0 && dr == 0 {
                        continue;
                    }
                    let tt = (t as isize + dt).rem_euclid(180) as usize;
                    let rr = r as isize + dr;
                    if rr < 0 || rr >= nr as isize {
                        continue;
                    }
                    let o = acc[tt * nr + rr as usize];
                    if o > v || (o == v && (dt, dr) < (0, 0)) {
                        peak = false;
                        break 'nb;
                    }
                }
            }
            if peak {
                hist[t % 90] += v as f64;
            }
        }
    }
    let total: f64 = hist.iter().sum();
    if total == 0.0 {
        return Ok(none);
    }
    let (mode, &mass) = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("90 bins");
    let at = |k: isize| hist[k.rem_euclid(90) as usize];
    let t = mode as f64 + parabola_offset(at(mode as isize - 1), mass, at(mode as isize + 1));
    // A line with normal angle t is a row skewed by 90° - t.
    let skew = fold_quarter(90.0 - t);
    Ok(AngleEstimate {
        angle: fold_quarter(-skew),
        confidence: mass / total,
        method: Method::Hough,
    })
}

/// Text-block estimate: the dilated text mask's largest component is boxed
/// by a minimum-area rectangle whose long side follows the rows.
/// Fails with a no-text error when the mask has fewer than 3 pixels.
pub fn estimate_block(img: &GrayImage) -> Result<AngleEstimate> {
    let smooth = gaussian_blur(img, 1.0)?;
    let mask = adaptive_binarize(&smooth, 25, 10)?.invert();
    let blob = mask.morph(MorphOp::Dilate, &Kernel::rect(21, 5)?);
    let (labels, count) = label_components(&blob);
    if mask.count_set() < 3 {
        return Err(Error::NoText("fewer than 3 text pixels".into()));
    }
    let mut sizes = vec![0usize; count];
    labels
        .iter()
        .filter(|&&l| l != 0)
        .for_each(|&l| sizes[l as usize - 1] += 1);
    let (big, &pixels) = sizes
        .iter()
        .enumerate()
        .max_by_key(|&(i, s)| (*s, std::cmp::Reverse(i)))
        .expect("count > 0");
    let target = big as u32 + 1;
    let w = blob.width();
    // Row extremes are enough for the hull.
    let mut ends: Vec<Option<(usize, usize)>> = vec![None; blob.height()];
    for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l == target) {
        let (x, y) = (i % w, i / w);
        ends[y] = Some(ends[y].map_or((x, x), |(a, b)| (a.min(x), b.max(x))));
    }
    let pts: Vec<Point> = ends
        .iter()
        .enumerate()
        .filter_map(|(y, e)| e.map(|(a, b)| (y, a, b)))
        .flat_map(|(y, a, b)| {
            [
                Point::new(a as f64, y as f64),
                Point::new(b as f64, y as f64),
            ]
        })
        .collect();
    let rect = min_area_rect(&pts)?;
    Ok(AngleEstimate {
        angle: normalize_half_turn(-rect.angle),
        confidence: (pixels as f64 / rect.area().max(1.0)).min(1.0),
        method: Method::Block,
    })
}

pub fn estimate(img: &GrayImage, choice: MethodChoice) -> Result<AngleEstimate> {
    match choice {
        MethodChoice::Fft => estimate_fft(img),
        MethodChoice::Hough => estimate_hough(img),
        MethodChoice::Block => estimate_block(img),
        MethodChoice::Auto => {
            let f = estimate_fft(img)?;
            if f.confidence >= ACCEPT_CONFIDENCE {
                return Ok(f);
            }
            let h = estimate_hough(img)?;
            if h.confidence >= ACCEPT_CONFIDENCE {
                return Ok(h);
            }
            match estimate_block(img) {
                Err(Error::NoText(_)) => Ok(if h.confidence > f.confidence { h } else { f }),
                r => r,
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Deskewed {
    pub image: GrayImage,
    pub estimate: AngleEstimate,
    pub elapsed_ms: f64,
}

/// Estimates the skew and rotates it out, filling with the border median.
pub fn deskew(img: &GrayImage, choice: MethodChoice) -> Result<Deskewed> {
    let start = Instant::now();
    let estimate = estimate(img, choice)?;
    let image = if estimate.angle == 0.0 {
        img.clone()
    } else {
        rotate(img, estimate.angle, border_median(img))
    };
    Ok(Deskewed {
        image,
        estimate,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthcard::{render_card, CardSpec};

    #[test]
    fn folding() {
        assert_eq!(fold_quarter(45.0), 45.0);
        assert_eq!(fold_quarter(-45.0), 45.0);
        assert_eq!(fold_quarter(50.0), -40.0);
        assert_eq!(fold_quarter(-76.0), 14.0);
    }

    #[test]
    fn estimators_recover_a_known_skew() {
        for theta in [-20.0, 7.5, 33.0] {
            let (img, _) = render_card(&CardSpec::passport(4).with_rotation(theta)).unwrap();
            for est in [
                estimate_fft(&img).unwrap(),
                estimate_hough(&img).unwrap(),
                estimate_block(&img).unwrap(),
            ] {
                assert!((est.angle + theta).abs() < 1.0, "{theta}: {est:?}");
            }
        }
    }

    #[test]
    fn upright_card_needs_no_turn() {
        let (img, _) = render_card(&CardSpec::passport(2)).unwrap();
        let d = deskew(&img, MethodChoice::Auto).unwrap();
        assert!(d.estimate.angle.abs() < 0.5, "{:?}", d.estimate);
        assert!(d.estimate.confidence >= ACCEPT_CONFIDENCE);
    }

    #[test]
    fn block_reads_a_steep_card() {
        let (img, _) = render_card(&CardSpec::passport(1).with_rotation(76.3797)).unwrap();
        let b = estimate_block(&img).unwrap();
        assert!((b.angle + 76.3797).abs() <= 0.5, "{b:?}");
    }

    #[test]
    fn structureless_inputs() {
        let flat = GrayImage::new(128, 128, 90);
        assert!(estimate_fft(&flat).unwrap().confidence < 0.2);
        assert!(matches!(
            estimate_fft(&GrayImage::new(63, 200, 0)),
            Err(Error::Size(_))
        ));
        assert!(matches!(estimate_block(&flat), Err(Error::NoText(_))));
        let mut rng = crate::synthcard::Lcg::new(5);
        for _ in 0..20 {
            let noise = GrayImage::from_fn(160, 120, |_, _| rng.range(0, 256) as u8);
            assert!(estimate_hough(&noise).unwrap().confidence < 0.3);
        }
    }

    #[test]
    fn horizontal_lines() {
        let lines = GrayImage::from_fn(200, 160, |_, y| if y % 20 < 3 { 30 } else { 220 });
        assert!(estimate_hough(&lines).unwrap().angle.abs() <= 0.5);
        let tilted = rotate(&lines, 20.0, 220);
        let h = estimate_hough(&tilted).unwrap();
        assert!((h.angle + 20.0).abs() <= 1.0, "{h:?}");
    }

    #[test]
    fn deterministic() {
        let (img, _) =
            render_card(&CardSpec::passport(6).with_rotation(12.0).with_noise(10.0)).unwrap();
        let a = estimate(&img, MethodChoice::Auto).unwrap();
        let b = estimate(&img, MethodChoice::Auto).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn method_names() {
        assert_eq!(
            "hough".parse::<MethodChoice>().unwrap(),
            MethodChoice::Hough
        );
        assert!("radon".parse::<MethodChoice>().is_err());
    }
}
