use std::collections::VecDeque;

use proptest::prelude::*;

use idpipe::raster::io::{decode_pgm, encode_pgm};
use idpipe::raster::{
    crop, label_components, min_area_rect, morphology, otsu_threshold, rotate, BinaryImage, Box,
    GrayImage, IntegralImage, Kernel, MorphOp, Point,
};

fn image(max_w: usize, max_h: usize) -> impl Strategy<Value = GrayImage> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h)
            .prop_map(move |d| GrayImage::from_raw(w, h, d).unwrap())
    })
}

fn boxes() -> impl Strategy<Value = Box> {
    (-20i32..60, -20i32..60, 0u32..50, 0u32..50).prop_map(|(x, y, w, h)| Box::new(x, y, w, h))
}

/// Between-class variance of splitting at `t` (class 0 is `v <= t`).
fn between_class(hist: &[u64; 256], t: usize) -> f64 {
    let n: f64 = hist.iter().sum::<u64>() as f64;
    let (mut w0, mut s0) = (0.0, 0.0);
    for v in 0..=t {
        w0 += hist[v] as f64;
        s0 += v as f64 * hist[v] as f64;
    }
    let total: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let w1 = n - w0;
    if w0 == 0.0 || w1 == 0.0 {
        return 0.0;
    }
    let (m0, m1) = (s0 / w0, (total - s0) / w1);
    w0 * w1 * (m0 - m1) * (m0 - m1) / (n * n)
}

fn naive_labels(mask: &BinaryImage) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for s in 0..w * h {
        if seen[s] || !mask.is_set(s % w, s / w) {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(p) = q.pop_front() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                        let n = ny as usize * w + nx as usize;
                        if !seen[n] && mask.is_set(nx as usize, ny as usize) {
                            seen[n] = true;
                            q.push_back(n);
                        }
                    }
                }
            }
        }
    }
    count
}

proptest! {
    #[test]
    fn four_quarter_turns_are_identity(img in image(20, 20)) {
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, -90.0, 0);
        }
        prop_assert_eq!(r, img);
    }

    #[test]
    fn clockwise_turn_permutes_pixels(img in image(12, 12)) {
        let r = rotate(&img, -90.0, 0);
        let (w, h) = (img.width(), img.height());
        prop_assert_eq!((r.width(), r.height()), (h, w));
        for y in 0..w {
            for x in 0..h {
                prop_assert_eq!(r.get(x, y), img.get(y, h - 1 - x));
            }
        }
    }

    #[test]
    fn half_turn_reverses_raster(img in image(12, 12)) {
        let r = rotate(&img, 180.0, 0);
        let rev: Vec<u8> = img.as_raw().iter().rev().copied().collect();
        prop_assert_eq!(r.as_raw(), &rev[..]);
    }

    #[test]
    fn pgm_round_trip(img in image(30, 30)) {
        prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in boxes(), b in boxes()) {
        let (ab, ba) = (a.iou(&b), b.iou(&a));
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        if let Some(i) = a.intersect(&b) {
            prop_assert!(a.contains(&i) && b.contains(&i));
        }
        let u = a.union(&b);
        if !a.is_empty() && !b.is_empty() {
            prop_assert!(u.contains(&a) && u.contains(&b));
        }
    }

    #[test]
    fn otsu_maximizes_between_class_variance(img in image(16, 16)) {
        let mut hist = [0u64; 256];
        for &v in img.as_raw() {
            hist[v as usize] += 1;
        }
        let t = otsu_threshold(&hist) as usize;
        let best = (0..256).map(|s| between_class(&hist, s)).fold(0.0, f64::max);
        prop_assert!(between_class(&hist, t) >= best - 1e-9 * best.max(1.0));
    }

    #[test]
    fn component_count_matches_flood_fill(img in image(14, 14), t in any::<u8>()) {
        let mask = BinaryImage::threshold(&img, t);
        let (labels, count) = label_components(&mask);
        prop_assert_eq!(count, naive_labels(&mask));
        for y in 0..img.height() {
            for x in 0..img.width() {
                prop_assert_eq!(labels[y * img.width() + x] != 0, mask.is_set(x, y));
            }
        }
    }

    #[test]
    fn rank_filters_match_window_scan(img in image(14, 14), kw in 0usize..3, kh in 0usize..3) {
        let (kw, kh) = (2 * kw + 1, 2 * kh + 1);
        let k = Kernel::rect(kw, kh).unwrap();
        let ero = morphology(&img, MorphOp::Erode, &k);
        let dil = morphology(&img, MorphOp::Dilate, &k);
        let (w, h) = (img.width() as isize, img.height() as isize);
        for y in 0..h {
            for x in 0..w {
                let (mut lo, mut hi) = (255u8, 0u8);
                for dy in -(kh as isize / 2)..=(kh as isize / 2) {
                    for dx in -(kw as isize / 2)..=(kw as isize / 2) {
                        let v = img.get_clamped(x + dx, y + dy);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                prop_assert_eq!(ero.get(x as usize, y as usize), lo);
                prop_assert_eq!(dil.get(x as usize, y as usize), hi);
            }
        }
    }

    #[test]
    fn integral_sums_match_loops(img in image(20, 20), a in any::<(u8, u8, u8, u8)>()) {
        let ii = IntegralImage::new(&img);
        let (w, h) = (img.width(), img.height());
        let (x0, x1) = { let (p, q) = (a.0 as usize % (w + 1), a.1 as usize % (w + 1)); (p.min(q), p.max(q)) };
        let (y0, y1) = { let (p, q) = (a.2 as usize % (h + 1), a.3 as usize % (h + 1)); (p.min(q), p.max(q)) };
        let mut s = 0u64;
        for y in y0..y1 {
            for x in x0..x1 {
                s += img.get(x, y) as u64;
            }
        }
        prop_assert_eq!(ii.sum(x0, y0, x1, y1), s);
    }

    #[test]
    fn crop_copies_the_window(img in image(20, 20), b in boxes()) {
        match crop(&img, &b) {
            Ok(c) => {
                let k = b.clamp_to(img.width(), img.height()).unwrap();
                prop_assert_eq!((c.width(), c.height()), (k.w as usize, k.h as usize));
                for y in 0..c.height() {
                    for x in 0..c.width() {
                        prop_assert_eq!(c.get(x, y), img.get(x + k.x0 as usize, y + k.y0 as usize));
                    }
                }
            }
            Err(_) => prop_assert!(b.clamp_to(img.width(), img.height()).is_none()),
        }
    }

    #[test]
    fn min_area_rect_covers_points(pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..30)) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let r = match min_area_rect(&pts) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let c = r.corners();
        for p in &pts {
            let sides: Vec<f64> = (0..4)
                .map(|i| {
                    let (a, b) = (c[i], c[(i + 1) % 4]);
                    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
                })
                .collect();
            let eps = 1e-6 * (1.0 + r.area());
            let inside = sides.iter().all(|&s| s >= -eps) || sides.iter().all(|&s| s <= eps);
            prop_assert!(inside, "{:?} outside {:?}", p, r);
        }
        let xs = pts.iter().map(|p| p.x);
        let ys = pts.iter().map(|p| p.y);
        let bw = xs.clone().fold(f64::MIN, f64::max) - xs.fold(f64::MAX, f64::min);
        let bh = ys.clone().fold(f64::MIN, f64::max) - ys.fold(f64::MAX, f64::min);
        prop_assert!(r.area() <= bw * bh + 1e-6 * (1.0 + bw * bh));
    }
}
