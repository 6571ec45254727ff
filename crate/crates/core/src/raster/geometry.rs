use super::{normalize_half_turn, RotatedBox};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull by Andrew's monotone chain; collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle (rotating calipers over hull edges).
///
/// The returned angle is the direction of the longer side, counter-clockwise
/// as displayed, in (-90, 90].
pub fn min_area_rect(points: &[Point]) -> Result<RotatedBox> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(Error::Geometry(format!(
            "need 3 non-collinear points, hull has {}",
            hull.len()
        )));
    }
    let n = hull.len();
    let mut best: Option<(f64, RotatedBox)> = None;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let u = ((b.x - a.x) / len, (b.y - a.y) / len);
        let v = (-u.1, u.0);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let pu = p.x * u.0 + p.y * u.1;
            let pv = p.x * v.0 + p.y * v.1;
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let (w, h) = (umax - umin, vmax - vmin);
        let area = w * h;
        if best
            .as_ref()
            .is_none_or(|(ba, _)| area < *ba - 1e-9 * ba.abs().max(1.0))
        {
            let (cu, cv) = ((umin + umax) / 2.0, (vmin + vmax) / 2.0);
            let center = (cu * u.0 + cv * v.0, cu * u.1 + cv * v.1);
            // Screen angle of u: y axis points down.
            let mut angle = (-u.1).atan2(u.0).to_degrees();
            let (mut w, mut h) = (w, h);
            if w < h {
                std::mem::swap(&mut w, &mut h);
                angle += 90.0;
            }
            let angle = normalize_half_turn(angle);
            best = Some((
                area,
                RotatedBox {
                    center,
                    w,
                    h,
                    angle,
                },
            ));
        }
    }
    let (_, rect) = best.expect("non-degenerate hull");
    if rect.h <= 0.0 {
        return Err(Error::Geometry("collinear points".into()));
    }
    Ok(rect)
}
