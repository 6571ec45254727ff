//! Transcendental functions built only from IEEE-754 basic operations, so
//! generated fixtures are bit-identical on every platform.

use std::f64::consts::{LN_2, PI};

/// Natural logarithm for `x > 0`.
pub fn ln(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // x = m * 2^e with m in [sqrt(1/2), sqrt(2)).
    let mut e = 0i32;
    let mut m = x;
    while m >= std::f64::consts::SQRT_2 {
        m /= 2.0;
        e += 1;
    }
    while m < std::f64::consts::FRAC_1_SQRT_2 {
        m *= 2.0;
        e -= 1;
    }
    // ln(m) = 2 atanh(t), t = (m-1)/(m+1), |t| < 0.172.
    let t = (m - 1.0) / (m + 1.0);
    let t2 = t * t;
    let mut term = t;
    let mut sum = 0.0;
    let mut k = 1.0;
    for _ in 0..30 {
        sum += term / k;
        term *= t2;
        k += 2.0;
    }
    2.0 * sum + e as f64 * LN_2
}

/// `(sin x, cos x)`.
pub fn sin_cos(x: f64) -> (f64, f64) {
    // Reduce to r in [-pi/4, pi/4] and a quadrant.
    let q = (x / (PI / 2.0)).round();
    let r = x - q * (PI / 2.0);
    let r2 = r * r;
    let (mut s, mut c) = (0.0, 0.0);
    let (mut ts, mut tc) = (r, 1.0);
    for n in 0..14 {
        s += ts;
        c += tc;
        let k = (2 * n + 2) as f64;
        ts *= -r2 / (k * (k + 1.0));
        tc *= -r2 / ((k - 1.0) * k);
    }
    match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}
