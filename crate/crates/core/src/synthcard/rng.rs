use crate::detmath;

/// 64-bit linear congruential generator (Knuth's MMIX constants).
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
    spare: Option<f64>,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        let mut rng = Lcg {
            state: seed ^ 0x9E37_79B9_7F4A_7C15,
            spare: None,
        };
        rng.next_u64();
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        // The low bits of an LCG are weak; fold the high half down.
        self.state ^ (self.state >> 29)
    }

    /// Uniform in [0, 1) with 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in `[lo, hi)`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + (self.uniform() * (hi - lo) as f64) as u64
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.range(0, items.len() as u64) as usize]
    }

    /// Standard normal deviate (Box-Muller).
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * detmath::ln(u1)).sqrt();
        let (s, c) = detmath::sin_cos(2.0 * std::f64::consts::PI * u2);
        self.spare = Some(r * s);
        r * c
    }
}
