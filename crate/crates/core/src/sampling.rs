//! Deterministic low-discrepancy sampling of coordinate boxes.

use crate::solution::Point4;
use serde::{Deserialize, Serialize};

/// Axis-aligned box of (t, x, y, z) intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box4 {
    pub t: [f64; 2],
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Box4 {
    pub fn new(t: [f64; 2], x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> Box4 {
        Box4 { t, x, y, z }
    }

    pub fn intervals(&self) -> [[f64; 2]; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn contains(&self, p: Point4) -> bool {
        let c = p.coords();
        self.intervals()
            .iter()
            .zip(c)
            .all(|(iv, v)| v >= iv[0] && v <= iv[1])
    }

    pub fn is_valid(&self) -> bool {
        self.intervals()
            .iter()
            .all(|iv| iv[0] < iv[1] && iv.iter().all(|v| v.is_finite()))
    }
}

const HALTON_BASES: [u64; 4] = [2, 3, 5, 7];

/// Radical-inverse (van der Corput) value of `i` in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// k-th point of the seeded Halton sequence mapped into the box.
///
/// The seed enters as a deterministic index offset, so runs with the same
/// seed reproduce bit-identical point sets.
pub fn halton_point(bx: &Box4, seed: u64, k: u64) -> Point4 {
    let i = seed.wrapping_mul(7919).wrapping_add(k).wrapping_add(1);
    let iv = bx.intervals();
    let mut c = [0.0; 4];
    for (d, out) in c.iter_mut().enumerate() {
        let u = radical_inverse(i, HALTON_BASES[d]);
        *out = iv[d][0] + (iv[d][1] - iv[d][0]) * u;
    }
    Point4::new(c[0], c[1], c[2], c[3])
}

/// First `n` points of the seeded Halton sequence in the box.
pub fn halton_points(bx: &Box4, seed: u64, n: usize) -> Vec<Point4> {
    (0..n as u64).map(|k| halton_point(bx, seed, k)).collect()
}
