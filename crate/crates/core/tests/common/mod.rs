//! Shared fixtures and the property suites run by both the invariant tests
//! and the acceptance report.

#![allow(dead_code)]

pub mod suites;

use bav1::frame::{Frame, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cases per property suite.
pub const CASES: u32 = 1000;

/// Random 4:2:0 frame mixing noise, gradients, flat areas and hard edges.
pub fn fuzz_frame(seed: u64, w: usize, h: usize) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut plane = |pw: usize, ph: usize| {
        let kind = rng.gen_range(0..5);
        let base: i32 = rng.gen_range(0..256);
        let (gx, gy) = (rng.gen_range(-8..=8), rng.gen_range(-8..=8));
        let amp: i32 = rng.gen_range(1..64);
        let edge = rng.gen_range(0..pw.max(1));
        let data = (0..pw * ph)
            .map(|i| {
                let (x, y) = ((i % pw) as i32, (i / pw) as i32);
                let v = match kind {
                    0 => rng.gen_range(0..256),
                    1 => base + gx * x + gy * y,
                    2 => base,
                    3 => base + if (x as usize) < edge { amp } else { -amp } + rng.gen_range(-2..=2),
                    _ => base + rng.gen_range(-amp..=amp),
                };
                v.clamp(0, 255) as u8
            })
            .collect();
        Plane::from_vec(pw, ph, data)
    };
    let y = plane(w, h);
    let cb = plane(cw, ch);
    let cr = plane(cw, ch);
    Frame::from_planes(y, cb, cr).expect("4:2:0 geometry")
}

/// Random plane with values in `lo..=hi`.
pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: u8, hi: u8) -> Plane {
    Plane::from_vec(w, h, (0..w * h).map(|_| rng.gen_range(lo..=hi)).collect())
}
