//! Sample prediction from reference edges.

use super::refs::RefSamples;
use super::IntraMode;

/// `round(64 / tan(a))` for `a` in degrees, clamped to 1023.
const DR_DERIVATIVE: [i32; 90] = [
    0, 1023, 1023, 1023, 915, 732, 609, 521, 455, 404, 363, 329, 301, 277, 257, 239, 223, 209,
    197, 186, 176, 167, 158, 151, 144, 137, 131, 126, 120, 115, 111, 107, 102, 99, 95, 91, 88, 85,
    82, 79, 76, 74, 71, 69, 66, 64, 62, 60, 58, 56, 54, 52, 50, 48, 46, 45, 43, 42, 40, 38, 37, 35,
    34, 33, 31, 30, 28, 27, 26, 25, 23, 22, 21, 20, 18, 17, 16, 15, 14, 12, 11, 10, 9, 8, 7, 6, 4,
    3, 2, 1,
];

/// Projection step in 1/64 sample per unit distance; 0 at 90 degrees.
#[inline]
pub fn dr_derivative(angle: i32) -> i32 {
    if (1..90).contains(&angle) {
        DR_DERIVATIVE[angle as usize]
    } else {
        0
    }
}

/// 16-phase DCT-based interpolation filter; each row sums to 128.
pub const DCT_IF_4TAP: [[i32; 4]; 16] = [
    [0, 128, 0, 0],
    [-4, 126, 8, -2],
    [-7, 122, 17, -4],
    [-10, 118, 26, -6],
    [-12, 112, 36, -8],
    [-13, 105, 46, -10],
    [-14, 96, 57, -11],
    [-14, 87, 67, -12],
    [-13, 77, 77, -13],
    [-12, 67, 87, -14],
    [-11, 57, 96, -14],
    [-10, 46, 105, -13],
    [-8, 36, 112, -12],
    [-6, 26, 118, -10],
    [-4, 17, 122, -7],
    [-2, 8, 126, -4],
];

#[inline]
fn at(edge: &[u8], i: isize) -> i32 {
    edge[i.clamp(0, edge.len() as isize - 1) as usize] as i32
}

/// 4-tap interpolation at `base + frac/64` along `edge`.
#[inline]
pub fn interp_4tap(edge: &[u8], base: isize, frac: i32) -> u8 {
    let f = &DCT_IF_4TAP[(frac >> 2) as usize];
    let acc = f[0] * at(edge, base - 1)
        + f[1] * at(edge, base)
        + f[2] * at(edge, base + 1)
        + f[3] * at(edge, base + 2);
    ((acc + 64) >> 7).clamp(0, 255) as u8
}

/// 2-tap interpolation at 1/32 sample precision.
#[inline]
fn interp_2tap(edge: &[u8], base: isize, frac: i32) -> u8 {
    let shift = frac >> 1;
    ((at(edge, base) * (32 - shift) + at(edge, base + 1) * shift + 16) >> 5) as u8
}

/// Samples `edge` at fixed-point position `pos` (1/64 units).
#[inline]
fn sample(edge: &[u8], pos: i32, four_tap: bool) -> u8 {
    let (base, frac) = ((pos >> 6) as isize, pos & 63);
    if four_tap {
        interp_4tap(edge, base, frac)
    } else {
        interp_2tap(edge, base, frac)
    }
}

/// Predicts a `refs.w x refs.h` block into `out` (row-major).
pub fn predict(mode: IntraMode, refs: &RefSamples, out: &mut [u8]) {
    let (w, h, l) = (refs.w, refs.h, refs.line);
    match mode {
        IntraMode::Dc => {
            let above = &refs.above[1 + l..1 + l + w];
            let left = &refs.left[1 + l..1 + l + h];
            let sum = |s: &[u8]| s.iter().map(|&v| v as u32).sum::<u32>();
            let dc = match (refs.have_above, refs.have_left) {
                (true, true) => (sum(above) + sum(left) + ((w + h) / 2) as u32) / (w + h) as u32,
                (true, false) => (sum(above) + (w / 2) as u32) / w as u32,
                (false, true) => (sum(left) + (h / 2) as u32) / h as u32,
                (false, false) => 128,
            };
            out[..w * h].fill(dc as u8);
        }
        IntraMode::Paeth => {
            let tl = refs.above[0] as i32;
            for r in 0..h {
                let left = refs.left[1 + l + r] as i32;
                for c in 0..w {
                    let top = refs.above[1 + l + c] as i32;
                    let base = top + left - tl;
                    let (pl, pt, ptl) = ((base - left).abs(), (base - top).abs(), (base - tl).abs());
                    out[r * w + c] = if pl <= pt && pl <= ptl {
                        left
                    } else if pt <= ptl {
                        top
                    } else {
                        tl
                    } as u8;
                }
            }
        }
        IntraMode::Directional { .. } => {
            let angle = mode.angle().expect("directional");
            let four_tap = l > 0;
            let l = l as i32;
            for r in 0..h as i32 {
                for c in 0..w as i32 {
                    let v = if angle <= 90 {
                        let dx = dr_derivative(angle);
                        sample(&refs.above, ((c + 1 + l) << 6) + (r + 1 + l) * dx, four_tap)
                    } else if angle < 180 {
                        let dx = dr_derivative(180 - angle);
                        let pos = ((c + 1 + l) << 6) - (r + 1 + l) * dx;
                        if pos >= 0 {
                            sample(&refs.above, pos, four_tap)
                        } else {
                            let dy = dr_derivative(angle - 90);
                            let pos_y = ((r + 1 + l) << 6) - (c + 1 + l) * dy;
                            sample(&refs.left, pos_y.max(0), four_tap)
                        }
                    } else {
                        let dy = dr_derivative(270 - angle);
                        sample(&refs.left, ((r + 1 + l) << 6) + (c + 1 + l) * dy, four_tap)
                    };
                    out[(r as usize) * w + c as usize] = v;
                }
            }
        }
    }
}
