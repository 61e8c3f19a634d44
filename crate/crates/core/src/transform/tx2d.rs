//! Separable 2-D transforms as matrix multiplies.
//!
//! Blocks are row-major `w x h`. The forward transform applies the vertical
//! kernel to every column, then the horizontal kernel to every row.
//!
//! Integer path, with kernels at scale 128 and round-half-up shifts:
//!
//! | stage            | product scale | shift | result scale |
//! |------------------|---------------|-------|--------------|
//! | forward columns  | 128           | 4     | 8            |
//! | forward rows     | 1024          | 7     | 8            |
//! | inverse rows     | 1024          | 7     | 8            |
//! | inverse columns  | 1024          | 10    | 1            |
//!
//! Coefficients therefore carry 8x the orthonormal transform output.

use super::kernels::TxKernel;

pub const FWD_SHIFT_COL: u32 = 4;
pub const FWD_SHIFT_ROW: u32 = 7;
pub const INV_SHIFT_ROW: u32 = 7;
pub const INV_SHIFT_COL: u32 = 10;
/// Scale of integer coefficients relative to the orthonormal transform.
pub const COEFF_SCALE: i32 = 8;

#[inline]
fn round_shift(v: i64, s: u32) -> i64 {
    (v + (1 << (s - 1))) >> s
}

/// Integer forward transform of `input` into `out`.
pub fn forward_tx2d(input: &[i32], out: &mut [i32], horz: &TxKernel, vert: &TxKernel) {
    let (w, h) = (horz.n, vert.n);
    debug_assert!(input.len() >= w * h && out.len() >= w * h);
    let mut tmp = [0i64; 32 * 32];
    for k in 0..h {
        let vk = &vert.int[k * h..(k + 1) * h];
        for j in 0..w {
            let mut acc = 0i64;
            for (i, &v) in vk.iter().enumerate() {
                acc += v as i64 * input[i * w + j] as i64;
            }
            tmp[k * w + j] = round_shift(acc, FWD_SHIFT_COL);
        }
    }
    for k in 0..h {
        let row = &tmp[k * w..(k + 1) * w];
        for l in 0..w {
            let hl = &horz.int[l * w..(l + 1) * w];
            let acc: i64 = hl.iter().zip(row).map(|(&a, &b)| a as i64 * b).sum();
            out[k * w + l] = round_shift(acc, FWD_SHIFT_ROW) as i32;
        }
    }
}

/// Integer inverse transform of `coeffs` into `out`.
pub fn inverse_tx2d(coeffs: &[i32], out: &mut [i32], horz: &TxKernel, vert: &TxKernel) {
    let (w, h) = (horz.n, vert.n);
    debug_assert!(coeffs.len() >= w * h && out.len() >= w * h);
    let mut tmp = [0i64; 32 * 32];
    for k in 0..h {
        let row = &coeffs[k * w..(k + 1) * w];
        if row.iter().all(|&c| c == 0) {
            tmp[k * w..(k + 1) * w].fill(0);
            continue;
        }
        for j in 0..w {
            let mut acc = 0i64;
            for (l, &c) in row.iter().enumerate() {
                acc += horz.int[l * w + j] as i64 * c as i64;
            }
            tmp[k * w + j] = round_shift(acc, INV_SHIFT_ROW);
        }
    }
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0i64;
            for k in 0..h {
                acc += vert.int[k * h + i] as i64 * tmp[k * w + j];
            }
            out[i * w + j] = round_shift(acc, INV_SHIFT_COL) as i32;
        }
    }
}

/// Orthonormal forward transform `V X H^T`.
pub fn forward_tx2d_float(input: &[f64], horz: &TxKernel, vert: &TxKernel) -> Vec<f64> {
    let (w, h) = (horz.n, vert.n);
    let mut tmp = vec![0.0; w * h];
    for k in 0..h {
        for j in 0..w {
            tmp[k * w + j] = (0..h).map(|i| vert.float[(k, i)] * input[i * w + j]).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for k in 0..h {
        for l in 0..w {
            out[k * w + l] = (0..w).map(|j| horz.float[(l, j)] * tmp[k * w + j]).sum();
        }
    }
    out
}

/// Orthonormal inverse transform `V^T C H`.
pub fn inverse_tx2d_float(coeffs: &[f64], horz: &TxKernel, vert: &TxKernel) -> Vec<f64> {
    let (w, h) = (horz.n, vert.n);
    let mut tmp = vec![0.0; w * h];
    for k in 0..h {
        for j in 0..w {
            tmp[k * w + j] = (0..w).map(|l| horz.float[(l, j)] * coeffs[k * w + l]).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for i in 0..h {
        for j in 0..w {
            out[i * w + j] = (0..h).map(|k| vert.float[(k, i)] * tmp[k * w + j]).sum();
        }
    }
    out
}
