//! Zig-zag coefficient scans.

use std::sync::OnceLock;

/// Zig-zag order of a `w x h` block as `(row, col)` pairs.
///
/// Positions are ordered by anti-diagonal `d = row + col`. Even diagonals
/// run bottom-left to top-right, odd ones top-right to bottom-left.
pub fn zigzag_order(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(w * h);
    for d in 0..w + h - 1 {
        let rows = d.saturating_sub(w - 1)..=d.min(h - 1);
        if d % 2 == 0 {
            out.extend(rows.rev().map(|r| (r, d - r)));
        } else {
            out.extend(rows.map(|r| (r, d - r)));
        }
    }
    out
}

const SIZES: [usize; 4] = [4, 8, 16, 32];

fn log_index(n: usize) -> usize {
    SIZES.iter().position(|&s| s == n).unwrap_or_else(|| panic!("unsupported scan size {n}"))
}

/// Cached zig-zag order as raster indices `row * w + col`.
pub fn scan_order(w: usize, h: usize) -> &'static [u16] {
    static CACHE: OnceLock<Vec<Vec<u16>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        let mut v = Vec::new();
        for &hh in &SIZES {
            for &ww in &SIZES {
                v.push(zigzag_order(ww, hh).into_iter().map(|(r, c)| (r * ww + c) as u16).collect());
            }
        }
        v
    });
    &cache[log_index(h) * 4 + log_index(w)]
}
