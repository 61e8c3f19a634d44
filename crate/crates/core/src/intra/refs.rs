//! Reference sample gathering with availability substitution.

use crate::frame::Plane;

/// Which 4x4 units of a plane are already reconstructed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedMap {
    w4: usize,
    h4: usize,
    done: Vec<bool>,
}

impl DecodedMap {
    /// Map for a plane of `width x height` samples.
    pub fn new(width: usize, height: usize) -> Self {
        let (w4, h4) = (width.div_ceil(4), height.div_ceil(4));
        DecodedMap { w4, h4, done: vec![false; w4 * h4] }
    }

    #[inline]
    pub fn is_decoded(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 {
            return false;
        }
        let (bx, by) = (x as usize / 4, y as usize / 4);
        bx < self.w4 && by < self.h4 && self.done[by * self.w4 + bx]
    }

    /// Marks (or clears) the units covering a sample rectangle.
    pub fn set_rect(&mut self, x: usize, y: usize, w: usize, h: usize, value: bool) {
        for by in y / 4..((y + h).div_ceil(4)).min(self.h4) {
            for bx in x / 4..((x + w).div_ceil(4)).min(self.w4) {
                self.done[by * self.w4 + bx] = value;
            }
        }
    }

    pub fn mark(&mut self, x: usize, y: usize, w: usize, h: usize) {
        self.set_rect(x, y, w, h, true);
    }

    /// Flags of the units covering a sample rectangle, row by row.
    pub fn region(&self, x: usize, y: usize, w: usize, h: usize) -> Vec<bool> {
        let mut out = Vec::new();
        for by in y / 4..((y + h).div_ceil(4)).min(self.h4) {
            let r = by * self.w4;
            out.extend_from_slice(&self.done[r + x / 4..r + ((x + w).div_ceil(4)).min(self.w4)]);
        }
        out
    }

    /// Inverse of [`DecodedMap::region`].
    pub fn set_region(&mut self, x: usize, y: usize, w: usize, h: usize, flags: &[bool]) {
        let mut i = 0;
        for by in y / 4..((y + h).div_ceil(4)).min(self.h4) {
            let r = by * self.w4;
            let (a, b) = (r + x / 4, r + ((x + w).div_ceil(4)).min(self.w4));
            self.done[a..b].copy_from_slice(&flags[i..i + b - a]);
            i += b - a;
        }
    }

    /// Copies the state of a sample rectangle from `other`.
    pub fn copy_rect_from(&mut self, other: &DecodedMap, x: usize, y: usize, w: usize, h: usize) {
        for by in y / 4..((y + h).div_ceil(4)).min(self.h4) {
            let r = by * self.w4;
            let (a, b) = (r + x / 4, r + ((x + w).div_ceil(4)).min(self.w4));
            self.done[a..b].copy_from_slice(&other.done[a..b]);
        }
    }
}

/// Reference samples of one line for a `w x h` block.
///
/// `above[k]` is the sample at `(x - 1 - line + k, y - 1 - line)` and
/// `left[k]` the one at `(x - 1 - line, y - 1 - line + k)`; index 0 of both
/// is the shared corner. Both arrays extend past the `w + h` real samples by
/// replication so that projections never index out of range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefSamples {
    pub line: usize,
    pub w: usize,
    pub h: usize,
    pub above: Vec<u8>,
    pub left: Vec<u8>,
    /// Whether any sample directly above the block was reconstructed.
    pub have_above: bool,
    /// Whether any sample directly left of the block was reconstructed.
    pub have_left: bool,
}

impl RefSamples {
    /// Number of gathered (non-padding) samples per edge.
    pub fn real_len(&self) -> usize {
        1 + self.line + self.w + self.h
    }
}

/// Slack past the real samples covering the steepest projections and the
/// 4-tap filter support.
fn padded_len(line: usize, w: usize, h: usize) -> usize {
    2 * (w + h) + 2 * line + 8
}

/// Gathers line `line` around the block at `(x, y)` of size `w x h`.
///
/// Unavailable samples are substituted along the path from the far end of
/// the left column, through the corner, to the far end of the above row:
/// samples before the first available one copy it, later gaps copy their
/// predecessor. With nothing available every sample is 128.
pub fn build_ref_samples(
    recon: &Plane,
    map: &DecodedMap,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    line: usize,
) -> RefSamples {
    let n = 1 + line + w + h;
    let len = padded_len(line, w, h);
    let (x0, y0) = (x as isize - 1 - line as isize, y as isize - 1 - line as isize);
    let avail = |px: isize, py: isize| {
        px >= 0
            && py >= 0
            && (px as usize) < recon.width()
            && (py as usize) < recon.height()
            && map.is_decoded(px, py)
    };
    // Path order: left[n-1] .. left[1], corner, above[1] .. above[n-1].
    let mut path: Vec<Option<u8>> = Vec::with_capacity(2 * n - 1);
    for k in (1..n).rev() {
        let py = y0 + k as isize;
        path.push(avail(x0, py).then(|| recon.get(x0 as usize, py as usize)));
    }
    path.push(avail(x0, y0).then(|| recon.get(x0 as usize, y0 as usize)));
    for k in 1..n {
        let px = x0 + k as isize;
        path.push(avail(px, y0).then(|| recon.get(px as usize, y0 as usize)));
    }
    let have_left = (0..h).any(|r| path[n - 2 - line - r].is_some());
    let have_above = (0..w).any(|c| path[n + line + c].is_some());
    let filled: Vec<u8> = match path.iter().position(Option::is_some) {
        None => vec![128; path.len()],
        Some(first) => {
            let mut prev = path[first].unwrap();
            path.iter()
                .map(|s| {
                    if let Some(v) = s {
                        prev = *v;
                    }
                    prev
                })
                .collect()
        }
    };
    // `filled` before `first` holds the first available value already,
    // since `prev` starts there.
    let mut left = vec![0u8; len];
    let mut above = vec![0u8; len];
    for k in 0..n {
        left[k] = filled[n - 1 - k];
        above[k] = filled[n - 1 + k];
    }
    let (l_last, a_last) = (left[n - 1], above[n - 1]);
    left[n..].fill(l_last);
    above[n..].fill(a_last);
    RefSamples { line, w, h, above, left, have_above, have_left }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Plane {
        let mut p = Plane::new(w, h, 0);
        for yy in 0..h {
            for xx in 0..w {
                p.set(xx, yy, (xx * 3 + yy * 5) as u8);
            }
        }
        p
    }

    #[test]
    fn origin_block_is_flat_128() {
        let p = ramp(32, 32);
        let mut map = DecodedMap::new(32, 32);
        map.mark(8, 0, 8, 8);
        for line in 0..3 {
            let r = build_ref_samples(&p, &map, 0, 0, 8, 8, line);
            assert!(r.above.iter().chain(&r.left).all(|&s| s == 128));
            assert!(!r.have_above && !r.have_left);
        }
    }

    #[test]
    fn interior_line0_copies_neighbors() {
        let p = ramp(32, 32);
        let mut map = DecodedMap::new(32, 32);
        map.mark(0, 0, 32, 8);
        map.mark(0, 8, 8, 24);
        let r = build_ref_samples(&p, &map, 8, 8, 8, 8, 0);
        assert_eq!(r.above[0], p.get(7, 7));
        for c in 0..16 {
            assert_eq!(r.above[1 + c], p.get(8 + c, 7));
        }
        for k in 0..16 {
            assert_eq!(r.left[1 + k], p.get(7, 8 + k));
        }
        assert!(r.have_above && r.have_left);
        // Above-right past the decoded area replicates the last sample.
        assert_eq!(r.above[17], p.get(23, 7));
    }

    #[test]
    fn unavailable_left_copies_from_corner_side() {
        let p = ramp(32, 32);
        let mut map = DecodedMap::new(32, 32);
        map.mark(0, 0, 32, 8);
        let r = build_ref_samples(&p, &map, 8, 8, 8, 8, 0);
        assert!(!r.have_left);
        // The whole left column precedes the first available sample
        // (the corner) along the path.
        assert!(r.left[1..].iter().all(|&s| s == p.get(7, 7)));
    }
}
