//! Cross-component sample offset: chroma samples receive a LUT offset
//! selected by the quantized differences between the co-located luma
//! sample and its four diamond neighbors.

use crate::bitio::{BitReader, BitWriter, BitioError};
use crate::frame::Plane;

pub const CCSO_BINS: usize = 81;
/// Selectable quantization thresholds, indexed by the 2-bit header field.
pub const CCSO_THRESHOLDS: [i32; 4] = [8, 16, 32, 64];
pub const DEFAULT_THRESHOLD_INDEX: u8 = 1;
pub const MAX_OFFSET: i32 = 15;
/// Block flag granularity in chroma samples (64x64 luma).
pub const CCSO_BLOCK: usize = 32;
/// Index of the all-zero-delta bin.
pub const CENTER_BIN: usize = 40;

/// `-1` if `p - r_l <= -t`, `+1` if `p - r_l >= t`, else 0.
#[inline]
pub fn quantize_delta(p: i32, r_l: i32, t: i32) -> i32 {
    let d = p - r_l;
    if d <= -t {
        -1
    } else if d >= t {
        1
    } else {
        0
    }
}

/// Bin of the luma sample at `(lx, ly)`: neighbors above, left, right and
/// below (border-replicated) contribute `(d_i + 1) * 3^i`.
#[inline]
pub fn classify(luma: &Plane, lx: usize, ly: usize, t: i32) -> usize {
    let (x, y) = (lx as isize, ly as isize);
    let r = luma.get(lx, ly) as i32;
    let taps = [
        luma.get_clamped(x, y - 1),
        luma.get_clamped(x - 1, y),
        luma.get_clamped(x + 1, y),
        luma.get_clamped(x, y + 1),
    ];
    taps.iter()
        .enumerate()
        .map(|(i, &p)| ((quantize_delta(p as i32, r, t) + 1) as usize) * 3usize.pow(i as u32))
        .sum()
}

/// Offsets and enable flags for one chroma component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CcsoLut {
    pub offsets: [i8; CCSO_BINS],
    pub t_index: u8,
    pub enabled: bool,
    pub grid_w: usize,
    pub grid_h: usize,
    pub block_flags: Vec<bool>,
}

impl CcsoLut {
    /// Disabled LUT for a chroma plane of the given size.
    pub fn disabled(chroma_w: usize, chroma_h: usize) -> Self {
        let (gw, gh) = grid_dims(chroma_w, chroma_h);
        CcsoLut {
            offsets: [0; CCSO_BINS],
            t_index: DEFAULT_THRESHOLD_INDEX,
            enabled: false,
            grid_w: gw,
            grid_h: gh,
            block_flags: vec![false; gw * gh],
        }
    }

    pub fn threshold(&self) -> i32 {
        CCSO_THRESHOLDS[self.t_index as usize & 3]
    }

    pub fn block_enabled(&self, bx: usize, by: usize) -> bool {
        self.enabled && self.block_flags[by * self.grid_w + bx]
    }
}

pub fn grid_dims(chroma_w: usize, chroma_h: usize) -> (usize, usize) {
    (chroma_w.div_ceil(CCSO_BLOCK), chroma_h.div_ceil(CCSO_BLOCK))
}

/// Bin of every chroma sample.
pub fn classify_plane(chroma_w: usize, chroma_h: usize, luma: &Plane, t: i32) -> Vec<u8> {
    let mut bins = vec![0u8; chroma_w * chroma_h];
    for cy in 0..chroma_h {
        for cx in 0..chroma_w {
            bins[cy * chroma_w + cx] = classify(luma, 2 * cx, 2 * cy, t) as u8;
        }
    }
    bins
}

/// `round(sum / n)` with halves away from zero.
fn rounded_mean(sum: i64, n: i64) -> i64 {
    let m = (2 * sum.abs() + n) / (2 * n);
    if sum < 0 {
        -m
    } else {
        m
    }
}

/// Per-bin `(sum of source - recon, count)`.
fn bin_stats(source: &Plane, recon: &Plane, bins: &[u8]) -> ([i64; CCSO_BINS], [i64; CCSO_BINS]) {
    let (mut sum, mut cnt) = ([0i64; CCSO_BINS], [0i64; CCSO_BINS]);
    let w = recon.width();
    for y in 0..recon.height() {
        for (x, (&s, &r)) in source.row(y).iter().zip(recon.row(y)).enumerate() {
            let b = bins[y * w + x] as usize;
            sum[b] += s as i64 - r as i64;
            cnt[b] += 1;
        }
    }
    (sum, cnt)
}

/// Sets each block flag iff filtering reduces that block's SSE; returns the
/// total SSE reduction over flagged blocks.
fn choose_block_flags(source: &Plane, recon: &Plane, bins: &[u8], lut: &mut CcsoLut) -> i64 {
    let w = recon.width();
    let mut total = 0i64;
    for by in 0..lut.grid_h {
        for bx in 0..lut.grid_w {
            let mut gain = 0i64;
            for y in by * CCSO_BLOCK..((by + 1) * CCSO_BLOCK).min(recon.height()) {
                for x in bx * CCSO_BLOCK..((bx + 1) * CCSO_BLOCK).min(w) {
                    let s = source.get(x, y) as i64;
                    let r = recon.get(x, y) as i64;
                    let o = lut.offsets[bins[y * w + x] as usize] as i64;
                    let f = (r + o).clamp(0, 255);
                    gain += (s - r) * (s - r) - (s - f) * (s - f);
                }
            }
            let on = gain > 0;
            lut.block_flags[by * lut.grid_w + bx] = on;
            if on {
                total += gain;
            }
        }
    }
    total
}

/// Mean-error LUT with SSE-gated block flags; the frame flag is set iff the
/// flagged blocks reduce SSE at all.
pub fn derive_lut(source: &Plane, recon: &Plane, luma: &Plane, t_index: u8) -> CcsoLut {
    let (w, h) = (recon.width(), recon.height());
    let mut lut = CcsoLut::disabled(w, h);
    lut.t_index = t_index;
    let bins = classify_plane(w, h, luma, lut.threshold());
    let (sum, cnt) = bin_stats(source, recon, &bins);
    for b in 0..CCSO_BINS {
        if cnt[b] > 0 {
            lut.offsets[b] = rounded_mean(sum[b], cnt[b]).clamp(-15, 15) as i8;
        }
    }
    let gain = choose_block_flags(source, recon, &bins, &mut lut);
    lut.enabled = gain > 0;
    lut
}

fn offset_bits(o: i32) -> u32 {
    if o == 0 {
        return 0;
    }
    let v = (o.unsigned_abs() - 1) as u64 + 1;
    let len = 64 - v.leading_zeros();
    2 * len - 1 + 1
}

/// Header bits of an enabled LUT section.
pub fn section_bits(lut: &CcsoLut) -> u32 {
    1 + 2 + CCSO_BINS as u32 + lut.offsets.iter().map(|&o| offset_bits(o as i32)).sum::<u32>()
}

/// Ideal cost of the block flags under an adaptive binary model.
fn flag_bits(flags: &[bool]) -> f64 {
    let n = flags.len() as f64;
    let on = flags.iter().filter(|&&f| f).count() as f64;
    let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.log2() - (1.0 - p) * (1.0 - p).log2() };
    n * h(on / n) + 2.0
}

/// Encoder-side rate-distortion choice: tries every threshold, drops bins
/// whose SSE gain does not pay for their bits, and enables the component
/// only when the SSE reduction exceeds `lambda` times the signaling cost.
pub fn optimize_lut(source: &Plane, recon: &Plane, luma: &Plane, lambda: f64) -> CcsoLut {
    let (w, h) = (recon.width(), recon.height());
    let mut best = CcsoLut::disabled(w, h);
    let mut best_cost = 0.0f64;
    for t_index in 0..CCSO_THRESHOLDS.len() as u8 {
        let mut lut = CcsoLut::disabled(w, h);
        lut.t_index = t_index;
        let bins = classify_plane(w, h, luma, lut.threshold());
        let (sum, cnt) = bin_stats(source, recon, &bins);
        for b in 0..CCSO_BINS {
            if cnt[b] == 0 {
                continue;
            }
            let o = rounded_mean(sum[b], cnt[b]).clamp(-15, 15);
            // Clipping is ignored here; block gating below uses exact SSE.
            let gain = (2 * o * sum[b] - o * o * cnt[b]) as f64;
            if o != 0 && gain > lambda * (offset_bits(o as i32) + 1) as f64 {
                lut.offsets[b] = o as i8;
            }
        }
        let gain = choose_block_flags(source, recon, &bins, &mut lut) as f64;
        let cost = lambda * (section_bits(&lut) as f64 + flag_bits(&lut.block_flags)) - gain;
        if gain > 0.0 && cost < best_cost {
            lut.enabled = true;
            best_cost = cost;
            best = lut;
        }
    }
    best
}

/// Applies the LUT to enabled blocks of `recon`.
pub fn apply_ccso(recon: &Plane, luma: &Plane, lut: &CcsoLut) -> Plane {
    let mut out = recon.clone();
    if !lut.enabled {
        return out;
    }
    let t = lut.threshold();
    for by in 0..lut.grid_h {
        for bx in 0..lut.grid_w {
            if !lut.block_enabled(bx, by) {
                continue;
            }
            for y in by * CCSO_BLOCK..((by + 1) * CCSO_BLOCK).min(recon.height()) {
                for x in bx * CCSO_BLOCK..((bx + 1) * CCSO_BLOCK).min(recon.width()) {
                    let o = lut.offsets[classify(luma, 2 * x, 2 * y, t)] as i32;
                    out.set(x, y, (recon.get(x, y) as i32 + o).clamp(0, 255) as u8);
                }
            }
        }
    }
    out
}

/// Writes the header section of one component.
pub fn write_section(bw: &mut BitWriter, lut: &CcsoLut) {
    bw.put_bit(lut.enabled);
    if !lut.enabled {
        return;
    }
    bw.put_bits(lut.t_index as u32, 2);
    for &o in &lut.offsets {
        bw.put_bit(o != 0);
    }
    for &o in &lut.offsets {
        if o != 0 {
            bw.put_golomb(o.unsigned_abs() as u32 - 1);
            bw.put_bit(o < 0);
        }
    }
}

/// Reads one component's header section; block flags start cleared.
pub fn read_section(
    br: &mut BitReader<'_>,
    chroma_w: usize,
    chroma_h: usize,
) -> Result<CcsoLut, BitioError> {
    let mut lut = CcsoLut::disabled(chroma_w, chroma_h);
    lut.enabled = br.get_bit()?;
    if !lut.enabled {
        return Ok(lut);
    }
    lut.t_index = br.get_bits(2)? as u8;
    let mut occupied = [false; CCSO_BINS];
    for o in occupied.iter_mut() {
        *o = br.get_bit()?;
    }
    for (b, &occ) in occupied.iter().enumerate() {
        if occ {
            let m = br.get_golomb(8)? + 1;
            if m > MAX_OFFSET as u32 {
                return Err(BitioError::Malformed { offset: br.byte_len(), what: "CCSO offset" });
            }
            let neg = br.get_bit()?;
            lut.offsets[b] = if neg { -(m as i8) } else { m as i8 };
        }
    }
    Ok(lut)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Plane {
        let mut p = Plane::new(w, h, 0);
        for y in 0..h {
            for x in 0..w {
                p.set(x, y, f(x, y));
            }
        }
        p
    }

    #[test]
    fn delta_quantization() {
        assert_eq!(quantize_delta(120, 100, 16), 1);
        assert_eq!(quantize_delta(100, 100, 8), 0);
        assert_eq!(quantize_delta(80, 100, 16), -1);
        assert_eq!(quantize_delta(116, 100, 16), 1);
        assert_eq!(quantize_delta(115, 100, 16), 0);
    }

    #[test]
    fn bin_extremes() {
        let flat = Plane::new(8, 8, 90);
        assert_eq!(classify(&flat, 3, 3, 16), CENTER_BIN);
        let peak = plane(8, 8, |x, y| if (x, y) == (3, 3) { 10 } else { 200 });
        assert_eq!(classify(&peak, 3, 3, 16), 80);
        let pit = plane(8, 8, |x, y| if (x, y) == (3, 3) { 200 } else { 10 });
        assert_eq!(classify(&pit, 3, 3, 16), 0);
    }

    #[test]
    fn constant_bias_is_corrected() {
        let luma = Plane::new(32, 32, 100);
        let source = Plane::new(16, 16, 60);
        let recon = Plane::new(16, 16, 58);
        let lut = derive_lut(&source, &recon, &luma, 1);
        assert_eq!(lut.offsets[CENTER_BIN], 2);
        assert!(lut.offsets.iter().enumerate().all(|(b, &o)| b == CENTER_BIN || o == 0));
        assert!(lut.enabled);
        assert_eq!(apply_ccso(&recon, &luma, &lut), source);
    }

    #[test]
    fn exact_recon_disables() {
        let luma = plane(32, 32, |x, y| (x * 9 + y * 3) as u8);
        let src = plane(16, 16, |x, y| (x * y) as u8);
        let lut = derive_lut(&src, &src, &luma, 1);
        assert!(lut.offsets.iter().all(|&o| o == 0));
        assert!(!lut.enabled);
    }

    #[test]
    fn mean_of_two_errors() {
        let luma = Plane::new(4, 2, 50);
        let source = Plane::from_vec(2, 1, vec![13, 15]);
        let recon = Plane::from_vec(2, 1, vec![10, 10]);
        assert_eq!(derive_lut(&source, &recon, &luma, 1).offsets[CENTER_BIN], 4);
    }

    #[test]
    fn section_round_trip() {
        let mut lut = CcsoLut::disabled(40, 20);
        lut.enabled = true;
        lut.t_index = 3;
        lut.offsets[0] = -15;
        lut.offsets[40] = 1;
        lut.offsets[80] = 7;
        let mut bw = BitWriter::new();
        write_section(&mut bw, &lut);
        assert_eq!(bw.bit_len() as u32, section_bits(&lut));
        let bytes = bw.into_bytes();
        let back = read_section(&mut BitReader::new(&bytes), 40, 20).unwrap();
        assert_eq!(back.offsets, lut.offsets);
        assert_eq!(back.t_index, 3);
    }
}
