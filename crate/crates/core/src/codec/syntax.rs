//! Per-leaf syntax and coefficient coding.
//!
//! Luma leaf, in order:
//!
//! | element    | condition                                            | model                       |
//! |------------|------------------------------------------------------|-----------------------------|
//! | `y_mode`   | always (10-ary base mode)                            | above/left mode classes     |
//! | `y_delta`  | directional, both sides >= 8, and with IMC the nominal is used by a neighbor | nominal   |
//! | `ref_line` | MRL on and directional                               | block size class            |
//! | `skip`     | always                                               | block size class            |
//! | `tx_split` | not skip, shorter side >= 16, longer side <= 32      | longer side                 |
//! | `tx_type`  | not skip, every transform unit below 32x32 (16-ary)  | transform unit size class   |
//! | `nsdt`     | NSDT on, not skip, depth 0, no identity component    | mode class and size         |
//! | coefficients | not skip, per transform unit in raster order       | see below                   |
//!
//! Chroma leaf: `uv_mode` (context: co-located luma base mode), `uv_delta`
//! (directional and chroma block >= 8x8; context: nominal and, with IMC, the
//! co-located luma delta relation), `skip`, then Cb and Cr coefficients.
//!
//! Coefficients of one transform unit, in zig-zag scan order: end-of-block
//! class (`0, 1, 2`, then `2^(k-2) + 1 + offset` with `k - 2` raw offset
//! bits), then in reverse scan the last coefficient (`min(|l|, 3) - 1`) and
//! every earlier one (`min(|l|, 3)`, context from position class and the
//! capped magnitudes right, below and below-right), each followed by up to
//! four base-range symbols when the magnitude reaches 3. A forward pass
//! then writes each sign as a raw bit and an Exp-Golomb escape for
//! magnitudes of at least 15.

use super::block::{
    nsdt_signaled, tx_split_signaled, tx_type_signaled, ChromaInfo, LumaInfo,
};
use super::contexts::{
    eob_class, pos_class, size_class, y_mode_ctx, CoeffCdfs, Contexts, BR_CLASSES, BR_REPEATS,
    ESCAPE_LEVEL, NBR_CLASSES,
};
use super::{Tool, ToolConfig};
use crate::bitio::{BitioError, RangeDecoder, SymbolSink};
use crate::intra::{allows_delta, chroma_delta_context, delta_allowed_by_neighbors, IntraMode, MAX_DELTA};
use crate::partition::Rect;
use crate::transform::nsdt::nsdt_context;
use crate::transform::{scan_order, TxType};

/// Largest Exp-Golomb prefix accepted by the decoder.
const MAX_GOLOMB_PREFIX: u32 = 24;

/// Number of coded syntax elements by kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SyntaxCounts {
    pub partition_luma: usize,
    /// Chroma patterns below the shared depth (SDP only).
    pub partition_chroma: usize,
    pub y_mode: usize,
    pub y_delta: usize,
    pub uv_mode: usize,
    /// Chroma deltas coded with the plain context.
    pub uv_delta: usize,
    /// Chroma deltas coded with the co-located luma context (IMC only).
    pub uv_delta_imc_ctx: usize,
    /// MRL only.
    pub ref_line: usize,
    pub skip: usize,
    pub tx_split: usize,
    pub tx_type: usize,
    /// NSDT only.
    pub nsdt_index: usize,
    pub coeff_units: usize,
    /// CCSO only.
    pub ccso_sections: usize,
    /// CCSO only.
    pub ccso_block_flags: usize,
}

impl SyntaxCounts {
    /// Elements that exist only when `tool` is enabled. EPT changes kernels
    /// but adds no syntax.
    pub fn tool_elements(&self, tool: Tool) -> usize {
        match tool {
            Tool::Sdp => self.partition_chroma,
            Tool::Mrl => self.ref_line,
            Tool::Imc => self.uv_delta_imc_ctx,
            Tool::Ept => 0,
            Tool::Nsdt => self.nsdt_index,
            Tool::Ccso => self.ccso_sections + self.ccso_block_flags,
        }
    }

    pub fn add(&mut self, o: &SyntaxCounts) {
        self.partition_luma += o.partition_luma;
        self.partition_chroma += o.partition_chroma;
        self.y_mode += o.y_mode;
        self.y_delta += o.y_delta;
        self.uv_mode += o.uv_mode;
        self.uv_delta += o.uv_delta;
        self.uv_delta_imc_ctx += o.uv_delta_imc_ctx;
        self.ref_line += o.ref_line;
        self.skip += o.skip;
        self.tx_split += o.tx_split;
        self.tx_type += o.tx_type;
        self.nsdt_index += o.nsdt_index;
        self.coeff_units += o.coeff_units;
        self.ccso_sections += o.ccso_sections;
        self.ccso_block_flags += o.ccso_block_flags;
    }
}

/// Neighbor and co-location inputs of leaf syntax.
#[derive(Clone, Copy, Debug)]
pub struct LeafNeighbors {
    pub above: Option<IntraMode>,
    pub left: Option<IntraMode>,
}

fn luma_delta_coded(cfg: &ToolConfig, mode: IntraMode, rect: Rect, nb: LeafNeighbors) -> bool {
    match mode.nominal() {
        Some(nom) => {
            allows_delta(rect.w, rect.h)
                && (!cfg.imc || delta_allowed_by_neighbors(nom, nb.above, nb.left))
        }
        None => false,
    }
}

/// Whether `mode` can be signaled for a luma block.
pub fn luma_mode_codable(cfg: &ToolConfig, mode: IntraMode, rect: Rect, nb: LeafNeighbors) -> bool {
    mode.delta() == 0 || luma_delta_coded(cfg, mode, rect, nb)
}

/// Mode, delta and reference line of a luma leaf.
pub fn write_luma_mode<S: SymbolSink>(
    s: &mut S,
    ctx: &mut Contexts,
    cfg: &ToolConfig,
    rect: Rect,
    nb: LeafNeighbors,
    mode: IntraMode,
    ref_line: u8,
    counts: &mut SyntaxCounts,
) {
    s.symbol(&mut ctx.y_mode[y_mode_ctx(nb.above, nb.left)], mode.base_index());
    counts.y_mode += 1;
    if luma_delta_coded(cfg, mode, rect, nb) {
        let nom = mode.nominal().unwrap() as usize;
        s.symbol(&mut ctx.y_delta[nom], (mode.delta() + MAX_DELTA) as usize);
        counts.y_delta += 1;
    }
    if cfg.mrl && mode.is_directional() {
        s.symbol(&mut ctx.ref_line[size_class(rect.w, rect.h)], ref_line as usize);
        counts.ref_line += 1;
    }
}

/// Skip flag and transform selection of a luma leaf.
pub fn write_luma_tx<S: SymbolSink>(
    s: &mut S,
    ctx: &mut Contexts,
    cfg: &ToolConfig,
    rect: Rect,
    info: &LumaInfo,
    counts: &mut SyntaxCounts,
) {
    s.symbol(&mut ctx.skip[0][size_class(rect.w, rect.h)], info.skip as usize);
    counts.skip += 1;
    if info.skip {
        return;
    }
    if tx_split_signaled(rect.w, rect.h) {
        s.symbol(&mut ctx.tx_split[usize::from(rect.w.max(rect.h) == 32)], info.tx_split as usize);
        counts.tx_split += 1;
    }
    let (tw, th) = tu_dims(rect, info.tx_split);
    if tx_type_signaled(rect, info.tx_split) {
        s.symbol(&mut ctx.tx_type[size_class(tw, th)], info.tx_type.index());
        counts.tx_type += 1;
    }
    if nsdt_signaled(cfg.nsdt, rect, info.tx_split, info.tx_type) {
        s.symbol(&mut ctx.nsdt[nsdt_context(info.mode, tw, th)], info.nsdt as usize);
        counts.nsdt_index += 1;
    }
}

/// Luma transform unit size.
pub fn tu_dims(rect: Rect, split: bool) -> (usize, usize) {
    if split || super::block::tx_split_implicit(rect.w, rect.h) {
        (rect.w / 2, rect.h / 2)
    } else {
        (rect.w, rect.h)
    }
}

/// Mode, delta and skip flag of a chroma leaf. `rect` is in luma units.
pub fn write_chroma_info<S: SymbolSink>(
    s: &mut S,
    ctx: &mut Contexts,
    cfg: &ToolConfig,
    rect: Rect,
    luma_mode: IntraMode,
    info: &ChromaInfo,
    counts: &mut SyntaxCounts,
) {
    s.symbol(&mut ctx.uv_mode[luma_mode.base_index()], info.mode.base_index());
    counts.uv_mode += 1;
    if let Some(nom) = info.mode.nominal() {
        if allows_delta(rect.w / 2, rect.h / 2) {
            let c = uv_delta_ctx(cfg, luma_mode, nom);
            s.symbol(&mut ctx.uv_delta[nom as usize][c], (info.mode.delta() + MAX_DELTA) as usize);
            if cfg.imc {
                counts.uv_delta_imc_ctx += 1;
            } else {
                counts.uv_delta += 1;
            }
        }
    }
    s.symbol(&mut ctx.skip[1][size_class(rect.w / 2, rect.h / 2)], info.skip as usize);
    counts.skip += 1;
}

/// Whether `mode` can be signaled for a chroma block (`rect` in luma units).
pub fn chroma_mode_codable(mode: IntraMode, rect: Rect) -> bool {
    mode.delta() == 0 || allows_delta(rect.w / 2, rect.h / 2)
}

fn uv_delta_ctx(cfg: &ToolConfig, luma_mode: IntraMode, nom: u8) -> usize {
    if cfg.imc {
        chroma_delta_context(luma_mode, nom)
    } else {
        0
    }
}

fn eob_symbol(eob: usize) -> (usize, u32, u32) {
    if eob <= 2 {
        return (eob, 0, 0);
    }
    let b = usize::BITS - 1 - (eob - 1).leading_zeros();
    (2 + b as usize, (eob - 1 - (1 << b)) as u32, b)
}

#[inline]
fn nbr_ctx(mags: &[u8], w: usize, h: usize, r: usize, c: usize) -> usize {
    let mut sum = 0usize;
    if c + 1 < w {
        sum += mags[r * w + c + 1] as usize;
    }
    if r + 1 < h {
        sum += mags[(r + 1) * w + c] as usize;
        if c + 1 < w {
            sum += mags[(r + 1) * w + c + 1] as usize;
        }
    }
    ((sum + 1) >> 1).min(NBR_CLASSES - 1)
}

fn write_br<S: SymbolSink>(s: &mut S, cdfs: &mut CoeffCdfs, pc: usize, mag: u32) {
    let mut cur = 3u32;
    for _ in 0..BR_REPEATS {
        let sym = (mag - cur).min(3);
        s.symbol(&mut cdfs.br[pc.min(BR_CLASSES - 1)], sym as usize);
        cur += sym;
        if sym < 3 {
            break;
        }
    }
}

/// Codes the quantized levels (raster order) of one `w x h` unit.
pub fn write_coeffs<S: SymbolSink>(s: &mut S, cdfs: &mut CoeffCdfs, levels: &[i32], w: usize, h: usize) {
    let scan = scan_order(w, h);
    let eob = scan.iter().rposition(|&p| levels[p as usize] != 0).map_or(0, |i| i + 1);
    let (sym, off, bits) = eob_symbol(eob);
    s.symbol(&mut cdfs.eob[eob_class(w, h)], sym);
    if bits > 0 {
        s.literal(off, bits);
    }
    if eob == 0 {
        return;
    }
    let mut mags = [0u8; 1024];
    for i in (0..eob).rev() {
        let p = scan[i] as usize;
        let mag = levels[p].unsigned_abs();
        let pc = pos_class(i);
        if i == eob - 1 {
            s.symbol(&mut cdfs.last[pc], (mag.min(3) - 1) as usize);
        } else {
            let nc = nbr_ctx(&mags, w, h, p / w, p % w);
            s.symbol(&mut cdfs.base[pc * NBR_CLASSES + nc], mag.min(3) as usize);
        }
        if mag >= 3 {
            write_br(s, cdfs, pc, mag);
        }
        mags[p] = mag.min(3) as u8;
    }
    for &p in &scan[..eob] {
        let l = levels[p as usize];
        if l != 0 {
            s.bit(l < 0);
            if l.unsigned_abs() >= ESCAPE_LEVEL {
                s.golomb(l.unsigned_abs() - ESCAPE_LEVEL);
            }
        }
    }
}

/// Inverse of [`write_coeffs`]; `levels` must hold `w * h` entries.
pub fn read_coeffs(
    d: &mut RangeDecoder<'_>,
    cdfs: &mut CoeffCdfs,
    levels: &mut [i32],
    w: usize,
    h: usize,
) -> Result<(), BitioError> {
    let n = w * h;
    levels[..n].fill(0);
    let scan = scan_order(w, h);
    let sym = d.decode_symbol(&mut cdfs.eob[eob_class(w, h)])?;
    let eob = if sym <= 2 {
        sym
    } else {
        let b = sym as u32 - 2;
        (1usize << b) + 1 + d.decode_literal(b)? as usize
    };
    if eob > n {
        return Err(BitioError::Malformed { offset: d.position(), what: "end of block" });
    }
    if eob == 0 {
        return Ok(());
    }
    let mut mags = [0u8; 1024];
    for i in (0..eob).rev() {
        let p = scan[i] as usize;
        let pc = pos_class(i);
        let mut mag = if i == eob - 1 {
            d.decode_symbol(&mut cdfs.last[pc])? as u32 + 1
        } else {
            let nc = nbr_ctx(&mags, w, h, p / w, p % w);
            d.decode_symbol(&mut cdfs.base[pc * NBR_CLASSES + nc])? as u32
        };
        if mag >= 3 {
            for _ in 0..BR_REPEATS {
                let sym = d.decode_symbol(&mut cdfs.br[pc.min(BR_CLASSES - 1)])? as u32;
                mag += sym;
                if sym < 3 {
                    break;
                }
            }
        }
        mags[p] = mag.min(3) as u8;
        levels[p] = mag as i32;
    }
    for &p in &scan[..eob] {
        let p = p as usize;
        if levels[p] != 0 {
            let neg = d.decode_bit()?;
            if levels[p] as u32 >= ESCAPE_LEVEL {
                let extra = d.decode_golomb(MAX_GOLOMB_PREFIX)?;
                levels[p] = (levels[p] as u32).saturating_add(extra).min(i32::MAX as u32) as i32;
            }
            if neg {
                levels[p] = -levels[p];
            }
        }
    }
    Ok(())
}

/// Reads what [`write_luma_mode`] wrote.
pub fn read_luma_mode(
    d: &mut RangeDecoder<'_>,
    ctx: &mut Contexts,
    cfg: &ToolConfig,
    rect: Rect,
    nb: LeafNeighbors,
    counts: &mut SyntaxCounts,
) -> Result<(IntraMode, u8), BitioError> {
    let base = d.decode_symbol(&mut ctx.y_mode[y_mode_ctx(nb.above, nb.left)])?;
    counts.y_mode += 1;
    let mut mode = IntraMode::from_base_index(base).expect("alphabet matches base modes");
    if luma_delta_coded(cfg, mode, rect, nb) {
        let nom = mode.nominal().unwrap() as usize;
        let s = d.decode_symbol(&mut ctx.y_delta[nom])?;
        mode = mode.with_delta(s as i8 - MAX_DELTA);
        counts.y_delta += 1;
    }
    let mut line = 0;
    if cfg.mrl && mode.is_directional() {
        line = d.decode_symbol(&mut ctx.ref_line[size_class(rect.w, rect.h)])? as u8;
        counts.ref_line += 1;
    }
    Ok((mode, line))
}

/// Reads what [`write_luma_tx`] wrote into `info`.
pub fn read_luma_tx(
    d: &mut RangeDecoder<'_>,
    ctx: &mut Contexts,
    cfg: &ToolConfig,
    rect: Rect,
    info: &mut LumaInfo,
    counts: &mut SyntaxCounts,
) -> Result<(), BitioError> {
    info.skip = d.decode_symbol(&mut ctx.skip[0][size_class(rect.w, rect.h)])? == 1;
    counts.skip += 1;
    info.tx_split = false;
    info.tx_type = TxType::DCT_DCT;
    info.nsdt = 0;
    if info.skip {
        return Ok(());
    }
    if tx_split_signaled(rect.w, rect.h) {
        info.tx_split = d.decode_symbol(&mut ctx.tx_split[usize::from(rect.w.max(rect.h) == 32)])? == 1;
        counts.tx_split += 1;
    }
    let (tw, th) = tu_dims(rect, info.tx_split);
    if tx_type_signaled(rect, info.tx_split) {
        let t = d.decode_symbol(&mut ctx.tx_type[size_class(tw, th)])?;
        info.tx_type = TxType::from_index(t).expect("alphabet matches transform types");
        counts.tx_type += 1;
    }
    if nsdt_signaled(cfg.nsdt, rect, info.tx_split, info.tx_type) {
        info.nsdt = d.decode_symbol(&mut ctx.nsdt[nsdt_context(info.mode, tw, th)])? as u8;
        counts.nsdt_index += 1;
    }
    Ok(())
}

/// Reads what [`write_chroma_info`] wrote.
pub fn read_chroma_info(
    d: &mut RangeDecoder<'_>,
    ctx: &mut Contexts,
    cfg: &ToolConfig,
    rect: Rect,
    luma_mode: IntraMode,
    counts: &mut SyntaxCounts,
) -> Result<ChromaInfo, BitioError> {
    let base = d.decode_symbol(&mut ctx.uv_mode[luma_mode.base_index()])?;
    counts.uv_mode += 1;
    let mut mode = IntraMode::from_base_index(base).expect("alphabet matches base modes");
    if let Some(nom) = mode.nominal() {
        if allows_delta(rect.w / 2, rect.h / 2) {
            let c = uv_delta_ctx(cfg, luma_mode, nom);
            let s = d.decode_symbol(&mut ctx.uv_delta[nom as usize][c])?;
            mode = mode.with_delta(s as i8 - MAX_DELTA);
            if cfg.imc {
                counts.uv_delta_imc_ctx += 1;
            } else {
                counts.uv_delta += 1;
            }
        }
    }
    let skip = d.decode_symbol(&mut ctx.skip[1][size_class(rect.w / 2, rect.h / 2)])? == 1;
    counts.skip += 1;
    Ok(ChromaInfo { mode, skip })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitio::{BitCounter, RangeEncoder};
    use rand::{Rng, SeedableRng};

    #[test]
    fn eob_binning() {
        assert_eq!(eob_symbol(0), (0, 0, 0));
        assert_eq!(eob_symbol(2), (2, 0, 0));
        assert_eq!(eob_symbol(3), (3, 0, 1));
        assert_eq!(eob_symbol(4), (3, 1, 1));
        assert_eq!(eob_symbol(5), (4, 0, 2));
        assert_eq!(eob_symbol(16), (5, 7, 3));
        assert_eq!(eob_symbol(1024), (11, 511, 9));
    }

    #[test]
    fn coefficient_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for &(w, h) in &[(4, 4), (8, 4), (4, 16), (16, 16), (32, 32), (32, 8)] {
            for density in [0.0, 0.05, 0.5, 1.0] {
                let levels: Vec<i32> = (0..w * h)
                    .map(|_| {
                        if rng.gen_bool(density) {
                            let m = if rng.gen_bool(0.1) { rng.gen_range(1..5000) } else { rng.gen_range(1..6) };
                            if rng.gen() { m } else { -m }
                        } else {
                            0
                        }
                    })
                    .collect();
                let mut enc = RangeEncoder::new();
                let mut cdfs = CoeffCdfs::default();
                let mut est = BitCounter::new();
                write_coeffs(&mut est, &mut cdfs.clone(), &levels, w, h);
                write_coeffs(&mut enc, &mut cdfs, &levels, w, h);
                let bytes = enc.finish();
                assert!(est.bits > 0.0);
                let mut dec = RangeDecoder::new(&bytes).unwrap();
                let mut back = vec![0; w * h];
                read_coeffs(&mut dec, &mut CoeffCdfs::default(), &mut back, w, h).unwrap();
                assert_eq!(back, levels);
            }
        }
    }
}
