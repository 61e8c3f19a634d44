//! Block-level state and the transform-unit reconstruction path shared by
//! the encoder and the decoder.

use crate::frame::Plane;
use crate::intra::{build_ref_samples, predict, DecodedMap, IntraMode};
use crate::partition::Rect;
use crate::quant::QuantParams;
use crate::transform::kernels::select_primary_kernels;
use crate::transform::nsdt::{nsdt_apply_forward, nsdt_apply_inverse, nsdt_context, NsdtKernelSet};
use crate::transform::{forward_tx2d, inverse_tx2d, TxKind, TxType};

/// Largest transform unit side.
pub const MAX_TX: usize = 32;

/// Decisions of one luma coding block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LumaInfo {
    pub mode: IntraMode,
    pub ref_line: u8,
    pub skip: bool,
    pub tx_split: bool,
    pub tx_type: TxType,
    pub nsdt: u8,
}

impl LumaInfo {
    pub fn new(mode: IntraMode, ref_line: u8) -> Self {
        LumaInfo { mode, ref_line, skip: false, tx_split: false, tx_type: TxType::DCT_DCT, nsdt: 0 }
    }
}

/// Decisions of one chroma coding block (shared by Cb and Cr).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChromaInfo {
    pub mode: IntraMode,
    pub skip: bool,
}

/// Whether the one-level transform split flag is coded.
pub fn tx_split_signaled(w: usize, h: usize) -> bool {
    w.min(h) >= 16 && w.max(h) <= MAX_TX
}

/// Blocks larger than the largest transform always split.
pub fn tx_split_implicit(w: usize, h: usize) -> bool {
    w.max(h) > MAX_TX
}

/// Luma transform units of a block in coding order.
pub fn luma_tus(rect: Rect, split: bool) -> Vec<Rect> {
    if split || tx_split_implicit(rect.w, rect.h) {
        rect.split(crate::partition::Pattern::Split)
    } else {
        vec![rect]
    }
}

/// Whether the luma transform type is coded: only when every type is
/// valid for the block's transform units.
pub fn tx_type_signaled(rect: Rect, split: bool) -> bool {
    luma_tus(rect, split).iter().all(|t| t.w.max(t.h) < MAX_TX)
}

/// Whether the NSDT index is coded for a luma block.
pub fn nsdt_signaled(enabled: bool, rect: Rect, split: bool, tx: TxType) -> bool {
    enabled && !split && !tx_split_implicit(rect.w, rect.h) && !tx.has_idt()
}

/// Chroma transform type derived from the prediction mode.
pub fn chroma_tx_type(mode: IntraMode, w: usize, h: usize) -> TxType {
    let t = match mode {
        IntraMode::Dc => TxType::DCT_DCT,
        IntraMode::Paeth => TxType::ADST_ADST,
        IntraMode::Directional { nominal, .. } => match nominal {
            0 => TxType::DCT_DCT,
            1..=3 => TxType::ADST_DCT,
            4 => TxType::ADST_ADST,
            _ => TxType::DCT_ADST,
        },
    };
    if t.valid_for(w, h) {
        t
    } else {
        TxType::DCT_DCT
    }
}

/// Whether a transform type involves an ADST-family kernel.
pub fn uses_adst(t: TxType) -> bool {
    [t.vert, t.horz].iter().any(|k| matches!(k, TxKind::Adst | TxKind::FlipAdst))
}

/// Reconstructed planes, availability and luma modes of a padded frame.
#[derive(Clone, Debug)]
pub struct FrameState {
    pub planes: [Plane; 3],
    /// Luma and chroma availability.
    pub maps: [DecodedMap; 2],
    modes: Vec<Option<IntraMode>>,
    mode_w: usize,
}

impl FrameState {
    /// State for a padded luma size (multiples of 8).
    pub fn new(width: usize, height: usize) -> Self {
        let (cw, ch) = (width / 2, height / 2);
        FrameState {
            planes: [Plane::new(width, height, 0), Plane::new(cw, ch, 0), Plane::new(cw, ch, 0)],
            maps: [DecodedMap::new(width, height), DecodedMap::new(cw, ch)],
            modes: vec![None; (width / 4) * (height / 4)],
            mode_w: width / 4,
        }
    }

    pub fn map_index(plane: usize) -> usize {
        usize::from(plane > 0)
    }

    /// Luma mode covering luma sample `(x, y)` if reconstructed.
    pub fn mode_at(&self, x: isize, y: isize) -> Option<IntraMode> {
        if !self.maps[0].is_decoded(x, y) {
            return None;
        }
        self.modes[(y as usize / 4) * self.mode_w + x as usize / 4]
    }

    /// Above and left neighbor modes of a luma block.
    pub fn neighbor_modes(&self, rect: Rect) -> (Option<IntraMode>, Option<IntraMode>) {
        let (x, y) = (rect.x as isize, rect.y as isize);
        (self.mode_at(x, y - 1), self.mode_at(x - 1, y))
    }

    pub fn set_modes(&mut self, rect: Rect, mode: IntraMode) {
        for by in rect.y / 4..(rect.y + rect.h) / 4 {
            for bx in rect.x / 4..(rect.x + rect.w) / 4 {
                self.modes[by * self.mode_w + bx] = Some(mode);
            }
        }
    }

    pub fn modes_in(&self, rect: Rect) -> Vec<Option<IntraMode>> {
        let mut out = Vec::with_capacity(rect.w * rect.h / 16);
        for by in rect.y / 4..(rect.y + rect.h) / 4 {
            let r = by * self.mode_w;
            out.extend_from_slice(&self.modes[r + rect.x / 4..r + (rect.x + rect.w) / 4]);
        }
        out
    }

    pub fn restore_modes(&mut self, rect: Rect, saved: &[Option<IntraMode>]) {
        let n = rect.w / 4;
        for (i, by) in (rect.y / 4..(rect.y + rect.h) / 4).enumerate() {
            let r = by * self.mode_w + rect.x / 4;
            self.modes[r..r + n].copy_from_slice(&saved[i * n..(i + 1) * n]);
        }
    }
}

/// Saved samples, availability and modes of one luma-unit region.
#[derive(Clone, Debug)]
pub struct Snapshot {
    rect: Rect,
    samples: [Vec<u8>; 3],
    maps: [Vec<bool>; 2],
    modes: Vec<Option<IntraMode>>,
}

fn plane_rect(plane: usize, r: Rect) -> (usize, usize, usize, usize) {
    if plane == 0 {
        (r.x, r.y, r.w, r.h)
    } else {
        (r.x / 2, r.y / 2, r.w / 2, r.h / 2)
    }
}

impl FrameState {
    pub fn save(&self, rect: Rect) -> Snapshot {
        let samples = std::array::from_fn(|p| {
            let (x, y, w, h) = plane_rect(p, rect);
            let mut v = Vec::with_capacity(w * h);
            for r in y..y + h {
                v.extend_from_slice(&self.planes[p].row(r)[x..x + w]);
            }
            v
        });
        let maps = std::array::from_fn(|m| {
            let (x, y, w, h) = plane_rect(m, rect);
            self.maps[m].region(x, y, w, h)
        });
        Snapshot { rect, samples, maps, modes: self.modes_in(rect) }
    }

    pub fn restore(&mut self, s: &Snapshot) {
        for p in 0..3 {
            let (x, y, w, h) = plane_rect(p, s.rect);
            for r in 0..h {
                self.planes[p].row_mut(y + r)[x..x + w].copy_from_slice(&s.samples[p][r * w..(r + 1) * w]);
            }
        }
        for m in 0..2 {
            let (x, y, w, h) = plane_rect(m, s.rect);
            self.maps[m].set_region(x, y, w, h, &s.maps[m]);
        }
        self.restore_modes(s.rect, &s.modes);
    }

    /// Clears availability of a region in one plane group.
    pub fn clear(&mut self, map: usize, rect: Rect) {
        let (x, y, w, h) = plane_rect(map, rect);
        self.maps[map].set_rect(x, y, w, h, false);
    }
}

/// One transform unit in its plane's sample coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TuParams {
    pub plane: usize,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub mode: IntraMode,
    pub ref_line: u8,
    pub tx_type: TxType,
    pub nsdt: u8,
}

/// Transform units of a luma leaf.
pub fn luma_tu_params(rect: Rect, info: &LumaInfo) -> Vec<TuParams> {
    luma_tus(rect, info.tx_split)
        .into_iter()
        .map(|t| TuParams {
            plane: 0,
            x: t.x,
            y: t.y,
            w: t.w,
            h: t.h,
            mode: info.mode,
            ref_line: info.ref_line,
            tx_type: info.tx_type,
            nsdt: info.nsdt,
        })
        .collect()
}

/// The transform unit of one chroma component of a leaf (`rect` in luma
/// units).
pub fn chroma_tu_params(rect: Rect, info: &ChromaInfo, plane: usize) -> TuParams {
    let (w, h) = (rect.w / 2, rect.h / 2);
    TuParams {
        plane,
        x: rect.x / 2,
        y: rect.y / 2,
        w,
        h,
        mode: info.mode,
        ref_line: 0,
        tx_type: chroma_tx_type(info.mode, w, h),
        nsdt: 0,
    }
}

impl TuParams {
    pub fn nsdt_ctx(&self) -> usize {
        nsdt_context(self.mode, self.w, self.h)
    }
}

/// Scratch buffers and kernels of the reconstruction path.
#[derive(Clone, Copy, Debug)]
pub struct TuCoder {
    pub quant: QuantParams,
    pub ept: bool,
}

pub type TuBuf = [i32; MAX_TX * MAX_TX];

impl TuCoder {
    /// Intra prediction of a transform unit from the current state.
    pub fn predict(&self, state: &FrameState, p: &TuParams, out: &mut [u8]) {
        let map = &state.maps[FrameState::map_index(p.plane)];
        let refs =
            build_ref_samples(&state.planes[p.plane], map, p.x, p.y, p.w, p.h, p.ref_line as usize);
        predict(p.mode, &refs, out);
    }

    /// Residual to quantized levels (raster order).
    pub fn quantize(&self, residual: &[i32], p: &TuParams, levels: &mut [i32]) {
        let n = p.w * p.h;
        let (hk, vk) = select_primary_kernels(p.w, p.h, p.tx_type, self.ept)
            .expect("transform type validated by caller");
        let mut coeffs: TuBuf = [0; MAX_TX * MAX_TX];
        forward_tx2d(residual, &mut coeffs, hk, vk);
        if p.nsdt > 0 {
            let k = NsdtKernelSet::global().kernel(p.nsdt_ctx(), p.nsdt);
            nsdt_apply_forward(&mut coeffs[..n], p.w, p.h, k);
        }
        for (l, &c) in levels[..n].iter_mut().zip(&coeffs[..n]) {
            *l = self.quant.quantize(c);
        }
    }

    /// Writes `pred + inverse(levels)` into the state and marks the unit
    /// reconstructed. `levels = None` reconstructs the prediction alone.
    pub fn reconstruct(&self, state: &mut FrameState, p: &TuParams, pred: &[u8], levels: Option<&[i32]>) {
        let n = p.w * p.h;
        let mut resid: TuBuf = [0; MAX_TX * MAX_TX];
        if let Some(levels) = levels.filter(|l| l[..n].iter().any(|&v| v != 0)) {
            let mut coeffs: TuBuf = [0; MAX_TX * MAX_TX];
            for (c, &l) in coeffs[..n].iter_mut().zip(&levels[..n]) {
                *c = self.quant.dequantize(l);
            }
            if p.nsdt > 0 {
                let k = NsdtKernelSet::global().kernel(p.nsdt_ctx(), p.nsdt);
                nsdt_apply_inverse(&mut coeffs[..n], p.w, p.h, k);
            }
            let (hk, vk) = select_primary_kernels(p.w, p.h, p.tx_type, self.ept)
                .expect("transform type validated by caller");
            inverse_tx2d(&coeffs, &mut resid, hk, vk);
        }
        let plane = &mut state.planes[p.plane];
        for r in 0..p.h {
            let row = &mut plane.row_mut(p.y + r)[p.x..p.x + p.w];
            for c in 0..p.w {
                row[c] = (pred[r * p.w + c] as i32 + resid[r * p.w + c]).clamp(0, 255) as u8;
            }
        }
        state.maps[FrameState::map_index(p.plane)].mark(p.x, p.y, p.w, p.h);
    }
}
