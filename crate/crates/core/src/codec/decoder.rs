//! Single-pass decoder.

use super::block::{chroma_tu_params, luma_tu_params, ChromaInfo, FrameState, LumaInfo, TuCoder, MAX_TX};
use super::contexts::Contexts;
use super::header::FrameHeader;
use super::syntax::{read_chroma_info, read_coeffs, read_luma_mode, read_luma_tx, LeafNeighbors, SyntaxCounts};
use super::{CodecError, ToolConfig};
use crate::bitio::{BitCounter, BitioError, RangeDecoder};
use crate::ccso::apply_ccso;
use crate::frame::{Frame, Plane};
use crate::intra::IntraMode;
use crate::partition::{parse_tree, serialize_tree, PartitionCdfs, Rect, SdpTree, SB_SIZE};
use crate::quant::QuantParams;
use crate::transform::TxType;

/// Tools a decoder instance accepts; streams using others are rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderCaps {
    pub tools: u8,
}

impl DecoderCaps {
    pub fn all() -> Self {
        DecoderCaps { tools: 0x3f }
    }

    /// Baseline decoder without any tool.
    pub fn baseline() -> Self {
        DecoderCaps { tools: 0 }
    }
}

impl Default for DecoderCaps {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Clone, Debug)]
pub struct DecodedFrame {
    pub frame: Frame,
    pub header: FrameHeader,
    pub counts: SyntaxCounts,
    /// Every decoded luma leaf with its coding decisions, in decoding order.
    pub luma_leaves: Vec<(Rect, LumaInfo)>,
}

/// Decodes a stream with every tool available.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, CodecError> {
    decode_frame_with(bytes, DecoderCaps::all()).map(|d| d.frame)
}

/// Decodes a stream, rejecting tools outside `caps`.
pub fn decode_frame_with(bytes: &[u8], caps: DecoderCaps) -> Result<DecodedFrame, CodecError> {
    let (mut header, payload, base) = FrameHeader::parse(bytes)?;
    if header.tools & !caps.tools != 0 {
        return Err(CodecError::Unsupported { tools: header.tools & !caps.tools });
    }
    let err = |e: BitioError| CodecError::from_bitio(e, base);
    let mut cfg = ToolConfig::from_bitmap(header.tools, header.qp);
    cfg.shared_depth = header.shared_depth;
    let (w, h) = (header.width, header.height);
    let (pw, ph) = (w.next_multiple_of(8), h.next_multiple_of(8));
    let mut dec = RangeDecoder::new(payload).map_err(err)?;
    let mut ctx = Contexts::default();
    let mut counts = SyntaxCounts::default();
    let mut luma_leaves = Vec::new();
    let mut state = FrameState::new(pw, ph);
    let tu = TuCoder { quant: QuantParams::new(cfg.qp), ept: cfg.ept };
    let shared = cfg.effective_shared_depth();
    let mut pred = [0u8; MAX_TX * MAX_TX];
    let mut levels = [0i32; MAX_TX * MAX_TX];

    for sy in (0..ph).step_by(SB_SIZE) {
        for sx in (0..pw).step_by(SB_SIZE) {
            let tree = parse_tree(&mut dec, &mut ctx.partition, (sx, sy), shared, (pw, ph)).map_err(err)?;
            count_patterns(&tree, (pw, ph), &mut counts);
            for leaf in tree.luma.leaves() {
                let (above, left) = state.neighbor_modes(leaf);
                let nb = LeafNeighbors { above, left };
                let (mode, line) = read_luma_mode(&mut dec, &mut ctx, &cfg, leaf, nb, &mut counts).map_err(err)?;
                let mut info = LumaInfo { mode, ref_line: line, skip: false, tx_split: false, tx_type: TxType::DCT_DCT, nsdt: 0 };
                read_luma_tx(&mut dec, &mut ctx, &cfg, leaf, &mut info, &mut counts).map_err(err)?;
                for p in luma_tu_params(leaf, &info) {
                    let n = p.w * p.h;
                    let lv = if info.skip {
                        None
                    } else {
                        read_coeffs(&mut dec, &mut ctx.coeff[0], &mut levels, p.w, p.h).map_err(err)?;
                        counts.coeff_units += 1;
                        Some(&levels[..n])
                    };
                    tu.predict(&state, &p, &mut pred[..n]);
                    tu.reconstruct(&mut state, &p, &pred[..n], lv);
                }
                state.set_modes(leaf, mode);
                luma_leaves.push((leaf, info));
            }
            for leaf in tree.chroma.leaves() {
                let lm = state.mode_at(leaf.x as isize, leaf.y as isize).unwrap_or(IntraMode::Dc);
                let info: ChromaInfo =
                    read_chroma_info(&mut dec, &mut ctx, &cfg, leaf, lm, &mut counts).map_err(err)?;
                for plane in 1..3 {
                    let p = chroma_tu_params(leaf, &info, plane);
                    let n = p.w * p.h;
                    let lv = if info.skip {
                        None
                    } else {
                        read_coeffs(&mut dec, &mut ctx.coeff[1], &mut levels, p.w, p.h).map_err(err)?;
                        counts.coeff_units += 1;
                        Some(&levels[..n])
                    };
                    tu.predict(&state, &p, &mut pred[..n]);
                    tu.reconstruct(&mut state, &p, &pred[..n], lv);
                }
            }
        }
    }

    let [py, pcb, pcr] = &state.planes;
    let (cw, ch) = (crate::frame::chroma_dim(w), crate::frame::chroma_dim(h));
    let y = py.cropped(w, h);
    let mut chroma: [Plane; 2] = [pcb.cropped(cw, ch), pcr.cropped(cw, ch)];
    if let Some(luts) = header.ccso.as_mut() {
        for (c, lut) in luts.iter_mut().enumerate() {
            counts.ccso_sections += 1;
            if lut.enabled {
                for f in lut.block_flags.iter_mut() {
                    *f = dec.decode_symbol(&mut ctx.ccso_block[c]).map_err(err)? == 1;
                    counts.ccso_block_flags += 1;
                }
                chroma[c] = apply_ccso(&chroma[c], &y, lut);
            }
        }
    }
    let [cb, cr] = chroma;
    let frame = Frame::from_planes(y, cb, cr).map_err(|e| CodecError::InvalidFrame(e.to_string()))?;
    Ok(DecodedFrame { frame, header, counts, luma_leaves })
}

fn count_patterns(tree: &SdpTree, frame: (usize, usize), counts: &mut SyntaxCounts) {
    let mut sink = BitCounter::new();
    let ts = serialize_tree(&mut sink, &mut PartitionCdfs::default(), tree, frame);
    counts.partition_luma += ts.luma;
    counts.partition_chroma += ts.chroma;
}
