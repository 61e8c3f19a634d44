//! Rate-distortion optimizing encoder.

use std::collections::HashMap;

use super::block::{
    chroma_tu_params, luma_tu_params, nsdt_signaled, tx_split_signaled, tx_type_signaled, uses_adst,
    ChromaInfo, FrameState, LumaInfo, TuCoder, TuParams, MAX_TX,
};
use super::contexts::Contexts;
use super::header::{FrameHeader, MAX_PIXELS};
use super::syntax::{
    chroma_mode_codable, luma_mode_codable, write_chroma_info, write_coeffs, write_luma_mode,
    write_luma_tx, LeafNeighbors, SyntaxCounts,
};
use super::{CodecError, Tool, ToolConfig};
use crate::bitio::{BitCounter, RangeEncoder, SymbolSink};
use crate::ccso::{apply_ccso, optimize_lut, CcsoLut};
use crate::frame::{Frame, Plane, QualityScore};
use crate::intra::{IntraMode, BASE_MODES, MAX_DELTA, MAX_REF_LINE};
use crate::partition::{legal_patterns, Pattern, PlaneKind, Rect, SdpTree, SB_SIZE, serialize_tree};
use crate::quant::QuantParams;
use crate::transform::kernels::select_primary_kernels;
use crate::transform::nsdt::NSDT_K;
use crate::transform::{forward_tx2d_float, scan_order, TxType};

/// Modes kept after the SATD pre-selection.
const STAGE1_KEEP: usize = 3;
/// Nominal directions refined with delta angles.
const DELTA_NOMINALS: usize = 2;
/// Directional modes tried on the outer reference lines.
const MRL_MODES: usize = 2;
/// Largest side for which horizontal and vertical splits are searched.
const MAX_HV_SEARCH: usize = 16;

/// How often each tool was selected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ToolHits {
    /// Chroma leaves that differ from every luma leaf.
    pub sdp_chroma_leaves: usize,
    pub mrl_blocks: usize,
    /// Luma leaves with a nonzero delta while IMC restricts deltas.
    pub imc_delta_blocks: usize,
    /// Transform units using an LGT kernel.
    pub ept_units: usize,
    pub nsdt_blocks: usize,
    pub ccso_blocks: usize,
}

#[derive(Clone, Debug)]
pub struct EncodeStats {
    pub bits: usize,
    pub quality: QualityScore,
    pub counts: SyntaxCounts,
    pub hits: ToolHits,
    /// Cb and Cr SSE before and after CCSO.
    pub chroma_sse_pre_ccso: [u64; 2],
    pub chroma_sse_post_ccso: [u64; 2],
    /// `SSE + lambda * bits` of every superblock from the final pass.
    pub superblock_costs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EncodeOutput {
    pub bitstream: Vec<u8>,
    pub recon: Frame,
    pub stats: EncodeStats,
}

/// Encodes one frame.
pub fn encode_frame(frame: &Frame, cfg: &ToolConfig) -> Result<EncodeOutput, CodecError> {
    let (w, h) = (frame.width(), frame.height());
    if w == 0 || h == 0 || w > u16::MAX as usize || h > u16::MAX as usize || w * h > MAX_PIXELS {
        return Err(CodecError::InvalidFrame(format!("unsupported dimensions {w}x{h}")));
    }
    let (src, pw, ph) = padded_source(frame);
    // A first pass trains the models; the second, coded pass estimates
    // rates with them.
    let trained = run_pass(cfg, &src, pw, ph, None, false).ctx;
    let Pass { enc, mut rc, mut ctx, mut counts, mut hits, superblock_costs } =
        run_pass(cfg, &src, pw, ph, Some(&trained), false);

    let crop = |p: usize, pl: &Plane| pl.cropped(frame.planes[p].width(), frame.planes[p].height());
    let recon_pre: [Plane; 3] = std::array::from_fn(|p| crop(p, &enc.state.planes[p]));
    let mut luts = None;
    let mut recon_planes = recon_pre.clone();
    let mut pre = [0u64; 2];
    let mut post = [0u64; 2];
    for c in 0..2 {
        pre[c] = frame.planes[c + 1].sse(&recon_pre[c + 1]);
        post[c] = pre[c];
    }
    if cfg.ccso {
        let mut pair: [CcsoLut; 2] = std::array::from_fn(|c| {
            optimize_lut(&frame.planes[c + 1], &recon_pre[c + 1], &recon_pre[0], enc.lambda)
        });
        for (c, lut) in pair.iter_mut().enumerate() {
            counts.ccso_sections += 1;
            if lut.enabled {
                for &f in &lut.block_flags {
                    rc.symbol(&mut ctx.ccso_block[c], f as usize);
                    counts.ccso_block_flags += 1;
                    hits.ccso_blocks += f as usize;
                }
                recon_planes[c + 1] = apply_ccso(&recon_pre[c + 1], &recon_pre[0], lut);
                post[c] = frame.planes[c + 1].sse(&recon_planes[c + 1]);
            }
        }
        luts = Some(pair);
    }
    let payload = rc.finish();
    let header = FrameHeader {
        width: w,
        height: h,
        qp: cfg.qp,
        tools: cfg.bitmap(),
        shared_depth: cfg.shared_depth,
        ccso: luts,
    };
    let bitstream = header.write(&payload);
    let [y, cb, cr] = recon_planes;
    let recon = Frame::from_planes(y, cb, cr).map_err(|e| CodecError::InvalidFrame(e.to_string()))?;
    let quality = QualityScore::measure(frame, &recon).map_err(|e| CodecError::InvalidFrame(e.to_string()))?;
    let stats = EncodeStats {
        bits: bitstream.len() * 8,
        quality,
        counts,
        hits,
        chroma_sse_pre_ccso: pre,
        chroma_sse_post_ccso: post,
        superblock_costs,
    };
    Ok(EncodeOutput { bitstream, recon, stats })
}

fn padded_source(frame: &Frame) -> ([Plane; 3], usize, usize) {
    let (pw, ph) = (frame.width().next_multiple_of(8), frame.height().next_multiple_of(8));
    let src = [
        frame.planes[0].padded(pw, ph),
        frame.planes[1].padded(pw / 2, ph / 2),
        frame.planes[2].padded(pw / 2, ph / 2),
    ];
    (src, pw, ph)
}

/// Low-frequency primary coefficients (first 16 in scan order, orthonormal
/// scale) of every coded luma unit eligible for NSDT but coded without it,
/// with its NSDT context.
pub fn nsdt_training_samples(frame: &Frame, cfg: &ToolConfig) -> Vec<(usize, [f64; NSDT_K])> {
    let (src, pw, ph) = padded_source(frame);
    let trained = run_pass(cfg, &src, pw, ph, None, false).ctx;
    run_pass(cfg, &src, pw, ph, Some(&trained), true).enc.nsdt_samples.unwrap_or_default()
}

/// Per-superblock costs of a search with and without one tool, from the same
/// reconstruction state and rate model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupersetCost {
    /// Search cost with the tool enabled.
    pub on: f64,
    /// Search cost with the tool disabled.
    pub off: f64,
    /// The tool-off decisions coded with the tool enabled (index 0 wherever
    /// the tool signals one). Only for MRL and NSDT, whose syntax extends
    /// the tool-off syntax without changing the partition.
    pub off_in_on_syntax: Option<f64>,
}

/// Search costs of every superblock with `tool` enabled, paired with the
/// search without it. The frame is coded with `cfg` plus `tool`.
pub fn superset_costs(frame: &Frame, cfg: &ToolConfig, tool: Tool) -> Vec<SupersetCost> {
    let cfg = cfg.with_tool(tool, true);
    let (src, pw, ph) = padded_source(frame);
    let trained = run_pass(&cfg, &src, pw, ph, None, false).ctx;
    let mut enc = Encoder::new(&cfg, src, pw, ph);
    enc.compare = Some((tool, Vec::new()));
    run_pass_with(enc, false, Some(&trained)).enc.compare.map(|c| c.1).unwrap_or_default()
}

struct Pass {
    enc: Encoder,
    rc: RangeEncoder,
    ctx: Contexts,
    counts: SyntaxCounts,
    hits: ToolHits,
    superblock_costs: Vec<f64>,
}

/// Searches and codes every superblock. Rates are estimated with
/// `rate_model` when given, else with the live models at each superblock.
fn run_pass(
    cfg: &ToolConfig,
    src: &[Plane; 3],
    pw: usize,
    ph: usize,
    rate_model: Option<&Contexts>,
    collect: bool,
) -> Pass {
    run_pass_with(Encoder::new(cfg, src.clone(), pw, ph), collect, rate_model)
}

fn run_pass_with(mut enc: Encoder, collect: bool, rate_model: Option<&Contexts>) -> Pass {
    let (pw, ph) = enc.frame;
    if collect {
        enc.nsdt_samples = Some(Vec::new());
    }
    let mut rc = RangeEncoder::new();
    let mut ctx = Contexts::default();
    let mut counts = SyntaxCounts::default();
    let mut hits = ToolHits::default();
    let mut superblock_costs = Vec::new();
    for sy in (0..ph).step_by(SB_SIZE) {
        for sx in (0..pw).step_by(SB_SIZE) {
            let model = rate_model.unwrap_or(&ctx).clone();
            let cost = enc.encode_superblock(sx, sy, model, &mut rc, &mut ctx, &mut counts, &mut hits);
            superblock_costs.push(cost);
        }
    }
    Pass { enc, rc, ctx, counts, hits, superblock_costs }
}

struct Encoder {
    cfg: ToolConfig,
    src: [Plane; 3],
    state: FrameState,
    tu: TuCoder,
    lambda: f64,
    sqrt_lambda: f64,
    shared: u8,
    frame: (usize, usize),
    luma_pat: HashMap<Rect, Pattern>,
    chroma_pat: HashMap<Rect, Pattern>,
    luma_leaf: HashMap<Rect, LumaInfo>,
    chroma_leaf: HashMap<Rect, ChromaInfo>,
    nsdt_samples: Option<Vec<(usize, [f64; NSDT_K])>>,
    /// Tool searched away at every superblock, with the costs.
    compare: Option<(Tool, Vec<SupersetCost>)>,
}

/// Reused buffers of one transform unit.
struct TuScratch {
    pred: [u8; MAX_TX * MAX_TX],
    resid: [i32; MAX_TX * MAX_TX],
    levels: [i32; MAX_TX * MAX_TX],
}

impl TuScratch {
    fn new() -> Self {
        TuScratch { pred: [0; MAX_TX * MAX_TX], resid: [0; MAX_TX * MAX_TX], levels: [0; MAX_TX * MAX_TX] }
    }
}

fn block_sse(a: &Plane, b: &Plane, x: usize, y: usize, w: usize, h: usize) -> u64 {
    let mut s = 0u64;
    for r in y..y + h {
        for (&p, &q) in a.row(r)[x..x + w].iter().zip(&b.row(r)[x..x + w]) {
            let d = p as i64 - q as i64;
            s += (d * d) as u64;
        }
    }
    s
}

/// Sum of absolute 4x4 Hadamard coefficients, halved.
fn satd(diff: &[i32], w: usize, h: usize) -> u64 {
    let mut total = 0u64;
    for by in (0..h).step_by(4) {
        for bx in (0..w).step_by(4) {
            let mut m = [[0i32; 4]; 4];
            for r in 0..4 {
                let row = &diff[(by + r) * w + bx..(by + r) * w + bx + 4];
                let (a, b) = (row[0] + row[3], row[0] - row[3]);
                let (c, d) = (row[1] + row[2], row[1] - row[2]);
                m[r] = [a + c, b + d, a - c, b - d];
            }
            for c in 0..4 {
                let (a, b) = (m[0][c] + m[3][c], m[0][c] - m[3][c]);
                let (e, d) = (m[1][c] + m[2][c], m[1][c] - m[2][c]);
                total += ((a + e).abs() + (b + d).abs() + (a - e).abs() + (b - d).abs()) as u64;
            }
        }
    }
    total / 2
}

impl Encoder {
    fn new(cfg: &ToolConfig, src: [Plane; 3], pw: usize, ph: usize) -> Self {
        let lambda = cfg.lambda();
        Encoder {
            cfg: *cfg,
            src,
            state: FrameState::new(pw, ph),
            tu: TuCoder { quant: QuantParams::new(cfg.qp), ept: cfg.ept },
            lambda,
            sqrt_lambda: lambda.sqrt(),
            shared: cfg.effective_shared_depth(),
            frame: (pw, ph),
            luma_pat: HashMap::new(),
            chroma_pat: HashMap::new(),
            luma_leaf: HashMap::new(),
            chroma_leaf: HashMap::new(),
            nsdt_samples: None,
            compare: None,
        }
    }

    fn set_config(&mut self, cfg: ToolConfig) {
        self.cfg = cfg;
        self.tu.ept = cfg.ept;
        self.shared = cfg.effective_shared_depth();
    }

    fn clear_decisions(&mut self) {
        self.luma_pat.clear();
        self.chroma_pat.clear();
        self.luma_leaf.clear();
        self.chroma_leaf.clear();
    }

    fn search_root(&mut self, ctx: &mut Contexts, root: Rect) -> f64 {
        if self.shared > 0 {
            self.search_joint(ctx, root, 0)
        } else {
            self.search_luma(ctx, root, 0) + self.search_chroma(ctx, root, 0)
        }
    }

    /// Searches, then codes one superblock; returns its final RD cost.
    fn encode_superblock(
        &mut self,
        sx: usize,
        sy: usize,
        mut frozen: Contexts,
        rc: &mut RangeEncoder,
        ctx: &mut Contexts,
        counts: &mut SyntaxCounts,
        hits: &mut ToolHits,
    ) -> f64 {
        let root = Rect::new(sx, sy, SB_SIZE, SB_SIZE);
        let clip = Rect::new(sx, sy, SB_SIZE.min(self.frame.0 - sx), SB_SIZE.min(self.frame.1 - sy));
        let before = self.state.save(clip);
        let without = self.compare.as_ref().map(|c| c.0);
        let off_cost = without.map(|tool| {
            let cfg = self.cfg;
            self.set_config(cfg.with_tool(tool, false));
            self.clear_decisions();
            let cost = self.search_root(&mut frozen, root);
            self.state.restore(&before);
            self.set_config(cfg);
            let extended = matches!(tool, Tool::Mrl | Tool::Nsdt).then(|| {
                let c = self.decisions_cost(&mut frozen, root);
                self.state.restore(&before);
                c
            });
            (cost, extended)
        });
        self.clear_decisions();
        let on_cost = self.search_root(&mut frozen, root);
        self.state.restore(&before);
        if let (Some((_, costs)), Some((off, extended))) = (self.compare.as_mut(), off_cost) {
            costs.push(SupersetCost { on: on_cost, off, off_in_on_syntax: extended });
        }

        let tree = self.build_tree(root);
        let start_bits = rc.bytes_so_far() * 8;
        let ts = serialize_tree(rc, &mut ctx.partition, &tree, self.frame);
        counts.partition_luma += ts.luma;
        counts.partition_chroma += ts.chroma;
        let mut sse = 0u64;
        let luma_leaves = tree.luma.leaves();
        for &leaf in &luma_leaves {
            let info = self.luma_leaf[&leaf];
            let nb = self.neighbors(leaf);
            if self.nsdt_samples.is_some() && info.nsdt == 0 && !info.skip {
                if let Some(sample) = self.nsdt_sample(leaf, &info) {
                    self.nsdt_samples.as_mut().unwrap().push(sample);
                }
            }
            sse += self.code_luma_leaf(rc, ctx, leaf, nb, &info, counts);
            hits.mrl_blocks += usize::from(info.ref_line > 0);
            hits.imc_delta_blocks += usize::from(self.cfg.imc && info.mode.delta() != 0);
            hits.nsdt_blocks += usize::from(info.nsdt > 0);
            if self.cfg.ept && !info.skip && uses_adst(info.tx_type) {
                hits.ept_units += luma_tu_params(leaf, &info).len();
            }
        }
        for leaf in tree.chroma.leaves() {
            let info = self.chroma_leaf[&leaf];
            let lm = self.colocated_mode(leaf);
            sse += self.code_chroma_leaf(rc, ctx, leaf, lm, &info, counts);
            hits.sdp_chroma_leaves += usize::from(self.cfg.sdp && !luma_leaves.contains(&leaf));
            if self.cfg.ept && !info.skip && uses_adst(chroma_tu_params(leaf, &info, 1).tx_type) {
                hits.ept_units += 2;
            }
        }
        let bits = (rc.bytes_so_far() * 8).saturating_sub(start_bits);
        sse as f64 + self.lambda * bits as f64
    }

    /// RD cost of coding the current decisions with the current
    /// configuration, estimated with `ctx`.
    fn decisions_cost(&mut self, ctx: &mut Contexts, root: Rect) -> f64 {
        let tree = self.build_tree(root);
        let mut bc = BitCounter::new();
        serialize_tree(&mut bc, &mut ctx.partition, &tree, self.frame);
        let mut counts = SyntaxCounts::default();
        let mut sse = 0u64;
        for leaf in tree.luma.leaves() {
            let info = self.luma_leaf[&leaf];
            let nb = self.neighbors(leaf);
            sse += self.code_luma_leaf(&mut bc, ctx, leaf, nb, &info, &mut counts);
        }
        for leaf in tree.chroma.leaves() {
            let info = self.chroma_leaf[&leaf];
            let lm = self.colocated_mode(leaf);
            sse += self.code_chroma_leaf(&mut bc, ctx, leaf, lm, &info, &mut counts);
        }
        sse as f64 + self.lambda * bc.bits as f64
    }

    fn nsdt_sample(&self, rect: Rect, info: &LumaInfo) -> Option<(usize, [f64; NSDT_K])> {
        if !nsdt_signaled(true, rect, info.tx_split, info.tx_type) {
            return None;
        }
        let p = luma_tu_params(rect, info)[0];
        let n = p.w * p.h;
        let mut pred = [0u8; MAX_TX * MAX_TX];
        self.tu.predict(&self.state, &p, &mut pred[..n]);
        let src = &self.src[0];
        let resid: Vec<f64> =
            (0..n).map(|k| src.get(p.x + k % p.w, p.y + k / p.w) as f64 - pred[k] as f64).collect();
        let (hk, vk) = select_primary_kernels(p.w, p.h, p.tx_type, self.cfg.ept).ok()?;
        let c = forward_tx2d_float(&resid, hk, vk);
        let scan = scan_order(p.w, p.h);
        Some((p.nsdt_ctx(), std::array::from_fn(|i| c[scan[i] as usize])))
    }

    fn build_tree(&self, root: Rect) -> SdpTree {
        let r: Result<SdpTree, ()> =
            SdpTree::build((root.x, root.y), self.shared, self.frame, &mut |kind, rect, _, _| {
                let map = match kind {
                    PlaneKind::Luma => &self.luma_pat,
                    PlaneKind::Chroma => &self.chroma_pat,
                };
                Ok(map[&rect])
            });
        r.expect("every searched node has a decision")
    }

    fn neighbors(&self, rect: Rect) -> LeafNeighbors {
        let (above, left) = self.state.neighbor_modes(rect);
        LeafNeighbors { above, left }
    }

    fn colocated_mode(&self, rect: Rect) -> IntraMode {
        self.state.mode_at(rect.x as isize, rect.y as isize).unwrap_or(IntraMode::Dc)
    }

    fn pattern_bits(&self, ctx: &mut Contexts, kind: PlaneKind, depth: u8, legal: &[Pattern], p: Pattern) -> f64 {
        if legal.len() > 1 {
            ctx.partition.cdf(kind, depth).cost(p.index()) as f64
        } else {
            0.0
        }
    }

    fn candidates(&self, rect: Rect, legal: &[Pattern]) -> Vec<Pattern> {
        legal
            .iter()
            .copied()
            .filter(|&p| !matches!(p, Pattern::Horz | Pattern::Vert) || rect.w <= MAX_HV_SEARCH)
            .collect()
    }

    fn children(&self, rect: Rect, p: Pattern) -> Vec<Rect> {
        rect.split(p).into_iter().filter(|c| c.intersects_frame(self.frame.0, self.frame.1)).collect()
    }

    fn region(&self, rect: Rect) -> Rect {
        Rect::new(
            rect.x,
            rect.y,
            rect.w.min(self.frame.0.saturating_sub(rect.x)),
            rect.h.min(self.frame.1.saturating_sub(rect.y)),
        )
    }

    /// Search above the shared depth: one pattern for both trees.
    fn search_joint(&mut self, ctx: &mut Contexts, rect: Rect, depth: u8) -> f64 {
        let (fw, fh) = self.frame;
        let legal = legal_patterns(rect, PlaneKind::Luma, depth, self.shared, None, fw, fh);
        let region = self.region(rect);
        let before = self.state.save(region);
        let mut best: Option<(f64, Pattern, Option<ChromaInfo>, crate::codec::block::Snapshot)> = None;
        for p in self.candidates(rect, &legal) {
            self.state.restore(&before);
            let mut cost = self.lambda * self.pattern_bits(ctx, PlaneKind::Luma, depth, &legal, p);
            let cp = legal_patterns(rect, PlaneKind::Chroma, depth, self.shared, Some(p), fw, fh)[0];
            let mut chroma_here = None;
            if p == Pattern::None {
                let (cl, li) = self.search_luma_leaf(ctx, rect);
                self.luma_leaf.insert(rect, li);
                let (cc, ci) = self.search_chroma_leaf(ctx, rect);
                chroma_here = Some(ci);
                cost += cl + cc;
            } else {
                for c in self.children(rect, p) {
                    cost += match (p, cp == p) {
                        (Pattern::Split, true) if depth + 1 < self.shared => self.search_joint(ctx, c, depth + 1),
                        (Pattern::Split, true) => {
                            self.search_luma(ctx, c, depth + 1) + self.search_chroma(ctx, c, depth + 1)
                        }
                        (Pattern::Split, false) => self.search_luma(ctx, c, depth + 1),
                        (_, both) => {
                            let (cl, li) = self.search_luma_leaf(ctx, c);
                            self.luma_leaf.insert(c, li);
                            let mut cost = cl;
                            if both {
                                let (cc, ci) = self.search_chroma_leaf(ctx, c);
                                self.chroma_leaf.insert(c, ci);
                                cost += cc;
                            }
                            cost
                        }
                    };
                }
                if cp == Pattern::None {
                    let (cc, ci) = self.search_chroma_leaf(ctx, rect);
                    chroma_here = Some(ci);
                    cost += cc;
                }
            }
            if best.as_ref().map_or(true, |b| cost < b.0) {
                best = Some((cost, p, chroma_here, self.state.save(region)));
            }
        }
        let (cost, p, ci, snap) = best.expect("at least one legal pattern");
        self.state.restore(&snap);
        self.luma_pat.insert(rect, p);
        if let Some(ci) = ci {
            self.chroma_leaf.insert(rect, ci);
        }
        cost
    }

    /// Luma-only search below the shared depth (or under an unsplit chroma
    /// block).
    fn search_luma(&mut self, ctx: &mut Contexts, rect: Rect, depth: u8) -> f64 {
        let (fw, fh) = self.frame;
        let legal = legal_patterns(rect, PlaneKind::Luma, depth, self.shared, None, fw, fh);
        let cands = self.candidates(rect, &legal);
        if cands == [Pattern::Split] {
            self.luma_pat.insert(rect, Pattern::Split);
            return self.children(rect, Pattern::Split).into_iter().map(|c| self.search_luma(ctx, c, depth + 1)).sum();
        }
        let region = self.region(rect);
        let before = self.state.save(region);
        let mut best: Option<(f64, Pattern, crate::codec::block::Snapshot)> = None;
        for p in cands {
            self.state.restore(&before);
            let mut cost = self.lambda * self.pattern_bits(ctx, PlaneKind::Luma, depth, &legal, p);
            if p == Pattern::None {
                let (cl, li) = self.search_luma_leaf(ctx, rect);
                self.luma_leaf.insert(rect, li);
                cost += cl;
            } else {
                for c in self.children(rect, p) {
                    if best.as_ref().is_some_and(|b| cost >= b.0) {
                        break;
                    }
                    cost += if p == Pattern::Split {
                        self.search_luma(ctx, c, depth + 1)
                    } else {
                        let (cl, li) = self.search_luma_leaf(ctx, c);
                        self.luma_leaf.insert(c, li);
                        cl
                    };
                }
            }
            if best.as_ref().map_or(true, |b| cost < b.0) {
                best = Some((cost, p, self.state.save(region)));
            }
        }
        let (cost, p, snap) = best.expect("at least one legal pattern");
        self.state.restore(&snap);
        self.luma_pat.insert(rect, p);
        cost
    }

    /// Chroma-only search below the shared depth.
    fn search_chroma(&mut self, ctx: &mut Contexts, rect: Rect, depth: u8) -> f64 {
        let (fw, fh) = self.frame;
        let lp = self.luma_pat.get(&rect).copied();
        let legal = legal_patterns(rect, PlaneKind::Chroma, depth, self.shared, lp, fw, fh);
        let cands = self.candidates(rect, &legal);
        if cands == [Pattern::Split] {
            self.chroma_pat.insert(rect, Pattern::Split);
            return self.children(rect, Pattern::Split).into_iter().map(|c| self.search_chroma(ctx, c, depth + 1)).sum();
        }
        let region = self.region(rect);
        let before = self.state.save(region);
        let mut best: Option<(f64, Pattern, crate::codec::block::Snapshot)> = None;
        for p in cands {
            self.state.restore(&before);
            let mut cost = self.lambda * self.pattern_bits(ctx, PlaneKind::Chroma, depth, &legal, p);
            if p == Pattern::None {
                let (cc, ci) = self.search_chroma_leaf(ctx, rect);
                self.chroma_leaf.insert(rect, ci);
                cost += cc;
            } else {
                for c in self.children(rect, p) {
                    if best.as_ref().is_some_and(|b| cost >= b.0) {
                        break;
                    }
                    cost += if p == Pattern::Split {
                        self.search_chroma(ctx, c, depth + 1)
                    } else {
                        let (cc, ci) = self.search_chroma_leaf(ctx, c);
                        self.chroma_leaf.insert(c, ci);
                        cc
                    };
                }
            }
            if best.as_ref().map_or(true, |b| cost < b.0) {
                best = Some((cost, p, self.state.save(region)));
            }
        }
        let (cost, p, snap) = best.expect("at least one legal pattern");
        self.state.restore(&snap);
        self.chroma_pat.insert(rect, p);
        cost
    }

    fn luma_mode_bits(&self, ctx: &mut Contexts, rect: Rect, nb: LeafNeighbors, mode: IntraMode, line: u8) -> f64 {
        let mut bc = BitCounter::new();
        write_luma_mode(&mut bc, ctx, &self.cfg, rect, nb, mode, line, &mut SyntaxCounts::default());
        bc.bits as f64
    }

    /// SATD of the luma prediction plus `sqrt(lambda)` times mode bits.
    fn luma_stage1(&self, ctx: &mut Contexts, rect: Rect, nb: LeafNeighbors, mode: IntraMode, line: u8) -> f64 {
        let info = LumaInfo::new(mode, line);
        let mut sc = TuScratch::new();
        let mut total = 0u64;
        for p in luma_tu_params(rect, &info) {
            total += self.tu_satd(&p, &mut sc);
        }
        total as f64 + self.sqrt_lambda * self.luma_mode_bits(ctx, rect, nb, mode, line)
    }

    fn tu_satd(&self, p: &TuParams, sc: &mut TuScratch) -> u64 {
        let n = p.w * p.h;
        self.tu.predict(&self.state, p, &mut sc.pred[..n]);
        let src = &self.src[p.plane];
        for r in 0..p.h {
            let row = &src.row(p.y + r)[p.x..p.x + p.w];
            for c in 0..p.w {
                sc.resid[r * p.w + c] = row[c] as i32 - sc.pred[r * p.w + c] as i32;
            }
        }
        satd(&sc.resid[..n], p.w, p.h)
    }

    /// Predicts, quantizes, codes and reconstructs one transform unit;
    /// returns its SSE.
    fn code_tu<S: SymbolSink>(
        &mut self,
        s: &mut S,
        ctx: &mut Contexts,
        p: &TuParams,
        skip: bool,
        counts: &mut SyntaxCounts,
    ) -> u64 {
        let mut sc = TuScratch::new();
        let n = p.w * p.h;
        self.tu.predict(&self.state, p, &mut sc.pred[..n]);
        if skip {
            self.tu.reconstruct(&mut self.state, p, &sc.pred[..n], None);
        } else {
            let src = &self.src[p.plane];
            for r in 0..p.h {
                let row = &src.row(p.y + r)[p.x..p.x + p.w];
                for c in 0..p.w {
                    sc.resid[r * p.w + c] = row[c] as i32 - sc.pred[r * p.w + c] as i32;
                }
            }
            self.tu.quantize(&sc.resid[..n], p, &mut sc.levels[..n]);
            write_coeffs(s, &mut ctx.coeff[usize::from(p.plane > 0)], &sc.levels[..n], p.w, p.h);
            counts.coeff_units += 1;
            self.tu.reconstruct(&mut self.state, p, &sc.pred[..n], Some(&sc.levels[..n]));
        }
        block_sse(&self.src[p.plane], &self.state.planes[p.plane], p.x, p.y, p.w, p.h)
    }

    /// Codes and reconstructs a luma leaf; returns its SSE.
    fn code_luma_leaf<S: SymbolSink>(
        &mut self,
        s: &mut S,
        ctx: &mut Contexts,
        rect: Rect,
        nb: LeafNeighbors,
        info: &LumaInfo,
        counts: &mut SyntaxCounts,
    ) -> u64 {
        self.state.clear(0, rect);
        write_luma_mode(s, ctx, &self.cfg, rect, nb, info.mode, info.ref_line, counts);
        write_luma_tx(s, ctx, &self.cfg, rect, info, counts);
        let mut sse = 0;
        for p in luma_tu_params(rect, info) {
            sse += self.code_tu(s, ctx, &p, info.skip, counts);
        }
        self.state.set_modes(rect, info.mode);
        sse
    }

    /// Codes and reconstructs a chroma leaf; returns its Cb + Cr SSE.
    fn code_chroma_leaf<S: SymbolSink>(
        &mut self,
        s: &mut S,
        ctx: &mut Contexts,
        rect: Rect,
        luma_mode: IntraMode,
        info: &ChromaInfo,
        counts: &mut SyntaxCounts,
    ) -> u64 {
        self.state.clear(1, rect);
        write_chroma_info(s, ctx, &self.cfg, rect, luma_mode, info, counts);
        let mut sse = 0;
        for plane in 1..3 {
            let p = chroma_tu_params(rect, info, plane);
            sse += self.code_tu(s, ctx, &p, info.skip, counts);
        }
        sse
    }

    fn rd_luma(&mut self, ctx: &mut Contexts, rect: Rect, nb: LeafNeighbors, info: &LumaInfo) -> f64 {
        let mut bc = BitCounter::new();
        let sse = self.code_luma_leaf(&mut bc, ctx, rect, nb, info, &mut SyntaxCounts::default());
        sse as f64 + self.lambda * bc.bits as f64
    }

    fn rd_chroma(&mut self, ctx: &mut Contexts, rect: Rect, lm: IntraMode, info: &ChromaInfo) -> f64 {
        let mut bc = BitCounter::new();
        let sse = self.code_chroma_leaf(&mut bc, ctx, rect, lm, info, &mut SyntaxCounts::default());
        sse as f64 + self.lambda * bc.bits as f64
    }

    /// Mode, reference line and transform decision of one luma leaf. Leaves
    /// the winner reconstructed.
    fn search_luma_leaf(&mut self, ctx: &mut Contexts, rect: Rect) -> (f64, LumaInfo) {
        self.state.clear(0, rect);
        let nb = self.neighbors(rect);
        let mut scored: Vec<(f64, IntraMode)> = (0..BASE_MODES)
            .map(|i| {
                let m = IntraMode::from_base_index(i).unwrap();
                (self.luma_stage1(ctx, rect, nb, m, 0), m)
            })
            .collect();
        sort_scored(&mut scored);
        let noms: Vec<IntraMode> =
            scored.iter().map(|s| s.1).filter(|m| m.is_directional()).take(DELTA_NOMINALS).collect();
        for m in noms {
            for d in -MAX_DELTA..=MAX_DELTA {
                let md = m.with_delta(d);
                if d != 0 && luma_mode_codable(&self.cfg, md, rect, nb) {
                    scored.push((self.luma_stage1(ctx, rect, nb, md, 0), md));
                }
            }
        }
        sort_scored(&mut scored);
        let mut cands: Vec<(IntraMode, u8)> = scored.iter().take(STAGE1_KEEP).map(|s| (s.1, 0)).collect();
        if self.cfg.mrl {
            let dirs: Vec<IntraMode> =
                scored.iter().map(|s| s.1).filter(|m| m.is_directional()).take(MRL_MODES).collect();
            let mut lines: Vec<(f64, (IntraMode, u8))> = Vec::new();
            for m in dirs {
                for line in 1..=MAX_REF_LINE as u8 {
                    lines.push((self.luma_stage1(ctx, rect, nb, m, line), (m, line)));
                }
            }
            lines.sort_by(|a, b| a.0.total_cmp(&b.0));
            cands.extend(lines.iter().take(MRL_MODES).map(|l| l.1));
        }

        let mut best = (f64::INFINITY, LumaInfo::new(IntraMode::Dc, 0));
        let consider = |enc: &mut Self, ctx: &mut Contexts, info: LumaInfo, best: &mut (f64, LumaInfo)| {
            let c = enc.rd_luma(ctx, rect, nb, &info);
            if c < best.0 {
                *best = (c, info);
            }
        };
        for &(mode, line) in &cands {
            let info = LumaInfo::new(mode, line);
            consider(self, ctx, info, &mut best);
            consider(self, ctx, LumaInfo { skip: true, ..info }, &mut best);
        }
        let base = LumaInfo { skip: false, ..best.1 };
        let splits: &[bool] = if tx_split_signaled(rect.w, rect.h) { &[false, true] } else { &[false] };
        let mut best_plain = (f64::INFINITY, base);
        for &split in splits {
            let types: &[TxType] =
                if tx_type_signaled(rect, split) { &TxType::INTRA_SET } else { &[TxType::DCT_DCT] };
            for &t in types {
                let info = LumaInfo { tx_split: split, tx_type: t, ..base };
                let c = self.rd_luma(ctx, rect, nb, &info);
                if c < best.0 {
                    best = (c, info);
                }
                if !split && c < best_plain.0 {
                    best_plain = (c, info);
                }
            }
        }
        let plain = best_plain.1;
        if nsdt_signaled(self.cfg.nsdt, rect, false, plain.tx_type) {
            for idx in 1..=2u8 {
                consider(self, ctx, LumaInfo { nsdt: idx, ..plain }, &mut best);
            }
        }
        let cost = self.rd_luma(ctx, rect, nb, &best.1);
        (cost, best.1)
    }

    fn chroma_stage1(&self, ctx: &mut Contexts, rect: Rect, lm: IntraMode, mode: IntraMode) -> f64 {
        let info = ChromaInfo { mode, skip: false };
        let mut sc = TuScratch::new();
        let satd: u64 = (1..3).map(|pl| self.tu_satd(&chroma_tu_params(rect, &info, pl), &mut sc)).sum();
        let mut bc = BitCounter::new();
        write_chroma_info(&mut bc, ctx, &self.cfg, rect, lm, &info, &mut SyntaxCounts::default());
        satd as f64 + self.sqrt_lambda * bc.bits as f64
    }

    /// Mode decision of one chroma leaf. Leaves the winner reconstructed.
    fn search_chroma_leaf(&mut self, ctx: &mut Contexts, rect: Rect) -> (f64, ChromaInfo) {
        self.state.clear(1, rect);
        let lm = self.colocated_mode(rect);
        let mut scored: Vec<(f64, IntraMode)> = (0..BASE_MODES)
            .map(|i| {
                let m = IntraMode::from_base_index(i).unwrap();
                (self.chroma_stage1(ctx, rect, lm, m), m)
            })
            .collect();
        sort_scored(&mut scored);
        let noms: Vec<IntraMode> =
            scored.iter().map(|s| s.1).filter(|m| m.is_directional()).take(DELTA_NOMINALS).collect();
        for m in noms {
            for d in -MAX_DELTA..=MAX_DELTA {
                let md = m.with_delta(d);
                if d != 0 && chroma_mode_codable(md, rect) {
                    scored.push((self.chroma_stage1(ctx, rect, lm, md), md));
                }
            }
        }
        sort_scored(&mut scored);
        let mut best = (f64::INFINITY, ChromaInfo { mode: IntraMode::Dc, skip: true });
        for &(_, mode) in scored.iter().take(STAGE1_KEEP) {
            for skip in [false, true] {
                let info = ChromaInfo { mode, skip };
                let c = self.rd_chroma(ctx, rect, lm, &info);
                if c < best.0 {
                    best = (c, info);
                }
            }
        }
        let cost = self.rd_chroma(ctx, rect, lm, &best.1);
        (cost, best.1)
    }
}

/// Stable ascending sort by cost.
fn sort_scored(v: &mut [(f64, IntraMode)]) {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satd_of_constant_difference() {
        let d = vec![3i32; 16];
        assert_eq!(satd(&d, 4, 4), 24);
        assert_eq!(satd(&[0; 64], 8, 8), 0);
    }
}
