//! Recursive block partitioning with semi-decoupled luma/chroma trees.
//!
//! Both trees are expressed in luma sample units and luma depth levels.
//! Nodes at depth below `shared_depth` carry the luma pattern in the chroma
//! tree; deeper chroma nodes are signaled independently. Chroma leaves are
//! never smaller than 8x8 luma (4x4 chroma); where the luma pattern would
//! break that limit the chroma node stays unsplit.

use crate::bitio::{BitioError, Cdf, RangeDecoder, SymbolSink};

pub const SB_SIZE: usize = 64;
pub const MIN_LUMA_BLOCK: usize = 4;
pub const MIN_CHROMA_BLOCK_LUMA: usize = 8;
/// `shared_depth` value for a fully shared tree.
pub const FULLY_SHARED: u8 = u8::MAX;
/// Depths that may carry a coded pattern symbol (node sizes 64..8).
pub const CODED_DEPTHS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    None,
    Split,
    Horz,
    Vert,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::None, Pattern::Split, Pattern::Horz, Pattern::Vert];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaneKind {
    Luma,
    Chroma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    pub fn inside(&self, fw: usize, fh: usize) -> bool {
        self.x + self.w <= fw && self.y + self.h <= fh
    }

    pub fn intersects_frame(&self, fw: usize, fh: usize) -> bool {
        self.x < fw && self.y < fh
    }

    /// Child rectangles of a pattern (empty for `None`).
    pub fn split(&self, p: Pattern) -> Vec<Rect> {
        let (hw, hh) = (self.w / 2, self.h / 2);
        let (x, y) = (self.x, self.y);
        match p {
            Pattern::None => vec![],
            Pattern::Split => vec![
                Rect::new(x, y, hw, hh),
                Rect::new(x + hw, y, hw, hh),
                Rect::new(x, y + hh, hw, hh),
                Rect::new(x + hw, y + hh, hw, hh),
            ],
            Pattern::Horz => vec![Rect::new(x, y, self.w, hh), Rect::new(x, y + hh, self.w, hh)],
            Pattern::Vert => vec![Rect::new(x, y, hw, self.h), Rect::new(x + hw, y, hw, self.h)],
        }
    }
}

fn pattern_fits(rect: Rect, p: Pattern, min: usize) -> bool {
    match p {
        Pattern::None => true,
        Pattern::Split => rect.w / 2 >= min && rect.h / 2 >= min,
        Pattern::Horz => rect.h / 2 >= min,
        Pattern::Vert => rect.w / 2 >= min,
    }
}

/// Patterns selectable at a square node.
///
/// Nodes reaching past the frame are forced to split. Chroma nodes above
/// `shared_depth` follow `luma_pattern` when chroma minimum sizes allow it
/// and stay unsplit otherwise.
pub fn legal_patterns(
    rect: Rect,
    kind: PlaneKind,
    depth: u8,
    shared_depth: u8,
    luma_pattern: Option<Pattern>,
    frame_w: usize,
    frame_h: usize,
) -> Vec<Pattern> {
    if !rect.inside(frame_w, frame_h) {
        return vec![Pattern::Split];
    }
    let min = match kind {
        PlaneKind::Luma => MIN_LUMA_BLOCK,
        PlaneKind::Chroma => MIN_CHROMA_BLOCK_LUMA,
    };
    if kind == PlaneKind::Chroma && depth < shared_depth {
        let p = luma_pattern.unwrap_or(Pattern::None);
        return vec![if pattern_fits(rect, p, min) { p } else { Pattern::None }];
    }
    Pattern::ALL.into_iter().filter(|&p| pattern_fits(rect, p, min)).collect()
}

/// One node of a partition tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionNode {
    pub rect: Rect,
    pub pattern: Pattern,
    pub depth: u8,
    /// In-frame children; `HORZ`/`VERT` children are always leaves.
    pub children: Vec<PartitionNode>,
}

impl PartitionNode {
    pub fn leaf(rect: Rect, depth: u8) -> Self {
        PartitionNode { rect, pattern: Pattern::None, depth, children: vec![] }
    }

    pub fn is_leaf(&self) -> bool {
        self.pattern == Pattern::None
    }

    /// Leaf rectangles in coding order.
    pub fn leaves(&self) -> Vec<Rect> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Rect>) {
        if self.is_leaf() {
            out.push(self.rect);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// The leaf containing a luma sample.
    pub fn leaf_at(&self, px: usize, py: usize) -> Option<&PartitionNode> {
        if !self.rect.contains(px, py) {
            return None;
        }
        if self.is_leaf() {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.leaf_at(px, py))
    }

    /// Node with exactly this rectangle, if present.
    pub fn find(&self, rect: Rect) -> Option<&PartitionNode> {
        if self.rect == rect {
            return Some(self);
        }
        if !self.rect.contains(rect.x, rect.y) {
            return None;
        }
        self.children.iter().find_map(|c| c.find(rect))
    }

    /// Node count including self.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }
}

/// The luma leaf containing luma sample `(2 cx, 2 cy)` for a chroma leaf
/// whose top-left chroma sample is `(cx, cy)`.
pub fn colocated_luma_leaf(luma_root: &PartitionNode, cx: usize, cy: usize) -> Option<&PartitionNode> {
    luma_root.leaf_at(2 * cx, 2 * cy)
}

/// Luma and chroma trees of one superblock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpTree {
    pub luma: PartitionNode,
    pub chroma: PartitionNode,
    pub shared_depth: u8,
}

/// Builds a tree top-down from a decision callback; the callback sees the
/// legal set and is only consulted when more than one pattern is legal.
pub fn build_tree<E>(
    rect: Rect,
    depth: u8,
    kind: PlaneKind,
    shared_depth: u8,
    luma: Option<&PartitionNode>,
    frame: (usize, usize),
    choose: &mut impl FnMut(PlaneKind, Rect, u8, &[Pattern]) -> Result<Pattern, E>,
) -> Result<PartitionNode, E> {
    let luma_node = luma.and_then(|l| l.find(rect));
    let legal = legal_patterns(
        rect,
        kind,
        depth,
        shared_depth,
        luma_node.map(|n| n.pattern),
        frame.0,
        frame.1,
    );
    let pattern = if legal.len() == 1 { legal[0] } else { choose(kind, rect, depth, &legal)? };
    let mut children = Vec::new();
    for c in rect.split(pattern) {
        if !c.intersects_frame(frame.0, frame.1) {
            continue;
        }
        children.push(if pattern == Pattern::Split {
            build_tree(c, depth + 1, kind, shared_depth, luma, frame, choose)?
        } else {
            PartitionNode::leaf(c, depth + 1)
        });
    }
    Ok(PartitionNode { rect, pattern, depth, children })
}

impl SdpTree {
    /// Builds both trees of the superblock at `origin`.
    pub fn build<E>(
        origin: (usize, usize),
        shared_depth: u8,
        frame: (usize, usize),
        choose: &mut impl FnMut(PlaneKind, Rect, u8, &[Pattern]) -> Result<Pattern, E>,
    ) -> Result<SdpTree, E> {
        let root = Rect::new(origin.0, origin.1, SB_SIZE, SB_SIZE);
        let luma = build_tree(root, 0, PlaneKind::Luma, shared_depth, None, frame, choose)?;
        let chroma =
            build_tree(root, 0, PlaneKind::Chroma, shared_depth, Some(&luma), frame, choose)?;
        Ok(SdpTree { luma, chroma, shared_depth })
    }

    /// Structural validity: legal patterns everywhere, the shared-depth
    /// constraint, and exact tiling of the in-frame part of the superblock.
    pub fn is_valid(&self, frame_w: usize, frame_h: usize) -> bool {
        let ok = |root: &PartitionNode, kind| {
            node_valid(root, kind, self.shared_depth, &self.luma, frame_w, frame_h)
                && tiles(root, frame_w, frame_h)
        };
        ok(&self.luma, PlaneKind::Luma) && ok(&self.chroma, PlaneKind::Chroma)
    }
}

fn node_valid(
    n: &PartitionNode,
    kind: PlaneKind,
    shared: u8,
    luma: &PartitionNode,
    fw: usize,
    fh: usize,
) -> bool {
    let lp = luma.find(n.rect).map(|l| l.pattern);
    if !legal_patterns(n.rect, kind, n.depth, shared, lp, fw, fh).contains(&n.pattern) {
        return false;
    }
    let expected: Vec<Rect> =
        n.rect.split(n.pattern).into_iter().filter(|c| c.intersects_frame(fw, fh)).collect();
    if expected.len() != n.children.len() {
        return false;
    }
    n.children.iter().zip(&expected).all(|(c, r)| {
        c.rect == *r
            && c.depth == n.depth + 1
            && if n.pattern == Pattern::Split {
                node_valid(c, kind, shared, luma, fw, fh)
            } else {
                c.is_leaf() && c.children.is_empty()
            }
    })
}

fn tiles(root: &PartitionNode, fw: usize, fh: usize) -> bool {
    let r = root.rect;
    let (w, h) = ((fw.min(r.x + r.w)).saturating_sub(r.x), (fh.min(r.y + r.h)).saturating_sub(r.y));
    let mut cover = vec![0u8; w * h];
    for leaf in root.leaves() {
        if !leaf.inside(fw, fh) {
            return false;
        }
        for y in leaf.y..leaf.y + leaf.h {
            for x in leaf.x..leaf.x + leaf.w {
                cover[(y - r.y) * w + (x - r.x)] += 1;
            }
        }
    }
    cover.iter().all(|&c| c == 1)
}

/// Adaptive models for pattern symbols, by plane kind and depth.
#[derive(Clone, Debug)]
pub struct PartitionCdfs {
    cdfs: [[Cdf; CODED_DEPTHS]; 2],
}

impl Default for PartitionCdfs {
    fn default() -> Self {
        PartitionCdfs { cdfs: [[Cdf::uniform(4); CODED_DEPTHS]; 2] }
    }
}

impl PartitionCdfs {
    pub fn cdf(&mut self, kind: PlaneKind, depth: u8) -> &mut Cdf {
        &mut self.cdfs[kind as usize][(depth as usize).min(CODED_DEPTHS - 1)]
    }
}

/// Symbol counts written by [`serialize_tree`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TreeSymbols {
    pub luma: usize,
    pub chroma: usize,
}

fn write_node<S: SymbolSink>(
    sink: &mut S,
    cdfs: &mut PartitionCdfs,
    n: &PartitionNode,
    kind: PlaneKind,
    shared: u8,
    luma: &PartitionNode,
    frame: (usize, usize),
    count: &mut usize,
) {
    let lp = luma.find(n.rect).map(|l| l.pattern);
    let legal = legal_patterns(n.rect, kind, n.depth, shared, lp, frame.0, frame.1);
    if legal.len() > 1 {
        sink.symbol(cdfs.cdf(kind, n.depth), n.pattern.index());
        *count += 1;
    }
    if n.pattern == Pattern::Split {
        for c in &n.children {
            write_node(sink, cdfs, c, kind, shared, luma, frame, count);
        }
    }
}

/// Writes the luma tree, then the chroma tree; inferred patterns are not
/// coded.
pub fn serialize_tree<S: SymbolSink>(
    sink: &mut S,
    cdfs: &mut PartitionCdfs,
    tree: &SdpTree,
    frame: (usize, usize),
) -> TreeSymbols {
    let mut s = TreeSymbols::default();
    let sd = tree.shared_depth;
    write_node(sink, cdfs, &tree.luma, PlaneKind::Luma, sd, &tree.luma, frame, &mut s.luma);
    write_node(sink, cdfs, &tree.chroma, PlaneKind::Chroma, sd, &tree.luma, frame, &mut s.chroma);
    s
}

/// Reads the trees of the superblock at `origin`.
pub fn parse_tree(
    dec: &mut RangeDecoder<'_>,
    cdfs: &mut PartitionCdfs,
    origin: (usize, usize),
    shared_depth: u8,
    frame: (usize, usize),
) -> Result<SdpTree, BitioError> {
    SdpTree::build(origin, shared_depth, frame, &mut |kind, _rect, depth, legal| {
        let s = dec.decode_symbol(cdfs.cdf(kind, depth))?;
        // All four patterns are legal whenever a symbol is coded.
        debug_assert_eq!(legal.len(), 4);
        Ok(Pattern::ALL[s])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitio::RangeEncoder;

    fn fixed_tree(shared: u8, frame: (usize, usize)) -> SdpTree {
        let mut i = 0usize;
        SdpTree::build::<()>((0, 0), shared, frame, &mut |_, _, _, legal| {
            i += 1;
            Ok(legal[(i * 7) % legal.len()])
        })
        .unwrap()
    }

    #[test]
    fn legal_sets() {
        let r = Rect::new(0, 0, 64, 64);
        let got = legal_patterns(r, PlaneKind::Chroma, 0, 1, Some(Pattern::Split), 64, 64);
        assert_eq!(got, vec![Pattern::Split]);
        let four = Rect::new(0, 0, 4, 4);
        assert_eq!(legal_patterns(four, PlaneKind::Luma, 4, 1, None, 64, 64), vec![Pattern::None]);
        let r32 = Rect::new(0, 0, 32, 32);
        let got = legal_patterns(r32, PlaneKind::Chroma, 1, 1, Some(Pattern::None), 64, 64);
        assert_eq!(got, Pattern::ALL.to_vec());
        let r8 = Rect::new(0, 0, 8, 8);
        assert_eq!(legal_patterns(r8, PlaneKind::Chroma, 3, 0, None, 64, 64), vec![Pattern::None]);
        let got = legal_patterns(r8, PlaneKind::Chroma, 3, 9, Some(Pattern::Split), 64, 64);
        assert_eq!(got, vec![Pattern::None]);
        let edge = Rect::new(0, 0, 64, 64);
        assert_eq!(legal_patterns(edge, PlaneKind::Luma, 0, 1, None, 40, 64), vec![Pattern::Split]);
    }

    #[test]
    fn colocation() {
        let t = fixed_tree(1, (64, 64));
        assert!(colocated_luma_leaf(&t.luma, 0, 0).unwrap().rect.contains(0, 0));
        assert!(colocated_luma_leaf(&t.luma, 8, 4).unwrap().rect.contains(16, 8));
    }

    #[test]
    fn fully_shared_chroma_mirrors_luma() {
        let t = fixed_tree(FULLY_SHARED, (64, 64));
        for leaf in t.chroma.leaves() {
            let l = colocated_luma_leaf(&t.luma, leaf.x / 2, leaf.y / 2).unwrap();
            if leaf.w >= 16 || l.rect.w >= 8 && l.rect.h >= 8 {
                assert_eq!(l.rect, leaf);
            }
        }
        let mut enc = RangeEncoder::new();
        let s = serialize_tree(&mut enc, &mut PartitionCdfs::default(), &t, (64, 64));
        assert_eq!(s.chroma, 0);
        assert!(s.luma > 0);
    }

    #[test]
    fn independent_chroma_is_coded() {
        let t = fixed_tree(0, (64, 64));
        let mut enc = RangeEncoder::new();
        let s = serialize_tree(&mut enc, &mut PartitionCdfs::default(), &t, (64, 64));
        assert!(s.chroma > 0);
    }

    #[test]
    fn round_trip_at_frame_edge() {
        for shared in [0, 1, 2, FULLY_SHARED] {
            let frame = (40, 24);
            let t = fixed_tree(shared, frame);
            assert!(t.is_valid(frame.0, frame.1));
            let mut enc = RangeEncoder::new();
            serialize_tree(&mut enc, &mut PartitionCdfs::default(), &t, frame);
            let bytes = enc.finish();
            let mut dec = RangeDecoder::new(&bytes).unwrap();
            let back = parse_tree(&mut dec, &mut PartitionCdfs::default(), (0, 0), shared, frame);
            assert_eq!(back.unwrap(), t);
        }
    }
}
