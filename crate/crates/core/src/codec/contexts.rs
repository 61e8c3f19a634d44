//! Adaptive models of every syntax element.

use crate::bitio::Cdf;
use crate::intra::{IntraMode, BASE_MODES};
use crate::partition::PartitionCdfs;
use crate::transform::nsdt::{nsdt_mode_class, NSDT_CONTEXTS};
use crate::transform::TxType;

/// Transform unit sizes by `log2(w * h) - 4`.
pub const EOB_CLASSES: usize = 7;
pub const POS_CLASSES: usize = 5;
pub const NBR_CLASSES: usize = 5;
pub const BR_CLASSES: usize = 3;
/// Base-range symbols per coefficient before the Exp-Golomb escape.
pub const BR_REPEATS: usize = 4;
/// Magnitude at which the Exp-Golomb escape starts.
pub const ESCAPE_LEVEL: u32 = 3 + 3 * BR_REPEATS as u32;

/// Initial probability of index 0 for the reference line and NSDT index.
pub const TOOL_INDEX_P0: f64 = 0.75;

/// Coefficient models of one plane type.
#[derive(Clone, Debug)]
pub struct CoeffCdfs {
    pub eob: [Cdf; EOB_CLASSES],
    pub last: [Cdf; POS_CLASSES],
    pub base: [Cdf; POS_CLASSES * NBR_CLASSES],
    pub br: [Cdf; BR_CLASSES],
}

impl Default for CoeffCdfs {
    fn default() -> Self {
        CoeffCdfs {
            eob: std::array::from_fn(|i| Cdf::uniform(2 + 4 + i)),
            last: [Cdf::uniform(3); POS_CLASSES],
            base: [Cdf::uniform(4); POS_CLASSES * NBR_CLASSES],
            br: [Cdf::uniform(4); BR_CLASSES],
        }
    }
}

/// Every adaptive model of a frame.
#[derive(Clone, Debug)]
pub struct Contexts {
    pub partition: PartitionCdfs,
    /// By above and left mode class.
    pub y_mode: [Cdf; 25],
    /// By nominal direction.
    pub y_delta: [Cdf; 8],
    /// By co-located luma base mode.
    pub uv_mode: [Cdf; BASE_MODES],
    /// By nominal direction and chroma delta context.
    pub uv_delta: [[Cdf; 3]; 8],
    /// By block size class.
    pub ref_line: [Cdf; 3],
    /// By plane type and block size class.
    pub skip: [[Cdf; 3]; 2],
    /// By larger block dimension (16 or 32).
    pub tx_split: [Cdf; 2],
    /// By transform size class.
    pub tx_type: [Cdf; 3],
    pub nsdt: [Cdf; NSDT_CONTEXTS],
    /// By plane type.
    pub coeff: [CoeffCdfs; 2],
    /// By chroma component.
    pub ccso_block: [Cdf; 2],
}

impl Default for Contexts {
    fn default() -> Self {
        Contexts {
            partition: PartitionCdfs::default(),
            y_mode: [Cdf::uniform(BASE_MODES); 25],
            y_delta: [Cdf::uniform(7); 8],
            uv_mode: [Cdf::uniform(BASE_MODES); BASE_MODES],
            uv_delta: [[Cdf::uniform(7); 3]; 8],
            ref_line: [Cdf::skewed(3, TOOL_INDEX_P0); 3],
            skip: [[Cdf::uniform(2); 3]; 2],
            tx_split: [Cdf::uniform(2); 2],
            tx_type: [Cdf::uniform(TxType::COUNT); 3],
            nsdt: [Cdf::skewed(3, TOOL_INDEX_P0); NSDT_CONTEXTS],
            coeff: [CoeffCdfs::default(), CoeffCdfs::default()],
            ccso_block: [Cdf::uniform(2); 2],
        }
    }
}

/// 0 for a missing neighbor, else 1 + the NSDT mode class.
fn neighbor_class(m: Option<IntraMode>) -> usize {
    m.map_or(0, |m| 1 + nsdt_mode_class(m))
}

pub fn y_mode_ctx(above: Option<IntraMode>, left: Option<IntraMode>) -> usize {
    neighbor_class(above) * 5 + neighbor_class(left)
}

/// 0 when the shorter side is 4, 1 for 8, 2 above.
pub fn size_class(w: usize, h: usize) -> usize {
    match w.min(h) {
        0..=4 => 0,
        5..=8 => 1,
        _ => 2,
    }
}

pub fn eob_class(w: usize, h: usize) -> usize {
    (w * h).trailing_zeros() as usize - 4
}

pub fn pos_class(scan_idx: usize) -> usize {
    match scan_idx {
        0 => 0,
        1..=2 => 1,
        3..=5 => 2,
        6..=14 => 3,
        _ => 4,
    }
}
