//! Intra prediction: DC, Paeth and directional modes with delta angles,
//! multiple reference lines, adaptive mode subsets and the chroma delta
//! context.

mod predict;
mod refs;

pub use predict::{dr_derivative, interp_4tap, predict, DCT_IF_4TAP};
pub use refs::{build_ref_samples, DecodedMap, RefSamples};

/// Nominal directional angles in degrees, indexed by `nominal`.
pub const NOMINAL_ANGLES: [i32; 8] = [45, 67, 90, 113, 135, 157, 180, 203];
/// Degrees per delta step.
pub const ANGLE_STEP: i32 = 3;
pub const MAX_DELTA: i8 = 3;
/// Number of base mode symbols: DC, 8 nominals, Paeth.
pub const BASE_MODES: usize = 10;
pub const MAX_REF_LINE: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntraMode {
    Dc,
    Paeth,
    /// `nominal` indexes [`NOMINAL_ANGLES`]; `delta` is in `-3..=3` steps.
    Directional { nominal: u8, delta: i8 },
}

impl IntraMode {
    pub const V: IntraMode = IntraMode::Directional { nominal: 2, delta: 0 };
    pub const H: IntraMode = IntraMode::Directional { nominal: 6, delta: 0 };

    /// Base symbol: 0 = DC, 1..=8 = nominal directions, 9 = Paeth.
    pub fn base_index(self) -> usize {
        match self {
            IntraMode::Dc => 0,
            IntraMode::Directional { nominal, .. } => 1 + nominal as usize,
            IntraMode::Paeth => 9,
        }
    }

    /// Mode with delta 0 for a base symbol.
    pub fn from_base_index(i: usize) -> Option<IntraMode> {
        match i {
            0 => Some(IntraMode::Dc),
            1..=8 => Some(IntraMode::Directional { nominal: (i - 1) as u8, delta: 0 }),
            9 => Some(IntraMode::Paeth),
            _ => None,
        }
    }

    pub fn nominal(self) -> Option<u8> {
        match self {
            IntraMode::Directional { nominal, .. } => Some(nominal),
            _ => None,
        }
    }

    pub fn delta(self) -> i8 {
        match self {
            IntraMode::Directional { delta, .. } => delta,
            _ => 0,
        }
    }

    pub fn is_directional(self) -> bool {
        matches!(self, IntraMode::Directional { .. })
    }

    pub fn with_delta(self, d: i8) -> IntraMode {
        match self {
            IntraMode::Directional { nominal, .. } => IntraMode::Directional { nominal, delta: d },
            m => m,
        }
    }

    /// Prediction angle in degrees for directional modes.
    pub fn angle(self) -> Option<i32> {
        match self {
            IntraMode::Directional { nominal, delta } => {
                Some(NOMINAL_ANGLES[nominal as usize] + ANGLE_STEP * delta as i32)
            }
            _ => None,
        }
    }
}

/// Blocks smaller than 8 in either dimension only use delta 0.
pub fn allows_delta(w: usize, h: usize) -> bool {
    w >= 8 && h >= 8
}

/// Modes selectable for a block given its above and left neighbors.
///
/// Always DC, Paeth and the 8 nominal directions with delta 0. Nonzero
/// deltas are added only for nominal directions used by a neighbor, and
/// only when the block is large enough for deltas.
pub fn allowed_ipm_set(
    above: Option<IntraMode>,
    left: Option<IntraMode>,
    w: usize,
    h: usize,
) -> Vec<IntraMode> {
    let mut out: Vec<IntraMode> = (0..BASE_MODES).filter_map(IntraMode::from_base_index).collect();
    if !allows_delta(w, h) {
        return out;
    }
    let mut noms: Vec<u8> = [above, left].iter().flatten().filter_map(|m| m.nominal()).collect();
    noms.sort_unstable();
    noms.dedup();
    for nominal in noms {
        for delta in -MAX_DELTA..=MAX_DELTA {
            if delta != 0 {
                out.push(IntraMode::Directional { nominal, delta });
            }
        }
    }
    out
}

/// Whether nonzero deltas of `nominal` are selectable under the adaptive
/// subset rule.
pub fn delta_allowed_by_neighbors(
    nominal: u8,
    above: Option<IntraMode>,
    left: Option<IntraMode>,
) -> bool {
    [above, left].iter().flatten().any(|m| m.nominal() == Some(nominal))
}

/// Context for a chroma delta angle from the co-located luma mode:
/// 0 if luma is non-directional or has another nominal, 1 for the same
/// nominal with delta 0, 2 for the same nominal with a nonzero delta.
pub fn chroma_delta_context(luma: IntraMode, chroma_nominal: u8) -> usize {
    match luma {
        IntraMode::Directional { nominal, delta } if nominal == chroma_nominal => {
            if delta == 0 {
                1
            } else {
                2
            }
        }
        _ => 0,
    }
}
