//! Encoder, decoder and bitstream syntax.
//!
//! Bitstream layout (multi-byte fields little-endian):
//!
//! | field         | size                                             |
//! |---------------|--------------------------------------------------|
//! | magic         | `"BAV1"`                                         |
//! | version       | u8 (1)                                           |
//! | width, height | u16 each                                         |
//! | qp            | u8                                               |
//! | tools         | u8 bitmap (see [`ToolConfig::bitmap`])           |
//! | shared depth  | u8 (3 significant bits)                          |
//! | CCSO section  | bit-packed, byte-aligned; only with CCSO enabled |
//! | payload size  | u32                                              |
//! | payload       | range-coded superblocks, then CCSO block flags   |
//!
//! Per superblock the payload holds the luma partition tree, the chroma
//! tree (patterns above the shared depth are inferred), every luma leaf and
//! then every chroma leaf. See [`syntax`] for the per-leaf element order
//! and context assignment.

mod block;
mod contexts;
mod decoder;
mod encoder;
mod header;
pub mod syntax;

pub use block::{luma_tus, ChromaInfo, LumaInfo};
pub use decoder::{decode_frame, decode_frame_with, DecodedFrame, DecoderCaps};
pub use encoder::{encode_frame, nsdt_training_samples, superset_costs, SupersetCost, EncodeOutput, EncodeStats, ToolHits};
pub use header::{FrameHeader, HEADER_MAGIC, HEADER_VERSION};
pub use syntax::SyntaxCounts;

use crate::bitio::BitioError;
use crate::partition::FULLY_SHARED;
use crate::quant::{qp_to_step, MAX_QP};

/// Default Lagrangian scale: `lambda = 0.12 * (step / 8)^2`.
pub const DEFAULT_LAMBDA_SCALE: f64 = 0.12;
pub const DEFAULT_SHARED_DEPTH: u8 = 1;
/// Largest value of the 3-bit shared depth header field.
pub const MAX_SHARED_DEPTH: u8 = 7;

/// One coding tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tool {
    Sdp,
    Mrl,
    Imc,
    Ept,
    Nsdt,
    Ccso,
}

impl Tool {
    pub const ALL: [Tool; 6] = [Tool::Sdp, Tool::Mrl, Tool::Imc, Tool::Ept, Tool::Nsdt, Tool::Ccso];

    pub fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Tool::Sdp => "sdp",
            Tool::Mrl => "mrl",
            Tool::Imc => "imc",
            Tool::Ept => "ept",
            Tool::Nsdt => "nsdt",
            Tool::Ccso => "ccso",
        }
    }

    pub fn from_name(s: &str) -> Option<Tool> {
        Tool::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

/// Tool switches and rate control parameters of one encode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToolConfig {
    pub sdp: bool,
    pub mrl: bool,
    pub imc: bool,
    pub ept: bool,
    pub nsdt: bool,
    pub ccso: bool,
    pub shared_depth: u8,
    pub qp: u8,
    pub lambda_scale: f64,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self::baseline(39)
    }
}

impl ToolConfig {
    /// Every tool off.
    pub fn baseline(qp: u8) -> Self {
        Self::from_bitmap(0, qp)
    }

    /// Every tool on.
    pub fn all_on(qp: u8) -> Self {
        Self::from_bitmap(0x3f, qp)
    }

    pub fn from_bitmap(bits: u8, qp: u8) -> Self {
        ToolConfig {
            sdp: bits & Tool::Sdp.bit() != 0,
            mrl: bits & Tool::Mrl.bit() != 0,
            imc: bits & Tool::Imc.bit() != 0,
            ept: bits & Tool::Ept.bit() != 0,
            nsdt: bits & Tool::Nsdt.bit() != 0,
            ccso: bits & Tool::Ccso.bit() != 0,
            shared_depth: DEFAULT_SHARED_DEPTH,
            qp: qp.min(MAX_QP),
            lambda_scale: DEFAULT_LAMBDA_SCALE,
        }
    }

    /// `sdp = 1, mrl = 2, imc = 4, ept = 8, nsdt = 16, ccso = 32`.
    pub fn bitmap(&self) -> u8 {
        Tool::ALL.into_iter().filter(|&t| self.tool(t)).fold(0, |acc, t| acc | t.bit())
    }

    pub fn tool(&self, t: Tool) -> bool {
        match t {
            Tool::Sdp => self.sdp,
            Tool::Mrl => self.mrl,
            Tool::Imc => self.imc,
            Tool::Ept => self.ept,
            Tool::Nsdt => self.nsdt,
            Tool::Ccso => self.ccso,
        }
    }

    pub fn with_tool(mut self, t: Tool, on: bool) -> Self {
        match t {
            Tool::Sdp => self.sdp = on,
            Tool::Mrl => self.mrl = on,
            Tool::Imc => self.imc = on,
            Tool::Ept => self.ept = on,
            Tool::Nsdt => self.nsdt = on,
            Tool::Ccso => self.ccso = on,
        }
        self
    }

    /// Shared depth in effect: the header field with SDP, else the whole
    /// tree is shared.
    pub fn effective_shared_depth(&self) -> u8 {
        if self.sdp {
            self.shared_depth.min(MAX_SHARED_DEPTH)
        } else {
            FULLY_SHARED
        }
    }

    pub fn lambda(&self) -> f64 {
        lambda_for(self.qp, self.lambda_scale)
    }

    /// Parses `+sdp,-nsdt,...` on top of `self`.
    pub fn apply_tool_list(mut self, spec: &str) -> Result<Self, String> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (on, name) = match item.as_bytes()[0] {
                b'+' => (true, &item[1..]),
                b'-' => (false, &item[1..]),
                _ => (true, item),
            };
            if name.eq_ignore_ascii_case("all") {
                for t in Tool::ALL {
                    self = self.with_tool(t, on);
                }
                continue;
            }
            let t = Tool::from_name(name).ok_or_else(|| format!("unknown tool '{name}'"))?;
            self = self.with_tool(t, on);
        }
        Ok(self)
    }
}

/// `scale * (step / 8)^2`: coefficients carry 8x the orthonormal scale, so
/// `step / 8` is the quantizer step in the sample domain.
pub fn lambda_for(qp: u8, scale: f64) -> f64 {
    let s = qp_to_step(qp) as f64 / 8.0;
    scale * s * s
}

/// `distortion + lambda * bits`.
#[inline]
pub fn rd_cost(distortion: f64, bits: f64, lambda: f64) -> f64 {
    distortion + lambda * bits
}

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported bitstream version {0}")]
    UnsupportedVersion(u8),
    #[error("corrupt stream at byte {offset}: {what}")]
    Corrupt { offset: usize, what: String },
    #[error("stream truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("stream uses tools {tools:#04x} that this decoder lacks")]
    Unsupported { tools: u8 },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
}

impl CodecError {
    /// Maps a payload-relative coder error to an absolute byte offset.
    pub(crate) fn from_bitio(e: BitioError, base: usize) -> Self {
        match e {
            BitioError::Truncated { offset } => CodecError::Truncated { offset: base + offset },
            BitioError::Malformed { offset, what } => {
                CodecError::Corrupt { offset: base + offset, what: what.to_string() }
            }
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            CodecError::Corrupt { offset, .. } | CodecError::Truncated { offset } => Some(*offset),
            CodecError::BadMagic | CodecError::UnsupportedVersion(_) => Some(0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitmap_round_trip() {
        for b in 0..64u8 {
            assert_eq!(ToolConfig::from_bitmap(b, 30).bitmap(), b);
        }
        assert_eq!(ToolConfig::baseline(1).with_tool(Tool::Imc, true).bitmap(), 4);
    }

    #[test]
    fn tool_list_parsing() {
        let c = ToolConfig::baseline(39).apply_tool_list("+sdp,+ccso,-nsdt").unwrap();
        assert_eq!(c.bitmap(), 1 | 32);
        let c = ToolConfig::baseline(39).apply_tool_list("+all,-mrl").unwrap();
        assert_eq!(c.bitmap(), 0x3f & !2);
        assert!(ToolConfig::baseline(39).apply_tool_list("+cfl").is_err());
    }

    #[test]
    fn rd_cost_properties() {
        assert_eq!(rd_cost(123.0, 0.0, 9.0), 123.0);
        assert!(rd_cost(100.0, 10.0, 2.0) < rd_cost(100.0, 11.0, 2.0));
        for qp in 1..=MAX_QP {
            assert!(lambda_for(qp, 0.12) >= lambda_for(qp - 1, 0.12));
        }
        assert!(lambda_for(63, 0.12) > lambda_for(23, 0.12));
    }
}
