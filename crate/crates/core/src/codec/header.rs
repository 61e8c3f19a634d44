//! Frame header serialization.

use super::{CodecError, Tool, MAX_SHARED_DEPTH};
use crate::bitio::{BitReader, BitWriter};
use crate::ccso::{read_section, write_section, CcsoLut};
use crate::frame::chroma_dim;
use crate::quant::MAX_QP;

pub const HEADER_MAGIC: &[u8; 4] = b"BAV1";
pub const HEADER_VERSION: u8 = 1;
/// Largest accepted luma sample count.
pub const MAX_PIXELS: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub width: usize,
    pub height: usize,
    pub qp: u8,
    pub tools: u8,
    pub shared_depth: u8,
    /// Cb and Cr LUTs; present iff CCSO is enabled.
    pub ccso: Option<[CcsoLut; 2]>,
}

impl FrameHeader {
    pub fn write(&self, payload: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(payload.len() + 64);
        out.extend_from_slice(HEADER_MAGIC);
        out.push(HEADER_VERSION);
        out.extend_from_slice(&(self.width as u16).to_le_bytes());
        out.extend_from_slice(&(self.height as u16).to_le_bytes());
        out.push(self.qp);
        out.push(self.tools);
        out.push(self.shared_depth & MAX_SHARED_DEPTH);
        if let Some(luts) = &self.ccso {
            let mut bw = BitWriter::new();
            for lut in luts {
                write_section(&mut bw, lut);
            }
            out.extend_from_slice(&bw.into_bytes());
        }
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(payload);
        out
    }

    /// Parses the header; returns it with the payload and the payload's
    /// byte offset.
    pub fn parse(bytes: &[u8]) -> Result<(FrameHeader, &[u8], usize), CodecError> {
        if bytes.len() < 4 || &bytes[..4] != HEADER_MAGIC {
            return Err(CodecError::BadMagic);
        }
        if bytes.len() < 12 {
            return Err(CodecError::Truncated { offset: bytes.len() });
        }
        if bytes[4] != HEADER_VERSION {
            return Err(CodecError::UnsupportedVersion(bytes[4]));
        }
        let width = u16::from_le_bytes([bytes[5], bytes[6]]) as usize;
        let height = u16::from_le_bytes([bytes[7], bytes[8]]) as usize;
        let corrupt = |offset, what: &str| CodecError::Corrupt { offset, what: what.into() };
        if width == 0 || height == 0 || width * height > MAX_PIXELS {
            return Err(corrupt(5, "frame dimensions"));
        }
        let qp = bytes[9];
        if qp > MAX_QP {
            return Err(corrupt(9, "qp"));
        }
        let tools = bytes[10];
        if tools & !0x3f != 0 {
            return Err(corrupt(10, "tool bitmap"));
        }
        let shared_depth = bytes[11];
        if shared_depth > MAX_SHARED_DEPTH {
            return Err(corrupt(11, "shared depth"));
        }
        let mut pos = 12;
        let ccso = if tools & Tool::Ccso.bit() != 0 {
            let mut br = BitReader::new(&bytes[pos..]);
            let (cw, ch) = (chroma_dim(width), chroma_dim(height));
            let cb = read_section(&mut br, cw, ch).map_err(|e| CodecError::from_bitio(e, pos))?;
            let cr = read_section(&mut br, cw, ch).map_err(|e| CodecError::from_bitio(e, pos))?;
            pos += br.byte_len();
            Some([cb, cr])
        } else {
            None
        };
        if bytes.len() < pos + 4 {
            return Err(CodecError::Truncated { offset: bytes.len() });
        }
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if bytes.len() - pos != len {
            return Err(CodecError::Corrupt { offset: pos - 4, what: "payload length".into() });
        }
        let header = FrameHeader { width, height, qp, tools, shared_depth, ccso };
        Ok((header, &bytes[pos..], pos))
    }
}
