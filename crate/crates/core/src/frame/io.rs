use std::fs;
use std::io::Write;
use std::path::Path;

use super::{chroma_dim, Frame, FrameError, Plane, PlaneId};

/// Input container.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Y4m,
    /// Headerless planar YUV 4:2:0 with dimensions supplied by the caller.
    RawYuv420 { width: usize, height: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FrameError + '_ {
    move |source| FrameError::Io { path: path.to_path_buf(), source }
}

/// Reads the first frame of a file.
pub fn load_frame(path: impl AsRef<Path>, format: FileFormat) -> Result<Frame, FrameError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    read_frame(&bytes, format)
}

/// Parses the first frame from an in-memory file image.
pub fn read_frame(bytes: &[u8], format: FileFormat) -> Result<Frame, FrameError> {
    match format {
        FileFormat::RawYuv420 { width, height } => {
            if width == 0 || height == 0 {
                return Err(FrameError::BadDimensions(width, height));
            }
            let frame_len = width * height + 2 * chroma_dim(width) * chroma_dim(height);
            if bytes.is_empty() || bytes.len() % frame_len != 0 {
                return Err(FrameError::SizeMismatch { expected: frame_len, actual: bytes.len() });
            }
            planes_from_bytes(&bytes[..frame_len], width, height)
        }
        FileFormat::Y4m => parse_y4m(bytes),
    }
}

fn planes_from_bytes(bytes: &[u8], width: usize, height: usize) -> Result<Frame, FrameError> {
    let (cw, ch) = (chroma_dim(width), chroma_dim(height));
    let (ylen, clen) = (width * height, cw * ch);
    let expected = ylen + 2 * clen;
    if bytes.len() < expected {
        return Err(FrameError::SizeMismatch { expected, actual: bytes.len() });
    }
    let y = Plane::from_vec(width, height, bytes[..ylen].to_vec());
    let cb = Plane::from_vec(cw, ch, bytes[ylen..ylen + clen].to_vec());
    let cr = Plane::from_vec(cw, ch, bytes[ylen + clen..expected].to_vec());
    Frame::from_planes(y, cb, cr)
}

fn parse_y4m(bytes: &[u8]) -> Result<Frame, FrameError> {
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FrameError::Y4mHeader("missing header terminator".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| FrameError::Y4mHeader("header is not ASCII".into()))?;
    let mut tokens = header.split_ascii_whitespace();
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(FrameError::Y4mHeader("missing YUV4MPEG2 signature".into()));
    }
    let (mut width, mut height) = (None, None);
    for tok in tokens {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = val.parse::<usize>().ok(),
            "H" => height = val.parse::<usize>().ok(),
            "C" => {
                if !matches!(val, "420" | "420jpeg" | "420paldv" | "420mpeg2") {
                    return Err(FrameError::Colorspace(val.to_string()));
                }
            }
            _ => {}
        }
    }
    let (width, height) = match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => (w, h),
        _ => return Err(FrameError::Y4mHeader("missing or invalid W/H".into())),
    };
    let rest = &bytes[header_end + 1..];
    if !rest.starts_with(b"FRAME") {
        return Err(FrameError::Y4mHeader("missing FRAME marker".into()));
    }
    let frame_hdr_end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FrameError::Y4mHeader("unterminated FRAME marker".into()))?;
    planes_from_bytes(&rest[frame_hdr_end + 1..], width, height)
}

fn write_planes(out: &mut Vec<u8>, frame: &Frame) {
    for p in &frame.planes {
        for row in p.rows() {
            out.extend_from_slice(row);
        }
    }
}

/// Writes a single-frame Y4M file.
pub fn write_y4m(path: impl AsRef<Path>, frame: &Frame) -> Result<(), FrameError> {
    let path = path.as_ref();
    let mut out = format!(
        "YUV4MPEG2 W{} H{} F25:1 Ip A1:1 C420jpeg\nFRAME\n",
        frame.width(),
        frame.height()
    )
    .into_bytes();
    write_planes(&mut out, frame);
    fs::write(path, out).map_err(io_err(path))
}

/// Writes headerless planar YUV 4:2:0.
pub fn write_raw(path: impl AsRef<Path>, frame: &Frame) -> Result<(), FrameError> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(frame.byte_len());
    write_planes(&mut out, frame);
    fs::write(path, out).map_err(io_err(path))
}

/// Exports one plane as binary PGM for visual inspection.
pub fn write_pgm(path: impl AsRef<Path>, frame: &Frame, plane: PlaneId) -> Result<(), FrameError> {
    let path = path.as_ref();
    let p = frame.plane(plane);
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    write!(f, "P5\n{} {}\n255\n", p.width(), p.height()).map_err(io_err(path))?;
    for row in p.rows() {
        f.write_all(row).map_err(io_err(path))?;
    }
    Ok(())
}
