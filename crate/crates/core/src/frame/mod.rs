//! Planar 8-bit YCbCr 4:2:0 frames, file I/O and quality metrics.

mod io;
pub mod metrics;

pub use io::{load_frame, read_frame, write_pgm, write_raw, write_y4m, FileFormat};
pub use metrics::{overall_score, psnr, ssim, QualityScore};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid Y4M header: {0}")]
    Y4mHeader(String),
    #[error("unsupported Y4M colorspace {0:?} (only 8-bit 4:2:0 is supported)")]
    Colorspace(String),
    #[error("size mismatch: expected {expected} bytes per frame, file has {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("plane dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid frame dimensions {0}x{1}")]
    BadDimensions(usize, usize),
}

/// One 8-bit sample plane stored row-major with an explicit stride.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    stride: usize,
    data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Plane { width, height, stride: width, data: vec![fill; width * height] }
    }

    /// Wraps tightly packed row-major samples.
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height);
        Plane { width, height, stride: width, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.stride + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.stride + x] = v;
    }

    /// Sample with coordinates clamped into the plane.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.stride..y * self.stride + self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, y: usize) -> &mut [u8] {
        let w = self.width;
        &mut self.data[y * self.stride..y * self.stride + w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        (0..self.height).map(move |y| self.row(y))
    }

    /// Copy extended to `width x height` by edge replication.
    pub fn padded(&self, width: usize, height: usize) -> Plane {
        let mut out = Plane::new(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                out.set(x, y, self.get_clamped(x as isize, y as isize));
            }
        }
        out
    }

    /// Top-left `width x height` window.
    pub fn cropped(&self, width: usize, height: usize) -> Plane {
        let mut out = Plane::new(width, height, 0);
        for y in 0..height {
            out.row_mut(y).copy_from_slice(&self.row(y)[..width]);
        }
        out
    }

    /// Sum of squared differences against another plane of equal size.
    pub fn sse(&self, other: &Plane) -> u64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.rows()
            .zip(other.rows())
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(&p, &q)| {
                        let d = p as i64 - q as i64;
                        (d * d) as u64
                    })
                    .sum::<u64>()
            })
            .sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = u8> + '_ {
        self.rows().flat_map(|r| r.iter().copied())
    }
}

/// Plane index within a [`Frame`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaneId {
    Y = 0,
    Cb = 1,
    Cr = 2,
}

impl PlaneId {
    pub const ALL: [PlaneId; 3] = [PlaneId::Y, PlaneId::Cb, PlaneId::Cr];

    pub fn is_chroma(self) -> bool {
        self != PlaneId::Y
    }
}

/// Chroma dimension for a luma dimension under 4:2:0.
#[inline]
pub fn chroma_dim(luma: usize) -> usize {
    luma.div_ceil(2)
}

/// A 4:2:0 frame: full-resolution luma and two half-resolution chroma
/// planes (rounded up).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub planes: [Plane; 3],
}

impl Frame {
    /// Frame filled with one value per plane.
    pub fn filled(width: usize, height: usize, y: u8, cb: u8, cr: u8) -> Self {
        let (cw, ch) = (chroma_dim(width), chroma_dim(height));
        Frame {
            planes: [Plane::new(width, height, y), Plane::new(cw, ch, cb), Plane::new(cw, ch, cr)],
        }
    }

    pub fn from_planes(y: Plane, cb: Plane, cr: Plane) -> Result<Self, FrameError> {
        let (w, h) = (y.width(), y.height());
        if w == 0 || h == 0 {
            return Err(FrameError::BadDimensions(w, h));
        }
        for c in [&cb, &cr] {
            if c.width() != chroma_dim(w) || c.height() != chroma_dim(h) {
                return Err(FrameError::DimensionMismatch(
                    chroma_dim(w),
                    chroma_dim(h),
                    c.width(),
                    c.height(),
                ));
            }
        }
        Ok(Frame { planes: [y, cb, cr] })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes[0].width()
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    #[inline]
    pub fn plane(&self, id: PlaneId) -> &Plane {
        &self.planes[id as usize]
    }
    #[inline]
    pub fn plane_mut(&mut self, id: PlaneId) -> &mut Plane {
        &mut self.planes[id as usize]
    }

    /// Luma samples per frame plus both chroma planes.
    pub fn byte_len(&self) -> usize {
        self.planes.iter().map(|p| p.width() * p.height()).sum()
    }

    /// Per-plane PSNR/SSIM against a reference.
    pub fn quality(&self, reference: &Frame) -> Result<QualityScore, FrameError> {
        QualityScore::measure(reference, self)
    }
}
