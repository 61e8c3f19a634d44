//! Separable primary transforms, line-graph transform kernels, zig-zag
//! scans and the non-separable secondary transform.

pub mod ggl;
pub mod kernels;
pub mod nsdt;
pub mod scan;
pub mod tx2d;

pub use ggl::{ggl_matrix, lgt_decomposition, lgt_kernel, GglSpec};
pub use kernels::{quantize_kernel_int8, KernelKind, KernelSet, TxKernel};
pub use nsdt::{nsdt_context, NsdtKernel, NsdtKernelSet};
pub use scan::{scan_order, zigzag_order};
pub use tx2d::{forward_tx2d, forward_tx2d_float, inverse_tx2d, inverse_tx2d_float};

use crate::linalg::EigenError;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("invalid graph Laplacian parameters {0:?}")]
    InvalidGgl(GglSpec),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("no {kind:?} kernel of length {n}")]
    IllegalKernel { kind: TxKind, n: usize },
    #[error("integer kernel of length {n} misses the orthogonality bound ({deviation:.4})")]
    KernelTuning { n: usize, deviation: f64 },
    #[error("malformed NSDT kernel file: {0}")]
    KernelFile(&'static str),
}

/// 1-D transform family of one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TxKind {
    Dct,
    Adst,
    FlipAdst,
    Idt,
}

/// 2-D transform type: `(vertical, horizontal)` 1-D kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TxType {
    pub vert: TxKind,
    pub horz: TxKind,
}

use TxKind::{Adst, Dct, FlipAdst, Idt};

impl TxType {
    pub const COUNT: usize = 16;

    /// Symbol order of the 16 transform types.
    pub const ALL: [TxType; 16] = [
        TxType::new(Dct, Dct),
        TxType::new(Adst, Dct),
        TxType::new(Dct, Adst),
        TxType::new(Adst, Adst),
        TxType::new(FlipAdst, Dct),
        TxType::new(Dct, FlipAdst),
        TxType::new(FlipAdst, FlipAdst),
        TxType::new(Adst, FlipAdst),
        TxType::new(FlipAdst, Adst),
        TxType::new(Idt, Idt),
        TxType::new(Dct, Idt),
        TxType::new(Idt, Dct),
        TxType::new(Adst, Idt),
        TxType::new(Idt, Adst),
        TxType::new(FlipAdst, Idt),
        TxType::new(Idt, FlipAdst),
    ];

    pub const DCT_DCT: TxType = TxType::new(Dct, Dct);
    pub const ADST_DCT: TxType = TxType::new(Adst, Dct);
    pub const DCT_ADST: TxType = TxType::new(Dct, Adst);
    pub const ADST_ADST: TxType = TxType::new(Adst, Adst);
    pub const IDTX: TxType = TxType::new(Idt, Idt);
    pub const V_DCT: TxType = TxType::new(Dct, Idt);
    pub const H_DCT: TxType = TxType::new(Idt, Dct);

    /// Types searched for intra blocks by the encoder.
    pub const INTRA_SET: [TxType; 7] = [
        TxType::DCT_DCT,
        TxType::ADST_DCT,
        TxType::DCT_ADST,
        TxType::ADST_ADST,
        TxType::IDTX,
        TxType::V_DCT,
        TxType::H_DCT,
    ];

    pub const fn new(vert: TxKind, horz: TxKind) -> Self {
        TxType { vert, horz }
    }

    pub fn index(self) -> usize {
        TxType::ALL.iter().position(|&t| t == self).expect("every pair is enumerated")
    }

    pub fn from_index(i: usize) -> Option<TxType> {
        TxType::ALL.get(i).copied()
    }

    pub fn has_idt(self) -> bool {
        self.vert == Idt || self.horz == Idt
    }

    /// Whether this type exists for a `w x h` transform unit.
    pub fn valid_for(self, w: usize, h: usize) -> bool {
        let ok = |k: TxKind, n: usize| n < 32 || matches!(k, Dct | Idt);
        ok(self.horz, w) && ok(self.vert, h)
    }
}
