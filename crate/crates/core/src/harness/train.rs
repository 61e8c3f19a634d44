//! Offline training of the NSDT KLT kernels.
//!
//! Frames drawn apart from the evaluation corpus are encoded with NSDT off
//! at several QPs and tool sets. For every coded luma unit that could have
//! used NSDT, the first 16 scan-ordered primary coefficients of its
//! residual feed a second-moment matrix of its NSDT context, whose
//! eigenvectors form the kernel.

use rayon::prelude::*;

use crate::codec::{nsdt_training_samples, ToolConfig};
use crate::frame::Frame;
use crate::linalg::Matrix;
use crate::transform::nsdt::{klt_from_covariance, write_kernel_file, NSDT_CONTEXTS, NSDT_K};
use crate::transform::{NsdtKernel, TransformError};

use super::corpus::{generate_variant, CORPUS_NAMES};

/// Frame size of the training frames.
pub const TRAIN_SIZE: usize = 128;
/// Corpus variants used for training.
pub const TRAIN_VARIANTS: std::ops::RangeInclusive<u64> = 1..=3;
pub const TRAIN_QPS: [u8; 3] = [23, 39, 55];
/// Tool sets the training encodes use: the baseline and every tool but NSDT.
pub const TRAIN_TOOLS: [u8; 2] = [0x00, 0x2f];
/// Added to the diagonal so sparse contexts stay well-conditioned.
const RIDGE: f64 = 1e-3;

/// Training frames: every corpus class at each training variant.
pub fn training_frames() -> Vec<Frame> {
    TRAIN_VARIANTS
        .flat_map(|v| CORPUS_NAMES.iter().map(move |&n| generate_variant(n, TRAIN_SIZE, v).expect("known name")))
        .collect()
}

/// Per-context second-moment sums and sample counts.
pub fn nsdt_statistics(frames: &[Frame]) -> Vec<(Matrix, usize)> {
    let jobs: Vec<(usize, u8, u8)> = (0..frames.len())
        .flat_map(|f| TRAIN_TOOLS.iter().flat_map(move |&t| TRAIN_QPS.iter().map(move |&q| (f, t, q))))
        .collect();
    let samples: Vec<Vec<(usize, [f64; NSDT_K])>> = jobs
        .par_iter()
        .map(|&(f, tools, qp)| nsdt_training_samples(&frames[f], &ToolConfig::from_bitmap(tools, qp)))
        .collect();
    let mut stats = vec![(Matrix::zeros(NSDT_K), 0usize); NSDT_CONTEXTS];
    for (ctx, x) in samples.iter().flatten() {
        let (cov, count) = &mut stats[*ctx];
        for r in 0..NSDT_K {
            for c in 0..NSDT_K {
                cov[(r, c)] += x[r] * x[c];
            }
        }
        *count += 1;
    }
    stats
}

/// Trains one KLT kernel per NSDT context.
pub fn train_nsdt_kernels(frames: &[Frame]) -> Result<Vec<NsdtKernel>, TransformError> {
    nsdt_statistics(frames)
        .into_iter()
        .map(|(cov, count)| {
            if count == 0 {
                return Ok(NsdtKernel::identity());
            }
            let scale = 1.0 / count as f64;
            let m = Matrix::from_fn(NSDT_K, |r, c| cov[(r, c)] * scale + if r == c { RIDGE } else { 0.0 });
            Ok(NsdtKernel::from_float(&klt_from_covariance(&m)?))
        })
        .collect()
}

/// Kernel file of the default training run.
pub fn train_default_kernel_file() -> Result<Vec<u8>, TransformError> {
    Ok(write_kernel_file(&train_nsdt_kernels(&training_frames())?))
}
