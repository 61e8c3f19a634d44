//! Non-separable secondary transform over the first 16 zig-zag ordered
//! primary coefficients.
//!
//! Two kernels exist per context: index 1 is a KLT trained on intra
//! residuals of the bundled corpus, index 2 a fixed Givens-rotation
//! cascade. Integer kernels use scale `2^12`.
//!
//! Kernel file layout (little-endian): `"NSDT"`, `u32 k`, `u32 count`, then
//! `count` row-major `k x k` matrices of `i16`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::scan::scan_order;
use super::TransformError;
use crate::intra::IntraMode;
use crate::linalg::{normalize_row_signs, symmetric_eigen, Matrix};

/// Number of low-frequency coefficients touched.
pub const NSDT_K: usize = 16;
/// Mode class x size class.
pub const NSDT_CONTEXTS: usize = 8;
pub const NSDT_SCALE_BITS: u32 = 12;
const NSDT_SCALE: f64 = (1 << NSDT_SCALE_BITS) as f64;
const MAGIC: &[u8; 4] = b"NSDT";

static BUNDLED_KLT: &[u8] = include_bytes!("../../data/nsdt_klt.bin");

/// `0`: DC/Paeth, `1`: near-horizontal (157-203), `2`: near-vertical
/// (45-113), `3`: diagonal (135).
pub fn nsdt_mode_class(mode: IntraMode) -> usize {
    match mode {
        IntraMode::Dc | IntraMode::Paeth => 0,
        IntraMode::Directional { nominal, .. } => match nominal {
            5..=7 => 1,
            0..=3 => 2,
            _ => 3,
        },
    }
}

/// `mode_class * 2 + size_class`, with size class 0 for transform units
/// whose shorter side is 4.
pub fn nsdt_context(mode: IntraMode, tw: usize, th: usize) -> usize {
    nsdt_mode_class(mode) * 2 + usize::from(tw.min(th) > 4)
}

/// One `16 x 16` secondary kernel.
#[derive(Clone, Debug)]
pub struct NsdtKernel {
    /// Orthonormal float kernel (rows are basis vectors).
    pub float: Matrix,
    /// Row-major fixed-point kernel at scale `2^12`.
    pub int: Vec<i32>,
}

impl NsdtKernel {
    /// Builds a kernel from fixed-point entries; the float kernel is their
    /// Gram-Schmidt orthonormalization.
    pub fn from_int(int: Vec<i32>) -> Self {
        let m = Matrix::from_fn(NSDT_K, |r, c| int[r * NSDT_K + c] as f64 / NSDT_SCALE);
        NsdtKernel { float: gram_schmidt(&m), int }
    }

    pub fn from_float(m: &Matrix) -> Self {
        let int = (0..NSDT_K * NSDT_K)
            .map(|i| (m[(i / NSDT_K, i % NSDT_K)] * NSDT_SCALE).round() as i32)
            .collect();
        Self::from_int(int)
    }

    pub fn identity() -> Self {
        Self::from_float(&Matrix::identity(NSDT_K))
    }
}

fn gram_schmidt(m: &Matrix) -> Matrix {
    let n = m.n();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for r in 0..n {
        let mut v = m.row(r).to_vec();
        for _ in 0..2 {
            for u in &rows {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        rows.push(v);
    }
    Matrix::from_fn(n, |r, c| rows[r][c])
}

/// Gathers the first 16 scan positions of a `w x h` coefficient block.
fn gather(coeffs: &[i32], w: usize, h: usize) -> [i64; NSDT_K] {
    let scan = scan_order(w, h);
    let mut x = [0i64; NSDT_K];
    for (i, &p) in scan.iter().take(NSDT_K).enumerate() {
        x[i] = coeffs[p as usize] as i64;
    }
    x
}

fn scatter(coeffs: &mut [i32], w: usize, h: usize, y: &[i64; NSDT_K]) {
    let scan = scan_order(w, h);
    for (i, &p) in scan.iter().take(NSDT_K).enumerate() {
        coeffs[p as usize] = y[i] as i32;
    }
}

const ROUND: i64 = 1 << (NSDT_SCALE_BITS - 1);

/// `y = K x` on the low-frequency vector, in place.
pub fn nsdt_apply_forward(coeffs: &mut [i32], w: usize, h: usize, kernel: &NsdtKernel) {
    let x = gather(coeffs, w, h);
    let mut y = [0i64; NSDT_K];
    for (r, out) in y.iter_mut().enumerate() {
        let row = &kernel.int[r * NSDT_K..(r + 1) * NSDT_K];
        let acc: i64 = row.iter().zip(&x).map(|(&k, &v)| k as i64 * v).sum();
        *out = (acc + ROUND) >> NSDT_SCALE_BITS;
    }
    scatter(coeffs, w, h, &y);
}

/// `x = K^T y` on the low-frequency vector, in place.
pub fn nsdt_apply_inverse(coeffs: &mut [i32], w: usize, h: usize, kernel: &NsdtKernel) {
    let y = gather(coeffs, w, h);
    let mut x = [0i64; NSDT_K];
    for (r, &v) in y.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let row = &kernel.int[r * NSDT_K..(r + 1) * NSDT_K];
        for (acc, &k) in x.iter_mut().zip(row) {
            *acc += k as i64 * v;
        }
    }
    for v in x.iter_mut() {
        *v = (*v + ROUND) >> NSDT_SCALE_BITS;
    }
    scatter(coeffs, w, h, &x);
}

/// Float variants on an explicit scan vector.
pub fn nsdt_forward_float(coeffs: &mut [f64], w: usize, h: usize, kernel: &NsdtKernel) {
    let scan = scan_order(w, h);
    let x: Vec<f64> = scan.iter().take(NSDT_K).map(|&p| coeffs[p as usize]).collect();
    let y = kernel.float.mul_vec(&x);
    for (i, &p) in scan.iter().take(NSDT_K).enumerate() {
        coeffs[p as usize] = y[i];
    }
}

pub fn nsdt_inverse_float(coeffs: &mut [f64], w: usize, h: usize, kernel: &NsdtKernel) {
    let scan = scan_order(w, h);
    let y: Vec<f64> = scan.iter().take(NSDT_K).map(|&p| coeffs[p as usize]).collect();
    let x = kernel.float.transpose().mul_vec(&y);
    for (i, &p) in scan.iter().take(NSDT_K).enumerate() {
        coeffs[p as usize] = x[i];
    }
}

/// Deterministic rotation cascade for context `ctx`: four stages of
/// nearest-neighbor Givens rotations with context-dependent angles.
pub fn givens_kernel(ctx: usize) -> NsdtKernel {
    let mut m = Matrix::identity(NSDT_K);
    for stage in 0..4 {
        let mut i = stage % 2;
        while i + 1 < NSDT_K {
            let step = 1 + (i + 3 * ctx + stage) % 5;
            let theta = PI / 32.0 * step as f64;
            let (c, s) = (theta.cos(), theta.sin());
            for col in 0..NSDT_K {
                let (a, b) = (m[(i, col)], m[(i + 1, col)]);
                m[(i, col)] = c * a - s * b;
                m[(i + 1, col)] = s * a + c * b;
            }
            i += 2;
        }
    }
    NsdtKernel::from_float(&m)
}

/// KLT of a covariance matrix: eigenvectors by descending eigenvalue,
/// sign-normalized.
pub fn klt_from_covariance(cov: &Matrix) -> Result<Matrix, TransformError> {
    let eig = symmetric_eigen(cov)?;
    let n = cov.n();
    let mut m = Matrix::from_fn(n, |r, c| eig.vectors[(n - 1 - r, c)]);
    normalize_row_signs(&mut m, 1e-9);
    Ok(m)
}

/// Serializes fixed-point kernels.
pub fn write_kernel_file(kernels: &[NsdtKernel]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + kernels.len() * NSDT_K * NSDT_K * 2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(NSDT_K as u32).to_le_bytes());
    out.extend_from_slice(&(kernels.len() as u32).to_le_bytes());
    for k in kernels {
        for &v in &k.int {
            let v = v.clamp(i16::MIN as i32, i16::MAX as i32) as i16;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_kernel_file(bytes: &[u8]) -> Result<Vec<NsdtKernel>, TransformError> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(TransformError::KernelFile("bad magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (k, count) = (word(4), word(8));
    if k != NSDT_K {
        return Err(TransformError::KernelFile("unsupported kernel size"));
    }
    let body = &bytes[12..];
    if body.len() != count * k * k * 2 {
        return Err(TransformError::KernelFile("length mismatch"));
    }
    Ok(body
        .chunks_exact(k * k * 2)
        .map(|m| {
            NsdtKernel::from_int(
                m.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]]) as i32).collect(),
            )
        })
        .collect())
}

/// Kernels for every context and signaled index.
#[derive(Debug)]
pub struct NsdtKernelSet {
    trained: Vec<NsdtKernel>,
    givens: Vec<NsdtKernel>,
}

impl NsdtKernelSet {
    pub fn new(trained: Vec<NsdtKernel>) -> Result<Self, TransformError> {
        if trained.len() != NSDT_CONTEXTS {
            return Err(TransformError::KernelFile("expected one kernel per context"));
        }
        Ok(NsdtKernelSet { trained, givens: (0..NSDT_CONTEXTS).map(givens_kernel).collect() })
    }

    /// Set with the bundled trained kernels.
    pub fn global() -> &'static NsdtKernelSet {
        static SET: OnceLock<NsdtKernelSet> = OnceLock::new();
        SET.get_or_init(|| {
            let trained = read_kernel_file(BUNDLED_KLT).expect("bundled NSDT kernels are valid");
            NsdtKernelSet::new(trained).expect("bundled NSDT kernels are valid")
        })
    }

    /// Kernel for `ctx` and signaled `index` (1 or 2).
    pub fn kernel(&self, ctx: usize, index: u8) -> &NsdtKernel {
        match index {
            1 => &self.trained[ctx],
            _ => &self.givens[ctx],
        }
    }

    pub fn bundled_bytes() -> &'static [u8] {
        BUNDLED_KLT
    }
}
