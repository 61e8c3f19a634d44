//! Primary transform kernels: closed-form DCT/DST bases, LGT replacements
//! and their orthogonality-tuned 8-bit integer versions.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::ggl::{lgt_kernel, GglSpec};
use super::{TransformError, TxKind, TxType};
use crate::linalg::Matrix;

/// Integer kernels approximate `128 x` the orthonormal basis.
pub const INT_KERNEL_SCALE: i32 = 128;
/// Largest tolerated `|T T^T - 128^2 I|` entry, relative to `128^2`.
pub const MAX_GRAM_DEVIATION: f64 = 0.02;

/// Kernel family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Dct2,
    Adst,
    FlipAdst,
    Idt,
    Lgt4,
    Lgt8,
    Lgt16,
}

impl KernelKind {
    pub const ALL: [KernelKind; 7] = [
        KernelKind::Dct2,
        KernelKind::Adst,
        KernelKind::FlipAdst,
        KernelKind::Idt,
        KernelKind::Lgt4,
        KernelKind::Lgt8,
        KernelKind::Lgt16,
    ];

    /// Sizes at which a kernel of this family exists.
    pub fn sizes(self) -> &'static [usize] {
        match self {
            KernelKind::Dct2 | KernelKind::Idt => &[4, 8, 16, 32],
            KernelKind::Adst | KernelKind::FlipAdst => &[4, 8, 16],
            KernelKind::Lgt4 => &[4],
            KernelKind::Lgt8 => &[8],
            KernelKind::Lgt16 => &[16],
        }
    }
}

/// One 1-D transform: orthonormal float basis (rows, ascending frequency)
/// and its tuned integer counterpart.
#[derive(Clone, Debug)]
pub struct TxKernel {
    pub kind: KernelKind,
    pub n: usize,
    pub float: Matrix,
    /// Row-major, entries in `[-128, 128]`.
    pub int: Vec<i32>,
}

impl TxKernel {
    fn build(kind: KernelKind, float: Matrix) -> Result<Self, TransformError> {
        let int = quantize_kernel_int8(&float)?;
        Ok(TxKernel { kind, n: float.n(), float, int })
    }

    /// `max |T T^T - 128^2 I| / 128^2` of the integer kernel.
    pub fn int_gram_deviation(&self) -> f64 {
        gram_deviation_inf(&self.int, self.n)
    }
}

pub fn dct2_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, |k, i| {
        let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        c * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos()
    })
}

/// DST-VII: `sqrt(4/(2N+1)) sin(pi (2k+1)(n+1) / (2N+1))`.
pub fn dst7_matrix(n: usize) -> Matrix {
    let m = (2 * n + 1) as f64;
    Matrix::from_fn(n, |k, i| (4.0 / m).sqrt() * (PI * (2 * k + 1) as f64 * (i + 1) as f64 / m).sin())
}

/// DST-IV: `sqrt(2/N) sin(pi (2k+1)(2n+1) / (4N))`.
pub fn dst4_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, |k, i| {
        (2.0 / n as f64).sqrt() * (PI * (2 * k + 1) as f64 * (2 * i + 1) as f64 / (4 * n) as f64).sin()
    })
}

/// Reverses each basis vector and alternates row signs.
pub fn flip_matrix(m: &Matrix) -> Matrix {
    let n = m.n();
    Matrix::from_fn(n, |k, i| if k % 2 == 0 { m[(k, n - 1 - i)] } else { -m[(k, n - 1 - i)] })
}

fn flip_int(int: &[i32], n: usize) -> Vec<i32> {
    let mut out = vec![0; n * n];
    for k in 0..n {
        for i in 0..n {
            let v = int[k * n + n - 1 - i];
            out[k * n + i] = if k % 2 == 0 { v } else { -v };
        }
    }
    out
}

/// `T T^T - 128^2 I` in exact integer arithmetic.
fn gram_error(t: &[i32], n: usize) -> Vec<i64> {
    let target = (INT_KERNEL_SCALE * INT_KERNEL_SCALE) as i64;
    let mut e = vec![0i64; n * n];
    for r in 0..n {
        for c in 0..n {
            let dot: i64 = (0..n).map(|k| t[r * n + k] as i64 * t[c * n + k] as i64).sum();
            e[r * n + c] = dot - if r == c { target } else { 0 };
        }
    }
    e
}

pub fn gram_deviation_inf(t: &[i32], n: usize) -> f64 {
    let worst = gram_error(t, n).iter().map(|v| v.abs()).max().unwrap_or(0);
    worst as f64 / (INT_KERNEL_SCALE * INT_KERNEL_SCALE) as f64
}

/// Squared Frobenius norm of `T T^T - 128^2 I`.
pub fn gram_frobenius_sq(t: &[i32], n: usize) -> i64 {
    gram_error(t, n).iter().map(|v| v * v).sum()
}

/// Plain rounding of `128 x` without tuning.
pub fn round_kernel(float: &Matrix) -> Vec<i32> {
    let n = float.n();
    (0..n * n)
        .map(|i| (float[(i / n, i % n)] * INT_KERNEL_SCALE as f64).round() as i32)
        .collect()
}

/// Greedy orthogonality tuning: repeatedly applies single-entry `+/-1`
/// changes that strictly reduce `||T T^T - 128^2 I||_F` until none does.
pub fn tune_int_kernel(mut t: Vec<i32>, n: usize) -> Vec<i32> {
    let mut e = gram_error(&t, n);
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                for delta in [1i64, -1] {
                    let cur = t[i * n + j] as i64;
                    let next = cur + delta;
                    if !(-(INT_KERNEL_SCALE as i64)..=INT_KERNEL_SCALE as i64).contains(&next) {
                        continue;
                    }
                    // Only row/column i of the Gram error changes.
                    let mut gain = 0i64;
                    for k in 0..n {
                        if k == i {
                            let old = e[i * n + i];
                            let new = old + 2 * delta * cur + delta * delta;
                            gain += new * new - old * old;
                        } else {
                            let old = e[i * n + k];
                            let new = old + delta * t[k * n + j] as i64;
                            gain += 2 * (new * new - old * old);
                        }
                    }
                    if gain < 0 {
                        for k in 0..n {
                            if k == i {
                                e[i * n + i] += 2 * delta * cur + delta * delta;
                            } else {
                                let d = delta * t[k * n + j] as i64;
                                e[i * n + k] += d;
                                e[k * n + i] += d;
                            }
                        }
                        t[i * n + j] = next as i32;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            return t;
        }
    }
}

/// `round(128 x)` followed by greedy orthogonality tuning. Fails if the
/// tuned kernel still violates the Gram deviation bound.
pub fn quantize_kernel_int8(float: &Matrix) -> Result<Vec<i32>, TransformError> {
    let n = float.n();
    let tuned = tune_int_kernel(round_kernel(float), n);
    let dev = gram_deviation_inf(&tuned, n);
    if dev > MAX_GRAM_DEVIATION {
        return Err(TransformError::KernelTuning { n, deviation: dev });
    }
    Ok(tuned)
}

fn lgt_float(n: usize) -> Result<Matrix, TransformError> {
    let loop1 = match n {
        4 => 2.0,
        8 => 1.5,
        16 => 1.0,
        _ => return Err(TransformError::IllegalKernel { kind: TxKind::Adst, n }),
    };
    lgt_kernel(&GglSpec::relative(n, 1.0, loop1, 0.0)?)
}

/// All primary kernels, built once.
#[derive(Debug)]
pub struct KernelSet {
    dct: [TxKernel; 4],
    idt: [TxKernel; 4],
    adst: [TxKernel; 3],
    flip_adst: [TxKernel; 3],
    lgt: [TxKernel; 3],
    flip_lgt: [TxKernel; 3],
}

fn size_index(n: usize) -> Option<usize> {
    match n {
        4 => Some(0),
        8 => Some(1),
        16 => Some(2),
        32 => Some(3),
        _ => None,
    }
}

fn flipped(k: &TxKernel) -> TxKernel {
    TxKernel {
        kind: KernelKind::FlipAdst,
        n: k.n,
        float: flip_matrix(&k.float),
        int: flip_int(&k.int, k.n),
    }
}

impl KernelSet {
    pub fn build() -> Result<Self, TransformError> {
        let sizes = [4usize, 8, 16, 32];
        let mk = |f: &dyn Fn(usize) -> Result<TxKernel, TransformError>, ns: &[usize]| {
            ns.iter().map(|&n| f(n)).collect::<Result<Vec<_>, _>>()
        };
        let dct = mk(&|n| TxKernel::build(KernelKind::Dct2, dct2_matrix(n)), &sizes)?;
        let idt = mk(&|n| TxKernel::build(KernelKind::Idt, Matrix::identity(n)), &sizes)?;
        let adst = mk(
            &|n| {
                let m = if n == 4 { dst7_matrix(4) } else { dst4_matrix(n) };
                TxKernel::build(KernelKind::Adst, m)
            },
            &sizes[..3],
        )?;
        let lgt = mk(
            &|n| {
                let kind = match n {
                    4 => KernelKind::Lgt4,
                    8 => KernelKind::Lgt8,
                    _ => KernelKind::Lgt16,
                };
                TxKernel::build(kind, lgt_float(n)?)
            },
            &sizes[..3],
        )?;
        let flip_adst: Vec<_> = adst.iter().map(flipped).collect();
        let flip_lgt: Vec<_> = lgt.iter().map(flipped).collect();
        let arr4 = |v: Vec<TxKernel>| -> [TxKernel; 4] { v.try_into().unwrap() };
        let arr3 = |v: Vec<TxKernel>| -> [TxKernel; 3] { v.try_into().unwrap() };
        Ok(KernelSet {
            dct: arr4(dct),
            idt: arr4(idt),
            adst: arr3(adst),
            flip_adst: arr3(flip_adst),
            lgt: arr3(lgt),
            flip_lgt: arr3(flip_lgt),
        })
    }

    /// Process-wide kernel set.
    pub fn global() -> &'static KernelSet {
        static SET: OnceLock<KernelSet> = OnceLock::new();
        SET.get_or_init(|| KernelSet::build().expect("built-in kernels satisfy their invariants"))
    }

    /// Kernel for one dimension. With `ept` the ADST slot (and its flipped
    /// variant) is served by the LGT of matching length.
    pub fn kernel(&self, kind: TxKind, n: usize, ept: bool) -> Result<&TxKernel, TransformError> {
        let idx = size_index(n).ok_or(TransformError::IllegalKernel { kind, n })?;
        match kind {
            TxKind::Dct => Ok(&self.dct[idx]),
            TxKind::Idt => Ok(&self.idt[idx]),
            TxKind::Adst | TxKind::FlipAdst if idx >= 3 => {
                Err(TransformError::IllegalKernel { kind, n })
            }
            TxKind::Adst => Ok(if ept { &self.lgt[idx] } else { &self.adst[idx] }),
            TxKind::FlipAdst => Ok(if ept { &self.flip_lgt[idx] } else { &self.flip_adst[idx] }),
        }
    }

    /// Every kernel in the set (for invariant checks).
    pub fn all(&self) -> impl Iterator<Item = &TxKernel> {
        self.dct
            .iter()
            .chain(&self.idt)
            .chain(&self.adst)
            .chain(&self.flip_adst)
            .chain(&self.lgt)
            .chain(&self.flip_lgt)
    }
}

/// `(horizontal, vertical)` kernels of a `w x h` transform unit.
pub fn select_primary_kernels(
    w: usize,
    h: usize,
    tx: TxType,
    ept: bool,
) -> Result<(&'static TxKernel, &'static TxKernel), TransformError> {
    let set = KernelSet::global();
    Ok((set.kernel(tx.horz, w, ept)?, set.kernel(tx.vert, h, ept)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_orthonormal() {
        for n in [4, 8, 16, 32] {
            assert!(dct2_matrix(n).orthonormality_error() < 1e-12);
            assert!(dst7_matrix(n).orthonormality_error() < 1e-12);
            assert!(dst4_matrix(n).orthonormality_error() < 1e-12);
            assert!(flip_matrix(&dst7_matrix(n)).orthonormality_error() < 1e-12);
        }
    }

    #[test]
    fn identity_quantizes_exactly() {
        let t = quantize_kernel_int8(&Matrix::identity(8)).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(t[r * 8 + c], if r == c { 128 } else { 0 });
            }
        }
    }

    #[test]
    fn tuning_never_worse_than_rounding() {
        let f = dst4_matrix(4);
        let plain = round_kernel(&f);
        let tuned = tune_int_kernel(plain.clone(), 4);
        assert!(gram_frobenius_sq(&tuned, 4) <= gram_frobenius_sq(&plain, 4));
        for n in [8, 16, 32] {
            let f = dct2_matrix(n);
            let plain = round_kernel(&f);
            let tuned = tune_int_kernel(plain.clone(), n);
            assert!(gram_frobenius_sq(&tuned, n) <= gram_frobenius_sq(&plain, n));
        }
    }

    #[test]
    fn tuning_is_idempotent() {
        for n in [4, 8, 16, 32] {
            let tuned = tune_int_kernel(round_kernel(&dct2_matrix(n)), n);
            assert_eq!(tune_int_kernel(tuned.clone(), n), tuned);
        }
    }

    #[test]
    fn selection_respects_ept() {
        let set = KernelSet::global();
        let off = set.kernel(TxKind::Adst, 4, false).unwrap();
        let on = set.kernel(TxKind::Adst, 4, true).unwrap();
        assert!(off.float.max_abs_diff(&dst7_matrix(4)) < 1e-12);
        assert!(on.float.max_abs_diff(&dst4_matrix(4)) < 1e-6);
        assert_eq!(on.kind, KernelKind::Lgt4);
        for n in [4, 8, 16, 32] {
            let a = set.kernel(TxKind::Dct, n, false).unwrap();
            let b = set.kernel(TxKind::Dct, n, true).unwrap();
            assert!(std::ptr::eq(a, b));
        }
        assert!(set.kernel(TxKind::Adst, 32, false).is_err());
        assert!(set.kernel(TxKind::FlipAdst, 32, true).is_err());
    }

    #[test]
    fn every_int_kernel_within_bound() {
        for k in KernelSet::global().all() {
            assert!(k.int_gram_deviation() <= MAX_GRAM_DEVIATION, "{:?} {}", k.kind, k.n);
            assert!(k.int.iter().all(|&v| (-128..=128).contains(&v)));
        }
    }
}
