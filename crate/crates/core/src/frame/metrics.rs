//! PSNR, block SSIM and the 6:1:1 weighted overall score.

use super::{Frame, FrameError, Plane, PlaneId};

/// PSNR reported for identical planes.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 8;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn check_dims(a: &Plane, b: &Plane) -> Result<(), FrameError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(FrameError::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    Ok(())
}

/// `10 log10(255^2 / MSE)`, capped at 100 dB.
pub fn psnr(reference: &Plane, test: &Plane) -> Result<f64, FrameError> {
    check_dims(reference, test)?;
    Ok(psnr_from_sse(reference.sse(test), reference.width() * reference.height()))
}

pub fn psnr_from_sse(sse: u64, samples: usize) -> f64 {
    if sse == 0 {
        return PSNR_CAP_DB;
    }
    let mse = sse as f64 / samples as f64;
    (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP_DB)
}

/// Luminance and contrast-structure terms of one window.
fn window_terms(a: &Plane, b: &Plane, x0: usize, y0: usize, w: usize, h: usize) -> (f64, f64) {
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for y in y0..y0 + h {
        let (ra, rb) = (&a.row(y)[x0..x0 + w], &b.row(y)[x0..x0 + w]);
        for (&p, &q) in ra.iter().zip(rb) {
            let (p, q) = (p as u64, q as u64);
            sa += p;
            sb += q;
            saa += p * p;
            sbb += q * q;
            sab += p * q;
        }
    }
    let n = (w * h) as f64;
    let (ma, mb) = (sa as f64 / n, sb as f64 / n);
    let va = saa as f64 / n - ma * ma;
    let vb = sbb as f64 / n - mb * mb;
    let cov = sab as f64 / n - ma * mb;
    let lum = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
    let cs = (2.0 * cov + C2) / (va + vb + C2);
    (lum, cs)
}

fn ssim_impl(a: &Plane, b: &Plane, win: usize) -> f64 {
    let (nx, ny) = (a.width() / win, a.height() / win);
    let mut total = 0.0;
    for by in 0..ny {
        for bx in 0..nx {
            let (l, cs) = window_terms(a, b, bx * win, by * win, win, win);
            total += l * cs;
        }
    }
    total / (nx * ny) as f64
}

/// Mean SSIM over non-overlapping 8x8 windows (no Gaussian weighting).
/// Samples outside the last full window in each direction are ignored.
pub fn ssim(reference: &Plane, test: &Plane) -> Result<f64, FrameError> {
    check_dims(reference, test)?;
    if reference.width() < SSIM_WINDOW || reference.height() < SSIM_WINDOW {
        return Err(FrameError::BadDimensions(reference.width(), reference.height()));
    }
    Ok(ssim_impl(reference, test, SSIM_WINDOW))
}

/// Mean contrast-structure term over the same windows as [`ssim`].
pub fn ssim_contrast_structure(reference: &Plane, test: &Plane) -> Result<f64, FrameError> {
    check_dims(reference, test)?;
    if reference.width() < SSIM_WINDOW || reference.height() < SSIM_WINDOW {
        return Err(FrameError::BadDimensions(reference.width(), reference.height()));
    }
    let (nx, ny) = (reference.width() / SSIM_WINDOW, reference.height() / SSIM_WINDOW);
    let mut total = 0.0;
    for by in 0..ny {
        for bx in 0..nx {
            total += window_terms(reference, test, bx * 8, by * 8, 8, 8).1;
        }
    }
    Ok(total / (nx * ny) as f64)
}

/// SSIM that degrades to a single whole-plane window for planes smaller
/// than 8x8 (chroma of tiny frames).
fn ssim_any(reference: &Plane, test: &Plane) -> f64 {
    if reference.width() >= SSIM_WINDOW && reference.height() >= SSIM_WINDOW {
        ssim_impl(reference, test, SSIM_WINDOW)
    } else {
        let (l, cs) = window_terms(reference, test, 0, 0, reference.width(), reference.height());
        l * cs
    }
}

/// `(6 y + cb + cr) / 8`.
#[inline]
pub fn overall_score(y: f64, cb: f64, cr: f64) -> f64 {
    (6.0 * y + cb + cr) / 8.0
}

/// Per-plane PSNR/SSIM plus weighted overall values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityScore {
    pub psnr: [f64; 3],
    pub ssim: [f64; 3],
    pub overall_psnr: f64,
    pub overall_ssim: f64,
}

impl QualityScore {
    pub fn from_planes(psnr: [f64; 3], ssim: [f64; 3]) -> Self {
        QualityScore {
            psnr,
            ssim,
            overall_psnr: overall_score(psnr[0], psnr[1], psnr[2]),
            overall_ssim: overall_score(ssim[0], ssim[1], ssim[2]),
        }
    }

    pub fn measure(reference: &Frame, test: &Frame) -> Result<Self, FrameError> {
        let mut p = [0.0; 3];
        let mut s = [0.0; 3];
        for id in PlaneId::ALL {
            let (a, b) = (reference.plane(id), test.plane(id));
            p[id as usize] = psnr(a, b)?;
            s[id as usize] = ssim_any(a, b);
        }
        Ok(Self::from_planes(p, s))
    }

    pub fn psnr_y(&self) -> f64 {
        self.psnr[0]
    }
    pub fn psnr_cb(&self) -> f64 {
        self.psnr[1]
    }
    pub fn psnr_cr(&self) -> f64 {
        self.psnr[2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Plane {
        let mut p = Plane::new(w, h, 0);
        for y in 0..h {
            for x in 0..w {
                p.set(x, y, f(x, y));
            }
        }
        p
    }

    #[test]
    fn psnr_identical_is_capped() {
        let a = plane_fn(16, 16, |x, y| (x * y) as u8);
        assert_eq!(psnr(&a, &a).unwrap(), 100.0);
    }

    #[test]
    fn psnr_off_by_one() {
        let a = plane_fn(16, 16, |x, _| x as u8 * 3);
        let b = plane_fn(16, 16, |x, _| x as u8 * 3 + 1);
        let expected = 20.0 * 255f64.log10();
        assert!((psnr(&a, &b).unwrap() - 48.13).abs() < 0.01);
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn psnr_full_scale_error() {
        let a = Plane::new(8, 8, 0);
        let b = Plane::new(8, 8, 255);
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        assert!(psnr(&Plane::new(8, 8, 0), &Plane::new(8, 9, 0)).is_err());
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = plane_fn(24, 16, |x, y| (x * 7 + y * 13) as u8);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_planes() {
        // Independent closed form for constant windows: variances and
        // covariance vanish, leaving C1 / (0^2 + 255^2 + C1).
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = c1 / (255.0f64.powi(2) + c1);
        let got = ssim(&Plane::new(8, 8, 0), &Plane::new(8, 8, 255)).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!((got - 9.9990e-5).abs() < 1e-8);
    }

    #[test]
    fn ssim_requires_eight_by_eight() {
        assert!(ssim(&Plane::new(4, 8, 0), &Plane::new(4, 8, 0)).is_err());
    }

    #[test]
    fn overall_weighting() {
        assert_eq!(overall_score(48.0, 40.0, 40.0), 46.0);
        assert_eq!(overall_score(0.0, 8.0, 8.0), 2.0);
        assert_eq!(overall_score(3.5, 3.5, 3.5), 3.5);
    }
}
