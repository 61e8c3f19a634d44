//! Bjøntegaard delta rate.

use crate::linalg::{polyfit, polyint};

/// Minimum overlapping quality span for the cubic fit.
pub const MIN_CUBIC_SPAN: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum BdError {
    #[error("curve needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("bitrates must be positive and finite")]
    BadRate,
    #[error("quality values must be finite")]
    BadQuality,
    #[error("bitrates must be strictly increasing")]
    RateNotIncreasing,
    #[error("quality ranges do not overlap")]
    NoOverlap,
}

/// Rate-quality points of one encoder configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    /// `(bitrate, quality)`, sorted by bitrate.
    points: Vec<(f64, f64)>,
}

impl RdCurve {
    /// Sorts the points by bitrate and validates them. Quality that falls
    /// while the rate rises is logged, not rejected.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self, BdError> {
        if points.len() < 4 {
            return Err(BdError::TooFewPoints(points.len()));
        }
        if points.iter().any(|p| !(p.0.is_finite() && p.0 > 0.0)) {
            return Err(BdError::BadRate);
        }
        if points.iter().any(|p| !p.1.is_finite()) {
            return Err(BdError::BadQuality);
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(BdError::RateNotIncreasing);
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            log::warn!("quality decreases with rate on an RD curve");
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn quality_range(&self) -> (f64, f64) {
        let q = self.points.iter().map(|p| p.1);
        (q.clone().fold(f64::INFINITY, f64::min), q.fold(f64::NEG_INFINITY, f64::max))
    }

    /// `(quality - center, log10 rate)` ordered by quality.
    fn log_points(&self, center: f64) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.points.iter().map(|p| (p.1 - center, p.0.log10())).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }
}

/// Integral of the piecewise-linear interpolant of `pts` over `[a, b]`.
fn linear_integral(pts: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let interp = |x: f64| {
        let i = pts.partition_point(|p| p.0 < x).clamp(1, pts.len() - 1);
        let ((x0, y0), (x1, y1)) = (pts[i - 1], pts[i]);
        if x1 == x0 {
            (y0 + y1) / 2.0
        } else {
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    };
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).filter(|&x| x > a && x < b).collect();
    xs.insert(0, a);
    xs.push(b);
    xs.windows(2).map(|w| (w[1] - w[0]) * (interp(w[0]) + interp(w[1])) / 2.0).sum()
}

fn integral(pts: &[(f64, f64)], a: f64, b: f64, cubic: bool) -> f64 {
    if cubic {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        if let Some(c) = polyfit(&xs, &ys, 3) {
            return polyint(&c, a, b);
        }
        log::warn!("cubic fit failed, using piecewise-linear integration");
    }
    linear_integral(pts, a, b)
}

/// Average bitrate difference of `test` against `anchor` at equal quality,
/// in percent. Fits log10 rate as a cubic in quality over the overlapping
/// quality interval; narrower overlaps than [`MIN_CUBIC_SPAN`] use
/// piecewise-linear interpolation.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64, BdError> {
    let (a_lo, a_hi) = anchor.quality_range();
    let (t_lo, t_hi) = test.quality_range();
    let (lo, hi) = (a_lo.max(t_lo), a_hi.min(t_hi));
    if !(hi > lo) {
        return Err(BdError::NoOverlap);
    }
    let center = (lo + hi) / 2.0;
    let cubic = hi - lo >= MIN_CUBIC_SPAN;
    if !cubic {
        log::warn!("quality overlap {:.3} dB below {MIN_CUBIC_SPAN} dB, using piecewise-linear integration", hi - lo);
    }
    let (a, b) = (lo - center, hi - center);
    let ia = integral(&anchor.log_points(center), a, b, cubic);
    let it = integral(&test.log_points(center), a, b, cubic);
    let diff = (it - ia) / (b - a);
    Ok((10f64.powf(diff) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(scale: f64) -> RdCurve {
        let pts = [(0.1, 30.0), (0.2, 33.1), (0.4, 36.0), (0.8, 38.7), (1.6, 41.0), (3.2, 43.2)];
        RdCurve::new(pts.iter().map(|&(r, q)| (r * scale, q)).collect()).unwrap()
    }

    #[test]
    fn identical_curves() {
        assert_eq!(bd_rate(&curve(1.0), &curve(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn constant_scale() {
        let d = bd_rate(&curve(1.0), &curve(0.9)).unwrap();
        assert!((d + 10.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(RdCurve::new(vec![(1.0, 1.0); 3]), Err(BdError::TooFewPoints(3)));
        let flat = vec![(1.0, 30.0), (1.0, 31.0), (2.0, 32.0), (3.0, 33.0)];
        assert_eq!(RdCurve::new(flat), Err(BdError::RateNotIncreasing));
        let far = RdCurve::new(vec![(1.0, 50.0), (2.0, 51.0), (3.0, 52.0), (4.0, 53.0)]).unwrap();
        assert_eq!(bd_rate(&curve(1.0), &far), Err(BdError::NoOverlap));
    }

    #[test]
    fn narrow_overlap_uses_linear_integration() {
        let a = RdCurve::new(vec![(1.0, 40.0), (2.0, 40.1), (3.0, 40.2), (4.0, 40.3)]).unwrap();
        let b = RdCurve::new(vec![(0.9, 40.0), (1.8, 40.1), (2.7, 40.2), (3.6, 40.3)]).unwrap();
        assert!((bd_rate(&a, &b).unwrap() + 10.0).abs() < 1e-9);
    }
}
