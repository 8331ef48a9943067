//! Compositional bias estimation.
//!
//! Under sparse signal most taxa have `α_i = 0`, so the CLR coefficients
//! `α̃_i = α_i - ᾱ` pile up around `-ᾱ`. The bias is read off as the mode of a
//! Gaussian kernel density estimate of `{√n α̃_i}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `0.9 min(sd, IQR/1.349) m^(-1/5)`.
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
    pub grid_points: usize,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self { bandwidth: Bandwidth::Silverman, grid_points: 512 }
    }
}

/// Result of [`debias`].
#[derive(Debug, Clone, PartialEq)]
pub struct BiasEstimate {
    /// Added to every coefficient: `α̂_i = α̃_i + shift`, with
    /// `shift = -mode / √n`.
    pub alpha_tilde_shift: f64,
    /// `None` when all points coincide and no density was evaluated.
    pub bandwidth: Option<f64>,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    /// Mode on the `√n` scale.
    pub mode_location: f64,
}

/// Silverman's rule of thumb. Falls back to the standard deviation when the
/// IQR is zero; errors with [`Error::ZeroSpread`] when every point is equal.
pub fn select_bandwidth(points: &[f64]) -> Result<f64> {
    let m = points.len();
    if m < 3 {
        return Err(Error::InsufficientTaxa(m));
    }
    let sorted = math::sorted(points);
    if sorted[0] == sorted[m - 1] {
        return Err(Error::ZeroSpread(sorted[0]));
    }
    let sd = math::sd(points);
    let iqr = math::quantile_sorted(&sorted, 0.75) - math::quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    Ok(0.9 * spread * math::powf(m as f64, -0.2))
}

/// Location of the KDE maximum and the grid it was searched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEstimate {
    pub location: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
}

/// Unnormalized Gaussian KDE at `x`.
fn density(points: &[f64], h: f64, x: f64) -> f64 {
    points
        .iter()
        .map(|p| {
            let z = (x - p) / h;
            math::exp(-0.5 * z * z)
        })
        .sum()
}

/// Mode of the Gaussian KDE of `points` with bandwidth `h`.
///
/// The density is evaluated on `grid_points` equally spaced points over
/// `[min - 3h, max + 3h]`; ties go to the smallest `|x|`, then the smallest
/// `x`. The grid maximum is then polished by mean-shift iterations, which
/// climb to the local density maximum inside the winning grid cell's basin.
pub fn estimate_mode(points: &[f64], h: f64, grid_points: usize) -> ModeEstimate {
    assert!(h > 0.0, "bandwidth must be positive");
    assert!(!points.is_empty(), "mode of an empty set");
    let grid_points = grid_points.max(2);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in points {
        min = min.min(p);
        max = max.max(p);
    }
    let lo = min - 3.0 * h;
    let hi = max + 3.0 * h;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let grid_x = |k: usize| if k + 1 == grid_points { hi } else { lo + k as f64 * step };

    let dens = par::map_indexed(grid_points, |k| density(points, h, grid_x(k)));
    let mut best = 0usize;
    for k in 1..grid_points {
        let (x, xb) = (grid_x(k), grid_x(best));
        if dens[k] > dens[best]
            || (dens[k] == dens[best] && (x.abs() < xb.abs() || (x.abs() == xb.abs() && x < xb)))
        {
            best = k;
        }
    }

    let mut x = grid_x(best);
    for _ in 0..1000 {
        let (mut sw, mut swp) = (0.0, 0.0);
        for &p in points {
            let z = (x - p) / h;
            let w = math::exp(-0.5 * z * z);
            sw += w;
            swp += w * p;
        }
        if !(sw > 0.0) {
            break;
        }
        let next = swp / sw;
        let delta = (next - x).abs();
        x = next;
        if delta <= 1e-13 * (h + x.abs()) {
            break;
        }
    }
    ModeEstimate { location: x.clamp(lo, hi), grid_lo: lo, grid_hi: hi }
}

/// Estimates the bias from `α̃` and returns the corrected coefficients
/// `α̂_i = α̃_i - mode({√n α̃_i}) / √n` together with the estimate.
///
/// Non-finite coefficients are ignored when locating the mode and stay
/// non-finite in the output.
pub fn debias(alpha_tilde: &[f64], n: usize, config: &KdeConfig) -> Result<(Vec<f64>, BiasEstimate)> {
    let root_n = math::sqrt(n as f64);
    let points: Vec<f64> =
        alpha_tilde.iter().filter(|a| a.is_finite()).map(|a| root_n * a).collect();
    if points.len() < 3 {
        return Err(Error::InsufficientTaxa(points.len()));
    }

    let bandwidth = match config.bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Some(h),
        Bandwidth::Fixed(h) => {
            return Err(Error::Validation(alloc::format!("bandwidth must be positive, got {h}")))
        }
        Bandwidth::Silverman => match select_bandwidth(&points) {
            Ok(h) => Some(h),
            Err(Error::ZeroSpread(_)) => None,
            Err(e) => return Err(e),
        },
    };

    let (mode, lo, hi) = match bandwidth {
        Some(h) => {
            let est = estimate_mode(&points, h, config.grid_points);
            (est.location, est.grid_lo, est.grid_hi)
        }
        None => (points[0], points[0], points[0]),
    };
    let shift = -mode / root_n;
    let corrected = alpha_tilde.iter().map(|a| a + shift).collect();
    Ok((
        corrected,
        BiasEstimate {
            alpha_tilde_shift: shift,
            bandwidth,
            grid_lo: lo,
            grid_hi: hi,
            grid_points: config.grid_points,
            mode_location: mode,
        },
    ))
}
