//! Image-quality measurements: lateral FWHM at wire targets, contrast ratio
//! and contrast-to-noise ratio between matched circular regions, and an
//! estimate of the rendered cyst radius.
//!
//! All measurements run on the log-compressed image without the display
//! dynamic-range floor, so deep shadows are not clipped before averaging.

use crate::error::{invalid, measurement, Result};
use crate::model::BeamformedImage;
use crate::scalar::{real, RealScalar};

/// dB floor substituted for silent pixels so interpolation stays finite.
const DB_FLOOR: f64 = -200.0;

/// Matched measurement regions: a circle inside the cyst and an equal circle
/// in the speckle background at the same depth.
#[derive(Debug, Clone, Copy)]
pub struct RoiPair<T> {
    pub cyst_center: (T, T),
    pub background_center: (T, T),
    /// Region radius (m), conventionally the true cyst radius.
    pub radius: T,
}

impl<T: RealScalar> RoiPair<T> {
    pub fn new(cyst_center: (T, T), background_center: (T, T), radius: T) -> Self {
        Self {
            cyst_center,
            background_center,
            radius,
        }
    }

    /// Background region 6 mm to the right of the cyst, at the same depth.
    pub fn beside(cyst_center: (T, T), radius: T) -> Self {
        Self {
            cyst_center,
            background_center: (cyst_center.0 + real::<T>(6.0e-3), cyst_center.1),
            radius,
        }
    }
}

/// Per-target measurements from one image, with vector entries in target
/// order. The wire-target phantom fills `fwhm_mm`; the cyst phantom fills the
/// rest.
#[derive(Debug, Clone)]
pub struct QualityReport<T> {
    pub fwhm_mm: Vec<T>,
    pub cr_db: Vec<T>,
    pub cnr: Vec<T>,
    pub radius_mm: Vec<T>,
    /// Absolute error |estimated − true| of the cyst radius (mm).
    pub radius_err_mm: Vec<T>,
}

impl<T: RealScalar> QualityReport<T> {
    pub fn empty() -> Self {
        Self {
            fwhm_mm: Vec::new(),
            cr_db: Vec::new(),
            cnr: Vec::new(),
            radius_mm: Vec::new(),
            radius_err_mm: Vec::new(),
        }
    }

    pub fn mean_fwhm_mm(&self) -> Option<T> {
        mean(&self.fwhm_mm)
    }

    pub fn mean_cr_db(&self) -> Option<T> {
        mean(&self.cr_db)
    }

    pub fn mean_cnr(&self) -> Option<T> {
        mean(&self.cnr)
    }

    pub fn mean_radius_mm(&self) -> Option<T> {
        mean(&self.radius_mm)
    }

    pub fn mean_radius_err_mm(&self) -> Option<T> {
        mean(&self.radius_err_mm)
    }
}

fn mean<T: RealScalar>(v: &[T]) -> Option<T> {
    if v.is_empty() {
        None
    } else {
        Some(
            v.iter().fold(T::zero(), |a, &b| a + b) / real::<T>(v.len() as f64),
        )
    }
}

/// Lateral full width at half maximum (mm) of the brightest point within
/// ±1 mm of `target_depth`.
///
/// The peak is searched over every scanline and the depth rows inside the
/// window (guard rows excluded); the lateral profile through the peak row is
/// log-compressed relative to the peak and the −6 dB crossings are located by
/// linear interpolation in dB. A profile that never falls 6 dB below its peak
/// on one side is a measurement failure.
pub fn lateral_fwhm<T: RealScalar>(image: &BeamformedImage<T>, target_depth: T) -> Result<T> {
    if image.n_scanlines < 3 {
        return invalid("lateral width needs at least three scanlines");
    }
    let half_window = real::<T>(1.0e-3);
    let rows: Vec<usize> = (0..image.n_depth)
        .filter(|&j| {
            !image.in_guard(j) && (image.depth_of(j) - target_depth).abs() <= half_window
        })
        .collect();
    if rows.is_empty() {
        return invalid("no usable depth rows within 1 mm of the target");
    }
    let mut peak = (0usize, rows[0], T::zero());
    for s in 0..image.n_scanlines {
        for &j in &rows {
            let v = image.value(s, j);
            if v > peak.2 {
                peak = (s, j, v);
            }
        }
    }
    let (s_peak, j_peak, peak_val) = peak;
    if !(peak_val > T::zero()) {
        return measurement("target region is silent; no peak to measure");
    }

    let floor = real::<T>(DB_FLOOR);
    let profile: Vec<T> = (0..image.n_scanlines)
        .map(|s| {
            let v = image.value(s, j_peak);
            if v > T::zero() {
                (real::<T>(20.0) * (v / peak_val).log10()).max(floor)
            } else {
                floor
            }
        })
        .collect();
    let half = real::<T>(-6.0);
    let xs = &image.scanline_x;

    let left = (0..s_peak)
        .rev()
        .find(|&s| profile[s] < half)
        .map(|s| cross(xs[s], profile[s], xs[s + 1], profile[s + 1], half));
    let right = (s_peak + 1..image.n_scanlines)
        .find(|&s| profile[s] < half)
        .map(|s| cross(xs[s - 1], profile[s - 1], xs[s], profile[s], half));
    match (left, right) {
        (Some(l), Some(r)) => Ok((r - l) * real::<T>(1.0e3)),
        _ => measurement("lateral profile never falls 6 dB below the peak on both sides"),
    }
}

/// Linear interpolation of the position where the profile crosses `level`
/// between two samples.
fn cross<T: RealScalar>(x0: T, p0: T, x1: T, p1: T, level: T) -> T {
    x0 + (x1 - x0) * (level - p0) / (p1 - p0)
}

/// Contrast ratio (dB): mean background level minus mean cyst level over the
/// matched regions.
pub fn contrast_ratio<T: RealScalar>(image: &BeamformedImage<T>, roi: &RoiPair<T>) -> Result<T> {
    let db = image.db_unclamped();
    let cyst = disk_stats(image, &db, roi.cyst_center, roi.radius)?;
    let bg = disk_stats(image, &db, roi.background_center, roi.radius)?;
    Ok(bg.mean - cyst.mean)
}

/// Contrast-to-noise ratio (dimensionless): contrast ratio divided by the
/// standard deviation of the background level in dB.
pub fn contrast_to_noise<T: RealScalar>(
    image: &BeamformedImage<T>,
    roi: &RoiPair<T>,
) -> Result<T> {
    let db = image.db_unclamped();
    let cyst = disk_stats(image, &db, roi.cyst_center, roi.radius)?;
    let bg = disk_stats(image, &db, roi.background_center, roi.radius)?;
    if bg.n < 2 {
        return measurement("background region needs at least two pixels for a deviation");
    }
    if !(bg.std > T::zero()) {
        return measurement("background level has zero spread; contrast-to-noise is undefined");
    }
    Ok((bg.mean - cyst.mean) / bg.std)
}

/// Estimated rendered cyst radius (mm), measured by casting `n_rays` rays
/// outward from the cyst center and averaging the first crossings of the
/// midpoint level between the cyst and background means. Rays end at the grid
/// edge; rays that never cross are skipped.
pub fn estimate_cyst_radius<T: RealScalar>(
    image: &BeamformedImage<T>,
    roi: &RoiPair<T>,
    n_rays: usize,
) -> Result<T> {
    if n_rays < 4 {
        return invalid("radius estimation needs at least four rays");
    }
    if image.n_scanlines < 2 || image.n_depth < 2 {
        return invalid("radius estimation needs a two-dimensional image");
    }
    let db = floored_db(image);
    let cyst = disk_stats(image, &db, roi.cyst_center, roi.radius)?;
    let bg = disk_stats(image, &db, roi.background_center, roi.radius)?;
    if bg.mean - cyst.mean < real::<T>(3.0) {
        return measurement("cyst is less than 3 dB below the background; no rim to find");
    }
    let threshold = (cyst.mean + bg.mean) / real::<T>(2.0);

    let lateral_step = (image.scanline_x[1] - image.scanline_x[0]).abs();
    let step = lateral_step.min(image.depth_step) / real::<T>(2.0);
    let (cx, cz) = roi.cyst_center;
    let two_pi = real::<T>(2.0 * std::f64::consts::PI);
    let mut crossings = Vec::new();
    for ray in 0..n_rays {
        let angle = two_pi * real::<T>(ray as f64) / real::<T>(n_rays as f64);
        let (dx, dz) = (angle.cos(), angle.sin());
        let mut prev = match bilinear(image, &db, cx, cz) {
            Some(v) => v,
            None => continue, // center happens to fall outside the grid
        };
        if prev >= threshold {
            crossings.push(T::zero());
            continue;
        }
        let mut t = 1usize;
        loop {
            let r = step * real::<T>(t as f64);
            let Some(cur) = bilinear(image, &db, cx + dx * r, cz + dz * r) else {
                break; // ray left the grid without crossing
            };
            if cur >= threshold {
                let r_prev = r - step;
                crossings.push(r_prev + step * (threshold - prev) / (cur - prev));
                break;
            }
            prev = cur;
            t += 1;
        }
    }
    if crossings.is_empty() {
        return measurement("no ray crossed the cyst rim");
    }
    let sum = crossings.iter().fold(T::zero(), |a, &b| a + b);
    Ok(sum / real::<T>(crossings.len() as f64) * real::<T>(1.0e3))
}

/// FWHM report over the wire targets, one entry per requested depth.
pub fn point_report<T: RealScalar>(
    image: &BeamformedImage<T>,
    target_depths: &[T],
) -> Result<QualityReport<T>> {
    let mut report = QualityReport::empty();
    for &z in target_depths {
        report.fwhm_mm.push(lateral_fwhm(image, z)?);
    }
    Ok(report)
}

/// Contrast, contrast-to-noise, and radius report over the cysts, one entry
/// per region pair.
pub fn cyst_report<T: RealScalar>(
    image: &BeamformedImage<T>,
    rois: &[RoiPair<T>],
    n_rays: usize,
) -> Result<QualityReport<T>> {
    let mut report = QualityReport::empty();
    for roi in rois {
        report.cr_db.push(contrast_ratio(image, roi)?);
        report.cnr.push(contrast_to_noise(image, roi)?);
        let r = estimate_cyst_radius(image, roi, n_rays)?;
        report.radius_mm.push(r);
        report
            .radius_err_mm
            .push((r - roi.radius * real::<T>(1.0e3)).abs());
    }
    Ok(report)
}

struct DiskStats<T> {
    mean: T,
    std: T,
    n: usize,
}

/// Mean and population standard deviation of the dB level over the pixels
/// strictly inside the circle, excluding guard rows. The circle must lie
/// within the image bounds.
fn disk_stats<T: RealScalar>(
    image: &BeamformedImage<T>,
    db: &[T],
    center: (T, T),
    radius: T,
) -> Result<DiskStats<T>> {
    if !(radius > T::zero()) {
        return invalid("measurement region needs a positive radius");
    }
    let (cx, cz) = center;
    let eps = real::<T>(1.0e-9);
    let x_lo = image.scanline_x[0].min(image.scanline_x[image.n_scanlines - 1]);
    let x_hi = image.scanline_x[0].max(image.scanline_x[image.n_scanlines - 1]);
    let z_hi = image.depth_of(image.n_depth - 1);
    if cx - radius < x_lo - eps
        || cx + radius > x_hi + eps
        || cz - radius < image.depth_min - eps
        || cz + radius > z_hi + eps
    {
        return invalid("measurement circle extends beyond the image");
    }
    let r_sq = radius * radius;
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    let mut n = 0usize;
    for s in 0..image.n_scanlines {
        let dx = image.scanline_x[s] - cx;
        if dx.abs() >= radius {
            continue;
        }
        for j in 0..image.n_depth {
            if image.in_guard(j) {
                continue;
            }
            let dz = image.depth_of(j) - cz;
            if dx * dx + dz * dz < r_sq {
                let v = db[image.index(s, j)];
                if !v.is_finite() {
                    return measurement("measurement region contains silent pixels");
                }
                sum += v;
                sum_sq += v * v;
                n += 1;
            }
        }
    }
    if n == 0 {
        return measurement("measurement circle covers no usable pixels");
    }
    let count = real::<T>(n as f64);
    let mean = sum / count;
    let var = (sum_sq / count - mean * mean).max(T::zero());
    Ok(DiskStats {
        mean,
        std: var.sqrt(),
        n,
    })
}

/// Unclamped dB map with silent pixels floored at −200 dB so interpolation
/// never meets infinities.
fn floored_db<T: RealScalar>(image: &BeamformedImage<T>) -> Vec<T> {
    let floor = real::<T>(DB_FLOOR);
    image
        .db_unclamped()
        .into_iter()
        .map(|v| if v.is_finite() { v.max(floor) } else { floor })
        .collect()
}

/// Bilinear sample of the dB map at a physical position; `None` outside the
/// grid. Assumes uniformly spaced scanlines, which the geometry guarantees.
fn bilinear<T: RealScalar>(
    image: &BeamformedImage<T>,
    db: &[T],
    x: T,
    z: T,
) -> Option<T> {
    let x0 = image.scanline_x[0];
    let dxs = image.scanline_x[1] - image.scanline_x[0];
    let fx = (x - x0) / dxs;
    let fz = (z - image.depth_min) / image.depth_step;
    let max_x = real::<T>((image.n_scanlines - 1) as f64);
    let max_z = real::<T>((image.n_depth - 1) as f64);
    if !(fx >= T::zero()) || !(fz >= T::zero()) || fx > max_x || fz > max_z {
        return None;
    }
    let i = fx
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(image.n_scanlines - 2);
    let j = fz.floor().to_usize().unwrap_or(0).min(image.n_depth - 2);
    let tx = fx - real::<T>(i as f64);
    let tz = fz - real::<T>(j as f64);
    let v00 = db[image.index(i, j)];
    let v01 = db[image.index(i, j + 1)];
    let v10 = db[image.index(i + 1, j)];
    let v11 = db[image.index(i + 1, j + 1)];
    let one = T::one();
    Some(
        v00 * (one - tx) * (one - tz)
            + v10 * tx * (one - tz)
            + v01 * (one - tx) * tz
            + v11 * tx * tz,
    )
}
