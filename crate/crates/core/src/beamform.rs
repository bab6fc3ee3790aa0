//! Receive beamforming: delay alignment, covariance estimation with spatial
//! smoothing and temporal averaging, diagonal loading, minimum-variance and
//! eigenspace-projected weights, and whole-image formation.
//!
//! The adaptive chain per pixel: select a contiguous receive aperture centered
//! on the scanline, delay-align a short temporal neighbourhood of snapshots,
//! estimate the spatially smoothed covariance over subarrays of length L and
//! 2K+1 time samples, load the diagonal by Δ·trace, solve for the
//! distortionless minimum-variance weights, optionally project them onto the
//! dominant eigenspace, and recombine over the subarrays.

use crate::error::{invalid, numerical, Error, Result};
use crate::model::{
    make_window, BeamformMethod, BeamformedImage, BeamformerParams, RfChannelFrame, ScanGeometry,
    TransmitPulse,
};
use crate::numerics::{eig_hermitian, envelope, solve_hpd, HermitianMatrix};
use crate::scalar::{real, Field, RealScalar};
use crate::sim::transmit_time;
use num_traits::{Float, One, Zero};
use rayon::prelude::*;

/// A contiguous receive aperture: `m` elements starting at array index `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Aperture {
    pub start: usize,
    pub m: usize,
}

impl Aperture {
    /// Array indices covered by the aperture.
    pub fn elements(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.m
    }
}

/// Focusing delays, in samples, for every element of one aperture at one
/// image point.
#[derive(Debug, Clone)]
pub struct ApertureDelays<T> {
    pub aperture: Aperture,
    pub delays: Vec<T>,
}

/// Delay-aligned aperture data: snapshots at temporal offsets −k_max..=k_max
/// around the focusing instant, each snapshot holding one sample per element.
#[derive(Debug, Clone)]
pub struct DelayedAperture<F> {
    data: Vec<F>,
    m: usize,
    k_max: usize,
}

impl<F: Field> DelayedAperture<F> {
    /// Builds from raw snapshot-major data: snapshot `n` occupies
    /// `data[(n + k_max)·m .. (n + k_max + 1)·m]`.
    pub fn from_snapshots(m: usize, k_max: usize, data: Vec<F>) -> Result<Self> {
        if m == 0 || data.len() != (2 * k_max + 1) * m {
            return invalid("snapshot buffer does not match (2·k_max + 1) × m");
        }
        Ok(Self { data, m, k_max })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Snapshot at temporal offset `n` ∈ [−k_max, k_max].
    pub fn snapshot(&self, n: isize) -> &[F] {
        let col = (n + self.k_max as isize) as usize;
        &self.data[col * self.m..(col + 1) * self.m]
    }

    /// The snapshot at the focusing instant.
    pub fn center(&self) -> &[F] {
        self.snapshot(0)
    }
}

/// Spatially smoothed, temporally averaged covariance estimate over subarrays
/// of length `l`, optionally diagonally loaded.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate<F: Field> {
    pub r_hat: HermitianMatrix<F>,
    pub k: usize,
    pub l: usize,
    pub n_subarrays: usize,
    /// Loading factor Δ this estimate was loaded with (0 when unloaded).
    pub delta_load: F::Real,
    /// Absolute loading ε = Δ·trace added to the diagonal (0 when unloaded).
    pub epsilon: F::Real,
}

/// Beamformer weights for one pixel.
#[derive(Debug, Clone)]
pub struct BeamformerWeights<F> {
    pub w: Vec<F>,
    pub method: BeamformMethod,
    /// Retained eigenspace dimension (eigenspace method only).
    pub num_subspace: Option<usize>,
}

/// Selects the `rx_aperture` contiguous elements whose centroid lies closest
/// to the scanline position, clamped to the array ends.
pub fn select_aperture<T: RealScalar>(
    geometry: &ScanGeometry<T>,
    scanline_index: usize,
) -> Result<Aperture> {
    if scanline_index >= geometry.n_scanlines() {
        return invalid(format!(
            "scanline index {scanline_index} outside 0..{}",
            geometry.n_scanlines()
        ));
    }
    let m = geometry.rx_aperture;
    let n = geometry.n_elements();
    let sl = geometry.scanline_x[scanline_index].to_f64().unwrap();
    let first = geometry.element_x[0].to_f64().unwrap();
    let pitch = geometry.pitch.to_f64().unwrap();
    let ideal = (sl - first) / pitch - (m as f64 - 1.0) / 2.0;
    let start = (ideal - 0.5).ceil() as isize;
    let start = start.clamp(0, (n - m) as isize) as usize;
    Ok(Aperture { start, m })
}

/// Round-trip focusing delay, in samples, for every aperture element at the
/// image point (scanline, depth): transmit time through the focus plus the
/// element's receive path, referenced to the frame start `t0`.
pub fn compute_delays<T: RealScalar>(
    geometry: &ScanGeometry<T>,
    scanline_index: usize,
    depth: T,
    tx_focus_depth: T,
    t0: T,
    aperture: Aperture,
) -> Result<ApertureDelays<T>> {
    if scanline_index >= geometry.n_scanlines() {
        return invalid("scanline index outside the geometry");
    }
    if aperture.m == 0 || aperture.start + aperture.m > geometry.n_elements() {
        return invalid("aperture does not fit the array");
    }
    if !(depth > T::zero()) {
        return invalid("focusing depth must be positive");
    }
    let sl_x = geometry.scanline_x[scanline_index];
    let t_tx = transmit_time(sl_x, tx_focus_depth, geometry.c0, sl_x, depth);
    let mut delays = Vec::with_capacity(aperture.m);
    for e in aperture.elements() {
        let dx = geometry.element_x[e] - sl_x;
        let r = (dx * dx + depth * depth).sqrt();
        let d = (t_tx + r / geometry.c0 - t0) * geometry.fs;
        if d < T::zero() {
            return invalid("focusing delay falls before the frame start");
        }
        delays.push(d);
    }
    Ok(ApertureDelays { aperture, delays })
}

/// Reads the delay-aligned snapshots at offsets −k_max..=k_max from the frame,
/// realizing fractional delays by linear interpolation; positions outside the
/// recording are treated as zero.
pub fn extract_delayed_aperture<T: RealScalar>(
    frame: &RfChannelFrame<T>,
    delays: &ApertureDelays<T>,
    k_max: usize,
) -> DelayedAperture<T> {
    let m = delays.aperture.m;
    let cols = 2 * k_max + 1;
    let mut data = vec![T::zero(); cols * m];
    let len = frame.n_samples as isize;
    for (i, &d) in delays.delays.iter().enumerate() {
        let ch = frame.channel(delays.aperture.start + i);
        let frac = d - d.floor();
        let w1 = T::one() - frac;
        let base = d.floor().to_isize().unwrap_or(isize::MAX);
        for col in 0..cols {
            let idx = base + col as isize - k_max as isize;
            let v0 = if (0..len).contains(&idx) {
                ch[idx as usize]
            } else {
                T::zero()
            };
            let v1 = if (0..len).contains(&(idx + 1)) {
                ch[(idx + 1) as usize]
            } else {
                T::zero()
            };
            data[col * m + i] = w1 * v0 + frac * v1;
        }
    }
    DelayedAperture { data, m, k_max }
}

/// Windowed sum over the center snapshot (delay-and-sum output). The window
/// carries the normalization, so a unit-sum window yields a weighted mean.
pub fn das_output<F: Field>(aperture: &DelayedAperture<F>, window: &[F::Real]) -> Result<F> {
    if window.len() != aperture.m {
        return invalid("window length must match the aperture");
    }
    let mut out = F::zero();
    for (&y, &w) in aperture.center().iter().zip(window) {
        out += y.scale(w);
    }
    Ok(out)
}

/// Spatially smoothed, temporally averaged covariance:
/// R̂ = [1/((2K+1)(M−L+1))] Σ_{n=−K..K} Σ_{i=0..M−L} ỹⁱ(n) ỹⁱ(n)ᴴ,
/// where ỹⁱ(n) is the length-L subarray starting at element i of snapshot n.
pub fn estimate_covariance<F: Field>(
    aperture: &DelayedAperture<F>,
    k: usize,
    l: usize,
) -> Result<CovarianceEstimate<F>> {
    let m = aperture.m;
    if l == 0 || l > m {
        return invalid(format!("subarray length {l} outside [1, {m}]"));
    }
    if k > aperture.k_max {
        return invalid(format!(
            "temporal half-window {k} exceeds the extracted {}",
            aperture.k_max
        ));
    }
    let s_count = m - l + 1;
    // acc holds the unnormalized upper triangle, row-major l × l.
    let mut acc = vec![F::zero(); l * l];
    for n in -(k as isize)..=(k as isize) {
        let x = aperture.snapshot(n);
        for b in 0..l {
            // First-row entry (0, b), then slide down the diagonal (a, a+b):
            // each step trades the leading product for the trailing one.
            let mut run = F::zero();
            for i in 0..s_count {
                run += x[i].mul_conj(x[i + b]);
            }
            acc[b] += run;
            for a in 1..l - b {
                run -= x[a - 1].mul_conj(x[a - 1 + b]);
                run += x[a - 1 + s_count].mul_conj(x[a - 1 + s_count + b]);
                acc[a * l + a + b] += run;
            }
        }
    }
    let norm = F::Real::one() / real::<F::Real>(((2 * k + 1) * s_count) as f64);
    let mut r_hat = HermitianMatrix::zeros(l);
    for a in 0..l {
        for b in a..l {
            r_hat.set_sym(a, b, acc[a * l + b].scale(norm));
        }
    }
    Ok(CovarianceEstimate {
        r_hat,
        k,
        l,
        n_subarrays: s_count,
        delta_load: F::Real::zero(),
        epsilon: F::Real::zero(),
    })
}

/// Adds ε = Δ·trace(R̂) to the diagonal and records both factors.
pub fn diagonal_load<F: Field>(
    mut cov: CovarianceEstimate<F>,
    delta: F::Real,
) -> Result<CovarianceEstimate<F>> {
    if delta < F::Real::zero() {
        return invalid("diagonal loading factor must be nonnegative");
    }
    let epsilon = delta * cov.r_hat.trace();
    cov.r_hat.add_scaled_identity(epsilon);
    cov.delta_load = delta;
    cov.epsilon = epsilon;
    Ok(cov)
}

/// Distortionless minimum-variance weights w = R̂⁻¹a / (aᴴR̂⁻¹a) for the
/// all-ones steering vector a.
pub fn mv_weights<F: Field>(cov: &CovarianceEstimate<F>) -> Result<BeamformerWeights<F>> {
    let ones = vec![F::one(); cov.l];
    let wt = solve_hpd(&cov.r_hat, &ones)?;
    let sum = wt.iter().fold(F::zero(), |a, &b| a + b);
    let denom = sum.abs_sq();
    if !(denom > F::Real::zero()) || !denom.is_finite() {
        return numerical("minimum-variance normalization degenerated to zero");
    }
    let inv = F::Real::one() / denom;
    let w = wt.iter().map(|v| v.mul_conj(sum).scale(inv)).collect();
    Ok(BeamformerWeights {
        w,
        method: BeamformMethod::Mv,
        num_subspace: None,
    })
}

/// Eigenspace-projected minimum-variance weights: keep the eigenvectors whose
/// eigenvalues reach `delta_sub · λ_max` (at least one) and project the
/// minimum-variance weights onto their span. `delta_sub = 0` keeps the whole
/// space, so the weights are returned unchanged.
pub fn eibmv_weights<F: Field>(
    cov: &CovarianceEstimate<F>,
    delta_sub: F::Real,
) -> Result<BeamformerWeights<F>> {
    if delta_sub < F::Real::zero() || delta_sub > F::Real::one() {
        return invalid("eigenspace threshold must lie in [0, 1]");
    }
    let mv = mv_weights(cov)?;
    if delta_sub == F::Real::zero() {
        return Ok(BeamformerWeights {
            w: mv.w,
            method: BeamformMethod::Eibmv,
            num_subspace: Some(cov.l),
        });
    }
    let eig = eig_hermitian(&cov.r_hat)?;
    let threshold = delta_sub * eig.eigenvalues[0];
    let num = eig
        .eigenvalues
        .iter()
        .take_while(|&&lam| lam >= threshold)
        .count()
        .max(1);
    let mut w = vec![F::zero(); cov.l];
    for j in 0..num {
        let e = eig.vector(j);
        let coef = e
            .iter()
            .zip(&mv.w)
            .fold(F::zero(), |a, (&ej, &wj)| a + wj.mul_conj(ej));
        for (wi, &ei) in w.iter_mut().zip(e) {
            *wi += ei * coef;
        }
    }
    Ok(BeamformerWeights {
        w,
        method: BeamformMethod::Eibmv,
        num_subspace: Some(num),
    })
}

/// Recombines adaptive weights over the subarrays:
/// z = (1/S) Σ_{i=0..S−1} wᴴ ỹⁱ(0), computed as wᴴ applied to the mean
/// subarray vector of the center snapshot.
pub fn subarray_output<F: Field>(snapshot: &[F], weights: &[F]) -> Result<F> {
    let m = snapshot.len();
    let l = weights.len();
    if l == 0 || l > m {
        return invalid("weight vector does not fit the snapshot");
    }
    let s_count = m - l + 1;
    let inv = F::Real::one() / real::<F::Real>(s_count as f64);
    let mut win = F::zero();
    for &v in &snapshot[..s_count] {
        win += v;
    }
    let mut out = F::zero();
    for a in 0..l {
        out += win.scale(inv).mul_conj(weights[a]);
        if a + 1 < l {
            win -= snapshot[a];
            win += snapshot[a + s_count];
        }
    }
    Ok(out)
}

/// Per-pixel intermediates for one adaptive beamformer evaluation, exposed so
/// callers can probe weights, spectra, and outputs directly.
#[derive(Debug, Clone)]
pub struct PixelAnalysis<T: Field> {
    /// Loaded covariance estimate the weights were computed from.
    pub covariance: CovarianceEstimate<T>,
    /// Minimum-variance weights for this pixel.
    pub w_mv: Vec<T>,
    /// Weights of the requested method (equals `w_mv` for the MV method).
    pub weights: BeamformerWeights<T>,
    /// Delay-aligned center snapshot across the aperture.
    pub center_snapshot: Vec<T>,
    /// Beamformer output at this pixel.
    pub output: T,
}

/// Runs the adaptive per-pixel chain at one (scanline, depth) point and
/// returns every intermediate. Rejects the delay-and-sum method, which has no
/// covariance stage.
pub fn analyze_pixel<T: RealScalar + Field<Real = T>>(
    frame: &RfChannelFrame<T>,
    geometry: &ScanGeometry<T>,
    pulse: &TransmitPulse<T>,
    params: &BeamformerParams<T>,
    depth: T,
) -> Result<PixelAnalysis<T>> {
    params.validate(geometry)?;
    if params.method == BeamformMethod::Das {
        return invalid("pixel analysis applies to the adaptive methods");
    }
    if frame.n_channels != geometry.n_elements() || frame.fs != geometry.fs {
        return invalid("frame does not match the geometry");
    }
    let aperture = select_aperture(geometry, frame.scanline_index)?;
    let mut delays = compute_delays(
        geometry,
        frame.scanline_index,
        depth,
        pulse.tx_focus_depth,
        frame.t0,
        aperture,
    )?;
    let offset = registration_offset(pulse, geometry.fs);
    for d in &mut delays.delays {
        *d += offset;
    }
    let y = extract_delayed_aperture(frame, &delays, params.k);
    let cov = diagonal_load(estimate_covariance(&y, params.k, params.l)?, params.delta_load)?;
    let mv = mv_weights(&cov)?;
    let weights = match params.method {
        BeamformMethod::Mv => mv.clone(),
        BeamformMethod::Eibmv => eibmv_weights(&cov, params.delta_sub)?,
        BeamformMethod::Das => unreachable!(),
    };
    let output = subarray_output(y.center(), &weights.w)?;
    Ok(PixelAnalysis {
        covariance: cov,
        w_mv: mv.w,
        weights,
        center_snapshot: y.center().to_vec(),
        output,
    })
}

/// Registration offset, in samples, aligning the focusing delays with the
/// energetic center of the transmitted burst.
pub fn registration_offset<T: RealScalar>(pulse: &TransmitPulse<T>, fs: T) -> T {
    pulse.duration() * fs / real::<T>(2.0)
}

/// Aggregate health data from one image formation.
#[derive(Debug, Clone, Copy)]
pub struct ImageDiagnostics<T> {
    /// Number of beamformed pixels.
    pub pixels: usize,
    /// Largest |Σw − 1| over all adaptive pixels (0 for delay-and-sum): the
    /// distortionless constraint residual.
    pub max_distortionless_err: T,
}

/// Beamforms a full image from one combined frame per scanline.
///
/// The depth axis is sampled at `fs / decimation` (depth step
/// decimation·c0/(2·fs)) from `depth_min` to `depth_max`; each scanline's beam
/// sequence is envelope-detected via the analytic signal, and the image is
/// log-compressed to the dynamic range. `guard_rows` marks roughly one carrier
/// period at each depth edge where the envelope is unreliable.
pub fn beamform_image<T: RealScalar + Field<Real = T> + rustfft::FftNum>(
    frames: &[RfChannelFrame<T>],
    geometry: &ScanGeometry<T>,
    pulse: &TransmitPulse<T>,
    params: &BeamformerParams<T>,
    decimation: usize,
    dynamic_range_db: T,
) -> Result<(BeamformedImage<T>, ImageDiagnostics<T>)> {
    params.validate(geometry)?;
    if decimation == 0 {
        return invalid("decimation must be at least 1");
    }
    if frames.len() != geometry.n_scanlines() {
        return invalid(format!(
            "expected {} frames, got {}",
            geometry.n_scanlines(),
            frames.len()
        ));
    }
    for (s, f) in frames.iter().enumerate() {
        if f.scanline_index != s {
            return invalid(format!("frame {s} carries scanline index {}", f.scanline_index));
        }
        if f.n_channels != geometry.n_elements() || f.fs != geometry.fs {
            return invalid(format!("frame {s} does not match the geometry"));
        }
    }
    let dec = real::<T>(decimation as f64);
    let step = dec * geometry.c0 / (real::<T>(2.0) * geometry.fs);
    let span = geometry.depth_max - geometry.depth_min;
    let n_depth = (span / step).floor().to_usize().unwrap_or(0) + 1;
    let fs_img = geometry.fs / dec;
    let guard = (fs_img / pulse.f0).ceil().to_usize().unwrap_or(0);
    let offset = registration_offset(pulse, geometry.fs);
    let is_das = params.method == BeamformMethod::Das;
    let window: Vec<T> = if is_das {
        make_window(params.window, geometry.rx_aperture)?
    } else {
        Vec::new()
    };
    let k_max = if is_das { 0 } else { params.k };

    let scanlines: Vec<(Vec<T>, T)> = (0..geometry.n_scanlines())
        .into_par_iter()
        .map(|s| -> Result<(Vec<T>, T)> {
            let frame = &frames[s];
            let aperture = select_aperture(geometry, s)?;
            let mut beam = vec![<T as Zero>::zero(); n_depth];
            let mut max_err = <T as Zero>::zero();
            for (j, out) in beam.iter_mut().enumerate() {
                let depth = geometry.depth_min + real::<T>(j as f64) * step;
                let mut delays = compute_delays(
                    geometry,
                    s,
                    depth,
                    pulse.tx_focus_depth,
                    frame.t0,
                    aperture,
                )
                .map_err(|e| at_pixel(e, s, j))?;
                for d in &mut delays.delays {
                    *d += offset;
                }
                let y = extract_delayed_aperture(frame, &delays, k_max);
                *out = if is_das {
                    das_output(&y, &window).map_err(|e| at_pixel(e, s, j))?
                } else {
                    let cov = estimate_covariance(&y, params.k, params.l)
                        .and_then(|c| diagonal_load(c, params.delta_load))
                        .map_err(|e| at_pixel(e, s, j))?;
                    let w = match params.method {
                        BeamformMethod::Mv => mv_weights(&cov),
                        BeamformMethod::Eibmv => eibmv_weights(&cov, params.delta_sub),
                        BeamformMethod::Das => unreachable!(),
                    }
                    .map_err(|e| at_pixel(e, s, j))?;
                    let sum = w.w.iter().fold(<T as Zero>::zero(), |a, &b| a + b);
                    let err = Float::abs(sum - <T as One>::one());
                    if err > max_err {
                        max_err = err;
                    }
                    subarray_output(y.center(), &w.w).map_err(|e| at_pixel(e, s, j))?
                };
            }
            let env = envelope(&beam, fs_img)?;
            Ok((env, max_err))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(geometry.n_scanlines() * n_depth);
    let mut max_err = <T as Zero>::zero();
    for (env, err) in scanlines {
        values.extend(env);
        if err > max_err {
            max_err = err;
        }
    }
    let image = BeamformedImage::from_envelope(
        values,
        geometry.n_scanlines(),
        n_depth,
        geometry.scanline_x.clone(),
        geometry.depth_min,
        step,
        dynamic_range_db,
        guard,
    )?;
    let diagnostics = ImageDiagnostics {
        pixels: geometry.n_scanlines() * n_depth,
        max_distortionless_err: max_err,
    };
    Ok((image, diagnostics))
}

/// Annotates a per-pixel error with its image coordinates.
fn at_pixel(e: Error, scanline: usize, row: usize) -> Error {
    let tag = |m: String| format!("{m} (scanline {scanline}, depth row {row})");
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(tag(m)),
        Error::NumericalFailure(m) => Error::NumericalFailure(tag(m)),
        Error::MeasurementFailure(m) => Error::MeasurementFailure(tag(m)),
    }
}
