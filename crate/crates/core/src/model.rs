//! Domain records shared by the whole toolkit: array geometry, transmit pulses,
//! RF channel frames, beamformer parameter sets, scatterers, and the beamformed
//! image grid, plus apodization window generation.

use crate::error::{invalid, Result};
use crate::scalar::{real, RealScalar};

/// Apodization window families for the non-adaptive beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Rectangular,
    Hanning,
    Hamming,
}

/// Builds an apodization window of the given length, normalized to unit sum so
/// that beamforming with it is a weighted mean.
///
/// Zero-length windows and windows that sum to zero before normalization (the
/// two-point Hanning window) are rejected.
pub fn make_window<T: RealScalar>(kind: WindowKind, length: usize) -> Result<Vec<T>> {
    if length == 0 {
        return invalid("window length must be at least 1");
    }
    let n = length;
    let mut w: Vec<T> = match kind {
        WindowKind::Rectangular => vec![T::one() / real(n as f64); n],
        WindowKind::Hanning | WindowKind::Hamming => {
            let (a0, a1) = match kind {
                WindowKind::Hanning => (0.5, 0.5),
                _ => (0.54, 0.46),
            };
            if n == 1 {
                vec![T::one()]
            } else {
                (0..n)
                    .map(|j| {
                        let phase = 2.0 * std::f64::consts::PI * j as f64 / (n - 1) as f64;
                        real(a0 - a1 * phase.cos())
                    })
                    .collect()
            }
        }
    };
    let sum = w.iter().fold(T::zero(), |acc, &v| acc + v);
    if sum <= T::zero() {
        return invalid(format!(
            "{kind:?} window of length {n} sums to zero and cannot be normalized"
        ));
    }
    for v in &mut w {
        *v = *v / sum;
    }
    Ok(w)
}

/// Linear-array scan geometry: element and scanline lateral positions, the
/// axial depth span, and the acoustic/sampling constants.
#[derive(Debug, Clone)]
pub struct ScanGeometry<T> {
    /// Lateral element centers (m), strictly increasing, uniformly spaced.
    pub element_x: Vec<T>,
    /// Center-to-center element spacing (m).
    pub pitch: T,
    /// Gap between adjacent elements (m); bookkeeping only.
    pub kerf: T,
    /// Speed of sound (m/s).
    pub c0: T,
    /// Lateral scanline positions (m).
    pub scanline_x: Vec<T>,
    /// Shallow end of the imaged depth span (m).
    pub depth_min: T,
    /// Deep end of the imaged depth span (m).
    pub depth_max: T,
    /// Channel sampling frequency (Hz).
    pub fs: T,
    /// Receive-aperture element count per scanline.
    pub rx_aperture: usize,
}

impl<T: RealScalar> ScanGeometry<T> {
    /// Validates and assembles a geometry from explicit positions.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        element_x: Vec<T>,
        pitch: T,
        kerf: T,
        c0: T,
        scanline_x: Vec<T>,
        depth_min: T,
        depth_max: T,
        fs: T,
        rx_aperture: usize,
    ) -> Result<Self> {
        if element_x.is_empty() {
            return invalid("geometry needs at least one element");
        }
        if !(pitch > T::zero()) || !(c0 > T::zero()) || !(fs > T::zero()) {
            return invalid("pitch, c0, and fs must be positive");
        }
        if kerf < T::zero() || kerf >= pitch {
            return invalid("kerf must lie in [0, pitch)");
        }
        let tol = pitch * real(1e-9);
        for pair in element_x.windows(2) {
            let dx = pair[1] - pair[0];
            if !(dx > T::zero()) || (dx - pitch).abs() > tol {
                return invalid("element positions must increase uniformly by the pitch");
            }
        }
        if scanline_x.is_empty() {
            return invalid("geometry needs at least one scanline");
        }
        if rx_aperture == 0 || rx_aperture > element_x.len() {
            return invalid(format!(
                "receive aperture {} outside [1, {}]",
                rx_aperture,
                element_x.len()
            ));
        }
        if !(depth_min < depth_max) || depth_min < T::zero() {
            return invalid("depth span must satisfy 0 <= depth_min < depth_max");
        }
        Ok(Self {
            element_x,
            pitch,
            kerf,
            c0,
            scanline_x,
            depth_min,
            depth_max,
            fs,
            rx_aperture,
        })
    }

    /// Builds the standard centered layout: `n_elements` at the given pitch
    /// symmetric about x = 0, and `n_scanlines` on the same pitch with scanline
    /// `n_scanlines / 2` exactly at x = 0 (so an on-axis target sits on a line).
    #[allow(clippy::too_many_arguments)]
    pub fn linear(
        n_elements: usize,
        pitch: T,
        kerf: T,
        c0: T,
        fs: T,
        rx_aperture: usize,
        n_scanlines: usize,
        depth_min: T,
        depth_max: T,
    ) -> Result<Self> {
        if n_elements == 0 || n_scanlines == 0 {
            return invalid("element and scanline counts must be positive");
        }
        let half = real::<T>((n_elements as f64 - 1.0) / 2.0);
        let element_x = (0..n_elements)
            .map(|i| (real::<T>(i as f64) - half) * pitch)
            .collect();
        let mid = real::<T>((n_scanlines / 2) as f64);
        let scanline_x = (0..n_scanlines)
            .map(|j| (real::<T>(j as f64) - mid) * pitch)
            .collect();
        Self::new(
            element_x, pitch, kerf, c0, scanline_x, depth_min, depth_max, fs, rx_aperture,
        )
    }

    pub fn n_elements(&self) -> usize {
        self.element_x.len()
    }

    pub fn n_scanlines(&self) -> usize {
        self.scanline_x.len()
    }
}

/// A transmitted burst: Gaussian-weighted sinusoid at the carrier `f0`.
#[derive(Debug, Clone)]
pub struct TransmitPulse<T> {
    /// Carrier frequency (Hz).
    pub f0: T,
    /// Cycle count of the burst.
    pub n_cycles: u32,
    /// Sampling frequency of `samples` (Hz).
    pub fs: T,
    /// Transmit polarity, +1 or -1; flipping it negates every sample.
    pub polarity: i8,
    /// The sampled waveform, `round(duration · fs)` samples long.
    pub samples: Vec<T>,
    /// Transmit focal depth (m).
    pub tx_focus_depth: T,
    /// Source pressure (Pa); bookkeeping only.
    pub initial_pressure: T,
}

impl<T: RealScalar> TransmitPulse<T> {
    /// Builds the burst: carrier `sin(2π f0 t)` under a Gaussian envelope whose
    /// standard deviation is a quarter of the burst duration, so the ends taper
    /// near zero. `fs` must resolve the second harmonic (fs > 4·f0).
    pub fn gaussian(
        f0: T,
        n_cycles: u32,
        fs: T,
        polarity: i8,
        tx_focus_depth: T,
        initial_pressure: T,
    ) -> Result<Self> {
        if !(f0 > T::zero()) || n_cycles == 0 {
            return invalid("pulse needs positive f0 and at least one cycle");
        }
        if fs <= real::<T>(4.0) * f0 {
            return invalid("fs must exceed 4·f0 to resolve the second harmonic");
        }
        if polarity != 1 && polarity != -1 {
            return invalid("polarity must be +1 or -1");
        }
        let duration = real::<T>(n_cycles as f64) / f0;
        let n = (duration * fs).round().to_usize().unwrap_or(0);
        if n < 2 {
            return invalid("pulse shorter than two samples at this fs");
        }
        let pol = real::<T>(polarity as f64);
        let samples = carrier_burst(f0, duration, fs, n)
            .into_iter()
            .map(|v| pol * v)
            .collect();
        Ok(Self {
            f0,
            n_cycles,
            fs,
            polarity,
            samples,
            tx_focus_depth,
            initial_pressure,
        })
    }

    /// The same burst with opposite polarity; exact elementwise negation.
    pub fn flipped(&self) -> Self {
        Self {
            polarity: -self.polarity,
            samples: self.samples.iter().map(|&v| -v).collect(),
            ..self.clone()
        }
    }

    /// Burst duration in seconds.
    pub fn duration(&self) -> T {
        real::<T>(self.n_cycles as f64) / self.f0
    }

    /// The polarity-invariant second-harmonic burst: same Gaussian envelope and
    /// length, carrier at 2·f0.
    pub fn harmonic_samples(&self) -> Vec<T> {
        carrier_burst(
            real::<T>(2.0) * self.f0,
            self.duration(),
            self.fs,
            self.samples.len(),
        )
    }
}

/// Gaussian-enveloped sinusoid: `exp(-(t - d/2)² / (2σ²)) · sin(2π f t)` with
/// σ = d/4, sampled at `fs` for `n` samples.
fn carrier_burst<T: RealScalar>(f: T, duration: T, fs: T, n: usize) -> Vec<T> {
    let sigma = duration / real(4.0);
    let center = duration / real(2.0);
    let two_pi = real::<T>(2.0 * std::f64::consts::PI);
    (0..n)
        .map(|j| {
            let t = real::<T>(j as f64) / fs;
            let arg = (t - center) / sigma;
            let env = (-arg * arg / real(2.0)).exp();
            env * (two_pi * f * t).sin()
        })
        .collect()
}

/// Per-element, per-time-sample RF data from one transmit event.
///
/// Channel-major flat storage: channel `i` occupies
/// `data[i · n_samples .. (i + 1) · n_samples]` and all channels share one time
/// axis starting at `t0`.
#[derive(Debug, Clone)]
pub struct RfChannelFrame<T> {
    pub data: Vec<T>,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: T,
    /// Time of sample 0 (s).
    pub t0: T,
    /// Transmit polarity of the event: +1, -1, or 0 once combined.
    pub polarity: i8,
    /// Index of the transmit scanline.
    pub scanline_index: usize,
}

impl<T: RealScalar> RfChannelFrame<T> {
    pub fn zeros(
        n_channels: usize,
        n_samples: usize,
        fs: T,
        t0: T,
        polarity: i8,
        scanline_index: usize,
    ) -> Self {
        Self {
            data: vec![T::zero(); n_channels * n_samples],
            n_channels,
            n_samples,
            fs,
            t0,
            polarity,
            scanline_index,
        }
    }

    #[inline]
    pub fn channel(&self, i: usize) -> &[T] {
        &self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    #[inline]
    pub fn channel_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    /// Mean squared sample value over all channels.
    pub fn mean_power(&self) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        let sum = self
            .data
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v);
        sum / real(self.data.len() as f64)
    }

    /// True when the two frames share shape, sampling, time origin, and
    /// scanline, i.e. they describe the same acquisition.
    pub fn same_acquisition(&self, other: &Self) -> bool {
        self.n_channels == other.n_channels
            && self.n_samples == other.n_samples
            && self.fs == other.fs
            && self.t0 == other.t0
            && self.scanline_index == other.scanline_index
    }
}

/// Beamformer selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformMethod {
    /// Delay-and-sum with a fixed window.
    Das,
    /// Minimum-variance (Capon) adaptive weighting.
    Mv,
    /// Minimum-variance weights projected onto the dominant eigenspace.
    Eibmv,
}

/// Full parameter set for one beamforming run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamformerParams<T> {
    pub method: BeamformMethod,
    /// Apodization window (delay-and-sum only).
    pub window: WindowKind,
    /// Temporal half-window: covariance averages over 2K+1 samples.
    pub k: usize,
    /// Subarray length for spatial smoothing.
    pub l: usize,
    /// Diagonal loading factor Δ (the loading is Δ · trace).
    pub delta_load: T,
    /// Eigenspace threshold δ ∈ [0, 1] (eigenspace method only).
    pub delta_sub: T,
}

impl<T: RealScalar> BeamformerParams<T> {
    pub fn das(window: WindowKind) -> Self {
        Self {
            method: BeamformMethod::Das,
            window,
            k: 0,
            l: 1,
            delta_load: T::zero(),
            delta_sub: T::zero(),
        }
    }

    pub fn mv(k: usize, l: usize, delta_load: T) -> Self {
        Self {
            method: BeamformMethod::Mv,
            window: WindowKind::Rectangular,
            k,
            l,
            delta_load,
            delta_sub: T::zero(),
        }
    }

    pub fn eibmv(k: usize, l: usize, delta_load: T, delta_sub: T) -> Self {
        Self {
            method: BeamformMethod::Eibmv,
            window: WindowKind::Rectangular,
            k,
            l,
            delta_load,
            delta_sub,
        }
    }

    pub fn validate(&self, geometry: &ScanGeometry<T>) -> Result<()> {
        if self.l == 0 || self.l > geometry.rx_aperture {
            return invalid(format!(
                "subarray length {} outside [1, {}]",
                self.l, geometry.rx_aperture
            ));
        }
        if self.delta_load < T::zero() {
            return invalid("diagonal loading factor must be nonnegative");
        }
        if self.delta_sub < T::zero() || self.delta_sub > T::one() {
            return invalid("eigenspace threshold must lie in [0, 1]");
        }
        Ok(())
    }
}

/// A point reflector in the imaging plane.
#[derive(Debug, Clone, Copy)]
pub struct Scatterer<T> {
    /// Lateral position (m).
    pub x: T,
    /// Depth (m).
    pub z: T,
    /// Reflection amplitude in [0, 1].
    pub amplitude: T,
    /// Second-harmonic re-radiation coefficient η ≥ 0.
    pub harmonic_coeff: T,
}

impl<T: RealScalar> Scatterer<T> {
    pub fn new(x: T, z: T, amplitude: T, harmonic_coeff: T) -> Result<Self> {
        if amplitude < T::zero() || amplitude > T::one() {
            return invalid("scatterer amplitude must lie in [0, 1]");
        }
        if harmonic_coeff < T::zero() {
            return invalid("harmonic coefficient must be nonnegative");
        }
        Ok(Self {
            x,
            z,
            amplitude,
            harmonic_coeff,
        })
    }
}

/// Envelope image on the scanline × depth grid with its log-compressed view.
///
/// `values` is scanline-major: scanline `s`, depth row `j` is
/// `values[s · n_depth + j]`. `db` holds `20·log10(value / peak)` clamped at
/// `-dynamic_range_db`; measurements that must not see the clamp floor use
/// [`BeamformedImage::db_unclamped`]. The first and last `guard_rows` depth
/// rows carry envelope edge effects and are excluded from region statistics.
#[derive(Debug, Clone)]
pub struct BeamformedImage<T> {
    pub values: Vec<T>,
    pub db: Vec<T>,
    pub n_scanlines: usize,
    pub n_depth: usize,
    pub scanline_x: Vec<T>,
    pub depth_min: T,
    pub depth_step: T,
    pub dynamic_range_db: T,
    pub guard_rows: usize,
}

impl<T: RealScalar> BeamformedImage<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn from_envelope(
        values: Vec<T>,
        n_scanlines: usize,
        n_depth: usize,
        scanline_x: Vec<T>,
        depth_min: T,
        depth_step: T,
        dynamic_range_db: T,
        guard_rows: usize,
    ) -> Result<Self> {
        if n_scanlines == 0 || n_depth == 0 || values.len() != n_scanlines * n_depth {
            return invalid("image shape does not match the sample buffer");
        }
        if scanline_x.len() != n_scanlines {
            return invalid("scanline positions do not match the image width");
        }
        if !(dynamic_range_db > T::zero()) {
            return invalid("dynamic range must be positive");
        }
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return invalid("envelope samples must be finite and nonnegative");
        }
        let peak = values.iter().cloned().fold(T::zero(), T::max);
        let floor = -dynamic_range_db;
        let db = values
            .iter()
            .map(|&v| {
                if v > T::zero() && peak > T::zero() {
                    (real::<T>(20.0) * (v / peak).log10()).max(floor)
                } else {
                    floor
                }
            })
            .collect();
        Ok(Self {
            values,
            db,
            n_scanlines,
            n_depth,
            scanline_x,
            depth_min,
            depth_step,
            dynamic_range_db,
            guard_rows,
        })
    }

    /// Log-compressed map without the dynamic-range floor; zero samples map to
    /// negative infinity.
    pub fn db_unclamped(&self) -> Vec<T> {
        let peak = self.values.iter().cloned().fold(T::zero(), T::max);
        self.values
            .iter()
            .map(|&v| {
                if v > T::zero() && peak > T::zero() {
                    real::<T>(20.0) * (v / peak).log10()
                } else {
                    T::neg_infinity()
                }
            })
            .collect()
    }

    #[inline]
    pub fn index(&self, scanline: usize, depth_row: usize) -> usize {
        scanline * self.n_depth + depth_row
    }

    #[inline]
    pub fn value(&self, scanline: usize, depth_row: usize) -> T {
        self.values[self.index(scanline, depth_row)]
    }

    /// Depth (m) of image row `j`.
    #[inline]
    pub fn depth_of(&self, j: usize) -> T {
        self.depth_min + real::<T>(j as f64) * self.depth_step
    }

    /// True when row `j` lies inside the envelope edge guard bands.
    #[inline]
    pub fn in_guard(&self, j: usize) -> bool {
        j < self.guard_rows || j + self.guard_rows >= self.n_depth
    }
}
