//! Phantom construction and RF channel-data synthesis.
//!
//! Two phantoms drive the experiments: nine wire targets along the axis, and a
//! speckle slab with five anechoic cysts. Synthesis models a focused transmit
//! through a virtual source, per-path attenuation and spreading, a
//! phenomenological polarity-invariant second-harmonic echo, and calibrated
//! additive white Gaussian noise.

use crate::error::{invalid, Result};
use crate::model::{RfChannelFrame, ScanGeometry, Scatterer, TransmitPulse};
use crate::scalar::{real, RealScalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Default second-harmonic re-radiation coefficient η.
pub const DEFAULT_HARMONIC_COEFF: f64 = 0.1;
/// Amplitude attenuation rate (dB per cm per MHz).
pub const ATTENUATION_DB_PER_CM_MHZ: f64 = 0.5;
/// Wire-target depths (m): nine targets, 22.5 mm to 62.5 mm every 5 mm.
pub const POINT_DEPTHS_M: [f64; 9] = [
    0.0225, 0.0275, 0.0325, 0.0375, 0.0425, 0.0475, 0.0525, 0.0575, 0.0625,
];
/// Cyst-center depths (m): five cysts, 22.5 mm to 62.5 mm every 10 mm.
pub const CYST_DEPTHS_M: [f64; 5] = [0.0225, 0.0325, 0.0425, 0.0525, 0.0625];
/// Lateral position of every cyst center (m).
pub const CYST_LATERAL_M: f64 = -3.0e-3;
/// Cyst radius (m): 5 mm diameter.
pub const CYST_RADIUS_M: f64 = 2.5e-3;
/// Background scatterer density per squared wavelength.
pub const SCATTERERS_PER_WAVELENGTH_SQ: f64 = 10.0;

/// Which experiment a phantom belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Points,
    Cysts,
}

/// A set of scatterers plus the metadata the metrics stage needs.
#[derive(Debug, Clone)]
pub struct Phantom<T> {
    pub kind: PhantomKind,
    pub scatterers: Vec<Scatterer<T>>,
    /// Cyst centers (x, z) in meters; empty for the wire-target phantom.
    pub cyst_centers: Vec<(T, T)>,
    /// Cyst radius (m); zero for the wire-target phantom.
    pub cyst_radius: T,
    pub seed: u64,
}

/// Additive white Gaussian noise calibrated against mean signal power;
/// `snr_db = None` is the noiseless sentinel.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// Nine unit wire targets on the central scanline axis, 22.5–62.5 mm.
pub fn make_point_phantom<T: RealScalar>(geometry: &ScanGeometry<T>) -> Result<Phantom<T>> {
    let lo = real::<T>(POINT_DEPTHS_M[0]);
    let hi = real::<T>(POINT_DEPTHS_M[8]);
    if geometry.depth_min > lo || geometry.depth_max < hi {
        return invalid("depth range must cover 22.5-62.5 mm for the wire-target phantom");
    }
    let axis = geometry.scanline_x[geometry.n_scanlines() / 2];
    let scatterers = POINT_DEPTHS_M
        .iter()
        .map(|&z| Scatterer::new(axis, real(z), T::one(), real(DEFAULT_HARMONIC_COEFF)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Phantom {
        kind: PhantomKind::Points,
        scatterers,
        cyst_centers: Vec::new(),
        cyst_radius: T::zero(),
        seed: 0,
    })
}

/// Speckle slab over the imaging plane at 10 scatterers per λ², λ = c0/f0,
/// with five anechoic circles (radius 2.5 mm, lateral −3 mm, depths
/// 22.5:10:62.5 mm). Positions are redrawn until they fall outside every
/// circle; amplitudes are uniform in [0, 1).
pub fn make_cyst_phantom<T: RealScalar>(
    geometry: &ScanGeometry<T>,
    f0: T,
    seed: u64,
) -> Result<Phantom<T>> {
    if !(f0 > T::zero()) {
        return invalid("cyst phantom needs a positive center frequency");
    }
    let x0 = geometry.scanline_x[0].to_f64().unwrap();
    let x1 = geometry.scanline_x[geometry.n_scanlines() - 1].to_f64().unwrap();
    let z0 = geometry.depth_min.to_f64().unwrap();
    let z1 = geometry.depth_max.to_f64().unwrap();
    let wavelength = (geometry.c0 / f0).to_f64().unwrap();
    let count =
        (SCATTERERS_PER_WAVELENGTH_SQ * (x1 - x0) * (z1 - z0) / (wavelength * wavelength)).round()
            as usize;

    let centers: Vec<(f64, f64)> = CYST_DEPTHS_M.iter().map(|&z| (CYST_LATERAL_M, z)).collect();
    let r_sq = CYST_RADIUS_M * CYST_RADIUS_M;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scatterers = Vec::with_capacity(count);
    while scatterers.len() < count {
        let x = x0 + rng.random::<f64>() * (x1 - x0);
        let z = z0 + rng.random::<f64>() * (z1 - z0);
        let inside = centers
            .iter()
            .any(|&(cx, cz)| (x - cx) * (x - cx) + (z - cz) * (z - cz) < r_sq);
        if inside {
            continue;
        }
        let amplitude = rng.random::<f64>();
        scatterers.push(Scatterer::new(
            real(x),
            real(z),
            real(amplitude),
            real(DEFAULT_HARMONIC_COEFF),
        )?);
    }
    Ok(Phantom {
        kind: PhantomKind::Cysts,
        scatterers,
        cyst_centers: centers.iter().map(|&(x, z)| (real(x), real(z))).collect(),
        cyst_radius: real(CYST_RADIUS_M),
        seed,
    })
}

/// Focused-transmit arrival time (s) at a field point, using a virtual point
/// source at the scanline's focal position: the wavefront converges toward the
/// focus and re-diverges past it. On axis this reduces to z / c0.
pub fn transmit_time<T: RealScalar>(
    scanline_x: T,
    focus_depth: T,
    c0: T,
    x: T,
    z: T,
) -> T {
    let dx = x - scanline_x;
    let dz = z - focus_depth;
    let dist = (dz * dz + dx * dx).sqrt();
    let signed = if z >= focus_depth { dist } else { -dist };
    (focus_depth + signed) / c0
}

/// Synthesizes the RF channel frame for one transmit event.
///
/// Each scatterer deposits, on every receive channel, the transmit pulse (with
/// its polarity) plus the polarity-invariant second-harmonic burst, both
/// delayed by τ = t_tx + |scatterer − element| / c0, attenuated at
/// 0.5 dB/cm/MHz over the full round-trip path (at f0 for the fundamental and
/// 2f0 for the harmonic), and spread geometrically as 1/(r_tx · r_rx)
/// normalized so a focal-depth on-axis echo has unit geometric gain.
/// Fractional delays are realized by linear interpolation.
pub fn synthesize_rf<T: RealScalar>(
    phantom: &Phantom<T>,
    geometry: &ScanGeometry<T>,
    pulse: &TransmitPulse<T>,
    scanline_index: usize,
) -> Result<RfChannelFrame<T>> {
    if scanline_index >= geometry.n_scanlines() {
        return invalid(format!(
            "scanline index {scanline_index} outside 0..{}",
            geometry.n_scanlines()
        ));
    }
    if pulse.fs != geometry.fs {
        return invalid("pulse and geometry sampling rates must match");
    }
    let n_samples = frame_samples(geometry, pulse);
    let mut frame = RfChannelFrame::zeros(
        geometry.n_elements(),
        n_samples,
        geometry.fs,
        T::zero(),
        pulse.polarity,
        scanline_index,
    );

    let sl_x = geometry.scanline_x[scanline_index];
    let z_f = pulse.tx_focus_depth;
    let c0 = geometry.c0;
    let fs = geometry.fs;
    let fundamental = &pulse.samples;
    let harmonic = pulse.harmonic_samples();
    let n_pulse = fundamental.len();
    // Amplitude attenuation exponent per meter of path at f0:
    // 0.5 dB/cm/MHz · f0[MHz] · 100 cm/m, converted from dB to natural log.
    let att_rate = real::<T>(
        -ATTENUATION_DB_PER_CM_MHZ * 100.0 / 20.0 * std::f64::consts::LN_10 * 1e-6,
    ) * pulse.f0;

    for s in &phantom.scatterers {
        let t_tx = transmit_time(sl_x, z_f, c0, s.x, s.z);
        let r_tx = c0 * t_tx;
        debug_assert!(r_tx > T::zero(), "field point behind the virtual source");
        for e in 0..geometry.n_elements() {
            let dx = s.x - geometry.element_x[e];
            let r_rx = (dx * dx + s.z * s.z).sqrt();
            let tau = t_tx + r_rx / c0;
            let att_f = (att_rate * (r_tx + r_rx)).exp();
            let spread = z_f * z_f / (r_tx * r_rx);
            let a_f = s.amplitude * att_f * spread;
            // Attenuation at 2f0 doubles the exponent: exactly the square.
            let a_h = s.amplitude * s.harmonic_coeff * att_f * att_f * spread;

            let pos = tau * fs;
            let base = pos.floor().to_isize().unwrap_or(isize::MAX);
            let frac = pos - pos.floor();
            let w1 = T::one() - frac;
            debug_assert!(
                base >= 0 && (base as usize) + n_pulse + 1 < n_samples,
                "echo window must fit the frame"
            );
            let base = base as usize;
            let ch = frame.channel_mut(e);
            for m in 0..n_pulse {
                let v = a_f * fundamental[m] + a_h * harmonic[m];
                ch[base + m] += w1 * v;
                ch[base + m + 1] += frac * v;
            }
        }
    }
    Ok(frame)
}

/// Frame length (samples) covering every in-plane echo for this geometry and
/// pulse, independent of the phantom so all frames of a run share one shape.
pub fn frame_samples<T: RealScalar>(geometry: &ScanGeometry<T>, pulse: &TransmitPulse<T>) -> usize {
    let f = |v: T| v.to_f64().unwrap();
    let sl0 = f(geometry.scanline_x[0]);
    let sl1 = f(geometry.scanline_x[geometry.n_scanlines() - 1]);
    let el0 = f(geometry.element_x[0]);
    let el1 = f(geometry.element_x[geometry.n_elements() - 1]);
    let z_f = f(pulse.tx_focus_depth);
    let z_max = f(geometry.depth_max);
    let c0 = f(geometry.c0);
    // Transmit bound: widest lateral offset between a field point and its
    // scanline's virtual source, deepest field point.
    let dz = (z_max - z_f).abs().max(f(geometry.depth_min) - z_f);
    let tx = (z_f + (dz * dz + (sl1 - sl0).powi(2)).sqrt()) / c0;
    // Receive bound: farthest element from the farthest lateral position.
    let dx = (sl1 - el0).abs().max((el1 - sl0).abs());
    let rx = (z_max * z_max + dx * dx).sqrt() / c0;
    ((tx + rx) * f(geometry.fs)).ceil() as usize + pulse.samples.len() + 8
}

/// Adds white Gaussian noise at the requested SNR relative to the frame's mean
/// sample power, in one deterministic pass over the samples.
pub fn add_noise<T: RealScalar>(
    mut frame: RfChannelFrame<T>,
    spec: &NoiseSpec,
) -> Result<RfChannelFrame<T>> {
    let Some(snr_db) = spec.snr_db else {
        return Ok(frame);
    };
    let power = frame.mean_power();
    if !(power > T::zero()) {
        return invalid("SNR is undefined for a zero-power frame");
    }
    let sigma = (power / real::<T>(10f64.powf(snr_db / 10.0))).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for v in &mut frame.data {
        let n: f64 = rng.sample(StandardNormal);
        *v += sigma * real::<T>(n);
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_geometry() -> ScanGeometry<f64> {
        ScanGeometry::linear(132, 409e-6, 20e-6, 1540.0, 50e6, 66, 64, 0.020, 0.070).unwrap()
    }

    /// Small geometry with an element exactly at x = 0 for single-channel
    /// arithmetic checks.
    fn tiny_geometry(depth_max: f64) -> ScanGeometry<f64> {
        ScanGeometry::linear(3, 409e-6, 20e-6, 1540.0, 50e6, 3, 1, 0.018, depth_max).unwrap()
    }

    fn reference_pulse(polarity: i8) -> TransmitPulse<f64> {
        TransmitPulse::gaussian(1.96e6, 2, 50e6, polarity, 0.050, 1.0).unwrap()
    }

    fn single_point(z: f64, eta: f64) -> Phantom<f64> {
        Phantom {
            kind: PhantomKind::Points,
            scatterers: vec![Scatterer::new(0.0, z, 1.0, eta).unwrap()],
            cyst_centers: Vec::new(),
            cyst_radius: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn point_phantom_places_nine_unit_targets() {
        let p = make_point_phantom(&reference_geometry()).unwrap();
        assert_eq!(p.kind, PhantomKind::Points);
        assert_eq!(p.scatterers.len(), 9);
        for (s, &z) in p.scatterers.iter().zip(&POINT_DEPTHS_M) {
            assert_eq!(s.x, 0.0);
            assert_eq!(s.z, z);
            assert_eq!(s.amplitude, 1.0);
        }
    }

    #[test]
    fn point_phantom_requires_covering_depth_range() {
        let shallow =
            ScanGeometry::<f64>::linear(132, 409e-6, 20e-6, 1540.0, 50e6, 66, 64, 0.020, 0.040)
                .unwrap();
        assert!(make_point_phantom(&shallow).is_err());
    }

    #[test]
    fn cyst_phantom_is_deterministic_and_anechoic() {
        let g = reference_geometry();
        let a = make_cyst_phantom(&g, 1.96e6, 42).unwrap();
        let b = make_cyst_phantom(&g, 1.96e6, 42).unwrap();
        assert_eq!(a.scatterers.len(), b.scatterers.len());
        for (x, y) in a.scatterers.iter().zip(&b.scatterers) {
            assert_eq!((x.x, x.z, x.amplitude), (y.x, y.z, y.amplitude));
        }
        assert_eq!(a.cyst_centers.len(), 5);
        assert_eq!(a.cyst_radius, CYST_RADIUS_M);
        let strictly_inside = a.scatterers.iter().any(|s| {
            a.cyst_centers.iter().any(|&(cx, cz)| {
                (s.x - cx).powi(2) + (s.z - cz).powi(2) < CYST_RADIUS_M * CYST_RADIUS_M
            })
        });
        assert!(!strictly_inside);
        // Density 10/λ² over a 25.8 mm × 50 mm plane gives ~21k scatterers.
        assert!(a.scatterers.len() > 10_000);
        let mean_amp: f64 =
            a.scatterers.iter().map(|s| s.amplitude).sum::<f64>() / a.scatterers.len() as f64;
        assert_abs_diff_eq!(mean_amp, 0.5, epsilon = 0.02);
    }

    #[test]
    fn on_axis_echo_lands_at_the_expected_sample() {
        // Round trip to 30 mm and back at 1540 m/s, 50 MHz sampling:
        // 2·0.030/1540·50e6 = 1948.05 samples.
        let g = tiny_geometry(0.040);
        let frame = synthesize_rf(&single_point(0.030, 0.0), &g, &reference_pulse(1), 0).unwrap();
        let ch = frame.channel(1); // element at x = 0
        assert!(ch[..1948].iter().all(|&v| v == 0.0));
        let first_nonzero = ch.iter().position(|&v| v != 0.0).unwrap();
        assert!(
            (1948..=1949).contains(&first_nonzero),
            "onset at {first_nonzero}"
        );
        let window_energy: f64 = ch[1948..2002].iter().map(|v| v * v).sum();
        let total_energy: f64 = ch.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(window_energy, total_energy, epsilon = 1e-30);
    }

    #[test]
    fn transmit_time_reduces_to_two_way_on_axis() {
        for z in [0.020, 0.035, 0.050, 0.065] {
            assert_abs_diff_eq!(
                transmit_time(0.0, 0.050, 1540.0, 0.0, z),
                z / 1540.0,
                epsilon = 1e-18
            );
        }
    }

    #[test]
    fn opposite_polarities_negate_exactly_without_harmonic() {
        let g = tiny_geometry(0.040);
        let phantom = single_point(0.030, 0.0);
        let plus = synthesize_rf(&phantom, &g, &reference_pulse(1), 0).unwrap();
        let minus = synthesize_rf(&phantom, &g, &reference_pulse(-1), 0).unwrap();
        assert_eq!(plus.data.len(), minus.data.len());
        for (a, b) in plus.data.iter().zip(&minus.data) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn synthesis_is_linear_over_disjoint_phantoms() {
        let g = tiny_geometry(0.060);
        let pa = single_point(0.025, 0.1);
        let pb = single_point(0.045, 0.1);
        let mut both = pa.clone();
        both.scatterers.extend(pb.scatterers.iter().copied());
        let fa = synthesize_rf(&pa, &g, &reference_pulse(1), 0).unwrap();
        let fb = synthesize_rf(&pb, &g, &reference_pulse(1), 0).unwrap();
        let fab = synthesize_rf(&both, &g, &reference_pulse(1), 0).unwrap();
        for i in 0..fab.data.len() {
            assert_eq!(fab.data[i], fa.data[i] + fb.data[i]);
        }
    }

    #[test]
    fn empty_phantom_synthesizes_silence() {
        let g = tiny_geometry(0.040);
        let empty = Phantom::<f64> {
            kind: PhantomKind::Points,
            scatterers: Vec::new(),
            cyst_centers: Vec::new(),
            cyst_radius: 0.0,
            seed: 0,
        };
        let frame = synthesize_rf(&empty, &g, &reference_pulse(1), 0).unwrap();
        assert!(frame.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn echo_peaks_decay_with_depth() {
        let g = tiny_geometry(0.070);
        let pulse = reference_pulse(1);
        let mut phantom = single_point(POINT_DEPTHS_M[0], 0.0);
        phantom.scatterers = POINT_DEPTHS_M
            .iter()
            .map(|&z| Scatterer::new(0.0, z, 1.0, 0.0).unwrap())
            .collect();
        let frame = synthesize_rf(&phantom, &g, &pulse, 0).unwrap();
        let ch = frame.channel(1);
        let peaks: Vec<f64> = POINT_DEPTHS_M
            .iter()
            .map(|&z| {
                let center = (2.0 * z / 1540.0 * 50e6) as usize;
                ch[center - 30..center + 90]
                    .iter()
                    .fold(0.0f64, |m, &v| m.max(v.abs()))
            })
            .collect();
        for pair in peaks.windows(2) {
            assert!(pair[1] < pair[0], "deeper echo must be weaker: {peaks:?}");
        }
    }

    #[test]
    fn noise_hits_the_requested_snr() {
        let g = tiny_geometry(0.040);
        let clean = synthesize_rf(&single_point(0.030, 0.1), &g, &reference_pulse(1), 0).unwrap();
        let noisy = add_noise(
            clean.clone(),
            &NoiseSpec {
                snr_db: Some(60.0),
                seed: 7,
            },
        )
        .unwrap();
        let signal = clean.mean_power();
        let noise: f64 = clean
            .data
            .iter()
            .zip(&noisy.data)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            / clean.data.len() as f64;
        let measured = 10.0 * (signal / noise).log10();
        assert_abs_diff_eq!(measured, 60.0, epsilon = 0.3);
    }

    #[test]
    fn noiseless_sentinel_is_identity() {
        let g = tiny_geometry(0.040);
        let clean = synthesize_rf(&single_point(0.030, 0.1), &g, &reference_pulse(1), 0).unwrap();
        let out = add_noise(
            clean.clone(),
            &NoiseSpec {
                snr_db: None,
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(clean.data, out.data);
    }

    #[test]
    fn noise_rejects_zero_power_frames() {
        let frame = RfChannelFrame::<f64>::zeros(2, 16, 50e6, 0.0, 1, 0);
        assert!(add_noise(
            frame,
            &NoiseSpec {
                snr_db: Some(60.0),
                seed: 1,
            },
        )
        .is_err());
    }

    #[test]
    fn synthesis_validates_inputs() {
        let g = tiny_geometry(0.040);
        let p = single_point(0.030, 0.0);
        assert!(synthesize_rf(&p, &g, &reference_pulse(1), 5).is_err());
        let wrong_fs = TransmitPulse::gaussian(1.96e6, 2, 40e6, 1, 0.050, 1.0).unwrap();
        assert!(synthesize_rf(&p, &g, &wrong_fs, 0).is_err());
    }
}
