//! Run configuration: JSON-loadable parameters with reference defaults,
//! command-line overrides, and the `config.resolved.json` echo written next
//! to every run's outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thibeam::model::{BeamformerParams, ScanGeometry, TransmitPulse, WindowKind};
use thibeam::{Geometry, Params, Pulse};

use crate::{CliError, CliResult};

/// Scene selector for simulation and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomChoice {
    Points,
    Cysts,
}

/// Beamformer selector for single runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Das,
    Mv,
    Eibmv,
}

/// Receive apodization window for the delay-and-sum beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowChoice {
    Rectangular,
    Hanning,
    Hamming,
}

/// Complete description of one run. Every field has a reference default, so
/// an empty JSON object (or no `--config` at all) reproduces the reference
/// acquisition: 132-element linear array at 50 MHz sampling, 1.96 MHz
/// two-cycle pulse focused at 50 mm, 64 scanlines over 20-70 mm depth,
/// 60 dB channel SNR, harmonic band-pass on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Channel sampling rate in Hz.
    pub fs: f64,
    /// Transmit center frequency in Hz.
    pub f0: f64,
    /// Physical element count of the linear array.
    pub n_elements: usize,
    /// Receive aperture size M (elements per scanline).
    pub rx_aperture: usize,
    /// Element pitch in meters.
    pub pitch: f64,
    /// Kerf in meters (informational; pitch drives positions).
    pub kerf: f64,
    /// Speed of sound in m/s.
    pub c0: f64,
    /// Transmit focal depth in meters.
    pub tx_focus_depth: f64,
    /// Cycles in the transmitted Gaussian-windowed sinusoid.
    pub n_cycles: u32,
    /// Peak pressure amplitude of the transmit pulse (normalized units).
    pub initial_pressure: f64,
    /// Number of image scanlines.
    pub n_scanlines: usize,
    /// Shallowest imaged depth in meters.
    pub depth_min: f64,
    /// Deepest imaged depth in meters.
    pub depth_max: f64,
    /// Depth-grid decimation relative to the RF sampling rate.
    pub decimation: usize,
    /// Scene to simulate and measure.
    pub phantom: PhantomChoice,
    /// Second-harmonic source coefficient applied to every scatterer.
    pub harmonic_coeff: f64,
    /// Channel SNR in dB; `null` disables noise entirely.
    pub snr_db: Option<f64>,
    /// Apply the zero-phase Gaussian band-pass around 2*f0 after pulse
    /// inversion. `--no-bandpass` clears this.
    pub bandpass: bool,
    /// Fractional -6 dB bandwidth of the harmonic band-pass.
    pub fractional_bandwidth: f64,
    /// Display dynamic range in dB for rendered images.
    pub dynamic_range_db: f64,
    /// Base seed; all stream seeds derive from it.
    pub seed: u64,
    /// Rays used by the cyst radius estimator.
    pub n_rays: usize,
    /// Beamformer for single runs (sweeps manage their own parameters).
    pub method: MethodChoice,
    /// DAS apodization window.
    pub window: WindowChoice,
    /// Temporal average half-width K; `null` resolves to the standard value
    /// floor(fs * n_cycles / (2 * f0)).
    pub k: Option<usize>,
    /// Subarray length L; `null` resolves to the standard value M/2.
    pub l: Option<usize>,
    /// Diagonal loading factor; `null` resolves to 1/(100*L).
    pub delta_load: Option<f64>,
    /// Eigenvalue threshold fraction for subspace selection.
    pub delta_sub: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fs: 50.0e6,
            f0: 1.96e6,
            n_elements: 132,
            rx_aperture: 66,
            pitch: 409.0e-6,
            kerf: 20.0e-6,
            c0: 1540.0,
            tx_focus_depth: 0.050,
            n_cycles: 2,
            initial_pressure: 1.0,
            n_scanlines: 64,
            depth_min: 0.020,
            depth_max: 0.070,
            decimation: 4,
            phantom: PhantomChoice::Points,
            harmonic_coeff: thibeam::sim::DEFAULT_HARMONIC_COEFF,
            snr_db: Some(60.0),
            bandpass: true,
            fractional_bandwidth: 0.5,
            dynamic_range_db: 50.0,
            seed: 7,
            n_rays: 64,
            method: MethodChoice::Eibmv,
            window: WindowChoice::Rectangular,
            k: None,
            l: None,
            delta_load: None,
            delta_sub: 0.5,
        }
    }
}

impl RunConfig {
    /// Load a configuration from a JSON file; unknown keys are rejected.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply command-line overrides on top of the file (or default) values.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        dynamic_range: Option<f64>,
        no_bandpass: bool,
    ) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(dr) = dynamic_range {
            self.dynamic_range_db = dr;
        }
        if no_bandpass {
            self.bandpass = false;
        }
    }

    /// Cheap structural checks; detailed physics validation happens in the
    /// core constructors.
    pub fn validate(&self) -> CliResult<()> {
        if self.decimation == 0 {
            return Err(CliError::invalid("decimation must be at least 1"));
        }
        if !(self.dynamic_range_db.is_finite() && self.dynamic_range_db > 0.0) {
            return Err(CliError::invalid("dynamic_range_db must be positive"));
        }
        if self.n_rays < 4 {
            return Err(CliError::invalid("n_rays must be at least 4"));
        }
        Ok(())
    }

    /// Standard temporal half-width: half the pulse length in samples.
    pub fn k_standard(&self) -> usize {
        (self.fs * self.n_cycles as f64 / (2.0 * self.f0)).floor() as usize
    }

    /// Standard subarray length: half the receive aperture.
    pub fn l_standard(&self) -> usize {
        self.rx_aperture / 2
    }

    pub fn resolved_k(&self) -> usize {
        self.k.unwrap_or_else(|| self.k_standard())
    }

    pub fn resolved_l(&self) -> usize {
        self.l.unwrap_or_else(|| self.l_standard())
    }

    /// Loading factor, defaulting to 1/(100*L) for the resolved L.
    pub fn resolved_delta_load(&self) -> f64 {
        self.delta_load
            .unwrap_or_else(|| 1.0 / (100.0 * self.resolved_l() as f64))
    }

    pub fn window_kind(&self) -> WindowKind {
        match self.window {
            WindowChoice::Rectangular => WindowKind::Rectangular,
            WindowChoice::Hanning => WindowKind::Hanning,
            WindowChoice::Hamming => WindowKind::Hamming,
        }
    }

    pub fn geometry(&self) -> CliResult<Geometry> {
        Ok(ScanGeometry::linear(
            self.n_elements,
            self.pitch,
            self.kerf,
            self.c0,
            self.fs,
            self.rx_aperture,
            self.n_scanlines,
            self.depth_min,
            self.depth_max,
        )?)
    }

    pub fn pulse(&self, polarity: i8) -> CliResult<Pulse> {
        Ok(TransmitPulse::gaussian(
            self.f0,
            self.n_cycles,
            self.fs,
            polarity,
            self.tx_focus_depth,
            self.initial_pressure,
        )?)
    }

    /// Beamformer parameters for single runs, validated against `geometry`.
    pub fn beamformer(&self, geometry: &Geometry) -> CliResult<Params> {
        let params = match self.method {
            MethodChoice::Das => BeamformerParams::das(self.window_kind()),
            MethodChoice::Mv => BeamformerParams::mv(
                self.resolved_k(),
                self.resolved_l(),
                self.resolved_delta_load(),
            ),
            MethodChoice::Eibmv => BeamformerParams::eibmv(
                self.resolved_k(),
                self.resolved_l(),
                self.resolved_delta_load(),
                self.delta_sub,
            ),
        };
        params.validate(geometry)?;
        Ok(params)
    }

    /// Write `config.resolved.json` into `out_dir`: every field concrete
    /// (optional fields replaced by their resolved values) plus the invoking
    /// command, thread count, and sweep family when applicable.
    pub fn write_resolved(
        &self,
        out_dir: &Path,
        command: &str,
        family: Option<&str>,
        threads: usize,
    ) -> CliResult<()> {
        let mut value = serde_json::to_value(self)?;
        let obj = value
            .as_object_mut()
            .expect("config serializes to an object");
        obj.insert("k".into(), serde_json::json!(self.resolved_k()));
        obj.insert("l".into(), serde_json::json!(self.resolved_l()));
        obj.insert(
            "delta_load".into(),
            serde_json::json!(self.resolved_delta_load()),
        );
        obj.insert("command".into(), serde_json::json!(command));
        obj.insert("threads".into(), serde_json::json!(threads));
        if let Some(f) = family {
            obj.insert("family".into(), serde_json::json!(f));
        }
        let path = out_dir.join("config.resolved.json");
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?;
        Ok(())
    }
}
