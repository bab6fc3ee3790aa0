//! On-disk formats for channel data and beamformed dB maps.
//!
//! Both formats share one convention: a single-line JSON header terminated
//! by `\n`, followed immediately by raw little-endian `f32` samples. RF
//! frames store channel-major data (all samples of channel 0, then channel
//! 1, ...); dB maps store row-major images with depth along rows and
//! scanlines along columns, matching the rendered PGM orientation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thibeam::model::RfChannelFrame;
use thibeam::{Frame, Geometry, Image};

use crate::{CliError, CliResult};

/// Acquisition geometry summary embedded in every RF header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub n_elements: usize,
    pub rx_aperture: usize,
    pub pitch: f64,
    pub kerf: f64,
    pub c0: f64,
    pub n_scanlines: usize,
    pub depth_min: f64,
    pub depth_max: f64,
}

impl GeometrySummary {
    pub fn from_geometry(g: &Geometry) -> Self {
        GeometrySummary {
            n_elements: g.n_elements(),
            rx_aperture: g.rx_aperture,
            pitch: g.pitch,
            kerf: g.kerf,
            c0: g.c0,
            n_scanlines: g.n_scanlines(),
            depth_min: g.depth_min,
            depth_max: g.depth_max,
        }
    }
}

/// Header line of an RF channel-data file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfHeader {
    pub kind: String,
    pub fs: f64,
    pub t0: f64,
    pub polarity: i8,
    pub scanline_index: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub geometry: GeometrySummary,
}

/// Header line of a `.dbmap` sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DbmapHeader {
    pub kind: String,
    /// Image rows (depth samples).
    pub n_rows: usize,
    /// Image columns (scanlines).
    pub n_cols: usize,
    pub scanline_x: Vec<f64>,
    pub depth_min: f64,
    pub depth_step: f64,
    pub dynamic_range_db: f64,
    pub guard_rows: usize,
}

fn write_header<T: Serialize>(w: &mut impl Write, header: &T) -> CliResult<()> {
    let mut line = serde_json::to_string(header)?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    Ok(())
}

fn read_header_line(r: &mut impl BufRead, path: &Path) -> CliResult<String> {
    let mut line = String::new();
    let n = r.read_line(&mut line)?;
    if n == 0 {
        return Err(CliError::io(format!("{}: empty file", path.display())));
    }
    Ok(line)
}

fn write_f32_samples<'a>(
    w: &mut impl Write,
    samples: impl Iterator<Item = &'a f64>,
) -> CliResult<()> {
    let mut buf = Vec::with_capacity(64 * 1024);
    for &x in samples {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
        if buf.len() >= 64 * 1024 {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f32_samples(r: &mut impl Read, count: usize, path: &Path) -> CliResult<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)
        .map_err(|e| CliError::io(format!("{}: truncated sample block: {e}", path.display())))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(CliError::io(format!(
            "{}: trailing bytes after the sample block",
            path.display()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Write one RF frame: JSON header line + little-endian f32 channel-major
/// samples. The in-memory f64 samples are narrowed to f32 at this boundary.
pub fn write_rf_frame(path: &Path, frame: &Frame, geometry: &Geometry) -> CliResult<()> {
    let header = RfHeader {
        kind: "rf".to_string(),
        fs: frame.fs,
        t0: frame.t0,
        polarity: frame.polarity,
        scanline_index: frame.scanline_index,
        n_channels: frame.n_channels,
        n_samples: frame.n_samples,
        geometry: GeometrySummary::from_geometry(geometry),
    };
    let mut w = BufWriter::new(
        File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?,
    );
    write_header(&mut w, &header)?;
    write_f32_samples(&mut w, frame.data.iter())?;
    w.flush()?;
    Ok(())
}

/// Read an RF frame written by [`write_rf_frame`], widening samples to f64.
pub fn read_rf_frame(path: &Path) -> CliResult<(Frame, RfHeader)> {
    let mut r = BufReader::new(
        File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?,
    );
    let line = read_header_line(&mut r, path)?;
    let header: RfHeader = serde_json::from_str(&line)
        .map_err(|e| CliError::io(format!("{}: bad RF header: {e}", path.display())))?;
    if header.kind != "rf" {
        return Err(CliError::io(format!(
            "{}: expected an RF file, found kind \"{}\"",
            path.display(),
            header.kind
        )));
    }
    let samples = read_f32_samples(&mut r, header.n_channels * header.n_samples, path)?;
    let frame = RfChannelFrame {
        data: samples.iter().map(|&x| x as f64).collect(),
        n_channels: header.n_channels,
        n_samples: header.n_samples,
        fs: header.fs,
        t0: header.t0,
        polarity: header.polarity,
        scanline_index: header.scanline_index,
    };
    Ok((frame, header))
}

/// Write the dB sidecar: unclamped dB values (relative to the image peak) as
/// row-major f32, depth along rows, scanlines along columns.
pub fn write_dbmap(path: &Path, image: &Image) -> CliResult<()> {
    let header = DbmapHeader {
        kind: "dbmap".to_string(),
        n_rows: image.n_depth,
        n_cols: image.n_scanlines,
        scanline_x: image.scanline_x.clone(),
        depth_min: image.depth_min,
        depth_step: image.depth_step,
        dynamic_range_db: image.dynamic_range_db,
        guard_rows: image.guard_rows,
    };
    let db = image.db_unclamped();
    let mut w = BufWriter::new(
        File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?,
    );
    write_header(&mut w, &header)?;
    let mut buf = Vec::with_capacity(header.n_rows * header.n_cols * 4);
    for row in 0..header.n_rows {
        for col in 0..header.n_cols {
            let v = db[col * header.n_rows + row];
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Read a dB sidecar back into an image. Envelope values are reconstructed
/// as 10^(dB/20), so the image peak normalizes to 1.
pub fn read_dbmap(path: &Path) -> CliResult<(Image, DbmapHeader)> {
    let mut r = BufReader::new(
        File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?,
    );
    let line = read_header_line(&mut r, path)?;
    let header: DbmapHeader = serde_json::from_str(&line)
        .map_err(|e| CliError::io(format!("{}: bad dbmap header: {e}", path.display())))?;
    if header.kind != "dbmap" {
        return Err(CliError::io(format!(
            "{}: expected a dbmap file, found kind \"{}\"",
            path.display(),
            header.kind
        )));
    }
    let db = read_f32_samples(&mut r, header.n_rows * header.n_cols, path)?;
    let mut values = vec![0.0f64; header.n_rows * header.n_cols];
    for row in 0..header.n_rows {
        for col in 0..header.n_cols {
            let v = db[row * header.n_cols + col] as f64;
            values[col * header.n_rows + row] = 10.0f64.powf(v / 20.0);
        }
    }
    let image = Image::from_envelope(
        values,
        header.n_cols,
        header.n_rows,
        header.scanline_x.clone(),
        header.depth_min,
        header.depth_step,
        header.dynamic_range_db,
        header.guard_rows,
    )?;
    Ok((image, header))
}
