//! Grayscale rendering of beamformed images as binary (P5) PGM.

use std::fs;
use std::path::Path;

use thibeam::Image;

use crate::{CliError, CliResult};

/// Map one dB value to an 8-bit gray level over the dynamic range `dr`:
/// round(255 * (dB + dr) / dr), clamped to [0, 255]. The image peak (0 dB)
/// maps to 255 and -dr dB (or below) maps to 0.
fn gray(db: f64, dr: f64) -> u8 {
    let v = (255.0 * (db + dr) / dr).round();
    v.clamp(0.0, 255.0) as u8
}

/// Render an image to binary PGM bytes: depth along rows, scanlines along
/// columns, gray levels spanning `image.dynamic_range_db`.
pub fn render_pgm(image: &Image) -> CliResult<Vec<u8>> {
    if image.n_scanlines == 0 || image.n_depth == 0 {
        return Err(CliError::invalid("cannot render an empty image"));
    }
    let dr = image.dynamic_range_db;
    if !(dr.is_finite() && dr > 0.0) {
        return Err(CliError::invalid("dynamic range must be positive"));
    }
    let db = image.db_unclamped();
    let mut out = Vec::with_capacity(32 + image.n_scanlines * image.n_depth);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", image.n_scanlines, image.n_depth).as_bytes());
    for row in 0..image.n_depth {
        for col in 0..image.n_scanlines {
            out.push(gray(db[col * image.n_depth + row], dr));
        }
    }
    Ok(out)
}

/// Render and write `image.pgm`-style output to `path`.
pub fn write_pgm(path: &Path, image: &Image) -> CliResult<()> {
    let bytes = render_pgm(image)?;
    fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(())
}
