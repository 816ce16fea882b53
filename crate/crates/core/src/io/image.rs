//! Binary PGM/PPM heatmap emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::search::normalize;

fn scale_to_bytes(values: &[f64]) -> Vec<u8> {
    normalize(values)
        .into_iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect()
}

/// Writes `values` as a binary PGM (P5, maxval 255), min-max scaled.
/// The image is `width` (grid columns) by `height` (grid rows).
pub fn write_pgm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    values: &[f64],
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::invalid(
            "value count does not match image dimensions",
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(&scale_to_bytes(values))?;
    w.flush()?;
    Ok(())
}

/// Writes a binary PPM (P6) selection overlay: grayscale odor with the red
/// channel forced to 255 on selected tokens.
pub fn write_ppm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    values: &[f64],
    selected: &[usize],
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::invalid(
            "value count does not match image dimensions",
        ));
    }
    if selected.iter().any(|&i| i >= values.len()) {
        return Err(Error::invalid("selected index out of image range"));
    }
    let gray = scale_to_bytes(values);
    let mut mask = vec![false; values.len()];
    for &i in selected {
        mask[i] = true;
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{width} {height}\n255\n")?;
    let mut pixels = Vec::with_capacity(values.len() * 3);
    for (i, &g) in gray.iter().enumerate() {
        let r = if mask[i] { 255 } else { g };
        pixels.extend_from_slice(&[r, g, g]);
    }
    w.write_all(&pixels)?;
    w.flush()?;
    Ok(())
}
