//! Red-blue heatmaps written as binary PPM.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    /// RGB triples, row-major.
    pub pixels: Vec<u8>,
}

impl Heatmap {
    /// Binary PPM (`P6`, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Sums a channel-major `[channels][height][width]` vector over channels.
pub fn reduce_channels(values: &[f64], channels: usize) -> Result<Vec<f64>> {
    if channels == 0 || !values.len().is_multiple_of(channels) {
        return Err(Error::shape(format!(
            "{} values cannot be split into {channels} channels",
            values.len()
        )));
    }
    let plane = values.len() / channels;
    Ok((0..plane)
        .map(|p| (0..channels).map(|c| values[c * plane + p]).sum())
        .collect())
}

fn channel(t: f64) -> u8 {
    (255.0 * t).round() as u8
}

/// Renders `values` (`channels` planes of `width × height`) with positive
/// values in red and negative in blue, normalised by the largest magnitude.
pub fn render_heatmap(values: &[f64], width: usize, height: usize, channels: usize) -> Result<Heatmap> {
    if width == 0 || height == 0 || values.len() != width * height * channels {
        return Err(Error::shape(format!(
            "{} values do not fill {channels}x{height}x{width}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("heatmap values must be finite"));
    }
    let plane = if channels == 1 {
        values.to_vec()
    } else {
        reduce_channels(values, channels)?
    };
    let peak = plane.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pixels = Vec::with_capacity(plane.len() * 3);
    for &v in &plane {
        let t = if peak == 0.0 { 0.0 } else { v / peak };
        let rgb = if t >= 0.0 {
            let g = channel(1.0 - t);
            [255, g, g]
        } else {
            let g = channel(1.0 + t);
            [g, g, 255]
        };
        pixels.extend_from_slice(&rgb);
    }
    Ok(Heatmap { width, height, pixels })
}
