//! Rendering a 2-gram path into a phonetic feature image.
//!
//! Segment `i` of the path (from point `i` to point `i + 1`) is drawn with
//! the intensity of gram `i`, so the first stroke carries the full scale
//! factor and later strokes fade. A pixel belongs to a stroke of thickness
//! `t` when its centre lies within `t / 2` of the segment; overlapping
//! strokes keep the brighter value.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::GramPath;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const GRID_SIDE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityMode {
    /// `Z * prod_{k=0..=i} gamma^k = Z * gamma^(i(i+1)/2)`.
    #[default]
    CumulativeProduct,
    /// `Z * gamma^i`.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterConfig<T> {
    /// Intensity of the first stroke.
    pub scale: T,
    /// Per-gram discount, in (0, 1].
    pub gamma: T,
    pub intensity_mode: IntensityMode,
    pub width: usize,
    pub height: usize,
    /// Stroke thickness is `thickness_budget / total_length`, clamped.
    pub thickness_budget: f64,
    pub max_thickness: u32,
}

impl<T: Scalar> Default for RasterConfig<T> {
    fn default() -> Self {
        RasterConfig {
            scale: T::from_f64_lossy(255.0),
            gamma: T::from_f64_lossy(0.9),
            intensity_mode: IntensityMode::CumulativeProduct,
            width: GRID_SIDE,
            height: GRID_SIDE,
            thickness_budget: 256.0,
            max_thickness: 7,
        }
    }
}

impl<T: Scalar> RasterConfig<T> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > T::zero()) {
            return Err(Error::Config("scale factor must be positive".into()));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return Err(Error::Config("gamma must lie in (0, 1]".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("grid must be non-empty".into()));
        }
        if !(self.thickness_budget > 0.0) || self.max_thickness == 0 {
            return Err(Error::Config("thickness limits must be positive".into()));
        }
        Ok(())
    }
}

/// Intensity of gram `i` (0-based).
pub fn gram_intensity<T: Scalar>(i: usize, cfg: &RasterConfig<T>) -> T {
    let exponent = match cfg.intensity_mode {
        IntensityMode::CumulativeProduct => (i as u64) * (i as u64 + 1) / 2,
        IntensityMode::Geometric => i as u64,
    };
    match i32::try_from(exponent) {
        Ok(e) => cfg.scale * cfg.gamma.powi(e),
        Err(_) if cfg.gamma == T::one() => cfg.scale,
        Err(_) => T::zero(),
    }
}

/// Sum of the Euclidean segment lengths.
pub fn total_path_length(path: &GramPath) -> f64 {
    path.points
        .windows(2)
        .map(|w| {
            let dx = f64::from(w[1].x) - f64::from(w[0].x);
            let dy = f64::from(w[1].y) - f64::from(w[0].y);
            dx.hypot(dy)
        })
        .sum()
}

/// Stroke thickness in pixels. Shorter paths get thicker strokes.
pub fn line_thickness<T: Scalar>(path: &GramPath, cfg: &RasterConfig<T>) -> u32 {
    let length = total_path_length(path).max(1.0);
    let raw = (cfg.thickness_budget / length).round();
    raw.clamp(1.0, f64::from(cfg.max_thickness)) as u32
}

/// A `width x height` intensity grid, row-major, `x` = column, `y` = row,
/// origin top-left.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhoneticFeature<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
    /// Intensity scale the pixels were drawn with.
    pub scale: T,
    pub source: String,
    pub total_length: f64,
    pub thickness: u32,
}

impl<T: Scalar> PhoneticFeature<T> {
    pub fn zeros(width: usize, height: usize, scale: T) -> Self {
        PhoneticFeature {
            width,
            height,
            pixels: vec![T::zero(); width * height],
            scale,
            source: String::new(),
            total_length: 0.0,
            thickness: 0,
        }
    }

    /// Wraps an existing row-major buffer.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<T>, scale: T) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} grid",
                pixels.len()
            )));
        }
        Ok(PhoneticFeature {
            width,
            height,
            pixels,
            scale,
            source: String::new(),
            total_length: 0.0,
            thickness: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    /// Keeps the larger of the current and the new value.
    pub fn put_max(&mut self, x: usize, y: usize, value: T) {
        let p = &mut self.pixels[y * self.width + x];
        if value > *p {
            *p = value;
        }
    }

    pub fn is_all_zero(&self) -> bool {
        self.pixels.iter().all(|v| v.is_zero())
    }

    /// `(x, y)` of every pixel with a nonzero value, row-major order.
    pub fn nonzero(&self) -> Vec<(usize, usize)> {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    /// Pixels as 8-bit values: `floor(v * 255 / scale)`.
    pub fn to_u8(&self) -> Vec<u8> {
        let factor = T::from_f64_lossy(255.0) / self.scale;
        self.pixels
            .iter()
            .map(|&v| {
                let q = (v * factor).floor().to_f64().unwrap_or(0.0);
                q.clamp(0.0, 255.0) as u8
            })
            .collect()
    }

    /// Writes an 8-bit grayscale PNG.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = std::io::BufWriter::new(file);
        write_png_to(
            &mut writer,
            self.width,
            self.height,
            png::ColorType::Grayscale,
            &self.to_u8(),
        )?;
        writer.flush().map_err(|e| Error::io(path, e))
    }

    /// Raw dump: a `PF1 <u> <v>` header line, then the pixels as
    /// little-endian `f32`.
    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "PF1 {} {}", self.width, self.height)?;
        for v in &self.pixels {
            w.write_all(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes())?;
        }
        Ok(())
    }
}

pub(crate) fn write_png_to<W: Write>(
    w: W,
    width: usize,
    height: usize,
    color: png::ColorType,
    data: &[u8],
) -> Result<()> {
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::ShapeMismatch(format!("image side {v} too large")))
    };
    let mut encoder = png::Encoder::new(w, dim(width)?, dim(height)?);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(data)?;
    writer.finish()?;
    Ok(())
}

/// Squared distance test against a stroke of integer `thickness`, in exact
/// integer arithmetic: `dist(p, [a, b]) <= thickness / 2`.
fn within_stroke(p: (i64, i64), a: (i64, i64), b: (i64, i64), thickness: i64) -> bool {
    let t2 = thickness * thickness;
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let along = wx * dx + wy * dy;
    if len2 == 0 || along <= 0 {
        return 4 * (wx * wx + wy * wy) <= t2;
    }
    if along >= len2 {
        let (ux, uy) = (p.0 - b.0, p.1 - b.1);
        return 4 * (ux * ux + uy * uy) <= t2;
    }
    let cross = wx * dy - wy * dx;
    4 * cross * cross <= t2 * len2
}

/// Draws one stroke, scanning rows of the stroke's bounding box.
fn draw_segment<T: Scalar>(
    grid: &mut PhoneticFeature<T>,
    a: (i64, i64),
    b: (i64, i64),
    thickness: u32,
    value: T,
) {
    let thickness = i64::from(thickness);
    let reach = (thickness + 1) / 2;
    let clamp_x = |v: i64| v.clamp(0, grid.width as i64 - 1);
    let clamp_y = |v: i64| v.clamp(0, grid.height as i64 - 1);
    let (x_lo, x_hi) = (clamp_x(a.0.min(b.0) - reach), clamp_x(a.0.max(b.0) + reach));
    let (y_lo, y_hi) = (clamp_y(a.1.min(b.1) - reach), clamp_y(a.1.max(b.1) + reach));
    for y in y_lo..=y_hi {
        // The stroke is convex, so its pixels on one row are contiguous.
        let mut inside = false;
        for x in x_lo..=x_hi {
            if within_stroke((x, y), a, b, thickness) {
                inside = true;
                grid.put_max(x as usize, y as usize, value);
            } else if inside {
                break;
            }
        }
    }
}

/// Draws `path` onto an existing grid with max-composition.
pub fn draw_path<T: Scalar>(
    grid: &mut PhoneticFeature<T>,
    path: &GramPath,
    thickness: u32,
    cfg: &RasterConfig<T>,
) {
    for (i, w) in path.points.windows(2).enumerate() {
        let a = (i64::from(w[0].x), i64::from(w[0].y));
        let b = (i64::from(w[1].x), i64::from(w[1].y));
        draw_segment(grid, a, b, thickness, gram_intensity(i, cfg));
    }
}

/// Renders a path into a fresh feature. Fewer than two points give the
/// all-zero grid.
pub fn rasterize<T: Scalar>(path: &GramPath, cfg: &RasterConfig<T>) -> PhoneticFeature<T> {
    let mut grid = PhoneticFeature::zeros(cfg.width, cfg.height, cfg.scale);
    let thickness = line_thickness(path, cfg);
    draw_path(&mut grid, path, thickness, cfg);
    grid.total_length = total_path_length(path);
    grid.thickness = thickness;
    grid
}
