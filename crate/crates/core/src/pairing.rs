//! Two-channel pair tensors and their overlay visualization.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{write_png_to, PhoneticFeature};
use crate::scalar::Scalar;

/// Channel 0 holds the first mark, channel 1 the second, both scaled to
/// `[0, 1]`. Layout is channel-major, then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTensor<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> PairTensor<T> {
    pub fn from_channels(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != 2 * width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a 2x{height}x{width} tensor",
                data.len()
            )));
        }
        Ok(PairTensor {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let plane = self.width * self.height;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Channels exchanged.
    pub fn swapped(&self) -> Self {
        let mut data = self.channel(1).to_vec();
        data.extend_from_slice(self.channel(0));
        PairTensor { data, ..*self }
    }

    /// Pixels nonzero in both channels.
    pub fn overlap_count(&self) -> usize {
        self.channel(0)
            .iter()
            .zip(self.channel(1))
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .count()
    }

    /// RGB bytes: red = channel 0, green = channel 1, blue = 0.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let quantize = |v: T| {
            let q = (v * T::from_f64_lossy(255.0))
                .floor()
                .to_f64()
                .unwrap_or(0.0);
            q.clamp(0.0, 255.0) as u8
        };
        let mut out = Vec::with_capacity(self.width * self.height * 3);
        for (&r, &g) in self.channel(0).iter().zip(self.channel(1)) {
            out.extend_from_slice(&[quantize(r), quantize(g), 0]);
        }
        out
    }

    /// Overlapping strokes come out yellow.
    pub fn export_rgb_png(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_png_to(
            &mut w,
            self.width,
            self.height,
            png::ColorType::Rgb,
            &self.to_rgb8(),
        )?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Raw dump: a `PF2 <u> <v>` header line, then both channels as
    /// little-endian `f32`.
    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "PF2 {} {}", self.width, self.height)?;
        for v in &self.data {
            let v = v.to_f32().unwrap_or(f32::NAN);
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw<R: BufRead>(mut r: R) -> Result<Self> {
        let bad = |reason: &str| Error::ShapeMismatch(format!("raw tensor: {reason}"));
        let mut header = String::new();
        r.read_line(&mut header)
            .map_err(|e| Error::io("<raw tensor>", e))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("PF2") {
            return Err(bad("missing PF2 header"));
        }
        let mut dim = || -> Result<usize> {
            parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad dimensions"))
        };
        let (width, height) = (dim()?, dim()?);
        let mut bytes = vec![0u8; 2 * width * height * 4];
        r.read_exact(&mut bytes)
            .map_err(|_| bad("truncated payload"))?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| T::from_f32(f32::from_le_bytes([c[0], c[1], c[2], c[3]])).unwrap_or(T::zero()))
            .collect();
        Self::from_channels(width, height, data)
    }
}

/// Stacks two features into one network input, each divided by its own
/// scale factor.
pub fn compose_pair<T: Scalar>(
    a: &PhoneticFeature<T>,
    b: &PhoneticFeature<T>,
) -> Result<PairTensor<T>> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let mut data = Vec::with_capacity(2 * a.pixels().len());
    data.extend(a.pixels().iter().map(|&v| v / a.scale));
    data.extend(b.pixels().iter().map(|&v| v / b.scale));
    Ok(PairTensor {
        width: a.width(),
        height: a.height(),
        data,
    })
}

/// Label semantics: similar = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Similarity {
    Dissimilar = 0,
    Similar = 1,
}

impl Similarity {
    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Similarity::Dissimilar),
            1 => Some(Similarity::Similar),
            _ => None,
        }
    }

    pub fn label(self) -> usize {
        self as usize
    }
}

/// One labelled training example.
#[derive(Debug, Clone)]
pub struct PairSample<T> {
    pub pair: PairTensor<T>,
    pub label: Similarity,
    pub id: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::GramPath;
    use crate::raster::{rasterize, RasterConfig};

    fn feature(points: &[(u8, u8)]) -> PhoneticFeature<f32> {
        rasterize(&GramPath::from_pairs(points), &RasterConfig::default())
    }

    fn decode_png(path: &Path) -> (png::ColorType, Vec<u8>) {
        let file = std::io::BufReader::new(std::fs::File::open(path).unwrap());
        let mut reader = png::Decoder::new(file).read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        buf.truncate(info.buffer_size());
        (info.color_type, buf)
    }

    #[test]
    fn compose_scales_and_keeps_channels_apart() {
        let a = feature(&[(16, 29), (29, 69), (69, 19)]);
        let zero = PhoneticFeature::zeros(128, 128, 255.0);
        let t = compose_pair(&a, &a).unwrap();
        assert_eq!(t.channel(0), t.channel(1));
        assert!(t.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(t.data().contains(&1.0));
        let t = compose_pair(&a, &zero).unwrap();
        assert!(t.channel(1).iter().all(|&v| v == 0.0));
        assert_eq!(t.overlap_count(), 0);
    }

    #[test]
    fn compose_is_symmetric_up_to_channel_swap() {
        let a = feature(&[(16, 29), (29, 69)]);
        let b = feature(&[(16, 66), (66, 46), (46, 111)]);
        assert_eq!(
            compose_pair(&a, &b).unwrap().swapped(),
            compose_pair(&b, &a).unwrap()
        );
    }

    #[test]
    fn dimension_mismatch() {
        let a = PhoneticFeature::<f32>::zeros(128, 128, 255.0);
        let b = PhoneticFeature::<f32>::zeros(64, 128, 255.0);
        assert!(matches!(
            compose_pair(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn png_export_colors() {
        let dir = tempfile::tempdir().unwrap();
        let a = feature(&[(16, 29), (29, 69), (69, 19)]);
        let zero = PhoneticFeature::zeros(128, 128, 255.0);

        let path = dir.path().join("black.png");
        compose_pair(&zero, &zero)
            .unwrap()
            .export_rgb_png(&path)
            .unwrap();
        let (color, px) = decode_png(&path);
        assert_eq!(color, png::ColorType::Rgb);
        assert_eq!(px.len(), 128 * 128 * 3);
        assert!(px.iter().all(|&v| v == 0));

        let path = dir.path().join("red.png");
        compose_pair(&a, &zero)
            .unwrap()
            .export_rgb_png(&path)
            .unwrap();
        let (_, px) = decode_png(&path);
        assert!(px.chunks(3).all(|p| p[1] == 0 && p[2] == 0));
        assert!(px.chunks(3).any(|p| p[0] == 255));

        let path = dir.path().join("yellow.png");
        let pair = compose_pair(&a, &a).unwrap();
        pair.export_rgb_png(&path).unwrap();
        let (_, px) = decode_png(&path);
        assert!(px.chunks(3).all(|p| p[0] == p[1] && p[2] == 0));
        assert!(px.chunks(3).any(|p| p == [255, 255, 0]));
        // Decoding recovers the floor-quantized channels exactly.
        assert_eq!(px, pair.to_rgb8());
    }

    #[test]
    fn grayscale_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = feature(&[(16, 29), (29, 69), (69, 19), (19, 69), (69, 29)]);
        let path = dir.path().join("pf.png");
        a.write_png(&path).unwrap();
        let (color, px) = decode_png(&path);
        assert_eq!(color, png::ColorType::Grayscale);
        assert_eq!(px, a.to_u8());
    }

    #[test]
    fn raw_dump_round_trip() {
        let a = feature(&[(16, 29), (29, 69)]);
        let b = feature(&[(16, 66), (66, 46)]);
        let t = compose_pair(&a, &b).unwrap();
        let mut buf = Vec::new();
        t.write_raw(&mut buf).unwrap();
        assert!(buf.starts_with(b"PF2 128 128\n"));
        assert_eq!(buf.len(), 12 + 2 * 128 * 128 * 4);
        let back = PairTensor::<f32>::read_raw(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert!(PairTensor::<f32>::read_raw(&buf[..100]).is_err());
    }
}
