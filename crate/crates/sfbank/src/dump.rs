//! Binary dump formats for feature tensors and designed filter weights.
//!
//! Both files share the same envelope: a 16-byte header (4-byte magic, a
//! format version byte, 11 reserved zero bytes), little-endian u32
//! dimensions, then a little-endian f32 payload in logical index order.
//!
//! Feature dump ("SFBF", version 1): dims `[C, T, F]` with `C = 2I`
//! interleaved Re/Im channels; payload is C-major.
//!
//! Weight dump ("SFBW", version 1): dims `[I, F, M, 2]`; the trailing axis
//! holds (re, im) pairs, so the payload is `I*F*M` complex weights.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;

use crate::spatialbank::{FeatureTensor, FilterBank};
use crate::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"SFBF";
pub const WEIGHTS_MAGIC: [u8; 4] = *b"SFBW";
pub const FORMAT_VERSION: u8 = 1;

const HEADER_LEN: usize = 16;

fn write_header(w: &mut impl Write, magic: [u8; 4]) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&magic);
    header[4] = FORMAT_VERSION;
    w.write_all(&header)?;
    Ok(())
}

fn read_header(r: &mut impl Read, magic: [u8; 4], what: &str) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[..4] != magic {
        return Err(Error::InvalidArgument(format!(
            "not a {what} dump: bad magic {:?}",
            &header[..4]
        )));
    }
    if header[4] != FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported {what} dump version {} (expected {FORMAT_VERSION})",
            header[4]
        )));
    }
    Ok(())
}

fn write_dims(w: &mut impl Write, dims: &[usize]) -> Result<()> {
    for &d in dims {
        let d = u32::try_from(d)
            .map_err(|_| Error::InvalidArgument(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

fn read_dims<const N: usize>(r: &mut impl Read) -> Result<[usize; N]> {
    let mut out = [0usize; N];
    let mut buf = [0u8; 4];
    for slot in &mut out {
        r.read_exact(&mut buf)?;
        *slot = u32::from_le_bytes(buf) as usize;
    }
    Ok(out)
}

/// Writes a feature tensor as an "SFBF" version-1 dump, converting to f32.
pub fn write_features(path: impl AsRef<Path>, feat: &FeatureTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, FEATURE_MAGIC)?;
    let shape = feat.data().shape();
    write_dims(&mut w, shape)?;
    for &v in feat.data().iter() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an "SFBF" dump back as the stored f32 tensor `[C, T, F]`.
pub fn read_features(path: impl AsRef<Path>) -> Result<Array3<f32>> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r, FEATURE_MAGIC, "feature")?;
    let [c, t, f] = read_dims::<3>(&mut r)?;
    let data = read_f32_payload(&mut r, c * t * f)?;
    Array3::from_shape_vec((c, t, f), data)
        .map_err(|e| Error::ShapeMismatch(format!("feature dump payload: {e}")))
}

/// Writes a bank's designed weights as an "SFBW" version-1 dump.
pub fn write_filter_weights(path: impl AsRef<Path>, bank: &FilterBank) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, WEIGHTS_MAGIC)?;
    let shape = bank.weights().shape();
    write_dims(&mut w, &[shape[0], shape[1], shape[2], 2])?;
    for v in bank.weights().iter() {
        w.write_all(&(v.re as f32).to_le_bytes())?;
        w.write_all(&(v.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an "SFBW" dump back as complex weights `[I, F, M]` (f32 precision).
pub fn read_filter_weights(path: impl AsRef<Path>) -> Result<Array3<Complex64>> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r, WEIGHTS_MAGIC, "weight")?;
    let [i, f, m, pair] = read_dims::<4>(&mut r)?;
    if pair != 2 {
        return Err(Error::InvalidArgument(format!(
            "weight dump trailing dimension must be 2 (re, im), got {pair}"
        )));
    }
    let data = read_f32_payload(&mut r, i * f * m * 2)?;
    let weights = Array3::from_shape_fn((i, f, m), |(ii, ff, mm)| {
        let base = ((ii * f + ff) * m + mm) * 2;
        Complex64::new(data[base] as f64, data[base + 1] as f64)
    });
    Ok(weights)
}

fn read_f32_payload(r: &mut impl Read, count: usize) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(Error::InvalidArgument(format!(
            "dump payload holds {} bytes, dims imply {}",
            bytes.len(),
            count * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Writes one feature channel as CSV for inspection: a header row
/// `frame,bin0,...`, then one row per frame.
pub fn export_feature_channel_csv(
    path: impl AsRef<Path>,
    feat: &FeatureTensor,
    channel: usize,
) -> Result<()> {
    if channel >= feat.num_feature_channels() {
        return Err(Error::InvalidArgument(format!(
            "channel {channel} out of range (tensor has {})",
            feat.num_feature_channels()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "frame")?;
    for b in 0..feat.num_bins() {
        write!(w, ",bin{b}")?;
    }
    writeln!(w)?;
    for k in 0..feat.num_frames() {
        write!(w, "{k}")?;
        for b in 0..feat.num_bins() {
            write!(w, ",{:.8e}", feat.data()[[channel, k, b]])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
