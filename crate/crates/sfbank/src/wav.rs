//! RIFF WAV ingestion and rendering. In-memory audio is channel-major f64,
//! `[channels, samples]`; integer PCM is normalized to [-1, 1) on read.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use ndarray::Array2;

use crate::{Error, Result};

/// Reads a multichannel WAV file. Supports 16-bit integer and 32-bit float
/// encodings; returns the samples and the file's sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Array2<f64>, f64)> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::InvalidArgument("wav file has zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::InvalidArgument(format!(
                "unsupported wav encoding: {bits}-bit {fmt:?} (expected 16-bit int or 32-bit float)"
            )))
        }
    };

    let frames = interleaved.len() / channels;
    let samples = Array2::from_shape_fn((channels, frames), |(ch, i)| {
        interleaved[i * channels + ch]
    });
    Ok((samples, spec.sample_rate as f64))
}

/// Writes 16-bit integer PCM, clamping to full scale.
pub fn write_wav_int16(
    path: impl AsRef<Path>,
    samples: &Array2<f64>,
    sample_rate_hz: f64,
) -> Result<()> {
    let spec = WavSpec {
        channels: channel_count(samples)?,
        sample_rate: sample_rate_hz.round() as u32,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for i in 0..samples.shape()[1] {
        for ch in 0..samples.shape()[0] {
            let v = (samples[[ch, i]] * 32767.0).round().clamp(-32768.0, 32767.0);
            writer.write_sample(v as i16)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

/// Writes 32-bit float samples verbatim (no clamping).
pub fn write_wav_float32(
    path: impl AsRef<Path>,
    samples: &Array2<f64>,
    sample_rate_hz: f64,
) -> Result<()> {
    let spec = WavSpec {
        channels: channel_count(samples)?,
        sample_rate: sample_rate_hz.round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for i in 0..samples.shape()[1] {
        for ch in 0..samples.shape()[0] {
            writer.write_sample(samples[[ch, i]] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

fn channel_count(samples: &Array2<f64>) -> Result<u16> {
    let ch = samples.shape()[0];
    if ch == 0 || samples.shape()[1] == 0 {
        return Err(Error::InvalidArgument(
            "cannot write an empty sample array".into(),
        ));
    }
    u16::try_from(ch)
        .map_err(|_| Error::InvalidArgument(format!("too many channels for wav: {ch}")))
}
