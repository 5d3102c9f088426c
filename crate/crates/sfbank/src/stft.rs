//! Multichannel STFT analysis and weighted overlap-add synthesis.
//!
//! Spectra are stored one-sided: `fft_size/2 + 1` bins per frame, with the
//! negative frequencies implied by Hermitian symmetry. Synthesis divides the
//! overlap-added frames by the accumulated squared window, which inverts the
//! analysis exactly wherever that envelope is positive.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Analysis/synthesis parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub sample_rate_hz: f64,
    pub win_len: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl Default for StftConfig {
    /// 25 ms window, 6.25 ms hop at 16 kHz, no zero padding.
    fn default() -> Self {
        Self {
            sample_rate_hz: 16_000.0,
            win_len: 400,
            hop: 100,
            fft_size: 400,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.sample_rate_hz.is_finite() || self.sample_rate_hz <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.win_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "win_len must be at least 2, got {}",
                self.win_len
            )));
        }
        if self.hop == 0 {
            return Err(Error::InvalidArgument("hop must be positive".into()));
        }
        if self.fft_size < self.win_len {
            return Err(Error::InvalidArgument(format!(
                "fft_size {} is smaller than win_len {}",
                self.fft_size, self.win_len
            )));
        }
        Ok(())
    }

    /// One-sided bin count `fft_size/2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frame count for a signal of `samples` samples:
    /// `1 + (samples - win_len) / hop`.
    pub fn num_frames(&self, samples: usize) -> Result<usize> {
        if samples < self.win_len {
            return Err(Error::TooShortSignal {
                len: samples,
                min: self.win_len,
            });
        }
        Ok(1 + (samples - self.win_len) / self.hop)
    }

    /// Center frequency of a one-sided bin in Hz.
    pub fn bin_freq_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate_hz / self.fft_size as f64
    }

    /// Sample span covered by `frames` frames. Inverse of [`num_frames`]
    /// for aligned lengths.
    ///
    /// [`num_frames`]: StftConfig::num_frames
    pub fn span_samples(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            self.win_len + (frames - 1) * self.hop
        }
    }
}

/// Symmetric Hamming window `0.54 - 0.46*cos(2*pi*i/(len-1))`.
pub fn hamming_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|i| 0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / denom).cos())
        .collect()
}

/// One-sided multichannel spectrogram, indexed `[channel, frame, bin]`.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    data: Array3<Complex64>,
    config: StftConfig,
}

impl Spectrogram {
    /// Wraps precomputed spectra. The bin axis must match
    /// `config.num_bins()`.
    pub fn from_data(config: StftConfig, data: Array3<Complex64>) -> Result<Self> {
        config.validate()?;
        if data.shape()[2] != config.num_bins() {
            return Err(Error::ShapeMismatch(format!(
                "spectrogram has {} bins, config expects {}",
                data.shape()[2],
                config.num_bins()
            )));
        }
        Ok(Self { data, config })
    }

    pub fn num_channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn num_frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn num_bins(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.data
    }
}

/// Forward STFT of channel-major samples `[channels, samples]`.
pub fn stft(signals: &Array2<f64>, config: &StftConfig) -> Result<Spectrogram> {
    config.validate()?;
    if !signals.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let channels = signals.shape()[0];
    let samples = signals.shape()[1];
    let frames = config.num_frames(samples)?;
    let bins = config.num_bins();
    let window = hamming_window(config.win_len);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(config.fft_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); config.fft_size];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let mut data = Array3::zeros((channels, frames, bins));
    for ch in 0..channels {
        for k in 0..frames {
            let start = k * config.hop;
            for i in 0..config.win_len {
                buf[i] = Complex64::new(signals[[ch, start + i]] * window[i], 0.0);
            }
            for slot in buf.iter_mut().skip(config.win_len) {
                *slot = Complex64::new(0.0, 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for b in 0..bins {
                data[[ch, k, b]] = buf[b];
            }
        }
    }
    Spectrogram::from_data(*config, data)
}

/// Inverse STFT by weighted overlap-add.
///
/// Output length is `win_len + (frames-1)*hop`; samples of the original
/// signal past the last full frame are not represented and cannot be
/// recovered. The imaginary parts of the DC and Nyquist bins are discarded,
/// so spectra that were produced by [`stft`] invert exactly.
pub fn istft(spec: &Spectrogram) -> Result<Array2<f64>> {
    let config = spec.config();
    config.validate()?;
    if config.hop > config.win_len {
        // gaps between frames: the envelope is zero on the skipped samples
        return Err(Error::NonCola);
    }
    let channels = spec.num_channels();
    let frames = spec.num_frames();
    if frames == 0 || channels == 0 {
        return Err(Error::ShapeMismatch(
            "cannot invert an empty spectrogram".into(),
        ));
    }
    let bins = spec.num_bins();
    let out_len = config.span_samples(frames);
    let window = hamming_window(config.win_len);

    let mut envelope = vec![0.0f64; out_len];
    for k in 0..frames {
        for i in 0..config.win_len {
            envelope[k * config.hop + i] += window[i] * window[i];
        }
    }
    if envelope.iter().any(|&e| e <= 1e-12) {
        return Err(Error::NonCola);
    }

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(config.fft_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); config.fft_size];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let nyquist = if config.fft_size.is_multiple_of(2) {
        Some(config.fft_size / 2)
    } else {
        None
    };
    let scale = 1.0 / config.fft_size as f64;

    let mut out = Array2::zeros((channels, out_len));
    for ch in 0..channels {
        let mut acc = vec![0.0f64; out_len];
        for k in 0..frames {
            for b in 0..bins {
                let mut v = spec.data()[[ch, k, b]];
                if b == 0 || Some(b) == nyquist {
                    v = Complex64::new(v.re, 0.0);
                }
                buf[b] = v;
                if b > 0 && Some(b) != nyquist {
                    buf[config.fft_size - b] = v.conj();
                }
            }
            ifft.process_with_scratch(&mut buf, &mut scratch);
            let start = k * config.hop;
            for i in 0..config.win_len {
                acc[start + i] += buf[i].re * scale * window[i];
            }
        }
        for (i, &a) in acc.iter().enumerate() {
            out[[ch, i]] = a / envelope[i];
        }
    }
    Ok(out)
}
