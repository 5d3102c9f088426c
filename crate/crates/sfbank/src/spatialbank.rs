//! The I-filter spatial bank: design per bin, apply to spectrograms, and
//! assemble the compressed real/imaginary feature tensor.
//!
//! Filter `i` is steered to `theta_s,i = 2*pi*i/I`. Because every filter
//! approximates the same ideal pattern regardless of the array geometry, the
//! resulting features are (nearly) geometry-invariant: two different arrays
//! observing the same scene produce nearly identical tensors.

use ndarray::{Array3, Zip};
use num_complex::Complex64;

use crate::beamdesign::{design_filter_with, DesignOptions, IdealPattern, SpatialFilter};
use crate::geometry::UcaGeometry;
use crate::stft::{stft, Spectrogram, StftConfig};
use crate::wav::read_wav;
use crate::{Error, Result};

/// Bank size used throughout the experiments.
pub const DEFAULT_NUM_FILTERS: usize = 9;

/// Magnitude compression exponent for feature assembly.
pub const DEFAULT_COMPRESSION_EXPONENT: f64 = 0.3;

/// Relative L2 tolerance under which feature tensors from two geometries
/// count as equivalent. Fixed from the worst pair over the 9-geometry grid
/// (M in {5,7,9}, r in {0.5,1,1.5} cm), which measures just under 0.09.
pub const DEFAULT_FEATURE_TOLERANCE: f64 = 0.1;

/// A set of `I` steered filters, one row of `M` weights per (filter, bin).
#[derive(Debug, Clone)]
pub struct FilterBank {
    weights: Array3<Complex64>, // [I, F, M]
    steer_azimuths: Vec<f64>,
    geom: UcaGeometry,
    pattern: IdealPattern,
    cfg: StftConfig,
}

impl FilterBank {
    pub fn num_filters(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn num_bins(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn num_mics(&self) -> usize {
        self.weights.shape()[2]
    }

    /// Steering azimuths `2*pi*i/I`, i = 0..I-1.
    pub fn steer_azimuths(&self) -> &[f64] {
        &self.steer_azimuths
    }

    pub fn weights(&self) -> &Array3<Complex64> {
        &self.weights
    }

    pub fn geometry(&self) -> &UcaGeometry {
        &self.geom
    }

    pub fn pattern(&self) -> &IdealPattern {
        &self.pattern
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    /// The single filter steered to `steer_azimuths()[i]` at bin `f`.
    pub fn filter(&self, i: usize, bin: usize) -> SpatialFilter {
        let weights = (0..self.num_mics())
            .map(|m| self.weights[[i, bin, m]])
            .collect();
        SpatialFilter::from_parts(weights, self.cfg.bin_freq_hz(bin), self.steer_azimuths[i])
    }
}

/// Designs the full bank with regularization enabled.
pub fn build_filterbank(
    geom: &UcaGeometry,
    pattern: &IdealPattern,
    num_filters: usize,
    cfg: &StftConfig,
) -> Result<FilterBank> {
    build_filterbank_with(geom, pattern, num_filters, cfg, DesignOptions::default())
}

/// Designs one filter per (steer direction, STFT bin).
pub fn build_filterbank_with(
    geom: &UcaGeometry,
    pattern: &IdealPattern,
    num_filters: usize,
    cfg: &StftConfig,
    opts: DesignOptions,
) -> Result<FilterBank> {
    if num_filters == 0 {
        return Err(Error::InvalidArgument(
            "filter bank needs at least one filter".into(),
        ));
    }
    cfg.validate()?;
    let steer_azimuths: Vec<f64> = (0..num_filters)
        .map(|i| std::f64::consts::TAU * i as f64 / num_filters as f64)
        .collect();
    let bins = cfg.num_bins();
    let m = geom.num_mics();

    let mut weights = Array3::zeros((num_filters, bins, m));
    for (i, &theta_s) in steer_azimuths.iter().enumerate() {
        for b in 0..bins {
            let filter = design_filter_with(geom, pattern, theta_s, cfg.bin_freq_hz(b), opts)?;
            for (mi, w) in filter.weights().iter().enumerate() {
                weights[[i, b, mi]] = *w;
            }
        }
    }
    Ok(FilterBank {
        weights,
        steer_azimuths,
        geom: geom.clone(),
        pattern: pattern.clone(),
        cfg: *cfg,
    })
}

/// Applies every filter to a multichannel spectrogram:
/// `Z[i, k, f] = sum_m conj(w[i, f, m]) * y[m, k, f]`.
pub fn apply_filterbank(bank: &FilterBank, spec: &Spectrogram) -> Result<Array3<Complex64>> {
    if spec.num_channels() != bank.num_mics() {
        return Err(Error::GeometryMismatch(format!(
            "spectrogram has {} channels, bank expects {}",
            spec.num_channels(),
            bank.num_mics()
        )));
    }
    if spec.num_bins() != bank.num_bins() || spec.config() != bank.config() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram config {:?} does not match bank config {:?}",
            spec.config(),
            bank.config()
        )));
    }
    let (i_count, bins, mics) = (bank.num_filters(), bank.num_bins(), bank.num_mics());
    let frames = spec.num_frames();
    let mut z = Array3::zeros((i_count, frames, bins));
    for i in 0..i_count {
        for k in 0..frames {
            for f in 0..bins {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..mics {
                    acc += bank.weights[[i, f, m]].conj() * spec.data()[[m, k, f]];
                }
                z[[i, k, f]] = acc;
            }
        }
    }
    Ok(z)
}

/// Magnitude-compresses one value: `|z|^c * exp(j*angle(z))`, with 0 -> 0.
pub fn compress_value(z: Complex64, exponent: f64) -> Complex64 {
    let mag = z.norm();
    if mag == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(mag.powf(exponent), z.arg())
    }
}

/// Applies [`compress_value`] elementwise. The exponent must lie in (0, 1].
pub fn compress(z: &Array3<Complex64>, exponent: f64) -> Result<Array3<Complex64>> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::InvalidExponent(exponent));
    }
    Ok(z.mapv(|v| compress_value(v, exponent)))
}

/// Real feature tensor `[2I, T, F]`: channel `2i` holds `Re(Z'_i)`, channel
/// `2i+1` holds `Im(Z'_i)`.
#[derive(Debug, Clone)]
pub struct FeatureTensor {
    data: Array3<f64>,
    compression_exponent: f64,
}

impl FeatureTensor {
    /// Wraps an already-assembled tensor. The channel axis must be even and
    /// every entry finite.
    pub fn from_parts(data: Array3<f64>, compression_exponent: f64) -> Result<Self> {
        if !data.shape()[0].is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "feature channel axis must be even (Re/Im pairs), got {}",
                data.shape()[0]
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            data,
            compression_exponent,
        })
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn compression_exponent(&self) -> f64 {
        self.compression_exponent
    }

    /// 2I
    pub fn num_feature_channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn num_frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn num_bins(&self) -> usize {
        self.data.shape()[2]
    }

    /// Rebuilds the complex `[I, T, F]` tensor the features were assembled
    /// from. Exact: assembly only reorders values.
    pub fn to_complex(&self) -> Array3<Complex64> {
        let (c2, t, f) = (
            self.data.shape()[0],
            self.data.shape()[1],
            self.data.shape()[2],
        );
        Array3::from_shape_fn((c2 / 2, t, f), |(i, k, b)| {
            Complex64::new(self.data[[2 * i, k, b]], self.data[[2 * i + 1, k, b]])
        })
    }
}

/// Interleaves real and imaginary parts of a compressed bank output into the
/// fixed `[2I, T, F]` layout.
pub fn assemble_features(
    z_compressed: &Array3<Complex64>,
    compression_exponent: f64,
) -> Result<FeatureTensor> {
    if !z_compressed
        .iter()
        .all(|v| v.re.is_finite() && v.im.is_finite())
    {
        return Err(Error::NonFiniteInput);
    }
    let (i_count, frames, bins) = (
        z_compressed.shape()[0],
        z_compressed.shape()[1],
        z_compressed.shape()[2],
    );
    let mut data = Array3::zeros((2 * i_count, frames, bins));
    Zip::indexed(z_compressed).for_each(|(i, k, f), v| {
        data[[2 * i, k, f]] = v.re;
        data[[2 * i + 1, k, f]] = v.im;
    });
    FeatureTensor::from_parts(data, compression_exponent)
}

/// apply -> compress -> assemble, for a spectrogram already in memory.
pub fn features_from_spectrogram(
    bank: &FilterBank,
    spec: &Spectrogram,
    compression_exponent: f64,
) -> Result<FeatureTensor> {
    let z = apply_filterbank(bank, spec)?;
    let z = compress(&z, compression_exponent)?;
    assemble_features(&z, compression_exponent)
}

/// Full front end: WAV -> STFT -> bank -> compression -> feature tensor.
///
/// The file's channel count must equal the bank geometry's microphone count
/// and its sample rate must match the STFT config.
pub fn extract_features(
    wav_path: impl AsRef<std::path::Path>,
    geom: &UcaGeometry,
    pattern: &IdealPattern,
    num_filters: usize,
    cfg: &StftConfig,
    compression_exponent: f64,
) -> Result<FeatureTensor> {
    let (samples, rate) = read_wav(&wav_path)?;
    if samples.shape()[0] != geom.num_mics() {
        return Err(Error::GeometryMismatch(format!(
            "wav has {} channels, geometry has {} microphones",
            samples.shape()[0],
            geom.num_mics()
        )));
    }
    if (rate - cfg.sample_rate_hz).abs() > 0.5 {
        return Err(Error::InvalidArgument(format!(
            "wav sample rate {rate} Hz does not match configured {} Hz",
            cfg.sample_rate_hz
        )));
    }
    let bank = build_filterbank(geom, pattern, num_filters, cfg)?;
    let spec = stft(&samples, cfg)?;
    features_from_spectrogram(&bank, &spec, compression_exponent)
}

/// Relative L2 distance `||a - b|| / max(||a||, ||b||)`; 0 when both tensors
/// are identically zero.
pub fn feature_rel_l2(a: &FeatureTensor, b: &FeatureTensor) -> Result<f64> {
    if a.data.shape() != b.data.shape() {
        return Err(Error::ShapeMismatch(format!(
            "feature shapes differ: {:?} vs {:?}",
            a.data.shape(),
            b.data.shape()
        )));
    }
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.data.iter().zip(b.data.iter()) {
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    let denom = na.max(nb).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(diff.sqrt() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn small_cfg() -> StftConfig {
        StftConfig {
            sample_rate_hz: 16_000.0,
            win_len: 64,
            hop: 16,
            fft_size: 64,
        }
    }

    fn geom5() -> UcaGeometry {
        UcaGeometry::new(5, 0.005, 343.0).unwrap()
    }

    #[test]
    fn bank_shape_and_steer_grid() {
        let bank = build_filterbank(
            &geom5(),
            &IdealPattern::supercardioid(),
            9,
            &StftConfig::default(),
        )
        .unwrap();
        assert_eq!(bank.weights().shape(), &[9, 201, 5]);
        for (i, &theta) in bank.steer_azimuths().iter().enumerate() {
            assert!((theta - TAU * i as f64 / 9.0).abs() < 1e-15);
        }
        // DC bin uses the averaging fallback for every steer direction
        for i in 0..9 {
            for m in 0..5 {
                assert_eq!(bank.weights()[[i, 0, m]], Complex64::new(0.2, 0.0));
            }
        }
    }

    #[test]
    fn bank_rows_match_single_filter_design() {
        let geom = geom5();
        let pattern = IdealPattern::supercardioid();
        let cfg = small_cfg();
        let bank = build_filterbank(&geom, &pattern, 4, &cfg).unwrap();
        let bin = 10;
        let single = crate::beamdesign::design_filter(
            &geom,
            &pattern,
            bank.steer_azimuths()[2],
            cfg.bin_freq_hz(bin),
        )
        .unwrap();
        let row = bank.filter(2, bin);
        assert_eq!(row.weights(), single.weights());
        assert_eq!(row.freq_hz(), single.freq_hz());
    }

    #[test]
    fn single_filter_bank_is_degenerate_but_valid() {
        let bank =
            build_filterbank(&geom5(), &IdealPattern::omnidirectional(), 1, &small_cfg()).unwrap();
        assert_eq!(bank.num_filters(), 1);
        assert_eq!(bank.steer_azimuths(), &[0.0]);
    }

    #[test]
    fn apply_rejects_mismatched_inputs() {
        let cfg = small_cfg();
        let bank = build_filterbank(&geom5(), &IdealPattern::supercardioid(), 3, &cfg).unwrap();
        let wrong_ch =
            Spectrogram::from_data(cfg, Array3::zeros((4, 2, cfg.num_bins()))).unwrap();
        assert!(matches!(
            apply_filterbank(&bank, &wrong_ch),
            Err(Error::GeometryMismatch(_))
        ));
        let other_cfg = StftConfig {
            hop: 32,
            ..small_cfg()
        };
        let wrong_cfg =
            Spectrogram::from_data(other_cfg, Array3::zeros((5, 2, other_cfg.num_bins())))
                .unwrap();
        assert!(matches!(
            apply_filterbank(&bank, &wrong_cfg),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn zero_spectrogram_maps_to_zero_output() {
        let cfg = small_cfg();
        let bank = build_filterbank(&geom5(), &IdealPattern::supercardioid(), 3, &cfg).unwrap();
        let spec = Spectrogram::from_data(cfg, Array3::zeros((5, 4, cfg.num_bins()))).unwrap();
        let z = apply_filterbank(&bank, &spec).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn plane_wave_from_steer_direction_passes_through() {
        let geom = geom5();
        let cfg = StftConfig::default();
        let bank = build_filterbank(&geom, &IdealPattern::supercardioid(), 9, &cfg).unwrap();
        // single plane wave from filter 2's steer direction, amplitude 1 at
        // one bin
        let i_probe = 2;
        let theta = bank.steer_azimuths()[i_probe];
        let bin = 100; // 4 kHz
        let d = geom.steering_vector(cfg.bin_freq_hz(bin), theta);
        let mut data = Array3::zeros((5, 1, cfg.num_bins()));
        for m in 0..5 {
            data[[m, 0, bin]] = d.entries()[m];
        }
        let spec = Spectrogram::from_data(cfg, data).unwrap();
        let z = apply_filterbank(&bank, &spec).unwrap();
        let resp = z[[i_probe, 0, bin]];
        assert!(
            (resp - Complex64::new(1.0, 0.0)).norm() < 0.05,
            "on-steer response {resp}"
        );
    }

    #[test]
    fn conjugating_weights_and_observations_conjugates_z() {
        let geom = geom5();
        let cfg = small_cfg();
        let bank = build_filterbank(&geom, &IdealPattern::supercardioid(), 3, &cfg).unwrap();
        let data = Array3::from_shape_fn((5, 2, cfg.num_bins()), |(m, k, f)| {
            Complex64::new((m + k) as f64 * 0.1, f as f64 * 0.01 - 0.2)
        });
        let spec = Spectrogram::from_data(cfg, data.clone()).unwrap();
        let z = apply_filterbank(&bank, &spec).unwrap();

        let mut conj_bank = bank.clone();
        conj_bank.weights = bank.weights.mapv(|w| w.conj());
        let conj_spec = Spectrogram::from_data(cfg, data.mapv(|v| v.conj())).unwrap();
        let z_conj = apply_filterbank(&conj_bank, &conj_spec).unwrap();
        for (a, b) in z.iter().zip(z_conj.iter()) {
            assert!((a.conj() - b).norm() < 1e-14);
        }
    }

    #[test]
    fn compression_law_spot_values() {
        // unit magnitude is a fixed point
        let z = Complex64::from_polar(1.0, 2.4);
        assert!((compress_value(z, 0.3) - z).norm() < 1e-15);
        // 8^0.3 = 1.8661, phase untouched
        let z = Complex64::from_polar(8.0, -1.1);
        let c = compress_value(z, 0.3);
        assert!((c.norm() - 1.8660659830736148).abs() < 1e-12);
        assert!((c.arg() - (-1.1)).abs() < 1e-12);
        // zero maps to zero
        assert_eq!(
            compress_value(Complex64::new(0.0, 0.0), 0.3),
            Complex64::new(0.0, 0.0)
        );
        // c = 1 is the identity
        let z = Complex64::new(-3.0, 0.4);
        assert!((compress_value(z, 1.0) - z).norm() < 1e-12);
    }

    #[test]
    fn compress_validates_exponent() {
        let z = Array3::zeros((1, 1, 1));
        assert!(matches!(compress(&z, 0.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(compress(&z, 1.2), Err(Error::InvalidExponent(_))));
        assert!(matches!(compress(&z, -0.3), Err(Error::InvalidExponent(_))));
        assert!(compress(&z, 1.0).is_ok());
        assert!(compress(&z, 0.3).is_ok());
    }

    #[test]
    fn compression_is_invertible_on_magnitudes() {
        for &mag in &[1e-6, 1e-3, 0.5, 1.0, 7.3, 1e3] {
            let z = Complex64::from_polar(mag, 0.7);
            let back = compress_value(compress_value(z, 0.3), 1.0 / 0.3);
            assert!(
                (back.norm() - mag).abs() <= 1e-9 * mag,
                "mag {mag}: {}",
                back.norm()
            );
        }
    }

    #[test]
    fn assemble_layout_and_round_trip() {
        let mut z = Array3::zeros((1, 1, 1));
        z[[0, 0, 0]] = Complex64::new(1.0, 2.0);
        let feat = assemble_features(&z, 0.3).unwrap();
        assert_eq!(feat.data().shape(), &[2, 1, 1]);
        assert_eq!(feat.data()[[0, 0, 0]], 1.0);
        assert_eq!(feat.data()[[1, 0, 0]], 2.0);
        assert_eq!(feat.compression_exponent(), 0.3);

        let z = Array3::from_shape_fn((3, 4, 5), |(i, k, f)| {
            Complex64::new(i as f64 - 1.0, (k * f) as f64 * 0.3)
        });
        let feat = assemble_features(&z, 0.3).unwrap();
        assert_eq!(feat.to_complex(), z);
    }

    #[test]
    fn purely_real_input_zeroes_odd_channels() {
        let z = Array3::from_shape_fn((2, 3, 4), |(i, k, f)| {
            Complex64::new((i + k + f) as f64, 0.0)
        });
        let feat = assemble_features(&z, 0.3).unwrap();
        for k in 0..3 {
            for f in 0..4 {
                assert_eq!(feat.data()[[1, k, f]], 0.0);
                assert_eq!(feat.data()[[3, k, f]], 0.0);
            }
        }
    }

    #[test]
    fn assemble_rejects_non_finite() {
        let mut z = Array3::zeros((1, 1, 2));
        z[[0, 0, 1]] = Complex64::new(f64::INFINITY, 0.0);
        assert!(matches!(
            assemble_features(&z, 0.3),
            Err(Error::NonFiniteInput)
        ));
    }

    #[test]
    fn doubling_amplitude_scales_magnitudes_by_two_to_the_c() {
        let geom = geom5();
        let cfg = small_cfg();
        let bank = build_filterbank(&geom, &IdealPattern::supercardioid(), 3, &cfg).unwrap();
        let data = Array3::from_shape_fn((5, 2, cfg.num_bins()), |(m, k, f)| {
            Complex64::new(0.1 * (m as f64 + 1.0), 0.05 * (k + f) as f64)
        });
        let spec = Spectrogram::from_data(cfg, data.clone()).unwrap();
        let doubled = Spectrogram::from_data(cfg, data.mapv(|v| 2.0 * v)).unwrap();
        let f1 = features_from_spectrogram(&bank, &spec, 0.3).unwrap();
        let f2 = features_from_spectrogram(&bank, &doubled, 0.3).unwrap();
        let scale = 2f64.powf(0.3);
        let c1 = f1.to_complex();
        let c2 = f2.to_complex();
        for (a, b) in c1.iter().zip(c2.iter()) {
            assert!((b.norm() - scale * a.norm()).abs() < 1e-12 * (1.0 + a.norm()));
            if a.norm() > 1e-12 {
                let dphi = (b.arg() - a.arg()).rem_euclid(TAU);
                assert!(!(1e-9..=TAU - 1e-9).contains(&dphi));
            }
        }
    }

    #[test]
    fn silence_gives_zero_features() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("silence.wav");
        let samples = ndarray::Array2::zeros((5, 1600));
        crate::wav::write_wav_float32(&path, &samples, 16_000.0).unwrap();
        let feat = extract_features(
            &path,
            &geom5(),
            &IdealPattern::supercardioid(),
            9,
            &StftConfig::default(),
            0.3,
        )
        .unwrap();
        assert_eq!(feat.data().shape(), &[18, 13, 201]);
        assert!(feat.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn extract_rejects_wrong_channel_count_and_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("four.wav");
        let samples = ndarray::Array2::zeros((4, 800));
        crate::wav::write_wav_float32(&path, &samples, 16_000.0).unwrap();
        let err = extract_features(
            &path,
            &geom5(),
            &IdealPattern::supercardioid(),
            9,
            &StftConfig::default(),
            0.3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::GeometryMismatch(_)), "{err}");

        let path = dir.path().join("slow.wav");
        let samples = ndarray::Array2::zeros((5, 800));
        crate::wav::write_wav_float32(&path, &samples, 8_000.0).unwrap();
        let err = extract_features(
            &path,
            &geom5(),
            &IdealPattern::supercardioid(),
            9,
            &StftConfig::default(),
            0.3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
    }

    #[test]
    fn rel_l2_basics() {
        let a = FeatureTensor::from_parts(Array3::from_elem((2, 1, 3), 1.0), 0.3).unwrap();
        let b = FeatureTensor::from_parts(Array3::from_elem((2, 1, 3), -1.0), 0.3).unwrap();
        assert_eq!(feature_rel_l2(&a, &a).unwrap(), 0.0);
        assert!((feature_rel_l2(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        let zero = FeatureTensor::from_parts(Array3::zeros((2, 1, 3)), 0.3).unwrap();
        assert_eq!(feature_rel_l2(&zero, &zero).unwrap(), 0.0);
        let short = FeatureTensor::from_parts(Array3::zeros((2, 1, 2)), 0.3).unwrap();
        assert!(feature_rel_l2(&a, &short).is_err());
    }
}
