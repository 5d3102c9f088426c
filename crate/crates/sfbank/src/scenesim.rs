//! Desk-scale scene synthesis: a mono source, a list of image sources
//! (gain, delay, azimuth), and optional white noise mixed at a target SNR.
//!
//! Observations are built in the STFT domain under the far-field plane-wave
//! model: `X[m, k, f] = sum_l alpha_l * exp(-j*w_f*tau_l) * zeta_m(w_f,
//! theta_l) * S[k, f]`, where `S` is the source spectrogram. Each path is a
//! frequency-flat gain with a pure delay.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::UcaGeometry;
use crate::stft::{istft, stft, Spectrogram, StftConfig};
use crate::wav::write_wav_float32;
use crate::{Error, Result};

/// One propagation path of the image model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    gain: f64,
    delay_s: f64,
    azimuth: f64,
}

impl ImageSource {
    /// Gains may be negative (phase-inverting reflections); delays are
    /// bounded by 1 s, far beyond any desk-scale path.
    pub fn new(gain: f64, delay_s: f64, azimuth: f64) -> Result<Self> {
        if !gain.is_finite() || !azimuth.is_finite() {
            return Err(Error::InvalidArgument(
                "image source gain and azimuth must be finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&delay_s) {
            return Err(Error::InvalidArgument(format!(
                "image source delay must lie in [0, 1] s, got {delay_s}"
            )));
        }
        Ok(Self {
            gain,
            delay_s,
            azimuth,
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_s
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    None,
}

/// A source signal plus its propagation paths and noise condition.
#[derive(Debug, Clone)]
pub struct Scene {
    source: Vec<f64>,
    images: Vec<ImageSource>,
    noise_kind: NoiseKind,
    snr_db: f64,
    seed: u64,
}

impl Scene {
    pub fn new(
        source: Vec<f64>,
        images: Vec<ImageSource>,
        noise_kind: NoiseKind,
        snr_db: f64,
        seed: u64,
    ) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidArgument(
                "scene needs at least one image source (the direct path)".into(),
            ));
        }
        if !(-20.0..=60.0).contains(&snr_db) {
            return Err(Error::InvalidArgument(format!(
                "snr_db must lie in [-20, 60], got {snr_db}"
            )));
        }
        if !source.iter().all(|s| s.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            source,
            images,
            noise_kind,
            snr_db,
            seed,
        })
    }

    /// A scene with no additive noise.
    pub fn noiseless(source: Vec<f64>, images: Vec<ImageSource>) -> Result<Self> {
        Self::new(source, images, NoiseKind::None, 0.0, 0)
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn images(&self) -> &[ImageSource] {
        &self.images
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Synthesizes the noiseless multichannel observation of a scene as heard by
/// `geom`, shape `[M, T, F]`.
pub fn synthesize_desired(
    scene: &Scene,
    geom: &UcaGeometry,
    cfg: &StftConfig,
) -> Result<Spectrogram> {
    let mono = Array2::from_shape_vec((1, scene.source.len()), scene.source.clone())
        .expect("1 x n shape always fits");
    let src = stft(&mono, cfg)?;
    let (frames, bins) = (src.num_frames(), src.num_bins());
    let m = geom.num_mics();

    // per-(sensor, bin) transfer factor: sum over paths of
    // gain * delay phase * steering entry
    let mut factors = Array2::from_elem((m, bins), Complex64::new(0.0, 0.0));
    for img in &scene.images {
        for b in 0..bins {
            let f_hz = cfg.bin_freq_hz(b);
            let delay_phase =
                Complex64::from_polar(img.gain, -std::f64::consts::TAU * f_hz * img.delay_s);
            let d = geom.steering_vector(f_hz, img.azimuth);
            for (mi, zeta) in d.entries().iter().enumerate() {
                factors[[mi, b]] += delay_phase * zeta;
            }
        }
    }

    let mut data = Array3::zeros((m, frames, bins));
    for mi in 0..m {
        for k in 0..frames {
            for b in 0..bins {
                data[[mi, k, b]] = factors[[mi, b]] * src.data()[[0, k, b]];
            }
        }
    }
    Spectrogram::from_data(*cfg, data)
}

/// Adds white Gaussian noise, independently per channel, scaled so each
/// channel's SNR is exactly `snr_db`. Channels with zero desired energy
/// receive no noise; the whole spectrogram having zero energy is an error.
/// Deterministic: the same seed always yields the same noise.
pub fn mix_at_snr(desired: &Spectrogram, noise_seed: u64, snr_db: f64) -> Result<Spectrogram> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "snr_db must be finite, got {snr_db}"
        )));
    }
    let (channels, frames, bins) = (
        desired.num_channels(),
        desired.num_frames(),
        desired.num_bins(),
    );
    let total_energy: f64 = desired.data().iter().map(|v| v.norm_sqr()).sum();
    if total_energy == 0.0 {
        return Err(Error::ZeroEnergyDesired);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let snr_linear = 10f64.powf(snr_db / 10.0);
    let mut out = desired.data().clone();
    // draw order is channel -> frame -> bin, part of the determinism contract
    for ch in 0..channels {
        let desired_energy: f64 = (0..frames)
            .flat_map(|k| (0..bins).map(move |b| (k, b)))
            .map(|(k, b)| desired.data()[[ch, k, b]].norm_sqr())
            .sum();
        let mut noise = Array2::from_elem((frames, bins), Complex64::new(0.0, 0.0));
        let mut noise_energy = 0.0;
        for k in 0..frames {
            for b in 0..bins {
                let (re, im) = standard_normal_pair(&mut rng);
                let v = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                noise_energy += v.norm_sqr();
                noise[[k, b]] = v;
            }
        }
        if desired_energy == 0.0 || noise_energy == 0.0 {
            continue;
        }
        let gain = (desired_energy / (noise_energy * snr_linear)).sqrt();
        for k in 0..frames {
            for b in 0..bins {
                out[[ch, k, b]] += gain * noise[[k, b]];
            }
        }
    }
    Spectrogram::from_data(*desired.config(), out)
}

/// Synthesizes the scene and applies its noise condition.
pub fn observe_scene(scene: &Scene, geom: &UcaGeometry, cfg: &StftConfig) -> Result<Spectrogram> {
    let desired = synthesize_desired(scene, geom, cfg)?;
    match scene.noise_kind {
        NoiseKind::None => Ok(desired),
        NoiseKind::White => mix_at_snr(&desired, scene.seed, scene.snr_db),
    }
}

/// Channel-averaged SNR of `observed` against `desired`, in dB, treating the
/// difference as noise. Channels with zero desired energy are excluded.
pub fn realized_snr_db(desired: &Spectrogram, observed: &Spectrogram) -> Result<f64> {
    if desired.data().shape() != observed.data().shape() {
        return Err(Error::ShapeMismatch(format!(
            "desired {:?} vs observed {:?}",
            desired.data().shape(),
            observed.data().shape()
        )));
    }
    let channels = desired.num_channels();
    let mut acc = 0.0;
    let mut counted = 0usize;
    for ch in 0..channels {
        let mut e_des = 0.0;
        let mut e_noise = 0.0;
        for k in 0..desired.num_frames() {
            for b in 0..desired.num_bins() {
                let d = desired.data()[[ch, k, b]];
                let n = observed.data()[[ch, k, b]] - d;
                e_des += d.norm_sqr();
                e_noise += n.norm_sqr();
            }
        }
        if e_des > 0.0 && e_noise > 0.0 {
            acc += 10.0 * (e_des / e_noise).log10();
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::ZeroEnergyDesired);
    }
    Ok(acc / counted as f64)
}

/// Inverse-transforms a spectrogram and writes it as a 32-bit float WAV.
pub fn render_to_wav(spec: &Spectrogram, path: impl AsRef<std::path::Path>) -> Result<()> {
    let samples = istft(spec)?;
    write_wav_float32(path, &samples, spec.config().sample_rate_hz)
}

fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1]
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let radius = (-2.0 * (1.0 - u).ln()).sqrt();
    let angle = std::f64::consts::TAU * v;
    (radius * angle.cos(), radius * angle.sin())
}
