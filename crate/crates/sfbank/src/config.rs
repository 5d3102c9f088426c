//! JSON run configuration: array geometry, STFT parameters, bank settings,
//! and an optional scene. Field names carry units (radius_m, snr_db,
//! freq_hz) and unknown fields are rejected, so unit mistakes and typos fail
//! loudly at load time instead of producing plausible garbage.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamdesign::IdealPattern;
use crate::geometry::{UcaGeometry, DEFAULT_SOUND_SPEED};
use crate::scenesim::{ImageSource, NoiseKind, Scene};
use crate::spatialbank::{DEFAULT_COMPRESSION_EXPONENT, DEFAULT_NUM_FILTERS};
use crate::stft::StftConfig;
use crate::wav::read_wav;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub stft: StftSection,
    #[serde(default)]
    pub bank: BankConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}


impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot open config {}: {e}", path.display()))
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| {
            Error::InvalidArgument(format!("bad config {}: {e}", path.display()))
        })
    }

    /// Checks every module precondition and referenced file before any
    /// command does work, so failures cannot leave partial outputs.
    pub fn validate(&self) -> Result<()> {
        let geom = self.array.build()?;
        self.stft.build()?;
        let pattern = self.bank.build_pattern()?;
        if geom.num_mics() < 2 * pattern.order() + 1 {
            return Err(Error::InvalidArgument(format!(
                "M >= 2N+1 required: M={} cannot resolve pattern order N={}",
                geom.num_mics(),
                pattern.order()
            )));
        }
        if self.bank.num_filters == 0 {
            return Err(Error::InvalidArgument(
                "bank.num_filters must be at least 1".into(),
            ));
        }
        let c = self.bank.compression_exponent;
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidExponent(c));
        }
        if let Some(scene) = &self.scene {
            scene.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(default = "default_num_mics")]
    pub num_mics: usize,
    #[serde(default = "default_radius_m")]
    pub radius_m: f64,
    #[serde(default = "default_sound_speed")]
    pub sound_speed_m_s: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            num_mics: default_num_mics(),
            radius_m: default_radius_m(),
            sound_speed_m_s: default_sound_speed(),
        }
    }
}

impl ArrayConfig {
    pub fn build(&self) -> Result<UcaGeometry> {
        UcaGeometry::new(self.num_mics, self.radius_m, self.sound_speed_m_s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftSection {
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_win_len")]
    pub win_len: usize,
    #[serde(default = "default_hop")]
    pub hop: usize,
    #[serde(default = "default_fft_size")]
    pub fft_size: usize,
}

impl Default for StftSection {
    fn default() -> Self {
        Self {
            sample_rate_hz: default_sample_rate(),
            win_len: default_win_len(),
            hop: default_hop(),
            fft_size: default_fft_size(),
        }
    }
}

impl StftSection {
    pub fn build(&self) -> Result<StftConfig> {
        let cfg = StftConfig {
            sample_rate_hz: self.sample_rate_hz,
            win_len: self.win_len,
            hop: self.hop,
            fft_size: self.fft_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankConfig {
    #[serde(default = "default_pattern")]
    pub pattern: PatternConfig,
    #[serde(default = "default_num_filters")]
    pub num_filters: usize,
    #[serde(default = "default_compression")]
    pub compression_exponent: f64,
    #[serde(default = "default_regularize")]
    pub regularize: bool,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            pattern: default_pattern(),
            num_filters: default_num_filters(),
            compression_exponent: default_compression(),
            regularize: default_regularize(),
        }
    }
}

impl BankConfig {
    pub fn build_pattern(&self) -> Result<IdealPattern> {
        match &self.pattern {
            PatternConfig::Named(name) => IdealPattern::by_name(name),
            PatternConfig::Explicit {
                order,
                coefficients,
            } => IdealPattern::new(*order, coefficients.clone()),
        }
    }
}

/// Either a preset name ("supercardioid2", "omni") or explicit series
/// coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternConfig {
    Named(String),
    Explicit {
        order: usize,
        coefficients: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub source_wav: PathBuf,
    pub images: Vec<ImageConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.source_wav.exists() {
            return Err(Error::InvalidArgument(format!(
                "scene source wav not found: {}",
                self.source_wav.display()
            )));
        }
        if self.images.is_empty() {
            return Err(Error::InvalidArgument(
                "scene needs at least one image source".into(),
            ));
        }
        for img in &self.images {
            img.build()?;
        }
        if let Some(noise) = &self.noise {
            let kind = noise.kind()?;
            if kind == NoiseKind::White && noise.snr_db.is_none() {
                return Err(Error::InvalidArgument(
                    "noise.snr_db is required when noise.kind is \"white\"".into(),
                ));
            }
            if let Some(snr) = noise.snr_db {
                if !(-20.0..=60.0).contains(&snr) {
                    return Err(Error::InvalidArgument(format!(
                        "noise.snr_db must lie in [-20, 60], got {snr}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reads the source WAV (mono required) and assembles the scene. The
    /// file's sample rate must match the STFT configuration.
    pub fn build(&self, cfg: &StftConfig) -> Result<Scene> {
        self.validate()?;
        let (samples, rate) = read_wav(&self.source_wav)?;
        if samples.shape()[0] != 1 {
            return Err(Error::InvalidArgument(format!(
                "scene source must be mono, {} has {} channels",
                self.source_wav.display(),
                samples.shape()[0]
            )));
        }
        if (rate - cfg.sample_rate_hz).abs() > 0.5 {
            return Err(Error::InvalidArgument(format!(
                "scene source rate {rate} Hz does not match configured {} Hz",
                cfg.sample_rate_hz
            )));
        }
        let source: Vec<f64> = samples.row(0).to_vec();
        let images: Vec<ImageSource> = self
            .images
            .iter()
            .map(|i| i.build())
            .collect::<Result<_>>()?;
        match &self.noise {
            None => Scene::noiseless(source, images),
            Some(noise) => Scene::new(
                source,
                images,
                noise.kind()?,
                noise.snr_db.unwrap_or(0.0),
                noise.seed,
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageConfig {
    pub gain: f64,
    pub delay_s: f64,
    pub azimuth_deg: f64,
}

impl ImageConfig {
    pub fn build(&self) -> Result<ImageSource> {
        ImageSource::new(self.gain, self.delay_s, self.azimuth_deg.to_radians())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: String,
    /// Required for `"white"`; ignored (and may be omitted) for `"none"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseConfig {
    pub fn kind(&self) -> Result<NoiseKind> {
        match self.kind.as_str() {
            "white" => Ok(NoiseKind::White),
            "none" => Ok(NoiseKind::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise kind '{other}' (expected \"white\" or \"none\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

/// Parses a geometry list of the form `"5:0.005,9:0.015"`
/// (num_mics:radius_m, comma separated).
pub fn parse_geom_spec(spec: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let (m, r) = part.split_once(':').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "bad geometry '{part}', expected num_mics:radius_m (e.g. 5:0.005)"
            ))
        })?;
        let m: usize = m.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("bad microphone count in geometry '{part}'"))
        })?;
        let r: f64 = r.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("bad radius in geometry '{part}'"))
        })?;
        out.push((m, r));
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty geometry list".into()));
    }
    Ok(out)
}

fn default_num_mics() -> usize {
    5
}
fn default_radius_m() -> f64 {
    0.005
}
fn default_sound_speed() -> f64 {
    DEFAULT_SOUND_SPEED
}
fn default_sample_rate() -> f64 {
    16_000.0
}
fn default_win_len() -> usize {
    400
}
fn default_hop() -> usize {
    100
}
fn default_fft_size() -> usize {
    400
}
fn default_pattern() -> PatternConfig {
    PatternConfig::Named("supercardioid2".into())
}
fn default_num_filters() -> usize {
    DEFAULT_NUM_FILTERS
}
fn default_compression() -> f64 {
    DEFAULT_COMPRESSION_EXPONENT
}
fn default_regularize() -> bool {
    true
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
