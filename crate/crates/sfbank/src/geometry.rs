//! Uniform circular array geometry and far-field steering vectors.
//!
//! Sensor `m` (1-based) of an `M`-element UCA sits at azimuth
//! `psi_m = 2*pi*(m-1)/M` on a circle of radius `r`. A far-field plane wave
//! from azimuth `theta` reaches it with phase delay
//! `exp(j * wbar * cos(theta - psi_m))` relative to the array center, where
//! `wbar = omega * r / c` is the normalized frequency.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::{Error, Result};

/// Speed of sound in air, m/s.
pub const DEFAULT_SOUND_SPEED: f64 = 343.0;

/// A uniform circular microphone array in the horizontal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct UcaGeometry {
    num_mics: usize,
    radius_m: f64,
    sensor_azimuths: Vec<f64>,
    sound_speed: f64,
}

impl UcaGeometry {
    /// Builds an `M`-sensor UCA of the given radius, first sensor at azimuth 0.
    pub fn new(num_mics: usize, radius_m: f64, sound_speed: f64) -> Result<Self> {
        if num_mics < 1 {
            return Err(Error::InvalidArgument(format!(
                "num_mics must be >= 1, got {num_mics}"
            )));
        }
        if radius_m.is_nan() || radius_m < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "radius_m must be >= 0, got {radius_m}"
            )));
        }
        if sound_speed.is_nan() || sound_speed <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sound_speed must be > 0, got {sound_speed}"
            )));
        }
        let sensor_azimuths = (0..num_mics)
            .map(|m| TAU * m as f64 / num_mics as f64)
            .collect();
        Ok(Self {
            num_mics,
            radius_m,
            sensor_azimuths,
            sound_speed,
        })
    }

    /// Same as [`UcaGeometry::new`] with the 343 m/s default sound speed.
    pub fn with_default_sound_speed(num_mics: usize, radius_m: f64) -> Result<Self> {
        Self::new(num_mics, radius_m, DEFAULT_SOUND_SPEED)
    }

    pub fn num_mics(&self) -> usize {
        self.num_mics
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    /// Sensor azimuths `psi_m` in radians, in sensor order.
    pub fn sensor_azimuths(&self) -> &[f64] {
        &self.sensor_azimuths
    }

    /// Normalized frequency `wbar = omega * r / c = 2*pi*f*r/c`.
    pub fn normalized_freq(&self, freq_hz: f64) -> f64 {
        debug_assert!(freq_hz >= 0.0, "frequency must be nonnegative");
        TAU * freq_hz * self.radius_m / self.sound_speed
    }

    /// Far-field steering vector `d(omega, theta)` at the given frequency.
    pub fn steering_vector(&self, freq_hz: f64, azimuth: f64) -> SteeringVector {
        let wbar = self.normalized_freq(freq_hz);
        let entries = self
            .sensor_azimuths
            .iter()
            .map(|&psi| Complex64::from_polar(1.0, wbar * (azimuth - psi).cos()))
            .collect();
        SteeringVector {
            entries,
            frequency_rad: TAU * freq_hz,
            azimuth,
        }
    }
}

/// Per-sensor phase delays of a plane wave: unit-magnitude complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: Vec<Complex64>,
    frequency_rad: f64,
    azimuth: f64,
}

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Angular frequency omega in rad/s.
    pub fn frequency_rad(&self) -> f64 {
        self.frequency_rad
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
