//! Ideal beampatterns and least-squares beamforming filter design for UCAs.
//!
//! An order-`N` ideal pattern is the circular harmonic series
//! `B(b_N, theta) = sum_{n=-N..N} b_{N,n} exp(j*n*(theta - theta_s))`. The
//! design step samples the phase modes on the `M` sensors and divides out the
//! per-order Bessel response, yielding per-frequency weights
//!
//! `h(omega) = (1/M) * Psi^H * J^*(wbar) * Upsilon^*(theta_s) * b_N`
//!
//! with `Psi[n][m] = exp(j*n*psi_m)`, `J = diag(1/(j^n J_n(wbar)))`, and
//! `Upsilon = diag(exp(-j*n*theta_s))`. The realized response `h^H d` matches
//! the ideal pattern up to spatial-aliasing leakage of orders `|n| > N`,
//! which is what makes the response nearly independent of `M` and `r`.

pub mod bessel;

pub use bessel::bessel_jn;

use num_complex::Complex64;

use crate::geometry::UcaGeometry;
use crate::{Error, Result};

/// Smallest Bessel magnitude the regularized design will divide by.
pub const BESSEL_FLOOR: f64 = 1e-4;

/// Series coefficients of an ideal (target) beampattern.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPattern {
    order: usize,
    coefficients: Vec<f64>,
}

impl IdealPattern {
    /// Builds a pattern of order `N` from the `2N+1` coefficients
    /// `b_{N,-N} .. b_{N,N}`.
    pub fn new(order: usize, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != 2 * order + 1 {
            return Err(Error::InvalidArgument(format!(
                "order {} needs {} coefficients, got {}",
                order,
                2 * order + 1,
                coefficients.len()
            )));
        }
        if !coefficients.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(
                "pattern coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            order,
            coefficients,
        })
    }

    /// Order-0 all-pass pattern (plain average).
    pub fn omnidirectional() -> Self {
        Self {
            order: 0,
            coefficients: vec![1.0],
        }
    }

    /// The second-order supercardioid used throughout: a single forward
    /// mainlobe with a deep rear null region.
    pub fn supercardioid() -> Self {
        Self {
            order: 2,
            coefficients: vec![0.1035, 0.242, 0.309, 0.242, 0.1035],
        }
    }

    /// Looks up a preset by its config name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "supercardioid2" => Ok(Self::supercardioid()),
            "omni" => Ok(Self::omnidirectional()),
            other => Err(Error::InvalidArgument(format!(
                "unknown pattern preset '{other}' (expected \"supercardioid2\" or \"omni\")"
            ))),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients in order `b_{N,-N} .. b_{N,N}`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient `b_{N,n}` for a signed harmonic index.
    pub fn coefficient(&self, n: i32) -> f64 {
        self.coefficients[(n + self.order as i32) as usize]
    }

    /// True when `b_n == b_{-n}` for all n.
    pub fn is_symmetric(&self) -> bool {
        let c = &self.coefficients;
        (0..c.len() / 2).all(|i| c[i] == c[c.len() - 1 - i])
    }

    /// Evaluates the ideal beampattern
    /// `sum_n b_{N,n} exp(j*n*(azimuth - steer_azimuth))`.
    pub fn evaluate(&self, azimuth: f64, steer_azimuth: f64) -> Complex64 {
        let delta = azimuth - steer_azimuth;
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &b) in self.coefficients.iter().enumerate() {
            let n = idx as f64 - self.order as f64;
            acc += b * Complex64::from_polar(1.0, n * delta);
        }
        acc
    }
}

/// Evaluates the ideal beampattern of `pattern` at `azimuth` when steered to
/// `steer_azimuth`. Free-function form of [`IdealPattern::evaluate`].
pub fn ideal_beampattern(pattern: &IdealPattern, azimuth: f64, steer_azimuth: f64) -> Complex64 {
    pattern.evaluate(azimuth, steer_azimuth)
}

/// One designed beamforming filter: `M` complex weights for a single
/// frequency and steering direction.
#[derive(Debug, Clone)]
pub struct SpatialFilter {
    weights: Vec<Complex64>,
    freq_hz: f64,
    steer_azimuth: f64,
}

impl SpatialFilter {
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn freq_hz(&self) -> f64 {
        self.freq_hz
    }

    pub fn steer_azimuth(&self) -> f64 {
        self.steer_azimuth
    }

    pub fn num_mics(&self) -> usize {
        self.weights.len()
    }

    pub(crate) fn from_parts(
        weights: Vec<Complex64>,
        freq_hz: f64,
        steer_azimuth: f64,
    ) -> Self {
        Self {
            weights,
            freq_hz,
            steer_azimuth,
        }
    }
}

/// Knobs for [`design_filter_with`].
#[derive(Debug, Clone, Copy)]
pub struct DesignOptions {
    /// Floor `|J_n(wbar)|` at [`BESSEL_FLOOR`] before inverting. Keeps the
    /// weights finite near Bessel zeros and at low frequencies; bins with
    /// `|J_n| >= BESSEL_FLOOR` are untouched.
    pub regularize: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { regularize: true }
    }
}

/// Designs the steered filter with regularization enabled.
pub fn design_filter(
    geom: &UcaGeometry,
    pattern: &IdealPattern,
    steer_azimuth: f64,
    freq_hz: f64,
) -> Result<SpatialFilter> {
    design_filter_with(geom, pattern, steer_azimuth, freq_hz, DesignOptions::default())
}

/// Designs the least-squares filter `h(omega)` for one frequency bin.
///
/// At `freq_hz == 0` every `J_n(0)` with `n != 0` vanishes and the formula is
/// undefined; the uniform averaging filter `(1/M)*[1,..,1]` is returned
/// instead, matching the zero-frequency limit of the order-0 component.
pub fn design_filter_with(
    geom: &UcaGeometry,
    pattern: &IdealPattern,
    steer_azimuth: f64,
    freq_hz: f64,
    opts: DesignOptions,
) -> Result<SpatialFilter> {
    let m = geom.num_mics();
    let order = pattern.order();
    if m < 2 * order + 1 {
        return Err(Error::InvalidArgument(format!(
            "M >= 2N+1 required to resolve all phase modes: M={m}, N={order} needs M >= {}",
            2 * order + 1
        )));
    }
    if freq_hz.is_nan() || freq_hz < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "freq_hz must be >= 0, got {freq_hz}"
        )));
    }
    if freq_hz == 0.0 {
        let w = Complex64::new(1.0 / m as f64, 0.0);
        return Ok(SpatialFilter::from_parts(
            vec![w; m],
            freq_hz,
            steer_azimuth,
        ));
    }

    let wbar = geom.normalized_freq(freq_hz);
    // per-order factor conj(1/(j^n J_n)) * exp(j*n*theta_s) * b_n
    let mut factors = Vec::with_capacity(2 * order + 1);
    for n in -(order as i32)..=(order as i32) {
        let jn = bessel_jn(n, wbar)?;
        let jn = if opts.regularize {
            if jn.abs() < BESSEL_FLOOR {
                if jn < 0.0 {
                    -BESSEL_FLOOR
                } else {
                    BESSEL_FLOOR
                }
            } else {
                jn
            }
        } else {
            if jn.abs() <= BESSEL_FLOOR {
                return Err(Error::DegenerateFrequency {
                    order: n,
                    arg: wbar,
                    floor: BESSEL_FLOOR,
                });
            }
            jn
        };
        let diag = (i_pow(n) * jn).finv(); // 1/(j^n J_n)
        let factor =
            diag.conj() * Complex64::from_polar(1.0, n as f64 * steer_azimuth) * pattern.coefficient(n);
        factors.push(factor);
    }

    let inv_m = 1.0 / m as f64;
    let weights: Vec<Complex64> = geom
        .sensor_azimuths()
        .iter()
        .map(|&psi| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, factor) in factors.iter().enumerate() {
                let n = idx as f64 - order as f64;
                acc += Complex64::from_polar(1.0, -n * psi) * factor;
            }
            acc * inv_m
        })
        .collect();

    debug_assert!(weights.iter().all(|w| w.re.is_finite() && w.im.is_finite()));
    Ok(SpatialFilter::from_parts(weights, freq_hz, steer_azimuth))
}

/// `j^n` for signed n, computed exactly from the period-4 cycle.
fn i_pow(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn geom5() -> UcaGeometry {
        UcaGeometry::new(5, 0.005, 343.0).unwrap()
    }

    /// Direct evaluation of the realized response h^H d(omega, theta).
    fn realized(filter: &SpatialFilter, geom: &UcaGeometry, theta: f64) -> Complex64 {
        let d = geom.steering_vector(filter.freq_hz(), theta);
        filter
            .weights()
            .iter()
            .zip(d.entries())
            .map(|(w, z)| w.conj() * z)
            .sum()
    }

    #[test]
    fn supercardioid_preset_matches_published_coefficients() {
        let p = IdealPattern::supercardioid();
        assert_eq!(p.order(), 2);
        assert_eq!(p.coefficients(), &[0.1035, 0.242, 0.309, 0.242, 0.1035]);
        let sum: f64 = p.coefficients().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p.is_symmetric());
    }

    #[test]
    fn ideal_pattern_values() {
        let p = IdealPattern::supercardioid();
        // mainlobe: coefficients sum to 1
        let main = p.evaluate(0.4, 0.4);
        assert!((main - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // rear: 2*0.1035 - 2*0.242 + 0.309 = 0.032
        let rear = p.evaluate(PI, 0.0);
        assert!((rear - Complex64::new(0.032, 0.0)).norm() < 1e-12, "{rear}");
        // omni is 1 everywhere
        let omni = IdealPattern::omnidirectional();
        assert!((omni.evaluate(2.31, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pattern_constructor_validates_length() {
        assert!(IdealPattern::new(2, vec![1.0, 2.0]).is_err());
        assert!(IdealPattern::new(1, vec![0.25, 0.5, 0.25]).is_ok());
    }

    #[test]
    fn order_zero_low_frequency_is_uniform_average() {
        let geom = geom5();
        let omni = IdealPattern::omnidirectional();
        let f = 1e-3; // wbar ~ 9e-11, J_0 -> 1
        let h = design_filter(&geom, &omni, 0.7, f).unwrap();
        for w in h.weights() {
            assert!((w - Complex64::new(0.2, 0.0)).norm() < 1e-9, "{w}");
        }
    }

    #[test]
    fn order_zero_is_scaled_average_at_any_frequency() {
        let geom = geom5();
        let omni = IdealPattern::omnidirectional();
        let f = 3000.0;
        let wbar = geom.normalized_freq(f);
        let j0 = bessel_jn(0, wbar).unwrap();
        let h = design_filter(&geom, &omni, 0.0, f).unwrap();
        for w in h.weights() {
            assert!((w - Complex64::new(1.0 / (5.0 * j0), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dc_bin_falls_back_to_uniform_average() {
        let geom = geom5();
        let p = IdealPattern::supercardioid();
        let h = design_filter(&geom, &p, 1.0, 0.0).unwrap();
        for w in h.weights() {
            assert!((w - Complex64::new(0.2, 0.0)).norm() == 0.0);
        }
    }

    #[test]
    fn too_few_mics_is_rejected() {
        let geom = UcaGeometry::new(4, 0.005, 343.0).unwrap();
        let p = IdealPattern::supercardioid();
        let err = design_filter(&geom, &p, 0.0, 1000.0).unwrap_err();
        assert!(err.to_string().contains("M >= 2N+1"), "{err}");
    }

    #[test]
    fn distortionless_at_steer_direction() {
        let geom = geom5();
        let p = IdealPattern::supercardioid();
        let h = design_filter(&geom, &p, 0.0, 1000.0).unwrap();
        let resp = realized(&h, &geom, 0.0);
        assert!((resp - Complex64::new(1.0, 0.0)).norm() < 1e-2, "{resp}");
    }

    #[test]
    fn rear_response_tracks_ideal_value() {
        let geom = geom5();
        let p = IdealPattern::supercardioid();
        let h = design_filter(&geom, &p, 0.0, 4000.0).unwrap();
        let resp = realized(&h, &geom, PI);
        assert!((resp.norm() - 0.032).abs() < 2e-2, "{resp}");
    }

    #[test]
    fn design_is_linear_in_coefficients() {
        let geom = geom5();
        let p = IdealPattern::supercardioid();
        let scaled = IdealPattern::new(
            2,
            p.coefficients().iter().map(|c| 3.5 * c).collect(),
        )
        .unwrap();
        let h1 = design_filter(&geom, &p, 0.3, 2500.0).unwrap();
        let h2 = design_filter(&geom, &scaled, 0.3, 2500.0).unwrap();
        for (a, b) in h1.weights().iter().zip(h2.weights()) {
            assert!((b - a * 3.5).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_equivariance_on_sensor_lattice() {
        let geom = geom5();
        let p = IdealPattern::supercardioid();
        let delta = 2.0 * PI / 5.0;
        let base = design_filter(&geom, &p, 0.2, 4000.0).unwrap();
        let shifted = design_filter(&geom, &p, 0.2 + delta, 4000.0).unwrap();
        for theta in [0.0, 0.9, 2.2, 4.4] {
            let a = realized(&base, &geom, theta);
            let b = realized(&shifted, &geom, theta + delta);
            assert!((a - b).norm() < 1e-10, "theta={theta}: {a} vs {b}");
        }
    }

    #[test]
    fn degenerate_frequency_without_regularization() {
        let geom = geom5();
        let p = IdealPattern::supercardioid();
        // tiny frequency: J_1, J_2 below the floor
        let opts = DesignOptions { regularize: false };
        let err = design_filter_with(&geom, &p, 0.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::DegenerateFrequency { .. }), "{err}");
        // same bin succeeds with regularization and stays finite
        let h = design_filter(&geom, &p, 0.0, 1.0).unwrap();
        assert!(h.weights().iter().all(|w| w.norm().is_finite()));
    }

    #[test]
    fn preset_lookup_by_name() {
        assert_eq!(
            IdealPattern::by_name("supercardioid2").unwrap(),
            IdealPattern::supercardioid()
        );
        assert!(IdealPattern::by_name("cardioid9").is_err());
    }
}
