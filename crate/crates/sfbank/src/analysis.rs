//! Realized beampattern evaluation, cross-geometry deviation reports, and
//! plot-ready exports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::beamdesign::{design_filter, IdealPattern, SpatialFilter};
use crate::geometry::UcaGeometry;
use crate::{Error, Result};

/// Magnitudes below this floor are clamped when converted to dB.
pub const DB_FLOOR: f64 = -80.0;

/// Default azimuth grid resolution: one sample per degree.
pub const DEFAULT_GRID_SIZE: usize = 360;

/// One point of a realized beampattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeampatternSample {
    azimuth: f64,
    response: Complex64,
    magnitude_db: f64,
}

impl BeampatternSample {
    pub fn new(azimuth: f64, response: Complex64) -> Self {
        let magnitude_db = if response.norm() > 0.0 {
            (20.0 * response.norm().log10()).max(DB_FLOOR)
        } else {
            DB_FLOOR
        };
        Self {
            azimuth,
            response,
            magnitude_db,
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn response(&self) -> Complex64 {
        self.response
    }

    pub fn magnitude_db(&self) -> f64 {
        self.magnitude_db
    }
}

/// `n` azimuths uniformly covering [0, 2*pi).
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| std::f64::consts::TAU * j as f64 / n as f64)
        .collect()
}

/// Evaluates `h^H d(omega, theta)` over a grid of arrival angles. The
/// filter's own design frequency is used; the geometry must match the
/// filter's channel count.
pub fn realized_beampattern(
    filter: &SpatialFilter,
    geom: &UcaGeometry,
    azimuth_grid: &[f64],
) -> Result<Vec<BeampatternSample>> {
    if filter.num_mics() != geom.num_mics() {
        return Err(Error::GeometryMismatch(format!(
            "filter has {} weights, geometry has {} microphones",
            filter.num_mics(),
            geom.num_mics()
        )));
    }
    Ok(azimuth_grid
        .iter()
        .map(|&theta| {
            let d = geom.steering_vector(filter.freq_hz(), theta);
            let resp: Complex64 = filter
                .weights()
                .iter()
                .zip(d.entries())
                .map(|(w, z)| w.conj() * z)
                .sum();
            BeampatternSample::new(theta, resp)
        })
        .collect())
}

/// How pattern deviations between geometries are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationMode {
    /// `|B_a(theta) - B_b(theta)|` on the complex responses (stricter).
    Complex,
    /// `||B_a(theta)| - |B_b(theta)||` on magnitudes only.
    Magnitude,
}

/// Pairwise beampattern deviation across a set of geometries.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    /// (M, radius_m) pairs that were compared.
    pub geometry_pairs: Vec<((usize, f64), (usize, f64))>,
    pub frequency_hz: f64,
    /// Largest deviation over all pairs and grid points.
    pub max_abs_deviation: f64,
    /// Grand mean over all pairs and grid points.
    pub mean_abs_deviation: f64,
    /// Filled when a feature-domain comparison was also run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_rel_l2: Option<f64>,
}

impl InvarianceReport {
    pub fn with_feature_rel_l2(mut self, value: f64) -> Self {
        self.feature_rel_l2 = Some(value);
        self
    }
}

/// Designs one filter per geometry (same pattern, steer, frequency) and
/// measures pairwise deviations of the realized patterns over a uniform
/// azimuth grid, comparing complex responses.
pub fn invariance_report(
    geoms: &[UcaGeometry],
    pattern: &IdealPattern,
    steer_azimuth: f64,
    freq_hz: f64,
    grid_size: usize,
) -> Result<InvarianceReport> {
    invariance_report_with(
        geoms,
        pattern,
        steer_azimuth,
        freq_hz,
        grid_size,
        DeviationMode::Complex,
    )
}

pub fn invariance_report_with(
    geoms: &[UcaGeometry],
    pattern: &IdealPattern,
    steer_azimuth: f64,
    freq_hz: f64,
    grid_size: usize,
    mode: DeviationMode,
) -> Result<InvarianceReport> {
    if geoms.len() < 2 {
        return Err(Error::InvalidArgument(
            "invariance report needs at least two geometries".into(),
        ));
    }
    if grid_size == 0 {
        return Err(Error::InvalidArgument("grid_size must be positive".into()));
    }
    let grid = uniform_grid(grid_size);
    let patterns: Vec<Vec<BeampatternSample>> = geoms
        .iter()
        .map(|g| {
            let filter = design_filter(g, pattern, steer_azimuth, freq_hz)?;
            realized_beampattern(&filter, g, &grid)
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut max_dev = 0.0f64;
    let mut sum_dev = 0.0f64;
    let mut count = 0usize;
    for a in 0..geoms.len() {
        for b in a + 1..geoms.len() {
            pairs.push((
                (geoms[a].num_mics(), geoms[a].radius_m()),
                (geoms[b].num_mics(), geoms[b].radius_m()),
            ));
            for (sa, sb) in patterns[a].iter().zip(patterns[b].iter()) {
                let dev = match mode {
                    DeviationMode::Complex => (sa.response() - sb.response()).norm(),
                    DeviationMode::Magnitude => {
                        (sa.response().norm() - sb.response().norm()).abs()
                    }
                };
                max_dev = max_dev.max(dev);
                sum_dev += dev;
                count += 1;
            }
        }
    }
    Ok(InvarianceReport {
        geometry_pairs: pairs,
        frequency_hz: freq_hz,
        max_abs_deviation: max_dev,
        mean_abs_deviation: sum_dev / count as f64,
        feature_rel_l2: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        }
    }
}

#[derive(Serialize)]
struct ExportRow {
    azimuth_deg: f64,
    real: f64,
    imag: f64,
    magnitude_db: f64,
}

/// Writes samples as CSV or JSON with columns azimuth_deg, real, imag,
/// magnitude_db, sorted by azimuth. Values are rounded to 9 significant
/// digits before writing, so both formats parse back value-identical.
pub fn export_beampattern(
    samples: &[BeampatternSample],
    path: impl AsRef<Path>,
    format: ExportFormat,
) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot export an empty beampattern".into(),
        ));
    }
    let mut sorted: Vec<&BeampatternSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.azimuth.total_cmp(&b.azimuth));
    let rows: Vec<ExportRow> = sorted
        .iter()
        .map(|s| ExportRow {
            azimuth_deg: round_9(s.azimuth.to_degrees()),
            real: round_9(s.response.re),
            imag: round_9(s.response.im),
            magnitude_db: round_9(s.magnitude_db),
        })
        .collect();

    let mut w = BufWriter::new(File::create(path)?);
    match format {
        ExportFormat::Csv => {
            writeln!(w, "azimuth_deg,real,imag,magnitude_db")?;
            for r in &rows {
                writeln!(
                    w,
                    "{:.8e},{:.8e},{:.8e},{:.8e}",
                    r.azimuth_deg, r.real, r.imag, r.magnitude_db
                )?;
            }
        }
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rounds to 9 significant digits via decimal round trip, matching the
/// export text formatting.
fn round_9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("decimal round trip")
}

/// Canonical export file name: `beampattern_M{M}_r{mm}mm_f{Hz}.{ext}`.
pub fn beampattern_filename(
    num_mics: usize,
    radius_m: f64,
    freq_hz: f64,
    format: ExportFormat,
) -> String {
    format!(
        "beampattern_M{num_mics}_r{}mm_f{}.{}",
        trim_number(radius_m * 1000.0),
        trim_number(freq_hz),
        format.extension()
    )
}

fn trim_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn supercardioid_filter(m: usize, r: f64, freq: f64) -> (SpatialFilter, UcaGeometry) {
        let geom = UcaGeometry::new(m, r, 343.0).unwrap();
        let filter =
            design_filter(&geom, &IdealPattern::supercardioid(), 0.0, freq).unwrap();
        (filter, geom)
    }

    #[test]
    fn magnitude_db_tracks_response() {
        let s = BeampatternSample::new(0.0, Complex64::new(1.0, 0.0));
        assert!(s.magnitude_db().abs() < 1e-9);
        let s = BeampatternSample::new(0.0, Complex64::new(0.5, 0.0));
        assert!((s.magnitude_db() + 6.020599913279624).abs() < 1e-9);
        let s = BeampatternSample::new(0.0, Complex64::new(0.0, 0.0));
        assert_eq!(s.magnitude_db(), DB_FLOOR);
        let s = BeampatternSample::new(0.0, Complex64::new(1e-6, 0.0));
        assert_eq!(s.magnitude_db(), DB_FLOOR);
    }

    #[test]
    fn uniform_filter_at_zero_radius_is_flat() {
        let geom = UcaGeometry::new(6, 0.0, 343.0).unwrap();
        let filter =
            design_filter(&geom, &IdealPattern::omnidirectional(), 0.0, 1000.0).unwrap();
        let samples = realized_beampattern(&filter, &geom, &uniform_grid(90)).unwrap();
        for s in samples {
            assert!((s.response() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn mainlobe_is_distortionless() {
        let (filter, geom) = supercardioid_filter(5, 0.005, 4000.0);
        let samples = realized_beampattern(&filter, &geom, &[0.0]).unwrap();
        let mag = samples[0].response().norm();
        assert!((0.98..=1.02).contains(&mag), "{mag}");
    }

    #[test]
    fn rear_lands_near_minus_thirty_db() {
        let (filter, geom) = supercardioid_filter(5, 0.005, 4000.0);
        let samples = realized_beampattern(&filter, &geom, &[PI]).unwrap();
        let db = samples[0].magnitude_db();
        assert!((-32.0..=-28.0).contains(&db), "{db}");
    }

    #[test]
    fn mismatched_geometry_is_rejected() {
        let (filter, _) = supercardioid_filter(5, 0.005, 1000.0);
        let other = UcaGeometry::new(7, 0.005, 343.0).unwrap();
        assert!(matches!(
            realized_beampattern(&filter, &other, &[0.0]),
            Err(Error::GeometryMismatch(_))
        ));
    }

    #[test]
    fn pattern_is_2pi_periodic() {
        let (filter, geom) = supercardioid_filter(7, 0.01, 2000.0);
        let a = realized_beampattern(&filter, &geom, &[0.37]).unwrap();
        let b = realized_beampattern(&filter, &geom, &[0.37 + std::f64::consts::TAU]).unwrap();
        assert!((a[0].response() - b[0].response()).norm() < 1e-12);
    }

    #[test]
    fn symmetric_pattern_at_zero_steer_is_nearly_real() {
        let (filter, geom) = supercardioid_filter(5, 0.005, 4000.0);
        let samples = realized_beampattern(&filter, &geom, &uniform_grid(72)).unwrap();
        for s in samples {
            assert!(s.response().im.abs() < 0.05, "{}", s.response());
        }
    }

    #[test]
    fn identical_geometries_have_zero_deviation() {
        let g = UcaGeometry::new(5, 0.005, 343.0).unwrap();
        let report = invariance_report(
            &[g.clone(), g],
            &IdealPattern::supercardioid(),
            0.0,
            4000.0,
            90,
        )
        .unwrap();
        assert_eq!(report.max_abs_deviation, 0.0);
        assert_eq!(report.mean_abs_deviation, 0.0);
        assert_eq!(report.geometry_pairs.len(), 1);
        assert!(report.feature_rel_l2.is_none());
    }

    #[test]
    fn grid_pair_deviation_is_small_at_4khz() {
        let a = UcaGeometry::new(5, 0.005, 343.0).unwrap();
        let b = UcaGeometry::new(9, 0.015, 343.0).unwrap();
        let report =
            invariance_report(&[a, b], &IdealPattern::supercardioid(), 0.0, 4000.0, 360)
                .unwrap();
        assert!(report.max_abs_deviation <= 0.1, "{}", report.max_abs_deviation);
        assert!(report.mean_abs_deviation <= report.max_abs_deviation);
        assert_eq!(report.frequency_hz, 4000.0);
    }

    #[test]
    fn near_dc_report_is_finite_with_regularization() {
        let a = UcaGeometry::new(5, 0.005, 343.0).unwrap();
        let b = UcaGeometry::new(9, 0.015, 343.0).unwrap();
        let report =
            invariance_report(&[a, b], &IdealPattern::supercardioid(), 0.0, 1e-6, 90).unwrap();
        assert!(report.max_abs_deviation.is_finite());
        assert!(report.mean_abs_deviation.is_finite());
    }

    #[test]
    fn magnitude_mode_is_no_larger_than_complex_mode() {
        let a = UcaGeometry::new(5, 0.005, 343.0).unwrap();
        let b = UcaGeometry::new(7, 0.01, 343.0).unwrap();
        let geoms = [a, b];
        let p = IdealPattern::supercardioid();
        let complex =
            invariance_report_with(&geoms, &p, 0.0, 4000.0, 180, DeviationMode::Complex)
                .unwrap();
        let mag =
            invariance_report_with(&geoms, &p, 0.0, 4000.0, 180, DeviationMode::Magnitude)
                .unwrap();
        assert!(mag.max_abs_deviation <= complex.max_abs_deviation + 1e-15);
        assert!(mag.mean_abs_deviation <= complex.mean_abs_deviation + 1e-15);
    }

    #[test]
    fn export_round_trips_in_both_formats() {
        let (filter, geom) = supercardioid_filter(5, 0.005, 4000.0);
        // deliberately unsorted grid
        let mut grid = uniform_grid(360);
        grid.reverse();
        let samples = realized_beampattern(&filter, &geom, &grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("p.csv");
        let json_path = dir.path().join("p.json");
        export_beampattern(&samples, &csv_path, ExportFormat::Csv).unwrap();
        export_beampattern(&samples, &json_path, ExportFormat::Json).unwrap();

        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 361);
        assert_eq!(lines[0], "azimuth_deg,real,imag,magnitude_db");

        let mut parsed_csv = Vec::new();
        let mut last_az = f64::NEG_INFINITY;
        for line in &lines[1..] {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert!(vals[0] > last_az, "rows must be sorted by azimuth");
            last_az = vals[0];
            parsed_csv.push(vals);
        }

        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        let arr = json.as_array().unwrap();
        assert_eq!(arr.len(), 360);
        for (row, csv_vals) in arr.iter().zip(&parsed_csv) {
            assert_eq!(row["azimuth_deg"].as_f64().unwrap(), csv_vals[0]);
            assert_eq!(row["real"].as_f64().unwrap(), csv_vals[1]);
            assert_eq!(row["imag"].as_f64().unwrap(), csv_vals[2]);
            assert_eq!(row["magnitude_db"].as_f64().unwrap(), csv_vals[3]);
        }

        // magnitudes survive the formatting round trip
        let sorted: Vec<f64> = {
            let mut s = samples.clone();
            s.sort_by(|x, y| x.azimuth().total_cmp(&y.azimuth()));
            s.iter().map(|x| x.response().norm()).collect()
        };
        for (vals, mag) in parsed_csv.iter().zip(sorted) {
            let reparsed = Complex64::new(vals[1], vals[2]).norm();
            assert!((reparsed - mag).abs() < 1e-6);
        }

        assert!(export_beampattern(&[], dir.path().join("e.csv"), ExportFormat::Csv).is_err());
    }

    #[test]
    fn filename_convention() {
        assert_eq!(
            beampattern_filename(5, 0.005, 4000.0, ExportFormat::Csv),
            "beampattern_M5_r5mm_f4000.csv"
        );
        assert_eq!(
            beampattern_filename(9, 0.015, 437.5, ExportFormat::Json),
            "beampattern_M9_r15mm_f437.5.json"
        );
        assert_eq!(
            beampattern_filename(7, 0.0125, 500.0, ExportFormat::Csv),
            "beampattern_M7_r12.5mm_f500.csv"
        );
    }
}
