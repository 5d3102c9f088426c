//! Evaluates the realized beampattern of one filter against the ideal
//! pattern and exports it as CSV and JSON.

use sfbank::analysis::{
    beampattern_filename, export_beampattern, realized_beampattern, uniform_grid, ExportFormat,
};
use sfbank::beamdesign::{design_filter, ideal_beampattern, IdealPattern};
use sfbank::geometry::UcaGeometry;

fn main() {
    let geom = UcaGeometry::with_default_sound_speed(5, 0.005).expect("geometry");
    let pattern = IdealPattern::supercardioid();
    let freq_hz = 4000.0;

    let filter = design_filter(&geom, &pattern, 0.0, freq_hz).expect("design");
    let grid = uniform_grid(360);
    let samples = realized_beampattern(&filter, &geom, &grid).expect("evaluate");

    println!("azimuth   realized              ideal        |err|");
    for deg in [0, 45, 90, 135, 180] {
        let s = &samples[deg];
        let ideal = ideal_beampattern(&pattern, s.azimuth(), 0.0);
        println!(
            "{deg:>4} deg  {:+.4} {:+.4}i ({:+7.2} dB)  {:+.4}  {:.2e}",
            s.response().re,
            s.response().im,
            s.magnitude_db(),
            ideal.re,
            (s.response() - ideal).norm()
        );
    }

    let dir = std::env::temp_dir();
    for format in [ExportFormat::Csv, ExportFormat::Json] {
        let path = dir.join(beampattern_filename(
            geom.num_mics(),
            geom.radius_m(),
            freq_hz,
            format,
        ));
        export_beampattern(&samples, &path, format).expect("export");
        println!("wrote {}", path.display());
    }
}
