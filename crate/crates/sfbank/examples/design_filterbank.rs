//! Designs a single beamforming filter, checks its distortionless response,
//! then builds the full 9-direction filter bank and dumps its weights.

use sfbank::beamdesign::{design_filter, IdealPattern};
use sfbank::dump::write_filter_weights;
use sfbank::geometry::UcaGeometry;
use sfbank::spatialbank::build_filterbank;
use sfbank::stft::StftConfig;

fn main() {
    let geom = UcaGeometry::with_default_sound_speed(5, 0.005).expect("geometry");
    let pattern = IdealPattern::supercardioid();
    let cfg = StftConfig::default();

    // One filter: supercardioid steered to 60 degrees at 1 kHz.
    let steer = 60f64.to_radians();
    let filter = design_filter(&geom, &pattern, steer, 1000.0).expect("design");
    println!("filter weights at 1 kHz, steer 60 deg:");
    for (m, w) in filter.weights().iter().enumerate() {
        println!("  mic {m}: {:+.6} {:+.6}i", w.re, w.im);
    }

    // A distortionless design passes a plane wave from the steer direction
    // with unit gain: h^H d(omega, theta_s) ~ 1.
    let d = geom.steering_vector(1000.0, steer);
    let gain: num_complex::Complex64 = filter
        .weights()
        .iter()
        .zip(d.entries())
        .map(|(w, z)| w.conj() * z)
        .sum();
    println!("response toward steer direction: {:+.6} {:+.6}i", gain.re, gain.im);
    println!("distortion |gain - 1| = {:.3e}", (gain - 1.0).norm());

    // The full bank: one filter per (steer direction, STFT bin).
    let bank = build_filterbank(&geom, &pattern, 9, &cfg).expect("bank");
    println!(
        "bank: {} steers x {} bins x {} mics",
        bank.num_filters(),
        bank.num_bins(),
        bank.num_mics()
    );

    let out = std::env::temp_dir().join("sfbank_filters.sfbw");
    write_filter_weights(&out, &bank).expect("dump");
    let bytes = std::fs::metadata(&out).expect("stat").len();
    println!("wrote {} ({bytes} bytes)", out.display());
}
