//! Verifies that arrays of different size and radius produce matching
//! beampatterns and matching feature tensors for the same acoustic scene.

use std::f64::consts::TAU;

use sfbank::analysis::invariance_report;
use sfbank::beamdesign::IdealPattern;
use sfbank::geometry::UcaGeometry;
use sfbank::scenesim::{synthesize_desired, ImageSource, Scene};
use sfbank::spatialbank::{build_filterbank, feature_rel_l2, features_from_spectrogram};
use sfbank::stft::StftConfig;

fn main() {
    let geoms: Vec<UcaGeometry> = [(5, 0.005), (7, 0.010), (9, 0.015)]
        .iter()
        .map(|&(m, r)| UcaGeometry::with_default_sound_speed(m, r).expect("geometry"))
        .collect();
    let pattern = IdealPattern::supercardioid();
    let cfg = StftConfig::default();

    // Pattern domain: same design target, three different arrays.
    let report = invariance_report(&geoms, &pattern, 0.0, 4000.0, 360).expect("report");
    println!("beampattern deviation across geometries at 4 kHz:");
    println!("  max  {:.6}", report.max_abs_deviation);
    println!("  mean {:.6}", report.mean_abs_deviation);

    // Feature domain: a three-path desk scene heard by each array. The
    // feature tensors have identical shape regardless of microphone count.
    let fs = cfg.sample_rate_hz;
    let n = (2.0 * fs) as usize;
    let source: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            0.6 * ((TAU * (100.0 * t + 850.0 * t * t)).sin()
                + 0.4 * (TAU * (300.0 * t + 625.0 * t * t) + 1.3).sin())
        })
        .collect();
    let images = vec![
        ImageSource::new(1.0, 0.000, 30f64.to_radians()).expect("image"),
        ImageSource::new(0.5, 0.002, 100f64.to_radians()).expect("image"),
        ImageSource::new(0.3, 0.005, 250f64.to_radians()).expect("image"),
    ];
    let scene = Scene::noiseless(source, images).expect("scene");

    let features: Vec<_> = geoms
        .iter()
        .map(|g| {
            let spec = synthesize_desired(&scene, g, &cfg).expect("synthesize");
            let bank = build_filterbank(g, &pattern, 9, &cfg).expect("bank");
            features_from_spectrogram(&bank, &spec, 0.3).expect("features")
        })
        .collect();
    println!(
        "feature tensor shape: {:?} for every geometry",
        features[0].data().shape()
    );

    println!("pairwise feature deviation (relative L2, tolerance 0.1):");
    for a in 0..geoms.len() {
        for b in (a + 1)..geoms.len() {
            let dev = feature_rel_l2(&features[a], &features[b]).expect("compare");
            println!(
                "  M={} r={:>5} m  vs  M={} r={:>5} m : {:.6}  {}",
                geoms[a].num_mics(),
                geoms[a].radius_m(),
                geoms[b].num_mics(),
                geoms[b].radius_m(),
                dev,
                if dev <= 0.1 { "ok" } else { "EXCEEDED" }
            );
        }
    }
}
