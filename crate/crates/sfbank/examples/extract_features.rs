//! End-to-end front end: record a scene to WAV, extract the compressed
//! feature tensor, dump it, and read the dump back.

use std::f64::consts::TAU;

use sfbank::beamdesign::IdealPattern;
use sfbank::dump::{read_features, write_features};
use sfbank::geometry::UcaGeometry;
use sfbank::scenesim::{observe_scene, render_to_wav, ImageSource, Scene};
use sfbank::spatialbank::extract_features;
use sfbank::stft::StftConfig;

fn main() {
    let geom = UcaGeometry::with_default_sound_speed(5, 0.005).expect("geometry");
    let cfg = StftConfig::default();

    // Simulate a recording first so the example is self-contained.
    let fs = cfg.sample_rate_hz;
    let source: Vec<f64> = (0..fs as usize)
        .map(|i| {
            let t = i as f64 / fs;
            0.5 * (TAU * (200.0 * t + 1500.0 * t * t)).sin()
        })
        .collect();
    let images = vec![
        ImageSource::new(1.0, 0.000, 30f64.to_radians()).expect("image"),
        ImageSource::new(0.4, 0.003, 210f64.to_radians()).expect("image"),
    ];
    let scene = Scene::noiseless(source, images).expect("scene");
    let observed = observe_scene(&scene, &geom, &cfg).expect("observe");
    let wav = std::env::temp_dir().join("sfbank_recording.wav");
    render_to_wav(&observed, &wav).expect("render");
    println!("recorded {}", wav.display());

    // WAV -> STFT -> filter bank -> compression -> feature tensor.
    let pattern = IdealPattern::supercardioid();
    let feat = extract_features(&wav, &geom, &pattern, 9, &cfg, 0.3).expect("extract");
    let dims = feat.data().shape();
    println!(
        "features: {} channels x {} frames x {} bins (compression c = {})",
        dims[0],
        dims[1],
        dims[2],
        feat.compression_exponent()
    );
    let peak = feat.data().iter().fold(0f64, |m, &v| m.max(v.abs()));
    println!("peak feature magnitude: {peak:.4}");

    let dump = std::env::temp_dir().join("sfbank_features.sfbf");
    write_features(&dump, &feat).expect("dump");
    let back = read_features(&dump).expect("read back");
    assert_eq!(back.shape(), feat.data().shape());
    println!(
        "wrote and re-read {} ({} bytes)",
        dump.display(),
        std::fs::metadata(&dump).expect("stat").len()
    );
}
