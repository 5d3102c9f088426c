//! Thin command line front end over the sfbank library.
//!
//! Subcommands mirror the library's capabilities: `design`, `beampattern`,
//! `simulate`, `extract`, and `check-invariance`. Every run validates its
//! complete configuration before writing anything, emits exactly one JSON
//! document on stdout, and logs progress to stderr.
//!
//! Exit codes: 0 success, 1 invariance verdict failed, 2 invalid arguments
//! or configuration, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sfbank::analysis::{
    beampattern_filename, export_beampattern, invariance_report_with, realized_beampattern,
    uniform_grid, DeviationMode, ExportFormat, DEFAULT_GRID_SIZE,
};
use sfbank::beamdesign::{design_filter_with, DesignOptions};
use sfbank::config::{parse_geom_spec, RunConfig};
use sfbank::dump::{write_features, write_filter_weights, FORMAT_VERSION};
use sfbank::geometry::UcaGeometry;
use sfbank::scenesim::{
    observe_scene, realized_snr_db, render_to_wav, synthesize_desired, NoiseKind,
};
use sfbank::spatialbank::{
    build_filterbank_with, extract_features, feature_rel_l2, features_from_spectrogram,
    DEFAULT_FEATURE_TOLERANCE,
};
use sfbank::{Error, Result};

fn version_line() -> String {
    format!(
        "{} (dump format v{})",
        env!("CARGO_PKG_VERSION"),
        FORMAT_VERSION
    )
}

#[derive(Parser)]
#[command(
    name = "sfbank",
    version = version_line(),
    about = "Geometry-invariant spatial filter banks for uniform circular microphone arrays"
)]
struct Cli {
    /// JSON run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the filter bank and write its weights to a dump file.
    Design {
        /// Output path (default: <outputs.dir>/filters.sfbw).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Evaluate realized beampatterns and export them as CSV or JSON.
    Beampattern {
        /// Design frequency in Hz.
        #[arg(long, value_name = "HZ", default_value_t = 4000.0)]
        freq_hz: f64,
        /// Steering direction in degrees.
        #[arg(long, value_name = "DEG", default_value_t = 0.0)]
        steer_deg: f64,
        /// Geometries as num_mics:radius_m, comma separated
        /// (e.g. 5:0.005,9:0.015). Default: the configured array.
        #[arg(long, value_name = "LIST")]
        geoms: Option<String>,
        /// Azimuth grid resolution (points over the full circle).
        #[arg(long, value_name = "N", default_value_t = DEFAULT_GRID_SIZE)]
        grid: usize,
        /// Export format.
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        /// Compare pattern magnitudes instead of complex responses.
        #[arg(long)]
        magnitude: bool,
        /// Output directory (default: <outputs.dir>).
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Synthesize the configured scene and write a multichannel WAV plus a
    /// metadata sidecar.
    Simulate {
        /// Output WAV path (default: <outputs.dir>/scene.wav).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Extract a compressed feature tensor from a multichannel WAV.
    Extract {
        /// Input WAV; channel count must match the configured array.
        input: PathBuf,
        /// Output path (default: <outputs.dir>/features.sfbf).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Render the configured scene for several geometries and verify that
    /// the extracted features agree within tolerance.
    CheckInvariance {
        /// Geometries as num_mics:radius_m, comma separated; at least two.
        #[arg(long, value_name = "LIST")]
        geoms: String,
        /// Pass threshold on pairwise relative L2 feature deviation.
        #[arg(long, value_name = "TOL", default_value_t = DEFAULT_FEATURE_TOLERANCE)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for ExportFormat {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => ExportFormat::Csv,
            OutFormat::Json => ExportFormat::Json,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_validation() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    match cli.command {
        Command::Design { out } => cmd_design(&cfg, out),
        Command::Beampattern {
            freq_hz,
            steer_deg,
            geoms,
            grid,
            format,
            magnitude,
            out_dir,
        } => cmd_beampattern(
            &cfg, freq_hz, steer_deg, geoms, grid, format.into(), magnitude, out_dir,
        ),
        Command::Simulate { out } => cmd_simulate(&cfg, out),
        Command::Extract { input, out } => cmd_extract(&cfg, &input, out),
        Command::CheckInvariance { geoms, tolerance } => {
            cmd_check_invariance(&cfg, &geoms, tolerance)
        }
    }
}

fn cmd_design(cfg: &RunConfig, out: Option<PathBuf>) -> Result<ExitCode> {
    let geom = cfg.array.build()?;
    let pattern = cfg.bank.build_pattern()?;
    let stft_cfg = cfg.stft.build()?;
    let opts = DesignOptions {
        regularize: cfg.bank.regularize,
    };
    let out = out.unwrap_or_else(|| cfg.outputs.dir.join("filters.sfbw"));

    eprintln!(
        "designing {} x {} filters for M={} r={} m",
        cfg.bank.num_filters,
        stft_cfg.num_bins(),
        geom.num_mics(),
        geom.radius_m()
    );
    let bank = build_filterbank_with(&geom, &pattern, cfg.bank.num_filters, &stft_cfg, opts)?;
    ensure_parent(&out)?;
    write_filter_weights(&out, &bank)?;
    eprintln!("wrote {}", out.display());

    print_json(&json!({
        "command": "design",
        "weights_path": out,
        "dims": [bank.num_filters(), bank.num_bins(), bank.num_mics(), 2],
        "pattern_order": pattern.order(),
        "steer_azimuths_deg": bank
            .steer_azimuths()
            .iter()
            .map(|a| a.to_degrees())
            .collect::<Vec<_>>(),
        "freq_range_hz": [0.0, stft_cfg.bin_freq_hz(stft_cfg.num_bins() - 1)],
        "geometry": geom_json(&geom),
    }));
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_beampattern(
    cfg: &RunConfig,
    freq_hz: f64,
    steer_deg: f64,
    geoms: Option<String>,
    grid: usize,
    format: ExportFormat,
    magnitude: bool,
    out_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let pattern = cfg.bank.build_pattern()?;
    let opts = DesignOptions {
        regularize: cfg.bank.regularize,
    };
    let steer = steer_deg.to_radians();
    let geoms = resolve_geometries(cfg, geoms.as_deref())?;
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let out_dir = out_dir.unwrap_or_else(|| cfg.outputs.dir.clone());

    // Design everything before touching the filesystem so a failure in any
    // geometry leaves no partial exports behind.
    let azimuths = uniform_grid(grid);
    let mut exports = Vec::new();
    for geom in &geoms {
        let filter = design_filter_with(geom, &pattern, steer, freq_hz, opts)?;
        let samples = realized_beampattern(&filter, geom, &azimuths)?;
        let name = beampattern_filename(geom.num_mics(), geom.radius_m(), freq_hz, format);
        exports.push((out_dir.join(name), samples));
    }

    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    for (path, samples) in &exports {
        export_beampattern(samples, path, format)?;
        eprintln!("wrote {}", path.display());
        files.push(path.clone());
    }

    let mut summary = json!({
        "command": "beampattern",
        "freq_hz": freq_hz,
        "steer_deg": steer_deg,
        "grid": grid,
        "geometries": geoms.iter().map(geom_json).collect::<Vec<_>>(),
        "files": files,
    });
    let obj = summary.as_object_mut().expect("summary is an object");
    if freq_hz == 0.0 {
        obj.insert(
            "note".into(),
            json!("frequency 0 Hz falls back to the uniform averaging filter"),
        );
    }
    if geoms.len() >= 2 {
        let mode = if magnitude {
            DeviationMode::Magnitude
        } else {
            DeviationMode::Complex
        };
        let report = invariance_report_with(&geoms, &pattern, steer, freq_hz, grid, mode)?;
        obj.insert("report".into(), serde_json::to_value(&report)?);
    }
    print_json(&summary);
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(cfg: &RunConfig, out: Option<PathBuf>) -> Result<ExitCode> {
    let scene_cfg = cfg.scene.as_ref().ok_or_else(|| {
        Error::InvalidArgument("simulate requires a \"scene\" section in the config".into())
    })?;
    let geom = cfg.array.build()?;
    let stft_cfg = cfg.stft.build()?;
    let scene = scene_cfg.build(&stft_cfg)?;
    let out = out.unwrap_or_else(|| cfg.outputs.dir.join("scene.wav"));

    eprintln!(
        "synthesizing {} image(s) for M={} r={} m",
        scene.images().len(),
        geom.num_mics(),
        geom.radius_m()
    );
    let observed = observe_scene(&scene, &geom, &stft_cfg)?;
    let realized = match scene.noise_kind() {
        NoiseKind::None => None,
        NoiseKind::White => {
            let desired = synthesize_desired(&scene, &geom, &stft_cfg)?;
            Some(realized_snr_db(&desired, &observed)?)
        }
    };

    ensure_parent(&out)?;
    render_to_wav(&observed, &out)?;
    let meta_path = out.with_extension("meta.json");
    let meta = json!({
        "source_wav": scene_cfg.source_wav,
        "geometry": geom_json(&geom),
        "sample_rate_hz": stft_cfg.sample_rate_hz,
        "num_frames": observed.num_frames(),
        "images": scene.images().iter().map(|i| json!({
            "gain": i.gain(),
            "delay_s": i.delay_s(),
            "azimuth_deg": i.azimuth().to_degrees(),
        })).collect::<Vec<_>>(),
        "noise": match scene.noise_kind() {
            NoiseKind::None => serde_json::Value::Null,
            NoiseKind::White => json!({
                "kind": "white",
                "snr_db": scene.snr_db(),
                "seed": scene.seed(),
            }),
        },
        // measured on the synthesized spectrogram; overlap-add rendering
        // attenuates spectrogram-domain noise, so the waveform sits above it
        "realized_snr_db": realized,
        "snr_domain": realized.map(|_| "stft"),
    });
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    eprintln!("wrote {} and {}", out.display(), meta_path.display());

    let mut summary = meta;
    let obj = summary.as_object_mut().expect("meta is an object");
    obj.insert("command".into(), json!("simulate"));
    obj.insert("wav_path".into(), json!(out));
    obj.insert("metadata_path".into(), json!(meta_path));
    print_json(&summary);
    Ok(ExitCode::SUCCESS)
}

fn cmd_extract(cfg: &RunConfig, input: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let geom = cfg.array.build()?;
    let pattern = cfg.bank.build_pattern()?;
    let stft_cfg = cfg.stft.build()?;
    if !input.exists() {
        return Err(Error::InvalidArgument(format!(
            "input wav not found: {}",
            input.display()
        )));
    }
    let out = out.unwrap_or_else(|| cfg.outputs.dir.join("features.sfbf"));

    eprintln!("extracting features from {}", input.display());
    let feat = extract_features(
        input,
        &geom,
        &pattern,
        cfg.bank.num_filters,
        &stft_cfg,
        cfg.bank.compression_exponent,
    )?;
    ensure_parent(&out)?;
    write_features(&out, &feat)?;
    eprintln!("wrote {}", out.display());

    print_json(&json!({
        "command": "extract",
        "input": input,
        "features_path": out,
        "dims": feat.data().shape(),
        "compression_exponent": feat.compression_exponent(),
        "geometry": geom_json(&geom),
    }));
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_invariance(cfg: &RunConfig, geoms: &str, tolerance: f64) -> Result<ExitCode> {
    let scene_cfg = cfg.scene.as_ref().ok_or_else(|| {
        Error::InvalidArgument("check-invariance requires a \"scene\" section in the config".into())
    })?;
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive and finite, got {tolerance}"
        )));
    }
    let pattern = cfg.bank.build_pattern()?;
    let stft_cfg = cfg.stft.build()?;
    let opts = DesignOptions {
        regularize: cfg.bank.regularize,
    };
    let geoms = resolve_geometries(cfg, Some(geoms))?;
    if geoms.len() < 2 {
        return Err(Error::InvalidArgument(
            "check-invariance needs at least two geometries".into(),
        ));
    }
    // Geometry preconditions (in particular M >= 2N+1 for the pattern
    // order) are checked for the whole list before any heavy work starts.
    for geom in &geoms {
        if geom.num_mics() < 2 * pattern.order() + 1 {
            return Err(Error::InvalidArgument(format!(
                "M >= 2N+1 required: M={} cannot resolve pattern order N={}",
                geom.num_mics(),
                pattern.order()
            )));
        }
    }
    let scene = scene_cfg.build(&stft_cfg)?;

    // The invariance claim concerns the geometry-dependent signal path, so
    // features are computed on the noiseless synthesized field; independent
    // noise draws per geometry would confound the comparison.
    let mut features = Vec::new();
    for geom in &geoms {
        eprintln!(
            "rendering scene for M={} r={} m",
            geom.num_mics(),
            geom.radius_m()
        );
        let spec = synthesize_desired(&scene, geom, &stft_cfg)?;
        let bank =
            build_filterbank_with(geom, &pattern, cfg.bank.num_filters, &stft_cfg, opts)?;
        features.push(features_from_spectrogram(
            &bank,
            &spec,
            cfg.bank.compression_exponent,
        )?);
    }

    let mut pairs = Vec::new();
    let mut worst: Option<(usize, usize, f64)> = None;
    for a in 0..geoms.len() {
        for b in (a + 1)..geoms.len() {
            let dev = feature_rel_l2(&features[a], &features[b])?;
            if worst.is_none_or(|(_, _, w)| dev > w) {
                worst = Some((a, b, dev));
            }
            pairs.push(json!({
                "a": geom_json(&geoms[a]),
                "b": geom_json(&geoms[b]),
                "feature_rel_l2": dev,
                "pass": dev <= tolerance,
            }));
        }
    }
    let (wa, wb, worst_dev) = worst.expect("at least one pair");
    let pass = worst_dev <= tolerance;
    let message = if pass {
        format!(
            "all {} pair(s) within tolerance {tolerance} (worst {worst_dev:.6})",
            pairs.len()
        )
    } else {
        format!(
            "feature deviation {worst_dev:.6} between M={} r={} m and M={} r={} m exceeds tolerance {tolerance}",
            geoms[wa].num_mics(),
            geoms[wa].radius_m(),
            geoms[wb].num_mics(),
            geoms[wb].radius_m()
        )
    };

    print_json(&json!({
        "command": "check-invariance",
        "tolerance": tolerance,
        "noise": "excluded",
        "geometries": geoms.iter().map(geom_json).collect::<Vec<_>>(),
        "pairs": pairs,
        "max_feature_rel_l2": worst_dev,
        "pass": pass,
        "message": message,
    }));
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("check failed: {message}");
        Ok(ExitCode::from(1))
    }
}

/// Builds the geometry list from a `--geoms` spec, or falls back to the
/// configured array. Every geometry uses the configured sound speed.
fn resolve_geometries(cfg: &RunConfig, spec: Option<&str>) -> Result<Vec<UcaGeometry>> {
    match spec {
        None => Ok(vec![cfg.array.build()?]),
        Some(spec) => parse_geom_spec(spec)?
            .into_iter()
            .map(|(m, r)| UcaGeometry::new(m, r, cfg.array.sound_speed_m_s))
            .collect(),
    }
}

fn geom_json(g: &UcaGeometry) -> serde_json::Value {
    json!({"num_mics": g.num_mics(), "radius_m": g.radius_m()})
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    );
}
