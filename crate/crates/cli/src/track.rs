use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use tlsdyn_core::tracking::{accumulate_tracks, diffusivities, fit_linewidth, DEFAULT_P_THRESHOLD};
use tlsdyn_core::{Manifest, TrackConfig};

use crate::output::{csv_bytes, load_maps, resolve_dir, Output};

pub const LINEWIDTH_HEADER: [&str; 11] = [
    "qubit_id",
    "feature",
    "mu_mhz",
    "sigma_mhz",
    "amplitude",
    "window_lo_mhz",
    "window_hi_mhz",
    "duration_hr",
    "rms_residual",
    "d_k",
    "d_1d",
];

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Spectroscopy map CSV.
    #[arg(long)]
    map: PathBuf,
    /// Minima must lie below this P1.
    #[arg(long, default_value_t = DEFAULT_P_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = TrackConfig::default().min_prominence)]
    min_prominence: f64,
    /// Gap (MHz) that splits auto-clustered features.
    #[arg(long, default_value_t = TrackConfig::default().cluster_gap)]
    cluster_gap: f64,
    /// Histogram bin width (MHz); defaults to twice the grid spacing.
    #[arg(long)]
    bin_width: Option<f64>,
    /// Fixed feature window `LO:HI` in MHz; repeatable.
    #[arg(long = "window", value_parser = parse_window)]
    windows: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 50.0)]
    tau: f64,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((p(lo)?, p(hi)?))
}

#[derive(Debug, Serialize)]
struct LinewidthRow {
    qubit_id: String,
    feature: usize,
    mu_mhz: f64,
    sigma_mhz: f64,
    amplitude: f64,
    window_mhz: (f64, f64),
    duration_hr: f64,
    rms_residual: f64,
    d_k: f64,
    d_1d: f64,
}

pub fn run(args: Args, out: Option<PathBuf>) -> Result<()> {
    let cfg = TrackConfig {
        p_threshold: args.threshold,
        min_prominence: args.min_prominence,
        windows: args.windows,
        cluster_gap: args.cluster_gap,
        bin_width: args.bin_width,
    };
    cfg.validate()?;
    let maps = load_maps(&args.map, args.tau)?;

    let mut feature_rows = Vec::new();
    let mut fits = Vec::new();
    for m in &maps {
        let tracks = accumulate_tracks(m, &cfg).with_context(|| format!("qubit {}", m.qubit_id))?;
        for s in &tracks.slices {
            for f in &s.features {
                feature_rows.push([
                    m.qubit_id.clone(),
                    s.time.to_string(),
                    f.shift.to_string(),
                    f.p1.to_string(),
                ]);
            }
        }
        for (i, c) in tracks.clusters.iter().enumerate() {
            let fit = match fit_linewidth(&c.histogram, c.window, tracks.duration_hr) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!(
                        "warning: qubit {} feature {i} at {:.3} MHz: {e}",
                        m.qubit_id,
                        c.center()
                    );
                    continue;
                }
            };
            let d = diffusivities(fit.sigma, fit.duration_hr)
                .map_err(|e| anyhow!("qubit {} feature {i}: {e}", m.qubit_id))?;
            fits.push(LinewidthRow {
                qubit_id: m.qubit_id.clone(),
                feature: i,
                mu_mhz: fit.mu,
                sigma_mhz: fit.sigma,
                amplitude: fit.amplitude,
                window_mhz: fit.window,
                duration_hr: fit.duration_hr,
                rms_residual: fit.rms_residual,
                d_k: d.d_k,
                d_1d: d.d_1d,
            });
        }
    }

    let mut o = Output::new(resolve_dir(out, None), Manifest::new(None, None))?;
    o.input("map", &args.map)?;
    o.param("p_threshold", cfg.p_threshold);
    o.param("track", &cfg);
    o.write(
        "tracks.csv",
        &csv_bytes(&["qubit_id", "time_hr", "shift_mhz", "p1"], feature_rows)?,
    )?;
    let rows = fits.iter().map(|f| {
        [
            f.qubit_id.clone(),
            f.feature.to_string(),
            f.mu_mhz.to_string(),
            f.sigma_mhz.to_string(),
            f.amplitude.to_string(),
            f.window_mhz.0.to_string(),
            f.window_mhz.1.to_string(),
            f.duration_hr.to_string(),
            f.rms_residual.to_string(),
            f.d_k.to_string(),
            f.d_1d.to_string(),
        ]
    });
    o.write("linewidths.csv", &csv_bytes(&LINEWIDTH_HEADER, rows)?)?;
    let mut json = serde_json::to_vec_pretty(&fits)?;
    json.push(b'\n');
    o.write("linewidths.json", &json)?;
    o.finish("track.manifest.json")
}
