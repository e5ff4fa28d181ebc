use std::path::PathBuf;

use anyhow::Result;
use tlsdyn_core::estimators::{
    ensemble_estimator, mean_p1_freq_time, mean_p1_over_time, mean_t1_freq_time, mean_t1_over_time,
    p1_to_t1,
};
use tlsdyn_core::{ClipPolicy, EstimatorConfig, Manifest, SpectroscopyMap};

use crate::output::{csv_bytes, fmt_opt, load_maps, load_t1, resolve_dir, Output};

pub const HEADER: [&str; 7] = [
    "qubit_id",
    "mean_t1_time_us",
    "mean_p1_time",
    "mean_t1_freq_time_us",
    "mean_p1_freq_time",
    "ensemble_t1_us",
    "single_t1_us",
];

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Spectroscopy map CSV.
    #[arg(long)]
    map: PathBuf,
    /// T1 time-series CSV.
    #[arg(long)]
    t1: PathBuf,
    /// Half-width of the frequency window (MHz).
    #[arg(long, default_value_t = 5.0)]
    delta_omega: f64,
    /// Ensemble spacing (MHz).
    #[arg(long, default_value_t = 1.0)]
    chi: f64,
    /// Leading time slices to average.
    #[arg(long, default_value_t = 1)]
    n_slices: usize,
    /// Delay used to convert P1 to T1 (µs).
    #[arg(long, default_value_t = 50.0)]
    tau: f64,
    /// Handling of saturated cells.
    #[arg(long, default_value = "exclude", value_parser = ["exclude", "clamp"])]
    clip: String,
}

pub fn run(args: Args, out: Option<PathBuf>) -> Result<()> {
    let cfg = EstimatorConfig {
        delta_omega: args.delta_omega,
        chi: args.chi,
        n_slices: args.n_slices,
        tau: args.tau,
        clip: if args.clip == "clamp" {
            ClipPolicy::Clamp
        } else {
            ClipPolicy::Exclude
        },
    };
    cfg.validate()?;
    let maps = load_maps(&args.map, args.tau)?;
    let series = load_t1(&args.t1)?;

    let rows: Vec<Vec<String>> = maps
        .iter()
        .map(|m| {
            let long = series
                .iter()
                .find(|s| s.qubit_id == m.qubit_id)
                .and_then(|s| mean_t1_over_time(s).ok())
                .map(|e| e.value);
            let mut row = vec![m.qubit_id.clone(), fmt_opt(long)];
            row.extend(estimates(m, &cfg).into_iter().map(fmt_opt));
            row
        })
        .collect();

    let mut o = Output::new(resolve_dir(out, None), Manifest::new(None, None))?;
    o.input("map", &args.map)?;
    o.input("t1", &args.t1)?;
    o.param("estimator", cfg);
    o.write("estimates.csv", &csv_bytes(&HEADER, rows)?)?;
    o.finish("estimate.manifest.json")
}

/// ⟨P1⟩_T, ⟨T1⟩_{ω,t}, ⟨P1⟩_{ω,t}, {T1} and the single-instance T1; `None`
/// where the estimator has nothing valid to work with.
fn estimates(map: &SpectroscopyMap, cfg: &EstimatorConfig) -> [Option<f64>; 5] {
    let centre = map.grid.nearest(0.0);
    let column: Vec<Option<f64>> = map.p1.iter().map(|row| row[centre]).collect();
    let first = map.p1.first();
    [
        mean_p1_over_time(&column).ok().map(|e| e.value),
        mean_t1_freq_time(map, cfg).ok().map(|e| e.value),
        mean_p1_freq_time(map, cfg).ok().map(|e| e.value),
        first
            .and_then(|row| ensemble_estimator(row, &map.grid, cfg).ok())
            .map(|e| e.value),
        first
            .and_then(|row| row[centre])
            .and_then(|p| p1_to_t1(p, cfg.tau).ok()),
    ]
}
