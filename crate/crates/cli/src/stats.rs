use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Subcommand;
use serde::Serialize;
use tlsdyn_core::estimators::{mean_t1_over_time, p1_to_t1};
use tlsdyn_core::stats::{
    adf_test, analytic_r_curve, autocorrelation, ergodicity_partition_test_with,
    frequency_autocorrelation, moments_and_normality, pearson_r, r_vs_window,
    simulate_r_convergence, AdfResult, ErgodicityReport, LagRule, MomentsReport, PartitionScheme,
    RSimConfig,
};
use tlsdyn_core::{EstimatorConfig, Manifest, SeedStream, T1TimeSeries};

use crate::output::{csv_bytes, fmt_opt, load_maps, load_t1, resolve_dir, Output};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlation between two columns of an estimates table.
    Pearson {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long, default_value = "mean_t1_time_us")]
        x: String,
        #[arg(long, default_value = "mean_t1_freq_time_us")]
        y: String,
    },
    /// Monte-Carlo ⟨R⟩ against the number of averaged measurements.
    Rsim {
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        #[arg(long, default_value_t = RSimConfig::default().n_qubits)]
        n_qubits: usize,
        #[arg(long, default_value_t = RSimConfig::default().alpha)]
        alpha: f64,
        #[arg(long, default_value_t = RSimConfig::default().beta_std)]
        beta_std: f64,
        #[arg(long, default_value_t = RSimConfig::default().mean_t1)]
        mean_t1: f64,
        #[arg(long, default_value_t = RSimConfig::default().n_devices)]
        n_devices: usize,
        #[arg(long, default_value_t = RSimConfig::default().n_max)]
        n_max: usize,
    },
    /// Autocorrelation of each T1 series, or along frequency for one slice
    /// of a map.
    Acf {
        #[arg(long, conflicts_with = "map", required_unless_present = "map")]
        t1: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
        /// Map slice to correlate.
        #[arg(long, default_value_t = 0)]
        slice: usize,
        #[arg(long, default_value_t = 50.0)]
        tau: f64,
    },
    /// Augmented Dickey-Fuller test per T1 series.
    Adf {
        #[arg(long)]
        t1: PathBuf,
        /// Include a linear trend term.
        #[arg(long)]
        trend: bool,
        /// Fixed lag count instead of BIC selection.
        #[arg(long)]
        lags: Option<usize>,
    },
    /// Moments and normality tests per T1 series.
    Moments {
        #[arg(long)]
        t1: PathBuf,
    },
    /// Partition ergodicity test per T1 series.
    Ergodicity {
        #[arg(long)]
        t1: PathBuf,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 40)]
        k_max: usize,
        #[arg(long, default_value = "interleaved", value_parser = ["interleaved", "contiguous"])]
        scheme: String,
    },
    /// Correlation with the long-term mean over a grid of windows and
    /// slice counts.
    Rsurface {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        t1: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10")]
        delta_omega: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20")]
        n_slices: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        chi: f64,
        #[arg(long, default_value_t = 50.0)]
        tau: f64,
    },
}

pub fn run(cmd: Command, out: Option<PathBuf>) -> Result<()> {
    let dir = resolve_dir(out, None);
    match cmd {
        Command::Pearson { estimates, x, y } => {
            let mut o = Output::new(dir, Manifest::new(None, None))?;
            o.input("estimates", &estimates)?;
            o.param("x", &x);
            o.param("y", &y);
            let (xs, ys) = paired_columns(&estimates, &x, &y)?;
            let r = pearson_r(&xs, &ys)?;
            o.finish_report("pearson.json", r)
        }
        Command::Rsim {
            seed,
            n_qubits,
            alpha,
            beta_std,
            mean_t1,
            n_devices,
            n_max,
        } => {
            let cfg = RSimConfig {
                n_qubits,
                alpha,
                beta_std,
                mean_t1,
                n_devices,
                n_max,
            };
            let seeds = SeedStream::new(seed);
            let mc = simulate_r_convergence(&cfg, seeds)?;
            let an = analytic_r_curve(&cfg, seeds)?;
            let mut o = Output::new(dir, Manifest::new(Some(seed), None))?;
            o.param("rsim", cfg);
            let rows = (0..mc.n.len()).map(|i| {
                [
                    mc.n[i].to_string(),
                    mc.mean_r[i].to_string(),
                    mc.std_r[i].to_string(),
                    an.mean_r[i].to_string(),
                ]
            });
            o.write(
                "rsim.csv",
                &csv_bytes(&["n", "mean_r", "std_r", "analytic_r"], rows)?,
            )?;
            #[derive(Serialize)]
            struct Curves {
                monte_carlo: tlsdyn_core::stats::RCurve,
                analytic: tlsdyn_core::stats::RCurve,
            }
            o.finish_report(
                "rsim.json",
                Curves {
                    monte_carlo: mc,
                    analytic: an,
                },
            )
        }
        Command::Acf {
            t1,
            map,
            max_lag,
            slice,
            tau,
        } => {
            let mut o = Output::new(dir, Manifest::new(None, None))?;
            o.param("max_lag", max_lag);
            let mut rows = Vec::new();
            let mut decorrelation = Vec::new();
            if let Some(t1) = t1 {
                o.input("t1", &t1)?;
                for s in load_t1(&t1)? {
                    let v = s.values();
                    let lag = max_lag.min(v.len().saturating_sub(1));
                    let acf = autocorrelation(&v, lag)
                        .with_context(|| format!("qubit {}", s.qubit_id))?;
                    rows.extend(
                        acf.iter()
                            .enumerate()
                            .map(|(k, a)| [s.qubit_id.clone(), k.to_string(), a.to_string()]),
                    );
                }
                o.write("acf.csv", &csv_bytes(&["qubit_id", "lag", "acf"], rows)?)?;
            } else if let Some(map) = map {
                o.input("map", &map)?;
                o.param("slice", slice);
                o.param("tau_us", tau);
                for m in load_maps(&map, tau)? {
                    let row =
                        m.p1.get(slice)
                            .ok_or_else(|| anyhow!("qubit {}: no slice {slice}", m.qubit_id))?;
                    let mut shifts = Vec::new();
                    let mut t1s = Vec::new();
                    for (&s, p) in m.grid.shifts.iter().zip(row).filter(|(&s, _)| s >= 0.0) {
                        let p = p.ok_or_else(|| {
                            anyhow!("qubit {}: missing cell at {s} MHz", m.qubit_id)
                        })?;
                        shifts.push(s);
                        t1s.push(
                            p1_to_t1(p, tau)
                                .with_context(|| format!("qubit {} at {s} MHz", m.qubit_id))?,
                        );
                    }
                    let lag = max_lag.min(t1s.len().saturating_sub(1));
                    let f = frequency_autocorrelation(&shifts, &t1s, lag)
                        .with_context(|| format!("qubit {}", m.qubit_id))?;
                    rows.extend(
                        f.lags_mhz
                            .iter()
                            .zip(&f.acf)
                            .map(|(l, a)| [m.qubit_id.clone(), l.to_string(), a.to_string()]),
                    );
                    decorrelation.push((m.qubit_id.clone(), f.decorrelation_lag_mhz));
                }
                o.write(
                    "acf.csv",
                    &csv_bytes(&["qubit_id", "lag_mhz", "acf"], rows)?,
                )?;
                o.param("decorrelation_lag_mhz", decorrelation);
            }
            o.finish("acf.manifest.json")
        }
        Command::Adf { t1, trend, lags } => {
            let mut o = Output::new(dir, Manifest::new(None, None))?;
            o.input("t1", &t1)?;
            o.param("trend", trend);
            o.param("lags", lags);
            let rule = lags.map_or(LagRule::default(), LagRule::Fixed);
            let results = per_qubit(&t1, |v| adf_test(v, trend, rule))?
                .into_iter()
                .map(|(qubit_id, result)| AdfRow { qubit_id, result })
                .collect::<Vec<_>>();
            o.finish_report("adf.json", results)
        }
        Command::Moments { t1 } => {
            let mut o = Output::new(dir, Manifest::new(None, None))?;
            o.input("t1", &t1)?;
            let results = per_qubit(&t1, moments_and_normality)?
                .into_iter()
                .map(|(qubit_id, result)| MomentsRow { qubit_id, result })
                .collect::<Vec<_>>();
            o.finish_report("moments.json", results)
        }
        Command::Ergodicity {
            t1,
            k_min,
            k_max,
            scheme,
        } => {
            let scheme = if scheme == "contiguous" {
                PartitionScheme::Contiguous
            } else {
                PartitionScheme::Interleaved
            };
            let mut o = Output::new(dir, Manifest::new(None, None))?;
            o.input("t1", &t1)?;
            o.param("k_min", k_min);
            o.param("k_max", k_max);
            o.param("scheme", scheme);
            let results = per_qubit(&t1, |v| {
                ergodicity_partition_test_with(v, k_min..=k_max, scheme)
            })?;
            let mut rows = Vec::new();
            for (id, report) in &results {
                for p in &report.partitions {
                    for (i, (m, pv)) in p.ensemble_means.iter().zip(&p.t_pvalues).enumerate() {
                        rows.push([
                            id.clone(),
                            p.k.to_string(),
                            i.to_string(),
                            m.to_string(),
                            pv.to_string(),
                        ]);
                    }
                }
            }
            o.write(
                "ergodicity.csv",
                &csv_bytes(
                    &["qubit_id", "k", "index", "ensemble_mean", "p_value"],
                    rows,
                )?,
            )?;
            let results: Vec<ErgodicityRow> = results
                .into_iter()
                .map(|(qubit_id, result)| ErgodicityRow { qubit_id, result })
                .collect();
            o.finish_report("ergodicity.json", results)
        }
        Command::Rsurface {
            map,
            t1,
            delta_omega,
            n_slices,
            chi,
            tau,
        } => {
            let maps = load_maps(&map, tau)?;
            let series = load_t1(&t1)?;
            let long = maps
                .iter()
                .map(|m| {
                    let s = series
                        .iter()
                        .find(|s| s.qubit_id == m.qubit_id)
                        .ok_or_else(|| anyhow!("qubit {} has no T1 series", m.qubit_id))?;
                    Ok(mean_t1_over_time(s)?.value)
                })
                .collect::<Result<Vec<f64>>>()?;
            let base = EstimatorConfig {
                chi,
                tau,
                ..EstimatorConfig::default()
            };
            let surface = r_vs_window(&maps, &long, &delta_omega, &n_slices, &base)?;
            let mut o = Output::new(dir, Manifest::new(None, None))?;
            o.input("map", &map)?;
            o.input("t1", &t1)?;
            o.param("chi", chi);
            o.param("tau_us", tau);
            let rows = surface.cells.iter().map(|c| {
                [
                    c.delta_omega.to_string(),
                    c.n_slices.to_string(),
                    fmt_opt(c.r),
                ]
            });
            o.write(
                "rsurface.csv",
                &csv_bytes(&["delta_omega_mhz", "n_slices", "r"], rows)?,
            )?;
            o.finish_report("rsurface.json", surface)
        }
    }
}

#[derive(Serialize)]
struct AdfRow {
    qubit_id: String,
    #[serde(flatten)]
    result: AdfResult,
}

#[derive(Serialize)]
struct MomentsRow {
    qubit_id: String,
    #[serde(flatten)]
    result: MomentsReport,
}

#[derive(Serialize)]
struct ErgodicityRow {
    qubit_id: String,
    #[serde(flatten)]
    result: ErgodicityReport,
}

fn per_qubit<T>(
    t1: &Path,
    f: impl Fn(&[f64]) -> tlsdyn_core::Result<T>,
) -> Result<Vec<(String, T)>> {
    load_t1(t1)?
        .into_iter()
        .map(|s: T1TimeSeries| {
            let r = f(&s.values()).with_context(|| format!("qubit {}", s.qubit_id))?;
            Ok((s.qubit_id, r))
        })
        .collect()
}

/// Rows of an estimates table where both columns hold a value.
fn paired_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::Reader::from_reader(f);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: missing column {name}", path.display()))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let (a, b) = (rec[ix].trim(), rec[iy].trim());
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .with_context(|| format!("`{s}` is not a number"))
        };
        xs.push(parse(a)?);
        ys.push(parse(b)?);
    }
    if xs.len() < 3 {
        bail!(
            "need at least 3 rows with both {x} and {y}, found {}",
            xs.len()
        );
    }
    Ok((xs, ys))
}
