use std::path::PathBuf;

use anyhow::{Context, Result};
use tlsdyn_core::io::{map_csv_bytes, t1_csv_bytes};
use tlsdyn_core::protocol::run_campaign;
use tlsdyn_core::{CampaignConfig, Manifest};

use crate::output::{resolve_dir, Output};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Campaign config (JSON).
    config: PathBuf,
}

pub fn run(args: Args, out: Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = CampaignConfig::from_json(&text)
        .with_context(|| format!("invalid config {}", args.config.display()))?;
    let config_bytes = cfg.canonical_json();

    let qubits = cfg.qubits();
    let result = run_campaign(&qubits, &cfg.plan()?, cfg.campaign_seeds())?;

    let dir = resolve_dir(out, cfg.output_dir.as_deref());
    let mut o = Output::new(
        dir,
        Manifest::new(Some(cfg.master_seed), Some(&config_bytes)),
    )?;
    o.write("config.json", &config_bytes)?;
    o.write("t1.csv", &t1_csv_bytes(&result.t1_series))?;
    o.write("map.csv", &map_csv_bytes(&result.maps))?;
    o.param("qubits", qubits.len());
    o.param(
        "scan_slices",
        result.maps.first().map_or(0, |m| m.n_slices()),
    );
    o.finish("manifest.json")
}
