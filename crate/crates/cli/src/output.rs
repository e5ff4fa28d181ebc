use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tlsdyn_core::io::{read_map_csv, read_t1_csv, sha256_hex, write_atomic};
use tlsdyn_core::{Manifest, SpectroscopyMap, T1TimeSeries};

pub const OUT_DIR_ENV: &str = "TLSDYN_OUT_DIR";

pub fn resolve_dir(flag: Option<PathBuf>, from_config: Option<&str>) -> PathBuf {
    flag.or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    })
    .or_else(|| from_config.map(PathBuf::from))
    .unwrap_or_else(|| PathBuf::from("."))
}

/// Collects written files so the manifest can hash them.
pub struct Output {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl Output {
    pub fn new(dir: PathBuf, manifest: Manifest) -> Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, manifest })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.record(name, bytes);
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameter serialises");
        self.manifest.parameters.insert(key.to_string(), v);
    }

    /// Record an input file's hash alongside the parameters.
    pub fn input(&mut self, key: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.param(&format!("input_sha256.{key}"), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self, name: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, &self.manifest.to_json())
            .with_context(|| format!("writing {}", path.display()))
    }

    /// A JSON report with the manifest fields flattened in, written last.
    pub fn finish_report<T: Serialize>(self, name: &str, results: T) -> Result<()> {
        #[derive(Serialize)]
        struct Report<'a, T> {
            #[serde(flatten)]
            manifest: &'a Manifest,
            results: T,
        }
        let mut bytes = serde_json::to_vec_pretty(&Report {
            manifest: &self.manifest,
            results,
        })?;
        bytes.push(b'\n');
        let path = self.dir.join(name);
        write_atomic(&path, &bytes).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn load_t1(path: &Path) -> Result<Vec<T1TimeSeries>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_t1_csv(f).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_maps(path: &Path, tau: f64) -> Result<Vec<SpectroscopyMap>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_map_csv(f, tau).with_context(|| format!("parsing {}", path.display()))
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}
