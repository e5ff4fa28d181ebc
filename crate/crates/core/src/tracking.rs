//! TLS feature extraction from spectroscopy maps: thresholded minima,
//! position histograms, Gaussian linewidth fits and diffusivities.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::protocol::SpectroscopyMap;

pub const DEFAULT_P_THRESHOLD: f64 = 0.315;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackConfig {
    /// Minima must lie strictly below this P1.
    pub p_threshold: f64,
    pub min_prominence: f64,
    /// Feature windows `(lo, hi)` in MHz. Empty means auto-cluster.
    pub windows: Vec<(f64, f64)>,
    /// Auto-clustering splits where neighbouring positions differ by more.
    pub cluster_gap: f64,
    /// Histogram bin width (MHz); `None` uses twice the grid spacing.
    pub bin_width: Option<f64>,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            p_threshold: DEFAULT_P_THRESHOLD,
            min_prominence: 0.02,
            windows: Vec::new(),
            cluster_gap: 2.0,
            bin_width: None,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(invalid("p_threshold", "must lie in (0, 1)"));
        }
        if !(self.min_prominence >= 0.0) {
            return Err(invalid("min_prominence", "must be >= 0"));
        }
        if self.windows.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("windows", "each window needs lo < hi"));
        }
        if !(self.cluster_gap > 0.0) {
            return Err(invalid("cluster_gap", "must be > 0"));
        }
        if self.bin_width.is_some_and(|w| !(w > 0.0)) {
            return Err(invalid("bin_width", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub shift: f64,
    pub p1: f64,
}

/// Local minima of `row` strictly below the threshold with at least
/// `min_prominence` depth, sorted by shift.
///
/// Endpoints are candidates. A flat run of equal values counts once, at its
/// centre. Prominence is the smaller of the two highest points crossed
/// before reaching a strictly lower value on each side; a side that reaches
/// the row edge first does not limit it.
pub fn extract_minima(shifts: &[f64], row: &[f64], cfg: &TrackConfig) -> Result<Vec<Feature>> {
    if shifts.len() != row.len() {
        return Err(Error::LengthMismatch {
            left: shifts.len(),
            right: row.len(),
        });
    }
    if row.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: row.len(),
        });
    }
    // Runs of equal values: (first index, last index, value).
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in row.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.2 == v => r.1 = i,
            _ => runs.push((i, i, v)),
        }
    }
    if runs.len() < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (r, &(start, end, v)) in runs.iter().enumerate() {
        let left_higher = r == 0 || runs[r - 1].2 > v;
        let right_higher = r + 1 == runs.len() || runs[r + 1].2 > v;
        if !(left_higher && right_higher) || !(v < cfg.p_threshold) {
            continue;
        }
        let left = side_height(runs[..r].iter().rev().map(|x| x.2), v);
        let right = side_height(runs[r + 1..].iter().map(|x| x.2), v);
        if left.min(right) - v >= cfg.min_prominence {
            let c = (start + end) / 2;
            out.push(Feature {
                shift: shifts[c],
                p1: v,
            });
        }
    }
    out.sort_by(|a, b| a.shift.total_cmp(&b.shift));
    Ok(out)
}

fn side_height(values: impl Iterator<Item = f64>, floor: f64) -> f64 {
    let mut peak = floor;
    for v in values {
        if v < floor {
            return peak;
        }
        peak = peak.max(v);
    }
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceFeatures {
    pub time: f64,
    pub features: Vec<Feature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin centres (MHz).
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub bin_width: f64,
}

impl Histogram {
    /// Bins of `width` starting at `lo` and covering `hi`.
    pub fn build(values: &[f64], lo: f64, hi: f64, width: f64) -> Self {
        let n = (((hi - lo) / width).ceil() as usize).max(1);
        let mut counts = vec![0.0; n];
        for &v in values {
            let b = ((v - lo) / width).floor();
            if b >= 0.0 && (b as usize) < n {
                counts[b as usize] += 1.0;
            } else if v == hi {
                counts[n - 1] += 1.0;
            }
        }
        Self {
            centers: (0..n).map(|i| lo + (i as f64 + 0.5) * width).collect(),
            counts,
            bin_width: width,
        }
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub window: (f64, f64),
    pub positions: Vec<f64>,
    /// Mean P1 at the recorded minima; lower is deeper.
    pub mean_p1: f64,
    pub histogram: Histogram,
}

impl Cluster {
    pub fn center(&self) -> f64 {
        0.5 * (self.window.0 + self.window.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracks {
    pub slices: Vec<SliceFeatures>,
    pub clusters: Vec<Cluster>,
    /// Time spanned by the slices (hours).
    pub duration_hr: f64,
}

/// Extract minima from every slice and pool them into per-feature
/// histograms. Missing cells are dropped from a row before extraction.
pub fn accumulate_tracks(map: &SpectroscopyMap, cfg: &TrackConfig) -> Result<Tracks> {
    cfg.validate()?;
    if map.n_slices() == 0 {
        return Err(Error::Empty);
    }
    let mut slices = Vec::with_capacity(map.n_slices());
    for (t, row) in map.times.iter().zip(&map.p1) {
        let (shifts, vals): (Vec<f64>, Vec<f64>) = map
            .grid
            .shifts
            .iter()
            .zip(row)
            .filter_map(|(&s, p)| p.map(|p| (s, p)))
            .unzip();
        let features = if vals.len() >= 3 {
            extract_minima(&shifts, &vals, cfg)?
        } else {
            Vec::new()
        };
        slices.push(SliceFeatures { time: *t, features });
    }

    let spacing = map
        .grid
        .shifts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let width = cfg.bin_width.unwrap_or(2.0 * spacing);
    let mut pooled: Vec<Feature> = slices
        .iter()
        .flat_map(|s| s.features.iter().copied())
        .collect();
    pooled.sort_by(|a, b| a.shift.total_cmp(&b.shift));

    let groups: Vec<((f64, f64), Vec<Feature>)> = if cfg.windows.is_empty() {
        auto_cluster(&pooled, cfg.cluster_gap, width)
    } else {
        assign_to_windows(&pooled, &cfg.windows)
    };
    let clusters = groups
        .into_iter()
        .map(|(window, feats)| {
            let positions: Vec<f64> = feats.iter().map(|f| f.shift).collect();
            let mean_p1 = if feats.is_empty() {
                f64::NAN
            } else {
                feats.iter().map(|f| f.p1).sum::<f64>() / feats.len() as f64
            };
            Cluster {
                histogram: Histogram::build(&positions, window.0, window.1, width),
                window,
                positions,
                mean_p1,
            }
        })
        .collect();
    let duration_hr = match (map.times.first(), map.times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    Ok(Tracks {
        slices,
        clusters,
        duration_hr,
    })
}

fn auto_cluster(sorted: &[Feature], gap: f64, width: f64) -> Vec<((f64, f64), Vec<Feature>)> {
    let mut groups: Vec<Vec<Feature>> = Vec::new();
    for f in sorted {
        match groups.last_mut() {
            Some(g) if f.shift - g[g.len() - 1].shift <= gap => g.push(*f),
            _ => groups.push(vec![*f]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            // Pad by a few bins so the fit sees the tails go to zero.
            let pad = 3.0 * width;
            ((g[0].shift - pad, g[g.len() - 1].shift + pad), g)
        })
        .collect()
}

/// Each position goes to the window containing it whose centre is nearest;
/// ties go to the deeper window (lower mean P1 over its unambiguous members).
fn assign_to_windows(
    sorted: &[Feature],
    windows: &[(f64, f64)],
) -> Vec<((f64, f64), Vec<Feature>)> {
    let inside = |f: &Feature| -> Vec<usize> {
        windows
            .iter()
            .enumerate()
            .filter(|(_, (lo, hi))| *lo <= f.shift && f.shift <= *hi)
            .map(|(i, _)| i)
            .collect()
    };
    let mut depth_sum = vec![0.0; windows.len()];
    let mut depth_n = vec![0usize; windows.len()];
    for f in sorted {
        if let [only] = inside(f)[..] {
            depth_sum[only] += f.p1;
            depth_n[only] += 1;
        }
    }
    let depth: Vec<f64> = depth_sum
        .iter()
        .zip(&depth_n)
        .map(|(s, &n)| if n > 0 { s / n as f64 } else { f64::INFINITY })
        .collect();
    let mut groups: Vec<Vec<Feature>> = vec![Vec::new(); windows.len()];
    for f in sorted {
        let candidates = inside(f);
        let best = candidates.into_iter().min_by(|&a, &b| {
            let da = (f.shift - 0.5 * (windows[a].0 + windows[a].1)).abs();
            let db = (f.shift - 0.5 * (windows[b].0 + windows[b].1)).abs();
            da.total_cmp(&db).then(depth[a].total_cmp(&depth[b]))
        });
        if let Some(w) = best {
            groups[w].push(*f);
        }
    }
    windows.iter().copied().zip(groups).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthFit {
    pub mu: f64,
    pub sigma: f64,
    /// Peak count N of the fitted Gaussian.
    pub amplitude: f64,
    pub window: (f64, f64),
    pub duration_hr: f64,
    pub rms_residual: f64,
}

/// Least-squares fit of `N·exp(−(x − µ)²/(2σ²))` to the histogram bins whose
/// centres fall inside `window`.
pub fn fit_linewidth(
    hist: &Histogram,
    window: (f64, f64),
    duration_hr: f64,
) -> Result<LinewidthFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = hist
        .centers
        .iter()
        .zip(&hist.counts)
        .filter(|(x, _)| window.0 <= **x && **x <= window.1)
        .map(|(x, c)| (*x, *c))
        .unzip();
    let nonzero = ys.iter().filter(|&&c| c > 0.0).count();
    if nonzero < 5 {
        return Err(Error::FitFailure(format!(
            "need at least 5 non-empty bins in the window, found {nonzero}"
        )));
    }
    let total: f64 = ys.iter().sum();
    let mu0 = xs.iter().zip(&ys).map(|(x, c)| x * c).sum::<f64>() / total;
    let var0 = xs
        .iter()
        .zip(&ys)
        .map(|(x, c)| c * (x - mu0).powi(2))
        .sum::<f64>()
        / total;
    let sigma0 = var0.sqrt().max(hist.bin_width);
    let peak0 = ys.iter().copied().fold(0.0, f64::max);
    let model = |p: &[f64], x: f64, g: &mut [f64]| {
        let d = x - p[1];
        let s2 = p[2] * p[2];
        let e = (-d * d / (2.0 * s2)).exp();
        g[0] = e;
        g[1] = p[0] * e * d / s2;
        g[2] = p[0] * e * d * d / (s2 * p[2]);
        p[0] * e
    };
    let opts = LmOptions {
        max_iterations: 500,
        ..LmOptions::default()
    };
    let fit = levenberg_marquardt(&xs, &ys, &[peak0, mu0, sigma0], model, opts)?;
    let sigma = fit.params[2].abs();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::FitFailure(format!("fitted sigma = {sigma}")));
    }
    Ok(LinewidthFit {
        mu: fit.params[1],
        sigma,
        amplitude: fit.params[0],
        window,
        duration_hr,
        rms_residual: fit.rms_residual(xs.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityPair {
    /// σ = 2·D_K·√t (MHz·hr^−½).
    pub d_k: f64,
    /// σ = √(2·D_1d·t) (MHz²/hr).
    pub d_1d: f64,
}

pub fn diffusivities(sigma: f64, duration_hr: f64) -> Result<DiffusivityPair> {
    if !(sigma > 0.0) || !(duration_hr > 0.0) {
        return Err(invalid("sigma/duration", "both must be > 0"));
    }
    Ok(DiffusivityPair {
        d_k: sigma / (2.0 * duration_hr.sqrt()),
        d_1d: sigma * sigma / (2.0 * duration_hr),
    })
}
