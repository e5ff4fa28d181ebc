//! Acceptance criteria. Runs as a plain binary so every criterion prints a
//! PASS/FAIL line; exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use tlsdyn_core::estimators::{
    ensemble_estimator, mean_p1_freq_time, mean_p1_over_time, mean_t1_freq_time, mean_t1_over_time,
    moving_average,
};
use tlsdyn_core::io::{map_csv_bytes, t1_csv_bytes};
use tlsdyn_core::model::{amplitude_for_shift, stark_shift};
use tlsdyn_core::protocol::{ramsey_calibrate, ramsey_delays, run_campaign};
use tlsdyn_core::stats::{
    adf_test, analytic_r_curve, autocorrelation, ergodicity_partition_test,
    frequency_autocorrelation, pearson_r, simulate_r_convergence, LagRule, RSimConfig,
};
use tlsdyn_core::tracking::diffusivities;
use tlsdyn_core::{
    CampaignPlan, ClipPolicy, EstimatorConfig, QubitModel, ScanGrid, SeedStream, SpectroscopyMap,
    StarkTone, SyntheticDevice, T1Entry, T1TimeSeries,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{} [{:.2?}]", o.detail, elapsed);
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {:?}", o.detail, limit);
        }
    }
    o
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn stark_map() -> Outcome {
    let exact = -340.0 * 900.0 / (2.0 * -50.0 * -390.0);
    let shift = stark_shift(-340.0, 30.0, -50.0).unwrap();
    let analytic_ok = ((shift - exact) / exact).abs() <= 1e-9 && (shift - -7.846).abs() < 5e-4;

    let qubit = QubitModel {
        id: "q".into(),
        omega_q: 5.0,
        delta_q: -340.0,
        gamma_0: 0.01,
        bath: vec![],
    };
    let delays = ramsey_delays(128, 2.0);
    let mut worst: f64 = 0.0;
    for (i, target) in (1..=20).flat_map(|m| [-(m as f64), m as f64]).enumerate() {
        let delta_qs = if target < 0.0 { -50.0 } else { 50.0 };
        let amp = amplitude_for_shift(target, qubit.delta_q, delta_qs).unwrap();
        let tone = StarkTone::new(delta_qs, amp);
        let truth = tone.shift_on(&qubit).unwrap();
        let est = ramsey_calibrate(
            &qubit,
            &tone,
            &delays,
            10_000,
            &mut SeedStream::new(100 + i as u64).rng(),
        )
        .unwrap();
        worst = worst.max((est.shift / truth - 1.0).abs());
    }
    outcome(
        analytic_ok && worst <= 0.02,
        format!("shift = {shift:.6} MHz; worst Ramsey relative error over |shift| in 1..=20 MHz = {worst:.2e} (limit 2e-2)"),
    )
}

fn r_convergence() -> Outcome {
    let cfg = RSimConfig::default();
    let seeds = SeedStream::new(2021);
    let curve = simulate_r_convergence(&cfg, seeds).unwrap();
    let (r1, r10, r160) = (
        curve.at(1).unwrap(),
        curve.at(10).unwrap(),
        curve.at(160).unwrap(),
    );
    let band = (0.75..=0.90).contains(&r10);
    let ordered = r1 < r10 && r10 < r160;

    let four = RSimConfig { n_qubits: 4, ..cfg };
    let mc = simulate_r_convergence(&four, seeds).unwrap();
    let an = analytic_r_curve(&four, seeds).unwrap();
    let (worst_i, worst_z) = (0..mc.n.len())
        .map(|i| (i, ((mc.mean_r[i] - an.mean_r[i]) / mc.stderr(i)).abs()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    outcome(
        band && ordered && worst_z <= 2.0,
        format!(
            "R(1) = {r1:.3}, R(10) = {r10:.3} (band 0.75..0.90), R(160) = {r160:.3}; \
             4-qubit analytic vs Monte Carlo worst |z| = {worst_z:.2} at N = {} (limit 2)",
            mc.n[worst_i]
        ),
    )
}

fn diffusivity_table() -> Outcome {
    // (σ MHz, D_K, D_1d) as printed, t = 175 hr.
    let rows = [
        (0.65, 2.4e-2, 1.1e-3),
        (0.55, 2.6e-2, 0.8e-4),
        (1.06, 3.9e-2, 3.1e-3),
        (0.16, 6.1e-3, 7.3e-5),
        (0.23, 8.6e-3, 1.4e-4),
        (1.03, 3.1e-3, 3.0e-3),
        (0.78, 3.0e-2, 1.7e-3),
    ];
    let mut misses = Vec::new();
    let mut identity_ok = true;
    for (i, &(sigma, dk, d1)) in rows.iter().enumerate() {
        let d = diffusivities(sigma, 175.0).unwrap();
        identity_ok &= (d.d_1d - 2.0 * d.d_k * d.d_k).abs() <= 1e-12 * d.d_1d;
        if (d.d_k / dk - 1.0).abs() > 0.05 {
            misses.push(format!("row {} D_K {:.3e} vs {dk:.1e}", i + 1, d.d_k));
        }
        if (d.d_1d / d1 - 1.0).abs() > 0.15 {
            misses.push(format!("row {} D_1d {:.3e} vs {d1:.1e}", i + 1, d.d_1d));
        }
    }
    let detail = if misses.is_empty() {
        "all 7 rows within 5% / 15%".to_string()
    } else {
        format!("mismatches: {}", misses.join("; "))
    };
    outcome(
        misses.is_empty() && identity_ok,
        format!("{detail}; d_1d = 2 d_k^2 holds: {identity_ok}"),
    )
}

fn normal_series(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).rng();
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn adf_calibration() -> Outcome {
    let rule = LagRule::default();
    let mut walk_accept = 0;
    let mut noise_reject = 0;
    for s in 0..1000u64 {
        let steps = normal_series(10_000 + s, 250);
        let walk: Vec<f64> = steps
            .iter()
            .scan(0.0, |acc, z| {
                *acc += z;
                Some(*acc)
            })
            .collect();
        if adf_test(&walk, false, rule).unwrap().p_value >= 0.05 {
            walk_accept += 1;
        }
        let noise = normal_series(20_000 + s, 250);
        if adf_test(&noise, false, rule).unwrap().p_value < 0.05 {
            noise_reject += 1;
        }
    }

    let device = SyntheticDevice::default().generate(SeedStream::new(4).child(0));
    let plan = CampaignPlan {
        schedule: tlsdyn_core::Schedule {
            scan_count: 0,
            ..Default::default()
        },
        ..Default::default()
    };
    let result = run_campaign(&device, &plan, SeedStream::new(4).child(1)).unwrap();
    let worst_p = result
        .t1_series
        .iter()
        .map(|s| adf_test(&s.values(), false, rule).unwrap().p_value)
        .fold(0.0, f64::max);
    outcome(
        walk_accept >= 900 && noise_reject >= 900 && worst_p < 0.01,
        format!(
            "random walks accepted {walk_accept}/1000, white noise rejected {noise_reject}/1000, \
             simulated T1 series worst p = {worst_p:.2e} over {} qubits",
            result.t1_series.len()
        ),
    )
}

fn estimator_superiority() -> Outcome {
    let dev = SyntheticDevice::default();
    let plan = CampaignPlan {
        schedule: tlsdyn_core::Schedule {
            scan_count: 1,
            ..Default::default()
        },
        ..Default::default()
    };
    let cfg = EstimatorConfig {
        delta_omega: 5.0,
        n_slices: 1,
        ..Default::default()
    };
    let campaigns = 100u64;
    let (mut r_scan, mut r_single, mut used) = (0.0, 0.0, 0);
    for c in 0..campaigns {
        let seeds = SeedStream::new(50_000 + c);
        let device = dev.generate(seeds.child(0));
        let res = run_campaign(&device, &plan, seeds.child(1)).unwrap();
        let long: Vec<f64> = res
            .t1_series
            .iter()
            .map(|s| mean_t1_over_time(s).unwrap().value)
            .collect();
        let scan: Vec<f64> = res
            .maps
            .iter()
            .map(|m| mean_t1_freq_time(m, &cfg).unwrap().value)
            .collect();
        // The T1 taken on the day of the scan.
        let single: Option<Vec<f64>> = res.t1_series.iter().map(|s| s.entries[0].t1_us).collect();
        let Some(single) = single else { continue };
        r_scan += pearson_r(&scan, &long).unwrap().r;
        r_single += pearson_r(&single, &long).unwrap().r;
        used += 1;
    }
    r_scan /= used as f64;
    r_single /= used as f64;
    outcome(
        used >= 100 && r_scan > r_single,
        format!("{used} campaigns: mean R(scan, Δω = 5 MHz) = {r_scan:.3} vs mean R(single T1) = {r_single:.3}"),
    )
}

fn ergodicity_machinery() -> Outcome {
    let (mut rejected, mut total) = (0usize, 0usize);
    for s in 0..1000u64 {
        let x = normal_series(30_000 + s, 250);
        let report = ergodicity_partition_test(&x, 2..=40).unwrap();
        for p in &report.partitions {
            rejected += p.t_pvalues.iter().filter(|&&v| v < 0.05).count();
            total += p.t_pvalues.len();
        }
    }
    let frr = rejected as f64 / total as f64;

    let drift: Vec<f64> = (0..250).map(|i| i as f64).collect();
    let report = ergodicity_partition_test(&drift, 2..=40).unwrap();
    let extremes_fail = report
        .partitions
        .iter()
        .all(|p| p.t_pvalues[0] < 0.05 && p.t_pvalues[p.m - 1] < 0.05);
    let flagged: usize = report
        .partitions
        .iter()
        .map(|p| p.dependent_subsets.len())
        .sum();
    let subsets: usize = report.partitions.iter().map(|p| p.k).sum();
    outcome(
        (0.03..=0.07).contains(&frr) && extremes_fail,
        format!(
            "i.i.d. false-rejection rate {frr:.4} over {total} tests (band 0.03..0.07); \
             drift rejected at extreme indices for k = 2..40: {extremes_fail}; runs test flags {flagged}/{subsets} drift subsets"
        ),
    )
}

fn random_map(rng: &mut impl Rng, id: &str) -> SpectroscopyMap {
    let chi = [0.05, 0.1, 0.25][rng.random_range(0..3)];
    let ppd = rng.random_range(20..80);
    let grid = ScanGrid::symmetric(
        chi * (ppd - 1) as f64,
        ppd,
        50.0,
        rng.random_range(100..2000),
    )
    .unwrap();
    let mut map = SpectroscopyMap::new(id, grid.clone());
    for t in 0..rng.random_range(1..6) {
        let row = (0..grid.len())
            .map(|_| {
                let u: f64 = rng.random();
                if u < 0.05 {
                    None
                } else if u < 0.08 {
                    Some([0.0, 1.0][rng.random_range(0..2)])
                } else {
                    Some(rng.random_range(0.05..0.95))
                }
            })
            .collect();
        map.push_row(3.5 * t as f64, row).unwrap();
    }
    map
}

/// Summation oracles written independently of the library code paths.
mod oracle {
    pub fn t1(p: f64, tau: f64) -> Option<f64> {
        if p > 0.0 && p < 1.0 {
            Some(-tau / p.ln())
        } else {
            None
        }
    }

    pub fn mean(v: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        s / v.len() as f64
    }

    pub fn window_cells(
        shifts: &[f64],
        rows: &[Vec<Option<f64>>],
        dw: f64,
        n: usize,
    ) -> Vec<Option<f64>> {
        let mut out = Vec::new();
        for row in rows.iter().take(n) {
            for (j, s) in shifts.iter().enumerate() {
                if s.abs() <= dw + 1e-9 {
                    out.push(row[j]);
                }
            }
        }
        out
    }

    pub fn acf(x: &[f64], max_lag: usize) -> Vec<f64> {
        let m = mean(x);
        let mut c0 = 0.0;
        for v in x {
            c0 += (v - m) * (v - m);
        }
        let mut out = Vec::new();
        for k in 0..=max_lag {
            let mut c = 0.0;
            for i in k..x.len() {
                c += (x[i] - m) * (x[i - k] - m);
            }
            out.push(c / c0);
        }
        out
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = SeedStream::new(77).rng();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok && !failures.iter().any(|f| f == name) {
            failures.push(name.to_string());
        }
    };
    for _ in 0..100 {
        let map = random_map(&mut rng, "Q");
        let grid = &map.grid;
        let chi = grid.shifts[1] - grid.shifts[0];
        let max_k = ((grid.span() / chi) + 1e-9).floor() as usize;
        let k = rng.random_range(0..=max_k);
        let dw = k as f64 * chi;
        let n = rng.random_range(1..=map.n_slices());
        let cfg = EstimatorConfig {
            delta_omega: dw,
            chi,
            n_slices: n,
            tau: 50.0,
            clip: ClipPolicy::Exclude,
        };
        let cells = oracle::window_cells(&grid.shifts, &map.p1, dw, n);

        let p1s: Vec<f64> = cells.iter().flatten().copied().collect();
        match mean_p1_freq_time(&map, &cfg) {
            Ok(r) => check(
                "mean_p1_freq_time",
                !p1s.is_empty() && close(r.value, oracle::mean(&p1s), 1e-12),
            ),
            Err(_) => check("mean_p1_freq_time", p1s.is_empty()),
        }
        let t1s: Vec<f64> = cells
            .iter()
            .flatten()
            .filter_map(|&p| oracle::t1(p, 50.0))
            .collect();
        match mean_t1_freq_time(&map, &cfg) {
            Ok(r) => check(
                "mean_t1_freq_time",
                !t1s.is_empty() && close(r.value, oracle::mean(&t1s), 1e-12),
            ),
            Err(_) => check("mean_t1_freq_time", t1s.is_empty()),
        }

        let row = &map.p1[0];
        let mut picked = Vec::new();
        let samples = (2.0 * dw / chi + 1e-9).floor() as usize + 1;
        for j in 0..samples {
            let target = j as f64 * chi - dw;
            let idx = (0..grid.len())
                .min_by(|&a, &b| {
                    (grid.shifts[a] - target)
                        .abs()
                        .total_cmp(&(grid.shifts[b] - target).abs())
                })
                .unwrap();
            if let Some(t) = row[idx].and_then(|p| oracle::t1(p, 50.0)) {
                picked.push(t);
            }
        }
        match ensemble_estimator(row, grid, &cfg) {
            Ok(r) => check(
                "ensemble_estimator",
                !picked.is_empty() && close(r.value, oracle::mean(&picked), 1e-12),
            ),
            Err(_) => check("ensemble_estimator", picked.is_empty()),
        }

        let column: Vec<Option<f64>> = map.p1.iter().map(|r| r[grid.nearest(0.0)]).collect();
        let present: Vec<f64> = column.iter().flatten().copied().collect();
        match mean_p1_over_time(&column) {
            Ok(r) => check(
                "mean_p1_over_time",
                !present.is_empty() && close(r.value, oracle::mean(&present), 1e-12),
            ),
            Err(_) => check("mean_p1_over_time", present.is_empty()),
        }

        let len = rng.random_range(2..300);
        let series = T1TimeSeries {
            qubit_id: "Q".into(),
            entries: (0..len)
                .map(|d| T1Entry {
                    time_hr: 24.0 * d as f64,
                    t1_us: (rng.random::<f64>() > 0.05).then(|| rng.random_range(5.0..300.0)),
                    stderr_us: None,
                })
                .collect(),
        };
        let vals: Vec<f64> = series.entries.iter().filter_map(|e| e.t1_us).collect();
        match mean_t1_over_time(&series) {
            Ok(r) => check(
                "mean_t1_over_time",
                !vals.is_empty() && close(r.value, oracle::mean(&vals), 1e-12),
            ),
            Err(_) => check("mean_t1_over_time", vals.is_empty()),
        }

        let x: Vec<f64> = (0..rng.random_range(10..400))
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        let upto = rng.random_range(1..=x.len());
        let ma = moving_average(&x, upto).unwrap();
        check(
            "moving_average",
            ma.len() == upto && (0..upto).all(|i| close(ma[i], oracle::mean(&x[..=i]), 1e-12)),
        );

        let max_lag = rng.random_range(0..x.len());
        let acf = autocorrelation(&x, max_lag).unwrap();
        let brute = oracle::acf(&x, max_lag);
        check(
            "autocorrelation",
            acf.iter().zip(&brute).all(|(a, b)| (a - b).abs() <= 1e-12),
        );

        let half: Vec<f64> = grid.shifts.iter().copied().filter(|&s| s >= 0.0).collect();
        let vals: Vec<f64> = (0..half.len())
            .map(|_| rng.random_range(10.0..200.0))
            .collect();
        let lag = rng.random_range(0..half.len());
        let f = frequency_autocorrelation(&half, &vals, lag).unwrap();
        let brute = oracle::acf(&vals, lag);
        check(
            "frequency_autocorrelation",
            f.acf
                .iter()
                .zip(&brute)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
                && f.lags_mhz
                    .iter()
                    .enumerate()
                    .all(|(i, l)| close(*l, i as f64 * chi, 1e-12)),
        );
    }
    let detail = if failures.is_empty() {
        "8 implementations x 100 random inputs agree to 1e-12".to_string()
    } else {
        format!("disagreements in: {}", failures.join(", "))
    };
    outcome(failures.is_empty(), detail)
}

fn determinism() -> Outcome {
    let device = SyntheticDevice {
        n_qubits: 6,
        ..Default::default()
    }
    .generate(SeedStream::new(9).child(0));
    let plan = CampaignPlan {
        schedule: tlsdyn_core::Schedule {
            t1_days: 12,
            scan_count: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let r = run_campaign(&device, &plan, SeedStream::new(9).child(1)).unwrap();
            (t1_csv_bytes(&r.t1_series), map_csv_bytes(&r.maps))
        })
    };
    let serial = run(1);
    let parallel = run(4);
    let again = run(4);
    outcome(
        serial == parallel && parallel == again,
        format!(
            "T1 CSV {} bytes, map CSV {} bytes; 1-thread vs 4-thread vs rerun identical: {}",
            serial.0.len(),
            serial.1.len(),
            serial == parallel && parallel == again
        ),
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("stark map", Some(Duration::from_secs(5)), stark_map),
        (
            "R convergence",
            Some(Duration::from_secs(60)),
            r_convergence,
        ),
        ("diffusivity table", None, diffusivity_table),
        (
            "ADF calibration",
            Some(Duration::from_secs(60)),
            adf_calibration,
        ),
        ("estimator superiority", None, estimator_superiority),
        ("ergodicity machinery", None, ergodicity_machinery),
        ("oracle equivalence", None, oracle_equivalence),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let o = timed(limit, run);
        println!(
            "criterion {} ({name}): {} - {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} of 8 acceptance criteria failed");
        std::process::exit(1);
    }
}
