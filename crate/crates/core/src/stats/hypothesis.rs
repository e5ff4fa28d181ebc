//! Two-sample Welch t-test and the Wald-Wolfowitz runs test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (va / na, vb / nb);
    if qa + qb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::FitFailure(e.to_string()))?;
    Ok(TTestResult {
        t,
        df,
        p_value: (2.0 * dist.sf(t.abs())).min(1.0),
    })
}

/// p-value of [`welch_t_test`].
pub fn t_test_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    welch_t_test(a, b).map(|r| r.p_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunsResult {
    pub runs: usize,
    pub n_above: usize,
    pub n_below: usize,
    pub z: f64,
    pub p_value: f64,
}

/// Runs above and below the median, normal approximation, two-sided.
/// Points equal to the median are dropped.
pub fn runs_test(x: &[f64]) -> Result<RunsResult> {
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let signs: Vec<bool> = x
        .iter()
        .filter(|&&v| v != median)
        .map(|&v| v > median)
        .collect();
    let n1 = signs.iter().filter(|&&s| s).count();
    let n2 = signs.len() - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::ZeroVariance);
    }
    let runs = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    let (a, b) = (n1 as f64, n2 as f64);
    let nn = a + b;
    let mean = 2.0 * a * b / nn + 1.0;
    let var = 2.0 * a * b * (2.0 * a * b - nn) / (nn * nn * (nn - 1.0));
    let z = if var > 0.0 {
        (runs as f64 - mean) / var.sqrt()
    } else {
        0.0
    };
    Ok(RunsResult {
        runs,
        n_above: n1,
        n_below: n2,
        z,
        p_value: 2.0 * Normal::standard().sf(z.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use crate::stats::adf::tests::lcg_uniforms;
    use rand_distr::{Distribution, Normal as NormalDist};

    #[test]
    fn welch_matches_scipy() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = lcg_uniforms(11, 40);
        let b: Vec<f64> = lcg_uniforms(12, 25).iter().map(|u| u * 1.5 + 0.2).collect();
        let r = welch_t_test(&a, &b).unwrap();
        assert!((r.t + 5.2918872883849).abs() < 1e-10);
        assert!((r.p_value / 6.794266928672549e-06 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.5, 0.2];
        assert_eq!(t_test_two_sample(&a, &a).unwrap(), 1.0);
        assert_eq!(
            t_test_two_sample(&[1.0, 1.0], &[2.0, 2.0]),
            Err(Error::ZeroVariance)
        );
    }

    #[test]
    fn power_and_size() {
        let n01 = NormalDist::new(0.0, 1.0).unwrap();
        let n51 = NormalDist::new(5.0, 1.0).unwrap();
        let mut rejects = 0;
        for s in 0..1000 {
            let mut rng = SeedStream::new(s).rng();
            let a: Vec<f64> = (0..50).map(|_| n01.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..50).map(|_| n01.sample(&mut rng)).collect();
            let c: Vec<f64> = (0..50).map(|_| n51.sample(&mut rng)).collect();
            rejects += usize::from(t_test_two_sample(&a, &b).unwrap() < 0.05);
            if s < 20 {
                assert!(t_test_two_sample(&a, &c).unwrap() < 1e-6);
            }
        }
        assert!((30..=70).contains(&rejects), "{rejects}");
    }

    #[test]
    fn runs_hand_example() {
        // Median 4.5; signs - - + + - + - + → 6 runs, n1 = n2 = 4.
        let r = runs_test(&[1.0, 2.0, 7.0, 8.0, 3.0, 6.0, 4.0, 5.0]).unwrap();
        assert_eq!((r.runs, r.n_above, r.n_below), (6, 4, 4));
        let var: f64 = 2.0 * 16.0 * (32.0 - 8.0) / (64.0 * 7.0);
        assert!((r.z - 1.0 / var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trend_has_two_runs() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let r = runs_test(&x).unwrap();
        assert_eq!(r.runs, 2);
        assert!(r.p_value < 1e-6);
    }
}
