use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    pub n_points: usize,
}

/// Pearson correlation coefficient of paired samples.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(PearsonResult {
        r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identities() {
        let x = [1.0, 2.0, 4.0, 8.0];
        assert!((pearson_r(&x, &x).unwrap().r - 1.0).abs() < 1e-15);
        let c: Vec<f64> = x.iter().map(|v| v - 3.75).collect();
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        assert!((pearson_r(&c, &neg).unwrap().r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(
            pearson_r(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::ZeroVariance)
        );
        assert!(matches!(
            pearson_r(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson_r(&[1.0], &[1.0]),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn frozen_value() {
        // numpy.corrcoef([1, 2, 3, 4, 5], [2, 1, 4, 3, 7])[0, 1]
        let r = pearson_r(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 7.0])
            .unwrap()
            .r;
        assert!((r - 0.8241633836921342).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            a in 0.1f64..10.0, b in -50.0f64..50.0, c in 0.1f64..10.0, d in -50.0f64..50.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let Ok(r0) = pearson_r(&x, &y) else { return Ok(()); };
            let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let y2: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let r1 = pearson_r(&x2, &y2).unwrap();
            prop_assert!((r0.r - r1.r).abs() < 1e-9);
            let yn: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert!((pearson_r(&x, &yn).unwrap().r + r0.r).abs() < 1e-12);
            prop_assert!(r0.r.abs() <= 1.0);
        }
    }
}
