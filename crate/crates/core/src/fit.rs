//! Small dense Levenberg-Marquardt solver for unweighted least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative parameter step falls below this.
    pub step_tolerance: f64,
    /// Stop when the relative change of the residual sum of squares falls below this.
    pub cost_tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-12,
            cost_tolerance: 1e-15,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// `s² (JᵀJ)⁻¹` with `s² = SSR / (n - p)`.
    pub covariance: DMatrix<f64>,
    pub ssr: f64,
    pub iterations: usize,
}

impl LmFit {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    pub fn rms_residual(&self, n: usize) -> f64 {
        (self.ssr / n as f64).sqrt()
    }
}

/// Fit `model(params, x, grad) -> value` to `(xs, ys)`. The model writes
/// ∂value/∂params into `grad`.
pub fn levenberg_marquardt<F>(
    xs: &[f64],
    ys: &[f64],
    init: &[f64],
    model: F,
    opts: LmOptions,
) -> Result<LmFit>
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let n = xs.len();
    let p = init.len();
    if ys.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: ys.len(),
        });
    }
    if n <= p {
        return Err(Error::TooShort {
            needed: p + 1,
            got: n,
        });
    }

    let mut params = init.to_vec();
    let mut grad = vec![0.0; p];
    let eval =
        |params: &[f64], jac: Option<&mut DMatrix<f64>>, grad: &mut [f64]| -> (DVector<f64>, f64) {
            let mut r = DVector::zeros(n);
            let mut jac = jac;
            for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
                let v = model(params, x, grad);
                r[i] = y - v;
                if let Some(j) = jac.as_deref_mut() {
                    for k in 0..p {
                        j[(i, k)] = grad[k];
                    }
                }
            }
            let ssr = r.norm_squared();
            (r, ssr)
        };

    let mut jac = DMatrix::zeros(n, p);
    let (mut resid, mut ssr) = eval(&params, Some(&mut jac), &mut grad);
    if !ssr.is_finite() {
        return Err(Error::FitFailure(
            "model is not finite at the initial guess".into(),
        ));
    }
    let mut lambda = opts.initial_lambda;
    let mut last_step = f64::INFINITY;

    for iter in 1..=opts.max_iterations {
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &resid;
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&jtr);
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (_, trial_ssr) = eval(&trial, None, &mut grad);
            if trial_ssr.is_finite() && trial_ssr <= ssr {
                let scale = params.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                last_step = step.norm() / scale;
                let rel_cost = (ssr - trial_ssr) / ssr.max(1e-300);
                params = trial;
                let (r, s) = eval(&params, Some(&mut jac), &mut grad);
                resid = r;
                ssr = s;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if last_step < opts.step_tolerance || rel_cost < opts.cost_tolerance || ssr == 0.0 {
                    return finish(params, &jac, ssr, n, iter);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: we are at a minimum to working precision.
            return finish(params, &jac, ssr, n, iter);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        rms_residual: (ssr / n as f64).sqrt(),
        last_step,
    })
}

fn finish(
    params: Vec<f64>,
    jac: &DMatrix<f64>,
    ssr: f64,
    n: usize,
    iterations: usize,
) -> Result<LmFit> {
    let p = params.len();
    let jtj = jac.transpose() * jac;
    let inv = jtj
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("singular Jacobian at the solution".into()))?;
    let s2 = ssr / (n - p) as f64;
    Ok(LmFit {
        params,
        covariance: inv * s2,
        ssr,
        iterations,
    })
}
