//! Small Levenberg-Marquardt least-squares solver with numeric Jacobians,
//! shared by the phase-voltage calibration and the dip fitter.

use nalgebra::{Cholesky, DMatrix, DVector};

pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            cost_tolerance: 1e-15,
            step_tolerance: 1e-13,
        }
    }
}

pub(crate) struct LmFit {
    pub params: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub cost: f64,
    /// Row-major k-by-k parameter covariance, when the normal matrix is
    /// invertible and there are more residuals than parameters.
    pub covariance: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize the squared norm of `residuals(params)` starting from
/// `initial`. `residuals` fills a slice of fixed length `n_residuals`.
pub(crate) fn fit_least_squares<F>(
    n_residuals: usize,
    residuals: F,
    initial: &[f64],
    opts: &LmOptions,
) -> LmFit
where
    F: Fn(&[f64], &mut [f64]),
{
    let k = initial.len();
    let mut params = initial.to_vec();
    let mut r = vec![0.0; n_residuals];
    residuals(&params, &mut r);
    let mut cost: f64 = r.iter().map(|x| x * x).sum();

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        iterations += 1;
        let jac = numeric_jacobian(&residuals, &params, &r, n_residuals);
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * rv;

        // try increasing damping until a step reduces the cost
        let mut improved = false;
        for _ in 0..24 {
            let mut damped = jtj.clone();
            for i in 0..k {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = match Cholesky::new(damped) {
                Some(ch) => ch.solve(&jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p - d).collect();
            let mut rt = vec![0.0; n_residuals];
            residuals(&trial, &mut rt);
            let trial_cost: f64 = rt.iter().map(|x| x * x).sum();
            if trial_cost <= cost {
                let step_norm = step.norm();
                let param_norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
                let cost_drop = cost - trial_cost;
                params = trial;
                r = rt;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-14);
                improved = true;
                if cost_drop <= opts.cost_tolerance * cost.max(1e-300)
                    || step_norm <= opts.step_tolerance * (param_norm + opts.step_tolerance)
                {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !improved {
            // no improving step at any damping: local minimum
            converged = converged || !improved;
            break;
        }
    }

    let covariance = estimate_covariance(&residuals, &params, &r, n_residuals, cost);
    LmFit {
        params,
        cost,
        covariance,
        iterations,
        converged,
    }
}

fn numeric_jacobian<F>(residuals: &F, params: &[f64], r0: &[f64], m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let k = params.len();
    let mut jac = DMatrix::zeros(m, k);
    let mut p = params.to_vec();
    let mut rp = vec![0.0; m];
    for j in 0..k {
        let h = 1e-7 * params[j].abs().max(1e-4);
        p[j] = params[j] + h;
        residuals(&p, &mut rp);
        p[j] = params[j];
        for i in 0..m {
            jac[(i, j)] = (rp[i] - r0[i]) / h;
        }
    }
    jac
}

fn estimate_covariance<F>(
    residuals: &F,
    params: &[f64],
    r: &[f64],
    m: usize,
    cost: f64,
) -> Option<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let k = params.len();
    if m <= k {
        return None;
    }
    let jac = numeric_jacobian(residuals, params, r, m);
    let jtj = jac.transpose() * jac;
    let inv = jtj.try_inverse()?;
    let s2 = cost / (m - k) as f64;
    Some(inv.iter().map(|v| v * s2).collect())
}
