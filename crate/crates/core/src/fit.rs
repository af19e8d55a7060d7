//! Weighted least squares: a Levenberg–Marquardt solver for nonlinear models
//! and a direct solver for linear ones. Both report the parameter covariance
//! (JᵀWJ)⁻¹.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A scalar model y = f(x; θ) with analytic gradient ∂f/∂θ.
pub trait Model {
    fn n_params(&self) -> usize;
    fn eval(&self, x: f64, params: &[f64]) -> f64;
    fn gradient(&self, x: f64, params: &[f64], grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative χ² decrease below which an accepted step counts as converged.
    pub ftol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 500, ftol: 1e-14, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Full-size covariance; rows and columns of fixed parameters are zero.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub ndof: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

fn chi2<M: Model>(model: &M, xs: &[f64], ys: &[f64], sig: &[f64], p: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(sig)
        .map(|((&x, &y), &s)| ((y - model.eval(x, p)) / s).powi(2))
        .sum()
}

/// Weighted Jacobian and residual restricted to the free parameters.
fn linearize<M: Model>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    sig: &[f64],
    p: &[f64],
    free: &[usize],
) -> (DMatrix<f64>, DVector<f64>) {
    let mut j = DMatrix::zeros(xs.len(), free.len());
    let mut r = DVector::zeros(xs.len());
    let mut g = vec![0.0; p.len()];
    for (row, ((&x, &y), &s)) in xs.iter().zip(ys).zip(sig).enumerate() {
        model.gradient(x, p, &mut g);
        for (col, &k) in free.iter().enumerate() {
            j[(row, col)] = g[k] / s;
        }
        r[row] = (y - model.eval(x, p)) / s;
    }
    (j, r)
}

fn validate_data(xs: &[f64], ys: &[f64], sig: &[f64]) -> Result<()> {
    if xs.len() != ys.len() || xs.len() != sig.len() {
        return Err(Error::Domain("data arrays have different lengths".into()));
    }
    if sig.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Domain("uncertainties must be finite and > 0".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Domain("data contain non-finite values".into()));
    }
    Ok(())
}

/// Minimizes Σ((y − f(x;θ))/σ)² over the parameters with `free[i] == true`.
pub fn levenberg_marquardt<M: Model>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    sigmas: &[f64],
    init: &[f64],
    free: &[bool],
    opts: LmOptions,
) -> Result<FitResult> {
    validate_data(xs, ys, sigmas)?;
    let np = model.n_params();
    if init.len() != np || free.len() != np {
        return Err(Error::Domain(format!("model expects {np} parameters")));
    }
    let free_idx: Vec<usize> = (0..np).filter(|&i| free[i]).collect();
    if xs.len() <= free_idx.len() {
        return Err(Error::Domain(format!(
            "{} points cannot constrain {} free parameters",
            xs.len(),
            free_idx.len()
        )));
    }
    let mut p = init.to_vec();
    let mut cost = chi2(model, xs, ys, sigmas, &p);
    if !cost.is_finite() {
        return Err(Error::Numerical {
            message: "initial χ² is not finite".into(),
            diagnostics: format!("params {p:?}"),
        });
    }
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (j, r) = linearize(model, xs, ys, sigmas, &p, &free_idx);
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * &r;
        if jtr.amax() == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&jtr);
            let mut trial = p.clone();
            for (c, &k) in free_idx.iter().enumerate() {
                trial[k] += step[c];
            }
            let trial_cost = chi2(model, xs, ys, sigmas, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                let step_small = free_idx
                    .iter()
                    .enumerate()
                    .all(|(c, &k)| step[c].abs() <= 1e-12 * (p[k].abs() + 1e-12));
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < opts.ftol || step_small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: at a minimum to machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical {
            message: "Levenberg–Marquardt did not converge".into(),
            diagnostics: format!("iterations {iterations}, chi2 {cost}, lambda {lambda}, params {p:?}"),
        });
    }
    let (j, _) = linearize(model, xs, ys, sigmas, &p, &free_idx);
    let reduced = invert_normal(&(j.transpose() * &j)).ok_or_else(|| Error::Numerical {
        message: "singular normal matrix at the solution".into(),
        diagnostics: format!("params {p:?}"),
    })?;
    let mut covariance = DMatrix::zeros(np, np);
    for (a, &i) in free_idx.iter().enumerate() {
        for (b, &k) in free_idx.iter().enumerate() {
            covariance[(i, k)] = reduced[(a, b)];
        }
    }
    Ok(FitResult {
        params: p,
        covariance,
        chi2: cost,
        ndof: xs.len() - free_idx.len(),
        iterations,
    })
}

fn invert_normal(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

/// Linear weighted least squares y ≈ Aθ. Rows of `design` are the basis
/// functions evaluated at each point.
pub fn weighted_linear_lstsq(
    design: &DMatrix<f64>,
    ys: &[f64],
    sigmas: &[f64],
) -> Result<FitResult> {
    let (n, np) = design.shape();
    if ys.len() != n || sigmas.len() != n {
        return Err(Error::Domain("data arrays have different lengths".into()));
    }
    if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Domain("uncertainties must be finite and > 0".into()));
    }
    if n < np {
        return Err(Error::Numerical {
            message: "rank-deficient design".into(),
            diagnostics: format!("{n} points for {np} parameters"),
        });
    }
    let mut a = design.clone();
    let mut b = DVector::zeros(n);
    for i in 0..n {
        for k in 0..np {
            a[(i, k)] /= sigmas[i];
        }
        b[i] = ys[i] / sigmas[i];
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax.is_nan() || smax <= 0.0 || smin <= 1e-12 * smax {
        return Err(Error::Numerical {
            message: "rank-deficient design".into(),
            diagnostics: format!("singular values {:?}", svd.singular_values.as_slice()),
        });
    }
    let theta = svd.solve(&b, 0.0).map_err(|e| Error::Numerical {
        message: "linear solve failed".into(),
        diagnostics: e.to_string(),
    })?;
    // (AᵀA)⁻¹ = V Σ⁻² Vᵀ
    let v_t = svd.v_t.as_ref().expect("requested V");
    let inv_s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let covariance = v_t.transpose() * inv_s2 * v_t;
    let resid = &b - &a * &theta;
    Ok(FitResult {
        params: theta.iter().copied().collect(),
        covariance,
        chi2: resid.norm_squared(),
        ndof: n - np,
        iterations: 1,
    })
}
