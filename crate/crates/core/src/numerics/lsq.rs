//! Levenberg-Marquardt with a central-difference Jacobian and box bounds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One weighted observation `y(x) ± sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative reduction of the cost below which the fit is considered converged.
    pub ftol: f64,
    /// Relative step length below which the fit is considered converged.
    pub xtol: f64,
    /// Cosine between residual vector and Jacobian columns at convergence.
    pub gtol: f64,
    /// Central-difference step relative to the parameter magnitude.
    pub rel_step: f64,
    /// Smallest ratio of singular values of the column-normalised Jacobian
    /// for which the parameters are still treated as identifiable.
    pub singular_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-18,
            xtol: 1e-13,
            gtol: 1e-12,
            rel_step: 1e-6,
            singular_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<f64>,
    /// Parameter covariance, scaled by the reduced chi-square of the fit.
    /// Rows and columns of parameters held fixed by equal bounds are zero.
    pub covariance: Vec<Vec<f64>>,
    /// Euclidean norm of the weighted residual vector at `parameters`.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// False when the Jacobian at the optimum is (numerically) rank deficient.
    pub identifiable: bool,
    /// Number of residuals minus number of free parameters.
    pub dof: usize,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.parameters.len())
            .map(|i| self.covariance[i][i].max(0.0).sqrt())
            .collect()
    }

    pub fn chi_squared(&self) -> f64 {
        self.residual_norm * self.residual_norm
    }
}

/// Fits `model(x, params)` to weighted data.
pub fn least_squares_fit<F>(
    model: F,
    data: &[DataPoint],
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
) -> Result<FitResult>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    least_squares_fit_with(model, data, init, bounds, &FitOptions::default())
}

pub fn least_squares_fit_with<F>(
    model: F,
    data: &[DataPoint],
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
    options: &FitOptions,
) -> Result<FitResult>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    if data.len() < init.len() {
        return Err(Error::invalid(format!(
            "{} data points cannot determine {} parameters",
            data.len(),
            init.len()
        )));
    }
    if let Some(bad) = data.iter().find(|d| !(d.sigma > 0.0)) {
        return Err(Error::invalid(format!("sigma must be positive, got {}", bad.sigma)));
    }
    if data.iter().any(|d| !d.x.is_finite() || !d.y.is_finite()) {
        return Err(Error::invalid("data contains non-finite values"));
    }
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(data.iter().map(|d| (d.y - model(d.x, p)) / d.sigma).collect())
    };
    fit_residuals(residuals, init, bounds, options)
}

/// General weighted least squares: minimises `½‖r(p)‖²` where `residuals`
/// returns the already-weighted residual vector `r(p)`.
///
/// Parameters are clamped to `bounds` after every step; a parameter whose
/// lower and upper bound coincide is held fixed.
pub fn fit_residuals<F>(
    residuals: F,
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
    options: &FitOptions,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = init.len();
    if n == 0 {
        return Err(Error::invalid("no parameters to fit"));
    }
    let bounds: Vec<(f64, f64)> = match bounds {
        Some(b) if b.len() != n => {
            return Err(Error::invalid(format!(
                "{} bounds given for {} parameters",
                b.len(),
                n
            )))
        }
        Some(b) => b.to_vec(),
        None => vec![(f64::NEG_INFINITY, f64::INFINITY); n],
    };
    if let Some((i, _)) = bounds.iter().enumerate().find(|(_, (lo, hi))| !(lo <= hi)) {
        return Err(Error::invalid(format!("empty bound interval for parameter {i}")));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial parameters must be finite"));
    }

    let clamp = |p: &mut [f64]| {
        for (v, (lo, hi)) in p.iter_mut().zip(&bounds) {
            *v = v.clamp(*lo, *hi);
        }
    };
    let free: Vec<usize> = (0..n).filter(|&i| bounds[i].0 < bounds[i].1).collect();

    let mut p = init.to_vec();
    clamp(&mut p);
    let mut r = residuals(&p)?;
    let m = r.len();
    if m < free.len() {
        return Err(Error::invalid(format!(
            "{m} residuals cannot determine {} free parameters",
            free.len()
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("model is not finite at the initial parameters"));
    }
    let mut cost = half_norm2(&r);

    let jac = |p: &[f64]| jacobian(&residuals, p, &free, &bounds, options.rel_step);

    let mut converged = free.is_empty();
    let mut iterations = 0;
    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut diag: Vec<f64> = vec![0.0; free.len()];

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let j = jac(&p)?;
        let rv = DVector::from_column_slice(&r);
        let mut a = j.tr_mul(&j);
        let mut g = j.tr_mul(&rv);
        pin_active(&mut a, &mut g, &p, &free, &bounds);

        let rnorm = rv.norm();
        if rnorm == 0.0 {
            converged = true;
            break;
        }
        let gcos = (0..free.len())
            .filter(|&k| a[(k, k)] > 0.0)
            .map(|k| g[k].abs() / (a[(k, k)].sqrt() * rnorm))
            .fold(0.0, f64::max);
        if gcos <= options.gtol {
            converged = true;
            break;
        }

        for (k, d) in diag.iter_mut().enumerate() {
            *d = d.max(a[(k, k)]);
            if *d == 0.0 {
                *d = 1.0;
            }
        }
        if lambda < 0.0 {
            lambda = 1e-3;
        }

        let mut accepted = false;
        loop {
            let mut lhs = a.clone();
            for (k, d) in diag.iter().enumerate() {
                lhs[(k, k)] += lambda * d;
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    if lambda > 1e32 {
                        break;
                    }
                    continue;
                }
            };
            let mut trial = p.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += step[k];
            }
            clamp(&mut trial);
            let taken = DVector::from_iterator(free.len(), free.iter().map(|&i| trial[i] - p[i]));

            let trial_r = match residuals(&trial) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => Some(v),
                _ => None,
            };
            if let Some(trial_r) = trial_r {
                let trial_cost = half_norm2(&trial_r);
                if trial_cost < cost {
                    let predicted = -(g.dot(&taken) + 0.5 * taken.dot(&(&a * &taken)));
                    let rho = if predicted > 0.0 { (cost - trial_cost) / predicted } else { 0.0 };
                    lambda *= f64::max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0).powi(3));
                    nu = 2.0;

                    let reduction = cost - trial_cost;
                    // step and position compared in the curvature-scaled metric
                    let (mut snorm, mut pnorm) = (0.0, 0.0);
                    for (k, &i) in free.iter().enumerate() {
                        snorm += diag[k] * taken[k] * taken[k];
                        pnorm += diag[k] * p[i] * p[i];
                    }
                    let small_step = snorm.sqrt() <= options.xtol * (pnorm.sqrt() + options.xtol);
                    p = trial;
                    r = trial_r;
                    cost = trial_cost;
                    if reduction <= options.ftol * (cost + reduction) || small_step {
                        converged = true;
                    }
                    accepted = true;
                    break;
                }
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e32 {
                break;
            }
        }
        if !accepted {
            // No descent direction left at working precision: we sit at the minimum.
            converged = true;
        }
    }

    if converged {
        polish(&residuals, &jac, &mut p, &mut r, &mut cost, &free, &bounds, options)?;
    }

    let j = jac(&p)?;
    let (covariance_free, identifiable) = covariance(&j, options.singular_tol);
    let dof = m - free.len();
    let scale = if dof > 0 { 2.0 * cost / dof as f64 } else { 1.0 };
    let mut cov = vec![vec![0.0; n]; n];
    for (a, &i) in free.iter().enumerate() {
        for (b, &k) in free.iter().enumerate() {
            cov[i][k] = scale * covariance_free[(a, b)];
        }
    }

    Ok(FitResult {
        parameters: p,
        covariance: cov,
        residual_norm: (2.0 * cost).sqrt(),
        converged,
        iterations,
        identifiable,
        dof,
    })
}

/// Near the minimum, cost differences drop below round-off while the
/// gradient is still resolved. Gauss-Newton steps are taken as long as they
/// shrink the scaled gradient without raising the cost beyond round-off,
/// so that a refit from the returned point stays put.
#[allow(clippy::too_many_arguments)]
fn polish<F, J>(
    residuals: &F,
    jac: &J,
    p: &mut Vec<f64>,
    r: &mut Vec<f64>,
    cost: &mut f64,
    free: &[usize],
    bounds: &[(f64, f64)],
    options: &FitOptions,
) -> Result<()>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let scaled_gradient = |j: &DMatrix<f64>, r: &[f64]| {
        let g = j.tr_mul(&DVector::from_column_slice(r));
        let a = j.tr_mul(j);
        (a, g, ())
    };
    let mut j = jac(p)?;
    for _ in 0..10 {
        let (mut a, mut g, _) = scaled_gradient(&j, r);
        pin_active(&mut a, &mut g, p, free, bounds);
        let gnorm = scaled_norm(&a, &g);
        if gnorm == 0.0 {
            break;
        }
        for k in 0..free.len() {
            a[(k, k)] *= 1.0 + 1e-12;
        }
        let Some(ch) = a.cholesky() else { break };
        let step = ch.solve(&(-&g));
        let mut trial = p.clone();
        for (k, &i) in free.iter().enumerate() {
            trial[i] = (trial[i] + step[k]).clamp(bounds[i].0, bounds[i].1);
        }
        let Ok(trial_r) = residuals(&trial) else { break };
        if trial_r.iter().any(|v| !v.is_finite()) {
            break;
        }
        let trial_cost = half_norm2(&trial_r);
        if trial_cost > *cost * (1.0 + 1e-12) {
            break;
        }
        let trial_j = jac(&trial)?;
        let (mut ta, mut tg, _) = scaled_gradient(&trial_j, &trial_r);
        pin_active(&mut ta, &mut tg, &trial, free, bounds);
        if scaled_norm(&ta, &tg) >= gnorm {
            break;
        }
        let moved = free.iter().map(|&i| (trial[i] - p[i]).abs() / p[i].abs().max(options.xtol)).fold(0.0, f64::max);
        *p = trial;
        *r = trial_r;
        *cost = trial_cost;
        j = trial_j;
        if moved <= options.xtol {
            break;
        }
    }
    Ok(())
}

fn scaled_norm(a: &DMatrix<f64>, g: &DVector<f64>) -> f64 {
    (0..g.len())
        .filter(|&k| a[(k, k)] > 0.0)
        .map(|k| g[k] * g[k] / a[(k, k)])
        .sum::<f64>()
        .sqrt()
}

/// Decouples parameters sitting on a bound with the descent direction
/// pointing outward, so that the step leaves them in place.
fn pin_active(
    a: &mut DMatrix<f64>,
    g: &mut DVector<f64>,
    p: &[f64],
    free: &[usize],
    bounds: &[(f64, f64)],
) {
    for (k, &i) in free.iter().enumerate() {
        let (lo, hi) = bounds[i];
        // the step moves against g
        if (p[i] <= lo && g[k] > 0.0) || (p[i] >= hi && g[k] < 0.0) {
            let d = a[(k, k)];
            a.row_mut(k).fill(0.0);
            a.column_mut(k).fill(0.0);
            a[(k, k)] = if d > 0.0 { d } else { 1.0 };
            g[k] = 0.0;
        }
    }
}

fn half_norm2(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn jacobian<F>(
    residuals: &F,
    p: &[f64],
    free: &[usize],
    bounds: &[(f64, f64)],
    rel_step: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let columns: Vec<Vec<f64>> = free
        .par_iter()
        .map(|&i| {
            let scale = if p[i] != 0.0 { p[i].abs() } else { 1.0 };
            let h = rel_step * scale;
            let (lo, hi) = bounds[i];
            let (up, down) = match (p[i] + h <= hi, p[i] - h >= lo) {
                (true, true) => (p[i] + h, p[i] - h),
                (true, false) => (p[i] + h, p[i]),
                (false, true) => (p[i], p[i] - h),
                (false, false) => return Ok(vec![0.0; 0]),
            };
            let mut q = p.to_vec();
            q[i] = up;
            let r_up = residuals(&q)?;
            q[i] = down;
            let r_down = residuals(&q)?;
            let span = up - down;
            Ok(r_up.iter().zip(&r_down).map(|(a, b)| (a - b) / span).collect())
        })
        .collect::<Result<_>>()?;
    let m = residuals(p)?.len();
    let mut j = DMatrix::zeros(m, free.len());
    for (k, col) in columns.iter().enumerate() {
        if col.len() == m {
            for (row, v) in col.iter().enumerate() {
                j[(row, k)] = if v.is_finite() { *v } else { 0.0 };
            }
        }
    }
    Ok(j)
}

/// `(JᵀJ)⁻¹` via the eigen-decomposition of the column-normalised normal
/// matrix, with a rank check. Directions below the singular threshold are
/// dropped from the pseudo-inverse.
fn covariance(j: &DMatrix<f64>, singular_tol: f64) -> (DMatrix<f64>, bool) {
    let nf = j.ncols();
    let norms: Vec<f64> = (0..nf).map(|k| j.column(k).norm()).collect();
    let mut identifiable = norms.iter().all(|&v| v > 0.0);
    let mut js = j.clone();
    for (k, &s) in norms.iter().enumerate() {
        if s > 0.0 {
            js.column_mut(k).scale_mut(1.0 / s);
        }
    }
    let a = js.tr_mul(&js);
    let eig = SymmetricEigen::new(a);
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = max_ev * singular_tol * singular_tol;
    let mut inv = DMatrix::zeros(nf, nf);
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > cutoff && ev > 0.0 {
            let v = eig.eigenvectors.column(k);
            inv += (v * v.transpose()) / ev;
        } else {
            identifiable = false;
        }
    }
    for a in 0..nf {
        for b in 0..nf {
            let s = norms[a] * norms[b];
            inv[(a, b)] = if s > 0.0 { inv[(a, b)] / s } else { 0.0 };
        }
    }
    (inv, identifiable)
}
