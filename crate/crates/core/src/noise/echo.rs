//! Hahn-echo decay with a Gaussian flux-noise part and a shared exponential part.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DecayCurve;
use crate::circuit::{CircuitEnergies, FluxoniumSolver};
use crate::numerics::{fit_residuals, FitOptions, FitResult};
use crate::{Error, Result};

/// `Γ_φ = √(A_Φ ln 2)·|∂ω/∂Φ|` for `A_Φ` in Φ₀² and a slope in rad/s per Φ₀.
pub fn echo_dephasing_rate(a_phi: f64, sensitivity: f64) -> f64 {
    (a_phi * std::f64::consts::LN_2).sqrt() * sensitivity.abs()
}

/// `P(t) = ½e^{−(Γ_φ t)²}e^{−Γ_exp t} + ½`.
pub fn echo_decay_model(t: f64, gamma_phi: f64, gamma_exp: f64) -> f64 {
    0.5 * (-(gamma_phi * t).powi(2) - gamma_exp * t).exp() + 0.5
}

/// Echo trace taken at external flux `flux` (Φ₀).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxEchoCurve {
    pub flux: f64,
    pub curve: DecayCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRate {
    pub flux: f64,
    /// `∂ω/∂Φ` used for this curve (rad/s per Φ₀).
    pub sensitivity: f64,
    pub gamma_phi: f64,
    pub gamma_phi_stderr: f64,
    /// True when the curve sits at a sweet spot and its Gaussian rate was held at zero.
    pub pinned: bool,
}

/// Shared-rate stage of the echo fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoRates {
    pub gamma_exp: f64,
    pub gamma_exp_stderr: f64,
    pub curves: Vec<CurveRate>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoFit {
    pub rates: EchoRates,
    /// `√A_Φ` in Φ₀.
    pub sqrt_a_phi: f64,
    pub sqrt_a_phi_stderr: f64,
}

fn at_sweet_spot(flux: f64) -> bool {
    let twice = 2.0 * flux;
    (twice - twice.round()).abs() < 2e-9
}

/// Fits one `Γ_exp` shared by all curves and one Gaussian rate per curve.
///
/// `sensitivities[i]` is `∂ω/∂Φ` at `curves[i].flux`. Curves at a sweet spot,
/// or whose slope is negligible against the largest one, get `Γ_φ = 0`.
pub fn fit_echo_rates(curves: &[FluxEchoCurve], sensitivities: &[f64]) -> Result<EchoRates> {
    if curves.is_empty() {
        return Err(Error::invalid("no echo curves"));
    }
    if sensitivities.len() != curves.len() {
        return Err(Error::invalid(format!(
            "{} sensitivities for {} curves",
            sensitivities.len(),
            curves.len()
        )));
    }
    if curves.iter().any(|c| c.curve.times().iter().any(|&t| t < 0.0)) {
        return Err(Error::invalid("echo times must be >= 0"));
    }
    let s_max = sensitivities.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    let pinned: Vec<bool> = curves
        .iter()
        .zip(sensitivities)
        .map(|(c, s)| at_sweet_spot(c.flux) || s.abs() <= 1e-6 * s_max)
        .collect();

    // independent per-curve fits give the starting point
    let singles = curves
        .par_iter()
        .zip(&pinned)
        .map(|(c, &pin)| fit_single(&c.curve, pin))
        .collect::<Result<Vec<_>>>()?;
    let mut anchor: Vec<f64> = singles
        .iter()
        .zip(&pinned)
        .filter(|(_, &p)| p)
        .map(|(s, _)| s[0])
        .collect();
    if anchor.is_empty() {
        anchor = singles.iter().map(|s| s[0]).collect();
    }
    anchor.sort_by(f64::total_cmp);
    // rates in units of 1/tau keep every parameter O(1)
    let tau = time_scale(curves.iter().map(|c| &c.curve));
    let mut init = vec![anchor[anchor.len() / 2] * tau];
    let mut bounds = vec![(0.0, f64::INFINITY)];
    for (s, &pin) in singles.iter().zip(&pinned) {
        init.push(if pin { 0.0 } else { s[1] * tau * tau });
        bounds.push(if pin { (0.0, 0.0) } else { (0.0, f64::INFINITY) });
    }

    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        let mut r = Vec::new();
        for (i, c) in curves.iter().enumerate() {
            let u = p[1 + i];
            for (k, (t, y)) in c.curve.iter().enumerate() {
                let s = t / tau;
                let m = 0.5 * (-u * s * s - p[0] * s).exp() + 0.5;
                r.push(c.curve.weight(k) * (y - m));
            }
        }
        Ok(r)
    };
    let mut fit = fit_residuals(residuals, &init, Some(&bounds), &FitOptions::default())?;
    let units: Vec<f64> = (0..fit.parameters.len())
        .map(|i| if i == 0 { 1.0 / tau } else { 1.0 / (tau * tau) })
        .collect();
    for i in 0..units.len() {
        fit.parameters[i] *= units[i];
        for j in 0..units.len() {
            fit.covariance[i][j] *= units[i] * units[j];
        }
    }
    if !fit.identifiable {
        return Err(Error::NonIdentifiable(
            "echo curves cannot separate Gaussian from exponential decay".into(),
        ));
    }

    let se = fit.std_errors();
    let rates = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let u = fit.parameters[1 + i];
            let g = u.sqrt();
            CurveRate {
                flux: c.flux,
                sensitivity: sensitivities[i],
                gamma_phi: g,
                gamma_phi_stderr: if g > 0.0 { se[1 + i] / (2.0 * g) } else { se[1 + i].sqrt() },
                pinned: pinned[i],
            }
        })
        .collect();
    Ok(EchoRates { gamma_exp: fit.parameters[0], gamma_exp_stderr: se[0], curves: rates, fit })
}

/// Median of the curve spans.
fn time_scale<'a>(curves: impl Iterator<Item = &'a DecayCurve>) -> f64 {
    let mut spans: Vec<f64> = curves.map(|c| *c.times().last().unwrap()).collect();
    spans.sort_by(f64::total_cmp);
    let mid = spans[spans.len() / 2];
    if mid > 0.0 {
        mid
    } else {
        1.0
    }
}

/// Starting values `[Γ_exp, Γ_φ²]` for one curve.
fn fit_single(curve: &DecayCurve, pinned: bool) -> Result<Vec<f64>> {
    let t_e = curve
        .iter()
        .find(|&(t, y)| t > 0.0 && 2.0 * y - 1.0 < (-1.0f64).exp())
        .map(|(t, _)| t)
        .unwrap_or_else(|| *curve.times().last().unwrap());
    let tau = time_scale(std::iter::once(curve));
    let g0 = tau / t_e.max(f64::MIN_POSITIVE);
    let init = [g0, if pinned { 0.0 } else { 0.25 * g0 * g0 }];
    let hi = if pinned { 0.0 } else { f64::INFINITY };
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(curve
            .iter()
            .enumerate()
            .map(|(k, (t, y))| {
                let s = t / tau;
                curve.weight(k) * (y - (0.5 * (-p[1] * s * s - p[0] * s).exp() + 0.5))
            })
            .collect())
    };
    let bounds = [(0.0, f64::INFINITY), (0.0, hi)];
    let fit = fit_residuals(residuals, &init, Some(&bounds), &FitOptions::default())?;
    Ok(vec![fit.parameters[0] / tau, fit.parameters[1] / (tau * tau)])
}

/// Echo fit with `√A_Φ` from a weighted regression of `Γ_φ²` on `ln 2·(∂ω/∂Φ)²`.
pub fn joint_fit_echo_with(curves: &[FluxEchoCurve], sensitivities: &[f64]) -> Result<EchoFit> {
    if curves.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 echo curves, got {}", curves.len())));
    }
    let rates = fit_echo_rates(curves, sensitivities)?;
    let ln2 = std::f64::consts::LN_2;
    let free: Vec<(usize, &CurveRate)> =
        rates.curves.iter().enumerate().filter(|(_, c)| !c.pinned).collect();
    if free.is_empty() {
        return Err(Error::NonIdentifiable(
            "all curves sit at a sweet spot; flux-noise amplitude is not constrained".into(),
        ));
    }
    let cov = &rates.fit.covariance;
    let vars: Vec<f64> = free.iter().map(|(i, _)| cov[1 + i][1 + i]).collect();
    let weighted = vars.iter().all(|v| *v > 0.0 && v.is_finite());
    let (mut sxx, mut sxu) = (0.0, 0.0);
    for ((_, c), v) in free.iter().zip(&vars) {
        let x = ln2 * c.sensitivity * c.sensitivity;
        let u = c.gamma_phi * c.gamma_phi;
        let w = if weighted { 1.0 / v } else { 1.0 };
        sxx += w * x * x;
        sxu += w * x * u;
    }
    let a = sxu / sxx;
    if !(a > 0.0) {
        return Err(Error::NonIdentifiable("no Gaussian dephasing resolved away from the sweet spot".into()));
    }
    let a_se = if weighted { (1.0 / sxx).sqrt() } else { 0.0 };
    let sqrt_a = a.sqrt();
    Ok(EchoFit { rates, sqrt_a_phi: sqrt_a, sqrt_a_phi_stderr: a_se / (2.0 * sqrt_a) })
}

/// [`joint_fit_echo_with`] using circuit-model slopes at each curve's flux.
pub fn joint_fit_echo(
    curves: &[FluxEchoCurve],
    energies: &CircuitEnergies,
    basis_size: usize,
) -> Result<EchoFit> {
    let solver = FluxoniumSolver::new(*energies, basis_size)?;
    let sensitivities = curves
        .par_iter()
        .map(|c| solver.sensitivity(c.flux).map(|s| s.per_phi0))
        .collect::<Result<Vec<_>>>()?;
    joint_fit_echo_with(curves, &sensitivities)
}
