//! Field suppression of flux noise by spin polarisation.

use serde::{Deserialize, Serialize};

use crate::constants::{BOHR_MAGNETON, BOLTZMANN};
use crate::numerics::{least_squares_fit, DataPoint, FitResult};
use crate::{Error, Result};

/// `A_Φ(B) = floor + A0 / cosh²(μ_B B / k_B T_S)` in Φ₀².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinFreezeModel {
    pub a0: f64,
    pub t_s: f64,
    pub floor: f64,
}

impl SpinFreezeModel {
    pub fn new(a0: f64, t_s: f64, floor: f64) -> Result<Self> {
        if !(a0 >= 0.0) || !a0.is_finite() {
            return Err(Error::invalid(format!("A0 must be finite and >= 0, got {a0}")));
        }
        if !(t_s > 0.0) || !t_s.is_finite() {
            return Err(Error::invalid(format!("spin temperature must be positive, got {t_s}")));
        }
        if !(floor >= 0.0) || !floor.is_finite() {
            return Err(Error::invalid(format!("floor must be finite and >= 0, got {floor}")));
        }
        Ok(Self { a0, t_s, floor })
    }
}

fn sech2(b: f64, t_s: f64) -> f64 {
    let x = BOHR_MAGNETON * b / (BOLTZMANN * t_s);
    if x.abs() > 350.0 {
        return 0.0;
    }
    let c = x.cosh();
    1.0 / (c * c)
}

pub fn flux_noise_power(b: f64, model: &SpinFreezeModel) -> f64 {
    model.floor + model.a0 * sech2(b, model.t_s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinFreezeFit {
    pub model: SpinFreezeModel,
    pub t_s_stderr: f64,
    pub fit: FitResult,
}

const T_MIN: f64 = 1e-6;
const T_MAX: f64 = 1e4;

/// Fits `√A_Φ(B)` samples `(B, √A_Φ, σ)` with parameters
/// `(√A0, T_S, √floor)`. Without `include_floor` the floor is held at zero.
pub fn fit_spin_temperature(points: &[DataPoint], include_floor: bool) -> Result<SpinFreezeFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 field points, got {}", points.len())));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite() || !(p.sigma > 0.0)) {
        return Err(Error::invalid("field points must be finite with positive sigma"));
    }
    reject_rising(points)?;

    // work in units of the largest sample so that all parameters are O(1)
    let scale = points.iter().map(|p| p.y.abs()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let scaled: Vec<DataPoint> =
        points.iter().map(|p| DataPoint::new(p.x, p.y / scale, p.sigma / scale)).collect();

    let (sa0, t0, sf0) = initial_guess(&scaled, include_floor);
    let floor_hi = if include_floor { f64::INFINITY } else { 0.0 };
    let bounds = [(0.0, f64::INFINITY), (T_MIN, T_MAX), (0.0, floor_hi)];
    let mut fit = least_squares_fit(
        |b, p| (p[2] * p[2] + p[0] * p[0] * sech2(b, p[1])).sqrt(),
        &scaled,
        &[sa0, t0, if include_floor { sf0 } else { 0.0 }],
        Some(&bounds),
    )?;
    let units = [scale, 1.0, scale];
    for i in 0..3 {
        fit.parameters[i] *= units[i];
        for j in 0..3 {
            fit.covariance[i][j] *= units[i] * units[j];
        }
    }

    let p = &fit.parameters;
    let b_max = points.iter().map(|d| d.x.abs()).fold(0.0, f64::max);
    let swing = p[0] * p[0] * (1.0 - sech2(b_max, p[1]));
    let top = p[2] * p[2] + p[0] * p[0];
    if !fit.identifiable || !(swing > 1e-6 * top) {
        return Err(Error::NonIdentifiable(
            "data show no field suppression; spin temperature is unbounded".into(),
        ));
    }
    let model = SpinFreezeModel::new(p[0] * p[0], p[1], p[2] * p[2])?;
    let t_s_stderr = fit.std_errors()[1];
    Ok(SpinFreezeFit { model, t_s_stderr, fit })
}

/// Spin freezing can only lower the noise; a significant positive weighted
/// slope in `B` is non-physical.
fn reject_rising(points: &[DataPoint]) -> Result<()> {
    let w: Vec<f64> = points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).collect();
    let sw: f64 = w.iter().sum();
    let xm = points.iter().zip(&w).map(|(p, w)| w * p.x.abs()).sum::<f64>() / sw;
    let ym = points.iter().zip(&w).map(|(p, w)| w * p.y).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.x.abs() - xm).powi(2)).sum();
    let sxy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.x.abs() - xm) * (p.y - ym)).sum();
    if sxx == 0.0 {
        return Err(Error::NonIdentifiable("all samples share the same field".into()));
    }
    let slope = sxy / sxx;
    if slope > 2.0 / sxx.sqrt() {
        return Err(Error::NonPhysical(format!(
            "noise amplitude rises with field (slope {slope:.3e} per T)"
        )));
    }
    Ok(())
}

/// Scans `T_S` on a log grid; at each temperature `A_Φ = F + A0·sech²` is
/// linear in `(A0, F)`.
fn initial_guess(points: &[DataPoint], include_floor: bool) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 1.0, 0.0);
    for k in 0..=200 {
        let t = 10f64.powf(-4.0 + 6.0 * k as f64 / 200.0);
        let mut s = [0.0; 5]; // Σw, Σwc, Σwc², Σwy², Σwcy²
        for p in points {
            let c = sech2(p.x, t);
            let y2 = p.y * p.y;
            let w = 1.0 / (p.sigma * p.y.abs().max(p.sigma)).powi(2);
            s[0] += w;
            s[1] += w * c;
            s[2] += w * c * c;
            s[3] += w * y2;
            s[4] += w * c * y2;
        }
        let (a, f) = if include_floor {
            let det = s[0] * s[2] - s[1] * s[1];
            if det.abs() < 1e-300 {
                (s[4] / s[2].max(1e-300), 0.0)
            } else {
                let a = (s[0] * s[4] - s[1] * s[3]) / det;
                let f = (s[2] * s[3] - s[1] * s[4]) / det;
                (a.max(0.0), f.max(0.0))
            }
        } else {
            ((s[4] / s[2].max(1e-300)).max(0.0), 0.0)
        };
        let chi2: f64 = points
            .iter()
            .map(|p| ((p.y - (f + a * sech2(p.x, t)).sqrt()) / p.sigma).powi(2))
            .sum();
        if chi2 < best.0 {
            best = (chi2, a, t, f);
        }
    }
    (best.1.sqrt(), best.2, best.3.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(model: &SpinFreezeModel, noise: f64, seed: u64) -> Vec<DataPoint> {
        let mut rng = seeded_rng(seed);
        let gauss = Normal::new(0.0, 1.0).unwrap();
        (0..13)
            .map(|i| {
                let b = 0.05 * i as f64;
                let y = flux_noise_power(b, model).sqrt();
                let sigma = noise * y.max(1e-9);
                let y = if noise > 0.0 { y + sigma * gauss.sample(&mut rng) } else { y };
                DataPoint::new(b, y, if noise > 0.0 { sigma } else { 1e-3 * y.max(1e-9) })
            })
            .collect()
    }

    #[test]
    fn closed_forms() {
        let m = SpinFreezeModel::new(4e-12, 0.085, 1e-13).unwrap();
        assert_eq!(flux_noise_power(0.0, &m), 4e-12 + 1e-13);
        assert_eq!(flux_noise_power(1e3, &m), 1e-13);
        assert_eq!(flux_noise_power(0.3, &m), flux_noise_power(-0.3, &m));
        // cosh x = 2 at x = ln(2 + √3)
        let m0 = SpinFreezeModel::new(4e-12, 0.085, 0.0).unwrap();
        let b_half = (2.0 + 3f64.sqrt()).ln() * BOLTZMANN * 0.085 / BOHR_MAGNETON;
        let ratio = (flux_noise_power(b_half, &m0) / flux_noise_power(0.0, &m0)).sqrt();
        assert!((ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_recovery() {
        let m = SpinFreezeModel::new(4e-12, 0.085, 0.0).unwrap();
        let fit = fit_spin_temperature(&synthetic(&m, 0.0, 0), false).unwrap();
        assert!((fit.model.t_s / 0.085 - 1.0).abs() < 1e-6, "{}", fit.model.t_s);
        assert!((fit.model.a0 / 4e-12 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn recovery_with_floor() {
        let m = SpinFreezeModel::new(4e-12, 0.085, 1e-12).unwrap();
        let fit = fit_spin_temperature(&synthetic(&m, 0.0, 0), true).unwrap();
        assert!((fit.model.t_s / 0.085 - 1.0).abs() < 1e-5, "{}", fit.model.t_s);
        assert!((fit.model.floor / 1e-12 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn noisy_recovery() {
        let m = SpinFreezeModel::new(4e-12, 0.085, 0.0).unwrap();
        let fit = fit_spin_temperature(&synthetic(&m, 0.01, 9), false).unwrap();
        assert!((fit.model.t_s / 0.085 - 1.0).abs() < 0.05, "{}", fit.model.t_s);
    }

    #[test]
    fn ignoring_a_floor_overestimates_temperature() {
        let m = SpinFreezeModel::new(4e-12, 0.085, 1e-12).unwrap();
        let fit = fit_spin_temperature(&synthetic(&m, 0.0, 0), false).unwrap();
        assert!(fit.model.t_s > 1.2 * 0.085, "{}", fit.model.t_s);
    }

    #[test]
    fn constant_data_is_not_identifiable() {
        let pts: Vec<_> = (0..8).map(|i| DataPoint::new(0.1 * i as f64, 2e-6, 2e-8)).collect();
        assert!(matches!(fit_spin_temperature(&pts, false), Err(Error::NonIdentifiable(_))));
        assert!(matches!(fit_spin_temperature(&pts, true), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn rising_data_is_non_physical() {
        let pts: Vec<_> =
            (0..8).map(|i| DataPoint::new(0.1 * i as f64, 1e-6 * (1.0 + 0.1 * i as f64), 1e-8)).collect();
        assert!(matches!(fit_spin_temperature(&pts, true), Err(Error::NonPhysical(_))));
    }
}
