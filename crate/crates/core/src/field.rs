//! Magnetic-field dependence of the circuit and its spin environment.

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitEnergies;
use crate::constants::{BOHR_MAGNETON, BOLTZMANN, GHZ, PLANCK};
use crate::numerics::{least_squares_fit, DataPoint, FitResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapElement {
    Junction,
    Inductor,
    Resonator,
}

/// Thin-film gap suppression `Δ(B)/Δ(0) = √(1 − (B/B_c)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapModel {
    pub critical_field: f64,
    pub element: GapElement,
}

impl GapModel {
    pub fn new(critical_field: f64, element: GapElement) -> Result<Self> {
        if !(critical_field > 0.0) || !critical_field.is_finite() {
            return Err(Error::invalid(format!(
                "critical field must be positive, got {critical_field}"
            )));
        }
        Ok(Self { critical_field, element })
    }
}

fn reduced_field_sq(b: f64, bc: f64) -> Result<f64> {
    if !(bc > 0.0) {
        return Err(Error::invalid(format!("critical field must be positive, got {bc}")));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("field must be finite and >= 0, got {b}")));
    }
    if b >= bc {
        return Err(Error::FieldExceedsCritical { field: b, critical: bc });
    }
    Ok((b / bc) * (b / bc))
}

pub fn gap_fraction(b: f64, model: &GapModel) -> Result<f64> {
    Ok((1.0 - reduced_field_sq(b, model.critical_field)?).sqrt())
}

/// Energies at parallel field `b`: `E_J ∝ Δ_J`, `E_L ∝ 1/L_kin ∝ Δ_L`, `E_C` fixed.
///
/// `e` must be zero-field energies; energies returned by this function are
/// tagged with their field and refused as input.
pub fn scale_energies(
    e: &CircuitEnergies,
    b: f64,
    bc_junction: f64,
    bc_inductor: f64,
) -> Result<CircuitEnergies> {
    if let Some(prev) = e.scaled_field() {
        return Err(Error::AlreadyFieldScaled(prev));
    }
    let fj = (1.0 - reduced_field_sq(b, bc_junction)?).sqrt();
    let fl = (1.0 - reduced_field_sq(b, bc_inductor)?).sqrt();
    Ok(CircuitEnergies::new(e.e_c, e.e_l * fl, e.e_j * fj)?.at_field(b))
}

/// Kinetic-inductance resonator: `f_r ∝ 1/√L_kin ∝ √Δ`.
pub fn resonator_frequency(f_r0: f64, b: f64, model: &GapModel) -> Result<f64> {
    if !(f_r0 > 0.0) {
        return Err(Error::invalid(format!("zero-field frequency must be positive, got {f_r0}")));
    }
    Ok(f_r0 * (1.0 - reduced_field_sq(b, model.critical_field)?).powf(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalFieldMode {
    /// Samples are relative gap values `Δ(B)/Δ(0)`.
    Gap,
    /// Samples are resonator frequencies; `f_r(0)` is fitted alongside `B_c`.
    Resonator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalFieldFit {
    pub critical_field: f64,
    pub critical_field_stderr: f64,
    /// Fitted `f_r(0)` and its standard error (resonator mode only).
    pub zero_field_frequency: Option<(f64, f64)>,
    pub fit: FitResult,
}

fn suppression(b: f64, bc: f64, power: f64) -> f64 {
    let s = 1.0 - (b / bc) * (b / bc);
    if s > 0.0 {
        s.powf(power)
    } else {
        0.0
    }
}

/// Fits `B_c` to gap or resonator-frequency samples `(B, y, σ)`.
pub fn fit_critical_field(points: &[DataPoint], mode: CriticalFieldMode) -> Result<CriticalFieldFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 field points, got {}", points.len())));
    }
    let b_min = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let b_max = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    if b_max - b_min <= 1e-12 * b_max.abs().max(1e-12) {
        return Err(Error::NonIdentifiable("all samples share the same field".into()));
    }
    if points.iter().any(|p| p.x < 0.0) {
        return Err(Error::invalid("fields must be >= 0"));
    }
    let lowest = points.iter().min_by(|a, b| a.x.total_cmp(&b.x)).unwrap();

    let (power, scale) = match mode {
        CriticalFieldMode::Gap => (0.5, 1.0),
        CriticalFieldMode::Resonator => (0.25, lowest.y / suppression(lowest.x, 4.0 * b_max, 0.25)),
    };
    // invert each sample for B_c and take the median as the starting point
    let mut guesses: Vec<f64> = points
        .iter()
        .filter_map(|p| {
            let rel = (p.y / scale).powf(1.0 / power);
            (p.x > 0.0 && rel < 1.0 && rel > 0.0).then(|| p.x / (1.0 - rel).sqrt())
        })
        .collect();
    guesses.sort_by(f64::total_cmp);
    let bc0 = guesses.get(guesses.len() / 2).copied().unwrap_or(2.0 * b_max).max(b_max * 1.01);
    let bc_floor = b_max * (1.0 + 1e-9);

    match mode {
        CriticalFieldMode::Gap => {
            let fit = least_squares_fit(
                |b, p| suppression(b, p[0], 0.5),
                points,
                &[bc0],
                Some(&[(bc_floor, f64::INFINITY)]),
            )?;
            check_identifiable(&fit)?;
            let se = fit.std_errors();
            Ok(CriticalFieldFit {
                critical_field: fit.parameters[0],
                critical_field_stderr: se[0],
                zero_field_frequency: None,
                fit,
            })
        }
        CriticalFieldMode::Resonator => {
            let fit = least_squares_fit(
                |b, p| p[0] * suppression(b, p[1], 0.25),
                points,
                &[scale, bc0],
                Some(&[(0.0, f64::INFINITY), (bc_floor, f64::INFINITY)]),
            )?;
            check_identifiable(&fit)?;
            let se = fit.std_errors();
            Ok(CriticalFieldFit {
                critical_field: fit.parameters[1],
                critical_field_stderr: se[1],
                zero_field_frequency: Some((fit.parameters[0], se[0])),
                fit,
            })
        }
    }
}

fn check_identifiable(fit: &FitResult) -> Result<()> {
    if fit.identifiable {
        Ok(())
    } else {
        Err(Error::NonIdentifiable("critical field is not constrained by the data".into()))
    }
}

/// Paramagnetic spin ensemble with Zeeman energy `g μ_B B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsrModel {
    pub g_factor: f64,
    pub spin: f64,
}

impl Default for EsrModel {
    fn default() -> Self {
        Self { g_factor: 2.0, spin: 0.5 }
    }
}

/// Field (T) at which the spin resonance matches a qubit at `f_q` GHz:
/// `B_ESR = h f_q / g μ_B`.
pub fn esr_field(f_q: f64, model: &EsrModel) -> Result<f64> {
    if !(f_q > 0.0) || !f_q.is_finite() {
        return Err(Error::invalid(format!("qubit frequency must be positive, got {f_q}")));
    }
    if !(model.g_factor > 0.0) {
        return Err(Error::invalid(format!("g-factor must be positive, got {}", model.g_factor)));
    }
    Ok(PLANCK * f_q * GHZ / (model.g_factor * BOHR_MAGNETON))
}

/// Excited-state population of a two-level system at `f_q` GHz and `T` kelvin:
/// `p = 1/(1 + e^{h f_q / k_B T})`.
pub fn thermal_population(f_q: f64, temperature: f64) -> Result<f64> {
    if !(f_q > 0.0) || !f_q.is_finite() {
        return Err(Error::invalid(format!("qubit frequency must be positive, got {f_q}")));
    }
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    let x = PLANCK * f_q * GHZ / (BOLTZMANN * temperature);
    Ok(1.0 / (1.0 + x.exp()))
}

/// Inverse of [`thermal_population`].
pub fn temperature_from_population(f_q: f64, population: f64) -> Result<f64> {
    if !(f_q > 0.0) || !f_q.is_finite() {
        return Err(Error::invalid(format!("qubit frequency must be positive, got {f_q}")));
    }
    if !(population > 0.0 && population < 0.5) {
        return Err(Error::InvalidPopulation(population));
    }
    let ratio = ((1.0 - population) / population).ln();
    Ok(PLANCK * f_q * GHZ / (BOLTZMANN * ratio))
}

/// Perpendicular field cancelling chip misalignment: `B_⊥ = m · B_∥`
/// (`misalignment` in T/T).
pub fn compensation_field(b_parallel: f64, misalignment: f64) -> f64 {
    misalignment * b_parallel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{transition_frequencies, DEFAULT_BASIS};

    #[test]
    fn gap_closed_forms() {
        let m = GapModel::new(6.8, GapElement::Junction).unwrap();
        assert_eq!(gap_fraction(0.0, &m).unwrap(), 1.0);
        assert!(gap_fraction(6.8 * (1.0 - 1e-12), &m).unwrap() < 2e-6);
        // √(1 − (4.9/6.8)²) = √(1 − 24.01/46.24) = √(22.23/46.24)
        let by_hand = (22.23_f64 / 46.24).sqrt();
        assert!((gap_fraction(4.9, &m).unwrap() - by_hand).abs() < 1e-12);
        assert!(matches!(gap_fraction(6.8, &m), Err(Error::FieldExceedsCritical { .. })));
        assert!(matches!(gap_fraction(7.0, &m), Err(Error::FieldExceedsCritical { .. })));
    }

    #[test]
    fn scaling_rules() {
        let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
        let same = scale_energies(&e, 0.0, 6.8, 4.9).unwrap();
        assert_eq!((same.e_c, same.e_l, same.e_j), (e.e_c, e.e_l, e.e_j));

        let common = scale_energies(&e, 2.0, 5.0, 5.0).unwrap();
        assert!((common.e_j / common.e_l - e.e_j / e.e_l).abs() < 1e-12);
        assert_eq!(common.e_c, e.e_c);

        assert!(matches!(
            scale_energies(&common, 1.0, 5.0, 5.0),
            Err(Error::AlreadyFieldScaled(b)) if b == 2.0
        ));
        assert!(matches!(
            scale_energies(&e, 5.0, 6.8, 4.9),
            Err(Error::FieldExceedsCritical { .. })
        ));
    }

    #[test]
    fn one_tesla_shift_below_two_percent() {
        let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
        let f0 = transition_frequencies(&e, 0.5, DEFAULT_BASIS).unwrap().f_ge;
        let scaled = scale_energies(&e, 1.0, 6.8, 4.9).unwrap();
        let f1 = transition_frequencies(&scaled, 0.5, DEFAULT_BASIS).unwrap().f_ge;
        assert!(((f1 - f0) / f0).abs() < 0.02);
    }

    #[test]
    fn resonator_closed_forms() {
        let m = GapModel::new(4.9, GapElement::Resonator).unwrap();
        assert_eq!(resonator_frequency(7.5, 0.0, &m).unwrap(), 7.5);
        let f = resonator_frequency(7.5, 4.9 / 2f64.sqrt(), &m).unwrap();
        assert!((f - 7.5 * 0.5f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn noiseless_gap_fit() {
        let m = GapModel::new(6.8, GapElement::Junction).unwrap();
        let pts: Vec<_> = (0..15)
            .map(|i| {
                let b = 0.4 * i as f64;
                DataPoint::new(b, gap_fraction(b, &m).unwrap(), 0.01)
            })
            .collect();
        let fit = fit_critical_field(&pts, CriticalFieldMode::Gap).unwrap();
        assert!((fit.critical_field / 6.8 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn noiseless_resonator_fit() {
        let m = GapModel::new(4.9, GapElement::Resonator).unwrap();
        let pts: Vec<_> = (0..12)
            .map(|i| {
                let b = 0.35 * i as f64;
                DataPoint::new(b, resonator_frequency(6.2, b, &m).unwrap(), 1e-3)
            })
            .collect();
        let fit = fit_critical_field(&pts, CriticalFieldMode::Resonator).unwrap();
        assert!((fit.critical_field / 4.9 - 1.0).abs() < 1e-6);
        let (f0, _) = fit.zero_field_frequency.unwrap();
        assert!((f0 / 6.2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_field_grid() {
        let pts = vec![DataPoint::new(1.0, 0.9, 0.01); 5];
        assert!(matches!(
            fit_critical_field(&pts, CriticalFieldMode::Gap),
            Err(Error::NonIdentifiable(_))
        ));
        assert!(fit_critical_field(&pts[..2], CriticalFieldMode::Gap).is_err());
    }

    #[test]
    fn esr_condition() {
        let m = EsrModel::default();
        let b = esr_field(2.365, &m).unwrap();
        // 6.62607015e-34 · 2.365e9 / (2 · 9.274010078e-24)
        assert!((b - 0.084_486_95).abs() < 1e-6, "{b}");
        assert_eq!(esr_field(4.73, &m).unwrap(), 2.0 * b);
        let g1 = EsrModel { g_factor: 1.0, spin: 0.5 };
        assert!((esr_field(2.365, &g1).unwrap() - 2.0 * b).abs() < 1e-15);
        assert!(esr_field(0.0, &m).is_err());
    }

    #[test]
    fn thermal_population_limits() {
        assert!((0.5 - thermal_population(2.365, 1e6).unwrap()) < 1e-6);
        // h f = k_B T ln 2  ⇒  p = 1/3
        let t = PLANCK * 2.365 * GHZ / (BOLTZMANN * 2f64.ln());
        assert!((thermal_population(2.365, t).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(matches!(
            temperature_from_population(2.365, 0.5),
            Err(Error::InvalidPopulation(_))
        ));
        assert!(matches!(
            temperature_from_population(2.365, 0.0),
            Err(Error::InvalidPopulation(_))
        ));
    }

    #[test]
    fn measured_qubit_temperatures() {
        // x = h f / k_B T for f = 2.365 GHz: 0.75668 at 150 mK and 0.68789 at 165 mK
        let p150 = thermal_population(2.365, 0.150).unwrap();
        let p165 = thermal_population(2.365, 0.165).unwrap();
        assert!((p150 - 1.0 / (1.0 + 0.756_681_f64.exp())).abs() < 1e-5, "{p150}");
        assert!((p165 - 1.0 / (1.0 + 0.687_892_f64.exp())).abs() < 1e-5, "{p165}");
        assert!(p165 > p150);
        let t = temperature_from_population(2.365, p165).unwrap();
        assert!((t - 0.165).abs() < 1e-12);
    }

    #[test]
    fn compensation() {
        assert_eq!(compensation_field(0.0, 0.66e-3), 0.0);
        assert!((compensation_field(1.0, 0.66e-3) - 0.66e-3).abs() < 1e-18);
        assert_eq!(compensation_field(2.4, 0.66e-3), 2.0 * compensation_field(1.2, 0.66e-3));
    }
}
