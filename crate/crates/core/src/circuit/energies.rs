use serde::Serialize;

use crate::constants::{ELEMENTARY_CHARGE, FLUX_QUANTUM, GHZ, PLANCK};
use crate::{Error, Result};

/// Charging, inductive and Josephson energies, all as `E / h` in GHz.
///
/// Energies obtained from [`crate::field::scale_energies`] remember the field
/// they were scaled to; scaling them again is refused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitEnergies {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
    #[serde(skip)]
    scaled_at: Option<f64>,
}

impl CircuitEnergies {
    pub fn new(e_c: f64, e_l: f64, e_j: f64) -> Result<Self> {
        for (name, v) in [("E_C", e_c), ("E_L", e_l), ("E_J", e_j)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { e_c, e_l, e_j, scaled_at: None })
    }

    /// Linear-oscillator frequency `√(8 E_C E_L)` in GHz.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.e_c * self.e_l).sqrt()
    }

    /// Field (T) these energies were rescaled to, if any.
    pub fn scaled_field(&self) -> Option<f64> {
        self.scaled_at
    }

    pub(crate) fn at_field(mut self, field: f64) -> Self {
        self.scaled_at = Some(field);
        self
    }
}

/// Lumped element values: capacitance (F), inductance (H), critical current (A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementValues {
    pub capacitance: f64,
    pub inductance: f64,
    pub critical_current: f64,
}

impl ElementValues {
    pub fn new(capacitance: f64, inductance: f64, critical_current: f64) -> Result<Self> {
        for (name, v) in [("C", capacitance), ("L_q", inductance), ("I_c", critical_current)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { capacitance, inductance, critical_current })
    }
}

const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * std::f64::consts::PI);

/// `E_C = e²/2C`, `E_L = (Φ₀/2π)²/L_q`, `E_J = I_c Φ₀/2π`, each divided by h.
pub fn energies_from_elements(v: &ElementValues) -> Result<CircuitEnergies> {
    let v = ElementValues::new(v.capacitance, v.inductance, v.critical_current)?;
    let h_ghz = PLANCK * GHZ;
    CircuitEnergies::new(
        ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * v.capacitance * h_ghz),
        REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / (v.inductance * h_ghz),
        v.critical_current * REDUCED_FLUX_QUANTUM / h_ghz,
    )
}

pub fn elements_from_energies(e: &CircuitEnergies) -> Result<ElementValues> {
    let e = CircuitEnergies::new(e.e_c, e.e_l, e.e_j)?;
    let h_ghz = PLANCK * GHZ;
    ElementValues::new(
        ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * e.e_c * h_ghz),
        REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / (e.e_l * h_ghz),
        e.e_j * h_ghz / REDUCED_FLUX_QUANTUM,
    )
}
