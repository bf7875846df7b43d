//! Two-loop gradiometric flux network.
//!
//! Loop 1 carries `L₁ + L_s`, loop 2 carries `L₃`, and `L₂` is shared. The
//! qubit sees `Φ_ext = Φ_Δ − α Φ_Σ` with `Φ_Σ/Δ = (Φ₁ ± Φ₂)/2` and the
//! inductance asymmetry `α = (L_{1,s} − L₃)/(L_{1,s} + L₃)`.

use serde::Serialize;

use crate::{Error, Result};

/// Loop inductances in henries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradiometerGeometry {
    pub l1: f64,
    pub ls: f64,
    pub l2: f64,
    pub l3: f64,
}

impl GradiometerGeometry {
    pub fn new(l1: f64, ls: f64, l2: f64, l3: f64) -> Result<Self> {
        let g = Self { l1, ls, l2, l3 };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("L1", self.l1), ("Ls", self.ls), ("L2", self.l2), ("L3", self.l3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.loop1() + self.l3 <= 0.0 {
            return Err(Error::DegenerateGeometry("L1 + Ls + L3 must be positive".into()));
        }
        Ok(())
    }

    /// `L_{1,s} = L₁ + L_s`.
    pub fn loop1(&self) -> f64 {
        self.l1 + self.ls
    }
}

pub fn inductance_asymmetry(g: &GradiometerGeometry) -> Result<f64> {
    g.validate()?;
    let (a, b) = (g.loop1(), g.l3);
    Ok((a - b) / (a + b))
}

/// Effective qubit flux (Φ₀) from the two loop fluxes (Φ₀).
pub fn effective_flux(g: &GradiometerGeometry, phi1: f64, phi2: f64) -> Result<f64> {
    let alpha = inductance_asymmetry(g)?;
    let sum = 0.5 * (phi1 + phi2);
    let diff = 0.5 * (phi1 - phi2);
    Ok(diff - alpha * sum)
}

/// `L_q = (L_{1,s}L₂ + L₂L₃ + L₃L_{1,s}) / (L_{1,s} + L₃)`.
pub fn effective_inductance(g: &GradiometerGeometry) -> Result<f64> {
    g.validate()?;
    let (a, b, c) = (g.loop1(), g.l2, g.l3);
    Ok((a * b + b * c + c * a) / (a + c))
}

/// Loop areas used to compare perpendicular-field periodicities. Any
/// consistent area unit works; only ratios enter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopAreas {
    /// Area threading flux `Φ₁`.
    pub loop1: f64,
    /// Area threading flux `Φ₂`.
    pub loop2: f64,
    /// Area of the single loop in the non-gradiometric comparison device.
    pub single_loop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PeriodRatio {
    Finite(f64),
    /// The gradiometer picks up no net flux from a uniform perpendicular field.
    Infinite,
}

impl PeriodRatio {
    pub fn value(&self) -> f64 {
        match self {
            PeriodRatio::Finite(v) => *v,
            PeriodRatio::Infinite => f64::INFINITY,
        }
    }
}

/// Perpendicular-field period of the gradiometric device relative to the
/// single-loop device: `A_single / |(A₁ − A₂)/2 − α(A₁ + A₂)/2|`.
pub fn periodicity_ratio(g: &GradiometerGeometry, areas: &LoopAreas) -> Result<PeriodRatio> {
    for (name, v) in
        [("loop1", areas.loop1), ("loop2", areas.loop2), ("single_loop", areas.single_loop)]
    {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("area {name} must be positive, got {v}")));
        }
    }
    // flux per unit field through the gradiometer, via the same map as effective_flux
    let pickup = effective_flux(g, areas.loop1, areas.loop2)?;
    if pickup.abs() <= 1e-14 * (areas.loop1 + areas.loop2) {
        return Ok(PeriodRatio::Infinite);
    }
    Ok(PeriodRatio::Finite(areas.single_loop / pickup.abs()))
}
