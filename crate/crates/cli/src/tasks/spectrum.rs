//! Transition frequencies over a flux grid, optionally at finite field, plus
//! element values and gradiometer figures.

use fluxkit::circuit::{
    effective_inductance, elements_from_energies, inductance_asymmetry, periodicity_ratio,
    FluxoniumSolver, GradiometerGeometry, LoopAreas, PeriodRatio,
};
use fluxkit::field::scale_energies;
use serde::Deserialize;

use super::{default_basis, EnergiesCfg, TaskOutput};
use crate::config::section;
use crate::error::CliError;
use crate::report::Quantity;
use crate::table::Table;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    energies: EnergiesCfg,
    #[serde(default)]
    flux: FluxGrid,
    #[serde(default = "default_basis")]
    basis_size: usize,
    field: Option<FieldCfg>,
    gradiometer: Option<GradiometerCfg>,
}

/// Evenly spaced flux points in Φ₀, ends included.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FluxGrid {
    min: f64,
    max: f64,
    points: usize,
}

impl Default for FluxGrid {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0, points: 201 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldCfg {
    /// Parallel field, T.
    b: f64,
    bc_junction: f64,
    bc_inductor: f64,
}

/// Loop inductances in H, optional loop areas in any common unit.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GradiometerCfg {
    l1: f64,
    ls: f64,
    l2: f64,
    l3: f64,
    areas: Option<AreasCfg>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreasCfg {
    loop1: f64,
    loop2: f64,
    single_loop: f64,
}

pub fn run(params: &toml::Table) -> Result<TaskOutput, CliError> {
    let p: Params = section("parameters", params)?;
    if p.flux.points < 2 {
        return Err(CliError::schema("parameters.flux.points", "need at least 2 points"));
    }
    if !(p.flux.max > p.flux.min) {
        return Err(CliError::schema("parameters.flux", "max must exceed min"));
    }
    let zero_field = p.energies.build()?;
    let energies = match &p.field {
        Some(f) => scale_energies(&zero_field, f.b, f.bc_junction, f.bc_inductor)?,
        None => zero_field,
    };
    let mut out = TaskOutput::default();

    let n = p.flux.points;
    let step = (p.flux.max - p.flux.min) / (n - 1) as f64;
    let fluxes: Vec<f64> = (0..n).map(|i| p.flux.min + i as f64 * step).collect();
    let solver = FluxoniumSolver::new(energies, p.basis_size)?;
    let spec = solver.spectrum(&fluxes)?;
    let mut t = Table::new(&["phi_ext_phi0", "f_ge_ghz", "f_gf_ghz"]);
    for pt in &spec.points {
        t.push(&[pt.phi_ext, pt.f_ge, pt.f_gf]);
    }
    out.table("spectrum.csv", t);

    let sweet = solver.transitions(0.5)?;
    out.set("f_ge_sweet_spot", Quantity::new(sweet.f_ge, "GHz"));
    out.set("f_gf_sweet_spot", Quantity::new(sweet.f_gf, "GHz"));
    out.set("plasma_frequency", Quantity::new(energies.plasma_frequency(), "GHz"));
    out.set("e_l", Quantity::new(energies.e_l, "GHz"));
    out.set("e_j", Quantity::new(energies.e_j, "GHz"));

    let el = elements_from_energies(&zero_field)?;
    out.set("capacitance", Quantity::new(el.capacitance, "F"));
    out.set("inductance", Quantity::new(el.inductance, "H"));
    out.set("critical_current", Quantity::new(el.critical_current, "A"));

    if let Some(g) = &p.gradiometer {
        let geom = GradiometerGeometry::new(g.l1, g.ls, g.l2, g.l3)?;
        out.set("inductance_asymmetry", Quantity::new(inductance_asymmetry(&geom)?, "1"));
        out.set("effective_inductance", Quantity::new(effective_inductance(&geom)?, "H"));
        if let Some(a) = &g.areas {
            let areas = LoopAreas { loop1: a.loop1, loop2: a.loop2, single_loop: a.single_loop };
            match periodicity_ratio(&geom, &areas)? {
                PeriodRatio::Finite(v) => out.set("periodicity_ratio", Quantity::new(v, "1")),
                PeriodRatio::Infinite => {
                    out.warnings.push("gradiometer is insensitive to uniform perpendicular field".into())
                }
            }
        }
    }
    Ok(out)
}
