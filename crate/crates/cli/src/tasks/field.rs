//! Sweet-spot spectrum versus parallel field and critical-field fits.

use fluxkit::circuit::FluxoniumSolver;
use fluxkit::field::{
    fit_critical_field, gap_fraction, resonator_frequency, scale_energies, CriticalFieldMode,
    GapElement, GapModel,
};
use fluxkit::numerics::DataPoint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_basis, gaussian, to_table, EnergiesCfg, Synthetic, TaskOutput};
use crate::config::{section, Context};
use crate::error::CliError;
use crate::report::{Convergence, Quantity};
use crate::table::{read_numeric, Table};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Sweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_field: Option<CriticalFieldCfg>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sweep {
    energies: EnergiesCfg,
    bc_junction: f64,
    bc_inductor: f64,
    #[serde(default)]
    field_min: f64,
    field_max: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default = "half")]
    flux: f64,
    #[serde(default = "default_basis")]
    basis_size: usize,
}

/// Samples `b_t,value,sigma`: relative gap in `gap` mode, GHz in `resonator` mode.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriticalFieldCfg {
    data: String,
    mode: CriticalFieldMode,
}

fn default_points() -> usize {
    25
}

fn half() -> f64 {
    0.5
}

pub fn run(params: &toml::Table, ctx: &mut Context) -> Result<TaskOutput, CliError> {
    let p: Params = section("parameters", params)?;
    if p.sweep.is_none() && p.critical_field.is_none() {
        return Err(CliError::schema("parameters", "missing field `sweep` or `critical_field`"));
    }
    let mut out = TaskOutput::default();
    if let Some(s) = &p.sweep {
        sweep(s, &mut out)?;
    }
    if let Some(c) = &p.critical_field {
        critical_field(c, ctx, &mut out)?;
    }
    Ok(out)
}

fn sweep(s: &Sweep, out: &mut TaskOutput) -> Result<(), CliError> {
    if s.points < 2 || !(s.field_max > s.field_min) {
        return Err(CliError::schema("parameters.sweep", "need points >= 2 and field_max > field_min"));
    }
    let e0 = s.energies.build()?;
    let jj = GapModel::new(s.bc_junction, GapElement::Junction)?;
    let ind = GapModel::new(s.bc_inductor, GapElement::Inductor)?;
    let step = (s.field_max - s.field_min) / (s.points - 1) as f64;
    let fields: Vec<f64> = (0..s.points).map(|i| s.field_min + i as f64 * step).collect();
    let rows = fields
        .par_iter()
        .map(|&b| -> Result<[f64; 5], CliError> {
            let e = scale_energies(&e0, b, s.bc_junction, s.bc_inductor)?;
            let t = FluxoniumSolver::new(e, s.basis_size)?.transitions(s.flux)?;
            Ok([b, t.f_ge, t.f_gf, gap_fraction(b, &jj)?, gap_fraction(b, &ind)?])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["b_t", "f_ge_ghz", "f_gf_ghz", "gap_ratio_junction", "gap_ratio_inductor"]);
    for r in &rows {
        t.push(r);
    }
    out.table("field_sweep.csv", t);

    let f0 = FluxoniumSolver::new(e0, s.basis_size)?.transitions(s.flux)?.f_ge;
    let last = rows.last().expect("at least two points");
    out.set("f_ge_zero_field", Quantity::new(f0, "GHz"));
    out.set("f_ge_max_field", Quantity::new(last[1], "GHz"));
    out.set("relative_shift_max_field", Quantity::new(last[1] / f0 - 1.0, "1"));
    Ok(())
}

fn critical_field(c: &CriticalFieldCfg, ctx: &mut Context, out: &mut TaskOutput) -> Result<(), CliError> {
    let bytes = ctx.read_input(&c.data)?;
    let rows = read_numeric(&bytes, 3, &ctx.resolve(&c.data))?;
    let points: Vec<DataPoint> = rows.iter().map(|r| DataPoint::new(r[0], r[1], r[2])).collect();
    let fit = fit_critical_field(&points, c.mode)?;
    let bc = fit.critical_field;
    out.set("critical_field", Quantity::fitted(bc, fit.critical_field_stderr, "T"));
    let model = GapModel::new(bc, GapElement::Resonator)?;
    let (value_col, model_col) = match c.mode {
        CriticalFieldMode::Gap => ("gap_ratio", "gap_ratio_model"),
        CriticalFieldMode::Resonator => ("f_r_ghz", "f_r_model_ghz"),
    };
    if let Some((f0, se)) = fit.zero_field_frequency {
        out.set("zero_field_frequency", Quantity::fitted(f0, se, "GHz"));
    }
    let mut t = Table::new(&["b_t", value_col, model_col]);
    for p in &points {
        let m = match (c.mode, fit.zero_field_frequency) {
            _ if p.x >= bc => 0.0,
            (CriticalFieldMode::Resonator, Some((f0, _))) => resonator_frequency(f0, p.x, &model)?,
            _ => gap_fraction(p.x, &model)?,
        };
        t.push(&[p.x, p.y, m]);
    }
    out.table("critical_field_fit.csv", t);
    out.convergence = Some(Convergence::from(&fit.fit));
    if !fit.fit.identifiable {
        out.warnings.push("non-identifiable: Jacobian is rank deficient at the optimum".into());
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Truth {
    mode: CriticalFieldMode,
    critical_field: f64,
    /// Resonator mode only, GHz.
    #[serde(default = "default_f_r0")]
    zero_field_frequency: f64,
    #[serde(default)]
    field_min: f64,
    /// Defaults to 90 % of the critical field.
    field_max: Option<f64>,
    #[serde(default = "default_points")]
    points: usize,
    /// Gaussian noise relative to the zero-field value.
    #[serde(default)]
    noise: f64,
}

fn default_f_r0() -> f64 {
    7.0
}

pub fn generate(synthetic: &toml::Table, seed: u64) -> Result<Synthetic, CliError> {
    let s: Truth = section("synthetic", synthetic)?;
    let model = GapModel::new(s.critical_field, GapElement::Resonator)?;
    let field_max = s.field_max.unwrap_or(0.9 * s.critical_field);
    if s.points < 3 || !(field_max > s.field_min) || !(s.noise >= 0.0) {
        return Err(CliError::schema("synthetic", "need points >= 3, field_max > field_min, noise >= 0"));
    }
    let scale = match s.mode {
        CriticalFieldMode::Gap => 1.0,
        CriticalFieldMode::Resonator => s.zero_field_frequency,
    };
    let sigma = scale * if s.noise > 0.0 { s.noise } else { 1.0 };
    let mut draw = gaussian(seed);
    let header = match s.mode {
        CriticalFieldMode::Gap => ["b_t", "gap_ratio", "sigma"],
        CriticalFieldMode::Resonator => ["b_t", "f_r_ghz", "sigma_ghz"],
    };
    let mut t = Table::new(&header);
    let step = (field_max - s.field_min) / (s.points - 1) as f64;
    for i in 0..s.points {
        let b = s.field_min + i as f64 * step;
        let clean = match s.mode {
            CriticalFieldMode::Gap => gap_fraction(b, &model)?,
            CriticalFieldMode::Resonator => resonator_frequency(s.zero_field_frequency, b, &model)?,
        };
        t.push(&[b, clean + s.noise * scale * draw(), sigma]);
    }
    let fit = Params {
        sweep: None,
        critical_field: Some(CriticalFieldCfg { data: "critical_field.csv".into(), mode: s.mode }),
    };
    Ok(Synthetic {
        tables: vec![("critical_field.csv".into(), t)],
        truth: serde_json::to_value(&s).expect("truth serialises"),
        fit_parameters: to_table(&fit),
    })
}
