//! Spin-temperature fit of flux-noise amplitude versus field.

use fluxkit::noise::{fit_spin_temperature, flux_noise_power, SpinFreezeModel};
use fluxkit::numerics::DataPoint;
use serde::{Deserialize, Serialize};

use super::{gaussian, to_table, Synthetic, TaskOutput};
use crate::config::{section, Context};
use crate::error::CliError;
use crate::report::{Convergence, Quantity};
use crate::table::{read_numeric, Table};

/// Samples `b_t,sqrt_a_phi_phi0,sigma_phi0`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    data: String,
    #[serde(default = "yes")]
    include_floor: bool,
}

fn yes() -> bool {
    true
}

pub fn run(params: &toml::Table, ctx: &mut Context) -> Result<TaskOutput, CliError> {
    let p: Params = section("parameters", params)?;
    let bytes = ctx.read_input(&p.data)?;
    let rows = read_numeric(&bytes, 3, &ctx.resolve(&p.data))?;
    let points: Vec<DataPoint> = rows.iter().map(|r| DataPoint::new(r[0], r[1], r[2])).collect();
    let fit = fit_spin_temperature(&points, p.include_floor)?;

    // fit parameters are (√A0, T_S, √floor)
    let se = fit.fit.std_errors();
    let m = fit.model;
    let mut out = TaskOutput::default();
    out.set("a0", Quantity::fitted(m.a0, 2.0 * m.a0.sqrt() * se[0], "Phi0^2"));
    out.set("t_s", Quantity::fitted(m.t_s, fit.t_s_stderr, "K"));
    out.set("floor", Quantity::fitted(m.floor, 2.0 * m.floor.sqrt() * se[2], "Phi0^2"));
    out.convergence = Some(Convergence::from(&fit.fit));
    if !fit.fit.identifiable {
        out.warnings.push("non-identifiable: Jacobian is rank deficient at the optimum".into());
    }
    let mut t = Table::new(&["b_t", "sqrt_a_phi_phi0", "sqrt_a_phi_model_phi0"]);
    for pt in &points {
        t.push(&[pt.x, pt.y, flux_noise_power(pt.x, &m).sqrt()]);
    }
    out.table("spin_freeze_fit.csv", t);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Truth {
    /// Φ₀².
    a0: f64,
    /// K.
    t_s: f64,
    /// Φ₀².
    #[serde(default)]
    floor: f64,
    #[serde(default)]
    field_min: f64,
    #[serde(default = "default_field_max")]
    field_max: f64,
    #[serde(default = "default_points")]
    points: usize,
    /// Relative Gaussian noise on `√A_Φ`.
    #[serde(default)]
    noise: f64,
}

fn default_field_max() -> f64 {
    0.6
}

fn default_points() -> usize {
    13
}

pub fn generate(synthetic: &toml::Table, seed: u64) -> Result<Synthetic, CliError> {
    let s: Truth = section("synthetic", synthetic)?;
    let model = SpinFreezeModel::new(s.a0, s.t_s, s.floor)?;
    if s.points < 3 || !(s.field_max > s.field_min) || !(s.noise >= 0.0) {
        return Err(CliError::schema("synthetic", "need points >= 3, field_max > field_min, noise >= 0"));
    }
    let rel = if s.noise > 0.0 { s.noise } else { 1.0 };
    let mut draw = gaussian(seed);
    let mut t = Table::new(&["b_t", "sqrt_a_phi_phi0", "sigma_phi0"]);
    for i in 0..s.points {
        let b = s.field_min + (s.field_max - s.field_min) * i as f64 / (s.points - 1) as f64;
        let y = flux_noise_power(b, &model).sqrt();
        t.push(&[b, y * (1.0 + s.noise * draw()), rel * y]);
    }
    let fit = Params { data: "spin_freeze.csv".into(), include_floor: s.floor > 0.0 };
    Ok(Synthetic {
        tables: vec![("spin_freeze.csv".into(), t)],
        truth: serde_json::to_value(&s).expect("truth serialises"),
        fit_parameters: to_table(&fit),
    })
}
