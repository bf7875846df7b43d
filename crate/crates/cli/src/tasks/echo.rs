//! Joint Hahn-echo fit across flux points.

use fluxkit::circuit::FluxoniumSolver;
use fluxkit::noise::{echo_decay_model, echo_dephasing_rate, joint_fit_echo, DecayCurve, FluxEchoCurve};
use serde::{Deserialize, Serialize};

use super::{default_basis, gaussian, to_table, EnergiesCfg, Synthetic, TaskOutput};
use crate::config::{section, Context};
use crate::error::CliError;
use crate::report::{Convergence, Quantity};
use crate::table::{read_numeric, Table};

const DATA_HEADER: [&str; 4] = ["curve", "flux_phi0", "t_s", "population"];

/// Long-format data `curve,flux_phi0,t_s,population`; consecutive rows with
/// the same curve index form one curve.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    data: String,
    energies: EnergiesCfg,
    #[serde(default = "default_basis")]
    basis_size: usize,
}

pub fn run(params: &toml::Table, ctx: &mut Context) -> Result<TaskOutput, CliError> {
    let p: Params = section("parameters", params)?;
    let energies = p.energies.build()?;
    let bytes = ctx.read_input(&p.data)?;
    let path = ctx.resolve(&p.data);
    let rows = read_numeric(&bytes, 4, &path)?;

    let mut curves: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for r in rows {
        match curves.last_mut() {
            Some((id, flux, t, y)) if *id == r[0] => {
                if *flux != r[1] {
                    return Err(CliError::Data {
                        path,
                        message: format!("curve {id} changes flux from {flux} to {}", r[1]),
                    });
                }
                t.push(r[2]);
                y.push(r[3]);
            }
            _ => curves.push((r[0], r[1], vec![r[2]], vec![r[3]])),
        }
    }
    let curves = curves
        .into_iter()
        .map(|(_, flux, t, y)| {
            DecayCurve::new(t, y, None)
                .map(|curve| FluxEchoCurve { flux, curve })
                .map_err(|e| CliError::Data { path: path.clone(), message: format!("curve at {flux} Φ0: {e}") })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let fit = joint_fit_echo(&curves, &energies, p.basis_size)?;
    let mut out = TaskOutput::default();
    out.set("gamma_exp", Quantity::fitted(fit.rates.gamma_exp, fit.rates.gamma_exp_stderr, "1/s"));
    out.set("sqrt_a_phi", Quantity::fitted(fit.sqrt_a_phi, fit.sqrt_a_phi_stderr, "Phi0"));
    out.convergence = Some(Convergence::from(&fit.rates.fit));
    if !fit.rates.fit.identifiable {
        out.warnings.push("non-identifiable: Jacobian is rank deficient at the optimum".into());
    }
    let mut t = Table::new(&[
        "flux_phi0",
        "sensitivity_rad_per_s_per_phi0",
        "gamma_phi_per_s",
        "gamma_phi_stderr_per_s",
        "pinned",
    ]);
    for c in &fit.rates.curves {
        t.push(&[c.flux, c.sensitivity, c.gamma_phi, c.gamma_phi_stderr, if c.pinned { 1.0 } else { 0.0 }]);
    }
    out.table("echo_rates.csv", t);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Truth {
    energies: EnergiesCfg,
    #[serde(default = "default_basis")]
    basis_size: usize,
    /// Φ₀.
    sqrt_a_phi: f64,
    /// 1/s.
    gamma_exp: f64,
    #[serde(default = "default_flux_min")]
    flux_min: f64,
    #[serde(default = "default_flux_max")]
    flux_max: f64,
    #[serde(default = "default_curves")]
    curves: usize,
    #[serde(default = "default_samples")]
    samples: usize,
    /// Sample spacing, s; the first sample sits at one spacing.
    #[serde(default = "default_spacing")]
    spacing: f64,
    /// Gaussian population noise.
    #[serde(default)]
    noise: f64,
}

fn default_flux_min() -> f64 {
    0.48
}

fn default_flux_max() -> f64 {
    0.52
}

fn default_curves() -> usize {
    42
}

fn default_samples() -> usize {
    80
}

fn default_spacing() -> f64 {
    0.5e-6
}

pub fn generate(synthetic: &toml::Table, seed: u64) -> Result<Synthetic, CliError> {
    let s: Truth = section("synthetic", synthetic)?;
    if s.curves < 2 || s.samples < 2 || !(s.spacing > 0.0) || !(s.noise >= 0.0) {
        return Err(CliError::schema("synthetic", "need curves >= 2, samples >= 2, spacing > 0, noise >= 0"));
    }
    let solver = FluxoniumSolver::new(s.energies.build()?, s.basis_size)?;
    let a_phi = s.sqrt_a_phi * s.sqrt_a_phi;
    let mut draw = gaussian(seed);
    let mut t = Table::new(&DATA_HEADER);
    for i in 0..s.curves {
        let flux = s.flux_min + (s.flux_max - s.flux_min) * i as f64 / (s.curves - 1) as f64;
        let g = echo_dephasing_rate(a_phi, solver.sensitivity(flux)?.per_phi0);
        for j in 1..=s.samples {
            let time = j as f64 * s.spacing;
            let y = echo_decay_model(time, g, s.gamma_exp) + s.noise * draw();
            t.push(&[i as f64, flux, time, y.clamp(0.0, 1.0)]);
        }
    }
    let fit = Params { data: "echo_curves.csv".into(), energies: s.energies, basis_size: s.basis_size };
    Ok(Synthetic {
        tables: vec![("echo_curves.csv".into(), t)],
        truth: serde_json::to_value(&s).expect("truth serialises"),
        fit_parameters: to_table(&fit),
    })
}
