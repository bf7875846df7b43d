//! Telegraph traces, their spectra, fluctuator ensembles and Ramsey beating.

use fluxkit::noise::{
    angular, ensemble_psd, log_uniform_ensemble, lorentzian_psd, ramsey_beating, simulate_telegraph,
    TelegraphProcess,
};
use fluxkit::numerics::{estimate_psd, log_band_average};
use serde::Deserialize;

use super::TaskOutput;
use crate::config::{section, Context};
use crate::error::CliError;
use crate::report::Quantity;
use crate::table::Table;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    process: Option<ProcessCfg>,
    ensemble: Option<EnsembleCfg>,
    ramsey: Option<RamseyCfg>,
}

/// Rates in 1/s, amplitude in Φ₀.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessCfg {
    gamma_up: f64,
    gamma_down: f64,
    amplitude: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    /// Defaults to `0.05/Γ₁`.
    dt: Option<f64>,
    #[serde(default = "default_segments")]
    segments: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleCfg {
    #[serde(default = "default_count")]
    count: usize,
    gamma_min: f64,
    gamma_max: f64,
    #[serde(default = "half")]
    p_excited: f64,
    amplitude: f64,
    /// Output grid, Hz, log spaced.
    f_min: f64,
    f_max: f64,
    #[serde(default = "default_points")]
    points: usize,
}

/// Frequencies in Hz, times in s.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RamseyCfg {
    f_mean: f64,
    delta_f: f64,
    t2: f64,
    #[serde(default = "half")]
    weight: f64,
    #[serde(default = "default_ramsey_samples")]
    samples: usize,
    spacing: f64,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_segments() -> usize {
    64
}

fn default_count() -> usize {
    200
}

fn default_points() -> usize {
    41
}

fn default_ramsey_samples() -> usize {
    200
}

fn half() -> f64 {
    0.5
}

pub fn run(params: &toml::Table, ctx: &mut Context) -> Result<TaskOutput, CliError> {
    let p: Params = section("parameters", params)?;
    if p.process.is_none() && p.ensemble.is_none() && p.ramsey.is_none() {
        return Err(CliError::schema("parameters", "missing field `process`, `ensemble` or `ramsey`"));
    }
    let mut out = TaskOutput::default();
    if let Some(c) = &p.process {
        process(c, ctx.seed, &mut out)?;
    }
    if let Some(c) = &p.ensemble {
        ensemble(c, ctx.seed.wrapping_add(1), &mut out)?;
    }
    if let Some(c) = &p.ramsey {
        let times: Vec<f64> = (0..c.samples).map(|i| i as f64 * c.spacing).collect();
        let curve = ramsey_beating(c.f_mean, c.delta_f, &times, c.t2, c.weight)?;
        let mut t = Table::new(&["t_s", "population"]);
        for (time, y) in curve.iter() {
            t.push(&[time, y]);
        }
        out.table("ramsey.csv", t);
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn process(c: &ProcessCfg, seed: u64, out: &mut TaskOutput) -> Result<(), CliError> {
    let proc_ = TelegraphProcess::new(c.gamma_up, c.gamma_down, c.amplitude)?;
    let g1 = proc_.gamma1();
    if g1 == 0.0 && c.dt.is_none() {
        return Err(CliError::schema("parameters.process.dt", "required for a frozen process"));
    }
    let dt = c.dt.unwrap_or(0.05 / g1);
    if c.samples < 2 {
        return Err(CliError::schema("parameters.process.samples", "need at least 2 samples"));
    }
    let trace = simulate_telegraph(&proc_, c.samples as f64 * dt, dt, seed, None)?;
    let x = trace.flux();
    let m = mean(&x);
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
    out.set("gamma1", Quantity::new(g1, "1/s"));
    out.set("occupancy", Quantity::new(trace.occupancy(), "1"));
    out.set("occupancy_expected", Quantity::new(proc_.p_excited(), "1"));
    out.set("variance", Quantity::new(var, "Phi0^2"));
    out.set("variance_expected", Quantity::new(proc_.variance(), "Phi0^2"));
    out.set("dwell_excited_mean", Quantity::new(mean(&trace.dwell_times(true)), "s"));
    out.set("dwell_ground_mean", Quantity::new(mean(&trace.dwell_times(false)), "s"));

    let spec = estimate_psd(&x, dt, c.segments)?;
    let analytic: Vec<f64> = spec.frequencies.iter().map(|&f| lorentzian_psd(&proc_, angular(f))).collect();
    if g1 > 0.0 {
        let (lo, hi) = (g1 / 10.0 / angular(1.0), 10.0 * g1 / angular(1.0));
        let est = log_band_average(&spec.frequencies, &spec.psd, lo, hi, 8);
        let reference = log_band_average(&spec.frequencies, &analytic, lo, hi, 8);
        let worst = est
            .iter()
            .zip(&reference)
            .map(|(e, r)| (e.mean / r.mean - 1.0).abs())
            .fold(0.0, f64::max);
        out.set("psd_max_band_deviation", Quantity::new(worst, "1"));
    }
    let mut t = Table::new(&["freq_hz", "psd_estimate_phi0sq_per_hz", "psd_lorentzian_phi0sq_per_hz"]);
    for ((f, s), a) in spec.frequencies.iter().zip(&spec.psd).zip(&analytic) {
        t.push(&[*f, *s, *a]);
    }
    out.table("telegraph_psd.csv", t);
    Ok(())
}

fn ensemble(c: &EnsembleCfg, seed: u64, out: &mut TaskOutput) -> Result<(), CliError> {
    if c.points < 2 || !(c.f_min > 0.0 && c.f_max > c.f_min) {
        return Err(CliError::schema("parameters.ensemble", "need points >= 2 and 0 < f_min < f_max"));
    }
    let ens = log_uniform_ensemble(c.count, c.gamma_min, c.gamma_max, c.p_excited, c.amplitude, seed)?;
    let ratio = (c.f_max / c.f_min).ln();
    let freqs: Vec<f64> = (0..c.points)
        .map(|i| c.f_min * (ratio * i as f64 / (c.points - 1) as f64).exp())
        .collect();
    let omegas: Vec<f64> = freqs.iter().map(|&f| angular(f)).collect();
    let psd = ensemble_psd(&ens, &omegas)?;

    let xs: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let ys: Vec<f64> = psd.iter().map(|s| s.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    out.set("ensemble_log_slope", Quantity::new(slope, "1"));

    let mut t = Table::new(&["freq_hz", "psd_phi0sq_per_hz"]);
    for (f, s) in freqs.iter().zip(&psd) {
        t.push(&[*f, *s]);
    }
    out.table("ensemble_psd.csv", t);
    Ok(())
}
