//! Joint fit of relaxation traces taken after different stabilisation runs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{trace_from, BathDynamics, BathState, ProtocolConfig, RelaxationTrace};
use super::ladder::{cross_relaxation_rates, TlsLadder};
use crate::noise::DecayCurve;
use crate::numerics::{fit_residuals, FitOptions, FitResult};
use crate::{Error, Result};

/// Everything the rate model needs besides the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperpolParams {
    pub gamma_q: f64,
    pub ladder: TlsLadder,
    pub p_th: f64,
}

impl HyperpolParams {
    pub fn total_cross_relaxation(&self) -> f64 {
        cross_relaxation_rates(&self.ladder).total
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma_q + self.total_cross_relaxation()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperpolTrace {
    pub protocol: ProtocolConfig,
    pub curve: DecayCurve,
}

/// Standard errors matching [`HyperpolParams`] plus the derived rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperpolErrors {
    pub gamma_q: f64,
    pub coupling: f64,
    pub gamma2: f64,
    pub spacing: f64,
    pub offset: f64,
    pub gamma_t: f64,
    pub p_th: f64,
    pub total_cross_relaxation: f64,
    pub gamma1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperpolFit {
    pub params: HyperpolParams,
    pub stderr: HyperpolErrors,
    pub total_cross_relaxation: f64,
    pub gamma1: f64,
    /// Fit over `[ln Γ_q, ln g, ln Γ₂, ln Δ, Δ₀/Δ, ln Γ_t, p_th]`.
    pub fit: FitResult,
    pub warnings: Vec<String>,
}

/// Simulates every protocol from a thermal bath; traces sharing a cycle
/// length share the cycle map.
pub fn simulate_traces(
    params: &HyperpolParams,
    protocols: &[ProtocolConfig],
) -> Result<Vec<RelaxationTrace>> {
    let times: Vec<Vec<f64>> = protocols.iter().map(|c| c.sample_times()).collect();
    simulate_traces_at(params, protocols, &times)
}

/// [`simulate_traces`] on caller-chosen sample times, one list per protocol.
pub fn simulate_traces_at(
    params: &HyperpolParams,
    protocols: &[ProtocolConfig],
    times: &[Vec<f64>],
) -> Result<Vec<RelaxationTrace>> {
    if times.len() != protocols.len() {
        return Err(Error::invalid("need one list of sample times per protocol"));
    }
    let dynamics = BathDynamics::new(&params.ladder, params.gamma_q, params.p_th)?;
    let thermal = BathState::thermal(params.ladder.count, params.p_th)?;
    let mut finals: BTreeMap<usize, BathState> = BTreeMap::new();
    for (i, cfg) in protocols.iter().enumerate() {
        finals.insert(i, dynamics.stabilize(&thermal, cfg)?);
    }
    protocols
        .iter()
        .zip(times)
        .enumerate()
        .map(|(i, (cfg, t))| trace_from(&dynamics, &finals[&i], cfg, t))
        .collect()
}

const N_PARAMS: usize = 7;

fn encode(p: &HyperpolParams) -> Vec<f64> {
    let l = &p.ladder;
    vec![
        p.gamma_q.ln(),
        l.coupling.ln(),
        l.gamma2.ln(),
        l.spacing.ln(),
        l.offset / l.spacing,
        l.gamma_t.ln(),
        p.p_th,
    ]
}

fn decode(v: &[f64], count: usize) -> Result<HyperpolParams> {
    let spacing = v[3].exp();
    let ladder = TlsLadder::new(
        count,
        spacing,
        v[4].clamp(0.0, 0.5) * spacing,
        v[1].exp(),
        v[2].exp(),
        v[5].exp(),
    )?;
    Ok(HyperpolParams { gamma_q: v[0].exp(), ladder, p_th: v[6] })
}

/// Joint least-squares fit of all traces; the TLS count is held at
/// `init.ladder.count`.
///
/// Designs that cannot separate the parameters still return a fit, with the
/// problem listed in `warnings` and `fit.identifiable` cleared.
pub fn fit_hyperpolarization(traces: &[HyperpolTrace], init: &HyperpolParams) -> Result<HyperpolFit> {
    if traces.is_empty() {
        return Err(Error::invalid("no relaxation traces"));
    }
    for t in traces {
        t.protocol.validate()?;
    }
    let l = &init.ladder;
    for (name, v) in [
        ("gamma_q", init.gamma_q),
        ("coupling", l.coupling),
        ("gamma2", l.gamma2),
        ("spacing", l.spacing),
        ("gamma_t", l.gamma_t),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("initial {name} must be positive, got {v}")));
        }
    }
    if !(0.0..0.5).contains(&init.p_th) {
        return Err(Error::invalid(format!("initial p_th must lie in [0, 0.5), got {}", init.p_th)));
    }

    let count = init.ladder.count;
    let protocols: Vec<ProtocolConfig> = traces.iter().map(|t| t.protocol).collect();
    let times: Vec<Vec<f64>> = traces.iter().map(|t| t.curve.times().to_vec()).collect();
    let residuals = |v: &[f64]| -> Result<Vec<f64>> {
        let params = decode(v, count)?;
        let sims = simulate_traces_at(&params, &protocols, &times)?;
        Ok(traces
            .iter()
            .zip(&sims)
            .flat_map(|(data, sim)| {
                data.curve
                    .populations()
                    .iter()
                    .zip(sim.curve.populations())
                    .enumerate()
                    .map(|(k, (y, m))| data.curve.weight(k) * (y - m))
                    .collect::<Vec<_>>()
            })
            .collect())
    };
    // Coarse pass over the rates that set the trace shapes, ladder shape held.
    let start = encode(init);
    let coarse_free = [0usize, 1, 6];
    let sub_residuals = |u: &[f64]| {
        let mut v = start.clone();
        for (k, &i) in coarse_free.iter().enumerate() {
            v[i] = u[k];
        }
        residuals(&v)
    };
    let sub_start: Vec<f64> = coarse_free.iter().map(|&i| start[i]).collect();
    let inf = f64::INFINITY;
    let sub_bounds = [(-inf, inf), (-inf, inf), (0.0, 0.5)];
    let coarse = fit_residuals(sub_residuals, &sub_start, Some(&sub_bounds), &FitOptions::default())?;
    let mut v0 = start.clone();
    for (k, &i) in coarse_free.iter().enumerate() {
        v0[i] = coarse.parameters[k];
    }

    // Log rates may roam three decades from the coarse values.
    let span = 1e3f64.ln();
    let around = |x: f64| (x - span, x + span);
    let bounds = [
        around(v0[0]),
        around(v0[1]),
        around(v0[2]),
        around(v0[3]),
        (0.0, 0.5),
        around(v0[5]),
        (0.0, 0.5),
    ];
    let fit = fit_residuals(residuals, &v0, Some(&bounds), &FitOptions::default())?;
    let params = decode(&fit.parameters, count)?;

    let mut warnings = Vec::new();
    let distinct: std::collections::BTreeSet<(u64, bool)> = protocols
        .iter()
        .map(|c| (c.repetitions, c.target == super::dynamics::Level::Excited))
        .collect();
    if distinct.len() < 2 {
        warnings.push(
            "non-identifiable: a single stabilisation setting cannot separate bath and qubit rates"
                .to_string(),
        );
    }
    if !fit.identifiable {
        warnings.push("non-identifiable: Jacobian is rank deficient at the optimum".to_string());
    }
    if !fit.converged {
        warnings.push("fit did not converge within the iteration limit".to_string());
    }

    let se = fit.std_errors();
    let total_se = derived_stderr(&fit, count, |p| p.total_cross_relaxation());
    let gamma1_se = derived_stderr(&fit, count, |p| p.gamma1());
    let stderr = HyperpolErrors {
        gamma_q: params.gamma_q * se[0],
        coupling: params.ladder.coupling * se[1],
        gamma2: params.ladder.gamma2 * se[2],
        spacing: params.ladder.spacing * se[3],
        offset: params.ladder.spacing * se[4],
        gamma_t: params.ladder.gamma_t * se[5],
        p_th: se[6],
        total_cross_relaxation: total_se,
        gamma1: gamma1_se,
    };
    Ok(HyperpolFit {
        total_cross_relaxation: params.total_cross_relaxation(),
        gamma1: params.gamma1(),
        params,
        stderr,
        fit,
        warnings,
    })
}

/// Linear error propagation of a derived quantity through the fit covariance.
fn derived_stderr(fit: &FitResult, count: usize, f: impl Fn(&HyperpolParams) -> f64 + Sync) -> f64 {
    let v = &fit.parameters;
    let grad: Vec<f64> = (0..N_PARAMS)
        .into_par_iter()
        .map(|i| {
            if fit.covariance[i][i] == 0.0 {
                return 0.0;
            }
            let h = 1e-6 * v[i].abs().max(1e-3);
            let (mut up, mut down) = (v.clone(), v.clone());
            up[i] += h;
            down[i] -= h;
            match (decode(&up, count), decode(&down, count)) {
                (Ok(a), Ok(b)) => (f(&a) - f(&b)) / (2.0 * h),
                _ => 0.0,
            }
        })
        .collect();
    let mut var = 0.0;
    for i in 0..N_PARAMS {
        for j in 0..N_PARAMS {
            var += grad[i] * fit.covariance[i][j] * grad[j];
        }
    }
    var.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tlsbath::Level;

    fn truth() -> HyperpolParams {
        let ladder = TlsLadder::new(20, 1.0e6, 0.25e6, 1.0, 0.5e6, 20.0)
            .unwrap()
            .with_total_rate(45e3)
            .unwrap();
        HyperpolParams { gamma_q: 140e3, ladder, p_th: 0.3 }
    }

    fn design() -> Vec<ProtocolConfig> {
        let mut out = Vec::new();
        for n in [1, 100, 10_000] {
            for (target, init) in [(Level::Excited, Level::Ground), (Level::Ground, Level::Excited)] {
                out.push(ProtocolConfig { repetitions: n, target, init, ..Default::default() });
            }
        }
        out
    }

    #[test]
    fn paper_rate_budget() {
        let p = HyperpolParams {
            gamma_q: 140e3,
            ladder: TlsLadder::default(),
            p_th: 0.3,
        };
        assert!((p.gamma1() - 185e3).abs() < 1e-6);
        assert!((1.0 / p.gamma1() - 5.4e-6).abs() < 0.05e-6);
    }

    #[test]
    fn encode_round_trip() {
        let p = truth();
        let q = decode(&encode(&p), p.ladder.count).unwrap();
        assert!((q.gamma_q / p.gamma_q - 1.0).abs() < 1e-14);
        assert!((q.total_cross_relaxation() / p.total_cross_relaxation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_refit_from_offset_start() {
        let p = truth();
        let sims = simulate_traces(&p, &design()).unwrap();
        let traces: Vec<_> = design()
            .into_iter()
            .zip(sims)
            .map(|(protocol, s)| HyperpolTrace { protocol, curve: s.curve })
            .collect();
        let mut start = p;
        start.gamma_q *= 1.3;
        start.ladder = start.ladder.with_total_rate(30e3).unwrap();
        start.p_th = 0.25;
        let fit = fit_hyperpolarization(&traces, &start).unwrap();
        assert!((fit.params.gamma_q / 140e3 - 1.0).abs() < 1e-3, "{}", fit.params.gamma_q);
        assert!((fit.total_cross_relaxation / 45e3 - 1.0).abs() < 1e-3, "{}", fit.total_cross_relaxation);
    }

    #[test]
    fn single_trace_is_flagged() {
        let p = truth();
        let cfg = design()[0];
        let sim = simulate_traces(&p, &[cfg]).unwrap().remove(0);
        let fit = fit_hyperpolarization(&[HyperpolTrace { protocol: cfg, curve: sim.curve }], &p).unwrap();
        assert!(fit.warnings.iter().any(|w| w.starts_with("non-identifiable")));
    }
}
