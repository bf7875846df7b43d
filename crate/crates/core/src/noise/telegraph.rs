//! Asymmetric two-state fluctuators and their spectra.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::seeded_rng;
use crate::{Error, Result};

/// Two-state fluctuator switching up at `gamma_up` and down at `gamma_down`
/// (1/s), shifting flux by `amplitude` Φ₀ while excited.
///
/// Both rates may be zero: such a fluctuator never switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelegraphProcess {
    pub gamma_up: f64,
    pub gamma_down: f64,
    pub amplitude: f64,
}

impl TelegraphProcess {
    pub fn new(gamma_up: f64, gamma_down: f64, amplitude: f64) -> Result<Self> {
        for (name, r) in [("gamma_up", gamma_up), ("gamma_down", gamma_down)] {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {r}")));
            }
        }
        if !amplitude.is_finite() {
            return Err(Error::invalid("amplitude must be finite"));
        }
        Ok(Self { gamma_up, gamma_down, amplitude })
    }

    /// From total switching rate and excited-state population.
    pub fn from_rate(gamma1: f64, p_excited: f64, amplitude: f64) -> Result<Self> {
        if !(gamma1 > 0.0) || !gamma1.is_finite() {
            return Err(Error::invalid(format!("gamma1 must be positive, got {gamma1}")));
        }
        if !(0.0..=1.0).contains(&p_excited) {
            return Err(Error::invalid(format!("population must lie in [0, 1], got {p_excited}")));
        }
        Self::new(gamma1 * p_excited, gamma1 * (1.0 - p_excited), amplitude)
    }

    /// `Γ₁ = Γ↑ + Γ↓`.
    pub fn gamma1(&self) -> f64 {
        self.gamma_up + self.gamma_down
    }

    pub fn is_frozen(&self) -> bool {
        self.gamma1() == 0.0
    }

    /// Stationary excited-state population `p₁ = Γ↑/Γ₁` (zero when frozen).
    pub fn p_excited(&self) -> f64 {
        if self.is_frozen() {
            0.0
        } else {
            self.gamma_up / self.gamma1()
        }
    }

    /// `p₀p₁ = (Γ₁/Γ↑ + Γ₁/Γ↓)⁻¹`.
    pub fn population_product(&self) -> f64 {
        if self.is_frozen() {
            return 0.0;
        }
        let g1 = self.gamma1();
        self.gamma_up * self.gamma_down / (g1 * g1)
    }

    /// Stationary variance of the flux signal, `amplitude²·p₀p₁`.
    pub fn variance(&self) -> f64 {
        self.amplitude * self.amplitude * self.population_product()
    }
}

/// `Γ↑ = Γ₁·p_th`, `Γ↓ = Γ₁ − Γ↑`.
pub fn detailed_balance_rates(gamma1: f64, p_th: f64) -> Result<(f64, f64)> {
    if !(gamma1 > 0.0) || !gamma1.is_finite() {
        return Err(Error::invalid(format!("gamma1 must be positive, got {gamma1}")));
    }
    if !(0.0..0.5).contains(&p_th) {
        return Err(Error::invalid(format!("p_th must lie in [0, 0.5), got {p_th}")));
    }
    // Γ↓ > Γ₁/2, so Γ₁ − Γ↓ is exact and the two rates sum to Γ₁ without rounding
    let down = gamma1 - gamma1 * p_th;
    let up = gamma1 - down;
    Ok((up, down))
}

/// Sampled two-state trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphTrace {
    pub dt: f64,
    pub amplitude: f64,
    pub states: Vec<bool>,
}

impl TelegraphTrace {
    /// Flux samples, `amplitude` while excited and 0 otherwise.
    pub fn flux(&self) -> Vec<f64> {
        self.states.iter().map(|&s| if s { self.amplitude } else { 0.0 }).collect()
    }

    /// Fraction of samples in the excited state.
    pub fn occupancy(&self) -> f64 {
        self.states.iter().filter(|&&s| s).count() as f64 / self.states.len().max(1) as f64
    }

    /// Lengths (s) of completed runs in the given state; runs touching either
    /// end of the trace are dropped.
    pub fn dwell_times(&self, excited: bool) -> Vec<f64> {
        let mut out = Vec::new();
        let mut run: Option<usize> = None;
        for w in self.states.windows(2) {
            if w[0] != w[1] {
                if w[0] == excited {
                    if let Some(n) = run {
                        out.push(n as f64 * self.dt);
                    }
                }
                run = (w[1] == excited).then_some(0);
            }
            if let Some(n) = run.as_mut() {
                *n += 1;
            }
        }
        out
    }
}

/// Largest `dt·max(Γ↑, Γ↓)` accepted by [`simulate_telegraph`].
pub const MAX_SWITCH_PROBABILITY: f64 = 0.1;

/// Samples the fluctuator every `dt` for `duration` seconds.
///
/// Transitions use the exact two-state propagator over `dt`, so sampling is
/// unbiased for any step satisfying the guard. With `initial = None` the first
/// state is drawn from the stationary distribution.
pub fn simulate_telegraph(
    process: &TelegraphProcess,
    duration: f64,
    dt: f64,
    seed: u64,
    initial: Option<bool>,
) -> Result<TelegraphTrace> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(duration >= dt) || !duration.is_finite() {
        return Err(Error::invalid(format!("duration must be at least dt, got {duration}")));
    }
    let fastest = process.gamma_up.max(process.gamma_down);
    if dt * fastest > MAX_SWITCH_PROBABILITY {
        return Err(Error::invalid(format!(
            "dt·max rate = {} exceeds {MAX_SWITCH_PROBABILITY}",
            dt * fastest
        )));
    }
    let n = (duration / dt).round() as usize;
    let mut rng = seeded_rng(seed);
    let p1 = process.p_excited();
    let relax = -(-process.gamma1() * dt).exp_m1();
    let up = p1 * relax;
    let down = (1.0 - p1) * relax;

    let mut state = initial.unwrap_or_else(|| rng.random::<f64>() < p1);
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        states.push(state);
        let u: f64 = rng.random();
        state = if state { u >= down } else { u < up };
    }
    Ok(TelegraphTrace { dt, amplitude: process.amplitude, states })
}

/// One-sided spectral density `S(ω) = a²·p₀p₁·4Γ₁/(Γ₁² + ω²)`.
///
/// Normalised so that `∫₀^∞ S(ω) dω/2π` equals the process variance, which
/// makes `S(2πf)` directly comparable with a one-sided estimate in `f`.
pub fn lorentzian_psd(process: &TelegraphProcess, omega: f64) -> f64 {
    let g1 = process.gamma1();
    if g1 == 0.0 {
        return 0.0;
    }
    process.variance() * 4.0 * g1 / (g1 * g1 + omega * omega)
}

/// Sum of [`lorentzian_psd`] over the ensemble on every grid point.
pub fn ensemble_psd(processes: &[TelegraphProcess], omegas: &[f64]) -> Result<Vec<f64>> {
    if processes.is_empty() {
        return Err(Error::invalid("fluctuator ensemble is empty"));
    }
    Ok(omegas
        .iter()
        .map(|&w| processes.iter().map(|p| lorentzian_psd(p, w)).sum())
        .collect())
}

/// `count` fluctuators with `Γ₁` log-uniform over `[gamma_min, gamma_max]`,
/// each excited with probability `p_excited` and shifting flux by `amplitude`.
pub fn log_uniform_ensemble(
    count: usize,
    gamma_min: f64,
    gamma_max: f64,
    p_excited: f64,
    amplitude: f64,
    seed: u64,
) -> Result<Vec<TelegraphProcess>> {
    if count == 0 {
        return Err(Error::invalid("ensemble needs at least one fluctuator"));
    }
    if !(gamma_min > 0.0 && gamma_max >= gamma_min && gamma_max.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < gamma_min <= gamma_max, got [{gamma_min}, {gamma_max}]"
        )));
    }
    let mut rng = seeded_rng(seed);
    let (lo, hi) = (gamma_min.ln(), gamma_max.ln());
    (0..count)
        .map(|_| {
            let g1 = (lo + (hi - lo) * rng.random::<f64>()).exp();
            TelegraphProcess::from_rate(g1, p_excited, amplitude)
        })
        .collect()
}

/// Angular frequency for a frequency in Hz.
pub fn angular(f: f64) -> f64 {
    2.0 * PI * f
}
