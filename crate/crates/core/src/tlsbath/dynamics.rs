//! Solomon rate equations for the qubit and its TLS ladder, driven by
//! repeated reset and read out stroboscopically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ladder::{cross_relaxation_rates, TlsLadder};
use crate::noise::DecayCurve;
use crate::numerics::{eigh, RateMatrix, SymmetricMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    /// Qubit population after a reset into this level with the given fidelity.
    pub fn population(self, fidelity: f64) -> f64 {
        match self {
            Level::Excited => fidelity,
            Level::Ground => 1.0 - fidelity,
        }
    }
}

/// Qubit and TLS excited-state populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathState {
    pub p_q: f64,
    pub p_t: Vec<f64>,
    pub p_th: f64,
}

impl BathState {
    pub fn new(p_q: f64, p_t: Vec<f64>, p_th: f64) -> Result<Self> {
        for p in std::iter::once(&p_q).chain(&p_t).chain(std::iter::once(&p_th)) {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::invalid(format!("population {p} outside [0, 1]")));
            }
        }
        Ok(Self { p_q, p_t, p_th })
    }

    /// Everything at `p_th`.
    pub fn thermal(count: usize, p_th: f64) -> Result<Self> {
        Self::new(p_th, vec![p_th; count], p_th)
    }

    fn as_vector(&self) -> DVector<f64> {
        DVector::from_iterator(1 + self.p_t.len(), std::iter::once(self.p_q).chain(self.p_t.iter().copied()))
    }

    fn from_vector(x: &DVector<f64>, p_th: f64) -> Self {
        // round-off can push populations a few ulps past the physical range
        let c = |v: f64| v.clamp(0.0, 1.0);
        Self { p_q: c(x[0]), p_t: x.iter().skip(1).map(|&v| c(v)).collect(), p_th }
    }

    pub fn total_excitation(&self) -> f64 {
        self.p_q + self.p_t.iter().sum::<f64>()
    }
}

/// Feedback-stabilisation sequence followed by a relaxation measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Number of reset cycles.
    pub repetitions: u64,
    pub target: Level,
    /// Length of one reset cycle (s).
    pub cycle: f64,
    /// Qubit preparation before the relaxation trace.
    pub init: Level,
    /// Readout interval of the relaxation trace (s).
    pub strobe: f64,
    /// Length of the relaxation trace (s).
    pub duration: f64,
    /// Probability that a reset leaves the qubit in the requested level.
    pub reset_fidelity: f64,
}

/// Readout 540 ns + π-pulse 32 ns + 708 ns overhead.
pub const DEFAULT_CYCLE: f64 = 1.28e-6;
pub const DEFAULT_STROBE: f64 = 1.28e-6;

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            repetitions: 10_000,
            target: Level::Excited,
            cycle: DEFAULT_CYCLE,
            init: Level::Ground,
            strobe: DEFAULT_STROBE,
            duration: 64.0 * DEFAULT_STROBE,
            reset_fidelity: 1.0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        for (name, v) in [("cycle", self.cycle), ("strobe", self.strobe), ("duration", self.duration)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.reset_fidelity) {
            return Err(Error::invalid(format!(
                "reset fidelity must lie in [0, 1], got {}",
                self.reset_fidelity
            )));
        }
        Ok(())
    }

    /// Strobe times `0, δt, 2δt, …` up to `duration`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.duration / self.strobe * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|j| j as f64 * self.strobe).collect()
    }
}

fn check_rates(ladder: &TlsLadder, gamma_q: f64, p_th: f64) -> Result<()> {
    if !(gamma_q >= 0.0) || !gamma_q.is_finite() {
        return Err(Error::invalid(format!("gamma_q must be finite and >= 0, got {gamma_q}")));
    }
    if !(0.0..=1.0).contains(&p_th) {
        return Err(Error::invalid(format!("p_th must lie in [0, 1], got {p_th}")));
    }
    TlsLadder::new(
        ladder.count,
        ladder.spacing,
        ladder.offset,
        ladder.coupling,
        ladder.gamma2,
        ladder.gamma_t,
    )
    .map(|_| ())
}

fn generator(ladder: &TlsLadder, gamma_q: f64) -> DMatrix<f64> {
    let rates = cross_relaxation_rates(ladder);
    let n = 1 + ladder.count;
    let mut g = DMatrix::zeros(n, n);
    g[(0, 0)] = -gamma_q - rates.total;
    for (k, &r) in rates.rates.iter().enumerate() {
        g[(0, k + 1)] = r;
        g[(k + 1, 0)] = r;
        g[(k + 1, k + 1)] = -ladder.gamma_t - r;
    }
    g
}

/// State `(p_q, p_t¹ … p_tᴷ)` obeying
///
/// `ṗ_q = −Γ_q(p_q − p_th) − Σ_k Γ_qt^k (p_q − p_t^k)`
/// `ṗ_t^k = −Γ_t(p_t^k − p_th) + Γ_qt^k (p_q − p_t^k)`.
pub fn build_rate_system(ladder: &TlsLadder, gamma_q: f64, p_th: f64) -> Result<RateMatrix> {
    check_rates(ladder, gamma_q, p_th)?;
    let g = generator(ladder, gamma_q);
    let mut d = DVector::from_element(1 + ladder.count, ladder.gamma_t * p_th);
    d[0] = gamma_q * p_th;
    RateMatrix::new(g, d)
}

/// Spectral form of the rate system. The generator is symmetric and the
/// thermal state is its fixed point, so deviations from `p_th` evolve as
/// `V e^{Λt} Vᵀ`.
#[derive(Debug, Clone)]
pub struct BathDynamics {
    p_th: f64,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    total_rate: f64,
    gamma_q: f64,
}

impl BathDynamics {
    pub fn new(ladder: &TlsLadder, gamma_q: f64, p_th: f64) -> Result<Self> {
        check_rates(ladder, gamma_q, p_th)?;
        let eig = eigh(&SymmetricMatrix::new(generator(ladder, gamma_q))?)?;
        Ok(Self {
            p_th,
            values: DVector::from_vec(eig.values),
            vectors: eig.vectors,
            total_rate: cross_relaxation_rates(ladder).total,
            gamma_q,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Γ₁ = Γ_q + ΣΓ_qt`.
    pub fn gamma1(&self) -> f64 {
        self.gamma_q + self.total_rate
    }

    pub fn p_th(&self) -> f64 {
        self.p_th
    }

    /// `e^{Gt}`.
    pub fn flow(&self, t: f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.vectors[(i, j)] * (self.values[j] * t).exp()
        });
        scaled * self.vectors.transpose()
    }

    fn check_state(&self, state: &BathState) -> Result<()> {
        if state.p_t.len() + 1 != self.dim() {
            return Err(Error::invalid(format!(
                "state holds {} TLSs but the ladder has {}",
                state.p_t.len(),
                self.dim() - 1
            )));
        }
        Ok(())
    }

    /// Applies `cfg.repetitions` cycles of free evolution followed by a qubit
    /// reset to `cfg.target`. TLS populations are never reset.
    pub fn stabilize(&self, state: &BathState, cfg: &ProtocolConfig) -> Result<BathState> {
        cfg.validate()?;
        self.check_state(state)?;
        Ok(CycleMap::new(self, cfg.cycle)?.stabilize(state, cfg))
    }

    /// Qubit population at `times` after preparing `init` on top of `state`.
    pub fn qubit_trace(&self, state: &BathState, init: f64, times: &[f64]) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut y = state.as_vector().add_scalar(-self.p_th);
        y[0] = init - self.p_th;
        let modes = self.vectors.tr_mul(&y);
        let weights: Vec<f64> = (0..self.dim()).map(|m| self.vectors[(0, m)] * modes[m]).collect();
        Ok(times
            .iter()
            .map(|&t| {
                let dev: f64 = weights
                    .iter()
                    .zip(self.values.iter())
                    .map(|(w, l)| w * (l * t).exp())
                    .sum();
                (self.p_th + dev).clamp(0.0, 1.0)
            })
            .collect())
    }
}

/// One reset cycle restricted to the TLS block: with the qubit deviation
/// fixed at `c` after every reset, TLS deviations follow `z ↦ A z + b c`.
struct CycleMap {
    flow: DMatrix<f64>,
    modes: DMatrix<f64>,
    mu: DVector<f64>,
    p_th: f64,
}

impl CycleMap {
    fn new(dynamics: &BathDynamics, cycle: f64) -> Result<Self> {
        let flow = dynamics.flow(cycle);
        let k = dynamics.dim() - 1;
        if k == 0 {
            let none = DMatrix::zeros(0, 0);
            return Ok(Self { flow, modes: none, mu: DVector::zeros(0), p_th: dynamics.p_th });
        }
        let a = flow.view((1, 1), (k, k)).into_owned();
        let a = SymmetricMatrix::new((&a + a.transpose()) * 0.5)?;
        let eig = eigh(&a)?;
        Ok(Self { flow, modes: eig.vectors, mu: DVector::from_vec(eig.values), p_th: dynamics.p_th })
    }

    fn stabilize(&self, state: &BathState, cfg: &ProtocolConfig) -> BathState {
        let k = self.mu.len();
        let target = cfg.target.population(cfg.reset_fidelity);
        if k == 0 {
            return BathState { p_q: target, p_t: vec![], p_th: self.p_th };
        }
        let y0 = state.as_vector().add_scalar(-self.p_th);
        let c = target - self.p_th;
        // first cycle starts from the unreset qubit
        let y1 = &self.flow * &y0;
        let z1 = y1.rows(1, k).into_owned();
        let b = self.flow.view((1, 0), (k, 1)).column(0).into_owned() * c;
        let w = self.modes.tr_mul(&z1);
        let beta = self.modes.tr_mul(&b);
        let n = (cfg.repetitions - 1) as f64;
        let zn = DVector::from_iterator(
            k,
            (0..k).map(|m| {
                let mu = self.mu[m].clamp(0.0, 1.0);
                let (pow, sum) = power_and_sum(mu, n);
                pow * w[m] + sum * beta[m]
            }),
        );
        let z = &self.modes * zn;
        let mut out = DVector::zeros(k + 1);
        out[0] = target;
        for i in 0..k {
            out[i + 1] = z[i] + self.p_th;
        }
        BathState::from_vector(&out, self.p_th)
    }
}

/// `μⁿ` and `Σ_{j<n} μʲ` for `0 ≤ μ ≤ 1`.
fn power_and_sum(mu: f64, n: f64) -> (f64, f64) {
    if n == 0.0 {
        return (1.0, 0.0);
    }
    if mu == 0.0 {
        return (0.0, 1.0);
    }
    let ln = mu.ln();
    if ln == 0.0 {
        return (1.0, n);
    }
    let pow = (n * ln).exp();
    (pow, (n * ln).exp_m1() / ln.exp_m1())
}

/// [`BathDynamics::stabilize`] starting from a thermal bath.
pub fn run_stabilization(
    ladder: &TlsLadder,
    gamma_q: f64,
    p_th: f64,
    cfg: &ProtocolConfig,
) -> Result<BathState> {
    let dynamics = BathDynamics::new(ladder, gamma_q, p_th)?;
    dynamics.stabilize(&BathState::thermal(ladder.count, p_th)?, cfg)
}

/// Cycle-by-cycle reference for [`run_stabilization`]: one affine flow map
/// applied `N` times with an explicit reset in between.
pub fn run_stabilization_stepwise(
    ladder: &TlsLadder,
    gamma_q: f64,
    state: &BathState,
    cfg: &ProtocolConfig,
) -> Result<BathState> {
    cfg.validate()?;
    let system = build_rate_system(ladder, gamma_q, state.p_th)?;
    if state.p_t.len() != ladder.count {
        return Err(Error::invalid("state and ladder disagree on the TLS count"));
    }
    let step = system.propagator(cfg.cycle)?;
    let target = cfg.target.population(cfg.reset_fidelity);
    let mut x = state.as_vector();
    for _ in 0..cfg.repetitions {
        x = step.apply(&x);
        x[0] = target;
    }
    Ok(BathState::from_vector(&x, state.p_th))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationTrace {
    pub curve: DecayCurve,
    /// `p_th + (p_q(0) − p_th)e^{−Γ₁t}` on the same times.
    pub reference: Vec<f64>,
    pub gamma1: f64,
}

/// Stroboscopic qubit population after preparing `cfg.init` on top of `state`.
pub fn relaxation_trace(
    state: &BathState,
    ladder: &TlsLadder,
    gamma_q: f64,
    cfg: &ProtocolConfig,
) -> Result<RelaxationTrace> {
    cfg.validate()?;
    let dynamics = BathDynamics::new(ladder, gamma_q, state.p_th)?;
    trace_from(&dynamics, state, cfg, &cfg.sample_times())
}

pub(crate) fn trace_from(
    dynamics: &BathDynamics,
    state: &BathState,
    cfg: &ProtocolConfig,
    times: &[f64],
) -> Result<RelaxationTrace> {
    let init = cfg.init.population(cfg.reset_fidelity);
    let values = dynamics.qubit_trace(state, init, times)?;
    let g1 = dynamics.gamma1();
    let p_th = dynamics.p_th();
    let reference = times.iter().map(|&t| p_th + (init - p_th) * (-g1 * t).exp()).collect();
    Ok(RelaxationTrace {
        curve: DecayCurve::new(times.to_vec(), values, None)?,
        reference,
        gamma1: g1,
    })
}

/// Runs the stabilisation from a thermal bath and records the relaxation trace.
pub fn simulate_protocol(
    ladder: &TlsLadder,
    gamma_q: f64,
    p_th: f64,
    cfg: &ProtocolConfig,
) -> Result<RelaxationTrace> {
    let dynamics = BathDynamics::new(ladder, gamma_q, p_th)?;
    let state = dynamics.stabilize(&BathState::thermal(ladder.count, p_th)?, cfg)?;
    trace_from(&dynamics, &state, cfg, &cfg.sample_times())
}
