//! Qubit coupled to a ladder of long-lived TLSs: cross-relaxation, rate
//! equations, feedback stabilisation and stroboscopic relaxation traces.

mod dynamics;
mod fit;
mod ladder;

pub use dynamics::{
    build_rate_system, relaxation_trace, run_stabilization, run_stabilization_stepwise,
    simulate_protocol, BathDynamics, BathState, Level, ProtocolConfig, RelaxationTrace,
    DEFAULT_CYCLE, DEFAULT_STROBE,
};
pub use fit::{
    fit_hyperpolarization, simulate_traces, simulate_traces_at, HyperpolErrors, HyperpolFit, HyperpolParams,
    HyperpolTrace,
};
pub use ladder::{cross_relaxation_rates, CrossRelaxation, TlsLadder, DEFAULT_GAMMA_T};
