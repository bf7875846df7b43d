//! Flux noise: telegraph fluctuators, spin freezing in field, and echo/Ramsey decay.

mod decay;
mod echo;
mod freeze;
mod ramsey;
mod telegraph;

pub use decay::DecayCurve;
pub use echo::{
    echo_decay_model, echo_dephasing_rate, fit_echo_rates, joint_fit_echo, joint_fit_echo_with,
    CurveRate, EchoFit, EchoRates, FluxEchoCurve,
};
pub use freeze::{fit_spin_temperature, flux_noise_power, SpinFreezeFit, SpinFreezeModel};
pub use ramsey::ramsey_beating;
pub use telegraph::{
    angular, detailed_balance_rates, ensemble_psd, log_uniform_ensemble, lorentzian_psd,
    simulate_telegraph, TelegraphProcess, TelegraphTrace, MAX_SWITCH_PROBABILITY,
};
