//! Generate-and-refit checks of the TLS-bath model.

use fluxkit::noise::DecayCurve;
use fluxkit::numerics::seeded_rng;
use fluxkit::tlsbath::{
    fit_hyperpolarization, simulate_traces, HyperpolParams, HyperpolTrace, Level, ProtocolConfig,
    TlsLadder,
};
use rand_distr::{Distribution, Normal};

fn eight_trace_design() -> Vec<ProtocolConfig> {
    let mut out = Vec::new();
    for n in [1, 10, 100, 10_000] {
        for (target, init) in [(Level::Excited, Level::Ground), (Level::Ground, Level::Excited)] {
            out.push(ProtocolConfig { repetitions: n, target, init, ..Default::default() });
        }
    }
    out
}

fn synthetic(truth: &HyperpolParams, noise: f64, seed: u64) -> Vec<HyperpolTrace> {
    let design = eight_trace_design();
    let sims = simulate_traces(truth, &design).unwrap();
    let mut rng = seeded_rng(seed);
    let n = Normal::new(0.0, noise).unwrap();
    design
        .into_iter()
        .zip(sims)
        .map(|(protocol, s)| {
            let pops = s.curve.populations().iter().map(|p| (p + n.sample(&mut rng)).clamp(0.0, 1.0)).collect();
            HyperpolTrace { protocol, curve: DecayCurve::new(s.curve.times().to_vec(), pops, None).unwrap() }
        })
        .collect()
}

fn start_from(truth: &HyperpolParams) -> HyperpolParams {
    let ladder = TlsLadder { gamma2: truth.ladder.gamma2 * 1.5, ..truth.ladder }.with_total_rate(30e3).unwrap();
    HyperpolParams { gamma_q: 100e3, ladder, p_th: 0.25 }
}

#[test]
fn refit_recovers_qubit_and_bath_rates() {
    let truth = HyperpolParams { gamma_q: 140e3, ladder: TlsLadder::default(), p_th: 0.3 };
    let data = synthetic(&truth, 0.01, 5);
    let fit = fit_hyperpolarization(&data, &start_from(&truth)).unwrap();
    assert!((fit.params.gamma_q / 140e3 - 1.0).abs() < 0.1, "{}", fit.params.gamma_q);
    assert!((fit.total_cross_relaxation / 45e3 - 1.0).abs() < 0.1, "{}", fit.total_cross_relaxation);
    assert!((fit.gamma1 - fit.params.gamma_q - fit.total_cross_relaxation).abs() < 1e-6);
}

#[test]
fn extra_qubit_loss_leaves_cross_relaxation_in_place() {
    // a Markovian loss channel adds to the qubit rate only
    let truth = HyperpolParams { gamma_q: 140e3 + 60e3, ladder: TlsLadder::default(), p_th: 0.3 };
    let data = synthetic(&truth, 0.01, 6);
    let fit = fit_hyperpolarization(&data, &start_from(&truth)).unwrap();
    assert!((fit.params.gamma_q / 200e3 - 1.0).abs() < 0.1, "{}", fit.params.gamma_q);
    assert!((fit.total_cross_relaxation / 45e3 - 1.0).abs() < 0.1, "{}", fit.total_cross_relaxation);
}
