//! Monte-Carlo and generate-and-refit checks of the noise models.

use fluxkit::circuit::{CircuitEnergies, FluxoniumSolver};
use fluxkit::noise::{
    angular, echo_decay_model, echo_dephasing_rate, ensemble_psd, fit_spin_temperature,
    flux_noise_power, joint_fit_echo, log_uniform_ensemble, lorentzian_psd, simulate_telegraph,
    DecayCurve, FluxEchoCurve, SpinFreezeModel, TelegraphProcess,
};
use fluxkit::numerics::{estimate_psd, log_band_average, seeded_rng, DataPoint};
use fluxkit::Error;
use rand_distr::{Distribution, Normal};

#[test]
fn simulated_trace_matches_lorentzian() {
    let p = TelegraphProcess::new(2e3, 8e3, 1.0).unwrap();
    let g1 = p.gamma1();
    let dt = 0.05 / g1;
    let trace = simulate_telegraph(&p, 1e6 * dt, dt, 17, None).unwrap();
    let spec = estimate_psd(&trace.flux(), dt, 64).unwrap();
    let analytic: Vec<f64> = spec.frequencies.iter().map(|&f| lorentzian_psd(&p, angular(f))).collect();
    let (f_lo, f_hi) = (g1 / 10.0 / angular(1.0), 10.0 * g1 / angular(1.0));
    let est = log_band_average(&spec.frequencies, &spec.psd, f_lo, f_hi, 8);
    let reference = log_band_average(&spec.frequencies, &analytic, f_lo, f_hi, 8);
    for (e, r) in est.iter().zip(&reference) {
        assert!((e.mean / r.mean - 1.0).abs() < 0.1, "{:.0} Hz: {} vs {}", e.center(), e.mean, r.mean);
    }
}

#[test]
fn trace_variance_matches_integrated_spectrum() {
    let p = TelegraphProcess::new(3e3, 5e3, 0.7).unwrap();
    let dt = 0.05 / p.gamma1();
    let x = simulate_telegraph(&p, 1e6 * dt, dt, 99, None).unwrap().flux();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
    // ∫₀^∞ S dω/2π in closed form
    assert!((var / p.variance() - 1.0).abs() < 0.1, "{var} vs {}", p.variance());
}

#[test]
fn log_uniform_ensemble_gives_one_over_f() {
    let ens = log_uniform_ensemble(200, 1e2, 1e6, 0.5, 1e-3, 8).unwrap();
    let omegas: Vec<f64> = (0..=40).map(|i| 10f64.powf(3.0 + 2.0 * i as f64 / 40.0)).collect();
    let s = ensemble_psd(&ens, &omegas).unwrap();
    let xs: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
}

fn with_noise(values: &[f64], level: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let n = Normal::new(0.0, level).unwrap();
    values.iter().map(|v| (v + n.sample(&mut rng)).clamp(0.0, 1.0)).collect()
}

fn echo_set(e: &CircuitEnergies, sqrt_a: f64, gamma_exp: f64, noise: f64, seed: u64) -> Vec<FluxEchoCurve> {
    let solver = FluxoniumSolver::new(*e, 60).unwrap();
    let times: Vec<f64> = (1..=80).map(|i| i as f64 * 0.5e-6).collect();
    (0..42)
        .map(|i| {
            let flux = 0.48 + 0.04 * i as f64 / 41.0;
            let s = solver.sensitivity(flux).unwrap().per_phi0;
            let g = echo_dephasing_rate(sqrt_a * sqrt_a, s);
            let clean: Vec<f64> = times.iter().map(|&t| echo_decay_model(t, g, gamma_exp)).collect();
            let pops = with_noise(&clean, noise, seed + i as u64);
            FluxEchoCurve { flux, curve: DecayCurve::new(times.clone(), pops, None).unwrap() }
        })
        .collect()
}

#[test]
fn echo_round_trip_through_circuit_sensitivity() {
    let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
    let curves = echo_set(&e, 3e-6, 6e4, 0.01, 100);
    let fit = joint_fit_echo(&curves, &e, 60).unwrap();
    assert!((fit.rates.gamma_exp / 6e4 - 1.0).abs() < 0.05, "{}", fit.rates.gamma_exp);
    assert!((fit.sqrt_a_phi / 3e-6 - 1.0).abs() < 0.05, "{}", fit.sqrt_a_phi);
}

#[test]
fn echo_sweet_spot_only_is_rejected() {
    let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
    let times: Vec<f64> = (1..=40).map(|i| i as f64 * 0.5e-6).collect();
    let curves: Vec<_> = (0..3)
        .map(|_| FluxEchoCurve {
            flux: 0.5,
            curve: DecayCurve::from_fn(times.clone(), |t| echo_decay_model(t, 0.0, 6e4)).unwrap(),
        })
        .collect();
    assert!(matches!(joint_fit_echo(&curves, &e, 60), Err(Error::NonIdentifiable(_))));
}

#[test]
fn field_suppression_survives_the_echo_pipeline() {
    let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
    let model = SpinFreezeModel::new(9e-12, 0.085, 1e-12).unwrap();
    let a0 = flux_noise_power(0.0, &model);
    let a1 = flux_noise_power(0.6, &model);
    let f0 = joint_fit_echo(&echo_set(&e, a0.sqrt(), 6e4, 0.01, 1), &e, 60).unwrap();
    let f1 = joint_fit_echo(&echo_set(&e, a1.sqrt(), 6e4, 0.01, 2), &e, 60).unwrap();
    let ratio = f1.sqrt_a_phi / f0.sqrt_a_phi;
    assert!((ratio / (a1 / a0).sqrt() - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn spin_temperature_from_noisy_suppression_curve() {
    let model = SpinFreezeModel::new(4e-12, 0.085, 0.0).unwrap();
    let mut rng = seeded_rng(77);
    let n = Normal::new(0.0, 1.0).unwrap();
    let pts: Vec<_> = (0..13)
        .map(|i| {
            let b = 0.05 * i as f64;
            let y = flux_noise_power(b, &model).sqrt();
            DataPoint::new(b, y * (1.0 + 0.01 * n.sample(&mut rng)), 0.01 * y)
        })
        .collect();
    let fit = fit_spin_temperature(&pts, false).unwrap();
    assert!((fit.model.t_s / 0.085 - 1.0).abs() < 0.05, "{}", fit.model.t_s);
}
