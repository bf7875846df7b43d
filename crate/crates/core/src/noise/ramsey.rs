use std::f64::consts::PI;

use super::DecayCurve;
use crate::{Error, Result};

/// Ramsey fringe of a qubit toggling between `f_mean ± delta_f/2` (Hz) slowly
/// compared with the trace, spending fraction `weight` on the upper branch:
///
/// `P(t) = ½ + ½e^{−t/T₂}[w·cos(2πf₊t) + (1−w)·cos(2πf₋t)]`.
pub fn ramsey_beating(
    f_mean: f64,
    delta_f: f64,
    times: &[f64],
    t2: f64,
    weight: f64,
) -> Result<DecayCurve> {
    if !(delta_f >= 0.0) || !f_mean.is_finite() || !delta_f.is_finite() {
        return Err(Error::invalid(format!("need finite f_mean and delta_f >= 0, got {delta_f}")));
    }
    if !(t2 > 0.0) {
        return Err(Error::invalid(format!("T2 must be positive, got {t2}")));
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::invalid(format!("branch weight must lie in [0, 1], got {weight}")));
    }
    if times.iter().any(|&t| t < 0.0) {
        return Err(Error::invalid("times must be >= 0"));
    }
    let (hi, lo) = (f_mean + delta_f / 2.0, f_mean - delta_f / 2.0);
    DecayCurve::from_fn(times.to_vec(), |t| {
        let fringe = weight * (2.0 * PI * hi * t).cos() + (1.0 - weight) * (2.0 * PI * lo * t).cos();
        0.5 + 0.5 * (-t / t2).exp() * fringe
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, step: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn single_frequency_limit() {
        let t = grid(200, 10e-9);
        let c = ramsey_beating(3e6, 0.0, &t, 4e-6, 0.3).unwrap();
        assert_eq!(c.populations()[0], 1.0);
        for (t, p) in c.iter() {
            let expect = 0.5 + 0.5 * (-t / 4e-6).exp() * (2.0 * PI * 3e6 * t).cos();
            assert!((p - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn beat_envelope() {
        // equal weights: fringe = cos(π δf t)·cos(2π f t)
        let t = grid(401, 5e-9);
        let c = ramsey_beating(4e6, 0.5e6, &t, 1.0, 0.5).unwrap();
        for (t, p) in c.iter() {
            let expect = 0.5 + 0.5 * (-t).exp() * (PI * 0.5e6 * t).cos() * (2.0 * PI * 4e6 * t).cos();
            assert!((p - expect).abs() < 1e-12);
        }
        // first null of the envelope at 1/(2δf) = 1 µs
        let null = ramsey_beating(4e6, 0.5e6, &[1e-6], 1.0, 0.5).unwrap();
        assert!((null.populations()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ramsey_beating(1e6, -1.0, &[0.0], 1e-6, 0.5).is_err());
        assert!(ramsey_beating(1e6, 1.0, &[0.0], 0.0, 0.5).is_err());
        assert!(ramsey_beating(1e6, 1.0, &[0.0], 1e-6, 1.5).is_err());
    }
}
