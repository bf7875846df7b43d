//! Averaged-periodogram (Welch) power spectral density estimation.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One-sided spectrum: `psd[k]` is the density at `frequencies[k]` (Hz), in
/// units of `signal² / Hz`, normalised so that `Σ psd·Δf` is the signal variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub psd: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }

    /// `∫ S df` by the rectangle rule over all bins.
    pub fn integrated_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }
}

/// Welch estimate with `segments` Hann-windowed, mean-removed segments at
/// 50 % overlap.
pub fn estimate_psd(samples: &[f64], dt: f64, segments: usize) -> Result<Spectrum> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("sample interval must be positive, got {dt}")));
    }
    if segments == 0 {
        return Err(Error::invalid("need at least one segment"));
    }
    let n = samples.len();
    if n < 2 * segments {
        return Err(Error::invalid(format!(
            "trace of {n} samples is too short for {segments} segments"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("trace has non-finite samples"));
    }
    let len = if segments == 1 { n } else { 2 * n / (segments + 1) };
    let hop = (len / 2).max(1);

    let window: Vec<f64> = (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let n_bins = len / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for s in 0..segments {
        let seg = &samples[s * hop..s * hop + len];
        let mean = seg.iter().sum::<f64>() / len as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }

    let norm = dt / (window_power * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let one_sided = if k == 0 || (len % 2 == 0 && k == len / 2) { 1.0 } else { 2.0 };
            v * norm * one_sided
        })
        .collect();
    let df = 1.0 / (len as f64 * dt);
    let frequencies = (0..n_bins).map(|k| k as f64 * df).collect();
    Ok(Spectrum { frequencies, psd })
}

/// Mean of `values` over logarithmically spaced frequency bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub f_lo: f64,
    pub f_hi: f64,
    pub mean: f64,
    pub bins: usize,
}

impl Band {
    pub fn center(&self) -> f64 {
        (self.f_lo * self.f_hi).sqrt()
    }
}

/// Averages `values` (sampled at `frequencies`) in `bands` log-spaced bands
/// covering `[f_min, f_max)`. Empty bands are skipped.
pub fn log_band_average(
    frequencies: &[f64],
    values: &[f64],
    f_min: f64,
    f_max: f64,
    bands: usize,
) -> Vec<Band> {
    let ratio = (f_max / f_min).powf(1.0 / bands as f64);
    (0..bands)
        .filter_map(|b| {
            let lo = f_min * ratio.powi(b as i32);
            let hi = lo * ratio;
            let (sum, count) = frequencies
                .iter()
                .zip(values)
                .filter(|(f, _)| **f >= lo && **f < hi)
                .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
            (count > 0).then(|| Band { f_lo: lo, f_hi: hi, mean: sum / count as f64, bins: count })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn tone_lands_in_one_bin() {
        let dt = 1e-3;
        let f0 = 62.5;
        let x: Vec<f64> = (0..8192)
            .map(|i| (2.0 * std::f64::consts::PI * f0 * i as f64 * dt).sin())
            .collect();
        let s = estimate_psd(&x, dt, 7).unwrap();
        let (kmax, _) = s
            .psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((s.frequencies[kmax] - f0).abs() <= s.resolution() / 2.0);
        // a unit sine carries variance 1/2
        assert!((s.integrated_power() - 0.5).abs() < 0.025);
    }

    #[test]
    fn white_noise_is_flat() {
        let mut rng = seeded_rng(11);
        let sigma = 0.3;
        let dt = 1e-4;
        let x: Vec<f64> = (0..200_000)
            .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let s = estimate_psd(&x, dt, 64).unwrap();
        let nyquist = 0.5 / dt;
        let bands = log_band_average(&s.frequencies, &s.psd, nyquist / 100.0, nyquist * 0.999, 8);
        let level = 2.0 * sigma * sigma * dt;
        let lo = bands.iter().map(|b| b.mean).fold(f64::INFINITY, f64::min);
        let hi = bands.iter().map(|b| b.mean).fold(0.0, f64::max);
        assert!((hi - lo) / level < 0.2, "band spread {lo}..{hi} vs level {level}");
        let var: f64 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((s.integrated_power() / var - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_short_trace() {
        assert!(estimate_psd(&[1.0, 2.0, 3.0], 1.0, 2).is_err());
        assert!(estimate_psd(&[1.0; 16], 0.0, 2).is_err());
    }
}
