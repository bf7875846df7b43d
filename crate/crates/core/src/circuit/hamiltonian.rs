//! Fluxonium Hamiltonian
//! `H = 4E_C n² + ½E_L(φ − φ_ext)² − E_J cos φ`, `φ_ext = 2π Φ_ext/Φ₀`,
//! in the eigenbasis of the oscillator `4E_C n² + ½E_L θ²`, `θ = φ − φ_ext`.
//!
//! With `θ = θ_zpf (a + a†)`, `θ_zpf = (2E_C/E_L)^{1/4}`, the Josephson term
//! becomes `−E_J [cos φ_ext · cos θ − sin φ_ext · sin θ]`. The matrix elements
//! of `cos θ` and `sin θ` are the real and imaginary parts of the displacement
//! operator `exp(iθ)`, which has the closed form
//!
//! ```text
//! ⟨n+k| e^{iθ} |n⟩ = i^k e^{−x/2} √(n!/(n+k)!) θ_zpf^k L_n^{(k)}(x),   x = θ_zpf²
//! ```
//!
//! so each truncated matrix is exact up to truncation. Centring the basis on
//! `φ_ext` makes the matrix itself exactly periodic in `Φ_ext`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::CircuitEnergies;
use crate::constants::{FLUX_QUANTUM, GHZ};
use crate::numerics::{eigh, Eigh, SymmetricMatrix};
use crate::{Error, Result};

pub const MIN_BASIS: usize = 10;
pub const DEFAULT_BASIS: usize = 60;
/// Largest basis tried by the automatic doubling.
pub const MAX_BASIS: usize = 960;
/// Relative change under basis doubling accepted as converged.
const CONVERGENCE_TOL: f64 = 1e-3;

/// Truncated oscillator basis for fixed `(E_C, E_L)`; holds `cos θ` and `sin θ`.
#[derive(Debug, Clone)]
pub struct FluxoniumBasis {
    size: usize,
    plasma: f64,
    cos_theta: DMatrix<f64>,
    sin_theta: DMatrix<f64>,
}

impl FluxoniumBasis {
    pub fn new(e_c: f64, e_l: f64, size: usize) -> Result<Self> {
        if size < MIN_BASIS {
            return Err(Error::invalid(format!(
                "basis size must be at least {MIN_BASIS}, got {size}"
            )));
        }
        if !(e_c > 0.0 && e_l > 0.0) {
            return Err(Error::invalid("E_C and E_L must be positive"));
        }
        let zpf = (2.0 * e_c / e_l).powf(0.25);
        let (cos_theta, sin_theta) = displacement_parts(zpf, size);
        Ok(Self { size, plasma: (8.0 * e_c * e_l).sqrt(), cos_theta, sin_theta })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn hamiltonian(&self, e_j: f64, phi_ext: f64) -> SymmetricMatrix {
        let (s, c) = (2.0 * PI * phi_ext).sin_cos();
        SymmetricMatrix::from_upper(self.size, |i, j| {
            let diag = if i == j { self.plasma * (i as f64 + 0.5) } else { 0.0 };
            diag - e_j * (c * self.cos_theta[(i, j)] - s * self.sin_theta[(i, j)])
        })
        .expect("basis size is at least MIN_BASIS")
    }

    /// `∂H/∂φ_ext = E_J sin(θ + φ_ext)` in GHz per radian of reduced flux.
    fn flux_derivative(&self, e_j: f64, phi_ext: f64) -> DMatrix<f64> {
        let (s, c) = (2.0 * PI * phi_ext).sin_cos();
        (&self.sin_theta * c + &self.cos_theta * s) * e_j
    }
}

/// Real and imaginary parts of `exp(i·zpf·(a + a†))` truncated to `n` levels.
fn displacement_parts(zpf: f64, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    const RESCALE: f64 = 1e150;
    let x = zpf * zpf;
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    let mut ln_fact = 0.0;
    for k in 0..n {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        // F_n = e^{-x/2} zpf^k √(n!/(n+k)!) L_n^{(k)}(x), carried as s·e^{log_scale}.
        let mut log_scale = -0.5 * x + k as f64 * zpf.ln() - 0.5 * ln_fact;
        let mut prev = 0.0;
        let mut cur = 1.0;
        let kf = k as f64;
        for row in 0..(n - k) {
            let value = cur * log_scale.exp();
            // i^k: even k feeds cos θ, odd k feeds sin θ, with alternating sign.
            let signed = if (k / 2) % 2 == 0 { value } else { -value };
            let (m, col) = (row + k, row);
            if k % 2 == 0 {
                re[(m, col)] = signed;
                re[(col, m)] = signed;
            } else {
                im[(m, col)] = signed;
                im[(col, m)] = signed;
            }
            let nf = row as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                log_scale += RESCALE.ln();
            }
        }
    }
    (re, im)
}

/// `H` at `Φ_ext` (units of Φ₀) in a `basis_size`-level oscillator basis, GHz.
pub fn build_hamiltonian(
    e: &CircuitEnergies,
    phi_ext: f64,
    basis_size: usize,
) -> Result<SymmetricMatrix> {
    if !phi_ext.is_finite() {
        return Err(Error::invalid("external flux must be finite"));
    }
    Ok(FluxoniumBasis::new(e.e_c, e.e_l, basis_size)?.hamiltonian(e.e_j, phi_ext))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transitions {
    /// Ground to first excited, GHz.
    pub f_ge: f64,
    /// Ground to second excited, GHz.
    pub f_gf: f64,
    /// Basis size the values were taken from.
    pub basis_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxSensitivity {
    /// `∂ω_ge/∂Φ_ext` in rad/s per Φ₀.
    pub per_phi0: f64,
    /// `∂ω_ge/∂Φ_ext` in rad/s per Wb.
    pub per_weber: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub phi_ext: f64,
    pub f_ge: f64,
    pub f_gf: f64,
}

/// Transition frequencies over a flux grid, sorted by flux.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub points: Vec<SpectrumPoint>,
}

/// Spectrum solver for fixed energies. Oscillator bases for the doubling
/// ladder `N, 2N, 4N, …` are built lazily and shared across flux points.
pub struct FluxoniumSolver {
    energies: CircuitEnergies,
    sizes: Vec<usize>,
    bases: Vec<OnceLock<FluxoniumBasis>>,
}

impl FluxoniumSolver {
    pub fn new(energies: CircuitEnergies, basis_size: usize) -> Result<Self> {
        if basis_size < MIN_BASIS {
            return Err(Error::invalid(format!(
                "basis size must be at least {MIN_BASIS}, got {basis_size}"
            )));
        }
        let mut sizes = vec![basis_size];
        while sizes.last().unwrap() * 2 <= MAX_BASIS {
            sizes.push(sizes.last().unwrap() * 2);
        }
        let bases = sizes.iter().map(|_| OnceLock::new()).collect();
        Ok(Self { energies, sizes, bases })
    }

    pub fn energies(&self) -> &CircuitEnergies {
        &self.energies
    }

    fn basis(&self, level: usize) -> &FluxoniumBasis {
        self.bases[level].get_or_init(|| {
            FluxoniumBasis::new(self.energies.e_c, self.energies.e_l, self.sizes[level])
                .expect("validated energies and basis size")
        })
    }

    fn solve(&self, level: usize, phi_ext: f64) -> Result<Eigh> {
        eigh(&self.basis(level).hamiltonian(self.energies.e_j, phi_ext))
    }

    /// Walks the doubling ladder until `f_ge` and `f_gf` change by less than
    /// 0.1 %; returns the eigensystem at the larger basis.
    fn converged(&self, phi_ext: f64) -> Result<(usize, Eigh)> {
        if !phi_ext.is_finite() {
            return Err(Error::invalid("external flux must be finite"));
        }
        let mut prev = self.solve(0, phi_ext)?;
        for level in 1..self.sizes.len() {
            let next = self.solve(level, phi_ext)?;
            let (a, b) = (gaps(&prev.values), gaps(&next.values));
            if ((a.0 - b.0) / b.0).abs() < CONVERGENCE_TOL
                && ((a.1 - b.1) / b.1).abs() < CONVERGENCE_TOL
            {
                return Ok((level, next));
            }
            prev = next;
        }
        Err(Error::NumericalFailure(format!(
            "spectrum not converged at basis size {} (Φ_ext = {phi_ext})",
            self.sizes.last().unwrap()
        )))
    }

    pub fn transitions(&self, phi_ext: f64) -> Result<Transitions> {
        let (level, eig) = self.converged(phi_ext)?;
        let (f_ge, f_gf) = gaps(&eig.values);
        Ok(Transitions { f_ge, f_gf, basis_size: self.sizes[level] })
    }

    /// Hellmann-Feynman slope of `ω_ge` with respect to external flux.
    pub fn sensitivity(&self, phi_ext: f64) -> Result<FluxSensitivity> {
        let (level, eig) = self.converged(phi_ext)?;
        let d = self.basis(level).flux_derivative(self.energies.e_j, phi_ext);
        let v0 = eig.vectors.column(0);
        let v1 = eig.vectors.column(1);
        // GHz per radian of φ_ext
        let slope = (v1.transpose() * &d * v1)[(0, 0)] - (v0.transpose() * &d * v0)[(0, 0)];
        let per_phi0 = 2.0 * PI * GHZ * slope * 2.0 * PI;
        Ok(FluxSensitivity { per_phi0, per_weber: per_phi0 / FLUX_QUANTUM })
    }

    pub fn spectrum(&self, fluxes: &[f64]) -> Result<SpectrumTable> {
        let mut sorted = fluxes.to_vec();
        if sorted.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid("flux grid has non-finite values"));
        }
        sorted.sort_by(f64::total_cmp);
        let points = sorted
            .par_iter()
            .map(|&phi_ext| {
                self.transitions(phi_ext)
                    .map(|t| SpectrumPoint { phi_ext, f_ge: t.f_ge, f_gf: t.f_gf })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumTable { points })
    }
}

fn gaps(values: &[f64]) -> (f64, f64) {
    (values[1] - values[0], values[2] - values[0])
}

/// `f_ge` and `f_gf` in GHz, converged by basis doubling from `basis_size`.
pub fn transition_frequencies(
    e: &CircuitEnergies,
    phi_ext: f64,
    basis_size: usize,
) -> Result<Transitions> {
    FluxoniumSolver::new(*e, basis_size)?.transitions(phi_ext)
}

pub fn flux_sensitivity(
    e: &CircuitEnergies,
    phi_ext: f64,
    basis_size: usize,
) -> Result<FluxSensitivity> {
    FluxoniumSolver::new(*e, basis_size)?.sensitivity(phi_ext)
}

pub fn spectrum(e: &CircuitEnergies, fluxes: &[f64], basis_size: usize) -> Result<SpectrumTable> {
    FluxoniumSolver::new(*e, basis_size)?.spectrum(fluxes)
}
