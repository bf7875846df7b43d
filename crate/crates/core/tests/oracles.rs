//! Checks against independent reference computations.

// matrix oracles read clearer with explicit indices
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use fluxkit::circuit::{
    build_hamiltonian, elements_from_energies, energies_from_elements, transition_frequencies,
    CircuitEnergies, ElementValues,
};
use fluxkit::numerics::{eigh, propagate_linear, seeded_rng, RateMatrix, SymmetricMatrix};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// det(M − λI) by Gaussian elimination with partial pivoting.
fn char_poly(m: &[Vec<f64>], lambda: f64) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

fn roots_by_bisection(m: &[Vec<f64>]) -> Vec<f64> {
    let radius = m
        .iter()
        .enumerate()
        .map(|(i, r)| r[i].abs() + r.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut x0 = -radius - 1e-9;
    let mut f0 = char_poly(m, x0);
    for s in 1..=steps {
        let x1 = -radius + 2.0 * radius * s as f64 / steps as f64 + 1e-9;
        let f1 = char_poly(m, x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = char_poly(m, mid);
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
                if b - a < 1e-15 * radius {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    let mut rng = seeded_rng(2024);
    for _ in 0..5 {
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let eig = eigh(&SymmetricMatrix::from_rows(&rows).unwrap()).unwrap();
        let roots = roots_by_bisection(&rows);
        assert_eq!(roots.len(), n, "{roots:?}");
        for (a, b) in eig.values.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

/// Explicit Euler at step `h`, Richardson-extrapolated against `h/2`.
fn euler_reference(g: &DMatrix<f64>, d: &DVector<f64>, x0: &DVector<f64>, t: f64, steps: usize) -> DVector<f64> {
    let run = |n: usize| {
        let h = t / n as f64;
        let mut x = x0.clone();
        for _ in 0..n {
            x += (g * &x + d) * h;
        }
        x
    };
    run(2 * steps) * 2.0 - run(steps)
}

#[test]
fn three_level_chain_matches_euler() {
    let g = DMatrix::from_row_slice(3, 3, &[-1.0, 0.4, 0.0, 0.6, -1.1, 0.3, 0.4, 0.7, -0.3]);
    let d = DVector::from_vec(vec![0.1, 0.0, 0.05]);
    let sys = RateMatrix::new(g.clone(), d.clone()).unwrap();
    let x0 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let exact = propagate_linear(&sys, x0.as_slice(), 2.5).unwrap();
    let reference = euler_reference(&g, &d, &x0, 2.5, 100_000);
    for (a, b) in exact.iter().zip(reference.iter()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn propagation_agrees_with_halved_steps() {
    let g = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.5, 1.0, -1.5, 0.2, 0.5, 0.2, -0.9]);
    let sys = RateMatrix::new(g, DVector::from_vec(vec![0.3, 0.1, 0.0])).unwrap();
    let x0 = [0.2, 0.9, 0.4];
    let whole = propagate_linear(&sys, &x0, 3.0).unwrap();
    let mut halves = x0.to_vec();
    for _ in 0..2 {
        halves = propagate_linear(&sys, &halves, 1.5).unwrap();
    }
    for (a, b) in whole.iter().zip(&halves) {
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-12), "{a} vs {b}");
    }
}

/// Lowest eigenvalues of `4E_C n² + ½E_L θ² − E_J cos(θ + φ_ext)` on a phase
/// grid, by Sturm-sequence bisection of the three-point discretisation,
/// extrapolated in the grid step.
fn phase_grid_levels(e: &CircuitEnergies, phi_ext: f64, half_width: f64, points: usize) -> [f64; 3] {
    let levels = |n: usize| -> [f64; 3] {
        let h = 2.0 * half_width / (n + 1) as f64;
        let kin = 4.0 * e.e_c / (h * h);
        let diag: Vec<f64> = (1..=n)
            .map(|i| {
                let th = -half_width + i as f64 * h;
                2.0 * kin + 0.5 * e.e_l * th * th - e.e_j * (th + 2.0 * PI * phi_ext).cos()
            })
            .collect();
        // eigenvalues below x
        let count = |x: f64| {
            let mut c = 0;
            let mut q = 1.0;
            for (i, &a) in diag.iter().enumerate() {
                q = a - x - if i == 0 { 0.0 } else { kin * kin / q };
                if q == 0.0 {
                    q = 1e-300;
                }
                if q < 0.0 {
                    c += 1;
                }
            }
            c
        };
        let lo0 = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * kin;
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let (mut lo, mut hi) = (lo0, lo0 + 1e3);
            while count(hi) <= k {
                hi += 1e3;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            *slot = 0.5 * (lo + hi);
        }
        out
    };
    let coarse = levels(points);
    let fine = levels(2 * points + 1);
    [0, 1, 2].map(|k| (4.0 * fine[k] - coarse[k]) / 3.0)
}

#[test]
fn spectrum_matches_phase_grid_at_default_basis() {
    let e = CircuitEnergies::new(1.0, 0.5, 4.0).unwrap();
    for phi in [0.0, 0.23, 0.5] {
        let grid = phase_grid_levels(&e, phi, 30.0, 6000);
        let eig = eigh(&build_hamiltonian(&e, phi, 60).unwrap()).unwrap();
        let f_ge = eig.values[1] - eig.values[0];
        let f_gf = eig.values[2] - eig.values[0];
        assert!((f_ge - (grid[1] - grid[0])).abs() < 1e-5, "{phi}: {f_ge} vs {}", grid[1] - grid[0]);
        assert!((f_gf - (grid[2] - grid[0])).abs() < 1e-5, "{phi}: {f_gf} vs {}", grid[2] - grid[0]);
    }
}

#[test]
fn measured_circuit_spectrum_matches_phase_grid() {
    let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
    let grid = phase_grid_levels(&e, 0.5, 40.0, 16000);
    let t = transition_frequencies(&e, 0.5, 60).unwrap();
    assert!((t.f_ge - (grid[1] - grid[0])).abs() < 1e-4, "{} vs {}", t.f_ge, grid[1] - grid[0]);
    assert!((t.f_gf - (grid[2] - grid[0])).abs() < 1e-3);
    assert!((t.f_ge / 2.365 - 1.0).abs() < 0.01);
}

#[test]
fn published_element_values() {
    let e = CircuitEnergies::new(14.1, 0.454, 32.2).unwrap();
    let v = elements_from_energies(&e).unwrap();
    assert!((v.critical_current / 64.9e-9 - 1.0).abs() < 0.01, "{}", v.critical_current);
    assert!((v.capacitance / 1.37e-15 - 1.0).abs() < 0.01, "{}", v.capacitance);
    assert!((v.inductance / 360e-9 - 1.0).abs() < 0.01, "{}", v.inductance);
    let back = energies_from_elements(&ElementValues::new(1.37e-15, 360e-9, 64.9e-9).unwrap()).unwrap();
    assert!((back.e_c / 14.1 - 1.0).abs() < 0.01);
    assert!((back.e_l / 0.454 - 1.0).abs() < 0.01);
    assert!((back.e_j / 32.2 - 1.0).abs() < 0.01);
}
