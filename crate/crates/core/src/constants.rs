//! Physical constants (CODATA 2018, 10 significant digits).

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_150e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649_000e-23;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078e-24;

/// 1 GHz in Hz.
pub const GHZ: f64 = 1e9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_quantum_is_h_over_2e() {
        let derived = PLANCK / (2.0 * ELEMENTARY_CHARGE);
        assert!(((derived - FLUX_QUANTUM) / FLUX_QUANTUM).abs() < 1e-9);
    }
}
