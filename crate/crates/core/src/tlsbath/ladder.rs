use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Equally spaced TLS ensemble around the qubit, detunings `δ_k = kΔ + Δ₀`.
///
/// All rates and detunings are in 1/s. `k` runs over `−⌊K/2⌋ … ⌈K/2⌉−1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsLadder {
    pub count: usize,
    pub spacing: f64,
    pub offset: f64,
    pub coupling: f64,
    pub gamma2: f64,
    pub gamma_t: f64,
}

/// Intrinsic TLS relaxation used when none is given (1/50 ms).
pub const DEFAULT_GAMMA_T: f64 = 20.0;

impl TlsLadder {
    pub fn new(
        count: usize,
        spacing: f64,
        offset: f64,
        coupling: f64,
        gamma2: f64,
        gamma_t: f64,
    ) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid(format!("ladder spacing must be positive, got {spacing}")));
        }
        if !(0.0..=spacing / 2.0).contains(&offset) {
            return Err(Error::invalid(format!(
                "ladder offset must lie in [0, spacing/2], got {offset}"
            )));
        }
        if !(coupling >= 0.0) || !coupling.is_finite() {
            return Err(Error::invalid(format!("coupling must be finite and >= 0, got {coupling}")));
        }
        if !(gamma2 > 0.0) || !gamma2.is_finite() {
            return Err(Error::invalid(format!("gamma2 must be positive, got {gamma2}")));
        }
        if !(gamma_t >= 0.0) || !gamma_t.is_finite() {
            return Err(Error::invalid(format!("gamma_t must be finite and >= 0, got {gamma_t}")));
        }
        Ok(Self { count, spacing, offset, coupling, gamma2, gamma_t })
    }

    /// Same ladder with `g` rescaled so that `ΣΓ_qt = total`.
    pub fn with_total_rate(self, total: f64) -> Result<Self> {
        if !(total >= 0.0) || !total.is_finite() {
            return Err(Error::invalid(format!("total rate must be finite and >= 0, got {total}")));
        }
        let unit = Self { coupling: 1.0, ..self };
        let per_g2 = cross_relaxation_rates(&unit).total;
        if per_g2 == 0.0 {
            return Err(Error::invalid("ladder has no TLS to carry a cross-relaxation rate"));
        }
        Ok(Self { coupling: (total / per_g2).sqrt(), ..self })
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let lo = -((self.count / 2) as i64);
        lo..lo + self.count as i64
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.indices().map(|k| k as f64 * self.spacing + self.offset).collect()
    }
}

impl Default for TlsLadder {
    /// 100 TLSs, 1 MHz-scale spacing and linewidth, scaled to `ΣΓ_qt = 45 kHz`.
    fn default() -> Self {
        Self::new(100, 1.0e6, 0.25e6, 1.0, 0.5e6, DEFAULT_GAMMA_T)
            .and_then(|l| l.with_total_rate(45e3))
            .expect("valid default ladder")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossRelaxation {
    pub indices: Vec<i64>,
    pub rates: Vec<f64>,
    pub total: f64,
}

/// `Γ_qt^k = 2g²Γ₂/(Γ₂² + δ_k²)` for every TLS, and their sum.
pub fn cross_relaxation_rates(ladder: &TlsLadder) -> CrossRelaxation {
    let g2 = ladder.coupling * ladder.coupling;
    let w = ladder.gamma2;
    let indices: Vec<i64> = ladder.indices().collect();
    let rates: Vec<f64> = ladder
        .detunings()
        .iter()
        .map(|d| 2.0 * g2 * w / (w * w + d * d))
        .collect();
    let total = rates.iter().sum();
    CrossRelaxation { indices, rates, total }
}
