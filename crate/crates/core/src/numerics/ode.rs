//! Propagation of linear time-invariant systems `ẋ = G·x + d`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Linear inhomogeneous rate system `ẋ = generator·x + drive`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    generator: DMatrix<f64>,
    drive: DVector<f64>,
}

impl RateMatrix {
    pub fn new(generator: DMatrix<f64>, drive: DVector<f64>) -> Result<Self> {
        let n = generator.nrows();
        if n == 0 || generator.ncols() != n {
            return Err(Error::invalid(format!(
                "generator must be square and non-empty, got {}x{}",
                generator.nrows(),
                generator.ncols()
            )));
        }
        if drive.len() != n {
            return Err(Error::invalid(format!(
                "drive has length {} but generator is {n}x{n}",
                drive.len()
            )));
        }
        if generator.iter().chain(drive.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("rate system has non-finite entries"));
        }
        Ok(Self { generator, drive })
    }

    pub fn dim(&self) -> usize {
        self.drive.len()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn drive(&self) -> &DVector<f64> {
        &self.drive
    }

    /// Time derivative at state `x`.
    pub fn derivative(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.generator * x + &self.drive
    }

    /// Exact flow map over `duration`, `x ↦ Φ·x + c`.
    ///
    /// Computed as the exponential of the augmented matrix `[[G, d], [0, 0]]`,
    /// which carries the drive term without requiring `G` to be invertible.
    pub fn propagator(&self, duration: f64) -> Result<AffinePropagator> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::invalid(format!("duration must be finite and >= 0, got {duration}")));
        }
        let n = self.dim();
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.generator * duration));
        aug.view_mut((0, n), (n, 1)).copy_from(&(&self.drive * duration));
        let e = aug.exp();
        if e.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("matrix exponential overflowed".into()));
        }
        Ok(AffinePropagator {
            linear: e.view((0, 0), (n, n)).into_owned(),
            offset: e.view((0, n), (n, 1)).column(0).into_owned(),
        })
    }
}

/// Affine map `x ↦ linear·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePropagator {
    pub linear: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffinePropagator {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.offset
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &AffinePropagator) -> AffinePropagator {
        AffinePropagator {
            linear: &self.linear * &first.linear,
            offset: &self.linear * &first.offset + &self.offset,
        }
    }
}

/// Solution of `ẋ = G·x + d` at `t = duration` from `state0`.
pub fn propagate_linear(system: &RateMatrix, state0: &[f64], duration: f64) -> Result<Vec<f64>> {
    if state0.len() != system.dim() {
        return Err(Error::invalid(format!(
            "state has length {} but system dimension is {}",
            state0.len(),
            system.dim()
        )));
    }
    if duration == 0.0 {
        return Ok(state0.to_vec());
    }
    let prop = system.propagator(duration)?;
    Ok(prop.apply(&DVector::from_column_slice(state0)).as_slice().to_vec())
}
