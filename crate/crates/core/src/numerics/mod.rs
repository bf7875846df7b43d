//! Shared numerical kernels.

mod eigen;
mod lsq;
mod ode;
mod rng;
mod spectral;

pub use eigen::{eigh, Eigh, SymmetricMatrix};
pub use lsq::{
    fit_residuals, least_squares_fit, least_squares_fit_with, DataPoint, FitOptions, FitResult,
};
pub use ode::{propagate_linear, AffinePropagator, RateMatrix};
pub use rng::{seeded_rng, SimRng};
pub use spectral::{estimate_psd, log_band_average, Band, Spectrum};
