//! Single-snapshot spectral estimation by the ESPRIT matrix pencil.
//!
//! Recovers the frequencies `ω_j ∈ [0, 1)` and amplitudes `x_j` of
//! `y(k) = Σ x_j exp(−2πi ω_j k)` from `M + 1` noisy samples, evaluates the
//! closed-form stability bounds for a given instance, and runs the Monte
//! Carlo sweeps comparing ESPRIT with a MUSIC baseline.
//!
//! ```
//! use num_complex::Complex64;
//! use ssesprit::esprit::{ss_esprit, EspritOptions};
//! use ssesprit::signal_model::{synthesize, SpectralModel};
//!
//! let model = SpectralModel::new(
//!     vec![0.1, 0.37],
//!     vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
//! )?;
//! let y = synthesize(&model, 32)?;
//! let est = ss_esprit(&y, &EspritOptions::default())?;
//! assert_eq!(est.sparsity_used, 2);
//! # Ok::<(), ssesprit::Error>(())
//! ```

pub mod bounds;
pub mod error;
pub mod esprit;
pub mod experiments;
pub mod hankel;
pub mod music;
pub mod numerics;
pub mod parallel;
pub mod plot;
pub mod rng;
pub mod signal_model;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use parallel::Execution;
