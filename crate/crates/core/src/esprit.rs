//! Single-snapshot ESPRIT.
//!
//! The noisy pencil `(H₁^ε, H₂^ε)` is truncated to the leading `s` singular
//! triplets of `H₁^ε`, `Ĥ₁ = U₁ Σ_s V₁*`, and the frequencies are read off
//! the nonzero eigenvalues of `Ψ̂ = Ĥ₁† H₂^ε`. By default the eigenproblem is
//! solved on the `s×s` matrix `Σ_s⁻¹ U₁* H₂^ε V₁`, which has exactly the
//! nonzero spectrum of `Ψ̂` (the nonzero spectra of `AB` and `BA` agree).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{build_pencil, check_split, default_split, vandermonde};
use crate::numerics::{self, CMatrix, CVector, SvdResult};
use crate::signal_model::{reduce, SampleVector};

/// Minimum ratio `σ_j/σ_{j+1}` accepted as a spectral gap when no noise
/// level is supplied.
pub const GAP_RATIO_THRESHOLD: f64 = 10.0;

/// Relative floor on `σ_s/σ₁` below which the truncated pencil is rejected.
pub const RANK_COLLAPSE_TOLERANCE: f64 = 1e-12;

mod complex_list {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub frequencies: Vec<f64>,
    #[serde(with = "complex_list")]
    pub amplitudes: Vec<Complex64>,
    #[serde(with = "complex_list")]
    pub eigenvalues: Vec<Complex64>,
    pub singular_values: Vec<f64>,
    pub sparsity_used: usize,
    pub split_used: usize,
}

/// Which matrix the eigenvalues are taken from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PencilSolve {
    /// `s×s` reduced matrix.
    #[default]
    Reduced,
    /// Full `(M−L+1)×(M−L+1)` matrix `Ĥ₁† H₂^ε`, keeping the `s` eigenvalues
    /// of largest modulus.
    Full,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EspritOptions {
    pub sparsity: Option<usize>,
    pub split: Option<usize>,
    /// Threshold on singular values used for sparsity detection instead of
    /// the gap heuristic.
    pub noise_norm_hint: Option<f64>,
    pub solve: PencilSolve,
}

impl EspritOptions {
    pub fn with_sparsity(sparsity: usize) -> Self {
        Self {
            sparsity: Some(sparsity),
            ..Self::default()
        }
    }
}

/// Number of singular values above the noise level when `noise_norm_hint` is
/// given, otherwise the position of the largest ratio `σ_j/σ_{j+1}`, which
/// must reach [`GAP_RATIO_THRESHOLD`]. Ratios between values already at
/// roundoff level (`σ_j ≤ n·ε·σ₁`) are not candidates.
pub fn estimate_sparsity(singular_values: &[f64], noise_norm_hint: Option<f64>) -> Result<usize> {
    if singular_values.is_empty() {
        return Err(Error::InvalidArgument("no singular values supplied".into()));
    }
    if let Some(level) = noise_norm_hint {
        return Ok(singular_values.iter().filter(|&&s| s > level).count());
    }
    let floor = singular_values[0] * singular_values.len() as f64 * f64::EPSILON;
    let mut best: Option<(usize, f64)> = None;
    for (j, pair) in singular_values.windows(2).enumerate() {
        if pair[0] <= floor {
            break;
        }
        let ratio = if pair[1] > 0.0 {
            pair[0] / pair[1]
        } else if pair[0] > 0.0 {
            f64::INFINITY
        } else {
            continue;
        };
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((j + 1, ratio));
        }
    }
    match best {
        Some((count, ratio)) if ratio >= GAP_RATIO_THRESHOLD => Ok(count),
        Some((_, ratio)) => Err(Error::SparsityUndetectable { best_ratio: ratio }),
        None => Err(Error::SparsityUndetectable { best_ratio: f64::NAN }),
    }
}

/// `(−arg λ / 2π) mod 1`; the modulus is discarded.
pub fn eigenvalue_to_frequency(lambda: Complex64) -> Result<f64> {
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    Ok(reduce(-lambda.arg() / (2.0 * PI)))
}

/// Truncated pencil of a sample vector, before the eigenproblem.
#[derive(Debug, Clone)]
pub struct TruncatedPencil {
    pub svd: SvdResult,
    pub h2: CMatrix,
    pub sparsity: usize,
    pub split: usize,
}

impl TruncatedPencil {
    pub fn new(y: &SampleVector, sparsity: Option<usize>, split: Option<usize>, hint: Option<f64>) -> Result<Self> {
        let degree = y.degree();
        let split = split.unwrap_or_else(|| default_split(degree));
        check_split(split, degree)?;
        if let Some(s) = sparsity {
            if s == 0 {
                return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
            }
            if degree + 1 < 2 * s {
                return Err(Error::InvalidArgument(format!(
                    "M + 1 = {} samples cannot resolve s = {s} frequencies (need M + 1 >= 2s)",
                    degree + 1
                )));
            }
            if s > split {
                return Err(Error::InvalidArgument(format!(
                    "sparsity {s} exceeds the split L = {split}"
                )));
            }
        }
        let pencil = build_pencil(y, split)?;
        let svd = numerics::svd(pencil.h1())?;
        let sparsity = match sparsity {
            Some(s) => s,
            None => estimate_sparsity(&svd.singular_values, hint)?,
        };
        if sparsity == 0 {
            return Err(Error::InvalidArgument(
                "no singular value exceeds the noise level".into(),
            ));
        }
        let top = svd.singular_values[0];
        let sigma_s = svd.singular_values[sparsity - 1];
        if !(sigma_s > RANK_COLLAPSE_TOLERANCE * top) {
            return Err(Error::RankCollapse {
                sparsity,
                sigma: sigma_s,
                sigma_max: top,
            });
        }
        Ok(Self {
            svd,
            h2: pencil.h2().clone(),
            sparsity,
            split,
        })
    }

    /// `Σ_s⁻¹ U₁* H₂ V₁`.
    pub fn reduced_matrix(&self) -> CMatrix {
        let s = self.sparsity;
        let u1 = self.svd.u.columns(0, s);
        let v1 = self.svd.v.columns(0, s);
        let mut m = u1.adjoint() * &self.h2 * v1;
        for i in 0..s {
            m.row_mut(i).scale_mut(1.0 / self.svd.singular_values[i]);
        }
        m
    }

    /// `Ĥ₁† H₂`.
    pub fn full_matrix(&self) -> Result<CMatrix> {
        let pinv = numerics::truncated_pinv_from_svd(&self.svd, self.sparsity)?;
        Ok(pinv * &self.h2)
    }

    pub fn eigenvalues(&self, solve: PencilSolve) -> Result<Vec<Complex64>> {
        let mut eig = match solve {
            PencilSolve::Reduced => numerics::eigenvalues(&self.reduced_matrix())?,
            PencilSolve::Full => numerics::eigenvalues(&self.full_matrix()?)?,
        };
        eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        eig.truncate(self.sparsity);
        Ok(eig)
    }
}

/// Amplitudes by least squares against `Φᴹ(Ŝ)`.
pub fn recover_amplitudes(frequencies: &[f64], y: &SampleVector) -> Result<Vec<Complex64>> {
    let phi = vandermonde(frequencies, y.degree()).into_matrix();
    let rhs = CVector::from_column_slice(y.values());
    Ok(numerics::least_squares(&phi, &rhs)?.iter().copied().collect())
}

pub fn ss_esprit(y: &SampleVector, options: &EspritOptions) -> Result<EstimationResult> {
    let pencil = TruncatedPencil::new(y, options.sparsity, options.split, options.noise_norm_hint)?;
    let mut pairs = pencil
        .eigenvalues(options.solve)?
        .into_iter()
        .map(|l| eigenvalue_to_frequency(l).map(|w| (w, l)))
        .collect::<Result<Vec<_>>>()?;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (frequencies, eigenvalues): (Vec<f64>, Vec<Complex64>) = pairs.into_iter().unzip();
    let amplitudes = recover_amplitudes(&frequencies, y)?;
    Ok(EstimationResult {
        frequencies,
        amplitudes,
        eigenvalues,
        singular_values: pencil.svd.singular_values,
        sparsity_used: pencil.sparsity,
        split_used: pencil.split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{synthesize, torus_distance, SpectralModel};

    #[test]
    fn sparsity_from_gap() {
        assert_eq!(estimate_sparsity(&[10.0, 9.0, 8.0, 1e-12, 1e-13], None).unwrap(), 3);
        assert_eq!(estimate_sparsity(&[10.0, 9.0, 8.0], Some(8.5)).unwrap(), 2);
        assert!(matches!(
            estimate_sparsity(&[10.0, 9.0, 8.0], None),
            Err(Error::SparsityUndetectable { .. })
        ));
        assert!(estimate_sparsity(&[], None).is_err());
    }

    #[test]
    fn sparsity_of_clean_single_mode() {
        let m = SpectralModel::new(vec![0.21], vec![Complex64::new(1.3, 0.4)]).unwrap();
        let y = synthesize(&m, 30).unwrap();
        let p = build_pencil(&y, 15).unwrap();
        let sv = numerics::svd(p.h1()).unwrap().singular_values;
        assert_eq!(estimate_sparsity(&sv, None).unwrap(), 1);
    }

    #[test]
    fn frequency_from_eigenvalue() {
        assert_eq!(eigenvalue_to_frequency(Complex64::new(1.0, 0.0)).unwrap(), 0.0);
        let f = eigenvalue_to_frequency(Complex64::new(0.0, -1.0)).unwrap();
        assert!((f - 0.25).abs() < 1e-15);
        let f = eigenvalue_to_frequency(Complex64::from_polar(0.9, -2.0 * PI * 0.7)).unwrap();
        assert!((f - 0.7).abs() < 1e-14);
        assert!(matches!(
            eigenvalue_to_frequency(Complex64::new(0.0, 0.0)),
            Err(Error::ZeroEigenvalue)
        ));
    }

    #[test]
    fn single_mode_noiseless() {
        let m = SpectralModel::new(vec![0.3], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let y = synthesize(&m, 4).unwrap();
        let est = ss_esprit(&y, &EspritOptions::with_sparsity(1)).unwrap();
        assert!(torus_distance(est.frequencies[0], 0.3) < 1e-10);
        assert!((est.amplitudes[0] - 1.0).norm() < 1e-10);
        assert_eq!(est.split_used, 2);
        assert_eq!(est.sparsity_used, 1);
    }

    #[test]
    fn sample_count_precondition() {
        let m = SpectralModel::new(vec![0.1, 0.2, 0.3], vec![Complex64::new(1.0, 0.0); 3]).unwrap();
        let y = synthesize(&m, 4).unwrap();
        assert!(matches!(
            ss_esprit(&y, &EspritOptions::with_sparsity(3)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rank_collapse_detected() {
        let m = SpectralModel::new(vec![0.1], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let y = synthesize(&m, 20).unwrap();
        assert!(matches!(
            ss_esprit(&y, &EspritOptions::with_sparsity(3)),
            Err(Error::RankCollapse { .. })
        ));
    }

    #[test]
    fn result_json_shape() {
        let m = SpectralModel::new(vec![0.3, 0.6], vec![Complex64::new(1.0, 0.5); 2]).unwrap();
        let est = ss_esprit(&synthesize(&m, 12).unwrap(), &EspritOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        for key in [
            "frequencies",
            "amplitudes",
            "eigenvalues",
            "singular_values",
            "sparsity_used",
            "split_used",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["amplitudes"][0].as_array().unwrap().len(), 2);
        let back: EstimationResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, est);
    }
}
