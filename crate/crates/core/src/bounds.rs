//! Closed-form stability and resolution bounds, evaluated on concrete
//! instances.
//!
//! Everything here is a pure function of its inputs. Evaluators never refuse
//! to compute: when a hypothesis fails they return the value together with
//! `applicable = false`, so sweeps can chart the bounds outside the region
//! where they are guaranteed.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{build_pencil, check_split, default_split, hankel_matrix, vandermonde};
use crate::numerics::{self, CMatrix};
use crate::parallel::{map_indexed, Execution};
use crate::rng::derive_seed;
use crate::signal_model::{min_pairwise, noise, synthesize, NoiseSpec, SampleVector, SpectralModel};

/// Numerical value of a bound plus whether its hypothesis holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub applicable: bool,
}

pub fn min_separation(frequencies: &[f64]) -> Result<f64> {
    min_pairwise(frequencies).ok_or(Error::SingletonSet)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    /// `false` when `M ≤ 4π`, where the threshold is undefined.
    pub applicable: bool,
    /// `2 (1 − 4π/M)^{−1/2}` in RL; NaN when not applicable.
    pub threshold_rl: f64,
    pub ok: bool,
}

/// Whether `ρ = δM` exceeds `2 (1 − 4π/M)^{−1/2}`.
pub fn separation_ok(delta: f64, degree: usize) -> SeparationCheck {
    let m = degree as f64;
    if m <= 4.0 * PI {
        return SeparationCheck {
            applicable: false,
            threshold_rl: f64::NAN,
            ok: false,
        };
    }
    let threshold_rl = 2.0 / (1.0 - 4.0 * PI / m).sqrt();
    SeparationCheck {
        applicable: true,
        threshold_rl,
        ok: delta * m > threshold_rl,
    }
}

/// Minimum separation `(1/N)(1 − 2π/N)^{−1/2}` required by the discrete
/// Ingham inequalities; infinite for `N ≤ 2π`.
pub fn ingham_threshold(n: usize) -> f64 {
    let n = n as f64;
    if n <= 2.0 * PI {
        f64::INFINITY
    } else {
        1.0 / (n * (1.0 - 2.0 * PI / n).sqrt())
    }
}

/// Lower bound `N (2/π − 2/(πN²δ²) − 4/N)` on `‖Φᴺz‖²/‖z‖²`.
pub fn ingham_lower(n: usize, delta: f64) -> BoundValue {
    let nf = n as f64;
    BoundValue {
        value: nf * (2.0 / PI - 2.0 / (PI * nf * nf * delta * delta) - 4.0 / nf),
        applicable: delta > ingham_threshold(n),
    }
}

fn ingham_upper_even_formula(n: f64, delta: f64) -> f64 {
    n * (4.0 * SQRT_2 / PI + SQRT_2 / (PI * n * n * delta * delta) + 3.0 * SQRT_2 / n)
}

/// Upper bound on `‖Φᴺz‖²/‖z‖²`; odd `N` uses the even-case formula at
/// `N + 1`.
pub fn ingham_upper(n: usize, delta: f64) -> BoundValue {
    let effective = if n % 2 == 0 { n } else { n + 1 };
    BoundValue {
        value: ingham_upper_even_formula(effective as f64, delta),
        applicable: delta > ingham_threshold(n),
    }
}

/// Bounds on the extreme nonzero singular values of the clean `H₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaBounds {
    /// Lower bound on `σ_s` valid for any split.
    pub general_lower: f64,
    /// Upper bound on `σ₁` valid for any split.
    pub general_upper: f64,
    /// Simplified forms, present when `L = ⌊(M+1)/2⌋`.
    pub simplified_lower: Option<f64>,
    pub simplified_upper: Option<f64>,
    /// The pair the report uses: simplified when available, else general.
    pub sigma_s_lower: f64,
    pub sigma_1_upper: f64,
    pub applicable: bool,
}

/// Separation required by the general-split σ bounds.
pub fn general_split_threshold(degree: usize, split: usize) -> f64 {
    ingham_threshold(split.saturating_sub(1)).max(ingham_threshold(degree.saturating_sub(split)))
}

pub fn sigma_bounds_from(delta: f64, x_min: f64, x_max: f64, degree: usize, split: usize) -> SigmaBounds {
    let m = degree as f64;
    let l = split as f64;
    let d2 = delta * delta;
    let lower_factor = |n: f64| (n - 1.0 / (n * d2) - 2.0 * PI).sqrt();
    let upper_factor = |n: f64| (n + 1.0 / (4.0 * n * d2) + 0.75 * PI).sqrt();

    let general_lower = 2.0 * x_min / PI * lower_factor(l - 1.0) * lower_factor(m - l);
    let general_upper = 4.0 * SQRT_2 * x_max / PI * upper_factor(l) * upper_factor(m - l + 1.0);

    let (simplified_lower, simplified_upper, applicable) = if split == default_split(degree) {
        let lower = x_min * m / PI * (1.0 - 4.0 / (m * m * d2) - 4.0 * PI / m);
        let upper = x_max * m * 2.0 * SQRT_2 / PI * (1.0 + 1.0 / (m * m * d2) + 2.0 / m + 1.5 * PI / m);
        (Some(lower), Some(upper), separation_ok(delta, degree).ok)
    } else {
        (None, None, delta > general_split_threshold(degree, split))
    };
    SigmaBounds {
        general_lower,
        general_upper,
        simplified_lower,
        simplified_upper,
        sigma_s_lower: simplified_lower.unwrap_or(general_lower),
        sigma_1_upper: simplified_upper.unwrap_or(general_upper),
        applicable,
    }
}

pub fn sigma_bounds(model: &SpectralModel, degree: usize, split: usize) -> Result<SigmaBounds> {
    check_split(split, degree)?;
    let delta = min_separation(model.frequencies())?;
    Ok(sigma_bounds_from(delta, model.x_min(), model.x_max(), degree, split))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WedinConstant {
    /// `(1 + √5)/2`, the general spectral-norm constant.
    GoldenRatio,
    /// `2`, after bounding `‖Ĥ₁ − H₁‖₂ ≤ 2‖E₁‖₂`.
    Two,
}

impl WedinConstant {
    pub fn value(self) -> f64 {
        match self {
            WedinConstant::GoldenRatio => (1.0 + 5f64.sqrt()) / 2.0,
            WedinConstant::Two => 2.0,
        }
    }
}

/// Bound on `‖Â† − A†‖₂` given `‖Â†‖₂`, `‖A†‖₂` and `perturbation`. With
/// [`WedinConstant::GoldenRatio`] `perturbation` is `‖Â − A‖₂`; with
/// [`WedinConstant::Two`] it is `‖E₁‖₂`.
pub fn wedin_pinv_bound(hat_pinv_norm: f64, pinv_norm: f64, perturbation: f64, constant: WedinConstant) -> f64 {
    constant.value() * hat_pinv_norm * pinv_norm * perturbation
}

/// `‖H₁†‖₂ (2‖Ĥ₁†‖₂‖H₂^ε‖₂‖E₁‖₂ + ‖E₂‖₂)`.
pub fn eta_formula(h1_pinv: f64, h1hat_pinv: f64, h2eps: f64, e1: f64, e2: f64) -> f64 {
    h1_pinv * (wedin_pinv_bound(h1hat_pinv, 1.0, e1, WedinConstant::Two) * h2eps + e2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaBound {
    /// η from the actual norms of the instance.
    pub empirical: f64,
    /// η with every norm replaced by its closed-form majorant.
    pub certified: f64,
    pub h1_pinv_bound: f64,
    pub h1hat_pinv_bound: f64,
    pub h2eps_norm_bound: f64,
    pub e1_norm: f64,
    pub e2_norm: f64,
    pub applicable: bool,
}

struct Instance {
    degree: usize,
    split: usize,
    delta: f64,
    h1: CMatrix,
    h2: CMatrix,
    h1_eps: CMatrix,
    h2_eps: CMatrix,
    e1: CMatrix,
    e2: CMatrix,
}

impl Instance {
    fn new(model: &SpectralModel, noise_values: &[Complex64], split: Option<usize>) -> Result<Self> {
        if noise_values.len() < 2 {
            return Err(Error::InvalidArgument("noise vector needs at least 2 samples".into()));
        }
        let degree = noise_values.len() - 1;
        let split = split.unwrap_or_else(|| default_split(degree));
        check_split(split, degree)?;
        let delta = min_separation(model.frequencies())?;
        let clean = build_pencil(&synthesize(model, degree)?, split)?;
        let e = hankel_matrix(noise_values, split)?;
        let e1 = e.rows(0, split).into_owned();
        let e2 = e.rows(1, split).into_owned();
        Ok(Self {
            degree,
            split,
            delta,
            h1_eps: clean.h1() + &e1,
            h2_eps: clean.h2() + &e2,
            h1: clean.h1().clone(),
            h2: clean.h2().clone(),
            e1,
            e2,
        })
    }
}

fn eta_from_instance(model: &SpectralModel, inst: &Instance) -> Result<(EtaBound, SigmaBounds, [f64; 3])> {
    let s = model.sparsity();
    let sv_clean = numerics::singular_values(&inst.h1)?;
    let sv_noisy = numerics::singular_values(&inst.h1_eps)?;
    if s > sv_clean.len() {
        return Err(Error::InvalidArgument(format!(
            "sparsity {s} exceeds the split L = {}",
            inst.split
        )));
    }
    let sigma_s = sv_clean[s - 1];
    let sigma_1 = sv_clean[0];
    let sigma_s_eps = sv_noisy[s - 1];
    let h2eps = numerics::spectral_norm(&inst.h2_eps)?;
    let e1 = numerics::spectral_norm(&inst.e1)?;
    let e2 = numerics::spectral_norm(&inst.e2)?;

    let empirical = eta_formula(1.0 / sigma_s, 1.0 / sigma_s_eps, h2eps, e1, e2);

    let sb = sigma_bounds_from(inst.delta, model.x_min(), model.x_max(), inst.degree, inst.split);
    let h1_pinv_bound = 1.0 / sb.sigma_s_lower;
    let h1hat_pinv_bound = 1.0 / (sb.sigma_s_lower - e1);
    let h2eps_norm_bound = sb.sigma_1_upper;
    let certified = eta_formula(h1_pinv_bound, h1hat_pinv_bound, h2eps_norm_bound, e1, e2);
    let applicable = sb.applicable && e1 < sb.sigma_s_lower;
    Ok((
        EtaBound {
            empirical,
            certified,
            h1_pinv_bound,
            h1hat_pinv_bound,
            h2eps_norm_bound,
            e1_norm: e1,
            e2_norm: e2,
            applicable,
        },
        sb,
        [sigma_s, sigma_1, sigma_s_eps],
    ))
}

/// η for a model perturbed by `noise_values` (length `M + 1`).
pub fn eta_bound(model: &SpectralModel, noise_values: &[Complex64], split: Option<usize>) -> Result<EtaBound> {
    let inst = Instance::new(model, noise_values, split)?;
    Ok(eta_from_instance(model, &inst)?.0)
}

/// `(2 + η)^{1 − 1/n} η^{1/n}` with `n = M − L + 1`.
pub fn elsner_bound(eta: f64, degree: usize, split: usize) -> f64 {
    elsner_bound_dim(eta, degree + 1 - split)
}

pub fn elsner_bound_dim(eta: f64, n: usize) -> f64 {
    elsner_general(1.0 + eta, 1.0, eta, n)
}

/// Elsner's bound `(‖Â‖ + ‖A‖)^{1 − 1/n} ‖Â − A‖^{1/n}`.
pub fn elsner_general(norm_hat: f64, norm: f64, diff: f64, n: usize) -> f64 {
    if diff == 0.0 {
        return 0.0;
    }
    let p = 1.0 / n as f64;
    (norm_hat + norm).powf(1.0 - p) * diff.powf(p)
}

/// Hausdorff distance between two finite subsets of the complex plane.
pub fn complex_hausdorff(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let one_sided = |from: &[Complex64], to: &[Complex64]| {
        from.iter()
            .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

/// True iff every singular value of `A + E` is within `‖E‖₂` of the
/// corresponding one of `A`, up to `1e−9 (‖A‖₂ + ‖E‖₂)`.
pub fn weyl_check(a: &CMatrix, e: &CMatrix) -> Result<bool> {
    if a.shape() != e.shape() {
        return Err(Error::InvalidArgument("Weyl check needs equal shapes".into()));
    }
    let sa = numerics::singular_values(a)?;
    let sp = numerics::singular_values(&(a + e))?;
    let e_norm = numerics::spectral_norm(e)?;
    let slack = 1e-9 * (sa.first().copied().unwrap_or(0.0) + e_norm);
    let worst = sa.iter().zip(&sp).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(worst <= e_norm + slack)
}

/// Every bound of the stability analysis evaluated on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    /// `δM`, separation in RL.
    pub rho: f64,
    pub split: usize,
    pub degree: usize,
    pub sparsity: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub e1_norm: f64,
    pub e2_norm: f64,
    pub separation_threshold_rl: f64,
    /// Ingham lower bound with `N = L − 1`.
    pub ingham_lower_l: f64,
    /// Ingham lower bound with `N = M − L`.
    pub ingham_lower_ml: f64,
    pub ingham_upper_l: f64,
    pub ingham_upper_ml: f64,
    pub sigma_s_lower: f64,
    pub sigma_1_upper: f64,
    pub sigma_s_lower_general: f64,
    pub sigma_1_upper_general: f64,
    pub sigma_s: f64,
    pub sigma_1: f64,
    pub sigma_s_noisy: f64,
    pub h1_pinv_bound: f64,
    pub h1hat_pinv_bound: f64,
    pub h2eps_norm_bound: f64,
    pub eta_empirical: f64,
    pub eta_certified: f64,
    /// Large-M approximation of η; informational only.
    pub eta_asymptotic: f64,
    /// `‖Ψ̂ − Ψ‖₂`.
    pub psi_error: f64,
    /// `‖Ψ‖₂`, taken as 1 by the Elsner bound below.
    pub psi_norm: f64,
    pub psi_hat_norm: f64,
    /// Hausdorff distance between the full eigenvalue multisets of Ψ̂ and Ψ.
    pub eigenvalue_hausdorff: f64,
    /// Elsner bound with the certified η.
    pub elsner_bound: f64,
    /// Elsner bound with the measured norms and `‖Ψ̂ − Ψ‖₂`.
    pub elsner_bound_measured: f64,
    pub applicable: bool,
    pub reason: Option<String>,
}

fn eta_asymptotic(rho: f64, x_min: f64, x_max: f64, e1: f64, e2: f64, degree: usize) -> f64 {
    let m = degree as f64;
    let r2 = 1.0 / (rho * rho);
    let q = 1.0 - 4.0 * r2;
    PI / (x_min * q) * (4.0 * SQRT_2 * (1.0 + r2) * x_max / (q * x_min - PI * e1 / m) * (e1 / m) + e2 / m)
}

pub fn bound_report(model: &SpectralModel, noise_values: &[Complex64], split: Option<usize>) -> Result<BoundReport> {
    let inst = Instance::new(model, noise_values, split)?;
    let (eta, sb, [sigma_s, sigma_1, sigma_s_noisy]) = eta_from_instance(model, &inst)?;
    let (degree, split, delta) = (inst.degree, inst.split, inst.delta);
    let s = model.sparsity();
    let sep = separation_ok(delta, degree);

    let psi = numerics::truncated_pinv(&inst.h1, s)? * &inst.h2;
    let psi_hat = numerics::truncated_pinv(&inst.h1_eps, s)? * &inst.h2_eps;
    let psi_error = numerics::spectral_norm(&(&psi_hat - &psi))?;
    let psi_norm = numerics::spectral_norm(&psi)?;
    let psi_hat_norm = numerics::spectral_norm(&psi_hat)?;
    let eigenvalue_hausdorff = complex_hausdorff(&numerics::eigenvalues(&psi_hat)?, &numerics::eigenvalues(&psi)?)?;
    let n = degree + 1 - split;

    let reason = if !sep.applicable {
        Some(format!("M = {degree} does not exceed 4π"))
    } else if !sep.ok {
        Some(format!(
            "separation {:.4} RL does not exceed the threshold {:.4} RL",
            delta * degree as f64,
            sep.threshold_rl
        ))
    } else if !sb.applicable {
        Some("separation too small for the split-dependent singular value bounds".into())
    } else if !(eta.e1_norm < sb.sigma_s_lower) {
        Some(format!(
            "noise norm {:.4e} is not below the sigma_s lower bound {:.4e}",
            eta.e1_norm, sb.sigma_s_lower
        ))
    } else {
        None
    };

    Ok(BoundReport {
        delta,
        rho: delta * degree as f64,
        split,
        degree,
        sparsity: s,
        x_min: model.x_min(),
        x_max: model.x_max(),
        e1_norm: eta.e1_norm,
        e2_norm: eta.e2_norm,
        separation_threshold_rl: sep.threshold_rl,
        ingham_lower_l: ingham_lower(split - 1, delta).value,
        ingham_lower_ml: ingham_lower(degree - split, delta).value,
        ingham_upper_l: ingham_upper(split - 1, delta).value,
        ingham_upper_ml: ingham_upper(degree - split, delta).value,
        sigma_s_lower: sb.sigma_s_lower,
        sigma_1_upper: sb.sigma_1_upper,
        sigma_s_lower_general: sb.general_lower,
        sigma_1_upper_general: sb.general_upper,
        sigma_s,
        sigma_1,
        sigma_s_noisy,
        h1_pinv_bound: eta.h1_pinv_bound,
        h1hat_pinv_bound: eta.h1hat_pinv_bound,
        h2eps_norm_bound: eta.h2eps_norm_bound,
        eta_empirical: eta.empirical,
        eta_certified: eta.certified,
        eta_asymptotic: eta_asymptotic(
            delta * degree as f64,
            model.x_min(),
            model.x_max(),
            eta.e1_norm,
            eta.e2_norm,
            degree,
        ),
        psi_error,
        psi_norm,
        psi_hat_norm,
        eigenvalue_hausdorff,
        elsner_bound: elsner_bound_dim(eta.certified, n),
        elsner_bound_measured: elsner_general(psi_hat_norm, psi_norm, psi_error, n),
        applicable: reason.is_none(),
        reason,
    })
}

impl BoundReport {
    pub fn write_csv<W: Write>(reports: &[BoundReport], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in reports {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `‖Φᴺ z‖²/‖z‖²`, the quantity the Ingham inequalities bound.
pub fn rayleigh_quotient(frequencies: &[f64], degree: usize, z: &[Complex64]) -> f64 {
    let phi = vandermonde(frequencies, degree).into_matrix();
    let z = nalgebra::DVector::from_column_slice(z);
    (phi * &z).norm_squared() / z.norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseNormRow {
    pub degree: usize,
    pub mean_norm: f64,
    /// `mean_norm / √(M log M)`.
    pub normalized: f64,
}

/// Mean `‖E₁‖₂` of i.i.d. complex Gaussian Hankel blocks at the default
/// split, one row per `M`.
pub fn hankel_noise_norm_scaling(
    degrees: &[usize],
    nu: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<NoiseNormRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if let Some(&m) = degrees.iter().find(|&&m| m < 16) {
        return Err(Error::InvalidArgument(format!("M = {m} is below 16")));
    }
    let jobs: Vec<(usize, usize)> = (0..degrees.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let norms = map_indexed(jobs.len(), exec, |j| -> Result<f64> {
        let (i, t) = jobs[j];
        let degree = degrees[i];
        let spec = NoiseSpec::new(nu, derive_seed(seed, i as u64, t as u64))?;
        let eps = noise(degree + 1, &spec);
        let split = default_split(degree);
        let e = hankel_matrix(&eps, split)?;
        numerics::spectral_norm(&e.rows(0, split).into_owned())
    });
    let norms = norms.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(degrees
        .iter()
        .enumerate()
        .map(|(i, &degree)| {
            let mean = norms[i * trials..(i + 1) * trials].iter().sum::<f64>() / trials as f64;
            let m = degree as f64;
            NoiseNormRow {
                degree,
                mean_norm: mean,
                normalized: mean / (m * m.ln()).sqrt(),
            }
        })
        .collect())
}

/// Noise for a bound report as a [`SampleVector`] perturbation.
pub fn noisy_samples(model: &SpectralModel, degree: usize, spec: &NoiseSpec) -> Result<(SampleVector, Vec<Complex64>)> {
    let y = synthesize(model, degree)?;
    let eps = noise(degree + 1, spec);
    let noisy = SampleVector::new(y.values().iter().zip(&eps).map(|(a, b)| a + b).collect())?;
    Ok((noisy, eps))
}
