//! Single-snapshot MUSIC on the Hankel matrix, used as the comparison
//! baseline.
//!
//! The noise projector comes from the left singular vectors of the full
//! `H = Hankel(y^ε)` beyond the leading `s`. The imaging function
//! `J(ω) = 1/‖P_noise φᴸ(ω)‖` is sampled on a uniform circular grid, its `s`
//! largest local maxima are refined by golden-section search within one grid
//! cell, and amplitudes come from least squares.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::esprit::{recover_amplitudes, EstimationResult, RANK_COLLAPSE_TOLERANCE};
use crate::hankel::{check_split, default_split, hankel_matrix, imaging_vector};
use crate::numerics::{self, CMatrix};
use crate::parallel::{map_indexed, Execution};
use crate::signal_model::{reduce, SampleVector};

pub const DEFAULT_GRID_DENSITY: usize = 20;

/// Frequency tolerance of the golden-section refinement.
pub const REFINE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MusicOptions {
    pub split: Option<usize>,
    /// Grid points per Rayleigh length.
    pub grid_density: usize,
    pub execution: Execution,
}

impl Default for MusicOptions {
    fn default() -> Self {
        Self {
            split: None,
            grid_density: DEFAULT_GRID_DENSITY,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pseudospectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sparsity: usize,
}

impl Pseudospectrum {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["omega", "value"])?;
        for (g, v) in self.grid.iter().zip(&self.values) {
            w.write_record([format!("{g}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Orthogonal complement of the leading `s` left singular vectors of `H`.
#[derive(Debug, Clone)]
pub struct NoiseSubspace {
    split: usize,
    /// Adjoint of the noise basis when the SVD yields a complete `U`,
    /// otherwise the adjoint of the signal basis.
    projector_rows: CMatrix,
    complete: bool,
    singular_values: Vec<f64>,
}

impl NoiseSubspace {
    pub fn new(y: &SampleVector, sparsity: usize, split: Option<usize>) -> Result<Self> {
        let degree = y.degree();
        let split = split.unwrap_or_else(|| default_split(degree));
        check_split(split, degree)?;
        if sparsity == 0 || degree + 1 < 2 * sparsity {
            return Err(Error::InvalidArgument(format!(
                "MUSIC needs 1 <= s and M + 1 >= 2s, got s = {sparsity}, M = {degree}"
            )));
        }
        if sparsity >= split + 1 {
            return Err(Error::InvalidArgument(format!(
                "sparsity {sparsity} leaves no noise subspace in {} rows",
                split + 1
            )));
        }
        let h = hankel_matrix(y.values(), split)?;
        let dec = numerics::svd(&h)?;
        let top = dec.singular_values[0];
        let sigma_s = dec.singular_values[sparsity - 1];
        if !(sigma_s > RANK_COLLAPSE_TOLERANCE * top) {
            return Err(Error::RankCollapse {
                sparsity,
                sigma: sigma_s,
                sigma_max: top,
            });
        }
        let rows = split + 1;
        let complete = dec.u.ncols() == rows;
        let projector_rows = if complete {
            dec.u.columns(sparsity, rows - sparsity).adjoint()
        } else {
            dec.u.columns(0, sparsity).adjoint()
        };
        Ok(Self {
            split,
            projector_rows,
            complete,
            singular_values: dec.singular_values,
        })
    }

    /// `‖P_noise φᴸ(ω)‖₂`.
    pub fn residual(&self, omega: f64) -> f64 {
        let phi = imaging_vector(omega, self.split);
        let proj = &self.projector_rows * &phi;
        let proj_sq: f64 = proj.iter().map(|z| z.norm_sqr()).sum();
        if self.complete {
            proj_sq.sqrt()
        } else {
            ((self.split + 1) as f64 - proj_sq).max(0.0).sqrt()
        }
    }

    /// `J(ω)`, finite even on an exact pole.
    pub fn imaging(&self, omega: f64) -> f64 {
        let floor = 1e-16 * ((self.split + 1) as f64).sqrt();
        1.0 / self.residual(omega).max(floor)
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn split(&self) -> usize {
        self.split
    }
}

fn grid_len(degree: usize, density: usize) -> Result<usize> {
    if density == 0 {
        return Err(Error::InvalidArgument("grid density must be positive".into()));
    }
    Ok((density * degree).max(3))
}

pub fn pseudospectrum(
    y: &SampleVector,
    sparsity: usize,
    options: &MusicOptions,
) -> Result<(Pseudospectrum, NoiseSubspace)> {
    let subspace = NoiseSubspace::new(y, sparsity, options.split)?;
    let n = grid_len(y.degree(), options.grid_density)?;
    let grid: Vec<f64> = (0..n).map(|g| g as f64 / n as f64).collect();
    let values = map_indexed(n, options.execution, |g| subspace.imaging(grid[g]));
    Ok((Pseudospectrum { grid, values, sparsity }, subspace))
}

/// Indices of strict local maxima on the periodic grid, largest first.
fn circular_peaks(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            values[i] > prev && values[i] > next
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks
}

/// Golden-section minimization of `f` on `[lo, hi]`.
fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

pub fn music_estimate(y: &SampleVector, sparsity: usize, options: &MusicOptions) -> Result<EstimationResult> {
    let (spectrum, subspace) = pseudospectrum(y, sparsity, options)?;
    let peaks = circular_peaks(&spectrum.values);
    if peaks.len() < sparsity {
        return Err(Error::TooFewPeaks {
            found: peaks.len(),
            needed: sparsity,
        });
    }
    let step = 1.0 / spectrum.grid.len() as f64;
    let mut frequencies: Vec<f64> = peaks[..sparsity]
        .iter()
        .map(|&g| {
            let center = spectrum.grid[g];
            let refined = golden_section_min(|w| subspace.residual(w), center - step, center + step, REFINE_TOLERANCE);
            // keep the grid point if unimodality failed inside the cell
            if subspace.imaging(refined) >= spectrum.values[g] {
                reduce(refined)
            } else {
                center
            }
        })
        .collect();
    frequencies.sort_by(f64::total_cmp);
    let amplitudes = recover_amplitudes(&frequencies, y)?;
    let eigenvalues = frequencies
        .iter()
        .map(|&w| Complex64::from_polar(1.0, -2.0 * PI * w))
        .collect();
    Ok(EstimationResult {
        frequencies,
        amplitudes,
        eigenvalues,
        singular_values: subspace.singular_values,
        sparsity_used: sparsity,
        split_used: subspace.split,
    })
}
