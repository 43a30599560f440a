//! Hankel pencils and Vandermonde matrices.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{frobenius_norm, CMatrix, CVector};
use crate::signal_model::{reduce, SampleVector, SpectralModel};

/// `⌊(M+1)/2⌋`, the split that balances the two Vandermonde factors.
pub fn default_split(degree: usize) -> usize {
    (degree + 1) / 2
}

pub fn check_split(split: usize, degree: usize) -> Result<()> {
    if split < 1 || 2 * split > degree + 1 {
        return Err(Error::SplitOutOfRange { split, degree });
    }
    Ok(())
}

/// `H = Hankel(y)` of shape `(L+1)×(M−L+1)` together with `H₁` (first `L`
/// rows) and `H₂` (last `L` rows).
#[derive(Debug, Clone)]
pub struct HankelPencil {
    h: CMatrix,
    h1: CMatrix,
    h2: CMatrix,
    split: usize,
    degree: usize,
}

impl HankelPencil {
    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    pub fn h2(&self) -> &CMatrix {
        &self.h2
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Reads the samples back off the anti-diagonals of `H`.
    pub fn samples(&self) -> Vec<Complex64> {
        let rows = self.h.nrows();
        let cols = self.h.ncols();
        (0..=self.degree)
            .map(|k| {
                if k < cols {
                    self.h[(0, k)]
                } else {
                    self.h[(k - cols + 1, cols - 1)]
                }
            })
            .take(rows + cols - 1)
            .collect()
    }
}

pub fn hankel_matrix(values: &[Complex64], split: usize) -> Result<CMatrix> {
    let degree = values.len().saturating_sub(1);
    check_split(split, degree)?;
    Ok(CMatrix::from_fn(split + 1, degree - split + 1, |k, j| values[k + j]))
}

pub fn build_pencil(y: &SampleVector, split: usize) -> Result<HankelPencil> {
    let h = hankel_matrix(y.values(), split)?;
    let h1 = h.rows(0, split).into_owned();
    let h2 = h.rows(1, split).into_owned();
    Ok(HankelPencil {
        h,
        h1,
        h2,
        split,
        degree: y.degree(),
    })
}

/// `φᴺ(ω) = [1, e^{−2πiω}, …, e^{−2πiNω}]ᵀ`.
pub fn imaging_vector(omega: f64, degree: usize) -> CVector {
    CVector::from_iterator(
        degree + 1,
        (0..=degree).map(|k| Complex64::from_polar(1.0, -2.0 * PI * reduce(omega * k as f64))),
    )
}

#[derive(Debug, Clone)]
pub struct VandermondeMatrix {
    entries: CMatrix,
    degree: usize,
    frequencies: Vec<f64>,
}

impl VandermondeMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }
}

/// `Φᴺ` with entry `(k, j) = e^{−2πi k ω_j}` for `k = 0..=N`.
pub fn vandermonde(frequencies: &[f64], degree: usize) -> VandermondeMatrix {
    let mut entries = CMatrix::zeros(degree + 1, frequencies.len());
    for (j, &w) in frequencies.iter().enumerate() {
        entries.set_column(j, &imaging_vector(w, degree));
    }
    VandermondeMatrix {
        entries,
        degree,
        frequencies: frequencies.to_vec(),
    }
}

/// Largest Frobenius residual among the three factorizations
/// `H = Φᴸ X (Φᴹ⁻ᴸ)ᵀ`, `H₁ = Φᴸ⁻¹ X (Φᴹ⁻ᴸ)ᵀ`, `H₂ = Φᴸ⁻¹ Λ X (Φᴹ⁻ᴸ)ᵀ`.
pub fn decomposition_residual(model: &SpectralModel, pencil: &HankelPencil) -> f64 {
    let l = pencil.split;
    let m = pencil.degree;
    let freqs = model.frequencies();
    let x = CMatrix::from_diagonal(&CVector::from_column_slice(model.amplitudes()));
    let lambda = CMatrix::from_diagonal(&CVector::from_iterator(
        freqs.len(),
        freqs.iter().map(|&w| Complex64::from_polar(1.0, -2.0 * PI * w)),
    ));
    let right = vandermonde(freqs, m - l).into_matrix().transpose();
    let left_full = vandermonde(freqs, l).into_matrix();
    let left = vandermonde(freqs, l - 1).into_matrix();

    let r_h = frobenius_norm(&(pencil.h() - &left_full * &x * &right));
    let r_h1 = frobenius_norm(&(pencil.h1() - &left * &x * &right));
    let r_h2 = frobenius_norm(&(pencil.h2() - &left * &lambda * &x * &right));
    r_h.max(r_h1).max(r_h2)
}

/// Writes `(row, col, re, im)` rows for inspection.
pub fn write_matrix_csv<W: Write>(matrix: &CMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "col", "re", "im"])?;
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let z = matrix[(i, j)];
            w.write_record([
                i.to_string(),
                j.to_string(),
                format!("{:e}", z.re),
                format!("{:e}", z.im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
