//! Dense complex linear algebra used by the estimators and the bound checks.
//!
//! The SVD is delegated to nalgebra's Golub–Kahan implementation and every
//! result is verified; nalgebra occasionally returns a wrong factorization
//! for rank-deficient complex input, in which case a one-sided Jacobi SVD is
//! used instead. The nonsymmetric eigensolver (Hessenberg reduction followed
//! by shifted QR) is implemented here since only eigenvalues are ever
//! consumed.

use nalgebra::linalg::{Hessenberg, SVD};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Thin singular value decomposition `A = U diag(σ) V*` with σ sorted
/// nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl SvdResult {
    pub fn rank_tolerance(&self, relative: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > relative * top).count()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.v.adjoint()
    }
}

fn iteration_cap(rows: usize, cols: usize) -> usize {
    100 * rows.max(cols).max(1)
}

pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("svd of an empty matrix".into()));
    }
    let cap = iteration_cap(rows, cols);
    if let Some(dec) = SVD::try_new(a.clone(), true, true, f64::EPSILON, cap) {
        let result = sorted_svd(dec);
        if is_valid_svd(&result, a) {
            return Ok(result);
        }
    }
    jacobi_svd(a)
}

fn sorted_svd(dec: SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> SvdResult {
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V*");
    let sigma = dec.singular_values;
    let (rows, cols) = (u.nrows(), v_t.ncols());

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let k = order.len();
    let mut u_sorted = CMatrix::zeros(rows, k);
    let mut v_sorted = CMatrix::zeros(cols, k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v_t.row(src).adjoint());
        values.push(sigma[src].max(0.0));
    }
    SvdResult {
        u: u_sorted,
        singular_values: values,
        v: v_sorted,
    }
}

fn verification_tolerance(rows: usize, cols: usize) -> f64 {
    100.0 * f64::EPSILON * rows.max(cols) as f64
}

/// Residual and orthonormality check. Together they bound the error of every
/// singular value by the tolerance times `‖A‖`.
fn is_valid_svd(dec: &SvdResult, a: &CMatrix) -> bool {
    let tol = verification_tolerance(a.nrows(), a.ncols());
    let k = dec.singular_values.len();
    let eye = CMatrix::identity(k, k);
    let scale = (k as f64).sqrt();
    let residual = frobenius_norm(&(dec.reconstruct() - a));
    let ortho_u = frobenius_norm(&(dec.u.adjoint() * &dec.u - &eye));
    let ortho_v = frobenius_norm(&(dec.v.adjoint() * &dec.v - &eye));
    residual <= tol * frobenius_norm(a) && ortho_u <= tol * scale && ortho_v <= tol * scale
}

const JACOBI_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD. Slower than Golub–Kahan but accurate on
/// rank-deficient input.
fn jacobi_svd(a: &CMatrix) -> Result<SvdResult> {
    let (rows, cols) = a.shape();
    if rows < cols {
        let t = jacobi_svd(&a.adjoint())?;
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let mut w = a.clone();
    let mut v = CMatrix::identity(cols, cols);
    let tol = f64::EPSILON * (rows as f64).sqrt();
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotating column q by the phase of γ makes the pair real
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, phase, c, s);
                rotate_columns(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(JACOBI_SWEEPS));
    }

    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut values = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        values.push(sigma);
        v_sorted.set_column(dst, &v.column(src));
        if sigma > 0.0 {
            u.set_column(dst, &(w.column(src) / Complex64::new(sigma, 0.0)));
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Ok(SvdResult {
        u,
        singular_values: values,
        v: v_sorted,
    })
}

fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, phase: Complex64, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)] * phase;
        m[(i, p)] = x * c - y * s;
        m[(i, q)] = x * s + y * c;
    }
}

/// Fills the listed columns with unit vectors orthogonal to all others.
fn complete_orthonormal(u: &mut CMatrix, missing: &[usize]) {
    let rows = u.nrows();
    let mut candidate = 0;
    for &col in missing {
        while candidate < rows {
            let mut e = CVector::zeros(rows);
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // two Gram-Schmidt passes; unfilled columns are zero and drop out
            for _ in 0..2 {
                for j in (0..u.ncols()).filter(|&j| j != col) {
                    let proj = u.column(j).dotc(&e);
                    e -= u.column(j) * proj;
                }
            }
            let norm = e.norm();
            if norm > 0.5 {
                u.set_column(col, &(e / Complex64::new(norm, 0.0)));
                break;
            }
        }
    }
}

/// Singular values only, nonincreasing. Large matrices take nalgebra's
/// values-only path, checked against `Σσ² = ‖A‖_F²`; everything else goes
/// through the verified [`svd`].
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    if rows * cols > VALUES_ONLY_THRESHOLD {
        let cap = iteration_cap(rows, cols);
        if let Some(dec) = SVD::try_new(a.clone(), false, false, f64::EPSILON, cap) {
            let mut values: Vec<f64> = dec.singular_values.iter().map(|s| s.max(0.0)).collect();
            values.sort_by(|a, b| b.total_cmp(a));
            let energy: f64 = values.iter().map(|s| s * s).sum();
            let fro2 = frobenius_norm(a).powi(2);
            if (energy - fro2).abs() <= verification_tolerance(rows, cols) * fro2 {
                return Ok(values);
            }
        }
    }
    Ok(svd(a)?.singular_values)
}

/// Above this many entries [`singular_values`] skips singular vectors.
const VALUES_ONLY_THRESHOLD: usize = 256 * 256;

pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Pseudo-inverse built from the leading `rank` singular triplets,
/// `V_r Σ_r⁻¹ U_r*`.
pub fn truncated_pinv(a: &CMatrix, rank: usize) -> Result<CMatrix> {
    let dec = svd(a)?;
    truncated_pinv_from_svd(&dec, rank)
}

pub fn truncated_pinv_from_svd(dec: &SvdResult, rank: usize) -> Result<CMatrix> {
    let available = dec.singular_values.len();
    if rank == 0 || rank > available {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {rank} must lie in 1..={available}"
        )));
    }
    let top = dec.singular_values[0];
    let sigma_r = dec.singular_values[rank - 1];
    if sigma_r == 0.0 || sigma_r < 1e-14 * top {
        return Err(Error::RankDeficient {
            rank,
            sigma: sigma_r,
            sigma_max: top,
        });
    }
    let mut v_scaled = dec.v.columns(0, rank).into_owned();
    for j in 0..rank {
        v_scaled.column_mut(j).scale_mut(1.0 / dec.singular_values[j]);
    }
    Ok(v_scaled * dec.u.columns(0, rank).adjoint())
}

/// Minimum-norm solution of `min ‖Ax − b‖₂`, requiring full column rank.
pub fn least_squares(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let (rows, cols) = a.shape();
    if b.len() != rows {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has length {} but the matrix has {rows} rows",
            b.len()
        )));
    }
    let dec = svd(a)?;
    let top = dec.singular_values[0];
    let smallest = if rows >= cols {
        dec.singular_values[cols - 1]
    } else {
        0.0
    };
    if !(smallest > 1e-12 * top) {
        return Err(Error::RankDeficient {
            rank: cols,
            sigma: smallest,
            sigma_max: top,
        });
    }
    let mut coeffs = dec.u.adjoint() * b;
    for (c, &s) in coeffs.iter_mut().zip(&dec.singular_values) {
        *c /= s;
    }
    Ok(&dec.v * coeffs)
}

/// All eigenvalues of a square complex matrix, with multiplicity and in no
/// particular order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a[(0, 0)]]),
        _ => {}
    }
    let mut h = Hessenberg::new(a.clone()).h();
    shifted_qr(&mut h)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let r1 = mean + disc;
    let r2 = mean - disc;
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Givens rotation `[c s; -s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    if b.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = an.hypot(b.norm());
    (an / r, (a / an) * b.conj() / r)
}

fn shifted_qr(h: &mut CMatrix) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let cap = 100 * n;
    let scale = frobenius_norm(h);
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let mut rotations: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;

    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let mut tst = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if tst == 0.0 {
                tst = scale;
            }
            let sub = h[(lo, lo - 1)].norm();
            if sub <= f64::EPSILON * tst || sub <= f64::EPSILON * f64::EPSILON * scale {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > cap {
            return Err(Error::EigenNoConvergence(cap));
        }

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.5 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        rotations.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_singular_values() {
        let dec = svd(&CMatrix::identity(3, 3)).unwrap();
        for s in dec.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let u = CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        let v = CVector::from_vec(vec![c(0.0, 3.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let a = &u * v.adjoint();
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 6.0).abs() < 1e-13);
        assert!(sv[1].abs() < 1e-13);
    }

    #[test]
    fn empty_svd_is_an_error() {
        assert!(svd(&CMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn pinv_of_rank_deficient_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]));
        let p = truncated_pinv(&a, 1).unwrap();
        assert!((p[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(p[(1, 1)].norm() < 1e-15);
        assert!(matches!(truncated_pinv(&a, 2), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn diagonal_and_nilpotent_eigenvalues() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.0), c(0.5, -0.5)]));
        let mut eig = eigenvalues(&d).unwrap();
        eig.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(eig, vec![c(-3.0, 0.0), c(0.5, -0.5), c(1.0, 2.0)]);

        let nil = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(eigenvalues(&nil).unwrap(), vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn rotation_matrix_eigenvalues() {
        // [[0,-1],[1,0]] has eigenvalues ±i
        let r = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut eig = eigenvalues(&r).unwrap();
        eig.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((eig[0] - c(0.0, -1.0)).norm() < 1e-13);
        assert!((eig[1] - c(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn non_square_eigenvalues_rejected() {
        assert!(eigenvalues(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_matrix_norm() {
        assert_eq!(spectral_norm(&CMatrix::zeros(4, 2)).unwrap(), 0.0);
    }

    #[test]
    fn least_squares_rejects_rank_deficiency() {
        let a = CMatrix::from_element(3, 2, c(1.0, 0.0));
        let b = CVector::from_element(3, c(1.0, 0.0));
        assert!(matches!(least_squares(&a, &b), Err(Error::RankDeficient { .. })));
    }

    fn low_rank(seed: u64, rows: usize, cols: usize, rank: usize) -> CMatrix {
        use rand::Rng;
        let mut r = crate::rng::rng(seed);
        let mut entry = || c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
        let b = CMatrix::from_fn(rows, rank, |_, _| entry());
        let d = CMatrix::from_fn(rank, cols, |_, _| entry());
        b * d
    }

    fn assert_valid(dec: &SvdResult, a: &CMatrix) {
        assert!(is_valid_svd(dec, a));
        assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_handles_rank_deficiency_and_zero() {
        for (rows, cols) in [(5, 3), (3, 5), (6, 6)] {
            let a = low_rank(1, rows, cols, 2);
            let dec = jacobi_svd(&a).unwrap();
            assert_valid(&dec, &a);
            assert!(dec.singular_values[2] < 1e-14);
        }
        let z = CMatrix::zeros(4, 3);
        let dec = jacobi_svd(&z).unwrap();
        assert_valid(&dec, &z);
        assert!(dec.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn verified_svd_on_low_rank_products() {
        // includes products where the Golub-Kahan path alone is wrong
        for seed in 0..2000 {
            let rows = 1 + (seed as usize * 7) % 7;
            let cols = 1 + (seed as usize * 11) % 7;
            let a = low_rank(seed, rows, cols, 1 + seed as usize % 3);
            assert_valid(&svd(&a).unwrap(), &a);
        }
    }
}
