//! Independent reference computations used as test oracles. Nothing here
//! calls into the library's numerical kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use ssesprit::numerics::CMatrix;

pub fn random_complex_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_complex_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
pub fn jacobi_symmetric_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Singular values from the eigenvalues of the real embedding of `B*B`,
/// descending. Each eigenvalue of the embedding appears twice.
pub fn oracle_singular_values(b: &CMatrix) -> Vec<f64> {
    let g = b.adjoint() * b;
    let n = g.nrows();
    let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = g[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = jacobi_symmetric_eigenvalues(real);
    let mut sv: Vec<f64> = eig.chunks(2).map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn lu_determinant(a: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[(i, k)].norm().total_cmp(&m[(j, k)].norm()))
            .unwrap();
        if m[(piv, k)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != k {
            m.swap_rows(piv, k);
            det = -det;
        }
        det *= m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
        }
    }
    det
}

pub fn trace(a: &CMatrix) -> Complex64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// Torus distance on `[0, 1)` written out directly.
pub fn oracle_torus(a: f64, b: f64) -> f64 {
    let d = (a.rem_euclid(1.0) - b.rem_euclid(1.0)).abs();
    if d > 0.5 {
        1.0 - d
    } else {
        d
    }
}

pub fn oracle_hausdorff(s: &[f64], t: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &a in s {
        let mut best = f64::INFINITY;
        for &b in t {
            best = best.min(oracle_torus(a, b));
        }
        worst = worst.max(best);
    }
    for &b in t {
        let mut best = f64::INFINITY;
        for &a in s {
            best = best.min(oracle_torus(a, b));
        }
        worst = worst.max(best);
    }
    worst
}

pub fn oracle_min_separation(s: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..s.len() {
        for j in 0..s.len() {
            if i != j {
                best = best.min(oracle_torus(s[i], s[j]));
            }
        }
    }
    best
}

/// `Σ_{k=0}^{N} |Σ_j z_j e^{−2πi k ω_j}|² / Σ_j |z_j|²` by direct summation.
pub fn oracle_rayleigh(freqs: &[f64], n: usize, z: &[Complex64]) -> f64 {
    let mut num = 0.0;
    for k in 0..=n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, zj) in freqs.iter().zip(z) {
            acc += zj * Complex64::from_polar(1.0, -2.0 * PI * (w * k as f64));
        }
        num += acc.norm_sqr();
    }
    num / z.iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// Matches every estimate to its nearest true frequency.
pub fn nearest_assignment(truth: &[f64], est: &[f64]) -> Vec<usize> {
    est.iter()
        .map(|&e| {
            (0..truth.len())
                .min_by(|&i, &j| oracle_torus(truth[i], e).total_cmp(&oracle_torus(truth[j], e)))
                .unwrap()
        })
        .collect()
}

pub fn relative_amplitude_error(truth: &[Complex64], est: &[Complex64], assignment: &[usize]) -> f64 {
    let mut reordered = vec![Complex64::new(0.0, 0.0); truth.len()];
    for (e, &i) in est.iter().zip(assignment) {
        reordered[i] = *e;
    }
    let num: f64 = truth.iter().zip(&reordered).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = truth.iter().map(|a| a.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Hausdorff distance between complex multisets.
pub fn oracle_complex_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let side = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    side(a, b).max(side(b, a))
}
