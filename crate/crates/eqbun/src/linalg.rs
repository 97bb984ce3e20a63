//! Dense complex linear-algebra primitives shared by every module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`; everything here
//! is small (ambient dimensions in the single digits), so plain dense
//! eigendecompositions are the right tool.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn zero_matrix(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Frobenius norm of `a - b`.
pub fn diff_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Hermitian part `(m + m*)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
///
/// The input is symmetrized first, so slightly drifted matrices are fine.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let se = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Spectral projection onto the eigenspaces of `m` with eigenvalue above
/// `level`, together with the distance of the spectrum from `level`.
pub fn spectral_projection_above(m: &CMatrix, level: f64) -> (CMatrix, f64, usize) {
    let n = m.nrows();
    let (values, vectors) = hermitian_eigen(m);
    let mut proj = CMatrix::zeros(n, n);
    let mut rank = 0;
    let mut gap = f64::INFINITY;
    for (i, &lambda) in values.iter().enumerate() {
        gap = gap.min((lambda - level).abs());
        if lambda > level {
            let v = vectors.column(i);
            proj += &v * v.adjoint();
            rank += 1;
        }
    }
    if values.is_empty() {
        gap = 0.5;
    }
    (proj, gap, rank)
}

/// Orthonormal column frame of the range of a rank-`k` Hermitian projection,
/// built by greedy Gram-Schmidt over the projected coordinate vectors.
pub fn projection_frame(p: &CMatrix, k: usize) -> Result<CMatrix> {
    let n = p.nrows();
    let mut frame = CMatrix::zeros(n, k);
    let mut have = 0;
    for i in 0..n {
        if have == k {
            break;
        }
        let mut w: CVector = p.column(i).into();
        for c in 0..have {
            let col = frame.column(c);
            let overlap: Complex64 = col.dotc(&w);
            w -= col * overlap;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            frame.set_column(have, &(w / Complex64::new(norm, 0.0)));
            have += 1;
        }
    }
    if have < k {
        return Err(Error::SingularInput {
            context: format!("projection frame found only {have} of {k} directions"),
        });
    }
    Ok(frame)
}

/// Löwdin orthonormalization `b (b* b)^{-1/2}`.
///
/// Canonical (no column-order dependence), continuous wherever `b` has full
/// column rank; errors out when the columns nearly collapse.
pub fn loewdin_orthonormalize(b: &CMatrix) -> Result<CMatrix> {
    let gram = b.adjoint() * b;
    let (values, vectors) = hermitian_eigen(&gram);
    let min = values.first().copied().unwrap_or(1.0);
    if min <= 1e-24 {
        return Err(Error::SingularInput {
            context: format!("Loewdin orthonormalization with Gram eigenvalue {min:.3e}"),
        });
    }
    let k = gram.nrows();
    let mut inv_sqrt = CMatrix::zeros(k, k);
    for i in 0..k {
        let v = vectors.column(i);
        inv_sqrt += &v * v.adjoint() * Complex64::new(1.0 / values[i].sqrt(), 0.0);
    }
    Ok(b * inv_sqrt)
}

/// Unitary polar factor `m (m* m)^{-1/2}` of an invertible square matrix.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    loewdin_orthonormalize(m)
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

pub fn min_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// `exp(i h)` for Hermitian `h`, via eigendecomposition.  Unitary.
pub fn unitary_exp_i(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let (values, vectors) = hermitian_eigen(h);
    let mut u = CMatrix::zeros(n, n);
    for i in 0..n {
        let v = vectors.column(i);
        let phase = Complex64::new(0.0, values[i]).exp();
        u += &v * v.adjoint() * phase;
    }
    u
}

/// Real part of the Euclidean pairing of two complex vectors, i.e. the inner
/// product of their realifications.
pub fn real_pairing(a: &CVector, b: &CVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_eigen_recovers_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(-1.0, 0.0), c(2.0, 0.0)]));
        let (values, vectors) = hermitian_eigen(&m);
        assert_abs_diff_eq!(values[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(values[1], 2.0, epsilon = 1e-12);
        let recon = &vectors
            * CMatrix::from_diagonal(&CVector::from_vec(vec![c(values[0], 0.0), c(values[1], 0.0)]))
            * vectors.adjoint();
        assert!(diff_norm(&recon, &m) < 1e-12);
    }

    #[test]
    fn spectral_projection_splits_spectrum() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.1, 0.0),
            c(0.9, 0.0),
            c(0.2, 0.0),
        ]));
        let (p, gap, rank) = spectral_projection_above(&m, 0.5);
        assert_eq!(rank, 1);
        assert_abs_diff_eq!(gap, 0.3, epsilon = 1e-14);
        assert!(diff_norm(&(&p * &p), &p) < 1e-13);
        assert_abs_diff_eq!(p[(1, 1)].re, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn polar_of_scaled_identity() {
        let m = identity(3) * c(2.0, 0.0);
        let u = polar_unitary(&m).unwrap();
        assert!(diff_norm(&u, &identity(3)) < 1e-12);
    }

    #[test]
    fn frame_spans_projection_range() {
        // projection onto span{e1+e2}/sqrt2 in C^3
        let mut v = CVector::zeros(3);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let p = &v * v.adjoint();
        let frame = projection_frame(&p, 1).unwrap();
        assert!(diff_norm(&(&frame * frame.adjoint()), &p) < 1e-12);
    }

    #[test]
    fn exp_i_is_unitary() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c(0.3, 0.4);
        h[(1, 0)] = c(0.3, -0.4);
        h[(0, 0)] = c(0.7, 0.0);
        let u = unitary_exp_i(&h);
        assert!(diff_norm(&(&u * u.adjoint()), &identity(2)) < 1e-13);
    }
}
