//! Dense complex helpers shared by the algorithms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut(a.shape(), b.shape()).copy_from(b);
    m
}

/// Matrix from a real diagonal.
pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| c(x, 0.0))))
}

pub fn diag(d: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(d))
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn unitary_residual(u: &CMat) -> f64 {
    (u.adjoint() * u - eye(u.ncols())).norm()
}

pub fn max_abs_imag(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.im.abs()))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// Scale so the first component whose magnitude is (within rounding) maximal is real positive.
pub fn fix_phase_largest(v: &mut CVec) {
    let max = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if max == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied() {
        let ph = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
}

/// Phase of the first entry with magnitude above `tol`, as a unit complex number.
pub fn first_nonzero_phase<'a>(it: impl IntoIterator<Item = &'a C64>, tol: f64) -> C64 {
    it.into_iter().find(|z| z.norm() > tol).map(|z| z / z.norm()).unwrap_or(ONE)
}

/// Hermitian eigendecomposition with ascending eigenvalues and phase-fixed eigenvectors.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let e = nalgebra::SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(h.nrows(), order.len());
    for (j, &k) in order.iter().enumerate() {
        let mut v: CVec = e.eigenvectors.column(k).into_owned();
        fix_phase_largest(&mut v);
        vecs.set_column(j, &v);
    }
    (vals, vecs)
}

/// `f` applied to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let fv: Vec<f64> = vals.into_iter().map(f).collect();
    &vecs * diag_real(&fv) * vecs.adjoint()
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular matrix".into()))
}

/// Eigenvalues from a complex Schur form.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let s = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let (_, t) = s.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Principal square root by the Denman-Beavers iteration.
fn sqrtm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = eye(n);
    for _ in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        let y1 = (&y + zi).scale(0.5);
        let z1 = (&z + yi).scale(0.5);
        let delta = (&y1 - &y).norm();
        y = y1;
        z = z1;
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::Numeric("matrix square root did not converge".into()))
}

/// Principal matrix logarithm via inverse scaling and squaring.
///
/// Fails when an eigenvalue sits on the closed negative real axis.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    for lam in eigenvalues(a)? {
        if lam.norm() == 0.0 || (lam.re < 0.0 && lam.im.abs() <= 1e-12 * lam.norm()) {
            return Err(Error::LogBranch(lam));
        }
    }
    let id = eye(n);
    let mut x = a.clone();
    let mut k = 0;
    while (&x - &id).norm() > 0.25 {
        x = sqrtm(&x)?;
        k += 1;
        if k > 64 {
            return Err(Error::Numeric("logarithm scaling did not converge".into()));
        }
    }
    // log X = 2 atanh(Y), Y = (X - 1)(X + 1)^-1
    let y = (&x - &id) * inverse(&(&x + &id))?;
    let y2 = &y * &y;
    let mut term = y.clone();
    let mut sum = y;
    for j in 1..200 {
        term = &term * &y2;
        let t = term.scale(1.0 / (2 * j + 1) as f64);
        let tn = t.norm();
        sum += t;
        if tn <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    Ok(sum.scale(2.0 * (1u64 << k) as f64))
}

pub fn expm(a: &CMat) -> CMat {
    a.exp()
}

/// Columns `idx` of `m`.
pub fn select_cols(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

pub fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_inverts_exp() {
        let a = CMat::from_fn(4, 4, |i, j| c(0.3 * (i as f64 - j as f64), 0.1 * (i * j) as f64));
        let l = logm(&expm(&a)).unwrap();
        assert!((l - a).norm() < 1e-10);
    }

    #[test]
    fn log_rejects_negative_axis() {
        let a = diag_real(&[1.0, -2.0]);
        assert!(matches!(logm(&a), Err(Error::LogBranch(_))));
    }

    #[test]
    fn hermitian_eigen_sorted() {
        let h = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (v, u) = hermitian_eigen(&h);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
        assert!(unitary_residual(&u) < 1e-12);
        let rec = &u * diag_real(&v) * u.adjoint();
        assert!((rec - h).norm() < 1e-12);
    }

    #[test]
    fn schur_eigenvalues_of_rotation() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut e = eigenvalues(&m).unwrap();
        e.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((e[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((e[1] - c(0.0, 1.0)).norm() < 1e-12);
    }
}
