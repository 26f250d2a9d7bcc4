//! Eigen-ordering and the structured spectral decomposition of positive group elements.

use crate::error::{Error, Result};
use crate::group::{ladder_map, residual_matrix, symplectic_form};
use crate::linalg::{diag_real, hermitian_eigen, hermitian_residual, select_cols, unitary_residual, CMat, I};

/// Threshold for treating an eigenvalue as exactly 1.
pub const UNIT_EIGEN_TOL: f64 = 1e-8;

/// `H = U diag(d, 1/d) U†` with `U` unitary and conjugate symplectic.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactorization {
    pub u: CMat,
    /// Ascending, all `>= 1`.
    pub d: Vec<f64>,
}

impl SpectralFactorization {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.d.iter().copied().chain(self.d.iter().map(|x| 1.0 / x)).collect()
    }

    pub fn reconstruct(&self) -> CMat {
        &self.u * diag_real(&self.eigenvalues()) * self.u.adjoint()
    }
}

fn check_hpd_member(h: &CMat) -> Result<usize> {
    let (r, c) = h.shape();
    if r != c || r % 2 != 0 || r == 0 {
        return Err(Error::Shape(format!("expected a 2n x 2n matrix, found {r}x{c}")));
    }
    let scale = h.norm().max(1.0);
    let herm = hermitian_residual(h);
    if herm > 1e-10 * scale {
        return Err(Error::NotHermitian(herm));
    }
    let res = residual_matrix(h)?;
    let tol = 1e-8 * scale * scale;
    if res > tol {
        return Err(Error::NotInGroup { residual: res, tolerance: tol });
    }
    Ok(r / 2)
}

/// Eigenpairs ordered as `(l_1..l_n, 1/l_1..1/l_n)` with `1 <= l_1 <= .. <= l_n`.
pub fn sort_eigenelements(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = check_hpd_member(h)?;
    let (vals, vecs) = hermitian_eigen(h);
    if vals[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite(vals[0]));
    }
    // vals ascending; take the upper half ascending then the lower half descending
    let order: Vec<usize> = (n..2 * n).chain((0..n).rev()).collect();
    Ok((order.iter().map(|&k| vals[k]).collect(), select_cols(&vecs, &order)))
}

/// Structured spectral decomposition of a Hermitian positive definite group element.
pub fn symplectic_spectral(h: &CMat) -> Result<SpectralFactorization> {
    let (lam, v) = sort_eigenelements(h)?;
    let n = lam.len() / 2;
    let j = symplectic_form(n);
    let mut u = CMat::zeros(2 * n, 2 * n);
    let mut unit = Vec::new();
    for k in 0..n {
        if (lam[k] - 1.0).abs() <= UNIT_EIGEN_TOL {
            unit.push(k);
        } else {
            let col = v.column(k).into_owned();
            u.set_column(k, &col);
            u.set_column(n + k, &(-(&j * &col)));
        }
    }
    let m = unit.len();
    if m > 0 {
        // Orthonormal basis of the unit eigenspace, re-split by the sign of iJ.
        let idx: Vec<usize> = unit.iter().copied().chain(unit.iter().map(|k| n + k)).collect();
        let vt = select_cols(&v, &idx);
        let jp = vt.adjoint() * &j * &vt * I;
        let (mu, mut y) = hermitian_eigen(&jp);
        let order: Vec<usize> = (0..2 * m).rev().collect();
        y = select_cols(&y, &order);
        let npos = mu.iter().filter(|&&x| x > 0.0).count();
        if npos != m {
            return Err(Error::Numeric(format!("unit eigenspace has iJ signature ({npos}, {})", 2 * m - npos)));
        }
        let x = &vt * y * ladder_map(m).adjoint();
        for (i, &k) in unit.iter().enumerate() {
            u.set_column(k, &x.column(i));
            u.set_column(n + k, &x.column(m + i));
        }
    }
    let d: Vec<f64> = lam[..n].iter().map(|&l| if (l - 1.0).abs() <= UNIT_EIGEN_TOL { 1.0 } else { l }).collect();
    let f = SpectralFactorization { u, d };
    let scale = h.norm();
    let rec = (f.reconstruct() - h).norm();
    let ur = unitary_residual(&f.u);
    let sr = residual_matrix(&f.u)?;
    if rec > 1e-9 * scale || ur > 1e-9 || sr > 1e-9 {
        return Err(Error::Numeric(format!(
            "spectral factorization residuals: reconstruction {rec:.3e}, unitary {ur:.3e}, symplectic {sr:.3e}"
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::random_group_element;
    use crate::linalg::eye;
    use crate::matfn::FrequencyGrid;

    #[test]
    fn identity_and_squeezer() {
        let f = symplectic_spectral(&eye(4)).unwrap();
        assert_eq!(f.d, vec![1.0, 1.0]);
        assert!((f.reconstruct() - eye(4)).norm() < 1e-14);
        let (l, v) = sort_eigenelements(&diag_real(&[4.0, 0.25])).unwrap();
        assert!((l[0] - 4.0).abs() < 1e-14 && (l[1] - 0.25).abs() < 1e-14);
        assert!((v[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let r: f64 = 0.6;
        let f = symplectic_spectral(&diag_real(&[(2.0 * r).exp(), (-2.0 * r).exp()])).unwrap();
        assert!((f.d[0] - (2.0 * r).exp()).abs() < 1e-12);
        assert!((f.u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_pairs_for_random() {
        let g = FrequencyGrid::new(vec![0.0, 1.3]).unwrap();
        let a = random_group_element(&g, 4, 21, 1.5).unwrap();
        for s in a.samples() {
            let h = s * s.adjoint();
            let (l, _) = sort_eigenelements(&h).unwrap();
            for k in 0..4 {
                assert!((l[k] * l[4 + k] - 1.0).abs() < 1e-10);
            }
            let f = symplectic_spectral(&h).unwrap();
            assert!(f.d.windows(2).all(|w| w[0] <= w[1]) && f.d[0] >= 1.0);
        }
    }

    #[test]
    fn unit_eigenspace_branch() {
        // One squeezed mode, one untouched mode with a random unitary-symplectic mixing.
        let g = FrequencyGrid::single(0.4).unwrap();
        let q = random_group_element(&g, 2, 3, 1.0).unwrap();
        let mut h0 = eye(4);
        h0[(1, 1)] = crate::linalg::c(3.0, 0.0);
        h0[(3, 3)] = crate::linalg::c(1.0 / 3.0, 0.0);
        // polar unitary of the random element keeps the structure
        let m = q.sample(0);
        let mm = m.adjoint() * m;
        let hh = crate::linalg::hermitian_fn(&mm, f64::sqrt);
        let u = m * crate::group::group_inverse(&hh).unwrap();
        let h = &u * h0 * u.adjoint();
        let f = symplectic_spectral(&h).unwrap();
        assert!((f.d[0] - 1.0).abs() < 1e-9 && (f.d[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(symplectic_spectral(&(-eye(2))).is_err());
        assert!(symplectic_spectral(&diag_real(&[2.0, 2.0])).is_err());
    }
}
