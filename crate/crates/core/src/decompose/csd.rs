//! Cosine-sine decomposition of unitary conjugate-symplectic matrices.

use crate::error::{Error, Result};
use crate::group::ladder_map;
use crate::linalg::{block_diag, c, diag, unitary_residual, CMat, C64};

/// `Q = diag(V, V) [C -S; S C] diag(W, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsdFactors {
    pub v: CMat,
    pub w: CMat,
    /// Angles in `(-π/2, π/2]`.
    pub theta: Vec<f64>,
}

/// `[C -S; S C]` for the given angles.
pub fn cos_sin(theta: &[f64]) -> CMat {
    let n = theta.len();
    let mut m = CMat::zeros(2 * n, 2 * n);
    for (k, t) in theta.iter().enumerate() {
        m[(k, k)] = c(t.cos(), 0.0);
        m[(n + k, n + k)] = c(t.cos(), 0.0);
        m[(k, n + k)] = c(-t.sin(), 0.0);
        m[(n + k, k)] = c(t.sin(), 0.0);
    }
    m
}

/// `diag(V, V)`.
pub fn doubled(v: &CMat) -> CMat {
    block_diag(v, v)
}

impl CsdFactors {
    pub fn reconstruct(&self) -> CMat {
        doubled(&self.v) * cos_sin(&self.theta) * doubled(&self.w)
    }
}

fn unit_phase(z: C64) -> C64 {
    if z.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        z / z.norm()
    }
}

pub fn csd_sp(q: &CMat) -> Result<CsdFactors> {
    let n = q.nrows() / 2;
    if q.shape() != (2 * n, 2 * n) || n == 0 {
        return Err(Error::Shape(format!("expected a 2n x 2n matrix, found {:?}", q.shape())));
    }
    let ur = unitary_residual(q);
    if ur > 1e-8 {
        return Err(Error::NotUnitary(ur));
    }
    let p = ladder_map(n);
    let up = p.adjoint() * q * &p;
    let off = up.view((0, n), (n, n)).norm().max(up.view((n, 0), (n, n)).norm());
    if off > 1e-8 {
        return Err(Error::NotInGroup { residual: off, tolerance: 1e-8 });
    }
    let q1 = up.view((0, 0), (n, n)).into_owned();
    let q2 = up.view((n, n), (n, n)).into_owned();
    let schur = nalgebra::Schur::try_new(q2.adjoint() * &q1, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let (z, t) = schur.unpack();
    let e2: Vec<C64> = t.diagonal().iter().map(|&x| unit_phase(x)).collect();
    let theta: Vec<f64> = e2.iter().map(|z| z.arg() / 2.0).collect();
    let wd = z;
    let em: Vec<C64> = theta.iter().map(|t| c(0.0, -t).exp()).collect();
    let v = &q1 * &wd * diag(&em);
    let f = CsdFactors { v, w: wd.adjoint(), theta };
    let rec = (f.reconstruct() - q).norm();
    if rec > 1e-9 {
        return Err(Error::Numeric(format!("CSD reconstruction residual {rec:.3e}")));
    }
    Ok(f)
}
