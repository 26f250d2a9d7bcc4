//! Structure-preserving factorizations and the optical-element decomposition.

mod csd;
mod mesh;
mod spectral;

pub use csd::{cos_sin, csd_sp, doubled, CsdFactors};
pub use mesh::{mesh_decompose, MeshElement, MeshProgram};
pub use spectral::{sort_eigenelements, symplectic_spectral, SpectralFactorization, UNIT_EIGEN_TOL};

use crate::error::{Error, Result};
use crate::group::{group_inverse, residual_matrix};
use crate::linalg::{diag, diag_real, first_nonzero_phase, hermitian_fn, CMat, C64};
use crate::matfn::{FrequencyGrid, MatrixFunction};

/// `M = L diag(d, 1/d) R` with unitary conjugate-symplectic `L`, `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub left: CMat,
    pub right: CMat,
    pub d: Vec<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> CMat {
        let lam: Vec<f64> = self.d.iter().copied().chain(self.d.iter().map(|x| 1.0 / x)).collect();
        &self.left * diag_real(&lam) * &self.right
    }
}

/// Bloch-Messiah form through the right polar decomposition.
pub fn svd_sp(m: &CMat) -> Result<SvdFactors> {
    let scale = m.norm().max(1.0);
    let res = residual_matrix(m)?;
    if res > 1e-8 * scale * scale {
        return Err(Error::NotInGroup { residual: res, tolerance: 1e-8 * scale * scale });
    }
    let h = hermitian_fn(&(m.adjoint() * m), |x| x.max(0.0).sqrt());
    let u = m * group_inverse(&h)?;
    let sf = symplectic_spectral(&h)?;
    let f = SvdFactors { left: u * &sf.u, right: sf.u.adjoint(), d: sf.d };
    let rec = (f.reconstruct() - m).norm();
    if rec > 1e-9 * m.norm() {
        return Err(Error::Numeric(format!("Bloch-Messiah reconstruction residual {rec:.3e}")));
    }
    Ok(f)
}

/// The seven factors at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitFactors {
    pub v1: CMat,
    pub theta1: Vec<f64>,
    pub w1: CMat,
    /// Squeezing parameters, `D = diag(e^r)`.
    pub r: Vec<f64>,
    pub w2: CMat,
    pub theta2: Vec<f64>,
    pub v2: CMat,
}

impl CircuitFactors {
    pub fn modes(&self) -> usize {
        self.r.len()
    }

    pub fn squeezer(r: &[f64]) -> CMat {
        let d: Vec<f64> = r.iter().map(|x| x.exp()).chain(r.iter().map(|x| (-x).exp())).collect();
        diag_real(&d)
    }

    pub fn matrix(&self) -> CMat {
        doubled(&self.v1)
            * cos_sin(&self.theta1)
            * doubled(&self.w1)
            * Self::squeezer(&self.r)
            * doubled(&self.w2)
            * cos_sin(&self.theta2)
            * doubled(&self.v2)
    }

    /// Factors of the conjugated matrix, used for negative frequencies.
    pub fn conjugate(&self) -> Self {
        let cj = |m: &CMat| m.map(|z| z.conj());
        Self {
            v1: cj(&self.v1),
            theta1: self.theta1.clone(),
            w1: cj(&self.w1),
            r: self.r.clone(),
            w2: cj(&self.w2),
            theta2: self.theta2.clone(),
            v2: cj(&self.v2),
        }
    }

    /// Mesh programs for V1, W1, W2, V2.
    pub fn meshes(&self) -> Result<[MeshProgram; 4]> {
        Ok([
            mesh_decompose(&self.v1)?,
            mesh_decompose(&self.w1)?,
            mesh_decompose(&self.w2)?,
            mesh_decompose(&self.v2)?,
        ])
    }
}

/// Per-frequency factors; frequencies whose decomposition failed carry the error.
#[derive(Debug)]
pub struct OpticalCircuit {
    pub grid: FrequencyGrid,
    pub n: usize,
    pub samples: Vec<Result<CircuitFactors>>,
}

impl OpticalCircuit {
    pub fn is_complete(&self) -> bool {
        self.samples.iter().all(|s| s.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &Error)> {
        self.samples.iter().enumerate().filter_map(|(k, s)| s.as_ref().err().map(|e| (k, e)))
    }
}

/// Column phases making the first nonzero entry of each column real positive.
fn column_gauge(m: &CMat) -> Vec<C64> {
    m.column_iter().map(|c| first_nonzero_phase(c.iter(), 1e-12).conj()).collect()
}

fn row_gauge(m: &CMat) -> Vec<C64> {
    m.row_iter().map(|r| first_nonzero_phase(r.iter(), 1e-12).conj()).collect()
}

/// Optical decomposition of one group element.
pub fn decompose_matrix(m: &CMat) -> Result<CircuitFactors> {
    let svd = svd_sp(m)?;
    let a = csd_sp(&svd.left)?;
    let b = csd_sp(&svd.right)?;
    let (mut v1, mut w1, mut w2, mut v2) = (a.v, a.w, b.v, b.w);
    // Diagonal phases commute with the cos-sin and squeeze factors; collect them in W2.
    let p = column_gauge(&v1);
    v1 *= diag(&p);
    w1 = diag(&p).adjoint() * w1;
    let p = column_gauge(&w1);
    w1 *= diag(&p);
    w2 = diag(&p).adjoint() * w2;
    let p = row_gauge(&v2);
    v2 = diag(&p) * v2;
    w2 *= diag(&p).adjoint();
    let f = CircuitFactors {
        v1,
        theta1: a.theta,
        w1,
        r: svd.d.iter().map(|d| d.ln()).collect(),
        w2,
        theta2: b.theta,
        v2,
    };
    let rec = (f.matrix() - m).norm();
    if rec > 1e-8 * m.norm() {
        return Err(Error::Numeric(format!("circuit reconstruction residual {rec:.3e}")));
    }
    Ok(f)
}

pub fn optical_decomposition(m: &MatrixFunction) -> Result<OpticalCircuit> {
    use rayon::prelude::*;
    let n = m.n_modes()?;
    let samples = m
        .samples()
        .par_iter()
        .zip(m.grid().as_slice().par_iter())
        .enumerate()
        .map(|(k, (s, &w))| decompose_matrix(s).map_err(|e| Error::AtFrequency { index: k, omega: w, source: Box::new(e) }))
        .collect();
    Ok(OpticalCircuit { grid: m.grid().clone(), n, samples })
}

/// Product of the seven factors at a signed grid frequency.
pub fn circuit_eval(circuit: &OpticalCircuit, omega: f64) -> Result<CMat> {
    let (k, neg) = circuit.grid.locate(omega).ok_or(Error::OffGrid(omega))?;
    let f = circuit.samples[k]
        .as_ref()
        .map_err(|e| Error::Numeric(format!("no circuit at omega = {omega}: {e}")))?;
    let mat = f.matrix();
    Ok(if neg { mat.map(|z| z.conj()) } else { mat })
}
