//! Spectral density matrices, their invariant form, and the uncertainty bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{ladder_map, residual_matrix, symplectic_form};
use crate::linalg::{c, eye, hermitian_eigen, hermitian_part, hermitian_residual, max_abs, max_abs_imag, select, CMat, CVec, I};
use crate::matfn::{collect_per_frequency, FrequencyGrid, MatrixFunction};

/// Hermitian positive semi-definite `2n x 2n` noise spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensityMatrix {
    n: usize,
    data: MatrixFunction,
}

fn min_eigenvalue(h: &CMat) -> f64 {
    hermitian_eigen(h).0[0]
}

impl SpectralDensityMatrix {
    /// Checks Hermiticity to `1e-12` and positive semi-definiteness to `-1e-10`,
    /// both relative to the sample scale.
    pub fn new(data: MatrixFunction) -> Result<Self> {
        let n = data.n_modes()?;
        collect_per_frequency(data.grid(), |k, _| {
            let s = data.sample(k);
            let scale = s.norm().max(1.0);
            let h = hermitian_residual(s);
            if h > 1e-12 * scale {
                return Err(Error::NotHermitian(h));
            }
            let e = min_eigenvalue(s);
            if e < -1e-10 * scale {
                return Err(Error::NotPositiveDefinite(e));
            }
            Ok(())
        })?;
        let data = data.map(hermitian_part)?;
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.data.grid()
    }

    pub fn data(&self) -> &MatrixFunction {
        &self.data
    }

    pub fn into_data(self) -> MatrixFunction {
        self.data
    }

    pub fn sample(&self, k: usize) -> &CMat {
        self.data.sample(k)
    }

    pub fn eval(&self, omega: f64) -> Result<CMat> {
        self.data.eval(omega)
    }

    /// Whether `S + iJ/2 >= 0` holds at every grid frequency.
    pub fn is_physical(&self, tol: f64) -> bool {
        (0..self.data.len()).all(|k| margin_matrix(self.sample(k)) >= -tol)
    }
}

/// `1/2` times the identity.
pub fn vacuum_sdm(n: usize, grid: &FrequencyGrid) -> SpectralDensityMatrix {
    let data = MatrixFunction::constant(grid, &eye(2 * n).scale(0.5)).expect("real constant");
    SpectralDensityMatrix { n, data }
}

/// `M S M†` at every frequency; `M` may be rectangular.
pub fn transform_sdm(m: &MatrixFunction, s: &SpectralDensityMatrix) -> Result<SpectralDensityMatrix> {
    m.same_grid(s.data())?;
    if m.cols() != 2 * s.n || m.rows() % 2 != 0 {
        return Err(Error::Shape(format!("cannot apply a {}x{} map to a {}-mode SDM", m.rows(), m.cols(), s.n)));
    }
    let out = m.try_map(|k, _, mk| Ok(hermitian_part(&(mk * s.sample(k) * mk.adjoint()))))?;
    SpectralDensityMatrix::new(out)
}

fn margin_matrix(s: &CMat) -> f64 {
    let n = s.nrows() / 2;
    min_eigenvalue(&(s + symplectic_form(n) * c(0.0, 0.5)))
}

/// Smallest eigenvalue of `S[w] + iJ/2`; non-negative exactly for physical spectra.
pub fn uncertainty_margin(s: &SpectralDensityMatrix, omega: f64) -> Result<f64> {
    Ok(margin_matrix(&s.eval(omega)?))
}

/// `(S_qq S_pp - |S_qp|^2, 1/4 + |Im S_qp|)` for a single mode.
pub fn single_mode_bound_check(s: &SpectralDensityMatrix, omega: f64) -> Result<(f64, f64)> {
    if s.n != 1 {
        return Err(Error::Shape(format!("single-mode bound needs n = 1, found n = {}", s.n)));
    }
    let m = s.eval(omega)?;
    let qp = m[(0, 1)];
    Ok((m[(0, 0)].re * m[(1, 1)].re - qp.norm_sqr(), 0.25 + qp.im.abs()))
}

/// Invariant form `S = M [σ iΔ; -iΔ σ] M†` at every grid frequency.
#[derive(Debug, Clone)]
pub struct WilliamsonForm {
    pub m: MatrixFunction,
    pub sigma: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    /// Eigenvalues of `iJS`: positives descending, then negatives by descending magnitude.
    pub mu: Vec<Vec<f64>>,
    /// `σ_j >= 1/2 + |Δ_j|` at each frequency.
    pub physical: Vec<bool>,
}

impl WilliamsonForm {
    pub fn grid(&self) -> &FrequencyGrid {
        self.m.grid()
    }

    /// `(σ, Δ)` at a signed grid frequency; `σ` is even and `Δ` odd in `w`.
    pub fn invariants(&self, omega: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (k, neg) = self.grid().locate(omega).ok_or(Error::OffGrid(omega))?;
        let d = if neg { self.delta[k].iter().map(|x| -x).collect() } else { self.delta[k].clone() };
        Ok((self.sigma[k].clone(), d))
    }

    /// `[σ iΔ; -iΔ σ]` at grid index `k`.
    pub fn core(&self, k: usize) -> CMat {
        core_matrix(&self.sigma[k], &self.delta[k])
    }
}

/// `[diag σ, i diag Δ; -i diag Δ, diag σ]`.
pub fn core_matrix(sigma: &[f64], delta: &[f64]) -> CMat {
    let n = sigma.len();
    let mut m = CMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        m[(j, j)] = c(sigma[j], 0.0);
        m[(n + j, n + j)] = c(sigma[j], 0.0);
        m[(j, n + j)] = c(0.0, delta[j]);
        m[(n + j, j)] = c(0.0, -delta[j]);
    }
    m
}

struct Reduction {
    m: CMat,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    mu: Vec<f64>,
}

fn reduce(s: &CMat) -> Result<Reduction> {
    let n = s.nrows() / 2;
    let scale = max_abs(s).max(1.0);
    let (ev, _) = hermitian_eigen(s);
    if ev[0] < 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(ev[0]));
    }
    let l = nalgebra::Cholesky::new(s.clone())
        .ok_or(Error::NotPositiveDefinite(ev[0]))?
        .unpack();
    let ij = symplectic_form(n) * I;
    let k = hermitian_part(&(l.adjoint() * &ij * &l));
    let (mu_all, y) = hermitian_eigen(&k);
    let npos = mu_all.iter().filter(|&&x| x > 0.0).count();
    if npos != n {
        return Err(Error::Numeric(format!("iJS has {npos} positive eigenvalues, expected {n}")));
    }
    let l_inv_adj = l
        .adjoint()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let vec_of = |idx: usize| -> Result<CVec> {
        let v = &l_inv_adj * y.column(idx);
        let norm = (v.adjoint() * &ij * &v)[(0, 0)].re;
        if norm.abs() < 1e-12 {
            return Err(Error::Numeric(format!("indefinite norm {norm:.3e} too small")));
        }
        Ok(v.unscale(norm.abs().sqrt()))
    };
    // ascending order from the eigensolver
    let pos: Vec<usize> = (0..2 * n).rev().take(n).collect();
    let neg: Vec<usize> = (0..n).collect();
    let real = max_abs_imag(s) <= 1e-14 * scale;
    let mut v = CMat::zeros(2 * n, 2 * n);
    let mut mu = vec![0.0; 2 * n];
    for j in 0..n {
        let vp = vec_of(pos[j])?;
        let vn = if real { vp.map(|z| z.conj()) } else { vec_of(neg[j])? };
        v.set_column(j, &vp);
        v.set_column(n + j, &vn);
        mu[j] = mu_all[pos[j]];
        mu[n + j] = if real { -mu_all[pos[j]] } else { mu_all[neg[j]] };
    }
    let mut metric = eye(2 * n);
    for j in n..2 * n {
        metric[(j, j)] = c(-1.0, 0.0);
    }
    let m = &ij * &v * metric * ladder_map(n).adjoint();
    let sigma: Vec<f64> = (0..n).map(|j| (mu[j] - mu[n + j]) / 2.0).collect();
    let delta: Vec<f64> = (0..n).map(|j| (mu[j] + mu[n + j]) / 2.0).collect();

    let rec = (&m * core_matrix(&sigma, &delta) * m.adjoint() - s).norm();
    if rec > 1e-8 * s.norm() {
        return Err(Error::Numeric(format!("Williamson reconstruction residual {rec:.3e}")));
    }
    let gr = residual_matrix(&m)?;
    if gr > 1e-8 * m.norm().powi(2).max(1.0) {
        return Err(Error::NotInGroup { residual: gr, tolerance: 1e-8 });
    }
    Ok(Reduction { m, sigma, delta, mu })
}

/// Generalized Williamson reduction; requires strictly positive definite samples.
pub fn williamson(s: &SpectralDensityMatrix) -> Result<WilliamsonForm> {
    williamson_regularized(s, 0.0)
}

/// As [`williamson`] after adding `epsilon` times the identity.
pub fn williamson_regularized(s: &SpectralDensityMatrix, epsilon: f64) -> Result<WilliamsonForm> {
    let dim = 2 * s.n;
    let parts = collect_per_frequency(s.grid(), |k, _| {
        let sk = s.sample(k) + eye(dim).scale(epsilon);
        reduce(&sk)
    })?;
    let mut sigma = Vec::with_capacity(parts.len());
    let mut delta = Vec::with_capacity(parts.len());
    let mut mu = Vec::with_capacity(parts.len());
    let mut physical = Vec::with_capacity(parts.len());
    let mut ms = Vec::with_capacity(parts.len());
    for p in parts {
        physical.push(p.sigma.iter().zip(&p.delta).all(|(s, d)| *s >= 0.5 + d.abs() - 1e-9));
        sigma.push(p.sigma);
        delta.push(p.delta);
        mu.push(p.mu);
        ms.push(p.m);
    }
    Ok(WilliamsonForm { m: MatrixFunction::new(s.grid().clone(), ms)?, sigma, delta, mu, physical })
}

/// Per-mode occupations `(n[+w], n[-w]) = (σ + Δ - 1/2, σ - Δ - 1/2)`.
pub fn occupations(form: &WilliamsonForm, omega: f64) -> Result<Vec<(f64, f64)>> {
    let (s, d) = form.invariants(omega)?;
    Ok(s.iter().zip(&d).map(|(s, d)| (s + d - 0.5, s - d - 0.5)).collect())
}

/// Ladder-basis spectra `Pᵀ S P*`.
pub fn sdm_to_ladder(s: &SpectralDensityMatrix, omega: f64) -> Result<CMat> {
    let p = ladder_map(s.n);
    Ok(p.transpose() * s.eval(omega)? * p.map(|z| z.conj()))
}

/// Inverse of [`sdm_to_ladder`]: `P* Sa Pᵀ`.
pub fn sdm_from_ladder(sa: &CMat) -> CMat {
    let p = ladder_map(sa.nrows() / 2);
    p.map(|z| z.conj()) * sa * p.transpose()
}

/// Occupations read off the ladder diagonal: `(n[+w], n[-w])` per mode.
pub fn ladder_occupations(sa: &CMat) -> Vec<(f64, f64)> {
    let n = sa.nrows() / 2;
    (0..n).map(|j| (sa[(n + j, n + j)].re - 0.5, sa[(j, j)].re - 0.5)).collect()
}

/// Both sides of the open-system bound for one output mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenSystemBound {
    /// `sqrt(S_qq S_pp)` of the output.
    pub lhs: f64,
    pub rhs: f64,
    /// The looser bound keeping only the noise term.
    pub rhs_noise_only: f64,
}

/// 2x2 block `[A_{q_j q_k}, A_{q_j p_k}; A_{p_j q_k}, A_{p_j p_k}]`.
pub fn mode_block(a: &CMat, j: usize, k: usize) -> CMat {
    let (m, n) = (a.nrows() / 2, a.ncols() / 2);
    select(a, &[j, m + j], &[k, n + k])
}

fn det2(a: &CMat) -> crate::linalg::C64 {
    a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]
}

/// Open-system bound per output mode at a signed grid frequency.
///
/// The noise modes must be uncorrelated with each other and with the inputs;
/// that contract is not checked. Missing input or noise spectra default to vacuum.
pub fn open_system_bound(
    g: &MatrixFunction,
    n: &MatrixFunction,
    s_in: Option<&SpectralDensityMatrix>,
    s_noise: Option<&SpectralDensityMatrix>,
    omega: f64,
) -> Result<Vec<OpenSystemBound>> {
    if g.rows() != n.rows() || g.rows() % 2 != 0 || g.cols() % 2 != 0 || n.cols() % 2 != 0 {
        return Err(Error::Shape("G and N must be 2m x 2n and 2m x 2l".into()));
    }
    let (m, ni, nl) = (g.rows() / 2, g.cols() / 2, n.cols() / 2);
    let gk = g.eval(omega)?;
    let nk = n.eval(omega)?;
    let si = match s_in {
        Some(s) if s.n != ni => return Err(Error::Shape("input SDM does not match G".into())),
        Some(s) => s.eval(omega)?,
        None => eye(2 * ni).scale(0.5),
    };
    let sn = match s_noise {
        Some(s) if s.n != nl => return Err(Error::Shape("noise SDM does not match N".into())),
        Some(s) => s.eval(omega)?,
        None => eye(2 * nl).scale(0.5),
    };
    let sg = &gk * &si * gk.adjoint();
    let sout = &sg + &nk * &sn * nk.adjoint();
    Ok((0..m)
        .map(|i| {
            let lhs = (sout[(i, i)].re * sout[(m + i, m + i)].re).max(0.0).sqrt();
            let signal = if ni == 0 { 0.0 } else { det2(&mode_block(&sg, i, i)).re.max(0.0).sqrt() };
            let noise = 0.5 * (0..nl).map(|j| det2(&mode_block(&nk, i, j)).norm()).sum::<f64>();
            OpenSystemBound { lhs, rhs: signal + noise, rhs_noise_only: noise }
        })
        .collect())
}
