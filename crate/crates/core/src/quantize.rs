//! Minimal added noise for a classical transfer matrix and its closed-system dilation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{indefinite_metric, ladder_map, residual_matrix, symplectic_form};
use crate::linalg::{c, hermitian_eigen, hermitian_part, max_abs, max_abs_imag, select, CMat, CVec, I, ONE, ZERO};
use crate::matfn::{collect_per_frequency, FrequencyGrid, MatrixFunction};

/// Default relative threshold separating the null space of the deficit.
pub const RANK_TOL: f64 = 1e-10;

fn io_modes(g: &CMat) -> Result<(usize, usize)> {
    let (r, cl) = g.shape();
    if r % 2 != 0 || cl % 2 != 0 || r == 0 {
        return Err(Error::Shape(format!("transfer matrix must be 2m x 2n, found {r}x{cl}")));
    }
    Ok((r / 2, cl / 2))
}

/// `iJ_out - G iJ_in G†` for one sample.
pub fn ccr_deficit_matrix(g: &CMat) -> Result<CMat> {
    let (m, n) = io_modes(g)?;
    let ij_out = symplectic_form(m) * I;
    let ij_in = symplectic_form(n) * I;
    Ok(hermitian_part(&(ij_out - g * ij_in * g.adjoint())))
}

/// CCR deficit of `G` at a signed grid frequency.
pub fn ccr_deficit(g: &MatrixFunction, omega: f64) -> Result<CMat> {
    ccr_deficit_matrix(&g.eval(omega)?)
}

/// Per-frequency summary of the minimal noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModeInfo {
    pub ell: usize,
    pub d_plus: usize,
    pub d_minus: usize,
    /// Nonzero singular values of `N`, the `D+` values first.
    pub gamma: Vec<f64>,
}

/// An eigenvalue close enough to the rank threshold that the split is ambiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankWarning {
    pub index: usize,
    pub omega: f64,
    pub eigenvalue: f64,
    pub threshold: f64,
}

/// `(G, N)` with `N` carrying the fewest noise modes allowed by the commutators.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub g: MatrixFunction,
    /// `2m x 2 ell_max`; columns beyond a frequency's own `ell` are zero.
    pub n: MatrixFunction,
    pub per_freq: Vec<NoiseModeInfo>,
    /// Unitary diagonalizer of the deficit, columns ordered `D+`, `D-`, null.
    pub diagonalizer: Vec<CMat>,
    pub warnings: Vec<RankWarning>,
}

struct Split {
    u: CMat,
    plus: Vec<f64>,
    minus: Vec<f64>,
    warnings: Vec<(f64, f64)>,
}

fn split_deficit(d: &CMat, rank_tol: f64) -> Split {
    let (vals, vecs) = hermitian_eigen(d);
    let maxabs = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let thr = rank_tol * maxabs.max(1.0);
    let warnings = vals
        .iter()
        .filter(|v| v.abs() > thr / 10.0 && v.abs() < thr * 10.0)
        .map(|&v| (v, thr))
        .collect();
    let pos: Vec<usize> = (0..vals.len()).rev().filter(|&k| vals[k] > thr).collect();
    let neg: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] < -thr).collect();
    let null: Vec<usize> = (0..vals.len()).filter(|&k| vals[k].abs() <= thr).collect();

    let dim = d.nrows();
    let mut u = CMat::zeros(dim, dim);
    let mut col = 0;
    for &k in pos.iter().chain(&neg).chain(&null) {
        u.set_column(col, &vecs.column(k));
        col += 1;
    }
    // A purely imaginary deficit (real G) has eigenvectors in conjugate pairs.
    let re_part = d.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
    if pos.len() == neg.len() && re_part <= 1e-14 * max_abs(d).max(1.0) {
        for j in 0..pos.len() {
            let conj: CVec = u.column(j).map(|z| z.conj());
            u.set_column(pos.len() + j, &conj);
        }
    }
    Split {
        u,
        plus: pos.iter().map(|&k| vals[k]).collect(),
        minus: neg.iter().map(|&k| vals[k]).collect(),
        warnings,
    }
}

/// Noise matrix `U Γ P_N†` padded to `ell_max` noise modes.
fn noise_matrix(s: &Split, ell_max: usize) -> CMat {
    let dim = s.u.nrows();
    let mut gamma = CMat::zeros(dim, 2 * ell_max);
    for (i, v) in s.plus.iter().enumerate() {
        gamma[(i, i)] = c(v.sqrt(), 0.0);
    }
    for (j, v) in s.minus.iter().enumerate() {
        gamma[(s.plus.len() + j, ell_max + j)] = c(v.abs().sqrt(), 0.0);
    }
    &s.u * gamma * ladder_map(ell_max).adjoint()
}

/// Minimal noise modes for `G`, with the default rank tolerance.
pub fn minimal_noise(g: &MatrixFunction) -> Result<NoiseModel> {
    minimal_noise_with(g, RANK_TOL)
}

pub fn minimal_noise_with(g: &MatrixFunction, rank_tol: f64) -> Result<NoiseModel> {
    let (m, _) = io_modes(g.sample(0))?;
    let splits = collect_per_frequency(g.grid(), |k, _| Ok(split_deficit(&ccr_deficit_matrix(g.sample(k))?, rank_tol)))?;
    let ell_max = splits.iter().map(|s| s.plus.len().max(s.minus.len())).max().unwrap_or(0);

    let mut warnings = Vec::new();
    for (k, (s, w)) in splits.iter().zip(g.grid().iter()).enumerate() {
        for &(eigenvalue, threshold) in &s.warnings {
            log::warn!("deficit eigenvalue {eigenvalue:.3e} at omega = {w} (index {k}) is within a factor 10 of the rank threshold {threshold:.3e}");
            warnings.push(RankWarning { index: k, omega: w, eigenvalue, threshold });
        }
    }

    let samples = collect_per_frequency(g.grid(), |k, _| {
        let nk = noise_matrix(&splits[k], ell_max);
        let d = ccr_deficit_matrix(g.sample(k))?;
        let jn = symplectic_form(ell_max) * I;
        let r = (&nk * jn * nk.adjoint() - &d).norm();
        if r > 1e-9 * d.norm().max(1.0) {
            return Err(Error::Numeric(format!("noise reconstruction residual {r:.3e}")));
        }
        Ok(nk)
    })?;
    let n = if ell_max == 0 {
        MatrixFunction::new(g.grid().clone(), vec![CMat::zeros(2 * m, 0); g.len()])?
    } else {
        MatrixFunction::new(g.grid().clone(), samples)?
    };
    let per_freq = splits
        .iter()
        .map(|s| NoiseModeInfo {
            ell: s.plus.len().max(s.minus.len()),
            d_plus: s.plus.len(),
            d_minus: s.minus.len(),
            gamma: s.plus.iter().chain(&s.minus).map(|v| v.abs().sqrt()).collect(),
        })
        .collect();
    let diagonalizer = splits.into_iter().map(|s| s.u).collect();
    Ok(NoiseModel { g: g.clone(), n, per_freq, diagonalizer, warnings })
}

impl NoiseModel {
    /// Rebuilds a model from stored blocks, checking the CCR constraint at every
    /// frequency. The diagonalizer is not stored and is left empty.
    pub fn from_parts(g: MatrixFunction, n: MatrixFunction, per_freq: Vec<NoiseModeInfo>) -> Result<Self> {
        g.same_grid(&n)?;
        if n.rows() != g.rows() || n.cols() % 2 != 0 || per_freq.len() != g.len() {
            return Err(Error::Shape(format!(
                "noise block {:?} with {} records does not fit G {:?} on {} frequencies",
                n.shape(),
                per_freq.len(),
                g.shape(),
                g.len()
            )));
        }
        let model = Self { g, n, per_freq, diagonalizer: Vec::new(), warnings: Vec::new() };
        collect_per_frequency(model.grid(), |k, _| {
            let r = model.constraint_residual(k)?;
            let scale = ccr_deficit_matrix(model.g.sample(k))?.norm().max(1.0);
            if r > 1e-9 * scale {
                return Err(Error::Numeric(format!("CCR constraint residual {r:.3e}")));
            }
            Ok(())
        })?;
        Ok(model)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.g.grid()
    }

    pub fn ell_max(&self) -> usize {
        self.n.cols() / 2
    }

    pub fn outputs(&self) -> usize {
        self.g.rows() / 2
    }

    pub fn inputs(&self) -> usize {
        self.g.cols() / 2
    }

    /// `‖N iJ_N N† - (iJ_out - G iJ_in G†)‖_F` at grid index `k`.
    pub fn constraint_residual(&self, k: usize) -> Result<f64> {
        let nk = self.n.sample(k);
        let jn = symplectic_form(self.ell_max()) * I;
        Ok((nk * jn * nk.adjoint() - ccr_deficit_matrix(self.g.sample(k))?).norm())
    }
}

/// Positions of inputs, noises, outputs and ancillas inside the square extension.
///
/// Modes are ordered inputs then noises on the column side and accessible
/// outputs then ancillas on the row side, each in qq..pp layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilationLayout {
    pub inputs: usize,
    pub noises: usize,
    pub outputs: usize,
}

impl DilationLayout {
    /// Total mode count `n + ell`.
    pub fn modes(&self) -> usize {
        self.inputs + self.noises
    }

    pub fn ancillas(&self) -> usize {
        self.modes() - self.outputs
    }

    fn quads(&self, from: usize, to: usize) -> Vec<usize> {
        let k = self.modes();
        (from..to).chain(k + from..k + to).collect()
    }

    pub fn output_rows(&self) -> Vec<usize> {
        self.quads(0, self.outputs)
    }

    pub fn ancilla_rows(&self) -> Vec<usize> {
        self.quads(self.outputs, self.modes())
    }

    pub fn input_cols(&self) -> Vec<usize> {
        self.quads(0, self.inputs)
    }

    pub fn noise_cols(&self) -> Vec<usize> {
        self.quads(self.inputs, self.modes())
    }
}

/// Square conjugate-symplectic `M_ext = [G N; K L]`.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub m_ext: MatrixFunction,
    pub layout: DilationLayout,
}

impl Dilation {
    pub fn g_block(&self) -> Result<MatrixFunction> {
        let (r, cl) = (self.layout.output_rows(), self.layout.input_cols());
        self.m_ext.map(|m| select(m, &r, &cl))
    }

    pub fn n_block(&self) -> Result<MatrixFunction> {
        let (r, cl) = (self.layout.output_rows(), self.layout.noise_cols());
        self.m_ext.map(|m| select(m, &r, &cl))
    }

    pub fn max_residual(&self) -> Result<f64> {
        self.m_ext.samples().iter().try_fold(0.0f64, |a, m| Ok(a.max(residual_matrix(m)?)))
    }
}

/// `[G N]` with columns arranged as inputs then noises, qq..pp.
fn stacked_io(g: &CMat, n: &CMat, inputs: usize, noises: usize) -> CMat {
    let rows = g.nrows();
    let mut t = CMat::zeros(rows, 2 * (inputs + noises));
    let k = inputs + noises;
    for j in 0..inputs {
        t.set_column(j, &g.column(j));
        t.set_column(k + j, &g.column(inputs + j));
    }
    for j in 0..noises {
        t.set_column(inputs + j, &n.column(j));
        t.set_column(k + inputs + j, &n.column(noises + j));
    }
    t
}

/// Indefinite product `u I v†` of row vectors.
fn ip(u: &CVec, v: &CVec, k: usize) -> crate::linalg::C64 {
    (0..2 * k).fold(ZERO, |a, i| a + u[i] * v[i].conj() * if i < k { 1.0 } else { -1.0 })
}

/// Row `[x, y]` to `[conj y, conj x]`.
fn partner(v: &CVec, k: usize) -> CVec {
    CVec::from_fn(2 * k, |i, _| if i < k { v[k + i].conj() } else { v[i - k].conj() })
}

fn project_out(v: &CVec, basis: &[(CVec, f64)], k: usize) -> CVec {
    let mut w = v.clone();
    for _ in 0..2 {
        for (r, s) in basis {
            let coeff = ip(&w, r, k) * *s;
            w -= r * coeff;
        }
    }
    w
}

/// Next unit row of signature `sign` orthogonal to `basis`, seeded from the
/// standard basis vector with the largest residual of that sign.
fn next_row(basis: &[(CVec, f64)], sign: f64, k: usize) -> Result<CVec> {
    let best = (0..2 * k)
        .map(|i| {
            let mut e = CVec::zeros(2 * k);
            e[i] = ONE;
            let w = project_out(&e, basis, k);
            let q = sign * ip(&w, &w, k).re;
            (q, w)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty basis");
    if best.0 <= 1e-8 {
        return Err(Error::Degenerate(format!("row-space completion stalled (best residual {:.3e})", best.0)));
    }
    Ok(best.1.unscale(best.0.sqrt()))
}

/// Completes the ladder rows of `[G N]` to a full indefinite-unitary matrix.
fn complete(t: &CMat, layout: &DilationLayout) -> Result<CMat> {
    let (m, k) = (layout.outputs, layout.modes());
    let a = ladder_map(m).adjoint() * t * ladder_map(k);
    let r = (&a * indefinite_metric(k) * a.adjoint() - indefinite_metric(m)).norm();
    if r > 1e-8 * a.norm().max(1.0) {
        return Err(Error::Numeric(format!("[G N] violates the commutator constraint by {r:.3e}")));
    }
    let real = max_abs_imag(t) <= 1e-14 * max_abs(t).max(1.0);
    let mut basis: Vec<(CVec, f64)> = Vec::with_capacity(2 * k);
    for i in 0..m {
        basis.push((a.row(i).transpose(), 1.0));
        basis.push((a.row(m + i).transpose(), -1.0));
    }
    let extra = k - m;
    let mut pos = Vec::with_capacity(extra);
    let mut neg = Vec::with_capacity(extra);
    for _ in 0..extra {
        let v = next_row(&basis, 1.0, k)?;
        if real {
            let w = partner(&v, k);
            basis.push((w.clone(), -1.0));
            neg.push(w);
        }
        basis.push((v.clone(), 1.0));
        pos.push(v);
    }
    if !real {
        for _ in 0..extra {
            let v = next_row(&basis, -1.0, k)?;
            basis.push((v.clone(), -1.0));
            neg.push(v);
        }
    }
    let mut full = CMat::zeros(2 * k, 2 * k);
    for i in 0..m {
        full.set_row(i, &a.row(i));
        full.set_row(k + i, &a.row(m + i));
    }
    for (j, (p, q)) in pos.iter().zip(&neg).enumerate() {
        full.set_row(m + j, &p.transpose());
        full.set_row(k + m + j, &q.transpose());
    }
    let p = ladder_map(k);
    Ok(&p * full * p.adjoint())
}

/// Closes `(G, N)` into a square conjugate-symplectic system.
pub fn dilate(model: &NoiseModel) -> Result<Dilation> {
    let layout = DilationLayout { inputs: model.inputs(), noises: model.ell_max(), outputs: model.outputs() };
    if layout.modes() < layout.outputs {
        return Err(Error::Shape("fewer input and noise modes than outputs".into()));
    }
    let samples = collect_per_frequency(model.grid(), |k, _| {
        let t = stacked_io(model.g.sample(k), model.n.sample(k), layout.inputs, layout.noises);
        let mut mx = complete(&t, &layout)?;
        // The basis round trip perturbs the known rows by rounding; restore them.
        for (i, r) in layout.output_rows().into_iter().enumerate() {
            mx.set_row(r, &t.row(i));
        }
        let r = residual_matrix(&mx)?;
        if r > 1e-9 * mx.norm().max(1.0) {
            return Err(Error::Numeric(format!("dilation residual {r:.3e}")));
        }
        Ok(mx)
    })?;
    Ok(Dilation { m_ext: MatrixFunction::new(model.grid().clone(), samples)?, layout })
}

/// Scalar `sqrt(x)` times the identity on `2m` quadratures.
pub fn scaled_identity(grid: &FrequencyGrid, modes: usize, x: f64) -> Result<MatrixFunction> {
    MatrixFunction::constant(grid, &(CMat::identity(2 * modes, 2 * modes) * c(x.sqrt(), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::random_group_element;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(vec![0.0, 0.7, 2.0]).unwrap()
    }

    #[test]
    fn deficit_examples() {
        let g = grid();
        let ij = symplectic_form(1) * I;
        let loss = scaled_identity(&g, 1, 0.5).unwrap();
        assert!((ccr_deficit(&loss, 0.7).unwrap() - ij.scale(0.5)).norm() < 1e-15);
        let amp = scaled_identity(&g, 1, 2.0).unwrap();
        assert!((ccr_deficit(&amp, -0.7).unwrap() + &ij).norm() < 1e-14);
        let m = random_group_element(&g, 2, 3, 1.0).unwrap();
        assert!(ccr_deficit(&m, 2.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn loss_needs_one_mode() {
        let g = grid();
        let model = minimal_noise(&scaled_identity(&g, 1, 0.5).unwrap()).unwrap();
        for info in &model.per_freq {
            assert_eq!((info.ell, info.d_plus, info.d_minus), (1, 1, 1));
            for v in &info.gamma {
                assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
            }
        }
        assert!(max_abs_imag(model.n.sample(1)) < 1e-15, "real G gives real N");
        let d = dilate(&model).unwrap();
        assert_eq!(d.layout.ancillas(), 1);
        assert!(d.max_residual().unwrap() < 1e-10);
    }

    #[test]
    fn amplifier_swaps_quadrant() {
        let g = grid();
        let loss = minimal_noise(&scaled_identity(&g, 1, 0.5).unwrap()).unwrap();
        let amp = minimal_noise(&scaled_identity(&g, 1, 2.0).unwrap()).unwrap();
        assert_eq!(amp.per_freq[0].ell, 1);
        assert!(amp.per_freq[0].gamma.iter().all(|v| (v - 1.0).abs() < 1e-14));
        // the D+ eigenvector of the amplifier is the D- eigenvector of the loss
        let ul = &loss.diagonalizer[1];
        let ua = &amp.diagonalizer[1];
        assert!((ul.column(0).adjoint() * ua.column(1))[(0, 0)].norm() > 1.0 - 1e-12);
    }

    #[test]
    fn lossless_needs_no_noise_and_no_ancilla() {
        let g = grid();
        let m = random_group_element(&g, 2, 5, 1.0).unwrap();
        let model = minimal_noise(&m).unwrap();
        assert!(model.per_freq.iter().all(|i| i.ell == 0));
        assert_eq!(model.n.cols(), 0);
        let d = dilate(&model).unwrap();
        assert_eq!(d.layout.ancillas(), 0);
        for k in 0..g.len() {
            assert!((d.m_ext.sample(k) - m.sample(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn contraction_from_random_element() {
        let g = grid();
        let m = random_group_element(&g, 2, 11, 1.0).unwrap();
        let rows = [0usize, 2];
        let gsub = m.map(|s| select(s, &rows, &[0, 1, 2, 3])).unwrap();
        let model = minimal_noise(&gsub).unwrap();
        for k in 0..g.len() {
            assert!(model.constraint_residual(k).unwrap() < 1e-9);
        }
        let d = dilate(&model).unwrap();
        assert!(d.max_residual().unwrap() < 1e-9);
        let gb = d.g_block().unwrap();
        let nb = d.n_block().unwrap();
        for k in 0..g.len() {
            assert!((gb.sample(k) - gsub.sample(k)).norm() < 1e-12);
            assert!((nb.sample(k) - model.n.sample(k)).norm() < 1e-12);
        }
    }
}
