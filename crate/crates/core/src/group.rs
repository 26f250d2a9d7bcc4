//! The conjugate symplectic group `M J M† = J`, its algebra, and the maps
//! between quadrature, ladder and two-photon pictures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, c, eye, hermitian_residual, logm, max_abs_imag, CMat, RMat, I, ONE, ZERO};
use crate::matfn::{collect_per_frequency, FrequencyGrid, MatrixFunction};

/// Default relative tolerance for group membership.
pub const GROUP_TOL: f64 = 1e-10;

/// The symplectic form `[0 1; -1 0]` in qq..pp ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    matrix: CMat,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        let mut j = CMat::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(k, n + k)] = ONE;
            j[(n + k, k)] = -ONE;
        }
        Self { n, matrix: j }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `‖J‖_F = sqrt(2n)`.
    pub fn norm(&self) -> f64 {
        ((2 * self.n) as f64).sqrt()
    }
}

/// Shorthand for the `2n x 2n` symplectic form.
pub fn symplectic_form(n: usize) -> CMat {
    SymplecticForm::new(n).matrix
}

/// `diag(1_n, -1_n)`.
pub fn indefinite_metric(n: usize) -> CMat {
    CMat::from_fn(2 * n, 2 * n, |i, j| if i != j { ZERO } else if i < n { ONE } else { -ONE })
}

/// The unitary `P = (1/√2)[1 1; -i i]` taking ladder to quadrature coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderBasisMap {
    n: usize,
    matrix: CMat,
}

impl LadderBasisMap {
    pub fn new(n: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut p = CMat::zeros(2 * n, 2 * n);
        for k in 0..n {
            p[(k, k)] = c(s, 0.0);
            p[(k, n + k)] = c(s, 0.0);
            p[(n + k, k)] = c(0.0, -s);
            p[(n + k, n + k)] = c(0.0, s);
        }
        Self { n, matrix: p }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

pub fn ladder_map(n: usize) -> CMat {
    LadderBasisMap::new(n).matrix
}

fn square_modes(m: &CMat) -> Result<usize> {
    let (r, cl) = m.shape();
    if r != cl || r % 2 != 0 || r == 0 {
        return Err(Error::Shape(format!("expected a 2n x 2n matrix, found {r}x{cl}")));
    }
    Ok(r / 2)
}

/// `‖M J M† - J‖_F` for a single matrix.
pub fn residual_matrix(m: &CMat) -> Result<f64> {
    let j = symplectic_form(square_modes(m)?);
    Ok((m * &j * m.adjoint() - j).norm())
}

/// Group residual of `M` at a signed grid frequency.
pub fn conjugate_symplectic_residual(m: &MatrixFunction, omega: f64) -> Result<f64> {
    m.n_modes()?;
    residual_matrix(&m.eval(omega)?)
}

/// Membership test `residual <= tol * ‖J‖_F`.
pub fn is_conjugate_symplectic(m: &CMat, tol: f64) -> bool {
    match square_modes(m) {
        Ok(n) => residual_matrix(m).map(|r| r <= tol * SymplecticForm::new(n).norm()).unwrap_or(false),
        Err(_) => false,
    }
}

/// Errors unless every sample of `m` lies in the group.
pub fn ensure_group(m: &MatrixFunction, tol: f64) -> Result<()> {
    let n = m.n_modes()?;
    let bound = tol * SymplecticForm::new(n).norm();
    collect_per_frequency(m.grid(), |k, _| {
        let r = residual_matrix(m.sample(k))?;
        if r > bound {
            return Err(Error::NotInGroup { residual: r, tolerance: bound });
        }
        Ok(())
    })?;
    Ok(())
}

/// Group inverse `-J M† J`.
pub fn group_inverse(m: &CMat) -> Result<CMat> {
    let j = symplectic_form(square_modes(m)?);
    Ok(-(&j * m.adjoint() * &j))
}

/// Seeded random element `exp(J H[w])` with Hermitian `H[w]` drawn per frequency.
///
/// At `w = 0` the draw is real symmetric so the sample is real.
pub fn random_group_element(grid: &FrequencyGrid, n: usize, seed: u64, magnitude: f64) -> Result<MatrixFunction> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 2 * n;
    let j = symplectic_form(n);
    let scale = magnitude / (d as f64).sqrt();
    let samples = grid
        .iter()
        .map(|w| {
            let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
            let a = CMat::from_fn(d, d, |_, _| {
                let re = g();
                let im = if w == 0.0 { 0.0 } else { g() };
                c(re, im)
            });
            let h = (&a + a.adjoint()).scale(0.5 * scale);
            (&j * h).exp()
        })
        .collect();
    MatrixFunction::new(grid.clone(), samples)
}

/// Generator `Λ` with `exp(Λ) = M` and `ΛJ` Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    n: usize,
    lambda: MatrixFunction,
}

impl AlgebraElement {
    /// Validates `ΛJ` Hermitian at every frequency.
    pub fn new(lambda: MatrixFunction, tol: f64) -> Result<Self> {
        let n = lambda.n_modes()?;
        let j = symplectic_form(n);
        collect_per_frequency(lambda.grid(), |k, _| {
            let l = lambda.sample(k);
            let r = hermitian_residual(&(l * &j));
            if r > tol * l.norm().max(1.0) {
                return Err(Error::NotInAlgebra(r));
            }
            Ok(())
        })?;
        Ok(Self { n, lambda })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.lambda.grid()
    }

    pub fn lambda(&self) -> &MatrixFunction {
        &self.lambda
    }

    /// Quadratic-form coefficient `J Λ[w]` of the Hamiltonian kernel.
    pub fn hamiltonian_kernel(&self, index: usize) -> CMat {
        symplectic_form(self.n) * self.lambda.sample(index)
    }

    pub fn exp(&self) -> Result<MatrixFunction> {
        self.lambda.map(|l| l.exp())
    }
}

/// Principal logarithm of a group element, per frequency.
pub fn generator_of(m: &MatrixFunction) -> Result<AlgebraElement> {
    let n = m.n_modes()?;
    let j = symplectic_form(n);
    let lambda = m.try_map(|_, _, mk| {
        let l = logm(mk)?;
        let r = hermitian_residual(&(&l * &j));
        if r > 1e-8 * l.norm().max(1.0) {
            return Err(Error::NotInAlgebra(r));
        }
        let back = (l.exp() - mk).norm();
        if back > 1e-8 * mk.norm() {
            return Err(Error::Numeric(format!("exp(log M) differs from M by {back:.3e}")));
        }
        Ok(l)
    })?;
    Ok(AlgebraElement { n, lambda })
}

/// `A = P† M P`.
pub fn to_ladder_matrix(m: &CMat) -> Result<CMat> {
    let p = ladder_map(square_modes(m)?);
    Ok(p.adjoint() * m * p)
}

/// `M = P A P†`.
pub fn from_ladder_matrix(a: &CMat) -> Result<CMat> {
    let p = ladder_map(square_modes(a)?);
    Ok(&p * a * p.adjoint())
}

/// Ladder representation of `M`; values at negative frequency remain conjugates
/// of the stored samples.
pub fn to_ladder(m: &MatrixFunction) -> Result<MatrixFunction> {
    m.n_modes()?;
    m.map(|s| to_ladder_matrix(s).expect("checked shape"))
}

pub fn from_ladder(a: &MatrixFunction) -> Result<MatrixFunction> {
    a.n_modes()?;
    a.map(|s| from_ladder_matrix(s).expect("checked shape"))
}

/// `‖A I A† - I‖_F`.
pub fn indefinite_unitary_residual(a: &CMat) -> Result<f64> {
    let g = indefinite_metric(square_modes(a)?);
    Ok((a * &g * a.adjoint() - g).norm())
}

/// Real symplectic form `diag(J, J)` preserved by the two-photon embedding.
pub fn two_photon_form(n: usize) -> RMat {
    let j = symplectic_form(n).map(|z| z.re);
    let mut out = RMat::zeros(4 * n, 4 * n);
    out.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&j);
    out.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&j);
    out
}

/// `ℙ diag(M[+w], M[-w]) ℙ†` with `ℙ = (1/√2)[1 1; -i i]` on the two
/// frequency blocks. The first `2n` rows are the A quadratures, the last `2n`
/// the B quadratures.
pub fn two_photon_embed(m: &MatrixFunction, omega: f64) -> Result<RMat> {
    let n = m.n_modes()?;
    let plus = m.eval(omega)?;
    let minus = m.eval(-omega)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let id = eye(2 * n);
    let mut pp = CMat::zeros(4 * n, 4 * n);
    pp.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&id.scale(s));
    pp.view_mut((0, 2 * n), (2 * n, 2 * n)).copy_from(&id.scale(s));
    pp.view_mut((2 * n, 0), (2 * n, 2 * n)).copy_from(&(&id * (-I * s)));
    pp.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&(&id * (I * s)));
    let x = &pp * block_diag(&plus, &minus) * pp.adjoint();
    let imag = max_abs_imag(&x);
    if imag > 1e-12 * x.norm().max(1.0) {
        return Err(Error::Numeric(format!("two-photon matrix has imaginary part {imag:.3e}")));
    }
    Ok(x.map(|z| z.re))
}

/// `‖X Ω Xᵀ - Ω‖_F` with `Ω = diag(J, J)`.
pub fn two_photon_residual(x: &RMat) -> f64 {
    let n = x.nrows() / 4;
    let o = two_photon_form(n);
    (x * &o * x.transpose() - o).norm()
}

/// Constant matrix function helper for elementary factors.
pub fn constant(grid: &FrequencyGrid, m: &CMat) -> Result<MatrixFunction> {
    MatrixFunction::constant(grid, m)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, diag_real};

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(vec![0.0, 0.5, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn form_identities() {
        for n in 1..4 {
            let j = symplectic_form(n);
            assert_eq!(j.adjoint(), -j.clone());
            assert_eq!(&j * &j, -eye(2 * n));
            assert_eq!(j.transpose() * &j, eye(2 * n));
            let p = ladder_map(n);
            assert!((p.adjoint() * &p - eye(2 * n)).norm() < 1e-15);
            let ij = &j * I;
            assert!((p.adjoint() * ij * &p - indefinite_metric(n)).norm() < 1e-15);
        }
    }

    #[test]
    fn trivial_residuals() {
        assert_eq!(residual_matrix(&eye(4)).unwrap(), 0.0);
        for phi in [0.0, 0.3, 2.0, -1.1] {
            let m = eye(2) * c(0.0, phi).exp();
            assert!(residual_matrix(&m).unwrap() < 1e-15);
        }
        let r = residual_matrix(&(eye(2) * c(2.0, 0.0))).unwrap();
        assert!((r - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(!is_conjugate_symplectic(&(eye(2) * c(2.0, 0.0)), GROUP_TOL));
        assert!(residual_matrix(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn random_elements_are_members() {
        let g = grid();
        let m = random_group_element(&g, 2, 7, 1.0).unwrap();
        for w in g.iter() {
            assert!(conjugate_symplectic_residual(&m, w).unwrap() < 1e-10);
            assert!(conjugate_symplectic_residual(&m, -w).unwrap() < 1e-10);
        }
        assert_eq!(max_abs_imag(m.sample(0)), 0.0);
        let id = random_group_element(&g, 3, 1, 0.0).unwrap();
        assert!(id.samples().iter().all(|s| (s - eye(6)).norm() == 0.0));
    }

    #[test]
    fn squeezer_generator_is_diagonal() {
        let g = FrequencyGrid::single(1.0).unwrap();
        let r: f64 = 0.7;
        let m = MatrixFunction::constant(&g, &diag_real(&[r.exp(), (-r).exp()])).unwrap();
        let l = generator_of(&m).unwrap();
        assert!((l.lambda().sample(0) - diag_real(&[r, -r])).norm() < 1e-12);
        let id = generator_of(&MatrixFunction::identity(&g, 4)).unwrap();
        assert!(id.lambda().sample(0).norm() < 1e-14);
    }

    #[test]
    fn quadrature_rotation_is_diagonal_in_ladder() {
        let phi: f64 = 0.4;
        let r = CMat::from_row_slice(2, 2, &[c(phi.cos(), 0.0), c(-phi.sin(), 0.0), c(phi.sin(), 0.0), c(phi.cos(), 0.0)]);
        let a = to_ladder_matrix(&r).unwrap();
        assert!((a - diag(&[c(0.0, phi).exp(), c(0.0, -phi).exp()])).norm() < 1e-14);
    }

    #[test]
    fn two_photon_of_constant_real_is_block_diagonal() {
        let g = grid();
        let m0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let m = MatrixFunction::constant(&g, &m0).unwrap();
        let x = two_photon_embed(&m, 1.0).unwrap();
        let mr = m0.map(|z| z.re);
        assert!((x.view((0, 0), (2, 2)) - &mr).norm() < 1e-15);
        assert!((x.view((2, 2), (2, 2)) - &mr).norm() < 1e-15);
        assert!(x.view((0, 2), (2, 2)).norm() < 1e-15);
        assert!((two_photon_embed(&MatrixFunction::identity(&g, 2), 0.5).unwrap() - RMat::identity(4, 4)).norm() < 1e-15);
    }
}
