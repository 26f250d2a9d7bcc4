//! Lowering of an `n x n` unitary onto two-mode rotations and single-mode phases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eye, unitary_residual, CMat};

/// One optical element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshElement {
    /// `[cos θ, -e^{-iφ} sin θ; e^{iφ} sin θ, cos θ]` on modes `(j, k)`.
    Rotation { modes: (usize, usize), theta: f64, phi: f64 },
    /// `e^{iφ}` on mode `j`.
    Phase { mode: usize, phase: f64 },
}

impl MeshElement {
    /// Left-multiplies `m` by this element.
    fn apply(&self, m: &mut CMat) {
        match *self {
            MeshElement::Phase { mode, phase } => {
                let z = c(0.0, phase).exp();
                m.row_mut(mode).iter_mut().for_each(|x| *x *= z);
            }
            MeshElement::Rotation { modes: (j, k), theta, phi } => {
                let (s, co) = theta.sin_cos();
                let a = c(co, 0.0);
                let b = -c(0.0, -phi).exp() * s;
                let cc = c(0.0, phi).exp() * s;
                for col in 0..m.ncols() {
                    let (x, y) = (m[(j, col)], m[(k, col)]);
                    m[(j, col)] = a * x + b * y;
                    m[(k, col)] = cc * x + a * y;
                }
            }
        }
    }

    fn apply_right(&self, m: &mut CMat) {
        if let MeshElement::Rotation { modes: (j, k), theta, phi } = *self {
            let (s, co) = theta.sin_cos();
            let a = c(co, 0.0);
            let b = -c(0.0, -phi).exp() * s;
            let cc = c(0.0, phi).exp() * s;
            for row in 0..m.nrows() {
                let (x, y) = (m[(row, j)], m[(row, k)]);
                m[(row, j)] = x * a + y * cc;
                m[(row, k)] = x * b + y * a;
            }
        }
    }

    fn inverse(&self) -> Self {
        match *self {
            MeshElement::Rotation { modes, theta, phi } => MeshElement::Rotation { modes, theta: -theta, phi },
            MeshElement::Phase { mode, phase } => MeshElement::Phase { mode, phase: -phase },
        }
    }
}

/// Elements in the order light meets them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshProgram {
    pub modes: usize,
    pub elements: Vec<MeshElement>,
}

impl MeshProgram {
    pub fn replay(&self) -> CMat {
        let mut m = eye(self.modes);
        for e in &self.elements {
            e.apply(&mut m);
        }
        m
    }

    pub fn rotations(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e, MeshElement::Rotation { .. })).count()
    }
}

/// Rotation nulling `m[r, a]` by mixing columns `a` and `a + 1` from the right.
fn right_null(m: &CMat, r: usize, a: usize) -> MeshElement {
    let (x, y) = (m[(r, a)], m[(r, a + 1)]);
    let theta = x.norm().atan2(y.norm());
    let phi = if x.norm() == 0.0 || y.norm() == 0.0 { 0.0 } else { (-x / y).arg() };
    MeshElement::Rotation { modes: (a, a + 1), theta, phi }
}

/// Rotation nulling `m[r, col]` by mixing rows `r - 1` and `r` from the left.
fn left_null(m: &CMat, r: usize, col: usize) -> MeshElement {
    let (x, y) = (m[(r - 1, col)], m[(r, col)]);
    let theta = y.norm().atan2(x.norm());
    let phi = if x.norm() == 0.0 || y.norm() == 0.0 { 0.0 } else { (-y / x).arg() };
    MeshElement::Rotation { modes: (r - 1, r), theta, phi }
}

/// Rectangular (Clements) elimination.
pub fn mesh_decompose(u0: &CMat) -> Result<MeshProgram> {
    let n = u0.nrows();
    if u0.ncols() != n || n == 0 {
        return Err(Error::Shape(format!("expected a square unitary, found {:?}", u0.shape())));
    }
    let ur = unitary_residual(u0);
    if ur > 1e-9 {
        return Err(Error::NotUnitary(ur));
    }
    let mut m = u0.clone();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if i % 2 == 0 {
            for j in 0..=i {
                let e = right_null(&m, n - 1 - j, i - j);
                e.apply_right(&mut m);
                right.push(e);
            }
        } else {
            for j in 1..=i + 1 {
                let e = left_null(&m, n + j - i - 2, j - 1);
                e.apply(&mut m);
                left.push(e);
            }
        }
    }
    // left_K .. left_1 U right_1 .. right_P = D, so U = left_1^-1 .. left_K^-1 D right_P^-1 .. right_1^-1
    let mut elements: Vec<MeshElement> = right.iter().map(MeshElement::inverse).collect();
    elements.extend((0..n).map(|k| MeshElement::Phase { mode: k, phase: m[(k, k)].arg() }));
    elements.extend(left.iter().rev().map(MeshElement::inverse));
    let program = MeshProgram { modes: n, elements };
    let res = (program.replay() - u0).norm();
    if res > 1e-10 {
        return Err(Error::Numeric(format!("mesh replay residual {res:.3e}")));
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn single_mode_phase() {
        let u = CMat::from_element(1, 1, c(0.0, 0.8).exp());
        let p = mesh_decompose(&u).unwrap();
        assert_eq!(p.elements, vec![MeshElement::Phase { mode: 0, phase: 0.8 }]);
    }

    #[test]
    fn two_mode_beam_splitter() {
        let (a, b) = (FRAC_PI_4, FRAC_PI_2);
        let w = CMat::from_row_slice(
            2,
            2,
            &[c(a.cos(), 0.0), -c(0.0, b).exp() * a.sin(), c(0.0, -b).exp() * a.sin(), c(a.cos(), 0.0)],
        );
        let p = mesh_decompose(&w).unwrap();
        assert_eq!(p.rotations(), 1);
        assert!((p.replay() - &w).norm() < 1e-12);
        let MeshElement::Rotation { theta, .. } = p.elements[0] else { panic!() };
        assert!((theta.abs() - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn random_unitaries_replay() {
        for n in 3..=8 {
            for seed in 0..5u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                let u = a.qr().q();
                let p = mesh_decompose(&u).unwrap();
                assert_eq!(p.rotations(), n * (n - 1) / 2);
                assert!((p.replay() - &u).norm() < 1e-10);
            }
        }
    }
}
