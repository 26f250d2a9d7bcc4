//! Worked systems: a detuned lossy cavity acting on squeezed light, the
//! two-mode sideband-asymmetry generator, and a feedback oscillator.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::decompose::{cos_sin, doubled};
use crate::error::{Error, Result};
use crate::linalg::{c, diag_real, hermitian_eigen, hermitian_part, CMat, C64, ONE, ZERO};
use crate::sdm::{mode_block, OpenSystemBound};

/// Fabry-Perot style loss channel with power reflectivity `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityLossModel {
    pub reflectivity: f64,
    pub phi0: f64,
    /// Single-trip time.
    pub tau_rt: f64,
}

impl CavityLossModel {
    pub fn new(reflectivity: f64, phi0: f64, tau_rt: f64) -> Result<Self> {
        if !(reflectivity > 0.0 && reflectivity < 1.0) {
            return Err(Error::InvalidParameter(format!("reflectivity {reflectivity} outside (0, 1)")));
        }
        Ok(Self { reflectivity, phi0, tau_rt })
    }

    pub fn phase(&self, omega: f64) -> f64 {
        omega * self.tau_rt + self.phi0
    }

    /// `4R sin²φ / ((1-R)² + 4R sin²φ)`.
    pub fn power_transmission(&self, omega: f64) -> f64 {
        let r = self.reflectivity;
        let s2 = self.phase(omega).sin().powi(2);
        4.0 * r * s2 / ((1.0 - r).powi(2) + 4.0 * r * s2)
    }
}

/// `F = √R (1 - e^{2iφ}) / (1 - R e^{2iφ})`.
pub fn cavity_f(model: &CavityLossModel, omega: f64) -> C64 {
    let r = model.reflectivity;
    let e = c(0.0, 2.0 * model.phase(omega)).exp();
    (ONE - e) * r.sqrt() / (ONE - e * r)
}

/// Quadrature transfer matrix of a ladder gain `a_out[w] = F[w] a_in[w]`.
pub fn sideband_transfer(f_plus: C64, f_minus: C64) -> CMat {
    let p = crate::group::ladder_map(1);
    &p * crate::linalg::diag(&[f_plus, f_minus.conj()]) * p.adjoint()
}

/// Output SDM of squeezed vacuum (squeeze factor `r`) after sideband gains
/// `F[+w] = f_plus`, `F[-w] = f_minus`, with vacuum entering the loss port.
pub fn lossy_squeezer_sdm(f_plus: C64, f_minus: C64, r: f64) -> Result<CMat> {
    let (a, b) = (f_plus.norm(), f_minus.norm());
    if a > 1.0 + 1e-12 || b > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("|F| must not exceed 1, got {a} and {b}")));
    }
    let theta = (f_plus * f_minus).arg() / 2.0;
    let s2 = r.sinh().powi(2);
    let sh = (2.0 * r).sinh();
    let (cos2, sin2) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let diag_common = 1.0 + (a * a + b * b) * s2;
    let off = c(a * b * sin2 * sh, (a * a - b * b) * s2);
    Ok(CMat::from_row_slice(
        2,
        2,
        &[c(diag_common + a * b * cos2 * sh, 0.0), off, off.conj(), c(diag_common - a * b * cos2 * sh, 0.0)],
    )
    .scale(0.5))
}

/// Smallest eigenvalues of the complex SDM and of its real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenSqueezing {
    pub lambda_c: f64,
    pub lambda_r: f64,
}

impl HiddenSqueezing {
    /// Sub-vacuum in the full SDM yet not in its real part.
    pub fn hidden(&self) -> bool {
        self.lambda_c < 0.5 && self.lambda_r >= 0.5
    }
}

pub fn hidden_squeezing_metrics(s: &CMat) -> Result<HiddenSqueezing> {
    if s.shape() != (2, 2) {
        return Err(Error::Shape("expected a single-mode 2x2 sample".into()));
    }
    let h = hermitian_part(s);
    let lambda_c = hermitian_eigen(&h).0[0];
    let lambda_r = hermitian_eigen(&h.map(|z| c(z.re, 0.0))).0[0];
    Ok(HiddenSqueezing { lambda_c, lambda_r })
}

/// Squeezing level beyond which the real-part minimum eigenvalue exceeds vacuum.
/// Equal sideband magnitudes give `+∞`.
pub fn r_lim(f_plus: f64, f_minus: f64) -> Result<f64> {
    if !(f_plus > 0.0 && f_minus > 0.0) {
        return Err(Error::InvalidParameter("sideband magnitudes must be positive".into()));
    }
    let x = 2.0 * f_plus * f_minus / (f_plus * f_plus + f_minus * f_minus);
    Ok(if x >= 1.0 { f64::INFINITY } else { x.atanh() })
}

/// High-squeezing limits `(Λ_C, Λ_R)` for real sideband amplitudes.
pub fn hidden_squeezing_asymptotes(f_plus: f64, f_minus: f64, r: f64) -> HiddenSqueezing {
    let eta_c = 2.0 / (f_minus.powi(-2) + f_plus.powi(-2));
    HiddenSqueezing {
        lambda_c: 0.5 * ((1.0 - eta_c) + eta_c * (-2.0 * r).exp()),
        lambda_r: (f_plus - f_minus).powi(2) * (2.0 * r).exp() / 8.0,
    }
}

/// `[cos α, -e^{iβ} sin α; e^{-iβ} sin α, cos α]`.
pub fn beam_splitter(alpha: f64, beta: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            c(alpha.cos(), 0.0),
            -c(0.0, beta).exp() * alpha.sin(),
            c(0.0, -beta).exp() * alpha.sin(),
            c(alpha.cos(), 0.0),
        ],
    )
}

/// Two squeezers followed by beam splitter, rotations and a second beam
/// splitter; the squeezers act first on the vacuum inputs.
pub fn two_mode_scheme(r1: f64, r2: f64) -> CMat {
    let d = diag_real(&[r1.exp(), r2.exp(), (-r1).exp(), (-r2).exp()]);
    let w1 = beam_splitter(FRAC_PI_4, FRAC_PI_2);
    let w2 = beam_splitter(FRAC_PI_4, 0.0);
    doubled(&w2) * cos_sin(&[FRAC_PI_2, 0.0]) * doubled(&w1) * d
}

/// Second-mode output SDM of [`two_mode_scheme`] on vacuum.
pub fn two_mode_sigma_delta(r1: f64, r2: f64) -> CMat {
    let m = two_mode_scheme(r1, r2);
    let s = (&m * m.adjoint()).scale(0.5);
    mode_block(&s, 1, 1)
}

/// Laser-like loop of a beam splitter (reflectivity `eta`) and a phase-insensitive
/// amplifier of gain `1/√eta`, with round-trip delay `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackOscillator {
    pub eta: f64,
    pub tau: f64,
}

/// `(H0, HG, HA)` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorResponses {
    pub h0: C64,
    pub hg: C64,
    pub ha: C64,
    pub delay: C64,
}

impl FeedbackOscillator {
    pub fn new(eta: f64, tau: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta {eta} outside (0, 1)")));
        }
        Ok(Self { eta, tau })
    }

    pub fn gain(&self) -> f64 {
        1.0 / self.eta.sqrt()
    }

    pub fn responses(&self, omega: f64) -> Result<OscillatorResponses> {
        let e = c(0.0, omega * self.tau).exp();
        let den = ONE + e;
        if den.norm() < 1e-6 {
            return Err(Error::Pole { omega, distance: den.norm() });
        }
        let s = self.eta.sqrt();
        Ok(OscillatorResponses {
            h0: (e / s + s) / den,
            hg: c(1.0 / s - s, 0.0) / den,
            ha: (e * s + 1.0 / s) / den,
            delay: e,
        })
    }
}

/// Map from `(q0, qG, p0, pG)` to `(q_out, q_anc, p_out, p_anc)`.
pub fn oscillator_transfer(osc: &FeedbackOscillator, omega: f64) -> Result<CMat> {
    let OscillatorResponses { h0, hg, ha, delay } = osc.responses(omega)?;
    Ok(CMat::from_row_slice(
        4,
        4,
        &[
            h0, hg, ZERO, ZERO, //
            delay * hg, ha, ZERO, ZERO, //
            ZERO, ZERO, h0, -hg, //
            ZERO, ZERO, -delay * hg, ha,
        ],
    ))
}

/// Closed-form inverse of [`oscillator_transfer`].
pub fn oscillator_inverse(osc: &FeedbackOscillator, omega: f64) -> Result<CMat> {
    let OscillatorResponses { h0, hg, ha, delay } = osc.responses(omega)?;
    Ok(CMat::from_row_slice(
        4,
        4,
        &[
            ha, -hg, ZERO, ZERO, //
            -delay * hg, h0, ZERO, ZERO, //
            ZERO, ZERO, ha, hg, //
            ZERO, ZERO, delay * hg, h0,
        ],
    ))
}

/// Bound `(|HG|² + 1/2)²` and the product `S_qq S_pp` reached with vacuum inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorBound {
    pub bound: f64,
    pub achieved: f64,
}

pub fn oscillator_bound(osc: &FeedbackOscillator, omega: f64) -> Result<OscillatorBound> {
    let r = osc.responses(omega)?;
    let m = oscillator_transfer(osc, omega)?;
    let out = crate::linalg::select(&m, &[0, 2], &[0, 1, 2, 3]);
    let s = (&out * out.adjoint()).scale(0.5);
    Ok(OscillatorBound { bound: (r.hg.norm_sqr() + 0.5).powi(2), achieved: s[(0, 0)].re * s[(1, 1)].re })
}

/// Output row blocks `(N_out,0, N_out,G)` used by the open-system bound.
pub fn oscillator_noise_blocks(osc: &FeedbackOscillator, omega: f64) -> Result<(CMat, CMat)> {
    let m = oscillator_transfer(osc, omega)?;
    let n = crate::linalg::select(&m, &[0, 2], &[0, 1, 2, 3]);
    Ok((mode_block(&n, 0, 0), mode_block(&n, 0, 1)))
}

/// Relative residual of the best fit `B ≈ c A` between `A = N0 N0†` and `B = NG NG†`.
pub fn noise_block_proportionality(n0: &CMat, ng: &CMat) -> f64 {
    let a = n0 * n0.adjoint();
    let b = ng * ng.adjoint();
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        return 0.0;
    }
    let coef = a.dotc(&b) / a.dotc(&a);
    (b - a * coef).norm() / scale
}

/// Open-system bound of the output mode, computed from its 2 x 4 noise row.
pub fn oscillator_open_bound(osc: &FeedbackOscillator, omega: f64) -> Result<OpenSystemBound> {
    let grid = crate::matfn::FrequencyGrid::single(omega.abs())?;
    let m = oscillator_transfer(osc, omega.abs())?;
    let n = crate::linalg::select(&m, &[0, 2], &[0, 1, 2, 3]);
    let nf = crate::matfn::MatrixFunction::constant(&grid, &n)?;
    let g = crate::matfn::MatrixFunction::constant(&grid, &CMat::zeros(2, 0))?;
    Ok(crate::sdm::open_system_bound(&g, &nf, None, None, omega.abs())?[0])
}
