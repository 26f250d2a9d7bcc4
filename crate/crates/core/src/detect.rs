//! Symplectodyne detection: photocurrent spectra for arbitrary local
//! oscillators and SDM tomography from the two-tone (synodyne) quadratic form.
//!
//! A local oscillator is described by its quadrature spectrum `α[Ω] ∈ ℂ^{2n}`.
//! Delta lines `α[Ω] = 2π Σ w_k δ(Ω - Ω_k)` contribute
//! `S_II[w] = Σ w_k† S[w + Ω_k] w_k`; a sampled spectrum contributes the
//! trapezoidal estimate of `∫ dΩ/2π α[Ω]† S[w + Ω] α[Ω]`.
//!
//! Cross blocks of a multimode SDM come from the sum photocurrent with probe
//! pairs `x = e_a`, `y = e_b`:
//! `Re S_ab = (Q(x + y) - Q(x - y)) / 4` and `Im S_ab = (Q(x - iy) - Q(x + iy)) / 4`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, C64, I, ONE, ZERO};
use crate::sdm::SpectralDensityMatrix;

/// One spectral line of the LO quadrature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaLine {
    pub offset: f64,
    pub weight: CVec,
}

/// A sampled LO quadrature spectrum on offsets `Ω_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLo {
    pub offsets: Vec<f64>,
    pub alpha: Vec<CVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalOscillator {
    /// `α[Ω] = 2π δ(Ω) amp (cos θ, sin θ)`.
    Homodyne { theta: f64, amp: f64 },
    /// `α[w] = 2π α0 δ(w - w0)` for the complex amplitude.
    Heterodyne { omega0: f64, alpha0: C64 },
    /// `α[w] = √2 π (α+ δ(w - w0) + α- δ(w + w0))`.
    Synodyne { omega0: f64, alpha_plus: C64, alpha_minus: C64 },
    General { lines: Vec<DeltaLine>, sampled: Option<SampledLo> },
}

/// `(α_q0, α_p0) = ((α+ + conj α-)/2, i(conj α- - α+)/2)`.
pub fn synodyne_quadratures(alpha_plus: C64, alpha_minus: C64) -> (C64, C64) {
    ((alpha_plus + alpha_minus.conj()) / 2.0, I * (alpha_minus.conj() - alpha_plus) / 2.0)
}

fn pair(a: C64, b: C64) -> CVec {
    CVec::from_vec(vec![a, b])
}

impl LocalOscillator {
    /// Modes addressed by the LO, if fixed.
    fn modes(&self) -> Option<usize> {
        match self {
            LocalOscillator::General { lines, sampled } => lines
                .first()
                .map(|l| l.weight.len() / 2)
                .or_else(|| sampled.as_ref().and_then(|s| s.alpha.first()).map(|a| a.len() / 2)),
            _ => Some(1),
        }
    }

    /// Delta-line form; the named single-mode LOs are lowered exactly.
    pub fn lines(&self) -> Vec<DeltaLine> {
        match self {
            LocalOscillator::Homodyne { theta, amp } => {
                vec![DeltaLine { offset: 0.0, weight: pair(c(amp * theta.cos(), 0.0), c(amp * theta.sin(), 0.0)) }]
            }
            LocalOscillator::Heterodyne { omega0, alpha0 } => vec![
                DeltaLine { offset: *omega0, weight: pair(*alpha0 / 2.0, -I * *alpha0 / 2.0) },
                DeltaLine { offset: -omega0, weight: pair(alpha0.conj() / 2.0, I * alpha0.conj() / 2.0) },
            ],
            LocalOscillator::Synodyne { omega0, alpha_plus, alpha_minus } => {
                let (q, p) = synodyne_quadratures(*alpha_plus, *alpha_minus);
                let w = pair(q, p).scale(FRAC_1_SQRT_2);
                vec![
                    DeltaLine { offset: *omega0, weight: w.clone() },
                    DeltaLine { offset: -omega0, weight: w.map(|z| z.conj()) },
                ]
            }
            LocalOscillator::General { lines, .. } => lines.clone(),
        }
    }
}

/// Photocurrent auto-spectrum on a list of analysis frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentSpectrum {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    /// How many SDM look-ups fell between grid points and were interpolated.
    pub interpolated: usize,
}

fn form(w: &CVec, s: &CMat) -> C64 {
    (w.adjoint() * s * w)[(0, 0)]
}

fn real_form(w: &CVec, s: &CMat) -> Result<f64> {
    let v = form(w, s);
    if v.im.abs() > 1e-12 * v.norm().max(1.0) {
        return Err(Error::Numeric(format!("photocurrent spectrum has imaginary part {:.3e}", v.im)));
    }
    Ok(v.re)
}

fn spectrum_at(s: &SpectralDensityMatrix, lo: &LocalOscillator, omega: f64, interpolated: &mut usize) -> Result<f64> {
    let mut total = 0.0;
    for line in lo.lines() {
        let (m, exact) = s.data().eval_interpolated(omega + line.offset)?;
        if !exact {
            *interpolated += 1;
        }
        total += real_form(&line.weight, &m)?;
    }
    if let LocalOscillator::General { sampled: Some(sl), .. } = lo {
        if sl.offsets.len() != sl.alpha.len() || sl.offsets.len() < 2 {
            return Err(Error::Shape("sampled LO needs matching offsets and amplitudes (at least two)".into()));
        }
        let mut f = Vec::with_capacity(sl.offsets.len());
        for (o, a) in sl.offsets.iter().zip(&sl.alpha) {
            let m = s
                .eval(omega + o)
                .map_err(|_| Error::Grid(format!("LO offset {o} shifts w = {omega} off the SDM grid")))?;
            f.push(real_form(a, &m)?);
        }
        let integral: f64 = sl
            .offsets
            .windows(2)
            .zip(f.windows(2))
            .map(|(o, v)| (o[1] - o[0]) * (v[0] + v[1]) / 2.0)
            .sum();
        total += integral / (2.0 * PI);
    }
    Ok(total)
}

/// Photocurrent spectrum for any LO at the given analysis frequencies.
pub fn photocurrent_spectrum(s: &SpectralDensityMatrix, lo: &LocalOscillator, omega: &[f64]) -> Result<PhotocurrentSpectrum> {
    if let Some(n) = lo.modes() {
        if n != s.n() {
            return Err(Error::Shape(format!("LO addresses {n} modes, SDM has {}", s.n())));
        }
    }
    let mut interpolated = 0;
    let values = omega
        .iter()
        .map(|&w| spectrum_at(s, lo, w, &mut interpolated))
        .collect::<Result<Vec<_>>>()?;
    if interpolated > 0 {
        log::warn!("{interpolated} spectral look-ups were off-grid and linearly interpolated");
    }
    Ok(PhotocurrentSpectrum { omega: omega.to_vec(), values, interpolated })
}

fn single_mode(s: &SpectralDensityMatrix) -> Result<()> {
    if s.n() != 1 {
        return Err(Error::Shape(format!("expected a single-mode SDM, found {} modes", s.n())));
    }
    Ok(())
}

/// `α0ᵀ Re(S[w]) α0` with `α0 = amp (cos θ, sin θ)`.
pub fn homodyne_spectrum(s: &SpectralDensityMatrix, theta: f64, amp: f64, omega: f64) -> Result<f64> {
    single_mode(s)?;
    let m = s.eval(omega)?;
    let a = [amp * theta.cos(), amp * theta.sin()];
    Ok((0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| a[i] * m[(i, j)].re * a[j]).sum())
}

/// Heterodyne spectrum; off-grid `w0 ± w` are linearly interpolated with a warning.
pub fn heterodyne_spectrum(s: &SpectralDensityMatrix, omega0: f64, alpha0: C64, omega: f64) -> Result<f64> {
    single_mode(s)?;
    let lo = LocalOscillator::Heterodyne { omega0, alpha0 };
    Ok(photocurrent_spectrum(s, &lo, &[omega])?.values[0])
}

/// `Q = α0† S[w0] α0`.
pub fn synodyne_q(s: &SpectralDensityMatrix, omega0: f64, alpha_q0: C64, alpha_p0: C64) -> Result<f64> {
    single_mode(s)?;
    real_form(&pair(alpha_q0, alpha_p0), &s.eval(omega0)?)
}

/// The five fixed probes, each scaled by `amplitude`.
pub fn tomography_probes(amplitude: f64) -> [(C64, C64); 5] {
    let h = FRAC_1_SQRT_2 * amplitude;
    [
        (c(amplitude, 0.0), ZERO),
        (ZERO, c(amplitude, 0.0)),
        (c(h, 0.0), c(h, 0.0)),
        (c(h, 0.0), c(0.0, -h)),
        (c(h, 0.0), c(0.0, h)),
    ]
}

/// Single-mode SDM from five evaluations of the quadratic form.
pub fn reconstruct_sdm(q: impl Fn(C64, C64) -> Result<f64>, amplitude: f64) -> Result<CMat> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return Err(Error::InvalidParameter("probe amplitude must be nonzero and finite".into()));
    }
    let p = tomography_probes(amplitude);
    let a2 = amplitude * amplitude;
    let v: Vec<f64> = p.iter().map(|&(x, y)| q(x, y).map(|v| v / a2)).collect::<Result<_>>()?;
    let (sqq, spp) = (v[0], v[1]);
    let re = v[2] - (sqq + spp) / 2.0;
    let im = (v[3] - v[4]) / 2.0;
    Ok(CMat::from_row_slice(2, 2, &[c(sqq, 0.0), c(re, im), c(re, -im), c(spp, 0.0)]))
}

/// Full `2n x 2n` reconstruction from sum-photocurrent quadratic forms.
pub fn multimode_reconstruct(s: &SpectralDensityMatrix, omega0: f64) -> Result<CMat> {
    let n = s.n();
    let sm = s.eval(omega0)?;
    let q = |a: &CVec| real_form(a, &sm);
    let unit = |i: usize| {
        let mut e = CVec::zeros(2 * n);
        e[i] = ONE;
        e
    };
    let mut out = CMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        let block = reconstruct_sdm(
            |x, y| {
                let mut a = CVec::zeros(2 * n);
                a[j] = x;
                a[n + j] = y;
                q(&a)
            },
            1.0,
        )?;
        let idx = [j, n + j];
        for (r, &ri) in idx.iter().enumerate() {
            for (cc, &ci) in idx.iter().enumerate() {
                out[(ri, ci)] = block[(r, cc)];
            }
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            for &a in &[j, n + j] {
                for &b in &[k, n + k] {
                    let (x, y) = (unit(a), unit(b));
                    let re = (q(&(&x + &y))? - q(&(&x - &y))?) / 4.0;
                    let im = (q(&(&x - &y * I))? - q(&(&x + &y * I))?) / 4.0;
                    out[(a, b)] = c(re, im);
                    out[(b, a)] = c(re, -im);
                }
            }
        }
    }
    Ok(out)
}
