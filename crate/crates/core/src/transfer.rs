//! Sampling classical transfer functions onto a frequency grid.
//!
//! Each matrix entry is `num(s) / den(s) * e^{iωτ}` with `s = -iω`, real
//! coefficients listed in ascending powers and a real delay `τ`. Real
//! coefficients make every sample at `-ω` the conjugate of the one at `ω`.

use serde::{Deserialize, Serialize};

use crate::apps::{cavity_f, oscillator_transfer, sideband_transfer, CavityLossModel, FeedbackOscillator};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64, ZERO};
use crate::matfn::{FrequencyGrid, MatrixFunction};

pub const TF_SCHEMA: &str = "qlti.tf/1";

fn one() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalEntry {
    pub num: Vec<f64>,
    #[serde(default = "one")]
    pub den: Vec<f64>,
    #[serde(default)]
    pub delay: f64,
}

impl RationalEntry {
    pub fn constant(k: f64) -> Self {
        Self { num: vec![k], den: one(), delay: 0.0 }
    }

    pub fn eval(&self, omega: f64) -> Result<C64> {
        let s = c(0.0, -omega);
        let horner = |p: &[f64]| p.iter().rev().fold(ZERO, |acc, &a| acc * s + a);
        let den = horner(&self.den);
        let scale: f64 = self.den.iter().enumerate().map(|(k, a)| a.abs() * omega.abs().powi(k as i32)).sum();
        if den.norm() <= 1e-12 * scale || scale == 0.0 {
            return Err(Error::Pole { omega, distance: den.norm() });
        }
        Ok(horner(&self.num) / den * c(0.0, omega * self.delay).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TransferPreset {
    /// Single-mode sideband gain of a lossy cavity.
    Cavity { reflectivity: f64, phi0: f64, tau_rt: f64 },
    /// The two-port feedback oscillator, 4 x 4.
    Oscillator { eta: f64, tau: f64 },
}

/// `qlti.tf/1`: either explicit entries (row-major, quadrature ordered) or a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSpec {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<RationalEntry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<TransferPreset>,
}

impl TransferSpec {
    pub fn from_entries(entries: Vec<Vec<RationalEntry>>) -> Self {
        Self { schema: TF_SCHEMA.into(), entries: Some(entries), preset: None }
    }

    pub fn from_preset(preset: TransferPreset) -> Self {
        Self { schema: TF_SCHEMA.into(), entries: None, preset: Some(preset) }
    }
}

fn check_entries(entries: &[Vec<RationalEntry>]) -> Result<(usize, usize)> {
    let rows = entries.len();
    let cols = entries.first().map_or(0, Vec::len);
    if rows == 0 || rows % 2 != 0 || cols % 2 != 0 || entries.iter().any(|r| r.len() != cols) {
        return Err(Error::Schema(format!("entries must form an even-sized rectangle, got {rows} rows")));
    }
    if entries.iter().flatten().any(|e| e.den.is_empty() || e.num.iter().chain(&e.den).any(|x| !x.is_finite())) {
        return Err(Error::Schema("empty denominator or non-finite coefficient".into()));
    }
    Ok((rows, cols))
}

pub fn sample_transfer_function(spec: &TransferSpec, grid: &FrequencyGrid) -> Result<MatrixFunction> {
    if spec.schema != TF_SCHEMA {
        return Err(Error::Schema(format!("schema is {:?}, expected {TF_SCHEMA:?}", spec.schema)));
    }
    match (&spec.entries, &spec.preset) {
        (Some(entries), None) => {
            let (rows, cols) = check_entries(entries)?;
            MatrixFunction::try_from_fn(grid, |w| {
                let mut m = CMat::zeros(rows, cols);
                for (i, row) in entries.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        m[(i, j)] = e.eval(w)?;
                    }
                }
                Ok(m)
            })
        }
        (None, Some(TransferPreset::Cavity { reflectivity, phi0, tau_rt })) => {
            let model = CavityLossModel::new(*reflectivity, *phi0, *tau_rt)?;
            MatrixFunction::from_fn(grid, |w| sideband_transfer(cavity_f(&model, w), cavity_f(&model, -w)))
        }
        (None, Some(TransferPreset::Oscillator { eta, tau })) => {
            let osc = FeedbackOscillator::new(*eta, *tau)?;
            MatrixFunction::try_from_fn(grid, |w| oscillator_transfer(&osc, w))
        }
        _ => Err(Error::Schema("exactly one of entries and preset must be given".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::is_conjugate_symplectic;
    use crate::linalg::max_abs_imag;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::linear(0.0, 5.0, 11).unwrap()
    }

    fn diag2(e: RationalEntry) -> Vec<Vec<RationalEntry>> {
        let z = RationalEntry::constant(0.0);
        vec![vec![e.clone(), z.clone()], vec![z, e]]
    }

    #[test]
    fn constant_entry() {
        let m = sample_transfer_function(&TransferSpec::from_entries(diag2(RationalEntry::constant(0.7))), &grid()).unwrap();
        assert!(m.samples().iter().all(|s| s[(0, 0)] == c(0.7, 0.0) && s[(0, 1)] == ZERO));
    }

    #[test]
    fn pure_delay_unit_modulus() {
        let e = RationalEntry { num: vec![1.0], den: one(), delay: 0.37 };
        let m = sample_transfer_function(&TransferSpec::from_entries(diag2(e)), &grid()).unwrap();
        for (w, s) in m.iter() {
            assert!((s[(1, 1)].norm() - 1.0).abs() < 1e-15);
            assert!((s[(1, 1)] - c(0.0, 0.37 * w).exp()).norm() < 1e-15);
        }
    }

    #[test]
    fn lowpass_matches_closed_form() {
        let t = 0.8;
        let e = RationalEntry { num: vec![1.0], den: vec![1.0, t], delay: 0.0 };
        let m = sample_transfer_function(&TransferSpec::from_entries(diag2(e.clone())), &grid()).unwrap();
        for (w, s) in m.iter() {
            assert!((s[(0, 0)] - ONE_C / c(1.0, -w * t)).norm() < 1e-15);
            assert!((e.eval(-w).unwrap() - s[(0, 0)].conj()).norm() < 1e-15);
        }
    }
    const ONE_C: C64 = C64::new(1.0, 0.0);

    #[test]
    fn zero_denominator_is_a_pole() {
        // 1 + s² vanishes at ω = 1.
        let e = RationalEntry { num: vec![1.0], den: vec![1.0, 0.0, 1.0], delay: 0.0 };
        let err = sample_transfer_function(&TransferSpec::from_entries(diag2(e)), &grid()).unwrap_err();
        assert!(matches!(err.root(), Error::Pole { .. }));
    }

    #[test]
    fn schema_problems() {
        let mut spec = TransferSpec::from_entries(vec![vec![RationalEntry::constant(1.0)]]);
        assert!(matches!(sample_transfer_function(&spec, &grid()), Err(Error::Schema(_))));
        spec.preset = Some(TransferPreset::Oscillator { eta: 0.5, tau: 1.0 });
        assert!(matches!(sample_transfer_function(&spec, &grid()), Err(Error::Schema(_))));
        let json = r#"{"schema":"qlti.tf/1","entries":[[{"num":[1]},{"num":[0]}],[{"num":[0]},{"num":[1],"den":[1,2]}]]}"#;
        let spec: TransferSpec = serde_json::from_str(json).unwrap();
        assert_eq!(sample_transfer_function(&spec, &grid()).unwrap().shape(), (2, 2));
    }

    #[test]
    fn presets() {
        let cav = TransferSpec::from_preset(TransferPreset::Cavity { reflectivity: 0.8, phi0: 0.4, tau_rt: 0.1 });
        let m = sample_transfer_function(&cav, &grid()).unwrap();
        assert_eq!(max_abs_imag(m.sample(0)), 0.0);
        let osc = TransferSpec::from_preset(TransferPreset::Oscillator { eta: 0.5, tau: 1.0 });
        let m = sample_transfer_function(&osc, &FrequencyGrid::linear(0.0, 3.0, 16).unwrap()).unwrap();
        assert!(m.samples().iter().all(|s| is_conjugate_symplectic(s, 1e-10)));
        assert!(sample_transfer_function(&osc, &FrequencyGrid::single(std::f64::consts::PI).unwrap()).is_err());
    }
}
