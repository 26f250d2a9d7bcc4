//! Frequency grids and sampled matrix-valued functions of frequency.
//!
//! Only non-negative frequencies are stored. A sample at `-w` is the complex
//! conjugate of the sample at `+w`, which is what a real time-domain kernel
//! implies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, max_abs_imag, CMat};

/// Strictly increasing, finite, non-negative frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid(Vec<f64>);

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FrequencyGrid::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.0
    }
}

impl FrequencyGrid {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::Grid("grid is empty".into()));
        }
        if let Some(w) = omega.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Grid(format!("frequency {w} is negative or not finite")));
        }
        if omega.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Grid("frequencies must be strictly increasing".into()));
        }
        Ok(Self(omega))
    }

    pub fn single(omega: f64) -> Result<Self> {
        Self::new(vec![omega])
    }

    /// `count` evenly spaced points on `[start, stop]`.
    pub fn linear(start: f64, stop: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::Grid("count must be positive".into())),
            1 => Self::new(vec![start]),
            _ => {
                let h = (stop - start) / (count - 1) as f64;
                Self::new((0..count).map(|k| start + h * k as f64).collect())
            }
        }
    }

    /// `count` logarithmically spaced points on `[start, stop]`, `start > 0`.
    pub fn logarithmic(start: f64, stop: f64, count: usize) -> Result<Self> {
        if start <= 0.0 {
            return Err(Error::Grid("logarithmic grid needs a positive start".into()));
        }
        let lin = Self::linear(start.ln(), stop.ln(), count)?;
        Self::new(lin.0.into_iter().map(f64::exp).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn max(&self) -> f64 {
        *self.0.last().unwrap()
    }

    /// Index of `|omega|` on the grid and whether `omega` is negative.
    pub fn locate(&self, omega: f64) -> Option<(usize, bool)> {
        let a = omega.abs();
        let tol = 1e-12 * a.max(1.0);
        let k = self.0.partition_point(|&w| w < a - tol);
        (k < self.0.len() && (self.0[k] - a).abs() <= tol).then_some((k, omega < 0.0 && a > tol))
    }
}

/// A matrix-valued function sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFunction {
    grid: FrequencyGrid,
    rows: usize,
    cols: usize,
    samples: Vec<CMat>,
}

impl MatrixFunction {
    /// Validates shapes and realness at `omega = 0`. Imaginary parts below
    /// `1e-12` (relative to the sample scale) are discarded there.
    pub fn new(grid: FrequencyGrid, mut samples: Vec<CMat>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples for {} frequencies",
                samples.len(),
                grid.len()
            )));
        }
        let (rows, cols) = samples[0].shape();
        if let Some(m) = samples.iter().find(|m| m.shape() != (rows, cols)) {
            return Err(Error::Shape(format!("sample is {:?}, expected {:?}", m.shape(), (rows, cols))));
        }
        if grid.as_slice()[0] == 0.0 {
            let m = &mut samples[0];
            let imag = max_abs_imag(m);
            if imag > 1e-12 * max_abs(m).max(1.0) {
                return Err(Error::NotRealAtDc { imag });
            }
            m.iter_mut().for_each(|z| z.im = 0.0);
        }
        Ok(Self { grid, rows, cols, samples })
    }

    pub fn from_fn(grid: &FrequencyGrid, f: impl Fn(f64) -> CMat + Sync + Send) -> Result<Self> {
        let s = grid.as_slice().par_iter().map(|&w| f(w)).collect();
        Self::new(grid.clone(), s)
    }

    pub fn try_from_fn(grid: &FrequencyGrid, f: impl Fn(f64) -> Result<CMat> + Sync + Send) -> Result<Self> {
        let s = collect_per_frequency(grid, |_, w| f(w))?;
        Self::new(grid.clone(), s)
    }

    pub fn constant(grid: &FrequencyGrid, m: &CMat) -> Result<Self> {
        Self::new(grid.clone(), vec![m.clone(); grid.len()])
    }

    pub fn identity(grid: &FrequencyGrid, dim: usize) -> Self {
        Self::constant(grid, &CMat::identity(dim, dim)).expect("identity is real")
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of modes when square with even dimension.
    pub fn n_modes(&self) -> Result<usize> {
        if self.rows != self.cols || self.rows % 2 != 0 {
            return Err(Error::Shape(format!(
                "expected a square matrix of even size, found {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows / 2)
    }

    pub fn sample(&self, index: usize) -> &CMat {
        &self.samples[index]
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CMat> {
        self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &CMat)> {
        self.grid.iter().zip(self.samples.iter())
    }

    /// Sample at a signed grid frequency; negative frequencies are conjugated.
    pub fn eval(&self, omega: f64) -> Result<CMat> {
        let (k, neg) = self.grid.locate(omega).ok_or(Error::OffGrid(omega))?;
        Ok(if neg { self.samples[k].map(|z| z.conj()) } else { self.samples[k].clone() })
    }

    /// Sample at any `|omega| <= max(grid)`, linearly interpolated between
    /// grid points. The flag reports whether `omega` was on the grid.
    pub fn eval_interpolated(&self, omega: f64) -> Result<(CMat, bool)> {
        if let Ok(m) = self.eval(omega) {
            return Ok((m, true));
        }
        let a = omega.abs();
        let g = self.grid.as_slice();
        if a < g[0] || a > self.grid.max() {
            return Err(Error::OffGrid(omega));
        }
        let k = g.partition_point(|&w| w < a);
        let t = (a - g[k - 1]) / (g[k] - g[k - 1]);
        let m = self.samples[k - 1].scale(1.0 - t) + self.samples[k].scale(t);
        Ok((if omega < 0.0 { m.map(|z| z.conj()) } else { m }, false))
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat + Sync + Send) -> Result<Self> {
        Self::new(self.grid.clone(), self.samples.par_iter().map(f).collect())
    }

    /// Per-frequency map; failures at every frequency are collected.
    pub fn try_map(&self, f: impl Fn(usize, f64, &CMat) -> Result<CMat> + Sync + Send) -> Result<Self> {
        let s = collect_per_frequency(&self.grid, |k, w| f(k, w, &self.samples[k]))?;
        Self::new(self.grid.clone(), s)
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Grid("frequency grids differ".into()));
        }
        Ok(())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        if self.cols != other.rows {
            return Err(Error::Shape(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        Self::new(
            self.grid.clone(),
            self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect(),
        )
    }
}

/// Runs `f` at every grid frequency in parallel, keeping the grid order.
/// Failures are wrapped with their frequency; several failures are reported together.
pub fn collect_per_frequency<T: Send>(
    grid: &FrequencyGrid,
    f: impl Fn(usize, f64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = grid
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(k, &w)| f(k, w).map_err(|e| Error::at(k, w, e)))
        .collect();
    let mut ok = Vec::with_capacity(out.len());
    let mut bad = Vec::new();
    for r in out {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => bad.push(e),
        }
    }
    match bad.len() {
        0 => Ok(ok),
        1 => Err(bad.pop().unwrap()),
        _ => Err(Error::Frequencies(bad)),
    }
}
