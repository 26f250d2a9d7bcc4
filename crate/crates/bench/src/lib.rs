//! Deterministic inputs shared by the benchmarks.

use qlti::group::random_group_element;
use qlti::linalg::CMat;
use qlti::quantize::scaled_identity;
use qlti::sdm::{transform_sdm, vacuum_sdm, SpectralDensityMatrix};
use qlti::{FrequencyGrid, MatrixFunction};

pub fn grid(points: usize) -> FrequencyGrid {
    FrequencyGrid::linear(0.0, 3.0, points).expect("valid grid")
}

/// One `2n x 2n` group element at a positive frequency.
pub fn element(n: usize, seed: u64) -> CMat {
    let g = FrequencyGrid::single(0.7).expect("valid grid");
    random_group_element(&g, n, seed, 1.0).expect("group element").into_samples().remove(0)
}

pub fn elements(n: usize, points: usize, seed: u64) -> MatrixFunction {
    random_group_element(&grid(points), n, seed, 1.0).expect("group element")
}

/// Squeezed-then-mixed vacuum, physical by construction.
pub fn sdm(n: usize, points: usize, seed: u64) -> SpectralDensityMatrix {
    let g = grid(points);
    transform_sdm(&elements(n, points, seed), &vacuum_sdm(n, &g)).expect("sdm")
}

/// Attenuator by `eta` on `n` modes.
pub fn loss(n: usize, points: usize, eta: f64) -> MatrixFunction {
    scaled_identity(&grid(points), n, eta).expect("loss")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_shapes() {
        assert_eq!(element(3, 1).shape(), (6, 6));
        assert_eq!(sdm(2, 4, 1).grid().len(), 4);
        assert_eq!(loss(2, 4, 0.5).sample(0).shape(), (4, 4));
    }
}
