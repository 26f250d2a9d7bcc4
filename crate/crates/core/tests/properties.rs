use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlti::apps::{hidden_squeezing_metrics, lossy_squeezer_sdm};
use qlti::decompose::{decompose_matrix, optical_decomposition, circuit_eval, svd_sp, symplectic_spectral};
use qlti::detect::{homodyne_spectrum, photocurrent_spectrum, reconstruct_sdm, synodyne_q, DeltaLine, LocalOscillator};
use qlti::group::{
    from_ladder_matrix, generator_of, group_inverse, ladder_map, random_group_element, residual_matrix, symplectic_form,
    to_ladder_matrix,
};
use qlti::io::{from_json, to_json, MatfnDocument};
use qlti::linalg::{c, diag_real, eye, hermitian_eigen, max_abs_imag, unitary_residual, CMat, CVec, I};
use qlti::quantize::{dilate, minimal_noise};
use qlti::sdm::{core_matrix, transform_sdm, uncertainty_margin, williamson, SpectralDensityMatrix};
use qlti::{FrequencyGrid, MatrixFunction};

fn grid() -> FrequencyGrid {
    FrequencyGrid::linear(0.0, 2.0, 3).unwrap()
}

fn element(seed: u64, n: usize, mag: f64) -> MatrixFunction {
    random_group_element(&grid(), n, seed, mag).unwrap()
}

fn off_block_norm(a: &CMat) -> f64 {
    let n = a.nrows() / 2;
    a.view((0, n), (n, n)).norm() + a.view((n, 0), (n, n)).norm()
}

/// Physical SDM `M core M†` with random invariants; `Δ = 0` at `w = 0`.
fn random_sdm(seed: u64, n: usize) -> SpectralDensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let g = grid();
    let cores = g
        .iter()
        .map(|w| {
            let delta: Vec<f64> = (0..n).map(|_| if w == 0.0 { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
            let sigma: Vec<f64> = delta.iter().map(|d| 0.5 + d.abs() + rng.random_range(0.01..1.0)).collect();
            core_matrix(&sigma, &delta)
        })
        .collect();
    let s = SpectralDensityMatrix::new(MatrixFunction::new(g.clone(), cores).unwrap()).unwrap();
    transform_sdm(&random_group_element(&g, n, seed, 0.8).unwrap(), &s).unwrap()
}

fn sorted_pairs(sigma: &[f64], delta: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = sigma.iter().copied().zip(delta.iter().copied()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn group_laws(seed in any::<u64>(), n in 1usize..5, mag in 0.05f64..1.5) {
        let a = element(seed, n, mag);
        let b = element(seed.wrapping_add(1), n, mag);
        for k in 0..a.len() {
            let (x, y) = (a.sample(k), b.sample(k));
            prop_assert!(residual_matrix(&(x * y)).unwrap() < 1e-9);
            let inv = group_inverse(x).unwrap();
            prop_assert!(residual_matrix(&inv).unwrap() < 1e-9);
            prop_assert!((x * &inv - eye(2 * n)).norm() < 1e-9);
            prop_assert!((x.determinant().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reality_symmetry_preserved(seed in any::<u64>(), n in 1usize..4) {
        let a = element(seed, n, 0.7);
        let b = element(seed ^ 7, n, 0.7);
        let prod = a.mul(&b).unwrap();
        prop_assert_eq!(max_abs_imag(prod.sample(0)), 0.0);
        prop_assert!(max_abs_imag(&group_inverse(a.sample(0)).unwrap()) == 0.0);
        let back = from_ladder_matrix(&to_ladder_matrix(a.sample(0)).unwrap()).unwrap();
        prop_assert!(max_abs_imag(&back) < 1e-15);
        prop_assert!((prod.eval(-1.0).unwrap() - a.eval(-1.0).unwrap() * b.eval(-1.0).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn ladder_map_diagonalizes_form(n in 1usize..9) {
        let p = ladder_map(n);
        let d: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
        prop_assert!((p.adjoint() * symplectic_form(n) * I * &p - diag_real(&d)).norm() < 1e-15);
    }

    #[test]
    fn log_exp_roundtrip(seed in any::<u64>(), n in 1usize..4, mag in 0.05f64..1.0) {
        let m = element(seed, n, mag);
        let lam = generator_of(&m).unwrap();
        let back = lam.exp().unwrap();
        let j = symplectic_form(n);
        for k in 0..m.len() {
            prop_assert!((back.sample(k) - m.sample(k)).norm() < 1e-9 * m.sample(k).norm());
            let e = back.sample(k);
            prop_assert!((e * &j * e.adjoint() - &j).norm() < 1e-9);
        }
    }

    #[test]
    fn real_constant_gain_has_paired_noise(seed in any::<u64>(), m in 1usize..3, nin in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(2 * m, 2 * nin, |_, _| c(rng.random_range(-0.6..0.6), 0.0));
        let gf = MatrixFunction::constant(&grid(), &g).unwrap();
        let model = minimal_noise(&gf).unwrap();
        for info in &model.per_freq {
            prop_assert_eq!(info.d_plus, info.d_minus);
        }
    }

    #[test]
    fn dilation_recovers_blocks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(2, 4, |_, _| c(rng.random_range(-0.4..0.4), 0.0));
        let gf = MatrixFunction::constant(&grid(), &g).unwrap();
        let model = minimal_noise(&gf).unwrap();
        let d = dilate(&model).unwrap();
        prop_assert!(d.max_residual().unwrap() < 1e-9);
        prop_assert_eq!(d.g_block().unwrap(), gf);
        prop_assert_eq!(d.n_block().unwrap(), model.n);
    }

    #[test]
    fn gamma_depends_only_on_deficit(seed in any::<u64>(), x in 0.05f64..0.95) {
        // G and G V share the deficit when V is a group element.
        let g = MatrixFunction::constant(&grid(), &eye(2).scale(x.sqrt())).unwrap();
        let v = element(seed, 1, 0.6);
        let a = minimal_noise(&g).unwrap();
        let b = minimal_noise(&g.mul(&v).unwrap()).unwrap();
        for (p, q) in a.per_freq.iter().zip(&b.per_freq) {
            prop_assert_eq!(p.ell, q.ell);
            for (u, w) in p.gamma.iter().zip(&q.gamma) {
                prop_assert!((u - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectra_come_in_reciprocal_pairs(seed in any::<u64>(), n in 1usize..5) {
        let m = element(seed, n, 1.0);
        for s in m.samples() {
            let h = s.adjoint() * s;
            let sf = symplectic_spectral(&h).unwrap();
            let (mut ev, _) = hermitian_eigen(&h);
            let mut expect = sf.eigenvalues();
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip(&expect) {
                prop_assert!((a - b).abs() < 1e-9 * b.max(1.0));
            }
            let svd = svd_sp(s).unwrap();
            prop_assert!(svd.d.iter().all(|&d| d >= 1.0 - 1e-12));
        }
    }

    #[test]
    fn unitary_factors_are_passive(seed in any::<u64>(), n in 1usize..5) {
        let m = element(seed, n, 1.0);
        let f = decompose_matrix(m.sample(1)).unwrap();
        for u in [&f.v1, &f.w1, &f.w2, &f.v2] {
            prop_assert!(unitary_residual(u) < 1e-10);
            let d = qlti::decompose::doubled(u);
            prop_assert!(residual_matrix(&d).unwrap() < 1e-10);
            prop_assert!(off_block_norm(&to_ladder_matrix(&d).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn decomposition_is_deterministic(seed in any::<u64>(), n in 1usize..4) {
        let m = element(seed, n, 1.0);
        prop_assert_eq!(decompose_matrix(m.sample(2)).unwrap(), decompose_matrix(m.sample(2)).unwrap());
    }

    #[test]
    fn negative_frequency_reconstruction(seed in any::<u64>(), n in 1usize..4) {
        let m = element(seed, n, 1.0);
        let circ = optical_decomposition(&m).unwrap();
        for w in [-2.0, -1.0, 1.0] {
            let target = m.eval(w).unwrap();
            prop_assert!((circuit_eval(&circ, w).unwrap() - &target).norm() < 1e-8 * target.norm());
        }
    }

    #[test]
    fn williamson_invariance(seed in any::<u64>(), n in 1usize..4) {
        let s = random_sdm(seed, n);
        let base = williamson(&s).unwrap();
        let moved = williamson(&transform_sdm(&element(seed ^ 99, n, 1.0), &s).unwrap()).unwrap();
        for k in 0..s.grid().len() {
            let a = sorted_pairs(&base.sigma[k], &base.delta[k]);
            let b = sorted_pairs(&moved.sigma[k], &moved.delta[k]);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.0 - y.0).abs() < 1e-8 && (x.1 - y.1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn williamson_parity_and_dc(seed in any::<u64>(), n in 1usize..4) {
        let s = random_sdm(seed, n);
        let f = williamson(&s).unwrap();
        prop_assert!(f.delta[0].iter().all(|d| d.abs() < 1e-12));
        let (sp, dp) = f.invariants(1.0).unwrap();
        let (sm, dm) = f.invariants(-1.0).unwrap();
        prop_assert_eq!(sp, sm);
        prop_assert!(dp.iter().zip(&dm).all(|(a, b)| a == &-b));
        prop_assert_eq!(max_abs_imag(f.m.sample(0)), 0.0);
    }

    #[test]
    fn physicality_is_congruence_stable(seed in any::<u64>(), n in 1usize..4) {
        let s = random_sdm(seed, n);
        let t = transform_sdm(&element(seed ^ 3, n, 1.2), &s).unwrap();
        for w in [0.0, 1.0, -2.0] {
            prop_assert!(uncertainty_margin(&s, w).unwrap() >= -1e-10);
            prop_assert!(uncertainty_margin(&t, w).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn photocurrent_is_real(seed in any::<u64>(), n in 1usize..3, amp in 0.1f64..3.0) {
        let s = random_sdm(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = CVec::from_fn(2 * n, |_, _| c(rng.random_range(-amp..amp), 0.0));
        let lo = LocalOscillator::General { lines: vec![DeltaLine { offset: 0.0, weight: w }], sampled: None };
        prop_assert!(photocurrent_spectrum(&s, &lo, &[0.0, 1.0, -2.0]).is_ok());
    }

    #[test]
    fn homodyne_blind_to_imag_qp(seed in any::<u64>(), theta in 0.0f64..6.3, eps in 0.0f64..0.4) {
        let s = random_sdm(seed, 1);
        let bumped = s.data().try_map(|k, _, m| {
            let mut m = m.clone();
            if k > 0 {
                m[(0, 1)] += c(0.0, eps);
                m[(1, 0)] -= c(0.0, eps);
            }
            Ok(m)
        }).unwrap();
        // The perturbation can break physicality but not the Hermitian PSD check when small enough.
        if let Ok(t) = SpectralDensityMatrix::new(bumped) {
            for w in [1.0, 2.0] {
                let a = homodyne_spectrum(&s, theta, 1.3, w).unwrap();
                let b = homodyne_spectrum(&t, theta, 1.3, w).unwrap();
                prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn q_is_hermitian_form(seed in any::<u64>(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let s = random_sdm(seed, 1);
        let lam = c(re, im);
        let (a, b) = (c(0.3, -0.2), c(0.1, 0.9));
        let q1 = synodyne_q(&s, 1.0, a, b).unwrap();
        let q2 = synodyne_q(&s, 1.0, a * lam, b * lam).unwrap();
        prop_assert!((q2 - lam.norm_sqr() * q1).abs() < 1e-12 * q2.abs().max(1.0));
    }

    #[test]
    fn synodyne_tomography_is_exact(seed in any::<u64>()) {
        let s = random_sdm(seed, 1);
        let rec = reconstruct_sdm(|x, y| synodyne_q(&s, 2.0, x, y), 1.0).unwrap();
        prop_assert!((rec - s.eval(2.0).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn narrowband_two_tone_matches_q(sigma in 0.6f64..2.0, frac in -0.9f64..0.9, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let (w0, band) = (2.0, 0.5);
        let delta = frac * (sigma - 0.5);
        let g = FrequencyGrid::linear(0.0, 4.0, 401).unwrap();
        let data = MatrixFunction::from_fn(&g, |w| {
            if (w - w0).abs() <= band {
                core_matrix(&[sigma], &[delta])
            } else {
                core_matrix(&[1.0 + w], &[0.0])
            }
        })
        .unwrap();
        let s = SpectralDensityMatrix::new(data).unwrap();
        let (ap, am) = (c(re, im), c(0.4, -0.3));
        let lo = LocalOscillator::Synodyne { omega0: w0, alpha_plus: ap, alpha_minus: am };
        let (q, p) = qlti::detect::synodyne_quadratures(ap, am);
        let expect = synodyne_q(&s, w0, q, p).unwrap();
        let got = photocurrent_spectrum(&s, &lo, &[0.0, band / 100.0, -band / 100.0]).unwrap();
        for v in got.values {
            prop_assert!((v - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn lossy_output_physical(fp in 0.0f64..1.0, fm in 0.0f64..1.0, ph in -3.0f64..3.0, r in 0.0f64..3.0) {
        let sm = lossy_squeezer_sdm(c(fp, 0.0) * c(0.0, ph).exp(), c(fm, 0.0), r).unwrap();
        let d = sm + symplectic_form(1) * c(0.0, 0.5);
        prop_assert!(hermitian_eigen(&d).0[0] >= -1e-10 * d.norm().max(1.0));
    }

    #[test]
    fn detector_minima_match_eigenvalues(fp in 0.1f64..1.0, fm in 0.1f64..1.0, r in 0.0f64..2.0) {
        let sm = lossy_squeezer_sdm(c(fp, 0.0), c(fm, 0.0), r).unwrap();
        let metrics = hidden_squeezing_metrics(&sm).unwrap();
        let grid = FrequencyGrid::single(1.0).unwrap();
        let s = SpectralDensityMatrix::new(MatrixFunction::constant(&grid, &sm).unwrap()).unwrap();
        let homo = (0..2000)
            .map(|k| homodyne_spectrum(&s, std::f64::consts::PI * k as f64 / 2000.0, 1.0, 1.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(homo >= metrics.lambda_r - 1e-12);
        prop_assert!(homo - metrics.lambda_r < 1e-4 * sm.norm());
        let (_, v) = hermitian_eigen(&sm);
        let q = synodyne_q(&s, 1.0, v[(0, 0)], v[(1, 0)]).unwrap();
        prop_assert!((q - metrics.lambda_c).abs() < 1e-12 * sm.norm().max(1.0));
    }

    #[test]
    fn matfn_json_roundtrip(seed in any::<u64>(), n in 1usize..4) {
        let m = element(seed, n, 1.0);
        let back: MatfnDocument = from_json(&to_json(&MatfnDocument::new(&m, None)).unwrap()).unwrap();
        prop_assert_eq!(back.to_matfn().unwrap(), m);
    }
}
