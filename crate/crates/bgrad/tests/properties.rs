//! Property tests for the spectral invariants.

use bgrad::forms::{hodge_oracle, HodgeKind};
use bgrad::geometry::ModelSpace;
use bgrad::representation::{condition_on_exit, BinGrid, EstimateMeta};
use bgrad::spectral::{Basis, OneForm, ScalarField};
use proptest::prelude::*;
use std::sync::Arc;

fn torus_field(coeffs: Vec<f64>) -> ScalarField {
    let basis = Basis::Fourier1 { cutoff: 6 };
    let n = basis.modes().len();
    let mut padded = coeffs;
    padded.resize(n, 0.0);
    ScalarField::from_coeffs(basis, padded)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poisson_semigroup_law(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 13),
        a in 0.0f64..3.0,
        y1 in 0.0f64..2.0,
        y2 in 0.0f64..2.0,
    ) {
        let f = torus_field(coeffs);
        let once = f.poisson_extend(a, y1 + y2);
        let twice = f.poisson_extend(a, y1).poisson_extend(a, y2);
        for (u, v) in once.coeffs.iter().zip(&twice.coeffs) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn riesz_is_an_l2_contraction(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 13),
        a in 0.0f64..4.0,
    ) {
        let mut f = torus_field(coeffs);
        f.coeffs[0] = 0.0; // zero-mean complement
        let r = f.riesz_oracle(a).unwrap();
        prop_assert!(r.l2_norm_sq() <= f.l2_norm_sq() + 1e-12);
    }

    #[test]
    fn sb_involution_on_harmonic_free_forms(
        c0 in proptest::collection::vec(-1.0f64..1.0, 8),
        c1 in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let basis = Basis::Fourier2 { cutoff: 2 };
        let mut w = OneForm::zeros(basis.clone());
        let modes = basis.modes();
        let mut k0 = 0;
        let mut k1 = 0;
        for (j, m) in modes.iter().enumerate() {
            if basis.lambda(m) > 0.0 {
                if k0 < c0.len() {
                    w.comps[0][j] = c0[k0];
                    k0 += 1;
                }
                if k1 < c1.len() {
                    w.comps[1][j] = c1[k1];
                    k1 += 1;
                }
            }
        }
        let twice = hodge_oracle(&hodge_oracle(&w, HodgeKind::SB, 0.0).unwrap(), HodgeKind::SB, 0.0).unwrap();
        prop_assert!(twice.max_coeff_distance(&w) < 1e-12);
    }

    #[test]
    fn bin_means_recombine_to_global_mean(
        values in proptest::collection::vec((0usize..8, -5.0f64..5.0), 1..200),
    ) {
        let space = ModelSpace::flat_torus(1).unwrap();
        let grid = Arc::new(BinGrid::for_space(&space, 8).unwrap());
        let payoffs: Vec<_> = values.iter().map(|(b, v)| (Some(*b), [*v, 0.0], false)).collect();
        let est = condition_on_exit(payoffs, grid, 1, 1.0, EstimateMeta::default());
        let total: u64 = est.bins.iter().map(|b| b.count).sum();
        prop_assert_eq!(total as usize, values.len());
        let recombined: f64 = est
            .bins
            .iter()
            .map(|b| b.count as f64 * b.mean[0])
            .sum::<f64>()
            / total as f64;
        let global: f64 = values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64;
        prop_assert!((recombined - global).abs() < 1e-10);
    }
}
