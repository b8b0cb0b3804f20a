//! Mid-scale integration checks of the Monte Carlo pipelines against the
//! spectral oracles (reduced path counts; the full-scale battery lives in
//! the acceptance suite).

use bgrad::forms::{build_endomorphisms, CompositionOrder, HodgeKind};
use bgrad::geometry::ModelSpace;
use bgrad::representation::{
    ba_mc, compare_to_oracle, estimates_agree, riesz_mc, BaRunConfig, BaTaskSpec, OmegaAReading,
    RieszRunConfig, RieszTaskSpec,
};
use bgrad::spectral::{mode_index_fourier1, mode_index_fourier2, Basis, OneForm, Parity, ScalarField};

fn cos_x_field() -> ScalarField {
    let mut f = ScalarField::zeros(Basis::Fourier1 { cutoff: 4 });
    f.coeffs[mode_index_fourier1(1, Parity::Cos)] = 1.0;
    f
}

#[test]
fn riesz_torus_small_scale() {
    let space = ModelSpace::flat_torus(1).unwrap();
    let cfg = RieszRunConfig {
        space,
        y: 4.0,
        n_paths: 24_000,
        dt: 2e-3,
        seed: 2024,
        ceiling_offset: 4.0,
        bins_per_dim: 16,
    };
    let tasks = vec![
        RieszTaskSpec { label: "cos a0".into(), f: cos_x_field(), a: 0.0, reversed: true, track_jy: false },
        RieszTaskSpec { label: "cos a3".into(), f: cos_x_field(), a: 3.0, reversed: false, track_jy: false },
    ];
    let out = riesz_mc(&cfg, &tasks).unwrap();
    assert!(!out.invalid, "censoring rate {}", out.censor_rate);

    // a = 0: R_0 cos = -sin
    let cmp = compare_to_oracle(&out.tasks[0].forward, |p| [-p[0].sin(), 0.0]);
    assert!(
        cmp.sup_abs_err < 0.09 && cmp.worst_z.abs() < 4.5,
        "a=0: sup err {} worst z {}",
        cmp.sup_abs_err,
        cmp.worst_z
    );

    // a = 3: multiplier 1/sqrt(1+3) = 1/2
    let cmp3 = compare_to_oracle(&out.tasks[1].forward, |p| [-0.5 * p[0].sin(), 0.0]);
    assert!(
        cmp3.sup_abs_err < 0.09 && cmp3.worst_z.abs() < 4.5,
        "a=3: sup err {} worst z {}",
        cmp3.sup_abs_err,
        cmp3.worst_z
    );

    // reversed pipeline agrees with forward (family-wise band on the paired
    // difference is much tighter; here compare the two estimates directly)
    let rev = out.tasks[0].reversed.as_ref().unwrap();
    let (ok, worst) = estimates_agree(&out.tasks[0].forward, rev, 0.95);
    assert!(ok, "forward vs reversed worst |z| = {worst}");

    // association-order discrepancy between the variant evaluations stays at
    // rounding level
    assert!(out.tasks[0].variant_discrepancy < 1e-10);
}

#[test]
fn riesz_gauss_small_scale() {
    let space = ModelSpace::gaussian_ou(&[1.0]).unwrap();
    let basis = Basis::for_space(&space).unwrap();
    let mut h2 = ScalarField::zeros(basis);
    h2.coeffs[2] = 1.0;
    let cfg = RieszRunConfig {
        space,
        y: 4.0,
        n_paths: 24_000,
        dt: 2e-3,
        seed: 77,
        ceiling_offset: 4.0,
        bins_per_dim: 16,
    };
    let tasks = vec![RieszTaskSpec { label: "h2".into(), f: h2, a: 0.0, reversed: false, track_jy: false }];
    let out = riesz_mc(&cfg, &tasks).unwrap();
    // R_0 h2 = h1 = x
    let cmp = compare_to_oracle(&out.tasks[0].forward, |p| [p[0], 0.0]);
    assert!(
        cmp.worst_z.abs() < 4.5,
        "gauss h2: sup err {} worst z {}",
        cmp.sup_abs_err,
        cmp.worst_z
    );
}

#[test]
fn ba_torus2_small_scale() {
    let (_, _, b) = build_endomorphisms(2, 1, CompositionOrder::RightToLeft).unwrap();
    let cutoff = 4;
    let mut w_x = OneForm::zeros(Basis::Fourier2 { cutoff });
    w_x.comps[0][mode_index_fourier2(cutoff, [1, 0], Parity::Cos)] = 1.0;
    let mut w_y = OneForm::zeros(Basis::Fourier2 { cutoff });
    w_y.comps[0][mode_index_fourier2(cutoff, [0, 1], Parity::Cos)] = 1.0;
    let cfg = BaRunConfig {
        t_spectral: 3.0,
        n_paths: 60_000,
        dt: 2e-3,
        seed: 404,
        bins_per_dim: 8,
        omega_reading: OmegaAReading::HeatOnly,
    };
    let tasks = vec![
        BaTaskSpec { label: "cos(x)dx".into(), omega: w_x.clone(), a: 0.0, reversed: true },
        BaTaskSpec { label: "cos(y)dx".into(), omega: w_y.clone(), a: 0.0, reversed: false },
    ];
    let out = ba_mc(&cfg, &b, &tasks).unwrap();

    // S_B(cos(x)dx) = -cos(x)dx
    let sb_x = bgrad::forms::hodge_oracle(&w_x, HodgeKind::SB, 0.0).unwrap();
    let cmp = compare_to_oracle(&out.tasks[0].forward, |p| sb_x.eval(p));
    assert!(
        cmp.worst_z.abs() < 4.5,
        "S_B cos(x)dx: sup err {} worst z {} (unmasked {})",
        cmp.sup_abs_err,
        cmp.worst_z,
        cmp.unmasked
    );

    // S_B(cos(y)dx) = +cos(y)dx
    let sb_y = bgrad::forms::hodge_oracle(&w_y, HodgeKind::SB, 0.0).unwrap();
    let cmp_y = compare_to_oracle(&out.tasks[1].forward, |p| sb_y.eval(p));
    assert!(
        cmp_y.worst_z.abs() < 4.5,
        "S_B cos(y)dx: sup err {} worst z {}",
        cmp_y.sup_abs_err,
        cmp_y.worst_z
    );

    // reversed agrees with forward
    let rev = out.tasks[0].reversed.as_ref().unwrap();
    let (ok, worst) = estimates_agree(&out.tasks[0].forward, rev, 0.95);
    assert!(ok, "BA forward vs reversed worst |z| = {worst}");
}
