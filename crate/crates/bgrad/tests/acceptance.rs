//! Acceptance battery: every criterion runs at its pinned reference
//! configuration and prints one pass/fail line.
//!
//! Heavy simulations that several criteria share (the torus1 reference run)
//! are computed once per process and reused.

use bgrad::harness;

fn run(name: &str, f: fn() -> Vec<harness::CheckResult>) {
    let start = std::time::Instant::now();
    let checks = f();
    let pass = checks.iter().all(|c| c.pass);
    println!(
        "{name} [{}] ({:.1}s)",
        if pass { "pass" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    for c in &checks {
        println!(
            "    {} [{}] value={:.6} oracle={:.6} tol={:.3e} {}",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.value,
            c.oracle,
            c.tolerance,
            c.note
        );
    }
    assert!(pass, "{name} failed");
}

#[test]
fn criterion_01_l2_contraction() {
    run("criterion 01 L2 contraction", harness::criterion_01_l2_contraction);
}

#[test]
fn criterion_02_flat_representation() {
    run("criterion 02 flat representation", harness::criterion_02_riesz_flat);
}

#[test]
fn criterion_03_representation_a3() {
    run("criterion 03 representation a>0", harness::criterion_03_riesz_a3);
}

#[test]
fn criterion_04_gaussian_case() {
    run("criterion 04 gaussian case", harness::criterion_04_riesz_gauss);
}

#[test]
fn criterion_05_quartic_correction() {
    run("criterion 05 quartic correction", harness::criterion_05_quartic_correction);
}

#[test]
fn criterion_06_sphere_transport() {
    run("criterion 06 sphere transport", harness::criterion_06_sphere);
}

#[test]
fn criterion_07_time_reversal() {
    run("criterion 07 time reversal", harness::criterion_07_time_reversal);
}

#[test]
fn criterion_08_littlewood_paley() {
    run("criterion 08 littlewood-paley", harness::criterion_08_littlewood_paley);
}

#[test]
fn criterion_09_ito_extension() {
    run("criterion 09 ito extension", harness::criterion_09_ito_extension);
}

#[test]
fn criterion_10_beurling_ahlfors() {
    run("criterion 10 beurling-ahlfors", harness::criterion_10_beurling_ahlfors);
}

#[test]
fn criterion_11_norm_bounds() {
    run("criterion 11 norm bounds", harness::criterion_11_norm_bounds);
}

#[test]
fn criterion_12_jy_and_t1() {
    run("criterion 12 jy and t1", harness::criterion_12_jy_t1);
}

#[test]
fn criterion_13_reproducibility() {
    run("criterion 13 reproducibility", harness::criterion_13_reproducibility);
}
