//! `L^p` machinery: norms under the stationary measure, the explicit bound
//! formulas with their constants, the exit-time constant `‖T₁‖_p`, the
//! quadratic functional `J_y`, and the empirical operator-norm search.

use crate::exec::map_indexed;
use crate::forms::{hodge_oracle, HodgeKind};
use crate::geometry::{ModelSpace, SpaceKind};
use crate::numerics::RunningStats;
use crate::rng::substream;
use crate::spectral::{mu_quadrature, Basis, Mode, OneForm, Parity};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// `p* = max{p, p/(p-1)}`.
pub fn p_star(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Config(format!("p = {p} outside (1, ∞)")));
    }
    Ok(p.max(p / (p - 1.0)))
}

/// `B_p` from the quadratic-functional estimate: `(2p)^{1/2}(p-1)^{-3/2}`
/// for `p < 2`, `1` at `p = 2`, `p/√(2(p-2))` for `p > 2`.
pub fn b_p(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Config(format!("p = {p} outside (1, ∞)")));
    }
    Ok(if p < 2.0 {
        (2.0 * p).sqrt() * (p - 1.0).powf(-1.5)
    } else if p == 2.0 {
        1.0
    } else {
        p / (2.0 * (p - 2.0)).sqrt()
    })
}

/// The subordination factor `3√(p(2p-1))` for non-adapted terminal factors.
pub fn subordination_factor(p: f64) -> f64 {
    3.0 * (p * (2.0 * p - 1.0)).sqrt()
}

/// `L^p(μ)` norm of a pointwise field by quadrature on the space's grid
/// (trapezoid with measure weights on lines, uniform on tori, area-weighted
/// cells on the sphere).
pub fn lp_norm(space: &ModelSpace, p: f64, f: impl Fn(&[f64; 3]) -> f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Config(format!("p = {p} below 1")));
    }
    let basis = Basis::for_space(space)?;
    let (nodes, weights) = mu_quadrature(&basis);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        acc += w * f(x).abs().powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// `L^p` norm of a binned field estimate (bin masses from the grid's
/// μ-quadrature, masked bins skipped).
pub fn lp_norm_estimate(est: &crate::representation::FieldEstimate, p: f64) -> f64 {
    let mut acc = 0.0;
    let mut mass = 0.0;
    let n = est.grid.count();
    for (b, stat) in est.bins.iter().enumerate() {
        if stat.masked() {
            continue;
        }
        // Equal-mass line bins; uniform torus bins; sphere cells weighted by
        // area fraction.
        let w = match &est.grid.kind {
            crate::representation::BinKind::Sphere { n_theta, n_phi } => {
                let it = b / n_phi;
                let t0 = it as f64 * std::f64::consts::PI / *n_theta as f64;
                let t1 = (it + 1) as f64 * std::f64::consts::PI / *n_theta as f64;
                (t0.cos() - t1.cos()) / 2.0 / *n_phi as f64
            }
            _ => 1.0 / n as f64,
        };
        let mag = (stat.mean[0] * stat.mean[0] + stat.mean[1] * stat.mean[1]).sqrt();
        acc += w * mag.powf(p);
        mass += w;
    }
    if mass > 0.0 {
        (acc / mass).powf(1.0 / p)
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Bound formulas
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundRegime {
    /// `‖∇(a−L)^{-1/2}f‖₂ ≤ ‖f‖₂`.
    L2,
    /// Flat curvature (`Ric + ∇²φ ≡ 0`): `2(p*−1)`.
    Flat,
    /// Constant negative curvature: `2(p*−1)(1 + 4‖T₁‖_p)`.
    ConstantNegative,
    /// General lower-bounded curvature: the explicit proof branches
    /// `12√6 (p−1)^{-3/2}` for `p < 2` and
    /// `3√2 p^{3/2}(2p−1)^{1/2}(p−2)^{-1/2}` for `p > 2`.
    General,
    /// Beurling–Ahlfors, flat Weitzenböck term: `2(p*−1)‖B‖_op`.
    BaFlat,
    /// Beurling–Ahlfors, lower-bounded Weitzenböck: `6√6 (p*−1)^{3/2}‖B‖_op`.
    BaGeneral,
    /// Bellman-function comparison value `12(p*−1)` (reported only).
    ComparisonCd,
}

impl BoundRegime {
    pub fn name(&self) -> &'static str {
        match self {
            BoundRegime::L2 => "L2",
            BoundRegime::Flat => "flat",
            BoundRegime::ConstantNegative => "constant-negative",
            BoundRegime::General => "general",
            BoundRegime::BaFlat => "BA-flat",
            BoundRegime::BaGeneral => "BA-general",
            BoundRegime::ComparisonCd => "comparison-CD",
        }
    }
}

/// Extra inputs some regimes need.
#[derive(Clone, Copy, Debug, Default)]
pub struct BoundInputs {
    /// `‖T₁‖_p` for the constant-negative regime.
    pub t1_norm: Option<f64>,
    /// `‖B‖_op` (or `‖A_i‖_op`) for the BA regimes.
    pub b_op: Option<f64>,
}

/// A bound value with the constants that produced it.
#[derive(Clone, Debug)]
pub struct NormBound {
    pub regime: BoundRegime,
    pub p: f64,
    pub p_star: f64,
    pub value: f64,
    pub constants: Vec<(String, f64)>,
}

pub fn bound_value(regime: BoundRegime, p: f64, inputs: &BoundInputs) -> Result<NormBound> {
    let ps = p_star(p)?;
    let mut constants = Vec::new();
    let value = match regime {
        BoundRegime::L2 => 1.0,
        BoundRegime::Flat => 2.0 * (ps - 1.0),
        BoundRegime::ConstantNegative => {
            let t1 = inputs.t1_norm.ok_or_else(|| {
                Error::Config("constant-negative regime needs ‖T₁‖_p".into())
            })?;
            constants.push(("t1_norm".into(), t1));
            2.0 * (ps - 1.0) * (1.0 + 4.0 * t1)
        }
        BoundRegime::General => {
            if p < 2.0 {
                constants.push(("branch".into(), -1.0));
                12.0 * 6.0f64.sqrt() * (p - 1.0).powf(-1.5)
            } else if p > 2.0 {
                constants.push(("branch".into(), 1.0));
                3.0 * 2.0f64.sqrt() * p.powf(1.5) * (2.0 * p - 1.0).sqrt() / (p - 2.0).sqrt()
            } else {
                return Err(Error::Config(
                    "p = 2 excluded from the general-regime proof branches".into(),
                ));
            }
        }
        BoundRegime::BaFlat => {
            let b = inputs.b_op.ok_or_else(|| Error::Config("BA regime needs ‖B‖_op".into()))?;
            constants.push(("b_op".into(), b));
            2.0 * (ps - 1.0) * b
        }
        BoundRegime::BaGeneral => {
            let b = inputs.b_op.ok_or_else(|| Error::Config("BA regime needs ‖B‖_op".into()))?;
            constants.push(("b_op".into(), b));
            6.0 * 6.0f64.sqrt() * (ps - 1.0).powf(1.5) * b
        }
        BoundRegime::ComparisonCd => 12.0 * (ps - 1.0),
    };
    Ok(NormBound { regime, p, p_star: ps, value, constants })
}

// ---------------------------------------------------------------------------
// Exit time of 3-d Brownian motion from the unit ball
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ExitTimeEstimate {
    pub p: f64,
    /// `‖T₁‖_p = E[T₁^p]^{1/p}`.
    pub norm: f64,
    /// Delta-method standard error of the norm.
    pub stderr: f64,
    pub moment: f64,
    pub moment_stderr: f64,
}

/// Monte Carlo `‖T₁‖_p` for standard 3-d Brownian motion started at radius
/// `r0`, with bridge-corrected boundary detection.
pub fn exit_time_t1_norm(
    p_list: &[f64],
    r0: f64,
    n_paths: u64,
    dt: f64,
    seed: u64,
) -> Vec<ExitTimeEstimate> {
    let taus = map_indexed(n_paths, |i| {
        let mut rng = substream(seed, i);
        let sdt = dt.sqrt();
        let mut x = [r0, 0.0, 0.0];
        let mut t = 0.0;
        loop {
            let d_pre = 1.0 - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            for xi in x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *xi += sdt * z;
            }
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r >= 1.0 {
                // crossed: linear interpolation of the exit time
                let d_post = r - 1.0;
                let frac = d_pre / (d_pre + d_post).max(1e-300);
                return t + frac * dt;
            }
            let d_post = 1.0 - r;
            // half-space bridge correction against the sphere
            if 2.0 * d_pre * d_post < 18.0 * dt {
                let u: f64 = rng.gen();
                let p_hit = (-2.0 * d_pre * d_post / dt).exp();
                if u < p_hit {
                    return t + (u / p_hit) * dt;
                }
            }
            t += dt;
        }
    });
    p_list
        .iter()
        .map(|&p| {
            let mut stats = RunningStats::default();
            for tau in &taus {
                stats.push(tau.powf(p));
            }
            let m = stats.mean();
            let se = stats.stderr();
            let norm = m.powf(1.0 / p);
            ExitTimeEstimate {
                p,
                norm,
                stderr: norm / (p * m) * se,
                moment: m,
                moment_stderr: se,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Empirical operator-norm lower bound (nonlinear dual power iteration)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SearchOperator {
    Riesz { a: f64 },
    BeurlingAhlfors,
}

#[derive(Clone, Debug)]
pub struct NormSearchConfig {
    pub space: ModelSpace,
    pub operator: SearchOperator,
    pub p: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub cutoff: usize,
    pub seed: u64,
}

impl NormSearchConfig {
    pub fn new(space: ModelSpace, operator: SearchOperator, p: f64, seed: u64) -> Self {
        Self { space, operator, p, iterations: 200, restarts: 16, cutoff: 16, seed }
    }
}

/// Result of the empirical norm search together with the applicable bounds.
#[derive(Clone, Debug)]
pub struct NormReport {
    pub operator: String,
    pub space: String,
    pub p: f64,
    pub empirical: f64,
    pub bounds: Vec<NormBound>,
    /// Empirical value below every applicable bound.
    pub pass: bool,
    pub converged: bool,
    /// Best ratio per restart.
    pub trace: Vec<f64>,
}

/// Maximise `‖Op f‖_p / ‖f‖_p` over the band-limited family by the
/// nonlinear dual power iteration: apply the operator, take the signed
/// `(p−1)`-power dual, apply the adjoint multiplier, dualise back and
/// renormalise. All applications go through the spectral oracle, so the
/// ratio is noise-free.
pub fn operator_norm_lower_bound(cfg: &NormSearchConfig, bounds: Vec<NormBound>) -> Result<NormReport> {
    if !(cfg.p > 1.0) {
        return Err(Error::Config(format!("p = {} outside (1, ∞)", cfg.p)));
    }
    let (empirical, converged, trace) = match (&cfg.space.kind, cfg.operator) {
        (SpaceKind::FlatTorus { dim: 1 }, SearchOperator::Riesz { a }) => {
            if cfg.cutoff > 64 {
                search_fourier1_fft(cfg, a)?
            } else {
                search_fourier1(cfg, a)?
            }
        }
        (SpaceKind::GaussianOu { a_diag }, SearchOperator::Riesz { a }) if a_diag.len() == 1 => {
            search_hermite1(cfg, a, a_diag[0])?
        }
        (SpaceKind::FlatTorus { dim: 2 }, SearchOperator::BeurlingAhlfors) => search_sb(cfg)?,
        _ => {
            return Err(Error::Config(format!(
                "norm search not supported for {} on {}",
                match cfg.operator {
                    SearchOperator::Riesz { .. } => "riesz",
                    SearchOperator::BeurlingAhlfors => "S_B",
                },
                cfg.space.key()
            )))
        }
    };
    let pass = bounds.iter().all(|b| empirical <= b.value + 1e-9);
    Ok(NormReport {
        operator: match cfg.operator {
            SearchOperator::Riesz { a } => format!("riesz(a={a})"),
            SearchOperator::BeurlingAhlfors => "S_B".to_string(),
        },
        space: cfg.space.key().to_string(),
        p: cfg.p,
        empirical,
        bounds,
        pass,
        converged,
        trace,
    })
}

fn signed_power(v: f64, e: f64) -> f64 {
    v.signum() * v.abs().powf(e)
}

/// Shared Boyd-style iteration over grid values.
///
/// `apply` maps function coefficients to operator-output values on the grid;
/// `adjoint` maps dual values on the grid back to function coefficients.
struct GridSearch<'a> {
    nodes_w: &'a [f64],
    p: f64,
}

impl GridSearch<'_> {
    fn lp(&self, vals: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (v, w) in vals.iter().zip(self.nodes_w) {
            acc += w * v.abs().powf(self.p);
        }
        acc.powf(1.0 / self.p)
    }

    fn lp_vec2(&self, vals: &[[f64; 2]]) -> f64 {
        let mut acc = 0.0;
        for (v, w) in vals.iter().zip(self.nodes_w) {
            acc += w * (v[0] * v[0] + v[1] * v[1]).sqrt().powf(self.p);
        }
        acc.powf(1.0 / self.p)
    }
}

fn search_fourier1(cfg: &NormSearchConfig, a: f64) -> Result<(f64, bool, Vec<f64>)> {
    let cutoff = cfg.cutoff as i64;
    let n_grid = 8 * cfg.cutoff.max(8);
    let nodes: Vec<f64> = (0..n_grid)
        .map(|i| crate::geometry::TWO_PI * i as f64 / n_grid as f64)
        .collect();
    let weights = vec![1.0 / n_grid as f64; n_grid];
    // mode-value table (canonical Fourier1 ordering)
    let basis = Basis::Fourier1 { cutoff };
    let modes = basis.modes();
    let table: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| nodes.iter().map(|&x| basis.eval_mode(m, &[x, 0.0, 0.0])).collect())
        .collect();
    let search = GridSearch { nodes_w: &weights, p: cfg.p };
    let q = cfg.p / (cfg.p - 1.0);
    let mut best = 0.0f64;
    let mut converged = false;
    let mut trace = Vec::new();
    for restart in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, restart as u64);
        let mut coeffs: Vec<f64> = (0..modes.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        coeffs[0] = 0.0;
        let mut last_ratio = 0.0f64;
        let mut restart_best = 0.0f64;
        for it in 0..cfg.iterations {
            // normalise x in Lp
            let x_vals = synth(&table, &coeffs, n_grid);
            let nx = search.lp(&x_vals);
            if nx == 0.0 {
                break;
            }
            for c in coeffs.iter_mut() {
                *c /= nx;
            }
            // g = R_a x (single component on the 1-torus)
            let g_coeffs = riesz1_coeffs(&coeffs, cutoff, a);
            let g_vals = synth(&table, &g_coeffs, n_grid);
            let ratio = search.lp(&g_vals);
            restart_best = restart_best.max(ratio);
            // dual u = |g|^{p-1} sgn g, back to coefficients
            let u_vals: Vec<f64> = g_vals.iter().map(|&v| signed_power(v, cfg.p - 1.0)).collect();
            let u_coeffs = analyze_grid(&table, &weights, &u_vals, &basis, &modes);
            // adjoint
            let z_coeffs = riesz1_adjoint_coeffs(&u_coeffs, cutoff, a);
            let z_vals = synth(&table, &z_coeffs, n_grid);
            let xn_vals: Vec<f64> = z_vals.iter().map(|&v| signed_power(v, q - 1.0)).collect();
            let mut xn = analyze_grid(&table, &weights, &xn_vals, &basis, &modes);
            xn[0] = 0.0;
            coeffs = xn;
            if it > 4 && (ratio - last_ratio).abs() < 1e-10 * (1.0 + ratio) {
                converged = true;
                last_ratio = ratio;
                break;
            }
            last_ratio = ratio;
        }
        let _ = last_ratio;
        trace.push(restart_best);
        best = best.max(restart_best);
    }
    Ok((best, converged, trace))
}

fn synth(table: &[Vec<f64>], coeffs: &[f64], n_grid: usize) -> Vec<f64> {
    let mut vals = vec![0.0; n_grid];
    for (c, row) in coeffs.iter().zip(table) {
        if *c != 0.0 {
            for (v, t) in vals.iter_mut().zip(row) {
                *v += c * t;
            }
        }
    }
    vals
}

fn analyze_grid(
    table: &[Vec<f64>],
    weights: &[f64],
    vals: &[f64],
    basis: &Basis,
    modes: &[Mode],
) -> Vec<f64> {
    let mut coeffs = vec![0.0; modes.len()];
    for (j, row) in table.iter().enumerate() {
        let mut acc = 0.0;
        for ((v, t), w) in vals.iter().zip(row).zip(weights) {
            acc += v * t * w;
        }
        coeffs[j] = acc / basis.mode_norm_sq(&modes[j]);
    }
    coeffs
}

/// Riesz multiplier on real Fourier1 coefficients (single output component).
fn riesz1_coeffs(coeffs: &[f64], cutoff: i64, a: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    for k in 1..=cutoff {
        let kf = k as f64;
        let s = kf / (a + kf * kf).sqrt();
        let ic = crate::spectral::mode_index_fourier1(k, Parity::Cos);
        let is = crate::spectral::mode_index_fourier1(k, Parity::Sin);
        // d/dx then (a+λ)^{-1/2}: cos -> -s·sin, sin -> +s·cos
        out[is] += -s * coeffs[ic];
        out[ic] += s * coeffs[is];
    }
    out
}

fn riesz1_adjoint_coeffs(coeffs: &[f64], cutoff: i64, a: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    for k in 1..=cutoff {
        let kf = k as f64;
        let s = kf / (a + kf * kf).sqrt();
        let ic = crate::spectral::mode_index_fourier1(k, Parity::Cos);
        let is = crate::spectral::mode_index_fourier1(k, Parity::Sin);
        out[ic] += -s * coeffs[is];
        out[is] += s * coeffs[ic];
    }
    out
}

/// FFT-backed torus search for large cutoffs. The slow decay of the
/// conjugate-function extremizers makes the band-limited supremum converge
/// only logarithmically in the cutoff, so hitting the quality floor at
/// `p = 3` needs a few thousand modes.
fn search_fourier1_fft(cfg: &NormSearchConfig, a: f64) -> Result<(f64, bool, Vec<f64>)> {
    use rustfft::num_complex::Complex64;
    let cutoff = cfg.cutoff;
    let n = 4 * cutoff;
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let q = cfg.p / (cfg.p - 1.0);
    // signed frequency of bin j
    let freq = |j: usize| -> f64 {
        if j <= n / 2 { j as f64 } else { j as f64 - n as f64 }
    };
    let lp = |vals: &[Complex64], p: f64| -> f64 {
        (vals.iter().map(|v| v.re.abs().powf(p)).sum::<f64>() / n as f64).powf(1.0 / p)
    };
    let band_project = |spec: &mut [Complex64]| {
        for (j, v) in spec.iter_mut().enumerate() {
            let k = freq(j).abs();
            if k > cutoff as f64 || k == 0.0 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    };
    let mut best = 0.0f64;
    let mut converged = false;
    let mut trace = Vec::new();
    for restart in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, restart as u64);
        // random band-limited start in value space
        let mut spec: Vec<Complex64> = (0..n)
            .map(|j| {
                let k = freq(j).abs();
                if k > 0.0 && k <= cutoff as f64 {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        // enforce real field: spec[-k] = conj(spec[k])
        for j in 1..n / 2 {
            spec[n - j] = spec[j].conj();
        }
        spec[n / 2] = Complex64::new(spec[n / 2].re, 0.0);
        let mut last_ratio = 0.0f64;
        let mut restart_best = 0.0f64;
        for it in 0..cfg.iterations {
            // x values
            let mut x_vals = spec.clone();
            inv.process(&mut x_vals);
            for v in x_vals.iter_mut() {
                *v /= n as f64;
            }
            let nx = lp(&x_vals, cfg.p);
            if nx == 0.0 {
                break;
            }
            for v in spec.iter_mut() {
                *v /= nx;
            }
            // g = R_a x
            let mut g_spec = spec.clone();
            for (j, v) in g_spec.iter_mut().enumerate() {
                let k = freq(j);
                if k != 0.0 {
                    *v *= Complex64::new(0.0, k / (a + k * k).sqrt());
                }
            }
            let mut g_vals = g_spec;
            inv.process(&mut g_vals);
            for v in g_vals.iter_mut() {
                *v /= n as f64;
            }
            let ratio = lp(&g_vals, cfg.p);
            restart_best = restart_best.max(ratio);
            // dual, analyse, adjoint, dual back
            let mut u_vals: Vec<Complex64> = g_vals
                .iter()
                .map(|v| Complex64::new(signed_power(v.re, cfg.p - 1.0), 0.0))
                .collect();
            fwd.process(&mut u_vals);
            band_project(&mut u_vals);
            for (j, v) in u_vals.iter_mut().enumerate() {
                let k = freq(j);
                if k != 0.0 {
                    *v *= Complex64::new(0.0, -k / (a + k * k).sqrt());
                }
            }
            let mut z_vals = u_vals;
            inv.process(&mut z_vals);
            for v in z_vals.iter_mut() {
                *v /= n as f64;
            }
            let mut xn: Vec<Complex64> = z_vals
                .iter()
                .map(|v| Complex64::new(signed_power(v.re, q - 1.0), 0.0))
                .collect();
            fwd.process(&mut xn);
            band_project(&mut xn);
            spec = xn;
            if it > 4 && (ratio - last_ratio).abs() < 1e-10 * (1.0 + ratio) {
                converged = true;
                last_ratio = ratio;
                break;
            }
            last_ratio = ratio;
        }
        let _ = last_ratio;
        trace.push(restart_best);
        best = best.max(restart_best);
    }
    Ok((best, converged, trace))
}

fn search_hermite1(cfg: &NormSearchConfig, a: f64, alpha: f64) -> Result<(f64, bool, Vec<f64>)> {
    let cutoff = cfg.cutoff;
    let basis = Basis::Hermite { a_diag: vec![alpha], cutoff };
    let modes = basis.modes();
    let (nodes3, weights) = mu_quadrature(&basis);
    let n_grid = nodes3.len();
    let table: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| nodes3.iter().map(|x| basis.eval_mode(m, x)).collect())
        .collect();
    let search = GridSearch { nodes_w: &weights, p: cfg.p };
    let q = cfg.p / (cfg.p - 1.0);
    let mut best = 0.0f64;
    let mut converged = false;
    let mut trace = Vec::new();
    for restart in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, restart as u64);
        let mut coeffs: Vec<f64> = (0..modes.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        coeffs[0] = 0.0;
        let mut last_ratio = 0.0f64;
        let mut restart_best = 0.0f64;
        for it in 0..cfg.iterations {
            let x_vals = synth(&table, &coeffs, n_grid);
            let nx = search.lp(&x_vals);
            if nx == 0.0 {
                break;
            }
            for c in coeffs.iter_mut() {
                *c /= nx;
            }
            // R_a: c_n -> sqrt(alpha n / (a + alpha n)) c_n at degree n-1
            let mut g = vec![0.0; coeffs.len()];
            for n in 1..=cutoff {
                let lam = alpha * n as f64;
                g[n - 1] += (lam / (a + lam)).sqrt() * coeffs[n];
            }
            let g_vals = synth(&table, &g, n_grid);
            let ratio = search.lp(&g_vals);
            restart_best = restart_best.max(ratio);
            let u_vals: Vec<f64> = g_vals.iter().map(|&v| signed_power(v, cfg.p - 1.0)).collect();
            let u = analyze_grid(&table, &weights, &u_vals, &basis, &modes);
            // adjoint: (R* u)_n = sqrt(lam/(a+lam)) u_{n-1}
            let mut z = vec![0.0; coeffs.len()];
            for n in 1..=cutoff {
                let lam = alpha * n as f64;
                z[n] += (lam / (a + lam)).sqrt() * u[n - 1];
            }
            let z_vals = synth(&table, &z, n_grid);
            let xn_vals: Vec<f64> = z_vals.iter().map(|&v| signed_power(v, q - 1.0)).collect();
            let mut xn = analyze_grid(&table, &weights, &xn_vals, &basis, &modes);
            xn[0] = 0.0;
            coeffs = xn;
            if it > 4 && (ratio - last_ratio).abs() < 1e-10 * (1.0 + ratio) {
                converged = true;
                last_ratio = ratio;
                break;
            }
            last_ratio = ratio;
        }
        let _ = last_ratio;
        trace.push(restart_best);
        best = best.max(restart_best);
    }
    Ok((best, converged, trace))
}

fn search_sb(cfg: &NormSearchConfig) -> Result<(f64, bool, Vec<f64>)> {
    // S_B is self-adjoint; iterate on two-component forms over a torus2 grid.
    let cutoff = (cfg.cutoff as i64).min(8);
    let basis = Basis::Fourier2 { cutoff };
    let modes = basis.modes();
    let n1 = 4 * cutoff as usize + 4;
    let mut nodes = Vec::with_capacity(n1 * n1);
    for i in 0..n1 {
        for j in 0..n1 {
            nodes.push([
                crate::geometry::TWO_PI * i as f64 / n1 as f64,
                crate::geometry::TWO_PI * j as f64 / n1 as f64,
                0.0,
            ]);
        }
    }
    let weights = vec![1.0 / (n1 * n1) as f64; n1 * n1];
    let table: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| nodes.iter().map(|x| basis.eval_mode(m, x)).collect())
        .collect();
    let search = GridSearch { nodes_w: &weights, p: cfg.p };
    let q = cfg.p / (cfg.p - 1.0);
    let mut best = 0.0f64;
    let mut converged = false;
    let mut trace = Vec::new();
    for restart in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, restart as u64);
        let mut form = OneForm::zeros(basis.clone());
        for c in 0..2 {
            for (j, m) in modes.iter().enumerate() {
                if basis.lambda(m) > 0.0 {
                    form.comps[c][j] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let mut last_ratio = 0.0f64;
        let mut restart_best = 0.0f64;
        for it in 0..cfg.iterations {
            let x_vals = synth2(&table, &form);
            let nx = search.lp_vec2(&x_vals);
            if nx == 0.0 {
                break;
            }
            for c in 0..2 {
                for v in form.comps[c].iter_mut() {
                    *v /= nx;
                }
            }
            let g = hodge_oracle(&form, HodgeKind::SB, 0.0)?;
            let g_vals = synth2(&table, &g);
            let ratio = search.lp_vec2(&g_vals);
            restart_best = restart_best.max(ratio);
            // vector dual |g|^{p-2} g
            let u_vals: Vec<[f64; 2]> = g_vals
                .iter()
                .map(|v| {
                    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
                    if norm < 1e-300 {
                        [0.0, 0.0]
                    } else {
                        let f = norm.powf(cfg.p - 2.0);
                        [f * v[0], f * v[1]]
                    }
                })
                .collect();
            let mut u = OneForm::zeros(basis.clone());
            for c in 0..2 {
                let vals: Vec<f64> = u_vals.iter().map(|v| v[c]).collect();
                u.comps[c] = analyze_grid(&table, &weights, &vals, &basis, &modes);
            }
            // self-adjoint
            let z = hodge_oracle(&u, HodgeKind::SB, 0.0)?;
            let z_vals = synth2(&table, &z);
            let xn_vals: Vec<[f64; 2]> = z_vals
                .iter()
                .map(|v| {
                    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
                    if norm < 1e-300 {
                        [0.0, 0.0]
                    } else {
                        let f = norm.powf(q - 2.0);
                        [f * v[0], f * v[1]]
                    }
                })
                .collect();
            for c in 0..2 {
                let vals: Vec<f64> = xn_vals.iter().map(|v| v[c]).collect();
                form.comps[c] = analyze_grid(&table, &weights, &vals, &basis, &modes);
            }
            // keep harmonic-free
            for c in 0..2 {
                form.comps[c][0] = 0.0;
            }
            if it > 4 && (ratio - last_ratio).abs() < 1e-10 * (1.0 + ratio) {
                converged = true;
                last_ratio = ratio;
                break;
            }
            last_ratio = ratio;
        }
        let _ = last_ratio;
        trace.push(restart_best);
        best = best.max(restart_best);
    }
    Ok((best, converged, trace))
}

fn synth2(table: &[Vec<f64>], form: &OneForm) -> Vec<[f64; 2]> {
    let n_grid = table.first().map(|r| r.len()).unwrap_or(0);
    let mut vals = vec![[0.0; 2]; n_grid];
    for c in 0..2 {
        for (coef, row) in form.comps[c].iter().zip(table) {
            if *coef != 0.0 {
                for (v, t) in vals.iter_mut().zip(row) {
                    v[c] += coef * t;
                }
            }
        }
    }
    vals
}
