//! Simulation of the background radiation process `(X_t, B_t)` to absorption
//! and of heat-horizon trajectories to a fixed time, carrying the frame
//! transport and the multiplicative functional.
//!
//! Clock convention (used consistently across the crate): `X` has generator
//! `L/2`, `B` is a standard Brownian motion (generator `∂²_y/2`) absorbed at
//! `0`, and the multiplicative functional evolves by `ṁ = −(Ric+∇²φ) m / 2`
//! in the transported frame, where it is diagonal on every model space.
//!
//! Two refinements control the discretisation error budget:
//!
//! * absorption uses the per-step Brownian-bridge hit probability
//!   `exp(−2 b₀ b₁ / dt)`, with the crossing time placed in the step
//!   (linear interpolation on a sign change, uniform placement on a
//!   bridge hit), removing the `O(√dt)` absorption bias;
//! * `B` reflects at a ceiling `H = y + ceiling_offset`. Reflection leaves
//!   the half-line Green function `2(y ∧ z)` exactly unchanged below `H`
//!   and bounds `E[τ] = 2Hy − y²`, while the payoff integrands decay like
//!   `e^{-b√(a+λ)}`, so the boundary contribution is `O(e^{-H√(a+λ₁)})`.
//!   Without a ceiling the absorption time has infinite mean and no finite
//!   step cap can keep the censoring rate near zero.

use crate::geometry::{
    curvature_action, sample_stationary, step_in_place, CurvatureOperator, ModelSpace, PointFrame,
};
use crate::rng::substream;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Default ceiling offset above the starting height.
pub const DEFAULT_CEILING_OFFSET: f64 = 4.0;

/// Bridge hit probabilities below this are not sampled (exp(-2 b b'/dt) is
/// astronomically small there and skipping keeps the hot loop tight).
const BRIDGE_EXPONENT_CAP: f64 = 18.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathMode {
    /// Background radiation: `B₀ = y > 0`, run to absorption at `B = 0`.
    Absorption { y: f64 },
    /// Heat pipeline: run `X` to exactly `t` (simulation clock), no `B`.
    Horizon { t: f64 },
}

#[derive(Clone, Debug)]
pub struct PathConfig {
    pub space: ModelSpace,
    pub mode: PathMode,
    pub dt: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub path_index: u64,
    /// `H = y + ceiling_offset`; ignored in horizon mode.
    pub ceiling_offset: f64,
}

impl PathConfig {
    pub fn absorption(space: ModelSpace, y: f64, dt: f64, seed: u64) -> Self {
        assert!(y > 0.0 && dt > 0.0);
        Self {
            space,
            mode: PathMode::Absorption { y },
            dt,
            max_steps: 20_000_000,
            seed,
            path_index: 0,
            ceiling_offset: DEFAULT_CEILING_OFFSET,
        }
    }

    pub fn horizon(space: ModelSpace, t: f64, dt: f64, seed: u64) -> Self {
        assert!(t > 0.0 && dt > 0.0);
        Self {
            space,
            mode: PathMode::Horizon { t },
            dt,
            max_steps: u64::MAX,
            seed,
            path_index: 0,
            ceiling_offset: DEFAULT_CEILING_OFFSET,
        }
    }

    pub fn with_path_index(mut self, index: u64) -> Self {
        self.path_index = index;
        self
    }
}

/// Everything an observer needs about one executed step.
#[derive(Clone, Copy, Debug)]
pub struct StepCtx<'a> {
    pub pre: &'a PointFrame,
    pub post: &'a PointFrame,
    pub b_pre: f64,
    pub b_post: f64,
    pub t_pre: f64,
    /// Actual step duration (`r·dt` on the absorbing partial step).
    pub dt_eff: f64,
    /// Increment of the half-line coordinate (`−b_pre` on absorption).
    pub db: f64,
    /// Frame components of the martingale increment `U dW = √dt_eff · ξ`.
    pub dxw: [f64; 2],
    /// Diagonal of the multiplicative-functional factor over this step
    /// (`m_post = decay ∘ m_pre` in the transported frame).
    pub decay: [f64; 2],
    /// Diagonal of `m` before the step.
    pub m_pre: [f64; 2],
    pub absorbed: bool,
}

/// End-of-path summary.
#[derive(Clone, Copy, Debug)]
pub struct PathEnd {
    pub exit: PointFrame,
    /// Absorption time (interpolated) or the horizon.
    pub tau: f64,
    pub censored: bool,
    /// Final diagonal of `m` in the transported frame.
    pub m: [f64; 2],
    pub steps: u64,
}

/// Raw per-step record; stores exactly the increments the stepper consumed,
/// so trajectories replay bit-exactly.
#[derive(Clone, Copy, Debug)]
pub struct RecordedStep {
    pub point: PointFrame,
    pub b: f64,
    pub m: [f64; 2],
    pub t: f64,
    pub noise: [f64; 2],
    pub zeta: f64,
    pub bridge_u: Option<f64>,
    pub dt_eff: f64,
    pub db: f64,
}

/// One simulated trajectory with stored increments (diagnostic scale; the
/// estimator pipelines stream instead of storing).
#[derive(Clone, Debug)]
pub struct PathRecord {
    pub steps: Vec<RecordedStep>,
    pub tau: f64,
    pub exit: PointFrame,
    pub censored: bool,
    pub m_final: [f64; 2],
    pub b0: f64,
}

/// Internal stepping core shared by the streaming and recording entry points.
struct Stepper {
    space: ModelSpace,
    dim: usize,
    dt: f64,
    sqrt_dt: f64,
    ceiling: f64,
    absorption: bool,
    horizon: f64,
    /// Constant per-full-step decay diagonal, for position-independent
    /// curvature (exact exponential integrator).
    const_decay: Option<[f64; 2]>,
    point: PointFrame,
    b: f64,
    m: [f64; 2],
    t: f64,
}

struct StepDraws {
    noise: [f64; 2],
    zeta: f64,
    bridge_u: Option<f64>,
}

struct StepOutcome {
    pre: PointFrame,
    b_pre: f64,
    m_pre: [f64; 2],
    t_pre: f64,
    dt_eff: f64,
    db: f64,
    dxw: [f64; 2],
    decay: [f64; 2],
    absorbed: bool,
    finished: bool,
}

impl Stepper {
    fn new(cfg: &PathConfig, start: PointFrame) -> Self {
        let (absorption, b, horizon, ceiling) = match cfg.mode {
            PathMode::Absorption { y } => (true, y, f64::INFINITY, y + cfg.ceiling_offset),
            PathMode::Horizon { t } => (false, 0.0, t, f64::INFINITY),
        };
        let const_decay = if CurvatureOperator::is_position_independent(&cfg.space) {
            let c = curvature_action(&cfg.space, &start);
            Some([(-0.5 * c.mat[0][0] * cfg.dt).exp(), (-0.5 * c.mat[1][1] * cfg.dt).exp()])
        } else {
            None
        };
        Self {
            space: cfg.space.clone(),
            dim: cfg.space.dim(),
            dt: cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
            ceiling,
            absorption,
            horizon,
            const_decay,
            point: start,
            b,
            m: [1.0, 1.0],
            t: 0.0,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> StepDraws {
        let mut noise = [0.0; 2];
        for n in noise.iter_mut().take(self.dim) {
            *n = rng.sample(StandardNormal);
        }
        let mut zeta = 0.0;
        let mut bridge_u = None;
        if self.absorption {
            zeta = rng.sample(StandardNormal);
            let b_next = self.b + self.sqrt_dt * zeta;
            if b_next > 0.0 && 2.0 * self.b * b_next < BRIDGE_EXPONENT_CAP * self.dt {
                bridge_u = Some(rng.gen::<f64>());
            }
            if b_next <= 0.0 {
                // crossing time placed uniformly inside the sub-step interval
                // is not needed: linear interpolation fixes it deterministically
            }
        }
        StepDraws { noise, zeta, bridge_u }
    }

    /// Advance one step using the given draws. Deterministic: replaying the
    /// same draws reproduces the trajectory bit-exactly.
    fn advance(&mut self, draws: &StepDraws) -> StepOutcome {
        let pre = self.point;
        let b_pre = self.b;
        let m_pre = self.m;
        let t_pre = self.t;

        let mut dt_eff = self.dt;
        let mut absorbed = false;
        let mut finished = false;
        let mut db = 0.0;
        let mut b_post = 0.0;

        if self.absorption {
            let b_next = b_pre + self.sqrt_dt * draws.zeta;
            if b_next <= 0.0 {
                // sign crossing: linearly interpolated absorption time
                let r = b_pre / (b_pre - b_next);
                dt_eff = r * self.dt;
                absorbed = true;
            } else if let Some(u) = draws.bridge_u {
                let p_hit = (-2.0 * b_pre * b_next / self.dt).exp();
                if u < p_hit {
                    // intra-step crossing caught by the bridge; uniform placement
                    dt_eff = u / p_hit * self.dt;
                    absorbed = true;
                }
            }
            if absorbed {
                db = -b_pre;
                b_post = 0.0;
                finished = true;
            } else {
                b_post = if b_next > self.ceiling { 2.0 * self.ceiling - b_next } else { b_next };
                db = b_post - b_pre;
            }
        } else {
            // horizon mode: last partial step lands exactly on the horizon
            if self.t + self.dt >= self.horizon - 1e-15 {
                dt_eff = self.horizon - self.t;
                finished = true;
            }
        }

        let sqrt_eff = dt_eff.sqrt();
        step_in_place(&self.space, &mut self.point, dt_eff, sqrt_eff, draws.noise);

        // Multiplicative functional: exact exponential for constant curvature,
        // midpoint exponential on the quartic line.
        let decay = match self.const_decay {
            Some(d) if dt_eff == self.dt => d,
            Some(_) => {
                let c = curvature_action(&self.space, &self.point);
                [(-0.5 * c.mat[0][0] * dt_eff).exp(), (-0.5 * c.mat[1][1] * dt_eff).exp()]
            }
            None => {
                let xbar = 0.5 * (pre.pos[0] + self.point.pos[0]);
                let k = 3.0 * xbar * xbar;
                [(-0.5 * k * dt_eff).exp(), 1.0]
            }
        };
        self.m = [decay[0] * m_pre[0], decay[1] * m_pre[1]];
        self.b = b_post;
        self.t = t_pre + dt_eff;

        StepOutcome {
            pre,
            b_pre,
            m_pre,
            t_pre,
            dt_eff,
            db,
            dxw: [sqrt_eff * draws.noise[0], sqrt_eff * draws.noise[1]],
            decay,
            absorbed,
            finished,
        }
    }
}

/// Drive one path, invoking `observer` once per executed step. The start
/// point is drawn from the stationary measure of the configured space.
pub fn stream_path<F: FnMut(&StepCtx)>(cfg: &PathConfig, mut observer: F) -> Result<PathEnd> {
    let mut rng = substream(cfg.seed, cfg.path_index);
    let start = sample_stationary(&cfg.space, &mut rng)?;
    stream_path_from(cfg, start, &mut rng, &mut observer)
}

/// As [`stream_path`], with an explicit start point and RNG.
pub fn stream_path_from<F: FnMut(&StepCtx)>(
    cfg: &PathConfig,
    start: PointFrame,
    rng: &mut ChaCha8Rng,
    observer: &mut F,
) -> Result<PathEnd> {
    let mut stepper = Stepper::new(cfg, start);
    let mut steps = 0u64;
    loop {
        if steps >= cfg.max_steps {
            return Ok(PathEnd {
                exit: stepper.point,
                tau: stepper.t,
                censored: true,
                m: stepper.m,
                steps,
            });
        }
        let draws = stepper.draw(rng);
        let out = stepper.advance(&draws);
        steps += 1;
        let ctx = StepCtx {
            pre: &out.pre,
            post: &stepper.point,
            b_pre: out.b_pre,
            b_post: stepper.b,
            t_pre: out.t_pre,
            dt_eff: out.dt_eff,
            db: out.db,
            dxw: out.dxw,
            decay: out.decay,
            m_pre: out.m_pre,
            absorbed: out.absorbed,
        };
        observer(&ctx);
        if !out.pre.pos.iter().all(|v| v.is_finite()) || !stepper.b.is_finite() {
            return Err(Error::Fault(format!(
                "non-finite path state at t={} (pos {:?}, b {})",
                stepper.t, stepper.point.pos, stepper.b
            )));
        }
        if out.finished {
            return Ok(PathEnd {
                exit: stepper.point,
                tau: stepper.t,
                censored: false,
                m: stepper.m,
                steps,
            });
        }
    }
}

/// Simulate the background radiation process to absorption, storing every
/// increment (replayable).
pub fn simulate_background_radiation(cfg: &PathConfig) -> Result<PathRecord> {
    let PathMode::Absorption { y } = cfg.mode else {
        return Err(Error::Config("simulate_background_radiation requires absorption mode".into()));
    };
    record_path(cfg, y)
}

/// Simulate a heat-horizon trajectory to exactly `T`, storing increments.
pub fn simulate_heat_horizon(cfg: &PathConfig) -> Result<PathRecord> {
    let PathMode::Horizon { .. } = cfg.mode else {
        return Err(Error::Config("simulate_heat_horizon requires horizon mode".into()));
    };
    record_path(cfg, 0.0)
}

fn record_path(cfg: &PathConfig, b0: f64) -> Result<PathRecord> {
    let mut rng = substream(cfg.seed, cfg.path_index);
    let start = sample_stationary(&cfg.space, &mut rng)?;
    let mut stepper = Stepper::new(cfg, start);
    let mut steps = Vec::new();
    let mut censored = false;
    loop {
        if steps.len() as u64 >= cfg.max_steps {
            censored = true;
            break;
        }
        let draws = stepper.draw(&mut rng);
        let out = stepper.advance(&draws);
        steps.push(RecordedStep {
            point: out.pre,
            b: out.b_pre,
            m: out.m_pre,
            t: out.t_pre,
            noise: draws.noise,
            zeta: draws.zeta,
            bridge_u: draws.bridge_u,
            dt_eff: out.dt_eff,
            db: out.db,
        });
        if out.finished {
            break;
        }
    }
    Ok(PathRecord {
        steps,
        tau: stepper.t,
        exit: stepper.point,
        censored,
        m_final: stepper.m,
        b0,
    })
}

/// Re-run a record's stored increments through the stepper; the trajectory
/// must reproduce bit-exactly.
pub fn replay(cfg: &PathConfig, record: &PathRecord) -> Result<PathRecord> {
    let start = record.steps.first().map(|s| s.point).ok_or_else(|| {
        Error::Config("cannot replay an empty record".into())
    })?;
    let mut stepper = Stepper::new(cfg, start);
    let mut steps = Vec::with_capacity(record.steps.len());
    for rec in &record.steps {
        let draws = StepDraws { noise: rec.noise, zeta: rec.zeta, bridge_u: rec.bridge_u };
        let out = stepper.advance(&draws);
        steps.push(RecordedStep {
            point: out.pre,
            b: out.b_pre,
            m: out.m_pre,
            t: out.t_pre,
            noise: rec.noise,
            zeta: rec.zeta,
            bridge_u: rec.bridge_u,
            dt_eff: out.dt_eff,
            db: out.db,
        });
        if out.finished {
            break;
        }
    }
    Ok(PathRecord {
        steps,
        tau: stepper.t,
        exit: stepper.point,
        censored: record.censored,
        m_final: stepper.m,
        b0: record.b0,
    })
}

/// Left-endpoint Riemann–Itô sum of a vector integrand against the `ΔB`
/// increments of a stored record.
pub fn ito_accumulate_db(
    record: &PathRecord,
    integrand: impl Fn(&RecordedStep) -> [f64; 2],
) -> [f64; 2] {
    let mut acc = [0.0; 2];
    for s in &record.steps {
        let g = integrand(s);
        acc[0] += g[0] * s.db;
        acc[1] += g[1] * s.db;
    }
    acc
}

/// Left-endpoint sum of a matrix integrand against the frame-noise
/// increments `ΔW`: accumulates `Σ G(s)·ΔW`, rows indexed by output
/// component, columns by the noise direction.
pub fn ito_accumulate_dw(
    record: &PathRecord,
    integrand: impl Fn(&RecordedStep) -> [[f64; 2]; 2],
) -> [f64; 2] {
    let mut acc = [0.0; 2];
    for s in &record.steps {
        let g = integrand(s);
        let dw = [s.dt_eff.sqrt() * s.noise[0], s.dt_eff.sqrt() * s.noise[1]];
        acc[0] += g[0][0] * dw[0] + g[0][1] * dw[1];
        acc[1] += g[1][0] * dw[0] + g[1][1] * dw[1];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::map_indexed;
    use crate::numerics::RunningStats;

    fn torus1() -> ModelSpace {
        ModelSpace::flat_torus(1).unwrap()
    }

    #[test]
    fn interpolated_absorption_time() {
        // injected b path 1 -> 0.5 -> -0.1 at dt = 1: crossing in the third
        // step interpolates at 2 + 0.5/0.6
        let cfg = PathConfig {
            space: torus1(),
            mode: PathMode::Absorption { y: 1.0 },
            dt: 1.0,
            max_steps: 100,
            seed: 0,
            path_index: 0,
            ceiling_offset: 100.0,
        };
        let mut stepper = Stepper::new(&cfg, PointFrame::flat([0.0; 3]));
        let d1 = StepDraws { noise: [0.0; 2], zeta: -0.5, bridge_u: Some(1.0) };
        let o1 = stepper.advance(&d1);
        assert!(!o1.absorbed);
        let d2 = StepDraws { noise: [0.0; 2], zeta: -0.6, bridge_u: None };
        let o2 = stepper.advance(&d2);
        assert!(o2.absorbed);
        assert!((stepper.t - (1.0 + 0.5 / 0.6)).abs() < 1e-12);
        assert!((o2.db + 0.5).abs() < 1e-12, "final increment lands on zero");
    }

    #[test]
    fn survival_law_from_unit_height() {
        // P(tau > 1 | y = 1) = erf(1/sqrt(2)) for standard Brownian motion.
        let n = 100_000u64;
        let survived: u64 = map_indexed(n, |i| {
            let cfg = PathConfig {
                space: torus1(),
                mode: PathMode::Absorption { y: 1.0 },
                dt: 1e-3,
                max_steps: 1001,
                seed: 42,
                path_index: i,
                ceiling_offset: DEFAULT_CEILING_OFFSET,
            };
            let end = stream_path(&cfg, |_| {}).unwrap();
            u64::from(end.censored || end.tau > 1.0)
        })
        .into_iter()
        .sum();
        let p_hat = survived as f64 / n as f64;
        let exact = crate::numerics::erf(1.0 / std::f64::consts::SQRT_2);
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!(
            (p_hat - exact).abs() < 3.0 * se + 2e-3,
            "survival {p_hat} vs {exact} (se {se})"
        );
    }

    #[test]
    fn ou_multiplicative_functional_is_exact() {
        let space = ModelSpace::gaussian_ou(&[1.0]).unwrap();
        let cfg = PathConfig::absorption(space, 2.0, 1e-2, 7);
        let mut checked = 0;
        let end = stream_path(&cfg, |ctx| {
            // m at time t equals e^{-t/2} exactly for constant curvature 1
            let expect = (-(ctx.t_pre + ctx.dt_eff) / 2.0).exp();
            let got = ctx.m_pre[0] * ctx.decay[0];
            assert!((got - expect).abs() < 1e-10, "m {got} vs {expect}");
            checked += 1;
        })
        .unwrap();
        assert!(checked > 0);
        assert!((end.m[0] - (-end.tau / 2.0).exp()).abs() < 1e-10);
    }

    #[test]
    fn sphere_m_is_scalar_decay_times_orthogonal_frame() {
        let space = ModelSpace::sphere2();
        let cfg = PathConfig::horizon(space, 2.0, 1e-3, 11);
        let rec = simulate_heat_horizon(&cfg).unwrap();
        let expect = (-(rec.tau) / 2.0).exp();
        assert!((rec.m_final[0] - expect).abs() < 1e-6);
        assert!((rec.m_final[1] - expect).abs() < 1e-6);
        // frame orthonormality at the horizon
        let f = rec.exit.frame;
        let g12 = crate::numerics::dot3(f[0], f[1]);
        assert!(g12.abs() < 1e-6);
    }

    #[test]
    fn heat_horizon_hits_time_exactly() {
        let space = ModelSpace::gaussian_ou(&[1.0]).unwrap();
        let cfg = PathConfig::horizon(space, 1.0, 1e-3, 3);
        // zero-noise deterministic limit: x(T) = e^{-T/2}
        let mut stepper = Stepper::new(&cfg, PointFrame::flat([1.0, 0.0, 0.0]));
        loop {
            let out = stepper.advance(&StepDraws { noise: [0.0; 2], zeta: 0.0, bridge_u: None });
            if out.finished {
                break;
            }
        }
        assert!((stepper.t - 1.0).abs() < 1e-12);
        assert!((stepper.point.pos[0] - (-0.5f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn horizon_histogram_is_stationary_on_torus() {
        let n = 20_000u64;
        let bins = 16usize;
        let counts = map_indexed(n, |i| {
            let cfg = PathConfig::horizon(torus1(), 0.5, 1e-2, 19).with_path_index(i);
            let end = stream_path(&cfg, |_| {}).unwrap();
            ((end.exit.pos[0] / crate::geometry::TWO_PI * bins as f64) as usize).min(bins - 1)
        });
        let mut hist = vec![0u64; bins];
        for c in counts {
            hist[c] += 1;
        }
        let p = 1.0 / bins as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for (b, &c) in hist.iter().enumerate() {
            assert!(
                (c as f64 - n as f64 * p).abs() < 4.0 * sd,
                "bin {b}: {c} vs {}",
                n as f64 * p
            );
        }
    }

    #[test]
    fn censoring_flag_and_exclusion() {
        let cfg = PathConfig {
            space: torus1(),
            mode: PathMode::Absorption { y: 5.0 },
            dt: 1e-3,
            max_steps: 10,
            seed: 1,
            path_index: 0,
            ceiling_offset: DEFAULT_CEILING_OFFSET,
        };
        let end = stream_path(&cfg, |_| {}).unwrap();
        assert!(end.censored);
        assert!((end.tau - 10.0 * 1e-3).abs() < 1e-12);
    }

    #[test]
    fn censoring_rate_is_negligible_with_ceiling() {
        // E[tau] = 2Hy - y²; the ceiling makes the tail exponential.
        let n = 2000u64;
        let censored: u64 = map_indexed(n, |i| {
            let cfg = PathConfig {
                space: torus1(),
                mode: PathMode::Absorption { y: 6.0 },
                dt: 1e-2,
                max_steps: 400_000,
                seed: 23,
                path_index: i,
                ceiling_offset: DEFAULT_CEILING_OFFSET,
            };
            u64::from(stream_path(&cfg, |_| {}).unwrap().censored)
        })
        .into_iter()
        .sum();
        assert_eq!(censored, 0, "censoring rate must stay below 0.1%");
    }

    #[test]
    fn replay_is_bit_exact() {
        for space in [
            torus1(),
            ModelSpace::gaussian_ou(&[1.3]).unwrap(),
            ModelSpace::gaussian_quartic(),
            ModelSpace::sphere2(),
        ] {
            let cfg = PathConfig::absorption(space, 1.0, 1e-2, 99);
            let rec = simulate_background_radiation(&cfg).unwrap();
            let rep = replay(&cfg, &rec).unwrap();
            assert_eq!(rec.steps.len(), rep.steps.len());
            assert_eq!(rec.tau.to_bits(), rep.tau.to_bits());
            assert_eq!(rec.exit.pos, rep.exit.pos);
            for (a, b) in rec.steps.iter().zip(&rep.steps) {
                assert_eq!(a.point.pos, b.point.pos);
                assert_eq!(a.b.to_bits(), b.b.to_bits());
                assert_eq!(a.m, b.m);
            }
        }
    }

    #[test]
    fn ito_accumulator_examples() {
        let cfg = PathConfig::absorption(torus1(), 2.0, 1e-2, 5);
        let rec = simulate_background_radiation(&cfg).unwrap();
        // zero integrand
        assert_eq!(ito_accumulate_db(&rec, |_| [0.0, 0.0]), [0.0, 0.0]);
        // constant c against dB telescopes to -c·y
        let c = 1.7;
        let v = ito_accumulate_db(&rec, |_| [c, 0.0]);
        assert!((v[0] + c * 2.0).abs() < 1e-10, "telescoping: {} vs {}", v[0], -c * 2.0);
        // linearity
        let f = |s: &RecordedStep| [s.point.pos[0].sin(), 0.0];
        let one = ito_accumulate_db(&rec, f);
        let two = ito_accumulate_db(&rec, |s| {
            let g = f(s);
            [2.0 * g[0], 2.0 * g[1]]
        });
        assert!((two[0] - 2.0 * one[0]).abs() < 1e-12);
    }

    #[test]
    fn quartic_m_contraction_bound() {
        // ||m(t)|| <= 1 when Ric + Hess(phi) >= 0
        let space = ModelSpace::gaussian_quartic();
        let cfg = PathConfig::absorption(space, 1.0, 1e-3, 31);
        let end = stream_path(&cfg, |ctx| {
            assert!(ctx.m_pre[0] <= 1.0 + 1e-12);
        })
        .unwrap();
        assert!(end.m[0] <= 1.0 + 1e-12 && end.m[0] > 0.0);
    }

    #[test]
    fn reversed_drift_matches_bessel_coefficient() {
        // Time reversal of absorbed Brownian motion: the reversed increments
        // regress on 1/B with slope dt (coefficient 1 for the standard
        // clock). Regression restricted to a window away from the start
        // and the ceiling region.
        let dt = 1e-3;
        let y = 2.0;
        let n_paths = 3000u64;
        let sums = map_indexed(n_paths, |i| {
            let cfg = PathConfig::absorption(torus1(), y, dt, 77).with_path_index(i);
            let mut bs: Vec<f64> = Vec::new();
            let end = stream_path(&cfg, |ctx| {
                bs.push(ctx.b_pre);
            })
            .unwrap();
            bs.push(0.0);
            let mut sxy = 0.0;
            let mut sxx = 0.0;
            if end.censored {
                return (0.0, 0.0);
            }
            // reversed increments: B_hat_{k+1} - B_hat_k = b[n-k-1] - b[n-k]
            let n = bs.len();
            for k in 0..n - 1 {
                let b_hat = bs[n - 1 - k];
                let db_hat = bs[n - 2 - k] - bs[n - 1 - k];
                if b_hat > 0.3 && b_hat < y - 0.3 {
                    let x = dt / b_hat;
                    sxy += x * db_hat;
                    sxx += x * x;
                }
            }
            (sxy, sxx)
        });
        let (sxy, sxx): (f64, f64) =
            sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
        let slope = sxy / sxx;
        // residual variance of dB_hat is dt per observation
        let se = (dt / sxx).sqrt();
        assert!(
            (slope - 1.0).abs() < 3.0 * se + 0.02,
            "reversed drift slope {slope} (se {se}) should be 1"
        );
    }
}
