//! Model spaces and their single-step diffusion kinematics.
//!
//! Four geometries are supported, all with weighted measure `μ = e^{-φ} dv`
//! normalised to a probability measure:
//!
//! * `FlatTorus(d)`, `d ∈ {1,2}` — the cube `[0,2π)^d` with wrap-around,
//!   `φ = 0`, uniform `μ`.
//! * `GaussianOu(d, A)` — `R^d` with generator `Δ − Ax·∇` for a positive
//!   diagonal `A`, i.e. `φ(x) = ⟨x, Ax⟩ / 2`, stationary law `N(0, A^{-1})`.
//! * `GaussianQuartic` — the line with `φ(x) = x⁴ / 4`.
//! * `Sphere2` — the unit 2-sphere with `φ = 0`.
//!
//! Everything runs on the half-speed clock: the diffusion `X` has generator
//! `L/2`, so a flat-chart Euler step is `x' = x + √dt·ξ − ∇φ(x)·dt/2`, and
//! the curvature operator feeds the multiplicative functional through
//! `Ṁ = −(Ric + ∇²φ) M / 2`.

use crate::numerics::{add3, adaptive_simpson, cross3, dot3, norm3, normalize3, scale3, sub3};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Maximum retries for rejection sampling before reporting a fault.
const REJECTION_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    FlatTorus { dim: usize },
    GaussianOu { a_diag: Vec<f64> },
    GaussianQuartic,
    Sphere2,
}

/// A model geometry bundle: chart conventions, stationary measure, drift,
/// curvature operator and transport rules.
#[derive(Clone, Debug)]
pub struct ModelSpace {
    pub kind: SpaceKind,
    dim: usize,
    /// Normalisation constant of `∫ e^{-φ} dv` (so `μ = e^{-φ} dv / z`).
    z: f64,
}

impl ModelSpace {
    pub fn flat_torus(dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("torus dimension {dim} not supported")));
        }
        Ok(Self { kind: SpaceKind::FlatTorus { dim }, dim, z: TWO_PI.powi(dim as i32) })
    }

    pub fn gaussian_ou(a_diag: &[f64]) -> Result<Self> {
        let dim = a_diag.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("gaussian dimension {dim} not supported")));
        }
        if a_diag.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::Config("covariance diagonal must be positive".into()));
        }
        // ∫ e^{-a x²/2} dx = sqrt(2π/a) per axis.
        let z = a_diag.iter().map(|a| (TWO_PI / a).sqrt()).product();
        Ok(Self { kind: SpaceKind::GaussianOu { a_diag: a_diag.to_vec() }, dim, z })
    }

    pub fn gaussian_quartic() -> Self {
        // Mass beyond |x| = 8 is below 1e-12; one-time adaptive quadrature.
        let z = adaptive_simpson(|x: f64| (-x.powi(4) / 4.0).exp(), -8.0, 8.0, 1e-13);
        Self { kind: SpaceKind::GaussianQuartic, dim: 1, z }
    }

    pub fn sphere2() -> Self {
        Self { kind: SpaceKind::Sphere2, dim: 2, z: 4.0 * std::f64::consts::PI }
    }

    /// Parse a space selection key. `cov` supplies the Ornstein–Uhlenbeck
    /// diagonal for `gauss1`/`gauss2` (defaults to the identity).
    pub fn from_key(key: &str, cov: Option<&[f64]>) -> Result<Self> {
        match key {
            "torus1" => Self::flat_torus(1),
            "torus2" => Self::flat_torus(2),
            "gauss1" => Self::gaussian_ou(cov.unwrap_or(&[1.0])),
            "gauss2" => Self::gaussian_ou(cov.unwrap_or(&[1.0, 1.0])),
            "quartic1" => Ok(Self::gaussian_quartic()),
            "sphere2" => Ok(Self::sphere2()),
            other => Err(Error::Config(format!("unknown space key `{other}`"))),
        }
    }

    pub fn key(&self) -> &'static str {
        match &self.kind {
            SpaceKind::FlatTorus { dim: 1 } => "torus1",
            SpaceKind::FlatTorus { .. } => "torus2",
            SpaceKind::GaussianOu { a_diag } if a_diag.len() == 1 => "gauss1",
            SpaceKind::GaussianOu { .. } => "gauss2",
            SpaceKind::GaussianQuartic => "quartic1",
            SpaceKind::Sphere2 => "sphere2",
        }
    }

    /// Intrinsic dimension (tangent dimension for the sphere).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `∇φ` in chart coordinates (flat charts only; zero on the sphere).
    pub fn grad_phi(&self, pos: &[f64; 3]) -> [f64; 3] {
        match &self.kind {
            SpaceKind::FlatTorus { .. } | SpaceKind::Sphere2 => [0.0; 3],
            SpaceKind::GaussianOu { a_diag } => {
                let mut g = [0.0; 3];
                for (i, a) in a_diag.iter().enumerate() {
                    g[i] = a * pos[i];
                }
                g
            }
            SpaceKind::GaussianQuartic => [pos[0].powi(3), 0.0, 0.0],
        }
    }

    /// Density of the normalised stationary measure (flat charts; the sphere
    /// uses the uniform area measure).
    pub fn mu_density(&self, pos: &[f64; 3]) -> f64 {
        match &self.kind {
            SpaceKind::FlatTorus { .. } | SpaceKind::Sphere2 => 1.0 / self.z,
            SpaceKind::GaussianOu { a_diag } => {
                let phi: f64 = a_diag.iter().enumerate().map(|(i, a)| a * pos[i] * pos[i] / 2.0).sum();
                (-phi).exp() / self.z
            }
            SpaceKind::GaussianQuartic => (-pos[0].powi(4) / 4.0).exp() / self.z,
        }
    }

    /// Total mass of `e^{-φ} dv` before normalisation.
    pub fn mass(&self) -> f64 {
        self.z
    }
}

/// A position together with an orthonormal tangent frame.
///
/// Flat charts use the canonical basis; on the sphere the position is an
/// embedded unit vector and the frame columns are tangent 3-vectors kept
/// orthonormal by per-step renormalisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointFrame {
    pub pos: [f64; 3],
    pub frame: [[f64; 3]; 2],
}

impl PointFrame {
    pub fn flat(pos: [f64; 3]) -> Self {
        Self { pos, frame: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] }
    }

    /// Reference orthonormal tangent basis at an embedded sphere point.
    pub fn sphere_reference(p: [f64; 3]) -> Self {
        let up = if p[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let e1 = normalize3(cross3(up, p));
        let e2 = cross3(p, e1);
        Self { pos: p, frame: [e1, e2] }
    }

    /// Components of an embedded tangent vector in this frame.
    pub fn to_frame(&self, v: [f64; 3], dim: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (i, slot) in out.iter_mut().enumerate().take(dim) {
            *slot = dot3(self.frame[i], v);
        }
        out
    }

    /// Embedded vector with the given frame components.
    pub fn from_frame(&self, c: [f64; 2], dim: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for i in 0..dim {
            v = add3(v, scale3(self.frame[i], c[i]));
        }
        v
    }
}

/// `Ric + ∇²φ` expressed in the frame at a point.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureOperator {
    pub mat: [[f64; 2]; 2],
    pub dim: usize,
}

impl CurvatureOperator {
    pub fn scalar(v: f64, dim: usize) -> Self {
        let mut mat = [[0.0; 2]; 2];
        for (i, row) in mat.iter_mut().enumerate().take(dim) {
            row[i] = v;
        }
        Self { mat, dim }
    }

    /// Whether the operator is a constant along paths (allows the exact
    /// exponential integrator for the multiplicative functional).
    pub fn is_position_independent(space: &ModelSpace) -> bool {
        !matches!(space.kind, SpaceKind::GaussianQuartic)
    }
}

/// Draw a start point from the stationary measure, frame initialised to the
/// reference basis.
pub fn sample_stationary<R: Rng + ?Sized>(space: &ModelSpace, rng: &mut R) -> Result<PointFrame> {
    match &space.kind {
        SpaceKind::FlatTorus { dim } => {
            let mut pos = [0.0; 3];
            for p in pos.iter_mut().take(*dim) {
                *p = rng.gen_range(0.0..TWO_PI);
            }
            Ok(PointFrame::flat(pos))
        }
        SpaceKind::GaussianOu { a_diag } => {
            let mut pos = [0.0; 3];
            for (i, a) in a_diag.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                pos[i] = z / a.sqrt();
            }
            Ok(PointFrame::flat(pos))
        }
        SpaceKind::GaussianQuartic => {
            // Rejection from a uniform proposal on [-4, 4]; the density peak
            // is e^0 = 1 and mass beyond |x| = 4 is ~e^{-64}.
            for _ in 0..REJECTION_CAP {
                let x: f64 = rng.gen_range(-4.0..4.0);
                let u: f64 = rng.gen();
                if u < (-x.powi(4) / 4.0).exp() {
                    return Ok(PointFrame::flat([x, 0.0, 0.0]));
                }
            }
            Err(Error::Fault("quartic rejection sampler exceeded retry cap".into()))
        }
        SpaceKind::Sphere2 => {
            // Marsaglia (1972).
            loop {
                let x1: f64 = rng.gen_range(-1.0..1.0);
                let x2: f64 = rng.gen_range(-1.0..1.0);
                let s = x1 * x1 + x2 * x2;
                if s >= 1.0 {
                    continue;
                }
                let f = 2.0 * (1.0 - s).sqrt();
                let p = [x1 * f, x2 * f, 1.0 - 2.0 * s];
                return Ok(PointFrame::sphere_reference(p));
            }
        }
    }
}

/// `Ric + ∇²φ` at a point, in the frame carried by `p`.
pub fn curvature_action(space: &ModelSpace, p: &PointFrame) -> CurvatureOperator {
    match &space.kind {
        SpaceKind::FlatTorus { dim } => CurvatureOperator::scalar(0.0, *dim),
        SpaceKind::GaussianOu { a_diag } => {
            let mut mat = [[0.0; 2]; 2];
            for (i, a) in a_diag.iter().enumerate() {
                mat[i][i] = *a;
            }
            CurvatureOperator { mat, dim: a_diag.len() }
        }
        SpaceKind::GaussianQuartic => CurvatureOperator::scalar(3.0 * p.pos[0] * p.pos[0], 1),
        // Unit 2-sphere: Ric = g, identity on the tangent plane in any
        // orthonormal frame.
        SpaceKind::Sphere2 => CurvatureOperator::scalar(1.0, 2),
    }
}

/// One Euler/geodesic step of the half-speed `L`-diffusion.
pub fn step_diffusion(
    space: &ModelSpace,
    state: &PointFrame,
    dt: f64,
    noise: [f64; 2],
) -> Result<PointFrame> {
    let mut next = *state;
    step_in_place(space, &mut next, dt, dt.sqrt(), noise);
    if !next.pos.iter().all(|v| v.is_finite()) {
        return Err(Error::Fault(format!(
            "non-finite state after step from {:?} with noise {:?}",
            state.pos, noise
        )));
    }
    Ok(next)
}

/// In-place stepping core shared by the path simulator.
#[inline]
pub fn step_in_place(space: &ModelSpace, state: &mut PointFrame, dt: f64, sqrt_dt: f64, noise: [f64; 2]) {
    match &space.kind {
        SpaceKind::FlatTorus { dim } => {
            for i in 0..*dim {
                let mut x = state.pos[i] + sqrt_dt * noise[i];
                x = x.rem_euclid(TWO_PI);
                state.pos[i] = x;
            }
        }
        SpaceKind::GaussianOu { a_diag } => {
            for (i, a) in a_diag.iter().enumerate() {
                state.pos[i] += sqrt_dt * noise[i] - 0.5 * a * state.pos[i] * dt;
            }
        }
        SpaceKind::GaussianQuartic => {
            let x = state.pos[0];
            state.pos[0] = x + sqrt_dt * noise[0] - 0.5 * x * x * x * dt;
        }
        SpaceKind::Sphere2 => {
            let v = add3(
                scale3(state.frame[0], sqrt_dt * noise[0]),
                scale3(state.frame[1], sqrt_dt * noise[1]),
            );
            let theta = norm3(v);
            if theta == 0.0 {
                return;
            }
            let dir = scale3(v, 1.0 / theta);
            let p = state.pos;
            let new_p = add3(scale3(p, theta.cos()), scale3(dir, theta.sin()));
            // Parallel transport along the great circle: the geodesic tangent
            // rotates in the (p, dir) plane, the orthogonal component is fixed.
            let mut new_frame = [[0.0; 3]; 2];
            let rotated_dir = sub3(scale3(dir, theta.cos()), scale3(p, theta.sin()));
            for (col, out) in state.frame.iter().zip(new_frame.iter_mut()) {
                let along = dot3(*col, dir);
                let perp = sub3(*col, scale3(dir, along));
                *out = add3(perp, scale3(rotated_dir, along));
            }
            // Renormalise: project off the new position, Gram-Schmidt.
            let p1 = normalize3(new_p);
            let mut e1 = sub3(new_frame[0], scale3(p1, dot3(new_frame[0], p1)));
            e1 = normalize3(e1);
            let mut e2 = sub3(new_frame[1], scale3(p1, dot3(new_frame[1], p1)));
            e2 = sub3(e2, scale3(e1, dot3(e2, e1)));
            e2 = normalize3(e2);
            state.pos = p1;
            state.frame = [e1, e2];
        }
    }
}

/// Exact parallel transport of a tangent vector `u` at `p` along the geodesic
/// leaving `p` in unit direction `dir` for arc length `theta`. Used by the
/// holonomy oracle.
pub fn sphere_transport(p: [f64; 3], dir: [f64; 3], theta: f64, u: [f64; 3]) -> [f64; 3] {
    let along = dot3(u, dir);
    let perp = sub3(u, scale3(dir, along));
    let rotated = sub3(scale3(dir, theta.cos()), scale3(p, theta.sin()));
    add3(perp, scale3(rotated, along))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RunningStats;
    use crate::rng::substream;

    #[test]
    fn unknown_key_is_config_error() {
        let err = ModelSpace::from_key("torus9", None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("torus9"));
    }

    #[test]
    fn stationary_measure_normalised() {
        // Closed-form spaces to 1e-8; quartic quadrature against an
        // independent Simpson pass to 1e-4.
        let q = ModelSpace::gaussian_quartic();
        let check = crate::numerics::simpson(|x: f64| (-x.powi(4) / 4.0).exp(), -8.0, 8.0, 1 << 15);
        assert!((q.mass() - check).abs() < 1e-4);
        let g = ModelSpace::gaussian_ou(&[2.0]).unwrap();
        assert!((g.mass() - (TWO_PI / 2.0).sqrt()).abs() < 1e-8);
        let t = ModelSpace::flat_torus(2).unwrap();
        assert!((t.mass() - TWO_PI * TWO_PI).abs() < 1e-8);
    }

    #[test]
    fn torus_uniformity_kolmogorov_smirnov() {
        let space = ModelSpace::flat_torus(1).unwrap();
        let mut rng = substream(11, 0);
        let n = 10_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| sample_stationary(&space, &mut rng).unwrap().pos[0] / TWO_PI)
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i as f64 + 1.0) / n as f64;
            d = d.max((x - lo).abs()).max((hi - x).abs());
        }
        // Asymptotic Kolmogorov critical value at level 0.01.
        let crit = 1.62762 / (n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} exceeds {crit}");
    }

    #[test]
    fn ou_second_moment_is_inverse_a() {
        let space = ModelSpace::gaussian_ou(&[1.0]).unwrap();
        let mut rng = substream(12, 0);
        let mut stats = RunningStats::default();
        for _ in 0..100_000 {
            let x = sample_stationary(&space, &mut rng).unwrap().pos[0];
            stats.push(x * x);
        }
        // Standard normal stationary law: second moment 1.
        assert!((stats.mean() - 1.0).abs() < 3.0 * stats.stderr());
    }

    #[test]
    fn sphere_mean_z_vanishes() {
        let space = ModelSpace::sphere2();
        let mut rng = substream(13, 0);
        let mut stats = RunningStats::default();
        for _ in 0..100_000 {
            stats.push(sample_stationary(&space, &mut rng).unwrap().pos[2]);
        }
        assert!(stats.mean().abs() < 3.0 * stats.stderr());
    }

    #[test]
    fn quartic_sampler_matches_density_histogram() {
        let space = ModelSpace::gaussian_quartic();
        let mut rng = substream(14, 0);
        let n = 200_000;
        let mut counts = [0u64; 8];
        for _ in 0..n {
            let x = sample_stationary(&space, &mut rng).unwrap().pos[0];
            let bin = (((x + 2.0) / 4.0 * 8.0) as isize).clamp(0, 7) as usize;
            counts[bin] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            let lo = -2.0 + b as f64 * 0.5;
            let p = crate::numerics::simpson(|x| space.mu_density(&[x, 0.0, 0.0]), lo, lo + 0.5, 256);
            let mean = n as f64 * p;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - mean).abs() < 5.0 * sd, "bin {b}: {c} vs {mean}");
        }
    }

    #[test]
    fn curvature_values() {
        let torus = ModelSpace::flat_torus(2).unwrap();
        let p = PointFrame::flat([1.0, 2.0, 0.0]);
        let c = curvature_action(&torus, &p);
        assert_eq!(c.mat, [[0.0; 2]; 2]);

        let ou = ModelSpace::gaussian_ou(&[1.0]).unwrap();
        let c = curvature_action(&ou, &PointFrame::flat([0.3, 0.0, 0.0]));
        assert_eq!(c.mat[0][0], 1.0);

        let q = ModelSpace::gaussian_quartic();
        let c = curvature_action(&q, &PointFrame::flat([2.0, 0.0, 0.0]));
        assert!((c.mat[0][0] - 12.0).abs() < 1e-14);

        let s = ModelSpace::sphere2();
        let p = PointFrame::sphere_reference([0.0, 0.6, 0.8]);
        let c = curvature_action(&s, &p);
        assert_eq!((c.mat[0][0], c.mat[1][1], c.mat[0][1]), (1.0, 1.0, 0.0));
    }

    #[test]
    fn flat_torus_step_arithmetic() {
        let space = ModelSpace::flat_torus(1).unwrap();
        let p = PointFrame::flat([0.0; 3]);
        let next = step_diffusion(&space, &p, 0.01, [1.0, 0.0]).unwrap();
        assert!((next.pos[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ou_step_drift_is_half_speed() {
        let space = ModelSpace::gaussian_ou(&[1.0]).unwrap();
        let p = PointFrame::flat([1.0, 0.0, 0.0]);
        let next = step_diffusion(&space, &p, 0.5, [0.0, 0.0]).unwrap();
        assert!((next.pos[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ou_zero_noise_trajectory_decays_exponentially() {
        let alpha = 1.7;
        let space = ModelSpace::gaussian_ou(&[alpha]).unwrap();
        let dt = 1e-3;
        let mut p = PointFrame::flat([1.0, 0.0, 0.0]);
        for _ in 0..1000 {
            p = step_diffusion(&space, &p, dt, [0.0, 0.0]).unwrap();
        }
        let exact = (-alpha * 1.0 / 2.0).exp();
        assert!((p.pos[0] - exact).abs() < 2.0 * dt, "{} vs {}", p.pos[0], exact);
    }

    #[test]
    fn sphere_zero_noise_is_identity() {
        let space = ModelSpace::sphere2();
        let p = PointFrame::sphere_reference([0.0, 0.6, 0.8]);
        let next = step_diffusion(&space, &p, 0.01, [0.0, 0.0]).unwrap();
        assert_eq!(p, next);
    }

    #[test]
    fn sphere_frame_stays_orthonormal_over_long_runs() {
        let space = ModelSpace::sphere2();
        let mut rng = substream(15, 0);
        let mut p = sample_stationary(&space, &mut rng).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let noise = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            p = step_diffusion(&space, &p, 1e-3, noise).unwrap();
            let g11 = dot3(p.frame[0], p.frame[0]);
            let g22 = dot3(p.frame[1], p.frame[1]);
            let g12 = dot3(p.frame[0], p.frame[1]);
            let gp1 = dot3(p.frame[0], p.pos);
            worst = worst
                .max((g11 - 1.0).abs())
                .max((g22 - 1.0).abs())
                .max(g12.abs())
                .max(gp1.abs())
                .max((norm3(p.pos) - 1.0).abs());
        }
        assert!(worst < 1e-6, "orthonormality drift {worst}");
    }

    #[test]
    fn holonomy_around_geodesic_triangle_equals_area() {
        // Geodesic triangle with a vertex at the north pole and two points on
        // a great circle: spherical excess = enclosed area on the unit sphere.
        let phi = 0.4_f64; // longitude opening
        let north = [0.0, 0.0, 1.0];
        let a = [1.0, 0.0, 0.0];
        let b = [phi.cos(), phi.sin(), 0.0];
        // Transport a frame vector along pole -> a -> b -> pole.
        let leg = |from: [f64; 3], to: [f64; 3], u: [f64; 3]| {
            let theta = dot3(from, to).clamp(-1.0, 1.0).acos();
            let dir = normalize3(sub3(to, scale3(from, dot3(from, to))));
            sphere_transport(from, dir, theta, u)
        };
        let u0 = [1.0, 0.0, 0.0]; // tangent at the pole
        let u1 = leg(north, a, u0);
        let u2 = leg(a, b, u1);
        let u3 = leg(b, north, u2);
        let angle = dot3(u0, u3).clamp(-1.0, 1.0).acos();
        // Area of the spherical lune triangle with two right angles at the
        // equator: excess = (pi/2 + pi/2 + phi) - pi = phi.
        assert!((angle - phi).abs() < 1e-10, "holonomy {angle} vs area {phi}");
    }

    #[test]
    fn occupation_histogram_is_stationary() {
        // Long single trajectory on torus1; the band uses batch means because
        // consecutive steps are strongly correlated.
        let space = ModelSpace::flat_torus(1).unwrap();
        let mut rng = substream(16, 0);
        let mut p = sample_stationary(&space, &mut rng).unwrap();
        let bins = 32;
        let batches = 20;
        let steps_per_batch = 50_000;
        let mut batch_fracs = vec![vec![0.0f64; bins]; batches];
        for batch in batch_fracs.iter_mut() {
            let mut counts = vec![0u64; bins];
            for _ in 0..steps_per_batch {
                let z: f64 = rng.sample(StandardNormal);
                step_in_place(&space, &mut p, 1e-3, 1e-3_f64.sqrt(), [z, 0.0]);
                let b = ((p.pos[0] / TWO_PI * bins as f64) as usize).min(bins - 1);
                counts[b] += 1;
            }
            for (f, c) in batch.iter_mut().zip(&counts) {
                *f = *c as f64 / steps_per_batch as f64;
            }
        }
        for b in 0..bins {
            let mut stats = RunningStats::default();
            for batch in &batch_fracs {
                stats.push(batch[b]);
            }
            let dev = (stats.mean() - 1.0 / bins as f64).abs();
            assert!(
                dev <= 4.0 * stats.stderr(),
                "bin {b}: deviation {dev} > 4 x {}",
                stats.stderr()
            );
        }
    }
}
