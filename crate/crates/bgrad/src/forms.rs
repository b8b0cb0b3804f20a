//! Exterior-algebra endomorphisms on `Λ^k` and the flat-torus Hodge
//! projection oracles.
//!
//! With `a_i = int_{e_i}` (inner multiplication) and `a_j* = e^j ∧`
//! (exterior multiplication), the transform machinery uses the matrices of
//! endomorphisms
//!
//! ```text
//! A1 = (a_i a_j*),   A2 = (a_i* a_j),   B = A1 − A2,
//! ```
//!
//! contracted against path increments: index `i` pairs with the increment
//! `dX^i`, index `j` with the covariant-derivative direction of `∇ω`. The
//! composition order inside each entry (`a_i ∘ a_j*` versus `a_j* ∘ a_i`)
//! is disambiguated executably: the contracted flat symbol must reproduce
//! the Fourier multiplier `I − 2kkᵀ/|k|²` of `S_B = (d*d − dd*)(a + □)^{-1}`;
//! the opposite order fails by sign. Both are implemented behind
//! [`CompositionOrder`], the validated one is the default.

use crate::numerics::spectral_norm;
use crate::spectral::{Basis, Mode, OneForm};
use crate::{Error, Result};

/// Composition order of the two factors inside each `(i, j)` entry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompositionOrder {
    /// `(a_i a_j*)ω = a_i(a_j*(ω))` — validated against the flat multiplier.
    #[default]
    RightToLeft,
    /// `(a_i a_j*)ω = a_j*(a_i(ω))` — kept for the disambiguation test.
    LeftToRight,
}

/// Action table of an `n×n` matrix of endomorphisms of `Λ^k`.
///
/// `dim_lambda` is `C(n, k)`; `entry[i][j]` is the `dim_lambda × dim_lambda`
/// matrix of the `(i, j)` component on the ordered monomial basis.
#[derive(Clone, Debug)]
pub struct FormEndomorphism {
    pub n: usize,
    pub k: usize,
    pub dim_lambda: usize,
    pub entry: Vec<Vec<Vec<Vec<f64>>>>,
}

impl FormEndomorphism {
    /// Operator norm of the block map `R^n ⊗ Λ^k → R^n ⊗ Λ^k`.
    pub fn op_norm(&self) -> f64 {
        let d = self.n * self.dim_lambda;
        let mut m = vec![vec![0.0; d]; d];
        for i in 0..self.n {
            for j in 0..self.n {
                for r in 0..self.dim_lambda {
                    for c in 0..self.dim_lambda {
                        m[i * self.dim_lambda + r][j * self.dim_lambda + c] =
                            self.entry[i][j][r][c];
                    }
                }
            }
        }
        spectral_norm(&m)
    }

    /// Flat symbol `Σ_{ij} u_i u_j entry[i][j]` for a unit covector `u`
    /// (the per-mode multiplier the Monte Carlo assembly realises).
    pub fn symbol(&self, u: [f64; 2]) -> Vec<Vec<f64>> {
        let mut s = vec![vec![0.0; self.dim_lambda]; self.dim_lambda];
        for i in 0..self.n {
            for j in 0..self.n {
                for r in 0..self.dim_lambda {
                    for c in 0..self.dim_lambda {
                        s[r][c] += u[i] * u[j] * self.entry[i][j][r][c];
                    }
                }
            }
        }
        s
    }

    /// Identity contraction `entry[i][j] = δ_ij Id` (plain gradient pairing).
    pub fn identity(n: usize, k: usize) -> Self {
        let dim = lambda_basis(n, k).len();
        let mut entry = vec![vec![vec![vec![0.0; dim]; dim]; n]; n];
        for (i, row) in entry.iter_mut().enumerate() {
            for r in 0..dim {
                row[i][r][r] = 1.0;
            }
        }
        Self { n, k, dim_lambda: dim, entry }
    }

    /// Apply the contracted action to a gradient table: given the matrix
    /// `grad[j][c] = ∂_j ω_c`, return `out[i][c'] = Σ_j (entry[i][j] ∂_j ω)_{c'}`.
    pub fn contract_gradient(&self, grad: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for i in 0..self.n {
            for j in 0..self.n {
                for r in 0..self.dim_lambda {
                    for c in 0..self.dim_lambda {
                        out[i][r] += self.entry[i][j][r][c] * grad[j][c];
                    }
                }
            }
        }
        out
    }
}

/// Ordered monomial basis of `Λ^k` over `R^n` as bitmasks.
fn lambda_basis(n: usize, k: usize) -> Vec<usize> {
    (0usize..(1 << n)).filter(|m| m.count_ones() as usize == k).collect()
}

/// `e^j ∧ ·` on a monomial: `None` if annihilated, else `(sign, monomial)`.
fn wedge(j: usize, mono: usize) -> Option<(f64, usize)> {
    if mono & (1 << j) != 0 {
        return None;
    }
    let below = (mono & ((1 << j) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, mono | (1 << j)))
}

/// `int_{e_i}` on a monomial.
fn interior(i: usize, mono: usize) -> Option<(f64, usize)> {
    if mono & (1 << i) == 0 {
        return None;
    }
    let below = (mono & ((1 << i) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, mono & !(1 << i)))
}

type AtomicOp = fn(usize, usize) -> Option<(f64, usize)>;

/// Matrix of `first ∘ second` (apply `second`, then `first`) on the `Λ^k`
/// basis, where each factor is `wedge` or `interior` with its index.
fn compose_matrix(
    basis: &[usize],
    first: (AtomicOp, usize),
    second: (AtomicOp, usize),
) -> Vec<Vec<f64>> {
    let dim = basis.len();
    let mut m = vec![vec![0.0; dim]; dim];
    for (c, &mono) in basis.iter().enumerate() {
        if let Some((s1, mid)) = (second.0)(second.1, mono) {
            if let Some((s2, out)) = (first.0)(first.1, mid) {
                let r = basis.iter().position(|&b| b == out).expect("closed on basis");
                m[r][c] += s1 * s2;
            }
        }
    }
    m
}

/// Assemble `A1 = (a_i a_j*)`, `A2 = (a_i* a_j)` and `B = A1 − A2` on `Λ^k`
/// by symbolic exterior-algebra evaluation on basis monomials.
pub fn build_endomorphisms(
    n: usize,
    k: usize,
    order: CompositionOrder,
) -> Result<(FormEndomorphism, FormEndomorphism, FormEndomorphism)> {
    if !(1..=2).contains(&n) || k > 1 {
        return Err(Error::Config(format!("endomorphisms for n={n}, k={k} not supported")));
    }
    let basis = lambda_basis(n, k);
    let dim = basis.len();
    let mut a1 = vec![vec![vec![vec![0.0; dim]; dim]; n]; n];
    let mut a2 = vec![vec![vec![vec![0.0; dim]; dim]; n]; n];
    let mut b = vec![vec![vec![vec![0.0; dim]; dim]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (m1, m2) = match order {
                CompositionOrder::RightToLeft => (
                    compose_matrix(&basis, (interior, i), (wedge, j)),
                    compose_matrix(&basis, (wedge, i), (interior, j)),
                ),
                CompositionOrder::LeftToRight => (
                    compose_matrix(&basis, (wedge, j), (interior, i)),
                    compose_matrix(&basis, (interior, j), (wedge, i)),
                ),
            };
            for r in 0..dim {
                for c in 0..dim {
                    a1[i][j][r][c] = m1[r][c];
                    a2[i][j][r][c] = m2[r][c];
                    b[i][j][r][c] = m1[r][c] - m2[r][c];
                }
            }
        }
    }
    let wrap = |entry| FormEndomorphism { n, k, dim_lambda: dim, entry };
    Ok((wrap(a1), wrap(a2), wrap(b)))
}

/// Brute-force anticommutation check `a_i a_j* + a_j* a_i = δ_ij Id` over
/// every monomial of the full exterior algebra.
pub fn anticommutator_defect(n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for mono in 0usize..(1 << n) {
                // a_i(a_j*(mono)) + a_j*(a_i(mono)) as a sum of signed monomials
                let mut acc = std::collections::HashMap::new();
                if let Some((s1, mid)) = wedge(j, mono) {
                    if let Some((s2, out)) = interior(i, mid) {
                        *acc.entry(out).or_insert(0.0) += s1 * s2;
                    }
                }
                if let Some((s1, mid)) = interior(i, mono) {
                    if let Some((s2, out)) = wedge(j, mid) {
                        *acc.entry(out).or_insert(0.0) += s1 * s2;
                    }
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                let got = acc.get(&mono).copied().unwrap_or(0.0);
                worst = worst.max((got - expect).abs());
                for (m, v) in acc {
                    if m != mono {
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Hodge projection oracles on the flat 2-torus
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HodgeKind {
    /// `dd*(a+□)^{-1}` — multiplier `kkᵀ/|k|² · |k|²/(a+|k|²)`.
    DdStar,
    /// `d*d(a+□)^{-1}` — multiplier `(I − kkᵀ/|k|²) · |k|²/(a+|k|²)`.
    DStarD,
    /// `(d*d − dd*)(a+□)^{-1}` — multiplier `(I − 2kkᵀ/|k|²) · |k|²/(a+|k|²)`.
    SB,
}

/// Apply a Hodge projection oracle to a 1-form on the flat 2-torus.
/// Harmonic (`k = 0`) modes are zeroed (flagged when they carried energy).
pub fn hodge_oracle(omega: &OneForm, kind: HodgeKind, a: f64) -> Result<OneForm> {
    let Basis::Fourier2 { .. } = omega.basis else {
        return Err(Error::Config("hodge_oracle expects a torus2 one-form".into()));
    };
    let modes = omega.basis.modes();
    let mut out = omega.clone();
    for (j, mode) in modes.iter().enumerate() {
        let Mode::Fourier2 { k, .. } = mode else { unreachable!() };
        let w = [omega.comps[0][j], omega.comps[1][j]];
        if *k == [0, 0] {
            if w != [0.0, 0.0] {
                out.zeroed_warning = true;
            }
            out.comps[0][j] = 0.0;
            out.comps[1][j] = 0.0;
            continue;
        }
        let kf = [k[0] as f64, k[1] as f64];
        let k2 = kf[0] * kf[0] + kf[1] * kf[1];
        let scale = k2 / (a + k2);
        let kw = (kf[0] * w[0] + kf[1] * w[1]) / k2;
        let proj = [kf[0] * kw, kf[1] * kw]; // kkᵀ/|k|² w
        let (o0, o1) = match kind {
            HodgeKind::DdStar => (proj[0], proj[1]),
            HodgeKind::DStarD => (w[0] - proj[0], w[1] - proj[1]),
            HodgeKind::SB => (w[0] - 2.0 * proj[0], w[1] - 2.0 * proj[1]),
        };
        out.comps[0][j] = scale * o0;
        out.comps[1][j] = scale * o1;
    }
    Ok(out)
}

/// Result of the `L²` identity check on `‖dd*(a+□)^{-1}ω‖² + ‖d*d(a+□)^{-1}ω‖²
/// = ‖□(a+□)^{-1}ω‖²` (which follows from `dd*dd* + d*dd*d = □²`).
#[derive(Clone, Copy, Debug)]
pub struct HodgeIdentityCheck {
    pub residual: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `‖□(a+□)^{-1}ω‖₂ ≤ ‖ω‖₂` margin (nonnegative when the contraction holds).
    pub contraction_margin: f64,
}

/// `|LHS − RHS|` of the projection identity, by Parseval; also checks the
/// companion contraction.
pub fn eq_identity_residual(omega: &OneForm, a: f64) -> Result<HodgeIdentityCheck> {
    let dd = hodge_oracle(omega, HodgeKind::DdStar, a)?;
    let dsd = hodge_oracle(omega, HodgeKind::DStarD, a)?;
    let lhs = dd.l2_norm_sq() + dsd.l2_norm_sq();
    // ‖□(a+□)^{-1}ω‖² per mode: (|k|²/(a+|k|²))² |ŵ|²
    let modes = omega.basis.modes();
    let mut rhs = 0.0;
    let mut omega_norm_sq = 0.0;
    for (j, mode) in modes.iter().enumerate() {
        let lam = omega.basis.lambda(mode);
        let wsq = (omega.comps[0][j] * omega.comps[0][j]
            + omega.comps[1][j] * omega.comps[1][j])
            * omega.basis.mode_norm_sq(mode);
        omega_norm_sq += wsq;
        if lam > 0.0 {
            let s = lam / (a + lam);
            rhs += s * s * wsq;
        }
    }
    let contraction_margin = omega_norm_sq.sqrt() - rhs.sqrt();
    assert!(
        contraction_margin >= -1e-12,
        "contraction violated: {} > {}",
        rhs.sqrt(),
        omega_norm_sq.sqrt()
    );
    Ok(HodgeIdentityCheck { residual: (lhs - rhs).abs(), lhs, rhs, contraction_margin })
}
