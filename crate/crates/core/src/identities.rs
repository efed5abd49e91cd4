//! Exact identities and pointwise inequalities evaluated numerically:
//! Green's formula, Kato's inequality, the ground state transform and the
//! ℓ^p accretivity pairing.
//!
//! Deviations are compared against `tol · (1 + Σ|terms|)` where the sum runs
//! over every summand that entered the computation.

use serde::Serialize;

use crate::bundle::{fiber_inner, inner_product, Bundle, Connection, Potential, Section};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::operator::{bundle_laplacian_apply, check_potential_selfadjoint, scalar_laplacian_apply, schrodinger_apply};
use crate::tolerance;
use crate::C64;

/// The three expressions of Green's formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleReport {
    /// `Σ m ⟨H̃_{W,Φ} u, v⟩`
    pub value_sum1: C64,
    /// `Σ m ⟨u, H̃_{W^*,Φ} v⟩`
    pub value_sum2: C64,
    /// `½ Σ b ⟨u(x) − Φ_{y,x}u(y), v(x) − Φ_{y,x}v(y)⟩ + Σ m ⟨W u, v⟩`
    pub value_form: C64,
    /// Largest pairwise absolute difference.
    pub deviation: f64,
    /// `1 + Σ|terms|`.
    pub scale: f64,
}

impl TripleReport {
    pub fn relative_deviation(&self) -> f64 {
        self.deviation / self.scale
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.deviation <= tol * self.scale
    }
}

pub fn greens_formula_triple(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    u: &Section,
    v: &Section,
) -> Result<TripleReport> {
    u.check(bundle)?;
    v.check(bundle)?;
    let m = g.measure();
    let hu = schrodinger_apply(g, bundle, conn, w, u)?;
    let hv_adj = schrodinger_apply(g, bundle, conn, &w.adjoint(), v)?;

    let mut terms = 0.0;
    let mut sum1 = C64::new(0.0, 0.0);
    let mut sum2 = C64::new(0.0, 0.0);
    for x in 0..g.n() {
        let a = fiber_inner(hu.at(x), v.at(x)) * m[x];
        let b = fiber_inner(u.at(x), hv_adj.at(x)) * m[x];
        terms += a.norm() + b.norm();
        sum1 += a;
        sum2 += b;
    }

    let mut form = C64::new(0.0, 0.0);
    for x in 0..g.n() {
        for &(y, bxy) in g.neighbors(x) {
            let du = u.at(x) - conn.transport(y, x, u.at(y));
            let dv = v.at(x) - conn.transport(y, x, v.at(y));
            let t = fiber_inner(&du, &dv) * (0.5 * bxy);
            terms += t.norm();
            form += t;
        }
        let t = fiber_inner(&(w.at(x) * u.at(x)), v.at(x)) * m[x];
        terms += t.norm();
        form += t;
    }

    let deviation = (sum1 - sum2).norm().max((sum1 - form).norm()).max((sum2 - form).norm());
    Ok(TripleReport {
        value_sum1: sum1,
        value_sum2: sum2,
        value_form: form,
        deviation,
        scale: 1.0 + terms,
    })
}

/// Per-vertex Kato gap `Re⟨(Δ^{F,Φ}u)(x), u(x)⟩ − |u(x)|·(Δ|u|)(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KatoReport {
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    /// Largest magnitude of the two terms at any vertex.
    pub scale: f64,
}

impl KatoReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_gap >= -tol
    }
}

pub fn kato_gap(g: &WeightedGraph, bundle: &Bundle, conn: &Connection, u: &Section) -> Result<KatoReport> {
    let lap = bundle_laplacian_apply(g, bundle, conn, u)?;
    let abs_u: Vec<C64> = u.fiber_norms().into_iter().map(C64::from).collect();
    let lap_abs = scalar_laplacian_apply(g, &abs_u)?;
    let mut scale: f64 = 0.0;
    let gaps: Vec<f64> = (0..g.n())
        .map(|x| {
            let left = fiber_inner(lap.at(x), u.at(x)).re;
            let right = abs_u[x].re * lap_abs[x].re;
            scale = scale.max(left.abs()).max(right.abs());
            left - right
        })
        .collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KatoReport {
        min_gap: if gaps.is_empty() { 0.0 } else { min_gap },
        gaps,
        scale,
    })
}

/// Both sides of the ground state transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateReport {
    /// `((H̃ − λ)(g u), g u)`
    pub left: C64,
    /// `½ Σ b (g(x) − g(y))² Re⟨u(x), Φ_{y,x} u(y)⟩`
    pub right: f64,
    pub deviation: f64,
    pub scale: f64,
    /// Relative residual of `(H̃ − λ) u = 0` that was accepted.
    pub residual: f64,
}

impl GroundStateReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.deviation <= tol * self.scale
    }
}

/// `‖(H̃ − λ)u‖ / (‖H̃u‖ + |λ|‖u‖ + ‖u‖)` in the m-weighted ℓ² norm; zero
/// for `u = 0`.
pub fn eigen_residual(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    lambda: f64,
    u: &Section,
) -> Result<f64> {
    let hu = schrodinger_apply(g, bundle, conn, w, u)?;
    let r = hu.sub(&u.scale(C64::from(lambda)));
    let m = g.measure();
    let norm = |s: &Section| -> Result<f64> { Ok(inner_product(s, s, m)?.re.max(0.0).sqrt()) };
    let nu = norm(u)?;
    if nu == 0.0 {
        return Ok(0.0);
    }
    Ok(norm(&r)? / (norm(&hu)? + lambda.abs() * nu + nu))
}

pub fn ground_state_identity(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    lambda: f64,
    u: &Section,
    gfun: &[f64],
) -> Result<GroundStateReport> {
    if gfun.len() != g.n() {
        return Err(Error::dims("g length", g.n(), gfun.len()));
    }
    if !check_potential_selfadjoint(w) {
        return Err(Error::Precondition {
            what: "ground state transform requires a self-adjoint potential".into(),
            residual: crate::operator::potential_selfadjoint_defect(w),
        });
    }
    let residual = eigen_residual(g, bundle, conn, w, lambda, u)?;
    if residual > tolerance::EIGEN_RESIDUAL {
        return Err(Error::Precondition {
            what: "(H - λ)u = 0 is not satisfied".into(),
            residual,
        });
    }
    let m = g.measure();
    let gu = u.scaled_by(gfun);
    let hgu = schrodinger_apply(g, bundle, conn, w, &gu)?;
    let mut terms = 0.0;
    let mut left = C64::new(0.0, 0.0);
    for x in 0..g.n() {
        let shifted = hgu.at(x) - gu.at(x) * C64::from(lambda);
        let t = fiber_inner(&shifted, gu.at(x)) * m[x];
        terms += t.norm();
        left += t;
    }
    let mut right = 0.0;
    for x in 0..g.n() {
        for &(y, bxy) in g.neighbors(x) {
            let dg = gfun[x] - gfun[y];
            let t = 0.5 * bxy * dg * dg * fiber_inner(u.at(x), &conn.transport(y, x, u.at(y))).re;
            terms += t.abs();
            right += t;
        }
    }
    Ok(GroundStateReport {
        left,
        right,
        deviation: (left - C64::from(right)).norm(),
        scale: 1.0 + terms,
        residual,
    })
}

/// `Re Σ m ⟨(H̃u)(x), u(x)|u(x)|^{p−2}⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingReport {
    pub p: f64,
    pub value: f64,
    /// `1 + Σ m |(H̃u)(x)| |u(x)|^{p−1}`
    pub scale: f64,
}

impl PairingReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.value >= -tol * self.scale
    }
}

/// Vertices with `u(x) = 0` contribute 0, the limit value for `p < 2`.
pub fn accretivity_pairing(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    u: &Section,
    p: f64,
) -> Result<PairingReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("pairing exponent must be a finite p ≥ 1, got {p}")));
    }
    let hu = schrodinger_apply(g, bundle, conn, w, u)?;
    let m = g.measure();
    let mut value = 0.0;
    let mut scale = 1.0;
    for x in 0..g.n() {
        let ux = u.at(x);
        let norm = ux.norm();
        if norm == 0.0 {
            continue;
        }
        let weight = norm.powf(p - 2.0);
        value += m[x] * weight * fiber_inner(hu.at(x), ux).re;
        scale += m[x] * hu.at(x).norm() * norm.powf(p - 1.0);
    }
    Ok(PairingReport { p, value, scale })
}

/// `a^p + b^p − a b^{p−1} − b a^{p−1}` for `a, b ≥ 0`; nonnegative by Young's
/// inequality.
pub fn young_gap(a: f64, b: f64, p: f64) -> f64 {
    if p == 1.0 {
        return 0.0;
    }
    a.powf(p) + b.powf(p) - a * b.powf(p - 1.0) - b * a.powf(p - 1.0)
}

/// One line of a batch verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub check: String,
    pub instance_seed: u64,
    pub deviation: f64,
    pub pass: bool,
}
