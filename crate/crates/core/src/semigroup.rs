//! Heat semigroups `e^{−tA}` and resolvents `(ξ + A)^{−1}` of assembled
//! operators, with finite-scale contraction, positivity, conservation and
//! domination checks, and Dirichlet truncation experiments on graph families.
//!
//! Contraction certificates are one-sided: ratios are sampled on random
//! sections, so a passing certificate is evidence, not an operator-norm bound.

use nalgebra::LU;
use rand::Rng;
use serde::Serialize;

use crate::bundle::{identity_connection, magnetic_connection, random_unitary_connection, Bundle, Connection, LpExponent, Potential, Section};
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::graph::{GraphFamily, Rule};
use crate::linalg::{self, expm, Expm};
use crate::operator::{assemble, BlockOperator};
use crate::tolerance;
use crate::{CMatrix, CVector, C64};

type Factor = LU<C64, nalgebra::Dyn, nalgebra::Dyn>;

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `{1e−2, …, 1e2}`, 9 points.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 9)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupResult {
    pub t: f64,
    #[serde(skip)]
    pub output: Section,
    pub method: &'static str,
    pub pade_degree: usize,
    pub squarings: u32,
    /// Backward-error bound of the Padé approximant relative to `‖tA‖_1`.
    pub error_estimate: f64,
}

/// `e^{−tA}` as a dense matrix.
pub fn heat_matrix(a: &BlockOperator, t: f64) -> Result<Expm> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(expm(&(a.to_dense() * C64::from(-t))))
}

pub fn heat_apply(a: &BlockOperator, t: f64, u: &Section) -> Result<SemigroupResult> {
    u.check(a.bundle())?;
    if t == 0.0 {
        return Ok(SemigroupResult {
            t,
            output: u.clone(),
            method: "identity",
            pade_degree: 0,
            squarings: 0,
            error_estimate: 0.0,
        });
    }
    let e = heat_matrix(a, t)?;
    let output = Section::from_stacked(a.bundle(), &(&e.matrix * u.stacked()))?;
    Ok(SemigroupResult {
        t,
        output,
        method: "pade-scaling-squaring",
        pade_degree: e.pade_degree,
        squarings: e.squarings,
        error_estimate: e.backward_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventResult {
    pub xi: f64,
    #[serde(skip)]
    pub output: Section,
    /// `‖(ξ + A)u − f‖ / (‖ξ + A‖·‖u‖ + ‖f‖)`, Euclidean.
    pub residual: f64,
}

fn shifted(a: &BlockOperator, xi: f64) -> CMatrix {
    let mut m = a.to_dense();
    for i in 0..m.nrows() {
        m[(i, i)] += C64::from(xi);
    }
    m
}

fn condition_estimate(m: &CMatrix) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) => linalg::one_norm(m) * linalg::one_norm(&inv),
        None => f64::INFINITY,
    }
}

fn factor_shifted(a: &BlockOperator, xi: f64) -> Result<(CMatrix, Factor)> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::arg(format!("ξ must be positive and finite, got {xi}")));
    }
    let m = shifted(a, xi);
    let lu = m.clone().lu();
    Ok((m, lu))
}

fn solve_checked(m: &CMatrix, lu: &Factor, f: &CVector) -> Result<(CVector, f64)> {
    let u = lu.solve(f).ok_or_else(|| Error::Singular {
        condition: f64::INFINITY,
    })?;
    let res = (m * &u - f).norm();
    let denom = linalg::one_norm(m) * u.norm() + f.norm();
    let residual = if denom == 0.0 { 0.0 } else { res / denom };
    if !residual.is_finite() || residual > tolerance::RESOLVENT_RESIDUAL {
        return Err(Error::Singular {
            condition: condition_estimate(m),
        });
    }
    Ok((u, residual))
}

/// Solves `(ξ + A) u = f` by LU factorization.
pub fn resolvent_apply(a: &BlockOperator, xi: f64, f: &Section) -> Result<ResolventResult> {
    f.check(a.bundle())?;
    let (m, lu) = factor_shifted(a, xi)?;
    let (u, residual) = solve_checked(&m, &lu, &f.stacked())?;
    Ok(ResolventResult {
        xi,
        output: Section::from_stacked(a.bundle(), &u)?,
        residual,
    })
}

/// Per-exponent maxima of a [`ContractionCertificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentRatios {
    pub p: String,
    pub max_semigroup_ratio: f64,
    pub max_resolvent_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCertificate {
    pub samples: usize,
    pub t_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub per_exponent: Vec<ExponentRatios>,
    /// `max ‖e^{−tA}u‖_p / ‖u‖_p` over samples, times and exponents.
    pub max_semigroup_ratio: f64,
    /// `max ξ‖(ξ + A)^{−1}f‖_p / ‖f‖_p` over samples, ξ and exponents.
    pub max_resolvent_ratio: f64,
}

impl ContractionCertificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_semigroup_ratio <= 1.0 + tol && self.max_resolvent_ratio <= 1.0 + tol
    }
}

/// Sample section `s` of a certificate run: a complex Gaussian section
/// restricted to a random nonempty vertex subset.
fn sample_section(bundle: &Bundle, seed: u64, s: usize) -> Section {
    let mut rng = stream_rng(seed, s as u64);
    let mut u = Section::random(bundle, &mut rng);
    let keep: f64 = rng.random_range(0.2..1.0);
    let anchor = rng.random_range(0..bundle.n());
    for x in 0..bundle.n() {
        if x != anchor && rng.random::<f64>() > keep {
            *u.at_mut(x) = CVector::zeros(bundle.dim(x));
        }
    }
    u
}

fn stacked_lp(bundle: &Bundle, v: &CVector, m: &[f64], p: LpExponent) -> Result<f64> {
    crate::bundle::lp_norm(&Section::from_stacked(bundle, v)?, m, p)
}

/// Samples `‖e^{−tA}u‖_p/‖u‖_p` and `ξ‖(ξ+A)^{−1}f‖_p/‖f‖_p`. Each sample
/// draws from its own seeded stream, so the result does not depend on the
/// execution mode.
#[allow(clippy::too_many_arguments)]
pub fn contraction_certificate(
    a: &BlockOperator,
    ps: &[LpExponent],
    t_grid: &[f64],
    xi_grid: &[f64],
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<ContractionCertificate> {
    if a.dim() == 0 {
        return Err(Error::arg("operator has no coordinates"));
    }
    for p in ps {
        if let LpExponent::Finite(v) = p {
            if !(*v >= 1.0) {
                return Err(Error::arg(format!("ℓ^p exponent must be ≥ 1, got {v}")));
            }
        }
    }
    let heat: Vec<CMatrix> = t_grid
        .iter()
        .map(|&t| heat_matrix(a, t).map(|e| e.matrix))
        .collect::<Result<_>>()?;
    let resolvents: Vec<(f64, CMatrix, Factor)> = xi_grid
        .iter()
        .map(|&xi| factor_shifted(a, xi).map(|(m, lu)| (xi, m, lu)))
        .collect::<Result<_>>()?;
    let bundle = a.bundle();
    let m = a.measure();

    // per sample: (semigroup max, resolvent max) for each p
    let per_sample: Vec<Vec<(f64, f64)>> = exec.try_map(samples, |s| -> Result<Vec<(f64, f64)>> {
        let u = sample_section(bundle, seed, s);
        let stacked = u.stacked();
        let heat_out: Vec<CVector> = heat.iter().map(|e| e * &stacked).collect();
        let res_out: Vec<(f64, CVector)> = resolvents
            .iter()
            .map(|(xi, mat, lu)| solve_checked(mat, lu, &stacked).map(|(v, _)| (*xi, v)))
            .collect::<Result<_>>()?;
        ps.iter()
            .map(|&p| {
                let base = crate::bundle::lp_norm(&u, m, p)?;
                let mut semi: f64 = 0.0;
                for v in &heat_out {
                    semi = semi.max(stacked_lp(bundle, v, m, p)? / base);
                }
                let mut res: f64 = 0.0;
                for (xi, v) in &res_out {
                    res = res.max(xi * stacked_lp(bundle, v, m, p)? / base);
                }
                Ok((semi, res))
            })
            .collect()
    })?;

    let per_exponent: Vec<ExponentRatios> = ps
        .iter()
        .enumerate()
        .map(|(i, p)| ExponentRatios {
            p: p.label(),
            max_semigroup_ratio: per_sample.iter().map(|r| r[i].0).fold(0.0, f64::max),
            max_resolvent_ratio: per_sample.iter().map(|r| r[i].1).fold(0.0, f64::max),
        })
        .collect();
    Ok(ContractionCertificate {
        samples,
        t_grid: t_grid.to_vec(),
        xi_grid: xi_grid.to_vec(),
        max_semigroup_ratio: per_exponent.iter().map(|r| r.max_semigroup_ratio).fold(0.0, f64::max),
        max_resolvent_ratio: per_exponent.iter().map(|r| r.max_resolvent_ratio).fold(0.0, f64::max),
        per_exponent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    /// Smallest real entry of `(ξ + Δ)^{−1}` over the grid.
    pub min_entry: f64,
    pub worst_xi: f64,
    pub pass: bool,
}

fn require_scalar(a: &BlockOperator, what: &str) -> Result<()> {
    if !a.meta().scalar {
        return Err(Error::arg(format!("{what} requires a scalar operator (line bundle, identity connection)")));
    }
    Ok(())
}

/// Entrywise nonnegativity of `(ξ + Δ)^{−1}` for the scalar Laplacian.
pub fn positivity_check(a: &BlockOperator, xi_grid: &[f64]) -> Result<PositivityReport> {
    require_scalar(a, "positivity check")?;
    if !a.meta().potential_zero {
        return Err(Error::arg("positivity check requires W = 0"));
    }
    let mut min_entry = f64::INFINITY;
    let mut worst_xi = f64::NAN;
    for &xi in xi_grid {
        let (m, _) = factor_shifted(a, xi)?;
        let inv = m.clone().try_inverse().ok_or(Error::Singular {
            condition: f64::INFINITY,
        })?;
        let lo = inv.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if lo < min_entry {
            min_entry = lo;
            worst_xi = xi;
        }
    }
    Ok(PositivityReport {
        min_entry,
        worst_xi,
        pass: min_entry >= -tolerance::POSITIVITY,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassReport {
    /// `(t, ‖e^{−tA}1 − 1‖_∞)` per grid point.
    pub deviations: Vec<(f64, f64)>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// `max_t ‖e^{−tA}1 − 1‖_∞`. A diagonal potential is accepted so that a
/// killing term can serve as a negative control.
pub fn mass_conservation(a: &BlockOperator, t_grid: &[f64]) -> Result<MassReport> {
    require_scalar(a, "mass conservation")?;
    let ones = Section::real(&vec![1.0; a.bundle().n()]);
    let mut deviations = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let out = heat_apply(a, t, &ones)?.output;
        let dev = out
            .values()
            .iter()
            .map(|v| (v[0] - C64::from(1.0)).norm())
            .fold(0.0, f64::max);
        deviations.push((t, dev));
    }
    let max_deviation = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(MassReport {
        deviations,
        max_deviation,
        pass: max_deviation <= tolerance::MASS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    /// `max_{u,t,x} |(e^{−tΔ^{F,Φ}}u)(x)| − (e^{−tΔ}|u|)(x)`
    pub max_violation: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Semigroup domination `|e^{−tΔ^{F,Φ}}u| ≤ e^{−tΔ}|u|` on sampled sections.
pub fn kato_domination(
    a_bundle: &BlockOperator,
    a_scalar: &BlockOperator,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<DominationReport> {
    require_scalar(a_scalar, "domination reference")?;
    if !a_bundle.meta().potential_zero || !a_scalar.meta().potential_zero {
        return Err(Error::arg("domination requires W = 0 on both operators"));
    }
    if a_bundle.meta().graph_hash != a_scalar.meta().graph_hash {
        return Err(Error::arg("domination requires both operators on the same weighted graph"));
    }
    let big: Vec<CMatrix> = t_grid.iter().map(|&t| heat_matrix(a_bundle, t).map(|e| e.matrix)).collect::<Result<_>>()?;
    let small: Vec<CMatrix> = t_grid.iter().map(|&t| heat_matrix(a_scalar, t).map(|e| e.matrix)).collect::<Result<_>>()?;
    let bundle = a_bundle.bundle();
    let violations = exec.try_map(samples, |s| -> Result<f64> {
        let u = sample_section(bundle, seed, s);
        let abs_u = CVector::from_iterator(bundle.n(), u.fiber_norms().into_iter().map(C64::from));
        let stacked = u.stacked();
        let mut worst = f64::NEG_INFINITY;
        for (eb, es) in big.iter().zip(&small) {
            let left = Section::from_stacked(bundle, &(eb * &stacked))?.fiber_norms();
            let right = es * &abs_u;
            for x in 0..bundle.n() {
                worst = worst.max(left[x] - right[x].re);
            }
        }
        Ok(worst)
    })?;
    let max_violation = violations.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(DominationReport {
        max_violation,
        samples,
        pass: max_violation <= tolerance::DOMINATION,
    })
}

/// `‖e^{−(t+s)A}u − e^{−tA}e^{−sA}u‖ / ‖u‖`, Euclidean. Relative to the
/// input because outputs may decay to nothing for large times.
pub fn semigroup_law_defect(a: &BlockOperator, t: f64, s: f64, u: &Section) -> Result<f64> {
    let v = u.stacked();
    let direct = &heat_matrix(a, t + s)?.matrix * &v;
    let composed = &heat_matrix(a, t)?.matrix * (&heat_matrix(a, s)?.matrix * &v);
    let norm = v.norm();
    Ok(if norm == 0.0 { 0.0 } else { (direct - composed).norm() / norm })
}

/// `‖(u − e^{−hA}u)/h − Au‖`; first order in `h`.
pub fn generator_defect(a: &BlockOperator, h: f64, u: &Section) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::arg("step must be positive"));
    }
    let v = u.stacked();
    let e = &heat_matrix(a, h)?.matrix * &v;
    let quotient = (&v - e) / C64::from(h);
    Ok((quotient - a.apply(&v)?).norm())
}

/// Relative defect of `R(ξ) − R(η) = (η − ξ) R(ξ) R(η)` applied to `f`.
pub fn resolvent_identity_defect(a: &BlockOperator, xi: f64, eta: f64, f: &Section) -> Result<f64> {
    let v = f.stacked();
    let (mx, lx) = factor_shifted(a, xi)?;
    let (me, le) = factor_shifted(a, eta)?;
    let rx = solve_checked(&mx, &lx, &v)?.0;
    let re = solve_checked(&me, &le, &v)?.0;
    let rre = solve_checked(&mx, &lx, &re)?.0;
    let left = &rx - &re;
    let right = rre * C64::from(eta - xi);
    let scale = rx.norm() + re.norm() + right.norm();
    Ok(if scale == 0.0 { 0.0 } else { (left - right).norm() / scale })
}

/// Connection used on every truncation of a family.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionRule {
    Identity { dim: usize },
    /// Line bundle with `θ(x, y) = theta` on every edge `x < y`.
    UniformPhase { theta: f64 },
    /// Seeded unitary maps; an edge keeps its map across horizons.
    Random { dim: usize, seed: u64 },
}

impl ConnectionRule {
    fn dim(&self) -> usize {
        match self {
            ConnectionRule::Identity { dim } | ConnectionRule::Random { dim, .. } => *dim,
            ConnectionRule::UniformPhase { .. } => 1,
        }
    }

    fn build(&self, g: &crate::WeightedGraph, bundle: &Bundle) -> Result<Connection> {
        match self {
            ConnectionRule::Identity { .. } => identity_connection(g, bundle),
            ConnectionRule::UniformPhase { theta } => {
                let phases: Vec<_> = g.edges().map(|(x, y, _)| (x, y, *theta)).collect();
                magnetic_connection(g, &phases)
            }
            ConnectionRule::Random { seed, .. } => random_unitary_connection(g, bundle, *seed),
        }
    }
}

/// Potential used on every truncation: `W(x) = rule(generation(x))·I`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialRule {
    Zero,
    ByGeneration(Rule),
}

/// Initial data, supported in the smallest truncation.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialRule {
    /// First fiber coordinate at the root.
    RootIndicator,
    /// Values on vertices `0..values.len()`; zero elsewhere.
    Explicit(Vec<CVector>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub horizons: Vec<usize>,
    pub t: f64,
    pub core_size: usize,
    /// Output restricted to the core, per horizon.
    #[serde(skip)]
    pub outputs: Vec<Section>,
    /// m-weighted ℓ² norm of successive differences on the core.
    pub differences: Vec<f64>,
    pub monotone: bool,
    pub final_difference: f64,
}

impl TruncationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.monotone && self.final_difference <= tol
    }
}

/// Heat flow of Dirichlet truncations: the potential gains
/// `boundary_weight/m`, which kills mass leaving through the horizon.
pub fn truncation_consistency(
    family: &GraphFamily,
    connection: &ConnectionRule,
    potential: &PotentialRule,
    horizons: &[usize],
    t: f64,
    initial: &InitialRule,
) -> Result<TruncationReport> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("horizons must be nonempty and strictly increasing"));
    }
    let dim = connection.dim();
    let core_size = family.vertex_count(horizons[0]);
    let mut outputs = Vec::with_capacity(horizons.len());
    let mut core_measure = Vec::new();
    for &h in horizons {
        let trunc = family.truncate(h)?;
        let g = &trunc.graph;
        let bundle = Bundle::uniform(g.n(), dim)?;
        let conn = connection.build(g, &bundle)?;
        let killing: Vec<f64> = (0..g.n()).map(|x| trunc.boundary_weight[x] / g.m(x)).collect();
        let mut w = Potential::scalar_multiple(&bundle, &killing)?;
        if let PotentialRule::ByGeneration(rule) = potential {
            let extra: Vec<f64> = trunc.generation.iter().map(|&k| rule.at(k)).collect();
            w = w.add(&Potential::scalar_multiple(&bundle, &extra)?)?;
        }
        let mut u = Section::zeros(&bundle);
        match initial {
            InitialRule::RootIndicator => u.at_mut(0)[0] = C64::from(1.0),
            InitialRule::Explicit(values) => {
                if values.len() > core_size {
                    return Err(Error::arg(format!(
                        "initial data on {} vertices exceeds the smallest truncation ({core_size} vertices)",
                        values.len()
                    )));
                }
                for (x, v) in values.iter().enumerate() {
                    if v.len() != dim {
                        return Err(Error::dims(format!("initial fiber at vertex {x}"), dim, v.len()));
                    }
                    *u.at_mut(x) = v.clone();
                }
            }
        }
        let a = assemble(g, &bundle, &conn, &w)?;
        let out = heat_apply(&a, t, &u)?.output;
        core_measure = g.measure()[..core_size].to_vec();
        outputs.push(Section::from_values(out.values()[..core_size].to_vec()));
    }
    let differences: Vec<f64> = outputs
        .windows(2)
        .map(|w| {
            let d = w[1].sub(&w[0]);
            crate::bundle::inner_product(&d, &d, &core_measure).map(|z| z.re.max(0.0).sqrt())
        })
        .collect::<Result<_>>()?;
    let monotone = differences.windows(2).all(|w| w[1] <= w[0]);
    let final_difference = differences.last().copied().unwrap_or(0.0);
    Ok(TruncationReport {
        horizons: horizons.to_vec(),
        t,
        core_size,
        outputs,
        differences,
        monotone,
        final_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FamilyKind, WeightedGraph};
    use crate::operator::assemble;

    fn scalar_op(g: &WeightedGraph, w: &[f64]) -> BlockOperator {
        let b = Bundle::uniform(g.n(), 1).unwrap();
        let conn = identity_connection(g, &b).unwrap();
        assemble(g, &b, &conn, &Potential::scalar_multiple(&b, w).unwrap()).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        let g = default_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[8] - 1e2).abs() < 1e-10);
        assert!((g[4] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn heat_two_vertex_closed_form() {
        let a = scalar_op(&WeightedGraph::path(2), &[0.0, 0.0]);
        let u = Section::real(&[1.0, 0.0]);
        assert_eq!(heat_apply(&a, 0.0, &u).unwrap().output, u);
        for t in [0.1, 1.0, 7.5] {
            let out = heat_apply(&a, t, &u).unwrap().output;
            let e = (-2.0 * t).exp();
            assert!((out.at(0)[0].re - (1.0 + e) / 2.0).abs() < 1e-14);
            assert!((out.at(1)[0].re - (1.0 - e) / 2.0).abs() < 1e-14);
        }
        assert!(heat_apply(&a, -1.0, &u).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let a = scalar_op(&WeightedGraph::path(2), &[0.0, 0.0]);
        let out = resolvent_apply(&a, 1.0, &Section::real(&[1.0, 0.0])).unwrap().output;
        assert!((out.at(0)[0].re - 2.0 / 3.0).abs() < 1e-15);
        assert!((out.at(1)[0].re - 1.0 / 3.0).abs() < 1e-15);
        let ones = resolvent_apply(&a, 0.3, &Section::real(&[0.3, 0.3])).unwrap().output;
        assert!(ones.values().iter().all(|v| (v[0].re - 1.0).abs() < 1e-14));
        assert!(resolvent_apply(&a, 0.0, &Section::real(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn singular_resolvent_reported() {
        // ξ + A singular: A = −ξ on a single vertex
        let g = WeightedGraph::new(vec![1.0], &[]).unwrap();
        let a = scalar_op(&g, &[-2.0]);
        assert!(matches!(resolvent_apply(&a, 2.0, &Section::real(&[1.0])), Err(Error::Singular { .. })));
    }

    #[test]
    fn positivity_two_vertex_and_magnetic_rejected() {
        let a = scalar_op(&WeightedGraph::path(2), &[0.0, 0.0]);
        let r = positivity_check(&a, &[1.0]).unwrap();
        assert!((r.min_entry - 1.0 / 3.0).abs() < 1e-15 && r.pass);
        let g = WeightedGraph::path(2);
        let b = Bundle::uniform(2, 1).unwrap();
        let conn = magnetic_connection(&g, &[(0, 1, std::f64::consts::PI)]).unwrap();
        let mag = assemble(&g, &b, &conn, &Potential::zeros(&b)).unwrap();
        assert!(positivity_check(&mag, &[1.0]).is_err());
    }

    #[test]
    fn mass_and_killing() {
        let a = scalar_op(&WeightedGraph::cycle(5), &[0.0; 5]);
        let r = mass_conservation(&a, &[0.0, 1.0, 10.0]).unwrap();
        assert_eq!(r.deviations[0].1, 0.0);
        assert!(r.pass);
        let killed = scalar_op(&WeightedGraph::cycle(5), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        let r = mass_conservation(&killed, &[0.1, 1.0, 10.0]).unwrap();
        assert!(!r.pass);
        assert!(r.deviations[0].1 < r.deviations[1].1 && r.deviations[1].1 < r.deviations[2].1);
    }

    #[test]
    fn domination_magnetic_edge_is_strict() {
        let g = WeightedGraph::path(2);
        let b = Bundle::uniform(2, 1).unwrap();
        let conn = magnetic_connection(&g, &[(0, 1, std::f64::consts::PI)]).unwrap();
        let mag = assemble(&g, &b, &conn, &Potential::zeros(&b)).unwrap();
        let scal = scalar_op(&g, &[0.0, 0.0]);
        let u = Section::real(&[1.0, 1.0]);
        let left = heat_apply(&mag, 1.0, &u).unwrap().output;
        let right = heat_apply(&scal, 1.0, &u).unwrap().output;
        // u is an eigenvector with eigenvalue 2 for the twisted edge and 0 for the scalar one
        assert!((left.at(0)[0].re - (-2.0f64).exp()).abs() < 1e-14);
        assert!((right.at(0)[0].re - 1.0).abs() < 1e-14);
        let r = kato_domination(&mag, &scal, &default_grid(), 20, 1, Execution::Sequential).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn single_vertex_certificate() {
        let g = WeightedGraph::new(vec![1.0], &[]).unwrap();
        let a = scalar_op(&g, &[0.0]);
        let c = contraction_certificate(&a, &[LpExponent::Finite(2.0)], &[0.0, 1.0], &[1.0], 5, 0, Execution::Sequential).unwrap();
        assert!((c.max_semigroup_ratio - 1.0).abs() < 1e-15);
        assert!((c.max_resolvent_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_ray_converges() {
        let fam = GraphFamily::unit(FamilyKind::Ray);
        let r = truncation_consistency(
            &fam,
            &ConnectionRule::Identity { dim: 1 },
            &PotentialRule::Zero,
            &[10, 20, 40],
            1.0,
            &InitialRule::RootIndicator,
        )
        .unwrap();
        assert!(r.passes(tolerance::TRUNCATION), "{:?}", r.differences);
        let zero = truncation_consistency(
            &fam,
            &ConnectionRule::Identity { dim: 1 },
            &PotentialRule::Zero,
            &[10, 20, 40],
            0.0,
            &InitialRule::RootIndicator,
        )
        .unwrap();
        assert!(zero.differences.iter().all(|&d| d == 0.0));
        let too_wide = InitialRule::Explicit(vec![CVector::from_element(1, C64::from(1.0)); 12]);
        assert!(truncation_consistency(&fam, &ConnectionRule::Identity { dim: 1 }, &PotentialRule::Zero, &[10, 20], 1.0, &too_wide).is_err());
    }
}
