//! Path metrics, intrinsic metrics, distance to the Cauchy boundary, the
//! regularity sets `X_ε`, the cutoffs `f_ε` and `g_α`, and the Agmon-type
//! estimate used to rule out nonzero solutions of `(H̃ − λ)v = 0`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Serialize, Serializer};

use crate::bundle::{fiber_inner, inner_product, Bundle, Connection, Potential, Section};
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::graph::{weighted_degree, GraphFamily, Tail, VertexId, WeightedGraph};
use crate::identities::eigen_residual;
use crate::linalg;
use crate::operator::{check_potential_selfadjoint, potential_selfadjoint_defect, schrodinger_apply};
use crate::tolerance;
use crate::C64;

/// A distance or the marker for "infinitely far". Compares above every
/// finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<f64> {
        match self {
            Distance::Finite(v) => Some(v),
            Distance::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Distance::Infinite)
    }

    /// `self ≥ value`, with `∞` above everything.
    pub fn at_least(self, value: f64) -> bool {
        match self {
            Distance::Finite(v) => v >= value,
            Distance::Infinite => true,
        }
    }

    /// `1/D²`, zero at infinity.
    pub fn inverse_square(self) -> f64 {
        match self {
            Distance::Finite(v) => 1.0 / (v * v),
            Distance::Infinite => 0.0,
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => a.partial_cmp(b),
            (Distance::Finite(_), Distance::Infinite) => Some(Ordering::Less),
            (Distance::Infinite, Distance::Finite(_)) => Some(Ordering::Greater),
            (Distance::Infinite, Distance::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(v) => s.serialize_f64(*v),
            Distance::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Edge lengths `σ(x, y) = σ(y, x) > 0` on exactly the edges of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMetric {
    sigma: BTreeMap<(usize, usize), f64>,
}

impl PathMetric {
    /// `entries` lists `(u, v, σ)` in either orientation, once per edge.
    pub fn new(g: &WeightedGraph, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sigma = BTreeMap::new();
        for &(u, v, value) in entries {
            if u >= g.n() || v >= g.n() {
                return Err(Error::VertexOutOfRange { vertex: u.max(v), n: g.n() });
            }
            if g.weight(u, v) <= 0.0 {
                return Err(Error::arg(format!("σ given on non-edge ({u},{v})")));
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::arg(format!("σ({u},{v}) = {value} must be positive")));
            }
            if sigma.insert((u.min(v), u.max(v)), value).is_some() {
                return Err(Error::arg(format!("σ given twice on edge ({u},{v})")));
            }
        }
        for (x, y, _) in g.edges() {
            if !sigma.contains_key(&(x, y)) {
                return Err(Error::arg(format!("σ missing on edge ({x},{y})")));
            }
        }
        Ok(Self { sigma })
    }

    /// `σ ≡ value` on every edge.
    pub fn uniform(g: &WeightedGraph, value: f64) -> Result<Self> {
        let entries: Vec<_> = g.edges().map(|(x, y, _)| (x, y, value)).collect();
        Self::new(g, &entries)
    }

    pub fn sigma(&self, x: usize, y: usize) -> f64 {
        self.sigma[&(x.min(y), x.max(y))]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.sigma.iter().map(|(&(x, y), &s)| (x, y, s))
    }
}

#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Label-setting shortest paths from `source`, stopping once the settled
/// distance exceeds `cutoff`. Unreached vertices get `∞`.
fn dijkstra(g: &WeightedGraph, metric: &PathMetric, source: usize, cutoff: f64) -> Vec<Distance> {
    let mut dist = vec![f64::INFINITY; g.n()];
    let mut done = vec![false; g.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Key(0.0, source));
    while let Some(Key(d, x)) = heap.pop() {
        if done[x] {
            continue;
        }
        if d > cutoff {
            break;
        }
        done[x] = true;
        for &(y, _) in g.neighbors(x) {
            let nd = d + metric.sigma(x, y);
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(Key(nd, y));
            }
        }
    }
    dist.into_iter()
        .zip(done)
        .map(|(d, settled)| if settled { Distance::Finite(d) } else { Distance::Infinite })
        .collect()
}

/// `d_σ(source, ·)`; `∞` across components.
pub fn shortest_path_metric(g: &WeightedGraph, metric: &PathMetric, source: VertexId) -> Result<Vec<Distance>> {
    if source.0 >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: source.0, n: g.n() });
    }
    Ok(dijkstra(g, metric, source.0, f64::INFINITY))
}

/// All-pairs `d_σ`, one Dijkstra run per source.
pub fn all_pairs_metric(g: &WeightedGraph, metric: &PathMetric, exec: Execution) -> Vec<Vec<Distance>> {
    exec.map(g.n(), |x| dijkstra(g, metric, x, f64::INFINITY))
}

/// `σ(x, y) = max(Deg(x), Deg(y))^{−1/2}` with `Deg(x) = (1/m(x)) Σ_y b(x,y)`.
pub fn default_intrinsic_sigma(g: &WeightedGraph) -> Result<PathMetric> {
    let deg: Vec<f64> = (0..g.n()).map(|x| weighted_degree(g, VertexId(x))).collect::<Result<_>>()?;
    let entries: Vec<_> = g.edges().map(|(x, y, _)| (x, y, deg[x].max(deg[y]).powf(-0.5))).collect();
    PathMetric::new(g, &entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicReport {
    pub pass: bool,
    /// `(1/m(x)) Σ_y b(x,y) d(x,y)²` per vertex.
    pub sums: Vec<f64>,
    pub max_sum: f64,
    pub worst_vertex: Option<usize>,
}

/// `(1/m(x)) Σ_y b(x,y) d_σ(x,y)² ≤ 1` at every vertex.
pub fn intrinsic_check(g: &WeightedGraph, metric: &PathMetric) -> IntrinsicReport {
    let sums: Vec<f64> = (0..g.n())
        .map(|x| {
            let reach = g.neighbors(x).iter().map(|&(y, _)| metric.sigma(x, y)).fold(0.0, f64::max);
            let d = dijkstra(g, metric, x, reach);
            let sum: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, b)| {
                    let dy = d[y].finite().unwrap_or(metric.sigma(x, y));
                    b * dy * dy
                })
                .sum();
            sum / g.m(x)
        })
        .collect();
    let worst = sums
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(x, &v)| (x, v));
    let max_sum = worst.map_or(0.0, |w| w.1);
    IntrinsicReport {
        pass: max_sum <= 1.0 + tolerance::INTRINSIC,
        max_sum,
        worst_vertex: worst.map(|w| w.0),
        sums,
    }
}

/// `D(x)` on a family truncation with bracketing bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyDistances {
    pub horizon: usize,
    /// Exact where the length rule has a closed-form tail, otherwise the
    /// lower bound.
    pub values: Vec<Distance>,
    pub lower: Vec<Distance>,
    pub upper: Vec<Distance>,
    pub exact: bool,
}

/// Distance to the Cauchy boundary for every vertex of `family.truncate(horizon)`,
/// using the family's length rule as `σ`. Tails without a closed form are
/// summed to `summation_horizon` with a remainder bound.
pub fn cauchy_distance(family: &GraphFamily, horizon: usize, summation_horizon: usize) -> Result<CauchyDistances> {
    let trunc = family.truncate(horizon)?;
    let mut values = Vec::with_capacity(trunc.graph.n());
    let mut lower = Vec::with_capacity(trunc.graph.n());
    let mut upper = Vec::with_capacity(trunc.graph.n());
    let mut exact = true;
    for x in 0..trunc.graph.n() {
        match family.boundary_distance(trunc.generation[x], trunc.inner[x], summation_horizon.max(horizon)) {
            Tail::Exact(v) => {
                values.push(Distance::Finite(v));
                lower.push(Distance::Finite(v));
                upper.push(Distance::Finite(v));
            }
            Tail::Divergent => {
                values.push(Distance::Infinite);
                lower.push(Distance::Infinite);
                upper.push(Distance::Infinite);
            }
            Tail::Bounded { lower: lo, upper: hi } => {
                exact = false;
                values.push(Distance::Finite(lo));
                lower.push(Distance::Finite(lo));
                upper.push(Distance::Finite(hi));
            }
        }
    }
    Ok(CauchyDistances {
        horizon,
        values,
        lower,
        upper,
        exact,
    })
}

/// `X_ε` and its inner boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryGeometry {
    pub epsilon: f64,
    pub x_eps: Vec<usize>,
    /// Members of `X_ε` with a neighbor outside `X_ε`.
    pub boundary: Vec<usize>,
}

/// `X_ε = {D ≥ ε}` and `∂X_ε` on a finite graph.
pub fn boundary_geometry(g: &WeightedGraph, d: &[Distance], epsilon: f64) -> Result<BoundaryGeometry> {
    if d.len() != g.n() {
        return Err(Error::dims("D length", g.n(), d.len()));
    }
    let inside: Vec<bool> = d.iter().map(|v| v.at_least(epsilon)).collect();
    let x_eps: Vec<usize> = (0..g.n()).filter(|&x| inside[x]).collect();
    let boundary = x_eps
        .iter()
        .copied()
        .filter(|&x| g.neighbors(x).iter().any(|&(y, _)| !inside[y]))
        .collect();
    Ok(BoundaryGeometry {
        epsilon,
        x_eps,
        boundary,
    })
}

/// `X_ε` on a family truncation. Membership of `∂X_ε` for frontier vertices
/// is decided with their children from the next generation.
pub fn family_boundary_geometry(family: &GraphFamily, horizon: usize, epsilon: f64) -> Result<BoundaryGeometry> {
    let outer = family.truncate(horizon + 1)?;
    let d = cauchy_distance(family, horizon + 1, 4 * (horizon + 1))?;
    let full = boundary_geometry(&outer.graph, &d.values, epsilon)?;
    let keep = |x: &usize| outer.generation[*x] <= horizon;
    Ok(BoundaryGeometry {
        epsilon,
        x_eps: full.x_eps.iter().copied().filter(keep).collect(),
        boundary: full.boundary.iter().copied().filter(keep).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityLevel {
    pub horizon: usize,
    pub boundary_count: usize,
    /// `(r, #{x ∈ ∂X_ε : d_σ(root, x) ≤ r})`
    pub ball_counts: Vec<(f64, usize)>,
}

/// Within-horizon evidence that bounded parts of `∂X_ε` are finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub epsilon: f64,
    pub levels: Vec<RegularityLevel>,
    /// Ball counts agree between the last two horizons.
    pub stabilized: bool,
    pub certificate: &'static str,
}

pub fn regularity_probe(family: &GraphFamily, epsilon: f64, horizons: &[usize], radii: &[f64]) -> Result<RegularityReport> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("horizons must be nonempty and strictly increasing"));
    }
    let mut levels = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let geo = family_boundary_geometry(family, h, epsilon)?;
        let trunc = family.truncate(h)?;
        let metric = PathMetric::new(&trunc.graph, &trunc.sigma)?;
        let root = shortest_path_metric(&trunc.graph, &metric, VertexId(0))?;
        let ball_counts = radii
            .iter()
            .map(|&r| (r, geo.boundary.iter().filter(|&&x| within(root[x], r)).count()))
            .collect();
        levels.push(RegularityLevel {
            horizon: h,
            boundary_count: geo.boundary.len(),
            ball_counts,
        });
    }
    let stabilized = levels.len() >= 2 && {
        let (a, b) = (&levels[levels.len() - 2], &levels[levels.len() - 1]);
        a.ball_counts == b.ball_counts && a.boundary_count == b.boundary_count
    };
    Ok(RegularityReport {
        epsilon,
        stabilized,
        certificate: if stabilized { "finite within horizon" } else { "not stabilized within horizon" },
        levels,
    })
}

fn check_cutoff_parameters(epsilon: f64, rho: f64) -> Result<()> {
    if !(0.0 < epsilon && epsilon < rho && rho < 0.5) {
        return Err(Error::arg(format!("cutoff needs 0 < ε < ρ < 1/2, got ε={epsilon}, ρ={rho}")));
    }
    Ok(())
}

/// `F_ε(s)`: 0 up to `ε`, a ramp of slope `ρ/(ρ−ε)` reaching `ρ` at `s = ρ`,
/// then `s` up to 1, then 1.
pub fn f_eps(s: Distance, epsilon: f64, rho: f64) -> f64 {
    let s = match s {
        Distance::Infinite => return 1.0,
        Distance::Finite(v) => v,
    };
    if s <= epsilon {
        0.0
    } else if s <= rho {
        rho * (s - epsilon) / (rho - epsilon)
    } else if s <= 1.0 {
        s
    } else {
        1.0
    }
}

/// `f_ε(x) = F_ε(D(x))`.
pub fn cutoff_f_eps(d: &[Distance], epsilon: f64, rho: f64) -> Result<Vec<f64>> {
    check_cutoff_parameters(epsilon, rho)?;
    Ok(d.iter().map(|&s| f_eps(s, epsilon, rho)).collect())
}

/// `G_α(s)`: 1 up to `1/α`, then `2 − αs`, then 0 from `2/α`.
pub fn g_alpha(s: Distance, alpha: f64) -> f64 {
    match s {
        Distance::Infinite => 0.0,
        Distance::Finite(s) if s <= 1.0 / alpha => 1.0,
        Distance::Finite(s) if s >= 2.0 / alpha => 0.0,
        Distance::Finite(s) => 2.0 - alpha * s,
    }
}

/// `g_α(x) = G_α(d_σ(x₀, x))`.
pub fn cutoff_g_alpha(g: &WeightedGraph, metric: &PathMetric, x0: VertexId, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::arg(format!("α must be positive, got {alpha}")));
    }
    Ok(shortest_path_metric(g, metric, x0)?
        .into_iter()
        .map(|d| g_alpha(d, alpha))
        .collect())
}

/// `max_{edges} |φ(x) − φ(y)| / σ(x, y)`, which equals the Lipschitz
/// constant of `φ` for the path metric `d_σ`.
pub fn lipschitz_constant(g: &WeightedGraph, metric: &PathMetric, phi: &[f64]) -> Result<f64> {
    if phi.len() != g.n() {
        return Err(Error::dims("function length", g.n(), phi.len()));
    }
    Ok(g.edges()
        .map(|(x, y, _)| (phi[x] - phi[y]).abs() / metric.sigma(x, y))
        .fold(0.0, f64::max))
}

/// `ρ/(ρ − ε) + α`.
pub fn cutoff_lipschitz_bound(epsilon: f64, rho: f64, alpha: f64) -> f64 {
    rho / (rho - epsilon) + alpha
}

/// `E_{ε,α} = {x : ε ≤ D(x), d_σ(x₀, x) ≤ 2/α}`.
pub fn support_set(d: &[Distance], from_x0: &[Distance], epsilon: f64, alpha: f64) -> Vec<usize> {
    (0..d.len())
        .filter(|&x| d[x].at_least(epsilon) && within(from_x0[x], 2.0 / alpha))
        .collect()
}

fn within(d: Distance, r: f64) -> bool {
    d.finite().is_some_and(|v| v <= r)
}

/// `S_{ρ,α} = {x : ρ ≤ D(x), d_σ(x₀, x) ≤ 1/α}`.
pub fn core_set(d: &[Distance], from_x0: &[Distance], rho: f64, alpha: f64) -> Vec<usize> {
    support_set(d, from_x0, rho, 2.0 * alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgmonHypothesis {
    pub c: f64,
    /// `λ = −C − 3/2`.
    pub lambda: f64,
    /// `min_x [λ_min(W(x)) − (1/(2D(x)²) − C)]`.
    pub pointwise_margin: f64,
    pub worst_vertex: Option<usize>,
    pub pointwise_pass: bool,
    /// `min_u [(u,(H̃−λ)u) − ½Σ max(1/D², 1) m|u|² − ‖u‖²] / scale` over samples.
    pub form_margin: f64,
    pub form_pass: bool,
    pub samples: usize,
}

impl AgmonHypothesis {
    pub fn passes(&self) -> bool {
        self.pointwise_pass && self.form_pass
    }
}

/// Checks `⟨W(x)u, u⟩ ≥ (1/(2D(x)²) − C)|u|²` vertexwise and, with
/// `λ = −C − 3/2`, the form inequality it implies on sampled sections.
#[allow(clippy::too_many_arguments)]
pub fn agmon_hypothesis_check(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    d: &[Distance],
    c: f64,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<AgmonHypothesis> {
    if !check_potential_selfadjoint(w) {
        return Err(Error::Precondition {
            what: "Agmon hypothesis requires a self-adjoint potential".into(),
            residual: potential_selfadjoint_defect(w),
        });
    }
    if d.len() != g.n() {
        return Err(Error::dims("D length", g.n(), d.len()));
    }
    let mut worst: Option<(usize, f64)> = None;
    for x in 0..g.n() {
        let lo = linalg::min_hermitian_eigenvalue(&linalg::hermitian_part(w.at(x)));
        let margin = lo - (0.5 * d[x].inverse_square() - c);
        if worst.is_none_or(|(_, v)| margin < v) {
            worst = Some((x, margin));
        }
    }
    let pointwise_margin = worst.map_or(0.0, |w| w.1);
    let lambda = -c - 1.5;
    let m = g.measure();
    let margins = exec.try_map(samples, |s| -> Result<f64> {
        let mut rng = stream_rng(seed, s as u64);
        let u = Section::random(bundle, &mut rng);
        let hu = schrodinger_apply(g, bundle, conn, w, &u)?;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut scale = 1.0;
        for x in 0..g.n() {
            let quad = m[x] * fiber_inner(hu.at(x), u.at(x)).re;
            let mass = m[x] * u.at(x).norm_squared();
            lhs += quad - lambda * mass;
            rhs += 0.5 * d[x].inverse_square().max(1.0) * mass + mass;
            scale += quad.abs() + (lambda.abs() + 1.0 + 0.5 * d[x].inverse_square().max(1.0)) * mass;
        }
        Ok((lhs - rhs) / scale)
    })?;
    let form_margin = margins.into_iter().fold(f64::INFINITY, f64::min);
    let form_margin = if samples == 0 { 0.0 } else { form_margin };
    Ok(AgmonHypothesis {
        c,
        lambda,
        pointwise_margin,
        worst_vertex: worst.map(|w| w.0),
        pointwise_pass: pointwise_margin >= -tolerance::AGMON_POINTWISE,
        form_margin,
        form_pass: form_margin >= -tolerance::AGMON_FORM,
        samples,
    })
}

/// One point `(ρ, ε, α)` of the vanishing schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchedulePoint {
    pub rho: f64,
    pub epsilon: f64,
    pub alpha: f64,
}

/// `ρ ∈ {0.4, 0.2, 0.1}`, `ε = ρ/2`, `α ∈ {1, 0.5, 0.25}`, with `α` varying
/// fastest and `ρ` slowest.
pub fn default_schedule() -> Vec<SchedulePoint> {
    let mut out = Vec::new();
    for rho in [0.4, 0.2, 0.1] {
        for alpha in [1.0, 0.5, 0.25] {
            out.push(SchedulePoint {
                rho,
                epsilon: rho / 2.0,
                alpha,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainPoint {
    pub point: SchedulePoint,
    pub beta: f64,
    /// `(φv, (H̃ − λ)φv)` with `φ = f_ε g_α`.
    pub lhs: f64,
    /// `½β²‖v‖² + |Re(φ²r, v)|`, `r = (H̃ − λ)v`.
    pub rhs_upper: f64,
    /// `½ Σ_{S_{ρ,α}} m|v|² + c₁‖φv‖²`, present when `c₁` is supplied.
    pub rhs_lower: Option<f64>,
    pub scale: f64,
    pub upper_holds: bool,
    pub lower_holds: Option<bool>,
    /// Upper bound on `Σ_{S_{ρ,α}} m|v|²` from combining both sides.
    pub core_mass_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingReport {
    pub lambda: f64,
    pub residual: f64,
    pub points: Vec<ChainPoint>,
    /// `‖r‖ / c₁`, a bound on `‖v‖` when the form inequality holds with `c₁`.
    pub certified_norm_bound: Option<f64>,
    pub chain_holds: bool,
}

/// Evaluates both sides of the Agmon inequality chain along a schedule.
/// `d` holds `D(x)` and `from_x0` holds `d_σ(x₀, ·)`. The upper side relies on
/// `σ` being intrinsic; the lower side needs the form inequality with
/// constant `c1`.
#[allow(clippy::too_many_arguments)]
pub fn agmon_vanishing_experiment(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    lambda: f64,
    v: &Section,
    d: &[Distance],
    from_x0: &[Distance],
    schedule: &[SchedulePoint],
    c1: Option<f64>,
) -> Result<VanishingReport> {
    if d.len() != g.n() || from_x0.len() != g.n() {
        return Err(Error::dims("distance table length", g.n(), d.len().min(from_x0.len())));
    }
    let residual = eigen_residual(g, bundle, conn, w, lambda, v)?;
    if residual > tolerance::EIGEN_RESIDUAL {
        return Err(Error::Precondition {
            what: "(H - λ)v = 0 is not satisfied".into(),
            residual,
        });
    }
    let m = g.measure();
    let r = schrodinger_apply(g, bundle, conn, w, v)?.sub(&v.scale(C64::from(lambda)));
    let norm_v2 = inner_product(v, v, m)?.re;
    let norm_r = inner_product(&r, &r, m)?.re.max(0.0).sqrt();
    let mut points = Vec::with_capacity(schedule.len());
    for &point in schedule {
        let f = cutoff_f_eps(d, point.epsilon, point.rho)?;
        let phi: Vec<f64> = (0..g.n()).map(|x| f[x] * g_alpha(from_x0[x], point.alpha)).collect();
        let beta = cutoff_lipschitz_bound(point.epsilon, point.rho, point.alpha);
        let pv = v.scaled_by(&phi);
        let hpv = schrodinger_apply(g, bundle, conn, w, &pv)?.sub(&pv.scale(C64::from(lambda)));
        let lhs = inner_product(&hpv, &pv, m)?.re;
        let phi2: Vec<f64> = phi.iter().map(|p| p * p).collect();
        let cross = inner_product(&r.scaled_by(&phi2), v, m)?.re.abs();
        let rhs_upper = 0.5 * beta * beta * norm_v2 + cross;
        let norm_pv2 = inner_product(&pv, &pv, m)?.re;
        let core_mass: f64 = core_set(d, from_x0, point.rho, point.alpha)
            .into_iter()
            .map(|x| m[x] * v.at(x).norm_squared())
            .sum();
        let rhs_lower = c1.map(|c| 0.5 * core_mass + c * norm_pv2);
        let scale = 1.0 + lhs.abs() + rhs_upper + rhs_lower.unwrap_or(0.0);
        let tol = tolerance::AGMON_CHAIN * scale;
        points.push(ChainPoint {
            point,
            beta,
            lhs,
            rhs_upper,
            rhs_lower,
            scale,
            upper_holds: lhs <= rhs_upper + tol,
            lower_holds: rhs_lower.map(|lo| lhs >= lo - tol),
            core_mass_bound: c1.map(|c| (2.0 * (rhs_upper - c * norm_pv2)).max(0.0)),
        });
    }
    Ok(VanishingReport {
        lambda,
        residual,
        chain_holds: points.iter().all(|p| p.upper_holds && p.lower_holds.unwrap_or(true)),
        certified_norm_bound: c1.map(|c| norm_r / c),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FamilyKind, Rule};

    fn fin(v: f64) -> Distance {
        Distance::Finite(v)
    }

    #[test]
    fn shortest_paths() {
        let g = WeightedGraph::path(3);
        let metric = PathMetric::uniform(&g, 1.0).unwrap();
        let d = shortest_path_metric(&g, &metric, VertexId(0)).unwrap();
        assert_eq!(d, vec![fin(0.0), fin(1.0), fin(2.0)]);

        let tri = WeightedGraph::cycle(3);
        let metric = PathMetric::new(&tri, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)]).unwrap();
        let d = shortest_path_metric(&tri, &metric, VertexId(0)).unwrap();
        assert_eq!(d[2], fin(2.0));

        let disconnected = WeightedGraph::new(vec![1.0; 3], &[(0, 1, 1.0)]).unwrap();
        let metric = PathMetric::uniform(&disconnected, 1.0).unwrap();
        let d = shortest_path_metric(&disconnected, &metric, VertexId(0)).unwrap();
        assert_eq!(d[2], Distance::Infinite);
        assert!(PathMetric::new(&g, &[(0, 1, 1.0), (1, 2, 0.0)]).is_err());
    }

    #[test]
    fn intrinsic_examples() {
        let path = WeightedGraph::path(5);
        let sigma = default_intrinsic_sigma(&path).unwrap();
        assert!((sigma.sigma(1, 2) - 0.5f64.sqrt()).abs() < 1e-15);
        let r = intrinsic_check(&path, &sigma);
        assert!(r.pass && (r.sums[2] - 1.0).abs() < 1e-15);

        let star = WeightedGraph::star(6);
        let r = intrinsic_check(&star, &default_intrinsic_sigma(&star).unwrap());
        assert!(r.pass && (r.sums[0] - 1.0).abs() < 1e-14);

        let unit = PathMetric::uniform(&path, 1.0).unwrap();
        let r = intrinsic_check(&path, &unit);
        assert!(!r.pass && r.max_sum == 2.0);

        let empty = WeightedGraph::new(vec![1.0, 1.0], &[]).unwrap();
        assert!(intrinsic_check(&empty, &PathMetric::uniform(&empty, 1.0).unwrap()).pass);
    }

    #[test]
    fn cauchy_examples() {
        let ray = GraphFamily::unit(FamilyKind::Ray).with_length(Rule::geometric(1.0, 0.5));
        let d = cauchy_distance(&ray, 20, 20).unwrap();
        for k in 0..=20 {
            assert!((d.values[k].finite().unwrap() - 2f64.powi(1 - k as i32)).abs() < 1e-15);
        }
        let complete = cauchy_distance(&GraphFamily::unit(FamilyKind::Ray), 10, 10).unwrap();
        assert!(complete.values.iter().all(|v| v.is_infinite()));

        let tree = GraphFamily::unit(FamilyKind::BinaryTree).with_length(Rule::geometric(1.0, 1.0 / 3.0));
        let trunc = tree.truncate(4).unwrap();
        let d = cauchy_distance(&tree, 4, 4).unwrap();
        for x in 0..trunc.graph.n() {
            let k = trunc.generation[x] as i32;
            assert!((d.values[x].finite().unwrap() - 3f64.powi(-k) * 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_sets() {
        let complete = GraphFamily::unit(FamilyKind::Ray);
        let geo = family_boundary_geometry(&complete, 10, 0.1).unwrap();
        assert!(geo.boundary.is_empty() && geo.x_eps.len() == 11);

        let ray = GraphFamily::unit(FamilyKind::Ray).with_length(Rule::geometric(1.0, 0.5));
        let geo = family_boundary_geometry(&ray, 20, 0.125).unwrap();
        assert_eq!(geo.boundary, vec![4]);
        assert_eq!(geo.x_eps, vec![0, 1, 2, 3, 4]);

        let wide = family_boundary_geometry(&ray, 20, 5.0).unwrap();
        assert!(wide.x_eps.is_empty());
    }

    #[test]
    fn regularity_tree_stabilizes() {
        let tree = GraphFamily::unit(FamilyKind::BinaryTree).with_length(Rule::geometric(1.0, 0.5));
        let r = regularity_probe(&tree, 0.1, &[3, 5, 7, 8], &[0.5, 1.0, 2.0, 10.0]).unwrap();
        let counts: Vec<usize> = r.levels.iter().map(|l| l.boundary_count).collect();
        // D = 2^{1−k} ≥ 0.1 up to generation 4, so ∂X_ε is generation 4
        assert_eq!(counts, vec![0, 16, 16, 16]);
        assert!(r.stabilized);
    }

    #[test]
    fn cutoffs() {
        let (eps, rho) = (0.1, 0.3);
        assert_eq!(f_eps(fin(0.05), eps, rho), 0.0);
        assert_eq!(f_eps(fin(0.1), eps, rho), 0.0);
        assert_eq!(f_eps(fin(1.5), eps, rho), 1.0);
        assert_eq!(f_eps(Distance::Infinite, eps, rho), 1.0);
        assert!((f_eps(fin(0.2), eps, rho) - rho / 2.0).abs() < 1e-15);
        assert!((f_eps(fin(rho), eps, rho) - rho).abs() < 1e-15);
        assert!((f_eps(fin(0.7), eps, rho) - 0.7).abs() < 1e-15);
        assert!(cutoff_f_eps(&[fin(1.0)], 0.3, 0.2).is_err());
        assert!(cutoff_f_eps(&[fin(1.0)], 0.1, 0.6).is_err());

        let alpha = 0.5;
        assert_eq!(g_alpha(fin(1.0), alpha), 1.0);
        assert_eq!(g_alpha(fin(2.0), alpha), 1.0);
        assert_eq!(g_alpha(fin(4.0), alpha), 0.0);
        assert_eq!(g_alpha(fin(9.0), alpha), 0.0);
        assert!((g_alpha(fin(3.0), alpha) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_examples() {
        let g = WeightedGraph::cycle(6);
        let metric = PathMetric::new(&g, &g.edges().map(|(x, y, _)| (x, y, 0.5 + 0.1 * x as f64)).collect::<Vec<_>>()).unwrap();
        assert_eq!(lipschitz_constant(&g, &metric, &[2.0; 6]).unwrap(), 0.0);
        let d: Vec<f64> = shortest_path_metric(&g, &metric, VertexId(0))
            .unwrap()
            .into_iter()
            .map(|v| v.finite().unwrap())
            .collect();
        assert!(lipschitz_constant(&g, &metric, &d).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn agmon_pointwise_examples() {
        let ray = GraphFamily::unit(FamilyKind::Ray).with_length(Rule::geometric(1.0, 0.5));
        let trunc = ray.truncate(12).unwrap();
        let g = &trunc.graph;
        let b = Bundle::uniform(g.n(), 1).unwrap();
        let conn = crate::bundle::identity_connection(g, &b).unwrap();
        let d = cauchy_distance(&ray, 12, 12).unwrap().values;
        let eq: Vec<f64> = d.iter().map(|v| 0.5 * v.inverse_square()).collect();
        let w = Potential::scalar_multiple(&b, &eq).unwrap();
        let r = agmon_hypothesis_check(g, &b, &conn, &w, &d, 0.0, 10, 3, Execution::Sequential).unwrap();
        assert!(r.passes() && r.pointwise_margin.abs() < 1e-10);
        let zero = Potential::zeros(&b);
        let r = agmon_hypothesis_check(g, &b, &conn, &zero, &d, 0.0, 10, 3, Execution::Sequential).unwrap();
        assert!(!r.pointwise_pass && r.worst_vertex == Some(12));

        let complete = vec![Distance::Infinite; g.n()];
        let r = agmon_hypothesis_check(g, &b, &conn, &zero, &complete, 0.0, 10, 3, Execution::Sequential).unwrap();
        assert!(r.passes());
    }

    #[test]
    fn vanishing_zero_section() {
        let g = WeightedGraph::path(4);
        let b = Bundle::uniform(4, 1).unwrap();
        let conn = crate::bundle::identity_connection(&g, &b).unwrap();
        let w = Potential::zeros(&b);
        let d = vec![fin(1.0); 4];
        let metric = PathMetric::uniform(&g, 0.5).unwrap();
        let from = shortest_path_metric(&g, &metric, VertexId(0)).unwrap();
        let r = agmon_vanishing_experiment(&g, &b, &conn, &w, -1.5, &Section::zeros(&b), &d, &from, &default_schedule(), Some(1.0)).unwrap();
        assert!(r.chain_holds);
        assert!(r.points.iter().all(|p| p.lhs == 0.0 && p.rhs_upper == 0.0));
        assert_eq!(r.certified_norm_bound, Some(0.0));
        let bad = Section::real(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            agmon_vanishing_experiment(&g, &b, &conn, &w, -1.5, &bad, &d, &from, &default_schedule(), Some(1.0)),
            Err(Error::Precondition { .. })
        ));
    }
}
