//! One-ended infinite graph families, generated lazily and truncated by
//! generation.
//!
//! Vertex ids of a truncation are a prefix of the ids of any deeper
//! truncation, so the horizon-`h` graph is the subgraph induced by the
//! horizon-`(h+1)` graph on its first vertices.
//!
//! Layouts:
//! - ray: vertex `k` has generation `k`; edge `(k, k+1)` carries index `k`.
//! - binary tree: heap order, children of `i` are `2i+1` and `2i+2`; the
//!   edge from generation `k` to `k+1` carries index `k`.
//! - cycle sequence: a chain of 4-cycles ("diamonds"). Cut vertex `v_k` has id
//!   `3k` and generation `k`; the two inner vertices between `v_k` and
//!   `v_{k+1}` have ids `3k+1`, `3k+2` and generation `k`. All four edges of
//!   diamond `k` carry index `k`.

use serde::{Deserialize, Serialize};

use super::{VertexId, WeightedGraph};
use crate::error::{Error, Result};

/// Closed-form rule `k ↦ value` for weights, measures and edge lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Rule {
    Constant { value: f64 },
    /// `scale · ratio^k`
    Geometric { scale: f64, ratio: f64 },
    /// `scale · (k + 1)^exponent`
    Power { scale: f64, exponent: f64 },
}

/// Tail sum `Σ_{j ≥ k} rule(j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Exact(f64),
    Divergent,
    /// No closed form: partial sum up to a horizon plus a remainder bound.
    Bounded { lower: f64, upper: f64 },
}

impl Tail {
    fn scale_add(self, factor: f64, offset: f64) -> Tail {
        match self {
            Tail::Exact(v) => Tail::Exact(factor * v + offset),
            Tail::Divergent => Tail::Divergent,
            Tail::Bounded { lower, upper } => Tail::Bounded {
                lower: factor * lower + offset,
                upper: factor * upper + offset,
            },
        }
    }
}

impl Rule {
    pub fn constant(value: f64) -> Self {
        Rule::Constant { value }
    }

    pub fn geometric(scale: f64, ratio: f64) -> Self {
        Rule::Geometric { scale, ratio }
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        Rule::Power { scale, exponent }
    }

    pub fn at(&self, k: usize) -> f64 {
        match *self {
            Rule::Constant { value } => value,
            Rule::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            Rule::Power { scale, exponent } => scale * ((k + 1) as f64).powf(exponent),
        }
    }

    fn check_positive(&self, what: &str) -> Result<()> {
        let ok = match *self {
            Rule::Constant { value } => value.is_finite() && value > 0.0,
            Rule::Geometric { scale, ratio } => {
                scale.is_finite() && scale > 0.0 && ratio.is_finite() && ratio > 0.0
            }
            Rule::Power { scale, exponent } => scale.is_finite() && scale > 0.0 && exponent.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("{what} rule must produce positive finite values: {self:?}")))
        }
    }

    /// `Σ_{j ≥ k} rule(j)`. Power rules without a closed form are summed up
    /// to `horizon` and bounded by the integral remainder
    /// `scale · (H+1)^{e+1} / (-e-1)`.
    pub fn tail(&self, k: usize, horizon: usize) -> Tail {
        match *self {
            Rule::Constant { value } => {
                if value > 0.0 {
                    Tail::Divergent
                } else {
                    Tail::Exact(0.0)
                }
            }
            Rule::Geometric { scale, ratio } => {
                if ratio < 1.0 {
                    Tail::Exact(scale * ratio.powi(k as i32) / (1.0 - ratio))
                } else {
                    Tail::Divergent
                }
            }
            Rule::Power { scale, exponent } => {
                if exponent >= -1.0 {
                    return Tail::Divergent;
                }
                let last = horizon.max(k);
                let partial: f64 = (k..=last).map(|j| self.at(j)).sum();
                let remainder = scale * ((last + 1) as f64).powf(exponent + 1.0) / (-exponent - 1.0);
                Tail::Bounded {
                    lower: partial,
                    upper: partial + remainder,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Ray,
    BinaryTree,
    CycleSequence,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ray" => Ok(FamilyKind::Ray),
            "binary-tree" => Ok(FamilyKind::BinaryTree),
            "cycle-sequence" => Ok(FamilyKind::CycleSequence),
            other => Err(Error::arg(format!("unknown family kind '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Ray => "ray",
            FamilyKind::BinaryTree => "binary-tree",
            FamilyKind::CycleSequence => "cycle-sequence",
        }
    }
}

/// A lazily generated one-ended graph with closed-form weight rules.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFamily {
    pub kind: FamilyKind,
    /// `b_k` for edges of index `k`.
    pub weight: Rule,
    /// `m_k` for vertices of generation `k`.
    pub measure: Rule,
    /// `σ_k` for edges of index `k`.
    pub length: Rule,
}

/// A finite piece of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub graph: WeightedGraph,
    pub horizon: usize,
    /// Vertices of generation exactly `horizon`.
    pub frontier: Vec<VertexId>,
    pub generation: Vec<usize>,
    /// For cycle sequences, marks the inner (non-cut) diamond vertices.
    pub inner: Vec<bool>,
    /// `Σ b(x, y)` over neighbors `y` beyond the horizon. Adding
    /// `boundary_weight / m` to the potential gives the Dirichlet restriction.
    pub boundary_weight: Vec<f64>,
    /// `σ` on every edge `(x, y, σ)` with `x < y`, in edge order.
    pub sigma: Vec<(usize, usize, f64)>,
}

impl GraphFamily {
    pub fn new(kind: FamilyKind, weight: Rule, measure: Rule, length: Rule) -> Result<Self> {
        weight.check_positive("edge weight")?;
        measure.check_positive("measure")?;
        length.check_positive("length")?;
        Ok(Self {
            kind,
            weight,
            measure,
            length,
        })
    }

    /// Unit weights, unit measure, unit lengths.
    pub fn unit(kind: FamilyKind) -> Self {
        Self::new(kind, Rule::constant(1.0), Rule::constant(1.0), Rule::constant(1.0)).expect("unit rules are valid")
    }

    pub fn with_length(mut self, length: Rule) -> Self {
        self.length = length;
        self
    }

    pub fn with_measure(mut self, measure: Rule) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_weight(mut self, weight: Rule) -> Self {
        self.weight = weight;
        self
    }

    /// Number of vertices up to and including generation `horizon`.
    pub fn vertex_count(&self, horizon: usize) -> usize {
        match self.kind {
            FamilyKind::Ray => horizon + 1,
            FamilyKind::BinaryTree => (1usize << (horizon + 1)) - 1,
            FamilyKind::CycleSequence => 3 * horizon + 1,
        }
    }

    /// Finite graph on all vertices of generation `≤ horizon`.
    pub fn truncate(&self, horizon: usize) -> Result<Truncation> {
        if horizon < 1 {
            return Err(Error::arg("horizon must be at least 1"));
        }
        if self.kind == FamilyKind::BinaryTree && horizon > 24 {
            return Err(Error::arg("binary-tree horizon above 24 is not supported"));
        }
        let n = self.vertex_count(horizon);
        let mut generation = vec![0usize; n];
        let mut inner = vec![false; n];
        let mut edges = Vec::new();
        let mut sigma = Vec::new();
        let mut boundary_weight = vec![0.0; n];
        let mut push_edge = |x: usize, y: usize, k: usize| {
            edges.push((x, y, self.weight.at(k)));
            sigma.push((x.min(y), x.max(y), self.length.at(k)));
        };
        match self.kind {
            FamilyKind::Ray => {
                for k in 0..n {
                    generation[k] = k;
                    if k + 1 < n {
                        push_edge(k, k + 1, k);
                    }
                }
                boundary_weight[horizon] = self.weight.at(horizon);
            }
            FamilyKind::BinaryTree => {
                for (i, gen) in generation.iter_mut().enumerate() {
                    *gen = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
                }
                for i in 0..n {
                    for child in [2 * i + 1, 2 * i + 2] {
                        if child < n {
                            push_edge(i, child, generation[i]);
                        } else {
                            boundary_weight[i] += self.weight.at(generation[i]);
                        }
                    }
                }
            }
            FamilyKind::CycleSequence => {
                for k in 0..horizon {
                    let (v, a, a2, next) = (3 * k, 3 * k + 1, 3 * k + 2, 3 * k + 3);
                    generation[v] = k;
                    generation[a] = k;
                    generation[a2] = k;
                    inner[a] = true;
                    inner[a2] = true;
                    push_edge(v, a, k);
                    push_edge(v, a2, k);
                    push_edge(a, next, k);
                    push_edge(a2, next, k);
                }
                generation[3 * horizon] = horizon;
                boundary_weight[3 * horizon] = 2.0 * self.weight.at(horizon);
            }
        }
        let measure = generation.iter().map(|&k| self.measure.at(k)).collect();
        let graph = WeightedGraph::new(measure, &edges)?;
        sigma.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let frontier = (0..n)
            .filter(|&x| generation[x] == horizon)
            .map(VertexId)
            .collect();
        Ok(Truncation {
            graph,
            horizon,
            frontier,
            generation,
            inner,
            boundary_weight,
            sigma,
        })
    }

    /// Canonical ray from the root: the ray itself, the leftmost branch of the
    /// tree, or the cut vertices of a cycle sequence. Returns vertex ids.
    pub fn canonical_ray(&self, horizon: usize) -> Vec<usize> {
        (0..=horizon)
            .map(|k| match self.kind {
                FamilyKind::Ray => k,
                FamilyKind::BinaryTree => (1usize << k) - 1,
                FamilyKind::CycleSequence => 3 * k,
            })
            .collect()
    }

    /// Distance to the Cauchy boundary for a vertex at `generation`, using
    /// the closed-form tail of the length rule. `summation_horizon` is used
    /// only when the rule has no closed form.
    pub fn boundary_distance(&self, generation: usize, inner: bool, summation_horizon: usize) -> Tail {
        match self.kind {
            FamilyKind::Ray | FamilyKind::BinaryTree => self.length.tail(generation, summation_horizon),
            FamilyKind::CycleSequence => {
                if inner {
                    // one edge forward to v_{k+1}, then two edges per diamond
                    self.length
                        .tail(generation + 1, summation_horizon)
                        .scale_add(2.0, self.length.at(generation))
                } else {
                    self.length.tail(generation, summation_horizon).scale_add(2.0, 0.0)
                }
            }
        }
    }

    /// Partial sums of `m` along the canonical ray with a heuristic
    /// divergence verdict for hypothesis (A1). Not a proof.
    pub fn check_a1_along_ray(&self, horizon: usize) -> Result<A1Trace> {
        if horizon < 1 {
            return Err(Error::arg("horizon must be at least 1"));
        }
        let mut partial_sums = Vec::with_capacity(horizon + 1);
        let mut acc = 0.0;
        for k in 0..=horizon {
            acc += self.measure.at(k);
            partial_sums.push(acc);
        }
        // Doubling test: for terms ~ k^{-p} the ratio of the last-half increment
        // to the previous-quarter increment tends to 2^{1-p}, which is ≥ 1 exactly
        // in the divergent regime p ≤ 1.
        let s = |k: usize| partial_sums[k];
        let (half, quarter) = (horizon / 2, horizon / 4);
        let late = s(horizon) - s(half);
        let early = s(half) - s(quarter);
        let ratio = if early > 0.0 { late / early } else { f64::INFINITY };
        let monotone = partial_sums.windows(2).all(|w| w[1] > w[0]);
        let divergence_consistent = horizon >= 4 && monotone && late > 0.0 && ratio >= A1_RATIO_THRESHOLD;
        let growth = if !divergence_consistent {
            GrowthClass::Bounded
        } else if ratio < A1_SLOW_THRESHOLD {
            GrowthClass::Slow
        } else {
            GrowthClass::LinearOrFaster
        };
        Ok(A1Trace {
            partial_sums,
            divergence_consistent,
            doubling_ratio: ratio,
            growth,
            heuristic: true,
        })
    }
}

const A1_RATIO_THRESHOLD: f64 = 0.95;
const A1_SLOW_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    /// Partial sums look bounded.
    Bounded,
    /// Divergent-looking but sublinear, e.g. logarithmic.
    Slow,
    LinearOrFaster,
}

/// Heuristic (A1) certificate along a canonical ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1Trace {
    /// `S_k = Σ_{j ≤ k} m(x_j)` for `k = 0..=horizon`.
    pub partial_sums: Vec<f64>,
    pub divergence_consistent: bool,
    pub doubling_ratio: f64,
    pub growth: GrowthClass,
    /// Always `true`: the verdict is a finite-horizon heuristic.
    pub heuristic: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;

    #[test]
    fn ray_horizon_three() {
        let t = GraphFamily::unit(FamilyKind::Ray).truncate(3).unwrap();
        assert_eq!(t.graph.n(), 4);
        assert_eq!(t.graph.edge_count(), 3);
        assert_eq!(t.frontier, vec![VertexId(3)]);
        assert_eq!(t.boundary_weight, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn binary_tree_horizon_two() {
        let t = GraphFamily::unit(FamilyKind::BinaryTree).truncate(2).unwrap();
        assert_eq!(t.graph.n(), 1 + 2 + 4);
        assert_eq!(t.frontier.len(), 4);
        assert_eq!(t.generation, vec![0, 1, 1, 2, 2, 2, 2]);
        assert_eq!(t.boundary_weight[3..], [2.0; 4]);
    }

    #[test]
    fn cycle_sequence_horizon_one() {
        let t = GraphFamily::unit(FamilyKind::CycleSequence).truncate(1).unwrap();
        assert_eq!(t.graph.n(), 4);
        assert_eq!(t.graph.edge_count(), 4);
        assert_eq!(t.frontier, vec![VertexId(3)]);
        assert!(crate::graph::is_connected(&t.graph));
    }

    #[test]
    fn horizon_zero_rejected() {
        assert!(GraphFamily::unit(FamilyKind::Ray).truncate(0).is_err());
    }

    #[test]
    fn truncations_validate() {
        for kind in [FamilyKind::Ray, FamilyKind::BinaryTree, FamilyKind::CycleSequence] {
            let fam = GraphFamily::unit(kind).with_weight(Rule::geometric(1.0, 2.0));
            for h in 1..6 {
                assert!(validate_graph(&fam.truncate(h).unwrap().graph).is_valid());
            }
        }
    }

    #[test]
    fn a1_constant_measure() {
        let trace = GraphFamily::unit(FamilyKind::Ray).check_a1_along_ray(100).unwrap();
        assert_eq!(*trace.partial_sums.last().unwrap(), 101.0);
        assert!(trace.divergence_consistent);
        assert_eq!(trace.growth, GrowthClass::LinearOrFaster);
    }

    #[test]
    fn a1_geometric_measure() {
        let fam = GraphFamily::unit(FamilyKind::Ray).with_measure(Rule::geometric(1.0, 0.5));
        let trace = fam.check_a1_along_ray(50).unwrap();
        assert!(*trace.partial_sums.last().unwrap() < 2.0);
        assert!(!trace.divergence_consistent);
    }

    #[test]
    fn a1_harmonic_measure() {
        let fam = GraphFamily::unit(FamilyKind::Ray).with_measure(Rule::power(1.0, -1.0));
        let trace = fam.check_a1_along_ray(1000).unwrap();
        assert!(trace.divergence_consistent);
        assert_eq!(trace.growth, GrowthClass::Slow);
        // H_1001 ≈ ln(1001) + γ
        let h: f64 = (1..=1001).map(|k| 1.0 / k as f64).sum();
        assert!((trace.partial_sums[1000] - h).abs() < 1e-12);
    }

    #[test]
    fn geometric_tail() {
        let r = Rule::geometric(1.0, 0.5);
        assert_eq!(r.tail(0, 10), Tail::Exact(2.0));
        assert_eq!(r.tail(3, 10), Tail::Exact(0.25));
        assert_eq!(Rule::constant(1.0).tail(0, 10), Tail::Divergent);
        match Rule::power(1.0, -2.0).tail(0, 1000) {
            Tail::Bounded { lower, upper } => {
                let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
                assert!(lower <= zeta2 && zeta2 <= upper);
            }
            other => panic!("expected bounded tail, got {other:?}"),
        }
    }
}
