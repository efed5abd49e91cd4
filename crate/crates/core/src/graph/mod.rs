//! Finite weighted graphs `(X, b, m)` and lazily generated one-ended families.

mod family;

pub use family::{A1Trace, FamilyKind, GraphFamily, GrowthClass, Rule, Tail, Truncation};

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tolerance;

/// Dense vertex index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

/// A weighted graph with vertex measure `m` and edge weight `b`.
///
/// Adjacency is stored per vertex, sorted by neighbor, with both directions
/// materialized. Graphs built with [`WeightedGraph::new`] satisfy the axioms
/// by construction; [`WeightedGraph::from_directed_entries`] stores exactly
/// what it is given so that corrupt inputs can be reported by
/// [`validate_graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    measure: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
    row_sums: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from undirected edges `(x, y, b(x,y))`.
    ///
    /// Rejects out-of-range ids, self loops, duplicate edges, non-finite or
    /// negative weights and non-positive measures. Zero-weight edges are
    /// dropped.
    pub fn new(measure: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = measure.len();
        if let Some((x, m)) = measure
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::Construction(format!(
                "measure at vertex {x} must be positive and finite, got {m}"
            )));
        }
        let mut seen = BTreeMap::new();
        for &(x, y, b) in edges {
            check_index(x, n)?;
            check_index(y, n)?;
            if x == y {
                return Err(Error::Construction(format!("self loop at vertex {x}")));
            }
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Construction(format!(
                    "weight on edge ({x},{y}) must be finite and nonnegative, got {b}"
                )));
            }
            let key = (x.min(y), x.max(y));
            if seen.insert(key, b).is_some() {
                return Err(Error::Construction(format!(
                    "duplicate edge ({}, {})",
                    key.0, key.1
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (&(x, y), &b) in &seen {
            if b > 0.0 {
                adjacency[x].push((y, b));
                adjacency[y].push((x, b));
            }
        }
        Ok(Self::from_adjacency(measure, adjacency))
    }

    /// Stores directed entries `b(x,y)` verbatim (sorted, last duplicate
    /// wins). No axiom is enforced; only ids are range-checked.
    pub fn from_directed_entries(measure: Vec<f64>, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let n = measure.len();
        let mut adjacency: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(x, y, b) in entries {
            check_index(x, n)?;
            check_index(y, n)?;
            adjacency[x].insert(y, b);
        }
        let adjacency = adjacency
            .into_iter()
            .map(|row| row.into_iter().collect())
            .collect();
        Ok(Self::from_adjacency(measure, adjacency))
    }

    /// Raw constructor with caller-provided row sums, for exercising the
    /// row-sum axiom check.
    pub fn from_parts(measure: Vec<f64>, adjacency: Vec<Vec<(usize, f64)>>, row_sums: Vec<f64>) -> Self {
        Self {
            measure,
            adjacency,
            row_sums,
        }
    }

    fn from_adjacency(measure: Vec<f64>, mut adjacency: Vec<Vec<(usize, f64)>>) -> Self {
        for row in &mut adjacency {
            row.sort_by_key(|&(y, _)| y);
        }
        let row_sums = adjacency
            .iter()
            .map(|row| row.iter().map(|&(_, b)| b).sum())
            .collect();
        Self {
            measure,
            adjacency,
            row_sums,
        }
    }

    /// Unit-weight path on `n` vertices with `m ≡ 1`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Self::new(vec![1.0; n], &edges).expect("path graph is valid")
    }

    /// Unit-weight cycle on `n ≥ 3` vertices with `m ≡ 1`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Self::new(vec![1.0; n], &edges).expect("cycle graph is valid")
    }

    /// Star with center 0 and `leaves` unit edges, `m ≡ 1`.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i, 1.0)).collect();
        Self::new(vec![1.0; leaves + 1], &edges).expect("star graph is valid")
    }

    pub fn n(&self) -> usize {
        self.measure.len()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn m(&self, x: usize) -> f64 {
        self.measure[x]
    }

    /// Sorted `(neighbor, b)` pairs of `x`.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// `b(x, y)`, zero when absent.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|k| self.adjacency[x][k].1)
            .unwrap_or(0.0)
    }

    /// Stored `Σ_y b(x, y)`.
    pub fn row_sum(&self, x: usize) -> f64 {
        self.row_sums[x]
    }

    /// Undirected edges `(x, y, b)` with `x < y` and `b > 0`, in order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .filter(move |&&(y, b)| x < y && b > 0.0)
                .map(move |&(y, b)| (x, y, b))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn contains(&self, x: VertexId) -> bool {
        x.0 < self.n()
    }

    /// Subgraph induced on the first `k` vertices.
    pub fn induced_prefix(&self, k: usize) -> Self {
        let adjacency = self.adjacency[..k]
            .iter()
            .map(|row| row.iter().copied().filter(|&(y, _)| y < k).collect())
            .collect();
        Self::from_adjacency(self.measure[..k].to_vec(), adjacency)
    }

    /// Content hash over measure and weights (bit-exact).
    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.n() as u64).to_le_bytes());
        for m in &self.measure {
            bytes.extend_from_slice(&m.to_bits().to_le_bytes());
        }
        for (x, row) in self.adjacency.iter().enumerate() {
            for &(y, b) in row {
                bytes.extend_from_slice(&(x as u64).to_le_bytes());
                bytes.extend_from_slice(&(y as u64).to_le_bytes());
                bytes.extend_from_slice(&b.to_bits().to_le_bytes());
            }
        }
        crate::linalg::sha256_hex(&bytes)
    }
}

fn check_index(x: usize, n: usize) -> Result<()> {
    if x < n {
        Ok(())
    } else {
        Err(Error::VertexOutOfRange { vertex: x, n })
    }
}

/// One violated graph axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "kebab-case")]
pub enum Violation {
    /// Axiom (i): `b(x,y) ≠ b(y,x)`.
    Symmetry { x: usize, y: usize, forward: f64, backward: f64 },
    /// Axiom (ii): `b(x,x) ≠ 0`.
    Diagonal { x: usize, weight: f64 },
    /// Axiom (iii): stored row sum disagrees with the recomputed one or is not finite.
    RowSum { x: usize, stored: f64, recomputed: f64 },
    /// `b(x,y) < 0` or not finite.
    NegativeWeight { x: usize, y: usize, weight: f64 },
    /// `m(x) ≤ 0` or not finite.
    Measure { x: usize, value: f64 },
}

impl Violation {
    /// Short axiom label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            Violation::Symmetry { .. } => "axiom (i) symmetry",
            Violation::Diagonal { .. } => "axiom (ii) zero diagonal",
            Violation::RowSum { .. } => "axiom (iii) finite row sums",
            Violation::NegativeWeight { .. } => "nonnegative weights",
            Violation::Measure { .. } => "positive measure",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks axioms (i)–(iii) and positivity of `m`. Violations are data.
pub fn validate_graph(g: &WeightedGraph) -> ValidationReport {
    let mut violations = Vec::new();
    for (x, &m) in g.measure.iter().enumerate() {
        if !(m.is_finite() && m > 0.0) {
            violations.push(Violation::Measure { x, value: m });
        }
    }
    for (x, row) in g.adjacency.iter().enumerate() {
        for &(y, b) in row {
            if !(b.is_finite() && b >= 0.0) {
                violations.push(Violation::NegativeWeight { x, y, weight: b });
            }
            if x == y {
                if b != 0.0 {
                    violations.push(Violation::Diagonal { x, weight: b });
                }
                continue;
            }
            if x < y || !has_entry(g, y, x) {
                let back = g.weight(y, x);
                let scale = b.abs().max(back.abs()).max(f64::MIN_POSITIVE);
                if (b - back).abs() > tolerance::GRAPH_SYMMETRY * scale {
                    violations.push(Violation::Symmetry {
                        x,
                        y,
                        forward: b,
                        backward: back,
                    });
                }
            }
        }
        // Recompute in reverse order so that the comparison is not trivially exact.
        let recomputed: f64 = row.iter().rev().map(|&(_, b)| b).sum();
        let stored = g.row_sums.get(x).copied().unwrap_or(f64::NAN);
        let scale = recomputed.abs().max(f64::MIN_POSITIVE);
        if !stored.is_finite() || (stored - recomputed).abs() > tolerance::GRAPH_SYMMETRY * scale {
            violations.push(Violation::RowSum { x, stored, recomputed });
        }
    }
    ValidationReport { violations }
}

fn has_entry(g: &WeightedGraph, x: usize, y: usize) -> bool {
    g.adjacency[x].binary_search_by_key(&y, |&(z, _)| z).is_ok()
}

/// Every vertex reachable from vertex 0 through edges with `b > 0`.
/// The empty and single-vertex graphs are connected.
pub fn is_connected(g: &WeightedGraph) -> bool {
    let n = g.n();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        for &(y, b) in g.neighbors(x) {
            if b > 0.0 && !seen[y] {
                seen[y] = true;
                count += 1;
                queue.push_back(y);
            }
        }
    }
    count == n
}

/// `Deg(x) = (1/m(x)) Σ_y b(x,y)`.
pub fn weighted_degree(g: &WeightedGraph, x: VertexId) -> Result<f64> {
    check_index(x.0, g.n())?;
    Ok(g.row_sum(x.0) / g.m(x.0))
}
