//! Hermitian vector bundles over a graph: fibers, unitary connections,
//! sections, operator-valued potentials, ℓ^p norms and the weighted inner
//! product.
//!
//! Every fiber `F_x` is `C^{d(x)}` with the standard Hermitian product,
//! linear in the first slot and conjugate-linear in the second.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::graph::WeightedGraph;
use crate::linalg::{self, unitarity_defect};
use crate::tolerance;
use crate::{CMatrix, CVector, C64};

/// Fiber dimensions `d(x) ≥ 1` and the stacked-coordinate offset table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl Bundle {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if let Some(x) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Construction(format!("fiber dimension at vertex {x} must be at least 1")));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        offsets.push(0);
        for d in &dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        Ok(Self { dims, offsets })
    }

    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, x: usize) -> usize {
        self.dims[x]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Offset of `F_x` in stacked coordinates.
    pub fn offset(&self, x: usize) -> usize {
        self.offsets[x]
    }

    /// `N = Σ_x d(x)`.
    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// `Some(d)` when every fiber has dimension `d`.
    pub fn constant_dim(&self) -> Option<usize> {
        let first = *self.dims.first()?;
        self.dims.iter().all(|&d| d == first).then_some(first)
    }

    pub(crate) fn check_graph(&self, g: &WeightedGraph) -> Result<()> {
        if self.n() != g.n() {
            return Err(Error::dims("bundle vertex count", g.n(), self.n()));
        }
        Ok(())
    }
}

/// A unitary connection, stored once per undirected edge.
///
/// For each edge `{x, y}` with `x < y` the map `Φ_{x,y}: F_x → F_y` is stored;
/// `Φ_{y,x}` is its conjugate transpose, so `Φ_{y,x} = Φ_{x,y}^{-1}` holds
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    maps: BTreeMap<(usize, usize), CMatrix>,
    validated: bool,
}

impl Connection {
    /// Builds a connection from maps `((x, y), Φ_{x,y})`. Either orientation is
    /// accepted; every edge of `g` needs exactly one map and every map must be
    /// unitary within tolerance.
    pub fn from_maps(g: &WeightedGraph, bundle: &Bundle, maps: Vec<((usize, usize), CMatrix)>) -> Result<Self> {
        let conn = Self::assemble_maps(g, bundle, maps)?;
        for (&(x, y), phi) in &conn.maps {
            let defect = unitarity_defect(phi);
            if defect > tolerance::UNITARITY {
                return Err(Error::Construction(format!(
                    "map on edge ({x},{y}) is not unitary (defect {defect:.3e})"
                )));
            }
        }
        Ok(conn)
    }

    /// Same as [`Connection::from_maps`] but skips the unitarity check. Used
    /// for negative controls; [`Connection::is_validated`] reports `false`.
    pub fn from_maps_unchecked(
        g: &WeightedGraph,
        bundle: &Bundle,
        maps: Vec<((usize, usize), CMatrix)>,
    ) -> Result<Self> {
        let mut conn = Self::assemble_maps(g, bundle, maps)?;
        conn.validated = false;
        Ok(conn)
    }

    fn assemble_maps(g: &WeightedGraph, bundle: &Bundle, maps: Vec<((usize, usize), CMatrix)>) -> Result<Self> {
        bundle.check_graph(g)?;
        let mut stored = BTreeMap::new();
        for ((x, y), phi) in maps {
            if x >= g.n() || y >= g.n() {
                return Err(Error::VertexOutOfRange {
                    vertex: x.max(y),
                    n: g.n(),
                });
            }
            if g.weight(x, y) <= 0.0 {
                return Err(Error::Construction(format!("connection map on non-edge ({x},{y})")));
            }
            if phi.nrows() != bundle.dim(y) || phi.ncols() != bundle.dim(x) {
                return Err(Error::Construction(format!(
                    "map on edge ({x},{y}) has shape {}x{}, expected {}x{}",
                    phi.nrows(),
                    phi.ncols(),
                    bundle.dim(y),
                    bundle.dim(x)
                )));
            }
            let (key, canonical) = if x < y { ((x, y), phi) } else { ((y, x), phi.adjoint()) };
            if stored.insert(key, canonical).is_some() {
                return Err(Error::Construction(format!("duplicate map on edge ({},{})", key.0, key.1)));
            }
        }
        for (x, y, _) in g.edges() {
            if !stored.contains_key(&(x, y)) {
                return Err(Error::Construction(format!("missing map on edge ({x},{y})")));
            }
        }
        Ok(Self {
            maps: stored,
            validated: true,
        })
    }

    /// Whether unitarity was checked at construction.
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// `Φ_{from,to}: F_from → F_to`.
    pub fn map(&self, from: usize, to: usize) -> CMatrix {
        if from < to {
            self.maps[&(from, to)].clone()
        } else {
            self.maps[&(to, from)].adjoint()
        }
    }

    /// Applies `Φ_{from,to}` to `v ∈ F_from` without materializing the adjoint.
    pub fn transport(&self, from: usize, to: usize, v: &CVector) -> CVector {
        if from < to {
            &self.maps[&(from, to)] * v
        } else {
            self.maps[&(to, from)].ad_mul(v)
        }
    }

    /// Canonical `((x, y), Φ_{x,y})` with `x < y`.
    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &CMatrix)> {
        self.maps.iter()
    }

    /// Largest `‖Φ^*Φ − I‖_max` over edges.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.maps.values().map(unitarity_defect).fold(0.0, f64::max)
    }

    /// `true` when every map is exactly the identity.
    pub fn is_identity(&self) -> bool {
        self.maps.values().all(|phi| {
            phi.is_square() && *phi == CMatrix::identity(phi.nrows(), phi.ncols())
        })
    }

    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::new();
        for (&(x, y), phi) in &self.maps {
            bytes.extend_from_slice(&(x as u64).to_le_bytes());
            bytes.extend_from_slice(&(y as u64).to_le_bytes());
            linalg::hash_matrix(&mut bytes, phi);
        }
        linalg::sha256_hex(&bytes)
    }
}

fn check_equal_dims(g: &WeightedGraph, bundle: &Bundle) -> Result<()> {
    bundle.check_graph(g)?;
    for (x, y, _) in g.edges() {
        if bundle.dim(x) != bundle.dim(y) {
            return Err(Error::Construction(format!(
                "edge ({x},{y}) joins fibers of dimension {} and {}; no unitary map exists",
                bundle.dim(x),
                bundle.dim(y)
            )));
        }
    }
    Ok(())
}

/// Every `Φ_{x,y}` the identity.
pub fn identity_connection(g: &WeightedGraph, bundle: &Bundle) -> Result<Connection> {
    check_equal_dims(g, bundle)?;
    let maps = g
        .edges()
        .map(|(x, y, _)| ((x, y), CMatrix::identity(bundle.dim(x), bundle.dim(x))))
        .collect();
    Connection::from_maps(g, bundle, maps)
}

/// Magnetic connection on line bundles: `Φ_{x,y} = e^{iθ(y,x)}`.
///
/// `theta` lists `(u, v, θ(u,v))`; the reverse value `θ(v,u) = −θ(u,v)` is
/// implied, and if both orientations are listed they must be antisymmetric.
/// Edges without an entry get `θ = 0`.
pub fn magnetic_connection(g: &WeightedGraph, theta: &[(usize, usize, f64)]) -> Result<Connection> {
    let bundle = Bundle::uniform(g.n(), 1)?;
    // canonical key (x<y) -> θ(x,y)
    let mut phases: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(u, v, value) in theta {
        if u >= g.n() || v >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: u.max(v), n: g.n() });
        }
        if g.weight(u, v) <= 0.0 {
            return Err(Error::Construction(format!("magnetic phase on non-edge ({u},{v})")));
        }
        if !value.is_finite() || value.abs() > std::f64::consts::PI + 1e-12 {
            return Err(Error::Construction(format!("phase θ({u},{v}) = {value} outside [-π, π]")));
        }
        let (key, oriented) = if u < v { ((u, v), value) } else { ((v, u), -value) };
        if let Some(previous) = phases.insert(key, oriented) {
            if (previous - oriented).abs() > 1e-12 {
                return Err(Error::Construction(format!(
                    "θ is not antisymmetric on edge ({},{}): θ(x,y)={previous}, −θ(y,x)={oriented}",
                    key.0, key.1
                )));
            }
        }
    }
    let maps = g
        .edges()
        .map(|(x, y, _)| {
            let theta_xy = phases.get(&(x, y)).copied().unwrap_or(0.0);
            // Φ_{x,y} = e^{iθ(y,x)} = e^{-iθ(x,y)}
            let phi = C64::from_polar(1.0, -theta_xy);
            ((x, y), CMatrix::from_element(1, 1, phi))
        })
        .collect();
    Connection::from_maps(g, &bundle, maps)
}

/// Seeded Haar-like unitary on each edge. The map on edge `(x, y)` depends
/// only on `(seed, x, y)`, so nested truncations share their maps.
pub fn random_unitary_connection(g: &WeightedGraph, bundle: &Bundle, seed: u64) -> Result<Connection> {
    check_equal_dims(g, bundle)?;
    let maps = g
        .edges()
        .map(|(x, y, _)| {
            let mut rng = stream_rng(seed, ((x as u64) << 32) | y as u64);
            ((x, y), linalg::haar_unitary(&mut rng, bundle.dim(x)))
        })
        .collect();
    Connection::from_maps(g, bundle, maps)
}

/// Gauge action `Φ'_{x,y} = G(y) Φ_{x,y} G(x)^*`.
pub fn gauge_transform(conn: &Connection, bundle: &Bundle, gauge: &[CMatrix]) -> Result<Connection> {
    if gauge.len() != bundle.n() {
        return Err(Error::dims("gauge length", bundle.n(), gauge.len()));
    }
    for (x, gx) in gauge.iter().enumerate() {
        if gx.nrows() != bundle.dim(x) || gx.ncols() != bundle.dim(x) {
            return Err(Error::arg(format!("gauge at vertex {x} has the wrong shape")));
        }
        let defect = unitarity_defect(gx);
        if defect > tolerance::UNITARITY {
            return Err(Error::arg(format!("gauge at vertex {x} is not unitary (defect {defect:.3e})")));
        }
    }
    let maps = conn
        .maps
        .iter()
        .map(|(&(x, y), phi)| ((x, y), &gauge[y] * phi * gauge[x].adjoint()))
        .collect();
    Ok(Connection {
        maps,
        validated: conn.validated,
    })
}

/// A section `u(x) ∈ F_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    values: Vec<CVector>,
}

impl Section {
    pub fn new(bundle: &Bundle, values: Vec<CVector>) -> Result<Self> {
        if values.len() != bundle.n() {
            return Err(Error::dims("section vertex count", bundle.n(), values.len()));
        }
        for (x, v) in values.iter().enumerate() {
            if v.len() != bundle.dim(x) {
                return Err(Error::dims(format!("section fiber at vertex {x}"), bundle.dim(x), v.len()));
            }
        }
        Ok(Self { values })
    }

    /// Wraps per-vertex values without a bundle to check against.
    pub fn from_values(values: Vec<CVector>) -> Self {
        Self { values }
    }

    pub fn zeros(bundle: &Bundle) -> Self {
        Self {
            values: bundle.dims().iter().map(|&d| CVector::zeros(d)).collect(),
        }
    }

    /// Line-bundle section from scalar values.
    pub fn scalar(values: &[C64]) -> Self {
        Self {
            values: values.iter().map(|&z| CVector::from_element(1, z)).collect(),
        }
    }

    /// Line-bundle section from real values.
    pub fn real(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&r| CVector::from_element(1, C64::new(r, 0.0))).collect(),
        }
    }

    /// Standard complex Gaussian entries.
    pub fn random<R: Rng + ?Sized>(bundle: &Bundle, rng: &mut R) -> Self {
        Self {
            values: bundle
                .dims()
                .iter()
                .map(|&d| {
                    CVector::from_fn(d, |_, _| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        C64::new(re, im)
                    })
                })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, x: usize) -> &CVector {
        &self.values[x]
    }

    pub fn at_mut(&mut self, x: usize) -> &mut CVector {
        &mut self.values[x]
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    /// Checks that fiber lengths match `bundle`.
    pub fn check(&self, bundle: &Bundle) -> Result<()> {
        if self.n() != bundle.n() {
            return Err(Error::dims("section vertex count", bundle.n(), self.n()));
        }
        for (x, v) in self.values.iter().enumerate() {
            if v.len() != bundle.dim(x) {
                return Err(Error::dims(format!("section fiber at vertex {x}"), bundle.dim(x), v.len()));
            }
        }
        Ok(())
    }

    /// Vertexwise fiber norms `|u(x)|`.
    pub fn fiber_norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Stacked coordinates in vertex order.
    pub fn stacked(&self) -> CVector {
        let total = self.values.iter().map(|v| v.len()).sum();
        let mut out = CVector::zeros(total);
        let mut k = 0;
        for v in &self.values {
            out.rows_mut(k, v.len()).copy_from(v);
            k += v.len();
        }
        out
    }

    pub fn from_stacked(bundle: &Bundle, stacked: &CVector) -> Result<Self> {
        if stacked.len() != bundle.total_dim() {
            return Err(Error::dims("stacked section length", bundle.total_dim(), stacked.len()));
        }
        Ok(Self {
            values: (0..bundle.n())
                .map(|x| stacked.rows(bundle.offset(x), bundle.dim(x)).into_owned())
                .collect(),
        })
    }

    /// Pointwise scaling `(g u)(x) = g(x) u(x)`.
    pub fn scaled_by(&self, g: &[f64]) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(g)
                .map(|(v, &s)| v.scale(s))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Section) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Exponent for ℓ^p norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(LpExponent::Infinity),
            other => other
                .parse::<f64>()
                .map(LpExponent::Finite)
                .map_err(|_| Error::arg(format!("invalid exponent '{other}'"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LpExponent::Finite(p) => format!("{p}"),
            LpExponent::Infinity => "inf".to_string(),
        }
    }
}

impl From<f64> for LpExponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            LpExponent::Infinity
        } else {
            LpExponent::Finite(p)
        }
    }
}

/// `‖u‖_p = (Σ m(x)|u(x)|^p)^{1/p}`, or `sup |u(x)|` for `p = ∞`.
pub fn lp_norm(u: &Section, m: &[f64], p: LpExponent) -> Result<f64> {
    if u.n() != m.len() {
        return Err(Error::dims("measure length", u.n(), m.len()));
    }
    match p {
        LpExponent::Infinity => Ok(u.values.iter().map(|v| v.norm()).fold(0.0, f64::max)),
        LpExponent::Finite(p) if p >= 1.0 && p.is_finite() => {
            let sum: f64 = u
                .values
                .iter()
                .zip(m)
                .map(|(v, &mx)| mx * v.norm().powf(p))
                .sum();
            Ok(sum.powf(1.0 / p))
        }
        LpExponent::Finite(p) => Err(Error::arg(format!("ℓ^p exponent must be ≥ 1, got {p}"))),
    }
}

/// `(u, v) = Σ m(x) ⟨u(x), v(x)⟩`, conjugate-linear in `v`.
pub fn inner_product(u: &Section, v: &Section, m: &[f64]) -> Result<C64> {
    if u.n() != v.n() || u.n() != m.len() {
        return Err(Error::dims("inner product vertex count", u.n(), v.n().min(m.len())));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (x, (a, b)) in u.values.iter().zip(&v.values).enumerate() {
        if a.len() != b.len() {
            return Err(Error::dims(format!("inner product fiber at vertex {x}"), a.len(), b.len()));
        }
        acc += fiber_inner(a, b) * m[x];
    }
    Ok(acc)
}

/// `⟨a, b⟩ = Σ a_i conj(b_i)`.
pub fn fiber_inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).map(|(p, q)| p * q.conj()).sum()
}

/// Operator-valued potential `W(x): F_x → F_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    blocks: Vec<CMatrix>,
}

impl Potential {
    pub fn new(bundle: &Bundle, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != bundle.n() {
            return Err(Error::dims("potential vertex count", bundle.n(), blocks.len()));
        }
        for (x, w) in blocks.iter().enumerate() {
            if w.nrows() != bundle.dim(x) || w.ncols() != bundle.dim(x) {
                return Err(Error::dims(format!("potential block at vertex {x}"), bundle.dim(x), w.nrows()));
            }
        }
        Ok(Self { blocks })
    }

    pub fn zeros(bundle: &Bundle) -> Self {
        Self {
            blocks: bundle.dims().iter().map(|&d| CMatrix::zeros(d, d)).collect(),
        }
    }

    /// `W(x) = w(x) · I`.
    pub fn scalar_multiple(bundle: &Bundle, w: &[f64]) -> Result<Self> {
        if w.len() != bundle.n() {
            return Err(Error::dims("potential vertex count", bundle.n(), w.len()));
        }
        Ok(Self {
            blocks: bundle
                .dims()
                .iter()
                .zip(w)
                .map(|(&d, &s)| CMatrix::identity(d, d).scale(s))
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn at(&self, x: usize) -> &CMatrix {
        &self.blocks[x]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// `W^*`, vertexwise.
    pub fn adjoint(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|w| w.adjoint()).collect(),
        }
    }

    /// Vertexwise sum.
    pub fn add(&self, other: &Potential) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::dims("potential vertex count", self.n(), other.n()));
        }
        Ok(Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
        })
    }

    /// Gauge action `W'(x) = G(x) W(x) G(x)^*`.
    pub fn conjugated(&self, gauge: &[CMatrix]) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(gauge)
                .map(|(w, g)| g * w * g.adjoint())
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|w| w.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::new();
        for w in &self.blocks {
            linalg::hash_matrix(&mut bytes, w);
        }
        linalg::sha256_hex(&bytes)
    }

    pub(crate) fn check(&self, bundle: &Bundle) -> Result<()> {
        if self.n() != bundle.n() {
            return Err(Error::dims("potential vertex count", bundle.n(), self.n()));
        }
        for (x, w) in self.blocks.iter().enumerate() {
            if w.nrows() != bundle.dim(x) || w.ncols() != bundle.dim(x) {
                return Err(Error::dims(format!("potential block at vertex {x}"), bundle.dim(x), w.nrows()));
            }
        }
        Ok(())
    }
}
