//! The JSON model document.
//!
//! ```json
//! {
//!   "vertices": [{"id": "a", "m": 1.0}, {"id": "b"}],
//!   "edges": [{"u": "a", "v": "b", "b": 1.0}],
//!   "fiber_dim": 1,
//!   "connection": {"kind": "magnetic", "theta": [{"u": "a", "v": "b", "value": 0.5}]},
//!   "potential": {"a": [[1.0, 0.0]]},
//!   "metric": {"kind": "default"}
//! }
//! ```
//!
//! Vertex order in the document fixes the dense ids. An edge entry sets
//! `b(u, v)` and, unless the reverse pair is also listed, `b(v, u)`. A
//! `"family"` section replaces `vertices`/`edges` by a family truncation whose
//! vertex ids are `"0"`, `"1"`, ….

use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

use crate::bundle::{identity_connection, magnetic_connection, random_unitary_connection, Bundle, Connection, Potential, Section};
use crate::error::{Error, Result};
use crate::geometry::{cauchy_distance, default_intrinsic_sigma, Distance, PathMetric};
use crate::graph::{validate_graph, FamilyKind, GraphFamily, Rule, ValidationReport, WeightedGraph};
use crate::linalg::sha256_hex;
use crate::{CMatrix, CVector, C64};

/// How `σ` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Default,
    Explicit(Vec<(usize, usize, f64)>),
    /// The family's length rule, optionally replaced by a geometric rule.
    FamilyTail(Option<Rule>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub family: GraphFamily,
    pub horizon: usize,
}

/// Graph part of a document; always available, even when invalid.
#[derive(Debug, Clone)]
pub struct GraphPart {
    pub ids: Vec<String>,
    pub graph: WeightedGraph,
    pub validation: ValidationReport,
    pub family: Option<FamilySpec>,
}

/// A fully resolved model.
#[derive(Debug, Clone)]
pub struct Model {
    pub ids: Vec<String>,
    pub graph: WeightedGraph,
    pub bundle: Bundle,
    pub connection: Connection,
    pub potential: Potential,
    pub metric: MetricSpec,
    pub family: Option<FamilySpec>,
}

/// Raw document plus its content hash.
#[derive(Debug, Clone)]
pub struct Document {
    pub root: Value,
    pub hash: String,
}

impl Document {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let root: Value = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if !root.is_object() {
            return Err(Error::parse("$", "document must be a JSON object"));
        }
        Ok(Self {
            root,
            hash: sha256_hex(bytes),
        })
    }

    /// Reads vertices and edges (or the family truncation) without requiring
    /// the graph axioms to hold.
    pub fn graph_part(&self, horizon_override: Option<usize>) -> Result<GraphPart> {
        let family = self.family(horizon_override)?;
        let (ids, graph) = match &family {
            Some(spec) => {
                if self.root.get("vertices").is_some() || self.root.get("edges").is_some() {
                    return Err(Error::parse("family", "a family section excludes vertices and edges"));
                }
                let trunc = spec.family.truncate(spec.horizon).map_err(|e| Error::parse("family.horizon", e.to_string()))?;
                let ids = (0..trunc.graph.n()).map(|x| x.to_string()).collect();
                (ids, trunc.graph)
            }
            None => self.explicit_graph()?,
        };
        Ok(GraphPart {
            validation: validate_graph(&graph),
            ids,
            graph,
            family,
        })
    }

    fn family(&self, horizon_override: Option<usize>) -> Result<Option<FamilySpec>> {
        let Some(f) = self.root.get("family") else {
            return Ok(None);
        };
        let kind = FamilyKind::parse(str_field(f, "kind", "family.kind")?).map_err(|e| Error::parse("family.kind", e.to_string()))?;
        let rule = |key: &str| -> Result<Rule> {
            match f.get(key) {
                None => Ok(Rule::constant(1.0)),
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::parse(format!("family.{key}"), e.to_string())),
            }
        };
        let family = GraphFamily::new(kind, rule("b")?, rule("m")?, rule("sigma")?).map_err(|e| Error::parse("family", e.to_string()))?;
        let horizon = match horizon_override {
            Some(h) => h,
            None => usize_field(f, "horizon", "family.horizon")?,
        };
        Ok(Some(FamilySpec { family, horizon }))
    }

    fn explicit_graph(&self) -> Result<(Vec<String>, WeightedGraph)> {
        let vertices = array_field(&self.root, "vertices", "vertices")?;
        let mut ids = Vec::with_capacity(vertices.len());
        let mut index = HashMap::new();
        let mut measure = Vec::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            let at = format!("vertices[{i}]");
            let id = id_field(v, "id", &format!("{at}.id"))?;
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::parse(format!("{at}.id"), format!("duplicate vertex id '{id}'")));
            }
            let m = match v.get("m") {
                None => 1.0,
                Some(x) => number(x, &format!("{at}.m"))?,
            };
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::parse(format!("{at}.m"), "measure must be positive and finite"));
            }
            ids.push(id);
            measure.push(m);
        }
        let edges = match self.root.get("edges") {
            None => &[][..],
            Some(Value::Array(a)) => &a[..],
            Some(_) => return Err(Error::parse("edges", "expected an array")),
        };
        let mut listed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut entries = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let at = format!("edges[{i}]");
            let u = lookup(&index, &id_field(e, "u", &format!("{at}.u"))?, &format!("{at}.u"))?;
            let v = lookup(&index, &id_field(e, "v", &format!("{at}.v"))?, &format!("{at}.v"))?;
            let b = number(e.get("b").ok_or_else(|| Error::parse(format!("{at}.b"), "missing field"))?, &format!("{at}.b"))?;
            if !b.is_finite() {
                return Err(Error::parse(format!("{at}.b"), "weight must be finite"));
            }
            if let Some(first) = listed.insert((u, v), i) {
                return Err(Error::parse(at, format!("duplicate edge, first given at edges[{first}]")));
            }
            entries.push((u, v, b));
        }
        let mut directed = entries.clone();
        for &(u, v, b) in &entries {
            if u != v && !listed.contains_key(&(v, u)) {
                directed.push((v, u, b));
            }
        }
        let graph = WeightedGraph::from_directed_entries(measure, &directed)?;
        Ok((ids, graph))
    }

    /// Bundle, connection, potential and metric on a graph that satisfies
    /// the axioms.
    pub fn model(&self, part: GraphPart, default_seed: u64) -> Result<Model> {
        let GraphPart { ids, graph, family, .. } = part;
        let index: HashMap<String, usize> = ids.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let bundle = self.bundle(&ids, &index)?;
        let connection = self.connection(&graph, &bundle, &index, default_seed)?;
        let potential = self.potential(&bundle, &index)?;
        let metric = self.metric(&graph, &index, family.is_some())?;
        Ok(Model {
            ids,
            graph,
            bundle,
            connection,
            potential,
            metric,
            family,
        })
    }

    fn bundle(&self, ids: &[String], index: &HashMap<String, usize>) -> Result<Bundle> {
        let dims = match self.root.get("fiber_dim") {
            None => vec![1; ids.len()],
            Some(Value::Object(map)) => {
                let mut dims = vec![1; ids.len()];
                for (id, d) in map {
                    let at = format!("fiber_dim.{id}");
                    dims[lookup(index, id, &at)?] = positive_int(d, &at)?;
                }
                dims
            }
            Some(d) => vec![positive_int(d, "fiber_dim")?; ids.len()],
        };
        Bundle::new(dims).map_err(|e| Error::parse("fiber_dim", e.to_string()))
    }

    fn connection(&self, g: &WeightedGraph, bundle: &Bundle, index: &HashMap<String, usize>, default_seed: u64) -> Result<Connection> {
        let Some(c) = self.root.get("connection") else {
            return identity_connection(g, bundle).map_err(|e| Error::parse("connection", e.to_string()));
        };
        let kind = str_field(c, "kind", "connection.kind")?;
        let built = match kind {
            "identity" => identity_connection(g, bundle),
            "magnetic" => {
                let theta = array_field(c, "theta", "connection.theta")?;
                let mut phases = Vec::with_capacity(theta.len());
                for (i, t) in theta.iter().enumerate() {
                    let at = format!("connection.theta[{i}]");
                    let u = lookup(index, &id_field(t, "u", &format!("{at}.u"))?, &format!("{at}.u"))?;
                    let v = lookup(index, &id_field(t, "v", &format!("{at}.v"))?, &format!("{at}.v"))?;
                    let value = number(t.get("value").ok_or_else(|| Error::parse(format!("{at}.value"), "missing field"))?, &format!("{at}.value"))?;
                    phases.push((u, v, value));
                }
                if bundle.constant_dim() != Some(1) {
                    return Err(Error::parse("connection", "magnetic connections need fiber_dim 1"));
                }
                magnetic_connection(g, &phases)
            }
            "random" => {
                let seed = match c.get("seed") {
                    None => default_seed,
                    Some(s) => s.as_u64().ok_or_else(|| Error::parse("connection.seed", "expected a nonnegative integer"))?,
                };
                random_unitary_connection(g, bundle, seed)
            }
            "explicit" => {
                let maps = array_field(c, "maps", "connection.maps")?;
                let validate = match c.get("validate") {
                    None => true,
                    Some(v) => v.as_bool().ok_or_else(|| Error::parse("connection.validate", "expected a boolean"))?,
                };
                let mut out = Vec::with_capacity(maps.len());
                for (i, m) in maps.iter().enumerate() {
                    let at = format!("connection.maps[{i}]");
                    let u = lookup(index, &id_field(m, "u", &format!("{at}.u"))?, &format!("{at}.u"))?;
                    let v = lookup(index, &id_field(m, "v", &format!("{at}.v"))?, &format!("{at}.v"))?;
                    let matrix = complex_matrix(
                        m.get("matrix").ok_or_else(|| Error::parse(format!("{at}.matrix"), "missing field"))?,
                        bundle.dim(v),
                        bundle.dim(u),
                        &format!("{at}.matrix"),
                    )?;
                    out.push(((u, v), matrix));
                }
                if validate {
                    Connection::from_maps(g, bundle, out)
                } else {
                    Connection::from_maps_unchecked(g, bundle, out)
                }
            }
            other => return Err(Error::parse("connection.kind", format!("unknown connection kind '{other}'"))),
        };
        built.map_err(|e| Error::parse("connection", e.to_string()))
    }

    fn potential(&self, bundle: &Bundle, index: &HashMap<String, usize>) -> Result<Potential> {
        let mut blocks: Vec<CMatrix> = bundle.dims().iter().map(|&d| CMatrix::zeros(d, d)).collect();
        match self.root.get("potential") {
            None => {}
            Some(Value::Object(map)) => {
                for (id, w) in map {
                    let at = format!("potential.{id}");
                    let x = lookup(index, id, &at)?;
                    blocks[x] = complex_matrix(w, bundle.dim(x), bundle.dim(x), &at)?;
                }
            }
            Some(_) => return Err(Error::parse("potential", "expected an object keyed by vertex id")),
        }
        Potential::new(bundle, blocks)
    }

    fn metric(&self, g: &WeightedGraph, index: &HashMap<String, usize>, has_family: bool) -> Result<MetricSpec> {
        let Some(m) = self.root.get("metric") else {
            return Ok(if has_family { MetricSpec::FamilyTail(None) } else { MetricSpec::Default });
        };
        match str_field(m, "kind", "metric.kind")? {
            "default" => Ok(MetricSpec::Default),
            "explicit" => {
                let sigma = array_field(m, "sigma", "metric.sigma")?;
                let mut entries = Vec::with_capacity(sigma.len());
                for (i, s) in sigma.iter().enumerate() {
                    let at = format!("metric.sigma[{i}]");
                    let u = lookup(index, &id_field(s, "u", &format!("{at}.u"))?, &format!("{at}.u"))?;
                    let v = lookup(index, &id_field(s, "v", &format!("{at}.v"))?, &format!("{at}.v"))?;
                    let value = number(s.get("value").ok_or_else(|| Error::parse(format!("{at}.value"), "missing field"))?, &format!("{at}.value"))?;
                    entries.push((u, v, value));
                }
                PathMetric::new(g, &entries).map_err(|e| Error::parse("metric.sigma", e.to_string()))?;
                Ok(MetricSpec::Explicit(entries))
            }
            "family-tail" => {
                if !has_family {
                    return Err(Error::parse("metric.kind", "family-tail needs a family section"));
                }
                match m.get("rule").map(|r| r.as_str()) {
                    None => Ok(MetricSpec::FamilyTail(None)),
                    Some(Some("geometric")) => {
                        let ratio = number(m.get("ratio").ok_or_else(|| Error::parse("metric.ratio", "missing field"))?, "metric.ratio")?;
                        if !(ratio > 0.0) {
                            return Err(Error::parse("metric.ratio", "ratio must be positive"));
                        }
                        Ok(MetricSpec::FamilyTail(Some(Rule::geometric(1.0, ratio))))
                    }
                    Some(_) => Err(Error::parse("metric.rule", "only the geometric rule is supported")),
                }
            }
            other => Err(Error::parse("metric.kind", format!("unknown metric kind '{other}'"))),
        }
    }
}

impl Model {
    /// The family with any metric override applied to its length rule.
    pub fn effective_family(&self) -> Option<GraphFamily> {
        let spec = self.family.as_ref()?;
        Some(match &self.metric {
            MetricSpec::FamilyTail(Some(rule)) => spec.family.clone().with_length(*rule),
            _ => spec.family.clone(),
        })
    }

    pub fn path_metric(&self) -> Result<PathMetric> {
        match &self.metric {
            MetricSpec::Default => default_intrinsic_sigma(&self.graph),
            MetricSpec::Explicit(entries) => PathMetric::new(&self.graph, entries),
            MetricSpec::FamilyTail(_) => {
                let family = self.effective_family().expect("family-tail metric implies a family");
                let trunc = family.truncate(self.family.as_ref().unwrap().horizon)?;
                PathMetric::new(&self.graph, &trunc.sigma)
            }
        }
    }

    /// `D(x)`: family tails when a family is present, `∞` on a finite graph.
    pub fn boundary_distance(&self) -> Result<Vec<Distance>> {
        match (self.effective_family(), &self.family) {
            (Some(family), Some(spec)) => Ok(cauchy_distance(&family, spec.horizon, 4 * spec.horizon.max(64))?.values),
            _ => Ok(vec![Distance::Infinite; self.graph.n()]),
        }
    }
}

/// A section file: one array of `[re, im]` pairs per vertex, in document order.
pub fn read_section(path: &Path, bundle: &Bundle) -> Result<Section> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let root: Value = serde_json::from_slice(&bytes)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let items = root.as_array().ok_or_else(|| Error::parse("$", "expected an array of per-vertex vectors"))?;
    if items.len() != bundle.n() {
        return Err(Error::parse("$", format!("expected {} vertices, found {}", bundle.n(), items.len())));
    }
    let mut values = Vec::with_capacity(items.len());
    for (x, item) in items.iter().enumerate() {
        let at = format!("[{x}]");
        let entries = match item {
            Value::Array(a) => a,
            _ => return Err(Error::parse(at, "expected an array")),
        };
        if entries.len() != bundle.dim(x) {
            return Err(Error::parse(at, format!("expected {} entries, found {}", bundle.dim(x), entries.len())));
        }
        let v: Vec<C64> = entries
            .iter()
            .enumerate()
            .map(|(i, z)| complex(z, &format!("[{x}][{i}]")))
            .collect::<Result<_>>()?;
        values.push(CVector::from_vec(v));
    }
    Section::new(bundle, values)
}

fn lookup(index: &HashMap<String, usize>, id: &str, at: &str) -> Result<usize> {
    index
        .get(id)
        .copied()
        .ok_or_else(|| Error::parse(at, format!("unknown vertex id '{id}'")))
}

fn str_field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a str> {
    v.get(key)
        .ok_or_else(|| Error::parse(at, "missing field"))?
        .as_str()
        .ok_or_else(|| Error::parse(at, "expected a string"))
}

/// Vertex ids are strings; integers are accepted and converted.
fn id_field(v: &Value, key: &str, at: &str) -> Result<String> {
    match v.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) if n.is_u64() => Ok(n.to_string()),
        Some(_) => Err(Error::parse(at, "expected a string id")),
        None => Err(Error::parse(at, "missing field")),
    }
}

fn array_field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Vec<Value>> {
    v.get(key)
        .ok_or_else(|| Error::parse(at, "missing field"))?
        .as_array()
        .ok_or_else(|| Error::parse(at, "expected an array"))
}

fn usize_field(v: &Value, key: &str, at: &str) -> Result<usize> {
    v.get(key)
        .ok_or_else(|| Error::parse(at, "missing field"))?
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::parse(at, "expected a nonnegative integer"))
}

fn positive_int(v: &Value, at: &str) -> Result<usize> {
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n as usize),
        _ => Err(Error::parse(at, "expected a positive integer")),
    }
}

fn number(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::parse(at, "expected a number"))
}

/// `[re, im]` or a bare real number.
fn complex(v: &Value, at: &str) -> Result<C64> {
    match v {
        Value::Number(_) => Ok(C64::new(number(v, at)?, 0.0)),
        Value::Array(a) if a.len() == 2 => Ok(C64::new(number(&a[0], &format!("{at}[0]"))?, number(&a[1], &format!("{at}[1]"))?)),
        _ => Err(Error::parse(at, "expected [re, im] or a number")),
    }
}

/// Flat row-major list of `rows · cols` complex entries.
fn complex_matrix(v: &Value, rows: usize, cols: usize, at: &str) -> Result<CMatrix> {
    let items = v.as_array().ok_or_else(|| Error::parse(at, "expected a flat row-major array of [re, im] pairs"))?;
    if items.len() != rows * cols {
        return Err(Error::parse(at, format!("expected {} entries for a {rows}x{cols} matrix, found {}", rows * cols, items.len())));
    }
    let entries: Vec<C64> = items
        .iter()
        .enumerate()
        .map(|(i, z)| complex(z, &format!("{at}[{i}]")))
        .collect::<Result<_>>()?;
    Ok(CMatrix::from_row_slice(rows, cols, &entries))
}
