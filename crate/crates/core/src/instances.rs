//! Seeded random models for batch verification.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bundle::{identity_connection, magnetic_connection, random_unitary_connection, Bundle, Connection, Potential};
use crate::error::Result;
use crate::exec::stream_rng;
use crate::graph::WeightedGraph;
use crate::linalg::{hermitian_part, random_gaussian_matrix};
use crate::operator::{assemble, BlockOperator};
use crate::{CMatrix, C64};

/// Shape of the per-vertex potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Zero,
    /// Gaussian entries, no structure.
    Arbitrary,
    /// Hermitian.
    SelfAdjoint,
    /// Positive semidefinite Hermitian part plus a skew-Hermitian part.
    Accretive,
    /// Negative definite Hermitian part.
    NonAccretive,
    /// Diagonal `diag(1, 0, …, 0)` on a line bundle: a killing term at vertex 0.
    Killing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    Identity,
    /// Line bundle with random phases in `[−π, π]`.
    Magnetic,
    RandomUnitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Random spanning tree plus random extra edges.
    Connected,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSpec {
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub max_dim: usize,
    pub topology: Topology,
    pub connection: ConnectionKind,
    pub potential: PotentialKind,
}

impl InstanceSpec {
    /// Up to 12 vertices, fiber dimension up to 3, random unitary connection.
    pub fn bundle(potential: PotentialKind) -> Self {
        Self {
            min_vertices: 1,
            max_vertices: 12,
            max_dim: 3,
            topology: Topology::Connected,
            connection: ConnectionKind::RandomUnitary,
            potential,
        }
    }

    /// Line bundle, identity connection.
    pub fn scalar(potential: PotentialKind) -> Self {
        Self {
            min_vertices: 2,
            max_vertices: 12,
            max_dim: 1,
            topology: Topology::Connected,
            connection: ConnectionKind::Identity,
            potential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub graph: WeightedGraph,
    pub bundle: Bundle,
    pub connection: Connection,
    pub potential: Potential,
}

impl Instance {
    pub fn operator(&self) -> Result<BlockOperator> {
        assemble(&self.graph, &self.bundle, &self.connection, &self.potential)
    }

    /// Same graph with a line bundle, identity connection and `W = 0`.
    pub fn scalar_companion(&self) -> Result<Instance> {
        let bundle = Bundle::uniform(self.graph.n(), 1)?;
        Ok(Instance {
            seed: self.seed,
            connection: identity_connection(&self.graph, &bundle)?,
            potential: Potential::zeros(&bundle),
            graph: self.graph.clone(),
            bundle,
        })
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, topology: Topology) -> Result<WeightedGraph> {
    let measure: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=2.0)).collect();
    let mut edges = Vec::new();
    let mut present = std::collections::BTreeSet::new();
    for y in 1..n {
        let x = rng.random_range(0..y);
        edges.push((x, y, rng.random_range(0.2..=2.0)));
        present.insert((x, y));
    }
    if topology == Topology::Connected && n > 2 {
        let density: f64 = rng.random_range(0.0..0.5);
        for x in 0..n {
            for y in x + 1..n {
                if !present.contains(&(x, y)) && rng.random::<f64>() < density {
                    edges.push((x, y, rng.random_range(0.2..=2.0)));
                }
            }
        }
    }
    WeightedGraph::new(measure, &edges)
}

fn random_potential(rng: &mut ChaCha8Rng, bundle: &Bundle, kind: PotentialKind) -> Result<Potential> {
    let blocks = (0..bundle.n())
        .map(|x| {
            let d = bundle.dim(x);
            let g = random_gaussian_matrix(rng, d, d);
            match kind {
                PotentialKind::Zero => CMatrix::zeros(d, d),
                PotentialKind::Arbitrary => g * C64::from(0.5),
                PotentialKind::SelfAdjoint => hermitian_part(&g),
                PotentialKind::Accretive | PotentialKind::NonAccretive => {
                    let h = random_gaussian_matrix(rng, d, d);
                    let psd = &h * h.adjoint() * C64::from(0.5 / d as f64);
                    let skew = (&g - g.adjoint()) * C64::from(0.5);
                    if kind == PotentialKind::Accretive {
                        psd + skew
                    } else {
                        -(psd + CMatrix::identity(d, d) * C64::from(0.5)) + skew
                    }
                }
                PotentialKind::Killing => {
                    let mut w = CMatrix::zeros(d, d);
                    if x == 0 {
                        w[(0, 0)] = C64::from(1.0);
                    }
                    w
                }
            }
        })
        .collect();
    Potential::new(bundle, blocks)
}

/// Deterministic in `(seed, spec)`.
pub fn random_instance(seed: u64, spec: InstanceSpec) -> Result<Instance> {
    let mut rng = stream_rng(seed, 0);
    let n = rng.random_range(spec.min_vertices.max(1)..=spec.max_vertices.max(spec.min_vertices.max(1)));
    let graph = random_graph(&mut rng, n, spec.topology)?;
    let dim = match spec.connection {
        ConnectionKind::Magnetic => 1,
        _ => rng.random_range(1..=spec.max_dim.max(1)),
    };
    let bundle = Bundle::uniform(n, dim)?;
    let connection = match spec.connection {
        ConnectionKind::Identity => identity_connection(&graph, &bundle)?,
        ConnectionKind::Magnetic => {
            let theta: Vec<_> = graph
                .edges()
                .map(|(x, y, _)| (x, y, rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI)))
                .collect();
            magnetic_connection(&graph, &theta)?
        }
        ConnectionKind::RandomUnitary => random_unitary_connection(&graph, &bundle, rng.random())?,
    };
    let potential = random_potential(&mut rng, &bundle, spec.potential)?;
    Ok(Instance {
        seed,
        graph,
        bundle,
        connection,
        potential,
    })
}

/// Real function with standard normal values.
pub fn random_real_function<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_connected, validate_graph};
    use crate::operator::{check_potential_accretive, check_potential_selfadjoint};

    #[test]
    fn instances_are_valid_and_deterministic() {
        for seed in 0..30 {
            let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Accretive)).unwrap();
            assert!(validate_graph(&inst.graph).is_valid());
            assert!(is_connected(&inst.graph));
            assert!(inst.graph.n() <= 12 && inst.bundle.dims()[0] <= 3);
            assert!(check_potential_accretive(&inst.potential).accretive);
            let again = random_instance(seed, InstanceSpec::bundle(PotentialKind::Accretive)).unwrap();
            assert_eq!(inst.connection, again.connection);
            assert_eq!(inst.potential, again.potential);
        }
    }

    #[test]
    fn potential_kinds() {
        for seed in 0..20 {
            let sa = random_instance(seed, InstanceSpec::bundle(PotentialKind::SelfAdjoint)).unwrap();
            assert!(check_potential_selfadjoint(&sa.potential));
            let bad = random_instance(seed, InstanceSpec::bundle(PotentialKind::NonAccretive)).unwrap();
            assert!(check_potential_accretive(&bad.potential).margin <= -0.5 + 1e-12);
        }
    }

    #[test]
    fn trees_have_n_minus_one_edges() {
        let spec = InstanceSpec {
            topology: Topology::Tree,
            connection: ConnectionKind::Magnetic,
            ..InstanceSpec::scalar(PotentialKind::Zero)
        };
        for seed in 0..10 {
            let inst = random_instance(seed, spec).unwrap();
            assert_eq!(inst.graph.edge_count(), inst.graph.n() - 1);
        }
    }
}
