//! The scalar Laplacian, the bundle Laplacian and the Schrödinger operator,
//! both as direct vertexwise evaluations and as assembled block matrices.
//!
//! The assembled matrix is `A = M^{-1}(D − B) + W` acting on stacked fiber
//! coordinates. `A` is not Hermitian in the Euclidean sense when `m` is not
//! constant; the m-weighted product makes it symmetric, so spectra are taken
//! from the Hermitian pencil `(M·A, M)`.

use std::fmt::Write as _;

use nalgebra::Schur;
use serde::Serialize;

use crate::bundle::{Bundle, Connection, Potential, Section};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg;
use crate::tolerance;
use crate::{CMatrix, CVector, C64};

/// `(Δ_{b,m} u)(x) = (1/m(x)) Σ_y b(x,y)(u(x) − u(y))`.
pub fn scalar_laplacian_apply(g: &WeightedGraph, u: &[C64]) -> Result<Vec<C64>> {
    if u.len() != g.n() {
        return Err(Error::dims("function length", g.n(), u.len()));
    }
    Ok((0..g.n())
        .map(|x| {
            let sum: C64 = g.neighbors(x).iter().map(|&(y, b)| (u[x] - u[y]) * b).sum();
            sum / g.m(x)
        })
        .collect())
}

/// `(Δ^{F,Φ} u)(x) = (1/m(x)) Σ_y b(x,y)(u(x) − Φ_{y,x} u(y))`.
pub fn bundle_laplacian_apply(g: &WeightedGraph, bundle: &Bundle, conn: &Connection, u: &Section) -> Result<Section> {
    bundle.check_graph(g)?;
    u.check(bundle)?;
    let values = (0..g.n())
        .map(|x| {
            let mut acc = CVector::zeros(bundle.dim(x));
            for &(y, b) in g.neighbors(x) {
                acc += (u.at(x) - conn.transport(y, x, u.at(y))) * C64::from(b);
            }
            acc / C64::from(g.m(x))
        })
        .collect();
    Section::new(bundle, values)
}

/// `H̃_{W,Φ} u = Δ^{F,Φ} u + W u`.
pub fn schrodinger_apply(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    u: &Section,
) -> Result<Section> {
    w.check(bundle)?;
    let mut out = bundle_laplacian_apply(g, bundle, conn, u)?;
    for x in 0..g.n() {
        let wu = w.at(x) * u.at(x);
        *out.at_mut(x) += wu;
    }
    Ok(out)
}

/// How [`assemble_with`] stores the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssemblyMode {
    /// Dense below [`tolerance::DENSE_LIMIT`] coordinates, sparse above.
    #[default]
    Auto,
    Dense,
    Sparse,
}

/// Compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; columns are sorted and
    /// duplicates summed.
    fn from_rows(ncols: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let nrows = rows.len();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        CVector::from_fn(self.nrows, |i, _| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|k| self.values[k] * v[self.col_idx[k]])
                .sum()
        })
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[(i, self.col_idx[k])] = self.values[k];
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k])))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(CMatrix),
    Sparse(CsrMatrix),
}

/// Provenance of an assembled operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMeta {
    pub graph_hash: String,
    pub connection_hash: String,
    pub potential_hash: String,
    /// Line bundle with the identity connection.
    pub scalar: bool,
    pub potential_zero: bool,
    pub potential_self_adjoint: bool,
}

/// `A = M^{-1}(D − B) + W` on stacked coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    bundle: Bundle,
    measure: Vec<f64>,
    storage: Storage,
    meta: OperatorMeta,
}

/// Assembles with [`AssemblyMode::Auto`].
pub fn assemble(g: &WeightedGraph, bundle: &Bundle, conn: &Connection, w: &Potential) -> Result<BlockOperator> {
    assemble_with(g, bundle, conn, w, AssemblyMode::Auto)
}

pub fn assemble_with(
    g: &WeightedGraph,
    bundle: &Bundle,
    conn: &Connection,
    w: &Potential,
    mode: AssemblyMode,
) -> Result<BlockOperator> {
    bundle.check_graph(g)?;
    w.check(bundle)?;
    let n_total = bundle.total_dim();
    let dense = match mode {
        AssemblyMode::Auto => n_total <= tolerance::DENSE_LIMIT,
        AssemblyMode::Dense => true,
        AssemblyMode::Sparse => false,
    };
    // Per-block contributions in row order.
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n_total];
    for x in 0..g.n() {
        let (ox, dx) = (bundle.offset(x), bundle.dim(x));
        let mx = g.m(x);
        let degree: f64 = g.neighbors(x).iter().map(|&(_, b)| b).sum();
        let wx = w.at(x);
        for i in 0..dx {
            rows[ox + i].push((ox + i, C64::from(degree / mx)));
            for j in 0..dx {
                if wx[(i, j)] != C64::new(0.0, 0.0) {
                    rows[ox + i].push((ox + j, wx[(i, j)]));
                }
            }
        }
        for &(y, b) in g.neighbors(x) {
            let phi = conn.map(y, x);
            let oy = bundle.offset(y);
            for i in 0..dx {
                for j in 0..bundle.dim(y) {
                    rows[ox + i].push((oy + j, -phi[(i, j)] * (b / mx)));
                }
            }
        }
    }
    let csr = CsrMatrix::from_rows(n_total, rows);
    let storage = if dense {
        Storage::Dense(csr.to_dense())
    } else {
        Storage::Sparse(csr)
    };
    let scalar = bundle.constant_dim() == Some(1) && conn.is_identity();
    Ok(BlockOperator {
        bundle: bundle.clone(),
        measure: g.measure().to_vec(),
        storage,
        meta: OperatorMeta {
            graph_hash: g.content_hash(),
            connection_hash: conn.content_hash(),
            potential_hash: w.content_hash(),
            scalar,
            potential_zero: w.is_zero(),
            potential_self_adjoint: check_potential_selfadjoint(w),
        },
    })
}

impl BlockOperator {
    pub fn bundle(&self) -> &Bundle {
        &self.bundle
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn meta(&self) -> &OperatorMeta {
        &self.meta
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        self.bundle.total_dim()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// `m` repeated once per fiber coordinate.
    pub fn coordinate_measure(&self) -> Vec<f64> {
        (0..self.bundle.n())
            .flat_map(|x| std::iter::repeat_n(self.measure[x], self.bundle.dim(x)))
            .collect()
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::dims("stacked vector length", self.dim(), v.len()));
        }
        Ok(match &self.storage {
            Storage::Dense(a) => a * v,
            Storage::Sparse(a) => a.mul_vec(v),
        })
    }

    pub fn apply_section(&self, u: &Section) -> Result<Section> {
        u.check(&self.bundle)?;
        Section::from_stacked(&self.bundle, &self.apply(&u.stacked())?)
    }

    pub fn to_dense(&self) -> CMatrix {
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Sparse(a) => a.to_dense(),
        }
    }

    /// `K = M·A`, the stiffness side of the pencil `(K, M)`.
    pub fn stiffness(&self) -> CMatrix {
        let mut k = self.to_dense();
        for (i, mi) in self.coordinate_measure().into_iter().enumerate() {
            k.row_mut(i).scale_mut(mi);
        }
        k
    }

    /// `M^{1/2} A M^{-1/2}`, Hermitian when `W` is self-adjoint.
    pub fn symmetrized(&self) -> CMatrix {
        let s: Vec<f64> = self.coordinate_measure().into_iter().map(f64::sqrt).collect();
        let a = self.to_dense();
        CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (s[i] / s[j]))
    }

    /// Ascending real eigenvalues of the pencil `(M·A, M)`.
    pub fn pencil_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.pencil_eigen()?.0)
    }

    /// Eigenpairs of the pencil. Eigenvectors are returned in stacked
    /// coordinates and are orthonormal in the m-weighted product.
    pub fn pencil_eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        if !self.meta.potential_self_adjoint {
            return Err(Error::Precondition {
                what: "pencil spectrum requires a self-adjoint potential".into(),
                residual: f64::NAN,
            });
        }
        let s = linalg::hermitian_part(&self.symmetrized());
        let (values, mut z) = linalg::hermitian_eigen(&s);
        for (i, mi) in self.coordinate_measure().into_iter().enumerate() {
            z.row_mut(i).scale_mut(1.0 / mi.sqrt());
        }
        Ok((values, z))
    }

    /// Eigenvalues of the non-Hermitian `A` from a complex Schur form,
    /// sorted by real then imaginary part.
    pub fn general_eigenvalues(&self) -> Result<Vec<C64>> {
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        let schur = Schur::try_new(self.to_dense(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Construction("Schur iteration did not converge".into()))?;
        let (_, t) = schur.unpack();
        let mut values: Vec<C64> = t.diagonal().iter().copied().collect();
        values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(values)
    }

    /// Coordinate list, one `row col re im` line per stored nonzero.
    pub fn export_coo(&self) -> String {
        let mut out = String::new();
        let entries: Vec<(usize, usize, C64)> = match &self.storage {
            Storage::Dense(a) => (0..a.nrows())
                .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
                .filter_map(|(i, j)| {
                    let z = a[(i, j)];
                    (z != C64::new(0.0, 0.0)).then_some((i, j, z))
                })
                .collect(),
            Storage::Sparse(a) => a.entries().collect(),
        };
        for (i, j, z) in entries {
            let _ = writeln!(out, "{i} {j} {:e} {:e}", z.re, z.im);
        }
        out
    }
}

/// Result of [`check_potential_accretive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccretivityReport {
    pub accretive: bool,
    pub worst_vertex: Option<usize>,
    /// Smallest eigenvalue of `(W(x) + W(x)^*)/2` over all vertices.
    pub margin: f64,
}

/// `Re⟨W(x)v, v⟩ ≥ 0` for all `x`, via the Hermitian part's spectrum.
pub fn check_potential_accretive(w: &Potential) -> AccretivityReport {
    let mut worst: Option<(usize, f64)> = None;
    for (x, block) in w.blocks().iter().enumerate() {
        let lo = linalg::min_hermitian_eigenvalue(&linalg::hermitian_part(block));
        if worst.is_none_or(|(_, v)| lo < v) {
            worst = Some((x, lo));
        }
    }
    let margin = worst.map_or(0.0, |(_, v)| v);
    AccretivityReport {
        accretive: margin >= -tolerance::ACCRETIVE_FLOOR,
        worst_vertex: worst.map(|(x, _)| x),
        margin,
    }
}

/// `‖W(x) − W(x)^*‖_max ≤ 1e−12` at every vertex.
pub fn check_potential_selfadjoint(w: &Potential) -> bool {
    potential_selfadjoint_defect(w) <= tolerance::SELF_ADJOINT
}

pub fn potential_selfadjoint_defect(w: &Potential) -> f64 {
    w.blocks()
        .iter()
        .map(|b| linalg::max_abs(&(b - b.adjoint())))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{identity_connection, magnetic_connection};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_setup(g: &WeightedGraph) -> (Bundle, Connection) {
        let b = Bundle::uniform(g.n(), 1).unwrap();
        let conn = identity_connection(g, &b).unwrap();
        (b, conn)
    }

    #[test]
    fn scalar_examples() {
        let g = WeightedGraph::path(2);
        let out = scalar_laplacian_apply(&g, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(out, vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        let g3 = WeightedGraph::new(vec![1.0, 2.0, 1.0], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let out = scalar_laplacian_apply(&g3, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(out, vec![c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        let constant = scalar_laplacian_apply(&g3, &[c(2.0, 1.0); 3]).unwrap();
        assert!(constant.iter().all(|z| *z == c(0.0, 0.0)));
        assert!(scalar_laplacian_apply(&g3, &[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn magnetic_edge_pi() {
        let g = WeightedGraph::path(2);
        let b = Bundle::uniform(2, 1).unwrap();
        let conn = magnetic_connection(&g, &[(0, 1, PI)]).unwrap();
        let out = bundle_laplacian_apply(&g, &b, &conn, &Section::real(&[1.0, 1.0])).unwrap();
        assert!((out.at(0)[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((out.at(1)[0] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn swap_connection() {
        let g = WeightedGraph::path(2);
        let b = Bundle::uniform(2, 2).unwrap();
        let swap = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let conn = Connection::from_maps(&g, &b, vec![((1, 0), swap)]).unwrap();
        let e0 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let u = Section::new(&b, vec![e0.clone(), e0]).unwrap();
        let out = bundle_laplacian_apply(&g, &b, &conn, &u).unwrap();
        let expected = CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(out.at(0), &expected);
        assert_eq!(out.at(1), &expected);
    }

    #[test]
    fn schrodinger_examples() {
        let single = WeightedGraph::new(vec![1.0], &[]).unwrap();
        let (b1, conn1) = scalar_setup(&single);
        let w = Potential::new(&b1, vec![CMatrix::from_element(1, 1, c(2.0, 0.0))]).unwrap();
        let out = schrodinger_apply(&single, &b1, &conn1, &w, &Section::real(&[3.0])).unwrap();
        assert_eq!(out.at(0)[0], c(6.0, 0.0));

        let g = WeightedGraph::path(2);
        let (b, conn) = scalar_setup(&g);
        let w = Potential::scalar_multiple(&b, &[1.0, 1.0]).unwrap();
        let out = schrodinger_apply(&g, &b, &conn, &w, &Section::real(&[1.0, 0.0])).unwrap();
        assert_eq!(out.at(0)[0], c(2.0, 0.0));
        assert_eq!(out.at(1)[0], c(-1.0, 0.0));
    }

    #[test]
    fn assembled_examples() {
        let g = WeightedGraph::path(2);
        let (b, conn) = scalar_setup(&g);
        let a = assemble(&g, &b, &conn, &Potential::zeros(&b)).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(a.to_dense(), expected);
        assert!(a.meta().scalar);

        let theta = 0.7;
        let conn = magnetic_connection(&g, &[(1, 0, theta)]).unwrap();
        let a = assemble(&g, &b, &conn, &Potential::zeros(&b)).unwrap().to_dense();
        // θ(1,0) = θ, so Φ_{1,0} = e^{iθ(0,1)} = e^{−iθ}
        assert!((a[(0, 1)] + C64::from_polar(1.0, -theta)).norm() < 1e-15);
        assert!((a[(1, 0)] + C64::from_polar(1.0, theta)).norm() < 1e-15);
    }

    #[test]
    fn dense_and_sparse_agree() {
        let g = WeightedGraph::cycle(5);
        let b = Bundle::uniform(5, 2).unwrap();
        let conn = crate::bundle::random_unitary_connection(&g, &b, 4).unwrap();
        let w = Potential::scalar_multiple(&b, &[0.5, 1.0, 0.0, 2.0, 0.1]).unwrap();
        let dense = assemble_with(&g, &b, &conn, &w, AssemblyMode::Dense).unwrap();
        let sparse = assemble_with(&g, &b, &conn, &w, AssemblyMode::Sparse).unwrap();
        assert!(sparse.is_sparse());
        assert_eq!(dense.to_dense(), sparse.to_dense());
        assert_eq!(dense.export_coo(), sparse.export_coo());
    }

    #[test]
    fn pencil_two_vertex() {
        let g = WeightedGraph::path(2);
        let (b, conn) = scalar_setup(&g);
        let a = assemble(&g, &b, &conn, &Potential::zeros(&b)).unwrap();
        let ev = a.pencil_eigenvalues().unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
        let general = a.general_eigenvalues().unwrap();
        assert!(general[0].norm() < 1e-12 && (general[1] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn potential_predicates() {
        let b = Bundle::uniform(1, 2).unwrap();
        let zero = Potential::zeros(&b);
        let report = check_potential_accretive(&zero);
        assert!(report.accretive && report.margin == 0.0);
        let skew = Potential::new(&b, vec![CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)])]).unwrap();
        let report = check_potential_accretive(&skew);
        assert!(report.accretive && report.margin.abs() < 1e-15);
        let b1 = Bundle::uniform(1, 1).unwrap();
        let neg = Potential::new(&b1, vec![CMatrix::from_element(1, 1, c(-1.0, 0.0))]).unwrap();
        let report = check_potential_accretive(&neg);
        assert!(!report.accretive && report.margin == -1.0 && report.worst_vertex == Some(0));

        let i = c(0.0, 1.0);
        let z = c(0.0, 0.0);
        let not_sa = Potential::new(&b, vec![CMatrix::from_row_slice(2, 2, &[z, i, i, z])]).unwrap();
        let sa = Potential::new(&b, vec![CMatrix::from_row_slice(2, 2, &[z, i, -i, z])]).unwrap();
        assert!(!check_potential_selfadjoint(&not_sa));
        assert!(check_potential_selfadjoint(&sa));
        assert!(check_potential_selfadjoint(&Potential::scalar_multiple(&b, &[-3.0]).unwrap()));
    }
}
