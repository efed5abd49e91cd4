//! Dense complex linear algebra helpers: matrix exponential, Hermitian
//! eigensolves, unitarity defects and seeded random matrices.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::{CMatrix, C64};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn hash_matrix(bytes: &mut Vec<u8>, m: &CMatrix) {
    bytes.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for z in m.iter() {
        bytes.extend_from_slice(&z.re.to_bits().to_le_bytes());
        bytes.extend_from_slice(&z.im.to_bits().to_le_bytes());
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖M^*M − I‖_max`; infinite for non-square input.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

/// `(M + M^*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian
/// matrix. Only the Hermitian part of `m` is used.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part; `+∞` for an empty matrix.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Induced 1-norm (max column sum).
pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Complex matrix with i.i.d. standard complex Gaussian entries.
pub fn random_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    loop {
        let z = random_gaussian_matrix(rng, d, d);
        let qr = z.qr();
        let r = qr.r();
        if (0..d).any(|i| r[(i, i)].norm() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..d {
            let phase = r[(j, j)] / r[(j, j)].norm();
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        return q;
    }
}

/// Output of [`expm`].
#[derive(Debug, Clone)]
pub struct Expm {
    pub matrix: CMatrix,
    pub pade_degree: usize,
    pub squarings: u32,
    /// `u · ‖A‖₁` with `u = 2^{-53}`: the absolute backward perturbation the
    /// degree/scaling selection is designed to stay under.
    pub backward_error: f64,
}

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3, 5, 7, 9 or 13 chosen from `‖A‖₁`.
pub fn expm(a: &CMatrix) -> Expm {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let backward_error = norm * f64::EPSILON / 2.0;
    if n == 0 {
        return Expm {
            matrix: CMatrix::zeros(0, 0),
            pade_degree: 0,
            squarings: 0,
            backward_error: 0.0,
        };
    }
    for &(degree, theta) in &THETA {
        if norm <= theta {
            return Expm {
                matrix: pade_low(a, degree),
                pade_degree: degree,
                squarings: 0,
                backward_error,
            };
        }
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(squarings as i32));
    let mut x = pade13(&scaled);
    for _ in 0..squarings {
        x = &x * &x;
    }
    Expm {
        matrix: x,
        pade_degree: 13,
        squarings,
        backward_error,
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn pade_low(a: &CMatrix, degree: usize) -> CMatrix {
    let b: &[f64] = match degree {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => unreachable!("unsupported Padé degree {degree}"),
    };
    let n = a.nrows();
    let eye = CMatrix::identity(n, n);
    let a2 = a * a;
    // even powers A^0, A^2, ..., A^{degree-1}
    let mut powers = vec![eye, a2.clone()];
    while powers.len() < degree.div_ceil(2) {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (j, p) in powers.iter().enumerate() {
        u_inner += p * real(b[2 * j + 1]);
        v += p * real(b[2 * j]);
    }
    let u = a * u_inner;
    solve_pade(u, v)
}

fn pade13(a: &CMatrix) -> CMatrix {
    let b = &B13;
    let n = a.nrows();
    let eye = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let w1 = &a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]);
    let w2 = &a6 * real(b[7]) + &a4 * real(b[5]) + &a2 * real(b[3]) + &eye * real(b[1]);
    let u = a * (&a6 * w1 + w2);
    let z1 = &a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]);
    let z2 = &a6 * real(b[6]) + &a4 * real(b[4]) + &a2 * real(b[2]) + &eye * real(b[0]);
    let v = &a6 * z1 + z2;
    solve_pade(u, v)
}

fn solve_pade(u: CMatrix, v: CMatrix) -> CMatrix {
    let numerator = &v + &u;
    let denominator = v - u;
    denominator
        .lu()
        .solve(&numerator)
        .expect("Padé denominator is nonsingular within the θ bounds")
}
