//! Default tolerances shared by the library, the CLI and the acceptance suite.

/// Symmetry tolerance for `b(x,y) = b(y,x)` and row-sum agreement (relative).
pub const GRAPH_SYMMETRY: f64 = 1e-12;
/// Max-entry tolerance for `Φ^*Φ = I`.
pub const UNITARITY: f64 = 1e-12;
/// Eigenvalue floor for accretivity of `(W + W^*)/2`.
pub const ACCRETIVE_FLOOR: f64 = 1e-12;
/// Max-entry tolerance for `W = W^*`.
pub const SELF_ADJOINT: f64 = 1e-12;
/// Relative residual accepted for "solves (H - λ)u = 0".
pub const EIGEN_RESIDUAL: f64 = 1e-10;
/// Green's formula deviation, relative to `1 + Σ|terms|`.
pub const GREEN: f64 = 1e-10;
/// Kato gap floor (absolute).
pub const KATO: f64 = 1e-12;
/// Ground state transform deviation (relative).
pub const GROUND_STATE: f64 = 1e-9;
/// ℓ^p accretivity pairing floor, relative to the pairing's scale.
pub const ACCRETIVITY: f64 = 1e-10;
/// Scalar Young inequality slack.
pub const YOUNG: f64 = 1e-14;
/// Contraction ratio slack: ratios must stay below `1 + CONTRACTION`.
pub const CONTRACTION: f64 = 1e-10;
/// Resolvent solve residual (relative).
pub const RESOLVENT_RESIDUAL: f64 = 1e-10;
/// Entrywise floor for `(ξ + Δ)^{-1}`.
pub const POSITIVITY: f64 = 1e-12;
/// `‖e^{-tΔ}1 - 1‖_∞` bound.
pub const MASS: f64 = 1e-10;
/// Pointwise slack for semigroup domination.
pub const DOMINATION: f64 = 1e-10;
/// Semigroup law `e^{-(t+s)A} = e^{-tA}e^{-sA}` (relative).
pub const SEMIGROUP_LAW: f64 = 1e-9;
/// Resolvent identity (relative).
pub const RESOLVENT_IDENTITY: f64 = 1e-10;
/// Eigenvalue agreement for gauge and closed-form spectra.
pub const SPECTRUM: f64 = 1e-10;
/// Intrinsic metric slack.
pub const INTRINSIC: f64 = 1e-12;
/// Triangle inequality / Lipschitz slack.
pub const METRIC: f64 = 1e-12;
/// Pointwise potential minorant slack.
pub const AGMON_POINTWISE: f64 = 1e-10;
/// Form-level minorant slack, relative to scale.
pub const AGMON_FORM: f64 = 1e-8;
/// Inequality chain slack, relative to scale.
pub const AGMON_CHAIN: f64 = 1e-9;
/// Successive truncation differences must end below this.
pub const TRUNCATION: f64 = 1e-8;
/// Largest dimension handled by dense kernels.
pub const DENSE_LIMIT: usize = 2000;
