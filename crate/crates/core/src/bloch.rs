//! Two-level density matrices, the Lindblad master equation, and the
//! equivalent bilinear control system on the Bloch ball.
//!
//! A traceless Lindblad operator `L = Σ l_k σ_k` enters the Bloch dynamics
//! through
//!
//! ```text
//! A = ½ Σ_j (l_j l̄_jᵀ + l̄_j l_jᵀ),   b = i Σ_j l_j × l̄_j,   B = A − tr(A)·I
//! dq/dτ = b + B q + u × q
//! ```
//!
//! where `u` holds the Pauli coefficients of the Hamiltonian. With the
//! normalization `l_k = ½ tr(σ_k L)` and `ρ = ½(I + q·σ)` the Bloch time `τ`
//! runs twice as fast as the master-equation time `t`; see
//! [`BLOCH_TIME_SCALE`].

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `dq/dt` (master-equation time) equals `BLOCH_TIME_SCALE · dq/dτ`.
pub const BLOCH_TIME_SCALE: f64 = 2.0;

const TRACE_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const IMAG_ERROR_TOL: f64 = 1e-9;
const BALL_TOL: f64 = 1e-9;
const NEG_DEF_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli() -> [Matrix2<Complex64>; 3] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        Matrix2::new(o, one, one, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(one, o, o, -one),
    ]
}

/// Matrix of `v ↦ u × v`.
pub fn cross_matrix(u: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// A traceless 2×2 jump operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladOperator(Matrix2<Complex64>);

impl LindbladOperator {
    pub fn new(entries: Matrix2<Complex64>) -> Result<Self> {
        let tr = entries.trace().norm();
        if tr > TRACE_TOL {
            return Err(Error::validation(
                "lindblad operator",
                format!("must be traceless, trace residual {tr:e}"),
            ));
        }
        Ok(Self(entries))
    }

    /// `Σ l_k σ_k` for complex Pauli coefficients `l`.
    pub fn from_pauli(l: &Vector3<Complex64>) -> Self {
        let s = pauli();
        Self(s[0] * l.x + s[1] * l.y + s[2] * l.z)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }
}

/// `H = h0·I + Σ u_k σ_k`. Only `u` affects the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianControl {
    pub h0: f64,
    pub u: Vector3<f64>,
}

impl HamiltonianControl {
    pub fn new(h0: f64, u: Vector3<f64>) -> Result<Self> {
        if !h0.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("hamiltonian", "coefficients must be finite"));
        }
        Ok(Self { h0, u })
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        let s = pauli();
        Matrix2::identity() * c(self.h0, 0.0)
            + s[0] * c(self.u.x, 0.0)
            + s[1] * c(self.u.y, 0.0)
            + s[2] * c(self.u.z, 0.0)
    }
}

/// A validated density operator: Hermitian, unit trace, positive semi-definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    pub fn new(entries: Matrix2<Complex64>) -> Result<Self> {
        check_hermitian(&entries)?;
        let tr = entries.trace();
        if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::validation("density matrix", format!("trace {tr} ≠ 1")));
        }
        // eigenvalues of a 2×2 Hermitian matrix: t/2 ± sqrt((a−d)²/4 + |β|²)
        let a = entries[(0, 0)].re;
        let d = entries[(1, 1)].re;
        let beta = entries[(0, 1)].norm();
        let low = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + beta * beta).sqrt();
        if low < -TRACE_TOL {
            return Err(Error::validation(
                "density matrix",
                format!("negative eigenvalue {low:e}"),
            ));
        }
        Ok(Self(entries))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

fn check_hermitian(m: &Matrix2<Complex64>) -> Result<()> {
    let skew = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if skew > HERMITIAN_TOL {
        return Err(Error::validation(
            "density matrix",
            format!("not Hermitian, residual {skew:e}"),
        ));
    }
    Ok(())
}

/// A point of the closed unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector(Vector3<f64>);

impl BlochVector {
    pub fn new(q: Vector3<f64>) -> Result<Self> {
        let r = q.norm();
        if !r.is_finite() || r > 1.0 + BALL_TOL {
            return Err(Error::validation(
                "bloch vector",
                format!("radius {r} outside the unit ball"),
            ));
        }
        Ok(Self(q))
    }

    pub fn origin() -> Self {
        Self(Vector3::zeros())
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn radius(&self) -> f64 {
        self.0.norm()
    }
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(Vector3::from(v))
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(q: BlochVector) -> Self {
        q.0.into()
    }
}

/// Whether the model lives on the full ball or on the `z = 0` disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Dimension {
    pub fn count(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            _ => Err(Error::validation("dimension", format!("must be 2 or 3, got {n}"))),
        }
    }
}

/// The drift of the Bloch-ball system: `(A, b, B)` with `B = A − tr(A)·I`.
///
/// Planar models are stored as 3D models whose third row, column and drift
/// component vanish; for them `A` and `B` are related through the 2×2 trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationModel {
    a: Matrix3<f64>,
    b: Vector3<f64>,
    b_mat: Matrix3<f64>,
    dimension: Dimension,
}

impl DissipationModel {
    /// Model from a symmetric positive semi-definite `A` and drift `b`.
    pub fn from_a(a: Matrix3<f64>, b: Vector3<f64>) -> Result<Self> {
        check_finite(a.iter().chain(b.iter()))?;
        let asym = (a - a.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::validation("A", format!("not symmetric, residual {asym:e}")));
        }
        let min_eig = SymmetricEigen::new(a).eigenvalues.min();
        if min_eig < -1e-12 {
            return Err(Error::validation(
                "A",
                format!("not positive semi-definite, eigenvalue {min_eig:e}"),
            ));
        }
        let b_mat = a - Matrix3::identity() * a.trace();
        Ok(Self {
            a,
            b,
            b_mat,
            dimension: Dimension::Three,
        })
    }

    /// Model from `B` directly; `A = B − ½ tr(B)·I` is recovered from
    /// `tr(B) = −2 tr(A)`.
    pub fn from_b(b_mat: Matrix3<f64>, b: Vector3<f64>) -> Result<Self> {
        check_finite(b_mat.iter())?;
        let a = b_mat - Matrix3::identity() * (0.5 * b_mat.trace());
        let m = Self::from_a(a, b)?;
        Ok(Self { b_mat, ..m })
    }

    /// Reduced planar model `B = diag(a1, a2)`, `b = (b1, b2)`.
    pub fn planar(a: [f64; 2], b: [f64; 2]) -> Result<Self> {
        check_finite(a.iter().chain(b.iter()))?;
        let b_mat = Matrix3::new(a[0], 0.0, 0.0, 0.0, a[1], 0.0, 0.0, 0.0, 0.0);
        // in two dimensions B = A − tr(A)·I inverts to A = B − tr(B)·I
        let a_mat = Matrix3::new(-a[1], 0.0, 0.0, 0.0, -a[0], 0.0, 0.0, 0.0, 0.0);
        Ok(Self {
            a: a_mat,
            b: Vector3::new(b[0], b[1], 0.0),
            b_mat,
            dimension: Dimension::Two,
        })
    }

    pub fn a(&self) -> &Matrix3<f64> {
        &self.a
    }

    pub fn drift(&self) -> &Vector3<f64> {
        &self.b
    }

    pub fn b_matrix(&self) -> &Matrix3<f64> {
        &self.b_mat
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    /// Largest eigenvalue of `B` restricted to the active coordinates.
    pub fn max_b_eigenvalue(&self) -> f64 {
        match self.dimension {
            Dimension::Three => SymmetricEigen::new(self.b_mat).eigenvalues.max(),
            Dimension::Two => {
                let blk = self.b_mat.fixed_view::<2, 2>(0, 0).into_owned();
                SymmetricEigen::new(blk).eigenvalues.max()
            }
        }
    }

    /// Fails unless `B` is negative definite on the active coordinates.
    pub fn require_negative_definite(&self) -> Result<()> {
        let top = self.max_b_eigenvalue();
        if top > -NEG_DEF_TOL {
            return Err(Error::validation(
                "B",
                format!("must be negative definite, largest eigenvalue {top:e}"),
            ));
        }
        Ok(())
    }

    /// Whether `B` is diagonal in the working frame.
    pub fn is_diagonal(&self) -> bool {
        let m = &self.b_mat;
        [m[(0, 1)], m[(0, 2)], m[(1, 2)]].iter().all(|v| v.abs() <= 1e-14)
    }
}

fn check_finite<'a>(mut it: impl Iterator<Item = &'a f64>) -> Result<()> {
    if it.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation("model", "entries must be finite"))
    }
}

/// Complex Pauli coefficients `l_k = ½ tr(σ_k L)`.
pub fn pauli_decompose(op: &LindbladOperator) -> Vector3<Complex64> {
    let s = pauli();
    Vector3::from_fn(|k, _| (s[k] * op.0).trace() * 0.5)
}

/// Builds `(A, b, B)` from the Pauli vectors of the jump operators.
pub fn build_dissipation(ls: &[Vector3<Complex64>]) -> Result<DissipationModel> {
    if ls.is_empty() {
        return Err(Error::validation("lindblad_ops", "need at least one operator"));
    }
    let mut a = nalgebra::Matrix3::<Complex64>::zeros();
    let mut b = Vector3::<Complex64>::zeros();
    for l in ls {
        let lc = l.conjugate();
        a += (l * lc.transpose() + lc * l.transpose()) * c(0.5, 0.0);
        b += l.cross(&lc) * c(0.0, 1.0);
    }
    let a_re = strip_imaginary("A", a.iter())?;
    let b_re = strip_imaginary("b", b.iter())?;
    let a_mat = Matrix3::from_iterator(a_re);
    let b_vec = Vector3::from_iterator(b_re);
    // symmetrize away rounding before validation
    let a_mat = (a_mat + a_mat.transpose()) * 0.5;
    DissipationModel::from_a(a_mat, b_vec)
}

fn strip_imaginary<'a>(
    what: &str,
    it: impl Iterator<Item = &'a Complex64> + Clone,
) -> Result<Vec<f64>> {
    let residue = it.clone().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_ERROR_TOL {
        return Err(Error::ImaginaryResidue {
            what: what.to_string(),
            residue,
        });
    }
    // anything at or below IMAG_ERROR_TOL is rounding noise and is dropped
    Ok(it.map(|z| z.re).collect())
}

/// `b + B q + u × q`.
pub fn bloch_rhs(q: &Vector3<f64>, u: &Vector3<f64>, m: &DissipationModel) -> Vector3<f64> {
    m.b + m.b_mat * q + cross_matrix(u) * q
}

/// `[−iH, ρ] + Σ (L ρ L† − ½{L†L, ρ})`.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    h: &HamiltonianControl,
    ls: &[LindbladOperator],
) -> Matrix2<Complex64> {
    let r = rho.0;
    let hm = h.matrix();
    let minus_i = c(0.0, -1.0);
    let mut out = (hm * r - r * hm) * minus_i;
    for l in ls {
        let lm = l.0;
        let ld = lm.adjoint();
        let ldl = ld * lm;
        out += lm * r * ld - (ldl * r + r * ldl) * c(0.5, 0.0);
    }
    out
}

/// `ρ = ½(I + Σ q_j σ_j)`.
pub fn density_from_bloch(q: &BlochVector) -> DensityMatrix {
    DensityMatrix(density_image(&q.0))
}

/// `½(I + Σ q_j σ_j)` for any real vector.
fn density_image(q: &Vector3<f64>) -> Matrix2<Complex64> {
    let s = pauli();
    (Matrix2::identity() + s[0] * c(q.x, 0.0) + s[1] * c(q.y, 0.0) + s[2] * c(q.z, 0.0)) * c(0.5, 0.0)
}

/// `q_k = tr(σ_k ρ)`.
pub fn bloch_from_density(rho: &Matrix2<Complex64>) -> Result<BlochVector> {
    check_hermitian(rho)?;
    BlochVector::new(bloch_image(rho))
}

/// Real Pauli coordinates `tr(σ_k X)` of a Hermitian matrix; maps tangent
/// vectors `dρ/dt` to `dq/dt`.
pub fn bloch_image(x: &Matrix2<Complex64>) -> Vector3<f64> {
    let s = pauli();
    Vector3::from_fn(|k, _| (s[k] * x).trace().re)
}

/// `(1 + ‖q‖²)/2`.
pub fn purity(q: &BlochVector) -> f64 {
    0.5 * (1.0 + q.0.norm_squared())
}
