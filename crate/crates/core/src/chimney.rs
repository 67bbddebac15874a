//! Geometry of the purity-growth region.
//!
//! Along a ray `q = r·q̂` the purity derivative `f(q) = ⟨q, b + Bq⟩` is the
//! downward parabola `⟨q̂,Bq̂⟩ r² + ⟨q̂,b⟩ r`, so `f ≥ 0` exactly on
//! `0 ≤ r ≤ g(q̂) = −⟨q̂,b⟩/⟨q̂,Bq̂⟩`. The zero set of `f` is an ellipsoid
//! through the origin; its point of largest norm (the apogee) is the state
//! of maximal reachable purity.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{cross_matrix, purity, BlochVector, Dimension, DissipationModel};
use crate::error::{Error, Result};
use crate::numerics::{nelder_mead, OptimizerConfig};

const UNIT_TOL: f64 = 1e-10;
const SEARCH_STARTS: usize = 16;
/// Apogees farther out than this violate the ball's invariance.
const BALL_SLACK: f64 = 1e-6;

/// `f(q) = ⟨q, b + Bq⟩`, equal to `r·dr/dτ` and independent of the control.
pub fn purity_derivative(q: &Vector3<f64>, m: &DissipationModel) -> f64 {
    q.dot(&(m.drift() + m.b_matrix() * q))
}

/// Nonzero root `g(q̂)` of the purity derivative along the ray through `qhat`.
pub fn radial_root(qhat: &Vector3<f64>, m: &DissipationModel) -> Result<f64> {
    let n = qhat.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::validation("qhat", format!("must be a unit vector, norm {n}")));
    }
    let curvature = qhat.dot(&(m.b_matrix() * qhat));
    if curvature >= 0.0 {
        return Err(Error::validation(
            "B",
            format!("degenerate dissipation: ⟨q̂,Bq̂⟩ = {curvature:e} along {qhat:?}"),
        ));
    }
    Ok(root_unchecked(qhat, m))
}

fn root_unchecked(qhat: &Vector3<f64>, m: &DissipationModel) -> f64 {
    -qhat.dot(m.drift()) / qhat.dot(&(m.b_matrix() * qhat))
}

/// Whether `q` lies in the closed region `{f ≥ 0}`.
pub fn in_chimney(q: &Vector3<f64>, m: &DissipationModel) -> bool {
    purity_derivative(q, m) >= 0.0
}

/// The chimney of a model together with its apogee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChimneyGeometry {
    pub model: DissipationModel,
    pub apogee: BlochVector,
    pub apogee_radius: f64,
}

impl ChimneyGeometry {
    /// `(1 + r²)/2` at the apogee.
    pub fn max_purity(&self) -> f64 {
        purity(&self.apogee)
    }

    /// `f(apogee)`, zero up to the search accuracy.
    pub fn apogee_residual(&self) -> f64 {
        purity_derivative(self.apogee.vector(), &self.model)
    }
}

/// Unit vector at the given angles: polar/azimuth on the sphere, or the
/// polar angle alone on the disc.
fn direction(dim: Dimension, angles: &[f64]) -> Vector3<f64> {
    match dim {
        Dimension::Two => Vector3::new(angles[0].cos(), angles[0].sin(), 0.0),
        Dimension::Three => {
            let (st, ct) = angles[0].sin_cos();
            let (sp, cp) = angles[1].sin_cos();
            Vector3::new(st * cp, st * sp, ct)
        }
    }
}

/// Evenly spread starting angles: a circle partition in 2D, a Fibonacci
/// lattice in 3D.
fn start_angles(dim: Dimension) -> Vec<Vec<f64>> {
    match dim {
        Dimension::Two => (0..SEARCH_STARTS)
            .map(|k| vec![2.0 * PI * (k as f64 + 0.5) / SEARCH_STARTS as f64])
            .collect(),
        Dimension::Three => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..SEARCH_STARTS)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / SEARCH_STARTS as f64;
                    vec![z.acos(), golden * k as f64]
                })
                .collect()
        }
    }
}

/// Largest `g` on a uniform angular grid: `n_theta` samples of the circle in
/// 2D, an `n_phi × n_theta` latitude-longitude grid in 3D.
pub fn grid_scan_max(m: &DissipationModel, n_theta: usize, n_phi: usize) -> (f64, Vector3<f64>) {
    let pts: Vec<Vector3<f64>> = match m.dimension() {
        Dimension::Two => (0..n_theta)
            .map(|i| direction(Dimension::Two, &[2.0 * PI * i as f64 / n_theta as f64]))
            .collect(),
        Dimension::Three => (0..=n_theta)
            .flat_map(|i| {
                let th = PI * i as f64 / n_theta as f64;
                (0..n_phi).map(move |j| {
                    direction(Dimension::Three, &[th, 2.0 * PI * j as f64 / n_phi as f64])
                })
            })
            .collect(),
    };
    pts.into_iter()
        .map(|p| (root_unchecked(&p, m), p))
        .fold((f64::NEG_INFINITY, Vector3::zeros()), |acc, (g, p)| {
            if g > acc.0 {
                (g, p)
            } else {
                acc
            }
        })
}

fn maximize_from(m: &DissipationModel, start: &[f64]) -> Result<(f64, Vector3<f64>)> {
    let dim = m.dimension();
    let objective = |a: &[f64]| -root_unchecked(&direction(dim, a), m);
    let coarse = nelder_mead(objective, start, &OptimizerConfig::for_dimension(start.len()))?;
    let polish_cfg = OptimizerConfig {
        x_tolerance: 1e-12,
        f_tolerance: 1e-15,
        simplex_scale: 1e-3,
        ..OptimizerConfig::for_dimension(start.len())
    };
    let fine = nelder_mead(objective, &coarse.point, &polish_cfg)?;
    let qhat = direction(dim, &fine.point);
    Ok((-fine.value, qhat))
}

/// Lexicographic comparison with a small tolerance on each coordinate.
fn lex_greater(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    for k in 0..3 {
        if (a[k] - b[k]).abs() > 1e-9 {
            return a[k] > b[k];
        }
    }
    false
}

/// Maximizes `g` over the unit sphere (or circle) by multistart Nelder-Mead,
/// certified against an angular grid scan.
///
/// When several maxima tie in value the candidate with the lexicographically
/// largest coordinates wins.
pub fn find_apogee(m: &DissipationModel) -> Result<ChimneyGeometry> {
    if m.drift().norm() == 0.0 {
        return Err(Error::NoChimney);
    }
    m.require_negative_definite()?;
    let dim = m.dimension();

    let mut candidates = start_angles(dim)
        .par_iter()
        .map(|s| maximize_from(m, s))
        .collect::<Result<Vec<_>>>()?;

    let (grid_best, grid_dir) = match dim {
        Dimension::Two => grid_scan_max(m, 2000, 0),
        Dimension::Three => grid_scan_max(m, 180, 360),
    };
    let best = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    if grid_best > best + 1e-12 {
        // the simplex starts missed a basin the grid found; refine it
        let angles = match dim {
            Dimension::Two => vec![grid_dir.y.atan2(grid_dir.x)],
            Dimension::Three => vec![grid_dir.z.clamp(-1.0, 1.0).acos(), grid_dir.y.atan2(grid_dir.x)],
        };
        candidates.push(maximize_from(m, &angles)?);
    }

    let best = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-10 * best.abs().max(1.0);
    let mut chosen: Option<Vector3<f64>> = None;
    for (g, qhat) in &candidates {
        if *g < best - tol {
            continue;
        }
        let q = qhat * *g;
        chosen = match chosen {
            Some(cur) if !lex_greater(&q, &cur) => Some(cur),
            _ => Some(q),
        };
    }
    let q = chosen.expect("at least one candidate");
    let radius = q.norm();
    if radius > 1.0 + BALL_SLACK {
        return Err(Error::ApogeeOutsideBall { radius });
    }
    // within BALL_SLACK of the sphere: pull back onto it
    let apogee = BlochVector::new(if radius > 1.0 { q / radius } else { q })?;
    Ok(ChimneyGeometry {
        model: *m,
        apogee,
        apogee_radius: radius,
    })
}

/// Endpoints of the steering problem: `q0 = ε·b/‖b‖`, `qf = (1 − δ)·q_apogee`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub q0: BlochVector,
    pub qf: BlochVector,
    pub epsilon: f64,
    pub delta: f64,
}

pub fn boundary_conditions(
    geom: &ChimneyGeometry,
    epsilon: f64,
    delta: f64,
) -> Result<BoundaryConditions> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::validation("epsilon", format!("must be positive, got {epsilon}")));
    }
    if !(delta > 0.0) || delta > 1.0 {
        return Err(Error::validation("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let b = geom.model.drift();
    let q0 = b * (epsilon / b.norm());
    if !in_chimney(&q0, &geom.model) {
        return Err(Error::validation(
            "epsilon",
            format!("start point ε·b̂ with ε = {epsilon} lies outside the chimney"),
        ));
    }
    let qf = geom.apogee.vector() * (1.0 - delta);
    Ok(BoundaryConditions {
        q0: BlochVector::new(q0)?,
        qf: BlochVector::new(qf)?,
        epsilon,
        delta,
    })
}

/// Stationary state `−(B + û)⁻¹ b` under the constant control `u`.
///
/// Planar models accept only controls about the `z` axis and solve on the
/// active 2×2 block.
pub fn fixed_point(m: &DissipationModel, u: &Vector3<f64>) -> Result<Vector3<f64>> {
    match m.dimension() {
        Dimension::Three => {
            let jac = m.b_matrix() + cross_matrix(u);
            let inv = jac
                .try_inverse()
                .ok_or_else(|| Error::SingularMatrix(format!("B + û for u = {u:?}")))?;
            Ok(-(inv * m.drift()))
        }
        Dimension::Two => {
            if u.x != 0.0 || u.y != 0.0 {
                return Err(Error::validation(
                    "u",
                    "planar models are steered by the z control only",
                ));
            }
            let bm = m.b_matrix();
            let jac = Matrix2::new(bm[(0, 0)], -u.z, u.z, bm[(1, 1)]);
            let inv = jac
                .try_inverse()
                .ok_or_else(|| Error::SingularMatrix(format!("planar B + û for u3 = {}", u.z)))?;
            let q = -(inv * Vector2::new(m.drift().x, m.drift().y));
            Ok(Vector3::new(q.x, q.y, 0.0))
        }
    }
}
