//! Integrands over `x` and the recovery of controls from curve slopes.
//!
//! With `x` as the independent variable the curve tangent is
//! `dq/dx = (1, y′, z′)`. The Bloch dynamics `dq/dτ = d + u × q` with
//! `d = b + Bq` give `dτ/dx = ⟨q, dq/dx⟩ / f(q)` from `r·dr/dτ = f(q)`, and
//! the controls follow by requiring `dq/dτ` to be parallel to `dq/dx`.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::basis::CurvePoint;
use crate::bloch::DissipationModel;
use crate::chimney::purity_derivative;
use crate::error::{Error, Result};

const SINGULAR_TOL: f64 = 1e-12;

/// Which control is held at zero in the three-dimensional energy problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "u8", into = "u8")]
pub enum ZeroedControl {
    #[default]
    U1,
    U2,
    U3,
}

impl ZeroedControl {
    pub fn index(self) -> usize {
        match self {
            ZeroedControl::U1 => 0,
            ZeroedControl::U2 => 1,
            ZeroedControl::U3 => 2,
        }
    }
}

impl TryFrom<u8> for ZeroedControl {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ZeroedControl::U1),
            2 => Ok(ZeroedControl::U2),
            3 => Ok(ZeroedControl::U3),
            _ => Err(Error::validation("zeroed_control", format!("must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl From<ZeroedControl> for u8 {
    fn from(z: ZeroedControl) -> u8 {
        z.index() as u8 + 1
    }
}

impl CurvePoint {
    pub fn q(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// `dq/dx = (1, y′, z′)`.
    pub fn tangent(&self) -> Vector3<f64> {
        Vector3::new(1.0, self.yp, self.zp)
    }

    /// `x + y y′ + z z′ = r·dr/dx`.
    pub fn radial_rate(&self) -> f64 {
        self.q().dot(&self.tangent())
    }
}

/// `dτ/dx = (x + y y′ + z z′) / ⟨q, b + Bq⟩`.
pub fn lagrangian_time(p: &CurvePoint, m: &DissipationModel) -> Result<f64> {
    let f = purity_derivative(&p.q(), m);
    if f.abs() < SINGULAR_TOL || !f.is_finite() {
        return Err(Error::Singular { x: p.x });
    }
    Ok(p.radial_rate() / f)
}

/// The single planar control `u = u₃` that makes the flow follow slope `y′`:
/// `u = −(b₂ + a₂y − y′(b₁ + a₁x)) / (x + y y′)` for diagonal `B`.
pub fn control_from_slope_2d(p: &CurvePoint, m: &DissipationModel) -> Result<f64> {
    let denom = p.x + p.y * p.yp;
    if denom.abs() < SINGULAR_TOL {
        return Err(Error::Singular { x: p.x });
    }
    let d = m.drift() + m.b_matrix() * Vector3::new(p.x, p.y, 0.0);
    Ok((p.yp * d.x - d.y) / denom)
}

/// `u² dτ/dx`, equal to `(b₂+a₂y−y′(b₁+a₁x))² / ((x+yy′)(a₁x²+b₁x+a₂y²+b₂y))`
/// for diagonal `B`.
pub fn lagrangian_energy_2d(p: &CurvePoint, m: &DissipationModel) -> Result<f64> {
    let f = purity_derivative(&Vector3::new(p.x, p.y, 0.0), m);
    let denom = p.x + p.y * p.yp;
    if f.abs() < SINGULAR_TOL || denom.abs() < SINGULAR_TOL {
        return Err(Error::Singular { x: p.x });
    }
    let d = m.drift() + m.b_matrix() * Vector3::new(p.x, p.y, 0.0);
    let num = d.y - p.yp * d.x;
    Ok(num * num / (denom * f))
}

/// Controls with one component pinned to zero that steer the flow along the
/// tangent `(1, y′, z′)`.
///
/// The two free components solve the linear system
/// `(e_y − y′e_x)·(d + u × q) = 0`, `(e_z − z′e_x)·(d + u × q) = 0`.
/// Returned in the `u × q` orientation of [`crate::bloch::bloch_rhs`].
pub fn controls_from_slope_3d(
    p: &CurvePoint,
    m: &DissipationModel,
    zeroed: ZeroedControl,
) -> Result<Vector3<f64>> {
    let q = p.q();
    let d = m.drift() + m.b_matrix() * q;
    let rows = [
        Vector3::new(-p.yp, 1.0, 0.0),
        Vector3::new(-p.zp, 0.0, 1.0),
    ];
    // column k of the map u ↦ u × q is e_k × q
    let free: Vec<usize> = (0..3).filter(|&k| k != zeroed.index()).collect();
    let col = |k: usize| Vector3::ith(k, 1.0).cross(&q);
    let (c0, c1) = (col(free[0]), col(free[1]));
    let sys = Matrix2::new(
        rows[0].dot(&c0),
        rows[0].dot(&c1),
        rows[1].dot(&c0),
        rows[1].dot(&c1),
    );
    let det = sys.determinant();
    if det.abs() < SINGULAR_TOL || !det.is_finite() {
        return Err(Error::Singular { x: p.x });
    }
    let rhs = -Vector2::new(rows[0].dot(&d), rows[1].dot(&d));
    let sol = sys.try_inverse().ok_or(Error::Singular { x: p.x })? * rhs;
    let mut u = Vector3::zeros();
    u[free[0]] = sol.x;
    u[free[1]] = sol.y;
    Ok(u)
}

/// The closed forms for `(u₂, u₃)` with `u₁ = 0` and diagonal `B`, written
/// for the slope system with controls entering as `q × u`.
///
/// They equal the negation of [`controls_from_slope_3d`] with
/// [`ZeroedControl::U1`].
pub fn crossed_closed_form_controls(p: &CurvePoint, m: &DissipationModel) -> Result<(f64, f64)> {
    let CurvePoint { x, y, yp, z, zp } = *p;
    let denom = x * x + x * y * yp + x * z * zp;
    if denom.abs() < SINGULAR_TOL {
        return Err(Error::Singular { x });
    }
    let gamma = 1.0 / denom;
    let bm = m.b_matrix();
    let (a1, a2, a3) = (bm[(0, 0)], bm[(1, 1)], bm[(2, 2)]);
    let (b1, b2, b3) = (m.drift().x, m.drift().y, m.drift().z);
    let u2 = -gamma
        * (b3 * x - a1 * x * x * zp - a2 * y * y * zp + a3 * x * z - b1 * x * zp + b3 * y * yp
            - b2 * y * zp
            + a3 * y * yp * z);
    let u3 = gamma
        * (b2 * x - a1 * x * x * yp - a3 * yp * z * z + a2 * x * y - b1 * x * yp - b3 * yp * z
            + b2 * z * zp
            + a2 * y * z * zp);
    Ok((u2, u3))
}

/// `‖u‖² dτ/dx` with the recovered three-dimensional controls.
pub fn lagrangian_energy_3d(
    p: &CurvePoint,
    m: &DissipationModel,
    zeroed: ZeroedControl,
) -> Result<f64> {
    let u = controls_from_slope_3d(p, m, zeroed)?;
    Ok(u.norm_squared() * lagrangian_time(p, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::bloch_rhs;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planar() -> DissipationModel {
        DissipationModel::planar([-3.0, -4.0], [1.0, 2.0]).unwrap()
    }

    fn spatial() -> DissipationModel {
        DissipationModel::from_b(
            Matrix3::from_diagonal(&Vector3::new(-7.0, -6.0, -5.0)),
            Vector3::new(1.0, 2.0, 3.0),
        )
        .unwrap()
    }

    fn pt(x: f64, y: f64, yp: f64) -> CurvePoint {
        CurvePoint { x, y, yp, z: 0.0, zp: 0.0 }
    }

    #[test]
    fn time_lagrangian_example() {
        let v = lagrangian_time(&pt(0.2, 0.3, 1.0), &planar()).unwrap();
        assert!((v - 1.5625).abs() < 1e-13, "{v}");
    }

    #[test]
    fn time_lagrangian_singular_on_boundary() {
        // f(x, 0) = x(1 − 3x) vanishes at x = 1/3
        let p = pt(1.0 / 3.0, 0.0, 0.5);
        assert!(matches!(lagrangian_time(&p, &planar()), Err(Error::Singular { .. })));
    }

    #[test]
    fn radial_motion_matches_chain_rule() {
        let m = planar();
        let dir = Vector3::new(0.6, 0.8, 0.0);
        let p = pt(0.3 * dir.x, 0.3 * dir.y, dir.y / dir.x);
        // r dr/dx = r / q̂_x
        let expected = 0.3 / dir.x / purity_derivative(&p.q(), &m);
        assert!((lagrangian_time(&p, &m).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn planar_control_example_and_closure() {
        let m = planar();
        let p = pt(0.2, 0.3, 1.0);
        let u = control_from_slope_2d(&p, &m).unwrap();
        assert!((u + 0.8).abs() < 1e-14);
        let v = bloch_rhs(&p.q(), &Vector3::new(0.0, 0.0, u), &m);
        assert!((v.y / v.x - 1.0).abs() < 1e-10);
        let e = lagrangian_energy_2d(&p, &m).unwrap();
        assert!((e - 1.0).abs() < 1e-13, "{e}");
    }

    #[test]
    fn drift_slope_needs_no_control() {
        let m = planar();
        let x = 0.1;
        let p = pt(x, 0.0, 2.0 / (1.0 - 3.0 * x));
        assert!(control_from_slope_2d(&p, &m).unwrap().abs() < 1e-14);
        assert!(lagrangian_energy_2d(&p, &m).unwrap().abs() < 1e-14);

        let m3 = spatial();
        let (x, y, z) = (0.05, 0.1, 0.12);
        let dx = 1.0 - 7.0 * x;
        let p = CurvePoint { x, y, yp: (2.0 - 6.0 * y) / dx, z, zp: (3.0 - 5.0 * z) / dx };
        for zc in [ZeroedControl::U1, ZeroedControl::U2, ZeroedControl::U3] {
            assert!(controls_from_slope_3d(&p, &m3, zc).unwrap().norm() < 1e-13);
            assert!(lagrangian_energy_3d(&p, &m3, zc).unwrap().abs() < 1e-20);
        }
    }

    #[test]
    fn energy_equals_control_squared_times_time() {
        let m = planar();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let p = pt(rng.random_range(0.01..0.4), rng.random_range(-0.4..0.4), rng.random_range(-3.0..3.0));
            let (Ok(e), Ok(u), Ok(t)) = (
                lagrangian_energy_2d(&p, &m),
                control_from_slope_2d(&p, &m),
                lagrangian_time(&p, &m),
            ) else {
                continue;
            };
            assert!((e - u * u * t).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn closed_forms_are_the_opposite_orientation() {
        let m = spatial();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = CurvePoint {
                x: rng.random_range(0.05..0.5),
                y: rng.random_range(-0.5..0.5),
                yp: rng.random_range(-3.0..3.0),
                z: rng.random_range(-0.5..0.5),
                zp: rng.random_range(-3.0..3.0),
            };
            let u = controls_from_slope_3d(&p, &m, ZeroedControl::U1).unwrap();
            let (u2, u3) = crossed_closed_form_controls(&p, &m).unwrap();
            assert_eq!(u.x, 0.0);
            let scale = u.norm().max(1.0);
            assert!((u.y + u2).abs() < 1e-10 * scale && (u.z + u3).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn spatial_closure_for_every_zeroed_control() {
        let m = spatial();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for zc in [ZeroedControl::U1, ZeroedControl::U2, ZeroedControl::U3] {
            for _ in 0..200 {
                let p = CurvePoint {
                    x: rng.random_range(0.05..0.5),
                    y: rng.random_range(-0.5..0.5),
                    yp: rng.random_range(-3.0..3.0),
                    z: rng.random_range(-0.5..0.5),
                    zp: rng.random_range(-3.0..3.0),
                };
                let Ok(u) = controls_from_slope_3d(&p, &m, zc) else { continue };
                assert_eq!(u[zc.index()], 0.0);
                let v = bloch_rhs(&p.q(), &u, &m);
                assert!((v.y / v.x - p.yp).abs() < 1e-10 * p.yp.abs().max(1.0));
                assert!((v.z / v.x - p.zp).abs() < 1e-10 * p.zp.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zeroed_control_parsing() {
        assert_eq!(ZeroedControl::try_from(2).unwrap(), ZeroedControl::U2);
        assert!(ZeroedControl::try_from(0).is_err());
        assert_eq!(u8::from(ZeroedControl::U3), 3);
    }
}
