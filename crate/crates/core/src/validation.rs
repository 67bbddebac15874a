//! Self-checks over a configured model: Lindblad/Bloch correspondence,
//! purity identities, apogee certification and the control-recovery
//! identities.

use nalgebra::{Vector3, Matrix2};
use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::{
    bloch_image, bloch_rhs, build_dissipation, density_from_bloch, lindblad_rhs, pauli_decompose,
    BlochVector, DissipationModel, Dimension, HamiltonianControl, LindbladOperator,
    BLOCH_TIME_SCALE,
};
use crate::chimney::{grid_scan_max, in_chimney, purity_derivative, ChimneyGeometry};
use crate::numerics::RandomSource;
use crate::variational::{
    control_from_slope_2d, controls_from_slope_3d, lagrangian_energy_2d, lagrangian_energy_3d,
    lagrangian_time, CurvePoint, ZeroedControl,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed error.
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, error: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: error <= tolerance,
            error,
            tolerance,
        }
    }
}

fn ball_point(rng: &mut RandomSource, dim: Dimension) -> Vector3<f64> {
    loop {
        let q = Vector3::new(
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            if dim == Dimension::Three { rng.uniform(-1.0, 1.0) } else { 0.0 },
        );
        if q.norm() <= 1.0 {
            return q;
        }
    }
}

fn random_operator(rng: &mut RandomSource) -> LindbladOperator {
    let mut c = || Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    LindbladOperator::from_pauli(&Vector3::new(c(), c(), c()))
}

fn max_abs(v: Vector3<f64>) -> f64 {
    v.amax()
}

/// `bloch_image(lindblad_rhs(ρ(q))) = BLOCH_TIME_SCALE · bloch_rhs(q)` on
/// `samples` random states and controls. Uses `ops` when given, otherwise
/// fresh random operator sets per sample.
pub fn isomorphism_error(
    ops: Option<&[LindbladOperator]>,
    samples: usize,
    rng: &mut RandomSource,
) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let owned: Vec<LindbladOperator>;
        let ls = match ops {
            Some(ls) => ls,
            None => {
                let n = 1 + (rng.uniform(0.0, 3.0) as usize).min(2);
                owned = (0..n).map(|_| random_operator(rng)).collect();
                &owned
            }
        };
        let model = build_dissipation(&ls.iter().map(pauli_decompose).collect::<Vec<_>>())
            .expect("operators give a valid model");
        let q = ball_point(rng, Dimension::Three);
        let u = Vector3::new(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
        let h = HamiltonianControl::new(rng.uniform(-1.0, 1.0), u).expect("finite");
        let rho = density_from_bloch(&BlochVector::new(q).expect("inside ball"));
        let lhs = bloch_image(&lindblad_rhs(&rho, &h, ls));
        let rhs = bloch_rhs(&q, &u, &model) * BLOCH_TIME_SCALE;
        worst = worst.max(max_abs(lhs - rhs));
    }
    worst
}

/// `|P(q) − tr ρ²|` over random states.
pub fn purity_identity_error(samples: usize, rng: &mut RandomSource) -> f64 {
    (0..samples)
        .map(|_| {
            let q = BlochVector::new(ball_point(rng, Dimension::Three)).expect("inside ball");
            let rho: Matrix2<Complex64> = *density_from_bloch(&q).matrix();
            let tr = (rho * rho).trace().re;
            (crate::bloch::purity(&q) - tr).abs()
        })
        .fold(0.0, f64::max)
}

/// `|⟨q̇(u₁), q⟩ − ⟨q̇(u₂), q⟩|` over random states and control pairs.
pub fn control_independence_error(m: &DissipationModel, samples: usize, rng: &mut RandomSource) -> f64 {
    (0..samples)
        .map(|_| {
            let q = ball_point(rng, m.dimension());
            let mut ctrl = || Vector3::new(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
            let (u1, u2) = (ctrl(), ctrl());
            (bloch_rhs(&q, &u1, m).dot(&q) - bloch_rhs(&q, &u2, m).dot(&q)).abs()
        })
        .fold(0.0, f64::max)
}

/// Random interior chimney points with random slopes.
fn chimney_samples(m: &DissipationModel, samples: usize, rng: &mut RandomSource) -> Vec<CurvePoint> {
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let q = ball_point(rng, m.dimension());
        if !in_chimney(&q, m) || purity_derivative(&q, m) < 1e-3 || q.x.abs() < 1e-2 {
            continue;
        }
        let spatial = m.dimension() == Dimension::Three;
        out.push(CurvePoint {
            x: q.x,
            y: q.y,
            yp: rng.uniform(-3.0, 3.0),
            z: q.z,
            zp: if spatial { rng.uniform(-3.0, 3.0) } else { 0.0 },
        });
    }
    out
}

/// Relative error of the slopes reproduced by the recovered controls.
pub fn slope_closure_error(m: &DissipationModel, samples: usize, rng: &mut RandomSource) -> f64 {
    let mut worst: f64 = 0.0;
    for p in chimney_samples(m, samples, rng) {
        let u = match m.dimension() {
            Dimension::Two => match control_from_slope_2d(&p, m) {
                Ok(u3) => Vector3::new(0.0, 0.0, u3),
                Err(_) => continue,
            },
            Dimension::Three => match controls_from_slope_3d(&p, m, ZeroedControl::U1) {
                Ok(u) => u,
                Err(_) => continue,
            },
        };
        let v = bloch_rhs(&p.q(), &u, m);
        let ey = (v.y / v.x - p.yp).abs() / p.yp.abs().max(1.0);
        let ez = if m.dimension() == Dimension::Three {
            (v.z / v.x - p.zp).abs() / p.zp.abs().max(1.0)
        } else {
            0.0
        };
        worst = worst.max(ey).max(ez);
    }
    worst
}

/// Relative gap between the energy integrand and `‖u‖²·dτ/dx`.
pub fn energy_identity_error(m: &DissipationModel, samples: usize, rng: &mut RandomSource) -> f64 {
    let mut worst: f64 = 0.0;
    for p in chimney_samples(m, samples, rng) {
        let (energy, u) = match m.dimension() {
            Dimension::Two => match (lagrangian_energy_2d(&p, m), control_from_slope_2d(&p, m)) {
                (Ok(e), Ok(u3)) => (e, Vector3::new(0.0, 0.0, u3)),
                _ => continue,
            },
            Dimension::Three => match (
                lagrangian_energy_3d(&p, m, ZeroedControl::U1),
                controls_from_slope_3d(&p, m, ZeroedControl::U1),
            ) {
                (Ok(e), Ok(u)) => (e, u),
                _ => continue,
            },
        };
        let Ok(dtdx) = lagrangian_time(&p, m) else { continue };
        let expected = u.norm_squared() * dtdx;
        worst = worst.max((energy - expected).abs() / expected.abs().max(1.0));
    }
    worst
}

/// Runs every check for one model.
pub fn run_suite(
    m: &DissipationModel,
    ops: Option<&[LindbladOperator]>,
    geom: &ChimneyGeometry,
    seed: u64,
) -> Vec<Check> {
    let root = RandomSource::new(seed);
    let stream = |i: u64| root.split(i);
    let (scan, _) = grid_scan_max(m, 180, 360);
    vec![
        Check::new("isomorphism", isomorphism_error(ops, 200, &mut stream(0)), 1e-10),
        Check::new("purity_identity", purity_identity_error(1000, &mut stream(1)), 1e-12),
        Check::new(
            "purity_derivative_control_independence",
            control_independence_error(m, 1000, &mut stream(2)),
            1e-12,
        ),
        Check::new("apogee_on_boundary", geom.apogee_residual().abs(), 1e-8),
        Check::new("apogee_dominates_grid", (scan - geom.apogee_radius).max(0.0), 1e-9),
        Check::new("slope_closure", slope_closure_error(m, 500, &mut stream(3)), 1e-10),
        Check::new("energy_identity", energy_identity_error(m, 500, &mut stream(4)), 1e-12),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chimney::find_apogee;
    use crate::reference::{planar_model, spatial_model};

    #[test]
    fn suite_passes_on_reference_models() {
        for m in [planar_model(), spatial_model()] {
            let g = find_apogee(&m).unwrap();
            for c in run_suite(&m, None, &g, 7) {
                assert!(c.passed, "{c:?}");
            }
        }
    }
}
