//! Published reference results used by table reproduction.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::bloch::DissipationModel;

/// Planar model `B = diag(−3, −4)`, `b = (1, 2)`.
pub fn planar_model() -> DissipationModel {
    DissipationModel::planar([-3.0, -4.0], [1.0, 2.0]).expect("valid constants")
}

/// Spatial model `B = diag(−7, −6, −5)`, `b = (1, 2, 3)`.
pub fn spatial_model() -> DissipationModel {
    DissipationModel::from_b(
        Matrix3::from_diagonal(&Vector3::new(-7.0, -6.0, -5.0)),
        Vector3::new(1.0, 2.0, 3.0),
    )
    .expect("valid constants")
}

pub const PLANAR_APOGEE: [f64; 3] = [0.4079, 0.4493, 0.0];
pub const SPATIAL_APOGEE: [f64; 3] = [0.1140, 0.2954, 0.6287];

/// Terminal controls `(u2, u3)` reported for the spatial energy problem, in
/// the `q × u` orientation.
pub const SPATIAL_TERMINAL_CONTROLS: [f64; 2] = [1.265, 2.007];
/// `−(B + û)⁻¹ b` reported for those controls.
pub const SPATIAL_CONTROLLED_FIXED_POINT: [f64; 3] = [0.1364, 0.3789, 0.5655];

/// `(time, energy)` pairs for one ansatz order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    /// `"planar"` or `"spatial"`.
    pub table: &'static str,
    pub order: usize,
    pub time_minimal: (f64, f64),
    pub energy_minimal: (f64, f64),
}

#[rustfmt::skip]
pub const PLANAR_ROWS: [ReferenceRow; 4] = [
    ReferenceRow { table: "planar", order: 1, time_minimal: (1.9371, 7.5830), energy_minimal: (1.9393, 0.5365) },
    ReferenceRow { table: "planar", order: 3, time_minimal: (1.9366, 8.6873), energy_minimal: (2.1477, 0.2410) },
    ReferenceRow { table: "planar", order: 5, time_minimal: (1.9361, 1.6368), energy_minimal: (2.1789, 0.2334) },
    ReferenceRow { table: "planar", order: 7, time_minimal: (1.9359, 1.3765), energy_minimal: (2.1569, 0.2369) },
];

#[rustfmt::skip]
pub const SPATIAL_ROWS: [ReferenceRow; 4] = [
    ReferenceRow { table: "spatial", order: 1, time_minimal: (1.3188, 207.26), energy_minimal: (1.3243, 36.365) },
    ReferenceRow { table: "spatial", order: 2, time_minimal: (1.3188, 47.519), energy_minimal: (1.3205, 32.491) },
    ReferenceRow { table: "spatial", order: 3, time_minimal: (1.3189, 42.431), energy_minimal: (1.3212, 29.356) },
    ReferenceRow { table: "spatial", order: 4, time_minimal: (1.3188, 49.693), energy_minimal: (1.3214, 31.682) },
];
