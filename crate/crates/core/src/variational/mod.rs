//! Rayleigh-Ritz solver for the time- and energy-minimal steering problems.
//!
//! The unknown path is written as `y(x)` (and `z(x)` in 3D) over the basis of
//! [`basis`]. The cost `I(c) = ∫ L(q, q′) dx` is evaluated by RK4 quadrature,
//! its coefficient gradient by central differences, and the stationarity
//! residual `ν(c) = ‖∇I(c)‖₂` is driven to zero by Nelder-Mead from random
//! starts. Among converged, feasible candidates the one with the lowest cost
//! wins.

pub mod basis;
pub mod lagrangian;
pub mod simulate;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{Dimension, DissipationModel};
use crate::chimney::{purity_derivative, BoundaryConditions};
use crate::error::{Error, Result};
use crate::numerics::{fd_gradient, nelder_mead, sample_linf_ball, Grid, OptimizerConfig, RandomSource};

pub use basis::{basis_eval, curve_eval, BasisCurve, BasisTable, CurvePoint};
pub use lagrangian::{
    control_from_slope_2d, controls_from_slope_3d, lagrangian_energy_2d, lagrangian_energy_3d,
    lagrangian_time, crossed_closed_form_controls, ZeroedControl,
};
pub use simulate::{forward_simulate, simulate_profile, SimulatedPath, TimeSample};

/// Base of the value returned for curves that leave the chimney or run
/// backwards in time; the count of offending nodes is added on top.
pub const PENALTY: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Time,
    Energy,
}

/// Everything about a solve except the model and endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub objective: Objective,
    /// Number of basis functions `M` per curve component.
    pub order: usize,
    /// Quadrature panels over `[x0, xf]`.
    pub panels: usize,
    /// Multistart count `K`.
    pub starts: usize,
    pub seed: u64,
    /// Half-width of the l∞ box the starting coefficients are drawn from.
    pub start_radius: f64,
    pub zeroed_control: ZeroedControl,
    /// Accept a candidate when `ν` falls below this.
    pub residual_tolerance: f64,
    /// Relative central-difference step for `∇I`.
    pub fd_step: f64,
    /// Simplex settings; `None` uses [`OptimizerConfig::for_dimension`].
    pub optimizer: Option<OptimizerConfig>,
    /// Extra Nelder-Mead runs from the previous best point when a start has
    /// not yet met the residual tolerance.
    pub restarts: usize,
    /// Descend on `I` itself before minimizing `ν`, so the residual search
    /// starts next to a stationary point.
    pub warm_start: bool,
}

impl SolverSettings {
    pub fn new(objective: Objective, order: usize) -> Self {
        Self {
            objective,
            order,
            panels: 1000,
            starts: 25,
            seed: 0,
            start_radius: 2.0,
            zeroed_control: ZeroedControl::U1,
            residual_tolerance: 1e-4,
            fd_step: 1e-6,
            optimizer: None,
            restarts: 3,
            warm_start: true,
        }
    }
}

/// A fully specified steering problem with its quadrature tables.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    model: DissipationModel,
    bounds: BoundaryConditions,
    settings: SolverSettings,
    grid: Grid,
    table: BasisTable,
    weights: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(
        model: DissipationModel,
        bounds: BoundaryConditions,
        settings: SolverSettings,
    ) -> Result<Self> {
        model.require_negative_definite()?;
        if settings.order == 0 {
            return Err(Error::validation("order", "M must be at least 1"));
        }
        if settings.starts == 0 {
            return Err(Error::validation("starts", "K must be at least 1"));
        }
        if !(settings.start_radius > 0.0) {
            return Err(Error::validation("start_radius", "must be positive"));
        }
        if !(settings.residual_tolerance > 0.0) || !(settings.fd_step > 0.0) {
            return Err(Error::validation("solver", "tolerances and steps must be positive"));
        }
        if let Some(opt) = &settings.optimizer {
            opt.validate()?;
        }
        let q0 = bounds.q0.vector();
        let qf = bounds.qf.vector();
        if (qf.x - q0.x).abs() < 1e-6 {
            return Err(Error::validation(
                "bounds",
                format!(
                    "x is the path parameter, so x0 = {} and xf = {} must differ by at least 1e-6",
                    q0.x, qf.x
                ),
            ));
        }
        if model.dimension() == Dimension::Two && (q0.z != 0.0 || qf.z != 0.0) {
            return Err(Error::validation("bounds", "planar problems need z = 0 endpoints"));
        }
        let grid = Grid::new(q0.x, qf.x, settings.panels)?;
        let table = BasisTable::new(
            grid.stage_points(),
            settings.order,
            [q0.x, q0.y, q0.z],
            [qf.x, qf.y, qf.z],
        );
        let weights = grid.stage_weights();
        Ok(Self {
            model,
            bounds,
            settings,
            grid,
            table,
            weights,
        })
    }

    pub fn model(&self) -> &DissipationModel {
        &self.model
    }

    pub fn bounds(&self) -> &BoundaryConditions {
        &self.bounds
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dimension(&self) -> Dimension {
        self.model.dimension()
    }

    fn spatial(&self) -> bool {
        self.dimension() == Dimension::Three
    }

    /// Length of the coefficient vector: `M` in 2D, `2M` in 3D.
    pub fn coefficient_count(&self) -> usize {
        self.settings.order * if self.spatial() { 2 } else { 1 }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        self.settings
            .optimizer
            .unwrap_or_else(|| OptimizerConfig::for_dimension(self.coefficient_count()))
    }

    pub fn curve(&self, coefficients: &[f64]) -> BasisCurve {
        let q0 = self.bounds.q0.vector();
        let qf = self.bounds.qf.vector();
        BasisCurve {
            coefficients: coefficients.to_vec(),
            start: [q0.x, q0.y, q0.z],
            end: [qf.x, qf.y, qf.z],
            spatial: self.spatial(),
        }
    }

    fn point(&self, j: usize, c: &[f64]) -> CurvePoint {
        self.table.point(j, c, self.spatial())
    }

    /// Controls that make the flow follow the curve at `p`.
    pub fn controls_at(&self, p: &CurvePoint) -> Result<Vector3<f64>> {
        if self.spatial() {
            controls_from_slope_3d(p, &self.model, self.settings.zeroed_control)
        } else {
            Ok(Vector3::new(0.0, 0.0, control_from_slope_2d(p, &self.model)?))
        }
    }

    /// `(dτ/dx, objective integrand)` at one point.
    fn integrand(&self, p: &CurvePoint) -> Result<(f64, f64)> {
        let dtdx = lagrangian_time(p, &self.model)?;
        let value = match (self.settings.objective, self.spatial()) {
            (Objective::Time, _) => dtdx,
            (Objective::Energy, false) => lagrangian_energy_2d(p, &self.model)?,
            (Objective::Energy, true) => {
                lagrangian_energy_3d(p, &self.model, self.settings.zeroed_control)?
            }
        };
        Ok((dtdx, value))
    }

    /// Whether time advances along the curve at this `dτ/dx`.
    fn forward_in_time(&self, dtdx: f64) -> bool {
        dtdx * self.grid.step().signum() > 0.0
    }
}

/// The cost `I(c)`, or `PENALTY + (bad node count)` when any quadrature node
/// is singular or runs backwards in time.
pub fn functional(spec: &ProblemSpec, c: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut bad = 0usize;
    for (j, w) in spec.weights.iter().enumerate() {
        match spec.integrand(&spec.point(j, c)) {
            Ok((dtdx, v)) if spec.forward_in_time(dtdx) && v.is_finite() => total += w * v,
            _ => bad += 1,
        }
    }
    if bad > 0 {
        PENALTY + bad as f64
    } else {
        total
    }
}

/// Stationarity residual `ν(c) = ‖∇I(c)‖₂`.
///
/// Penalized points return their penalty value so that the simplex sees a
/// graded, finite landscape outside the feasible set.
pub fn residual_nu(spec: &ProblemSpec, c: &[f64]) -> f64 {
    let center = functional(spec, c);
    if center >= PENALTY {
        return center;
    }
    let g = fd_gradient(|p| functional(spec, p), c, spec.settings.fd_step);
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Elapsed Bloch time and control energy along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub time: f64,
    pub energy: f64,
}

/// `t_f = ∫ dτ/dx dx` and `E = ∫ ‖u‖² dτ/dx dx` on the problem grid.
pub fn evaluate_costs(spec: &ProblemSpec, c: &[f64]) -> Result<Costs> {
    let mut time = 0.0;
    let mut energy = 0.0;
    for (j, w) in spec.weights.iter().enumerate() {
        let p = spec.point(j, c);
        let dtdx = lagrangian_time(&p, &spec.model)?;
        if !spec.forward_in_time(dtdx) {
            return Err(Error::Singular { x: p.x });
        }
        let u = spec.controls_at(&p)?;
        time += w * dtdx;
        energy += w * u.norm_squared() * dtdx;
    }
    Ok(Costs { time, energy })
}

/// One quadrature node of a solved curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yp: f64,
    pub zp: f64,
    pub u: [f64; 3],
    pub dtdx: f64,
    pub f: f64,
}

/// Curve, recovered controls, `dτ/dx` and `f(q)` at every quadrature node.
pub fn node_samples(spec: &ProblemSpec, c: &[f64]) -> Result<Vec<NodeSample>> {
    (0..spec.weights.len())
        .map(|j| {
            let p = spec.point(j, c);
            let u = spec.controls_at(&p)?;
            Ok(NodeSample {
                x: p.x,
                y: p.y,
                z: p.z,
                yp: p.yp,
                zp: p.zp,
                u: u.into(),
                dtdx: lagrangian_time(&p, &spec.model)?,
                f: purity_derivative(&p.q(), &spec.model),
            })
        })
        .collect()
}

/// Outcome of a single multistart run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub start_index: usize,
    pub start: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub objective_value: f64,
    pub iterations: usize,
    pub accepted: bool,
}

/// The selected stationary curve and its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub objective: Objective,
    pub order: usize,
    pub curve: BasisCurve,
    pub residual: f64,
    /// Elapsed Bloch time `t_f`.
    pub time: f64,
    pub energy: f64,
    pub control_profile: Vec<NodeSample>,
    pub feasible: bool,
    pub starts_used: usize,
    pub accepted_starts: usize,
    pub winning_start: usize,
    pub candidates: Vec<Candidate>,
}

impl Solution {
    pub fn coefficients(&self) -> &[f64] {
        &self.curve.coefficients
    }

    /// Controls at the terminal node `x_f`.
    pub fn terminal_controls(&self) -> Vector3<f64> {
        self.control_profile
            .last()
            .map(|s| Vector3::from(s.u))
            .unwrap_or_else(Vector3::zeros)
    }
}

fn run_start(spec: &ProblemSpec, index: usize, start: Vec<f64>) -> Result<Candidate> {
    let tol = spec.settings.residual_tolerance;
    let cfg = spec.optimizer();
    let mut iterations = 0;
    let mut origin = start.clone();
    if spec.settings.warm_start {
        let cost = |c: &[f64]| functional(spec, c);
        let mut descent = nelder_mead(cost, &start, &cfg)?;
        iterations += descent.iterations;
        for _ in 0..spec.settings.restarts {
            let next = nelder_mead(cost, &descent.point, &cfg)?;
            iterations += next.iterations;
            if next.value >= descent.value {
                break;
            }
            descent = next;
        }
        origin = descent.point;
    }
    let objective = |c: &[f64]| residual_nu(spec, c);
    let mut best = nelder_mead(objective, &origin, &cfg)?;
    iterations += best.iterations;
    for _ in 0..spec.settings.restarts {
        if best.value < tol {
            break;
        }
        let next = nelder_mead(objective, &best.point, &cfg)?;
        iterations += next.iterations;
        let stalled = next.value >= best.value;
        if next.value <= best.value {
            best = next;
        }
        if stalled {
            break;
        }
    }
    let objective_value = functional(spec, &best.point);
    Ok(Candidate {
        start_index: index,
        start,
        accepted: best.value < tol && objective_value < PENALTY,
        coefficients: best.point,
        residual: best.value,
        objective_value,
        iterations,
    })
}

/// Multistart Rayleigh-Ritz solve.
///
/// Start `i` draws its coefficients from `RandomSource::new(seed).split(i)`,
/// so results do not depend on scheduling. The accepted candidate with the
/// lowest cost wins; ties go to the lower start index.
pub fn solve(spec: &ProblemSpec) -> Result<Solution> {
    let master = RandomSource::new(spec.settings.seed);
    let n = spec.coefficient_count();
    let radius = spec.settings.start_radius;
    let candidates = (0..spec.settings.starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = master.split(i as u64);
            run_start(spec, i, sample_linf_ball(&mut rng, n, radius))
        })
        .collect::<Result<Vec<_>>>()?;

    let winner = candidates
        .iter()
        .filter(|c| c.accepted)
        .min_by(|a, b| {
            a.objective_value
                .total_cmp(&b.objective_value)
                .then(a.start_index.cmp(&b.start_index))
        })
        .cloned();
    let Some(winner) = winner else {
        // prefer feasible candidates, then the smallest residual
        let best = candidates
            .iter()
            .min_by(|a, b| {
                (a.objective_value >= PENALTY)
                    .cmp(&(b.objective_value >= PENALTY))
                    .then(a.residual.total_cmp(&b.residual))
            })
            .expect("at least one start");
        return Err(Error::NoConvergence {
            starts: candidates.len(),
            best_residual: best.residual,
            best_objective: best.objective_value,
            best_coefficients: best.coefficients.clone(),
        });
    };

    let costs = evaluate_costs(spec, &winner.coefficients)?;
    let control_profile = node_samples(spec, &winner.coefficients)?;
    Ok(Solution {
        objective: spec.settings.objective,
        order: spec.settings.order,
        curve: spec.curve(&winner.coefficients),
        residual: winner.residual,
        time: costs.time,
        energy: costs.energy,
        control_profile,
        feasible: true,
        starts_used: candidates.len(),
        accepted_starts: candidates.iter().filter(|c| c.accepted).count(),
        winning_start: winner.start_index,
        candidates,
    })
}
