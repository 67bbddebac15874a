//! Forward simulation of a solved control profile.
//!
//! The controls recovered at the quadrature nodes are interpolated in `x`
//! with a monotone piecewise cubic, fed back into the Bloch equation, and
//! integrated with RK4 until the trajectory crosses `x_f`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{NodeSample, ProblemSpec, Solution};
use crate::bloch::{bloch_rhs, DissipationModel};
use crate::error::{Error, Result};
use crate::numerics::rk4_step;

/// Largest allowed `|Δq|` per step, used to shrink steps where controls are
/// large.
const MAX_ROTATION_PER_STEP: f64 = 0.01;
const MIN_STEPS: usize = 20_000;
/// Integration gives up after this multiple of the predicted time.
const TIME_OVERRUN: f64 = 2.0;

pub const TERMINAL_TOLERANCE: f64 = 5e-3;
pub const TIME_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub q: [f64; 3],
    pub u: [f64; 3],
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    pub samples: Vec<TimeSample>,
    /// Time at which the trajectory reached `x_f`.
    pub elapsed: f64,
    pub terminal: [f64; 3],
    pub terminal_error: f64,
    /// `|elapsed − t_f| / t_f`.
    pub time_mismatch: f64,
    /// Steps over which the Bloch radius shrank.
    pub radius_decreases: usize,
}

/// Fritsch-Carlson monotone cubic through `(xs, ys)` with increasing `xs`.
#[derive(Debug, Clone)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let mut ds = vec![0.0; n];
        if n >= 2 {
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let s: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
            ds[0] = s[0];
            ds[n - 1] = s[n - 2];
            for k in 1..n - 1 {
                if s[k - 1] * s[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    ds[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
                }
            }
        }
        Self { xs, ys, ds }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 {
            return self.ys[0];
        }
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.ds[k] + h01 * self.ys[k + 1] + h11 * h * self.ds[k + 1]
    }
}

struct ControlInterpolant([MonotoneCubic; 3]);

impl ControlInterpolant {
    fn new(profile: &[NodeSample]) -> Self {
        let mut nodes: Vec<&NodeSample> = profile.iter().collect();
        nodes.sort_by(|a, b| a.x.total_cmp(&b.x));
        nodes.dedup_by(|a, b| a.x == b.x);
        let xs: Vec<f64> = nodes.iter().map(|s| s.x).collect();
        let comp = |i: usize| MonotoneCubic::new(xs.clone(), nodes.iter().map(|s| s.u[i]).collect());
        Self([comp(0), comp(1), comp(2)])
    }

    fn eval(&self, x: f64) -> Vector3<f64> {
        Vector3::new(self.0[0].eval(x), self.0[1].eval(x), self.0[2].eval(x))
    }
}

/// Integrates the Bloch equation from `q0` under the interpolated controls
/// until `x` reaches `xf`.
///
/// `t_f` sets the step size and the time budget. If `q0` already sits at
/// `qf` the path is empty and takes no time.
pub fn simulate_profile(
    model: &DissipationModel,
    q0: &Vector3<f64>,
    qf: &Vector3<f64>,
    profile: &[NodeSample],
    t_f: f64,
) -> Result<SimulatedPath> {
    if (qf - q0).norm() == 0.0 {
        return Ok(SimulatedPath {
            samples: Vec::new(),
            elapsed: 0.0,
            terminal: (*q0).into(),
            terminal_error: 0.0,
            time_mismatch: 0.0,
            radius_decreases: 0,
        });
    }
    if profile.is_empty() {
        return Err(Error::validation("profile", "no control samples to interpolate"));
    }
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::validation("t_f", format!("must be positive, got {t_f}")));
    }
    let controls = ControlInterpolant::new(profile);
    let u_max = profile
        .iter()
        .map(|s| Vector3::from(s.u).norm())
        .fold(0.0, f64::max);
    let rate_bound = u_max + model.b_matrix().norm() + model.drift().norm();
    let h = (t_f / MIN_STEPS as f64).min(MAX_ROTATION_PER_STEP / rate_bound.max(1e-12));
    let direction = (qf.x - q0.x).signum();

    let mut rhs = |_t: f64, y: &[f64]| {
        let q = Vector3::new(y[0], y[1], y[2]);
        let dq = bloch_rhs(&q, &controls.eval(q.x), model);
        vec![dq.x, dq.y, dq.z]
    };
    let sample = |t: f64, q: &Vector3<f64>| TimeSample {
        t,
        q: (*q).into(),
        u: controls.eval(q.x).into(),
        purity: 0.5 * (1.0 + q.norm_squared()),
    };

    let mut t = 0.0;
    let mut q = *q0;
    let mut samples = vec![sample(t, &q)];
    let mut radius_decreases = 0;
    let budget = TIME_OVERRUN * t_f;
    loop {
        if t > budget {
            return Err(Error::SimulationMismatch(format!(
                "trajectory did not reach x_f = {} within t = {budget:.4} (x = {:.6})",
                qf.x, q.x
            )));
        }
        let y = rk4_step(&mut rhs, t, q.as_slice(), h);
        let next = Vector3::new(y[0], y[1], y[2]);
        if !next.iter().all(|v| v.is_finite()) || next.norm() > 1.0 + 1e-9 {
            return Err(Error::Divergence { t: t + h });
        }
        if next.norm() < q.norm() - 1e-12 {
            radius_decreases += 1;
        }
        if (next.x - qf.x) * direction >= 0.0 {
            let theta = (qf.x - q.x) / (next.x - q.x);
            let t_end = t + theta * h;
            let q_end = q + (next - q) * theta;
            samples.push(sample(t_end, &q_end));
            return Ok(SimulatedPath {
                samples,
                elapsed: t_end,
                terminal: q_end.into(),
                terminal_error: (q_end - qf).norm(),
                time_mismatch: (t_end - t_f).abs() / t_f,
                radius_decreases,
            });
        }
        t += h;
        q = next;
        samples.push(sample(t, &q));
    }
}

/// Simulates a solution and checks that it lands within
/// [`TERMINAL_TOLERANCE`] of `q_f`, takes `t_f` to within [`TIME_TOLERANCE`]
/// and never loses purity.
pub fn forward_simulate(spec: &ProblemSpec, solution: &Solution) -> Result<SimulatedPath> {
    let q0 = spec.bounds().q0.vector();
    let qf = spec.bounds().qf.vector();
    let path = simulate_profile(spec.model(), q0, qf, &solution.control_profile, solution.time)?;
    if path.terminal_error > TERMINAL_TOLERANCE {
        return Err(Error::SimulationMismatch(format!(
            "terminal error {:.3e} exceeds {TERMINAL_TOLERANCE}",
            path.terminal_error
        )));
    }
    if path.time_mismatch > TIME_TOLERANCE {
        return Err(Error::SimulationMismatch(format!(
            "simulated time {:.6} differs from t_f = {:.6} by {:.2}%",
            path.elapsed,
            solution.time,
            100.0 * path.time_mismatch
        )));
    }
    if path.radius_decreases > 0 {
        return Err(Error::SimulationMismatch(format!(
            "purity decreased on {} steps",
            path.radius_decreases
        )));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: f64, u3: f64) -> NodeSample {
        NodeSample {
            x,
            y: 0.0,
            z: 0.0,
            yp: 0.0,
            zp: 0.0,
            u: [0.0, 0.0, u3],
            dtdx: 0.0,
            f: 0.0,
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotone_data() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.2, 5.0, 5.1];
        let p = MonotoneCubic::new(xs, ys);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = p.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn monotone_cubic_reproduces_lines() {
        let xs: Vec<f64> = (0..6).map(|k| k as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let p = MonotoneCubic::new(xs, ys);
        for x in [0.05, 0.44, 1.2, 1.49] {
            assert!((p.eval(x) - (2.0 * x - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolant_hits_nodes_in_either_order() {
        let profile: Vec<_> = (0..5).rev().map(|k| sample(k as f64, (k * k) as f64)).collect();
        let c = ControlInterpolant::new(&profile);
        for k in 0..5 {
            assert_eq!(c.eval(k as f64).z, (k * k) as f64);
        }
    }

    #[test]
    fn zero_length_problem_is_empty() {
        let m = DissipationModel::planar([-1.0, -1.0], [0.5, 0.5]).unwrap();
        let q = Vector3::new(0.1, 0.1, 0.0);
        let p = simulate_profile(&m, &q, &q, &[], 1.0).unwrap();
        assert!(p.samples.is_empty());
        assert_eq!(p.elapsed, 0.0);
    }

    #[test]
    fn free_relaxation_reaches_target() {
        // Isotropic damping, no controls: q(t) = q* (1 − e^{−t}) along b.
        let m = DissipationModel::planar([-1.0, -1.0], [0.3, 0.0]).unwrap();
        let q0 = Vector3::zeros();
        let qf = Vector3::new(0.15, 0.0, 0.0);
        let profile = vec![sample(0.0, 0.0), sample(0.3, 0.0)];
        let t_exact = std::f64::consts::LN_2;
        let p = simulate_profile(&m, &q0, &qf, &profile, t_exact).unwrap();
        assert!((p.elapsed - t_exact).abs() < 1e-6, "{}", p.elapsed);
        assert!(p.terminal_error < 1e-9);
        assert_eq!(p.radius_decreases, 0);
    }

    #[test]
    fn overrun_is_reported() {
        let m = DissipationModel::planar([-1.0, -1.0], [0.3, 0.0]).unwrap();
        let profile = vec![sample(0.0, 0.0), sample(0.3, 0.0)];
        let err = simulate_profile(
            &m,
            &Vector3::zeros(),
            &Vector3::new(0.29, 0.0, 0.0),
            &profile,
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SimulationMismatch(_)));
    }
}
