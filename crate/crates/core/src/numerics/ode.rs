//! Classic fixed-step fourth-order Runge-Kutta.

use crate::error::{Error, Result};

/// Sampled solution of an initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }
}

/// One RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<F>(rhs: &mut F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let n = y.len();
    let k1 = rhs(t, y);
    let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = rhs(t + 0.5 * h, &y2);
    let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
    let k3 = rhs(t + 0.5 * h, &y3);
    let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
    let k4 = rhs(t + h, &y4);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `y' = rhs(t, y)` from `t0` to `tf` with fixed step `step`.
///
/// The last step is shortened so the trajectory lands exactly on `tf`.
/// Every step is recorded, including the initial condition.
pub fn rk4_integrate<F>(mut rhs: F, t0: f64, tf: f64, y0: &[f64], step: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::validation("step", format!("must be positive, got {step}")));
    }
    if !(tf > t0) {
        return Err(Error::validation(
            "tf",
            format!("must exceed t0 ({t0}), got {tf}"),
        ));
    }

    let steps = ((tf - t0) / step).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(y0.to_vec());

    let mut t = t0;
    let mut y = y0.to_vec();
    while t < tf {
        let h = step.min(tf - t);
        // guard against a sliver step from accumulated rounding
        if h <= f64::EPSILON * tf.abs().max(1.0) {
            break;
        }
        y = rk4_step(&mut rhs, t, &y, h);
        t = if tf - t - h <= f64::EPSILON * tf.abs().max(1.0) { tf } else { t + h };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t });
        }
        times.push(t);
        states.push(y.clone());
    }
    if let Some(last) = times.last_mut() {
        *last = tf;
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let traj = rk4_integrate(|_, y| vec![y[0]], 0.0, 1.0, &[1.0], 1e-3).unwrap();
        let end = traj.last_state().unwrap()[0];
        assert!((end - std::f64::consts::E).abs() < 1e-11, "{end}");
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn zero_field_is_constant() {
        let traj = rk4_integrate(|_, _| vec![0.0, 0.0], 0.0, 2.0, &[3.0, -1.0], 0.1).unwrap();
        assert!(traj.states.iter().all(|s| s == &[3.0, -1.0]));
    }

    #[test]
    fn final_partial_step_lands_on_tf() {
        let traj = rk4_integrate(|t, _| vec![t], 0.0, 1.05, &[0.0], 0.1).unwrap();
        assert_eq!(*traj.times.last().unwrap(), 1.05);
        // y = t²/2 is integrated exactly by RK4
        assert!((traj.last_state().unwrap()[0] - 1.05f64.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |h: f64| {
            let traj = rk4_integrate(|_, y| vec![-y[0]], 0.0, 1.0, &[1.0], h).unwrap();
            (traj.last_state().unwrap()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 14.0, "ratio {ratio}");
    }

    #[test]
    fn divergence_is_reported() {
        let res = rk4_integrate(|_, y| vec![y[0] * y[0]], 0.0, 2.0, &[1.0], 0.01);
        assert!(matches!(res, Err(Error::Divergence { .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(rk4_integrate(|_, y| y.to_vec(), 0.0, 1.0, &[1.0], 0.0).is_err());
        assert!(rk4_integrate(|_, y| y.to_vec(), 1.0, 1.0, &[1.0], 0.1).is_err());
    }
}
