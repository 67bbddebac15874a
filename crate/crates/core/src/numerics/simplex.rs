//! Nelder-Mead simplex minimization with `fminsearch`-style initialization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Termination and initialization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Simplex diameter below which the search may stop.
    pub x_tolerance: f64,
    /// Spread of vertex values below which the search may stop.
    pub f_tolerance: f64,
    pub max_iterations: usize,
    /// Relative perturbation of each coordinate for the initial simplex.
    pub simplex_scale: f64,
}

impl OptimizerConfig {
    /// Defaults for a problem with `dim` unknowns.
    pub fn for_dimension(dim: usize) -> Self {
        Self {
            x_tolerance: 1e-8,
            f_tolerance: 1e-10,
            max_iterations: 200 * dim.max(1),
            simplex_scale: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_tolerance > 0.0) {
            return Err(Error::validation("x_tolerance", "must be positive"));
        }
        if !(self.f_tolerance > 0.0) {
            return Err(Error::validation("f_tolerance", "must be positive"));
        }
        if !(self.simplex_scale > 0.0) {
            return Err(Error::validation("simplex_scale", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `objective` starting from `start`.
///
/// Non-finite objective values met during the search are treated as `+∞`.
pub fn nelder_mead<F>(mut objective: F, start: &[f64], config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let n = start.len();
    if n == 0 {
        return Err(Error::validation("start", "empty parameter vector"));
    }
    let f0 = objective(start);
    if !f0.is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let mut eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    values.push(f0);
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = if v[i] != 0.0 {
            (1.0 + config.simplex_scale) * v[i]
        } else {
            0.00025
        };
        values.push(eval(&v));
        simplex.push(v);
    }
    let mut evaluations = n + 1;

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    for iter in 0..config.max_iterations {
        // stable sort keeps earlier vertices ahead on ties
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter <= config.x_tolerance && spread <= config.f_tolerance {
            return Ok(Minimum {
                point: simplex.swap_remove(0),
                value: values[0],
                iterations: iter,
                evaluations,
                converged: true,
            });
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();

        let along = |t: f64, out: &mut Vec<f64>| {
            for j in 0..n {
                out[j] = centroid[j] + t * (centroid[j] - worst[j]);
            }
        };

        along(REFLECTION, &mut trial);
        let reflected = trial.clone();
        let f_r = eval(&reflected);
        evaluations += 1;

        if f_r < values[0] {
            along(REFLECTION * EXPANSION, &mut trial);
            let f_e = eval(&trial);
            evaluations += 1;
            if f_e < f_r {
                simplex[n] = trial.clone();
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
            continue;
        }

        // outside contraction may tie the reflected value, inside must improve
        let outside = f_r < values[n];
        let t = if outside { REFLECTION * CONTRACTION } else { -CONTRACTION };
        along(t, &mut trial);
        let f_c = eval(&trial);
        evaluations += 1;
        if (outside && f_c <= f_r) || (!outside && f_c < values[n]) {
            simplex[n] = trial.clone();
            values[n] = f_c;
            continue;
        }

        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + SHRINK * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i]);
            evaluations += 1;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Ok(Minimum {
        point: simplex.swap_remove(best),
        value: values[best],
        iterations: config.max_iterations,
        evaluations,
        converged: false,
    })
}
