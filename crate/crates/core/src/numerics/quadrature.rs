//! Integration of scalar integrands over a uniform grid.
//!
//! The integral `∫ f dx` is computed by treating it as the initial value
//! problem `I' = f(x)`, `I(x0) = 0`, and taking classic RK4 steps across each
//! panel. Because the right-hand side does not depend on `I`, the two middle
//! stages coincide and each panel reduces to `h/6 (f(x) + 4 f(x + h/2) + f(x + h))`,
//! so the rule is exact for cubics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[x0, xf]` into `panels` intervals. `xf < x0` is allowed
/// and flips the orientation of every integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x0: f64,
    xf: f64,
    panels: usize,
}

impl Grid {
    pub fn new(x0: f64, xf: f64, panels: usize) -> Result<Self> {
        if !x0.is_finite() || !xf.is_finite() {
            return Err(Error::validation("grid", "endpoints must be finite"));
        }
        if x0 == xf {
            return Err(Error::validation("grid", format!("degenerate interval at x = {x0}")));
        }
        if panels < 2 {
            return Err(Error::validation("grid.panels", format!("need at least 2, got {panels}")));
        }
        Ok(Self { x0, xf, panels })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn xf(&self) -> f64 {
        self.xf
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// Signed panel width.
    pub fn step(&self) -> f64 {
        (self.xf - self.x0) / self.panels as f64
    }

    /// The `panels + 1` panel boundaries.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.panels)
            .map(|k| if k == self.panels { self.xf } else { self.x0 + h * k as f64 })
            .collect()
    }

    /// Every abscissa the RK4 rule evaluates: panel boundaries and midpoints,
    /// in order (`2·panels + 1` points).
    pub fn stage_points(&self) -> Vec<f64> {
        let h = self.step();
        let n = 2 * self.panels;
        (0..=n)
            .map(|k| if k == n { self.xf } else { self.x0 + 0.5 * h * k as f64 })
            .collect()
    }

    /// Weights matching [`Grid::stage_points`].
    pub fn stage_weights(&self) -> Vec<f64> {
        let h = self.step();
        let n = 2 * self.panels;
        (0..=n)
            .map(|k| {
                if k == 0 || k == n {
                    h / 6.0
                } else if k % 2 == 1 {
                    4.0 * h / 6.0
                } else {
                    2.0 * h / 6.0
                }
            })
            .collect()
    }
}

/// Integrates `f` over the grid. A non-finite integrand value aborts with
/// [`Error::Singular`] carrying the offending abscissa.
pub fn quadrature<F>(mut f: F, grid: &Grid) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let h = grid.step();
    let nodes = grid.nodes();
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Singular { x })
        }
    };

    let mut total = 0.0;
    let mut left = eval(nodes[0])?;
    for w in nodes.windows(2) {
        let mid = eval(w[0] + 0.5 * h)?;
        let right = eval(w[1])?;
        // RK4 stages for I' = f(x): k1 = left, k2 = k3 = mid, k4 = right
        total += h / 6.0 * (left + 2.0 * mid + 2.0 * mid + right);
        left = right;
    }
    Ok(total)
}

/// Applies the same rule to integrand values already sampled at
/// [`Grid::stage_points`].
pub fn integrate_samples(samples: &[f64], weights: &[f64]) -> f64 {
    samples.iter().zip(weights).map(|(s, w)| s * w).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cubic_is_exact() {
        let g = Grid::new(0.0, 1.0, 2).unwrap();
        let v = quadrature(|x| x * x, &g).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let v = quadrature(|x| x.powi(3) - 2.0 * x, &g).unwrap();
        assert!((v - (0.25 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn sine_integral() {
        let g = Grid::new(0.0, PI, 1000).unwrap();
        let v = quadrature(f64::sin, &g).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn reversed_orientation_flips_sign() {
        let fwd = quadrature(f64::exp, &Grid::new(0.0, 1.0, 50).unwrap()).unwrap();
        let rev = quadrature(f64::exp, &Grid::new(1.0, 0.0, 50).unwrap()).unwrap();
        assert!((fwd + rev).abs() < 1e-14);
        assert!(rev < 0.0);
    }

    #[test]
    fn fourth_order_refinement() {
        let exact = 1.0f64.exp() - 1.0;
        let err = |n| (quadrature(f64::exp, &Grid::new(0.0, 1.0, n).unwrap()).unwrap() - exact).abs();
        let ratio = err(8) / err(16);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn singular_integrand_reports_abscissa() {
        let g = Grid::new(-1.0, 1.0, 4).unwrap();
        match quadrature(|x| 1.0 / x, &g) {
            Err(Error::Singular { x }) => assert_eq!(x, 0.0),
            other => panic!("expected singular signal, got {other:?}"),
        }
    }

    #[test]
    fn sampled_rule_matches_functional_rule() {
        let g = Grid::new(0.3, -0.7, 37).unwrap();
        let f = |x: f64| (3.0 * x).cos() + x.powi(5);
        let samples: Vec<f64> = g.stage_points().into_iter().map(f).collect();
        let a = integrate_samples(&samples, &g.stage_weights());
        let b = quadrature(f, &g).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        let g = Grid::new(2.0, 1.0, 4).unwrap();
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(nodes[4], 1.0);
    }
}
