//! Numerical kernels: RK4 integration, quadrature, Nelder-Mead, finite
//! differences and seeded sampling.

pub mod ode;
pub mod quadrature;
pub mod sampling;
pub mod simplex;

pub use ode::{rk4_integrate, rk4_step, Trajectory};
pub use quadrature::{integrate_samples, quadrature, Grid};
pub use sampling::{sample_linf_ball, splitmix64, RandomSource};
pub use simplex::{nelder_mead, Minimum, OptimizerConfig};

/// Central-difference gradient; component `i` uses step `h·max(1, |c_i|)`.
pub fn fd_gradient<F>(mut f: F, c: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = c.to_vec();
    (0..c.len())
        .map(|i| {
            let step = h * c[i].abs().max(1.0);
            probe[i] = c[i] + step;
            let up = f(&probe);
            probe[i] = c[i] - step;
            let down = f(&probe);
            probe[i] = c[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_gradient() {
        let a = [1.5, -2.0, 0.25];
        let g = fd_gradient(|c| c.iter().zip(&a).map(|(x, y)| x * y).sum(), &[3.0, -7.0, 0.1], 1e-6);
        for (gi, ai) in g.iter().zip(&a) {
            assert!((gi - ai).abs() < 1e-8, "{gi} vs {ai}");
        }
    }

    #[test]
    fn squared_norm_gradient() {
        let c = [0.3, -1.2, 2.5];
        let g = fd_gradient(|c| c.iter().map(|v| v * v).sum(), &c, 1e-6);
        for (gi, ci) in g.iter().zip(&c) {
            assert!((gi - 2.0 * ci).abs() < 1e-8);
        }
    }

    #[test]
    fn quartic_against_analytic() {
        // p(c) = c0⁴ + c0 c1³ - 3 c1² + 2 c0
        let p = |c: &[f64]| c[0].powi(4) + c[0] * c[1].powi(3) - 3.0 * c[1].powi(2) + 2.0 * c[0];
        let dp = |c: &[f64]| {
            [
                4.0 * c[0].powi(3) + c[1].powi(3) + 2.0,
                3.0 * c[0] * c[1].powi(2) - 6.0 * c[1],
            ]
        };
        for c in [[0.5, -1.5], [1.3, 0.2], [-2.0, 1.1]] {
            let g = fd_gradient(p, &c, 1e-6);
            let exact = dp(&c);
            for i in 0..2 {
                assert!((g[i] - exact[i]).abs() < 1e-6, "{g:?} vs {exact:?}");
            }
        }
    }

    #[test]
    fn non_finite_propagates() {
        let g = fd_gradient(|c| if c[0] > 0.0 { f64::NAN } else { c[1] }, &[0.0, 1.0], 1e-6);
        assert!(!g[0].is_finite());
        assert!(g[1].is_finite());
    }
}
