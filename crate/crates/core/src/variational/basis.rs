//! Polynomial trial curves with pinned endpoints.
//!
//! A curve is parameterized by `x` and written as the chord through its
//! endpoints plus a combination of `(x − x0)(x − xf)^i`, `i = 1..=M`, each
//! vanishing at both ends.

use serde::{Deserialize, Serialize};

/// Value and `x`-derivative of basis function `i` (0 is the chord).
pub fn basis_eval(i: usize, x: f64, x0: f64, xf: f64, y0: f64, yf: f64) -> (f64, f64) {
    if i == 0 {
        let slope = (yf - y0) / (xf - x0);
        return (slope * (x - x0) + y0, slope);
    }
    let a = x - x0;
    let b = x - xf;
    let pow = b.powi(i as i32 - 1);
    // d/dx [a·bⁱ] = bⁱ + i·a·bⁱ⁻¹
    (a * pow * b, pow * b + i as f64 * a * pow)
}

/// Curve samples at one abscissa: `(y, y′)` and, in 3D, `(z, z′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub yp: f64,
    pub z: f64,
    pub zp: f64,
}

/// Coefficients over the basis together with the pinned endpoints.
///
/// In 3D the coefficient vector is `c_y ‖ c_z`, both of length `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCurve {
    pub coefficients: Vec<f64>,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub spatial: bool,
}

impl BasisCurve {
    pub fn order(&self) -> usize {
        if self.spatial {
            self.coefficients.len() / 2
        } else {
            self.coefficients.len()
        }
    }

    pub fn eval(&self, x: f64) -> CurvePoint {
        curve_eval(self, x)
    }
}

pub fn curve_eval(curve: &BasisCurve, x: f64) -> CurvePoint {
    let [x0, y0, z0] = curve.start;
    let [xf, yf, zf] = curve.end;
    let m = curve.order();
    let component = |coeffs: &[f64], v0: f64, vf: f64| {
        let (mut v, mut dv) = basis_eval(0, x, x0, xf, v0, vf);
        for (i, c) in coeffs.iter().enumerate() {
            let (b, db) = basis_eval(i + 1, x, x0, xf, v0, vf);
            v += c * b;
            dv += c * db;
        }
        (v, dv)
    };
    let (y, yp) = component(&curve.coefficients[..m], y0, yf);
    let (z, zp) = if curve.spatial {
        component(&curve.coefficients[m..], z0, zf)
    } else {
        (0.0, 0.0)
    };
    CurvePoint { x, y, yp, z, zp }
}

/// Basis values tabulated once on a fixed set of abscissae, so that a curve
/// evaluates as a dot product per node.
#[derive(Debug, Clone)]
pub struct BasisTable {
    xs: Vec<f64>,
    order: usize,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    chord_y: Vec<(f64, f64)>,
    chord_z: Vec<(f64, f64)>,
}

impl BasisTable {
    pub fn new(xs: Vec<f64>, order: usize, start: [f64; 3], end: [f64; 3]) -> Self {
        let [x0, y0, z0] = start;
        let [xf, yf, zf] = end;
        let mut phi = Vec::with_capacity(xs.len() * order);
        let mut dphi = Vec::with_capacity(xs.len() * order);
        for &x in &xs {
            for i in 1..=order {
                let (v, d) = basis_eval(i, x, x0, xf, 0.0, 0.0);
                phi.push(v);
                dphi.push(d);
            }
        }
        let chord_y = xs.iter().map(|&x| basis_eval(0, x, x0, xf, y0, yf)).collect();
        let chord_z = xs.iter().map(|&x| basis_eval(0, x, x0, xf, z0, zf)).collect();
        Self {
            xs,
            order,
            phi,
            dphi,
            chord_y,
            chord_z,
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Curve at tabulated node `j`; `coefficients` is `c_y` or `c_y ‖ c_z`.
    pub fn point(&self, j: usize, coefficients: &[f64], spatial: bool) -> CurvePoint {
        let m = self.order;
        let row = &self.phi[j * m..(j + 1) * m];
        let drow = &self.dphi[j * m..(j + 1) * m];
        let dot = |c: &[f64], r: &[f64]| c.iter().zip(r).map(|(a, b)| a * b).sum::<f64>();
        let (ly, lyp) = self.chord_y[j];
        let cy = &coefficients[..m];
        let (z, zp) = if spatial {
            let (lz, lzp) = self.chord_z[j];
            let cz = &coefficients[m..2 * m];
            (lz + dot(cz, row), lzp + dot(cz, drow))
        } else {
            (0.0, 0.0)
        };
        CurvePoint {
            x: self.xs[j],
            y: ly + dot(cy, row),
            yp: lyp + dot(cy, drow),
            z,
            zp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bases_vanish_at_endpoints() {
        for i in 1..8 {
            assert_eq!(basis_eval(i, 0.1, 0.1, 0.7, 3.0, 4.0).0, 0.0);
            assert_eq!(basis_eval(i, 0.7, 0.1, 0.7, 3.0, 4.0).0, 0.0);
        }
    }

    #[test]
    fn chord_interpolates() {
        assert_eq!(basis_eval(0, 0.1, 0.1, 0.7, 3.0, 4.0).0, 3.0);
        assert!((basis_eval(0, 0.7, 0.1, 0.7, 3.0, 4.0).0 - 4.0).abs() < 1e-15);
    }

    #[test]
    fn first_basis_derivative() {
        let (x0, xf) = (0.2, 1.0);
        for x in [0.0, 0.3, 0.9] {
            let d = basis_eval(1, x, x0, xf, 0.0, 0.0).1;
            assert!((d - (2.0 * x - x0 - xf)).abs() < 1e-15);
        }
        assert!(basis_eval(1, 0.6, x0, xf, 0.0, 0.0).1.abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 0..6 {
            let x = 0.37;
            let d = basis_eval(i, x, 0.1, 0.8, 0.2, 0.9).1;
            let fd = (basis_eval(i, x + h, 0.1, 0.8, 0.2, 0.9).0
                - basis_eval(i, x - h, 0.1, 0.8, 0.2, 0.9).0)
                / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "i = {i}");
        }
    }

    #[test]
    fn zero_coefficients_give_chord() {
        let c = BasisCurve {
            coefficients: vec![0.0; 3],
            start: [0.0, 1.0, 0.0],
            end: [2.0, 5.0, 0.0],
            spatial: false,
        };
        let p = c.eval(0.5);
        assert_eq!((p.y, p.yp), (2.0, 2.0));
    }

    #[test]
    fn single_mode_midpoint() {
        let (x0, xf) = (0.5, 1.5);
        let c = BasisCurve {
            coefficients: vec![1.0],
            start: [x0, 0.0, 0.0],
            end: [xf, 2.0, 0.0],
            spatial: false,
        };
        let mid = 0.5 * (x0 + xf);
        let chord = basis_eval(0, mid, x0, xf, 0.0, 2.0).0;
        assert!((c.eval(mid).y - (chord - (xf - x0).powi(2) / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn pinned_in_three_dimensions() {
        let c = BasisCurve {
            coefficients: vec![1.5, -0.3, 2.0, 0.7],
            start: [0.01, 0.02, 0.03],
            end: [0.4, 0.5, 0.6],
            spatial: true,
        };
        let a = c.eval(0.01);
        let b = c.eval(0.4);
        assert_eq!((a.y, a.z), (0.02, 0.03));
        assert!((b.y - 0.5).abs() < 1e-15 && (b.z - 0.6).abs() < 1e-15);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let curve = BasisCurve {
            coefficients: vec![0.4, -1.1, 0.9, 0.2, 0.3, -0.8],
            start: [0.001, 0.002, 0.003],
            end: [0.11, 0.3, 0.63],
            spatial: true,
        };
        let xs: Vec<f64> = (0..=10).map(|k| 0.001 + 0.0109 * k as f64).collect();
        let table = BasisTable::new(xs.clone(), 3, curve.start, curve.end);
        for (j, &x) in xs.iter().enumerate() {
            let a = table.point(j, &curve.coefficients, true);
            let b = curve.eval(x);
            assert!((a.y - b.y).abs() < 1e-14 && (a.yp - b.yp).abs() < 1e-13);
            assert!((a.z - b.z).abs() < 1e-14 && (a.zp - b.zp).abs() < 1e-13);
        }
    }
}
