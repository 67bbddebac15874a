//! Output documents and CSV emission.
//!
//! Trajectory CSV columns: `x,y[,z],yp[,zp],u1,u2,u3,dtdx,f`.
//! Time-domain CSV columns: `t,x,y[,z],u1,u2,u3,purity`.
//! The bracketed columns appear only for 3D problems.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bloch::Dimension;
use crate::chimney::{fixed_point, BoundaryConditions, ChimneyGeometry};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::variational::{NodeSample, SimulatedPath, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub apogee: [f64; 3],
    pub apogee_radius: f64,
    pub max_purity: f64,
    /// `f(q_apogee)`, zero up to solver tolerance.
    pub apogee_residual: f64,
    pub q0: [f64; 3],
    pub qf: [f64; 3],
}

impl GeometryReport {
    pub fn new(geom: &ChimneyGeometry, bounds: &BoundaryConditions) -> Self {
        Self {
            apogee: (*geom.apogee.vector()).into(),
            apogee_radius: geom.apogee_radius,
            max_purity: geom.max_purity(),
            apogee_residual: geom.apogee_residual(),
            q0: (*bounds.q0.vector()).into(),
            qf: (*bounds.qf.vector()).into(),
        }
    }
}

/// Stationary states under the terminal controls held constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub terminal_controls: [f64; 3],
    /// `−(B + û)⁻¹ b` for the controls as computed (`u × q`).
    pub fixed_point: Option<[f64; 3]>,
    /// The same map with the controls negated, i.e. read in the `q × u`
    /// orientation.
    pub fixed_point_negated_controls: Option<[f64; 3]>,
    /// Distance from `fixed_point` to the apogee.
    pub distance_to_apogee: Option<f64>,
}

impl FixedPointReport {
    pub fn new(geom: &ChimneyGeometry, u: &Vector3<f64>) -> Self {
        let fp = fixed_point(&geom.model, u).ok();
        let neg = fixed_point(&geom.model, &(-u)).ok();
        Self {
            terminal_controls: (*u).into(),
            fixed_point: fp.map(Into::into),
            fixed_point_negated_controls: neg.map(Into::into),
            distance_to_apogee: fp.map(|p| (p - geom.apogee.vector()).norm()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub config: RunConfig,
    pub geometry: GeometryReport,
    pub fixed_point: FixedPointReport,
    pub solution: Solution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub config: RunConfig,
    pub elapsed: f64,
    pub predicted_time: f64,
    pub time_mismatch: f64,
    pub terminal: [f64; 3],
    pub terminal_error: f64,
    pub samples: usize,
}

impl SimulationDocument {
    pub fn new(config: &RunConfig, solution: &Solution, path: &SimulatedPath) -> Self {
        Self {
            config: config.clone(),
            elapsed: path.elapsed,
            predicted_time: solution.time,
            time_mismatch: path.time_mismatch,
            terminal: path.terminal,
            terminal_error: path.terminal_error,
            samples: path.samples.len(),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_trajectory_csv<W: Write>(out: W, dim: Dimension, samples: &[NodeSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let spatial = dim == Dimension::Three;
    let header: &[&str] = if spatial {
        &["x", "y", "z", "yp", "zp", "u1", "u2", "u3", "dtdx", "f"]
    } else {
        &["x", "y", "yp", "u1", "u2", "u3", "dtdx", "f"]
    };
    w.write_record(header).map_err(csv_error)?;
    for s in samples {
        let row: Vec<f64> = if spatial {
            vec![s.x, s.y, s.z, s.yp, s.zp, s.u[0], s.u[1], s.u[2], s.dtdx, s.f]
        } else {
            vec![s.x, s.y, s.yp, s.u[0], s.u[1], s.u[2], s.dtdx, s.f]
        };
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_time_csv<W: Write>(out: W, dim: Dimension, path: &SimulatedPath) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let spatial = dim == Dimension::Three;
    let header: &[&str] = if spatial {
        &["t", "x", "y", "z", "u1", "u2", "u3", "purity"]
    } else {
        &["t", "x", "y", "u1", "u2", "u3", "purity"]
    };
    w.write_record(header).map_err(csv_error)?;
    for s in &path.samples {
        let mut row = vec![s.t, s.q[0], s.q[1]];
        if spatial {
            row.push(s.q[2]);
        }
        row.extend_from_slice(&[s.u[0], s.u[1], s.u[2], s.purity]);
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_trajectory_columns() {
        let s = NodeSample {
            x: 0.5,
            y: 0.25,
            z: 0.0,
            yp: 1.0,
            zp: 0.0,
            u: [0.0, 0.0, -0.5],
            dtdx: 2.0,
            f: 0.125,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, Dimension::Two, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x,y,yp,u1,u2,u3,dtdx,f\n0.5,0.25,1.0,0.0,0.0,-0.5,2.0,0.125\n");
    }
}
