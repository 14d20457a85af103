//! Shared trajectory and closed-orbit records for flows on the 3-sphere.

use crate::twistcone::HomotopyClass;
use nalgebra::Vector4;
use serde::Serialize;

/// A time-stamped trajectory on the unit sphere of R^4.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<Vector4<f64>>,
    /// Integration metadata: accepted step count.
    pub steps: usize,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, points: Vec<Vector4<f64>>) -> Self {
        debug_assert_eq!(times.len(), points.len());
        let steps = times.len().saturating_sub(1);
        Self {
            times,
            points,
            steps,
        }
    }

    pub fn start(&self) -> Vector4<f64> {
        self.points[0]
    }

    pub fn end(&self) -> Vector4<f64> {
        *self.points.last().expect("trajectory has samples")
    }

    /// Largest deviation of |z| from 1 over the samples.
    pub fn sphere_defect(&self) -> f64 {
        self.points
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Minimum of `|z0|` and `|z1|` over the samples: the chordal clearance
    /// from the two Hopf link components.
    pub fn link_clearance(&self) -> f64 {
        self.points
            .iter()
            .map(|z| {
                let r0 = (z[0] * z[0] + z[1] * z[1]).sqrt();
                let r1 = (z[2] * z[2] + z[3] * z[3]).sqrt();
                r0.min(r1)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// A numerically closed Reeb trajectory over one period.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedOrbit {
    pub trajectory: Trajectory,
    pub period: f64,
    /// Homotopy class (link with L0, link with L1), when computed.
    pub cls: Option<HomotopyClass>,
    /// Transverse rotation number in turns per period, when computed.
    pub rho: Option<f64>,
    /// Conley-Zehnder index; `None` flags a degenerate transverse return map.
    pub cz: Option<i64>,
}

impl ClosedOrbit {
    pub fn closure_gap(&self) -> f64 {
        (self.trajectory.end() - self.trajectory.start()).norm()
    }
}
