//! Geodesic flows on the 2-sphere: Jacobi fields and the inverse rotation
//! number, Clairaut satellites on surfaces of revolution, the double cover of
//! the unit tangent bundle, and half-integer windings of loops in the link
//! complement.
//!
//! Surfaces of revolution are parametrized `(u, φ) -> (ρ(u) cos φ,
//! ρ(u) sin φ, ζ(u))` with the equator at `u = 0`. The spheroid with polar
//! semi-axis `a` and equatorial radius `c` has equator curvature `1/a²` and
//! inverse rotation number `c/a` there.

use crate::numerics::{dp54_step, unwrap_near, TAU};
use crate::sympath::{self, HamiltonianLoop};
use crate::twistcone::{satellite_interval, HalfInt};
use nalgebra::{Matrix2, Vector3, Vector4};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum GeodesicError {
    #[error("metric has no equatorial geodesic at u=0 (ρ'(0) = {0:.3e})")]
    NoEquator(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("crossing-ratio shooting is not monotone in the Clairaut constant")]
    ShootingDegeneracy,
    #[error("loop passes within {0:.3e} of the Hopf link")]
    TooCloseToLink(f64),
    #[error("lift discontinuity persists after refinement")]
    LiftDiscontinuity,
    #[error(transparent)]
    SymPath(#[from] sympath::SymPathError),
    #[error(transparent)]
    Twist(#[from] crate::twistcone::TwistError),
}

type Result<T> = std::result::Result<T, GeodesicError>;

/// Rotationally symmetric metric on the 2-sphere.
#[derive(Debug, Clone, Serialize)]
pub enum SurfaceMetric {
    /// Unit round sphere.
    Round,
    /// Spheroid with polar semi-axis `a` and equatorial radius `c`:
    /// `(c cos u cos φ, c cos u sin φ, a sin u)`.
    Spheroid { a: f64, c: f64 },
    /// Trigonometric profile `ρ(u) = Σ rho[k] cos((2k+1)u)`,
    /// `ζ(u) = Σ zeta[k] sin((2k+1)u)`; odd harmonics keep the equator at
    /// `u = 0` and the poles at `u = ±π/2`.
    RevolutionProfile { rho: Vec<f64>, zeta: Vec<f64> },
}

impl SurfaceMetric {
    /// `ρ, ρ', ρ''` at `u`.
    pub fn rho_jet(&self, u: f64) -> (f64, f64, f64) {
        match self {
            Self::Round => (u.cos(), -u.sin(), -u.cos()),
            Self::Spheroid { c, .. } => (c * u.cos(), -c * u.sin(), -c * u.cos()),
            Self::RevolutionProfile { rho, .. } => {
                let mut v = (0.0, 0.0, 0.0);
                for (k, ck) in rho.iter().enumerate() {
                    let m = (2 * k + 1) as f64;
                    v.0 += ck * (m * u).cos();
                    v.1 -= ck * m * (m * u).sin();
                    v.2 -= ck * m * m * (m * u).cos();
                }
                v
            }
        }
    }

    /// `ζ, ζ', ζ''` at `u`.
    pub fn zeta_jet(&self, u: f64) -> (f64, f64, f64) {
        match self {
            Self::Round => (u.sin(), u.cos(), -u.sin()),
            Self::Spheroid { a, .. } => (a * u.sin(), a * u.cos(), -a * u.sin()),
            Self::RevolutionProfile { zeta, .. } => {
                let mut v = (0.0, 0.0, 0.0);
                for (k, ck) in zeta.iter().enumerate() {
                    let m = (2 * k + 1) as f64;
                    v.0 += ck * (m * u).sin();
                    v.1 += ck * m * (m * u).cos();
                    v.2 -= ck * m * m * (m * u).sin();
                }
                v
            }
        }
    }

    /// First fundamental form coefficient `E = ρ'² + ζ'²` along meridians.
    pub fn meridian_e(&self, u: f64) -> f64 {
        let (_, dr, _) = self.rho_jet(u);
        let (_, dz, _) = self.zeta_jet(u);
        dr * dr + dz * dz
    }

    /// Gaussian curvature `K(u) = ζ'(ρ'ζ'' - ρ''ζ') / (E² ρ)`.
    pub fn gauss_curvature(&self, u: f64) -> f64 {
        let (r, dr, ddr) = self.rho_jet(u);
        let (_, dz, ddz) = self.zeta_jet(u);
        let e = dr * dr + dz * dz;
        dz * (dr * ddz - ddr * dz) / (e * e * r)
    }

    /// Embed a parameter point in R³.
    pub fn embed(&self, u: f64, phi: f64) -> Vector3<f64> {
        let (r, _, _) = self.rho_jet(u);
        let (z, _, _) = self.zeta_jet(u);
        Vector3::new(r * phi.cos(), r * phi.sin(), z)
    }

    fn require_equator(&self) -> Result<()> {
        let (_, dr, _) = self.rho_jet(0.0);
        if dr.abs() > 1e-12 {
            return Err(GeodesicError::NoEquator(dr));
        }
        Ok(())
    }
}

/// A unit-speed geodesic sampled as `(t, u, du/dt, φ)`.
#[derive(Debug, Clone, Serialize)]
pub struct Geodesic {
    pub samples: Vec<(f64, f64, f64, f64)>,
    /// Minimal period when closed.
    pub period: Option<f64>,
    /// Clairaut constant `ρ² dφ/dt = ρ sin ψ`.
    pub clairaut: f64,
    /// Number of equator crossings over one period.
    pub equator_crossings: usize,
}

impl Geodesic {
    /// Maximal unit-speed defect over the samples.
    pub fn speed_defect(&self, metric: &SurfaceMetric) -> f64 {
        self.samples
            .iter()
            .map(|&(_, u, w, _)| {
                let e = metric.meridian_e(u);
                let (r, _, _) = metric.rho_jet(u);
                let dphi = self.clairaut / (r * r);
                (e * w * w + r * r * dphi * dphi - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Maximal Clairaut-quantity drift `|ρ sin ψ - ν|` over the samples.
    pub fn clairaut_defect(&self, metric: &SurfaceMetric) -> f64 {
        // The azimuthal rate is slaved to ν exactly; the meaningful drift is
        // in the reconstructed `ρ sin ψ` from the unit-speed decomposition.
        self.samples
            .iter()
            .map(|&(_, u, w, _)| {
                let e = metric.meridian_e(u);
                let (r, _, _) = metric.rho_jet(u);
                let sin_psi2 = (1.0 - e * w * w).max(0.0);
                (r * sin_psi2.sqrt() - self.clairaut.abs()).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The equator as a closed unit-speed geodesic.
pub fn equator(metric: &SurfaceMetric) -> Result<Geodesic> {
    metric.require_equator()?;
    let (r, _, _) = metric.rho_jet(0.0);
    let period = TAU * r;
    let n = 512;
    let samples = (0..=n)
        .map(|j| {
            let t = period * j as f64 / n as f64;
            (t, 0.0, 0.0, t / r)
        })
        .collect();
    Ok(Geodesic {
        samples,
        period: Some(period),
        clairaut: r,
        equator_crossings: 0,
    })
}

/// Geodesic equations in `(u, w, φ)` with `φ' = ν/ρ²` slaved to Clairaut.
fn geodesic_rhs(metric: &SurfaceMetric, nu: f64, y: &[f64; 3]) -> [f64; 3] {
    let (r, dr, ddr) = metric.rho_jet(y[0]);
    let (_, dz, ddz) = metric.zeta_jet(y[0]);
    let e = dr * dr + dz * dz;
    let de = 2.0 * (dr * ddr + dz * ddz);
    let dphi = nu / (r * r);
    let ddu = (-0.5 * de * y[1] * y[1] + r * dr * dphi * dphi) / e;
    [y[1], ddu, dphi]
}

/// Integrate from an upward equator crossing to the next crossing; returns
/// `(t_half, Δφ_half)`.
fn half_oscillation(metric: &SurfaceMetric, nu: f64) -> Result<(f64, f64)> {
    let (r0, _, _) = metric.rho_jet(0.0);
    let e0 = metric.meridian_e(0.0);
    let w0 = ((1.0 - nu * nu / (r0 * r0)) / e0).max(0.0).sqrt();
    if w0 == 0.0 {
        return Err(GeodesicError::Numerical("started on the equator".into()));
    }
    let mut y = [0.0, w0, 0.0];
    let mut t = 0.0;
    let mut h = 1e-3;
    let tol = 1e-12;
    let mut rhs = |_t: f64, y: &[f64; 3]| geodesic_rhs(metric, nu, y);
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > 4_000_000 {
            return Err(GeodesicError::Numerical(
                "no equator return within the step budget".into(),
            ));
        }
        let step = dp54_step(&mut rhs, t, h, &y);
        if step.err > tol {
            h *= 0.5 * (tol / step.err).powf(0.25).max(0.1);
            continue;
        }
        let crossed = y[0] > 0.0 && step.y[0] <= 0.0;
        if crossed {
            // Cubic Hermite root of u(t) on the step.
            let (u0, du0) = (y[0], y[1]);
            let (u1, du1) = (step.y[0], step.y[1]);
            let mut s = u0 / (u0 - u1);
            for _ in 0..60 {
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                let uu = h00 * u0 + h10 * h * du0 + h01 * u1 + h11 * h * du1;
                let d00 = 6.0 * s * s - 6.0 * s;
                let d10 = 3.0 * s * s - 4.0 * s + 1.0;
                let d01 = -6.0 * s * s + 6.0 * s;
                let d11 = 3.0 * s * s - 2.0 * s;
                let dd = d00 * u0 + d10 * h * du0 + d01 * u1 + d11 * h * du1;
                if dd.abs() < 1e-300 {
                    break;
                }
                let ns = s - uu / dd;
                if (ns - s).abs() < 1e-16 {
                    s = ns;
                    break;
                }
                s = ns.clamp(0.0, 1.0);
            }
            // Reintegrate the partial step for φ at matching accuracy.
            let part = dp54_step(&mut rhs, t, s * h, &y);
            return Ok((t + s * h, part.y[2]));
        }
        t += h;
        y = step.y;
        if step.err < tol / 32.0 {
            h *= 1.6;
        }
    }
}

/// Search outcome for a satellite geodesic.
#[derive(Debug, Serialize)]
pub enum SatelliteOutcome {
    Found(Geodesic),
    /// `p/q` is not strictly between the equator rotation number and 1.
    NotInInterval { rho: f64 },
}

/// One-parameter shooting on the Clairaut constant for a closed `(p, q)`
/// satellite of the equator: `p` transverse oscillations over `q` azimuthal
/// revolutions, hence `2p` equator crossings.
pub fn find_satellite_revolution(
    metric: &SurfaceMetric,
    p: i64,
    q: i64,
) -> Result<SatelliteOutcome> {
    metric.require_equator()?;
    let rho_eq = equator_rotation_number(metric)?;
    if !satellite_interval(rho_eq.value, p, q)? {
        return Ok(SatelliteOutcome::NotInInterval { rho: rho_eq.value });
    }
    let (r0, _, _) = metric.rho_jet(0.0);
    let target = std::f64::consts::PI * q as f64 / p as f64;
    // Scan for a monotone bracket of Δφ_half(ν).
    let n_scan = 24;
    let nus: Vec<f64> = (0..n_scan)
        .map(|j| r0 * (0.02 + 0.96 * j as f64 / (n_scan - 1) as f64))
        .collect();
    let vals: Vec<f64> = nus
        .iter()
        .map(|nu| half_oscillation(metric, *nu).map(|(_, dphi)| dphi))
        .collect::<Result<_>>()?;
    let increasing = vals[n_scan - 1] > vals[0];
    for w in vals.windows(2) {
        if (w[1] > w[0]) != increasing {
            return Err(GeodesicError::ShootingDegeneracy);
        }
    }
    let mut bracket = None;
    for j in 0..n_scan - 1 {
        if (vals[j] - target) * (vals[j + 1] - target) <= 0.0 {
            bracket = Some((nus[j], nus[j + 1]));
            break;
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(SatelliteOutcome::NotInInterval { rho: rho_eq.value });
    };
    // Bisection on the half-oscillation azimuth to the required ratio.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (_, dphi) = half_oscillation(metric, mid)?;
        if (dphi - target).abs() < 1e-10 {
            lo = mid;
            hi = mid;
            break;
        }
        if (dphi > target) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let nu = 0.5 * (lo + hi);
    let (t_half, _) = half_oscillation(metric, nu)?;
    // Assemble the closed orbit over 2p half-oscillations.
    let period = 2.0 * p.unsigned_abs() as f64 * t_half;
    let e0 = metric.meridian_e(0.0);
    let w0 = ((1.0 - nu * nu / (r0 * r0)) / e0).sqrt();
    let mut y = [0.0, w0, 0.0];
    let n = 2048 * p.unsigned_abs() as usize;
    let h = period / n as f64;
    let mut samples = vec![(0.0, y[0], y[1], y[2])];
    let mut rhs = |_t: f64, y: &[f64; 3]| geodesic_rhs(metric, nu, y);
    for j in 0..n {
        let t = j as f64 * h;
        let s1 = dp54_step(&mut rhs, t, 0.5 * h, &y);
        let s2 = dp54_step(&mut rhs, t + 0.5 * h, 0.5 * h, &s1.y);
        y = s2.y;
        samples.push(((j + 1) as f64 * h, y[0], y[1], y[2]));
    }
    // Equator crossings on [0, period): interior transversal sign changes
    // plus the crossing at the start point itself.
    let mut signs = Vec::new();
    for &(_, u, _, _) in &samples {
        if u.abs() > 1e-9 {
            let s = u.signum();
            if signs.last() != Some(&s) {
                signs.push(s);
            }
        }
    }
    let crossings = signs.len().saturating_sub(1) + 1;
    let closure = (y[0].abs())
        .max((y[1] - w0).abs())
        .max(((y[2] - TAU * q as f64).abs()) / (1.0 + TAU * q.abs() as f64));
    if closure > 1e-6 {
        return Err(GeodesicError::Numerical(format!(
            "satellite failed to close: defect {closure:.3e}"
        )));
    }
    Ok(SatelliteOutcome::Found(Geodesic {
        samples,
        period: Some(period),
        clairaut: nu,
        equator_crossings: crossings,
    }))
}

/// Rotation number estimate with attached error bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub error: f64,
}

/// Inverse rotation number of a closed geodesic from the Jacobi phase:
/// long-horizon average with Richardson acceleration across doubled
/// horizons, refined by the one-period monodromy eigenvalue when elliptic.
pub fn jacobi_rotation_number(
    metric: &SurfaceMetric,
    geo: &Geodesic,
    horizon: f64,
) -> Result<RotationEstimate> {
    let period = geo
        .period
        .ok_or_else(|| GeodesicError::Numerical("geodesic is not closed".into()))?;
    // Jacobi generator in (y', y) coordinates: S(t) = T diag(1, K(γ(tT))).
    let n = 255;
    let mut gens = Vec::with_capacity(n);
    for j in 0..n {
        let t = period * j as f64 / n as f64;
        // Locate the sample bracket (uniform grid in the constructed cases).
        let u = interp_u(geo, t);
        let k = metric.gauss_curvature(u);
        gens.push(Matrix2::new(period, 0.0, 0.0, period * k));
    }
    let gen = HamiltonianLoop::from_uniform_samples(gens)?;
    let path = sympath::evolve_path(&gen, 1, 1e-12)?;
    let wf = sympath::WindingFunction::build(&path);
    let n0 = ((horizon / period).ceil() as usize).max(1 << 12);
    let mut s = 0.0f64;
    let mut rho_n = 0.0;
    let mut rho_2n = 0.0;
    for j in 0..4 * n0 {
        s = wf.circle_map(s);
        if j + 1 == n0 {
            rho_n = s / n0 as f64;
        }
        if j + 1 == 2 * n0 {
            rho_2n = s / (2 * n0) as f64;
        }
    }
    let rho_4n = s / (4 * n0) as f64;
    let r1 = 2.0 * rho_2n - rho_n;
    let r2 = 2.0 * rho_4n - rho_2n;
    let mut value = r2;
    let mut error = (r2 - r1).abs() + 1.0 / (4.0 * n0 as f64);
    // Floquet refinement: the fractional part is pinned by the monodromy.
    let tr = path.end().trace();
    if tr.abs() < 2.0 - 1e-12 {
        let frac = (tr / 2.0).acos() / TAU;
        let base = value.floor();
        let mut best = value;
        for cand in [
            base + frac,
            base + 1.0 - frac,
            base - frac,
            base + 1.0 + frac,
            base + 2.0 - frac,
        ] {
            if (cand - value).abs() < (best - value).abs() {
                best = cand;
            }
        }
        if (best - value).abs() <= 4.0 * error.max(1e-9) {
            value = best;
            error = error.min(1e-9) + 1e-12;
        }
    } else if tr.abs() > 2.0 + 1e-12 {
        let snapped = (2.0 * value).round() / 2.0;
        if (snapped - value).abs() <= 4.0 * error {
            value = snapped;
            error = error.min(1e-9) + 1e-12;
        }
    }
    Ok(RotationEstimate { value, error })
}

fn interp_u(geo: &Geodesic, t: f64) -> f64 {
    let samples = &geo.samples;
    let tmax = samples.last().unwrap().0;
    let tt = t.clamp(0.0, tmax);
    let idx = samples.partition_point(|s| s.0 <= tt).clamp(1, samples.len() - 1) - 1;
    let (t0, u0, w0, _) = samples[idx];
    let (t1, u1, w1, _) = samples[idx + 1];
    if t1 <= t0 {
        return u0;
    }
    let s = (tt - t0) / (t1 - t0);
    let h = t1 - t0;
    // Hermite in (u, u') across the bracket.
    let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
    let h10 = s * s * s - 2.0 * s * s + s;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    h00 * u0 + h10 * h * w0 + h01 * u1 + h11 * h * w1
}

/// Rotation number of the equator itself.
pub fn equator_rotation_number(metric: &SurfaceMetric) -> Result<RotationEstimate> {
    let eq = equator(metric)?;
    let period = eq.period.unwrap();
    jacobi_rotation_number(metric, &eq, 200.0 * period)
}

/// The double cover of the unit tangent bundle: explicit quadratic matrix
/// formula `(q0, p0, q1, p1) -> (x, v)`.
pub fn double_cover(z: &Vector4<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let (q0, p0, q1, p1) = (z[0], z[1], z[2], z[3]);
    let x = Vector3::new(
        q0 * q0 - p0 * p0 + q1 * q1 - p1 * p1,
        2.0 * (-q0 * p0 + q1 * p1),
        2.0 * (q0 * p1 + p0 * q1),
    );
    let v = Vector3::new(
        -2.0 * (q0 * p0 + q1 * p1),
        -(q0 * q0 - p0 * p0 - q1 * q1 + p1 * p1),
        2.0 * (q0 * q1 - p0 * p1),
    );
    (x, v)
}

/// Differential of the double cover: exact for the quadratic map.
pub fn double_cover_differential(
    z: &Vector4<f64>,
    w: &Vector4<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let (xp, vp) = double_cover(&(z + w));
    let (xm, vm) = double_cover(&(z - w));
    ((xp - xm) / 2.0, (vp - vm) / 2.0)
}

/// `λ̄0` on the unit tangent bundle: `λ̄0|_(x,v)(ζ) = <v, ζ_x>`.
pub fn lambda_bar0(v: &Vector3<f64>, zeta_x: &Vector3<f64>) -> f64 {
    v.dot(zeta_x)
}

/// A loop in the unit tangent bundle, evaluable at any parameter in `[0, 1]`.
#[derive(Clone)]
pub struct UnitTangentLoop {
    eval: Arc<dyn Fn(f64) -> (Vector3<f64>, Vector3<f64>) + Send + Sync>,
    pub base_samples: usize,
}

impl UnitTangentLoop {
    pub fn new(
        eval: impl Fn(f64) -> (Vector3<f64>, Vector3<f64>) + Send + Sync + 'static,
        base_samples: usize,
    ) -> Result<Self> {
        let l = Self {
            eval: Arc::new(eval),
            base_samples: base_samples.max(64),
        };
        for j in 0..l.base_samples {
            let (x, v) = l.at(j as f64 / l.base_samples as f64);
            let defect = (x.norm() - 1.0)
                .abs()
                .max((v.norm() - 1.0).abs())
                .max(x.dot(&v).abs());
            if defect > 1e-10 {
                return Err(GeodesicError::Numerical(format!(
                    "loop sample not orthonormal: defect {defect:.3e}"
                )));
            }
        }
        Ok(l)
    }

    pub fn at(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        (self.eval)(t)
    }

    /// Concatenation: `self` on `[0, 1/2]`, `other` on `[1/2, 1]`.
    pub fn concat(&self, other: &UnitTangentLoop) -> Result<UnitTangentLoop> {
        let a = self.eval.clone();
        let b = other.eval.clone();
        let n = self.base_samples.max(other.base_samples) * 2;
        UnitTangentLoop::new(
            move |t| {
                if t < 0.5 {
                    a(2.0 * t)
                } else {
                    b(2.0 * t - 1.0)
                }
            },
            n,
        )
    }

    /// Chordal distance to the equatorial link `l0 ∪ l1` (velocity lifts of
    /// the equator in both directions).
    pub fn link_clearance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.base_samples {
            let (x, v) = self.at(j as f64 / self.base_samples as f64);
            for s in 0..256 {
                let phi = TAU * s as f64 / 256.0;
                let gamma = Vector3::new(phi.cos(), phi.sin(), 0.0);
                let tang = Vector3::new(-phi.sin(), phi.cos(), 0.0);
                for dir in [1.0, -1.0] {
                    let d2 = (x - gamma).norm_squared() + (v - tang * dir).norm_squared();
                    best = best.min(d2.sqrt());
                }
            }
        }
        best
    }
}

/// Local inverse of the double cover from the quadratic component relations:
/// `z0² = [(x1 - v2) - i(x2 + v1)]/2`, `z1² = [(x1 + v2) + i(x2 - v1)]/2`,
/// `z0 z1 = (v3 + i x3)/2`; the two preimages are `±z`.
fn preimage_candidates(x: &Vector3<f64>, v: &Vector3<f64>) -> [Vector4<f64>; 2] {
    let z0sq = (0.5 * (x[0] - v[1]), -0.5 * (x[1] + v[0]));
    let z1sq = (0.5 * (x[0] + v[1]), 0.5 * (x[1] - v[0]));
    let z0z1 = (0.5 * v[2], 0.5 * x[2]);
    let csqrt = |(re, im): (f64, f64)| -> (f64, f64) {
        let r = (re * re + im * im).sqrt();
        let a = ((r + re) / 2.0).max(0.0).sqrt();
        let b = ((r - re) / 2.0).max(0.0).sqrt() * if im >= 0.0 { 1.0 } else { -1.0 };
        (a, b)
    };
    let cdiv = |(ar, ai): (f64, f64), (br, bi): (f64, f64)| -> (f64, f64) {
        let d = br * br + bi * bi;
        ((ar * br + ai * bi) / d, (ai * br - ar * bi) / d)
    };
    let n0 = (z0sq.0 * z0sq.0 + z0sq.1 * z0sq.1).sqrt();
    let n1 = (z1sq.0 * z1sq.0 + z1sq.1 * z1sq.1).sqrt();
    let (z0, z1) = if n0 >= n1 {
        let z0 = csqrt(z0sq);
        let z1 = cdiv(z0z1, z0);
        (z0, z1)
    } else {
        let z1 = csqrt(z1sq);
        let z0 = cdiv(z0z1, z1);
        (z0, z1)
    };
    let z = Vector4::new(z0.0, z0.1, z1.0, z1.1);
    [z, -z]
}

/// Continuous lift of a loop through the double cover and the winding pair of
/// the two polar angles: half-integers whose sum is an integer.
pub fn lift_and_wind(loop_: &UnitTangentLoop) -> Result<(HalfInt, HalfInt)> {
    lift_and_wind_with_residual(loop_).map(|(a, b, _)| (a, b))
}

/// As [`lift_and_wind`], also reporting the largest pre-rounding distance of
/// the raw windings to the half-integer lattice.
pub fn lift_and_wind_with_residual(loop_: &UnitTangentLoop) -> Result<(HalfInt, HalfInt, f64)> {
    let clearance = loop_.link_clearance();
    if clearance <= 1e-6 {
        return Err(GeodesicError::TooCloseToLink(clearance));
    }
    // Adaptive parameter list: refine until consecutive lifts are close.
    let mut params: Vec<f64> = (0..=loop_.base_samples)
        .map(|j| j as f64 / loop_.base_samples as f64)
        .collect();
    for _round in 0..24 {
        let mut lifted: Vec<Vector4<f64>> = Vec::with_capacity(params.len());
        let mut prev: Option<Vector4<f64>> = None;
        let mut worst_gap = 0.0f64;
        let mut worst_idx = 0usize;
        for (idx, t) in params.iter().enumerate() {
            let (x, v) = loop_.at(*t);
            let cands = preimage_candidates(&x, &v);
            let z = match prev {
                None => cands[0],
                Some(p) => {
                    if (cands[0] - p).norm() <= (cands[1] - p).norm() {
                        cands[0]
                    } else {
                        cands[1]
                    }
                }
            };
            if let Some(p) = prev {
                let gap = (z - p).norm();
                if gap > worst_gap {
                    worst_gap = gap;
                    worst_idx = idx;
                }
            }
            lifted.push(z);
            prev = Some(z);
        }
        if worst_gap > 0.5 {
            // Insert midpoints around the worst gap and retry.
            let mut refined = Vec::with_capacity(2 * params.len());
            for i in 0..params.len() {
                refined.push(params[i]);
                if i + 1 < params.len() && (i + 1 == worst_idx || worst_gap > 1.0) {
                    refined.push(0.5 * (params[i] + params[i + 1]));
                }
            }
            if refined.len() == params.len() {
                return Err(GeodesicError::LiftDiscontinuity);
            }
            params = refined;
            continue;
        }
        // Verify the lift covers the loop.
        for (t, z) in params.iter().zip(&lifted) {
            let (x, v) = loop_.at(*t);
            let (dx, dv) = double_cover(z);
            if (dx - x).norm().max((dv - v).norm()) > 1e-9 {
                return Err(GeodesicError::Numerical(
                    "lift does not reproduce the loop".into(),
                ));
            }
        }
        // Unwrap the polar angles along the lift.
        let mut tot = [0.0f64; 2];
        let mut prev_a = [0.0f64; 2];
        for (idx, z) in lifted.iter().enumerate() {
            let raw = [z[1].atan2(z[0]), z[3].atan2(z[2])];
            for c in 0..2 {
                if idx == 0 {
                    prev_a[c] = raw[c];
                } else {
                    let next = unwrap_near(prev_a[c], raw[c]);
                    tot[c] += next - prev_a[c];
                    prev_a[c] = next;
                }
            }
        }
        let w0 = tot[0] / TAU;
        let w1 = tot[1] / TAU;
        let sum = w0 + w1;
        if (sum - sum.round()).abs() > 1e-6 {
            return Err(GeodesicError::Numerical(format!(
                "wind sum {sum} is not an integer"
            )));
        }
        let (h0, r0) = HalfInt::round_from(w0);
        let (h1, r1) = HalfInt::round_from(w1);
        if r0 > 1e-4 || r1 > 1e-4 {
            return Err(GeodesicError::Numerical(format!(
                "windings ({w0}, {w1}) off the half-integer lattice"
            )));
        }
        return Ok((h0, h1, r0.max(r1)));
    }
    Err(GeodesicError::LiftDiscontinuity)
}

/// The two standard generators of the fundamental group of the link
/// complement, as unit tangent loops.
pub fn generator_loop(which: usize) -> UnitTangentLoop {
    UnitTangentLoop::new(
        move |t| {
            let s = std::f64::consts::PI * t;
            let inv = 0.5f64.sqrt();
            let z = if which == 0 {
                Vector4::new(s.cos(), s.sin(), s.cos(), s.sin()) * inv
            } else {
                Vector4::new(s.cos(), s.sin(), s.cos(), -s.sin()) * inv
            };
            double_cover(&z)
        },
        256,
    )
    .expect("generator loops are orthonormal")
}

/// Contact normalization for the satellite winding check. Only the round
/// identity normalization is supported: the round equator's velocity lifts
/// are already the standard link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalizer {
    RoundIdentity,
}

#[derive(Debug, Clone, Serialize)]
pub struct SatelliteWindReport {
    pub wind0: HalfInt,
    pub wind1: HalfInt,
    /// Largest pre-rounding distance to the half-integer lattice.
    pub residual: f64,
    pub epsilon_used: f64,
}

/// Build the round-sphere satellite `α_ε(t) = exp_{γ(qt)}(ε sin(2πpt) n(qt))`,
/// lift its normalized velocity loop, and report the winding pair.
pub fn satellite_wind_check(
    metric: &SurfaceMetric,
    p: i64,
    q: i64,
    _normalizer: Normalizer,
    epsilon: f64,
) -> Result<SatelliteWindReport> {
    if !matches!(metric, SurfaceMetric::Round) {
        return Err(GeodesicError::Numerical(
            "satellite winding check requires the round normalization".into(),
        ));
    }
    assert!(q != 0);
    let mut eps = epsilon;
    for _ in 0..8 {
        let loop_ = round_satellite_velocity_loop(p, q, eps)?;
        if loop_.link_clearance() <= 1e-4 {
            eps *= 0.5;
            continue;
        }
        let (w0, w1, residual) = lift_and_wind_with_residual(&loop_)?;
        return Ok(SatelliteWindReport {
            wind0: w0,
            wind1: w1,
            residual,
            epsilon_used: eps,
        });
    }
    Err(GeodesicError::TooCloseToLink(1e-4))
}

/// Normalized velocity loop of the round-sphere satellite.
pub fn round_satellite_velocity_loop(p: i64, q: i64, eps: f64) -> Result<UnitTangentLoop> {
    let pf = p as f64;
    let qf = q as f64;
    let n = 512 * (p.unsigned_abs() + q.unsigned_abs()) as usize;
    UnitTangentLoop::new(
        move |t| {
            let a = eps * (TAU * pf * t).sin();
            let da = eps * TAU * pf * (TAU * pf * t).cos();
            let s = TAU * qf * t;
            let gamma = Vector3::new(s.cos(), s.sin(), 0.0);
            let dgamma = Vector3::new(-s.sin(), s.cos(), 0.0) * (TAU * qf);
            let zhat = Vector3::new(0.0, 0.0, 1.0);
            let x = gamma * a.cos() + zhat * a.sin();
            let xdot = dgamma * a.cos() - gamma * a.sin() * da + zhat * a.cos() * da;
            // Project out the radial component and normalize.
            let v = xdot - x * x.dot(&xdot);
            (x.normalize(), v.normalize())
        },
        n,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_equator_rotation_is_one() {
        let est = equator_rotation_number(&SurfaceMetric::Round).unwrap();
        assert!((est.value - 1.0).abs() < 1e-8, "rho = {}", est.value);
    }

    #[test]
    fn spheroid_equator_rotation_matches_closed_form() {
        // Polar a, equatorial c: K_eq = 1/a², period 2πc, so ρ = c/a.
        let m = SurfaceMetric::Spheroid { a: 1.0, c: 0.8 };
        let est = equator_rotation_number(&m).unwrap();
        assert!((est.value - 0.8).abs() < 1e-6, "rho = {}", est.value);
        let m = SurfaceMetric::Spheroid { a: 1.0, c: 1.25 };
        let est = equator_rotation_number(&m).unwrap();
        assert!((est.value - 1.25).abs() < 1e-6, "rho = {}", est.value);
    }

    #[test]
    fn spheroid_curvature_at_equator() {
        let m = SurfaceMetric::Spheroid { a: 2.0, c: 0.7 };
        assert!((m.gauss_curvature(0.0) - 1.0 / 4.0).abs() < 1e-12);
        let r = SurfaceMetric::Round;
        for u in [-0.8, 0.0, 0.4, 1.2] {
            assert!((r.gauss_curvature(u) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn satellite_on_spheroid_crosses_equator() {
        let m = SurfaceMetric::Spheroid { a: 1.0, c: 0.8 };
        match find_satellite_revolution(&m, 5, 6).unwrap() {
            SatelliteOutcome::Found(geo) => {
                assert_eq!(geo.equator_crossings, 10);
                assert!(geo.speed_defect(&m) < 1e-8);
                assert!(geo.clairaut_defect(&m) < 1e-8);
            }
            SatelliteOutcome::NotInInterval { rho } => {
                panic!("expected a satellite, equator rho = {rho}")
            }
        }
    }

    #[test]
    fn round_sphere_has_no_satellites() {
        match find_satellite_revolution(&SurfaceMetric::Round, 5, 6).unwrap() {
            SatelliteOutcome::NotInInterval { rho } => assert!((rho - 1.0).abs() < 1e-6),
            SatelliteOutcome::Found(_) => panic!("round sphere admits no satellites"),
        }
    }

    #[test]
    fn clairaut_conserved_over_many_periods() {
        let m = SurfaceMetric::Spheroid { a: 1.0, c: 0.8 };
        // Long integration at fixed Clairaut constant: the reconstructed
        // invariant must hold to 1e-8 over 10³ half-oscillations.
        let nu = 0.5;
        let mut y = [0.0f64, (1.0f64 - nu * nu / 0.64).sqrt(), 0.0];
        let mut rhs = |_t: f64, y: &[f64; 3]| geodesic_rhs(&m, nu, y);
        let mut t = 0.0;
        let h = 1e-3;
        let mut worst = 0.0f64;
        for _ in 0..200_000 {
            let s1 = dp54_step(&mut rhs, t, h, &y);
            y = s1.y;
            t += h;
            let e = m.meridian_e(y[0]);
            let (r, _, _) = m.rho_jet(y[0]);
            let sinpsi2 = (1.0 - e * y[1] * y[1]).max(0.0);
            worst = worst.max((r * sinpsi2.sqrt() - nu).abs());
        }
        assert!(worst < 1e-8, "Clairaut drift {worst}");
    }

    #[test]
    fn double_cover_basis_point() {
        let (x, v) = double_cover(&Vector4::new(1.0, 0.0, 0.0, 0.0));
        assert!((x - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((v - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn double_cover_is_antipodal_invariant_and_orthonormal() {
        let mut seed = 0x93ab17u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..1000 {
            let z = Vector4::new(rng(), rng(), rng(), rng()).normalize();
            let (x, v) = double_cover(&z);
            let (xm, vm) = double_cover(&(-z));
            assert!((x - xm).norm() < 1e-12 && (v - vm).norm() < 1e-12);
            assert!((x.norm() - 1.0).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(x.dot(&v).abs() < 1e-12);
        }
    }

    #[test]
    fn pullback_identity() {
        // D* λ̄0 = 4 λ0 pointwise on random tangent vectors.
        let mut seed = 0x51f2c3u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..200 {
            let z = Vector4::new(rng(), rng(), rng(), rng()).normalize();
            let mut w = Vector4::new(rng(), rng(), rng(), rng());
            w -= z * z.dot(&w);
            let (_, v) = double_cover(&z);
            let (dx, _) = double_cover_differential(&z, &w);
            let pulled = lambda_bar0(&v, &dx);
            let lam0 = 0.5 * Vector4::new(-z[1], z[0], -z[3], z[2]).dot(&w);
            assert!((pulled - 4.0 * lam0).abs() < 1e-9);
        }
    }

    #[test]
    fn generator_windings() {
        let (w0, w1) = lift_and_wind(&generator_loop(0)).unwrap();
        assert_eq!((w0, w1), (HalfInt::from_halves(1), HalfInt::from_halves(1)));
        let (w0, w1) = lift_and_wind(&generator_loop(1)).unwrap();
        assert_eq!(
            (w0, w1),
            (HalfInt::from_halves(1), HalfInt::from_halves(-1))
        );
    }

    #[test]
    fn lift_winding_is_additive_on_concatenation() {
        let a0 = generator_loop(0);
        let a1 = generator_loop(1);
        let both = a0.concat(&a1).unwrap();
        let (w0, w1) = lift_and_wind(&both).unwrap();
        assert_eq!(w0, HalfInt::from_int(1));
        assert_eq!(w1, HalfInt::from_int(0));
        // Isomorphism to (wind0 + wind1, wind0 - wind1) lands in Z x Z here.
        assert_eq!(w0.value() + w1.value(), 1.0);
        assert_eq!(w0.value() - w1.value(), 1.0);
    }

    #[test]
    fn satellite_wind_examples() {
        let round = SurfaceMetric::Round;
        let r = satellite_wind_check(&round, 2, 3, Normalizer::RoundIdentity, 1e-2).unwrap();
        assert_eq!(
            (r.wind0, r.wind1),
            (HalfInt::from_halves(1), HalfInt::from_halves(3))
        );
        let r = satellite_wind_check(&round, 3, 2, Normalizer::RoundIdentity, 1e-2).unwrap();
        assert_eq!((r.wind0, r.wind1), (HalfInt::from_int(2), HalfInt::from_int(1)));
    }
}
