//! Reeb-flow integration on the 3-sphere for rescaled standard contact forms,
//! transverse linearization in a global frame, rotation and linking numbers,
//! and shooting-based closed-orbit search.
//!
//! For `λ = f λ0` the Reeb field is `(2/f) iz` plus a contact-plane correction
//! determined by `df`; the global frame `{jz, kz}` (quaternion left products)
//! trivializes the contact planes and, rescaled by `1/sqrt(f)`, is symplectic
//! for `dλ`.

use crate::modelforms::{LinkComponent, ModelForm};
use crate::numerics::{dp54_step, unwrap_near, TAU};
use crate::orbits::{ClosedOrbit, Trajectory};
use crate::perturbation::PerturbedForm;
use crate::sympath::{self, HamiltonianLoop, SymplecticPath};
use crate::twistcone::HomotopyClass;
use nalgebra::{Matrix2, Matrix3, Vector3, Vector4};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("integration step underflow at t={t}")]
    IntegrationFailure { t: f64 },
    #[error("trajectory approaches the Hopf link below clearance {0:.3e}")]
    TooClose(f64),
    #[error("angle sampling too coarse for winding extraction")]
    TooCoarse,
    #[error("Poincaré section lost transversality; reseed required")]
    ReseedRequired,
    #[error("transverse frame defect: {0}")]
    FrameError(String),
    #[error("degenerate orbit at iterate {k}")]
    Degenerate { k: u32 },
    #[error(transparent)]
    SymPath(#[from] sympath::SymPathError),
}

type Result<T> = std::result::Result<T, FlowError>;

/// `i z` componentwise: tangent to the Hopf fibres.
fn iz(z: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(-z[1], z[0], -z[3], z[2])
}

/// `j z` in coordinates `(q0, p0, q1, p1)`.
fn jz(z: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(-z[2], z[3], z[0], -z[1])
}

/// `k z`.
fn kz(z: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(-z[3], -z[2], z[1], z[0])
}

/// Standard symplectic pairing `ω(u, v) = <i u, v>` of R^4.
fn omega4(u: &Vector4<f64>, v: &Vector4<f64>) -> f64 {
    iz(u).dot(v)
}

/// `λ0(v)` at `z`: half the pairing with the fibre direction.
fn lambda0(z: &Vector4<f64>, v: &Vector4<f64>) -> f64 {
    0.5 * iz(z).dot(v)
}

/// A positive rescaling function on the 3-sphere.
#[derive(Clone)]
pub enum ContactScaling {
    /// `f ≡ 1`: the standard Hopf flow.
    Unit,
    /// Profile-induced model form.
    Model(ModelForm),
    /// Model form with a Morse-Bott breaking perturbation near one torus.
    Perturbed {
        model: ModelForm,
        pert: PerturbedForm,
    },
    /// User-supplied positive function; gradients by central differences.
    Custom {
        f: Arc<dyn Fn(&Vector4<f64>) -> f64 + Send + Sync>,
        label: String,
    },
}

impl std::fmt::Debug for ContactScaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Unit => write!(f, "ContactScaling::Unit"),
            Self::Model(_) => write!(f, "ContactScaling::Model"),
            Self::Perturbed { .. } => write!(f, "ContactScaling::Perturbed"),
            Self::Custom { label, .. } => write!(f, "ContactScaling::Custom({label})"),
        }
    }
}

impl ContactScaling {
    pub fn provenance(&self) -> &'static str {
        match self {
            Self::Unit => "unit",
            Self::Model(_) => "model",
            Self::Perturbed { .. } => "perturbed",
            Self::Custom { .. } => "user",
        }
    }

    /// Evaluate `f`; defined on a neighborhood of the sphere.
    pub fn eval(&self, z: &Vector4<f64>) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::Model(form) => {
                let u = z[0] * z[0] + z[1] * z[1];
                let v = z[2] * z[2] + z[3] * z[3];
                form.profile.ray_intersection(u, v).1
            }
            Self::Perturbed { model, pert } => {
                let base = ContactScaling::Model(model.clone());
                let f = base.eval(z);
                let w = z * f.sqrt();
                f * (1.0 + pert.epsilon * pert.g_bar_ambient(&w))
            }
            Self::Custom { f, .. } => f(z),
        }
    }

    /// Ambient gradient of `f`.
    pub fn grad(&self, z: &Vector4<f64>) -> Vector4<f64> {
        match self {
            Self::Unit => Vector4::zeros(),
            Self::Model(form) => {
                // Implicit differentiation of the ray intersection.
                let u = z[0] * z[0] + z[1] * z[1];
                let v = z[2] * z[2] + z[3] * z[3];
                let (t, _) = form.profile.ray_intersection(u, v);
                let p = form.profile.eval(t);
                let slope = p.dx * v - p.dy * u;
                // dt = (y du - x dv)/slope.
                let (tu, tv) = (p.y / slope, -p.x / slope);
                let (fu, fv) = if u >= v {
                    (p.dx * tu / u - p.x / (u * u), p.dx * tv / u)
                } else {
                    (p.dy * tu / v, p.dy * tv / v - p.y / (v * v))
                };
                Vector4::new(
                    2.0 * z[0] * fu,
                    2.0 * z[1] * fu,
                    2.0 * z[2] * fv,
                    2.0 * z[3] * fv,
                )
            }
            _ => {
                let h = 1e-5;
                let mut g = Vector4::zeros();
                for a in 0..4 {
                    let mut zp = *z;
                    let mut zm = *z;
                    zp[a] += h;
                    zm[a] -= h;
                    g[a] = (self.eval(&zp) - self.eval(&zm)) / (2.0 * h);
                }
                g
            }
        }
    }

    /// Reeb vector field of `f λ0` on the sphere: `(2/f) iz + W` with the
    /// contact-plane correction solving `dλ0(W, ·)|_ξ = df/f²`.
    pub fn reeb_field(&self, z: &Vector4<f64>) -> Vector4<f64> {
        let f = self.eval(z);
        match self {
            Self::Unit => iz(z) * 2.0,
            _ => {
                let g = self.grad(z);
                let (ej, ek) = (jz(z), kz(z));
                let w1 = g.dot(&ek) / (f * f);
                let w2 = -g.dot(&ej) / (f * f);
                iz(z) * (2.0 / f) + ej * w1 + ek * w2
            }
        }
    }
}

/// Membership in the adapted class: `df` annihilates the contact planes along
/// both Hopf link components, sampled on 10³ points each, to 1e-8.
pub fn check_adapted(f: &ContactScaling) -> bool {
    let n = 1000;
    for comp in 0..2 {
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            let z = if comp == 0 {
                Vector4::new(0.0, 0.0, phi.cos(), phi.sin())
            } else {
                Vector4::new(phi.cos(), phi.sin(), 0.0, 0.0)
            };
            let g = f.grad(&z);
            let scale = 1.0 + g.norm();
            if g.dot(&jz(&z)).abs() > 1e-8 * scale || g.dot(&kz(&z)).abs() > 1e-8 * scale {
                return false;
            }
        }
    }
    true
}

/// Integrate the Reeb flow from `z0` over `t_span`, re-projecting onto the
/// sphere after every accepted step. The step size is capped so polar angles
/// never advance more than a fraction of a turn between samples.
pub fn integrate_reeb(
    f: &ContactScaling,
    z0: &Vector4<f64>,
    t_span: f64,
    tol: f64,
) -> Result<Trajectory> {
    assert!(tol > 0.0);
    let mut z = z0.normalize();
    let mut t = 0.0f64;
    let dir = t_span.signum();
    let mut times = vec![0.0];
    let mut points = vec![z];
    let mut h = dir * (t_span.abs() / 1000.0).min(1e-2);
    let h_min = t_span.abs() * 1e-14 + 1e-15;
    while (t_span - t) * dir > 0.0 {
        let speed = f.reeb_field(&z).norm();
        let r0 = (z[0] * z[0] + z[1] * z[1]).sqrt();
        let r1 = (z[2] * z[2] + z[3] * z[3]).sqrt();
        // Keep polar-angle advances fine enough for winding extraction when
        // the trajectory has workable clearance from the link; closer passes
        // are caught downstream by the coarseness check.
        let cap = 0.3 * r0.min(r1).max(1e-2) / (speed + 1e-9);
        if h.abs() > cap {
            h = dir * cap;
        }
        if (t + h - t_span) * dir > 0.0 {
            h = t_span - t;
        }
        let mut rhs = |_t: f64, y: &[f64; 4]| {
            let zz = Vector4::new(y[0], y[1], y[2], y[3]);
            let x = f.reeb_field(&zz);
            [x[0], x[1], x[2], x[3]]
        };
        let y = [z[0], z[1], z[2], z[3]];
        let step = dp54_step(&mut rhs, t, h, &y);
        if step.err <= tol || h.abs() <= 4.0 * h_min {
            t += h;
            z = Vector4::new(step.y[0], step.y[1], step.y[2], step.y[3]).normalize();
            times.push(t);
            points.push(z);
            let factor = if step.err > 0.0 {
                0.9 * (tol / step.err).powf(0.2)
            } else {
                4.0
            };
            h *= factor.clamp(0.2, 4.0);
        } else {
            h *= 0.5 * (tol / step.err).powf(0.25).max(0.1);
            if h.abs() < h_min {
                return Err(FlowError::IntegrationFailure { t });
            }
        }
    }
    Ok(Trajectory::new(times, points))
}

/// Reeb-normalization defect `max |λ(ẋ) - 1|` along a trajectory.
pub fn reeb_normalization_defect(f: &ContactScaling, traj: &Trajectory) -> f64 {
    traj.points
        .iter()
        .map(|z| {
            let x = f.reeb_field(z);
            (f.eval(z) * lambda0(z, &x) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Winding pair of the polar angles along a closed trajectory: the linking
/// numbers of the orbit with the two Hopf link components.
pub fn linking_numbers(orbit: &ClosedOrbit) -> Result<(i64, i64)> {
    let clearance = orbit.trajectory.link_clearance();
    if clearance <= 1e-6 {
        return Err(FlowError::TooClose(clearance));
    }
    let mut tot = [0.0f64; 2];
    let mut prev = [0.0f64; 2];
    for (idx, z) in orbit.trajectory.points.iter().enumerate() {
        let raw = [z[1].atan2(z[0]), z[3].atan2(z[2])];
        for c in 0..2 {
            if idx == 0 {
                prev[c] = raw[c];
            } else {
                let next = unwrap_near(prev[c], raw[c]);
                if (next - prev[c]).abs() > 1.5 {
                    return Err(FlowError::TooCoarse);
                }
                tot[c] += next - prev[c];
                prev[c] = next;
            }
        }
    }
    let w0 = tot[0] / TAU;
    let w1 = tot[1] / TAU;
    if (w0 - w0.round()).abs() > 0.05 || (w1 - w1.round()).abs() > 0.05 {
        return Err(FlowError::TooCoarse);
    }
    Ok((w0.round() as i64, w1.round() as i64))
}

/// Transverse linearized flow along an orbit expressed in the rescaled global
/// frame `{jz/√f, kz/√f}`, sampled as a symplectic path over one period.
pub struct TransverseFrame {
    /// Path in the frame, time-rescaled to `[0, 1]`.
    pub path: SymplecticPath,
    /// Determinant drift of the raw transition matrix over one period.
    pub det_defect: f64,
    /// Symmetric generator samples of the rescaled path on a uniform grid.
    pub generator: Vec<Matrix2<f64>>,
}

fn frame_at(f: &ContactScaling, z: &Vector4<f64>) -> (Vector4<f64>, Vector4<f64>, f64) {
    let fv = f.eval(z);
    let s = fv.sqrt();
    (jz(z) / s, kz(z) / s, fv)
}

/// Coordinates of a tangent vector in the symplectic splitting
/// `span{X} ⊕ span{e1, e2}`.
fn frame_coords(f: &ContactScaling, z: &Vector4<f64>, delta: &Vector4<f64>) -> (f64, f64) {
    let (e1, e2, fv) = frame_at(f, z);
    let g = f.grad(z);
    let l0d = lambda0(z, delta);
    // dλ(u, v) = df(u) λ0(v) - df(v) λ0(u) + f ω(u, v); λ0(e_i) = 0.
    let c1 = -g.dot(&e2) * l0d + fv * omega4(delta, &e2);
    let c2 = g.dot(&e1) * l0d + fv * omega4(&e1, delta);
    (c1, c2)
}

/// Integrate the variational flow along one period of a closed orbit and
/// report the transverse path in the global frame.
pub fn transverse_linearized_path(
    f: &ContactScaling,
    orbit: &ClosedOrbit,
    samples: usize,
) -> Result<TransverseFrame> {
    let period = orbit.period;
    let z0 = orbit.trajectory.start();
    let (e1, e2, _) = frame_at(f, &z0);
    // State: (z, δ1, δ2).
    let mut y = [0.0f64; 12];
    for a in 0..4 {
        y[a] = z0[a];
        y[4 + a] = e1[a];
        y[8 + a] = e2[a];
    }
    let field = |y: &[f64; 12]| -> [f64; 12] {
        let z = Vector4::new(y[0], y[1], y[2], y[3]);
        let x = f.reeb_field(&z);
        let mut out = [0.0f64; 12];
        for a in 0..4 {
            out[a] = x[a];
        }
        for blk in 0..2 {
            let d = Vector4::new(
                y[4 + 4 * blk],
                y[5 + 4 * blk],
                y[6 + 4 * blk],
                y[7 + 4 * blk],
            );
            let n = d.norm();
            let h = 1e-5;
            let dir = d / n;
            let dx = (f.reeb_field(&(z + dir * h)) - f.reeb_field(&(z - dir * h))) * (n / (2.0 * h));
            for a in 0..4 {
                out[4 + 4 * blk + a] = dx[a];
            }
        }
        out
    };
    let n = samples.max(256);
    let h = period / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut det_defect = 0.0f64;
    let mut record = |t: f64, y: &[f64; 12], det_defect: &mut f64| {
        let z = Vector4::new(y[0], y[1], y[2], y[3]);
        let d1 = Vector4::new(y[4], y[5], y[6], y[7]);
        let d2 = Vector4::new(y[8], y[9], y[10], y[11]);
        let (c11, c21) = frame_coords(f, &z, &d1);
        let (c12, c22) = frame_coords(f, &z, &d2);
        let m = Matrix2::new(c11, c12, c21, c22);
        let det = m.determinant();
        *det_defect = det_defect.max((det - 1.0).abs());
        times.push(t / period);
        // Snap to SL(2): the true transverse flow is symplectic.
        values.push(m / det.sqrt());
    };
    record(0.0, &y, &mut det_defect);
    let mut fy = |t: f64, y: &[f64; 12]| {
        let _ = t;
        field(y)
    };
    for j in 0..n {
        let t = j as f64 * h;
        // Two half-steps of DP54 with fixed h; the step cap in
        // `integrate_reeb` justifies a fixed grid here because the frame
        // path must be sampled uniformly for generator extraction.
        let s1 = dp54_step(&mut fy, t, 0.5 * h, &y);
        let s2 = dp54_step(&mut fy, t + 0.5 * h, 0.5 * h, &s1.y);
        y = s2.y;
        // Re-project the base point onto the sphere.
        let zn = Vector4::new(y[0], y[1], y[2], y[3]).normalize();
        for a in 0..4 {
            y[a] = zn[a];
        }
        record((j + 1) as f64 * h, &y, &mut det_defect);
    }
    if det_defect > 1e-6 {
        return Err(FlowError::FrameError(format!(
            "transition determinant drifted by {det_defect:.3e}"
        )));
    }
    // Fix the path to start exactly at the identity (closure/projection
    // error is absorbed by right-multiplication).
    let m0inv = values[0].try_inverse().ok_or_else(|| {
        FlowError::FrameError("initial frame matrix is singular".into())
    })?;
    for v in values.iter_mut() {
        *v *= m0inv;
    }
    // Symmetric generator S = -i φ' φ^{-1} by fourth-order differences,
    // using the extension φ(t+1) = φ(t) φ(1) at the seam.
    let end = values[n];
    let sample_phi = |j: isize| -> Matrix2<f64> {
        if j < 0 {
            let jj = (j + n as isize) as usize;
            values[jj]
                * end
                    .try_inverse()
                    .expect("period map of a symplectic path is invertible")
        } else if j as usize > n {
            values[j as usize - n] * end
        } else {
            values[j as usize]
        }
    };
    let mut generator = Vec::with_capacity(n);
    let dt = 1.0 / n as f64;
    for j in 0..n {
        let jj = j as isize;
        let dphi = (sample_phi(jj - 2) - sample_phi(jj + 2) + (sample_phi(jj + 1) - sample_phi(jj - 1)) * 8.0)
            / (12.0 * dt);
        let inv = values[j]
            .try_inverse()
            .ok_or_else(|| FlowError::FrameError("singular path sample".into()))?;
        let s = -sympath::mat_i() * dphi * inv;
        let sym_defect = (s[(0, 1)] - s[(1, 0)]).abs();
        if sym_defect > 1e-3 * (1.0 + s.norm()) {
            return Err(FlowError::FrameError(format!(
                "generator asymmetry {sym_defect:.3e} at sample {j}"
            )));
        }
        let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
        generator.push(Matrix2::new(s[(0, 0)], off, off, s[(1, 1)]));
    }
    let path = SymplecticPath {
        times,
        values,
        k: 1,
    };
    Ok(TransverseFrame {
        path,
        det_defect,
        generator,
    })
}

/// Closed-form closed orbit of a model (or unit) form along one Hopf link
/// component.
pub fn link_component_orbit(f: &ContactScaling, comp: LinkComponent) -> ClosedOrbit {
    let (rate, period) = match f {
        ContactScaling::Unit => (2.0, std::f64::consts::PI),
        ContactScaling::Model(form) | ContactScaling::Perturbed { model: form, .. } => {
            let t = match comp {
                LinkComponent::L0 => 1.0,
                LinkComponent::L1 => 0.0,
            };
            let (a0, a1) = crate::modelforms::reeb_field_model(&form.profile, t);
            let rate = match comp {
                LinkComponent::L0 => a1,
                LinkComponent::L1 => a0,
            };
            (rate, TAU / rate)
        }
        ContactScaling::Custom { .. } => (2.0, std::f64::consts::PI),
    };
    let n = 512;
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = period * j as f64 / n as f64;
        let phi = rate * t;
        times.push(t);
        points.push(match comp {
            LinkComponent::L0 => Vector4::new(0.0, 0.0, phi.cos(), phi.sin()),
            LinkComponent::L1 => Vector4::new(phi.cos(), phi.sin(), 0.0, 0.0),
        });
    }
    ClosedOrbit {
        trajectory: Trajectory::new(times, points),
        period,
        cls: None,
        rho: None,
        cz: None,
    }
}

/// Transverse rotation number of a validated closed orbit, in turns per
/// period with respect to the global frame.
pub fn transverse_rotation_number(
    f: &ContactScaling,
    orbit: &ClosedOrbit,
    k_max: u32,
) -> Result<f64> {
    let frame = transverse_linearized_path(f, orbit, 2048)?;
    Ok(sympath::rotation_number_of_path(&frame.path, k_max).value)
}

/// Conley-Zehnder index of the k-th iterate of a closed orbit via the
/// geometric route; `None` when degenerate.
pub fn orbit_cz_index(f: &ContactScaling, orbit: &ClosedOrbit, k: u32) -> Result<Option<i64>> {
    let frame = transverse_linearized_path(f, orbit, 2048)?;
    let iterate = iterate_path(&frame.path, k);
    match sympath::cz_index_geometric(&iterate) {
        Ok(mu) => Ok(Some(mu)),
        Err(sympath::SymPathError::DegeneratePath) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Extend a one-period path to its k-th iterate by `φ(t+1) = φ(t) φ(1)`.
pub fn iterate_path(path: &SymplecticPath, k: u32) -> SymplecticPath {
    if k == 1 {
        return path.clone();
    }
    let n = path.values.len() - 1;
    let end = path.values[n];
    let mut power = Matrix2::identity();
    let mut times = Vec::with_capacity(n * k as usize + 1);
    let mut values = Vec::with_capacity(n * k as usize + 1);
    for m in 0..k {
        let upto = if m + 1 == k { n + 1 } else { n };
        for j in 0..upto {
            times.push(m as f64 + path.times[j]);
            values.push(path.values[j] * power);
        }
        power = end * power;
    }
    SymplecticPath { times, values, k }
}

/// Outcome of a shooting search.
#[derive(Debug, Serialize)]
pub enum ShootingOutcome {
    Found(ClosedOrbit),
    NotFound { reason: String },
}

/// Newton shooting on a transverse planar section through the seed, with the
/// return time as auxiliary unknown.
pub fn find_orbit_shooting(
    f: &ContactScaling,
    seed: &Vector4<f64>,
    period_guess: f64,
) -> Result<ShootingOutcome> {
    let z0 = seed.normalize();
    let x0 = f.reeb_field(&z0);
    let xhat = x0.normalize();
    let (b1, b2, _) = frame_at(f, &z0);
    let b1 = b1.normalize();
    let b2 = b2.normalize();
    let tol = 1e-11;
    let flow_to = |a1: f64, a2: f64, t: f64| -> Result<Vector4<f64>> {
        let start = (z0 + b1 * a1 + b2 * a2).normalize();
        let traj = integrate_reeb(f, &start, t, tol)?;
        Ok(traj.end())
    };
    let residual = |a1: f64, a2: f64, t: f64| -> Result<Vector3<f64>> {
        let start = (z0 + b1 * a1 + b2 * a2).normalize();
        let endp = flow_to(a1, a2, t)?;
        let d = endp - start;
        Ok(Vector3::new(d.dot(&b1), d.dot(&b2), d.dot(&xhat)))
    };
    let mut u = Vector3::new(0.0, 0.0, period_guess);
    let mut converged = false;
    for _ in 0..30 {
        let r = residual(u[0], u[1], u[2])?;
        if r.norm() < 1e-10 {
            converged = true;
            break;
        }
        // Transversality of the section at the current start point.
        let start = (z0 + b1 * u[0] + b2 * u[1]).normalize();
        if f.reeb_field(&start).normalize().dot(&xhat).abs() < 0.1 {
            return Err(FlowError::ReseedRequired);
        }
        let h = 1e-7 * (1.0 + u[2].abs());
        let mut jac = Matrix3::zeros();
        for c in 0..3 {
            let mut up = u;
            let mut um = u;
            up[c] += h;
            um[c] -= h;
            let rp = residual(up[0], up[1], up[2])?;
            let rm = residual(um[0], um[1], um[2])?;
            let col = (rp - rm) / (2.0 * h);
            jac.set_column(c, &col);
        }
        let Some(inv) = jac.try_inverse() else {
            return Ok(ShootingOutcome::NotFound {
                reason: "singular shooting Jacobian".into(),
            });
        };
        let du = inv * r;
        let step_cap = 0.3 * (1.0 + u[2].abs());
        let scale = (step_cap / du.norm()).min(1.0);
        u -= du * scale;
        if !u[2].is_finite() || u[2] <= 0.0 || u[2] > 50.0 * period_guess {
            return Ok(ShootingOutcome::NotFound {
                reason: "period escaped the search window".into(),
            });
        }
    }
    if !converged {
        let r = residual(u[0], u[1], u[2])?;
        if r.norm() >= 1e-8 {
            return Ok(ShootingOutcome::NotFound {
                reason: format!("Newton stalled with residual {:.3e}", r.norm()),
            });
        }
    }
    let start = (z0 + b1 * u[0] + b2 * u[1]).normalize();
    let traj = integrate_reeb(f, &start, u[2], tol)?;
    let mut orbit = ClosedOrbit {
        period: u[2],
        trajectory: traj,
        cls: None,
        rho: None,
        cz: None,
    };
    if orbit.closure_gap() > 1e-6 {
        return Ok(ShootingOutcome::NotFound {
            reason: format!("closure gap {:.3e}", orbit.closure_gap()),
        });
    }
    if let Ok((p, q)) = linking_numbers(&orbit) {
        orbit.cls = Some(HomotopyClass::new(p, q));
    }
    orbit.rho = transverse_rotation_number(f, &orbit, 64).ok();
    orbit.cz = orbit_cz_index(f, &orbit, 1).unwrap_or(None);
    Ok(ShootingOutcome::Found(orbit))
}

/// Extremal winding report for an iterate of a link component in the
/// disk-adjusted frame.
#[derive(Debug, Clone, Serialize)]
pub struct WindingBounds {
    pub k: u32,
    /// Winding of the largest negative eigenvalue, disk frame.
    pub wind_lt0: i64,
    /// Winding of the smallest nonnegative eigenvalue, disk frame.
    pub wind_geq0: i64,
    /// Rotation offset `θ_i` estimated from the transverse rotation number.
    pub theta: f64,
    /// Whether the elliptic bracket `wind_lt0 < kθ < wind_geq0` held.
    pub bounds_verified: bool,
}

/// Build the asymptotic-operator spectral data for the k-th iterate of a link
/// component; windings are shifted by `-k` to the disk frame (self-linking
/// number -1 per period).
pub fn asymptotic_winding_bounds(
    f: &ContactScaling,
    comp: LinkComponent,
    k: u32,
) -> Result<WindingBounds> {
    let orbit = link_component_orbit(f, comp);
    let frame = transverse_linearized_path(f, &orbit, 1024)?;
    let rho = sympath::rotation_number_of_path(&frame.path, 1 << 17).value;
    let theta = rho - 1.0;
    let base = HamiltonianLoop::from_uniform_samples(frame.generator.clone())?;
    let gen_k = base.iterate(k);
    let spec = sympath::asymptotic_spectrum(&gen_k, 1)?;
    let wind_lt0 = spec.wind_minus - k as i64;
    let wind_geq0 = spec.wind_plus - k as i64;
    let elliptic = {
        let end = frame.path.end();
        end.trace().abs() < 2.0 - 1e-9
    };
    let kt = k as f64 * theta;
    let bounds_verified = if elliptic {
        (wind_lt0 as f64) < kt && kt < (wind_geq0 as f64)
    } else {
        wind_lt0 == wind_geq0
    };
    if elliptic && !bounds_verified {
        return Err(FlowError::FrameError(format!(
            "elliptic winding bounds failed: {wind_lt0} < {kt} < {wind_geq0}"
        )));
    }
    Ok(WindingBounds {
        k,
        wind_lt0,
        wind_geq0,
        theta,
        bounds_verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelforms::build_model;

    const THETA0: f64 = 0.4142;
    const THETA1: f64 = 0.7321;

    #[test]
    fn hopf_flow_closes_on_link() {
        let f = ContactScaling::Unit;
        let z0 = Vector4::new(0.0, 0.0, 1.0, 0.0);
        let traj = integrate_reeb(&f, &z0, std::f64::consts::PI, 1e-11).unwrap();
        assert!((traj.end() - z0).norm() < 1e-9);
        assert!(traj.sphere_defect() < 1e-10);
    }

    #[test]
    fn reeb_normalization_along_hopf_and_model() {
        let z0 = Vector4::new(0.5f64.sqrt(), 0.0, 0.0, 0.5f64.sqrt());
        for f in [
            ContactScaling::Unit,
            ContactScaling::Model(build_model(THETA0, THETA1).unwrap()),
        ] {
            let traj = integrate_reeb(&f, &z0, 2.0, 1e-10).unwrap();
            assert!(reeb_normalization_defect(&f, &traj) < 1e-8);
        }
    }

    #[test]
    fn adapted_membership() {
        assert!(check_adapted(&ContactScaling::Unit));
        let model = ContactScaling::Model(build_model(THETA0, THETA1).unwrap());
        assert!(check_adapted(&model));
        let skew = ContactScaling::Custom {
            f: Arc::new(|z: &Vector4<f64>| 1.0 + z[0]),
            label: "one-plus-q0".into(),
        };
        assert!(!check_adapted(&skew));
    }

    #[test]
    fn action_rescaling_scales_period() {
        // Reeb field of c·λ is X/c: same geometric orbit, period scaled by c.
        let c = 1.7;
        let f1 = ContactScaling::Unit;
        let fc = ContactScaling::Custom {
            f: Arc::new(move |_z: &Vector4<f64>| c),
            label: "constant".into(),
        };
        let z0 = Vector4::new(0.0, 0.0, 1.0, 0.0);
        let t1 = integrate_reeb(&f1, &z0, std::f64::consts::PI, 1e-11).unwrap();
        let tc = integrate_reeb(&fc, &z0, c * std::f64::consts::PI, 1e-11).unwrap();
        assert!((t1.end() - tc.end()).norm() < 1e-8);
    }

    #[test]
    fn model_torus_orbit_matches_closed_form() {
        let form = build_model(THETA0, THETA1).unwrap();
        let torus =
            crate::modelforms::locate_torus(&form, HomotopyClass::new(1, 1)).unwrap();
        let reference = crate::modelforms::orbit_on_torus(&form, &torus, 0.2, 0.9);
        let f = ContactScaling::Model(form);
        let z0 = reference.trajectory.start();
        let traj = integrate_reeb(&f, &z0, torus.period, 1e-10).unwrap();
        assert!((traj.end() - z0).norm() < 1e-6);
    }

    #[test]
    fn hopf_fibres_link_once() {
        let f = ContactScaling::Unit;
        let orbit = link_component_orbit(&f, LinkComponent::L0);
        // L0 tested against L1: the polar angle of the second component winds
        // once, the first is undefined on the component itself, so probe a
        // pushed-off copy.
        let mut pushed = orbit.clone();
        for (z, t) in pushed
            .trajectory
            .points
            .iter_mut()
            .zip(pushed.trajectory.times.clone())
        {
            let eps = 1e-3;
            let phase = TAU * t / orbit.period;
            *z = Vector4::new(eps * phase.cos(), eps * phase.sin(), z[2], z[3]).normalize();
        }
        let (p, q) = linking_numbers(&pushed).unwrap();
        assert_eq!(q, 1);
        assert_eq!(p, 1);
    }

    #[test]
    fn orientation_reversal_negates_linking() {
        let form = build_model(THETA0, THETA1).unwrap();
        let torus =
            crate::modelforms::locate_torus(&form, HomotopyClass::new(1, 2)).unwrap();
        let orbit = crate::modelforms::orbit_on_torus(&form, &torus, 0.0, 0.0);
        let mut reversed = orbit.clone();
        reversed.trajectory.points.reverse();
        let (p, q) = linking_numbers(&orbit).unwrap();
        let (rp, rq) = linking_numbers(&reversed).unwrap();
        assert_eq!((rp, rq), (-p, -q));
    }

    #[test]
    fn unit_form_transverse_rotation_is_two() {
        let f = ContactScaling::Unit;
        let orbit = link_component_orbit(&f, LinkComponent::L0);
        let rho = transverse_rotation_number(&f, &orbit, 256).unwrap();
        assert!((rho - 2.0).abs() < 1e-8, "rho = {rho}");
    }

    #[test]
    fn model_rotation_number_is_one_plus_theta() {
        let f = ContactScaling::Model(build_model(THETA0, THETA1).unwrap());
        let orbit = link_component_orbit(&f, LinkComponent::L0);
        let rho = transverse_rotation_number(&f, &orbit, 4096).unwrap();
        assert!((rho - (1.0 + THETA0)).abs() < 1e-6, "rho = {rho}");
        let orbit1 = link_component_orbit(&f, LinkComponent::L1);
        let rho1 = transverse_rotation_number(&f, &orbit1, 4096).unwrap();
        assert!((rho1 - (1.0 + THETA1)).abs() < 1e-6, "rho1 = {rho1}");
    }

    #[test]
    fn transverse_path_is_symplectic() {
        let f = ContactScaling::Model(build_model(THETA0, THETA1).unwrap());
        let orbit = link_component_orbit(&f, LinkComponent::L0);
        let frame = transverse_linearized_path(&f, &orbit, 1024).unwrap();
        assert!(frame.det_defect < 1e-8);
    }

    #[test]
    fn shooting_recovers_hopf_orbit() {
        let f = ContactScaling::Unit;
        let seed = Vector4::new(0.3, -0.2, 0.8, 0.1).normalize();
        match find_orbit_shooting(&f, &seed, 3.0).unwrap() {
            ShootingOutcome::Found(orbit) => {
                assert!((orbit.period - std::f64::consts::PI).abs() < 1e-7);
                assert_eq!(orbit.cls, Some(HomotopyClass::new(1, 1)));
            }
            ShootingOutcome::NotFound { reason } => panic!("shooting failed: {reason}"),
        }
    }

    #[test]
    fn shooting_recovers_model_torus_orbit() {
        let form = build_model(THETA0, THETA1).unwrap();
        let torus =
            crate::modelforms::locate_torus(&form, HomotopyClass::new(1, 1)).unwrap();
        let reference = crate::modelforms::orbit_on_torus(&form, &torus, 0.1, 0.4);
        let f = ContactScaling::Model(form);
        let seed = reference.trajectory.start();
        match find_orbit_shooting(&f, &seed, torus.period * 1.05).unwrap() {
            ShootingOutcome::Found(orbit) => {
                assert!((orbit.period - torus.period).abs() < 1e-8);
                assert_eq!(orbit.cls, Some(HomotopyClass::new(1, 1)));
            }
            ShootingOutcome::NotFound { reason } => panic!("shooting failed: {reason}"),
        }
    }

    #[test]
    fn winding_bounds_elliptic_bracket() {
        let f = ContactScaling::Model(build_model(THETA0, THETA1).unwrap());
        let b = asymptotic_winding_bounds(&f, LinkComponent::L0, 1).unwrap();
        assert!(b.bounds_verified);
        assert_eq!(b.wind_lt0, (b.theta).floor() as i64);
        assert_eq!(b.wind_geq0, (b.theta).floor() as i64 + 1);
        let b5 = asymptotic_winding_bounds(&f, LinkComponent::L0, 5).unwrap();
        assert_eq!(b5.wind_lt0, (5.0 * THETA0).floor() as i64);
    }
}
