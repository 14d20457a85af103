//! Profile curves, the star-shaped hypersurfaces they induce, and the model
//! Reeb dynamics with closed-form invariant tori.
//!
//! A profile `γ(t) = (x(t), y(t))` in squared-radius coordinates defines the
//! hypersurface `S_γ = {(r0², r1²) ∈ γ}` in R^4. The Reeb field of the
//! restricted standard form is a linear flow on each torus over an interior
//! profile point, with angular rates proportional to `(y'(t), -x'(t))`; the
//! torus whose normal is parallel to a relatively prime `(p, q)` is foliated
//! by closed orbits of that class.

use crate::numerics::{unwrap_near, TAU};
use crate::orbits::{ClosedOrbit, Trajectory};
use crate::twistcone::{in_twist_cone, pair_argument, HomotopyClass, TwistData};
use nalgebra::Vector4;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("no twist cone: (θ0,1) is a positive multiple of (1,θ1)")]
    NoCone,
    #[error("profile construction failed: {0}")]
    ConstructionFailure(String),
    #[error("class ({0}, {1}) lies outside the twist cone; no torus")]
    NoTorus(i64, i64),
    #[error("profile invalid: {0}")]
    ProfileInvalid(String),
    #[error(transparent)]
    Twist(#[from] crate::twistcone::TwistError),
}

type Result<T> = std::result::Result<T, ModelError>;

/// Planar cubic Hermite profile from `(1, 0)` to `(0, 1)` whose endpoint
/// normals realize the prescribed rotation offsets.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCurve {
    pub theta0: f64,
    pub theta1: f64,
    /// Endpoint tangent magnitudes of the Hermite construction.
    pub m0: f64,
    pub m1: f64,
    p0: (f64, f64),
    p1: (f64, f64),
    t0: (f64, f64),
    t1: (f64, f64),
    /// Position angles `atan2(y, x)` on a uniform parameter grid; warm start
    /// for ray intersection.
    #[serde(skip)]
    angle_table: Vec<f64>,
}

/// Position and derivatives of the profile at one parameter value.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
    pub ddx: f64,
    pub ddy: f64,
    pub dddx: f64,
    pub dddy: f64,
}

impl ProfilePoint {
    /// `d = x y' - x' y`, positive on a valid profile.
    pub fn star_form(&self) -> f64 {
        self.x * self.dy - self.dx * self.y
    }

    /// Convexity density `x' y'' - x'' y'`.
    pub fn convexity(&self) -> f64 {
        self.dx * self.ddy - self.ddx * self.dy
    }

    /// Angle of the outward normal `(y', -x')`.
    pub fn normal_angle(&self) -> f64 {
        (-self.dx).atan2(self.dy)
    }

    /// Derivative of the normal angle in `t`.
    pub fn normal_angle_rate(&self) -> f64 {
        self.convexity() / (self.dx * self.dx + self.dy * self.dy)
    }

    /// Second derivative of the normal angle in `t`.
    pub fn normal_angle_accel(&self) -> f64 {
        let n = self.convexity();
        let d = self.dx * self.dx + self.dy * self.dy;
        let dn = self.dx * self.dddy - self.dddx * self.dy;
        let dd = 2.0 * (self.dx * self.ddx + self.dy * self.ddy);
        (dn * d - n * dd) / (d * d)
    }
}

impl ProfileCurve {
    pub fn eval(&self, t: f64) -> ProfilePoint {
        let (h00, h10, h01, h11) = (
            2.0 * t * t * t - 3.0 * t * t + 1.0,
            t * t * t - 2.0 * t * t + t,
            -2.0 * t * t * t + 3.0 * t * t,
            t * t * t - t * t,
        );
        let (d00, d10, d01, d11) = (
            6.0 * t * t - 6.0 * t,
            3.0 * t * t - 4.0 * t + 1.0,
            -6.0 * t * t + 6.0 * t,
            3.0 * t * t - 2.0 * t,
        );
        let (e00, e10, e01, e11) = (12.0 * t - 6.0, 6.0 * t - 4.0, -12.0 * t + 6.0, 6.0 * t - 2.0);
        let (f00, f10, f01, f11) = (12.0, 6.0, -12.0, 6.0);
        let combine = |a: f64, b: f64, c: f64, d: f64| {
            (
                a * self.p0.0 + b * self.t0.0 + c * self.p1.0 + d * self.t1.0,
                a * self.p0.1 + b * self.t0.1 + c * self.p1.1 + d * self.t1.1,
            )
        };
        let (x, y) = combine(h00, h10, h01, h11);
        let (dx, dy) = combine(d00, d10, d01, d11);
        let (ddx, ddy) = combine(e00, e10, e01, e11);
        let (dddx, dddy) = combine(f00, f10, f01, f11);
        ProfilePoint {
            x,
            y,
            dx,
            dy,
            ddx,
            ddy,
            dddx,
            dddy,
        }
    }

    /// Validate the six defining conditions on `grid` points; returns the
    /// minimal margin of the two interior conditions.
    pub fn validate(&self, grid: usize) -> Result<f64> {
        let a = self.eval(0.0);
        let b = self.eval(1.0);
        if !(a.x > 0.0 && a.y.abs() < 1e-12 && a.dy > 0.0) {
            return Err(ModelError::ProfileInvalid("start-point conditions fail".into()));
        }
        if !(b.x.abs() < 1e-12 && b.y > 0.0 && b.dx < 0.0) {
            return Err(ModelError::ProfileInvalid("end-point conditions fail".into()));
        }
        // Endpoint normals proportional to (1, θ1) and (θ0, 1) positively.
        let n0 = (a.dy, -a.dx);
        let n1 = (b.dy, -b.dx);
        let par = |u: (f64, f64), v: (f64, f64)| (u.0 * v.1 - u.1 * v.0).abs() < 1e-9 && u.0 * v.0 + u.1 * v.1 > 0.0;
        if !par(n0, (1.0, self.theta1)) {
            return Err(ModelError::ProfileInvalid("start normal misaligned".into()));
        }
        if !par(n1, (self.theta0, 1.0)) {
            return Err(ModelError::ProfileInvalid("end normal misaligned".into()));
        }
        let mut margin = f64::INFINITY;
        let mut conv_sign = 0.0f64;
        for j in 0..=grid {
            let t = j as f64 / grid as f64;
            let p = self.eval(t);
            let scale = (p.x * p.x + p.y * p.y).sqrt().max(1e-9)
                * (p.dx * p.dx + p.dy * p.dy).sqrt().max(1e-9);
            let star = p.star_form() / scale;
            if star <= 0.0 {
                return Err(ModelError::ProfileInvalid(format!(
                    "x y' - x' y non-positive at t={t}"
                )));
            }
            let conv = p.convexity();
            if conv_sign == 0.0 {
                conv_sign = conv.signum();
            }
            if conv == 0.0 || conv.signum() != conv_sign {
                return Err(ModelError::ProfileInvalid(format!(
                    "x' y'' - x'' y' changes sign or vanishes at t={t}"
                )));
            }
            margin = margin.min(star.min(conv.abs() / scale));
        }
        Ok(margin)
    }

    fn build_angle_table(&mut self, n: usize) {
        self.angle_table = (0..=n)
            .map(|j| {
                let p = self.eval(j as f64 / n as f64);
                p.y.atan2(p.x)
            })
            .collect();
    }

    /// Monotone map from the position angle `atan2(y, x)` to the parameter,
    /// used as a warm start for ray intersection.
    fn parameter_of_ray(&self, u: f64, v: f64) -> f64 {
        // cross(γ(t), (u,v)) = x v - y u decreases through its unique root.
        let mut t = if self.angle_table.len() >= 2 {
            let psi = v.atan2(u);
            let n = self.angle_table.len() - 1;
            let idx = self.angle_table.partition_point(|a| *a <= psi);
            let idx = idx.clamp(1, n) - 1;
            let (a0, a1) = (self.angle_table[idx], self.angle_table[idx + 1]);
            let w = if a1 > a0 { (psi - a0) / (a1 - a0) } else { 0.0 };
            ((idx as f64 + w.clamp(0.0, 1.0)) / n as f64).clamp(0.0, 1.0)
        } else {
            let g = |t: f64| {
                let p = self.eval(t);
                p.x * v - p.y * u
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        // Polish with Newton; the root is simple with negative slope.
        for _ in 0..6 {
            let p = self.eval(t);
            let val = p.x * v - p.y * u;
            let der = p.dx * v - p.dy * u;
            if der.abs() > 1e-14 {
                t = (t - val / der).clamp(0.0, 1.0);
            }
            if val.abs() < 1e-15 * (u + v) {
                break;
            }
        }
        t
    }

    /// Scaling `σ` with `(σ u, σ v) ∈ γ`, plus the parameter where the ray
    /// meets the profile. Defined for any direction with `u, v >= 0`, `u+v > 0`.
    pub fn ray_intersection(&self, u: f64, v: f64) -> (f64, f64) {
        let t = self.parameter_of_ray(u, v);
        let p = self.eval(t);
        let sigma = if u >= v { p.x / u } else { p.y / v };
        (t, sigma)
    }
}

/// Validated model form: a profile plus its convexity orientation.
#[derive(Debug, Clone, Serialize)]
pub struct ModelForm {
    pub profile: ProfileCurve,
    /// Sign of `x' y'' - x'' y'`.
    pub orientation: f64,
}

impl ModelForm {
    pub fn twist_data(&self) -> TwistData {
        TwistData::s3(self.profile.theta0, self.profile.theta1)
    }
}

const VALIDATION_GRID: usize = 10_000;

/// Search the two-parameter Hermite family for a profile realizing the
/// offsets `(θ0, θ1)`; deterministic for given inputs.
pub fn build_profile(theta0: f64, theta1: f64) -> Result<ProfileCurve> {
    let a0 = pair_argument((theta0, 1.0)).map_err(|_| ModelError::NoCone)?;
    let a1 = pair_argument((1.0, theta1)).map_err(|_| ModelError::NoCone)?;
    if (a0 - a1).abs() <= 1e-12 {
        return Err(ModelError::NoCone);
    }
    let candidate = |m0: f64, m1: f64| ProfileCurve {
        theta0,
        theta1,
        m0,
        m1,
        p0: (1.0, 0.0),
        p1: (0.0, 1.0),
        t0: (-theta1 * m0, m0),
        t1: (-m1, theta0 * m1),
        angle_table: Vec::new(),
    };
    let mut best: Option<(f64, ProfileCurve)> = None;
    let levels = 25;
    for i in 0..levels {
        for j in 0..levels {
            let m0 = 10f64.powf(-1.0 + 2.0 * i as f64 / (levels - 1) as f64);
            let m1 = 10f64.powf(-1.0 + 2.0 * j as f64 / (levels - 1) as f64);
            let c = candidate(m0, m1);
            if let Ok(margin) = c.validate(500) {
                if best.as_ref().map_or(true, |(m, _)| margin > *m) {
                    best = Some((margin, c));
                }
            }
        }
    }
    let (_, mut curve) = best.ok_or_else(|| {
        ModelError::ConstructionFailure(format!(
            "no Hermite profile found for θ0={theta0}, θ1={theta1} over the search grid"
        ))
    })?;
    curve.validate(VALIDATION_GRID)?;
    curve.build_angle_table(512);
    Ok(curve)
}

/// Build and validate the model form for `(θ0, θ1)`.
pub fn build_model(theta0: f64, theta1: f64) -> Result<ModelForm> {
    let profile = build_profile(theta0, theta1)?;
    let orientation = profile.eval(0.5).convexity().signum();
    Ok(ModelForm {
        profile,
        orientation,
    })
}

/// Angular rates of the model Reeb field at profile parameter `t`:
/// `(dφ0/dt, dφ1/dt) = (2y'/d, -2x'/d)` with `d = x y' - x' y`.
pub fn reeb_field_model(profile: &ProfileCurve, t: f64) -> (f64, f64) {
    let p = profile.eval(t);
    let d = p.star_form();
    (2.0 * p.dy / d, -2.0 * p.dx / d)
}

/// An invariant torus of the model flow carrying closed `(p, q)` orbits.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantTorus {
    pub t_star: f64,
    /// `(r0², r1²)` of the torus.
    pub point: (f64, f64),
    /// Outward normal `(y', -x')` at the profile point.
    pub normal: (f64, f64),
    pub cls: HomotopyClass,
    pub period: f64,
}

/// Locate the unique torus whose normal is parallel to `(p, q)`.
pub fn locate_torus(form: &ModelForm, cls: HomotopyClass) -> Result<InvariantTorus> {
    if !in_twist_cone(cls, &form.twist_data())? {
        return Err(ModelError::NoTorus(cls.p, cls.q));
    }
    let psi = pair_argument((cls.p as f64, cls.q as f64))?;
    let prof = &form.profile;
    let angle = |t: f64| prof.eval(t).normal_angle();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (alo, ahi) = (angle(lo), angle(hi));
    if !((alo < psi && psi < ahi) || (ahi < psi && psi < alo)) {
        return Err(ModelError::ProfileInvalid(format!(
            "normal angle range [{alo}, {ahi}] does not bracket class angle {psi}"
        )));
    }
    let increasing = ahi > alo;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (angle(mid) < psi) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let p = prof.eval(t_star);
    let normal = (p.dy, -p.dx);
    // Parallelism check after normalization.
    let npq = ((cls.p * cls.p + cls.q * cls.q) as f64).sqrt();
    let nn = (normal.0 * normal.0 + normal.1 * normal.1).sqrt();
    let cross = (normal.0 * cls.q as f64 - normal.1 * cls.p as f64).abs() / (npq * nn);
    if cross > 1e-10 {
        return Err(ModelError::ProfileInvalid(format!(
            "torus normal not parallel to ({}, {}): residual {cross:.2e}",
            cls.p, cls.q
        )));
    }
    let d = p.star_form();
    let (rate0, rate1) = reeb_field_model(prof, t_star);
    // Period from either angular component; both must agree.
    let period = if cls.p != 0 {
        TAU * cls.p as f64 / rate0
    } else {
        TAU * cls.q as f64 / rate1
    };
    let check0 = rate0 * period - TAU * cls.p as f64;
    let check1 = rate1 * period - TAU * cls.q as f64;
    if check0.abs() > 1e-9 * (1.0 + period) || check1.abs() > 1e-9 * (1.0 + period) {
        return Err(ModelError::ProfileInvalid(format!(
            "inconsistent period: residuals ({check0:.2e}, {check1:.2e})"
        )));
    }
    debug_assert!(period > 0.0);
    let _ = d;
    Ok(InvariantTorus {
        t_star,
        point: (p.x, p.y),
        normal,
        cls,
        period,
    })
}

/// Explicit closed orbit on the torus, sampled over one period and mapped to
/// the unit sphere: the model trajectory is a linear flow in the two angles
/// at fixed `(r0², r1²)`.
pub fn orbit_on_torus(form: &ModelForm, torus: &InvariantTorus, phi0_init: f64, phi1_init: f64) -> ClosedOrbit {
    let (rate0, rate1) = reeb_field_model(&form.profile, torus.t_star);
    let (u, v) = torus.point;
    let s = u + v;
    let (r0, r1) = ((u / s).sqrt(), (v / s).sqrt());
    let n = 256 * ((torus.cls.p.abs() + torus.cls.q.abs()).max(1) as usize);
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = torus.period * j as f64 / n as f64;
        let phi0 = phi0_init + rate0 * t;
        let phi1 = phi1_init + rate1 * t;
        times.push(t);
        points.push(Vector4::new(
            r0 * phi0.cos(),
            r0 * phi0.sin(),
            r1 * phi1.cos(),
            r1 * phi1.sin(),
        ));
    }
    ClosedOrbit {
        trajectory: Trajectory::new(times, points),
        period: torus.period,
        cls: Some(torus.cls),
        rho: None,
        cz: None,
    }
}

/// Model Conley-Zehnder index of the k-th iterate of a link component.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelIndex {
    pub mu: i64,
    /// Set when `k(1+θ)` is within 1e-10 of an integer: the model is
    /// rationally resonant there and the index is at the degeneracy edge.
    pub resonance_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkComponent {
    L0,
    L1,
}

/// `μ_CZ(L_i^k) = 2 floor(k (1 + θ_i)) + 1`.
pub fn model_cz_index(form: &ModelForm, component: LinkComponent, k: u32) -> ModelIndex {
    assert!(k >= 1);
    let theta = match component {
        LinkComponent::L0 => form.profile.theta0,
        LinkComponent::L1 => form.profile.theta1,
    };
    let x = k as f64 * (1.0 + theta);
    ModelIndex {
        mu: 2 * x.floor() as i64 + 1,
        resonance_warning: (x - x.round()).abs() < 1e-10,
    }
}

/// Winding pair of the two polar angles over one period of a torus orbit.
pub fn orbit_windings(orbit: &ClosedOrbit) -> (i64, i64) {
    let mut w0 = 0.0f64;
    let mut w1 = 0.0f64;
    let mut prev0 = None;
    let mut prev1 = None;
    for z in &orbit.trajectory.points {
        let a0 = z[1].atan2(z[0]);
        let a1 = z[3].atan2(z[2]);
        match (prev0, prev1) {
            (None, None) => {
                prev0 = Some(a0);
                prev1 = Some(a1);
            }
            (Some(p0), Some(p1)) => {
                let n0 = unwrap_near(p0, a0);
                let n1 = unwrap_near(p1, a1);
                w0 += n0 - p0;
                w1 += n1 - p1;
                prev0 = Some(n0);
                prev1 = Some(n1);
            }
            _ => unreachable!(),
        }
    }
    ((w0 / TAU).round() as i64, (w1 / TAU).round() as i64)
}

/// Export the profile as `(t, x, y)` samples.
pub fn profile_samples(profile: &ProfileCurve, n: usize) -> Vec<(f64, f64, f64)> {
    (0..=n)
        .map(|j| {
            let t = j as f64 / n as f64;
            let p = profile.eval(t);
            (t, p.x, p.y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA0: f64 = 0.4142;
    const THETA1: f64 = 0.7321;

    #[test]
    fn resonant_offsets_have_no_cone() {
        assert!(matches!(build_profile(1.0, 1.0), Err(ModelError::NoCone)));
    }

    #[test]
    fn profile_passes_grid_checks() {
        let p = build_profile(THETA0, THETA1).unwrap();
        assert!(p.validate(VALIDATION_GRID).is_ok());
    }

    #[test]
    fn both_negative_offsets_admit_a_profile() {
        let p = build_profile(-0.3, -0.3).unwrap();
        assert!(p.validate(VALIDATION_GRID).is_ok());
    }

    #[test]
    fn reeb_rates_match_endpoint_rays() {
        let p = build_profile(THETA0, THETA1).unwrap();
        // At t=1 the rates are proportional to (θ0, 1).
        let (r0, r1) = reeb_field_model(&p, 1.0);
        assert!((r0 / r1 - THETA0).abs() < 1e-9);
        // Componentwise quotient identity at interior points.
        for t in [0.2, 0.5, 0.8] {
            let pt = p.eval(t);
            let (a0, a1) = reeb_field_model(&p, t);
            assert!((a0 / a1 - pt.dy / (-pt.dx)).abs() < 1e-9);
        }
    }

    #[test]
    fn torus_location_and_period_consistency() {
        let form = build_model(THETA0, THETA1).unwrap();
        let t11 = locate_torus(&form, HomotopyClass::new(1, 1)).unwrap();
        // Normal parallel to (1,1).
        assert!((t11.normal.0 - t11.normal.1).abs() / t11.normal.0.abs() < 1e-9);
        let t12 = locate_torus(&form, HomotopyClass::new(1, 2)).unwrap();
        assert_ne!(t11.t_star, t12.t_star);
        let a11 = form.profile.eval(t11.t_star).normal_angle();
        let a12 = form.profile.eval(t12.t_star).normal_angle();
        let a_start = form.profile.eval(0.0).normal_angle();
        let a_end = form.profile.eval(1.0).normal_angle();
        for a in [a11, a12] {
            assert!(a > a_start.min(a_end) && a < a_start.max(a_end));
        }
    }

    #[test]
    fn outside_cone_has_no_torus() {
        let form = build_model(THETA0, THETA1).unwrap();
        assert!(matches!(
            locate_torus(&form, HomotopyClass::new(1, -1)),
            Err(ModelError::NoTorus(..))
        ));
    }

    #[test]
    fn normal_angle_is_strictly_monotone() {
        let form = build_model(THETA0, THETA1).unwrap();
        let mut prev = form.profile.eval(0.0).normal_angle();
        let increasing = form.orientation > 0.0;
        for j in 1..=1000 {
            let a = form.profile.eval(j as f64 / 1000.0).normal_angle();
            if increasing {
                assert!(a > prev);
            } else {
                assert!(a < prev);
            }
            prev = a;
        }
    }

    #[test]
    fn orbit_closes_and_winds() {
        let form = build_model(THETA0, THETA1).unwrap();
        let torus = locate_torus(&form, HomotopyClass::new(1, 2)).unwrap();
        let orbit = orbit_on_torus(&form, &torus, 0.3, -1.1);
        assert!(orbit.closure_gap() < 1e-10);
        assert_eq!(orbit_windings(&orbit), (1, 2));
        assert!(orbit.trajectory.sphere_defect() < 1e-12);
        // The orbit lies on S_γ: the squared radii scale to the torus point.
        let z = orbit.trajectory.points[17];
        let u = z[0] * z[0] + z[1] * z[1];
        let v = z[2] * z[2] + z[3] * z[3];
        let s = torus.point.0 + torus.point.1;
        assert!((u * s - torus.point.0).abs() < 1e-12);
        assert!((v * s - torus.point.1).abs() < 1e-12);
    }

    #[test]
    fn phase_shift_translates_orbit() {
        let form = build_model(THETA0, THETA1).unwrap();
        let torus = locate_torus(&form, HomotopyClass::new(1, 1)).unwrap();
        let a = orbit_on_torus(&form, &torus, 0.0, 0.0);
        let b = orbit_on_torus(&form, &torus, 0.5, 0.0);
        // Same squared radii, different phases: a torus translation.
        let za = a.trajectory.points[0];
        let zb = b.trajectory.points[0];
        assert!((za.norm() - zb.norm()).abs() < 1e-12);
        assert!((za - zb).norm() > 1e-3);
        assert_eq!(orbit_windings(&a), orbit_windings(&b));
    }

    #[test]
    fn model_index_examples() {
        let form = build_model(THETA0, THETA1).unwrap();
        assert_eq!(model_cz_index(&form, LinkComponent::L0, 1).mu, 3);
        assert_eq!(model_cz_index(&form, LinkComponent::L0, 3).mu, 9);
        let form_neg = build_model(-0.3, -0.3).unwrap();
        assert_eq!(model_cz_index(&form_neg, LinkComponent::L1, 1).mu, 1);
    }

    #[test]
    fn ray_intersection_consistent_with_profile() {
        let p = build_profile(THETA0, THETA1).unwrap();
        for t in [0.1, 0.37, 0.62, 0.9] {
            let pt = p.eval(t);
            let scale = 3.7;
            let (t_found, sigma) = p.ray_intersection(pt.x / scale, pt.y / scale);
            assert!((t_found - t).abs() < 1e-10);
            assert!((sigma - scale).abs() < 1e-9);
        }
    }

    #[test]
    fn action_spectrum_is_finite_below_any_bound() {
        // Enumerate torus periods below M: finitely many classes appear.
        let form = build_model(THETA0, THETA1).unwrap();
        let data = form.twist_data();
        let m_bound = 60.0;
        let mut periods = Vec::new();
        for bound in 1..=14 {
            for cls in crate::twistcone::enumerate_classes(&data, bound).classes {
                if let Ok(t) = locate_torus(&form, cls) {
                    if t.period <= m_bound {
                        periods.push(t.period);
                    }
                }
            }
        }
        periods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        periods.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        // No accumulation within resolution: successive periods separated.
        for w in periods.windows(2) {
            assert!(w[1] - w[0] > 1e-6);
        }
        assert!(!periods.is_empty());
    }
}
