//! Morse-Bott perturbation of a model form near one invariant torus: adapted
//! coordinates, the perturbed Reeb field, the reduced planar field `Z`, rest
//! points, surviving orbits and the explicit gradient-flow cylinders.
//!
//! Near the torus `{θ = θ*}` the angles diagonalize into coordinates `(x, y)`
//! with `x` of period `L` and `y` of period `T` (the orbit period); the
//! standard form reads `Δ1 dx + Δ2 dy` with `(Δ1, Δ2)` normalized to the
//! identity jet at `θ*`. A perturbation `f_ε = 1 + ε β(θ) cos(2πx/L)` breaks
//! the torus, leaving exactly two closed orbits over the rest points of the
//! reduced field.

use crate::modelforms::{InvariantTorus, ModelForm, ProfileCurve};
use crate::numerics::{dp54_step, TAU};
use crate::sympath::{self, HamiltonianLoop};
use nalgebra::{Matrix2, Vector2, Vector4};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum PerturbationError {
    #[error("adapted coordinate construction failed: {0}")]
    CoordinateConstruction(String),
    #[error("epsilon {eps:.3e} exceeds the smallness threshold {max:.3e}")]
    EpsilonTooLarge { eps: f64, max: f64 },
    #[error("found {found} rest points on the verification grid, expected 2")]
    ExtraRestPoints { found: usize },
    #[error("index consistency failure: {0}")]
    ConsistencyFailure(String),
    #[error(transparent)]
    SymPath(#[from] sympath::SymPathError),
}

type Result<T> = std::result::Result<T, PerturbationError>;

/// Adapted coordinates around one invariant torus.
#[derive(Debug, Clone, Serialize)]
pub struct TorusCoordinates {
    pub theta_star: f64,
    /// Period of the `x` coordinate.
    pub l_period: f64,
    /// Period of the `y` coordinate: the orbit period.
    pub t_period: f64,
    /// Half-width of the working interval `I` around `θ*`.
    pub half_width: f64,
    /// `Δ2''(θ*)`, nonzero by strict convexity/concavity.
    pub delta2_accel: f64,
    /// Coordinate matrix: `(x, y) = M (φ0, φ1)`.
    #[serde(skip)]
    pub coord_matrix: Matrix2<f64>,
    #[serde(skip)]
    profile: ProfileCurve,
    t_star: f64,
    theta_lo: f64,
    theta_hi: f64,
}

impl TorusCoordinates {
    /// Invert the strictly monotone normal-angle map.
    fn t_of_theta(&self, theta: f64) -> f64 {
        let increasing =
            self.profile.eval(1.0).normal_angle() > self.profile.eval(0.0).normal_angle();
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..52 {
            let mid = 0.5 * (lo + hi);
            if (self.profile.eval(mid).normal_angle() < theta) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..3 {
            let p = self.profile.eval(t);
            let r = p.normal_angle_rate();
            if r.abs() > 1e-14 {
                t = (t - (p.normal_angle() - theta) / r).clamp(0.0, 1.0);
            }
        }
        t
    }

    /// `h = (h0, h1) = (x, y)/2` of the profile and two θ-derivatives.
    fn h_jet(&self, theta: f64) -> [(f64, f64); 3] {
        let t = self.t_of_theta(theta);
        let p = self.profile.eval(t);
        let vt = p.normal_angle_rate();
        let at = p.normal_angle_accel();
        let h = (p.x / 2.0, p.y / 2.0);
        let dh = (p.dx / (2.0 * vt), p.dy / (2.0 * vt));
        let ddh = (
            (p.ddx * vt - p.dx * at) / (2.0 * vt * vt * vt),
            (p.ddy * vt - p.dy * at) / (2.0 * vt * vt * vt),
        );
        [h, dh, ddh]
    }

    /// `d(θ*) = h1 h0' - h0 h1'` at the torus.
    fn d_star(&self) -> f64 {
        let [h, dh, _] = self.h_jet(self.theta_star);
        h.1 * dh.0 - h.0 * dh.1
    }

    /// `Δ1, Δ2` and derivatives at `θ` (derivative order 0..=2).
    pub fn delta_jet(&self, theta: f64) -> [Vector2<f64>; 3] {
        let d = self.d_star();
        let [hs, dhs, _] = self.h_jet(self.theta_star);
        let jet = self.h_jet(theta);
        let mut out = [Vector2::zeros(); 3];
        for (k, (h0, h1)) in jet.iter().enumerate() {
            let delta1 = (h0 * hs.1 - h1 * hs.0) / d;
            let delta2 = (h1 * dhs.0 - h0 * dhs.1) / d;
            out[k] = Vector2::new(delta1, delta2);
        }
        out
    }

    pub fn delta1(&self, theta: f64) -> f64 {
        self.delta_jet(theta)[0].x
    }

    pub fn delta2(&self, theta: f64) -> f64 {
        self.delta_jet(theta)[0].y
    }

    /// `Δ = Δ1' Δ2 - Δ1 Δ2'`.
    pub fn delta_det(&self, theta: f64) -> f64 {
        let jet = self.delta_jet(theta);
        jet[1].x * jet[0].y - jet[0].x * jet[1].y
    }

    pub fn interval(&self) -> (f64, f64) {
        (
            self.theta_star - self.half_width,
            self.theta_star + self.half_width,
        )
    }

    /// Map polar angles to the adapted `(x, y)`.
    pub fn xy_of_angles(&self, phi0: f64, phi1: f64) -> (f64, f64) {
        let v = self.coord_matrix * Vector2::new(phi0, phi1);
        (v.x, v.y)
    }

    /// Normal angle of a point of the hypersurface given by its squared radii.
    pub fn theta_of_radii(&self, u: f64, v: f64) -> f64 {
        let (t, _) = self.profile.ray_intersection(u, v);
        self.profile.eval(t).normal_angle()
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta_lo, self.theta_hi)
    }
}

/// Build adapted coordinates for one located torus, verifying the identity
/// jet of `(Δ1, Δ2)` at `θ*` and the coordinate lattice.
pub fn adapted_coordinates(form: &ModelForm, torus: &InvariantTorus) -> Result<TorusCoordinates> {
    let a_start = form.profile.eval(0.0).normal_angle();
    let a_end = form.profile.eval(1.0).normal_angle();
    let (theta_lo, theta_hi) = (a_start.min(a_end), a_start.max(a_end));
    let theta_star = form.profile.eval(torus.t_star).normal_angle();
    let mut coords = TorusCoordinates {
        theta_star,
        l_period: 0.0,
        t_period: torus.period,
        half_width: 0.0,
        delta2_accel: 0.0,
        coord_matrix: Matrix2::zeros(),
        profile: form.profile.clone(),
        t_star: torus.t_star,
        theta_lo,
        theta_hi,
    };
    let _ = coords.t_star;
    let [hs, dhs, _] = coords.h_jet(theta_star);
    coords.coord_matrix = Matrix2::new(dhs.0, dhs.1, hs.0, hs.1);
    // Lattice: the deck element (p, q) is a pure y-translation by the period,
    // and a unimodular complement gives the x-period L.
    let (p, q) = (torus.cls.p, torus.cls.q);
    let y_shift = TAU * (p as f64 * hs.0 + q as f64 * hs.1);
    let x_of_pq = TAU * (p as f64 * dhs.0 + q as f64 * dhs.1);
    if x_of_pq.abs() > 1e-8 * (1.0 + dhs.0.abs() + dhs.1.abs()) {
        return Err(PerturbationError::CoordinateConstruction(format!(
            "deck element ({p}, {q}) is not a pure y-translation: x-shift {x_of_pq:.3e}"
        )));
    }
    if (y_shift - torus.period).abs() > 1e-6 * (1.0 + torus.period) {
        return Err(PerturbationError::CoordinateConstruction(format!(
            "lattice y-period {y_shift} disagrees with orbit period {}",
            torus.period
        )));
    }
    let (m0, n0) = unimodular_complement(p, q);
    coords.l_period = (TAU * (m0 as f64 * dhs.0 + n0 as f64 * dhs.1)).abs();
    // Identity jet at θ*.
    let jet = coords.delta_jet(theta_star);
    let defect = (jet[0].x.abs())
        .max((jet[0].y - 1.0).abs())
        .max((jet[1].x - 1.0).abs())
        .max(jet[1].y.abs());
    if defect > 1e-6 {
        return Err(PerturbationError::CoordinateConstruction(format!(
            "identity jet defect {defect:.3e} at θ*"
        )));
    }
    coords.delta2_accel = jet[2].y;
    if coords.delta2_accel.abs() < 1e-10 {
        return Err(PerturbationError::CoordinateConstruction(
            "Δ2''(θ*) vanishes".into(),
        ));
    }
    // Shrink the working interval until Δ2 stays near 1 and Δ2' is
    // single-signed on each side of θ*.
    let mut r = 0.25 * (theta_star - theta_lo).min(theta_hi - theta_star);
    'shrink: loop {
        if r < 1e-6 {
            return Err(PerturbationError::CoordinateConstruction(
                "no valid working interval".into(),
            ));
        }
        let side_sign = coords.delta2_accel.signum();
        for j in 1..=32 {
            for sgn in [-1.0f64, 1.0] {
                let theta = theta_star + sgn * r * j as f64 / 32.0;
                let jet = coords.delta_jet(theta);
                if (jet[0].y - 1.0).abs() > 0.5 || jet[1].y.signum() != side_sign * sgn {
                    r *= 0.5;
                    continue 'shrink;
                }
            }
        }
        break;
    }
    coords.half_width = r;
    Ok(coords)
}

/// Unimodular complement: `(m0, n0)` with `m0 q - n0 p = 1`.
fn unimodular_complement(p: i64, q: i64) -> (i64, i64) {
    let (g, a, b) = ext_gcd(q, -p);
    debug_assert_eq!(g.abs(), 1);
    (a * g.signum(), b * g.signum())
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Quintic-smoothstep bump: `1` on the middle third of `[-1, 1]`, compactly
/// supported, C².
fn bump_jet(xi: f64) -> (f64, f64, f64) {
    let a = xi.abs();
    if a <= 1.0 / 3.0 {
        (1.0, 0.0, 0.0)
    } else if a >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let u = (1.0 - a) * 1.5;
        let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        let dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
        let du = -1.5 * xi.signum();
        (s, ds * du, dds * du * du)
    }
}

/// The perturbation data: `f_ε = 1 + ε β(θ) cos(2πx/L)` near the torus.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedForm {
    pub epsilon: f64,
    pub coords: TorusCoordinates,
    /// The empirical smallness bound used to admit `epsilon`.
    pub epsilon_max: f64,
}

impl PerturbedForm {
    pub fn new(coords: TorusCoordinates, epsilon: f64) -> Result<Self> {
        let r = coords.half_width;
        let epsilon_max = 1e-2 * 1.0f64.min(coords.delta2_accel.abs()).min(r * r);
        if epsilon <= 0.0 || epsilon > epsilon_max {
            return Err(PerturbationError::EpsilonTooLarge {
                eps: epsilon,
                max: epsilon_max,
            });
        }
        Ok(Self {
            epsilon,
            coords,
            epsilon_max,
        })
    }

    /// `β(θ)` and two derivatives.
    pub fn beta_jet(&self, theta: f64) -> (f64, f64, f64) {
        let r = self.coords.half_width;
        let (b, db, ddb) = bump_jet((theta - self.coords.theta_star) / r);
        (b, db / r, ddb / (r * r))
    }

    /// `f_ε(θ, x)` and its first partials.
    pub fn f_eps(&self, theta: f64, x: f64) -> (f64, f64, f64) {
        let (b, db, _) = self.beta_jet(theta);
        let w = TAU / self.coords.l_period;
        let c = (w * x).cos();
        let s = (w * x).sin();
        let f = 1.0 + self.epsilon * b * c;
        let f_theta = self.epsilon * db * c;
        let f_x = -self.epsilon * b * w * s;
        (f, f_theta, f_x)
    }

    /// The perturbation profile `ḡ = β(θ) cos(2πx/L)` on the hypersurface,
    /// evaluated at a point of `S_γ` given in ambient coordinates.
    pub fn g_bar_ambient(&self, w: &Vector4<f64>) -> f64 {
        let u = w[0] * w[0] + w[1] * w[1];
        let v = w[2] * w[2] + w[3] * w[3];
        let theta = self.coords.theta_of_radii(u, v);
        let (lo, hi) = self.coords.interval();
        if theta <= lo || theta >= hi {
            return 0.0;
        }
        let (b, _, _) = self.beta_jet(theta);
        let phi0 = w[1].atan2(w[0]);
        let phi1 = w[3].atan2(w[2]);
        let (x, _) = self.coords.xy_of_angles(phi0, phi1);
        // x is defined modulo the lattice; the cosine only needs x mod L.
        b * (TAU * x / self.coords.l_period).cos()
    }

    /// Full perturbed Reeb field components `(X^θ, X^x, X^y)` at `(θ, x)`.
    pub fn reeb_components(&self, theta: f64, x: f64) -> (f64, f64, f64) {
        let (f, f_theta, f_x) = self.f_eps(theta, x);
        let jet = self.coords.delta_jet(theta);
        let (d1, d2) = (jet[0].x, jet[0].y);
        let (dd1, dd2) = (jet[1].x, jet[1].y);
        let det = dd1 * d2 - d1 * dd2;
        let x_theta = (f_x / (f * f)) * d2 / det;
        let x_x = -(f_theta * d2 + f * dd2) / (f * f * det);
        let x_y = (f_theta * d1 + f * dd1) / (f * f * det);
        (x_theta, x_x, x_y)
    }
}

/// The reduced planar field `Z` on the annulus `{θ ∈ I} × R/LZ`.
#[derive(Debug, Clone, Serialize)]
pub struct AnnulusField {
    form: PerturbedForm,
}

impl AnnulusField {
    pub fn components(&self, theta: f64, x: f64) -> (f64, f64) {
        let f = &self.form;
        let w = TAU / f.coords.l_period;
        let (b, db, _) = f.beta_jet(theta);
        let jet = f.coords.delta_jet(theta);
        let (d2, dd2) = (jet[0].y, jet[1].y);
        let (c, s) = ((w * x).cos(), (w * x).sin());
        let z_theta = -f.epsilon * w * b * d2 * s;
        let z_x = -f.epsilon * db * d2 * c - (1.0 + f.epsilon * b * c) * dd2;
        (z_theta, z_x)
    }

    /// Closed-form Jacobian of `Z`.
    pub fn jacobian(&self, theta: f64, x: f64) -> Matrix2<f64> {
        let f = &self.form;
        let w = TAU / f.coords.l_period;
        let (b, db, ddb) = f.beta_jet(theta);
        let jet = f.coords.delta_jet(theta);
        let (d2, dd2, ddd2) = (jet[0].y, jet[1].y, jet[2].y);
        let (c, s) = ((w * x).cos(), (w * x).sin());
        let eps = f.epsilon;
        let dzt_dtheta = -eps * w * (db * d2 + b * dd2) * s;
        let dzt_dx = -eps * w * w * b * d2 * c;
        let dzx_dtheta = -eps * (ddb * d2 + 2.0 * db * dd2) * c - (1.0 + eps * b * c) * ddd2;
        let dzx_dx = eps * w * s * (db * d2 + b * dd2);
        Matrix2::new(dzt_dtheta, dzt_dx, dzx_dtheta, dzx_dx)
    }

    pub fn form(&self) -> &PerturbedForm {
        &self.form
    }
}

/// Project the perturbed Reeb field onto the annulus: `Z = f² Δ (X^θ, X^x)`.
pub fn reduced_field(form: &PerturbedForm) -> AnnulusField {
    AnnulusField { form: form.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RestPointKind {
    Hyperbolic,
    Elliptic,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestPoint {
    pub theta: f64,
    pub x: f64,
    /// Eigenvalues of the reduced Jacobian as (re, im) pairs.
    pub eigenvalues: [(f64, f64); 2],
    pub kind: RestPointKind,
}

/// Newton search from the analytic seeds plus a verification sweep that no
/// further rest points exist on the annulus.
pub fn rest_points_and_linearization(field: &AnnulusField) -> Result<Vec<RestPoint>> {
    let form = field.form();
    let c = &form.coords;
    let l = c.l_period;
    let mut points = Vec::new();
    for seed_x in [0.0, l / 2.0] {
        let (mut theta, mut x) = (c.theta_star, seed_x);
        for _ in 0..60 {
            let (z1, z2) = field.components(theta, x);
            let j = field.jacobian(theta, x);
            let det = j.determinant();
            if det.abs() < 1e-30 {
                break;
            }
            let dtheta = (z1 * j[(1, 1)] - z2 * j[(0, 1)]) / det;
            let dx = (z2 * j[(0, 0)] - z1 * j[(1, 0)]) / det;
            // Damping keeps the iterates inside the patch.
            let scale = 1.0f64.min(0.25 * c.half_width / dtheta.abs().max(1e-300));
            theta -= scale * dtheta;
            x -= scale * dx;
            if dtheta.abs() + dx.abs() < 1e-14 {
                break;
            }
        }
        let (z1, z2) = field.components(theta, x);
        if z1.abs() + z2.abs() > 1e-11 {
            return Err(PerturbationError::ConsistencyFailure(format!(
                "Newton did not converge near x={seed_x}: |Z|={:.3e}",
                z1.abs() + z2.abs()
            )));
        }
        let j = field.jacobian(theta, x);
        let tr = j.trace();
        let det = j.determinant();
        let disc = tr * tr / 4.0 - det;
        let (eigenvalues, kind) = if disc >= 0.0 {
            let r = disc.sqrt();
            (
                [(tr / 2.0 + r, 0.0), (tr / 2.0 - r, 0.0)],
                RestPointKind::Hyperbolic,
            )
        } else {
            let r = (-disc).sqrt();
            ([(tr / 2.0, r), (tr / 2.0, -r)], RestPointKind::Elliptic)
        };
        points.push(RestPoint {
            theta,
            x,
            eigenvalues,
            kind,
        });
    }
    // Verification grid: every small-|Z| cell must collapse to one of the two.
    let mut found = points.len();
    let grid_n = 64;
    for i in 0..grid_n {
        for jx in 0..grid_n {
            let theta =
                c.theta_star + c.half_width * (2.0 * i as f64 / (grid_n - 1) as f64 - 1.0) * 0.98;
            let x = l * jx as f64 / grid_n as f64;
            let (z1, z2) = field.components(theta, x);
            let scale = form.epsilon * (TAU / l) + c.delta2_accel.abs() * c.half_width;
            if z1.abs() + z2.abs() < 1e-3 * scale {
                let near_known = points.iter().any(|p| {
                    let dxm = (x - p.x).rem_euclid(l);
                    let dxm = dxm.min(l - dxm);
                    (theta - p.theta).abs() < 0.05 * c.half_width && dxm < 0.05 * l
                });
                if !near_known {
                    found += 1;
                }
            }
        }
    }
    if found != 2 {
        return Err(PerturbationError::ExtraRestPoints { found });
    }
    Ok(points)
}

/// Transverse indices of the two surviving orbits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurvivingIndices {
    pub mu_max: i64,
    pub mu_min: i64,
}

/// Exact linearization of the full field in the symplectic frame along each
/// surviving orbit, fed through the symplectic-path index machinery.
pub fn surviving_orbit_indices(form: &PerturbedForm) -> Result<SurvivingIndices> {
    let c = &form.coords;
    let l = c.l_period;
    let mut mu = [0i64; 2];
    for (slot, x0) in [(0usize, 0.0), (1usize, l / 2.0)] {
        // Finite-difference the frame-projected transverse linearization.
        // Coordinates: (α, w) = (δθ, f δx); the orbit sits at (θ*, x0).
        let h = 1e-6;
        let (f0, _, _) = form.f_eps(c.theta_star, x0);
        let d_xtheta_dx = {
            let (a, _, _) = form.reeb_components(c.theta_star, x0 + h);
            let (b, _, _) = form.reeb_components(c.theta_star, x0 - h);
            (a - b) / (2.0 * h)
        };
        let d_xx_dtheta = {
            let (_, a, _) = form.reeb_components(c.theta_star + h, x0);
            let (_, b, _) = form.reeb_components(c.theta_star - h, x0);
            (a - b) / (2.0 * h)
        };
        // d/dt (α, w) = [[0, a12], [a21, 0]] with a12 = ∂_x X^θ / f and
        // a21 = f ∂_θ X^x.
        let a12 = d_xtheta_dx / f0;
        let a21 = f0 * d_xx_dtheta;
        let period = c.t_period * f0;
        let a = Matrix2::new(0.0, a12, a21, 0.0);
        let s = -sympath::mat_i() * a * period;
        let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
        let s = Matrix2::new(s[(0, 0)], off, off, s[(1, 1)]);
        let gen = HamiltonianLoop::constant(s)?;
        let path = sympath::evolve_path(&gen, 1, 1e-11)?;
        mu[slot] = sympath::cz_index_geometric(&path)?;
    }
    let out = SurvivingIndices {
        mu_max: mu[0],
        mu_min: mu[1],
    };
    if out.mu_max - out.mu_min != 1 {
        return Err(PerturbationError::ConsistencyFailure(format!(
            "μ(P_max) - μ(P_min) = {} - {} != 1",
            out.mu_max, out.mu_min
        )));
    }
    Ok(out)
}

/// One heteroclinic of the reduced gradient flow `x' = (-T/f_ε)'(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct GradientCylinder {
    /// Initial condition `x(0)`.
    pub x_start: f64,
    /// Samples `(s, x(s), a(s))` with `a(s) = T ∫_0^s f_ε(x(r)) dr`.
    pub samples: Vec<(f64, f64, f64)>,
    /// Limit of `x` as `s -> +∞` (modulo `L`).
    pub forward_limit: f64,
    /// Limit of `x` as `s -> -∞`.
    pub backward_limit: f64,
    pub monotone: bool,
    /// Endpoint residuals `|x(±S) - limit|`.
    pub residuals: (f64, f64),
}

/// Integrate the two gradient cylinders connecting the circle `x = L/2`
/// (minimum of `-1/f_ε`) to `x = 0` (the maximum).
pub fn gradient_cylinders(form: &PerturbedForm) -> Result<Vec<GradientCylinder>> {
    let c = &form.coords;
    let (l, t, eps) = (c.l_period, c.t_period, form.epsilon);
    let w = TAU / l;
    // On the middle third of I the bump is 1: f depends on x alone and
    // x' = T f_x / f² vanishes exactly at x = 0 and x = L/2.
    let rhs = |x: f64| {
        let cx = (w * x).cos();
        let sx = (w * x).sin();
        let f = 1.0 + eps * cx;
        -t * eps * w * sx / (f * f)
    };
    for j in 1..256 {
        let x = l * j as f64 / 256.0;
        if (x - l / 2.0).abs() > 1e-9 && rhs(x).abs() < 1e-14 {
            return Err(PerturbationError::ConsistencyFailure(format!(
                "reduced gradient flow has an unexpected zero at x={x}"
            )));
        }
    }
    let mut out = Vec::new();
    for (x_start, fwd_limit, bwd_limit) in [(l / 4.0, 0.0, l / 2.0), (3.0 * l / 4.0, l, l / 2.0)] {
        let mut head: Vec<(f64, f64, f64)> = Vec::new();
        let mut tail = vec![(0.0, x_start, 0.0)];
        let mut monotone = true;
        let mut residuals = (f64::NAN, f64::NAN);
        for dir in [1.0f64, -1.0] {
            let limit = if dir > 0.0 { fwd_limit } else { bwd_limit };
            let mut s = 0.0;
            let mut y = [x_start, 0.0];
            let mut h = dir * 0.05 * l / (t * eps * w);
            let mut prev_x = x_start;
            let mut guard = 0usize;
            while (y[0] - limit).abs() > 1e-8 {
                guard += 1;
                if guard > 2_000_000 {
                    return Err(PerturbationError::ConsistencyFailure(
                        "gradient cylinder failed to approach its limit".into(),
                    ));
                }
                let mut f2 = |_s: f64, y: &[f64; 2]| {
                    let fx = 1.0 + eps * (w * y[0]).cos();
                    [rhs(y[0]), t * fx]
                };
                let step = dp54_step(&mut f2, s, h, &y);
                if step.err > 1e-12 {
                    h *= 0.5;
                    continue;
                }
                s += h;
                y = step.y;
                if step.err < 1e-14 {
                    h *= 1.5;
                }
                if dir > 0.0 {
                    if (y[0] - prev_x) * (limit - x_start).signum() < 0.0 {
                        monotone = false;
                    }
                    prev_x = y[0];
                    tail.push((s, y[0], y[1]));
                } else {
                    head.push((s, y[0], y[1]));
                }
            }
            if dir > 0.0 {
                residuals.0 = (y[0] - limit).abs();
            } else {
                residuals.1 = (y[0] - limit).abs();
            }
        }
        head.reverse();
        head.extend(tail);
        out.push(GradientCylinder {
            x_start,
            samples: head,
            forward_limit: fwd_limit.rem_euclid(l),
            backward_limit: bwd_limit,
            monotone,
            residuals,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelforms::{build_model, locate_torus};
    use crate::twistcone::HomotopyClass;

    const THETA0: f64 = 0.4142;
    const THETA1: f64 = 0.7321;

    fn setup(p: i64, q: i64) -> (crate::modelforms::ModelForm, TorusCoordinates) {
        let form = build_model(THETA0, THETA1).unwrap();
        let torus = locate_torus(&form, HomotopyClass::new(p, q)).unwrap();
        let coords = adapted_coordinates(&form, &torus).unwrap();
        (form, coords)
    }

    fn eps_cap(c: &TorusCoordinates) -> f64 {
        1e-2 * 1.0f64
            .min(c.delta2_accel.abs())
            .min(c.half_width * c.half_width)
    }

    #[test]
    fn identity_jet_holds() {
        let (_, c) = setup(1, 1);
        let jet = c.delta_jet(c.theta_star);
        assert!(jet[0].x.abs() < 1e-9);
        assert!((jet[0].y - 1.0).abs() < 1e-9);
        assert!((jet[1].x - 1.0).abs() < 1e-9);
        assert!(jet[1].y.abs() < 1e-9);
        assert!(c.delta2_accel.abs() > 1e-6);
    }

    #[test]
    fn delta2_accel_matches_finite_difference() {
        let (_, c) = setup(1, 2);
        let fd =
            (c.delta2(c.theta_star + 1e-4) + c.delta2(c.theta_star - 1e-4) - 2.0) / 1e-8;
        assert!((fd - c.delta2_accel).abs() < 1e-2 * c.delta2_accel.abs().max(1.0));
    }

    #[test]
    fn reduced_field_vanishes_at_rest_points() {
        let (_, c) = setup(1, 1);
        let eps = 0.5 * eps_cap(&c);
        let form = PerturbedForm::new(c, eps).unwrap();
        let field = reduced_field(&form);
        let l = form.coords.l_period;
        let ts = form.coords.theta_star;
        for x in [0.0, l / 2.0] {
            let (z1, z2) = field.components(ts, x);
            assert!(z1.abs() < 1e-14 && z2.abs() < 1e-14);
        }
        // Z^θ vanishes identically on {x=0} and {x=L/2}.
        for dtheta in [-0.3, 0.1, 0.25] {
            let (z1, _) = field.components(ts + dtheta * form.coords.half_width, 0.0);
            assert!(z1.abs() < 1e-15);
            let (z1, _) = field.components(ts + dtheta * form.coords.half_width, l / 2.0);
            assert!(z1.abs() < 1e-15);
        }
        // Z^θ odd in x about x = 0.
        let (zp, _) = field.components(ts, 0.2 * l);
        let (zm, _) = field.components(ts, -0.2 * l);
        assert!((zp + zm).abs() < 1e-14);
    }

    #[test]
    fn unperturbed_reduction() {
        // ε -> 0: Z^θ ≡ 0 and Z^x = -Δ2'(θ).
        let (_, c) = setup(1, 1);
        let eps = 1e-12;
        // Structural check below the constructor bound.
        let form = PerturbedForm {
            epsilon: eps,
            epsilon_max: eps,
            coords: c,
        };
        let field = reduced_field(&form);
        let theta = form.coords.theta_star + 0.4 * form.coords.half_width;
        let (z1, z2) = field.components(theta, 0.3 * form.coords.l_period);
        let jet = form.coords.delta_jet(theta);
        assert!(z1.abs() < 1e-10);
        assert!((z2 + jet[1].y).abs() < 1e-9);
    }

    #[test]
    fn reduced_field_matches_full_field() {
        let (_, c) = setup(1, 1);
        let eps = 0.5 * eps_cap(&c);
        let form = PerturbedForm::new(c, eps).unwrap();
        let field = reduced_field(&form);
        let (lo, hi) = form.coords.interval();
        let l = form.coords.l_period;
        for i in 0..100 {
            for j in 0..100 {
                let theta = lo + (hi - lo) * (i as f64 + 0.5) / 100.0;
                let x = l * j as f64 / 100.0;
                let (xt, xx, _) = form.reeb_components(theta, x);
                let (f, _, _) = form.f_eps(theta, x);
                let det = form.coords.delta_det(theta);
                let (z1, z2) = field.components(theta, x);
                assert!((f * f * det * xt - z1).abs() < 1e-10, "θ={theta} x={x}");
                assert!((f * f * det * xx - z2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rest_point_eigenvalues_match_characteristic_equations() {
        let (_, c) = setup(1, 1);
        let d2acc = c.delta2_accel;
        let l = c.l_period;
        let eps = 0.1 * eps_cap(&c);
        let form = PerturbedForm::new(c, eps).unwrap();
        let field = reduced_field(&form);
        let pts = rest_points_and_linearization(&field).unwrap();
        assert_eq!(pts.len(), 2);
        let expect = (eps * (1.0 + eps)).sqrt() * (TAU / l) * d2acc.abs().sqrt();
        // With Δ2'' > 0: P_max at x=0 is a real pair, P_min at x=L/2 is
        // imaginary; roles swap for the mirrored sign.
        let (hyp, ell) = if d2acc > 0.0 {
            (&pts[0], &pts[1])
        } else {
            (&pts[1], &pts[0])
        };
        assert_eq!(hyp.kind, RestPointKind::Hyperbolic);
        assert_eq!(ell.kind, RestPointKind::Elliptic);
        let got = hyp.eigenvalues[0].0.abs();
        assert!((got - expect).abs() / expect < 0.05, "{got} vs {expect}");
        let got_min = ell.eigenvalues[0].1.abs();
        let expect_min = (eps * (1.0 - eps)).sqrt() * (TAU / l) * d2acc.abs().sqrt();
        assert!((got_min - expect_min).abs() / expect_min < 0.05);
    }

    #[test]
    fn eigenvalue_sqrt_epsilon_scaling() {
        let (_, c) = setup(1, 1);
        let eps1 = 0.4 * eps_cap(&c);
        let eps2 = eps1 / 4.0;
        let f1 = PerturbedForm::new(c.clone(), eps1).unwrap();
        let f2 = PerturbedForm::new(c, eps2).unwrap();
        let m1 = rest_points_and_linearization(&reduced_field(&f1)).unwrap();
        let m2 = rest_points_and_linearization(&reduced_field(&f2)).unwrap();
        for (a, b) in m1.iter().zip(&m2) {
            let ma = (a.eigenvalues[0].0.powi(2) + a.eigenvalues[0].1.powi(2)).sqrt();
            let mb = (b.eigenvalues[0].0.powi(2) + b.eigenvalues[0].1.powi(2)).sqrt();
            assert!((ma / mb - 2.0).abs() < 0.02, "sqrt-ε law: {}", ma / mb);
        }
    }

    #[test]
    fn epsilon_bound_enforced() {
        let (_, c) = setup(1, 1);
        let cap = eps_cap(&c);
        assert!(matches!(
            PerturbedForm::new(c, 2.0 * cap),
            Err(PerturbationError::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn surviving_indices_difference_one() {
        let (_, c) = setup(1, 1);
        let d2acc = c.delta2_accel;
        let eps = 0.1 * eps_cap(&c);
        let form = PerturbedForm::new(c, eps).unwrap();
        let idx = surviving_orbit_indices(&form).unwrap();
        if d2acc > 0.0 {
            assert_eq!((idx.mu_max, idx.mu_min), (0, -1));
        } else {
            assert_eq!((idx.mu_max, idx.mu_min), (1, 0));
        }
    }

    #[test]
    fn gradient_cylinders_connect_extrema() {
        let (_, c) = setup(1, 1);
        let l = c.l_period;
        let t = c.t_period;
        let eps = 0.8 * eps_cap(&c);
        let form = PerturbedForm::new(c, eps).unwrap();
        let cyls = gradient_cylinders(&form).unwrap();
        assert_eq!(cyls.len(), 2);
        for cyl in &cyls {
            assert!(cyl.monotone);
            assert!(cyl.residuals.0 < 1e-8 && cyl.residuals.1 < 1e-8);
            assert!((cyl.backward_limit - l / 2.0).abs() < 1e-12);
            // a(s) - T(1±ε)s stays bounded on the matching end.
            let (s_end, _, a_end) = *cyl.samples.last().unwrap();
            let (s_begin, _, a_begin) = cyl.samples[0];
            assert!((a_end - t * (1.0 + eps) * s_end).abs() < 4.0 * t);
            assert!((a_begin - t * (1.0 - eps) * s_begin).abs() < 4.0 * t);
        }
    }
}
