//! Conley-Zehnder index machinery for paths in `Sp(1)` generated by a
//! 1-periodic symmetric Hamiltonian.
//!
//! A loop of symmetric 2x2 matrices `S(t)` generates the path `φ' = iSφ`,
//! `φ(0) = I`. The index of a nondegenerate path is computed two independent
//! ways: geometrically from the winding interval of transported directions,
//! and spectrally from the extremal eigenvalue windings of the first-order
//! operator `L = -i d/dt - S` on loops. Iteration laws, rotation numbers and
//! the mean index tie the two together.

use crate::numerics::{golden_min, rk4_step, unwrap_near, TAU};
use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// `i` as a real 2x2 matrix.
pub fn mat_i() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

#[derive(Debug, thiserror::Error)]
pub enum SymPathError {
    #[error("generator sample at t={t} is not symmetric (|S01-S10|={defect:.3e})")]
    NonSymmetricGenerator { t: f64, defect: f64 },
    #[error("generator is not 1-periodic (|S(0)-S(1)|={defect:.3e})")]
    NonPeriodicGenerator { defect: f64 },
    #[error("path integration failed to reach tolerance {tol:.3e}")]
    IntegrationFailure { tol: f64 },
    #[error("degenerate path: index undefined within tolerance")]
    DegeneratePath,
    #[error("iterate k={k} is degenerate (root of unity in the spectrum)")]
    IterateDegeneracy { k: u32 },
    #[error("spectral solve did not stabilize to {tol:.1e}")]
    SpectralInstability { tol: f64 },
    #[error("inconsistency detected: {0}")]
    ConsistencyFailure(String),
}

type Result<T> = std::result::Result<T, SymPathError>;

/// 1-periodic loop of symmetric 2x2 matrices; the Hamiltonian generator.
#[derive(Clone)]
pub struct HamiltonianLoop {
    eval: Arc<dyn Fn(f64) -> Matrix2<f64> + Send + Sync>,
    pub sample_count: usize,
}

impl HamiltonianLoop {
    /// Wrap a closure defined on one period. Symmetry is checked on
    /// `sample_count` points to 1e-12 and periodicity at the seam.
    pub fn new(
        eval: impl Fn(f64) -> Matrix2<f64> + Send + Sync + 'static,
        sample_count: usize,
    ) -> Result<Self> {
        let loop_ = Self {
            eval: Arc::new(eval),
            sample_count: sample_count.max(16),
        };
        loop_.validate()?;
        Ok(loop_)
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.sample_count {
            let t = j as f64 / self.sample_count as f64;
            let s = (self.eval)(t);
            let defect = (s[(0, 1)] - s[(1, 0)]).abs();
            if defect > 1e-12 {
                return Err(SymPathError::NonSymmetricGenerator { t, defect });
            }
        }
        let defect = ((self.eval)(0.0) - (self.eval)(1.0)).norm();
        if defect > 1e-10 {
            return Err(SymPathError::NonPeriodicGenerator { defect });
        }
        Ok(())
    }

    /// Evaluate at any real time through the periodic extension.
    pub fn eval(&self, t: f64) -> Matrix2<f64> {
        (self.eval)(t.rem_euclid(1.0))
    }

    /// Constant symmetric generator.
    pub fn constant(s: Matrix2<f64>) -> Result<Self> {
        Self::new(move |_| s, 16)
    }

    /// Rigid rotation by angle `2πα` over one period: `S = 2πα I`.
    pub fn rotation(alpha: f64) -> Self {
        let s = Matrix2::identity() * (TAU * alpha);
        Self::constant(s).expect("constant generator is always valid")
    }

    /// Generator whose time-1 map is positive hyperbolic with `l` in the
    /// winding interval: a rotating frame at rate `2πl` around the shear
    /// `S0 = [[0,a],[a,0]]`.
    pub fn positive_hyperbolic(a: f64, l: i64) -> Self {
        Self::hyperbolic_family(a, l as f64)
    }

    /// Negative hyperbolic with `l + 1/2` in the winding interval.
    pub fn negative_hyperbolic(a: f64, l: i64) -> Self {
        Self::hyperbolic_family(a, l as f64 + 0.5)
    }

    fn hyperbolic_family(a: f64, rate: f64) -> Self {
        let omega = TAU * rate;
        Self::new(
            move |t| {
                let (sn, cs) = (omega * t).sin_cos();
                let r = Matrix2::new(cs, -sn, sn, cs);
                let s0 = Matrix2::new(0.0, a, a, 0.0);
                r * s0 * r.transpose() + Matrix2::identity() * omega
            },
            64,
        )
        .expect("hyperbolic family generator is always valid")
    }

    /// Trigonometric polynomial generator. Each entry is given as
    /// `c[0] + sum_k c[2k-1] cos(2πkt) + c[2k] sin(2πkt)`.
    pub fn trig(s11: Vec<f64>, s12: Vec<f64>, s22: Vec<f64>) -> Result<Self> {
        let entry = |c: &[f64], t: f64| {
            let mut v = if c.is_empty() { 0.0 } else { c[0] };
            let mut k = 1;
            let mut idx = 1;
            while idx < c.len() {
                v += c[idx] * (TAU * k as f64 * t).cos();
                if idx + 1 < c.len() {
                    v += c[idx + 1] * (TAU * k as f64 * t).sin();
                }
                idx += 2;
                k += 1;
            }
            v
        };
        Self::new(
            move |t| {
                Matrix2::new(
                    entry(&s11, t),
                    entry(&s12, t),
                    entry(&s12, t),
                    entry(&s22, t),
                )
            },
            64,
        )
    }

    /// Piecewise-linear periodic interpolation of samples `(t, S11, S12, S22)`
    /// with `t` in `[0, 1)`.
    pub fn from_samples(mut rows: Vec<(f64, f64, f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SymPathError::ConsistencyFailure(
                "empty generator sample table".into(),
            ));
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let n = rows.len();
        Self::new(
            move |t| {
                let t = t.rem_euclid(1.0);
                let hi = rows.partition_point(|r| r.0 <= t);
                let (lo, hi, wrap) = if hi == 0 {
                    (n - 1, 0, true)
                } else if hi == n {
                    (n - 1, 0, true)
                } else {
                    (hi - 1, hi, false)
                };
                let (t0, t1) = if wrap {
                    (rows[lo].0, rows[hi].0 + 1.0)
                } else {
                    (rows[lo].0, rows[hi].0)
                };
                let tt = if wrap && t < rows[lo].0 { t + 1.0 } else { t };
                let w = if t1 > t0 { (tt - t0) / (t1 - t0) } else { 0.0 };
                let lerp = |a: f64, b: f64| a + w * (b - a);
                let (a, b) = (&rows[lo], &rows[hi]);
                Matrix2::new(
                    lerp(a.1, b.1),
                    lerp(a.2, b.2),
                    lerp(a.2, b.2),
                    lerp(a.3, b.3),
                )
            },
            n.max(64),
        )
    }

    /// Periodic trigonometric interpolation of uniform samples (one period,
    /// endpoint excluded). Even sample counts drop the last sample.
    pub fn from_uniform_samples(mut samples: Vec<Matrix2<f64>>) -> Result<Self> {
        if samples.len() % 2 == 0 {
            samples.pop();
        }
        let m = samples.len();
        assert!(m >= 3, "need at least 3 samples");
        Self::new(
            move |t: f64| {
                // Dirichlet kernel for odd sample counts: exact at the nodes,
                // spectrally accurate in between.
                let mut acc = Matrix2::zeros();
                for (j, s) in samples.iter().enumerate() {
                    let d = t - j as f64 / m as f64;
                    let dm = (d * m as f64).rem_euclid(1.0);
                    let w = if dm < 1e-13 || dm > 1.0 - 1e-13 {
                        let dr = d.rem_euclid(1.0);
                        if dr < 0.5 / m as f64 || dr > 1.0 - 0.5 / m as f64 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (PI * m as f64 * d).sin() / (m as f64 * (PI * d).sin())
                    };
                    acc += s * w;
                }
                acc
            },
            m,
        )
    }

    /// Generator of the k-th iterate path: `S_k(t) = k S(kt)`.
    pub fn iterate(&self, k: u32) -> HamiltonianLoop {
        let inner = self.eval.clone();
        HamiltonianLoop {
            eval: Arc::new(move |t| inner((k as f64 * t).rem_euclid(1.0)) * k as f64),
            sample_count: self.sample_count * k as usize,
        }
    }
}

/// A sampled path in `Sp(1)` on `[0, k]`, `φ(0) = I`, with uniform time grid.
#[derive(Clone)]
pub struct SymplecticPath {
    pub times: Vec<f64>,
    pub values: Vec<Matrix2<f64>>,
    pub k: u32,
}

impl SymplecticPath {
    /// Final matrix of the path (the period map for `k = 1`).
    pub fn end(&self) -> Matrix2<f64> {
        *self.values.last().expect("path has samples")
    }

    /// Build from raw samples; validates `φ(0) = I` and `det φ = 1`.
    pub fn from_values(times: Vec<f64>, values: Vec<Matrix2<f64>>, k: u32) -> Result<Self> {
        let path = Self { times, values, k };
        if (path.values[0] - Matrix2::identity()).norm() > 1e-9 {
            return Err(SymPathError::ConsistencyFailure(
                "path does not start at the identity".into(),
            ));
        }
        for m in &path.values {
            if (m.determinant() - 1.0).abs() > 1e-9 {
                return Err(SymPathError::ConsistencyFailure(
                    "path sample is not symplectic".into(),
                ));
            }
        }
        Ok(path)
    }

    /// Pointwise inverse path `t -> φ(t)^{-1}`.
    pub fn pointwise_inverse(&self) -> SymplecticPath {
        let values = self
            .values
            .iter()
            .map(|m| {
                // Explicit SL(2) inverse.
                Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
            })
            .collect();
        SymplecticPath {
            times: self.times.clone(),
            values,
            k: self.k,
        }
    }
}

fn rhs(s: &Matrix2<f64>, phi: &Matrix2<f64>) -> Matrix2<f64> {
    mat_i() * s * phi
}

fn integrate_period(gen: &HamiltonianLoop, steps: usize) -> Vec<Matrix2<f64>> {
    let h = 1.0 / steps as f64;
    let mut phi = Matrix2::identity();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(phi);
    for j in 0..steps {
        let t = j as f64 * h;
        let mut f = |tt: f64, y: &[f64; 4]| {
            let m = Matrix2::new(y[0], y[1], y[2], y[3]);
            let d = rhs(&gen.eval(tt), &m);
            [d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]]
        };
        let y = [phi[(0, 0)], phi[(0, 1)], phi[(1, 0)], phi[(1, 1)]];
        let y = rk4_step(&mut f, t, h, &y);
        phi = Matrix2::new(y[0], y[1], y[2], y[3]);
        // Snap back onto SL(2): divide by sqrt(det).
        let det = phi.determinant();
        phi /= det.sqrt();
        out.push(phi);
    }
    out
}

/// Integrate `φ' = iSφ` over `[0, k]`, resolving the step count until the
/// period map is stable below `tol`, then extending by `φ(t+1) = φ(t) φ(1)`.
pub fn evolve_path(gen: &HamiltonianLoop, k: u32, tol: f64) -> Result<SymplecticPath> {
    assert!(k >= 1, "iterate count must be positive");
    assert!(tol > 0.0, "tolerance must be positive");
    gen.validate()?;
    // Step count must also keep the per-step direction rotation well under
    // a quarter turn for downstream angle tracking.
    let mut norm_max: f64 = 0.0;
    for j in 0..256 {
        norm_max = norm_max.max(gen.eval(j as f64 / 256.0).norm());
    }
    let mut steps = 256usize.max((8.0 * norm_max).ceil() as usize);
    let mut base = integrate_period(gen, steps);
    loop {
        if steps > (1 << 24) {
            return Err(SymPathError::IntegrationFailure { tol });
        }
        let finer = integrate_period(gen, steps * 2);
        let err = (finer[finer.len() - 1] - base[base.len() - 1]).norm();
        if err < tol {
            base = finer;
            steps *= 2;
            break;
        }
        base = finer;
        steps *= 2;
    }
    let mut times = Vec::with_capacity(steps * k as usize + 1);
    let mut values = Vec::with_capacity(steps * k as usize + 1);
    let period_map = base[base.len() - 1];
    let mut power = Matrix2::identity();
    for m in 0..k {
        for (j, phi) in base.iter().enumerate().take(if m + 1 == k {
            steps + 1
        } else {
            steps
        }) {
            times.push(m as f64 + j as f64 / steps as f64);
            values.push(phi * power);
        }
        power = period_map * power;
    }
    Ok(SymplecticPath { times, values, k })
}

/// Winding interval `I(φ) = { Δ(s) : s in [0,1] }` in full turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingInterval {
    pub lo: f64,
    pub hi: f64,
}

impl WindingInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Monotone lift of the direction-angle action of a fixed `Sp(1)` matrix:
/// `g(s)` is the continuous angle of `M e^{i 2π s}`, increasing by 2π per turn.
struct EndAngleMap {
    breaks: Vec<f64>,
    lifts: Vec<f64>,
    m: Matrix2<f64>,
}

impl EndAngleMap {
    fn build(m: Matrix2<f64>) -> Self {
        let raw_angle = |s: f64| {
            let v = m * Vector2::new((TAU * s).cos(), (TAU * s).sin());
            v.y.atan2(v.x)
        };
        let mut breaks = vec![0.0f64];
        let mut lifts = vec![raw_angle(0.0)];
        let n0 = 64;
        for j in 1..=n0 {
            let s = j as f64 / n0 as f64;
            let prev = *lifts.last().unwrap();
            breaks.push(s);
            lifts.push(unwrap_near(prev, raw_angle(s)));
        }
        // Refine until each interval carries less than half a radian so the
        // nearest-branch unwrap is unambiguous.
        let mut i = 0;
        while i + 1 < breaks.len() {
            if (lifts[i + 1] - lifts[i]).abs() > 0.5 && breaks[i + 1] - breaks[i] > 1e-13 {
                let mid = 0.5 * (breaks[i] + breaks[i + 1]);
                let lift = unwrap_near(lifts[i], raw_angle(mid));
                breaks.insert(i + 1, mid);
                lifts.insert(i + 1, lift);
            } else {
                i += 1;
            }
        }
        // The projective action of Sp(1)+ is an orientation preserving circle
        // map: the lift must end exactly one turn up.
        debug_assert!((lifts[lifts.len() - 1] - lifts[0] - TAU).abs() < 1e-6);
        Self { breaks, lifts, m }
    }

    /// Exact continuous lift at arbitrary `s` (periodic extension).
    fn eval(&self, s: f64) -> f64 {
        let turns = (s / 1.0).floor();
        let sf = s - turns;
        let idx = self
            .breaks
            .partition_point(|b| *b <= sf)
            .clamp(1, self.breaks.len() - 1)
            - 1;
        let w = if self.breaks[idx + 1] > self.breaks[idx] {
            (sf - self.breaks[idx]) / (self.breaks[idx + 1] - self.breaks[idx])
        } else {
            0.0
        };
        let guess = self.lifts[idx] + w * (self.lifts[idx + 1] - self.lifts[idx]);
        let v = self.m * Vector2::new((TAU * sf).cos(), (TAU * sf).sin());
        unwrap_near(guess, v.y.atan2(v.x)) + turns * TAU
    }
}

/// Angle variation along the whole path of the direction starting at angle 0.
fn track_delta_zero(path: &SymplecticPath) -> f64 {
    let mut prev = 0.0f64;
    let mut first = true;
    let mut start = 0.0;
    for m in &path.values {
        let v = m * Vector2::new(1.0, 0.0);
        let raw = v.y.atan2(v.x);
        if first {
            start = raw;
            prev = raw;
            first = false;
        } else {
            prev = unwrap_near(prev, raw);
        }
    }
    (prev - start) / TAU
}

/// The winding function `Δ(s)` of a path, evaluable at arbitrary `s`.
pub struct WindingFunction {
    map: EndAngleMap,
    offset: f64,
}

impl WindingFunction {
    pub fn build(path: &SymplecticPath) -> Self {
        let map = EndAngleMap::build(path.end());
        let delta0 = track_delta_zero(path);
        let g0 = map.eval(0.0);
        // Δ(s) = (g(s) - 2π s)/2π + offset, pinned by the full track at s=0.
        let offset = delta0 - g0 / TAU;
        Self { map, offset }
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.map.eval(s) - TAU * s) / TAU + self.offset
    }

    /// The lifted circle map `F(s) = s + Δ(s)` whose rotation number is the
    /// rotation number of the path.
    pub fn circle_map(&self, s: f64) -> f64 {
        s + self.eval(s)
    }
}

/// Compute `I(φ)` by scanning and refining the extremes of `Δ`.
pub fn winding_interval(path: &SymplecticPath) -> WindingInterval {
    let wf = WindingFunction::build(path);
    // Scan on the map breakpoints plus a uniform backbone.
    let mut svals: Vec<f64> = wf.map.breaks.clone();
    for j in 0..=128 {
        svals.push(j as f64 / 128.0);
    }
    svals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    svals.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let f: Vec<f64> = svals.iter().map(|s| wf.eval(*s)).collect();
    let n = svals.len();
    let refine = |sign: f64| -> f64 {
        let mut best = f64::INFINITY;
        // Refine around every discrete local minimum of sign*Δ.
        for i in 0..n {
            let fi = sign * f[i];
            let left_ok = i == 0 || sign * f[i - 1] >= fi;
            let right_ok = i + 1 == n || sign * f[i + 1] >= fi;
            if left_ok && right_ok {
                let a = if i == 0 { svals[0] - 1.0 / 128.0 } else { svals[i - 1] };
                let b = if i + 1 == n {
                    svals[n - 1] + 1.0 / 128.0
                } else {
                    svals[i + 1]
                };
                let s = golden_min(|s| sign * wf.eval(s), a, b, 1e-12);
                best = best.min(sign * wf.eval(s)).min(fi);
            }
        }
        sign * best
    };
    let lo = refine(1.0);
    let hi = refine(-1.0);
    WindingInterval {
        lo: lo.min(hi),
        hi: hi.max(lo),
    }
}

/// Orbit/path nondegeneracy decision: `det(φ(1) - I) = 2 - tr(φ(1))` in SL(2).
pub fn degeneracy_gap(path: &SymplecticPath) -> f64 {
    let m = path.end();
    (m - Matrix2::identity()).determinant().abs()
}

/// Geometric Conley-Zehnder index from the winding interval.
pub fn cz_index_geometric(path: &SymplecticPath) -> Result<i64> {
    let interval = winding_interval(path);
    cz_index_from_interval(path, &interval)
}

pub fn cz_index_from_interval(path: &SymplecticPath, interval: &WindingInterval) -> Result<i64> {
    const TOL: f64 = 1e-8;
    if degeneracy_gap(path) <= TOL {
        return Err(SymPathError::DegeneratePath);
    }
    let (lo, hi) = (interval.lo, interval.hi);
    if (lo - lo.round()).abs() <= TOL || (hi - hi.round()).abs() <= TOL {
        return Err(SymPathError::DegeneratePath);
    }
    let k = hi.floor();
    if lo < k && k < hi {
        Ok(2 * k as i64)
    } else {
        debug_assert_eq!(lo.floor(), hi.floor());
        Ok(2 * lo.floor() as i64 + 1)
    }
}

/// Spectral data of the asymptotic operator `L = -i d/dt - S`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralDecomposition {
    /// Sorted eigenvalues within the resolved winding window.
    pub eigenvalues: Vec<f64>,
    /// Winding of an eigenfunction for each eigenvalue, same order.
    pub windings: Vec<i64>,
    pub wind_minus: i64,
    pub wind_plus: i64,
    pub p: u8,
}

/// Periodic spectral differentiation matrix on `M` (odd) points, period 1.
fn diff_matrix(m: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m, m);
    for j in 0..m {
        for l in 0..m {
            if j != l {
                let k = j as isize - l as isize;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                d[(j, l)] = sign * PI / (PI * k as f64 / m as f64).sin();
            }
        }
    }
    d
}

struct SpectralSolve {
    eigenvalues: Vec<f64>,
    windings: Vec<i64>,
}

fn winding_of_samples(samples: &[(f64, f64)]) -> Option<i64> {
    let mut prev = 0.0;
    let mut start = 0.0;
    let mut max_step: f64 = 0.0;
    for (idx, (x, y)) in samples.iter().chain(samples.iter().take(1)).enumerate() {
        let r2 = x * x + y * y;
        if r2 < 1e-24 {
            return None;
        }
        let raw = y.atan2(*x);
        if idx == 0 {
            start = raw;
            prev = raw;
        } else {
            let next = unwrap_near(prev, raw);
            max_step = max_step.max((next - prev).abs());
            prev = next;
        }
    }
    if max_step > 1.2 {
        return None;
    }
    let turns = (prev - start) / TAU;
    Some(turns.round() as i64)
}

/// Trigonometric interpolation of complex samples onto a finer grid.
fn trig_upsample(samples: &[(f64, f64)], factor: usize) -> Vec<(f64, f64)> {
    let m = samples.len();
    let half = (m as isize - 1) / 2;
    // Direct DFT; m stays small enough that O(m^2) is irrelevant.
    let mut coeff = vec![(0.0f64, 0.0f64); m];
    for (ki, k) in (-half..=half).enumerate() {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, (x, y)) in samples.iter().enumerate() {
            let ph = -TAU * k as f64 * j as f64 / m as f64;
            let (s, c) = ph.sin_cos();
            re += x * c - y * s;
            im += x * s + y * c;
        }
        coeff[ki] = (re / m as f64, im / m as f64);
    }
    let n = m * factor;
    (0..n)
        .map(|j| {
            let t = j as f64 / n as f64;
            let mut x = 0.0;
            let mut y = 0.0;
            for (ki, k) in (-half..=half).enumerate() {
                let ph = TAU * k as f64 * t;
                let (s, c) = ph.sin_cos();
                let (re, im) = coeff[ki];
                x += re * c - im * s;
                y += re * s + im * c;
            }
            (x, y)
        })
        .collect()
}

fn spectral_solve(gen: &HamiltonianLoop, m: usize) -> SpectralSolve {
    let d = diff_matrix(m);
    let n = 2 * m;
    let mut a = DMatrix::zeros(n, n);
    // J = -i.
    let jm = [[0.0, 1.0], [-1.0, 0.0]];
    for j in 0..m {
        let s = gen.eval(j as f64 / m as f64);
        for l in 0..m {
            let djl = d[(j, l)];
            if djl != 0.0 {
                for aa in 0..2 {
                    for bb in 0..2 {
                        a[(2 * j + aa, 2 * l + bb)] += jm[aa][bb] * djl;
                    }
                }
            }
        }
        for aa in 0..2 {
            for bb in 0..2 {
                a[(2 * j + aa, 2 * j + bb)] -= s[(aa, bb)];
            }
        }
    }
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b): (f64, f64) = (eig.eigenvalues[i], eig.eigenvalues[j]);
        a.partial_cmp(&b).unwrap()
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut windings = Vec::with_capacity(n);
    for &idx in &order {
        eigenvalues.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        let samples: Vec<(f64, f64)> = (0..m).map(|j| (col[2 * j], col[2 * j + 1])).collect();
        let w = winding_of_samples(&samples)
            .or_else(|| winding_of_samples(&trig_upsample(&samples, 4)))
            .unwrap_or(i64::MAX);
        windings.push(w);
    }
    SpectralSolve {
        eigenvalues,
        windings,
    }
}

/// Convention boundary for the sign of an eigenvalue: anything above
/// `-SIGN_TOL` is counted on the nonnegative side.
const SIGN_TOL: f64 = 1e-9;

fn extract_decomposition(solve: &SpectralSolve, window: i64) -> Option<SpectralDecomposition> {
    let n = solve.eigenvalues.len();
    let mut idx_wm = None;
    let mut idx_wp = None;
    for i in 0..n {
        if solve.eigenvalues[i] < -SIGN_TOL {
            idx_wm = Some(i);
        } else if idx_wp.is_none() {
            idx_wp = Some(i);
        }
    }
    let (im, ip) = (idx_wm?, idx_wp?);
    let wind_minus = solve.windings[im];
    let wind_plus = solve.windings[ip];
    if wind_minus == i64::MAX || wind_plus == i64::MAX {
        return None;
    }
    let lo_w = wind_minus - window;
    let hi_w = wind_minus + window;
    let mut eigenvalues = Vec::new();
    let mut windings = Vec::new();
    for i in 0..n {
        let w = solve.windings[i];
        if w == i64::MAX {
            continue;
        }
        if w >= lo_w && w <= hi_w {
            eigenvalues.push(solve.eigenvalues[i]);
            windings.push(w);
        }
    }
    // Exactly two eigenvalues per covered winding level.
    for w in lo_w..=hi_w {
        if windings.iter().filter(|&&x| x == w).count() != 2 {
            return None;
        }
    }
    // Windings monotone along the eigenvalue order.
    for i in 1..windings.len() {
        if windings[i] < windings[i - 1] {
            return None;
        }
    }
    let p = (wind_plus - wind_minus) as u8;
    if p > 1 {
        return None;
    }
    Some(SpectralDecomposition {
        eigenvalues,
        windings,
        wind_minus,
        wind_plus,
        p,
    })
}

/// Eigenvalues and eigenvector windings of `L = -i d/dt - S` by Fourier
/// collocation, with the resolution doubled until the reported window is
/// stable to 1e-7.
pub fn asymptotic_spectrum(gen: &HamiltonianLoop, window: i64) -> Result<SpectralDecomposition> {
    assert!(window >= 1, "window must cover at least one level");
    // Resolution scales with the winding levels the generator can reach:
    // eigenfunctions near level w oscillate like e^{2πiwt}.
    let mut norm_max: f64 = 0.0;
    for j in 0..128 {
        norm_max = norm_max.max(gen.eval(j as f64 / 128.0).norm());
    }
    let mut m = (33usize.max(4 * (norm_max / TAU).ceil() as usize + 2 * window as usize + 9)) | 1;
    let mut prev: Option<SpectralDecomposition> = None;
    for _ in 0..6 {
        let solve = spectral_solve(gen, m);
        if let Some(dec) = extract_decomposition(&solve, window) {
            if let Some(p) = &prev {
                if p.eigenvalues.len() == dec.eigenvalues.len() {
                    let drift = p
                        .eigenvalues
                        .iter()
                        .zip(&dec.eigenvalues)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    if drift < 1e-7 && p.wind_minus == dec.wind_minus {
                        return Ok(dec);
                    }
                }
            }
            prev = Some(dec);
        }
        m = (2 * m) | 1;
    }
    Err(SymPathError::SpectralInstability { tol: 1e-7 })
}

/// Spectral Conley-Zehnder index `μ̃ = 2 wind⁻ + p`.
pub fn cz_index_analytic(spec: &SpectralDecomposition) -> i64 {
    2 * spec.wind_minus + spec.p as i64
}

/// Path type classified from the period map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitType {
    Elliptic,
    PositiveHyperbolic,
    NegativeHyperbolic,
    Degenerate,
}

pub fn classify_end(path: &SymplecticPath) -> OrbitType {
    let tr = path.end().trace();
    if (tr - 2.0).abs() <= 1e-8 {
        OrbitType::Degenerate
    } else if tr.abs() < 2.0 {
        OrbitType::Elliptic
    } else if tr > 2.0 {
        OrbitType::PositiveHyperbolic
    } else {
        OrbitType::NegativeHyperbolic
    }
}

/// Combined index report computed over both routes.
#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub mu_geometric: i64,
    pub mu_analytic: i64,
    pub interval: WindingInterval,
    pub spectrum: SpectralDecomposition,
    pub orbit_type: OrbitType,
}

pub fn index_report(gen: &HamiltonianLoop) -> Result<IndexReport> {
    let path = evolve_path(gen, 1, 1e-10)?;
    let interval = winding_interval(&path);
    let mu_geometric = cz_index_from_interval(&path, &interval)?;
    let spectrum = asymptotic_spectrum(gen, 1)?;
    let mu_analytic = cz_index_analytic(&spectrum);
    let orbit_type = classify_end(&path);
    if orbit_type != OrbitType::Degenerate && mu_geometric != mu_analytic {
        return Err(SymPathError::ConsistencyFailure(format!(
            "geometric index {mu_geometric} disagrees with spectral index {mu_analytic}"
        )));
    }
    Ok(IndexReport {
        mu_geometric,
        mu_analytic,
        interval,
        spectrum,
        orbit_type,
    })
}

/// Rotation number estimate with a rigorous-style error bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub converged: bool,
}

/// Birkhoff average of `Δ` along the circle map `f(s) = s + Δ(s)`.
///
/// For a lift `F` of a circle homeomorphism, `|F^k(s) - s - kρ| <= 1`, so the
/// estimate after `k` iterates carries error bound `2/k` plus roundoff.
pub fn rotation_number_of_path(path: &SymplecticPath, k_max: u32) -> RotationEstimate {
    assert!(k_max >= 8, "need at least 8 iterates");
    let wf = WindingFunction::build(path);
    let iters = (k_max as usize).max(1 << 17);
    let mut s = 0.0f64;
    for _ in 0..iters {
        s = wf.circle_map(s);
    }
    let value = s / iters as f64;
    RotationEstimate {
        value,
        error_bound: 2.0 / iters as f64 + 1e-12,
        converged: true,
    }
}

pub fn rotation_number(gen: &HamiltonianLoop, k_max: u32) -> Result<RotationEstimate> {
    let path = evolve_path(gen, 1, 1e-11)?;
    Ok(rotation_number_of_path(&path, k_max))
}

/// Mean index `μ̄ = lim μ(φ^k)/k = 2ρ`.
pub fn mean_index(gen: &HamiltonianLoop, k_max: u32) -> Result<f64> {
    Ok(2.0 * rotation_number(gen, k_max)?.value)
}

/// Iterate-law classification of a nondegenerate period map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IterateLaw {
    /// Elliptic; `μ(φ^k) = 2 floor(kα) + 1`.
    Elliptic { alpha: f64 },
    /// Positive hyperbolic; `μ(φ^k) = 2kl`.
    PositiveHyperbolic { l: i64 },
    /// Negative hyperbolic; `μ(φ^k) = k(2l+1)`.
    NegativeHyperbolic { l: i64 },
}

impl IterateLaw {
    pub fn predicted_mu(&self, k: u32) -> i64 {
        let k = k as i64;
        match self {
            IterateLaw::Elliptic { alpha } => 2 * (k as f64 * alpha).floor() as i64 + 1,
            IterateLaw::PositiveHyperbolic { l } => 2 * k * l,
            IterateLaw::NegativeHyperbolic { l } => k * (2 * l + 1),
        }
    }

    /// Extremal windings of the iterate asymptotic operator.
    pub fn predicted_winds(&self, k: u32) -> (i64, i64) {
        let ki = k as i64;
        match self {
            IterateLaw::Elliptic { alpha } => {
                let f = (k as f64 * alpha).floor() as i64;
                (f, f + 1)
            }
            IterateLaw::PositiveHyperbolic { l } => (ki * l, ki * l),
            IterateLaw::NegativeHyperbolic { l } => {
                let half = k as f64 * (*l as f64 + 0.5);
                if k % 2 == 0 {
                    (half as i64, half as i64)
                } else {
                    (half.floor() as i64, half.floor() as i64 + 1)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterateRecord {
    pub k: u32,
    pub mu: i64,
    pub wind_minus: i64,
    pub wind_plus: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterateProfile {
    pub law: IterateLaw,
    pub records: Vec<IterateRecord>,
}

/// Classify `φ(1)` and return per-iterate indices and extremal windings,
/// verified against the closed-form iteration laws.
pub fn iterate_index_profile(gen: &HamiltonianLoop, k_max: u32) -> Result<IterateProfile> {
    let base = evolve_path(gen, 1, 1e-11)?;
    let tr = base.end().trace();
    let law = if tr.abs() < 2.0 - 1e-9 {
        let alpha0 = (tr / 2.0).acos() / TAU; // in (0, 1/2)
        for k in 1..=k_max {
            let d = (k as f64 * alpha0 - (k as f64 * alpha0).round()).abs();
            if d < 1e-8 {
                return Err(SymPathError::IterateDegeneracy { k });
            }
        }
        let rho = rotation_number_of_path(&base, 1 << 17).value;
        // The fractional part of the true rotation number is alpha0 or
        // 1 - alpha0; pick the branch nearest the Birkhoff estimate.
        let base_floor = rho.floor();
        let mut best = f64::NAN;
        for cand in [
            base_floor + alpha0,
            base_floor + 1.0 - alpha0,
            base_floor - alpha0,
            base_floor + 1.0 + alpha0,
        ] {
            if best.is_nan() || (cand - rho).abs() < (best - rho).abs() {
                best = cand;
            }
        }
        IterateLaw::Elliptic { alpha: best }
    } else if tr > 2.0 + 1e-9 {
        let iv = winding_interval(&base);
        let l = iv.hi.floor();
        if !(iv.lo <= l && l <= iv.hi) {
            return Err(SymPathError::ConsistencyFailure(
                "positive hyperbolic path without integer in its winding interval".into(),
            ));
        }
        IterateLaw::PositiveHyperbolic { l: l as i64 }
    } else if tr < -2.0 - 1e-9 {
        let iv = winding_interval(&base);
        let l = (iv.hi - 0.5).floor();
        if !(iv.lo - 1e-9 <= l + 0.5 && l + 0.5 <= iv.hi + 1e-9) {
            return Err(SymPathError::ConsistencyFailure(
                "negative hyperbolic path without half-integer in its winding interval".into(),
            ));
        }
        IterateLaw::NegativeHyperbolic { l: l as i64 }
    } else {
        return Err(SymPathError::IterateDegeneracy { k: 1 });
    };
    let mut records = Vec::new();
    for k in 1..=k_max {
        let path = evolve_path(gen, k, 1e-11)?;
        let mu = cz_index_geometric(&path)?;
        let spec = asymptotic_spectrum(&gen.iterate(k), 1)?;
        let rec = IterateRecord {
            k,
            mu,
            wind_minus: spec.wind_minus,
            wind_plus: spec.wind_plus,
        };
        if rec.mu != law.predicted_mu(k) {
            return Err(SymPathError::ConsistencyFailure(format!(
                "iterate k={k}: computed μ={} but the iteration law predicts {}",
                rec.mu,
                law.predicted_mu(k)
            )));
        }
        let (wm, wp) = law.predicted_winds(k);
        if rec.wind_minus != wm || rec.wind_plus != wp {
            return Err(SymPathError::ConsistencyFailure(format!(
                "iterate k={k}: windings ({}, {}) disagree with predicted ({}, {})",
                rec.wind_minus, rec.wind_plus, wm, wp
            )));
        }
        records.push(rec);
    }
    Ok(IterateProfile { law, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation_path(alpha: f64) -> SymplecticPath {
        evolve_path(&HamiltonianLoop::rotation(alpha), 1, 1e-11).unwrap()
    }

    #[test]
    fn diff_matrix_differentiates_trig() {
        let m = 17;
        let d = diff_matrix(m);
        let f: Vec<f64> = (0..m).map(|j| (TAU * j as f64 / m as f64).sin()).collect();
        for j in 0..m {
            let mut df = 0.0;
            for l in 0..m {
                df += d[(j, l)] * f[l];
            }
            let exact = TAU * (TAU * j as f64 / m as f64).cos();
            assert!((df - exact).abs() < 1e-9, "row {j}: {df} vs {exact}");
        }
    }

    #[test]
    fn constant_rotation_gives_rigid_path() {
        // S = π I over one period is rotation by angle πt.
        let path = rotation_path(0.5);
        let mid = path.values[path.values.len() / 2];
        let expect = Matrix2::new(
            (PI / 2.0).cos(),
            -(PI / 2.0).sin(),
            (PI / 2.0).sin(),
            (PI / 2.0).cos(),
        );
        assert!((mid - expect).norm() < 1e-9);
        let iv = winding_interval(&path);
        assert!((iv.lo - 0.5).abs() < 1e-10 && (iv.hi - 0.5).abs() < 1e-10);
    }

    #[test]
    fn zero_generator_is_identity_path() {
        let gen = HamiltonianLoop::constant(Matrix2::zeros()).unwrap();
        let path = evolve_path(&gen, 3, 1e-12).unwrap();
        for v in &path.values {
            assert!((v - Matrix2::identity()).norm() < 1e-12);
        }
        let iv = winding_interval(&path);
        assert!(iv.lo.abs() < 1e-12 && iv.hi.abs() < 1e-12);
    }

    #[test]
    fn shear_generator_matches_matrix_exponential() {
        // S = [[0,1],[1,0]] gives φ(t) = diag(e^{-t}, e^{t}).
        let gen = HamiltonianLoop::constant(Matrix2::new(0.0, 1.0, 1.0, 0.0)).unwrap();
        let path = evolve_path(&gen, 1, 1e-11).unwrap();
        let end = path.end();
        let e = 1.0f64.exp();
        assert!((end - Matrix2::new(1.0 / e, 0.0, 0.0, e)).norm() < 1e-9);
        // Winding interval contains 0 and has width < 1/2.
        let iv = winding_interval(&path);
        assert!(iv.lo < 0.0 && 0.0 < iv.hi);
        assert!(iv.width() < 0.5);
        assert_eq!(cz_index_geometric(&path).unwrap(), 0);
    }

    #[test]
    fn normalization_axiom() {
        // μ(t -> e^{iπt}) = 1.
        let path = rotation_path(0.5);
        assert_eq!(cz_index_geometric(&path).unwrap(), 1);
    }

    #[test]
    fn rotation_one_point_seven() {
        let path = rotation_path(1.7);
        assert_eq!(cz_index_geometric(&path).unwrap(), 3);
    }

    #[test]
    fn spectrum_of_zero_generator() {
        let gen = HamiltonianLoop::constant(Matrix2::zeros()).unwrap();
        let spec = asymptotic_spectrum(&gen, 2).unwrap();
        assert_eq!(spec.wind_minus, -1);
        assert_eq!(spec.wind_plus, 0);
        assert_eq!(spec.p, 1);
        // Eigenvalues are 2πk with double multiplicity and winding k.
        for (nu, w) in spec.eigenvalues.iter().zip(&spec.windings) {
            assert!((nu - TAU * *w as f64).abs() < 1e-7, "{nu} vs 2π·{w}");
        }
    }

    #[test]
    fn spectrum_of_pi_generator_matches_normalization() {
        let gen = HamiltonianLoop::rotation(0.5);
        let spec = asymptotic_spectrum(&gen, 1).unwrap();
        // Spectrum of -i d/dt shifted by -π: eigenvalues 2πk - π.
        assert_eq!(spec.wind_minus, 0);
        assert_eq!(spec.wind_plus, 1);
        assert_eq!(cz_index_analytic(&spec), 1);
        for (nu, w) in spec.eigenvalues.iter().zip(&spec.windings) {
            assert!((nu - (TAU * *w as f64 - PI)).abs() < 1e-7);
        }
    }

    #[test]
    fn positive_hyperbolic_has_equal_extremal_windings() {
        let gen = HamiltonianLoop::positive_hyperbolic(0.8, 0);
        let spec = asymptotic_spectrum(&gen, 1).unwrap();
        assert_eq!(spec.wind_minus, spec.wind_plus);
        assert_eq!(spec.p, 0);
    }

    #[test]
    fn geometric_equals_analytic_on_basic_paths() {
        for gen in [
            HamiltonianLoop::rotation(0.3),
            HamiltonianLoop::rotation(1.7),
            HamiltonianLoop::rotation(-0.21),
            HamiltonianLoop::positive_hyperbolic(0.7, 1),
            HamiltonianLoop::negative_hyperbolic(0.5, 0),
        ] {
            let report = index_report(&gen).unwrap();
            assert_eq!(report.mu_geometric, report.mu_analytic);
        }
    }

    #[test]
    fn iterate_laws_elliptic_sqrt2() {
        // α = √2 - 1: μ(φ^k) = 2 floor(kα) + 1 = 1,1,3,3,5 for k=1..5.
        let alpha = 2.0f64.sqrt() - 1.0;
        let profile = iterate_index_profile(&HamiltonianLoop::rotation(alpha), 5).unwrap();
        let mus: Vec<i64> = profile.records.iter().map(|r| r.mu).collect();
        assert_eq!(mus, vec![1, 1, 3, 3, 5]);
        match profile.law {
            IterateLaw::Elliptic { alpha: a } => assert!((a - alpha).abs() < 1e-6),
            _ => panic!("expected elliptic law"),
        }
    }

    #[test]
    fn iterate_laws_positive_hyperbolic() {
        let profile = iterate_index_profile(&HamiltonianLoop::positive_hyperbolic(0.9, 0), 6)
            .unwrap();
        for r in &profile.records {
            assert_eq!(r.mu, 0);
            assert_eq!(r.wind_minus, 0);
            assert_eq!(r.wind_plus, 0);
        }
    }

    #[test]
    fn iterate_laws_negative_hyperbolic() {
        let profile = iterate_index_profile(&HamiltonianLoop::negative_hyperbolic(0.6, 0), 6)
            .unwrap();
        for r in &profile.records {
            assert_eq!(r.mu, r.k as i64);
            if r.k % 2 == 0 {
                assert_eq!(r.wind_minus, r.k as i64 / 2);
                assert_eq!(r.wind_plus, r.k as i64 / 2);
            }
        }
    }

    #[test]
    fn rotation_number_of_rigid_rotation() {
        let est = rotation_number(&HamiltonianLoop::rotation(0.3), 64).unwrap();
        assert!((est.value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn rotation_number_of_positive_hyperbolic_is_integer() {
        let est = rotation_number(&HamiltonianLoop::positive_hyperbolic(0.8, 0), 64).unwrap();
        assert!(est.value.abs() < 1e-6);
    }

    #[test]
    fn inversion_axiom_on_rotation() {
        let path = rotation_path(1.7);
        let inv = path.pointwise_inverse();
        assert_eq!(
            cz_index_geometric(&inv).unwrap(),
            -cz_index_geometric(&path).unwrap()
        );
    }

    #[test]
    fn homotopy_axiom_spot_check() {
        // Deform the rotation rate inside (1, 2) without hitting degeneracy:
        // μ must stay 3 throughout.
        for j in 0..=10 {
            let alpha = 1.2 + 0.6 * j as f64 / 10.0;
            let path = rotation_path(alpha);
            assert_eq!(cz_index_geometric(&path).unwrap(), 3);
        }
    }

    #[test]
    fn degenerate_path_is_refused() {
        let path = rotation_path(1.0);
        assert!(matches!(
            cz_index_geometric(&path),
            Err(SymPathError::DegeneratePath)
        ));
    }

    #[test]
    fn nonsymmetric_generator_rejected() {
        let r = HamiltonianLoop::new(|_| Matrix2::new(0.0, 1.0, 0.5, 0.0), 16);
        assert!(matches!(
            r,
            Err(SymPathError::NonSymmetricGenerator { .. })
        ));
    }

    #[test]
    fn mean_index_identity_small() {
        let gen = HamiltonianLoop::rotation(2.0f64.sqrt() - 1.0);
        let rho = rotation_number(&gen, 4096).unwrap().value;
        for k in [8u32, 16] {
            let path = evolve_path(&gen, k, 1e-11).unwrap();
            let mu = cz_index_geometric(&path).unwrap() as f64;
            assert!((mu / k as f64 - 2.0 * rho).abs() <= 2.0 / k as f64);
        }
    }
}
