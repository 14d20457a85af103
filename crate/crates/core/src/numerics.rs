//! Small shared numerical kernels: fixed and adaptive Runge-Kutta steppers,
//! continuous angle tracking, and scalar root/extremum searches.

use std::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;

/// One classical RK4 step for `y' = f(t, y)`.
pub fn rk4_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    h: f64,
    y: &[f64; N],
) -> [f64; N] {
    let k1 = f(t, y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(t + 0.5 * h, &y2);
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(t + 0.5 * h, &y2);
    for i in 0..N {
        y2[i] = y[i] + h * k3[i];
    }
    let k4 = f(t + h, &y2);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Outcome of a single adaptive step attempt.
pub struct DpStep<const N: usize> {
    pub y: [f64; N],
    pub err: f64,
}

/// One Dormand-Prince 5(4) step with embedded error estimate (unscaled).
pub fn dp54_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    h: f64,
    y: &[f64; N],
) -> DpStep<N> {
    let mut k = [[0.0f64; N]; 7];
    k[0] = f(t, y);
    for stage in 0..6 {
        let mut ys = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                acc += DP_A[stage][j] * kj[i];
            }
            ys[i] = y[i] + h * acc;
        }
        k[stage + 1] = f(t + DP_C[stage] * h, &ys);
    }
    let mut out = *y;
    let mut err = 0.0f64;
    for i in 0..N {
        out[i] = y[i]
            + h * (DP_A[5][0] * k[0][i]
                + DP_A[5][2] * k[2][i]
                + DP_A[5][3] * k[3][i]
                + DP_A[5][4] * k[4][i]
                + DP_A[5][5] * k[5][i]);
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += DP_E[j] * kj[i];
        }
        err = err.max((h * e).abs());
    }
    DpStep { y: out, err }
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` with adaptive DP54 steps,
/// invoking `observe` after every accepted step (including the initial state).
/// `max_step` caps the step size; `tol` is the per-step absolute error target.
pub fn dp54_integrate<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: f64,
    max_step: f64,
    mut observe: impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N], StepUnderflow> {
    let span = t1 - t0;
    if span == 0.0 {
        observe(t0, &y0);
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = (span.abs() / 100.0).min(max_step).max(1e-10) * dir;
    observe(t, &y);
    let h_min = span.abs() * 1e-14;
    loop {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let step = dp54_step(&mut f, t, h, &y);
        if step.err <= tol || h.abs() <= h_min * 4.0 {
            t += h;
            y = step.y;
            observe(t, &y);
            let factor = if step.err > 0.0 {
                0.9 * (tol / step.err).powf(0.2)
            } else {
                4.0
            };
            h = (h * factor.clamp(0.2, 4.0)).clamp(-max_step, max_step);
            if h == 0.0 {
                h = h_min * dir;
            }
        } else {
            h *= 0.5 * (tol / step.err).powf(0.25).max(0.1);
            if h.abs() < h_min {
                return Err(StepUnderflow { t });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepUnderflow {
    pub t: f64,
}

/// Shift `raw` by a multiple of 2π so it lands on the branch nearest `prev`.
pub fn unwrap_near(prev: f64, raw: f64) -> f64 {
    raw + TAU * ((prev - raw) / TAU).round()
}

/// Continuous angle lift of a sampled planar curve that never hits the origin.
/// Returns the total angle variation `θ(end) - θ(start)`.
pub fn total_angle_variation(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut first = None;
    let mut prev = 0.0;
    for (x, y) in points {
        let raw = y.atan2(x);
        match first {
            None => {
                first = Some(raw);
                prev = raw;
            }
            Some(_) => prev = unwrap_near(prev, raw),
        }
    }
    prev - first.unwrap_or(0.0)
}

/// Brent-style bracketing root finder on `[a, b]`; requires a sign change.
pub fn brent_root(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa * fb > 0.0 {
        return None;
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut mflag = true;
    let mut d = a;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < tol {
            return Some(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && (!mflag || (s - b).abs() < (b - c).abs() / 2.0)
            && (mflag || (s - b).abs() < (c - d).abs() / 2.0));
        if cond {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Some(b)
}

/// Golden-section search for the minimizer of `f` on `[a, b]`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential() {
        let mut y = [1.0f64];
        let mut t = 0.0;
        let h = 1e-3;
        let mut f = |_t: f64, y: &[f64; 1]| [y[0]];
        for _ in 0..1000 {
            y = rk4_step(&mut f, t, h, &y);
            t += h;
        }
        assert!((y[0] - 1.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn dp54_harmonic_oscillator() {
        let y = dp54_integrate(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            TAU,
            [1.0, 0.0],
            1e-12,
            0.5,
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert!(y[1].abs() < 1e-9);
    }

    #[test]
    fn angle_tracking_two_turns() {
        let pts = (0..=400).map(|i| {
            let t = TAU * 2.0 * i as f64 / 400.0;
            (t.cos(), t.sin())
        });
        assert!((total_angle_variation(pts) - 2.0 * TAU).abs() < 1e-12);
    }

    #[test]
    fn brent_finds_sqrt2() {
        let r = brent_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn golden_min_parabola() {
        let m = golden_min(|x| (x - 0.3).powi(2), -1.0, 1.0, 1e-10);
        assert!((m - 0.3).abs() < 1e-8);
    }
}
