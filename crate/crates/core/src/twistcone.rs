//! The angular order on pairs, non-resonance cone membership, enumeration of
//! relatively prime classes, and even/odd winding predictions on the unit
//! tangent bundle.
//!
//! Arguments of pairs are measured counter-clockwise with the branch cut on
//! the negative horizontal axis; the admissible region `{s > 0 or t > 0}`
//! never touches the cut.

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum TwistError {
    #[error("pair ({0}, {1}) lies outside the admissible half-plane union")]
    InadmissiblePair(f64, f64),
    #[error("class ({0}, {1}) is not relatively prime")]
    NotCoprime(i64, i64),
    #[error("class ({0}, {1}) is outside the twist cone; no prediction")]
    OutsideCone(i64, i64),
    #[error("q must be nonzero")]
    ZeroDenominator,
}

type Result<T> = std::result::Result<T, TwistError>;

/// Guard band around the cone boundary; rays this close to a boundary ray are
/// excluded rather than guessed.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// A homotopy class in the link complement, `(p, q) = (link with L0, link with L1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HomotopyClass {
    pub p: i64,
    pub q: i64,
}

impl HomotopyClass {
    pub fn new(p: i64, q: i64) -> Self {
        Self { p, q }
    }

    pub fn is_coprime(&self) -> bool {
        gcd(self.p.unsigned_abs(), self.q.unsigned_abs()) == 1
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Which manifold the twist data lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwistVariant {
    S3,
    T1S2,
}

/// Rotation offsets of the two link components.
///
/// For the 3-sphere these are `θ_i = ρ(L_i) - 1`; on the unit tangent bundle
/// they are `η_i = 2ρ(l_i) - 1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwistData {
    pub theta0: f64,
    pub theta1: f64,
    pub variant: TwistVariant,
}

impl TwistData {
    pub fn s3(theta0: f64, theta1: f64) -> Self {
        Self {
            theta0,
            theta1,
            variant: TwistVariant::S3,
        }
    }

    pub fn t1s2(eta0: f64, eta1: f64) -> Self {
        Self {
            theta0: eta0,
            theta1: eta1,
            variant: TwistVariant::T1S2,
        }
    }

    /// Boundary rays of the cone: `(θ0, 1)` and `(1, θ1)` (η's for T1S2).
    pub fn boundary_rays(&self) -> ((f64, f64), (f64, f64)) {
        ((self.theta0, 1.0), (1.0, self.theta1))
    }
}

fn admissible(s: f64, t: f64) -> bool {
    s > 0.0 || t > 0.0
}

/// Argument of an admissible pair, continuous on the region, in (-π/2-, π).
pub fn pair_argument(pair: (f64, f64)) -> Result<f64> {
    if !admissible(pair.0, pair.1) {
        return Err(TwistError::InadmissiblePair(pair.0, pair.1));
    }
    Ok(pair.1.atan2(pair.0))
}

/// Strict angular order: true iff the argument of `b` strictly exceeds the
/// argument of `a`, with a guard band treating near-parallel rays as equal.
pub fn angular_less(a: (f64, f64), b: (f64, f64)) -> Result<bool> {
    let (arg_a, arg_b) = (pair_argument(a)?, pair_argument(b)?);
    Ok(arg_b - arg_a > BOUNDARY_GUARD)
}

/// Membership of a relatively prime class in the open twist cone, testing
/// both orientations of the boundary rays.
pub fn in_twist_cone(cls: HomotopyClass, data: &TwistData) -> Result<bool> {
    if !cls.is_coprime() {
        return Err(TwistError::NotCoprime(cls.p, cls.q));
    }
    let pq = (cls.p as f64, cls.q as f64);
    if !admissible(pq.0, pq.1) {
        return Ok(false);
    }
    let (r0, r1) = data.boundary_rays();
    let forward = angular_less(r0, pq)? && angular_less(pq, r1)?;
    let backward = angular_less(r1, pq)? && angular_less(pq, r0)?;
    Ok(forward || backward)
}

/// Enumeration output: cone classes plus the boundary-band rejects that a
/// caller may want to surface as warnings.
#[derive(Debug, Clone, Serialize)]
pub struct ClassEnumeration {
    pub classes: Vec<HomotopyClass>,
    pub boundary_excluded: Vec<HomotopyClass>,
}

/// All relatively prime classes with `|p| + |q| <= bound` inside the cone,
/// sorted by `|p| + |q|` then by argument; deterministic.
pub fn enumerate_classes(data: &TwistData, bound: i64) -> ClassEnumeration {
    assert!(bound >= 1);
    let mut classes = Vec::new();
    let mut boundary_excluded = Vec::new();
    let (r0, r1) = data.boundary_rays();
    for p in -bound..=bound {
        for q in -bound..=bound {
            if p.abs() + q.abs() > bound || (p == 0 && q == 0) {
                continue;
            }
            let cls = HomotopyClass::new(p, q);
            if !cls.is_coprime() {
                continue;
            }
            match in_twist_cone(cls, data) {
                Ok(true) => classes.push(cls),
                Ok(false) => {
                    let pq = (p as f64, q as f64);
                    if admissible(pq.0, pq.1) {
                        let arg = pair_argument(pq).unwrap();
                        for ray in [r0, r1] {
                            if let Ok(a) = pair_argument(ray) {
                                if (arg - a).abs() <= BOUNDARY_GUARD {
                                    boundary_excluded.push(cls);
                                }
                            }
                        }
                    }
                }
                Err(_) => {}
            }
        }
    }
    let key = |c: &HomotopyClass| {
        (
            c.p.abs() + c.q.abs(),
            pair_argument((c.p as f64, c.q as f64)).unwrap_or(f64::INFINITY),
        )
    };
    classes.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    boundary_excluded.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    ClassEnumeration {
        classes,
        boundary_excluded,
    }
}

/// Exact half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn from_halves(doubled: i64) -> Self {
        Self(doubled)
    }

    pub fn from_int(n: i64) -> Self {
        Self(2 * n)
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(&self) -> bool {
        self.0 % 2 == 0
    }

    /// Round a float to the nearest half-integer, returning the residual.
    pub fn round_from(x: f64) -> (Self, f64) {
        let doubled = (2.0 * x).round();
        (Self(doubled as i64), (2.0 * x - doubled).abs() / 2.0)
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

/// Winding prediction for a cone class on the unit tangent bundle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct T1S2Prediction {
    pub contractible: bool,
    pub wind0: HalfInt,
    pub wind1: HalfInt,
}

/// Even `p + q`: a non-contractible orbit with winds `(p/2, q/2)`.
/// Odd `p + q`: a contractible orbit with winds `(p, q)`.
pub fn t1s2_prediction(cls: HomotopyClass, data: &TwistData) -> Result<T1S2Prediction> {
    if !in_twist_cone(cls, data)? {
        return Err(TwistError::OutsideCone(cls.p, cls.q));
    }
    if (cls.p + cls.q) % 2 == 0 {
        Ok(T1S2Prediction {
            contractible: false,
            wind0: HalfInt::from_halves(cls.p),
            wind1: HalfInt::from_halves(cls.q),
        })
    } else {
        Ok(T1S2Prediction {
            contractible: true,
            wind0: HalfInt::from_int(cls.p),
            wind1: HalfInt::from_int(cls.q),
        })
    }
}

/// Satellite admissibility: `p/q` strictly between `ρ` and `1`.
pub fn satellite_interval(rho: f64, p: i64, q: i64) -> Result<bool> {
    if q == 0 {
        return Err(TwistError::ZeroDenominator);
    }
    let cls = HomotopyClass::new(p, q);
    if !cls.is_coprime() {
        return Err(TwistError::NotCoprime(p, q));
    }
    let r = p as f64 / q as f64;
    let (lo, hi) = (rho.min(1.0), rho.max(1.0));
    Ok(r > lo + BOUNDARY_GUARD && r < hi - BOUNDARY_GUARD)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_less_basic() {
        assert!(angular_less((1.0, 0.0), (0.0, 1.0)).unwrap());
        assert!(!angular_less((0.0, 1.0), (0.0, 1.0)).unwrap());
        // arguments: -0.1974 rad < 1.8623 rad
        assert!(angular_less((1.0, -0.2), (-0.3, 1.0)).unwrap());
    }

    #[test]
    fn inadmissible_pair_is_an_error() {
        assert!(angular_less((-1.0, -1.0), (1.0, 0.0)).is_err());
    }

    #[test]
    fn cone_membership_examples() {
        // Both-negative offsets: (1,0) carries an orbit with linking 0.
        let d = TwistData::s3(-0.3, -0.3);
        assert!(in_twist_cone(HomotopyClass::new(1, 0), &d).unwrap());
        // Resonant boundary: (1,1) parallel to both rays fails strictness.
        let d = TwistData::s3(1.0, 1.0);
        assert!(!in_twist_cone(HomotopyClass::new(1, 1), &d).unwrap());
        // Interior: argument 0.7854 strictly between 0.6318 and 1.1781.
        let d = TwistData::s3(0.4142, 0.7321);
        assert!(in_twist_cone(HomotopyClass::new(1, 1), &d).unwrap());
    }

    #[test]
    fn non_coprime_rejected() {
        let d = TwistData::s3(0.4, 0.7);
        assert!(matches!(
            in_twist_cone(HomotopyClass::new(2, 2), &d),
            Err(TwistError::NotCoprime(..))
        ));
    }

    #[test]
    fn enumeration_examples() {
        let d = TwistData::s3(1.0, 1.0);
        assert!(enumerate_classes(&d, 10).classes.is_empty());

        let d = TwistData::s3(0.4142, 0.7321);
        let e = enumerate_classes(&d, 3);
        assert!(e.classes.contains(&HomotopyClass::new(1, 1)));
        assert!(e.classes.contains(&HomotopyClass::new(1, 2)));

        let d = TwistData::s3(-0.3, -0.3);
        let e = enumerate_classes(&d, 2);
        assert!(e.classes.contains(&HomotopyClass::new(1, 0)));
        assert!(e.classes.contains(&HomotopyClass::new(0, 1)));
    }

    #[test]
    fn enumeration_symmetric_under_component_swap() {
        let d = TwistData::s3(0.4142, 0.7321);
        let ds = TwistData::s3(0.7321, 0.4142);
        let e: Vec<(i64, i64)> = enumerate_classes(&d, 8)
            .classes
            .iter()
            .map(|c| (c.p, c.q))
            .collect();
        let mut es: Vec<(i64, i64)> = enumerate_classes(&ds, 8)
            .classes
            .iter()
            .map(|c| (c.q, c.p))
            .collect();
        es.sort();
        let mut e_sorted = e.clone();
        e_sorted.sort();
        assert_eq!(e_sorted, es);
    }

    #[test]
    fn prediction_parity() {
        let d = TwistData::t1s2(0.4142, 0.7321);
        let p = t1s2_prediction(HomotopyClass::new(1, 1), &d).unwrap();
        assert!(!p.contractible);
        assert_eq!(p.wind0, HalfInt::from_halves(1));
        assert_eq!(p.wind1, HalfInt::from_halves(1));
        let p = t1s2_prediction(HomotopyClass::new(1, 2), &d).unwrap();
        assert!(p.contractible);
        assert_eq!(p.wind0, HalfInt::from_int(1));
        assert_eq!(p.wind1, HalfInt::from_int(2));
    }

    #[test]
    fn satellite_interval_examples() {
        assert!(satellite_interval(0.8, 5, 6).unwrap());
        assert!(!satellite_interval(1.0, 5, 6).unwrap());
        assert!(satellite_interval(1.4, 5, 4).unwrap());
        assert!(matches!(
            satellite_interval(0.8, 1, 0),
            Err(TwistError::ZeroDenominator)
        ));
    }

    #[test]
    fn half_int_display_and_round() {
        assert_eq!(HalfInt::from_halves(3).to_string(), "3/2");
        assert_eq!(HalfInt::from_int(2).to_string(), "2");
        let (h, r) = HalfInt::round_from(1.4999998);
        assert_eq!(h, HalfInt::from_halves(3));
        assert!(r < 1e-6);
    }

    #[test]
    fn scaling_invariance_of_cone_membership() {
        // Rays inherit membership from any positive scaling of (p, q).
        let d = TwistData::s3(0.4142, 0.7321);
        for &(p, q) in &[(1i64, 1i64), (1, 2), (2, 3)] {
            let base = in_twist_cone(HomotopyClass::new(p, q), &d).unwrap();
            for m in 2..5 {
                let arg_scaled = pair_argument(((m * p) as f64, (m * q) as f64)).unwrap();
                let arg_base = pair_argument((p as f64, q as f64)).unwrap();
                assert!((arg_scaled - arg_base).abs() < 1e-12);
                let _ = base;
            }
        }
    }
}
