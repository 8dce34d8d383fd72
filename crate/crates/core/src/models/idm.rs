//! Intelligent Driver Model: smooth acceleration toward the desired speed,
//! braking as the dynamic desired gap closes on the actual gap.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IdmParams {
    /// Desired speed, m/s.
    pub v0: f64,
    /// Time gap, s.
    pub t_gap: f64,
    /// Maximum acceleration, m/s^2.
    pub a: f64,
    /// Comfortable deceleration (positive), m/s^2.
    pub b: f64,
    /// Acceleration exponent, dimensionless.
    pub delta: f64,
    /// Minimum spacing, m.
    pub s0: f64,
}

impl IdmParams {
    pub fn new(v0: f64, t_gap: f64, a: f64, b: f64, delta: f64, s0: f64) -> Result<Self> {
        for (name, value) in [
            ("v0", v0),
            ("T", t_gap),
            ("a", a),
            ("b", b),
            ("delta", delta),
            ("s0", s0),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!(
                    "idm parameter {name}={value} must be finite and > 0"
                )));
            }
        }
        if !(1.0..=10.0).contains(&delta) {
            return Err(Error::invalid(format!("idm delta={delta} outside [1, 10]")));
        }
        Ok(IdmParams {
            v0,
            t_gap,
            a,
            b,
            delta,
            s0,
        })
    }

    /// Dynamic desired gap s*(v, dv).
    pub fn desired_gap(&self, v: f64, dv: f64) -> f64 {
        self.s0 + (v * self.t_gap + v * dv / (2.0 * (self.a * self.b).sqrt())).max(0.0)
    }
}

/// IDM acceleration for speed `v`, approach rate `dv = v - v_leader` and
/// spacing `s`.
pub fn idm_accel(p: &IdmParams, v: f64, dv: f64, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::CollisionState { spacing: s });
    }
    let ratio = p.desired_gap(v, dv) / s;
    Ok(p.a * (1.0 - (v / p.v0).powf(p.delta) - ratio * ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> IdmParams {
        IdmParams::new(30.0, 1.0, 1.0, 1.5, 4.0, 2.0).unwrap()
    }

    #[test]
    fn standstill_equilibrium() {
        let p = params();
        let accel = idm_accel(&p, 0.0, 0.0, p.s0).unwrap();
        assert!(accel.abs() < 1e-12);
    }

    #[test]
    fn free_road_start() {
        let p = params();
        let accel = idm_accel(&p, 0.0, 0.0, 1e12).unwrap();
        assert!((accel - p.a).abs() < 1e-9);
    }

    #[test]
    fn worked_example() {
        // v=10, v0=30, delta=4, a=1, b=1.5, T=1, s0=2, s=20, dv=0:
        // s* = 12, accel = 1 - (1/3)^4 - 0.36 = 1271/2025.
        let p = params();
        assert_eq!(p.desired_gap(10.0, 0.0), 12.0);
        let accel = idm_accel(&p, 10.0, 0.0, 20.0).unwrap();
        assert!((accel - 1271.0 / 2025.0).abs() < 1e-12);
        assert!((accel - 0.62765).abs() < 1e-5);
    }

    #[test]
    fn increasing_in_spacing() {
        let p = params();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..200 {
            let s = k as f64 * 0.5;
            let a = idm_accel(&p, 12.0, 0.5, s).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn at_desired_speed_far_leader() {
        let p = params();
        let a = idm_accel(&p, p.v0, 0.0, 1e12).unwrap();
        assert!(a.abs() < 1e-9);
    }

    #[test]
    fn collision_state_rejected() {
        let p = params();
        assert!(matches!(
            idm_accel(&p, 5.0, 0.0, 0.0),
            Err(Error::CollisionState { .. })
        ));
    }

    #[test]
    fn parameter_invariants() {
        assert!(IdmParams::new(30.0, 1.0, 1.0, 1.5, 0.5, 2.0).is_err());
        assert!(IdmParams::new(30.0, 1.0, 1.0, 1.5, 11.0, 2.0).is_err());
        assert!(IdmParams::new(30.0, 0.0, 1.0, 1.5, 4.0, 2.0).is_err());
    }
}
