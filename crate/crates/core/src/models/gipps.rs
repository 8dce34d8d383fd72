//! Gipps' safe-speed car-following model.
//!
//! The follower picks the lowest of three speeds: what acceleration allows,
//! the desired speed, and the safe speed that lets it stop behind a suddenly
//! braking leader given its reaction time.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GippsParams {
    /// Desired speed, m/s.
    pub v0: f64,
    /// Maximum acceleration, m/s^2.
    pub a: f64,
    /// Comfortable deceleration (positive), m/s^2.
    pub b: f64,
    /// Minimum spacing, m.
    pub s0: f64,
    /// Reaction time, s.
    pub dt_r: f64,
}

impl GippsParams {
    pub fn new(v0: f64, a: f64, b: f64, s0: f64, dt_r: f64) -> Result<Self> {
        for (name, value) in [("v0", v0), ("a", a), ("b", b), ("s0", s0), ("dt_r", dt_r)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!(
                    "gipps parameter {name}={value} must be finite and > 0"
                )));
            }
        }
        if v0 > 60.0 {
            return Err(Error::invalid(format!("gipps v0={v0} exceeds 60 m/s")));
        }
        if !(0.3..=3.0).contains(&dt_r) {
            return Err(Error::invalid(format!(
                "gipps dt_r={dt_r} outside [0.3, 3.0] s"
            )));
        }
        Ok(GippsParams { v0, a, b, s0, dt_r })
    }

    /// Safe speed for the given spacing and leader speed; the radicand is
    /// clamped at zero so a follower inside the minimum spacing gets zero.
    pub fn safe_speed(&self, spacing: f64, v_leader: f64) -> f64 {
        let bdt = self.b * self.dt_r;
        let radicand = bdt * bdt + v_leader * v_leader + 2.0 * self.b * (spacing - self.s0);
        -bdt + radicand.max(0.0).sqrt()
    }
}

/// One 0.1 s speed update: min of the acceleration-limited, desired and safe
/// speeds, clamped at zero.
pub fn gipps_step(p: &GippsParams, v: f64, spacing: f64, v_leader: f64, h: f64) -> Result<f64> {
    if spacing <= 0.0 {
        return Err(Error::CollisionState { spacing });
    }
    let accel_cap = v + p.a * h;
    let safe = p.safe_speed(spacing, v_leader);
    Ok(accel_cap.min(p.v0).min(safe).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        // v=10, a=2, h=0.1, v0=30, s=50, v_l=10, b=1.5, dt_r=1, s0=2:
        // v_safe = -1.5 + sqrt(2.25 + 100 + 144) = 14.192..., result 10.2.
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let safe = p.safe_speed(50.0, 10.0);
        let expect = -1.5 + (2.25_f64 + 100.0 + 144.0).sqrt();
        assert!((safe - expect).abs() < 1e-12);
        assert!((safe - 14.192).abs() < 1e-3);
        let next = gipps_step(&p, 10.0, 50.0, 10.0, 0.1).unwrap();
        assert_eq!(next, 10.2);
    }

    #[test]
    fn stops_behind_stopped_leader_at_minimum_spacing() {
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let next = gipps_step(&p, 5.0, p.s0, 0.0, 0.1).unwrap();
        assert_eq!(next, 0.0);
        // Radicand collapses to (b*dt_r)^2 exactly.
        assert!(p.safe_speed(p.s0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn desired_speed_caps_free_flow() {
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let next = gipps_step(&p, 30.0, 1e6, 30.0, 0.1).unwrap();
        assert_eq!(next, 30.0);
    }

    #[test]
    fn collision_state_rejected() {
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        assert!(matches!(
            gipps_step(&p, 5.0, 0.0, 3.0, 0.1),
            Err(Error::CollisionState { .. })
        ));
        assert!(matches!(
            gipps_step(&p, 5.0, -1.0, 3.0, 0.1),
            Err(Error::CollisionState { .. })
        ));
    }

    #[test]
    fn monotone_in_spacing_and_leader_speed() {
        let p = GippsParams::new(30.0, 2.0, 1.5, 2.0, 1.0).unwrap();
        let mut prev = 0.0;
        for k in 1..200 {
            let s = k as f64 * 0.5;
            let v = gipps_step(&p, 10.0, s, 8.0, 0.1).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        let mut prev = 0.0;
        for k in 0..200 {
            let vl = k as f64 * 0.2;
            let v = gipps_step(&p, 10.0, 12.0, vl, 0.1).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn parameter_invariants() {
        assert!(GippsParams::new(70.0, 2.0, 1.5, 2.0, 1.0).is_err());
        assert!(GippsParams::new(30.0, 2.0, 1.5, 2.0, 0.1).is_err());
        assert!(GippsParams::new(30.0, 2.0, 1.5, 2.0, 3.5).is_err());
        assert!(GippsParams::new(30.0, -2.0, 1.5, 2.0, 1.0).is_err());
    }
}
