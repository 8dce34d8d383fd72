//! Pipes' rule: keep a standstill clearance plus a speed-proportional
//! minimum distance. Standstill distance and leader length are not
//! separately identifiable from clearance data, so they are collapsed into
//! the single `b_clear` parameter.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PipesParams {
    /// Standstill clearance (absorbs the leader length), m.
    pub b_clear: f64,
    /// Time headway, s.
    pub t_headway: f64,
}

impl PipesParams {
    pub fn new(b_clear: f64, t_headway: f64) -> Result<Self> {
        for (name, value) in [("b_clear", b_clear), ("T", t_headway)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!(
                    "pipes parameter {name}={value} must be finite and > 0"
                )));
            }
        }
        Ok(PipesParams { b_clear, t_headway })
    }

    /// Required clearance at speed `v`.
    pub fn required_clearance(&self, v: f64) -> f64 {
        self.b_clear + self.t_headway * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clearance_scales_with_speed() {
        let p = PipesParams::new(2.0, 1.0).unwrap();
        assert_eq!(p.required_clearance(0.0), 2.0);
        assert_eq!(p.required_clearance(10.0), 12.0);
    }

    #[test]
    fn parameter_invariants() {
        assert!(PipesParams::new(0.0, 1.0).is_err());
        assert!(PipesParams::new(2.0, -1.0).is_err());
    }
}
