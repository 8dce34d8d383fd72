//! Newell's simplified car-following theory: the follower trajectory is the
//! leader's, translated by a time lag tau and a distance d.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NewellParams {
    /// Time translation, s.
    pub tau: f64,
    /// Distance translation, m.
    pub d: f64,
}

impl NewellParams {
    pub fn new(tau: f64, d: f64) -> Result<Self> {
        for (name, value) in [("tau", tau), ("d", d)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(format!(
                    "newell parameter {name}={value} must be finite and > 0"
                )));
            }
        }
        Ok(NewellParams { tau, d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_invariants() {
        assert!(NewellParams::new(0.0, 5.0).is_err());
        assert!(NewellParams::new(1.0, -5.0).is_err());
        assert!(NewellParams::new(1.0, 5.0).is_ok());
    }
}
