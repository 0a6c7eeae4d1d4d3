use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exponential step decay: `lr(t) = lr0 * decay_factor^(-floor(t / decay_step))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    pub lr0: f64,
    pub decay_factor: f64,
    pub decay_step: usize,
}

impl LrSchedule {
    pub fn new(lr0: f64, decay_factor: f64, decay_step: usize) -> Result<Self> {
        let s = Self {
            lr0,
            decay_factor,
            decay_step,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(lr0: f64) -> Result<Self> {
        Self::new(lr0, 1.0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lr0 must be positive, got {}",
                self.lr0
            )));
        }
        if !(self.decay_factor >= 1.0 && self.decay_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "decay_factor must be >= 1, got {}",
                self.decay_factor
            )));
        }
        if self.decay_step == 0 {
            return Err(Error::InvalidArgument("decay_step must be positive".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, t: usize) -> f64 {
        let k = (t / self.decay_step) as i32;
        self.lr0 / self.decay_factor.powi(k)
    }
}

pub fn lr_at(schedule: &LrSchedule, t: usize) -> f64 {
    schedule.lr_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let s = LrSchedule::new(0.1, 2.0, 100).unwrap();
        assert_eq!(s.lr_at(0), 0.1);
        assert_eq!(s.lr_at(99), 0.1);
        assert!((s.lr_at(250) - 0.025).abs() < 1e-15);
        let c = LrSchedule::new(0.3, 1.0, 7).unwrap();
        assert!((0..1000).all(|t| c.lr_at(t) == 0.3));
    }

    #[test]
    fn non_increasing() {
        let s = LrSchedule::new(0.05, 1.7, 13).unwrap();
        for t in 0..500 {
            assert!(s.lr_at(t + 1) <= s.lr_at(t));
        }
    }

    #[test]
    fn validation() {
        assert!(LrSchedule::new(0.0, 2.0, 1).is_err());
        assert!(LrSchedule::new(0.1, 0.5, 1).is_err());
        assert!(LrSchedule::new(0.1, 2.0, 0).is_err());
    }
}
