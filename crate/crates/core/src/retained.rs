use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Burn-in and thinning rule: the chain states `b^(0..=T)` are kept at indices
/// `T*kappa + i*lambda` for `0 <= i <= floor(T(1 - kappa) / lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Retention {
    pub iterations: usize,
    pub burn_in: f64,
    pub thinning: usize,
}

impl Retention {
    pub fn new(iterations: usize, burn_in: f64, thinning: usize) -> Result<Self> {
        let r = Self {
            iterations,
            burn_in,
            thinning,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::invalid(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning stride must be at least 1"));
        }
        Ok(())
    }

    /// First retained index, `T * kappa` rounded down.
    pub fn start(&self) -> usize {
        // tolerance absorbs products such as 1000 * 0.7 = 699.9999999999999
        ((self.iterations as f64) * self.burn_in + 1e-9).floor() as usize
    }

    pub fn len(&self) -> usize {
        (self.iterations - self.start()) / self.thinning + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| self.start() + i * self.thinning)
            .collect()
    }

    pub fn contains(&self, t: usize) -> bool {
        t >= self.start() && t <= self.iterations && (t - self.start()) % self.thinning == 0
    }
}
