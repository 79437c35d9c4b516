//! Model parameters and the phase diagram.
//!
//! The coupling is β_N = β̂ N^{-γ}. For a tail exponent α < d the plane
//! (α, γ) splits into a ballistic region A, an intermediate region B (only
//! when α > d/2) and a diffusive region C.

use crate::error::{invalid, Error, Result};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Amplitude; `f64::INFINITY` encodes β̂ = ∞.
    pub beta_hat: f64,
    pub h: f64,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, gamma: f64, beta_hat: f64, h: f64) -> Result<Self> {
        let p = ModelParams { d, alpha, gamma, beta_hat, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return invalid(format!("d must be at least 2, got {}", self.d));
        }
        if !(self.alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.alpha >= self.d as f64 {
            return Err(Error::Window(format!(
                "alpha must be below d (alpha = {}, d = {})",
                self.alpha, self.d
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return invalid(format!("gamma must be a finite non-negative number, got {}", self.gamma));
        }
        if !(self.beta_hat > 0.0) {
            return invalid(format!("beta_hat must be positive or infinite, got {}", self.beta_hat));
        }
        if !self.h.is_finite() {
            return invalid("h must be finite");
        }
        Ok(())
    }

    /// Mean of the Pareto environment, defined for α > 1.
    pub fn mu(&self) -> Option<f64> {
        pareto_mean(self.alpha)
    }
}

/// E[ω] = α/(α−1) for the Pareto law on [1, ∞).
pub fn pareto_mean(alpha: f64) -> Option<f64> {
    (alpha > 1.0).then(|| alpha / (alpha - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    A,
    B,
    C,
    BoundaryAB,
    BoundaryBC,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::BoundaryAB => "boundary_AB",
            Region::BoundaryBC => "boundary_BC",
        };
        f.write_str(s)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// The two critical values of γ: (d−α)/α and d/(2α).
pub fn thresholds(d: usize, alpha: f64) -> (f64, f64) {
    let d = d as f64;
    ((d - alpha) / alpha, d / (2.0 * alpha))
}

pub fn classify_regime(p: &ModelParams) -> Result<Region> {
    p.validate()?;
    let (g_ab, g_bc) = thresholds(p.d, p.alpha);
    let g = p.gamma;
    let half_d = p.d as f64 / 2.0;
    if p.alpha > half_d && !close(p.alpha, half_d) {
        // g_ab < g_bc here.
        if close(g, g_ab) {
            Ok(Region::BoundaryAB)
        } else if close(g, g_bc) {
            Ok(Region::BoundaryBC)
        } else if g < g_ab {
            Ok(Region::A)
        } else if g < g_bc {
            Ok(Region::B)
        } else {
            Ok(Region::C)
        }
    } else {
        // No intermediate region; A meets C at γ = (d−α)/α.
        if close(g, g_ab) {
            Ok(Region::BoundaryAB)
        } else if g < g_ab {
            Ok(Region::A)
        } else {
            Ok(Region::C)
        }
    }
}

/// Wandering exponent ξ(α, γ, d).
pub fn wandering_exponent(p: &ModelParams) -> Result<f64> {
    Ok(match classify_regime(p)? {
        Region::A | Region::BoundaryAB => 1.0,
        Region::C | Region::BoundaryBC => 0.5,
        Region::B => p.alpha * (1.0 - p.gamma) / (2.0 * p.alpha - p.d as f64),
    })
}

/// β_N = β̂ N^{-γ}, evaluated in log space.
pub fn coupling(p: &ModelParams, n: u64) -> Result<f64> {
    if n == 0 {
        return invalid("N must be at least 1");
    }
    if p.beta_hat.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok((p.beta_hat.ln() - p.gamma * (n as f64).ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(d: usize, a: f64, g: f64) -> ModelParams {
        ModelParams::new(d, a, g, 1.0, 0.0).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(classify_regime(&mp(2, 1.5, 0.1)).unwrap(), Region::A);
        assert_eq!(classify_regime(&mp(2, 1.5, 0.5)).unwrap(), Region::B);
        assert_eq!(classify_regime(&mp(4, 1.0, 5.0)).unwrap(), Region::C);
        assert_eq!(wandering_exponent(&mp(2, 1.5, 0.5)).unwrap(), 0.75);
        assert_eq!(classify_regime(&mp(2, 1.5, 1.0 / 3.0)).unwrap(), Region::BoundaryAB);
        assert_eq!(wandering_exponent(&mp(2, 1.5, 1.0 / 3.0)).unwrap(), 1.0);
        assert_eq!(classify_regime(&mp(3, 2.0, 0.75)).unwrap(), Region::BoundaryBC);
        assert_eq!(wandering_exponent(&mp(3, 2.0, 0.75)).unwrap(), 0.5);
    }

    #[test]
    fn alpha_at_least_d_rejected() {
        assert!(ModelParams::new(2, 2.0, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn coupling_examples() {
        let p = ModelParams::new(2, 1.5, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(coupling(&p, 100).unwrap(), 1.0);
        let p = ModelParams::new(2, 1.5, 0.5, 2.0, 0.0).unwrap();
        assert!((coupling(&p, 100).unwrap() - 0.2).abs() < 1e-15);
        let p = ModelParams::new(2, 1.5, 1.0, 1.0, 0.0).unwrap();
        assert!((coupling(&p, 10).unwrap() - 0.1).abs() < 1e-15);
        assert!(coupling(&p, 1_000_000_000).unwrap() > 0.0);
    }

    #[test]
    fn mu_only_above_one() {
        assert_eq!(mp(2, 0.8, 0.1).mu(), None);
        assert_eq!(mp(2, 1.5, 0.1).mu(), Some(3.0));
    }
}
