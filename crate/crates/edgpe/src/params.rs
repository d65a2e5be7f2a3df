//! Model parameters, admissibility checks and regime classification.
//!
//! The coefficient vector (λ₁, λ₂, λ₃, p) fixes the contact, dipolar and
//! quantum-fluctuation interactions. Admissible models require λ₃ > 0,
//! p ∈ (4, 6] and (λ₁, λ₂) ≠ (0, 0). The sign pattern of λ₂ and of the
//! two extreme effective couplings λ₁ − 4π/3·λ₂, λ₁ + 8π/3·λ₂ splits the
//! parameter plane into four regimes that control existence of energy
//! minimizers.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{EdgpeError, Result};

/// External trapping potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trap {
    /// Anisotropic harmonic trap V(x) = ½(ω₁²x₁² + ω₂²x₂² + ω₃²x₃²).
    Harmonic { omega: [f64; 3] },
}

/// Existence/nonexistence regime of the interaction coefficients.
///
/// With κ₋ = λ₁ − 4π/3·λ₂ and κ₊ = λ₁ + 8π/3·λ₂ (the extreme values of
/// the effective multiplier λ₁ + λ₂K̂):
/// A1: λ₂ ≥ 0, κ₋ ≥ 0 · A2: λ₂ < 0, κ₊ ≥ 0 (both give B ≥ 0, no
/// minimizers) · A3: λ₂ ≥ 0, κ₋ < 0 · A4: λ₂ < 0, κ₊ < 0 (attractive
/// directions exist; minimizers above a critical mass).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    A1,
    A2,
    A3,
    A4,
}

impl Regime {
    /// True when the effective multiplier λ₁ + λ₂K̂ is nonnegative for
    /// every wavevector, so B(u) ≥ 0 for all fields.
    pub fn b_nonnegative(self) -> bool {
        matches!(self, Regime::A1 | Regime::A2)
    }
}

/// Physical coefficients of the extended dipolar GPE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Contact interaction strength λ₁.
    pub lambda1: f64,
    /// Dipolar interaction strength λ₂.
    pub lambda2: f64,
    /// Quantum-fluctuation (defocusing) strength λ₃ > 0.
    pub lambda3: f64,
    /// Fluctuation exponent p ∈ (4, 6].
    pub p: f64,
    /// Optional external trap; `None` is the free periodic box.
    #[serde(default)]
    pub trap: Option<Trap>,
}

impl ModelParams {
    /// Untrapped parameter set; validates admissibility.
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, p: f64) -> Result<Self> {
        let params = ModelParams {
            lambda1,
            lambda2,
            lambda3,
            p,
            trap: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks λ₃ > 0, p ∈ (4, 6] and the nondegeneracy (λ₁, λ₂) ≠ (0, 0).
    pub fn validate(&self) -> Result<()> {
        let mut faults = Vec::new();
        if !(self.lambda3 > 0.0) {
            faults.push(format!("lambda3 = {} must be > 0", self.lambda3));
        }
        if !(self.p > 4.0 && self.p <= 6.0) {
            faults.push(format!("p = {} out of (4, 6]", self.p));
        }
        if self.lambda1 == 0.0 && self.lambda2 == 0.0 {
            faults.push("nondegeneracy: lambda1 and lambda2 vanish simultaneously".into());
        }
        for v in [self.lambda1, self.lambda2, self.lambda3, self.p] {
            if !v.is_finite() {
                faults.push("coefficients must be finite".into());
                break;
            }
        }
        if faults.is_empty() {
            Ok(())
        } else {
            Err(EdgpeError::InvalidParams(faults.join("; ")))
        }
    }

    /// λ₁ − 4π/3·λ₂, the effective coupling at wavevectors in the
    /// (ξ₁, ξ₂)-plane (minimum of K̂).
    pub fn kappa_minus(&self) -> f64 {
        self.lambda1 - 4.0 * PI / 3.0 * self.lambda2
    }

    /// λ₁ + 8π/3·λ₂, the effective coupling along the ξ₃-axis
    /// (maximum of K̂).
    pub fn kappa_plus(&self) -> f64 {
        self.lambda1 + 8.0 * PI / 3.0 * self.lambda2
    }

    /// Sharp bound Ξ = max{|λ₁ − 4π/3·λ₂|, |λ₁ + 8π/3·λ₂|} on the
    /// effective multiplier, so that |B(u)| ≤ Ξ‖u‖₄⁴.
    ///
    /// K̂ ranges over [−4π/3, 8π/3] and the affine map K̂ ↦ λ₁ + λ₂K̂
    /// attains its extreme absolute value at an endpoint.
    pub fn xi_bound(&self) -> f64 {
        self.kappa_minus().abs().max(self.kappa_plus().abs())
    }

    /// Regime classification from the signs of λ₂ and the extreme
    /// couplings.
    pub fn regime(&self) -> Regime {
        if self.lambda2 >= 0.0 {
            if self.kappa_minus() >= 0.0 {
                Regime::A1
            } else {
                Regime::A3
            }
        } else if self.kappa_plus() >= 0.0 {
            Regime::A2
        } else {
            Regime::A4
        }
    }

    /// Trap potential evaluated at a point; zero when untrapped.
    pub fn trap_potential(&self, x: [f64; 3]) -> f64 {
        match self.trap {
            None => 0.0,
            Some(Trap::Harmonic { omega }) => {
                0.5 * (omega[0] * omega[0] * x[0] * x[0]
                    + omega[1] * omega[1] * x[1] * x[1]
                    + omega[2] * omega[2] * x[2] * x[2])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 5.0).is_ok());
        assert!(ModelParams::new(1.0, 0.0, 1.0, 6.0).is_ok());
        // p = 6 allowed, p > 6 and p = 4 not
        assert!(ModelParams::new(1.0, 0.0, 1.0, 7.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 1.0, 4.0).is_err());
        // lambda3 must be positive
        assert!(ModelParams::new(1.0, 0.0, 0.0, 5.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, -1.0, 5.0).is_err());
        // degenerate pair rejected
        assert!(ModelParams::new(0.0, 0.0, 1.0, 5.0).is_err());
    }

    #[test]
    fn regime_classification() {
        let r = |l1: f64, l2: f64| ModelParams::new(l1, l2, 1.0, 5.0).unwrap().regime();
        assert_eq!(r(1.0, 0.0), Regime::A1);
        assert_eq!(r(1.0, 0.1), Regime::A1);
        assert_eq!(r(1.0, -0.1), Regime::A2);
        assert_eq!(r(0.0, 1.0), Regime::A3);
        assert_eq!(r(1.0, 1.0), Regime::A3); // 1 − 4π/3 < 0
        assert_eq!(r(0.0, -1.0), Regime::A4);
        assert_eq!(r(1.0, -1.0), Regime::A4); // 1 − 8π/3 < 0
        assert!(Regime::A1.b_nonnegative());
        assert!(Regime::A2.b_nonnegative());
        assert!(!Regime::A3.b_nonnegative());
    }

    #[test]
    fn xi_bound_endpoints() {
        // lambda2 = 0: Xi = |lambda1|
        let p = ModelParams::new(2.0, 0.0, 1.0, 5.0).unwrap();
        assert_eq!(p.xi_bound(), 2.0);
        // lambda1 = 0, lambda2 = 1: Xi = 8π/3 (axis endpoint dominates)
        let p = ModelParams::new(0.0, 1.0, 1.0, 5.0).unwrap();
        assert!((p.xi_bound() - 8.0 * PI / 3.0).abs() < 1e-15);
        // both same sign: axis endpoint again
        let p = ModelParams::new(1.0, 1.0, 1.0, 5.0).unwrap();
        assert!((p.xi_bound() - (1.0 + 8.0 * PI / 3.0)).abs() < 1e-15);
    }
}
