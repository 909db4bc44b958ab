//! Per-sample losses `l(y, t)`, their derivatives in `t`, and the curvature
//! bound `beta` with `l''(y, t) <= beta` everywhere.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `0.5 * (y - t)^2`
    Squared,
    /// `log(1 + exp(-y t))` with labels in `{-1, +1}`
    Logistic,
}

impl LossKind {
    /// Uniform upper bound on the second derivative of the loss in `t`.
    pub fn beta_raw(self) -> f64 {
        match self {
            LossKind::Squared => 1.0,
            LossKind::Logistic => 0.25,
        }
    }

    pub fn check_label(self, y: f64) -> Result<()> {
        match self {
            LossKind::Squared if y.is_finite() => Ok(()),
            LossKind::Logistic if y == 1.0 || y == -1.0 => Ok(()),
            _ => Err(Error::usage(format!("invalid label {y} for {self} loss"))),
        }
    }

    /// Loss value; fails on an invalid label.
    pub fn value(self, y: f64, t: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(self.value_unchecked(y, t))
    }

    /// Derivative in `t`; fails on an invalid label.
    pub fn deriv(self, y: f64, t: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(self.deriv_unchecked(y, t))
    }

    #[inline]
    pub(crate) fn value_unchecked(self, y: f64, t: f64) -> f64 {
        match self {
            LossKind::Squared => 0.5 * (y - t) * (y - t),
            LossKind::Logistic => log1p_exp(-y * t),
        }
    }

    #[inline]
    pub(crate) fn deriv_unchecked(self, y: f64, t: f64) -> f64 {
        match self {
            LossKind::Squared => t - y,
            LossKind::Logistic => -y * sigmoid(-y * t),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Squared => "squared",
            LossKind::Logistic => "logistic",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(LossKind::Squared),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::usage(format!("unknown loss '{other}'"))),
        }
    }
}

/// `log(1 + exp(z))` without overflow for large `z`.
#[inline]
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic sigmoid, branch-split at zero so neither side overflows.
#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Free-function form of [`LossKind::value`].
pub fn loss_value(kind: LossKind, y: f64, t: f64) -> Result<f64> {
    kind.value(y, t)
}

/// Free-function form of [`LossKind::deriv`].
pub fn loss_deriv(kind: LossKind, y: f64, t: f64) -> Result<f64> {
    kind.deriv(y, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_values() {
        assert_eq!(loss_value(LossKind::Squared, 1.5, 1.5).unwrap(), 0.0);
        assert_eq!(loss_deriv(LossKind::Squared, 1.5, 1.5).unwrap(), 0.0);
        let l = loss_value(LossKind::Logistic, 1.0, 0.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(loss_deriv(LossKind::Logistic, 1.0, 0.0).unwrap(), -0.5);
    }

    #[test]
    fn logistic_no_overflow() {
        // log(1 + e^100) = 100 + log1p(e^-100); e^-100 ~ 3.7e-44.
        let l = loss_value(LossKind::Logistic, 1.0, -100.0).unwrap();
        assert_eq!(l, 100.0);
        let l = loss_value(LossKind::Logistic, -1.0, 1000.0).unwrap();
        assert_eq!(l, 1000.0);
        assert!(loss_value(LossKind::Logistic, 1.0, 1000.0).unwrap() >= 0.0);
        let d = loss_deriv(LossKind::Logistic, 1.0, -1000.0).unwrap();
        assert_eq!(d, -1.0);
        assert_eq!(loss_deriv(LossKind::Logistic, 1.0, 1000.0).unwrap(), -0.0);
    }

    #[test]
    fn logistic_rejects_bad_labels() {
        assert!(matches!(loss_value(LossKind::Logistic, 0.0, 1.0), Err(Error::Usage(_))));
        assert!(loss_deriv(LossKind::Logistic, 2.0, 1.0).is_err());
        assert!(loss_value(LossKind::Squared, 0.3, 1.0).is_ok());
    }

    #[test]
    fn parse_kind() {
        assert_eq!("logistic".parse::<LossKind>().unwrap(), LossKind::Logistic);
        assert!("hinge".parse::<LossKind>().is_err());
    }

    fn kind_and_label() -> impl Strategy<Value = (LossKind, f64)> {
        prop_oneof![
            (-10.0f64..10.0).prop_map(|y| (LossKind::Squared, y)),
            prop_oneof![Just(1.0), Just(-1.0)].prop_map(|y| (LossKind::Logistic, y)),
        ]
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference((kind, y) in kind_and_label(), t in -20.0f64..20.0) {
            let h = 1e-5;
            let fd = (kind.value(y, t + h).unwrap() - kind.value(y, t - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - kind.deriv(y, t).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn derivative_slope_within_curvature_bound(
            (kind, y) in kind_and_label(),
            t1 in -30.0f64..30.0,
            gap in 1e-3f64..10.0,
        ) {
            let t2 = t1 + gap;
            let slope = (kind.deriv(y, t2).unwrap() - kind.deriv(y, t1).unwrap()) / gap;
            prop_assert!(slope >= -1e-12);
            prop_assert!(slope <= kind.beta_raw() + 1e-9);
        }
    }
}
