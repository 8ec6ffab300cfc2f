use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Binary target of a (word, context) score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    Logistic,
    Squared,
    SquaredHinge,
    Hinge,
    Huber,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Logistic,
        LossKind::Squared,
        LossKind::SquaredHinge,
        LossKind::Hinge,
        LossKind::Huber,
    ];

    /// Losses sharing the (e^PMI - k)/(e^PMI + k) minimizer.
    pub fn is_quadratic_family(self) -> bool {
        matches!(self, LossKind::Squared | LossKind::SquaredHinge | LossKind::Huber)
    }

    pub fn value(self, x: f64, y: Label) -> f64 {
        let y = y.sign();
        let m = y * x;
        match self {
            LossKind::Logistic => softplus(-m),
            LossKind::Squared => 0.5 * (x - y) * (x - y),
            LossKind::SquaredHinge => {
                let h = (1.0 - m).max(0.0);
                0.5 * h * h
            }
            LossKind::Hinge => (1.0 - m).max(0.0),
            LossKind::Huber => {
                if m >= -1.0 {
                    let h = (1.0 - m).max(0.0);
                    0.5 * h * h
                } else {
                    -2.0 * m
                }
            }
        }
    }

    /// dL/dx. Hinge uses the left derivative at its kink.
    pub fn derivative(self, x: f64, y: Label) -> f64 {
        let y = y.sign();
        let m = y * x;
        match self {
            LossKind::Logistic => -y * sigmoid(-m),
            LossKind::Squared => x - y,
            LossKind::SquaredHinge => -y * (1.0 - m).max(0.0),
            LossKind::Hinge => {
                if m <= 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Huber => {
                if m >= -1.0 {
                    -y * (1.0 - m).max(0.0)
                } else {
                    -2.0 * y
                }
            }
        }
    }

    /// d²L/dx²; unavailable for hinge.
    pub fn second_derivative(self, x: f64, y: Label) -> Result<f64> {
        let m = y.sign() * x;
        Ok(match self {
            LossKind::Logistic => sigmoid(x) * sigmoid(-x),
            LossKind::Squared => 1.0,
            LossKind::SquaredHinge => f64::from(u8::from(m < 1.0)),
            LossKind::Huber => f64::from(u8::from(m < 1.0 && m > -1.0)),
            LossKind::Hinge => return Err(Error::Domain("hinge loss has no second derivative".into())),
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            "squared-hinge" => Ok(LossKind::SquaredHinge),
            "hinge" => Ok(LossKind::Hinge),
            "huber" => Ok(LossKind::Huber),
            _ => Err(Error::InvalidConfig(format!("unknown loss `{s}`"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Logistic => "logistic",
            LossKind::Squared => "squared",
            LossKind::SquaredHinge => "squared-hinge",
            LossKind::Hinge => "hinge",
            LossKind::Huber => "huber",
        })
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn table_values() {
        assert!((LossKind::Logistic.value(0.0, Label::Pos) - LN_2).abs() < 1e-15);
        assert_eq!(LossKind::Squared.value(1.0, Label::Pos), 0.0);
        assert_eq!(LossKind::Huber.value(-2.0, Label::Pos), 4.0);
        assert_eq!(LossKind::Huber.value(-1.0, Label::Pos), 2.0);
        assert_eq!(LossKind::Hinge.value(0.5, Label::Neg), 1.5);
        assert_eq!(LossKind::SquaredHinge.value(2.0, Label::Pos), 0.0);
        assert_eq!(LossKind::Logistic.value(f64::NEG_INFINITY, Label::Neg), 0.0);
    }

    #[test]
    fn hinge_has_no_curvature() {
        assert_eq!(
            LossKind::Hinge
                .second_derivative(0.0, Label::Pos)
                .unwrap_err()
                .category(),
            "domain"
        );
    }

    #[test]
    fn names_round_trip() {
        for kind in LossKind::ALL {
            assert_eq!(kind.to_string().parse::<LossKind>().unwrap(), kind);
        }
        assert!("cubic".parse::<LossKind>().is_err());
    }

    #[test]
    fn stable_extremes() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    fn away_from_kinks(x: f64) -> bool {
        [-1.0f64, 1.0].iter().all(|k| (x.abs() - k).abs() > 1e-3)
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(x in -4.0f64..4.0, pos in any::<bool>()) {
            prop_assume!(away_from_kinks(x));
            let y = if pos { Label::Pos } else { Label::Neg };
            let h = 1e-6;
            for kind in LossKind::ALL {
                let fd = (kind.value(x + h, y) - kind.value(x - h, y)) / (2.0 * h);
                let an = kind.derivative(x, y);
                prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{kind} first at {x}: {fd} vs {an}");
                if kind != LossKind::Hinge {
                    let fd2 = (kind.derivative(x + h, y) - kind.derivative(x - h, y)) / (2.0 * h);
                    let an2 = kind.second_derivative(x, y).unwrap();
                    prop_assert!((fd2 - an2).abs() <= 1e-5 * an2.abs().max(1.0), "{kind} second at {x}");
                }
            }
        }
    }
}
