use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

use super::FnoError;

/// Scalar activation with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Gelu,
}

/// Expansion point for difference quotients that isolate `σ'`.
pub const LINEAR_EXPANSION_POINT: f64 = 0.0;
/// Expansion point for difference quotients that isolate `σ''`.
pub const QUADRATIC_EXPANSION_POINT: f64 = 1.0;

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

impl Activation {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Gelu => x * normal_cdf(x),
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Gelu => normal_cdf(x) + x * normal_pdf(x),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Gelu => normal_pdf(x) * (2.0 - x * x),
        }
    }

    pub fn d3(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                -2.0 * s * (1.0 - 3.0 * t * t)
            }
            Activation::Gelu => normal_pdf(x) * x * (x * x - 4.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Gelu => "gelu",
        }
    }

    pub(crate) fn apply_in_place(self, values: &mut [f64]) {
        for v in values {
            *v = self.eval(*v);
        }
    }
}

impl FromStr for Activation {
    type Err = FnoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "gelu" => Ok(Activation::Gelu),
            other => Err(FnoError::UnknownActivation(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn tanh_at_zero() {
        let s = Activation::Tanh;
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.d1(0.0), 1.0);
        assert_eq!(s.d2(0.0), 0.0);
    }

    #[test]
    fn tanh_second_derivative_closed_form() {
        let t1 = 1.0f64.tanh();
        let want = -2.0 * t1 * (1.0 - t1 * t1);
        assert_eq!(Activation::Tanh.d2(1.0), want);
        let fd = central(|x| Activation::Tanh.d1(x), 1.0, 1e-5);
        assert!((fd - want).abs() < 1e-8);
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        for act in [Activation::Tanh, Activation::Gelu] {
            for &x in &[-2.3, -0.4, 0.0, 0.7, 1.0, 3.1] {
                assert!((central(|y| act.eval(y), x, 1e-5) - act.d1(x)).abs() < 1e-8);
                assert!((central(|y| act.d1(y), x, 1e-5) - act.d2(x)).abs() < 1e-8);
                assert!((central(|y| act.d2(y), x, 1e-5) - act.d3(x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gelu_is_not_a_polynomial() {
        // a polynomial of degree p has vanishing (p+1)-th differences; gelu's stay away from zero
        let g = Activation::Gelu;
        let h = 0.5;
        for p in 1..8usize {
            let mut diff = 0.0;
            for i in 0..=p {
                let binom = (0..i).fold(1.0, |acc, j| acc * (p - j) as f64 / (j + 1) as f64);
                let sign = if (p - i) % 2 == 0 { 1.0 } else { -1.0 };
                diff += sign * binom * g.eval(-1.0 + i as f64 * h);
            }
            assert!(diff.abs() > 1e-6, "order {p} difference vanished");
        }
    }

    #[test]
    fn parse_tags() {
        assert_eq!("tanh".parse::<Activation>().unwrap(), Activation::Tanh);
        assert_eq!("gelu".parse::<Activation>().unwrap(), Activation::Gelu);
        assert!(matches!(
            "relu".parse::<Activation>(),
            Err(FnoError::UnknownActivation(_))
        ));
    }

    #[test]
    fn expansion_points_are_usable() {
        for act in [Activation::Tanh, Activation::Gelu] {
            assert!(act.d1(LINEAR_EXPANSION_POINT).abs() > 0.1);
            assert!(act.d2(QUADRATIC_EXPANSION_POINT).abs() > 1e-3);
        }
    }
}
