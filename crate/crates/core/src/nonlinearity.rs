//! Reaction terms `f(u)` and their antiderivatives.

use num_traits::Float;

use crate::{Error, Result};

/// Largest `|s|` at which `s * exp(s^2)` is evaluated by the solver.
pub const EXP_GROWTH_LIMIT: f64 = 26.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearityModel {
    Zero,
    /// `f(s) = |s|^{q-1} s`, `q >= 1`.
    OddPower {
        q: f64,
    },
    /// `f(s) = a s^3 - b s`. Violates `f(s)s >= 0` near zero when `b > 0`.
    CubicMinusLinear {
        a: f64,
        b: f64,
    },
    /// `f(s) = s exp(s^2)`; no polynomial upper bound.
    ExpGrowth,
}

impl NonlinearityModel {
    pub fn f(&self, s: f64) -> f64 {
        match *self {
            NonlinearityModel::Zero => 0.0,
            NonlinearityModel::OddPower { q } => s.abs().powf(q - 1.0) * s,
            NonlinearityModel::CubicMinusLinear { a, b } => a * s * s * s - b * s,
            NonlinearityModel::ExpGrowth => s * (s * s).exp(),
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        match *self {
            NonlinearityModel::Zero => 0.0,
            NonlinearityModel::OddPower { q } => {
                if q == 1.0 {
                    1.0
                } else {
                    q * s.abs().powf(q - 1.0)
                }
            }
            NonlinearityModel::CubicMinusLinear { a, b } => 3.0 * a * s * s - b,
            NonlinearityModel::ExpGrowth => (s * s).exp() * (1.0 + 2.0 * s * s),
        }
    }

    /// `F(s) = ∫_0^s f`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match *self {
            NonlinearityModel::Zero => 0.0,
            NonlinearityModel::OddPower { q } => s.abs().powf(q + 1.0) / (q + 1.0),
            NonlinearityModel::CubicMinusLinear { a, b } => 0.25 * a * s.powi(4) - 0.5 * b * s * s,
            NonlinearityModel::ExpGrowth => 0.5 * (s * s).exp_m1(),
        }
    }

    /// `f(s)`, refusing arguments where the exponential model would overflow.
    pub fn try_f(&self, s: f64) -> Result<f64> {
        self.check_range(s)?;
        Ok(self.f(s))
    }

    pub fn try_f_prime(&self, s: f64) -> Result<f64> {
        self.check_range(s)?;
        Ok(self.f_prime(s))
    }

    fn check_range(&self, s: f64) -> Result<()> {
        if matches!(self, NonlinearityModel::ExpGrowth) && !(s.abs() <= EXP_GROWTH_LIMIT) {
            return Err(Error::NonlinearityOverflow {
                s,
                limit: EXP_GROWTH_LIMIT,
            });
        }
        Ok(())
    }

    /// `inf_s f'(s)` (`-inf` when unbounded below).
    pub fn slope_lower_bound(&self) -> f64 {
        match *self {
            NonlinearityModel::CubicMinusLinear { a, b } if a >= 0.0 => -b,
            NonlinearityModel::CubicMinusLinear { .. } => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NonlinearityModel::Zero)
    }
}

/// `f(s) + c s`, nondecreasing whenever `f' > -c`.
pub fn tilde_f(f: &NonlinearityModel, c_mono: f64, s: f64) -> f64 {
    f.f(s) + c_mono * s
}
