//! Radial coefficient profiles for σ, β and g.

use alloc::boxed::Box;
use alloc::vec::Vec;
use num_traits::Float;

use crate::{Error, Result};

/// A coefficient that depends on the point only through `r = |x|`.
///
/// Evaluation is a pure map; power laws with a negative exponent return
/// `+inf` at the origin, which is treated as a declared point singularity.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientProfile {
    Constant(f64),
    /// `min(amplitude * r^alpha + offset, cap)`.
    PowerLaw {
        amplitude: f64,
        alpha: f64,
        offset: f64,
        cap: Option<f64>,
    },
    /// `amplitude * (r^alpha + r^gamma)`.
    TwoPower {
        amplitude: f64,
        alpha: f64,
        gamma: f64,
    },
    /// Piecewise-linear interpolation of `(radii, values)`; constant beyond the last sample.
    RadialTable {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    /// `base + amplitude * exp(-((r - center) / width)^2)`.
    GaussianBump {
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude * exp(-rate * r)`.
    ExpDecay {
        amplitude: f64,
        rate: f64,
    },
    /// `amplitude * exp(-1 / r^2)`, flat to infinite order at the origin.
    FlatAtOrigin {
        amplitude: f64,
    },
    /// `inner` for `r < radius`, zero outside.
    Cutoff {
        inner: Box<CoefficientProfile>,
        radius: f64,
    },
}

impl CoefficientProfile {
    pub fn constant(value: f64) -> Self {
        CoefficientProfile::Constant(value)
    }

    /// `|x|^alpha`.
    pub fn power(alpha: f64) -> Self {
        CoefficientProfile::PowerLaw {
            amplitude: 1.0,
            alpha,
            offset: 0.0,
            cap: None,
        }
    }

    pub fn radial_table(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::invalid("radial table: radii and values differ in length"));
        }
        if radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("radial table: radii must be strictly increasing"));
        }
        Ok(CoefficientProfile::RadialTable { radii, values })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.eval_radial(r)
    }

    pub fn eval_radial(&self, r: f64) -> f64 {
        use CoefficientProfile::*;
        match self {
            Constant(v) => *v,
            PowerLaw {
                amplitude,
                alpha,
                offset,
                cap,
            } => {
                let v = amplitude * r.powf(*alpha) + offset;
                match cap {
                    Some(c) => v.min(*c),
                    None => v,
                }
            }
            TwoPower {
                amplitude,
                alpha,
                gamma,
            } => amplitude * (r.powf(*alpha) + r.powf(*gamma)),
            RadialTable { radii, values } => interpolate(radii, values, r),
            GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => {
                let z = (r - center) / width;
                base + amplitude * (-z * z).exp()
            }
            ExpDecay { amplitude, rate } => amplitude * (-rate * r).exp(),
            FlatAtOrigin { amplitude } => {
                if r == 0.0 {
                    0.0
                } else {
                    amplitude * (-1.0 / (r * r)).exp()
                }
            }
            Cutoff { inner, radius } => {
                if r < *radius {
                    inner.eval_radial(r)
                } else {
                    0.0
                }
            }
        }
    }

    /// Radii where the profile may lose smoothness or vanish.
    pub fn breakpoints(&self) -> Vec<f64> {
        use CoefficientProfile::*;
        match self {
            RadialTable { radii, .. } => radii.clone(),
            Cutoff { inner, radius } => {
                let mut b = inner.breakpoints();
                b.push(*radius);
                b
            }
            PowerLaw {
                amplitude,
                alpha,
                offset,
                cap: Some(c),
            } if *amplitude > 0.0 && *alpha > 0.0 && c > offset => {
                alloc::vec![((c - offset) / amplitude).powf(1.0 / alpha)]
            }
            _ => Vec::new(),
        }
    }

    /// An upper bound on `|value|` over all of R^n, or `None` when the profile is unbounded.
    pub fn sup_bound(&self) -> Option<f64> {
        use CoefficientProfile::*;
        match self {
            Constant(v) => Some(v.abs()),
            PowerLaw {
                amplitude,
                alpha,
                offset,
                cap,
            } => {
                if *alpha == 0.0 {
                    return Some((amplitude + offset).abs());
                }
                if *amplitude == 0.0 {
                    return Some(offset.abs());
                }
                match cap {
                    Some(c) if *amplitude > 0.0 => Some(c.abs().max(offset.abs())),
                    _ => None,
                }
            }
            TwoPower { amplitude, .. } => {
                if *amplitude == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            RadialTable { values, .. } => values.iter().map(|v| v.abs()).fold(None, |m, v| {
                Some(match m {
                    Some(m) if m >= v => m,
                    _ => v,
                })
            }),
            GaussianBump { base, amplitude, .. } => Some(base.abs() + amplitude.abs()),
            ExpDecay { amplitude, rate } => {
                if *rate >= 0.0 {
                    Some(amplitude.abs())
                } else {
                    None
                }
            }
            FlatAtOrigin { amplitude } => Some(amplitude.abs()),
            Cutoff { inner, .. } => inner.sup_bound(),
        }
    }
}

fn interpolate(radii: &[f64], values: &[f64], r: f64) -> f64 {
    match radii.len() {
        0 => 0.0,
        1 => values[0],
        _ => {
            if r <= radii[0] {
                return values[0];
            }
            let last = radii.len() - 1;
            if r >= radii[last] {
                return values[last];
            }
            let k = radii.partition_point(|&ri| ri <= r) - 1;
            let s = (r - radii[k]) / (radii[k + 1] - radii[k]);
            values[k] + s * (values[k + 1] - values[k])
        }
    }
}
