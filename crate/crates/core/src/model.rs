//! Problem data and checks of the structural hypotheses on σ, β and f.
//!
//! * (σ) `σ >= 0` and `σ^{-2n/(n(p-2)+2p)}` is locally integrable;
//! * (β) `β` is bounded, nonnegative, and `β >= β0 > 0` outside `B(0, r0)`;
//! * (f) `f(s)s >= 0` and `f' > -c`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::nonlinearity::NonlinearityModel;
use crate::profile::CoefficientProfile;
use crate::quadrature::radial_ball_integral;
use crate::{Error, Result};

/// Whether the dimension restriction `n >= 2` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Admit `n = 1`, needed by the 1-D analytic oracles.
    #[default]
    Relaxed,
    /// Require `n >= 2`.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub p: f64,
    pub n: usize,
    pub sigma: CoefficientProfile,
    pub beta: CoefficientProfile,
    pub source_g: CoefficientProfile,
    pub nonlinearity: NonlinearityModel,
    pub beta0: f64,
    pub r0: f64,
    pub c_mono: f64,
}

impl ProblemSpec {
    /// Checks the scalar invariants; coefficient hypotheses are handled by the validators.
    pub fn check(&self, strictness: Strictness) -> Result<()> {
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::invalid(format!("p = {} must satisfy p >= 2", self.p)));
        }
        if !(self.beta0 > 0.0) {
            return Err(Error::invalid("beta0 must be positive"));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::invalid("r0 must be positive"));
        }
        if !(self.c_mono > 0.0) {
            return Err(Error::invalid("c_mono must be positive"));
        }
        match (self.n, strictness) {
            (1 | 2, Strictness::Relaxed) | (2, Strictness::Strict) => Ok(()),
            (1, Strictness::Strict) => Err(Error::invalid("dimension 1 rejected in strict mode (n >= 2)")),
            (n, _) => Err(Error::invalid(format!("dimension {n} unsupported (1 or 2)"))),
        }
    }

    /// Runs the three coefficient validators with their default sampling.
    pub fn validate_all(&self, probe_radius: f64, r_max: f64) -> Result<[ValidationReport; 3]> {
        Ok([
            validate_sigma_integrability(&self.sigma, self.p, self.n, probe_radius)?,
            validate_beta_bounds(&self.beta, self.beta0, self.r0, r_max, DEFAULT_SAMPLES)?,
            validate_source_sign(&self.nonlinearity, self.c_mono, DEFAULT_F_RANGE, DEFAULT_SAMPLES)?,
        ])
    }
}

pub const DEFAULT_SAMPLES: usize = 4001;
pub const DEFAULT_F_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Local integrability of the negative power of σ.
    SigmaIntegrability,
    /// Lower and upper bounds on β.
    BetaBounds,
    /// Sign and one-sided Lipschitz condition on f.
    SourceSign,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::SigmaIntegrability => "sigma-integrability",
            Condition::BetaBounds => "beta-bounds",
            Condition::SourceSign => "source-sign",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub condition: Condition,
    pub passed: bool,
    /// σ: the local integral; β: minimum sample outside `r0`; f: worst `f(s)s`.
    pub estimate: f64,
    /// σ: unused (0); β: maximum sample; f: worst `f'(s) + c`.
    pub secondary: f64,
    /// Radius or argument where the worst value was observed.
    pub location: f64,
    /// Integral after each refinement level (σ only).
    pub refinements: Vec<f64>,
    pub message: String,
}

/// `2n / (n(p-2) + 2p)`, the exponent of σ that must be locally integrable.
pub fn sigma_exponent(p: f64, n: usize) -> f64 {
    let n = n as f64;
    2.0 * n / (n * (p - 2.0) + 2.0 * p)
}

/// Local integrability of `σ^{-2n/(n(p-2)+2p)}` on `B(0, probe_radius)`.
pub fn validate_sigma_integrability(
    sigma: &CoefficientProfile,
    p: f64,
    n: usize,
    probe_radius: f64,
) -> Result<ValidationReport> {
    if !(probe_radius > 0.0) {
        return Err(Error::invalid("probe_radius must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if let CoefficientProfile::RadialTable { radii, .. } = sigma {
        if radii.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "radial table with {} samples cannot resolve σ",
                radii.len()
            )));
        }
        if radii[0] > 0.0 || radii[radii.len() - 1] < probe_radius {
            return Err(Error::InsufficientData(format!(
                "radial table covers [{}, {}], probe ball needs [0, {probe_radius}]",
                radii[0],
                radii[radii.len() - 1]
            )));
        }
    }
    let q = sigma_exponent(p, n);
    let integral = radial_ball_integral(|r| sigma.eval_radial(r).powf(-q), n, probe_radius, &sigma.breakpoints());
    let sampled_negative = (0..=1000)
        .map(|k| probe_radius * k as f64 / 1000.0)
        .find(|&r| sigma.eval_radial(r) < 0.0);
    let (passed, message) = match (sampled_negative, integral.converged) {
        (Some(r), _) => (false, format!("σ is negative at |x| = {r}")),
        (None, true) => (true, format!("∫_B(0,{probe_radius}) σ^(-{q}) = {}", integral.value)),
        (None, false) => (
            false,
            format!("σ^(-{q}) is not integrable on B(0,{probe_radius}): refinement sequence does not settle"),
        ),
    };
    Ok(ValidationReport {
        condition: Condition::SigmaIntegrability,
        passed,
        estimate: integral.value,
        secondary: 0.0,
        location: sampled_negative.unwrap_or(0.0),
        refinements: integral.refinements,
        message,
    })
}

/// `β >= 0` on `B(0, r0)`, `β >= beta0` on `r0 <= |x| <= r_max`, and `β ∈ L^∞`.
pub fn validate_beta_bounds(
    beta: &CoefficientProfile,
    beta0: f64,
    r0: f64,
    r_max: f64,
    sample_budget: usize,
) -> Result<ValidationReport> {
    if sample_budget < 1 {
        return Err(Error::invalid("sample_budget must be at least 1"));
    }
    if !(beta0 > 0.0) || !(r0 > 0.0) {
        return Err(Error::invalid("beta0 and r0 must be positive"));
    }
    let r_max = r_max.max(r0);
    let radius_at = |lo: f64, hi: f64, k: usize| {
        if sample_budget == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (sample_budget - 1) as f64
        }
    };

    let mut min_outer = f64::INFINITY;
    let mut min_at = r0;
    let mut max_all = f64::NEG_INFINITY;
    for k in 0..sample_budget {
        let r = radius_at(r0, r_max, k);
        let b = beta.eval_radial(r);
        if !(b >= min_outer) {
            min_outer = b;
            min_at = r;
        }
        max_all = max_all.max(b);
    }
    let mut min_inner = f64::INFINITY;
    let mut inner_at = 0.0;
    for k in 0..sample_budget {
        let r = radius_at(0.0, r0, k);
        let b = beta.eval_radial(r);
        if !(b >= min_inner) {
            min_inner = b;
            inner_at = r;
        }
        max_all = max_all.max(b);
    }

    let (passed, location, message) = if !max_all.is_finite() || min_outer.is_nan() || min_inner.is_nan() {
        (false, min_at, String::from("β sample is not finite"))
    } else if beta.sup_bound().is_none() {
        (false, r_max, String::from("β is unbounded (not in L^∞)"))
    } else if min_inner < 0.0 {
        (false, inner_at, format!("β = {min_inner} < 0 at |x| = {inner_at}"))
    } else if min_outer < beta0 {
        (
            false,
            min_at,
            format!("β = {min_outer} < β0 = {beta0} at |x| = {min_at}"),
        )
    } else {
        (true, min_at, format!("min β on [{r0}, {r_max}] = {min_outer}"))
    };
    Ok(ValidationReport {
        condition: Condition::BetaBounds,
        passed,
        estimate: min_outer,
        secondary: max_all,
        location,
        refinements: Vec::new(),
        message,
    })
}

/// `f(s)s >= 0` and `f'(s) > -c_mono` on a uniform sample of `[-sample_range, sample_range]`.
pub fn validate_source_sign(
    f: &NonlinearityModel,
    c_mono: f64,
    sample_range: f64,
    sample_budget: usize,
) -> Result<ValidationReport> {
    if !(sample_range > 0.0) {
        return Err(Error::invalid("sample_range must be positive"));
    }
    let budget = sample_budget.max(2) | 1; // odd, so s = 0 is sampled
    let mut worst_sign = f64::INFINITY;
    let mut sign_at = 0.0;
    let mut worst_slope = f64::INFINITY;
    let mut slope_at = 0.0;
    for k in 0..budget {
        let s = -sample_range + 2.0 * sample_range * k as f64 / (budget - 1) as f64;
        let fs = f.f(s) * s;
        if fs < worst_sign || (fs.is_nan() && !worst_sign.is_nan()) {
            worst_sign = fs;
            sign_at = s;
        }
        let slope = f.f_prime(s) + c_mono;
        if slope < worst_slope || (slope.is_nan() && !worst_slope.is_nan()) {
            worst_slope = slope;
            slope_at = s;
        }
    }
    let (passed, location, message) = if !(worst_sign >= 0.0) {
        (false, sign_at, format!("f(s)s = {worst_sign} < 0 at s = {sign_at}"))
    } else if !(worst_slope > 0.0) {
        (
            false,
            slope_at,
            format!("f'(s) = {} <= -c = {} at s = {slope_at}", worst_slope - c_mono, -c_mono),
        )
    } else {
        (
            true,
            sign_at,
            format!("min f(s)s = {worst_sign}, min f'(s) + c = {worst_slope}"),
        )
    };
    Ok(ValidationReport {
        condition: Condition::SourceSign,
        passed,
        estimate: worst_sign,
        secondary: worst_slope,
        location,
        refinements: Vec::new(),
        message,
    })
}
