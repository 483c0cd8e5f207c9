//! Radial quadrature over balls with geometric grading toward singular points.
//!
//! An integrable power singularity `|r - r*|^{-s}` (`s < 1`) contributes a
//! geometrically decaying amount on each dyadic shell around `r*`, while a
//! non-integrable one (`s >= 1`) contributes a non-decreasing amount. The
//! integrator sums shells until they are negligible; if they stop decaying the
//! integral is declared divergent, otherwise the geometric tail is added.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = alloc::vec![0.0; order];
        let mut weights = alloc::vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Surface measure of the unit sphere in R^n (`2` for n = 1).
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2 π^{n/2} / Γ(n/2) via the recursion ω_{n+2} = 2π ω_n / n
            let mut w = if n.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
            let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
            while k < n {
                w *= 2.0 * PI / k as f64;
                k += 2;
            }
            w
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialIntegral {
    /// Estimated value, `+inf` when divergent.
    pub value: f64,
    pub converged: bool,
    /// Running total after each dyadic level (summed over all graded ends).
    pub refinements: Vec<f64>,
}

const MAX_SHELLS: usize = 64;
const MIN_SHELLS: usize = 6;
const RATIO_WINDOW: usize = 8;
/// Shell ratios at or above this are treated as non-decaying.
const DIVERGENCE_RATIO: f64 = 1.0 - 1e-9;

/// `∫_{B(0, radius)} φ(|x|) dx` in R^n, graded toward `0`, `radius` and every breakpoint.
pub fn radial_ball_integral(phi: impl Fn(f64) -> f64, n: usize, radius: f64, breakpoints: &[f64]) -> RadialIntegral {
    let omega = sphere_area(n);
    let rule = GaussLegendre::new(16);
    let integrand = |r: f64| omega * r.powi(n as i32 - 1) * phi(r);

    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < radius).collect();
    cuts.push(0.0);
    cuts.push(radius);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut levels = alloc::vec![0.0; MAX_SHELLS + 1];
    let mut value = 0.0;
    let mut converged = true;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        for (end, len) in [(a, mid - a), (b, -(b - mid))] {
            let graded = graded_toward(&integrand, &rule, end, len);
            for (lvl, s) in graded.shells.iter().enumerate() {
                levels[lvl] += s;
            }
            levels[MAX_SHELLS] += graded.tail;
            value += graded.total;
            converged &= graded.converged;
        }
    }
    if !converged || !value.is_finite() {
        value = f64::INFINITY;
        converged = false;
    }
    let mut refinements = Vec::with_capacity(levels.len());
    let mut acc = 0.0;
    for l in levels {
        acc += l;
        refinements.push(acc);
    }
    RadialIntegral {
        value,
        converged,
        refinements,
    }
}

struct Graded {
    shells: Vec<f64>,
    tail: f64,
    total: f64,
    converged: bool,
}

/// Integrates over the interval from `end + len` to `end` (len may be negative),
/// split into dyadic shells accumulating at `end`.
fn graded_toward(f: &impl Fn(f64) -> f64, rule: &GaussLegendre, end: f64, len: f64) -> Graded {
    // shells narrower than a few ulps of `end` cannot be resolved
    let max_shells = if end == 0.0 {
        MAX_SHELLS
    } else {
        let levels = (len.abs() / (64.0 * f64::EPSILON * end.abs())).log2().floor();
        (levels.max(0.0) as usize).clamp(MIN_SHELLS + RATIO_WINDOW + 1, MAX_SHELLS)
    };
    let mut shells = Vec::with_capacity(max_shells);
    let mut total = 0.0;
    let mut quiet = 0;
    for k in 0..max_shells {
        let outer = end + len * 0.5f64.powi(k as i32);
        let inner = end + len * 0.5f64.powi(k as i32 + 1);
        let (lo, hi) = if outer < inner { (outer, inner) } else { (inner, outer) };
        let s = rule.integrate(f, lo, hi);
        if !s.is_finite() {
            return Graded {
                shells,
                tail: 0.0,
                total: f64::INFINITY,
                converged: false,
            };
        }
        shells.push(s);
        total += s;
        if k >= MIN_SHELLS && s.abs() <= 1e-16 * total.abs().max(f64::MIN_POSITIVE) {
            quiet += 1;
            if quiet >= 3 {
                return Graded {
                    shells,
                    tail: 0.0,
                    total,
                    converged: true,
                };
            }
        } else {
            quiet = 0;
        }
    }
    let last = shells[max_shells - 1];
    let earlier = shells[max_shells - 1 - RATIO_WINDOW];
    if earlier == 0.0 || last == 0.0 {
        return Graded {
            shells,
            tail: 0.0,
            total,
            converged: true,
        };
    }
    let ratio = (last / earlier).abs().powf(1.0 / RATIO_WINDOW as f64);
    if ratio >= DIVERGENCE_RATIO || (last / earlier) < 0.0 {
        return Graded {
            shells,
            tail: 0.0,
            total: f64::INFINITY,
            converged: false,
        };
    }
    let tail = last * ratio / (1.0 - ratio);
    Graded {
        shells,
        tail,
        total: total + tail,
        converged: true,
    }
}
