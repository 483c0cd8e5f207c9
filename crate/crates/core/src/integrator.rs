//! Time stepping and the per-step energy ledger.
//!
//! The implicit scheme is backward Euler: each step solves the resolvent
//! problem
//!
//! ```text
//! R(w) = (w - u)/dt + A w + f(w) - g = 0
//! ```
//!
//! by a nodewise predictor, frozen-coefficient (Picard) corrections and a
//! regularized Newton polish, each followed by a residual-decrease line
//! search. Linear systems are symmetric positive definite and are solved
//! matrix-free with Jacobi-preconditioned CG.
//!
//! Testing the scheme with `w` gives the discrete form of the energy identity
//!
//! ```text
//! ½(‖w‖² - ‖u‖²)/dt + ½ dt ‖(w - u)/dt‖² + ∫σ|∇w|^p + ∫βw² + ⟨f(w), w⟩ = ⟨g, w⟩
//! ```
//!
//! so the ledger's `balance_residual` equals `½ dt ‖u_t‖²` for an exact solve.

use alloc::vec::Vec;
use num_traits::Float;

#[cfg(test)]
use crate::grid::Grid;
use crate::grid::State;
use crate::linsolve::pcg;
use crate::nonlinearity::NonlinearityModel;
use crate::operator::{DiscreteOperator, Linearization};
use crate::{Error, Result};

/// Maximum number of dt halvings before a step is declared failed.
pub const MAX_HALVINGS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Relative residual at which a nonlinear solve is accepted.
    pub nonlinear_tol: f64,
    pub max_picard: usize,
    pub max_newton: usize,
    /// Line-search contraction for Picard corrections that do not reduce the residual.
    pub damping: f64,
    /// Fraction of the Gershgorin stability limit allowed for explicit steps.
    pub explicit_safety: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 1e-2,
            scheme: Scheme::Implicit,
            nonlinear_tol: 1e-10,
            max_picard: 200,
            max_newton: 30,
            damping: 0.7,
            explicit_safety: 0.5,
        }
    }
}

impl StepConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(self.nonlinear_tol > 0.0 && self.nonlinear_tol <= 1e-4) {
            return Err(Error::invalid("nonlinear_tol must lie in (0, 1e-4]"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping must lie in (0, 1]"));
        }
        if !(self.explicit_safety > 0.0 && self.explicit_safety < 1.0) {
            return Err(Error::invalid("explicit_safety must lie in (0, 1)"));
        }
        if self.max_picard + self.max_newton == 0 {
            return Err(Error::invalid("at least one nonlinear iteration is required"));
        }
        Ok(())
    }

    /// [`StepConfig::check`] plus `dt · c_mono < 1`, which keeps `s + dt f(s)` increasing.
    pub fn check_with_c_mono(&self, c_mono: f64) -> Result<()> {
        self.check()?;
        if !(self.dt * c_mono < 1.0) {
            return Err(Error::invalid(alloc::format!(
                "dt = {} violates dt < 1/c_mono = {}",
                self.dt,
                1.0 / c_mono
            )));
        }
        Ok(())
    }
}

/// One accepted step of the energy balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub l2_sq: f64,
    pub grad_p_energy: f64,
    pub beta_energy: f64,
    pub fu_u: f64,
    #[doc(alias = "F_total")]
    pub f_total: f64,
    pub g_pair: f64,
    pub ut_l2_sq: f64,
    pub balance_residual: f64,
    /// Step length that produced this row.
    pub dt: f64,
}

impl LedgerRow {
    pub const HEADER: [&'static str; 9] = [
        "t",
        "l2_sq",
        "grad_p_energy",
        "beta_energy",
        "fu_u",
        "F_total",
        "g_pair",
        "ut_l2_sq",
        "balance_residual",
    ];

    /// Values in [`LedgerRow::HEADER`] order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.t,
            self.l2_sq,
            self.grad_p_energy,
            self.beta_energy,
            self.fu_u,
            self.f_total,
            self.g_pair,
            self.ut_l2_sq,
            self.balance_residual,
        ]
    }

    /// Builds the row for the transition `u -> w` over `dt`.
    pub fn from_transition(
        op: &DiscreteOperator<'_>,
        f: &NonlinearityModel,
        u: &[f64],
        w: &[f64],
        dt: f64,
        t: f64,
    ) -> Self {
        let grid = op.grid();
        let l2_sq = grid.weighted_square_integral(w, None, |_| true);
        let l2_old = grid.weighted_square_integral(u, None, |_| true);
        let grad_p_energy = grid.grad_p_energy(w, op.p());
        let beta_energy = grid.weighted_square_integral(w, Some(grid.beta_nodes()), |_| true);
        let fu_u = grid.integrate_nodal(w, |s| f.f(s) * s);
        let f_total = grid.integrate_nodal(w, |s| f.antiderivative(s));
        let g_pair = grid.inner(grid.g_nodes(), w);
        let ut: Vec<f64> = w.iter().zip(u).map(|(a, b)| (a - b) / dt).collect();
        let ut_l2_sq = grid.weighted_square_integral(&ut, None, |_| true);
        let balance = 0.5 * (l2_sq - l2_old) / dt + grad_p_energy + beta_energy + fu_u - g_pair;
        LedgerRow {
            t,
            l2_sq,
            grad_p_energy,
            beta_energy,
            fu_u,
            f_total,
            g_pair,
            ut_l2_sq,
            balance_residual: balance.abs(),
            dt,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Receives ledger rows as they are produced.
pub trait LedgerSink {
    fn record(&mut self, row: &LedgerRow);
}

impl LedgerSink for Vec<LedgerRow> {
    fn record(&mut self, row: &LedgerRow) {
        self.push(*row);
    }
}

/// Discards rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullSink;

impl LedgerSink for NullSink {
    fn record(&mut self, _row: &LedgerRow) {}
}

/// Accumulated ledger of a trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl LedgerSink for EnergyLedger {
    fn record(&mut self, row: &LedgerRow) {
        self.rows.push(*row);
    }
}

impl EnergyLedger {
    /// `Σ dt ∫ f(u) u` over the recorded steps.
    pub fn cumulative_fu_u(&self) -> f64 {
        self.rows.iter().map(|r| r.dt * r.fu_u).sum()
    }

    /// `Σ dt ‖u_t‖²` over steps ending after `t_from`.
    pub fn ut_l2_sq_integral(&self, t_from: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.t > t_from)
            .map(|r| r.dt * r.ut_l2_sq)
            .sum()
    }

    pub fn max_balance_residual(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.balance_residual))
    }
}

/// Result of one outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    /// One row per accepted sub-step (more than one only after halving).
    pub rows: Vec<LedgerRow>,
    pub halvings: u32,
}

/// Advances by `cfg.dt` using `cfg.scheme`.
pub fn step(state: &State, op: &DiscreteOperator<'_>, f: &NonlinearityModel, cfg: &StepConfig) -> Result<StepOutcome> {
    match cfg.scheme {
        Scheme::Implicit => step_implicit(state, op, f, cfg),
        Scheme::Explicit => step_explicit(state, op, f, cfg),
    }
}

/// One backward Euler step of length `cfg.dt`, halving into sub-steps on solver failure.
pub fn step_implicit(
    state: &State,
    op: &DiscreteOperator<'_>,
    f: &NonlinearityModel,
    cfg: &StepConfig,
) -> Result<StepOutcome> {
    cfg.check()?;
    op.grid().check_len(&state.u)?;
    state.check_finite()?;
    if !(cfg.dt * (-f.slope_lower_bound()).max(0.0) < 1.0) {
        return Err(Error::invalid("dt too large: s + dt f(s) is not increasing"));
    }
    let mut last_residual = f64::INFINITY;
    for halvings in 0..=MAX_HALVINGS {
        let parts = 1usize << halvings;
        let h_dt = cfg.dt / parts as f64;
        let mut u = state.u.clone();
        let mut rows = Vec::with_capacity(parts);
        let mut ok = true;
        for j in 0..parts {
            match solve_resolvent(op, f, &u, h_dt, cfg) {
                Ok(w) => {
                    let t = if j + 1 == parts {
                        state.t + cfg.dt
                    } else {
                        state.t + (j + 1) as f64 * h_dt
                    };
                    rows.push(LedgerRow::from_transition(op, f, &u, &w, h_dt, t));
                    u = w;
                }
                Err(res) => {
                    last_residual = res;
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(StepOutcome {
                state: State::new(u, state.t + cfg.dt),
                rows,
                halvings,
            });
        }
    }
    Err(Error::SolveFailed {
        t: state.t,
        dt: cfg.dt / (1u64 << MAX_HALVINGS) as f64,
        residual: last_residual,
        halvings: MAX_HALVINGS,
        last_state: state.u.clone(),
    })
}

/// Forward Euler step, refused when `dt` exceeds the Gershgorin stability limit.
pub fn step_explicit(
    state: &State,
    op: &DiscreteOperator<'_>,
    f: &NonlinearityModel,
    cfg: &StepConfig,
) -> Result<StepOutcome> {
    cfg.check()?;
    op.grid().check_len(&state.u)?;
    state.check_finite()?;
    let limit = cfg.explicit_safety * explicit_stability_limit(op, f, &state.u)?;
    if cfg.dt > limit {
        return Err(Error::Unstable { dt: cfg.dt, limit });
    }
    let rhs = op.full_rhs(&state.u, f)?;
    let w: Vec<f64> = state.u.iter().zip(&rhs).map(|(u, r)| u + cfg.dt * r).collect();
    let next = State::new(w, state.t + cfg.dt);
    next.check_finite()?;
    let row = LedgerRow::from_transition(op, f, &state.u, &next.u, cfg.dt, next.t);
    Ok(StepOutcome {
        state: next,
        rows: alloc::vec![row],
        halvings: 0,
    })
}

/// `2 / L` where `L` bounds the spectrum of the Jacobian of `A + f` at `u`.
pub fn explicit_stability_limit(op: &DiscreteOperator<'_>, f: &NonlinearityModel, u: &[f64]) -> Result<f64> {
    let lin = op.linearize(u, Linearization::Newton { epsilon: 0.0 });
    let rows = lin.row_abs_sums();
    let beta = op.grid().beta_nodes();
    let mut bound = 0.0f64;
    for i in 0..u.len() {
        let d = beta[i] + f.try_f_prime(u[i])?;
        bound = bound.max(rows[i] + d.abs());
    }
    Ok(if bound > 0.0 { 2.0 / bound } else { f64::INFINITY })
}

/// Steps from `state.t` to `t_final`, streaming rows to `sink`.
///
/// All steps have length `cfg.dt` except possibly a shorter last one, and the
/// time after step `k` is `t0 + k dt`, so runs over commensurate intervals
/// compose bitwise.
pub fn run_to_time(
    state: &State,
    t_final: f64,
    cfg: &StepConfig,
    op: &DiscreteOperator<'_>,
    f: &NonlinearityModel,
    sink: &mut impl LedgerSink,
) -> Result<State> {
    cfg.check()?;
    if !(t_final >= state.t) {
        return Err(Error::invalid("t_final precedes the current time"));
    }
    let span = t_final - state.t;
    let n_steps = ((span / cfg.dt) - 1e-9).ceil().max(0.0) as usize;
    let mut current = state.clone();
    for k in 0..n_steps {
        let mut step_cfg = *cfg;
        if k + 1 == n_steps {
            let rem = t_final - (state.t + k as f64 * cfg.dt);
            if rem < cfg.dt * (1.0 - 1e-9) {
                step_cfg.dt = rem;
            }
        }
        let out = step(&current, op, f, &step_cfg)?;
        for row in &out.rows {
            sink.record(row);
        }
        current = out.state;
        current.t = if k + 1 == n_steps {
            t_final
        } else {
            state.t + (k + 1) as f64 * cfg.dt
        };
    }
    Ok(current)
}

/// Solves `R(w) = 0` for one backward Euler step; on failure returns the best relative residual.
fn solve_resolvent(
    op: &DiscreteOperator<'_>,
    f: &NonlinearityModel,
    u: &[f64],
    dt: f64,
    cfg: &StepConfig,
) -> core::result::Result<Vec<f64>, f64> {
    let grid = op.grid();
    let beta = grid.beta_nodes();
    let g = grid.g_nodes();
    let n = u.len();
    let inv_dt = 1.0 / dt;

    let mut w: Vec<f64> = (0..n)
        .map(|i| scalar_resolvent(f, beta[i], dt, u[i] + dt * g[i]))
        .collect();
    let mut eval = match Residual::eval(op, f, u, &w, dt) {
        Some(e) => e,
        None => {
            w = u.to_vec();
            match Residual::eval(op, f, u, &w, dt) {
                Some(e) => e,
                None => return Err(f64::INFINITY),
            }
        }
    };
    if eval.relative() <= cfg.nonlinear_tol {
        return Ok(w);
    }

    let mut picard_left = cfg.max_picard;
    let mut newton_left = cfg.max_newton;
    let mut rhs = alloc::vec![0.0; n];
    let mut delta = alloc::vec![0.0; n];
    let mut work = alloc::vec![0.0; n];
    while picard_left + newton_left > 0 {
        let use_newton = newton_left > 0 && (eval.relative() < 1e-3 || picard_left == 0);
        let mode = if use_newton {
            newton_left -= 1;
            Linearization::Newton {
                epsilon: newton_epsilon(op, &w),
            }
        } else {
            picard_left -= 1;
            Linearization::Picard
        };
        let lin = op.linearize(&w, mode);
        let mut shift = Vec::with_capacity(n);
        for i in 0..n {
            let fp = f.try_f_prime(w[i]).map_err(|_| eval.relative())?;
            shift.push(inv_dt + beta[i] + fp.max(-0.5 * inv_dt));
        }
        let mut diag = lin.diagonal();
        for (d, s) in diag.iter_mut().zip(&shift) {
            *d += s;
        }
        for (r, e) in rhs.iter_mut().zip(&eval.r) {
            *r = -e;
        }
        delta.iter_mut().for_each(|d| *d = 0.0);
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..v.len() {
                out[i] = shift[i] * v[i];
            }
            lin.add_apply(v, out);
        };
        let cg = pcg(apply, &diag, &rhs, &mut delta, 1e-14, 20 * n + 200);
        if !cg.relative_residual.is_finite() {
            return Err(eval.relative());
        }

        // line search on the residual norm
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            for i in 0..n {
                work[i] = w[i] + lambda * delta[i];
            }
            if let Some(trial) = Residual::eval(op, f, u, &work, dt) {
                let target = if use_newton {
                    (1.0 - 1e-4 * lambda) * eval.norm
                } else {
                    eval.norm
                };
                if trial.norm < target || trial.relative() <= cfg.nonlinear_tol {
                    accepted = Some(trial);
                    break;
                }
            }
            lambda *= if use_newton { 0.5 } else { cfg.damping };
        }
        match accepted {
            Some(trial) => {
                core::mem::swap(&mut w, &mut work);
                eval = trial;
                if eval.relative() <= cfg.nonlinear_tol {
                    return Ok(w);
                }
            }
            None => {
                // no decrease along this direction; a Newton failure falls back to Picard
                if !use_newton {
                    return Err(eval.relative());
                }
                newton_left = 0;
            }
        }
    }
    Err(eval.relative())
}

/// `R(w)` and its normalization.
struct Residual {
    r: Vec<f64>,
    norm: f64,
    scale: f64,
}

impl Residual {
    /// `None` when `w` leaves the domain where `f` can be evaluated.
    fn eval(op: &DiscreteOperator<'_>, f: &NonlinearityModel, u: &[f64], w: &[f64], dt: f64) -> Option<Self> {
        let grid = op.grid();
        let aw = op.apply(w).ok()?;
        let g = grid.g_nodes();
        let mut r = Vec::with_capacity(w.len());
        let (mut su, mut sg, mut sw, mut sa, mut sf) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..w.len() {
            let fw = f.try_f(w[i]).ok()?;
            let ui = u[i] / dt;
            let wi = w[i] / dt;
            r.push(wi - ui + aw[i] + fw - g[i]);
            su += ui * ui;
            sg += g[i] * g[i];
            sw += wi * wi;
            sa += aw[i] * aw[i];
            sf += fw * fw;
        }
        let norm = norm2(&r);
        if !norm.is_finite() {
            return None;
        }
        Some(Residual {
            r,
            norm,
            scale: su.sqrt() + sg.sqrt() + sw.sqrt() + sa.sqrt() + sf.sqrt(),
        })
    }

    fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            if self.norm == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.norm / self.scale
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ε` for the Newton Jacobian: the configured regularization, else `1e-8` of the largest face gradient.
fn newton_epsilon(op: &DiscreteOperator<'_>, w: &[f64]) -> f64 {
    if op.epsilon_reg() > 0.0 {
        return op.epsilon_reg();
    }
    let grid = op.grid();
    let scale = grid.faces().iter().fold(0.0f64, |m, face| {
        let (gn, gt) = grid.face_gradient(w, face);
        m.max((gn * gn + gt * gt).sqrt())
    });
    if scale > 0.0 {
        1e-8 * scale
    } else {
        1e-8
    }
}

/// Root of `s (1 + dt β) + dt f(s) = r` by safeguarded Newton with bisection.
pub fn scalar_resolvent(f: &NonlinearityModel, beta: f64, dt: f64, r: f64) -> f64 {
    let k = 1.0 + dt * beta;
    let guess = r / k;
    if f.is_zero() || r == 0.0 && f.f(0.0) == 0.0 {
        return guess;
    }
    let phi = |s: f64| {
        let v = s * k + dt * f.f(s) - r;
        if v.is_nan() {
            f64::INFINITY * s.signum()
        } else {
            v
        }
    };
    let (mut lo, mut hi) = (guess.min(0.0), guess.max(0.0));
    // the bracket is exact when f(s)s >= 0; widen it otherwise
    let mut widen = 0;
    while phi(lo) > 0.0 && widen < 200 {
        lo = 2.0 * lo - 1.0;
        widen += 1;
    }
    while phi(hi) < 0.0 && widen < 400 {
        hi = 2.0 * hi + 1.0;
        widen += 1;
    }
    let mut s = guess;
    let mut width = hi - lo;
    for _ in 0..400 {
        let v = phi(s);
        if v == 0.0 {
            return s;
        }
        if v > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = k + dt * f.f_prime(s);
        let mut next = s - v / d;
        // bisect when Newton leaves the bracket or stalls far from the root
        if !(next > lo && next < hi) || hi - lo > 0.5 * width {
            next = 0.5 * (lo + hi);
        }
        width = hi - lo;
        if (next - s).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs())
        {
            return next;
        }
        s = next;
    }
    s
}

#[cfg(test)]
fn l2_sq(grid: &Grid, u: &[f64]) -> f64 {
    grid.weighted_square_integral(u, None, |_| true)
}
