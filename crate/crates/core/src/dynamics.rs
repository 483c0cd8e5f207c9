//! Semigroup-level experiments: contraction of pairs of trajectories,
//! certification of the absorbing ball, and ensemble-diameter shrinkage.
//!
//! The absorbing radius uses the discrete constants
//!
//! ```text
//! c1_h = min(1, C̄_h^{-2}) / 2,   c2_h = 2 / c1_h,
//! ρ²   = (c2_h ‖g‖² + 2) / c1_h + 1,
//! ```
//!
//! where `C̄_h` is the estimated embedding constant. Testing the scheme with
//! the new iterate, bounding `‖u‖²` by `C̄_h²‖u‖²_W`, using
//! `1 + ∫σ|∇u|^p ≥ (∫σ|∇u|^p)^{2/p}` and Young's inequality on `⟨g, u⟩` gives
//! `(1 + c1_h dt)‖u'‖² ≤ ‖u‖² + dt (c2_h ‖g‖² + 2)`, so the ball
//! `{‖u‖² ≤ ρ²}` is entered in finite time and never left.
//!
//! The compactness probe is a quantitative diameter-shrinkage diagnostic on
//! a finite grid; it is not a proof of relative compactness.

use alloc::vec::Vec;
use num_traits::Float;

use crate::exec::Executor;
use crate::grid::{l2_norm, Grid, State};
use crate::integrator::{run_to_time, EnergyLedger, StepConfig};
use crate::model::ProblemSpec;
use crate::operator::DiscreteOperator;
use crate::{Error, Result};

/// Contraction ratios above `1 + CONTRACTION_SLACK` fail.
pub const CONTRACTION_SLACK: f64 = 1e-8;
pub const DEFAULT_CHECKPOINTS: usize = 16;

fn operator<'g>(spec: &ProblemSpec, grid: &'g Grid) -> Result<DiscreteOperator<'g>> {
    if grid.dim() != spec.n {
        return Err(Error::invalid("grid dimension differs from the problem dimension"));
    }
    DiscreteOperator::new(grid, spec.p)
}

fn distance(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    l2_norm(grid, &d)
}

/// `k T / count` for `k = 1..=count`, last one exactly `T`.
pub fn uniform_checkpoints(t0: f64, t_final: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| {
            if k == count {
                t_final
            } else {
                t0 + (t_final - t0) * k as f64 / count as f64
            }
        })
        .collect()
}

/// Evolves `u0` from `t = 0` and snapshots it at each checkpoint.
fn trajectory(
    spec: &ProblemSpec,
    op: &DiscreteOperator<'_>,
    u0: &[f64],
    checkpoints: &[f64],
    cfg: &StepConfig,
    ledger: &mut EnergyLedger,
) -> Result<Vec<State>> {
    let mut state = State::new(u0.to_vec(), 0.0);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        state = run_to_time(&state, t, cfg, op, &spec.nonlinearity, ledger)?;
        out.push(state.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// The constant `c` in `e^{ct}`.
    pub c: f64,
    pub initial_distance: f64,
    /// `(t, ‖u(t) - v(t)‖ / (e^{ct} ‖u0 - v0‖))`.
    pub ratios: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub passed: bool,
}

/// Co-evolves `u0` and `v0` with identical stepping and checks
/// `‖u(t) - v(t)‖ ≤ e^{c t} ‖u0 - v0‖` with `c = spec.c_mono`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_test(
    spec: &ProblemSpec,
    grid: &Grid,
    u0: &[f64],
    v0: &[f64],
    t_final: f64,
    cfg: &StepConfig,
    checkpoints: usize,
    exec: &impl Executor,
) -> Result<ContractionReport> {
    let op = operator(spec, grid)?;
    grid.check_len(u0)?;
    grid.check_len(v0)?;
    cfg.check_with_c_mono(spec.c_mono)?;
    let d0 = distance(grid, u0, v0);
    if !(d0 > 0.0) {
        return Err(Error::Degenerate(
            "identical initial data: contraction ratio undefined".into(),
        ));
    }
    let times = uniform_checkpoints(0.0, t_final, checkpoints.max(1));
    let runs = exec.map(alloc::vec![u0, v0], |_, init| {
        trajectory(spec, &op, init, &times, cfg, &mut EnergyLedger::default())
    });
    let mut runs = runs.into_iter();
    let us = runs.next().expect("two runs")?;
    let vs = runs.next().expect("two runs")?;
    let c = spec.c_mono;
    let ratios: Vec<(f64, f64)> = us
        .iter()
        .zip(&vs)
        .map(|(a, b)| (a.t, distance(grid, &a.u, &b.u) / ((c * a.t).exp() * d0)))
        .collect();
    let max_ratio = ratios.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
    Ok(ContractionReport {
        c,
        initial_distance: d0,
        ratios,
        max_ratio,
        passed: max_ratio <= 1.0 + CONTRACTION_SLACK,
    })
}

/// Discrete constants of the absorbing ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingRadius {
    pub embedding_constant: f64,
    pub c1_h: f64,
    pub c2_h: f64,
    pub g_l2_sq: f64,
    pub rho_sq: f64,
}

impl AbsorbingRadius {
    pub fn new(embedding_constant: f64, g_l2_sq: f64) -> Result<Self> {
        if !(embedding_constant > 0.0) || !embedding_constant.is_finite() {
            return Err(Error::invalid("embedding constant must be positive and finite"));
        }
        let c1_h = 0.5 * (1.0f64).min(embedding_constant.powi(-2));
        let c2_h = 2.0 / c1_h;
        Ok(AbsorbingRadius {
            embedding_constant,
            c1_h,
            c2_h,
            g_l2_sq,
            rho_sq: (c2_h * g_l2_sq + 2.0) / c1_h + 1.0,
        })
    }

    pub fn for_grid(grid: &Grid, embedding_constant: f64) -> Result<Self> {
        Self::new(
            embedding_constant,
            grid.weighted_square_integral(grid.g_nodes(), None, |_| true),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryRecord {
    pub initial_l2_sq: f64,
    /// First time with `‖u‖² ≤ ρ²`; `None` if not entered by the horizon.
    pub entry_time: Option<f64>,
    /// Accepted steps after entry with `‖u‖² > ρ²`.
    pub exits: usize,
    /// Least-squares slope of `-ln ‖u‖²` while `‖u‖² > 2ρ²`, if there are at least two points.
    pub decay_rate: Option<f64>,
    pub final_l2_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbReport {
    pub radius: AbsorbingRadius,
    pub horizon: f64,
    pub entries: Vec<EntryRecord>,
    /// Largest entry time (the observed `T0`), if every trajectory entered.
    pub t0: Option<f64>,
    /// Smallest fitted decay rate over the trajectories.
    pub c1_emp: Option<f64>,
    /// Every trajectory entered and none exited.
    pub passed: bool,
}

/// Evolves every initial field to `t_final` and records entry into `{‖u‖² ≤ ρ²}`.
pub fn absorbing_test(
    spec: &ProblemSpec,
    grid: &Grid,
    radius: AbsorbingRadius,
    initials: &[Vec<f64>],
    t_final: f64,
    cfg: &StepConfig,
    exec: &impl Executor,
) -> Result<AbsorbReport> {
    let op = operator(spec, grid)?;
    cfg.check_with_c_mono(spec.c_mono)?;
    for u in initials {
        grid.check_len(u)?;
        State::new(u.clone(), 0.0).check_finite()?;
    }
    let rho_sq = radius.rho_sq;
    let results = exec.map(initials.iter().collect(), |_, u0: &Vec<f64>| -> Result<EntryRecord> {
        let mut ledger = EnergyLedger::default();
        let end = run_to_time(
            &State::new(u0.clone(), 0.0),
            t_final,
            cfg,
            &op,
            &spec.nonlinearity,
            &mut ledger,
        )?;
        let initial_l2_sq = grid.weighted_square_integral(u0, None, |_| true);
        let mut entry_time = (initial_l2_sq <= rho_sq).then_some(0.0);
        let mut exits = 0;
        let mut fit = Vec::new();
        if initial_l2_sq > 2.0 * rho_sq {
            fit.push((0.0, initial_l2_sq.ln()));
        }
        for row in &ledger.rows {
            match entry_time {
                None if row.l2_sq <= rho_sq => entry_time = Some(row.t),
                Some(_) if row.l2_sq > rho_sq => exits += 1,
                _ => {}
            }
            if row.l2_sq > 2.0 * rho_sq {
                fit.push((row.t, row.l2_sq.ln()));
            }
        }
        Ok(EntryRecord {
            initial_l2_sq,
            entry_time,
            exits,
            decay_rate: least_squares_slope(&fit).map(|s| -s),
            final_l2_sq: grid.weighted_square_integral(&end.u, None, |_| true),
        })
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let all_entered = entries.iter().all(|e| e.entry_time.is_some());
    let t0 = all_entered.then(|| entries.iter().filter_map(|e| e.entry_time).fold(0.0, f64::max));
    let c1_emp = entries
        .iter()
        .filter_map(|e| e.decay_rate)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))));
    let passed = all_entered && entries.iter().all(|e| e.exits == 0);
    Ok(AbsorbReport {
        radius,
        horizon: t_final,
        entries,
        t0,
        c1_emp,
        passed,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `2 c1² ε/(T - ε) + c5/(T - ε) · L(T, ε)` with
/// `L = ln(T/2ε)` for `p = 2` and `L = (p-1)/(p-2) (T^{(p-2)/(p-1)} - (2ε)^{(p-2)/(p-1)})` for `p > 2`.
pub fn compactness_envelope(p: f64, t: f64, epsilon: f64, c1: f64, c5: f64) -> Result<f64> {
    let (a, b) = envelope_terms(p, t, epsilon, c1)?;
    Ok(a + c5 * b)
}

/// The envelope split as `a + c5 b`.
fn envelope_terms(p: f64, t: f64, epsilon: f64, c1: f64) -> Result<(f64, f64)> {
    if !(p >= 2.0) {
        return Err(Error::invalid("p must satisfy p >= 2"));
    }
    if !(epsilon > 0.0) || !(t > 2.0 * epsilon) {
        return Err(Error::invalid("the envelope needs 0 < 2ε < T"));
    }
    let shape = if p == 2.0 {
        (t / (2.0 * epsilon)).ln()
    } else {
        let e = (p - 2.0) / (p - 1.0);
        (p - 1.0) / (p - 2.0) * (t.powf(e) - (2.0 * epsilon).powf(e))
    };
    Ok((2.0 * c1 * c1 * epsilon / (t - epsilon), shape / (t - epsilon)))
}

/// Ensemble of trajectories sharing problem, grid and stepping.
#[derive(Debug, Clone)]
pub struct EnsembleRun<'a> {
    pub spec: &'a ProblemSpec,
    pub grid: &'a Grid,
    pub cfg: StepConfig,
    pub initials: Vec<Vec<f64>>,
    pub horizon: f64,
    /// Sorted, positive, at most `horizon`; `t = 0` is always added by the probe.
    pub checkpoint_times: Vec<f64>,
    /// ε in the envelope; `horizon / 8` when `None`.
    pub epsilon: Option<f64>,
}

impl<'a> EnsembleRun<'a> {
    /// Ensemble with the default 16 uniform checkpoints.
    pub fn new(spec: &'a ProblemSpec, grid: &'a Grid, cfg: StepConfig, initials: Vec<Vec<f64>>, horizon: f64) -> Self {
        EnsembleRun {
            spec,
            grid,
            cfg,
            initials,
            horizon,
            checkpoint_times: uniform_checkpoints(0.0, horizon, DEFAULT_CHECKPOINTS),
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub p: f64,
    pub epsilon: f64,
    /// Uniform L² bound of the ensemble.
    pub c1: f64,
    /// Least-squares fit on checkpoints in `[2ε, T/2]`, clamped at zero.
    pub c5: f64,
    /// Envelope at the horizon.
    pub value: f64,
    /// `min D(t)²` over checkpoints after `T/2`.
    pub min_late_d_sq: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactReport {
    /// Checkpoint times, starting at 0.
    pub times: Vec<f64>,
    pub diameters: Vec<f64>,
    /// Condensed upper-triangular pairwise distances per checkpoint (`(0,1), (0,2), ..., (1,2), ...`).
    pub distances: Vec<Vec<f64>>,
    /// `D` at the last checkpoint does not exceed `D` at the first positive one.
    pub shrinking: bool,
    pub envelope: EnvelopeCheck,
    /// Final fields, by trajectory index.
    pub finals: Vec<Vec<f64>>,
}

/// Tracks pairwise distances of an ensemble and checks diameter shrinkage against the envelope.
pub fn compactness_probe(run: &EnsembleRun<'_>, exec: &impl Executor) -> Result<CompactReport> {
    let (spec, grid) = (run.spec, run.grid);
    if run.initials.len() < 3 {
        return Err(Error::invalid("the compactness probe needs at least 3 trajectories"));
    }
    let times = &run.checkpoint_times;
    if times.is_empty()
        || times.windows(2).any(|w| !(w[0] < w[1]))
        || !(times[0] > 0.0)
        || times[times.len() - 1] > run.horizon
    {
        return Err(Error::invalid("checkpoint times must be increasing in (0, horizon]"));
    }
    let op = operator(spec, grid)?;
    run.cfg.check_with_c_mono(spec.c_mono)?;
    for u in &run.initials {
        grid.check_len(u)?;
    }
    let snaps = exec
        .map(run.initials.iter().collect(), |_, u0: &Vec<f64>| {
            trajectory(spec, &op, u0, times, &run.cfg, &mut EnergyLedger::default())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let k = run.initials.len();
    let mut all_times = alloc::vec![0.0];
    all_times.extend_from_slice(times);
    let field = |traj: usize, ck: usize| -> &[f64] {
        if ck == 0 {
            &run.initials[traj]
        } else {
            &snaps[traj][ck - 1].u
        }
    };
    let mut distances = Vec::with_capacity(all_times.len());
    let mut diameters = Vec::with_capacity(all_times.len());
    let mut c1 = 0.0f64;
    for ck in 0..all_times.len() {
        let mut row = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            c1 = c1.max(l2_norm(grid, field(i, ck)));
            for j in i + 1..k {
                row.push(distance(grid, field(i, ck), field(j, ck)));
            }
        }
        diameters.push(row.iter().fold(0.0f64, |m, d| m.max(*d)));
        distances.push(row);
    }
    let shrinking = diameters[diameters.len() - 1] <= diameters[1];

    let t_end = run.horizon;
    let epsilon = run.epsilon.unwrap_or(t_end / 8.0);
    let (mut num, mut den) = (0.0, 0.0);
    for (t, d) in all_times.iter().zip(&diameters) {
        if *t > 2.0 * epsilon && *t <= 0.5 * t_end {
            let (a, b) = envelope_terms(spec.p, *t, epsilon, c1)?;
            num += b * (d * d - a);
            den += b * b;
        }
    }
    let c5 = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    let value = compactness_envelope(spec.p, t_end, epsilon, c1, c5)?;
    let min_late_d_sq = all_times
        .iter()
        .zip(&diameters)
        .filter(|(t, _)| **t > 0.5 * t_end)
        .fold(f64::INFINITY, |m, (_, d)| m.min(d * d));
    let envelope = EnvelopeCheck {
        p: spec.p,
        epsilon,
        c1,
        c5,
        value,
        min_late_d_sq,
        holds: min_late_d_sq <= value,
    };
    Ok(CompactReport {
        times: all_times,
        diameters,
        distances,
        shrinking,
        envelope,
        finals: snaps
            .into_iter()
            .map(|s| s.last().expect("checkpoints").u.clone())
            .collect(),
    })
}

/// Snapshots of every trajectory at `t_burn + j·spacing`, `j = 0..n_snapshots`,
/// ordered by trajectory then time.
#[allow(clippy::too_many_arguments)]
pub fn attractor_sample(
    spec: &ProblemSpec,
    grid: &Grid,
    initials: &[Vec<f64>],
    t_burn: f64,
    n_snapshots: usize,
    spacing: f64,
    cfg: &StepConfig,
    exec: &impl Executor,
) -> Result<Vec<State>> {
    let op = operator(spec, grid)?;
    cfg.check_with_c_mono(spec.c_mono)?;
    if !(t_burn >= 0.0) || !(spacing > 0.0) || n_snapshots == 0 {
        return Err(Error::invalid(
            "need t_burn >= 0, spacing > 0 and at least one snapshot",
        ));
    }
    let times: Vec<f64> = (0..n_snapshots).map(|j| t_burn + j as f64 * spacing).collect();
    let runs = exec.map(initials.iter().collect(), |_, u0: &Vec<f64>| -> Result<Vec<State>> {
        grid.check_len(u0)?;
        let mut state = State::new(u0.clone(), 0.0);
        let mut out = Vec::with_capacity(times.len());
        for &t in &times {
            state = run_to_time(
                &state,
                t,
                cfg,
                &op,
                &spec.nonlinearity,
                &mut crate::integrator::NullSink,
            )?;
            out.push(state.clone());
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for r in runs {
        all.extend(r?);
    }
    Ok(all)
}
