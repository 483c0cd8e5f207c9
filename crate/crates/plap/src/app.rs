//! Subcommand implementations.
//!
//! Exit codes: 0 when the command's criterion holds, 1 when it does not,
//! 2 for configuration, parse and IO errors, 3 for solver failures (a
//! diagnostic dump is written to the output directory).

use std::fmt;
use std::path::PathBuf;

use plap_core::dynamics::{
    absorbing_test, attractor_sample, compactness_probe, contraction_test, uniform_checkpoints, AbsorbingRadius,
    EnsembleRun,
};
use plap_core::embedding::estimate_embedding_constant;
use plap_core::grid::l2_norm;
use plap_core::initial::{gaussian, random_smooth_field, rng, sine_mode};
use plap_core::integrator::run_to_time;
use plap_core::model::{validate_beta_bounds, validate_sigma_integrability, validate_source_sign};
use plap_core::operator::DiscreteOperator;
use plap_core::{Error, Grid, LedgerRow, LedgerSink, ProblemSpec, State, StepConfig, Strictness};
use serde::Serialize;

use crate::config::{ConfigError, ExperimentKind, InitialConfig, RunConfig};
use crate::exec::Rayon;
use crate::ledger::CsvLedger;
use crate::report::*;
use crate::snapshot::Snapshot;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict_paper: bool,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver { message: String, dump: PathBuf },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver { .. } => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "error: {m}"),
            Failure::Solver { message, dump } => {
                write!(f, "solver failure: {message}\ndiagnostic dump: {}", dump.display())
            }
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("io: {e}"))
    }
}

/// What a successful invocation produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    /// Lines for standard output, last line last.
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Setup {
    cfg: RunConfig,
    spec: ProblemSpec,
    grid: Grid,
    step: StepConfig,
    out_dir: PathBuf,
}

impl Setup {
    fn new(kind: ExperimentKind, opts: &Options) -> Result<Self, Failure> {
        let mut cfg = RunConfig::load(&opts.config)?;
        if let Some(k) = cfg.experiment.kind {
            if k != kind {
                return Err(Failure::Config(format!(
                    "configuration is for `{}` but `{}` was requested",
                    k.name(),
                    kind.name()
                )));
            }
        }
        if let Some(out) = &opts.out {
            cfg.io.out_dir = out.clone();
        }
        if let Some(seed) = opts.seed {
            cfg.seed = seed;
        }
        let spec = cfg.problem_spec()?;
        let strictness = if opts.strict_paper {
            Strictness::Strict
        } else {
            Strictness::Relaxed
        };
        spec.check(strictness).map_err(config_error)?;
        let grid =
            Grid::with_stencil(&spec, cfg.grid.radius, cfg.grid.m_per_axis, cfg.stencil()).map_err(config_error)?;
        let step = cfg.stepping.step_config();
        step.check().map_err(config_error)?;
        let out_dir = cfg.io.out_dir.clone();
        std::fs::create_dir_all(&out_dir)?;
        Ok(Setup {
            cfg,
            spec,
            grid,
            step,
            out_dir,
        })
    }

    fn report(&self, kind: ExperimentKind, passed: bool, body: Body) -> Report {
        Report {
            experiment: kind.name(),
            spec_hash: self.cfg.spec_hash(),
            config_hash: self.cfg.config_hash(),
            seed: self.cfg.seed,
            passed,
            body,
        }
    }

    fn save(&self, report: &Report) -> Result<PathBuf, Failure> {
        let path = self.out_dir.join(format!("{}.json", report.experiment));
        report.save(&path)?;
        Ok(path)
    }

    fn operator(&self) -> Result<DiscreteOperator<'_>, Failure> {
        DiscreteOperator::new(&self.grid, self.spec.p).map_err(config_error)
    }

    /// `count` seeded random fields of the given norm.
    fn random_fields(&self, count: usize, norm: f64) -> Vec<Vec<f64>> {
        let mut r = rng(self.cfg.seed);
        (0..count)
            .map(|_| random_smooth_field(&self.grid, &mut r, norm))
            .collect()
    }

    /// Maps a core error to a failure, dumping diagnostics for solver errors.
    fn fail(&self, err: Error, fallback: Option<&State>) -> Failure {
        if is_config_error(&err) {
            return config_error(err);
        }
        let dump = self.out_dir.join("failure.json");
        let state = match &err {
            Error::SolveFailed { t, last_state, .. } => Some(State::new(last_state.clone(), *t)),
            _ => fallback.cloned(),
        };
        let snapshot = state.map(|s| {
            let path = self.out_dir.join("failure.plap");
            (Snapshot::of(&self.grid, &s).save(&path), path)
        });
        #[derive(Serialize)]
        struct Dump {
            error: String,
            config_hash: String,
            snapshot: Option<String>,
        }
        let d = Dump {
            error: err.to_string(),
            config_hash: self.cfg.config_hash(),
            snapshot: snapshot
                .as_ref()
                .and_then(|(r, p)| r.is_ok().then(|| p.display().to_string())),
        };
        let _ = std::fs::write(&dump, serde_json::to_string_pretty(&d).unwrap_or_default() + "\n");
        Failure::Solver {
            message: err.to_string(),
            dump,
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_) | Error::InsufficientData(_) | Error::ShapeMismatch { .. } | Error::Degenerate(_)
    )
}

fn config_error(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

pub fn run(kind: ExperimentKind, opts: &Options) -> Result<Outcome, Failure> {
    let setup = Setup::new(kind, opts)?;
    match kind {
        ExperimentKind::Validate => validate(&setup),
        ExperimentKind::Simulate => simulate(&setup),
        ExperimentKind::Contract => contract(&setup),
        ExperimentKind::Absorb => absorb(&setup),
        ExperimentKind::Compact => compact(&setup),
        ExperimentKind::Attractor => attractor(&setup),
    }
}

fn validate(s: &Setup) -> Result<Outcome, Failure> {
    let e = &s.cfg.experiment;
    let spec = &s.spec;
    let r_max = s.grid.radius() * (spec.n as f64).sqrt();
    let reports = [
        validate_sigma_integrability(&spec.sigma, spec.p, spec.n, e.probe_radius),
        validate_beta_bounds(&spec.beta, spec.beta0, spec.r0, r_max, e.samples),
        validate_source_sign(&spec.nonlinearity, spec.c_mono, e.f_range, e.samples),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(config_error)?;
    let passed = reports.iter().all(|r| r.passed);
    let mut lines: Vec<String> = reports
        .iter()
        .map(|r| {
            let status = if r.passed { "pass" } else { "FAIL" };
            format!("{status} {}: {}", r.condition.label(), r.message)
        })
        .collect();
    let report = s.report(
        ExperimentKind::Validate,
        passed,
        Body::Validate(ValidateBody {
            conditions: reports.iter().map(ConditionJson::from).collect(),
            grid_nodes: s.grid.len(),
            spacing: s.grid.spacing(),
        }),
    );
    lines.push(format!("report: {}", s.save(&report)?.display()));
    Ok(Outcome { passed, lines })
}

fn initial_state(s: &Setup) -> Result<State, Failure> {
    let grid = &s.grid;
    let u = match &s.cfg.initial {
        InitialConfig::Zero => vec![0.0; grid.len()],
        InitialConfig::Gaussian { amplitude, width } => gaussian(grid, *amplitude, *width),
        InitialConfig::Sine { mode, amplitude } => sine_mode(grid, *mode, *amplitude),
        InitialConfig::Bumps { norm } => random_smooth_field(grid, &mut rng(s.cfg.seed), *norm),
        InitialConfig::Snapshot { path } => {
            let snap = Snapshot::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            if !snap.matches(grid) {
                return Err(Failure::Config(format!(
                    "{}: snapshot geometry (n = {}, m_per_axis = {}, R = {}) differs from the configured grid",
                    path.display(),
                    snap.n,
                    snap.m_per_axis,
                    snap.radius
                )));
            }
            let state = snap.state();
            state.check_finite().map_err(config_error)?;
            return Ok(state);
        }
    };
    let state = State::new(u, 0.0);
    state.check_finite().map_err(config_error)?;
    Ok(state)
}

/// Forwards rows to the CSV writer and keeps the largest balance residual.
struct Tee<'a, W: std::io::Write> {
    csv: &'a mut CsvLedger<W>,
    max_residual: f64,
    steps: usize,
}

impl<W: std::io::Write> LedgerSink for Tee<'_, W> {
    fn record(&mut self, row: &LedgerRow) {
        self.csv.record(row);
        self.max_residual = self.max_residual.max(row.balance_residual);
        self.steps += 1;
    }
}

fn simulate(s: &Setup) -> Result<Outcome, Failure> {
    let op = s.operator()?;
    let f = &s.spec.nonlinearity;
    let start = initial_state(s)?;
    let t_final = s.cfg.stepping.t_final;
    if !(t_final >= start.t) {
        return Err(Failure::Config(format!(
            "t_final = {t_final} precedes the start time {}",
            start.t
        )));
    }
    let dt = s.step.dt;
    let every = s.cfg.io.snapshot_every;
    let mut csv = CsvLedger::create(&s.out_dir.join(&s.cfg.io.ledger))?;
    let mut tee = Tee {
        csv: &mut csv,
        max_residual: 0.0,
        steps: 0,
    };
    let mut snapshots = Vec::new();
    let mut state = start.clone();
    // chunks of `every` steps; chunk targets lie on the same time lattice as an unchunked run
    let mut chunk = 0usize;
    while state.t < t_final {
        let target = if every == 0 {
            t_final
        } else {
            chunk += 1;
            (start.t + (chunk * every) as f64 * dt).min(t_final)
        };
        let target = if t_final - target < dt * 1e-9 { t_final } else { target };
        state = run_to_time(&state, target, &s.step, &op, f, &mut tee).map_err(|e| s.fail(e, Some(&state)))?;
        if every > 0 && state.t < t_final {
            let name = format!("snapshot_{:06}.plap", chunk * every);
            Snapshot::of(&s.grid, &state).save(&s.out_dir.join(&name))?;
            snapshots.push(name);
        }
    }
    let (steps, max_residual) = (tee.steps, tee.max_residual);
    csv.finish()?;
    let final_snap = Snapshot::of(&s.grid, &state);
    final_snap.save(&s.out_dir.join("final.plap"))?;
    std::fs::write(s.out_dir.join("final.csv"), final_snap.to_csv())?;
    snapshots.push("final.plap".into());
    let norm = l2_norm(&s.grid, &state.u);
    let report = s.report(
        ExperimentKind::Simulate,
        true,
        Body::Simulate(SimulateBody {
            t_start: start.t,
            t_final: state.t,
            steps,
            final_l2: norm,
            max_balance_residual: max_residual,
            snapshots,
        }),
    );
    let path = s.save(&report)?;
    Ok(Outcome {
        passed: true,
        lines: vec![format!("report: {}", path.display()), bare_decimal(norm)],
    })
}

/// Plain positional notation with at least one fractional digit.
fn bare_decimal(v: f64) -> String {
    let s = v.to_string();
    if s.contains('.') || !v.is_finite() {
        s
    } else {
        s + ".0"
    }
}

fn contract(s: &Setup) -> Result<Outcome, Failure> {
    let e = &s.cfg.experiment;
    let fields = s.random_fields(2 * e.count, e.initial_norm);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = fields.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect();
    let t_final = s.cfg.stepping.t_final;
    let reports = plap_core::exec::Executor::map(&Rayon, pairs, |_, (u0, v0)| {
        contraction_test(
            &s.spec,
            &s.grid,
            &u0,
            &v0,
            t_final,
            &s.step,
            e.checkpoints,
            &plap_core::exec::Sequential,
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|err| s.fail(err, None))?;
    let passed = reports.iter().all(|r| r.passed);
    let max_ratio = reports.iter().fold(0.0f64, |m, r| m.max(r.max_ratio));
    let report = s.report(
        ExperimentKind::Contract,
        passed,
        Body::Contract(ContractBody {
            contraction: reports
                .iter()
                .enumerate()
                .map(|(i, r)| ContractionJson::new(i, r))
                .collect(),
            max_ratio,
        }),
    );
    let path = s.save(&report)?;
    Ok(Outcome {
        passed,
        lines: vec![
            format!("pairs: {}, max ratio: {max_ratio:.6e}", reports.len()),
            format!("report: {}", path.display()),
        ],
    })
}

/// `count` norms spaced geometrically in `[lo, hi]`.
pub fn geometric_norms(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}

fn absorb(s: &Setup) -> Result<Outcome, Failure> {
    let e = &s.cfg.experiment;
    let est = estimate_embedding_constant(&s.grid, s.spec.p, e.embedding_trials, e.embedding_steps, s.cfg.seed)
        .map_err(config_error)?;
    let radius = AbsorbingRadius::for_grid(&s.grid, est.constant).map_err(config_error)?;
    let rho = radius.rho_sq.sqrt();
    let mut r = rng(s.cfg.seed.wrapping_add(1));
    let initials: Vec<Vec<f64>> = geometric_norms(e.norm_factor_min * rho, e.norm_factor_max * rho, e.count)
        .into_iter()
        .map(|n| random_smooth_field(&s.grid, &mut r, n))
        .collect();
    let rep = absorbing_test(
        &s.spec,
        &s.grid,
        radius,
        &initials,
        s.cfg.stepping.t_final,
        &s.step,
        &Rayon,
    )
    .map_err(|err| s.fail(err, None))?;
    let body = AbsorbBody::from(&rep);
    let lines = vec![
        format!(
            "rho_sq: {:.6e}, c1_h: {:.6e}, c1_emp: {}, T0: {}",
            body.rho_sq,
            body.c1_h,
            opt(body.c1_emp),
            opt(body.t0)
        ),
        format!(
            "report: {}",
            s.save(&s.report(ExperimentKind::Absorb, rep.passed, Body::Absorb(body)))?
                .display()
        ),
    ];
    Ok(Outcome {
        passed: rep.passed,
        lines,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| format!("{v:.6e}"))
}

fn compact(s: &Setup) -> Result<Outcome, Failure> {
    let e = &s.cfg.experiment;
    let horizon = s.cfg.stepping.t_final;
    let mut run = EnsembleRun::new(
        &s.spec,
        &s.grid,
        s.step,
        s.random_fields(e.count, e.initial_norm),
        horizon,
    );
    run.checkpoint_times = uniform_checkpoints(0.0, horizon, e.checkpoints.max(1));
    run.epsilon = e.epsilon;
    let rep = compactness_probe(&run, &Rayon).map_err(|err| s.fail(err, None))?;
    let passed = rep.shrinking && rep.envelope.holds;
    let mut csv = String::from("t,diameter\n");
    for (t, d) in rep.times.iter().zip(&rep.diameters) {
        csv.push_str(&format!("{t},{d}\n"));
    }
    std::fs::write(s.out_dir.join("diameters.csv"), csv)?;
    let body = CompactBody::from(&rep);
    let first = rep.diameters[0];
    let last = rep.diameters[rep.diameters.len() - 1];
    let path = s.save(&s.report(ExperimentKind::Compact, passed, Body::Compact(body)))?;
    Ok(Outcome {
        passed,
        lines: vec![
            format!(
                "D(0): {first:.6e}, D(T): {last:.6e}, envelope holds: {}",
                rep.envelope.holds
            ),
            format!("report: {}", path.display()),
        ],
    })
}

fn attractor(s: &Setup) -> Result<Outcome, Failure> {
    let e = &s.cfg.experiment;
    let initials = s.random_fields(e.count, e.initial_norm);
    let snaps = attractor_sample(
        &s.spec,
        &s.grid,
        &initials,
        e.t_burn,
        e.n_snapshots,
        e.spacing,
        &s.step,
        &Rayon,
    )
    .map_err(|err| s.fail(err, None))?;
    let per = e.n_snapshots;
    let norms: Vec<Vec<f64>> = snaps
        .chunks(per)
        .map(|c| c.iter().map(|st| l2_norm(&s.grid, &st.u)).collect())
        .collect();
    let finals: Vec<&State> = snaps.chunks(per).map(|c| &c[per - 1]).collect();
    let mut spread = 0.0f64;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            let d: Vec<f64> = finals[i].u.iter().zip(&finals[j].u).map(|(a, b)| a - b).collect();
            spread = spread.max(l2_norm(&s.grid, &d));
        }
    }
    let passed = spread <= e.tolerance;
    for (i, st) in finals.iter().enumerate() {
        Snapshot::of(&s.grid, st).save(&s.out_dir.join(format!("attractor_{i:03}.plap")))?;
    }
    let path = s.save(&s.report(
        ExperimentKind::Attractor,
        passed,
        Body::Attractor(AttractorBody {
            t_burn: e.t_burn,
            spacing: e.spacing,
            norms,
            spread,
            tolerance: e.tolerance,
        }),
    ))?;
    Ok(Outcome {
        passed,
        lines: vec![
            format!("spread: {spread:.6e} (tolerance {:e})", e.tolerance),
            format!("report: {}", path.display()),
        ],
    })
}
