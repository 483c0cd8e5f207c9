//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and exits
//! nonzero if any criterion fails or exceeds its time budget.
//!
//! Every expected value is computed here from a closed form or an independent
//! evaluation, never read back from the library.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use plap::exec::Rayon;
use plap::snapshot::Snapshot;
use plap_core::dynamics::{
    absorbing_test, compactness_envelope, compactness_probe, contraction_test, uniform_checkpoints, AbsorbingRadius,
    EnsembleRun,
};
use plap_core::embedding::estimate_embedding_constant;
use plap_core::exec::{Executor, Sequential};
use plap_core::grid::{l2_norm, truncate_bk, w_norm};
use plap_core::initial::{gaussian, random_smooth_field, rng, sine_mode};
use plap_core::integrator::{run_to_time, step_implicit, NullSink};
use plap_core::model::{
    sigma_exponent, validate_beta_bounds, validate_sigma_integrability, validate_source_sign, DEFAULT_F_RANGE,
    DEFAULT_SAMPLES,
};
use plap_core::operator::DiscreteOperator;
use plap_core::{CoefficientProfile, Grid, NonlinearityModel, ProblemSpec, State, StepConfig};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(p: f64, n: usize, sigma: CoefficientProfile, beta: CoefficientProfile, f: NonlinearityModel) -> ProblemSpec {
    ProblemSpec {
        p,
        n,
        sigma,
        beta,
        source_g: CoefficientProfile::constant(0.0),
        nonlinearity: f,
        beta0: 1.0,
        r0: 1.0,
        c_mono: 1.0,
    }
}

fn one() -> CoefficientProfile {
    CoefficientProfile::constant(1.0)
}

fn power(amplitude: f64, alpha: f64) -> CoefficientProfile {
    CoefficientProfile::PowerLaw {
        amplitude,
        alpha,
        offset: 0.0,
        cap: None,
    }
}

fn grid(s: &ProblemSpec, r: f64, m: usize) -> Grid {
    Grid::new(s, r, m).expect("fixture grid")
}

fn diff(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1. validator fixture matrix ------------------------------------------------

/// Surface measure of the unit sphere in R^n.
fn sphere(n: usize) -> f64 {
    if n == 1 {
        2.0
    } else {
        2.0 * PI
    }
}

fn validators() -> Outcome {
    let mut timings = Vec::new();

    // σ: integrability of σ^{-e} near the origin, decided by the leading exponent
    let sigma_cases: Vec<(CoefficientProfile, f64, usize)> = vec![
        (power(1.0, 2.9), 2.5, 2),
        (power(1.0, 3.1), 2.5, 2),
        (power(1.0, 1.9), 2.0, 1),
        (power(1.0, 2.1), 2.0, 1),
        (power(1.0, 4.5), 4.0, 1),
        (power(1.0, 5.5), 4.0, 1),
        (power(1.0, 6.0), 4.0, 2),
        (power(3.0, 1.0), 3.0, 2),
        (CoefficientProfile::constant(2.0), 2.0, 2),
        (
            CoefficientProfile::TwoPower {
                amplitude: 1.0,
                alpha: 1.0,
                gamma: 3.0,
            },
            2.0,
            2,
        ),
        (CoefficientProfile::FlatAtOrigin { amplitude: 1.0 }, 3.0, 2),
    ];
    let probe = 1.0f64;
    let start = Instant::now();
    for (sigma, p, n) in &sigma_cases {
        let e = sigma_exponent(*p, *n);
        // independent recomputation of the exponent
        let nf = *n as f64;
        ensure((e - 2.0 * nf / (nf * (p - 2.0) + 2.0 * p)).abs() < 1e-15, || {
            "exponent".into()
        })?;
        let (expected, exact) = match sigma {
            CoefficientProfile::PowerLaw { amplitude, alpha, .. } => {
                let k = nf - alpha * e;
                (
                    k > 0.0,
                    (k > 0.0).then(|| amplitude.powf(-e) * sphere(*n) * probe.powf(k) / k),
                )
            }
            CoefficientProfile::Constant(c) => (true, Some(c.powf(-e) * sphere(*n) * probe.powf(nf) / nf)),
            CoefficientProfile::TwoPower { alpha, gamma, .. } => (nf - alpha.min(*gamma) * e > 0.0, None),
            _ => (false, None),
        };
        let r = validate_sigma_integrability(sigma, *p, *n, probe).map_err(err)?;
        ensure(r.passed == expected, || {
            format!("σ {sigma:?} p={p} n={n}: {}", r.message)
        })?;
        if let Some(v) = exact {
            ensure((r.estimate - v).abs() <= 1e-8 * v, || {
                format!("σ {sigma:?}: {} vs {v}", r.estimate)
            })?;
        }
    }
    timings.push(("sigma", start.elapsed(), sigma_cases.len()));

    // β: nonnegative, bounded above, and at least β0 outside B(0, r0)
    let r_max = 4.0 * 2f64.sqrt();
    let beta_cases: Vec<(CoefficientProfile, f64, f64, bool)> = vec![
        (CoefficientProfile::constant(2.0), 2.0, 1.0, true),
        (CoefficientProfile::constant(1.5), 2.0, 1.0, false),
        (
            CoefficientProfile::PowerLaw {
                amplitude: 1.0,
                alpha: 1.0,
                offset: 0.0,
                cap: Some(5.0),
            },
            1.0,
            1.0,
            true,
        ),
        (power(1.0, 1.0), 1.0, 1.0, false),
        (
            CoefficientProfile::GaussianBump {
                base: 1.0,
                amplitude: 3.0,
                center: 0.0,
                width: 1.0,
            },
            1.0,
            1.0,
            true,
        ),
        (
            CoefficientProfile::ExpDecay {
                amplitude: 1.0,
                rate: 1.0,
            },
            0.01,
            1.0,
            false,
        ),
        (
            CoefficientProfile::radial_table(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 2.0]).unwrap(),
            2.0,
            1.0,
            true,
        ),
        (
            CoefficientProfile::GaussianBump {
                base: 1.0,
                amplitude: -2.0,
                center: 0.0,
                width: 0.5,
            },
            0.5,
            2.0,
            false,
        ),
    ];
    let start = Instant::now();
    for (beta, beta0, r0, expected) in &beta_cases {
        let r = validate_beta_bounds(beta, *beta0, *r0, r_max, DEFAULT_SAMPLES).map_err(err)?;
        ensure(r.passed == *expected, || format!("β {beta:?}: {}", r.message))?;
    }
    timings.push(("beta", start.elapsed(), beta_cases.len()));

    // f: f(s)s >= 0 and f' >= -c, decided analytically per model
    use NonlinearityModel::*;
    let f_cases = [
        (OddPower { q: 2.0 }, 0.5),
        (OddPower { q: 5.0 }, 0.5),
        (Zero, 1.0),
        (ExpGrowth, 1.0),
        (CubicMinusLinear { a: 2.0, b: 0.5 }, 1.0),
        (CubicMinusLinear { a: 1.0, b: 0.0 }, 0.5),
        (CubicMinusLinear { a: -1.0, b: 0.0 }, 1.0),
        (CubicMinusLinear { a: 0.0, b: -1.0 }, 0.5),
        (CubicMinusLinear { a: 1.0, b: 0.4 }, 0.3),
    ];
    let start = Instant::now();
    for (f, c) in f_cases {
        let expected = match f {
            CubicMinusLinear { a, b } => a >= 0.0 && b <= 0.0 && b <= c,
            _ => true,
        };
        let r = validate_source_sign(&f, c, DEFAULT_F_RANGE, DEFAULT_SAMPLES).map_err(err)?;
        ensure(r.passed == expected, || format!("f {f:?} c={c}: {}", r.message))?;
    }
    timings.push(("f", start.elapsed(), f_cases.len()));

    for (name, t, _) in &timings {
        ensure(*t < Duration::from_secs(1), || format!("{name} validator took {t:?}"))?;
    }
    Ok(timings
        .iter()
        .map(|(n, t, k)| format!("{n}: {k} fixtures in {:.3} s", t.as_secs_f64()))
        .collect::<Vec<_>>()
        .join(", "))
}

// 2. monotonicity -------------------------------------------------------------

fn random_pair_field(grid: &Grid, r: &mut impl Rng) -> Vec<f64> {
    if r.gen_bool(0.5) {
        let scale = 10f64.powf(r.gen_range(-3.0..1.0));
        (0..grid.len()).map(|_| scale * r.gen_range(-1.0..1.0)).collect()
    } else {
        let norm = 10f64.powf(r.gen_range(-2.0..1.0));
        random_smooth_field(grid, r, norm)
    }
}

fn monotonicity() -> Outcome {
    let pairs = 10_000;
    let mut worst = f64::INFINITY;
    for p in [2.0, 2.5, 3.0, 4.0] {
        for (n, m) in [(1, 65), (2, 33)] {
            // β = 0 so that only the degenerate principal part is probed
            let s = spec(
                p,
                n,
                power(1.0, 1.0),
                CoefficientProfile::constant(0.0),
                NonlinearityModel::Zero,
            );
            let g = grid(&s, 4.0, m);
            let op = DiscreteOperator::new(&g, p).map_err(err)?;
            let seeds: Vec<u64> = (0..pairs as u64).collect();
            let results = Rayon.map(seeds, |_, seed| -> Result<f64, String> {
                let mut r = rng(seed ^ (p.to_bits() + n as u64));
                let u = random_pair_field(&g, &mut r);
                let v = random_pair_field(&g, &mut r);
                let d = diff(&op.apply(&u).map_err(err)?, &op.apply(&v).map_err(err)?);
                let w = diff(&u, &v);
                let pairing = g.inner(&d, &w);
                Ok(pairing / g.inner(&w, &w))
            });
            for (i, q) in results.into_iter().enumerate() {
                let q = q?;
                worst = worst.min(q);
                ensure(q >= -1e-10, || {
                    format!("p={p} n={n} pair {i}: normalized pairing {q:e}")
                })?;
            }
        }
    }
    Ok(format!("8 x {pairs} pairs, min ⟨Au-Av,u-v⟩/‖u-v‖² = {worst:.3e}"))
}

// 3. summation by parts -------------------------------------------------------

/// `Σ_f w_f σ_f |∇u|^p + h^n Σ β u²`, assembled directly from face data.
fn energy_oracle(g: &Grid, u: &[f64], p: f64) -> f64 {
    let h = g.spacing();
    let n = g.dim();
    let val = |k: Option<u32>| k.map_or(0.0, |k| u[k as usize]);
    let w = if n == 1 { h } else { 0.5 * h * h };
    let mut grad = 0.0;
    for f in g.faces() {
        let gn = (val(f.normal[1]) - val(f.normal[0])) / h;
        let t = &f.tangential;
        let gt = if n == 2 {
            (val(t[0]) - val(t[1]) + val(t[2]) - val(t[3])) / (4.0 * h)
        } else {
            0.0
        };
        grad += w * f.sigma * (gn * gn + gt * gt).sqrt().powf(p);
    }
    let beta: f64 = u.iter().zip(g.beta_nodes()).map(|(v, b)| b * v * v).sum::<f64>() * h.powi(n as i32);
    grad + beta
}

fn summation_by_parts() -> Outcome {
    let sigmas = [
        one(),
        power(1.0, 1.0),
        CoefficientProfile::TwoPower {
            amplitude: 0.5,
            alpha: 0.5,
            gamma: 2.0,
        },
    ];
    let betas = [
        one(),
        CoefficientProfile::GaussianBump {
            base: 1.0,
            amplitude: 2.0,
            center: 1.0,
            width: 0.7,
        },
    ];
    let mut count = 0;
    let mut worst = 0.0f64;
    for p in [2.0, 2.5, 3.0, 4.0] {
        for (n, m) in [(1, 65), (2, 33)] {
            for sigma in &sigmas {
                for beta in &betas {
                    let s = spec(p, n, sigma.clone(), beta.clone(), NonlinearityModel::Zero);
                    let g = grid(&s, 4.0, m);
                    let op = DiscreteOperator::new(&g, p).map_err(err)?;
                    let mut r = rng(count as u64);
                    let mut fields = vec![
                        sine_mode(&g, 1, 1.0),
                        sine_mode(&g, 3, 2.0),
                        gaussian(&g, 1.5, 1.0),
                        random_smooth_field(&g, &mut r, 3.0),
                        (0..g.len()).map(|_| r.gen_range(-1.0..1.0)).collect(),
                    ];
                    fields.push(fields[3].iter().map(|v| 1e-3 * v).collect());
                    for u in &fields {
                        let pairing = g.inner(&op.apply(u).map_err(err)?, u);
                        let energy = energy_oracle(&g, u, p);
                        let rel = (pairing - energy).abs() / energy.abs();
                        worst = worst.max(rel);
                        count += 1;
                        ensure(rel <= 1e-10, || {
                            format!("p={p} n={n} σ={sigma:?}: {pairing} vs {energy}")
                        })?;
                    }
                }
            }
        }
    }
    Ok(format!("{count} fields, max relative mismatch {worst:.2e}"))
}

// 4. linear analytic oracle ----------------------------------------------------

fn linear_oracle() -> Outcome {
    let (r, m, lambda) = (4.0f64, 65usize, 1.0f64);
    let s = spec(
        2.0,
        1,
        one(),
        CoefficientProfile::constant(lambda),
        NonlinearityModel::Zero,
    );
    let g = grid(&s, r, m);
    let op = DiscreteOperator::new(&g, 2.0).map_err(err)?;
    let h = g.spacing();
    let mu = 4.0 / (h * h) * (PI * h / (4.0 * r)).sin().powi(2);
    let u0 = sine_mode(&g, 1, 1.0);
    let f = NonlinearityModel::Zero;

    let mut worst_step = 0.0f64;
    for dt in [1e-3, 1e-2, 0.1, 1.0] {
        let cfg = StepConfig {
            dt,
            ..StepConfig::default()
        };
        let out = step_implicit(&State::new(u0.clone(), 0.0), &op, &f, &cfg).map_err(err)?;
        let factor = 1.0 / (1.0 + dt * (lambda + mu));
        for (a, b) in out.state.u.iter().zip(&u0) {
            let rel = (a / b - factor).abs() / factor;
            worst_step = worst_step.max(rel);
        }
    }
    ensure(worst_step <= 1e-12, || format!("per-step factor off by {worst_step:e}"))?;

    let dt = 1e-3;
    let t_final = 5.0;
    let cfg = StepConfig {
        dt,
        ..StepConfig::default()
    };
    let end = run_to_time(&State::new(u0.clone(), 0.0), t_final, &cfg, &op, &f, &mut NullSink).map_err(err)?;
    let steps = (t_final / dt).round() as i32;
    let factor = (1.0 + dt * (lambda + mu)).powi(-steps);
    let exact: Vec<f64> = u0.iter().map(|v| v * factor).collect();
    let rel = l2_norm(&g, &diff(&end.u, &exact)) / l2_norm(&g, &exact);
    ensure(rel <= 1e-6, || format!("trajectory relative error {rel:e}"))?;
    Ok(format!(
        "per-step factor error {worst_step:.2e}, T = 5 relative error {rel:.2e}"
    ))
}

// 5. contraction ---------------------------------------------------------------

fn contraction() -> Outcome {
    let pairs = 20;
    let mut worst = 0.0f64;
    let mut runs = 0;
    let fs = [
        NonlinearityModel::Zero,
        NonlinearityModel::OddPower { q: 3.0 },
        NonlinearityModel::ExpGrowth,
    ];
    for p in [2.0, 3.0] {
        for f in fs {
            for sigma in [one(), power(1.0, 1.0)] {
                let mut s = spec(p, 2, sigma.clone(), one(), f);
                s.c_mono = 1e-3;
                let g = grid(&s, 4.0, 17);
                let cfg = StepConfig {
                    dt: 0.02,
                    ..StepConfig::default()
                };
                let mut r = rng(1000 + runs as u64);
                let inputs: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
                    .map(|_| {
                        (
                            random_smooth_field(&g, &mut r, 1.0),
                            random_smooth_field(&g, &mut r, 1.0),
                        )
                    })
                    .collect();
                let reports = Rayon.map(inputs, |_, (u0, v0)| {
                    contraction_test(&s, &g, &u0, &v0, 2.0, &cfg, 16, &Sequential)
                });
                for rep in reports {
                    let rep = rep.map_err(err)?;
                    worst = worst.max(rep.max_ratio);
                    ensure(rep.max_ratio <= 1.0 + 1e-8, || {
                        format!("p={p} f={f:?} σ={sigma:?}: ratio {}", rep.max_ratio)
                    })?;
                }
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{} pairs over {runs} configurations, max ratio {worst:.6}",
        runs * pairs
    ))
}

// 6. absorbing ball -------------------------------------------------------------

fn absorbing() -> Outcome {
    let mut s = spec(3.0, 2, power(1.0, 1.0), one(), NonlinearityModel::OddPower { q: 3.0 });
    s.source_g = CoefficientProfile::GaussianBump {
        base: 0.0,
        amplitude: 0.5,
        center: 0.0,
        width: 1.0,
    };
    let g = grid(&s, 4.0, 17);
    let cfg = StepConfig {
        dt: 0.01,
        ..StepConfig::default()
    };
    let est = estimate_embedding_constant(&g, s.p, 200, 50, 7).map_err(err)?;
    let radius = AbsorbingRadius::for_grid(&g, est.constant).map_err(err)?;
    // independent evaluation of the documented constants
    let c1 = 0.5 * 1f64.min(est.constant.powi(-2));
    let g_sq = g.inner(g.g_nodes(), g.g_nodes());
    let rho_sq = ((2.0 / c1) * g_sq + 2.0) / c1 + 1.0;
    ensure((radius.rho_sq - rho_sq).abs() <= 1e-12 * rho_sq, || {
        "ρ² mismatch".into()
    })?;
    let rho = rho_sq.sqrt();

    let mut r = rng(99);
    let initials: Vec<Vec<f64>> = (0..20)
        .map(|i| {
            let norm = rho * 100f64.powf(i as f64 / 19.0);
            random_smooth_field(&g, &mut r, norm)
        })
        .collect();
    let mut horizon = 4.0;
    let mut rep = absorbing_test(&s, &g, radius, &initials, horizon, &cfg, &Rayon).map_err(err)?;
    let t0 = rep
        .t0
        .ok_or_else(|| format!("not every trajectory entered by t = {horizon}"))?;
    if 4.0 * t0 > horizon {
        horizon = 4.0 * t0;
        rep = absorbing_test(&s, &g, radius, &initials, horizon, &cfg, &Rayon).map_err(err)?;
    }
    let exits: usize = rep.entries.iter().map(|e| e.exits).sum();
    ensure(rep.passed && exits == 0, || {
        format!("{exits} exits before t = {horizon}")
    })?;
    let c1_emp = rep.c1_emp.ok_or("no decay rate could be fitted")?;
    ensure(c1_emp >= c1, || format!("c1_emp = {c1_emp} < c1_h = {c1}"))?;
    Ok(format!(
        "ρ² = {rho_sq:.4}, T0 = {t0}, horizon {horizon}, c1_h = {c1:.4}, c1_emp = {c1_emp:.4}"
    ))
}

// 7. truncation ------------------------------------------------------------------

fn truncation() -> Outcome {
    let mut r = rng(2024);
    for _ in 0..1000 {
        let k = 10f64.powf(r.gen_range(-2.0..2.0));
        let a: Vec<f64> = (0..16).map(|_| r.gen_range(-100.0..100.0)).collect();
        let b: Vec<f64> = (0..16).map(|_| r.gen_range(-100.0..100.0)).collect();
        let (ta, tb) = (truncate_bk(&a, k), truncate_bk(&b, k));
        for i in 0..a.len() {
            ensure((ta[i] - tb[i]).abs() <= (a[i] - b[i]).abs(), || {
                format!("Lipschitz violated at k={k}: {} {}", a[i], b[i])
            })?;
        }
    }
    let s = spec(3.0, 2, power(1.0, 1.0), one(), NonlinearityModel::Zero);
    let g = grid(&s, 4.0, 25);
    let levels: Vec<f64> = (-3..=6).map(|e| 2f64.powi(e)).collect();
    for field in 0..50 {
        let norm = 10f64.powf(r.gen_range(-1.0..2.0));
        let u = random_smooth_field(&g, &mut r, norm);
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last = f64::INFINITY;
        for &k in &levels {
            let d = w_norm(&g, &diff(&u, &truncate_bk(&u, k)), s.p);
            ensure(d <= last, || {
                format!("field {field}: ‖u - B_k u‖_W increased at k = {k}")
            })?;
            if k >= sup {
                ensure(d == 0.0, || {
                    format!("field {field}: nonzero remainder at k = {k} >= max|u|")
                })?;
            }
            last = d;
        }
    }
    Ok("1000 Lipschitz pairs, 50 fields x 10 levels".into())
}

// 8. embedding ---------------------------------------------------------------------

fn embedding() -> Outcome {
    let fixtures = [
        (2.0, 1, one(), one()),
        (3.0, 1, power(1.0, 1.0), CoefficientProfile::constant(2.0)),
        (2.0, 2, one(), one()),
        (3.0, 2, power(1.0, 1.0), one()),
        (
            2.5,
            2,
            CoefficientProfile::TwoPower {
                amplitude: 1.0,
                alpha: 0.5,
                gamma: 2.0,
            },
            CoefficientProfile::PowerLaw {
                amplitude: 1.0,
                alpha: 2.0,
                offset: 0.5,
                cap: Some(4.0),
            },
        ),
    ];
    let mut summary = Vec::new();
    for (i, (p, n, sigma, beta)) in fixtures.into_iter().enumerate() {
        let s = spec(p, n, sigma, beta, NonlinearityModel::Zero);
        let g = grid(&s, 4.0, if n == 1 { 65 } else { 25 });
        let est = estimate_embedding_constant(&g, p, 200, 50, 31 + i as u64).map_err(err)?;
        let mut r = rng(5000 + i as u64);
        let mut max_ratio = 0.0f64;
        for j in 0..100 {
            let norm = 10f64.powf(r.gen_range(-1.0..1.0));
            let u = random_smooth_field(&g, &mut r, norm);
            let l2 = l2_norm(&g, &u);
            let w = w_norm(&g, &u, p);
            max_ratio = max_ratio.max(l2 / w);
            ensure(l2 <= est.constant * w, || {
                format!("fixture {i} field {j}: {l2} > {} x {w}", est.constant)
            })?;
        }
        summary.push(format!("{:.3}/{:.3}", max_ratio, est.constant));
    }
    Ok(format!("fresh max ratio / C̄_h: {}", summary.join(", ")))
}

// 9. compactness ----------------------------------------------------------------------

fn compactness() -> Outcome {
    // envelope formulas against their closed-form values
    let p2 = compactness_envelope(2.0, 8.0, 1.0, 1.0, 1.0).map_err(err)?;
    let p2_exact = 2.0 / 7.0 + 4f64.ln() / 7.0;
    let p3 = compactness_envelope(3.0, 8.0, 1.0, 1.0, 1.0).map_err(err)?;
    let p3_exact = 2.0 / 7.0 + 2.0 * (8f64.sqrt() - 2f64.sqrt()) / 7.0;
    ensure((p2 - p2_exact).abs() <= 1e-6, || {
        format!("p = 2 envelope {p2} vs {p2_exact}")
    })?;
    ensure((p3 - p3_exact).abs() <= 1e-6, || {
        format!("p = 3 envelope {p3} vs {p3_exact}")
    })?;

    let fixtures = [
        spec(2.0, 2, one(), one(), NonlinearityModel::Zero),
        spec(3.0, 2, power(1.0, 1.0), one(), NonlinearityModel::OddPower { q: 3.0 }),
        spec(4.0, 1, one(), one(), NonlinearityModel::ExpGrowth),
    ];
    let mut summary = Vec::new();
    for (i, s) in fixtures.iter().enumerate() {
        let g = grid(s, 4.0, if s.n == 1 { 65 } else { 17 });
        let cfg = StepConfig {
            dt: 0.05,
            ..StepConfig::default()
        };
        let mut r = rng(77 + i as u64);
        let initials: Vec<Vec<f64>> = (0..10).map(|_| random_smooth_field(&g, &mut r, 1.0)).collect();
        let mut run = EnsembleRun::new(s, &g, cfg, initials, 10.0);
        run.checkpoint_times = uniform_checkpoints(0.0, 10.0, 16);
        let rep = compactness_probe(&run, &Rayon).map_err(err)?;
        let (d0, dt) = (rep.diameters[0], rep.diameters[rep.diameters.len() - 1]);
        ensure(d0 >= 1.0, || format!("fixture {i}: initial diameter {d0} < 1"))?;
        ensure(dt <= 0.1 * d0, || {
            format!("fixture {i}: D(10) = {dt} > 0.1 D(0) = {}", 0.1 * d0)
        })?;
        summary.push(format!("D(0) = {d0:.3}, D(10) = {dt:.2e}"));
    }
    Ok(format!("envelopes {p2:.6}, {p3:.6}; {}", summary.join("; ")))
}

// 10. self-convergence -------------------------------------------------------------------

fn solve(s: &ProblemSpec, r: f64, m: usize, dt: f64, t_final: f64) -> Result<(Grid, Vec<f64>), String> {
    let g = grid(s, r, m);
    let op = DiscreteOperator::new(&g, s.p).map_err(err)?;
    let cfg = StepConfig {
        dt,
        ..StepConfig::default()
    };
    let u0 = gaussian(&g, 1.0, 0.6);
    let end = run_to_time(&State::new(u0, 0.0), t_final, &cfg, &op, &s.nonlinearity, &mut NullSink).map_err(err)?;
    Ok((g, end.u))
}

/// Restricts a field on `m_fine` nodes per axis to the nodes of the grid with `m_coarse`.
fn restrict(u: &[f64], n: usize, m_fine: usize, m_coarse: usize) -> Vec<f64> {
    let ratio = (m_fine - 1) / (m_coarse - 1);
    let (mf, mc) = (m_fine - 2, m_coarse - 2);
    let fine = |i: usize| (i + 1) * ratio - 1;
    match n {
        1 => (0..mc).map(|i| u[fine(i)]).collect(),
        _ => (0..mc * mc).map(|k| u[fine(k / mc) * mf + fine(k % mc)]).collect(),
    }
}

fn self_convergence() -> Outcome {
    let s = spec(3.0, 2, power(1.0, 1.0), one(), NonlinearityModel::Zero);
    let r = 2.0;
    let t_final = 1.0;

    // space: h, h/2, h/4 at a common time step
    let ms = [17, 33, 65];
    let dt = 0.01;
    let sols = ms
        .iter()
        .map(|&m| solve(&s, r, m, dt, t_final))
        .collect::<Result<Vec<_>, _>>()?;
    let coarse = &sols[0].0;
    let u_h = sols[0].1.clone();
    let u_h2 = restrict(&sols[1].1, 2, ms[1], ms[0]);
    let u_h4 = restrict(&sols[2].1, 2, ms[2], ms[0]);
    let e1 = l2_norm(coarse, &diff(&u_h, &u_h2));
    let e2 = l2_norm(coarse, &diff(&u_h2, &u_h4));
    let space_order = (e1 / e2).log2();

    // time: dt, dt/2, dt/4 on a fixed grid
    let m = 33;
    let dts = [0.04, 0.02, 0.01];
    let sols = dts
        .iter()
        .map(|&d| solve(&s, r, m, d, t_final))
        .collect::<Result<Vec<_>, _>>()?;
    let g = &sols[0].0;
    let e1t = l2_norm(g, &diff(&sols[0].1, &sols[1].1));
    let e2t = l2_norm(g, &diff(&sols[1].1, &sols[2].1));
    let time_order = (e1t / e2t).log2();

    ensure(space_order >= 1.0, || format!("spatial order {space_order:.3}"))?;
    ensure(time_order >= 0.9, || format!("temporal order {time_order:.3}"))?;
    Ok(format!(
        "spatial order {space_order:.3} ({e1:.2e}, {e2:.2e}), temporal order {time_order:.3} ({e1t:.2e}, {e2t:.2e})"
    ))
}

// 11. determinism and persistence ------------------------------------------------------------

const BIN: &str = env!("CARGO_BIN_EXE_plap");

fn plap(sub: &str, config: &Path, out: &Path) -> Result<(), String> {
    let o = Command::new(BIN)
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(err)?;
    ensure(o.status.success(), || {
        format!("plap {sub} failed: {}", String::from_utf8_lossy(&o.stderr))
    })
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    let (x, y) = (std::fs::read(a).map_err(err)?, std::fs::read(b).map_err(err)?);
    ensure(x == y, || format!("{} and {} differ", a.display(), b.display()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let base = r#"
seed = 3

[problem]
p = 3.0
dim = 2
beta0 = 1.0
r0 = 1.0
c_mono = 1.0
sigma = { kind = "power_law", alpha = 1.0 }
beta = { kind = "constant", value = 1.0 }
f = { kind = "odd_power", q = 3.0 }
g = { kind = "gaussian_bump", amplitude = 0.3, width = 1.0 }

[grid]
R = 4.0
m_per_axis = 17

[stepping]
dt = 0.02
t_final = 2.0

[experiment]
count = 6
checkpoints = 8

[io]
snapshot_every = 40
"#;
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("{base}\n[initial]\nkind = \"bumps\"\nnorm = 3.0\n")).map_err(err)?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for sub in ["simulate", "contract", "compact"] {
        plap(sub, &cfg, &a)?;
        plap(sub, &cfg, &b)?;
        same_bytes(&a.join(format!("{sub}.json")), &b.join(format!("{sub}.json")))?;
    }
    for f in ["ledger.csv", "final.plap", "snapshot_000040.plap", "diameters.csv"] {
        same_bytes(&a.join(f), &b.join(f))?;
    }

    // restart from the mid-run snapshot and compare the final field
    let mid = a.join("snapshot_000040.plap");
    let snap = Snapshot::load(&mid).map_err(err)?;
    ensure(snap.t == 0.8, || format!("snapshot time {}", snap.t))?;
    let again = dir.path().join("again.plap");
    snap.save(&again).map_err(err)?;
    same_bytes(&mid, &again)?;
    let restart = dir.path().join("restart.toml");
    std::fs::write(
        &restart,
        format!(
            "{base}\n[initial]\nkind = \"snapshot\"\npath = {:?}\n",
            mid.display().to_string()
        ),
    )
    .map_err(err)?;
    let c = dir.path().join("c");
    plap("simulate", &restart, &c)?;
    same_bytes(&a.join("final.plap"), &c.join("final.plap"))?;
    Ok("ledgers, snapshots and reports byte-identical; restart at t = 0.8 matches bitwise".into())
}

// ---------------------------------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            name: "validator fixture matrix",
            limit: Duration::from_secs(3),
            run: validators,
        },
        Criterion {
            name: "operator monotonicity",
            limit: Duration::from_secs(30),
            run: monotonicity,
        },
        Criterion {
            name: "summation-by-parts energy identity",
            limit: Duration::from_secs(60),
            run: summation_by_parts,
        },
        Criterion {
            name: "linear analytic oracle",
            limit: Duration::from_secs(5),
            run: linear_oracle,
        },
        Criterion {
            name: "contraction",
            limit: Duration::from_secs(120),
            run: contraction,
        },
        Criterion {
            name: "absorbing ball",
            limit: Duration::from_secs(300),
            run: absorbing,
        },
        Criterion {
            name: "truncation operator",
            limit: Duration::from_secs(60),
            run: truncation,
        },
        Criterion {
            name: "embedding constant",
            limit: Duration::from_secs(120),
            run: embedding,
        },
        Criterion {
            name: "compactness probe",
            limit: Duration::from_secs(300),
            run: compactness,
        },
        Criterion {
            name: "self-convergence",
            limit: Duration::from_secs(600),
            run: self_convergence,
        },
        Criterion {
            name: "determinism and persistence",
            limit: Duration::from_secs(300),
            run: determinism,
        },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {:?}", c.limit)),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {}: {} ({:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
