use std::f64::consts::PI;

use kswave::constants::{check_hypotheses, decay_rates, thresholds, DecayRates};
use kswave::kernel::{psi_field, Tail, TailModel};
use kswave::solver::{run, spreading_speed, RightBc, Sampling, SpeedEstimate};
use kswave::wave::{construct_wave, verify_wave};
use kswave::{GridFunction, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::output::{num, opt, EventLog, Outputs, Table};
use crate::LabError;

/// Largest sweep accepted.
pub const MAX_CELLS: usize = 10_000;

pub fn execute(
    cfg: &RunConfig,
    paths: &Outputs,
    log: &mut EventLog,
    threads: usize,
) -> Result<(), LabError> {
    match cfg.command {
        Command::Constants => constants(cfg, paths, log),
        Command::KernelTest => kernel_test(cfg, paths, log),
        Command::Wave => wave(cfg, paths, log),
        Command::Speed => speed(cfg, paths, log),
        Command::Stability => stability(cfg, paths, log),
        Command::Sweep => sweep(cfg, paths, log, threads),
    }
}

fn flag(b: bool) -> String {
    b.to_string()
}

fn constants(cfg: &RunConfig, paths: &Outputs, log: &mut EventLog) -> Result<(), LabError> {
    let p = cfg.params()?;
    let th = thresholds(&p)?;
    let h = check_hypotheses(&p)?;
    // rates default to the critical frame
    let c = cfg.auto_float("constants.c").unwrap_or(th.c_star);
    let r = decay_rates(&p, c)?;
    let header = [
        "c", "lambda1", "lambda2", "B", "b_star", "kappa_star", "c_star", "H1", "H2", "H3", "H4",
    ];
    let row = vec![
        num(c),
        num(r.lambda1),
        num(r.lambda2),
        num(r.amplitude),
        num(th.b_star),
        num(th.kappa_star),
        num(th.c_star),
        flag(h.h1),
        flag(h.h2),
        flag(h.h3),
        flag(h.h4),
    ];
    let mut t = Table::create(&paths.csv, &header)?;
    t.row(&row)?;
    t.finish()?;
    print!("{}", std::fs::read_to_string(&paths.csv)?);
    log.emit(
        "result",
        json!({ "rates": r, "thresholds": th, "hypotheses": h }),
    )
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn kernel_test(cfg: &RunConfig, paths: &Outputs, log: &mut EventLog) -> Result<(), LabError> {
    let p = cfg.params()?;
    let c = cfg.float("kernel.c");
    let kappa = cfg.float("kernel.kappa");
    let sc = cfg.solver();
    let r = DecayRates::for_frame(&p, c);
    let mut checks = Vec::new();

    let m = p.plateau();
    let flat = sc.grid(|_| m)?;
    let f = psi_field(&flat, &TailModel::flat(&flat), &p, c)?;
    let target = p.mu * m / p.lambda;
    checks.push(Check {
        name: "constant_density",
        value: f.psi.values().iter().map(|v| (v / target - 1.0).abs()).fold(0.0, f64::max),
        tolerance: 1e-12,
    });

    if !(kappa > 0.0 && kappa < r.lambda1) {
        return Err(LabError::Refused(format!(
            "kernel.kappa = {kappa} must lie in (0, lambda1 = {})",
            r.lambda1
        )));
    }
    // the rate of the right tail is exact, so a short window isolates the
    // interior quadrature error
    let coef = p.mu * r.amplitude * (1.0 / (r.lambda1 - kappa) + 1.0 / (r.lambda2 + kappa));
    let u = GridFunction::from_fn(0.0, 2.0, sc.n, |x| (-kappa * x).exp())?;
    let tails = TailModel {
        left: Tail::Exponential { rate: -kappa },
        right: Tail::Exponential { rate: kappa },
    };
    let f = psi_field(&u, &tails, &p, c)?;
    let mut worst: f64 = 0.0;
    for (i, x) in u.xs().enumerate().skip(1).take(u.len() - 2) {
        let exact = coef * (-kappa * x).exp();
        worst = worst
            .max((f.psi.values()[i] / exact - 1.0).abs())
            .max((f.psi_x.values()[i] / (-kappa * exact) - 1.0).abs());
    }
    checks.push(Check {
        name: "exponential_density",
        value: worst,
        tolerance: 1e-8,
    });

    let bump = |x: f64| (-(x - 1.0).powi(2)).exp() + 0.5 * (-0.5 * (x + 2.0).powi(2)).exp();
    let residual = |n: usize| -> Result<f64, LabError> {
        let u = GridFunction::from_fn(-20.0, 20.0, n, bump)?;
        let f = psi_field(&u, &TailModel::zero(), &p, c)?;
        let (h, v) = (u.dx(), f.psi.values());
        Ok((1..n - 1)
            .map(|i| {
                let fd = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
                (fd - f.psi_xx.values()[i]).abs()
            })
            .fold(0.0, f64::max))
    };
    let e = [residual(801)?, residual(1601)?, residual(3201)?];
    let ratio_gap = (e[0] / e[1] / 4.0 - 1.0).abs().max((e[1] / e[2] / 4.0 - 1.0).abs());
    checks.push(Check {
        name: "second_order_refinement",
        value: ratio_gap,
        tolerance: 0.15,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..cfg.count("kernel.samples") {
        let u = sc.grid(|_| 0.0)?;
        let u = u.with_values((0..u.len()).map(|_| rng.gen_range(0.0..3.0)).collect())?;
        let left = u.values()[0];
        let tails = TailModel {
            left: Tail::Constant(left),
            right: Tail::Constant(0.0),
        };
        let f = psi_field(&u, &tails, &p, c)?;
        for (s, g) in f.psi.values().iter().zip(f.psi_x.values()) {
            excess = excess.max(g.abs() - r.lambda1 * s);
        }
    }
    checks.push(Check {
        name: "gradient_bound",
        value: excess.max(0.0),
        tolerance: 1e-10,
    });

    let mut t = Table::create(&paths.csv, &["check", "value", "tolerance", "status"])?;
    let mut failed = Vec::new();
    for ch in &checks {
        let ok = ch.value <= ch.tolerance;
        let status = if ok { "ok".to_string() } else { "failed:exceeds tolerance".to_string() };
        if !ok {
            failed.push(ch.name);
        }
        t.row([ch.name.to_string(), num(ch.value), num(ch.tolerance), status])?;
        println!("{:<24} {:>12.3e}  (tol {:.0e})", ch.name, ch.value, ch.tolerance);
    }
    t.finish()?;
    log.emit("result", json!({ "failed": failed, "checks": checks.len() }))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(LabError::Failed(format!("kernel checks failed: {}", failed.join(", "))))
    }
}

fn wave(cfg: &RunConfig, paths: &Outputs, log: &mut EventLog) -> Result<(), LabError> {
    let p = cfg.params()?;
    check_hypotheses(&p)?.require(&p, &["H2"])?;
    let c = cfg.float("wave.c");
    let w = construct_wave(&p, c, &cfg.fixed_point())?;
    let rep = verify_wave(&w, &p)?;
    let diag = w.diagnostics.as_ref().expect("constructed waves carry diagnostics");
    for (k, inc) in diag.outer_increments.iter().enumerate() {
        log.emit("step-summary", json!({ "outer_iteration": k + 1, "increment": inc }))?;
    }

    let header = ["x", "U", "V", "Psi_x", "residual_u", "residual_v"];
    let mut t = Table::create(&paths.csv, &header)?;
    for i in 0..w.u.len() {
        t.row([
            num(w.u.x(i)),
            num(w.u.values()[i]),
            num(w.v.values()[i]),
            num(w.psi_x.values()[i]),
            num(rep.residual_u.values()[i]),
            num(rep.residual_v.values()[i]),
        ])?;
    }
    t.finish()?;

    let env = w.envelope.as_ref().expect("constructed waves carry the envelope");
    let fit_error = rep.decay_fit.map(|k| (k / w.kappa - 1.0).abs());
    println!(
        "c = {c}  kappa = {}  decay fit = {}  plateau error = {:.3e}  residual = {:.3e}",
        w.kappa,
        opt(rep.decay_fit),
        rep.plateau_error,
        rep.max_residual_u
    );
    log.emit(
        "result",
        json!({
            "c": c,
            "kappa": w.kappa,
            "eta": env.eta,
            "d": env.d,
            "d_min": diag.certificate.d,
            "decay_fit": rep.decay_fit,
            "decay_fit_rel_error": fit_error,
            "plateau_error": rep.plateau_error,
            "max_residual_u": rep.max_residual_u,
            "max_residual_v": rep.max_residual_v,
            "tail_ratio_change": rep.tail_ratio_change(),
            "envelope_violation": rep.envelope_violation,
            "outer_iterations": diag.outer_iterations,
            "inner_steps": diag.inner_steps,
            "max_inner_increase": diag.max_inner_increase,
            "max_clamped": diag.max_clamped,
            "status": "ok",
        }),
    )
}

/// Lab-frame speed of the `a/(2b)` level from a box datum.
pub fn measure_speed(p: &SystemParams, cfg: &RunConfig) -> Result<SpeedEstimate, LabError> {
    let sc = cfg.solver();
    let height = cfg.auto_float("speed.height").unwrap_or(p.plateau());
    let half = cfg.float("speed.half_width");
    let u0 = sc.grid(|x| if x.abs() <= half { height } else { 0.0 })?;
    let sampling = Sampling::every(cfg.float("speed.sample_every"));
    let trace = run(u0, cfg.float("speed.t_end"), &sc, p, 0.0, &sampling)?;
    let edge = sc.x_max - cfg.float("speed.boundary_margin");
    for s in &trace.samples {
        match s.front {
            Some(x) if x <= edge => {}
            _ => {
                return Err(LabError::Failed(format!(
                    "front lost at t = {}: it reached the boundary or vanished; \
                     enlarge the domain (solver.x_max, solver.n) or shorten speed.t_end",
                    s.t
                )))
            }
        }
    }
    let window = (cfg.float("speed.window_start"), cfg.float("speed.window_end"));
    Ok(spreading_speed(&trace, window)?)
}

fn speed(cfg: &RunConfig, paths: &Outputs, log: &mut EventLog) -> Result<(), LabError> {
    let p = cfg.params()?;
    let est = measure_speed(&p, cfg)?;
    let reference = 2.0 * p.a.sqrt();
    let gap = (est.slope / reference - 1.0).abs();
    let header = [
        "chi", "a", "tau", "window_start", "window_end", "slope", "std_error", "samples",
        "two_sqrt_a", "relative_gap", "status",
    ];
    let mut t = Table::create(&paths.csv, &header)?;
    t.row([
        num(p.chi),
        num(p.a),
        num(p.tau),
        num(cfg.float("speed.window_start")),
        num(cfg.float("speed.window_end")),
        num(est.slope),
        num(est.std_error),
        est.samples.to_string(),
        num(reference),
        num(gap),
        "ok".to_string(),
    ])?;
    t.finish()?;
    println!("speed = {} +- {}  (2 sqrt a = {reference})", est.slope, est.std_error);
    log.emit(
        "result",
        json!({ "slope": est.slope, "std_error": est.std_error, "samples": est.samples,
                "two_sqrt_a": reference, "relative_gap": gap, "status": "ok" }),
    )
}

fn stability(cfg: &RunConfig, paths: &Outputs, log: &mut EventLog) -> Result<(), LabError> {
    let p = cfg.params()?;
    check_hypotheses(&p)?.require(&p, &["H3"])?;
    let (base, amp) = (cfg.float("stability.base"), cfg.float("stability.amplitude"));
    let wavelength = cfg.float("stability.wavelength");
    if !(base - amp.abs() > 0.0) {
        return Err(LabError::Refused(format!(
            "inf u0 = {} must be > 0 (stability.base - |stability.amplitude|)",
            base - amp.abs()
        )));
    }
    let mut sc = cfg.solver();
    sc.right_bc = RightBc::NoFlux;
    let u0 = sc.grid(|x| base + amp * (2.0 * PI * x / wavelength).sin())?;
    let c = cfg.float("stability.c");
    let sampling = Sampling::every(cfg.float("stability.sample_every"));
    let trace = run(u0, cfg.float("stability.t_end"), &sc, &p, c, &sampling)?;

    let mut t = Table::create(&paths.csv, &["t", "dist_u", "dist_v", "umax", "umin"])?;
    for s in &trace.samples {
        t.row([num(s.t), num(s.dist_u), num(s.dist_v), num(s.sup_u), num(s.inf_u)])?;
    }
    t.finish()?;
    let last = trace.samples.last().expect("the trace holds the initial sample");
    log.emit(
        "step-summary",
        json!({ "samples": trace.samples.len(), "clipped_mass": trace.final_state.clipped_mass }),
    )?;
    println!(
        "t = {}  dist_u = {:.3e}  dist_v = {:.3e}",
        last.t, last.dist_u, last.dist_v
    );
    log.emit(
        "result",
        json!({ "t": last.t, "dist_u": last.dist_u, "dist_v": last.dist_v,
                "distance": last.dist_u + last.dist_v, "status": "ok" }),
    )
}

const SWEEP_HEADER: [&str; 17] = [
    "cell", "tau", "chi", "c", "lambda1", "lambda2", "B", "b_star", "kappa_star", "c_star", "H1",
    "H2", "H3", "H4", "speed", "speed_std_error", "status",
];

/// One sweep row; failures end up in the status column.
fn sweep_cell(cfg: &RunConfig, index: usize, tau: f64, chi: f64, c: Option<f64>) -> Vec<String> {
    let mut row = vec![index.to_string(), num(tau), num(chi)];
    let body = || -> Result<Vec<String>, LabError> {
        let p = SystemParams::new(
            chi,
            cfg.float("model.mu"),
            cfg.float("model.lambda"),
            cfg.float("model.a"),
            cfg.float("model.b"),
            tau,
        )?;
        let th = thresholds(&p)?;
        let h = check_hypotheses(&p)?;
        let c = c.unwrap_or(th.c_star);
        let r = decay_rates(&p, c)?;
        let mut out = vec![
            num(c),
            num(r.lambda1),
            num(r.lambda2),
            num(r.amplitude),
            num(th.b_star),
            num(th.kappa_star),
            num(th.c_star),
            flag(h.h1),
            flag(h.h2),
            flag(h.h3),
            flag(h.h4),
        ];
        if cfg.flag("sweep.measure_speed") {
            match measure_speed(&p, cfg) {
                Ok(est) => out.extend([num(est.slope), num(est.std_error), "ok".into()]),
                Err(e) => out.extend([String::new(), String::new(), format!("failed:{e}")]),
            }
        } else {
            out.extend([String::new(), String::new(), "ok".into()]);
        }
        Ok(out)
    };
    match body() {
        Ok(rest) => row.extend(rest),
        Err(e) => {
            row.push(opt(c));
            row.resize(SWEEP_HEADER.len() - 1, String::new());
            row.push(format!("failed:{e}"));
        }
    }
    row
}

fn sweep(
    cfg: &RunConfig,
    paths: &Outputs,
    log: &mut EventLog,
    threads: usize,
) -> Result<(), LabError> {
    let or_model = |key: &str, model: &str| {
        let v = cfg.list(key);
        if v.is_empty() {
            vec![cfg.float(model)]
        } else {
            v
        }
    };
    let taus = or_model("sweep.tau", "model.tau");
    let chis = or_model("sweep.chi", "model.chi");
    let cs: Vec<Option<f64>> = match cfg.list("sweep.c") {
        v if v.is_empty() => vec![None],
        v => v.into_iter().map(Some).collect(),
    };
    let mut cells = Vec::new();
    for &tau in &taus {
        for &chi in &chis {
            cells.extend(cs.iter().map(|&c| (tau, chi, c)));
        }
    }
    if cells.len() > MAX_CELLS {
        return Err(LabError::Refused(format!(
            "sweep has {} cells, more than {MAX_CELLS}",
            cells.len()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Failed(e.to_string()))?;
    // collect keeps grid order whatever the completion order
    let rows: Vec<Vec<String>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(tau, chi, c))| sweep_cell(cfg, i, tau, chi, c))
            .collect()
    });

    let mut t = Table::create(&paths.csv, &SWEEP_HEADER)?;
    let mut failures = 0;
    for row in &rows {
        let status = row.last().map(String::as_str).unwrap_or("");
        if status != "ok" {
            failures += 1;
        }
        log.emit("step-summary", json!({ "cell": row[0], "status": status }))?;
        t.row(row)?;
    }
    t.finish()?;
    println!("{} cells, {failures} failed", rows.len());
    log.emit("result", json!({ "cells": rows.len(), "failed": failures }))
}
