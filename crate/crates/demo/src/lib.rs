//! wasm-bindgen front end for the browser page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string, so the page
//! needs nothing beyond `JSON.parse`. The `*_json` functions do the work and
//! are what the native tests call.

use kswave::constants::{check_hypotheses, decay_rates, thresholds, DecayRates};
use kswave::kernel::{psi_field, TailModel};
use kswave::solver::SolverConfig;
use kswave::wave::{construct_wave, verify_wave, FixedPointConfig};
use kswave::{GridFunction, SystemParams};
use serde_json::json;
use wasm_bindgen::prelude::*;

type Params = (f64, f64, f64, f64, f64, f64);

fn params((chi, mu, lambda, a, b, tau): Params) -> kswave::Result<SystemParams> {
    SystemParams::new(chi, mu, lambda, a, b, tau)
}

/// Every `stride`-th node plus the last one.
fn thin(g: &GridFunction, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..g.len()).step_by(stride.max(1)).collect();
    if idx.last() != Some(&(g.len() - 1)) {
        idx.push(g.len() - 1);
    }
    idx
}

fn pick(g: &GridFunction, idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| g.values()[i]).collect()
}

pub fn thresholds_json(p: Params) -> kswave::Result<String> {
    let p = params(p)?;
    let th = thresholds(&p)?;
    let h = check_hypotheses(&p)?;
    let r = decay_rates(&p, th.c_star)?;
    Ok(json!({
        "thresholds": th,
        "hypotheses": h,
        "rates_at_c_star": r,
        "plateau": p.plateau(),
        "ceiling": p.ceiling(),
    })
    .to_string())
}

/// `Ψ`, `Ψ'`, `Ψ''` for the front-like density `min{a/b, e^{−κx}}` on `[−20, 40]`.
pub fn psi_json(p: Params, c: f64, kappa: f64) -> kswave::Result<String> {
    let p = params(p)?;
    let m = p.plateau();
    let u = GridFunction::from_fn(-20.0, 40.0, 1201, |x| m.min((-kappa * x).exp()))?;
    let f = psi_field(&u, &TailModel::plateau_decay(m, kappa), &p, c)?;
    let r = DecayRates::for_frame(&p, c);
    let excess = f
        .psi
        .values()
        .iter()
        .zip(f.psi_x.values())
        .map(|(s, g)| g.abs() - r.lambda1 * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let idx = thin(&u, 2);
    Ok(json!({
        "x": idx.iter().map(|&i| u.x(i)).collect::<Vec<_>>(),
        "u": pick(&u, &idx),
        "psi": pick(&f.psi, &idx),
        "psi_x": pick(&f.psi_x, &idx),
        "psi_xx": pick(&f.psi_xx, &idx),
        "lambda1": r.lambda1,
        "gradient_excess": excess,
    })
    .to_string())
}

/// Coarse wave on `[−30, 60]` with `n` nodes.
pub fn wave_json(p: Params, c: f64, n: usize) -> kswave::Result<String> {
    let p = params(p)?;
    let cfg = FixedPointConfig::new(SolverConfig::new(-30.0, 60.0, n, 0.05));
    let w = construct_wave(&p, c, &cfg)?;
    let rep = verify_wave(&w, &p)?;
    let diag = w.diagnostics.as_ref();
    let idx = thin(&w.u, n / 600 + 1);
    Ok(json!({
        "x": idx.iter().map(|&i| w.u.x(i)).collect::<Vec<_>>(),
        "u": pick(&w.u, &idx),
        "v": pick(&w.v, &idx),
        "upper": idx.iter().map(|&i| w.envelope.map_or(f64::NAN, |e| e.upper(w.u.x(i)))).collect::<Vec<_>>(),
        "lower": idx.iter().map(|&i| w.envelope.map_or(f64::NAN, |e| e.lower(w.u.x(i)))).collect::<Vec<_>>(),
        "kappa": w.kappa,
        "decay_fit": rep.decay_fit,
        "plateau_error": rep.plateau_error,
        "max_residual_u": rep.max_residual_u,
        "outer_iterations": diag.map(|d| d.outer_iterations),
        "outer_increments": diag.map(|d| d.outer_increments.clone()),
    })
    .to_string())
}

fn js(r: kswave::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Thresholds `b*`, `κ*`, `c*`, hypothesis flags and the decay rates at `c*`.
#[wasm_bindgen]
pub fn model_thresholds(chi: f64, mu: f64, lambda: f64, a: f64, b: f64, tau: f64) -> Result<String, JsError> {
    js(thresholds_json((chi, mu, lambda, a, b, tau)))
}

#[wasm_bindgen]
pub fn chemical_field(
    chi: f64,
    mu: f64,
    lambda: f64,
    a: f64,
    b: f64,
    tau: f64,
    c: f64,
    kappa: f64,
) -> Result<String, JsError> {
    js(psi_json((chi, mu, lambda, a, b, tau), c, kappa))
}

#[wasm_bindgen]
pub fn traveling_wave(
    chi: f64,
    mu: f64,
    lambda: f64,
    a: f64,
    b: f64,
    tau: f64,
    c: f64,
    n: usize,
) -> Result<String, JsError> {
    js(wave_json((chi, mu, lambda, a, b, tau), c, n))
}
