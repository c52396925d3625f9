//! Traveling waves by monotone iteration between a sub- and a super-solution.
//!
//! For a decay rate `κ` with speed `c_κ = a/κ + κ`, the envelope class is the
//! order interval between `max{U⁻_D, 0}` and `min{M, e^{−κx}}`, where
//! `U⁻_D = e^{−κx} − D e^{−κ̃x}` and `M = a/(b − χμ)`. Each outer step freezes
//! `Ψ(·; u)` for the current iterate `u`, runs the frame solver from the
//! super-solution until it is stationary, and clamps the result into the
//! class.

use serde::Serialize;

use crate::constants::{check_hypotheses, kappa_of_speed, thresholds, DecayRates, SystemParams};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{psi_field, PsiField, Tail, TailModel};
use crate::solver::{
    frame_operator, least_squares_slope, FrameSolver, LeftBc, RightBc, Sampling, SolverConfig,
    SpeedEstimate,
};
use crate::solver::Coupling;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub kappa: f64,
    pub eta: f64,
    pub kappa_tilde: f64,
    pub d: f64,
    pub m: f64,
    /// Argmax of `U⁻_D`.
    pub xbar: f64,
    /// Zero of `U⁻_D`.
    pub xunder: f64,
}

impl Envelope {
    pub fn phi(&self, x: f64) -> f64 {
        (-self.kappa * x).exp()
    }

    /// `U⁻_D(x) = e^{−κx} − D e^{−κ̃x}`.
    pub fn sub(&self, x: f64) -> f64 {
        (-self.kappa * x).exp() - self.d * (-self.kappa_tilde * x).exp()
    }

    /// `min{M, e^{−κx}}`.
    pub fn upper(&self, x: f64) -> f64 {
        self.m.min(self.phi(x))
    }

    /// `U⁻_D` to the right of its maximum, the maximum value to the left.
    pub fn lower(&self, x: f64) -> f64 {
        self.sub(x.max(self.xbar))
    }

    /// Lower edge of the class, `max{U⁻_D, 0}`.
    pub fn class_floor(&self, x: f64) -> f64 {
        self.sub(x).max(0.0)
    }

    pub fn sample_upper(&self, grid: &GridFunction) -> GridFunction {
        grid.map(|x, _| self.upper(x))
    }

    pub fn sample_lower(&self, grid: &GridFunction) -> GridFunction {
        grid.map(|x, _| self.lower(x))
    }

    /// Largest distance by which `u` leaves the class.
    pub fn violation(&self, u: &GridFunction) -> f64 {
        u.xs()
            .zip(u.values())
            .map(|(x, &v)| (self.class_floor(x) - v).max(v - self.upper(x)).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Projects `u` into the class and returns the distance moved.
    pub fn clamp(&self, u: &mut GridFunction) -> f64 {
        let (x0, dx) = (u.x0(), u.dx());
        let mut moved: f64 = 0.0;
        for (i, v) in u.values_mut().iter_mut().enumerate() {
            let x = x0 + dx * i as f64;
            let c = v.clamp(self.class_floor(x), self.upper(x));
            moved = moved.max((c - *v).abs());
            *v = c;
        }
        moved
    }
}

fn require_wave_regime(p: &SystemParams, kappa: f64) -> Result<()> {
    p.validate()?;
    check_hypotheses(p)?.require(p, &["H2"])?;
    let th = thresholds(p)?;
    if !(kappa > 0.0 && kappa < th.kappa_star) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "must lie in (0, kappa*)",
        });
    }
    Ok(())
}

fn check_eta(p: &SystemParams, kappa: f64, eta: f64) -> Result<()> {
    let limit = (0.5 * kappa).min(p.a.sqrt() - kappa);
    if !(eta > 0.0 && eta <= limit) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "must lie in (0, min{kappa/2, sqrt(a) - kappa}]",
        });
    }
    Ok(())
}

/// Midpoint of the admissible gap range.
pub fn default_eta(p: &SystemParams, kappa: f64) -> f64 {
    0.5 * (0.5 * kappa).min(0.5 * (p.a.sqrt() - kappa))
}

pub fn envelope_build(p: &SystemParams, kappa: f64, eta: f64, d: f64) -> Result<Envelope> {
    require_wave_regime(p, kappa)?;
    check_eta(p, kappa, eta)?;
    if !(d >= 1.0 && d.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "D",
            value: d,
            reason: "must be finite and >= 1",
        });
    }
    let kappa_tilde = kappa + eta;
    Ok(Envelope {
        kappa,
        eta,
        kappa_tilde,
        d,
        m: p.ceiling().expect("H2 implies b > chi*mu"),
        xbar: (d * kappa_tilde / kappa).ln() / eta,
        xunder: d.ln() / eta,
    })
}

/// The sufficient scalar inequality for `U⁻_D` to be a sub-solution:
///
/// ```text
/// S(D) = D·A_κ − [left + χμB(κ̃D + (τc−λ)_+)λ2/(λ2+κ) + (b−χμ)]·D^{−κ₁/η}
/// ```
///
/// with `A_κ = κ̃c − κ̃² − a`, `κ₁ = κ − η` and
/// `left = χμB(κ + τc + λ)λ1/(λ1−κ)`, all rates taken at `c = c_κ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarInequality {
    pub a_kappa: f64,
    pub kappa1: f64,
    pub eta: f64,
    pub kappa_tilde: f64,
    pub left: f64,
    /// Coefficient of `κ̃D` in the right-kernel term.
    pub right_slope: f64,
    pub right_const: f64,
    pub logistic: f64,
}

impl ScalarInequality {
    pub fn new(p: &SystemParams, kappa: f64, eta: f64) -> Self {
        let c = p.a / kappa + kappa;
        let r = DecayRates::for_frame(p, c);
        let kt = kappa + eta;
        let cm = p.chi * p.mu * r.amplitude;
        let right = cm * r.lambda2 / (r.lambda2 + kappa);
        Self {
            a_kappa: kt * c - kt * kt - p.a,
            kappa1: kappa - eta,
            eta,
            kappa_tilde: kt,
            left: cm * (kappa + p.tau * c + p.lambda) * r.lambda1 / (r.lambda1 - kappa),
            right_slope: right,
            right_const: right * (p.tau * c - p.lambda).max(0.0),
            logistic: p.b - p.chi * p.mu,
        }
    }

    pub fn value(&self, d: f64) -> f64 {
        let bracket = self.left
            + self.right_slope * self.kappa_tilde * d
            + self.right_const
            + self.logistic;
        d * self.a_kappa - bracket * d.powf(-self.kappa1 / self.eta)
    }

    fn dominant_term(&self, d: f64) -> &'static str {
        let terms = [
            (self.left, "left kernel term"),
            (self.right_slope * self.kappa_tilde * d + self.right_const, "right kernel term"),
            (self.logistic, "logistic term (b - chi*mu)"),
        ];
        terms
            .iter()
            .fold(terms[0], |m, t| if t.0 > m.0 { *t } else { m })
            .1
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DCertificate {
    pub d: f64,
    pub inequality: ScalarInequality,
    pub margin: f64,
    pub xunder: f64,
    /// `min A_{u,c_κ}(U⁻_D)` on `(x̲, x̲ + 40/κ)` for `u = max{U⁻_D, 0}`.
    pub pointwise_min_floor: f64,
    /// Same for `u = min{M, e^{−κx}}`.
    pub pointwise_min_ceiling: f64,
}

impl DCertificate {
    pub fn pointwise_ok(&self, tol: f64) -> bool {
        self.pointwise_min_floor >= -tol && self.pointwise_min_ceiling >= -tol
    }
}

/// Smallest `D ≥ 1` (to 1e-3 relative) satisfying the scalar inequality,
/// with the pointwise check on the two extreme class members.
pub fn find_admissible_d(p: &SystemParams, kappa: f64, eta: f64) -> Result<DCertificate> {
    require_wave_regime(p, kappa)?;
    check_eta(p, kappa, eta)?;
    let s = ScalarInequality::new(p, kappa, eta);
    if !(s.a_kappa > 0.0) {
        return Err(Error::NoAdmissibleD { term: "A_kappa" });
    }
    let d = if s.value(1.0) >= 0.0 {
        1.0
    } else {
        let mut lo = 1.0;
        let mut hi = 2.0;
        while s.value(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoAdmissibleD {
                    term: s.dominant_term(hi),
                });
            }
        }
        while hi - lo > 1e-3 * lo {
            let mid = 0.5 * (lo + hi);
            if s.value(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let env = envelope_build(p, kappa, eta, d)?;
    let floor = pointwise_sub_check(p, &env, |x| env.class_floor(x), Tail::Constant(0.0))?;
    let ceiling = pointwise_sub_check(p, &env, |x| env.upper(x), Tail::Constant(env.m))?;
    Ok(DCertificate {
        d,
        inequality: s,
        margin: s.value(d),
        xunder: env.xunder,
        pointwise_min_floor: floor,
        pointwise_min_ceiling: ceiling,
    })
}

/// `min A_{u,c_κ}(U⁻_D)` over grid nodes in `(x̲, x̲ + 40/κ)`, with the
/// derivatives of `U⁻_D` taken exactly.
pub fn pointwise_sub_check(
    p: &SystemParams,
    env: &Envelope,
    member: impl Fn(f64) -> f64,
    left_tail: Tail,
) -> Result<f64> {
    let c = p.a / env.kappa + env.kappa;
    let span = 40.0 / env.kappa;
    let (lo, hi) = (env.xunder - 40.0, env.xunder + span + 40.0);
    let n = ((hi - lo) / 0.01).ceil() as usize + 1;
    let u = GridFunction::from_fn(lo, hi, n, member)?;
    let tails = TailModel {
        left: left_tail,
        right: Tail::Exponential { rate: env.kappa },
    };
    let field = psi_field(&u, &tails, p, c)?;
    let (k, kt, d) = (env.kappa, env.kappa_tilde, env.d);
    let mut worst = f64::INFINITY;
    for (i, x) in u.xs().enumerate() {
        if x <= env.xunder || x >= env.xunder + span {
            continue;
        }
        let (ek, ekt) = ((-k * x).exp(), (-kt * x).exp());
        let w = ek - d * ekt;
        let w1 = -k * ek + d * kt * ekt;
        let w2 = k * k * ek - d * kt * kt * ekt;
        let gx = field.psi_x.values()[i];
        let gxx = field.psi_xx.values()[i];
        let value = w2 + (c - p.chi * gx) * w1 + (p.a - p.chi * gxx - p.b * w) * w;
        worst = worst.min(value);
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OuterStart {
    Upper,
    Lower,
}

#[derive(Clone, Debug)]
pub struct FixedPointConfig {
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner_time: f64,
    pub max_outer_iters: usize,
    /// Grid and time step; coupling and boundary conditions are set by the builder.
    pub solver: SolverConfig,
    /// Gap `η`; the midpoint of the admissible range when absent.
    pub eta: Option<f64>,
    /// `D` is this multiple of the certified minimum.
    pub d_factor: f64,
    pub start: OuterStart,
    /// Weight of the new iterate, in `(0, 1]`.
    pub relaxation: f64,
}

impl FixedPointConfig {
    pub fn new(solver: SolverConfig) -> Self {
        Self {
            inner_tol: 1e-8,
            outer_tol: 1e-6,
            max_inner_time: 2000.0,
            max_outer_iters: 200,
            solver,
            eta: None,
            d_factor: 10.0,
            start: OuterStart::Upper,
            relaxation: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("max_inner_time", self.max_inner_time),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite and > 0",
                });
            }
        }
        if !(self.d_factor >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "d_factor",
                value: self.d_factor,
                reason: "must be >= 1",
            });
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "relaxation",
                value: self.relaxation,
                reason: "must lie in (0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerOutcome {
    pub u: GridFunction,
    pub time: f64,
    pub steps: usize,
    /// Largest pointwise increase over any single step.
    pub max_increase: f64,
    /// Distance moved by the final clamp.
    pub clamped: f64,
}

/// Evolves against the frozen field `Ψ(·; u_env)` from `min{M, e^{−κx}}`
/// until `sup |ΔU|/dt < inner_tol`.
pub fn inner_solve(
    u_env: &GridFunction,
    env: &Envelope,
    cfg: &FixedPointConfig,
    p: &SystemParams,
    c: f64,
) -> Result<InnerOutcome> {
    let mut sc = cfg.solver.clone();
    sc.coupling = Coupling::Frozen(u_env.clone());
    sc.left_bc = LeftBc::NoFlux;
    sc.right_bc = RightBc::Pinned {
        value: env.phi(u_env.x_max()),
        rate: env.kappa,
    };
    let solver = FrameSolver::new(sc, *p, c)?;
    let mut state = solver.init(env.sample_upper(u_env))?;
    let dt = cfg.solver.dt;
    let mut steps = 0;
    let mut max_increase: f64 = 0.0;
    loop {
        let prev = state.u.clone();
        solver.advance(&mut state)?;
        steps += 1;
        let mut incr: f64 = 0.0;
        let mut change: f64 = 0.0;
        for (a, b) in state.u.values().iter().zip(prev.values()) {
            incr = incr.max(a - b);
            change = change.max((a - b).abs());
        }
        max_increase = max_increase.max(incr);
        if incr > 1e-8 {
            return Err(Error::Monotonicity {
                t: state.t,
                violation: incr,
            });
        }
        if change / dt < cfg.inner_tol {
            break;
        }
        if state.t >= cfg.max_inner_time {
            return Err(Error::NoConvergence {
                what: "inner evolution",
                iterations: steps,
                last: change / dt,
            });
        }
    }
    let mut u = state.u;
    let clamped = env.clamp(&mut u);
    if clamped > 1e-6 {
        return Err(Error::EnvelopeEscape { violation: clamped });
    }
    Ok(InnerOutcome {
        u,
        time: state.t,
        steps,
        max_increase,
        clamped,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveDiagnostics {
    pub outer_iterations: usize,
    /// `sup |u_{k+1} − u_k|` per outer step.
    pub outer_increments: Vec<f64>,
    pub inner_steps: usize,
    pub max_inner_increase: f64,
    pub max_clamped: f64,
    pub certificate: DCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveProfile {
    pub u: GridFunction,
    pub v: GridFunction,
    pub psi_x: GridFunction,
    pub c: f64,
    pub kappa: f64,
    pub envelope: Option<Envelope>,
    pub diagnostics: Option<WaveDiagnostics>,
}

impl WaveProfile {
    /// Profile from `U` alone: `V` and `V'` recomputed by the kernel.
    pub fn from_density(u: GridFunction, p: &SystemParams, c: f64, kappa: f64) -> Result<Self> {
        let tails = TailModel::plateau_decay(u.values()[0], kappa);
        let field = psi_field(&u, &tails, p, c)?;
        Ok(Self {
            u,
            v: field.psi,
            psi_x: field.psi_x,
            c,
            kappa,
            envelope: None,
            diagnostics: None,
        })
    }

    /// Shifts the whole profile by `s`.
    pub fn translated(&self, s: f64) -> Self {
        Self {
            u: self.u.translated(s),
            v: self.v.translated(s),
            psi_x: self.psi_x.translated(s),
            envelope: None,
            ..self.clone()
        }
    }
}

pub fn construct_wave(p: &SystemParams, c: f64, cfg: &FixedPointConfig) -> Result<WaveProfile> {
    cfg.validate()?;
    p.validate()?;
    check_hypotheses(p)?.require(p, &["H2"])?;
    let th = thresholds(p)?;
    if !(c > th.c_star) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "must exceed c*(tau)",
        });
    }
    let kappa = kappa_of_speed(p.a, c)?;
    let eta = cfg.eta.unwrap_or_else(|| default_eta(p, kappa));
    let certificate = find_admissible_d(p, kappa, eta)?;
    let env = envelope_build(p, kappa, eta, cfg.d_factor * certificate.d)?;

    let grid = cfg.solver.grid(|_| 0.0)?;
    let mut u = match cfg.start {
        OuterStart::Upper => env.sample_upper(&grid),
        OuterStart::Lower => env.sample_lower(&grid),
    };
    let mut increments = Vec::new();
    let mut inner_steps = 0;
    let mut max_inner_increase: f64 = 0.0;
    let mut max_clamped: f64 = 0.0;
    loop {
        let out = inner_solve(&u, &env, cfg, p, c)?;
        inner_steps += out.steps;
        max_inner_increase = max_inner_increase.max(out.max_increase);
        max_clamped = max_clamped.max(out.clamped);
        let w = cfg.relaxation;
        let next = u.with_values(
            u.values()
                .iter()
                .zip(out.u.values())
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect(),
        )?;
        let delta = next.sup_distance(&u);
        increments.push(delta);
        u = next;
        if delta < cfg.outer_tol {
            break;
        }
        if increments.len() >= cfg.max_outer_iters {
            return Err(Error::NoConvergence {
                what: "outer iteration",
                iterations: increments.len(),
                last: delta,
            });
        }
    }

    let mut wave = WaveProfile::from_density(u, p, c, kappa)?;
    wave.envelope = Some(env);
    wave.diagnostics = Some(WaveDiagnostics {
        outer_iterations: increments.len(),
        outer_increments: increments,
        inner_steps,
        max_inner_increase,
        max_clamped,
        certificate,
    });
    Ok(wave)
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveReport {
    pub residual_u: GridFunction,
    pub residual_v: GridFunction,
    /// Sup norms over interior nodes.
    pub max_residual_u: f64,
    pub max_residual_v: f64,
    /// Least-squares slope of `−ln U` on the right quarter of the domain.
    pub decay_fit: Option<f64>,
    /// `U e^{κx}` at `x = 10/κ` and `x = 20/κ`, when both lie in the domain.
    pub tail_ratio: Option<(f64, f64)>,
    /// `|U(x_L + 5) − a/b|`.
    pub plateau_error: f64,
    pub envelope_violation: Option<f64>,
}

impl WaveReport {
    /// Relative change of `U e^{κx}` between the two probe points.
    pub fn tail_ratio_change(&self) -> Option<f64> {
        self.tail_ratio.map(|(r10, r20)| (r20 - r10).abs() / r10.abs())
    }
}

pub fn verify_wave(w: &WaveProfile, p: &SystemParams) -> Result<WaveReport> {
    let u = &w.u;
    if !u.same_grid(&w.v) || !u.same_grid(&w.psi_x) {
        return Err(Error::GridMismatch("U", "V"));
    }
    let psi_xx = u.with_values(
        w.v.values()
            .iter()
            .zip(w.psi_x.values())
            .zip(u.values())
            .map(|((v, vx), uu)| p.lambda * v - p.tau * w.c * vx - p.mu * uu)
            .collect(),
    )?;
    let field = PsiField {
        psi: w.v.clone(),
        psi_x: w.psi_x.clone(),
        psi_xx,
    };
    let residual_u = frame_operator(u, &field, p, w.c)?;

    let h = u.dx();
    let vv = w.v.values();
    let mut rv = vec![0.0; vv.len()];
    for i in 1..vv.len() - 1 {
        let v2 = (vv[i + 1] - 2.0 * vv[i] + vv[i - 1]) / (h * h);
        let v1 = (vv[i + 1] - vv[i - 1]) / (2.0 * h);
        rv[i] = v2 + p.tau * w.c * v1 - p.lambda * vv[i] + p.mu * u.values()[i];
    }
    let residual_v = u.with_values(rv)?;
    let sup = |g: &GridFunction| g.values().iter().map(|v| v.abs()).fold(0.0, f64::max);

    let quarter = u.x_max() - 0.25 * (u.x_max() - u.x0());
    let points: Vec<(f64, f64)> = u
        .xs()
        .zip(u.values())
        .filter(|(x, v)| *x >= quarter && **v > 0.0)
        .map(|(x, v)| (x, -v.ln()))
        .collect();
    let decay_fit = least_squares_slope(&points).ok().map(|e: SpeedEstimate| e.slope);

    let (x10, x20) = (10.0 / w.kappa, 20.0 / w.kappa);
    let tail_ratio = (x10 >= u.x0() && x20 <= u.x_max()).then(|| {
        (
            u.interpolate(x10) * (w.kappa * x10).exp(),
            u.interpolate(x20) * (w.kappa * x20).exp(),
        )
    });

    Ok(WaveReport {
        max_residual_u: sup(&residual_u),
        max_residual_v: sup(&residual_v),
        residual_u,
        residual_v,
        decay_fit,
        tail_ratio,
        plateau_error: (u.interpolate(u.x0() + 5.0) - p.plateau()).abs(),
        envelope_violation: w.envelope.map(|e| e.violation(u)),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeConfig {
    pub t_end: f64,
    pub dx: f64,
    pub dt: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            t_end: 40.0,
            dx: 0.05,
            dt: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeReport {
    pub c: f64,
    /// Front drift rate over `[T/2, T]` in the moving frame.
    pub drift: f64,
    pub std_error: f64,
    pub front_start: f64,
    pub front_end: f64,
}

/// Runs the self-consistent solver at speed `c` from a front-like datum and
/// measures how fast the level `a/(2b)` moves in the frame.
///
/// Below `2√a` the datum is a step `a/b·1_{x<0}`; otherwise it is
/// `min{a/b, e^{−κx}}` with `κ` matched to `c` and an exponential right
/// boundary condition.
pub fn minimal_speed_probe(p: &SystemParams, c: f64, cfg: &ProbeConfig) -> Result<ProbeReport> {
    p.validate()?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "must be finite and >= 0",
        });
    }
    let root = 2.0 * p.a.sqrt();
    let reach = (root - c).max(0.0) * cfg.t_end;
    let (x_min, x_max) = (-40.0, 40.0 + reach);
    let n = ((x_max - x_min) / cfg.dx).round() as usize + 1;
    let mut sc = SolverConfig::new(x_min, x_max, n, cfg.dt);
    if let Some(ceiling) = p.ceiling() {
        sc.blowup_cap = sc.blowup_cap.max(10.0 * ceiling);
    }
    let plateau = p.plateau();
    let u0 = if c > root {
        let kappa = kappa_of_speed(p.a, c)?;
        sc.right_bc = RightBc::ExpExtrapolation { rate: kappa };
        sc.grid(|x| plateau.min((-kappa * x).exp()))?
    } else {
        sc.grid(|x| if x < 0.0 { plateau } else { 0.0 })?
    };
    let solver = FrameSolver::new(sc, *p, c)?;
    let trace = solver.run(u0, cfg.t_end, &Sampling::every(0.25))?;
    let half = 0.5 * cfg.t_end;
    let mut points = Vec::new();
    for s in trace.samples.iter().filter(|s| s.t >= half - 1e-9) {
        match s.front {
            Some(x) => points.push((s.t, x)),
            None => return Err(Error::FrontLost { t: s.t }),
        }
    }
    let est = least_squares_slope(&points)?;
    Ok(ProbeReport {
        c,
        drift: est.slope,
        std_error: est.std_error,
        front_start: points[0].1,
        front_end: points[points.len() - 1].1,
    })
}

/// Waves at `c_j = c* + gap·2^{−j}`, `j = 0..count`, each translated so that
/// its level `a/(2b)` crossing sits at `x = 0`.
pub fn critical_sequence(
    p: &SystemParams,
    gap: f64,
    count: usize,
    cfg: &FixedPointConfig,
) -> Result<Vec<WaveProfile>> {
    let c_star = thresholds(p)?.c_star;
    (0..count)
        .map(|j| {
            let c = c_star + gap * 0.5f64.powi(j as i32);
            let w = construct_wave(p, c, cfg)?;
            let front = crate::solver::front_position(&w.u, 0.5 * p.plateau())
                .ok_or(Error::FrontLost { t: f64::INFINITY })?;
            let mut shifted = w.translated(-front);
            shifted.diagnostics = w.diagnostics;
            Ok(shifted)
        })
        .collect()
}
