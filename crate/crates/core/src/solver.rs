//! Time stepping of the moving-frame equation
//!
//! ```text
//! u_t = u_xx + (c − χΨ_x) u_x + (a − χΨ_xx − b u) u
//! ```
//!
//! with `Ψ` quasi-static: either recomputed from the current density every
//! step ([`Coupling::SelfConsistent`]) or taken from a fixed density
//! ([`Coupling::Frozen`]).
//!
//! Space: centred second differences for diffusion; centred differences for
//! advection where the cell Péclet number `|c − χΨ_x|·dx` is at most 2 and
//! first-order upwind elsewhere. Either way the spatial operator has
//! non-negative off-diagonal couplings, so both schemes below are monotone
//! and positivity preserving under their step-size gates.
//!
//! Time: [`Scheme::Imex`] solves the advection-diffusion part implicitly
//! (one tridiagonal solve) and the reaction explicitly; [`Scheme::Explicit`]
//! is forward Euler throughout. `Ψ_xx` always comes from the elliptic
//! identity `Ψ_xx = λΨ − τcΨ_x − μu`, never from differencing `Ψ`.

use serde::Serialize;

use crate::constants::SystemParams;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{ExpKernel, PsiField, Tail, TailModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Imex,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LeftBc {
    NoFlux,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RightBc {
    /// `u = 0` at the right end.
    Zero,
    /// Ghost value `u_n = u_{n−1}·e^{−rate·dx}`.
    ExpExtrapolation { rate: f64 },
    NoFlux,
    /// `u = value` at the right end; `Ψ` sees a tail `value·e^{−rate(x−x_R)}`.
    Pinned { value: f64, rate: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coupling {
    SelfConsistent,
    Frozen(GridFunction),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub left_bc: LeftBc,
    pub right_bc: RightBc,
    pub coupling: Coupling,
    pub blowup_cap: f64,
    /// Largest clipped mass per step, relative to the total mass.
    pub clip_tolerance: f64,
}

impl SolverConfig {
    /// IMEX, no-flux on the left, `u = 0` on the right, self-consistent `Ψ`.
    pub fn new(x_min: f64, x_max: f64, n: usize, dt: f64) -> Self {
        Self {
            x_min,
            x_max,
            n,
            dt,
            scheme: Scheme::Imex,
            left_bc: LeftBc::NoFlux,
            right_bc: RightBc::Zero,
            coupling: Coupling::SelfConsistent,
            blowup_cap: 1e6,
            clip_tolerance: 1e-6,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    /// Samples `f` on this configuration's grid.
    pub fn grid(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::from_fn(self.x_min, self.x_max, self.n, f)
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !(self.x_max > self.x_min) || self.n < 64 {
            return Err(Error::InvalidGrid(format!(
                "domain [{}, {}] with {} nodes (need x_min < x_max, n >= 64)",
                self.x_min, self.x_max, self.n
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be finite and > 0",
            });
        }
        if let Some(ceiling) = p.ceiling() {
            if !(self.blowup_cap > ceiling) {
                return Err(Error::InvalidParameter {
                    name: "blowup_cap",
                    value: self.blowup_cap,
                    reason: "must exceed a/(b - chi*mu)",
                });
            }
        }
        if let Coupling::Frozen(env) = &self.coupling {
            let grid = self.grid(|_| 0.0)?;
            if !env.same_grid(&grid) {
                return Err(Error::GridMismatch("frozen density", "solver grid"));
            }
        }
        Ok(())
    }

    fn tails_for(&self, u: &[f64]) -> TailModel {
        let left = match self.left_bc {
            LeftBc::NoFlux => Tail::Constant(u[0]),
            LeftBc::Fixed(v) => Tail::Constant(v),
        };
        let right = match self.right_bc {
            RightBc::Zero => Tail::Constant(0.0),
            RightBc::ExpExtrapolation { rate } => Tail::Exponential { rate },
            RightBc::NoFlux => Tail::Constant(u[u.len() - 1]),
            RightBc::Pinned { rate, .. } => Tail::Exponential { rate },
        };
        TailModel { left, right }
    }
}

/// Solution snapshot.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub u: GridFunction,
    /// Field the next step will use.
    pub psi_field: PsiField,
    /// Mass removed by clipping negative undershoots, summed over all steps.
    pub clipped_mass: f64,
}

/// `(sub, diag, super)` of the advection-diffusion operator row.
#[derive(Clone, Copy, Debug, Default)]
struct Row {
    lower: f64,
    diag: f64,
    upper: f64,
}

/// Hybrid centred/upwind row for velocity `w`.
fn stencil(w: f64, h: f64, inv_h2: f64) -> Row {
    if w.abs() * h <= 2.0 {
        let half = w / (2.0 * h);
        Row {
            lower: inv_h2 - half,
            diag: -2.0 * inv_h2,
            upper: inv_h2 + half,
        }
    } else if w > 0.0 {
        Row {
            lower: inv_h2,
            diag: -2.0 * inv_h2 - w / h,
            upper: inv_h2 + w / h,
        }
    } else {
        Row {
            lower: inv_h2 - w / h,
            diag: -2.0 * inv_h2 + w / h,
            upper: inv_h2,
        }
    }
}

/// `U'' + (c − χΨ_x)U' + (a − χΨ_xx − bU)U` at interior nodes with the
/// solver's stencils; the two end nodes are reported as 0.
pub fn frame_operator(u: &GridFunction, field: &PsiField, p: &SystemParams, c: f64) -> Result<GridFunction> {
    if !u.same_grid(&field.psi_x) || !u.same_grid(&field.psi_xx) {
        return Err(Error::GridMismatch("profile", "field"));
    }
    let h = u.dx();
    let inv_h2 = 1.0 / (h * h);
    let v = u.values();
    let gx = field.psi_x.values();
    let gxx = field.psi_xx.values();
    let mut out = vec![0.0; v.len()];
    for i in 1..v.len() - 1 {
        let r = stencil(c - p.chi * gx[i], h, inv_h2);
        out[i] = r.lower * v[i - 1]
            + r.diag * v[i]
            + r.upper * v[i + 1]
            + (p.a - p.chi * gxx[i] - p.b * v[i]) * v[i];
    }
    u.with_values(out)
}

/// Thomas factorisation of `I − dt·L`.
#[derive(Clone, Debug)]
struct Factored {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Factored {
    fn new(rows: &[Row], dt: f64, dirichlet: (bool, bool)) -> Self {
        let n = rows.len();
        let mut lower = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let fixed = (i == 0 && dirichlet.0) || (i == n - 1 && dirichlet.1);
            let (l, d, u) = if fixed {
                (0.0, 1.0, 0.0)
            } else {
                let r = rows[i];
                (-dt * r.lower, 1.0 - dt * r.diag, -dt * r.upper)
            };
            let pivot = if i == 0 { d } else { d - l * upper_mod[i - 1] };
            lower[i] = l;
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = u / pivot;
        }
        Self {
            lower,
            upper_mod,
            inv_pivot,
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_mod[i] * rhs[i + 1];
        }
    }
}

/// Frozen-mode data: the fixed field, its operator and factorisation.
#[derive(Clone, Debug)]
struct FrozenField {
    field: PsiField,
    rows: Vec<Row>,
    factored: Option<Factored>,
}

/// A configured solver; reusable across many steps and runs.
#[derive(Clone, Debug)]
pub struct FrameSolver {
    cfg: SolverConfig,
    p: SystemParams,
    c: f64,
    kernel: ExpKernel,
    frozen: Option<FrozenField>,
}

impl FrameSolver {
    pub fn new(cfg: SolverConfig, p: SystemParams, c: f64) -> Result<Self> {
        p.validate()?;
        cfg.validate(&p)?;
        let kernel = ExpKernel::new(&p, c, cfg.dx())?;
        let mut solver = Self {
            cfg,
            p,
            c,
            kernel,
            frozen: None,
        };
        if let Coupling::Frozen(env) = &solver.cfg.coupling {
            let field = solver.field_of(env.values(), env)?;
            let rows = solver.operator_rows(field.psi_x.values());
            let factored = (solver.cfg.scheme == Scheme::Imex)
                .then(|| Factored::new(&rows, solver.cfg.dt, solver.dirichlet()));
            solver.frozen = Some(FrozenField {
                field,
                rows,
                factored,
            });
        }
        Ok(solver)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn params(&self) -> &SystemParams {
        &self.p
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    fn field_of(&self, density: &[f64], grid: &GridFunction) -> Result<PsiField> {
        let tails = self.cfg.tails_for(density);
        let (psi, psi_x) = self.kernel.psi_and_gradient(density, &tails)?;
        let psi_xx = self.kernel.second_derivative(&self.p, &psi, &psi_x, density);
        Ok(PsiField {
            psi: grid.with_values(psi)?,
            psi_x: grid.with_values(psi_x)?,
            psi_xx: grid.with_values(psi_xx)?,
        })
    }

    fn dirichlet(&self) -> (bool, bool) {
        (
            matches!(self.cfg.left_bc, LeftBc::Fixed(_)),
            matches!(self.cfg.right_bc, RightBc::Zero | RightBc::Pinned { .. }),
        )
    }

    /// Rows of the advection-diffusion operator with boundary ghosts folded in.
    fn operator_rows(&self, psi_x: &[f64]) -> Vec<Row> {
        let n = psi_x.len();
        let h = self.cfg.dx();
        let inv_h2 = 1.0 / (h * h);
        let mut rows: Vec<Row> = psi_x
            .iter()
            .map(|&gx| stencil(self.c - self.p.chi * gx, h, inv_h2))
            .collect();

        if self.cfg.left_bc == LeftBc::NoFlux {
            rows[0].upper += rows[0].lower;
            rows[0].lower = 0.0;
        }
        let last = &mut rows[n - 1];
        match self.cfg.right_bc {
            RightBc::ExpExtrapolation { rate } => {
                last.diag += last.upper * (-rate * h).exp();
                last.upper = 0.0;
            }
            RightBc::NoFlux => {
                last.lower += last.upper;
                last.upper = 0.0;
            }
            RightBc::Zero | RightBc::Pinned { .. } => {}
        }
        rows
    }

    /// Field used to advance from `state`.
    fn active_field<'a>(&'a self, state: &'a State) -> &'a PsiField {
        match &self.frozen {
            Some(f) => &f.field,
            None => &state.psi_field,
        }
    }

    /// `a − χΨ_xx − b u` at every node.
    fn reaction_rate(&self, field: &PsiField, u: &[f64]) -> Vec<f64> {
        field
            .psi_xx
            .values()
            .iter()
            .zip(u)
            .map(|(sxx, v)| self.p.a - self.p.chi * sxx - self.p.b * v)
            .collect()
    }

    /// Builds the initial state, computing `Ψ` from `u0` (or the frozen density).
    pub fn init(&self, u0: GridFunction) -> Result<State> {
        let grid = self.cfg.grid(|_| 0.0)?;
        if !u0.same_grid(&grid) {
            return Err(Error::GridMismatch("initial datum", "solver grid"));
        }
        let psi_field = match &self.frozen {
            Some(f) => f.field.clone(),
            None => self.field_of(u0.values(), &u0)?,
        };
        Ok(State {
            t: 0.0,
            u: u0,
            psi_field,
            clipped_mass: 0.0,
        })
    }

    /// The semi-discrete right-hand side `A_{u,c}(U)` at every node.
    ///
    /// Dirichlet nodes report 0.
    pub fn rhs(&self, state: &State) -> Result<GridFunction> {
        let u = state.u.values();
        let field = self.active_field(state);
        let rows = match &self.frozen {
            Some(f) => f.rows.clone(),
            None => self.operator_rows(field.psi_x.values()),
        };
        let react = self.reaction_rate(field, u);
        let n = u.len();
        let (fix_left, fix_right) = self.dirichlet();
        let mut out = vec![0.0; n];
        for i in 0..n {
            if (i == 0 && fix_left) || (i == n - 1 && fix_right) {
                continue;
            }
            let r = rows[i];
            let left = if i > 0 { r.lower * u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { r.upper * u[i + 1] } else { 0.0 };
            out[i] = left + r.diag * u[i] + right + react[i] * u[i];
            if !out[i].is_finite() {
                return Err(Error::NonFinite { node: i });
            }
        }
        state.u.with_values(out)
    }

    fn check_gates(&self, field: &PsiField, u: &[f64], react: &[f64]) -> Result<()> {
        let dt = self.cfg.dt;
        let h = self.cfg.dx();
        match self.cfg.scheme {
            Scheme::Explicit => {
                let w_max = field
                    .psi_x
                    .values()
                    .iter()
                    .map(|gx| (self.c - self.p.chi * gx).abs())
                    .fold(0.0, f64::max);
                if w_max > 0.0 && dt > 0.4 * h / w_max {
                    return Err(Error::StabilityGate {
                        gate: "advection",
                        dt,
                        limit: 0.4 * h / w_max,
                    });
                }
                if dt > 0.4 * h * h / 2.0 {
                    return Err(Error::StabilityGate {
                        gate: "diffusion",
                        dt,
                        limit: 0.4 * h * h / 2.0,
                    });
                }
            }
            Scheme::Imex => {
                // keeps v ↦ v(1 + dt·r(v)) increasing and positive
                let worst = react
                    .iter()
                    .zip(u)
                    .map(|(r, v)| r.abs() + self.p.b * v.abs())
                    .fold(0.0, f64::max);
                if worst > 0.0 && dt * worst > 0.5 {
                    return Err(Error::StabilityGate {
                        gate: "reaction",
                        dt,
                        limit: 0.5 / worst,
                    });
                }
            }
        }
        Ok(())
    }

    /// Advances `state` by one time step in place.
    pub fn advance(&self, state: &mut State) -> Result<()> {
        let dt = self.cfg.dt;
        let h = self.cfg.dx();
        let n = state.u.len();
        let u = state.u.values();
        let field = self.active_field(state);
        let react = self.reaction_rate(field, u);
        self.check_gates(field, u, &react)?;

        let (fix_left, fix_right) = self.dirichlet();
        let left_value = match self.cfg.left_bc {
            LeftBc::Fixed(v) => v,
            LeftBc::NoFlux => 0.0,
        };
        let right_value = match self.cfg.right_bc {
            RightBc::Pinned { value, .. } => value,
            _ => 0.0,
        };

        let mut next: Vec<f64> = match self.cfg.scheme {
            Scheme::Imex => {
                let mut rhs: Vec<f64> = u
                    .iter()
                    .zip(&react)
                    .map(|(v, r)| v + dt * r * v)
                    .collect();
                if fix_left {
                    rhs[0] = left_value;
                }
                if fix_right {
                    rhs[n - 1] = right_value;
                }
                match self.frozen.as_ref().and_then(|f| f.factored.as_ref()) {
                    Some(fac) => fac.solve(&mut rhs),
                    None => {
                        let rows = self.operator_rows(field.psi_x.values());
                        Factored::new(&rows, dt, (fix_left, fix_right)).solve(&mut rhs);
                    }
                }
                rhs
            }
            Scheme::Explicit => {
                let owned;
                let rows = match &self.frozen {
                    Some(f) => &f.rows,
                    None => {
                        owned = self.operator_rows(field.psi_x.values());
                        &owned
                    }
                };
                (0..n)
                    .map(|i| {
                        let r = rows[i];
                        let left = if i > 0 { r.lower * u[i - 1] } else { 0.0 };
                        let right = if i + 1 < n { r.upper * u[i + 1] } else { 0.0 };
                        let lu = left + r.diag * u[i] + right;
                        u[i] + dt * (lu + react[i] * u[i])
                    })
                    .collect()
            }
        };
        if fix_left {
            next[0] = left_value;
        }
        if fix_right {
            next[n - 1] = right_value;
        }

        let t = state.t + dt;
        let mut clipped = 0.0;
        let mut total = 0.0;
        let mut max = f64::NEG_INFINITY;
        for (i, v) in next.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { node: i });
            }
            if *v < 0.0 {
                clipped -= *v * h;
                *v = 0.0;
            }
            total += *v * h;
            max = max.max(*v);
        }
        if clipped > self.cfg.clip_tolerance * total && clipped > 1e-300 {
            return Err(Error::ClippedMass { t, clipped, total });
        }
        if max > self.cfg.blowup_cap {
            return Err(Error::BlowUp {
                t,
                max,
                cap: self.cfg.blowup_cap,
                profile: next,
            });
        }

        let u_next = state.u.with_values(next)?;
        if self.frozen.is_none() {
            state.psi_field = self.field_of(u_next.values(), &u_next)?;
        }
        state.u = u_next;
        state.t = t;
        state.clipped_mass += clipped;
        Ok(())
    }

    pub fn step(&self, state: &State) -> Result<State> {
        let mut next = state.clone();
        self.advance(&mut next)?;
        Ok(next)
    }

    fn sample(&self, state: &State, sampling: &Sampling) -> TraceSample {
        let u = &state.u;
        let plateau = self.p.plateau();
        let chem = self.p.chemical_plateau();
        let inf_probe = sampling.probe.map(|(lo, hi)| {
            u.xs()
                .zip(u.values())
                .filter(|(x, _)| *x >= lo && *x <= hi)
                .map(|(_, &v)| v)
                .fold(f64::INFINITY, f64::min)
        });
        let level = sampling.front_level.unwrap_or(0.5 * plateau);
        TraceSample {
            t: state.t,
            sup_u: u.max(),
            inf_u: u.min(),
            inf_probe,
            front: front_position(u, level),
            dist_u: u.values().iter().map(|v| (v - plateau).abs()).fold(0.0, f64::max),
            dist_v: state
                .psi_field
                .psi
                .values()
                .iter()
                .map(|v| (v - chem).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Steps from `u0` to `t_end`, sampling every `sampling.every`.
    pub fn run(&self, u0: GridFunction, t_end: f64, sampling: &Sampling) -> Result<Trace> {
        let mut state = self.init(u0)?;
        let steps = (t_end / self.cfg.dt).round() as usize;
        let stride = ((sampling.every / self.cfg.dt).round() as usize).max(1);
        let mut samples = vec![self.sample(&state, sampling)];
        for k in 1..=steps {
            self.advance(&mut state)?;
            if k % stride == 0 || k == steps {
                samples.push(self.sample(&state, sampling));
            }
        }
        Ok(Trace {
            samples,
            final_state: state,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sampling {
    pub every: f64,
    /// Level tracked by the front position; defaults to `a/(2b)`.
    pub front_level: Option<f64>,
    /// Window over which the infimum of `u` is recorded.
    pub probe: Option<(f64, f64)>,
}

impl Sampling {
    pub fn every(every: f64) -> Self {
        Self {
            every,
            front_level: None,
            probe: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub inf_probe: Option<f64>,
    pub front: Option<f64>,
    /// `sup |u − a/b|`.
    pub dist_u: f64,
    /// `sup |Ψ − aμ/(bλ)|`.
    pub dist_v: f64,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub final_state: State,
}

pub fn rhs(state: &State, cfg: &SolverConfig, p: &SystemParams, c: f64) -> Result<GridFunction> {
    FrameSolver::new(cfg.clone(), *p, c)?.rhs(state)
}

pub fn step(state: &State, cfg: &SolverConfig, p: &SystemParams, c: f64) -> Result<State> {
    FrameSolver::new(cfg.clone(), *p, c)?.step(state)
}

pub fn run(
    u0: GridFunction,
    t_end: f64,
    cfg: &SolverConfig,
    p: &SystemParams,
    c: f64,
    sampling: &Sampling,
) -> Result<Trace> {
    FrameSolver::new(cfg.clone(), *p, c)?.run(u0, t_end, sampling)
}

/// Rightmost crossing of `level`, linearly interpolated between nodes.
pub fn front_position(u: &GridFunction, level: f64) -> Option<f64> {
    let v = u.values();
    (0..v.len() - 1).rev().find_map(|i| {
        let (lo, hi) = (v[i] - level, v[i + 1] - level);
        if lo == 0.0 && hi != 0.0 {
            return Some(u.x(i));
        }
        if lo * hi < 0.0 || (hi == 0.0 && lo != 0.0) {
            let frac = lo / (lo - hi);
            return Some(u.x(i) + frac * u.dx());
        }
        None
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpeedEstimate {
    pub slope: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Least-squares slope of front position against time on `[t1, t2]`.
pub fn spreading_speed(trace: &Trace, window: (f64, f64)) -> Result<SpeedEstimate> {
    let mut points = Vec::new();
    for s in trace.samples.iter().filter(|s| s.t >= window.0 && s.t <= window.1) {
        match s.front {
            Some(x) => points.push((s.t, x)),
            None => return Err(Error::FrontLost { t: s.t }),
        }
    }
    least_squares_slope(&points)
}

/// Ordinary least squares slope with its standard error; needs 8 points.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Result<SpeedEstimate> {
    let n = points.len();
    if n < 8 {
        return Err(Error::TooFewSamples { needed: 8, found: n });
    }
    let nf = n as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mx = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let stt: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stx: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    let slope = stx / stt;
    let intercept = mx - slope * mt;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let std_error = (sse / (nf - 2.0) / stt).sqrt();
    Ok(SpeedEstimate {
        slope,
        std_error,
        samples: n,
    })
}
