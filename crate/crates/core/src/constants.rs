//! Closed-form scalar quantities of the model: the speed-dependent kernel
//! rates, the decay/speed correspondence, the thresholds `b*`, `κ*`, `c*`
//! and the standing hypotheses H1–H4.
//!
//! Every supremum has a brute-force counterpart (`*_by_scan`,
//! `*_by_bisection`) so the closed forms can be cross-checked.

use serde::Serialize;

use crate::error::{Error, Result};

/// Model constants `(χ, μ, λ, a, b, τ)`.
///
/// `χ = 0` is accepted so the decoupled Fisher-KPP limit can be run through
/// the same code paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SystemParams {
    pub chi: f64,
    pub mu: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

impl SystemParams {
    pub fn new(chi: f64, mu: f64, lambda: f64, a: f64, b: f64, tau: f64) -> Result<Self> {
        let p = Self {
            chi,
            mu,
            lambda,
            a,
            b,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("chi", self.chi)?;
        positive("mu", self.mu)?;
        positive("lambda", self.lambda)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        non_negative("tau", self.tau)
    }

    /// Positive equilibrium `a/b` of the density.
    pub fn plateau(&self) -> f64 {
        self.a / self.b
    }

    /// Chemical equilibrium `aμ/(bλ)` paired with [`plateau`](Self::plateau).
    pub fn chemical_plateau(&self) -> f64 {
        self.a * self.mu / (self.b * self.lambda)
    }

    /// `a/(b − χμ)`, the global ceiling under H1; `None` when H1 fails.
    pub fn ceiling(&self) -> Option<f64> {
        let gap = self.b - self.chi * self.mu;
        (gap > 0.0).then(|| self.a / gap)
    }

    pub fn with_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }
}

/// Kernel rates for frame speed `c`: `λ2` and `−λ1` are the roots of
/// `m² + τc·m − λ = 0` and `amplitude = 1/√(4λ + τ²c²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayRates {
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub amplitude: f64,
}

impl DecayRates {
    /// Rates for any finite frame speed, including the lab frame `c = 0`.
    ///
    /// The smaller root is evaluated in rationalized form so it keeps full
    /// relative precision when `τ|c| ≫ √λ`.
    pub fn for_frame(p: &SystemParams, c: f64) -> Self {
        let tc = p.tau * c;
        let root = (2.0 * p.lambda.sqrt()).hypot(tc);
        let (lambda1, lambda2) = if tc >= 0.0 {
            let l1 = 0.5 * (tc + root);
            (l1, 2.0 * p.lambda / (tc + root))
        } else {
            let l2 = 0.5 * (root - tc);
            (2.0 * p.lambda / (root - tc), l2)
        };
        Self {
            c,
            lambda1,
            lambda2,
            amplitude: 1.0 / root,
        }
    }

    /// Residuals of `m² + τc·m − λ` at `m = λ2` and `m = −λ1`, each scaled
    /// by the magnitude of the terms being cancelled.
    pub fn quadratic_residuals(&self, p: &SystemParams) -> (f64, f64) {
        let tc = p.tau * self.c;
        let eval = |m: f64| {
            let terms = [m * m, tc * m, -p.lambda];
            let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
            terms.iter().sum::<f64>().abs() / scale
        };
        (eval(self.lambda2), eval(-self.lambda1))
    }

    /// `τcλ2 − λ`, which always equals `−λλ2/λ1 < 0`.
    pub fn tau_c_lambda2_minus_lambda(&self, p: &SystemParams) -> f64 {
        p.tau * self.c * self.lambda2 - p.lambda
    }
}

/// Kernel rates for a traveling frame; rejects `c <= 0`.
pub fn decay_rates(p: &SystemParams, c: f64) -> Result<DecayRates> {
    p.validate()?;
    positive("c", c)?;
    Ok(DecayRates::for_frame(p, c))
}

/// `c_κ = (a + κ²)/κ` for `0 < κ <= √a` (the endpoint gives `2√a`).
pub fn speed_of_kappa(a: f64, kappa: f64) -> Result<f64> {
    positive("a", a)?;
    if !(kappa > 0.0 && kappa <= a.sqrt()) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "must lie in (0, sqrt(a)]",
        });
    }
    Ok(a / kappa + kappa)
}

/// Smaller root of `κ² − cκ + a = 0`; requires `c > 2√a`.
pub fn kappa_of_speed(a: f64, c: f64) -> Result<f64> {
    positive("a", a)?;
    let min_speed = 2.0 * a.sqrt();
    if !(c.is_finite() && c > min_speed) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "must exceed 2*sqrt(a)",
        });
    }
    let disc = ((c - min_speed) * (c + min_speed)).sqrt();
    Ok(2.0 * a / (c + disc))
}

/// The quantity inside the `b*` supremum at decay rate `κ`.
pub fn b_star_supremand(p: &SystemParams, kappa: f64) -> f64 {
    let c = p.a / kappa + kappa;
    let r = DecayRates::for_frame(p, c);
    let excess = (kappa - r.lambda2).max(0.0);
    1.0 + r.lambda2 * excess / ((r.lambda1 + r.lambda2) * (kappa + r.lambda2))
}

/// Breakdown of the `b*` computation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BStarSearch {
    /// Best value on the uniform scan.
    pub grid_max: f64,
    /// Maximiser on the uniform scan.
    pub grid_argmax: f64,
    /// After golden-section refinement and the endpoint `κ = √a`.
    pub refined: f64,
}

const B_STAR_GRID: usize = 10_000;

/// Scans the supremand on a uniform grid over `(ε, √a − ε)` and refines the
/// bracketing cell by golden section.
///
/// The supremand extends continuously to `κ = √a` (where `c_κ = 2√a`), so
/// that endpoint is included in the refined value; for `τ = 0` and `λ < a`
/// the supremum sits exactly there.
pub fn b_star_search(p: &SystemParams) -> Result<BStarSearch> {
    p.validate()?;
    let root_a = p.a.sqrt();
    let eps = 1e-8 * root_a;
    let lo = eps;
    let hi = root_a - eps;
    let step = (hi - lo) / (B_STAR_GRID - 1) as f64;
    let f = |k: f64| b_star_supremand(p, k);

    let (best_i, grid_max) = (0..B_STAR_GRID)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let grid_argmax = lo + step * best_i as f64;

    let left = lo + step * best_i.saturating_sub(1) as f64;
    let right = (lo + step * (best_i + 1) as f64).min(hi);
    let (_, cell_max) = golden_max(f, left, right, 1e-13);

    let refined = grid_max.max(cell_max).max(f(root_a)).clamp(1.0, 2.0);
    Ok(BStarSearch {
        grid_max,
        grid_argmax,
        refined,
    })
}

/// `b*_τ`, a value in `[1, 2]`.
pub fn b_star(p: &SystemParams) -> Result<f64> {
    Ok(b_star_search(p)?.refined)
}

/// Closed form of `b*_0` valid for `τ = 0`.
pub fn b_star_tau0_closed_form(a: f64, lambda: f64) -> f64 {
    let (ra, rl) = (a.sqrt(), lambda.sqrt());
    1.0 + (ra - rl).max(0.0) / (2.0 * (ra + rl))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + lo.abs()) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let candidates = [(lo, f(lo)), (x1, f1), (x2, f2), (hi, f(hi))];
    candidates
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}

/// `τ ≥ ½(1 − λ/a)_+`.
pub fn h4_holds(p: &SystemParams) -> bool {
    p.tau >= 0.5 * (1.0 - p.lambda / p.a).max(0.0)
}

/// `κ*_τ = min{√a, √((λ + τa)/(1 − τ)_+)}` with division by zero read as `+∞`.
///
/// The second argument is `>= √a` exactly when H4 holds, so that predicate
/// selects the branch and `κ* = √a` is returned bit-exactly there.
pub fn kappa_star(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    let root_a = p.a.sqrt();
    if h4_holds(p) {
        return Ok(root_a);
    }
    let bound = ((p.lambda + p.tau * p.a) / (1.0 - p.tau)).sqrt();
    Ok(bound.min(root_a))
}

/// `κ*_τ` from its defining supremum: the last `κ ∈ (0, √a)` with
/// `λ1^{c_κ} − κ ≥ 0`, located by bisection on that decreasing map.
pub fn kappa_star_by_bisection(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    let root_a = p.a.sqrt();
    let gap = |k: f64| DecayRates::for_frame(p, p.a / k + k).lambda1 - k;
    if gap(root_a) >= 0.0 {
        return Ok(root_a);
    }
    let (mut lo, mut hi) = (0.0, root_a);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `c*(τ) = κ* + a/κ*`, returned as exactly `2√a` when `κ* = √a`.
pub fn c_star(p: &SystemParams) -> Result<f64> {
    let k = kappa_star(p)?;
    let root_a = p.a.sqrt();
    if k == root_a {
        Ok(2.0 * root_a)
    } else {
        Ok(k + p.a / k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub kappa_star: f64,
    pub c_star: f64,
    pub b_star: f64,
}

pub fn thresholds(p: &SystemParams) -> Result<Thresholds> {
    Ok(Thresholds {
        kappa_star: kappa_star(p)?,
        c_star: c_star(p)?,
        b_star: b_star(p)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
}

impl Hypotheses {
    /// First failing hypothesis among those listed, with the violated inequality.
    pub fn require(&self, p: &SystemParams, which: &[&'static str]) -> Result<()> {
        let chi_mu = p.chi * p.mu;
        for &h in which {
            let (ok, detail) = match h {
                "H1" => (self.h1, format!("b = {} <= chi*mu = {}", p.b, chi_mu)),
                "H2" => (
                    self.h2,
                    format!(
                        "b = {} <= b*_tau*chi*mu = {}",
                        p.b,
                        b_star(p).unwrap_or(f64::NAN) * chi_mu
                    ),
                ),
                "H3" => (self.h3, format!("b = {} <= 2*chi*mu = {}", p.b, 2.0 * chi_mu)),
                "H4" => (
                    self.h4,
                    format!("tau = {} < (1 - lambda/a)_+/2", p.tau),
                ),
                _ => continue,
            };
            if !ok {
                return Err(Error::Hypothesis { hypothesis: h, detail });
            }
        }
        Ok(())
    }
}

pub fn check_hypotheses(p: &SystemParams) -> Result<Hypotheses> {
    let b_star = b_star(p)?;
    let chi_mu = p.chi * p.mu;
    Ok(Hypotheses {
        h1: p.b > chi_mu,
        h2: p.b > b_star * chi_mu,
        h3: p.b > 2.0 * chi_mu,
        h4: h4_holds(p),
    })
}
