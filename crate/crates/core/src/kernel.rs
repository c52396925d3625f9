//! The quasi-static chemical field
//!
//! ```text
//! Ψ(x) = μB ( e^{−λ1 x} ∫_{−∞}^x e^{λ1 y} u(y) dy + e^{λ2 x} ∫_x^∞ e^{−λ2 y} u(y) dy )
//! ```
//!
//! evaluated in O(n) by two one-sided recurrences. On each cell the
//! exponential weight is integrated exactly against the linear interpolant
//! of `u`, so every stored factor is `<= 1` and the quadrature weights are
//! non-negative: `u >= 0` gives `Ψ >= 0`, and `u <= w` gives `Ψ(u) <= Ψ(w)`.
//! The parts of the integrals beyond the grid come from a [`TailModel`] and
//! are integrated in closed form.

use serde::Serialize;

use crate::constants::{DecayRates, SystemParams};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Extension of grid data past one end of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Tail {
    /// `u(y) = value` beyond the endpoint.
    Constant(f64),
    /// `u(y) = u_end · e^{−rate·dist(y, end)}`, amplitude matched at the
    /// endpoint. A negative rate grows away from the domain, which is how
    /// `e^{−κy}` continues to the left.
    Exponential { rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailModel {
    pub left: Tail,
    pub right: Tail,
}

impl TailModel {
    pub fn zero() -> Self {
        Self {
            left: Tail::Constant(0.0),
            right: Tail::Constant(0.0),
        }
    }

    /// Constant extension on the left, exponential decay at `rate` on the right.
    pub fn plateau_decay(left: f64, rate: f64) -> Self {
        Self {
            left: Tail::Constant(left),
            right: Tail::Exponential { rate },
        }
    }

    /// Continue each end with its boundary value.
    pub fn flat(u: &GridFunction) -> Self {
        let v = u.values();
        Self {
            left: Tail::Constant(v[0]),
            right: Tail::Constant(v[v.len() - 1]),
        }
    }
}

/// `Ψ`, `Ψ_x` and `Ψ_xx` on a common grid.
#[derive(Clone, Debug)]
pub struct PsiField {
    pub psi: GridFunction,
    pub psi_x: GridFunction,
    pub psi_xx: GridFunction,
}

/// `(1 − e^{−z})/z` and `(1 − e^{−z}(1 + z))/z²`.
fn exp_weights(z: f64) -> (f64, f64) {
    let phi1 = -(-z).exp_m1() / z;
    let phi2 = if z < 1e-2 {
        // Σ (−z)^k (k+1)/(k+2)!
        let mut sum = 0.0;
        let mut power = 1.0;
        let mut fact = 2.0;
        for k in 0..12 {
            sum += power * (k + 1) as f64 / fact;
            power *= -z;
            fact *= (k + 3) as f64;
        }
        sum
    } else {
        (-(-z).exp_m1() - z * (-z).exp()) / (z * z)
    };
    (phi1, phi2)
}

/// Recurrence coefficients for one rate on one spacing.
#[derive(Clone, Copy, Debug)]
struct Sweep {
    rate: f64,
    decay: f64,
    near: f64,
    far: f64,
}

impl Sweep {
    fn new(rate: f64, dx: f64) -> Self {
        let z = rate * dx;
        let (phi1, phi2) = exp_weights(z);
        Self {
            rate,
            decay: (-z).exp(),
            near: dx * (phi1 - phi2),
            far: dx * phi2,
        }
    }

    fn tail(&self, tail: Tail, end_value: f64) -> Result<f64> {
        match tail {
            Tail::Constant(v) => Ok(v / self.rate),
            Tail::Exponential { rate } => {
                let denom = self.rate + rate;
                if denom > 0.0 {
                    Ok(end_value / denom)
                } else {
                    Err(Error::DivergentTail {
                        rate,
                        limit: self.rate,
                    })
                }
            }
        }
    }
}

/// Precomputed kernel for one `(params, c, dx)`.
#[derive(Clone, Copy, Debug)]
pub struct ExpKernel {
    rates: DecayRates,
    mu: f64,
    left: Sweep,
    right: Sweep,
}

impl ExpKernel {
    pub fn new(p: &SystemParams, c: f64, dx: f64) -> Result<Self> {
        p.validate()?;
        if !c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c,
                reason: "must be finite",
            });
        }
        let rates = DecayRates::for_frame(p, c);
        let worst = rates.lambda1.max(rates.lambda2) * dx;
        if worst > 50.0 {
            return Err(Error::QuadratureUnderflow(worst));
        }
        Ok(Self {
            rates,
            mu: p.mu,
            left: Sweep::new(rates.lambda1, dx),
            right: Sweep::new(rates.lambda2, dx),
        })
    }

    pub fn rates(&self) -> &DecayRates {
        &self.rates
    }

    /// `L_i = ∫_{−∞}^{x_i} e^{−λ1(x_i−y)} u dy` and `R_i = ∫_{x_i}^∞ e^{−λ2(y−x_i)} u dy`.
    pub fn one_sided(&self, u: &[f64], tails: &TailModel) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = u.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];

        left[0] = self.left.tail(tails.left, u[0])?;
        let s = self.left;
        for i in 1..n {
            left[i] = s.decay * left[i - 1] + s.near * u[i] + s.far * u[i - 1];
        }

        right[n - 1] = self.right.tail(tails.right, u[n - 1])?;
        let s = self.right;
        for i in (0..n - 1).rev() {
            right[i] = s.decay * right[i + 1] + s.near * u[i] + s.far * u[i + 1];
        }
        Ok((left, right))
    }

    /// `(Ψ, Ψ_x)` as raw vectors.
    pub fn psi_and_gradient(&self, u: &[f64], tails: &TailModel) -> Result<(Vec<f64>, Vec<f64>)> {
        let (left, right) = self.one_sided(u, tails)?;
        let scale = self.mu * self.rates.amplitude;
        let (l1, l2) = (self.rates.lambda1, self.rates.lambda2);
        let psi = left.iter().zip(&right).map(|(l, r)| scale * (l + r)).collect();
        let psi_x = left
            .iter()
            .zip(&right)
            .map(|(l, r)| scale * (l2 * r - l1 * l))
            .collect();
        Ok((psi, psi_x))
    }

    /// `Ψ_xx = λΨ − τcΨ_x − μu` pointwise.
    pub fn second_derivative(&self, p: &SystemParams, psi: &[f64], psi_x: &[f64], u: &[f64]) -> Vec<f64> {
        let tc = p.tau * self.rates.c;
        psi.iter()
            .zip(psi_x)
            .zip(u)
            .map(|((s, sx), v)| p.lambda * s - tc * sx - p.mu * v)
            .collect()
    }
}

fn check_finite(u: &GridFunction) -> Result<()> {
    match u.values().iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFinite { node }),
        None => Ok(()),
    }
}

pub fn psi(u: &GridFunction, tails: &TailModel, p: &SystemParams, c: f64) -> Result<GridFunction> {
    Ok(psi_field(u, tails, p, c)?.psi)
}

pub fn psi_x(u: &GridFunction, tails: &TailModel, p: &SystemParams, c: f64) -> Result<GridFunction> {
    Ok(psi_field(u, tails, p, c)?.psi_x)
}

pub fn psi_field(u: &GridFunction, tails: &TailModel, p: &SystemParams, c: f64) -> Result<PsiField> {
    check_finite(u)?;
    let kernel = ExpKernel::new(p, c, u.dx())?;
    let (psi, psi_x) = kernel.psi_and_gradient(u.values(), tails)?;
    let psi_xx = kernel.second_derivative(p, &psi, &psi_x, u.values());
    Ok(PsiField {
        psi: u.with_values(psi)?,
        psi_x: u.with_values(psi_x)?,
        psi_xx: u.with_values(psi_xx)?,
    })
}

pub fn psi_xx_from_identity(
    psi: &GridFunction,
    psi_x: &GridFunction,
    u: &GridFunction,
    p: &SystemParams,
    c: f64,
) -> Result<GridFunction> {
    if !psi.same_grid(psi_x) {
        return Err(Error::GridMismatch("psi", "psi_x"));
    }
    if !psi.same_grid(u) {
        return Err(Error::GridMismatch("psi", "u"));
    }
    let tc = p.tau * c;
    let values = psi
        .values()
        .iter()
        .zip(psi_x.values())
        .zip(u.values())
        .map(|((s, sx), v)| p.lambda * s - tc * sx - p.mu * v)
        .collect();
    psi.with_values(values)
}

/// Outcome of [`super_solution_functional`].
#[derive(Clone, Debug)]
pub struct SuperSolutionReport {
    /// `χκΨ_x − χΨ_xx` at every node.
    pub functional: GridFunction,
    /// `χμ(coefficient + 1)·M·e^{−κx}`.
    pub bound: GridFunction,
    /// `B((τc+κ)λ2 − λ)_+ / (λ2 + κ)`.
    pub coefficient: f64,
    /// `max_i (functional_i − bound_i)`.
    pub max_excess: f64,
    /// Node attaining `max_excess`.
    pub worst_node: usize,
    /// Whether `functional <= bound` holds at every node up to the
    /// second-order quadrature allowance of the right-hand integral.
    pub certified: bool,
}

/// Evaluates `χκΨ_x − χΨ_xx` for `0 <= u <= M e^{−κx}` and certifies it
/// against `χμ(B((τc+κ)λ2−λ)_+/(λ2+κ) + 1)·M·e^{−κx}`.
pub fn super_solution_functional(
    u: &GridFunction,
    tails: &TailModel,
    p: &SystemParams,
    c: f64,
    kappa: f64,
    m: f64,
) -> Result<SuperSolutionReport> {
    check_finite(u)?;
    if !(kappa >= 0.0 && m > 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa/M",
            value: if kappa >= 0.0 { m } else { kappa },
            reason: "need kappa >= 0 and M > 0",
        });
    }
    let envelope = |x: f64| m * (-kappa * x).exp();
    let slack = |bound: f64| bound * (1.0 + 1e-12) + 1e-300;
    let n = u.len();
    for (i, (x, &v)) in u.xs().zip(u.values()).enumerate() {
        if v < 0.0 || v > slack(envelope(x)) {
            return Err(Error::Precondition {
                node: i,
                x,
                value: v,
                bound: envelope(x),
            });
        }
    }
    // The extensions must respect the same bound off the grid.
    let (x_left, x_right) = (u.x0(), u.x_max());
    match tails.left {
        Tail::Constant(v) if v < 0.0 || v > slack(envelope(x_left)) => {
            return Err(Error::Precondition { node: 0, x: x_left, value: v, bound: envelope(x_left) })
        }
        Tail::Exponential { rate } if rate < -kappa => {
            return Err(Error::Precondition { node: 0, x: x_left, value: rate, bound: -kappa })
        }
        _ => {}
    }
    match tails.right {
        Tail::Constant(v) if v < 0.0 || (v > 0.0 && kappa > 0.0) || v > m => {
            return Err(Error::Precondition { node: n - 1, x: x_right, value: v, bound: 0.0 })
        }
        Tail::Exponential { rate } if rate < kappa => {
            return Err(Error::Precondition { node: n - 1, x: x_right, value: rate, bound: kappa })
        }
        _ => {}
    }

    let field = psi_field(u, tails, p, c)?;
    let rates = DecayRates::for_frame(p, c);
    let coefficient = rates.amplitude * ((p.tau * c + kappa) * rates.lambda2 - p.lambda).max(0.0)
        / (rates.lambda2 + kappa);
    let chi_mu = p.chi * p.mu;
    // linear interpolation overestimates the convex majorant by <= (κh)²/8
    let quad = (kappa * u.dx()).powi(2) / 8.0;

    let functional: Vec<f64> = field
        .psi_x
        .values()
        .iter()
        .zip(field.psi_xx.values())
        .map(|(sx, sxx)| p.chi * kappa * sx - p.chi * sxx)
        .collect();
    let bound: Vec<f64> = u
        .xs()
        .map(|x| chi_mu * (coefficient + 1.0) * envelope(x))
        .collect();

    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_node = 0;
    let mut certified = true;
    for (i, x) in u.xs().enumerate() {
        let excess = functional[i] - bound[i];
        if excess > max_excess {
            max_excess = excess;
            worst_node = i;
        }
        let allowance = chi_mu * coefficient * envelope(x) * quad + 1e-12 * bound[i].abs() + 1e-15;
        if excess > allowance {
            certified = false;
        }
    }

    Ok(SuperSolutionReport {
        functional: u.with_values(functional)?,
        bound: u.with_values(bound)?,
        coefficient,
        max_excess,
        worst_node,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(tau: f64) -> SystemParams {
        SystemParams::new(0.3, 1.0, 1.0, 1.0, 1.0, tau).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn weight_series_matches_closed_form() {
        for z in [1e-2, 2e-2] {
            let (_, closed) = exp_weights(z);
            let series: f64 = (0..12)
                .map(|k| {
                    let fact: f64 = (1..=k + 2).map(|j| j as f64).product();
                    (-z).powi(k as i32) * (k + 1) as f64 / fact
                })
                .sum();
            assert!(rel(closed, series) < 1e-12);
        }
        let (p1, p2) = exp_weights(1e-9);
        assert!((p1 - 1.0).abs() < 1e-8 && (p2 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn constant_density_gives_constant_field() {
        let p = SystemParams::new(0.3, 2.0, 1.5, 1.0, 1.0, 1.0).unwrap();
        let m = 0.7;
        let u = GridFunction::constant(-10.0, 10.0, 401, m).unwrap();
        let tails = TailModel { left: Tail::Constant(m), right: Tail::Constant(m) };
        let f = psi_field(&u, &tails, &p, 2.5).unwrap();
        let expected = p.mu * m / p.lambda;
        for i in 0..u.len() {
            assert!(rel(f.psi.values()[i], expected) < 1e-12);
            assert!(f.psi_x.values()[i].abs() < 1e-12);
            assert!(f.psi_xx.values()[i].abs() < 1e-12);
        }
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let u = GridFunction::constant(-5.0, 5.0, 101, 0.0).unwrap();
        let f = psi(&u, &TailModel::zero(), &params(1.0), 2.0).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let u = GridFunction::constant(-5.0, 5.0, 11, 1.0).unwrap();
        // λ1·dx = 101 · 1 for λ = 10⁴, τ = 0
        let p = SystemParams::new(0.3, 1.0, 1e4, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            psi(&u, &TailModel::zero(), &p, 1.0),
            Err(Error::QuadratureUnderflow(_))
        ));
        let tails = TailModel { left: Tail::Exponential { rate: -5.0 }, right: Tail::Constant(0.0) };
        assert!(matches!(
            psi(&u, &tails, &params(0.0), 1.0),
            Err(Error::DivergentTail { .. })
        ));
    }

    #[test]
    fn identity_second_derivative_checks_grids() {
        let u = GridFunction::constant(0.0, 1.0, 11, 1.0).unwrap();
        let v = GridFunction::constant(0.0, 2.0, 11, 1.0).unwrap();
        assert!(psi_xx_from_identity(&u, &v, &u, &params(0.0), 1.0).is_err());
    }

    #[test]
    fn super_solution_certificate_with_vanishing_coefficient() {
        // λ2 = 1 > κ = 0.5 so the coefficient vanishes
        let p = SystemParams::new(0.3, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let kappa = 0.5;
        let u = GridFunction::from_fn(-10.0, 30.0, 2001, |x| (-kappa * x).exp()).unwrap();
        let tails = TailModel {
            left: Tail::Exponential { rate: -kappa },
            right: Tail::Exponential { rate: kappa },
        };
        let rep = super_solution_functional(&u, &tails, &p, 2.5, kappa, 1.0).unwrap();
        assert_eq!(rep.coefficient, 0.0);
        assert!(rep.certified);
        assert!(rep.max_excess <= 1e-12, "{}", rep.max_excess);
    }

    #[test]
    fn super_solution_kappa_zero_constant() {
        let p = params(1.0);
        let m = 1.3;
        let u = GridFunction::constant(-10.0, 10.0, 201, m).unwrap();
        let tails = TailModel { left: Tail::Constant(m), right: Tail::Constant(m) };
        let rep = super_solution_functional(&u, &tails, &p, 2.0, 0.0, m).unwrap();
        assert_eq!(rep.coefficient, 0.0);
        for v in rep.bound.values() {
            assert!((v - p.chi * p.mu * m).abs() < 1e-14);
        }
        assert!(rep.certified);
    }

    #[test]
    fn super_solution_precondition_names_node() {
        let p = params(1.0);
        let u = GridFunction::from_fn(0.0, 10.0, 11, |x| if x == 5.0 { 2.0 } else { 0.0 }).unwrap();
        match super_solution_functional(&u, &TailModel::zero(), &p, 2.0, 0.5, 1.0) {
            Err(Error::Precondition { node, .. }) => assert_eq!(node, 5),
            other => panic!("{other:?}"),
        }
    }
}
