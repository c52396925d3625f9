//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

/// Kernel rates from the two characteristic quadratics, solved naively.
pub fn rates(lambda: f64, tau: f64, c: f64) -> (f64, f64, f64) {
    let t = tau * c;
    let disc = (t * t + 4.0 * lambda).sqrt();
    let l1 = 0.5 * (t + disc);
    // smaller positive root of m² + τc·m − λ, via Vieta
    let l2 = lambda / l1;
    (l1, l2, 1.0 / disc)
}

/// First zero of `κ ↦ λ1(a/κ + κ) − κ` on `(0, √a]`, or `√a` if none.
pub fn kappa_star_bisection(a: f64, lambda: f64, tau: f64) -> f64 {
    let f = |k: f64| rates(lambda, tau, a / k + k).0 - k;
    let root = a.sqrt();
    if f(root) > 0.0 {
        return root;
    }
    // f is positive near 0 and changes sign once on (0, √a]
    let (mut lo, mut hi) = (1e-9 * root, root);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn b_star_tau0(a: f64, lambda: f64) -> f64 {
    let (ra, rl) = (a.sqrt(), lambda.sqrt());
    1.0 + (ra - rl).max(0.0) / (2.0 * (ra + rl))
}

/// `S(D)` assembled from the oracle rates.
pub fn scalar_inequality(
    (chi, mu, lambda, a, b, tau): (f64, f64, f64, f64, f64, f64),
    kappa: f64,
    eta: f64,
    d: f64,
) -> f64 {
    let c = (a + kappa * kappa) / kappa;
    let (l1, l2, bb) = rates(lambda, tau, c);
    let kt = kappa + eta;
    let big_a = kt * c - kt * kt - a;
    let left = chi * mu * bb * (kappa + tau * c + lambda) * l1 / (l1 - kappa);
    let right = chi * mu * bb * (kt * d + (tau * c - lambda).max(0.0)) * l2 / (l2 + kappa);
    let xunder = d.ln() / eta;
    d * big_a - (left + right + (b - chi * mu)) * (-(2.0 * kappa - kt) * xunder).exp()
}

/// Explicit Euler for `u_t = u_xx + c u_x + (a − bu)u`; no-flux left,
/// `u = 0` right, centred advection.
pub fn fisher_kpp_explicit(u0: &[f64], h: f64, dt: f64, steps: usize, c: f64, a: f64, b: f64) -> Vec<f64> {
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut next = vec![0.0; n];
    for _ in 0..steps {
        for i in 0..n - 1 {
            let left = if i == 0 { u[1] } else { u[i - 1] };
            let right = u[i + 1];
            let uxx = (right - 2.0 * u[i] + left) / (h * h);
            let ux = (right - left) / (2.0 * h);
            next[i] = u[i] + dt * (uxx + c * ux + (a - b * u[i]) * u[i]);
        }
        next[n - 1] = 0.0;
        std::mem::swap(&mut u, &mut next);
    }
    u
}

/// Fisher-KPP operator with the same stencils as above.
pub fn fisher_kpp_operator(u: &[f64], h: f64, c: f64, a: f64, b: f64) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        let ux = (u[i + 1] - u[i - 1]) / (2.0 * h);
        out[i] = uxx + c * ux + (a - b * u[i]) * u[i];
    }
    out
}

/// KPP wave `U'' + cU' + U(a − bU) = 0` by RK4 along the unstable manifold
/// of `a/b`. Returns `(x, U)` samples, shifted so that `U(0) = a/(2b)`.
pub fn kpp_wave_shooting(c: f64, a: f64, b: f64) -> Vec<(f64, f64)> {
    let r = 0.5 * (-c + (c * c + 4.0 * a).sqrt());
    let delta = 1e-9;
    let mut y = [a / b - delta, -delta * r];
    let h = 1e-3;
    let rhs = |y: [f64; 2]| [y[1], -c * y[1] - y[0] * (a - b * y[0])];
    let mut x = 0.0;
    let mut out = vec![(x, y[0])];
    while y[0] > 1e-12 && x < 400.0 {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        x += h;
        out.push((x, y[0]));
    }
    let level = 0.5 * a / b;
    let k = out.iter().position(|p| p.1 < level).expect("wave crosses a/(2b)");
    let (p, q) = (out[k - 1], out[k]);
    let x0 = p.0 + (p.1 - level) / (p.1 - q.1) * (q.0 - p.0);
    out.into_iter().map(|(x, u)| (x - x0, u)).collect()
}

/// Linear interpolation in a table sorted by `x`.
pub fn table_lookup(table: &[(f64, f64)], x: f64) -> Option<f64> {
    if x < table[0].0 || x > table[table.len() - 1].0 {
        return None;
    }
    let k = table.partition_point(|p| p.0 <= x).clamp(1, table.len() - 1);
    let (p, q) = (table[k - 1], table[k]);
    Some(p.1 + (x - p.0) / (q.0 - p.0) * (q.1 - p.1))
}

/// `Ψ(x0)` for a Gaussian density `e^{−x²}` from the parabolic
/// representation
///
/// ```text
/// Ψ(x) = μ/τ ∫₀^∞ e^{−λs/τ} (G_{s/τ} * u)(x + cs) ds
/// ```
///
/// where the heat semigroup acting on a Gaussian is itself Gaussian, and
/// the time integral is done by composite Simpson in `s = t²`.
pub fn heat_semigroup_psi_gaussian(x0: f64, mu: f64, lambda: f64, tau: f64, c: f64) -> f64 {
    assert!(tau > 0.0);
    // (G_r * e^{−y²})(z) = e^{−z²/(1+4r)} / √(1+4r)
    let integrand = |t: f64| {
        let s = t * t;
        let r = s / tau;
        let z = x0 + c * s;
        let heat = (-z * z / (1.0 + 4.0 * r)).exp() / (1.0 + 4.0 * r).sqrt();
        (-lambda * s / tau).exp() * heat * 2.0 * t
    };
    let t_max = (60.0 * tau / lambda).sqrt();
    let m = 20000;
    let h = t_max / m as f64;
    let mut sum = integrand(0.0) + integrand(t_max);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(k as f64 * h);
    }
    mu / tau * sum * h / 3.0
}
