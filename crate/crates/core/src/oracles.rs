//! Closed-form reference values.
//!
//! These are independent of the branch and density-matrix machinery and are
//! used both as test oracles and as fast evaluators in sweeps. Angles in
//! radians, everything else in scaled units unless stated.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054571817e-34;

fn t_of(tau: f64) -> f64 {
    tau - tau.sin()
}

/// Full spin-mechanical QFI of one spin prepared at polar angle `theta`.
pub fn qfi_single_full(k: f64, tau: f64, theta: f64, xi: f64) -> f64 {
    let c2 = xi.cos().powi(2);
    let t = t_of(tau);
    c2 * (k * k * (2.0 * tau * tau + 1.0)
        + k * k * (-2.0 * t * t * (2.0 * theta).cos() - 4.0 * tau * tau.sin() - (2.0 * tau).cos())
        - 8.0 * tau.cos()
        + 8.0)
}

/// Full QFI of two spins with couplings `k1`, `k2` prepared in
/// `r1|01⟩ + r2|00⟩ + r3|10⟩ + r4|11⟩` (real amplitudes, `r1` fixed by normalization).
///
/// `y` below is minus the variance of the branch eigenvalue `z`.
pub fn qfi_two(k1: f64, k2: f64, r2: f64, r3: f64, r4: f64, xi: f64, tau: f64) -> f64 {
    let a = r3 * r3 + r4 * r4;
    let b = r2 * r2 + r3 * r3;
    let y = k1 * k1 * (a - 1.0) * a - 2.0 * k1 * k2 * r4 * r4 * b - 2.0 * k1 * k2 * r3 * r3 * (b - 1.0)
        + k2 * k2 * (b - 1.0) * b;
    -8.0 * xi.cos().powi(2)
        * (2.0 * tau * tau * y + 2.0 * tau.sin() * (tau.sin() - 2.0 * tau) * y + tau.cos() - 1.0)
}

/// Full spin-mechanical QFI of an `N`-spin GHZ probe.
pub fn qfi_ghz(k: f64, n: usize, tau: f64, xi: f64) -> f64 {
    let kn2 = (k * n as f64).powi(2);
    2.0 * xi.cos().powi(2)
        * (kn2 * (2.0 * tau * tau + 1.0) - kn2 * (4.0 * tau * tau.sin() + (2.0 * tau).cos()) - 4.0 * tau.cos() + 4.0)
}

/// QFI of the spin subsystem alone for a GHZ probe.
pub fn qfi_spin_ghz(k: f64, n: usize, tau: f64) -> f64 {
    let kn2 = (k * n as f64).powi(2);
    4.0 * (2.0 * kn2 * (tau.cos() - 1.0)).exp() * kn2 * t_of(tau).powi(2)
}

/// Linear entropy of either subsystem for a GHZ probe.
pub fn linear_entropy_ghz(k: f64, n: usize, tau: f64) -> f64 {
    let kn2 = (k * n as f64).powi(2);
    0.5 * (1.0 - (2.0 * kn2 * (tau.cos() - 1.0)).exp())
}

/// Spin-POVM CFI for a GHZ probe with real initial field amplitude `alpha`,
/// as the ratio of the two negative-signed closed-form pieces.
///
/// Returns 0 when the outcome probability is pinned to 0 or 1.
pub fn cfi_spin_analytic(k: f64, n: usize, tau: f64, alpha: f64, g: f64, xi: f64, theta: f64, phi: f64) -> f64 {
    let kn = k * n as f64;
    let c = xi.cos();
    let r2 = (2.0 * kn * kn * (tau.cos() - 1.0)).exp();
    let arg = phi + 2.0 * g * kn * tau * c - 2.0 * kn * (alpha + g * c) * tau.sin();
    let s2 = theta.sin().powi(2);
    let num = -4.0 * r2 * kn * kn * c * c * t_of(tau).powi(2) * s2 * arg.sin().powi(2);
    let den = arg.cos().powi(2) * r2 * s2 - 1.0;
    if den.abs() < 1e-12 {
        return 0.0;
    }
    num / den
}

/// Outcome probability of the spin POVM element for a GHZ probe (real `alpha`).
pub fn spin_probability_analytic(k: f64, n: usize, tau: f64, alpha: f64, g: f64, xi: f64, theta: f64, phi: f64) -> f64 {
    let kn = k * n as f64;
    let c = xi.cos();
    let r = (kn * kn * (tau.cos() - 1.0)).exp();
    let arg = phi + 2.0 * g * kn * tau * c - 2.0 * kn * (alpha + g * c) * tau.sin();
    0.5 * (1.0 + r * theta.sin() * arg.cos())
}

const HYP_MAX_TERMS: usize = 100_000;
const HYP_TAIL: f64 = 1e-12;

/// Gauss hypergeometric function `₂F₁(a, b; c; −1)`.
///
/// Terminating series are summed exactly. Otherwise the partial sums (whose
/// terms alternate in sign eventually) are accelerated by repeated averaging.
pub fn hyp2f1_at_minus_one(a: f64, b: f64, c: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::InvalidInput(format!("c = {c} is a non-positive integer")));
    }
    let terminates = |x: f64| x <= 0.0 && x.fract() == 0.0;
    let mut partial = Vec::with_capacity(256);
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut previous: Option<f64> = None;
    let mut checkpoint = 64usize;
    loop {
        sum += term;
        partial.push(sum);
        let nf = n as f64;
        term *= -(a + nf) * (b + nf) / ((c + nf) * (nf + 1.0));
        n += 1;
        if term == 0.0 {
            if terminates(a) || terminates(b) {
                return Ok(sum);
            }
            // underflow of a convergent tail
            return Ok(sum);
        }
        if n == checkpoint {
            let estimate = euler_average(&partial);
            if let Some(prev) = previous {
                if (estimate - prev).abs() <= HYP_TAIL * estimate.abs().max(1.0) * 0.1 {
                    return Ok(estimate);
                }
            }
            previous = Some(estimate);
            checkpoint *= 2;
        }
        if n > HYP_MAX_TERMS {
            return Err(Error::NonConvergence { terms: n });
        }
    }
}

/// Repeated pairwise averaging of the last partial sums.
fn euler_average(partial: &[f64]) -> f64 {
    let depth = 40.min(partial.len() - 1);
    let mut row: Vec<f64> = partial[partial.len() - 1 - depth..].to_vec();
    while row.len() > 1 {
        row = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    row[0]
}

fn css_bracket(n: usize) -> Result<f64> {
    let nf = n as f64;
    let f = hyp2f1_at_minus_one(1.0, 2.0 - nf / 2.0, (6.0 + nf) / 2.0)?;
    let lg = ln_gamma((1.0 + nf) / 2.0);
    let first = (2.0 + 3.0 * nf) * (lg - ln_gamma(2.0 + nf / 2.0)).exp();
    let second = (nf - 2.0) * nf * f * (lg - ln_gamma((6.0 + nf) / 2.0)).exp();
    Ok(first + second)
}

/// Full spin-mechanical QFI of an `N`-spin coherent spin state.
pub fn qfi_css(k: f64, n: usize, tau: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let pref = 2.0 * k * k * n as f64 / std::f64::consts::PI.sqrt();
    Ok(8.0 - 8.0 * tau.cos() + pref * t_of(tau).powi(2) * css_bracket(n)?)
}

/// [`qfi_css`] at `τ = 2π`.
pub fn qfi_css_2pi(k: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    Ok(8.0 * std::f64::consts::PI.powf(1.5) * k * k * n as f64 * css_bracket(n)?)
}

/// `∂g/∂ḡ` converting scaled gravity to m/s².
pub fn scaled_gravity_derivative(omega: f64, mass: f64, xi: f64) -> f64 {
    (mass / (2.0 * HBAR * omega.powi(3))).sqrt() * xi.cos()
}

/// Cramér-Rao sensitivity `Δḡ` in m/s² for a GHZ probe after `nu` repetitions.
pub fn sensitivity(omega: f64, mass: f64, n: usize, nu: f64, k: f64, tau: f64, xi: f64) -> Result<f64> {
    if !(omega > 0.0) || !(mass > 0.0) || !(nu >= 1.0) || n == 0 {
        return Err(Error::InvalidInput(format!(
            "sensitivity needs ω > 0, M > 0, ν ≥ 1, N ≥ 1 (got ω={omega}, M={mass}, ν={nu}, N={n})"
        )));
    }
    let fisher = nu * scaled_gravity_derivative(omega, mass, xi).powi(2) * qfi_ghz(k, n, tau, 0.0);
    if !(fisher > 0.0) {
        return Err(Error::InvalidInput("probe carries no information about g".into()));
    }
    Ok(1.0 / fisher.sqrt())
}

/// `√(2ħω³/M) / (4π k N √ν)`, the `τ = 2π`, `ξ = 0` specialization of [`sensitivity`].
pub fn sensitivity_closed_form(omega: f64, mass: f64, n: usize, nu: f64, k: f64) -> f64 {
    (2.0 * HBAR * omega.powi(3) / mass).sqrt() / (4.0 * std::f64::consts::PI * k * n as f64 * nu.sqrt())
}
