//! Hermite functions, Laguerre polynomials, Mehler-type identities and the
//! hyperbolic ratios that appear in every kernel integrand.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Below this `|τ|` the hyperbolic ratios switch to Taylor expansions.
const TAYLOR_SWITCH: f64 = 1e-3;

/// Laguerre degrees above this are evaluated in log-magnitude form.
const LOG_LAGUERRE_DEGREE: usize = 150;

/// Cramér's constant: `|H_m(x)| ≤ CRAMER · π^{-1/4}` for every `m` and `x`.
pub const CRAMER: f64 = 1.086_435;

/// Limits for truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBudget {
    pub max_terms: usize,
    pub tail_tolerance: f64,
}

impl Default for TruncationBudget {
    fn default() -> Self {
        Self {
            max_terms: 512,
            tail_tolerance: 1e-12,
        }
    }
}

impl TruncationBudget {
    pub fn new(max_terms: usize, tail_tolerance: f64) -> Result<Self> {
        if max_terms == 0 || !(tail_tolerance > 0.0) {
            return Err(invalid("budget needs max_terms >= 1 and tail_tolerance > 0"));
        }
        Ok(Self {
            max_terms,
            tail_tolerance,
        })
    }
}

/// Result of a truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    /// Bound on the discarded tail.
    pub tail: f64,
}

/// L²-normalised Hermite function `H_m(x)`, via the orthonormal three-term recurrence.
pub fn hermite_fn(m: usize, x: f64) -> f64 {
    *hermite_fns(m, x).last().expect("non-empty")
}

/// `H_0(x), …, H_{m_max}(x)`.
pub fn hermite_fns(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    hermite_recurrence(&mut out, m_max, x);
    out
}

fn hermite_recurrence(out: &mut Vec<f64>, m_max: usize, x: f64) {
    for m in 0..m_max {
        let mf = m as f64;
        let prev = if m == 0 { 0.0 } else { out[m - 1] };
        let next = (2.0 / (mf + 1.0)).sqrt() * x * out[m] - (mf / (mf + 1.0)).sqrt() * prev;
        out.push(next);
    }
}

/// `|λ|^{1/4} H_m(|λ|^{1/2} x)`.
pub fn hermite_fn_scaled(m: usize, lambda: f64, x: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(invalid("lambda must be nonzero and finite"));
    }
    let a = lambda.abs();
    Ok(a.powf(0.25) * hermite_fn(m, a.sqrt() * x))
}

/// Normalised Hermite polynomials `P_m = π^{1/4} H_m e^{x²/2}`, `m = 0..=m_max`.
pub fn hermite_polys(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(1.0);
    hermite_recurrence(&mut out, m_max, x);
    out
}

/// Generalized Laguerre polynomial `L_ℓ^{(α)}(x)`.
pub fn laguerre(ell: usize, alpha: usize, x: f64) -> f64 {
    if ell > LOG_LAGUERRE_DEGREE {
        let lm = laguerre_log(ell, alpha, x);
        return lm.sign * lm.ln_abs.exp();
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..ell {
        let next = laguerre_step(k, alpha as f64, x, cur, prev);
        prev = cur;
        cur = next;
    }
    cur
}

#[inline]
fn laguerre_step(k: usize, alpha: f64, x: f64, cur: f64, prev: f64) -> f64 {
    let kf = k as f64;
    ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0)
}

/// A real number stored as `sign · exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMagnitude {
    pub ln_abs: f64,
    pub sign: f64,
}

/// `L_ℓ^{(α)}(x)` in log-magnitude form; the recurrence is rescaled as it
/// runs, so arbitrarily large degrees neither overflow nor underflow.
pub fn laguerre_log(ell: usize, alpha: usize, x: f64) -> LogMagnitude {
    let (mut prev, mut cur, mut scale) = (0.0f64, 1.0f64, 0.0f64);
    for k in 0..ell {
        let next = laguerre_step(k, alpha as f64, x, cur, prev);
        prev = cur;
        cur = next;
        let big = cur.abs().max(prev.abs());
        if big > 1e150 || (big < 1e-150 && big > 0.0) {
            prev /= big;
            cur /= big;
            scale += big.ln();
        }
    }
    if cur == 0.0 {
        return LogMagnitude {
            ln_abs: f64::NEG_INFINITY,
            sign: 0.0,
        };
    }
    LogMagnitude {
        ln_abs: cur.abs().ln() + scale,
        sign: cur.signum(),
    }
}

/// `L_0^{(α)}(x), …, L_{ℓ_max}^{(α)}(x)`.
pub fn laguerre_all(ell_max: usize, alpha: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(ell_max + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    out.push(cur);
    for k in 0..ell_max {
        let next = laguerre_step(k, alpha as f64, x, cur, prev);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `e^{-x/2} L_k^{(α)}(x)` for `k = 0..=ℓ_max`; bounded for `x ≥ 0` at any degree.
pub fn laguerre_damped_all(ell_max: usize, alpha: usize, x: f64) -> Vec<f64> {
    // The recurrence is linear, so seeding it with the damping factor keeps
    // every intermediate bounded even where L_k alone would overflow.
    let mut out = Vec::with_capacity(ell_max + 1);
    let (mut prev, mut cur) = (0.0, (-0.5 * x).exp());
    out.push(cur);
    for k in 0..ell_max {
        let next = laguerre_step(k, alpha as f64, x, cur, prev);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `L_0^{(α)}(x), …, L_{ℓ_max}^{(α)}(x)` at complex `x`.
pub fn laguerre_all_complex(ell_max: usize, alpha: usize, x: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(ell_max + 1);
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    out.push(cur);
    let a = alpha as f64;
    for k in 0..ell_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_k r^k L_k^{(α)}(x) = e^{-rx/(1-r)} / (1-r)^{α+1}`.
pub fn laguerre_generating_closed(r: f64, x: f64, alpha: usize) -> Result<f64> {
    check_unit_interval(r)?;
    Ok((-r * x / (1.0 - r)).exp() / (1.0 - r).powi(alpha as i32 + 1))
}

/// Complex-argument form of [`laguerre_generating_closed`].
pub fn laguerre_generating_closed_complex(r: f64, x: Complex64, alpha: usize) -> Result<Complex64> {
    check_unit_interval(r)?;
    Ok((-r * x / (1.0 - r)).exp() / (1.0 - r).powi(alpha as i32 + 1))
}

fn check_unit_interval(r: f64) -> Result<()> {
    if !(r.abs() < 1.0) {
        return Err(invalid(format!("need |r| < 1, got {r}")));
    }
    Ok(())
}

/// Mehler kernel `Σ_m P_m(x) P_m(x̃) r^m`.
pub fn mehler_closed(x: f64, xt: f64, r: f64) -> Result<f64> {
    check_unit_interval(r)?;
    let q = 1.0 - r * r;
    Ok(q.powf(-0.5) * ((2.0 * x * xt * r - (x * x + xt * xt) * r * r) / q).exp())
}

/// Truncated Mehler sum, stopped once Cramér's bound on the tail drops below
/// the budget tolerance.
pub fn mehler_sum(x: f64, xt: f64, r: f64, budget: TruncationBudget) -> Result<SeriesSum> {
    check_unit_interval(r)?;
    // |P_m(x)| ≤ CRAMER e^{x²/2}.
    let amp = CRAMER * CRAMER * (0.5 * (x * x + xt * xt)).exp();
    let ratio = r.abs();
    let terms_for = |m: usize| amp * ratio.powi(m as i32) / (1.0 - ratio);
    let n = stop_index(terms_for, budget)?;
    let px = hermite_polys(n, x);
    let pt = hermite_polys(n, xt);
    let mut value = 0.0;
    let mut rm = 1.0;
    for m in 0..n {
        value += px[m] * pt[m] * rm;
        rm *= r;
    }
    Ok(SeriesSum {
        value,
        terms: n,
        tail: terms_for(n),
    })
}

/// First `n` for which `tail(n) < tolerance`, or a budget error.
fn stop_index(tail: impl Fn(usize) -> f64, budget: TruncationBudget) -> Result<usize> {
    for n in 1..=budget.max_terms {
        if tail(n) < budget.tail_tolerance {
            return Ok(n);
        }
    }
    Err(Error::BudgetExhausted {
        terms: budget.max_terms,
        tail: tail(budget.max_terms),
    })
}

/// Closed form of `Σ_m e^{-2mtλ} H_{m,λ}(z-y) H_{m,λ}(z+y)` for `λ, t > 0`.
pub fn mehler_heat_closed(lambda: f64, t: f64, y: f64, z: f64) -> Result<f64> {
    if !(lambda > 0.0 && t > 0.0) {
        return Err(invalid("lambda and t must be positive"));
    }
    let tl = t * lambda;
    let th = tl.tanh();
    Ok(PI.powf(-0.5)
        * (lambda / (-(-4.0 * tl).exp_m1())).sqrt()
        * (-lambda * z * z * th - lambda * y * y / th).exp())
}

/// Truncated Hermite heat sum matching [`mehler_heat_closed`].
pub fn mehler_heat_sum(lambda: f64, t: f64, y: f64, z: f64, budget: TruncationBudget) -> Result<SeriesSum> {
    if !(lambda > 0.0 && t > 0.0) {
        return Err(invalid("lambda and t must be positive"));
    }
    let q = (-2.0 * t * lambda).exp();
    let amp = CRAMER * CRAMER * lambda.sqrt() / PI.sqrt();
    let tail = |m: usize| amp * q.powi(m as i32) / (1.0 - q);
    let n = stop_index(tail, budget)?;
    let a = lambda.sqrt();
    let hm = hermite_fns(n, a * (z - y));
    let hp = hermite_fns(n, a * (z + y));
    let mut value = 0.0;
    let mut qm = 1.0;
    for m in 0..n {
        value += qm * hm[m] * hp[m];
        qm *= q;
    }
    Ok(SeriesSum {
        value: value * a,
        terms: n,
        tail: tail(n),
    })
}

/// `τ / tanh(2τ)`, equal to `1/2` at `τ = 0`.
pub fn tau_over_tanh2(tau: f64) -> f64 {
    let a = tau.abs();
    if a < TAYLOR_SWITCH {
        let t2 = a * a;
        return 0.5 + t2 * (2.0 / 3.0 - t2 * (8.0 / 45.0));
    }
    a / (2.0 * a).tanh()
}

/// `(2τ / sinh 2τ)^d`, equal to 1 at `τ = 0`, finite and underflow-safe for large `|τ|`.
pub fn sinh_ratio_pow(tau: f64, d: usize) -> f64 {
    sinh_ratio(tau).powi(d as i32)
}

fn sinh_ratio(tau: f64) -> f64 {
    let a = tau.abs();
    if a < TAYLOR_SWITCH {
        let u = 4.0 * a * a;
        return 1.0 - u / 6.0 + 7.0 * u * u / 360.0;
    }
    // 2a/sinh(2a) = 4a e^{-2a} / (1 - e^{-4a}); no overflow for any a.
    4.0 * a * (-2.0 * a).exp() / (-(-4.0 * a).exp_m1())
}
