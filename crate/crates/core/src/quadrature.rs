//! One-dimensional adaptive integration, truncated infinite integrals with a
//! known exponential envelope, tensor grids, and Lᵖ norms over Korányi balls.

use crate::error::{invalid, Error, Result};
use crate::group::GroupPoint;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Value of an integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Absolute tolerance on the integral.
    pub tol: f64,
    pub max_intervals: usize,
    /// Upper bound on subinterval width, for oscillatory integrands.
    pub max_width: Option<f64>,
}

impl AdaptiveOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_intervals: 20_000,
            max_width: None,
        }
    }

    pub fn max_width(mut self, w: f64) -> Self {
        self.max_width = (w.is_finite() && w > 0.0).then_some(w);
        self
    }
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Panel, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let value = k * h;
    let error = ((k - g) * h).norm();
    (Panel { a, b, value, error }, abs * h.abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    integrate_adaptive_with(f, a, b, AdaptiveOptions::new(tol))
}

pub fn integrate_adaptive_with<F>(f: F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    if !(a < b) || !(opts.tol > 0.0) {
        return Err(invalid(format!("need a < b and tol > 0 (a={a}, b={b}, tol={})", opts.tol)));
    }
    let pieces = match opts.max_width {
        Some(w) => (((b - a) / w).ceil() as usize).max(1),
        None => 1,
    };
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    let (mut value, mut error, mut abs) = (ZERO, 0.0, 0.0);
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = if i + 1 == pieces { b } else { a + (b - a) * (i + 1) as f64 / pieces as f64 };
        let (p, pabs) = kronrod(&f, lo, hi);
        value += p.value;
        error += p.error;
        abs += pabs;
        heap.push(p);
    }
    let floor = |abs: f64| 50.0 * f64::EPSILON * abs;
    while error > opts.tol.max(floor(abs)) {
        if heap.len() >= opts.max_intervals.max(pieces) {
            return Err(Error::NonConvergence {
                re: value.re,
                im: value.im,
                error,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (l, labs) = kronrod(&f, worst.a, mid);
        let (r, rabs) = kronrod(&f, mid, worst.b);
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        abs += labs + rabs;
        heap.push(l);
        heap.push(r);
    }
    // Recompute from the panels to shed accumulated rounding in the running sums.
    let (value, error) = heap
        .iter()
        .fold((ZERO, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(Estimate { value, error })
}

/// Bound `|f(τ)| ≤ prefactor · (1 + |τ|)^power · e^{-rate |τ|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub rate: f64,
    pub power: f64,
    pub prefactor: f64,
}

impl Envelope {
    pub fn new(rate: f64, power: f64, prefactor: f64) -> Self {
        Self {
            rate,
            power,
            prefactor,
        }
    }

    pub fn at(&self, tau: f64) -> f64 {
        let a = tau.abs();
        self.prefactor * (1.0 + a).powf(self.power) * (-self.rate * a).exp()
    }

    /// Bound on `∫_T^∞` of the envelope, valid once `rate (1 + T) ≥ 2 power`.
    pub fn tail(&self, t: f64) -> f64 {
        if self.rate * (1.0 + t) < 2.0 * self.power {
            return f64::INFINITY;
        }
        2.0 * self.at(t) / self.rate
    }

    /// Smallest (to within 1%) `T` with `2 · tail(T) < tol`.
    pub fn truncation_point(&self, tol: f64) -> Result<f64> {
        if !(self.rate > 0.0) {
            return Err(Error::Divergent { rate: self.rate });
        }
        let ok = |t: f64| 2.0 * self.tail(t) < tol;
        let mut hi = 1.0;
        while !ok(hi) {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::Divergent { rate: self.rate });
            }
        }
        let mut lo = 0.0;
        while hi - lo > 0.01 * hi {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Integral over the real line truncated where the envelope guarantees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub value: Complex64,
    /// Quadrature error plus the bound on the discarded tails.
    pub error: f64,
    pub truncation_point: f64,
}

/// `∫_R f` for an integrand dominated by `envelope`, truncated symmetrically.
///
/// The interval is split at 0 because most integrands here involve `|τ|`.
pub fn integrate_exponential_tail<F>(
    f: F,
    envelope: Envelope,
    tol: f64,
    max_width: Option<f64>,
) -> Result<TailEstimate>
where
    F: Fn(f64) -> Complex64,
{
    let t = envelope.truncation_point(tol / 4.0)?;
    let mut opts = AdaptiveOptions::new(tol / 4.0);
    if let Some(w) = max_width {
        opts = opts.max_width(w);
    }
    let left = integrate_adaptive_with(&f, -t, 0.0, opts)?;
    let right = integrate_adaptive_with(&f, 0.0, t, opts)?;
    Ok(TailEstimate {
        value: left.value + right.value,
        error: left.error + right.error + 2.0 * envelope.tail(t),
        truncation_point: t,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (x.iter().map(|v| c + h * v).collect(), w.iter().map(|v| h * v).collect())
}

/// `∫ e^{iωλ} g(λ) dλ` over `[nodes[0], nodes[n-1]]` with `g` interpolated
/// linearly between nodes and the oscillation integrated exactly, so the
/// accuracy does not degrade as `ω` grows.
pub fn filon_linear(nodes: &[f64], values: &[Complex64], omega: f64) -> Complex64 {
    let mut acc = ZERO;
    for k in 0..nodes.len().saturating_sub(1) {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let h = b - a;
        let th = omega * h;
        let (w0, w1) = filon_weights(th);
        acc += Complex64::from_polar(h, omega * a) * (w0 * values[k] + w1 * values[k + 1]);
    }
    acc
}

/// `(∫_0^1 (1-u) e^{iθu} du, ∫_0^1 u e^{iθu} du)`.
fn filon_weights(th: f64) -> (Complex64, Complex64) {
    if th.abs() < 0.05 {
        let t2 = th * th;
        // Taylor series to O(θ⁶).
        let whole = Complex64::new(1.0 - t2 / 6.0 + t2 * t2 / 120.0, th / 2.0 - th * t2 / 24.0 + th * t2 * t2 / 720.0);
        let first = Complex64::new(0.5 - t2 / 8.0 + t2 * t2 / 144.0, th / 3.0 - th * t2 / 30.0 + th * t2 * t2 / 840.0);
        return (whole - first, first);
    }
    let e = Complex64::from_polar(1.0, th);
    let i = Complex64::i();
    let whole = (e - 1.0) / (i * th);
    let first = e / (i * th) + (e - 1.0) / (th * th);
    (whole - first, first)
}

/// Extrapolates `values[k] ≈ v(h[k])` to `h = 0` with the interpolating polynomial (Neville).
pub fn extrapolate_to_zero(h: &[f64], values: &[Complex64]) -> Complex64 {
    let mut p: Vec<Complex64> = values.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (p[i + 1] * h[i] - p[i] * h[i + m]) / (h[i] - h[i + m]);
        }
    }
    p[0]
}

/// One axis of a tensor grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower < upper) || points < 2 {
            return Err(invalid(format!("bad axis [{lower}, {upper}] with {points} points")));
        }
        Ok(Self { lower, upper, points })
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.lower + h * i as f64).collect()
    }

    /// Composite Simpson weights; an even point count ends with a 3/8 panel.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let n = self.points;
        let h = self.step();
        let mut w = vec![0.0; n];
        if n == 2 {
            return vec![0.5 * h, 0.5 * h];
        }
        let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
        for k in (0..simpson_end).step_by(2) {
            w[k] += h / 3.0;
            w[k + 1] += 4.0 * h / 3.0;
            w[k + 2] += h / 3.0;
        }
        if n % 2 == 0 {
            let k = n - 4;
            for (j, c) in [3.0, 9.0, 9.0, 3.0].iter().enumerate() {
                w[k + j] += c * h / 8.0;
            }
        }
        w
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.points];
        w[0] *= 0.5;
        w[self.points - 1] *= 0.5;
        w
    }
}

/// Tensor grid over `2d + 1` axes ordered `y, η, s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.len() < 3 || axes.len() % 2 == 0 {
            return Err(invalid("a grid on H^d needs 2d+1 axes"));
        }
        Ok(Self { axes })
    }

    /// Box `[-r, r]^{2d} × [-r², r²]` covering the Korányi ball of radius `r`.
    pub fn koranyi_box(d: usize, radius: f64, points: usize) -> Result<Self> {
        let mut axes = vec![Axis::new(-radius, radius, points)?; 2 * d];
        axes.push(Axis::new(-radius * radius, radius * radius, points)?);
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        (self.axes.len() - 1) / 2
    }

    /// Every node with its tensor weight, built from per-axis weights.
    fn nodes_with<W: Fn(&Axis) -> Vec<f64>>(&self, weights: W) -> Vec<(Vec<f64>, f64)> {
        let per_axis: Vec<(Vec<f64>, Vec<f64>)> =
            self.axes.iter().map(|a| (a.nodes(), weights(a))).collect();
        let total: usize = self.axes.iter().map(|a| a.points).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.axes.len()];
        for _ in 0..total {
            let mut c = Vec::with_capacity(idx.len());
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                c.push(per_axis[k].0[i]);
                w *= per_axis[k].1[i];
            }
            out.push((c, w));
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].points {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    /// Grid keeping every other node; needs an odd point count on every axis.
    pub fn coarsened(&self) -> Option<Self> {
        let axes = self
            .axes
            .iter()
            .map(|a| (a.points % 2 == 1 && a.points >= 5).then(|| Axis { points: a.points / 2 + 1, ..*a }))
            .collect::<Option<Vec<_>>>()?;
        Some(Self { axes })
    }
}

/// Composite Simpson rule of `f` on the tensor grid.
pub fn tensor_integrate<F>(f: F, grid: &GridSpec) -> Result<Complex64>
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    let nodes = grid.nodes_with(Axis::simpson_weights);
    let terms: Vec<Complex64> = nodes
        .par_iter()
        .map(|(c, w)| f(&GroupPoint::from_coords(c).expect("grid coordinates are finite")) * *w)
        .collect();
    Ok(terms.iter().sum())
}

/// Simpson value plus a Richardson estimate from the grid with half the
/// nodes per axis; fails when that estimate exceeds `tol`.
pub fn tensor_integrate_checked<F>(f: F, grid: &GridSpec, tol: f64) -> Result<Estimate>
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    let coarse = grid
        .coarsened()
        .ok_or_else(|| invalid("refinement check needs an odd point count >= 5 on every axis"))?;
    let fine = tensor_integrate(&f, grid)?;
    let rough = tensor_integrate(&f, &coarse)?;
    let error = (fine - rough).norm() / 15.0;
    if error > tol {
        return Err(Error::NonConvergence {
            re: fine.re,
            im: fine.im,
            error,
        });
    }
    Ok(Estimate { value: fine, error })
}

/// `‖f‖_{Lᵖ(B(center, R))}` on a rectangular grid clipped by the Korányi
/// indicator (trapezoid cell weights). `p = ∞` takes the max over nodes in the ball.
pub fn lp_norm_on_ball<F>(f: F, p: f64, center: &GroupPoint, radius: f64, grid: &GridSpec) -> Result<f64>
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    check_exponent(p)?;
    if !(radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    if grid.dim() != center.dim() {
        return Err(Error::DimensionMismatch {
            left: grid.dim(),
            right: center.dim(),
        });
    }
    let nodes = grid.nodes_with(Axis::trapezoid_weights);
    let inside: Vec<(f64, f64)> = nodes
        .par_iter()
        .filter_map(|(c, w)| {
            let pt = GroupPoint::from_coords(c).expect("grid coordinates are finite");
            let d = center.distance(&pt).expect("same dimension");
            (d < radius).then(|| (f(&pt).norm(), *w))
        })
        .collect();
    finish_norm(&inside, p)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(invalid(format!("Lᵖ exponent must be in [1, ∞], got {p}")));
    }
    Ok(())
}

fn finish_norm(samples: &[(f64, f64)], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    if p.is_infinite() {
        return Ok(samples.iter().map(|s| s.0).fold(0.0, f64::max));
    }
    let sum: f64 = samples.iter().map(|(v, w)| v.powf(p) * w).sum();
    Ok(sum.powf(1.0 / p))
}

/// Lᵖ norm over `B(0, R)` of a function of `(|Y|², s)`.
///
/// Uses `∫_{R^{2d}} g(|Y|²) dY = π^d/(d-1)! ∫ g(ρ) ρ^{d-1} dρ`, leaving a
/// half-disc `ρ² + s² < R⁴` in the `(ρ, s)` plane that is integrated in polar
/// coordinates with Gauss–Legendre rules.
pub fn radial_lp_norm_on_ball<F>(f: F, p: f64, radius: f64, d: usize, n_radial: usize, n_angular: usize) -> Result<f64>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    check_exponent(p)?;
    if !(radius > 0.0) || d == 0 {
        return Err(invalid("need radius > 0 and d >= 1"));
    }
    let (r2, r4) = (radius * radius, radius.powi(4));
    let (rn, rw) = gauss_legendre_on(n_radial, 0.0, 1.0);
    let (an, aw) = gauss_legendre_on(n_angular, -0.5 * PI, 0.5 * PI);
    let c = PI.powi(d as i32) / factorial(d - 1);
    let samples: Vec<(f64, f64)> = (0..n_radial)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (r, wr) = (rn[i], rw[i]);
            let f = &f;
            let (an, aw) = (&an, &aw);
            (0..n_angular).map(move |j| {
                let rho = r2 * r * an[j].cos();
                let s = r2 * r * an[j].sin();
                let w = c * rho.powi(d as i32 - 1) * r4 * r * wr * aw[j];
                (f(rho, s).norm(), w)
            })
        })
        .collect();
    finish_norm(&samples, p)
}

/// `max |f|` over an equispaced polar grid of the closed half-disc `ρ² + s² ≤ R⁴`,
/// origin and boundary included.
pub fn radial_sup_on_ball<F>(f: F, radius: f64, n_radial: usize, n_angular: usize) -> Result<f64>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    if !(radius > 0.0) || n_radial == 0 || n_angular < 2 {
        return Err(invalid("need radius > 0, n_radial >= 1 and n_angular >= 2"));
    }
    let r2 = radius * radius;
    let mut points = vec![(0.0, 0.0)];
    for i in 1..=n_radial {
        let u = r2 * i as f64 / n_radial as f64;
        for j in 0..n_angular {
            let phi = -0.5 * PI + PI * j as f64 / (n_angular - 1) as f64;
            points.push(((u * phi.cos()).max(0.0), u * phi.sin()));
        }
    }
    let values: Vec<f64> = points.par_iter().map(|&(rho, s)| f(rho, s).norm()).collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Haar volume of `B(0, R)` in `H^d`, from the same polar reduction as
/// [`radial_lp_norm_on_ball`].
pub fn ball_volume(radius: f64, d: usize) -> f64 {
    // ∫∫_{ρ²+s²<R⁴} ρ^{d-1} dρ ds = R^{2d+2} ∫_{-π/2}^{π/2} cos^{d-1}φ dφ / (d+1).
    let (an, aw) = gauss_legendre_on(64, -0.5 * PI, 0.5 * PI);
    let ang: f64 = an.iter().zip(&aw).map(|(a, w)| a.cos().powi(d as i32 - 1) * w).sum();
    PI.powi(d as i32) / factorial(d - 1) * radius.powi(2 * d as i32 + 2) * ang / (d as f64 + 1.0)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
