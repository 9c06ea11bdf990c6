//! Radial Fourier transform on `H^d`: coefficients indexed by a Laguerre level
//! `ℓ` and a frequency `λ ≠ 0`, with the heat and Schrödinger flows acting as
//! multipliers.
//!
//! Forward: `c(ℓ, λ) = binom(ℓ+d−1, ℓ)^{-1} ∫ e^{−isλ} e^{−|λ|ρ} L_ℓ^{(d−1)}(2|λ|ρ) f dY ds`.
//! Inverse: `f = 2^{d−1}/π^{d+1} Σ_ℓ ∫ e^{isλ} e^{−|λ|ρ} L_ℓ^{(d−1)}(2|λ|ρ) c(ℓ, λ) |λ|^d dλ`.

use crate::error::{invalid, Error, Result};
use crate::group::GroupPoint;
use crate::quadrature::{
    extrapolate_to_zero, factorial, filon_linear, gauss_legendre_on, integrate_exponential_tail, Envelope,
};
use crate::special::{binomial, hermite_fn_scaled, laguerre, laguerre_damped_all, CRAMER};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

type Profile = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// A function of `(ρ, s) = (|Y|², s)` on `H^d`, negligible outside
/// `[0, support_rho] × [−support_s, support_s]`.
#[derive(Clone)]
pub struct RadialFunction {
    profile: Profile,
    pub support_rho: f64,
    pub support_s: f64,
    pub d: usize,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("support_rho", &self.support_rho)
            .field("support_s", &self.support_s)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

impl RadialFunction {
    pub fn new<F>(d: usize, support_rho: f64, support_s: f64, profile: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        if d == 0 || !(support_rho > 0.0 && support_s > 0.0) {
            return Err(invalid("radial function needs d >= 1 and positive support bounds"));
        }
        Ok(Self {
            profile: Arc::new(profile),
            support_rho,
            support_s,
            d,
        })
    }

    pub fn zero(d: usize) -> Self {
        Self::new(d, 1.0, 1.0, |_, _| ZERO).expect("valid support")
    }

    pub fn eval(&self, rho: f64, s: f64) -> Complex64 {
        (self.profile)(rho, s)
    }

    pub fn at(&self, w: &GroupPoint) -> Complex64 {
        self.eval(w.horizontal_norm_sq(), w.s)
    }

    /// `‖f‖²_{L²}` by the same polar reduction used for ball norms.
    pub fn l2_norm_sq(&self, n_rho: usize, n_s: usize) -> f64 {
        let c = radial_measure_constant(self.d);
        let (rn, rw) = gauss_legendre_on(n_rho, 0.0, self.support_rho);
        let (sn, sw) = gauss_legendre_on(n_s, -self.support_s, self.support_s);
        let mut acc = 0.0;
        for (r, wr) in rn.iter().zip(&rw) {
            for (s, ws) in sn.iter().zip(&sw) {
                acc += self.eval(*r, *s).norm_sqr() * r.powi(self.d as i32 - 1) * wr * ws;
            }
        }
        c * acc
    }
}

/// `∫_{R^{2d}} g(|Y|²) dY = π^d/(d−1)! ∫_0^∞ g(ρ) ρ^{d−1} dρ`.
pub fn radial_measure_constant(d: usize) -> f64 {
    PI.powi(d as i32) / factorial(d - 1)
}

/// `2^{d−1}/π^{d+1}`, the constant of the inverse transform.
pub fn inversion_constant(d: usize) -> f64 {
    2f64.powi(d as i32 - 1) / PI.powi(d as i32 + 1)
}

/// `π^{d+1}/2^{d−1}`, the ratio of spectral to spatial `L²` energy.
pub fn plancherel_constant(d: usize) -> f64 {
    inversion_constant(d).recip()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    pub ell: usize,
    pub lambda: f64,
}

impl FrequencyPoint {
    pub fn new(ell: usize, lambda: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(invalid("frequency lambda must be nonzero and finite"));
        }
        Ok(Self { ell, lambda })
    }
}

/// `4|λ|(2ℓ + d)`, the symbol of `−Δ_H` on level `ℓ`.
pub fn sublaplacian_symbol(freq: FrequencyPoint, d: usize) -> f64 {
    4.0 * freq.lambda.abs() * (2 * freq.ell + d) as f64
}

/// Strictly increasing nonzero frequencies with positive weights for `∫ · dλ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Index of the first positive node.
    split: usize,
}

impl LambdaGrid {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(invalid("lambda grid needs matching, non-empty node and weight lists"));
        }
        if nodes.iter().any(|&l| l == 0.0 || !l.is_finite()) {
            return Err(invalid("lambda grid must avoid 0"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("lambda grid must be strictly increasing"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("lambda weights must be positive"));
        }
        let split = nodes.partition_point(|&l| l < 0.0);
        Ok(Self { nodes, weights, split })
    }

    /// `±[λ_min, λ_max]` with `per_sign` geometric nodes per sign and
    /// trapezoid weights in `ln |λ|`.
    pub fn geometric_signed(lambda_min: f64, lambda_max: f64, per_sign: usize) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_min < lambda_max) || per_sign < 2 {
            return Err(invalid("need 0 < lambda_min < lambda_max and at least 2 nodes per sign"));
        }
        let step = (lambda_max / lambda_min).ln() / (per_sign - 1) as f64;
        let pos: Vec<f64> = (0..per_sign).map(|k| lambda_min * (step * k as f64).exp()).collect();
        let w: Vec<f64> = pos
            .iter()
            .enumerate()
            .map(|(k, l)| if k == 0 || k + 1 == per_sign { 0.5 * l * step } else { l * step })
            .collect();
        let nodes = pos.iter().rev().map(|l| -l).chain(pos.iter().copied()).collect();
        let weights = w.iter().rev().chain(w.iter()).copied().collect();
        Self::new(nodes, weights)
    }

    /// `±[1e−3, 50]` with 400 nodes per sign.
    pub fn standard() -> Self {
        Self::geometric_signed(1e-3, 50.0, 400).expect("valid grid")
    }

    /// `±[1e−7, 80]` with log-spacing 0.005, resolving the `ℓ ≲ 128` levels of
    /// unit-scale data accurately enough for pointwise synthesis.
    pub fn fine() -> Self {
        let per_sign = ((80.0f64 / 1e-7).ln() / 0.005).round() as usize + 1;
        Self::geometric_signed(1e-7, 80.0, per_sign).expect("valid grid")
    }

    /// `intervals + 1` equispaced nodes on `sign · [lo, hi]` with trapezoid weights.
    pub fn uniform(lo: f64, hi: f64, intervals: usize, sign: f64) -> Result<Self> {
        if !(0.0 < lo && lo < hi) || intervals == 0 || sign.abs() != 1.0 {
            return Err(invalid("uniform grid needs 0 < lo < hi, intervals >= 1 and sign ±1"));
        }
        let h = (hi - lo) / intervals as f64;
        let mut pairs: Vec<(f64, f64)> = (0..=intervals)
            .map(|k| {
                let w = if k == 0 || k == intervals { 0.5 * h } else { h };
                (sign * (lo + h * k as f64), w)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self::new(nodes, weights)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index ranges of each sign, ordered by increasing `|λ|`.
    fn halves(&self) -> [(f64, Vec<usize>); 2] {
        [
            (-1.0, (0..self.split).rev().collect()),
            (1.0, (self.split..self.nodes.len()).collect()),
        ]
    }
}

/// `e^{−|λ|ρ} L_ℓ^{(d−1)}(2|λ|ρ)`: the Wigner transform summed over the `ℓ`-th level.
pub fn wigner_radial(ell: usize, lambda: f64, rho: f64, d: usize) -> Result<f64> {
    if lambda == 0.0 {
        return Err(invalid("lambda must be nonzero"));
    }
    if !(rho >= 0.0) || d == 0 {
        return Err(invalid("need rho >= 0 and d >= 1"));
    }
    let x = 2.0 * lambda.abs() * rho;
    Ok(if x < 600.0 {
        (-0.5 * x).exp() * laguerre(ell, d - 1, x)
    } else {
        laguerre_damped_all(ell, d - 1, x)[ell]
    })
}

/// `∫ e^{2iληz} H_{n,λ}(y+z) H_{m,λ}(−y+z) dz` on `H^1`, where
/// `H_{n,λ}(x) = |λ|^{1/4} H_n(|λ|^{1/2} x)`.
pub fn wigner_general_d1(n: usize, m: usize, lambda: f64, y: f64, eta: f64) -> Result<Complex64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(invalid("lambda must be nonzero and finite"));
    }
    let a = lambda.abs().sqrt();
    // Beyond its turning point u_t a Hermite function decays at least like
    // e^{−(u−u_t)²/2} ≤ e^{−8(u−u_t)+32}; the other factor is bounded by Cramér's constant.
    let u_t = ((2 * n.max(m) + 1) as f64).sqrt();
    let amp = a * (CRAMER * CRAMER) / PI.sqrt();
    let envelope = Envelope::new(8.0 * a, 0.0, amp * (8.0 * (a * y.abs() + u_t) + 32.0).exp());
    let freq = 2.0 * (lambda * eta).abs();
    let width = (freq > 0.5).then(|| PI / freq);
    let integrand = |z: f64| {
        let h1 = hermite_fn_scaled(n, lambda, y + z).unwrap_or(0.0);
        let h2 = hermite_fn_scaled(m, lambda, -y + z).unwrap_or(0.0);
        Complex64::from_polar(h1 * h2, 2.0 * lambda * eta * z)
    };
    Ok(integrate_exponential_tail(integrand, envelope, 1e-12, width)?.value)
}

/// Quadrature used to reduce `f` to its coefficients: Gauss–Legendre in `ρ`
/// and the trapezoid rule in `s`, which is spectrally accurate for data that
/// vanishes smoothly at the ends of its support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisQuadrature {
    pub n_rho: usize,
    pub n_s: usize,
}

impl Default for AnalysisQuadrature {
    fn default() -> Self {
        Self { n_rho: 64, n_s: 256 }
    }
}

/// Samples of `f` with their combined weights, shared by every frequency.
struct Samples {
    rho: Vec<f64>,
    rho_weight: Vec<f64>,
    s0: f64,
    ds: f64,
    /// `f(ρ_i, s_j) ds`, row-major in `i`.
    values: Vec<Complex64>,
    n_s: usize,
}

impl Samples {
    fn take(f: &RadialFunction, quad: AnalysisQuadrature) -> Self {
        let (rho, w) = gauss_legendre_on(quad.n_rho, 0.0, f.support_rho);
        let c = radial_measure_constant(f.d);
        let rho_weight = rho.iter().zip(&w).map(|(r, w)| c * w * r.powi(f.d as i32 - 1)).collect();
        let n_s = quad.n_s.max(2);
        let ds = 2.0 * f.support_s / (n_s - 1) as f64;
        let s0 = -f.support_s;
        let values = rho
            .par_iter()
            .flat_map_iter(|&r| {
                (0..n_s).map(move |j| {
                    let end = if j == 0 || j + 1 == n_s { 0.5 } else { 1.0 };
                    f.eval(r, s0 + ds * j as f64) * (end * ds)
                })
            })
            .collect();
        Self {
            rho,
            rho_weight,
            s0,
            ds,
            values,
            n_s,
        }
    }

    /// `G(ρ_i, λ) = ∫ e^{−isλ} f(ρ_i, s) ds` for every `i`, advancing the
    /// phase along the uniform `s` grid by one rotation per node.
    fn vertical_transform(&self, lambda: f64) -> Vec<Complex64> {
        let start = Complex64::from_polar(1.0, -lambda * self.s0);
        let rot = Complex64::from_polar(1.0, -lambda * self.ds);
        self.values
            .chunks(self.n_s)
            .map(|row| {
                let mut ph = start;
                let mut acc = ZERO;
                for v in row {
                    acc += v * ph;
                    ph *= rot;
                }
                acc
            })
            .collect()
    }

    /// `c(ℓ, λ)` for `ℓ = 0..=ell_max`.
    fn coefficients(&self, lambda: f64, ell_max: usize, d: usize) -> Vec<Complex64> {
        let g = self.vertical_transform(lambda);
        let mut out = vec![ZERO; ell_max + 1];
        for (i, &r) in self.rho.iter().enumerate() {
            let lag = laguerre_damped_all(ell_max, d - 1, 2.0 * lambda.abs() * r);
            let a = g[i] * self.rho_weight[i];
            for (o, l) in out.iter_mut().zip(&lag) {
                *o += a * *l;
            }
        }
        for (ell, o) in out.iter_mut().enumerate() {
            *o /= binomial(ell + d - 1, ell);
        }
        out
    }
}

/// One coefficient `c(ℓ, λ)` of `f`.
pub fn forward_radial(f: &RadialFunction, freq: FrequencyPoint) -> Complex64 {
    forward_radial_with(f, freq, AnalysisQuadrature::default())
}

pub fn forward_radial_with(f: &RadialFunction, freq: FrequencyPoint, quad: AnalysisQuadrature) -> Complex64 {
    Samples::take(f, quad).coefficients(freq.lambda, freq.ell, f.d)[freq.ell]
}

/// Coefficients of levels `0..=ell_max` on a frequency grid.
///
/// Schrödinger evolution and vertical translation are stored as an
/// accumulated time and shift rather than folded into the values, so that
/// synthesis can integrate their oscillation exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    d: usize,
    ell_max: usize,
    grid: LambdaGrid,
    /// Row-major `(ℓ, j)`, without the pending phase.
    amplitudes: Vec<Complex64>,
    time: f64,
    shift: f64,
}

impl SpectralCoefficients {
    pub fn from_fn<F>(d: usize, ell_max: usize, grid: LambdaGrid, f: F) -> Result<Self>
    where
        F: Fn(usize, f64) -> Complex64,
    {
        if d == 0 {
            return Err(invalid("d must be at least 1"));
        }
        let amplitudes = (0..=ell_max)
            .flat_map(|ell| grid.nodes.iter().map(move |&l| (ell, l)))
            .map(|(ell, l)| f(ell, l))
            .collect();
        Ok(Self {
            d,
            ell_max,
            grid,
            amplitudes,
            time: 0.0,
            shift: 0.0,
        })
    }

    pub fn zeros(d: usize, ell_max: usize, grid: LambdaGrid) -> Result<Self> {
        Self::from_fn(d, ell_max, grid, |_, _| ZERO)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    /// Accumulated Schrödinger time.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Accumulated vertical translation.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn phase(&self, ell: usize, lambda: f64) -> Complex64 {
        let symbol = 4.0 * lambda.abs() * (2 * ell + self.d) as f64;
        Complex64::from_polar(1.0, self.time * symbol - self.shift * lambda)
    }

    /// Coefficient at `(ℓ, j)` including the pending phase.
    pub fn value(&self, ell: usize, j: usize) -> Complex64 {
        let n = self.grid.len();
        self.amplitudes[ell * n + j] * self.phase(ell, self.grid.nodes[j])
    }

    /// All coefficients as an `(ell_max + 1) × |grid|` row-major array.
    pub fn values(&self) -> Vec<Complex64> {
        let n = self.grid.len();
        (0..self.amplitudes.len()).map(|k| self.value(k / n, k % n)).collect()
    }

    /// Per-level energies `binom(ℓ+d−1, ℓ) ∫ |c(ℓ, λ)|² |λ|^d dλ`.
    pub fn level_energies(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..=self.ell_max)
            .map(|ell| {
                let row = &self.amplitudes[ell * n..(ell + 1) * n];
                let e: f64 = row
                    .iter()
                    .zip(&self.grid.nodes)
                    .zip(&self.grid.weights)
                    .map(|((c, l), w)| c.norm_sqr() * l.abs().powi(self.d as i32) * w)
                    .sum();
                binomial(ell + self.d - 1, ell) * e
            })
            .collect()
    }

    /// `Σ_ℓ binom(ℓ+d−1, ℓ) ∫ |c(ℓ, λ)|² |λ|^d dλ`, which equals
    /// `π^{d+1}/2^{d−1} ‖f‖²` for exact coefficients.
    pub fn weighted_norm_sq(&self) -> f64 {
        self.level_energies().iter().sum()
    }

    /// Contributions of each level to the inverse transform at `(ρ, s)`.
    ///
    /// Each sign of `λ` is integrated with the Filon rule, the amplitude being
    /// interpolated linearly and `e^{iωλ}` integrated exactly, where `ω`
    /// collects the vertical coordinate, the shift and the Schrödinger phase.
    pub fn level_contributions(&self, rho: f64, s: f64) -> Vec<Complex64> {
        let n = self.grid.len();
        let halves = self.grid.halves();
        // Damped Laguerre values at every node, for all levels.
        let lag: Vec<Vec<f64>> = self
            .grid
            .nodes
            .iter()
            .map(|l| laguerre_damped_all(self.ell_max, self.d - 1, 2.0 * l.abs() * rho))
            .collect();
        let constant = inversion_constant(self.d);
        (0..=self.ell_max)
            .map(|ell| {
                let row = &self.amplitudes[ell * n..(ell + 1) * n];
                let speed = 4.0 * self.time * (2 * ell + self.d) as f64;
                let mut acc = ZERO;
                for (sign, idx) in &halves {
                    if idx.len() < 2 {
                        continue;
                    }
                    let mu: Vec<f64> = idx.iter().map(|&j| self.grid.nodes[j].abs()).collect();
                    let g: Vec<Complex64> = idx
                        .iter()
                        .zip(&mu)
                        .map(|(&j, m)| row[j] * lag[j][ell] * m.powi(self.d as i32))
                        .collect();
                    let omega = sign * (s - self.shift) + speed;
                    acc += filon_linear(&mu, &g, omega);
                }
                acc * constant
            })
            .collect()
    }
}

/// Tabulates the coefficients of `f` on `grid` for levels `0..=ell_max`.
pub fn analyze(f: &RadialFunction, ell_max: usize, grid: &LambdaGrid) -> SpectralCoefficients {
    analyze_with(f, ell_max, grid, AnalysisQuadrature::default())
}

pub fn analyze_with(f: &RadialFunction, ell_max: usize, grid: &LambdaGrid, quad: AnalysisQuadrature) -> SpectralCoefficients {
    let samples = Samples::take(f, quad);
    let columns: Vec<Vec<Complex64>> = grid
        .nodes
        .par_iter()
        .map(|&l| samples.coefficients(l, ell_max, f.d))
        .collect();
    let n = grid.len();
    let mut amplitudes = vec![ZERO; (ell_max + 1) * n];
    for (j, col) in columns.iter().enumerate() {
        for (ell, v) in col.iter().enumerate() {
            amplitudes[ell * n + j] = *v;
        }
    }
    SpectralCoefficients {
        d: f.d,
        ell_max,
        grid: grid.clone(),
        amplitudes,
        time: 0.0,
        shift: 0.0,
    }
}

/// Inverse transform at `(ρ, s)`, summing levels `0..=ell_max`.
pub fn synthesize(c: &SpectralCoefficients, rho: f64, s: f64) -> Complex64 {
    c.level_contributions(rho, s).iter().sum()
}

/// Inverse transform with the level sum extrapolated in `1/L` from partial
/// sums over `L/8, L/4, L/2, L` levels (`L = ell_max + 1`). Falls back to
/// the plain sum when fewer than 8 levels are stored.
pub fn synthesize_extrapolated(c: &SpectralCoefficients, rho: f64, s: f64) -> Complex64 {
    let terms = c.level_contributions(rho, s);
    extrapolate_level_sum(&terms)
}

pub(crate) fn extrapolate_level_sum(terms: &[Complex64]) -> Complex64 {
    let total = terms.len();
    if total < 8 {
        return terms.iter().sum();
    }
    let counts = [total / 8, total / 4, total / 2, total];
    let mut partial = Vec::with_capacity(4);
    let mut acc = ZERO;
    for (k, t) in terms.iter().enumerate() {
        acc += t;
        if counts.contains(&(k + 1)) {
            partial.push(acc);
        }
    }
    let h: Vec<f64> = counts.iter().map(|&n| 1.0 / n as f64).collect();
    extrapolate_to_zero(&h, &partial)
}

/// Multiplies by `e^{4it|λ|(2ℓ+d)}`.
pub fn evolve_schrodinger(c: &SpectralCoefficients, t: f64) -> SpectralCoefficients {
    SpectralCoefficients {
        time: c.time + t,
        ..c.clone()
    }
}

/// Multiplies by `e^{−4t|λ|(2ℓ+d)}`, `t > 0`.
pub fn evolve_heat(c: &SpectralCoefficients, t: f64) -> Result<SpectralCoefficients> {
    if !(t > 0.0) {
        return Err(invalid(format!("heat time must be positive, got {t}")));
    }
    let n = c.grid.len();
    let mut out = c.clone();
    for (k, a) in out.amplitudes.iter_mut().enumerate() {
        let symbol = 4.0 * c.grid.nodes[k % n].abs() * (2 * (k / n) + c.d) as f64;
        *a *= (-t * symbol).exp();
    }
    Ok(out)
}

/// Coefficients of `f(Y, s − s0)`: multiplication by `e^{−is0λ}`.
pub fn vertical_translate_spectral(c: &SpectralCoefficients, s0: f64) -> SpectralCoefficients {
    SpectralCoefficients {
        shift: c.shift + s0,
        ..c.clone()
    }
}

/// Keeps level `ell` and zeroes the rest.
pub fn project_component(c: &SpectralCoefficients, ell: usize) -> Result<SpectralCoefficients> {
    if ell > c.ell_max {
        return Err(invalid(format!("level {ell} exceeds ell_max = {}", c.ell_max)));
    }
    let n = c.grid.len();
    let mut out = c.clone();
    for (k, a) in out.amplitudes.iter_mut().enumerate() {
        if k / n != ell {
            *a = ZERO;
        }
    }
    Ok(out)
}

/// Zeroes levels below `ell_min`, projecting onto the span of levels `≥ ell_min`.
pub fn project_from_level(c: &SpectralCoefficients, ell_min: usize) -> Result<SpectralCoefficients> {
    if ell_min > c.ell_max {
        return Err(invalid(format!("level {ell_min} exceeds ell_max = {}", c.ell_max)));
    }
    let n = c.grid.len();
    let mut out = c.clone();
    for a in &mut out.amplitudes[..ell_min * n] {
        *a = ZERO;
    }
    Ok(out)
}

/// Writes `ell, lambda, weight, re, im` rows after a `# schema=1` line.
pub fn write_coefficients_csv<W: Write>(c: &SpectralCoefficients, out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "# schema=1 d={}", c.d)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ell", "lambda", "weight", "re", "im"])?;
    let n = c.grid.len();
    for ell in 0..=c.ell_max {
        for j in 0..n {
            let v = c.value(ell, j);
            w.write_record(&[
                ell.to_string(),
                c.grid.nodes[j].to_string(),
                c.grid.weights[j].to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_coefficients_csv`].
pub fn read_coefficients_csv<R: BufRead>(input: R) -> Result<SpectralCoefficients> {
    let mut input = input;
    let mut first = String::new();
    input.read_line(&mut first)?;
    let d = first
        .trim()
        .strip_prefix("# schema=1")
        .and_then(|rest| rest.trim().strip_prefix("d="))
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| Error::Io(format!("unsupported coefficient header {:?}", first.trim())))?;
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows: Vec<(usize, f64, f64, Complex64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::Io(format!("bad field {:?}: {e}", &rec[i])));
        let ell = rec[0].parse::<usize>().map_err(|e| Error::Io(format!("bad level {:?}: {e}", &rec[0])))?;
        rows.push((ell, num(1)?, num(2)?, Complex64::new(num(3)?, num(4)?)));
    }
    let ell_max = rows.iter().map(|r| r.0).max().ok_or_else(|| Error::Io("no coefficient rows".into()))?;
    let nodes: Vec<f64> = rows.iter().filter(|r| r.0 == 0).map(|r| r.1).collect();
    let weights: Vec<f64> = rows.iter().filter(|r| r.0 == 0).map(|r| r.2).collect();
    if rows.len() != (ell_max + 1) * nodes.len() {
        return Err(Error::Io("coefficient rows do not form a full (ell, lambda) table".into()));
    }
    let grid = LambdaGrid::new(nodes, weights)?;
    let amplitudes = rows.iter().map(|r| r.3).collect();
    Ok(SpectralCoefficients {
        d,
        ell_max,
        grid,
        amplitudes,
        time: 0.0,
        shift: 0.0,
    })
}
