//! Cauchy data and three independent routes to the Schrödinger flow: the
//! closed form for single-level line data, spectral multipliers, and
//! convolution with the kernel.

use crate::error::{invalid, Error, Result};
use crate::fourier::{
    analyze_with, evolve_schrodinger, inversion_constant, synthesize_extrapolated, AnalysisQuadrature,
    LambdaGrid, RadialFunction, SpectralCoefficients,
};
use crate::group::{relative_radial_coords, GroupPoint};
use crate::kernels::{restricted_kernel, schrodinger_kernel, KernelQuery, KernelTable};
use crate::quadrature::{gauss_legendre_on, integrate_adaptive_with, AdaptiveOptions};
use crate::special::laguerre_damped_all;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `exp(−1/(1 − u²))` on `(−1, 1)`, zero elsewhere; every derivative vanishes at `±1`.
fn flat_bump(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// C^∞ bump on `[lo, hi]` with unit integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    pub lo: f64,
    pub hi: f64,
    scale: f64,
}

impl SmoothBump {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(invalid("bump needs lo < hi"));
        }
        let (x, w) = gauss_legendre_on(200, -1.0, 1.0);
        let mass: f64 = x.iter().zip(&w).map(|(u, w)| flat_bump(*u) * w).sum::<f64>() * 0.5 * (hi - lo);
        Ok(Self {
            lo,
            hi,
            scale: 1.0 / mass,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        self.scale * flat_bump(u)
    }
}

impl Default for SmoothBump {
    fn default() -> Self {
        Self::new(1.0, 2.0).expect("valid interval")
    }
}

/// Data carried by one Laguerre level and one sign of `λ`, with `λ`-profile `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineData {
    pub ell: usize,
    pub profile: SmoothBump,
    /// `+1` or `−1`.
    pub lambda_sign: f64,
    pub d: usize,
}

impl LineData {
    pub fn new(ell: usize, profile: SmoothBump, lambda_sign: f64, d: usize) -> Result<Self> {
        if lambda_sign.abs() != 1.0 {
            return Err(invalid("lambda_sign must be +1 or -1"));
        }
        if d == 0 || !(profile.lo > 0.0) {
            return Err(invalid("line data needs d >= 1 and a profile supported in (0, ∞)"));
        }
        Ok(Self {
            ell,
            profile,
            lambda_sign,
            d,
        })
    }

    /// Vertical speed `4(2ℓ+d)` of the transport.
    pub fn speed(&self) -> f64 {
        4.0 * (2 * self.ell + self.d) as f64
    }

    /// Point `s` where the solution at time `t` equals the initial value at the origin.
    pub fn hyperplane(&self, t: f64) -> f64 {
        -self.lambda_sign * self.speed() * t
    }

    /// Exact coefficients: level `ell`, one sign of `λ`, amplitude `g(|λ|)`.
    pub fn coefficients(&self, ell_max: usize, grid: LambdaGrid) -> Result<SpectralCoefficients> {
        if self.ell > ell_max {
            return Err(invalid("ell_max must cover the data's level"));
        }
        let c = inversion_constant(self.d).recip();
        SpectralCoefficients::from_fn(self.d, ell_max, grid, |ell, lambda| {
            if ell == self.ell && lambda * self.lambda_sign > 0.0 {
                Complex64::new(c * self.profile.eval(lambda.abs()), 0.0)
            } else {
                ZERO
            }
        })
    }

    /// The time-zero trace as a [`RadialFunction`] whose declared support keeps the
    /// discarded part below about `1e-11`.
    ///
    /// The `λ`-integral uses the trapezoid rule on `n_lambda` nodes. The profile is flat
    /// at both ends, so the rule is accurate to rounding while `|s|` stays well
    /// below `2π n_lambda / (hi − lo)`.
    pub fn initial_trace(&self, support_s: f64, n_lambda: usize) -> Result<RadialFunction> {
        let data = *self;
        let h = (self.profile.hi - self.profile.lo) / n_lambda as f64;
        let nodes: Vec<f64> = (1..n_lambda).map(|k| self.profile.lo + h * k as f64).collect();
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&l| h * self.profile.eval(l) * l.powi(self.d as i32))
            .collect();
        let support_rho = (30.0 + 10.0 * self.ell as f64) / self.profile.lo;
        RadialFunction::new(self.d, support_rho, support_s, move |rho, s| {
            let mut acc = ZERO;
            for (l, w) in nodes.iter().zip(&weights) {
                let lag = laguerre_damped_all(data.ell, data.d - 1, 2.0 * l * rho)[data.ell];
                acc += Complex64::from_polar(w * lag, data.lambda_sign * s * l);
            }
            acc
        })
    }
}

/// `∫ e^{i(σs + 4t(2ℓ+d))μ} e^{−μρ} L_ℓ^{(d−1)}(2μρ) g(μ) μ^d dμ` over `supp g`,
/// with `σ` the sign of the data's frequencies.
pub fn line_solution(data: &LineData, t: f64, rho: f64, s: f64) -> Result<Complex64> {
    if !(rho >= 0.0) {
        return Err(invalid("rho must be nonnegative"));
    }
    let omega = data.lambda_sign * s + data.speed() * t;
    let integrand = |mu: f64| {
        let lag = laguerre_damped_all(data.ell, data.d - 1, 2.0 * mu * rho)[data.ell];
        Complex64::from_polar(lag * data.profile.eval(mu) * mu.powi(data.d as i32), omega * mu)
    };
    let mut opts = AdaptiveOptions::new(1e-14);
    if omega.abs() > 1.0 {
        opts = opts.max_width(std::f64::consts::PI / omega.abs());
    }
    Ok(integrate_adaptive_with(integrand, data.profile.lo, data.profile.hi, opts)?.value)
}

/// Value of line data on its moving hyperplane and at the origin initially.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationProbe {
    pub hyperplane_s: f64,
    pub at_hyperplane: Complex64,
    pub initial_at_origin: Complex64,
}

pub fn concentration_probe(data: &LineData, t: f64) -> Result<ConcentrationProbe> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    let s = data.hyperplane(t);
    Ok(ConcentrationProbe {
        hyperplane_s: s,
        at_hyperplane: line_solution(data, t, 0.0, s)?,
        initial_at_origin: line_solution(data, 0.0, 0.0, 0.0)?,
    })
}

/// Korányi bump `exp(−1/(1 − (ρ² + s²)/R₀⁴))` centred at the identity, zero outside `B(0, R₀)`.
pub fn bump_data(r0: f64, d: usize) -> Result<RadialFunction> {
    if !(r0 > 0.0) {
        return Err(invalid("R0 must be positive"));
    }
    let r4 = r0.powi(4);
    RadialFunction::new(d, r0 * r0, r0 * r0, move |rho, s| {
        Complex64::new(flat_bump(((rho * rho + s * s) / r4).sqrt()), 0.0)
    })
}

/// A bump of radius `R₀` translated to `center`.
#[derive(Debug, Clone)]
pub struct BumpData {
    pub r0: f64,
    pub center: GroupPoint,
    pub radial: RadialFunction,
}

impl BumpData {
    pub fn new(r0: f64, center: GroupPoint) -> Result<Self> {
        let radial = bump_data(r0, center.dim())?;
        Ok(Self { r0, center, radial })
    }

    /// `u0(w) = bump(center⁻¹ · w)`.
    pub fn eval(&self, w: &GroupPoint) -> Result<Complex64> {
        Ok(self.radial.at(&self.center.inverse().product(w)?))
    }

    /// Largest `|u0|` over `samples` points drawn outside `B(center, R₀)`; zero for honest support.
    pub fn support_leak(&self, samples: usize, seed: u64) -> Result<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = self.center.dim();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let c: Vec<f64> = (0..2 * d + 1).map(|_| rng.gen_range(-3.0..3.0) * self.r0).collect();
            let off = self.center.product(&GroupPoint::from_coords(&c)?)?;
            if self.center.distance(&off)? >= self.r0 {
                worst = worst.max(self.eval(&off)?.norm());
            }
        }
        Ok(worst)
    }
}

/// Settings for the spectral route.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSetup {
    pub ell_max: usize,
    pub grid: LambdaGrid,
    pub quad: AnalysisQuadrature,
}

impl SpectralSetup {
    /// Levels `0..=127` on [`LambdaGrid::fine`], enough for pointwise values
    /// of unit-scale bumps to about `1e−4` after level extrapolation.
    pub fn fine() -> Self {
        Self {
            ell_max: 127,
            grid: LambdaGrid::fine(),
            quad: AnalysisQuadrature { n_rho: 64, n_s: 256 },
        }
    }

    /// Standard grid with 16 levels: quick but visibly truncated.
    pub fn standard() -> Self {
        Self {
            ell_max: 16,
            grid: LambdaGrid::standard(),
            quad: AnalysisQuadrature::default(),
        }
    }
}

/// Coefficients of `u0`, ready to be evolved and synthesized.
#[derive(Debug, Clone)]
pub struct SpectralEvolver {
    pub coefficients: SpectralCoefficients,
}

impl SpectralEvolver {
    pub fn new(u0: &RadialFunction, setup: &SpectralSetup) -> Self {
        Self {
            coefficients: analyze_with(u0, setup.ell_max, &setup.grid, setup.quad),
        }
    }

    pub fn from_coefficients(coefficients: SpectralCoefficients) -> Self {
        Self { coefficients }
    }

    /// `u(t)` at each `(ρ, s)`.
    pub fn evolve(&self, t: f64, points: &[(f64, f64)]) -> Vec<Complex64> {
        let c = evolve_schrodinger(&self.coefficients, t);
        points.par_iter().map(|&(rho, s)| synthesize_extrapolated(&c, rho, s)).collect()
    }
}

/// `u(t, w)` for each point by analysis, multiplication by `e^{4it|λ|(2ℓ+d)}` and synthesis.
pub fn evolve_by_spectrum(u0: &RadialFunction, t: f64, points: &[GroupPoint], setup: &SpectralSetup) -> Vec<Complex64> {
    let pts: Vec<(f64, f64)> = points.iter().map(|w| (w.horizontal_norm_sq(), w.s)).collect();
    SpectralEvolver::new(u0, setup).evolve(t, &pts)
}

/// Data sampled at the midpoints of a uniform grid over its support box,
/// keeping only nonzero cells.
#[derive(Debug, Clone)]
pub struct SampledData {
    d: usize,
    /// Flattened coordinates, `2d + 1` per node.
    coords: Vec<f64>,
    /// Value times cell volume.
    masses: Vec<Complex64>,
}

impl SampledData {
    /// Midpoint rule on `[−R, R]^{2d} × [−R², R²]` with `n` cells per axis.
    pub fn from_radial(f: &RadialFunction, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("grid needs at least one cell per axis"));
        }
        let d = f.d;
        let r = f.support_rho.sqrt();
        let dims = 2 * d + 1;
        let mut lo = vec![-r; dims];
        let mut step = vec![2.0 * r / n as f64; dims];
        lo[2 * d] = -f.support_s;
        step[2 * d] = 2.0 * f.support_s / n as f64;
        let volume: f64 = step.iter().product();
        let total = n.pow(dims as u32);
        let (coords, masses): (Vec<Vec<f64>>, Vec<Complex64>) = (0..total)
            .into_par_iter()
            .filter_map(|mut k| {
                let mut c = vec![0.0; dims];
                for a in (0..dims).rev() {
                    c[a] = lo[a] + step[a] * ((k % n) as f64 + 0.5);
                    k /= n;
                }
                let rho: f64 = c[..2 * d].iter().map(|v| v * v).sum();
                let v = f.eval(rho, c[2 * d]);
                (v != ZERO).then(|| (c, v * volume))
            })
            .unzip();
        Ok(Self {
            d,
            coords: coords.concat(),
            masses,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `Σ |u0(v)| dv`, the midpoint estimate of `‖u0‖_{L¹}`.
    pub fn l1_norm(&self) -> f64 {
        self.masses.iter().map(|m| m.norm()).sum()
    }

    fn nodes(&self) -> impl Iterator<Item = (&[f64], &Complex64)> {
        self.coords.chunks(2 * self.d + 1).zip(&self.masses)
    }
}

/// How the convolution obtains kernel values.
#[derive(Debug, Clone, Copy)]
pub enum KernelSource<'a> {
    /// Adaptive evaluation at every node, with this absolute tolerance.
    Direct(f64),
    Table(&'a KernelTable),
    /// Kernel with levels below `ell` removed, valid on the strip `|s| < 4(2ℓ+d)|t|`.
    Restricted { ell: usize, tol: f64 },
}

impl KernelSource<'_> {
    fn strip_width(&self, d: usize) -> f64 {
        match self {
            KernelSource::Restricted { ell, .. } => 4.0 * (2 * ell + d) as f64,
            _ => 4.0 * d as f64,
        }
    }

    fn eval(&self, d: usize, t: f64, rho: f64, s: f64) -> Result<Complex64> {
        match *self {
            KernelSource::Direct(tol) => Ok(schrodinger_kernel(&KernelQuery::real(d, t, rho, s)?.with_tol(tol)?)?.value),
            KernelSource::Table(table) => table.eval(t, rho, s),
            KernelSource::Restricted { ell, tol } => {
                Ok(restricted_kernel(ell, &KernelQuery::real(d, t, rho, s)?.with_tol(tol)?)?.value)
            }
        }
    }
}

/// `(u0 ⋆ K_t)(w) = ∫ u0(v) K_t(v⁻¹ · w) dv` on the sampled grid.
///
/// Every node is checked against the source's strip before any kernel is evaluated,
/// so a query too close to the edge fails with a strip violation.
pub fn evolve_by_convolution(u0: &SampledData, t: f64, w: &GroupPoint, source: KernelSource<'_>) -> Result<Complex64> {
    if w.dim() != u0.d {
        return Err(Error::DimensionMismatch {
            left: w.dim(),
            right: u0.d,
        });
    }
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    let wc = w.coords();
    let limit = source.strip_width(u0.d) * t.abs();
    let rel: Vec<(f64, f64)> = u0.nodes().map(|(v, _)| relative_radial_coords(v, &wc)).collect();
    if let Some(&(_, s)) = rel.iter().find(|(_, s)| s.abs() >= limit) {
        return Err(Error::StripViolation { s, limit });
    }
    // Summed sequentially so the result does not depend on thread scheduling.
    let terms: Vec<Complex64> = rel
        .par_iter()
        .zip(&u0.masses)
        .map(|(&(rho, s), m)| Ok(m * source.eval(u0.d, t, rho, s)?))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Kernel table covering every `v⁻¹ · w` with `v` in a ball of radius `r0`, `w` in
/// `B(0, κ√|t|)` and `|t| ≥ t_min`.
///
/// Such points satisfy `‖v⁻¹ · w‖ ≤ r0 + κ√|t|`, so the scaled coordinates stay below
/// `(r0/√t_min + κ)²`; that must be under `4d`, which is `t_min > T_{κ,r0}`.
pub fn kernel_table_for(d: usize, r0: f64, kappa: f64, t_min: f64, spacing: f64, tol: f64) -> Result<KernelTable> {
    if !(t_min > 0.0 && spacing > 0.0) {
        return Err(invalid("table needs positive t_min and spacing"));
    }
    let reach = (r0 / t_min.sqrt() + kappa).powi(2);
    let limit = 4.0 * d as f64;
    if reach >= limit {
        return Err(Error::StripViolation { s: reach, limit });
    }
    let n_rho = ((reach / spacing).ceil() as usize + 1).max(4);
    let n_s = ((2.0 * reach / spacing).ceil() as usize + 1).max(4);
    KernelTable::build(d, reach, reach, n_rho, n_s, tol)
}

/// Least-squares fit of `log y = exponent · log x + log prefactor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Largest residual in `log y`.
    pub max_residual: f64,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("power-law fit needs at least two matching samples"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(invalid("power-law fit needs positive samples"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let max_residual = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - exponent * a).abs())
        .fold(0.0, f64::max);
    Ok(PowerFit {
        exponent,
        prefactor: intercept.exp(),
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Line,
    Spectral,
    Convolution,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Line => "line",
            Route::Spectral => "spectral",
            Route::Convolution => "convolution",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub point: GroupPoint,
    pub value: Complex64,
    pub route: Route,
}

/// Writes `t, y…, eta…, s, re, im, route` after a `# schema=1` line.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "# schema=1")?;
    let d = rows.first().map_or(1, |r| r.point.dim());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|j| format!("y{j}")));
    header.extend((1..=d).map(|j| format!("eta{j}")));
    header.extend(["s", "re", "im", "route"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.point.coords().iter().map(|c| c.to_string()));
        rec.extend([r.value.re.to_string(), r.value.im.to_string(), r.route.name().to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
