//! Experiment harness: configuration, the experiment catalog, and CSV reports
//! with a pass/fail verdict per row.

use crate::error::{Error, Result};
use crate::fourier::{
    analyze_with, evolve_schrodinger, project_from_level, synthesize, LambdaGrid, RadialFunction, SpectralCoefficients,
};
use crate::group::{homogeneous_dimension, GroupPoint};
use crate::kernels::{
    default_series_budget, dispersion_constant, dispersion_constant_signed, heat_kernel_gaveau, heat_kernel_series,
    kernel_complex_time, restricted_kernel, schrodinger_kernel, strip_time, KernelQuery,
};
use crate::quadrature::{radial_lp_norm_on_ball, radial_sup_on_ball};
use crate::solutions::{
    bump_data, concentration_probe, evolve_by_convolution, fit_power_law, kernel_table_for, line_solution,
    KernelSource, LineData, SampledData, SmoothBump, SpectralEvolver, SpectralSetup,
};
use crate::special::{mehler_closed, mehler_heat_closed, mehler_heat_sum, mehler_sum, TruncationBudget};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    HeatEquiv,
    Mehler,
    KernelConsistency,
    Dispersion,
    StrichartzWindow,
    Concentrate,
    RestrictedSweep,
    Mkappa,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::HeatEquiv,
        Experiment::Mehler,
        Experiment::KernelConsistency,
        Experiment::Dispersion,
        Experiment::StrichartzWindow,
        Experiment::Concentrate,
        Experiment::RestrictedSweep,
        Experiment::Mkappa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::HeatEquiv => "heat-equiv",
            Experiment::Mehler => "mehler",
            Experiment::KernelConsistency => "kernel-consistency",
            Experiment::Dispersion => "dispersion",
            Experiment::StrichartzWindow => "strichartz-window",
            Experiment::Concentrate => "concentrate",
            Experiment::RestrictedSweep => "restricted-sweep",
            Experiment::Mkappa => "mkappa",
        }
    }

    /// Experiments that convolve on a `(2d+1)`-dimensional grid only run at `d = 1`.
    fn needs_grid(self) -> bool {
        matches!(
            self,
            Experiment::KernelConsistency | Experiment::Dispersion | Experiment::StrichartzWindow
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Settings of one run. Unset options fall back to per-experiment defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub kappa: f64,
    pub ell: Option<usize>,
    pub r0: f64,
    pub times: Option<Vec<f64>>,
    pub tol: Option<f64>,
    /// Cells per axis of the convolution grid.
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    /// Halves grids per axis.
    pub fast: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            d: 1,
            kappa: 1.0,
            ell: None,
            r0: 1.0,
            times: None,
            tol: None,
            grid: None,
            out: None,
            fast: false,
            seed: 1,
        }
    }

    /// Sets one option from its textual form; keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("cannot parse {key}={value} as {what}"));
        let float = || value.trim().parse::<f64>().map_err(|_| bad("a number"));
        let count = || value.trim().parse::<usize>().map_err(|_| bad("a nonnegative integer"));
        match key.trim() {
            "experiment" => self.experiment = value.trim().parse()?,
            "d" => self.d = count()?,
            "kappa" => self.kappa = float()?,
            "ell" => self.ell = Some(count()?),
            "R0" | "r0" => self.r0 = float()?,
            "t" => {
                let list = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("a comma-separated list of numbers"))?;
                self.times = Some(list);
            }
            "tol" => self.tol = Some(float()?),
            "grid" => self.grid = Some(count()?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "fast" => {
                self.fast = match value.trim() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("a boolean")),
                }
            }
            "seed" => self.seed = value.trim().parse().map_err(|_| bad("an integer"))?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        if self.experiment.needs_grid() && self.d != 1 {
            return fail(format!("{} convolves on a 3-D grid and supports d = 1 only", self.experiment));
        }
        if !(self.kappa >= 0.0) || !(self.r0 > 0.0) {
            return fail("need kappa >= 0 and R0 > 0".into());
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return fail("tol must be positive".into());
            }
        }
        if let Some(ts) = &self.times {
            if ts.is_empty() || ts.iter().any(|t| *t == 0.0 || !t.is_finite()) {
                return fail("times must be nonzero and finite".into());
            }
        }
        if matches!(self.grid, Some(n) if n < 4) {
            return fail("grid needs at least 4 cells per axis".into());
        }
        let edge = 4.0 * self.d as f64;
        match self.experiment {
            Experiment::KernelConsistency | Experiment::Dispersion | Experiment::StrichartzWindow
                if self.kappa * self.kappa >= edge =>
            {
                fail(format!("kappa must satisfy kappa^2 < 4d = {edge}"))
            }
            Experiment::RestrictedSweep => {
                let ell = self.ell.unwrap_or(2);
                let wide = 4.0 * (self.d + 2 * ell) as f64;
                if self.kappa * self.kappa >= wide {
                    fail(format!("kappa must satisfy kappa^2 < 4(d + 2 ell) = {wide}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn grid_cells(&self, default: usize) -> usize {
        let n = self.grid.unwrap_or(default);
        if self.fast {
            (n / 2).max(4)
        } else {
            n
        }
    }
}

/// How a row's measurement is judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// `|measured − reference| ≤ tol · |reference|`.
    Relative(f64),
    /// `|measured − reference| ≤ tol`.
    Absolute(f64),
    /// `measured ≤ reference`.
    AtMost,
    /// `measured ≥ reference`.
    AtLeast,
    /// `measured` is finite.
    Finite,
}

impl Check {
    fn label(&self) -> &'static str {
        match self {
            Check::Relative(_) => "rel",
            Check::Absolute(_) => "abs",
            Check::AtMost => "le",
            Check::AtLeast => "ge",
            Check::Finite => "finite",
        }
    }

    fn tolerance(&self) -> f64 {
        match *self {
            Check::Relative(t) | Check::Absolute(t) => t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub case: String,
    pub measured: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub check: Check,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(case: impl Into<String>, measured: f64, reference: f64, check: Check) -> Self {
        let diff = (measured - reference).abs();
        Self::assemble(case.into(), measured, reference, diff, check)
    }

    /// Compares complex values; the measured and reference columns hold moduli.
    pub fn complex(case: impl Into<String>, measured: Complex64, reference: Complex64, check: Check) -> Self {
        let diff = (measured - reference).norm();
        Self::assemble(case.into(), measured.norm(), reference.norm(), diff, check)
    }

    /// A row for a computation that failed: recorded as a non-finite measurement.
    pub fn failed(case: impl Into<String>, err: &Error) -> Self {
        Self::new(format!("{} [{err}]", case.into()), f64::NAN, f64::NAN, Check::Finite)
    }

    fn assemble(case: String, measured: f64, reference: f64, diff: f64, check: Check) -> Self {
        let (abs_error, pass) = match check {
            Check::Relative(tol) => (diff, diff <= tol * reference.abs()),
            Check::Absolute(tol) => (diff, diff <= tol),
            Check::AtMost => ((measured - reference).max(0.0), measured <= reference),
            Check::AtLeast => ((reference - measured).max(0.0), measured >= reference),
            Check::Finite => (0.0, measured.is_finite()),
        };
        let rel_error = if reference != 0.0 { abs_error / reference.abs() } else { abs_error };
        Self {
            case,
            measured,
            reference,
            abs_error,
            rel_error,
            check,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    /// `# schema=1`, then `experiment, case, measured, reference, abs_error, rel_error, check, tolerance, pass`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema=1")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "experiment",
            "case",
            "measured",
            "reference",
            "abs_error",
            "rel_error",
            "check",
            "tolerance",
            "pass",
        ])?;
        for r in &self.rows {
            w.write_record([
                self.experiment.name().to_string(),
                r.case.clone(),
                format!("{:e}", r.measured),
                format!("{:e}", r.reference),
                format!("{:e}", r.abs_error),
                format!("{:e}", r.rel_error),
                r.check.label().to_string(),
                format!("{:e}", r.check.tolerance()),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per failing row plus a verdict line.
    pub fn summary(&self) -> String {
        let failed: Vec<&ReportRow> = self.rows.iter().filter(|r| !r.pass).collect();
        let mut s = String::new();
        for r in &failed {
            s.push_str(&format!(
                "  FAIL {}: measured {:e}, reference {:e} ({})\n",
                r.case,
                r.measured,
                r.reference,
                r.check.label()
            ));
        }
        s.push_str(&format!(
            "{}: {} / {} rows pass -> {}\n",
            self.experiment,
            self.rows.len() - failed.len(),
            self.rows.len(),
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        s
    }
}

/// `q` with `2/q + Q/p = Q/2`; needs `p > 2`.
pub fn admissible_q(p: f64, homogeneous_dim: usize) -> Result<f64> {
    let q_dim = homogeneous_dim as f64;
    let gap = q_dim / 2.0 - if p.is_infinite() { 0.0 } else { q_dim / p };
    if !(p > 2.0) || gap <= 0.0 {
        return Err(Error::InvalidParameter(format!("no admissible q for p = {p}")));
    }
    Ok(2.0 / gap)
}

/// Validates `config` and runs its experiment.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let rows = match config.experiment {
        Experiment::HeatEquiv => heat_equiv(config)?,
        Experiment::Mehler => mehler(config)?,
        Experiment::KernelConsistency => kernel_consistency(config)?,
        Experiment::Dispersion => dispersion(config)?,
        Experiment::StrichartzWindow => strichartz_window(config)?,
        Experiment::Concentrate => concentrate(config)?,
        Experiment::RestrictedSweep => restricted_sweep(config)?,
        Experiment::Mkappa => mkappa(config)?,
    };
    Ok(ExperimentReport {
        experiment: config.experiment,
        rows,
    })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn rows_or_failure(case: String, res: Result<Vec<ReportRow>>) -> Vec<ReportRow> {
    res.unwrap_or_else(|e| vec![ReportRow::failed(case, &e)])
}

/// Series against integral formula for the heat kernel on a 5×5×|t| grid. About a second.
fn heat_equiv(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let tol = cfg.tol.unwrap_or(1e-7);
    let times = cfg.times.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    if times.iter().any(|t| *t <= 0.0) {
        return Err(Error::Config("heat times must be positive".into()));
    }
    let mut cases = Vec::new();
    for &t in &times {
        for rho in linspace(0.0, 4.0, 5) {
            for s in linspace(-4.0, 4.0, 5) {
                cases.push((t, rho, s));
            }
        }
    }
    let d = cfg.d;
    Ok(cases
        .par_iter()
        .map(|&(t, rho, s)| {
            let case = format!("t={t} rho={rho} s={s}");
            let res = KernelQuery::real(d, t, rho, s)
                .and_then(|q| q.with_tol(1e-13))
                .and_then(|q| Ok((heat_kernel_series(&q, default_series_budget())?, heat_kernel_gaveau(&q)?)));
            match res {
                Ok((series, integral)) => ReportRow::complex(case, series.value, integral.value, Check::Relative(tol)),
                Err(e) => ReportRow::failed(case, &e),
            }
        })
        .collect())
}

/// Mehler sums against closed forms at seeded random arguments. Under a second.
fn mehler(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let budget = TruncationBudget::new(4096, 1e-13)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for _ in 0..20 {
        let (x, xt, r) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-0.6..0.6));
        let case = format!("mehler x={x:.4} xt={xt:.4} r={r:.4}");
        match mehler_sum(x, xt, r, budget).and_then(|s| Ok((s.value, mehler_closed(x, xt, r)?))) {
            Ok((sum, closed)) => rows.push(ReportRow::new(case, sum, closed, Check::Absolute(tol))),
            Err(e) => rows.push(ReportRow::failed(case, &e)),
        }
    }
    for _ in 0..20 {
        let lambda: f64 = rng.gen_range(0.1..3.0);
        let t = rng.gen_range(0.1..2.0) / lambda;
        let (y, z) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let case = format!("heat lambda={lambda:.4} t={t:.4} y={y:.4} z={z:.4}");
        match mehler_heat_sum(lambda, t, y, z, budget).and_then(|s| Ok((s.value, mehler_heat_closed(lambda, t, y, z)?)))
        {
            Ok((sum, closed)) => rows.push(ReportRow::new(case, sum, closed, Check::Absolute(tol))),
            Err(e) => rows.push(ReportRow::failed(case, &e)),
        }
    }
    Ok(rows)
}

/// Random point of `B(0, radius)` in `H^1`, by rejection from the bounding box.
fn point_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> GroupPoint {
    loop {
        let w = GroupPoint::d1(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius * radius..radius * radius),
        );
        if w.koranyi_norm() < radius {
            return w;
        }
    }
}

/// Spectral against convolution evolution of a bump, the complex-time limit,
/// and the restricted route in the band beyond the strip. About 30 s; `--fast` about 10 s.
fn kernel_consistency(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let tol = cfg.tol.unwrap_or(1e-2);
    let (d, kappa, r0) = (cfg.d, cfg.kappa, cfg.r0);
    let big_t = strip_time(kappa, r0, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let times: Vec<f64> = match &cfg.times {
        Some(ts) => ts.clone(),
        None => (0..10)
            .map(|_| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * big_t * rng.gen_range(1.5..8.0)
            })
            .collect(),
    };
    if let Some(t) = times.iter().find(|t| t.abs() <= big_t) {
        return Err(Error::Config(format!("|t| = {} must exceed T = {big_t}", t.abs())));
    }
    let points: Vec<(f64, GroupPoint)> = times
        .iter()
        .map(|&t| (t, point_in_ball(&mut rng, kappa * t.abs().sqrt())))
        .collect();

    let u0 = bump_data(r0, d)?;
    let evolver = SpectralEvolver::new(&u0, &SpectralSetup::fine());
    let grid = SampledData::from_radial(&u0, cfg.grid_cells(48))?;
    let t_min = times.iter().fold(f64::INFINITY, |m, t| m.min(t.abs()));
    let spacing = if cfg.fast { 0.04 } else { 0.02 };
    let table = kernel_table_for(d, r0, kappa, t_min, spacing, 1e-10)?;
    let mut rows: Vec<ReportRow> = points
        .iter()
        .map(|(t, w)| {
            let case = format!("convolution t={t:.4} w=({:.4},{:.4},{:.4})", w.y[0], w.eta[0], w.s);
            let spectral = evolver.evolve(*t, &[(w.horizontal_norm_sq(), w.s)])[0];
            match evolve_by_convolution(&grid, *t, w, KernelSource::Table(&table)) {
                Ok(conv) => ReportRow::complex(case, spectral, conv, Check::Relative(tol)),
                Err(e) => ReportRow::failed(case, &e),
            }
        })
        .collect();

    // Complex time ε − it approaching the real axis.
    let eps = [1e-2, 1e-3, 1e-4];
    for _ in 0..5 {
        let t = rng.gen_range(0.5..3.0);
        let rho = rng.gen_range(0.0..2.0);
        let s = rng.gen_range(-0.8..0.8) * 4.0 * d as f64 * t;
        let case = format!("complex-time t={t:.4} rho={rho:.4} s={s:.4}");
        let diffs = (|| -> Result<Vec<f64>> {
            let st = schrodinger_kernel(&KernelQuery::real(d, t, rho, s)?.with_tol(1e-12)?)?.value;
            eps.iter()
                .map(|&e| {
                    let q = KernelQuery::complex(d, Complex64::new(e, -t), rho, s)?.with_tol(1e-12)?;
                    Ok((kernel_complex_time(&q)?.value - st).norm())
                })
                .collect()
        })();
        match diffs {
            Ok(v) => {
                for k in 1..eps.len() {
                    rows.push(ReportRow::new(
                        format!("{case} eps={:e} vs {:e}", eps[k], eps[k - 1]),
                        v[k],
                        v[k - 1],
                        Check::AtMost,
                    ));
                }
                rows.push(ReportRow::new(
                    format!("{case} order"),
                    (v[1] / v[2]).log10(),
                    0.9,
                    Check::AtLeast,
                ));
            }
            Err(e) => rows.push(ReportRow::failed(case, &e)),
        }
    }

    // Levels ≥ ell evolved spectrally against the bump convolved with the restricted kernel,
    // at points in the band 4d|t| < |s| < 4(2ℓ+d)|t| where the full kernel does not exist.
    let ell = cfg.ell.unwrap_or(1).max(1);
    let upper = SpectralEvolver::from_coefficients(project_from_level(&evolver.coefficients, ell)?);
    let coarse = SampledData::from_radial(&u0, cfg.grid_cells(24))?;
    for (t, frac) in [(1.0, 0.25), (-1.5, 0.5)] {
        let s = (4.0 * d as f64 + frac * 8.0 * ell as f64) * f64::abs(t);
        let w = GroupPoint::d1(0.2, -0.1, s);
        let case = format!("restricted ell={ell} t={t} s={s}");
        let spectral = upper.evolve(t, &[(w.horizontal_norm_sq(), s)])[0];
        match evolve_by_convolution(&coarse, t, &w, KernelSource::Restricted { ell, tol: 1e-7 }) {
            Ok(conv) => rows.push(ReportRow::complex(case, spectral, conv, Check::Relative(tol))),
            Err(e) => rows.push(ReportRow::failed(case, &e)),
        }
    }
    Ok(rows)
}

/// Bump of radius `r0`, its sampled grid, and the solution at time `t` as a function of `(ρ, s)`.
struct BumpEvolution {
    grid: SampledData,
    table: crate::kernels::KernelTable,
}

impl BumpEvolution {
    fn new(cfg: &ExperimentConfig, t_min: f64) -> Result<(RadialFunction, Self)> {
        let u0 = bump_data(cfg.r0, cfg.d)?;
        let grid = SampledData::from_radial(&u0, cfg.grid_cells(48))?;
        let spacing = if cfg.fast { 0.04 } else { 0.02 };
        let table = kernel_table_for(cfg.d, cfg.r0, cfg.kappa, t_min, spacing, 1e-10)?;
        Ok((u0, Self { grid, table }))
    }

    fn at(&self, t: f64, rho: f64, s: f64) -> Complex64 {
        let w = GroupPoint::d1(rho.sqrt(), 0.0, s);
        // The table covers the ball for every t ≥ t_min, so a failure here is a bug.
        evolve_by_convolution(&self.grid, t, &w, KernelSource::Table(&self.table)).expect("query inside the strip")
    }

    fn sup_on_ball(&self, t: f64, radius: f64) -> Result<f64> {
        radial_sup_on_ball(|rho, s| self.at(t, rho, s), radius, 12, 13)
    }

    fn lp_on_ball(&self, t: f64, p: f64, radius: f64) -> Result<f64> {
        radial_lp_norm_on_ball(|rho, s| self.at(t, rho, s), p, radius, 1, 12, 12)
    }
}

fn check_times_beyond(times: &[f64], big_t: f64) -> Result<()> {
    match times.iter().find(|t| **t <= big_t) {
        Some(t) => Err(Error::Config(format!("times must be positive and exceed T = {big_t}, got {t}"))),
        None => Ok(()),
    }
}

/// Local dispersive bound at `p = ∞` and `p = 4`, and mass conservation at `p = 2`. About 30 s.
fn dispersion(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let (d, kappa) = (cfg.d, cfg.kappa);
    let times = cfg.times.clone().unwrap_or_else(|| vec![4.0, 8.0, 16.0, 32.0]);
    check_times_beyond(&times, strip_time(kappa, cfg.r0, d)?)?;
    let m = dispersion_constant(kappa, d, 1e-12)?;
    let half_q = (homogeneous_dimension(d) / 2) as f64;
    let t_min = times.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let (u0, evo) = BumpEvolution::new(cfg, t_min)?;
    let l1 = evo.grid.l1_norm();
    let l43 = radial_lp_norm_on_ball(|r, s| u0.eval(r, s), 4.0 / 3.0, cfg.r0, d, 48, 48)?;

    let mut rows = Vec::new();
    let mut sups = Vec::new();
    for &t in &times {
        let radius = kappa * t.sqrt();
        let decay = m / t.powf(half_q);
        let sup = evo.sup_on_ball(t, radius)?;
        sups.push(sup);
        rows.push(ReportRow::new(format!("p=inf t={t}"), sup, decay * l1, Check::AtMost));
        let l4 = evo.lp_on_ball(t, 4.0, radius)?;
        rows.push(ReportRow::new(format!("p=4 t={t}"), l4, decay.sqrt() * l43, Check::AtMost));
    }
    let fit = fit_power_law(&times, &sups)?;
    rows.push(ReportRow::new("p=inf decay exponent", fit.exponent, -half_q, Check::Absolute(0.15)));

    let setup = SpectralSetup::standard();
    let c = analyze_with(&u0, setup.ell_max, &setup.grid, setup.quad);
    let energy = |c: &SpectralCoefficients| -> f64 {
        let n = c.grid().len();
        let w = c.grid().weights();
        let nodes = c.grid().nodes();
        c.values()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let ell = k / n;
                let mult = crate::special::binomial(ell + d - 1, d - 1);
                v.norm_sqr() * w[k % n] * nodes[k % n].abs().powi(d as i32) * mult
            })
            .sum()
    };
    let e0 = energy(&c);
    for &t in &times {
        rows.push(ReportRow::new(
            format!("p=2 spectral mass t={t}"),
            energy(&evolve_schrodinger(&c, t)),
            e0,
            Check::Relative(1e-14),
        ));
    }
    Ok(rows)
}

/// Log-log slopes of ball norms over `[2T, 64T]` and the Strichartz integral over the window. About 40 s.
fn strichartz_window(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let (d, kappa) = (cfg.d, cfg.kappa);
    let tol = cfg.tol.unwrap_or(0.1);
    let big_t = strip_time(kappa, cfg.r0, d)?;
    let mut times = cfg
        .times
        .clone()
        .unwrap_or_else(|| (1..=6).map(|k| big_t * f64::from(1 << k)).collect());
    times.sort_by(f64::total_cmp);
    check_times_beyond(&times, big_t)?;
    let q_dim = homogeneous_dimension(d) as f64;
    let (_, evo) = BumpEvolution::new(cfg, times[0])?;

    let mut rows = Vec::new();
    for p in [4.0, f64::INFINITY] {
        let norms: Vec<f64> = times
            .iter()
            .map(|&t| {
                let radius = kappa * t.sqrt();
                if p.is_infinite() {
                    evo.sup_on_ball(t, radius)
                } else {
                    evo.lp_on_ball(t, p, radius)
                }
            })
            .collect::<Result<_>>()?;
        let target = -(q_dim / 2.0 - if p.is_infinite() { 0.0 } else { q_dim / p });
        let fit = fit_power_law(&times, &norms)?;
        rows.push(ReportRow::new(format!("p={p} slope"), fit.exponent, target, Check::Absolute(tol)));
        // ∫ ‖u(t)‖^q dt = ∫ ‖u(t)‖^q t d(ln t), trapezoid in ln t.
        let q = admissible_q(p, homogeneous_dimension(d))?;
        let integral: f64 = times
            .windows(2)
            .zip(norms.windows(2))
            .map(|(t, n)| 0.5 * (t[1] / t[0]).ln() * (n[0].powf(q) * t[0] + n[1].powf(q) * t[1]))
            .sum();
        rows.push(ReportRow::new(format!("p={p} q={q} window integral"), integral, 0.0, Check::Finite));
    }
    Ok(rows)
}

/// Hyperplane equalities for line data on levels `0..=2` and decay off the hyperplane. Under a second.
fn concentrate(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let levels: Vec<usize> = cfg.ell.map_or_else(|| vec![0, 1, 2], |l| vec![l]);
    let times = cfg.times.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]);
    let g = SmoothBump::default();
    let mut rows = Vec::new();
    for &ell in &levels {
        for sign in [1.0, -1.0] {
            let data = LineData::new(ell, g, sign, cfg.d)?;
            for &t in &times {
                let case = format!("ell={ell} sign={sign} t={t} hyperplane");
                match concentration_probe(&data, t) {
                    Ok(p) => rows.push(ReportRow::complex(
                        format!("{case} s={}", p.hyperplane_s),
                        p.at_hyperplane,
                        p.initial_at_origin,
                        Check::Relative(tol),
                    )),
                    Err(e) => rows.push(ReportRow::failed(case, &e)),
                }
            }
            // Same equality through the spectral multiplier and synthesis.
            let grid = LambdaGrid::uniform(g.lo, g.hi, 1 << 16, sign)?;
            let coefficients = data.coefficients(ell, grid)?;
            let origin = line_solution(&data, 0.0, 0.0, 0.0)?;
            for &t in &times {
                let s = data.hyperplane(t);
                let spectral = synthesize(&evolve_schrodinger(&coefficients, t), 0.0, s);
                rows.push(ReportRow::complex(
                    format!("ell={ell} sign={sign} t={t} spectral hyperplane s={s}"),
                    spectral,
                    origin,
                    Check::Relative(tol),
                ));
            }
            // Off the hyperplane by δ|t| with δ = 1.
            let far = [4.0, 8.0, 16.0, 32.0];
            let case = format!("ell={ell} sign={sign} off-hyperplane decay exponent");
            rows.extend(rows_or_failure(
                case.clone(),
                (|| {
                    let values: Vec<f64> = far
                        .iter()
                        .map(|&t| Ok(line_solution(&data, t, 0.0, data.hyperplane(t) + t)?.norm()))
                        .collect::<Result<_>>()?;
                    let fit = fit_power_law(&far, &values)?;
                    Ok(vec![ReportRow::new(case, -fit.exponent, 2.0, Check::AtLeast)])
                })(),
            ));
        }
    }
    Ok(rows)
}

/// `|t|^{Q/2} |S_t^(ℓ)|` at fixed `(ρ, s/t)` over `t ∈ {1, 2, 4, 8}`, finite band values,
/// and the level-zero identity. A few seconds.
fn restricted_sweep(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let d = cfg.d;
    let tol = cfg.tol.unwrap_or(0.05);
    let levels: Vec<usize> = cfg.ell.map_or_else(|| vec![1, 2], |l| vec![l]);
    let times = cfg.times.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]);
    let k2 = cfg.kappa * cfg.kappa;
    let half_q = (homogeneous_dimension(d) / 2) as i32;
    let mut rows = Vec::new();
    for &ell in &levels {
        for &(rho, frac) in &[(0.0, 0.0), (0.1, 0.5), (0.25, 1.0), (0.25, -0.5)] {
            let sigma = frac * k2;
            let case = format!("ell={ell} rho={rho} s/t={sigma}");
            let scaled: Result<Vec<f64>> = times
                .par_iter()
                .map(|&t| {
                    let q = KernelQuery::real(d, t, rho, sigma * t)?.with_tol(1e-9)?;
                    Ok(t.abs().powi(half_q) * restricted_kernel(ell, &q)?.value.norm())
                })
                .collect();
            match scaled {
                Ok(v) => {
                    let hi = v.iter().copied().fold(0.0, f64::max);
                    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                    rows.push(ReportRow::new(format!("{case} variation"), (hi - lo) / hi, tol, Check::AtMost));
                }
                Err(e) => rows.push(ReportRow::failed(case, &e)),
            }
        }
        for &t in &times {
            let s = (4.0 * d as f64 + 4.0 * ell as f64) * t.abs();
            let case = format!("ell={ell} t={t} band s={s}");
            match KernelQuery::real(d, t, 0.2, s).and_then(|q| restricted_kernel(ell, &q)) {
                Ok(v) => rows.push(ReportRow::new(case, v.value.norm(), 0.0, Check::Finite)),
                Err(e) => rows.push(ReportRow::failed(case, &e)),
            }
        }
    }
    for &(rho, s) in &[(0.0, 0.0), (0.7, 1.5), (2.0, -3.0)] {
        let case = format!("ell=0 identity rho={rho} s={s}");
        match KernelQuery::real(d, 1.0, rho, s).and_then(|q| Ok((restricted_kernel(0, &q)?, schrodinger_kernel(&q)?))) {
            Ok((a, b)) => rows.push(ReportRow::complex(case, a.value, b.value, Check::Absolute(0.0))),
            Err(e) => rows.push(ReportRow::failed(case, &e)),
        }
    }
    Ok(rows)
}

/// `M_κ` over `κ ∈ [0, √(4d))`: finiteness, monotonicity, growth at the endpoint
/// and divergence there. Under a second.
fn mkappa(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let d = cfg.d;
    let tol = cfg.tol.unwrap_or(1e-10);
    let edge2 = 4.0 * d as f64;
    let kappas: Vec<f64> = (0..8).map(|k| edge2.sqrt() * k as f64 / 8.0).collect();
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for &k in &kappas {
        match dispersion_constant(k, d, tol) {
            Ok(v) => {
                rows.push(ReportRow::new(format!("kappa={k:.4}"), v, 0.0, Check::Finite));
                if let Some(p) = prev {
                    rows.push(ReportRow::new(format!("kappa={k:.4} monotone"), v, p, Check::AtLeast));
                }
                prev = Some(v);
            }
            Err(e) => rows.push(ReportRow::failed(format!("kappa={k:.4}"), &e)),
        }
        match dispersion_constant_signed(k, d, tol) {
            Ok(v) => rows.push(ReportRow::new(format!("kappa={k:.4} signed-tau variant"), v, 0.0, Check::Finite)),
            Err(e) => rows.push(ReportRow::failed(format!("kappa={k:.4} signed-tau variant"), &e)),
        }
    }
    let near = (|| Ok((dispersion_constant((edge2 - 0.1).sqrt(), d, tol)?, dispersion_constant((edge2 - 0.01).sqrt(), d, tol)?)))();
    match near {
        Ok((a, b)) => rows.push(ReportRow::new("growth kappa^2 = 4d-0.01 over 4d-0.1", b / a, 10.0, Check::AtLeast)),
        Err(e) => rows.push(ReportRow::failed("growth near the endpoint", &e)),
    }
    let diverges = matches!(dispersion_constant(edge2.sqrt(), d, tol), Err(Error::Divergent { .. }));
    rows.push(ReportRow::new(
        "kappa^2 = 4d reports divergence",
        f64::from(u8::from(diverges)),
        1.0,
        Check::AtLeast,
    ));
    Ok(rows)
}
