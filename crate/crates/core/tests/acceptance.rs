//! Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.
//!
//! Runs without the libtest harness so the verdict lines are always printed.
//! The process fails if any criterion fails, except those listed in
//! `DOCUMENTED_FAILURES`, whose lines still read FAIL.

use hlab::fourier::{
    analyze_with, evolve_schrodinger, plancherel_constant, synthesize, LambdaGrid, SpectralCoefficients,
};
use hlab::group::{homogeneous_dimension, GroupPoint};
use hlab::kernels::{
    default_series_budget, dispersion_constant, heat_kernel_gaveau, heat_kernel_series, kernel_complex_time,
    restricted_kernel, schrodinger_kernel, strip_time, KernelQuery,
};
use hlab::quadrature::{ball_volume, radial_lp_norm_on_ball, radial_sup_on_ball};
use hlab::solutions::{
    bump_data, concentration_probe, evolve_by_convolution, fit_power_law, kernel_table_for, line_solution,
    KernelSource, LineData, SampledData, SmoothBump, SpectralEvolver, SpectralSetup,
};
use hlab::special::{binomial, mehler_closed, mehler_heat_closed, mehler_heat_sum, mehler_sum, TruncationBudget};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

/// Criteria known to fail, with the reason. See the README.
const DOCUMENTED_FAILURES: &[(usize, &str)] = &[(
    8,
    "the L^4 ball norm decays like t^-1.5: the ball grows as sqrt(t), so the sup-norm rate -2 \
     plus a volume factor t^(Q/2p) gives -Q/2 + Q/(2p), not -(Q/2 - Q/p)",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn heat_equivalence() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        for i in 0..5 {
            for j in 0..5 {
                let (rho, s) = (i as f64, -4.0 + 2.0 * j as f64);
                let q = KernelQuery::real(1, t, rho, s).unwrap().with_tol(1e-13).unwrap();
                let series = heat_kernel_series(&q, default_series_budget()).unwrap().value;
                let integral = heat_kernel_gaveau(&q).unwrap().value;
                worst = worst.max((series - integral).norm() / integral.norm());
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-7 && elapsed < Duration::from_secs(60),
        format!("max rel diff {worst:.2e} over 75 points in {elapsed:.1?}"),
    )
}

fn mehler_suite() -> Verdict {
    let start = Instant::now();
    let budget = TruncationBudget::new(4096, 1e-13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (x, xt, r) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-0.6..0.6));
        let diff = mehler_sum(x, xt, r, budget).unwrap().value - mehler_closed(x, xt, r).unwrap();
        worst = worst.max(diff.abs());
    }
    let mut worst_heat: f64 = 0.0;
    for _ in 0..20 {
        let lambda: f64 = rng.gen_range(0.1..3.0);
        let t = rng.gen_range(0.1..2.0) / lambda;
        let (y, z) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let diff =
            mehler_heat_sum(lambda, t, y, z, budget).unwrap().value - mehler_heat_closed(lambda, t, y, z).unwrap();
        worst_heat = worst_heat.max(diff.abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-8 && worst_heat < 1e-8 && elapsed < Duration::from_secs(10),
        format!("Mehler max diff {worst:.2e}, heat sum max diff {worst_heat:.2e}, {elapsed:.1?}"),
    )
}

fn random_point_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> GroupPoint {
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

fn kernel_consistency() -> Verdict {
    let start = Instant::now();
    let (kappa, r0) = (1.0, 1.0);
    let big_t = strip_time(kappa, r0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<(f64, GroupPoint)> = (0..10)
        .map(|k| {
            let t = if k % 2 == 0 { 1.0 } else { -1.0 } * big_t * rng.gen_range(1.5..8.0);
            (t, random_point_in_ball(&mut rng, kappa * f64::abs(t).sqrt()))
        })
        .collect();
    let u0 = bump_data(r0, 1).unwrap();
    let evolver = SpectralEvolver::new(&u0, &SpectralSetup::fine());
    let grid = SampledData::from_radial(&u0, 48).unwrap();
    let t_min = cases.iter().fold(f64::INFINITY, |m, (t, _)| m.min(t.abs()));
    let table = kernel_table_for(1, r0, kappa, t_min, 0.02, 1e-10).unwrap();
    let mut worst: f64 = 0.0;
    for (t, w) in &cases {
        let spectral = evolver.evolve(*t, &[(w.horizontal_norm_sq(), w.s)])[0];
        let conv = evolve_by_convolution(&grid, *t, w, KernelSource::Table(&table)).unwrap();
        worst = worst.max((spectral - conv).norm() / conv.norm());
    }

    let mut monotone = true;
    for _ in 0..5 {
        let t = rng.gen_range(0.5..3.0);
        let rho = rng.gen_range(0.0..2.0);
        let s = rng.gen_range(-0.8..0.8) * 4.0 * t;
        let st = schrodinger_kernel(&KernelQuery::real(1, t, rho, s).unwrap().with_tol(1e-12).unwrap())
            .unwrap()
            .value;
        let diffs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| {
                let q = KernelQuery::complex(1, Complex64::new(e, -t), rho, s).unwrap().with_tol(1e-12).unwrap();
                (kernel_complex_time(&q).unwrap().value - st).norm()
            })
            .collect();
        monotone &= diffs.windows(2).all(|p| p[1] < p[0]);
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-2 && monotone && elapsed < Duration::from_secs(600),
        format!("spectral vs convolution max rel {worst:.2e}; complex-time limit monotone: {monotone}; {elapsed:.1?}"),
    )
}

/// `|u(t)|` of the unit bump on `B(0, √t)`, by table convolution on a 48³ grid.
struct BumpFlow {
    grid: SampledData,
    table: hlab::kernels::KernelTable,
}

impl BumpFlow {
    fn new(t_min: f64) -> Self {
        let u0 = bump_data(1.0, 1).unwrap();
        Self {
            grid: SampledData::from_radial(&u0, 48).unwrap(),
            table: kernel_table_for(1, 1.0, 1.0, t_min, 0.02, 1e-10).unwrap(),
        }
    }

    fn at(&self, t: f64, rho: f64, s: f64) -> Complex64 {
        let w = GroupPoint::d1(rho.sqrt(), 0.0, s);
        evolve_by_convolution(&self.grid, t, &w, KernelSource::Table(&self.table)).unwrap()
    }

    fn sup(&self, t: f64) -> f64 {
        radial_sup_on_ball(|r, s| self.at(t, r, s), t.sqrt(), 12, 13).unwrap()
    }

    fn l4(&self, t: f64) -> f64 {
        radial_lp_norm_on_ball(|r, s| self.at(t, r, s), 4.0, t.sqrt(), 1, 12, 12).unwrap()
    }
}

fn dispersive_bound() -> Verdict {
    let times = [4.0, 8.0, 16.0, 32.0];
    let m = dispersion_constant(1.0, 1, 1e-12).unwrap();
    let flow = BumpFlow::new(times[0]);
    let l1 = flow.grid.l1_norm();
    let sups: Vec<f64> = times.iter().map(|&t| flow.sup(t)).collect();
    let bounded = times.iter().zip(&sups).all(|(t, s)| *s <= m / (t * t) * l1);
    let worst_ratio = times
        .iter()
        .zip(&sups)
        .map(|(t, s)| s / (m / (t * t) * l1))
        .fold(0.0, f64::max);
    let fit = fit_power_law(&times, &sups).unwrap();
    verdict(
        bounded && (fit.exponent + 2.0).abs() <= 0.15,
        format!("max sup/bound {worst_ratio:.3}; fitted exponent {:.4}", fit.exponent),
    )
}

fn strip_sharpness() -> Verdict {
    let g = SmoothBump::default();
    let mut worst: f64 = 0.0;
    let mut min_exponent = f64::INFINITY;
    for ell in 0..=2 {
        for sign in [1.0, -1.0] {
            let data = LineData::new(ell, g, sign, 1).unwrap();
            for t in [1.0, 2.0, 4.0, 8.0] {
                let p = concentration_probe(&data, t).unwrap();
                worst = worst.max((p.at_hyperplane - p.initial_at_origin).norm() / p.initial_at_origin.norm());
            }
            let far = [4.0, 8.0, 16.0, 32.0];
            let values: Vec<f64> = far
                .iter()
                .map(|&t| line_solution(&data, t, 0.0, data.hyperplane(t) + t).unwrap().norm())
                .collect();
            min_exponent = min_exponent.min(-fit_power_law(&far, &values).unwrap().exponent);
        }
    }
    verdict(
        worst < 1e-8 && min_exponent >= 2.0,
        format!("hyperplane max rel diff {worst:.2e}; min off-hyperplane decay exponent {min_exponent:.3}"),
    )
}

fn transport() -> Verdict {
    let data = LineData::new(0, SmoothBump::default(), 1.0, 1).unwrap();
    let grid = LambdaGrid::uniform(1.0, 2.0, 1 << 14, 1.0).unwrap();
    let coefficients = data.coefficients(0, grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (rho, s, t) = (rng.gen_range(0.0..2.0), rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0));
        let spectral = synthesize(&evolve_schrodinger(&coefficients, t), rho, s);
        let translate = line_solution(&data, 0.0, rho, s + data.speed() * t).unwrap();
        worst = worst.max((spectral - translate).norm());
    }
    verdict(worst < 1e-6, format!("max |spectral - translate| {worst:.2e} at 20 points"))
}

fn restricted_kernels() -> Verdict {
    let mut identical = true;
    for (t, rho, s) in [(1.0, 0.0, 0.0), (-2.0, 0.7, 3.0), (0.5, 2.0, -1.5)] {
        let q = KernelQuery::real(1, t, rho, s).unwrap();
        identical &= restricted_kernel(0, &q).unwrap().value == schrodinger_kernel(&q).unwrap().value;
    }
    let mut worst: f64 = 0.0;
    let mut band_finite = true;
    for ell in [1usize, 2] {
        for (rho, sigma) in [(0.0, 0.0), (0.1, 0.5), (0.25, 1.0), (0.25, -0.5)] {
            let v: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|&t: &f64| {
                    let q = KernelQuery::real(1, t, rho, sigma * t).unwrap().with_tol(1e-9).unwrap();
                    t * t * restricted_kernel(ell, &q).unwrap().value.norm()
                })
                .collect();
            let hi = v.iter().copied().fold(0.0, f64::max);
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            worst = worst.max((hi - lo) / hi);
        }
        for t in [1.0, -2.0, 4.0] {
            let s = (4.0 + 4.0 * ell as f64) * f64::abs(t);
            let q = KernelQuery::real(1, t, 0.2, s).unwrap();
            band_finite &= restricted_kernel(ell, &q).is_ok_and(|v| v.value.norm().is_finite());
        }
    }
    verdict(
        identical && worst < 0.05 && band_finite,
        format!("level 0 identical: {identical}; max variation {worst:.2e}; band values finite: {band_finite}"),
    )
}

fn strichartz_window() -> Verdict {
    let big_t = strip_time(1.0, 1.0, 1).unwrap();
    let times: Vec<f64> = (1..=6).map(|k| big_t * f64::from(1 << k)).collect();
    let flow = BumpFlow::new(times[0]);
    let sups: Vec<f64> = times.iter().map(|&t| flow.sup(t)).collect();
    let l4s: Vec<f64> = times.iter().map(|&t| flow.l4(t)).collect();
    let q_dim = homogeneous_dimension(1) as f64;
    let slope_inf = fit_power_law(&times, &sups).unwrap().exponent;
    let slope_4 = fit_power_law(&times, &l4s).unwrap().exponent;
    let (target_inf, target_4) = (-q_dim / 2.0, -(q_dim / 2.0 - q_dim / 4.0));
    verdict(
        (slope_inf - target_inf).abs() <= 0.1 && (slope_4 - target_4).abs() <= 0.1,
        format!(
            "p=inf slope {slope_inf:.4} (target {target_inf}); p=4 slope {slope_4:.4} (target {target_4}); t in [{}, {}]",
            times[0],
            times[times.len() - 1]
        ),
    )
}

fn spectral_energy(c: &SpectralCoefficients) -> f64 {
    let n = c.grid().len();
    let (nodes, weights) = (c.grid().nodes(), c.grid().weights());
    c.values()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let mult = binomial(k / n + c.dim() - 1, c.dim() - 1);
            v.norm_sqr() * weights[k % n] * nodes[k % n].abs().powi(c.dim() as i32) * mult
        })
        .sum()
}

fn fourier_infrastructure() -> Verdict {
    let u0 = bump_data(1.0, 1).unwrap();
    let setup = SpectralSetup::fine();
    let c = analyze_with(&u0, setup.ell_max, &setup.grid, setup.quad);
    let ratio = c.weighted_norm_sq() / u0.l2_norm_sq(128, 128) / plancherel_constant(1);
    let evolver = SpectralEvolver::from_coefficients(c.clone());
    let points = [(0.0, 0.0), (0.3, 0.2), (0.5, -0.5), (0.1, 0.8), (0.8, 0.1)];
    let back = evolver.evolve(0.0, &points);
    let round_trip = points
        .iter()
        .zip(&back)
        .map(|(&(r, s), v)| (v - u0.eval(r, s)).norm())
        .fold(0.0, f64::max);
    let e0 = spectral_energy(&c);
    let mass = [0.5, 3.0, -7.0, 40.0]
        .iter()
        .map(|&t| (spectral_energy(&evolve_schrodinger(&c, t)) - e0).abs() / e0)
        .fold(0.0, f64::max);
    verdict(
        (ratio - 1.0).abs() < 5e-3 && round_trip < 1e-3 && mass < 1e-14,
        format!(
            "Plancherel ratio / constant {ratio:.5}; round trip max err {round_trip:.2e}; mass drift {mass:.1e}"
        ),
    )
}

fn group_geometry() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut point = |d: usize| {
        GroupPoint::new(
            (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            rng.gen_range(-4.0..4.0),
        )
        .unwrap()
    };
    let close = |a: &GroupPoint, b: &GroupPoint| {
        a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
    };
    let mut failures = 0;
    for k in 0..1000 {
        let d = 1 + k % 3;
        let (a, b, c) = (point(d), point(d), point(d));
        let r = 0.1 + 3.0 * (k as f64 / 1000.0);
        let assoc = close(&a.product(&b).unwrap().product(&c).unwrap(), &a.product(&b.product(&c).unwrap()).unwrap());
        let inv = close(&a.product(&a.inverse()).unwrap(), &GroupPoint::identity(d));
        let homog = (a.dilate(r).unwrap().koranyi_norm() - r * a.koranyi_norm()).abs() <= 1e-12 * r * a.koranyi_norm();
        let dist = a.distance(&b).unwrap();
        let invariant = (c.product(&a).unwrap().distance(&c.product(&b).unwrap()).unwrap() - dist).abs() <= 1e-12 * (1.0 + dist);
        let triangle = a.distance(&c).unwrap() <= dist + b.distance(&c).unwrap() + 1e-12;
        if !(assoc && inv && homog && invariant && triangle) {
            failures += 1;
        }
    }
    // Monte Carlo volume of B(0, R) in H^1 against R^Q scaling.
    let mut worst_volume: f64 = 0.0;
    for radius in [0.5, 1.0, 2.0] {
        let n = 200_000;
        let (h, v) = (radius, radius * radius);
        let inside = (0..n)
            .filter(|_| {
                GroupPoint::d1(rng.gen_range(-h..h), rng.gen_range(-h..h), rng.gen_range(-v..v)).koranyi_norm() < radius
            })
            .count();
        let estimate = inside as f64 / n as f64 * (2.0 * h) * (2.0 * h) * (2.0 * v);
        let scaled = ball_volume(1.0, 1) * radius.powi(homogeneous_dimension(1) as i32);
        worst_volume = worst_volume.max((estimate - scaled).abs() / scaled);
    }
    verdict(
        failures == 0 && worst_volume < 0.01,
        format!("{failures} of 1000 random cases failed; ball volume vs R^Q max rel dev {worst_volume:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("heat-kernel equivalence", heat_equivalence),
        ("Mehler suite", mehler_suite),
        ("kernel consistency", kernel_consistency),
        ("dispersive bound", dispersive_bound),
        ("sharpness of the strip", strip_sharpness),
        ("transport counterexample", transport),
        ("restricted kernels", restricted_kernels),
        ("Strichartz window", strichartz_window),
        ("Fourier infrastructure", fourier_infrastructure),
        ("group/geometry suite", group_geometry),
    ];
    let mut unexpected = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let v = check();
        let documented = DOCUMENTED_FAILURES.iter().find(|(c, _)| *c == id);
        println!(
            "{} criterion {id:>2} {name}: {} [{:.1?}]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed()
        );
        match (v.pass, documented) {
            (false, Some((_, why))) => println!("     known failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("     criterion {id} is listed as a known failure but passed"),
            (true, None) => {}
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
