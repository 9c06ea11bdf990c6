//! Shared inputs for the benchmarks in `benches/`.

use hlab::fourier::{analyze_with, SpectralCoefficients};
use hlab::kernels::KernelQuery;
use hlab::solutions::{bump_data, kernel_table_for, SampledData, SpectralSetup};

/// A spread of `(t, ρ, s)` inside the strip `|s| < 4|t|` at `d = 1`.
pub const STRIP_POINTS: [(f64, f64, f64); 4] = [(1.0, 0.0, 0.0), (0.5, 1.0, 1.5), (-2.0, 3.0, 5.0), (4.0, 0.2, -12.0)];

/// [`STRIP_POINTS`] as queries, with times folded to `|t|` when `forward_only`.
pub fn strip_queries(tol: f64, forward_only: bool) -> Vec<KernelQuery> {
    STRIP_POINTS
        .iter()
        .map(|&(t, rho, s)| {
            let t = if forward_only { f64::abs(t) } else { t };
            KernelQuery::real(1, t, rho, s).unwrap().with_tol(tol).unwrap()
        })
        .collect()
}

/// Unit bump analysed on the standard spectral setup.
pub fn bump_coefficients() -> SpectralCoefficients {
    let setup = SpectralSetup::standard();
    analyze_with(&bump_data(1.0, 1).unwrap(), setup.ell_max, &setup.grid, setup.quad)
}

/// Unit bump on an `n³` grid with a kernel table valid for `t ≥ 2`.
pub fn bump_convolution(n: usize) -> (SampledData, hlab::kernels::KernelTable) {
    let u0 = bump_data(1.0, 1).unwrap();
    (
        SampledData::from_radial(&u0, n).unwrap(),
        kernel_table_for(1, 1.0, 1.0, 2.0, 0.04, 1e-8).unwrap(),
    )
}
