//! Arithmetic and Korányi geometry of the Heisenberg group `H^d`.
//!
//! A point is `(y, η, s)` with `y, η ∈ R^d`; the product is
//! `(Y, s)·(Y', s') = (Y + Y', s + s' + 2⟨η, y'⟩ − 2⟨η', y⟩)`.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;

/// Homogeneous dimension `2d + 2`.
pub fn homogeneous_dimension(d: usize) -> usize {
    2 * d + 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: f64,
}

impl GroupPoint {
    pub fn new(y: Vec<f64>, eta: Vec<f64>, s: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(invalid("dimension d must be at least 1"));
        }
        if y.len() != eta.len() {
            return Err(Error::DimensionMismatch {
                left: y.len(),
                right: eta.len(),
            });
        }
        if !(s.is_finite() && y.iter().chain(&eta).all(|v| v.is_finite())) {
            return Err(invalid("coordinates must be finite"));
        }
        Ok(Self { y, eta, s })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            y: vec![0.0; d],
            eta: vec![0.0; d],
            s: 0.0,
        }
    }

    /// Point of `H^1`.
    pub fn d1(y: f64, eta: f64, s: f64) -> Self {
        Self {
            y: vec![y],
            eta: vec![eta],
            s,
        }
    }

    /// Point on the vertical axis.
    pub fn vertical(d: usize, s: f64) -> Self {
        Self {
            s,
            ..Self::identity(d)
        }
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// `|Y|² = |y|² + |η|²`.
    pub fn horizontal_norm_sq(&self) -> f64 {
        self.y.iter().chain(&self.eta).map(|v| v * v).sum()
    }

    /// The `2d + 1` coordinates in the order `y, η, s`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 * self.dim() + 1);
        c.extend_from_slice(&self.y);
        c.extend_from_slice(&self.eta);
        c.push(self.s);
        c
    }

    /// Inverse of [`GroupPoint::coords`].
    pub fn from_coords(c: &[f64]) -> Result<Self> {
        if c.len() < 3 || c.len() % 2 == 0 {
            return Err(invalid(format!(
                "expected 2d+1 coordinates, got {}",
                c.len()
            )));
        }
        let d = (c.len() - 1) / 2;
        Self::new(c[..d].to_vec(), c[d..2 * d].to_vec(), c[2 * d])
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let twist: f64 = (0..self.dim())
            .map(|j| self.eta[j] * other.y[j] - other.eta[j] * self.y[j])
            .sum();
        Ok(Self {
            y: add(&self.y, &other.y),
            eta: add(&self.eta, &other.eta),
            s: self.s + other.s + 2.0 * twist,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            y: self.y.iter().map(|v| -v).collect(),
            eta: self.eta.iter().map(|v| -v).collect(),
            s: -self.s,
        }
    }

    /// Korányi gauge `(|Y|⁴ + s²)^{1/4}`.
    pub fn koranyi_norm(&self) -> f64 {
        let r2 = self.horizontal_norm_sq();
        (r2 * r2 + self.s * self.s).sqrt().sqrt()
    }

    /// Left-invariant distance `ρ(self⁻¹ · other)`. Not symmetric in general.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.inverse().product(other)?.koranyi_norm())
    }

    /// `δ_a(Y, s) = (aY, a²s)`.
    pub fn dilate(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("dilation factor must be positive, got {a}")));
        }
        Ok(Self {
            y: self.y.iter().map(|v| a * v).collect(),
            eta: self.eta.iter().map(|v| a * v).collect(),
            s: a * a * self.s,
        })
    }

    /// `τ_{self}(w) = self · w`.
    pub fn left_translate(&self, w: &Self) -> Result<Self> {
        self.product(w)
    }

    /// Strict membership `distance(center, self) < radius`.
    pub fn in_ball(&self, center: &Self, radius: f64) -> Result<bool> {
        Ok(center.distance(self)? < radius)
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn check_dims(a: &GroupPoint, b: &GroupPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `(|Y|², s)` of `v⁻¹ · w` without allocating.
///
/// This is the argument a radial kernel sees inside the convolution
/// `∫ u(v) K(v⁻¹ · w) dv`.
pub fn relative_radial_coords(v: &[f64], w: &[f64]) -> (f64, f64) {
    let d = (v.len() - 1) / 2;
    let mut rho = 0.0;
    let mut twist = 0.0;
    for j in 0..d {
        let dy = w[j] - v[j];
        let de = w[d + j] - v[d + j];
        rho += dy * dy + de * de;
        twist += w[d + j] * v[j] - v[d + j] * w[j];
    }
    (rho, w[2 * d] - v[2 * d] + 2.0 * twist)
}

/// Second-order central difference approximation of the sublaplacian
/// `Σ_j (X_j² + Ξ_j²) f` at `w`, where `X_j = ∂_{y_j} + 2η_j ∂_s` and
/// `Ξ_j = ∂_{η_j} − 2y_j ∂_s`.
///
/// Each field is differentiated along its own flow `h ↦ w · exp(h X)`, which is
/// a right translation by a horizontal point, so no mixed partials are needed.
pub fn sublaplacian_fd<F>(f: F, w: &GroupPoint, step: f64) -> Complex64
where
    F: Fn(&GroupPoint) -> Complex64,
{
    let d = w.dim();
    let centre = f(w);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..2 * d {
        let mut shift = GroupPoint::identity(d);
        let mut along = |h: f64| {
            if j < d {
                shift.y[j] = h;
            } else {
                shift.eta[j - d] = h;
            }
            // Same dimension by construction.
            f(&w.product(&shift).expect("same dimension"))
        };
        let plus = along(step);
        let minus = along(-step);
        acc += (plus - 2.0 * centre + minus) / (step * step);
    }
    acc
}
