//! Spatial (Laguerre-Gaussian, Hermite-Gaussian) and temporal mode
//! generators, superpositions, and the spatio-temporal product construction.
//!
//! Spatial modes are evaluated at the beam waist plane: wavefront curvature,
//! Gouy phase, and the propagation phase are left to the solver so they are
//! not double-counted here. The azimuthal phase convention is exp(-i l φ),
//! and the Hermite-Gaussian phase convention is fixed so that
//! `HG01(θ) = (LG^0_{+1} e^{-iθ} + LG^0_{-1} e^{+iθ})/√2` holds exactly.

use crate::error::{Error, Result};
use crate::field::{Field, Rank};
use crate::grid::Grid3D;
use crate::real::Real;
use ndarray::{Array1, Array2, Array3};
use num_complex::Complex;

/// Relative edge amplitude above which a mode is considered clipped by the
/// window.
const EDGE_LEAK_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LGSpec<T: Real> {
    /// Azimuthal index (orbital angular momentum); may be negative.
    pub l: i32,
    /// Radial index.
    pub p: u32,
    /// Beam waist at the crystal plane, meters.
    pub w: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGSpec<T: Real> {
    pub m: u32,
    pub n: u32,
    /// Waist, meters.
    pub w: T,
    /// Rotation of the coordinate frame, radians.
    pub theta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalSpec<T: Real> {
    /// 1/e half-width of the field amplitude, seconds.
    pub tau0: T,
    /// Center delay, seconds.
    pub t0: T,
    /// Temporal Hermite-Gauss order; 0 is the plain Gaussian.
    pub order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialSpec<T: Real> {
    Lg(LGSpec<T>),
    Hg(HGSpec<T>),
}

impl<T: Real> SpatialSpec<T> {
    /// Radius scale containing the mode, used for window sizing: the waist
    /// inflated by the square root of the mode order + 1.
    pub fn effective_waist(&self) -> T {
        match self {
            SpatialSpec::Lg(s) => {
                s.w * T::of((s.l.unsigned_abs() + 2 * s.p + 1) as f64).sqrt()
            }
            SpatialSpec::Hg(s) => s.w * T::of((s.m + s.n + 1) as f64).sqrt(),
        }
    }
}

/// A normalized superposition over spatial and temporal basis modes.
#[derive(Debug, Clone)]
pub struct ModeSpec<T: Real> {
    spatial: Vec<(Complex<T>, SpatialSpec<T>)>,
    temporal: Vec<(Complex<T>, TemporalSpec<T>)>,
}

fn normalize_coeffs<T: Real, S>(terms: &mut [(Complex<T>, S)], what: &str) -> Result<()> {
    let norm_sq: T = terms
        .iter()
        .map(|(c, _)| c.norm_sqr())
        .fold(T::zero(), |a, b| a + b);
    if !(norm_sq > T::zero()) {
        return Err(Error::Degenerate(format!(
            "{what} coefficients are all zero"
        )));
    }
    let inv = Complex::new(T::one() / norm_sq.sqrt(), T::zero());
    for (c, _) in terms.iter_mut() {
        *c = *c * inv;
    }
    Ok(())
}

impl<T: Real> ModeSpec<T> {
    pub fn new(
        mut spatial: Vec<(Complex<T>, SpatialSpec<T>)>,
        mut temporal: Vec<(Complex<T>, TemporalSpec<T>)>,
    ) -> Result<Self> {
        if spatial.is_empty() || temporal.is_empty() {
            return Err(Error::Config(
                "a mode spec needs at least one spatial and one temporal term".into(),
            ));
        }
        normalize_coeffs(&mut spatial, "spatial")?;
        normalize_coeffs(&mut temporal, "temporal")?;
        Ok(Self { spatial, temporal })
    }

    pub fn spatial_terms(&self) -> &[(Complex<T>, SpatialSpec<T>)] {
        &self.spatial
    }

    pub fn temporal_terms(&self) -> &[(Complex<T>, TemporalSpec<T>)] {
        &self.temporal
    }

    pub fn max_effective_waist(&self) -> T {
        self.spatial
            .iter()
            .map(|(_, s)| s.effective_waist())
            .fold(T::zero(), T::max)
    }

    /// Build the normalized 2D spatial part.
    pub fn spatial_field(&self, grid: &Grid3D<T>, strict: bool) -> Result<Field<T>> {
        let fields: Vec<Field<T>> = self
            .spatial
            .iter()
            .map(|(_, s)| spatial_mode(s, grid, strict))
            .collect::<Result<_>>()?;
        let terms: Vec<(Complex<T>, &Field<T>)> = self
            .spatial
            .iter()
            .zip(fields.iter())
            .map(|((c, _), f)| (*c, f))
            .collect();
        superpose(&terms)
    }

    /// Build the normalized 1D temporal part.
    pub fn temporal_field(&self, grid: &Grid3D<T>) -> Result<Field<T>> {
        let fields: Vec<Field<T>> = self
            .temporal
            .iter()
            .map(|(_, s)| temporal_mode(s, grid))
            .collect::<Result<_>>()?;
        let terms: Vec<(Complex<T>, &Field<T>)> = self
            .temporal
            .iter()
            .zip(fields.iter())
            .map(|((c, _), f)| (*c, f))
            .collect();
        superpose(&terms)
    }

    /// Build the full spatio-temporal product field.
    pub fn field(&self, grid: &Grid3D<T>, strict: bool) -> Result<Field<T>> {
        compose(&self.spatial_field(grid, strict)?, &self.temporal_field(grid)?)
    }
}

/// Generalized Laguerre polynomial L_p^α(x) by the three-term recurrence.
pub fn laguerre<T: Real>(p: u32, alpha: u32, x: T) -> T {
    let alpha = T::of(alpha as f64);
    let mut prev = T::one();
    if p == 0 {
        return prev;
    }
    let mut cur = T::one() + alpha - x;
    for k in 1..p {
        let kf = T::of(k as f64);
        let next = ((T::of(2.0) * kf + T::one() + alpha - x) * cur - (kf + alpha) * prev)
            / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Physicists' Hermite polynomial H_n(x).
pub fn hermite<T: Real>(n: u32, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let two = T::of(2.0);
    let mut cur = two * x;
    for k in 1..n {
        let next = two * x * cur - two * T::of(k as f64) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn check_window<T: Real>(grid: &Grid3D<T>, w: T, what: &str, strict: bool, field: &Field<T>)
    -> Result<()>
{
    let four = T::of(4.0);
    if grid.lx < four * w || grid.ly < four * w {
        return Err(Error::Config(format!(
            "spatial window ({} x {}) smaller than 4 waists for {what} (w = {w})",
            grid.lx, grid.ly
        )));
    }
    if strict {
        let data = field.as_spatial();
        let mut edge = T::zero();
        for i in 0..grid.nx {
            edge = edge.max(data[[i, 0]].norm());
            edge = edge.max(data[[i, grid.ny - 1]].norm());
        }
        for j in 0..grid.ny {
            edge = edge.max(data[[0, j]].norm());
            edge = edge.max(data[[grid.nx - 1, j]].norm());
        }
        let peak = field.peak();
        if edge > T::of(EDGE_LEAK_LIMIT) * peak {
            return Err(Error::Accuracy(format!(
                "{what} amplitude at the window edge is {:.2e} of peak (limit {EDGE_LEAK_LIMIT:.0e}); enlarge the window",
                (edge / peak).as_f64()
            )));
        }
    }
    Ok(())
}

/// Laguerre-Gaussian mode at the waist plane, unit L2 norm on the grid.
pub fn lg_mode<T: Real>(spec: &LGSpec<T>, grid: &Grid3D<T>, strict: bool) -> Result<Field<T>> {
    if !(spec.w > T::zero()) {
        return Err(Error::Config("LG waist must be positive".into()));
    }
    let w = spec.w;
    let labs = spec.l.unsigned_abs();
    let sqrt2_over_w = T::of(2.0).sqrt() / w;
    // exp(-ilφ) r^|l| built as ((x - i sgn(l) y) √2 / w)^|l|, regular at r=0.
    let y_sign = if spec.l >= 0 { -T::one() } else { T::one() };
    let data = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
        let x = grid.x(i);
        let y = grid.y(j);
        let r2 = x * x + y * y;
        let arg = T::of(2.0) * r2 / (w * w);
        let radial = laguerre(spec.p, labs, arg) * (-r2 / (w * w)).exp();
        let base = Complex::new(x * sqrt2_over_w, y_sign * y * sqrt2_over_w);
        base.powu(labs) * Complex::new(radial, T::zero())
    });
    let field = Field::from_spatial(*grid, data)?.normalized()?;
    check_window(grid, w, "LG mode", strict, &field)?;
    Ok(field)
}

/// Hermite-Gaussian mode in the rotated frame, unit L2 norm on the grid.
///
/// The frame rotation is x' = x cosθ - y sinθ, y' = x sinθ + y cosθ, and the
/// (-1)^m phase keeps the LG↔HG conversion relations exact.
pub fn hg_mode<T: Real>(spec: &HGSpec<T>, grid: &Grid3D<T>, strict: bool) -> Result<Field<T>> {
    if !(spec.w > T::zero()) {
        return Err(Error::Config("HG waist must be positive".into()));
    }
    let w = spec.w;
    let (sin_t, cos_t) = spec.theta.sin_cos();
    let scale = T::of(2.0).sqrt() / w;
    let sign = if spec.m % 2 == 0 { T::one() } else { -T::one() };
    let data = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
        let x = grid.x(i);
        let y = grid.y(j);
        let xr = x * cos_t - y * sin_t;
        let yr = x * sin_t + y * cos_t;
        let r2 = x * x + y * y;
        let v = sign
            * hermite(spec.n, xr * scale)
            * hermite(spec.m, yr * scale)
            * (-r2 / (w * w)).exp();
        Complex::new(v, T::zero())
    });
    let field = Field::from_spatial(*grid, data)?.normalized()?;
    check_window(grid, w, "HG mode", strict, &field)?;
    Ok(field)
}

pub fn spatial_mode<T: Real>(
    spec: &SpatialSpec<T>,
    grid: &Grid3D<T>,
    strict: bool,
) -> Result<Field<T>> {
    match spec {
        SpatialSpec::Lg(s) => lg_mode(s, grid, strict),
        SpatialSpec::Hg(s) => hg_mode(s, grid, strict),
    }
}

/// Temporal Hermite-Gauss envelope, unit L2 norm on the grid. Order 0 is the
/// plain Gaussian exp(-(t-t0)²/τ0²).
pub fn temporal_mode<T: Real>(spec: &TemporalSpec<T>, grid: &Grid3D<T>) -> Result<Field<T>> {
    if !(spec.tau0 > T::zero()) {
        return Err(Error::Config("temporal width must be positive".into()));
    }
    let half = grid.lt / T::of(2.0);
    let four_tau = T::of(4.0) * spec.tau0;
    if spec.t0 - four_tau < -half || spec.t0 + four_tau > half {
        return Err(Error::Config(format!(
            "temporal envelope at t0 = {} s (±4τ0 = {} s) falls outside the window ±{} s",
            spec.t0, four_tau, half
        )));
    }
    let scale = T::of(2.0).sqrt() / spec.tau0;
    let data = Array1::from_shape_fn(grid.nt, |k| {
        let u = grid.t(k) - spec.t0;
        let v = hermite(spec.order, u * scale) * (-(u * u) / (spec.tau0 * spec.tau0)).exp();
        Complex::new(v, T::zero())
    });
    Field::from_temporal(*grid, data)?.normalized()
}

/// Coefficient-weighted sum of same-rank fields, renormalized to unit norm.
pub fn superpose<T: Real>(terms: &[(Complex<T>, &Field<T>)]) -> Result<Field<T>> {
    let (_, first) = terms
        .first()
        .ok_or_else(|| Error::Degenerate("empty superposition".into()))?;
    if terms.iter().all(|(c, _)| c.norm_sqr() == T::zero()) {
        return Err(Error::Degenerate(
            "all superposition coefficients are zero".into(),
        ));
    }
    let mut acc = Field::zeros(first.grid, first.rank);
    for (c, f) in terms {
        acc.add_scaled(f, *c)?;
    }
    acc.normalized()
}

/// Outer product E(x,y)·E(t) without normalization.
pub fn outer<T: Real>(spatial: &Field<T>, temporal: &Field<T>) -> Result<Field<T>> {
    if spatial.rank != Rank::Spatial2D || temporal.rank != Rank::Temporal1D {
        return Err(Error::Shape(
            "compose expects a spatial-2D and a temporal-1D field".into(),
        ));
    }
    if !spatial.grid.same_as(&temporal.grid) {
        return Err(Error::Shape("fields live on different grids".into()));
    }
    let s = spatial.as_spatial();
    let t = temporal.as_temporal();
    let g = spatial.grid;
    let data = Array3::from_shape_fn((g.nx, g.ny, g.nt), |(i, j, k)| s[[i, j]] * t[[k]]);
    Field::from_full(g, data)
}

/// Eq.-1-style product of a spatial and a temporal envelope, unit-normalized
/// in 3D.
pub fn compose<T: Real>(spatial: &Field<T>, temporal: &Field<T>) -> Result<Field<T>> {
    outer(spatial, temporal)?.normalized()
}
