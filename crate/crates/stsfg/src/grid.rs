//! Discretized (x, y, t) computational window.

use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform grid over the transverse plane and the pulse-local time axis.
///
/// Coordinates are centered: `x` runs over `(i - nx/2) * dx` and likewise for
/// `y` and `t`. Spectral axes follow DFT bin order with `dkx = 2π/lx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3D<T: Real> {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    /// Spatial window extents in meters.
    pub lx: T,
    pub ly: T,
    /// Temporal window extent in seconds.
    pub lt: T,
    pub dx: T,
    pub dy: T,
    pub dt: T,
    pub dkx: T,
    pub dky: T,
    pub domega: T,
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "{name} must be a power of two >= 8, got {n}"
        )));
    }
    Ok(())
}

fn check_extent<T: Real>(name: &str, l: T) -> Result<()> {
    if !(l > T::zero()) || !l.is_finite() {
        return Err(Error::Config(format!(
            "{name} must be a positive finite extent, got {l}"
        )));
    }
    Ok(())
}

/// Build a grid, checking the power-of-two and positivity preconditions.
pub fn make_grid<T: Real>(
    nx: usize,
    ny: usize,
    nt: usize,
    lx: T,
    ly: T,
    lt: T,
) -> Result<Grid3D<T>> {
    check_count("nx", nx)?;
    check_count("ny", ny)?;
    check_count("nt", nt)?;
    check_extent("lx", lx)?;
    check_extent("ly", ly)?;
    check_extent("lt", lt)?;
    let two_pi = T::TAU();
    Ok(Grid3D {
        nx,
        ny,
        nt,
        lx,
        ly,
        lt,
        dx: lx / T::of(nx as f64),
        dy: ly / T::of(ny as f64),
        dt: lt / T::of(nt as f64),
        dkx: two_pi / lx,
        dky: two_pi / ly,
        domega: two_pi / lt,
    })
}

impl<T: Real> Grid3D<T> {
    /// Centered sample coordinate along one axis.
    fn centered(i: usize, n: usize, d: T) -> T {
        (T::of(i as f64) - T::of((n / 2) as f64)) * d
    }

    pub fn x(&self, i: usize) -> T {
        Self::centered(i, self.nx, self.dx)
    }

    pub fn y(&self, j: usize) -> T {
        Self::centered(j, self.ny, self.dy)
    }

    pub fn t(&self, k: usize) -> T {
        Self::centered(k, self.nt, self.dt)
    }

    /// DFT-ordered angular frequency for bin `i` of an `n`-point axis with
    /// spacing `dw`: 0, dw, ..., then the negative half.
    fn fftfreq(i: usize, n: usize, dw: T) -> T {
        let i = i as isize;
        let n = n as isize;
        let signed = if i < (n + 1) / 2 { i } else { i - n };
        T::of(signed as f64) * dw
    }

    pub fn kx(&self, i: usize) -> T {
        Self::fftfreq(i, self.nx, self.dkx)
    }

    pub fn ky(&self, j: usize) -> T {
        Self::fftfreq(j, self.ny, self.dky)
    }

    pub fn omega(&self, k: usize) -> T {
        Self::fftfreq(k, self.nt, self.domega)
    }

    /// Spatial cell area dx·dy.
    pub fn cell_area(&self) -> T {
        self.dx * self.dy
    }

    /// Full cell volume dx·dy·dt.
    pub fn cell_volume(&self) -> T {
        self.dx * self.dy * self.dt
    }

    /// True if the two grids describe the same discretization.
    pub fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}
