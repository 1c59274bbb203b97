//! Complex field containers and inner products.

use crate::error::{Error, Result};
use crate::grid::Grid3D;
use crate::real::Real;
use ndarray::{Array1, Array2, Array3, ArrayD, ArrayView1, ArrayView2, ArrayView3, IxDyn};
use num_complex::Complex;
use std::io::Write;

/// Which carrier the envelope rides on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carrier {
    Signal,
    Pump,
    Sf,
}

/// Tensor rank of a sampled envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    /// E(x, y) on the transverse plane.
    Spatial2D,
    /// E(t) on the time axis.
    Temporal1D,
    /// E(x, y, t).
    SpatioTemporal3D,
}

/// A complex envelope sampled on a [`Grid3D`].
#[derive(Debug, Clone)]
pub struct Field<T: Real> {
    pub grid: Grid3D<T>,
    pub rank: Rank,
    pub carrier: Carrier,
    data: ArrayD<Complex<T>>,
}

impl<T: Real> Field<T> {
    fn expected_shape(grid: &Grid3D<T>, rank: Rank) -> Vec<usize> {
        match rank {
            Rank::Spatial2D => vec![grid.nx, grid.ny],
            Rank::Temporal1D => vec![grid.nt],
            Rank::SpatioTemporal3D => vec![grid.nx, grid.ny, grid.nt],
        }
    }

    pub fn new(grid: Grid3D<T>, rank: Rank, data: ArrayD<Complex<T>>) -> Result<Self> {
        let want = Self::expected_shape(&grid, rank);
        if data.shape() != want.as_slice() {
            return Err(Error::Shape(format!(
                "sample shape {:?} does not match grid shape {:?} for rank {:?}",
                data.shape(),
                want,
                rank
            )));
        }
        Ok(Self {
            grid,
            rank,
            carrier: Carrier::Signal,
            data,
        })
    }

    pub fn from_spatial(grid: Grid3D<T>, data: Array2<Complex<T>>) -> Result<Self> {
        Self::new(grid, Rank::Spatial2D, data.into_dyn())
    }

    pub fn from_temporal(grid: Grid3D<T>, data: Array1<Complex<T>>) -> Result<Self> {
        Self::new(grid, Rank::Temporal1D, data.into_dyn())
    }

    pub fn from_full(grid: Grid3D<T>, data: Array3<Complex<T>>) -> Result<Self> {
        Self::new(grid, Rank::SpatioTemporal3D, data.into_dyn())
    }

    pub fn zeros(grid: Grid3D<T>, rank: Rank) -> Self {
        let shape = Self::expected_shape(&grid, rank);
        Self {
            grid,
            rank,
            carrier: Carrier::Signal,
            data: ArrayD::zeros(IxDyn(&shape)),
        }
    }

    pub fn with_carrier(mut self, carrier: Carrier) -> Self {
        self.carrier = carrier;
        self
    }

    pub fn data(&self) -> &ArrayD<Complex<T>> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut ArrayD<Complex<T>> {
        &mut self.data
    }

    pub fn as_spatial(&self) -> ArrayView2<'_, Complex<T>> {
        self.data
            .view()
            .into_dimensionality()
            .expect("rank Spatial2D")
    }

    pub fn as_temporal(&self) -> ArrayView1<'_, Complex<T>> {
        self.data
            .view()
            .into_dimensionality()
            .expect("rank Temporal1D")
    }

    pub fn as_full(&self) -> ArrayView3<'_, Complex<T>> {
        self.data
            .view()
            .into_dimensionality()
            .expect("rank SpatioTemporal3D")
    }

    pub fn into_full(self) -> Array3<Complex<T>> {
        self.data
            .into_dimensionality()
            .expect("rank SpatioTemporal3D")
    }

    /// Integration measure for this rank (cell length/area/volume).
    pub fn cell_measure(&self) -> T {
        match self.rank {
            Rank::Spatial2D => self.grid.cell_area(),
            Rank::Temporal1D => self.grid.dt,
            Rank::SpatioTemporal3D => self.grid.cell_volume(),
        }
    }

    /// Discrete L2 norm, i.e. sqrt(∑ |f|² · cell).
    pub fn norm(&self) -> T {
        let sq: T = self
            .data
            .iter()
            .map(|c| c.re * c.re + c.im * c.im)
            .fold(T::zero(), |a, b| a + b);
        (sq * self.cell_measure()).sqrt()
    }

    /// Rescale to unit L2 norm.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > T::zero()) {
            return Err(Error::Degenerate("cannot normalize a zero field".into()));
        }
        let inv = Complex::new(T::one() / n, T::zero());
        self.data.mapv_inplace(|c| c * inv);
        Ok(self)
    }

    pub fn scaled(mut self, factor: Complex<T>) -> Self {
        self.data.mapv_inplace(|c| c * factor);
        self
    }

    /// Largest sample magnitude.
    pub fn peak(&self) -> T {
        self.data
            .iter()
            .map(|c| c.norm_sqr())
            .fold(T::zero(), T::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        if self.rank != other.rank {
            return Err(Error::Shape(format!(
                "rank mismatch: {:?} vs {:?}",
                self.rank, other.rank
            )));
        }
        Ok(())
    }

    /// Pointwise sum of `self` and `factor * other`.
    pub fn add_scaled(&mut self, other: &Self, factor: Complex<T>) -> Result<()> {
        self.compatible(other)?;
        ndarray::Zip::from(&mut self.data)
            .and(&other.data)
            .for_each(|a, &b| *a = *a + b * factor);
        Ok(())
    }
}

/// Riemann approximation of ∫ conj(f)·g over the field's domain.
pub fn inner_product<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<Complex<T>> {
    f.compatible(g)?;
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in f.data.iter().zip(g.data.iter()) {
        acc = acc + a.conj() * *b;
    }
    let m = f.cell_measure();
    Ok(acc * Complex::new(m, T::zero()))
}

fn fmt_c<T: Real>(v: T) -> String {
    // Shortest round-trip decimal form.
    format!("{}", v.as_f64())
}

/// Write a spatial field (or a fixed-t slice of a 3D one) as `x,y,re,im` CSV.
pub fn write_spatial_csv<T: Real, W: Write>(
    out: &mut W,
    grid: &Grid3D<T>,
    data: ArrayView2<'_, Complex<T>>,
) -> std::io::Result<()> {
    writeln!(out, "x,y,re,im")?;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let c = data[[i, j]];
            writeln!(
                out,
                "{},{},{},{}",
                fmt_c(grid.x(i)),
                fmt_c(grid.y(j)),
                fmt_c(c.re),
                fmt_c(c.im)
            )?;
        }
    }
    Ok(())
}

/// Write a temporal profile as `t,re,im` CSV.
pub fn write_temporal_csv<T: Real, W: Write>(
    out: &mut W,
    grid: &Grid3D<T>,
    data: ArrayView1<'_, Complex<T>>,
) -> std::io::Result<()> {
    writeln!(out, "t,re,im")?;
    for k in 0..grid.nt {
        let c = data[[k]];
        writeln!(out, "{},{},{}", fmt_c(grid.t(k)), fmt_c(c.re), fmt_c(c.im))?;
    }
    Ok(())
}
