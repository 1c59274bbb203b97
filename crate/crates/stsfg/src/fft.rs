//! Unitary discrete Fourier transforms along the grid axes.
//!
//! Both directions carry a 1/√N factor per axis so that Parseval holds
//! exactly and `inverse(forward(f)) == f` to rounding.

use crate::error::{Error, Result};
use crate::field::{Field, Rank};
use crate::grid::Grid3D;
use crate::real::Real;
use ndarray::{ArrayBase, Axis, DataMut, Dimension};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

struct AxisPlan<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scale: T,
}

/// Cached FFT plans for one grid.
pub struct Spectral<T: Real> {
    x: AxisPlan<T>,
    y: AxisPlan<T>,
    t: AxisPlan<T>,
}

impl<T: Real> Clone for Spectral<T> {
    fn clone(&self) -> Self {
        Self {
            x: AxisPlan {
                forward: self.x.forward.clone(),
                inverse: self.x.inverse.clone(),
                scale: self.x.scale,
            },
            y: AxisPlan {
                forward: self.y.forward.clone(),
                inverse: self.y.inverse.clone(),
                scale: self.y.scale,
            },
            t: AxisPlan {
                forward: self.t.forward.clone(),
                inverse: self.t.inverse.clone(),
                scale: self.t.scale,
            },
        }
    }
}

fn plan_axis<T: Real>(planner: &mut FftPlanner<T>, n: usize) -> AxisPlan<T> {
    AxisPlan {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
        scale: T::one() / T::of(n as f64).sqrt(),
    }
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: &Grid3D<T>) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            x: plan_axis(&mut planner, grid.nx),
            y: plan_axis(&mut planner, grid.ny),
            t: plan_axis(&mut planner, grid.nt),
        }
    }

    fn apply_axis<S, D>(data: &mut ArrayBase<S, D>, axis: usize, plan: &AxisPlan<T>, dir: Direction)
    where
        S: DataMut<Elem = Complex<T>>,
        D: Dimension,
    {
        let fft = match dir {
            Direction::Forward => &plan.forward,
            Direction::Inverse => &plan.inverse,
        };
        let n = fft.len();
        let mut lane_buf = vec![Complex::new(T::zero(), T::zero()); n];
        let mut scratch =
            vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        let scale = Complex::new(plan.scale, T::zero());
        for mut lane in data.lanes_mut(Axis(axis)) {
            for (b, v) in lane_buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process_with_scratch(&mut lane_buf, &mut scratch);
            for (v, b) in lane.iter_mut().zip(lane_buf.iter()) {
                *v = *b * scale;
            }
        }
    }

    /// Transform along x and y (axes 0, 1).
    pub fn spatial<S, D>(&self, data: &mut ArrayBase<S, D>, dir: Direction)
    where
        S: DataMut<Elem = Complex<T>>,
        D: Dimension,
    {
        Self::apply_axis(data, 0, &self.x, dir);
        Self::apply_axis(data, 1, &self.y, dir);
    }

    /// Transform along t (the last axis).
    pub fn temporal<S, D>(&self, data: &mut ArrayBase<S, D>, dir: Direction)
    where
        S: DataMut<Elem = Complex<T>>,
        D: Dimension,
    {
        let axis = data.ndim() - 1;
        Self::apply_axis(data, axis, &self.t, dir);
    }

    /// Transform along every axis of a 3D field.
    pub fn full<S, D>(&self, data: &mut ArrayBase<S, D>, dir: Direction)
    where
        S: DataMut<Elem = Complex<T>>,
        D: Dimension,
    {
        self.spatial(data, dir);
        self.temporal(data, dir);
    }
}

/// Unitary DFT of a spatial-2D field (x, y axes) or a 3D field (all axes).
pub fn transform<T: Real>(f: &Field<T>, dir: Direction) -> Result<Field<T>> {
    let spectral = Spectral::new(&f.grid);
    let mut out = f.clone();
    match f.rank {
        Rank::Spatial2D => spectral.spatial(out.data_mut(), dir),
        Rank::SpatioTemporal3D => spectral.full(out.data_mut(), dir),
        Rank::Temporal1D => {
            return Err(Error::Shape(
                "transform expects a spatial-2D or spatio-temporal-3D field".into(),
            ))
        }
    }
    Ok(out)
}
