//! Uniform time and space grids. Signals and fields are sampled at nodes so
//! boundary traces line up with the PDE solvers' boundary rows.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform grid on `[0, t_end]` with `n_steps + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<F> {
    t_end: F,
    n_steps: usize,
}

impl<F: Real> TimeGrid<F> {
    pub fn new(t_end: F, n_steps: usize) -> Result<Self> {
        if !(t_end > F::zero()) || !t_end.is_finite() {
            return Err(Error::InvalidGrid(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps < 2 {
            return Err(Error::InvalidGrid(format!("n_steps must be >= 2, got {n_steps}")));
        }
        Ok(Self { t_end, n_steps })
    }

    #[inline]
    pub fn t_end(&self) -> F {
        self.t_end
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn dt(&self) -> F {
        self.t_end / F::of_usize(self.n_steps)
    }

    /// Node coordinate `i * dt`, with the last node pinned to `t_end` exactly.
    #[inline]
    pub fn node(&self, i: usize) -> F {
        debug_assert!(i <= self.n_steps);
        if i == self.n_steps {
            self.t_end
        } else {
            F::of_usize(i) * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = F> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    pub fn same_span(&self, other: &Self) -> bool {
        (self.t_end - other.t_end).abs() <= F::of(1e-12) * self.t_end.abs()
    }
}

/// Uniform grid on `[0, length]` with `n_cells + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid<F> {
    length: F,
    n_cells: usize,
}

impl<F: Real> SpaceGrid<F> {
    pub fn new(length: F, n_cells: usize) -> Result<Self> {
        if !(length > F::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n_cells < 4 {
            return Err(Error::InvalidGrid(format!("n_cells must be >= 4, got {n_cells}")));
        }
        Ok(Self { length, n_cells })
    }

    #[inline]
    pub fn length(&self) -> F {
        self.length
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    #[inline]
    pub fn dx(&self) -> F {
        self.length / F::of_usize(self.n_cells)
    }

    #[inline]
    pub fn node(&self, i: usize) -> F {
        debug_assert!(i <= self.n_cells);
        if i == self.n_cells {
            self.length
        } else {
            F::of_usize(i) * self.dx()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = F> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }
}
