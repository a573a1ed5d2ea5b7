//! Space-time solution arrays on tensor grids, with one-sided boundary-flux stencils.

use crate::error::{Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::scalar::Real;
use crate::signal::Signal;

/// Heat-equation state sampled at `(time node, space node)`, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatField<F> {
    tgrid: TimeGrid<F>,
    xgrid: SpaceGrid<F>,
    values: Vec<F>,
}

impl<F: Real> HeatField<F> {
    pub fn new(tgrid: TimeGrid<F>, xgrid: SpaceGrid<F>, values: Vec<F>) -> Result<Self> {
        let expect = tgrid.n_nodes() * xgrid.n_nodes();
        if values.len() != expect {
            return Err(Error::InvalidInput(format!(
                "field needs {} values, got {}",
                expect,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite field value".into()));
        }
        Ok(Self { tgrid, xgrid, values })
    }

    pub fn zeros(tgrid: TimeGrid<F>, xgrid: SpaceGrid<F>) -> Self {
        let n = tgrid.n_nodes() * xgrid.n_nodes();
        Self { tgrid, xgrid, values: vec![F::zero(); n] }
    }

    pub fn from_fn(tgrid: TimeGrid<F>, xgrid: SpaceGrid<F>, f: impl Fn(F, F) -> F) -> Self {
        let mut values = Vec::with_capacity(tgrid.n_nodes() * xgrid.n_nodes());
        for n in 0..tgrid.n_nodes() {
            let t = tgrid.node(n);
            for i in 0..xgrid.n_nodes() {
                values.push(f(t, xgrid.node(i)));
            }
        }
        Self { tgrid, xgrid, values }
    }

    #[inline]
    pub fn tgrid(&self) -> &TimeGrid<F> {
        &self.tgrid
    }

    #[inline]
    pub fn xgrid(&self) -> &SpaceGrid<F> {
        &self.xgrid
    }

    #[inline]
    pub fn at(&self, time_node: usize, space_node: usize) -> F {
        self.values[time_node * self.xgrid.n_nodes() + space_node]
    }

    #[inline]
    pub fn row(&self, time_node: usize) -> &[F] {
        let w = self.xgrid.n_nodes();
        &self.values[time_node * w..(time_node + 1) * w]
    }

    pub(crate) fn row_mut(&mut self, time_node: usize) -> &mut [F] {
        let w = self.xgrid.n_nodes();
        &mut self.values[time_node * w..(time_node + 1) * w]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn max_abs(&self) -> F {
        self.values.iter().fold(F::zero(), |m, v| m.max(v.abs()))
    }

    /// Boundary trace at a fixed space node, as a signal.
    pub fn trace(&self, space_node: usize) -> Signal<F> {
        let vals = (0..self.tgrid.n_nodes()).map(|n| self.at(n, space_node)).collect();
        Signal::new(self.tgrid, vals).expect("trace of a finite field is finite")
    }
}

/// Wave-equation state over a symmetric pseudo-time grid.
///
/// The stored `sgrid` spans `[-s_max, s_max]`: node `m` sits at
/// `s = -s_max + m * ds` with `ds = 2 s_max / n_steps`; `n_steps` is even so
/// `s = 0` is a node.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField<F> {
    s_max: F,
    n_steps: usize,
    xgrid: SpaceGrid<F>,
    values: Vec<F>,
}

impl<F: Real> WaveField<F> {
    pub(crate) fn from_raw(s_max: F, n_steps: usize, xgrid: SpaceGrid<F>, values: Vec<F>) -> Self {
        debug_assert_eq!(n_steps % 2, 0);
        debug_assert_eq!(values.len(), (n_steps + 1) * xgrid.n_nodes());
        Self { s_max, n_steps, xgrid, values }
    }

    #[inline]
    pub fn s_max(&self) -> F {
        self.s_max
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
    pub fn ds(&self) -> F {
        F::of(2.0) * self.s_max / F::of_usize(self.n_steps)
    }

    #[inline]
    pub fn s_node(&self, m: usize) -> F {
        -self.s_max + F::of_usize(m) * self.ds()
    }

    #[inline]
    pub fn xgrid(&self) -> &SpaceGrid<F> {
        &self.xgrid
    }

    #[inline]
    pub fn at(&self, s_node: usize, space_node: usize) -> F {
        self.values[s_node * self.xgrid.n_nodes() + space_node]
    }

    pub(crate) fn row_mut(&mut self, s_node: usize) -> &mut [F] {
        let w = self.xgrid.n_nodes();
        &mut self.values[s_node * w..(s_node + 1) * w]
    }

    pub fn row(&self, s_node: usize) -> &[F] {
        let w = self.xgrid.n_nodes();
        &self.values[s_node * w..(s_node + 1) * w]
    }

    /// Samples of `z(., x_i)` over the s-grid.
    pub fn s_profile(&self, space_node: usize) -> Vec<F> {
        (0..self.n_nodes()).map(|m| self.at(m, space_node)).collect()
    }
}

/// One-sided 4th-order first-derivative stencil at the left edge of a row.
#[inline]
pub(crate) fn left_edge_derivative<F: Real>(row: &[F], dx: F) -> F {
    (F::of(-25.0) * row[0] + F::of(48.0) * row[1] - F::of(36.0) * row[2] + F::of(16.0) * row[3]
        - F::of(3.0) * row[4])
        / (F::of(12.0) * dx)
}

/// Mirror stencil at the right edge.
#[inline]
pub(crate) fn right_edge_derivative<F: Real>(row: &[F], dx: F) -> F {
    let n = row.len();
    (F::of(25.0) * row[n - 1] - F::of(48.0) * row[n - 2] + F::of(36.0) * row[n - 3]
        - F::of(16.0) * row[n - 4]
        + F::of(3.0) * row[n - 5])
        / (F::of(12.0) * dx)
}

/// Spatial derivative trace at x = 0, 4th-order one-sided stencil.
pub fn flux_at_left<F: Real>(field: &HeatField<F>) -> Result<Signal<F>> {
    if field.xgrid().n_cells() < 4 {
        return Err(Error::GridTooCoarse("flux stencil needs n_cells >= 4".into()));
    }
    let dx = field.xgrid().dx();
    let vals = (0..field.tgrid().n_nodes())
        .map(|n| left_edge_derivative(field.row(n), dx))
        .collect();
    Signal::new(*field.tgrid(), vals)
}

/// Spatial derivative trace at x = L, mirrored stencil.
pub fn flux_at_right<F: Real>(field: &HeatField<F>) -> Result<Signal<F>> {
    if field.xgrid().n_cells() < 4 {
        return Err(Error::GridTooCoarse("flux stencil needs n_cells >= 4".into()));
    }
    let dx = field.xgrid().dx();
    let vals = (0..field.tgrid().n_nodes())
        .map(|n| right_edge_derivative(field.row(n), dx))
        .collect();
    Signal::new(*field.tgrid(), vals)
}
