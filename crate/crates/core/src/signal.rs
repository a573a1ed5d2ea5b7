//! Nodal time signals: norms, inner products, interpolation, resampling.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;

/// Which norm [`Signal::norm`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// max |s(t_i)|
    Sup,
    /// sqrt of the trapezoid integral of s^2
    L2,
    /// max(sup norm, sup of finite-difference derivative magnitudes).
    /// A sampled approximation of the W^{1,inf} norm; exact for piecewise-linear data.
    W1Inf,
}

/// A real-valued signal sampled at the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<F> {
    grid: TimeGrid<F>,
    values: Vec<F>,
}

impl<F: Real> Signal<F> {
    pub fn new(grid: TimeGrid<F>, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidSignal(format!(
                "expected {} values for the grid, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid<F>) -> Self {
        Self { grid, values: vec![F::zero(); grid.n_nodes()] }
    }

    /// Sample a function at the grid nodes.
    pub fn from_fn(grid: TimeGrid<F>, mut f: impl FnMut(F) -> F) -> Result<Self> {
        let values = grid.nodes().map(|t| f(t)).collect();
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    pub fn norm(&self, kind: NormKind) -> F {
        match kind {
            NormKind::Sup => self.values.iter().fold(F::zero(), |m, v| m.max(v.abs())),
            NormKind::L2 => self.inner(self).sqrt(),
            NormKind::W1Inf => {
                let sup = self.norm(NormKind::Sup);
                let dt = self.grid.dt();
                let v = &self.values;
                let n = v.len();
                let mut dmax = (v[1] - v[0]).abs() / dt;
                dmax = dmax.max((v[n - 1] - v[n - 2]).abs() / dt);
                for i in 1..n - 1 {
                    dmax = dmax.max((v[i + 1] - v[i - 1]).abs() / (F::of(2.0) * dt));
                }
                sup.max(dmax)
            }
        }
    }

    /// Trapezoid-rule L^2(0,T) inner product. These weights are the ones the
    /// dual machinery uses, so discrete adjoints pair consistently.
    pub fn inner(&self, other: &Self) -> F {
        let dt = self.grid.dt();
        let n = self.values.len();
        let mut acc = F::of(0.5) * (self.values[0] * other.values[0] + self.values[n - 1] * other.values[n - 1]);
        for i in 1..n - 1 {
            acc += self.values[i] * other.values[i];
        }
        acc * dt
    }

    /// Pointwise linear combination `a*self + b*other` on a shared grid.
    pub fn linear_comb(&self, a: F, other: &Self, b: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::IncompatibleGrids("linear_comb requires identical grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Signal::new(self.grid, values)
    }

    pub fn scale(&self, a: F) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| a * v).collect() }
    }

    /// Samples in reversed time order (t -> T - t), same grid.
    pub fn time_reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { grid: self.grid, values }
    }

    /// Piecewise-cubic (4-point Lagrange) evaluation at an arbitrary time.
    /// Reproduces cubics exactly; O(dt^4) for smooth data. Clamps to the span.
    pub fn eval(&self, t: F) -> F {
        cubic_eval(&self.values, self.grid.dt(), t)
    }

    /// Cubic resampling onto a new grid covering the same horizon.
    /// Endpoint nodes are copied, not interpolated.
    pub fn resample(&self, new_grid: TimeGrid<F>) -> Result<Self> {
        if !self.grid.same_span(&new_grid) {
            return Err(Error::IncompatibleGrids(format!(
                "resample requires matching horizons: {} vs {}",
                self.grid.t_end(),
                new_grid.t_end()
            )));
        }
        let n_new = new_grid.n_nodes();
        let mut values = Vec::with_capacity(n_new);
        for i in 0..n_new {
            if i == 0 {
                values.push(self.values[0]);
            } else if i == n_new - 1 {
                values.push(*self.values.last().unwrap());
            } else {
                values.push(self.eval(new_grid.node(i)));
            }
        }
        Signal::new(new_grid, values)
    }
}

/// 4-point Lagrange interpolation on uniformly spaced samples.
pub(crate) fn cubic_eval<F: Real>(values: &[F], dt: F, t: F) -> F {
    let n = values.len();
    debug_assert!(n >= 4);
    let u = t / dt;
    // cell index i such that the stencil is {i-1, i, i+1, i+2}
    let mut i = u.floor().to_isize().unwrap_or(0);
    i = i.clamp(1, n as isize - 3);
    let i = i as usize;
    let s = u - F::of_usize(i);
    let (a, b, c, d) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    let one = F::one();
    let two = F::of(2.0);
    let six = F::of(6.0);
    -s * (s - one) * (s - two) / six * a
        + (s * s - one) * (s - two) / two * b
        - s * (s + one) * (s - two) / two * c
        + s * (s * s - one) / six * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(t_end: f64, n: usize) -> TimeGrid<f64> {
        TimeGrid::new(t_end, n).unwrap()
    }

    #[test]
    fn zero_signal_all_norms_vanish() {
        let s = Signal::zeros(grid(1.0, 100));
        for k in [NormKind::Sup, NormKind::L2, NormKind::W1Inf] {
            assert_eq!(s.norm(k), 0.0);
        }
    }

    #[test]
    fn ramp_norms() {
        // s(t) = t on [0,1]: sup = 1, derivative = 1 everywhere, w1inf = 1
        let s = Signal::from_fn(grid(1.0, 57), |t| t).unwrap();
        assert_abs_diff_eq!(s.norm(NormKind::Sup), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm(NormKind::W1Inf), 1.0, epsilon = 1e-12);
        // L2 of t on [0,1] is 1/sqrt(3); trapezoid is 2nd-order accurate
        assert_abs_diff_eq!(s.norm(NormKind::L2), 1.0 / 3.0f64.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn sine_w1inf_close_to_two_pi() {
        let s = Signal::from_fn(grid(1.0, 1000), |t| (2.0 * std::f64::consts::PI * t).sin()).unwrap();
        let w = s.norm(NormKind::W1Inf);
        assert!((w - 2.0 * std::f64::consts::PI).abs() < 1e-4, "w1inf = {w}");
    }

    #[test]
    fn sup_le_w1inf() {
        // holds by definition for any signal
        let s = Signal::from_fn(grid(2.0, 333), |t| (3.1 * t).cos() * (1.0 + t)).unwrap();
        assert!(s.norm(NormKind::Sup) <= s.norm(NormKind::W1Inf));
    }

    #[test]
    fn non_finite_rejected() {
        let mut v = vec![0.0; 101];
        v[50] = f64::NAN;
        assert!(matches!(Signal::new(grid(1.0, 100), v), Err(Error::InvalidSignal(_))));
    }

    #[test]
    fn resample_identity() {
        let g = grid(1.0, 64);
        let s = Signal::from_fn(g, |t| t * t - 0.3 * t).unwrap();
        let r = s.resample(g).unwrap();
        for (a, b) in s.values().iter().zip(r.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn resample_linear_exact() {
        let s = Signal::from_fn(grid(1.0, 50), |t| 2.0 * t - 0.5).unwrap();
        let r = s.resample(grid(1.0, 100)).unwrap();
        for (i, &v) in r.values().iter().enumerate() {
            let t = r.grid().node(i);
            assert_abs_diff_eq!(v, 2.0 * t - 0.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn resample_sine_error_small() {
        // analytic oracle: upsample sin(2 pi t) from n=100 to n=1000
        let s = Signal::from_fn(grid(1.0, 100), |t| (2.0 * std::f64::consts::PI * t).sin()).unwrap();
        let r = s.resample(grid(1.0, 1000)).unwrap();
        let mut emax = 0.0f64;
        for (i, &v) in r.values().iter().enumerate() {
            let t = r.grid().node(i);
            emax = emax.max((v - (2.0 * std::f64::consts::PI * t).sin()).abs());
        }
        assert!(emax <= 1e-5, "max resample error {emax}");
    }

    #[test]
    fn resample_mismatched_horizon_rejected() {
        let s = Signal::zeros(grid(1.0, 10));
        assert!(matches!(
            s.resample(grid(2.0, 10)),
            Err(Error::IncompatibleGrids(_))
        ));
    }

    #[test]
    fn round_trip_resample_smooth() {
        let g = grid(1.0, 200);
        let s = Signal::from_fn(g, |t| (3.0 * t).sin() + 0.5 * (7.0 * t).cos()).unwrap();
        let back = s.resample(grid(1.0, 331)).unwrap().resample(g).unwrap();
        let mut emax = 0.0f64;
        for (a, b) in s.values().iter().zip(back.values()) {
            emax = emax.max((a - b).abs());
        }
        // O(dt^4) with dt = 1/200
        assert!(emax < 1e-7, "round trip error {emax}");
    }
}
