//! Tracking-target families. Closed forms carry exact derivatives; sampled
//! targets fall back to cubic reconstruction and finite-difference norms.

use crate::bump::GevreyBump;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;
use crate::signal::{NormKind, Signal};

/// A prescribed flux trajectory w on [0, T], extended by zero to t < 0.
#[derive(Debug, Clone)]
pub enum Target<F> {
    Zero,
    /// w(t) = slope * t
    Ramp { slope: F },
    /// w(t) = amplitude * sin(2 pi frequency t)
    Sine { amplitude: F, frequency: F },
    /// w(t) = scale * integral_0^{(t-onset)/width} of the order-r bump;
    /// smooth step from 0 to `scale`, flat at t = 0 by construction.
    BumpIntegral { scale: F, onset: F, width: F, bump: GevreyBump<F> },
    /// Nodal samples with piecewise-cubic reconstruction.
    Samples(Signal<F>),
}

impl<F: Real> Target<F> {
    pub fn bump_integral(scale: F, onset: F, width: F, gevrey_order: F) -> Result<Self> {
        if !(width > F::zero()) {
            return Err(Error::OutOfRange(format!("bump width must be positive, got {width}")));
        }
        if onset < F::zero() {
            return Err(Error::OutOfRange(format!("bump onset must be >= 0, got {onset}")));
        }
        Ok(Target::BumpIntegral { scale, onset, width, bump: GevreyBump::new(gevrey_order)? })
    }

    /// Value with the zero extension for t <= 0.
    pub fn value(&self, t: F) -> F {
        if t <= F::zero() {
            return F::zero();
        }
        match self {
            Target::Zero => F::zero(),
            Target::Ramp { slope } => *slope * t,
            Target::Sine { amplitude, frequency } => {
                *amplitude * (F::of(2.0) * F::of(std::f64::consts::PI) * *frequency * t).sin()
            }
            Target::BumpIntegral { scale, onset, width, bump } => {
                let u = (t - *onset) / *width;
                *scale * bump.integral(u)
            }
            Target::Samples(s) => {
                if t >= s.grid().t_end() {
                    *s.values().last().unwrap()
                } else {
                    s.eval(t)
                }
            }
        }
    }

    /// First derivative. Closed forms are exact; samples use a centered
    /// difference of the cubic reconstruction.
    pub fn derivative(&self, t: F) -> F {
        if t < F::zero() {
            return F::zero();
        }
        match self {
            Target::Zero => F::zero(),
            Target::Ramp { slope } => *slope,
            Target::Sine { amplitude, frequency } => {
                let om = F::of(2.0) * F::of(std::f64::consts::PI) * *frequency;
                *amplitude * om * (om * t).cos()
            }
            Target::BumpIntegral { scale, onset, width, bump } => {
                let u = (t - *onset) / *width;
                *scale * bump.value(u) / *width
            }
            Target::Samples(s) => {
                let h = s.grid().dt() * F::of(0.5);
                (s.eval((t + h).min(s.grid().t_end())) - s.eval((t - h).max(F::zero())))
                    / (F::of(2.0) * h)
            }
        }
    }

    /// Sampled signal over a grid.
    pub fn sample(&self, grid: TimeGrid<F>) -> Result<Signal<F>> {
        Signal::from_fn(grid, |t| self.value(t))
    }

    /// W^{1,inf}-style norm max(sup |w|, sup |w'|), evaluated on a reference
    /// grid; closed-form derivatives where available, finite differences for
    /// sampled data (matching `Signal::norm(W1Inf)` there).
    pub fn w1inf_norm(&self, t_end: F, n_reference: usize) -> Result<F> {
        match self {
            Target::Zero => Ok(F::zero()),
            Target::Samples(s) => Ok(s.norm(NormKind::W1Inf)),
            _ => {
                let grid = TimeGrid::new(t_end, n_reference.max(2))?;
                let mut m = F::zero();
                for t in grid.nodes() {
                    m = m.max(self.value(t).abs()).max(self.derivative(t).abs());
                }
                Ok(m)
            }
        }
    }

    /// Whether the target satisfies w(0) = 0 within the given tolerance.
    pub fn vanishes_at_zero(&self, tol: F) -> bool {
        self.value(F::zero()).abs() <= tol && {
            // guard against a jump at 0+ for sampled data
            self.value(F::of(1e-14)).abs() <= tol.max(F::of(1e-10))
        }
    }
}
