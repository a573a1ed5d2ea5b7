//! Explicit leapfrog solver for the unit-speed wave equation on a symmetric
//! pseudo-time interval [-S, S], launched from data at s = 0 in both
//! directions (the backward run flips the velocity sign).

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::SpaceGrid;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct WaveProblem<F> {
    pub xgrid: SpaceGrid<F>,
    /// Pseudo-time half-span: the grid covers [-s_max, s_max].
    pub s_max: F,
    /// Total number of steps across the span; must be even so s = 0 is a node.
    pub n_steps: usize,
    /// Dirichlet control at x = L, sampled at the s-nodes (length n_steps + 1).
    pub control: Vec<F>,
    /// Displacement at s = 0.
    pub initial_displacement: Vec<F>,
    /// Velocity at s = 0 (must vanish when the field feeds transmutation).
    pub initial_velocity: Vec<F>,
}

impl<F: Real> WaveProblem<F> {
    pub fn new(
        xgrid: SpaceGrid<F>,
        s_max: F,
        n_steps: usize,
        control: Vec<F>,
        initial_displacement: Vec<F>,
        initial_velocity: Vec<F>,
    ) -> Result<Self> {
        if !(s_max > F::zero()) {
            return Err(Error::InvalidGrid(format!("s_max must be positive, got {s_max}")));
        }
        if n_steps < 2 || n_steps % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_steps must be even and >= 2, got {n_steps}")));
        }
        if control.len() != n_steps + 1 {
            return Err(Error::InvalidInput(format!(
                "control needs {} samples, got {}",
                n_steps + 1,
                control.len()
            )));
        }
        let nn = xgrid.n_nodes();
        if initial_displacement.len() != nn || initial_velocity.len() != nn {
            return Err(Error::InvalidInput("initial data length mismatch".into()));
        }
        if control.iter().chain(&initial_displacement).chain(&initial_velocity).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite wave data".into()));
        }
        Ok(Self { xgrid, s_max, n_steps, control, initial_displacement, initial_velocity })
    }

    #[inline]
    pub fn ds(&self) -> F {
        F::of(2.0) * self.s_max / F::of_usize(self.n_steps)
    }

    /// Courant number ds/dx; stability needs <= 1.
    #[inline]
    pub fn courant(&self) -> F {
        self.ds() / self.xgrid.dx()
    }
}

pub fn solve_wave<F: Real>(p: &WaveProblem<F>) -> Result<WaveField<F>> {
    let lambda = p.courant();
    if lambda > F::one() + F::of(1e-12) {
        return Err(Error::Stability(format!(
            "CFL violated: ds/dx = {lambda} > 1"
        )));
    }
    let n = p.xgrid.n_cells();
    let m0 = p.n_steps / 2; // index of s = 0
    let lam2 = lambda * lambda;
    let ds = p.ds();
    let mut field = WaveField::from_raw(
        p.s_max,
        p.n_steps,
        p.xgrid,
        vec![F::zero(); (p.n_steps + 1) * p.xgrid.n_nodes()],
    );

    // boundary columns for every s-node
    for mrow in 0..=p.n_steps {
        let row = field.row_mut(mrow);
        row[0] = F::zero();
        row[n] = p.control[mrow];
    }
    {
        let row = field.row_mut(m0);
        for i in 1..n {
            row[i] = p.initial_displacement[i];
        }
    }

    let lap = |row: &[F], i: usize| row[i + 1] - F::of(2.0) * row[i] + row[i - 1];
    let half = F::of(0.5);

    // Taylor start in each direction: z(+-ds) = z0 +- ds z1 + ds^2/2 lap(z0)
    for (target, sign) in [(m0 + 1, F::one()), (m0 - 1, -F::one())] {
        let base: Vec<F> = field.row(m0).to_vec();
        let row = field.row_mut(target);
        for i in 1..n {
            row[i] = base[i]
                + sign * ds * p.initial_velocity[i]
                + half * lam2 * lap(&base, i);
        }
    }
    // forward sweep
    for mrow in m0 + 1..p.n_steps {
        let prev: Vec<F> = field.row(mrow - 1).to_vec();
        let cur: Vec<F> = field.row(mrow).to_vec();
        let row = field.row_mut(mrow + 1);
        for i in 1..n {
            row[i] = F::of(2.0) * cur[i] - prev[i] + lam2 * lap(&cur, i);
        }
    }
    // backward sweep (the equation is s-reversible)
    for mrow in (1..m0).rev() {
        let prev: Vec<F> = field.row(mrow + 1).to_vec();
        let cur: Vec<F> = field.row(mrow).to_vec();
        let row = field.row_mut(mrow - 1);
        for i in 1..n {
            row[i] = F::of(2.0) * cur[i] - prev[i] + lam2 * lap(&cur, i);
        }
    }
    Ok(field)
}

/// Discrete leapfrog energy at each half step,
///   E^{m+1/2} = 1/2 ||(z^{m+1}-z^m)/ds||^2 + 1/2 a(z^m, z^{m+1}),
/// with a(u,v) = sum over faces of (Du)(Dv)/dx^2 * dx. Exactly conserved for
/// homogeneous boundary data.
pub fn wave_energy<F: Real>(field: &WaveField<F>) -> Vec<F> {
    let n = field.xgrid().n_cells();
    let dx = field.xgrid().dx();
    let ds = field.ds();
    let half = F::of(0.5);
    (0..field.n_steps())
        .map(|mrow| {
            let a = field.row(mrow);
            let b = field.row(mrow + 1);
            let mut kinetic = F::zero();
            for i in 0..=n {
                let v = (b[i] - a[i]) / ds;
                kinetic += v * v;
            }
            let mut potential = F::zero();
            for i in 0..n {
                potential += (a[i + 1] - a[i]) * (b[i + 1] - b[i]) / (dx * dx);
            }
            half * dx * (kinetic + potential)
        })
        .collect()
}
