//! The compactly supported Gevrey cut-off
//!     xi(t) = N_r exp(-((1-t) t)^(-1/(r-1)))  on (0, 1),   xi = 0 elsewhere,
//! normalized to unit mass.
//!
//! All evaluation shifts by ln N_r inside the exponent: for r near 1 the
//! unnormalized bump underflows f64 (its maximum is exp(-4^{1/(r-1)})) while
//! N_r overflows, but the normalized values and their derivatives are fine.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::integrate_adaptive_seeded;
use crate::scalar::Real;

/// Guard distance from the support endpoints: inside it every derivative is
/// below f64 resolution anyway, and the exponent jet would overflow.
const ENDPOINT_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevreyBump<F> {
    gevrey_order: F,
    ln_norm: F,
}

impl<F: Real> GevreyBump<F> {
    /// Builds the bump of the given Gevrey order with unit mass; the
    /// normalization integral is computed adaptively to 1e-12 relative.
    pub fn new(gevrey_order: F) -> Result<Self> {
        if !(gevrey_order > F::one()) || !gevrey_order.is_finite() {
            return Err(Error::OutOfRange(format!(
                "bump order must satisfy r > 1, got {gevrey_order}"
            )));
        }
        // peak exponent at t = 1/2: q_min = 4^{1/(r-1)}; integrate the shifted
        // integrand exp(q_min - q(t)) <= 1 and fold the shift into the log.
        let alpha = F::one() / (gevrey_order - F::one());
        let q_min = F::of(4.0).powf(alpha);
        let shifted = |t: F| -> F {
            if t <= F::of(ENDPOINT_GUARD) || t >= F::one() - F::of(ENDPOINT_GUARD) {
                return F::zero();
            }
            let q = ((F::one() - t) * t).powf(-alpha);
            (q_min - q).exp()
        };
        let breaks = peak_breakpoints(alpha, F::zero(), F::one());
        let integral = integrate_adaptive_seeded(&breaks, F::of(1e-12), &shifted);
        if !(integral > F::zero()) || !integral.is_finite() {
            return Err(Error::OutOfRange(format!(
                "normalization integral degenerate for r = {gevrey_order}"
            )));
        }
        // ln N_r = q_min - ln(shifted integral)
        let ln_norm = q_min - integral.ln();
        Ok(Self { gevrey_order, ln_norm })
    }

    /// Quadrature breakpoints resolving the peak at t = 1/2, clipped to
    /// [lo, hi]. The peak width shrinks like 2^{-1/(r-1)}, far below what
    /// bisection alone can discover for r near 1.
    pub fn quadrature_breakpoints(&self, lo: F, hi: F) -> Vec<F> {
        let alpha = F::one() / (self.gevrey_order - F::one());
        peak_breakpoints(alpha, lo, hi)
    }

    #[inline]
    pub fn gevrey_order(&self) -> F {
        self.gevrey_order
    }

    /// ln N_r; finite for every r > 1.
    #[inline]
    pub fn ln_normalization(&self) -> F {
        self.ln_norm
    }

    /// N_r itself. Overflows to +inf for r close enough to 1; prefer
    /// [`Self::ln_normalization`] in computations.
    #[inline]
    pub fn normalization(&self) -> F {
        self.ln_norm.exp()
    }

    /// Pointwise value of the normalized bump.
    pub fn value(&self, t: F) -> F {
        if t <= F::of(ENDPOINT_GUARD) || t >= F::one() - F::of(ENDPOINT_GUARD) {
            return F::zero();
        }
        let alpha = F::one() / (self.gevrey_order - F::one());
        let q = ((F::one() - t) * t).powf(-alpha);
        (self.ln_norm - q).exp()
    }

    /// Cumulative integral of the bump over [0, t], adaptive to ~1e-12.
    /// Monotone from 0 to 1 across the support.
    pub fn integral(&self, t: F) -> F {
        if t <= F::of(ENDPOINT_GUARD) {
            return F::zero();
        }
        let upper = t.min(F::one());
        let breaks = self.quadrature_breakpoints(F::zero(), upper);
        integrate_adaptive_seeded(&breaks, F::of(1e-12), &|u| self.value(u))
    }

    /// Jet of the normalized bump at `t`: the zero jet outside the open
    /// support (every derivative genuinely vanishes there, and inside the
    /// endpoint guard the exponent underflows all coefficients to zero).
    pub fn jet(&self, t: F, order: usize) -> Jet<F> {
        if t <= F::of(ENDPOINT_GUARD) || t >= F::one() - F::of(ENDPOINT_GUARD) {
            return Jet::zero(t, order);
        }
        let alpha = F::one() / (self.gevrey_order - F::one());
        let base = (F::one() - t) * t;
        // ln q_0; skip the jet entirely once exp(ln_norm - q_0) underflows
        let ln_q0 = -alpha * base.ln();
        if ln_q0 > F::of(709.0) || self.ln_norm - ln_q0.exp() < F::of(-745.0) {
            return Jet::zero(t, order);
        }
        let u = Jet::new(t, u_coeffs(t, order));
        let q = u.power_neg(alpha).expect("base positive inside support");
        // exponent jet: (ln N_r - q)
        let shifted = q.scale(-F::one()).add(&Jet::constant(t, self.ln_norm, order)).expect("same center");
        shifted.compose_exp()
    }

    /// Derivative values xi^(i)(t) for i = 0..=order.
    pub fn derivatives(&self, t: F, order: usize) -> Vec<F> {
        let jet = self.jet(t, order);
        let mut fact = F::one();
        (0..=order)
            .map(|i| {
                if i > 0 {
                    fact *= F::of_usize(i);
                }
                jet.coeff(i) * fact
            })
            .collect()
    }
}

/// Breakpoints at 1/2 +- sigma {0, 1, 2, 4, ...} where sigma is the Laplace
/// width of exp(-q) about the minimum of q at 1/2, clipped to [lo, hi].
fn peak_breakpoints<F: Real>(alpha: F, lo: F, hi: F) -> Vec<F> {
    let half = F::of(0.5);
    let sigma = F::one() / (F::of(8.0) * alpha * F::of(4.0).powf(alpha)).sqrt();
    let mut pts = vec![lo, hi];
    let mut k = F::one();
    loop {
        let off = sigma * k;
        if off > half {
            break;
        }
        for cand in [half - off, half + off, half] {
            if cand > lo && cand < hi {
                pts.push(cand);
            }
        }
        k = k * F::of(2.0);
    }
    if half > lo && half < hi {
        pts.push(half);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn u_coeffs<F: Real>(t: F, order: usize) -> Vec<F> {
    // jet coefficients of (1-t)t at t
    let mut c = vec![F::zero(); order + 1];
    c[0] = (F::one() - t) * t;
    if order >= 1 {
        c[1] = F::one() - F::of(2.0) * t;
    }
    if order >= 2 {
        c[2] = -F::one();
    }
    c
}
