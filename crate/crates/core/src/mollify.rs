//! Mollified targets w_delta = w~ * xi_delta and their derivative engine.
//!
//! The i-th derivative is
//!     w_delta^(i)(t) = delta^-i  int_0^{min(1, t/delta)} w~(t - delta s) xi^(i)(s) ds,
//! computed by composite Gauss-Legendre over fixed dyadic panel levels on
//! [0, 1] whose bump-derivative tables are shared across every evaluation
//! point, plus one fresh partial panel ending at the integrand kink s = t/delta
//! when t < delta. Panels double until the change per order is certified.
//!
//! High orders are cancellation-dominated: the integrand magnitude Q_i can
//! exceed the integral by hundreds of digits, so each d_i carries an error
//! bound err_i = max(doubling change, eps * Q_i). Consumers treat
//! |d_i| <~ err_i as numerical zero.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::bump::GevreyBump;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::{ln_gamma, Real};
use crate::target::Target;

/// Doubling certification threshold (relative), from the derivative contract.
const REL_TOL: f64 = 1e-10;
/// Gauss-Legendre nodes per panel.
const GL_NODES: usize = 12;
/// Dyadic levels: 2^k panels over [0,1].
const LEVEL_MIN: u32 = 6;
const LEVEL_MAX: u32 = 9;

/// Derivatives with their certified error bounds.
#[derive(Debug, Clone)]
pub struct DerivativeEstimate<F> {
    /// d_i = w_delta^(i)(t)
    pub values: Vec<F>,
    /// err_i: doubling change or quadrature noise floor, whichever is larger
    pub errors: Vec<F>,
}

struct LevelTable<F> {
    /// sigma nodes, length panels * GL_NODES, ascending
    nodes: Vec<F>,
    weights: Vec<F>,
    /// xi^(i)(sigma_j) row-major per node: xi[j * (max_order+1) + i]
    xi: Vec<F>,
}

pub struct MollifiedTarget<F> {
    base: Target<F>,
    delta: F,
    bump: GevreyBump<F>,
    max_order: usize,
    levels: [OnceLock<LevelTable<F>>; (LEVEL_MAX - LEVEL_MIN + 1) as usize],
    partial_rule: GaussLegendre<F>,
}

impl<F: Real> MollifiedTarget<F> {
    /// `max_order` caps the derivative order the tables support (the jet cap).
    pub fn new(base: Target<F>, delta: F, bump: GevreyBump<F>, max_order: usize) -> Result<Self> {
        if !(delta > F::zero()) || !delta.is_finite() {
            return Err(Error::OutOfRange(format!("delta must be positive, got {delta}")));
        }
        Ok(Self {
            base,
            delta,
            bump,
            max_order,
            levels: Default::default(),
            partial_rule: GaussLegendre::new(16),
        })
    }

    #[inline]
    pub fn delta(&self) -> F {
        self.delta
    }

    #[inline]
    pub fn bump(&self) -> &GevreyBump<F> {
        &self.bump
    }

    #[inline]
    pub fn base(&self) -> &Target<F> {
        &self.base
    }

    #[inline]
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn level(&self, k: u32) -> &LevelTable<F> {
        let idx = (k - LEVEL_MIN) as usize;
        self.levels[idx].get_or_init(|| {
            let panels = 1usize << k;
            let rule = GaussLegendre::<F>::new(GL_NODES);
            let h = F::one() / F::of_usize(panels);
            let mut nodes = Vec::with_capacity(panels * GL_NODES);
            let mut weights = Vec::with_capacity(panels * GL_NODES);
            for p in 0..panels {
                let a = F::of_usize(p) * h;
                for (x, w) in rule.mapped(a, a + h) {
                    nodes.push(x);
                    weights.push(w);
                }
            }
            let cols = self.max_order + 1;
            let mut xi = vec![F::zero(); nodes.len() * cols];
            xi.par_chunks_mut(cols).zip(nodes.par_iter()).for_each(|(row, &sig)| {
                let d = self.bump.derivatives(sig, self.max_order);
                row.copy_from_slice(&d);
            });
            LevelTable { nodes, weights, xi }
        })
    }

    /// Accumulates sum w(t - delta s) xi^(i)(s) ds and its absolute companion
    /// over [0, b] at a given level: full dyadic panels below b plus one fresh
    /// partial panel [k/P, b]. Only the first `acc.len()` orders are formed.
    fn integrate_level(&self, level: u32, t: F, b: F, acc: &mut [F], accq: &mut [F]) {
        let cols = self.max_order + 1;
        let n_out = acc.len();
        acc.fill(F::zero());
        accq.fill(F::zero());
        let table = self.level(level);
        let panels = 1usize << level;
        let h = F::one() / F::of_usize(panels);
        let full = (b / h).floor().to_usize().unwrap_or(0).min(panels);
        let n_nodes = full * GL_NODES;
        for j in 0..n_nodes {
            let sig = table.nodes[j];
            let wv = self.base.value(t - self.delta * sig);
            let ww = table.weights[j] * wv;
            let wabs = table.weights[j] * wv.abs();
            let row = &table.xi[j * cols..j * cols + n_out];
            for i in 0..n_out {
                acc[i] += ww * row[i];
                accq[i] += wabs * row[i].abs();
            }
        }
        let lo = F::of_usize(full) * h;
        if b - lo > F::of(1e-14) {
            for (sig, wq) in self.partial_rule.mapped(lo, b) {
                let d = self.bump.derivatives(sig, n_out - 1);
                let wv = self.base.value(t - self.delta * sig);
                let ww = wq * wv;
                let wabs = wq * wv.abs();
                for i in 0..n_out {
                    acc[i] += ww * d[i];
                    accq[i] += wabs * d[i].abs();
                }
            }
        }
    }

    /// Derivatives d_0..d_max_order at time t, with certified error bounds.
    pub fn derivatives_with_errors(&self, t: F, max_order: usize) -> Result<DerivativeEstimate<F>> {
        if max_order > self.max_order {
            return Err(Error::OrderCap(format!(
                "requested order {max_order} exceeds the table cap {}",
                self.max_order
            )));
        }
        let out_len = max_order + 1;
        if t <= F::zero() {
            return Ok(DerivativeEstimate {
                values: vec![F::zero(); out_len],
                errors: vec![F::zero(); out_len],
            });
        }
        let b = (t / self.delta).min(F::one());
        let mut coarse = vec![F::zero(); out_len];
        let mut coarse_q = vec![F::zero(); out_len];
        let mut fine = vec![F::zero(); out_len];
        let mut fine_q = vec![F::zero(); out_len];
        self.integrate_level(LEVEL_MIN, t, b, &mut coarse, &mut coarse_q);
        let eps = F::of(4.0) * F::epsilon();
        let rel = F::of(REL_TOL);
        let mut level = LEVEL_MIN;
        loop {
            level += 1;
            self.integrate_level(level, t, b, &mut fine, &mut fine_q);
            let mut certified = true;
            for i in 0..out_len {
                let diff = (fine[i] - coarse[i]).abs();
                let floor = eps * fine_q[i];
                if diff > rel * fine[i].abs() && diff > floor {
                    certified = false;
                    break;
                }
            }
            if certified || level >= LEVEL_MAX {
                let scale_pow = |i: usize| self.delta.powi(-(i as i32));
                let mut values = Vec::with_capacity(out_len);
                let mut errors = Vec::with_capacity(out_len);
                for i in 0..out_len {
                    let sc = scale_pow(i);
                    values.push(fine[i] * sc);
                    let diff = (fine[i] - coarse[i]).abs();
                    errors.push((diff.max(F::epsilon() * fine_q[i])) * sc);
                }
                return Ok(DerivativeEstimate { values, errors });
            }
            std::mem::swap(&mut coarse, &mut fine);
            std::mem::swap(&mut coarse_q, &mut fine_q);
        }
    }

    /// Plain derivative values (the error bounds dropped).
    pub fn derivatives(&self, t: F, max_order: usize) -> Result<Vec<F>> {
        Ok(self.derivatives_with_errors(t, max_order)?.values)
    }

    /// w_delta(t).
    pub fn value(&self, t: F) -> Result<F> {
        Ok(self.derivatives_with_errors(t, 0)?.values[0])
    }
}

/// Least-squares Gevrey certificate: fits ln sup|w^(i)| ~ ln C + r ln(i!) - i ln R
/// for the given r over i = 0..=I. Diagnostic only (the fit is not a bound).
/// Returns (C, R); (0, 1) when all derivatives vanish.
pub fn gevrey_certificate<F: Real>(sup_derivs: &[F], r: F) -> (F, F) {
    if sup_derivs.iter().all(|d| d.abs() == F::zero()) {
        return (F::zero(), F::one());
    }
    // y_i = ln sup_i - r ln(i!) = a - i b, least squares over usable rows
    let mut sx = F::zero();
    let mut sy = F::zero();
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    let mut m = F::zero();
    for (i, &d) in sup_derivs.iter().enumerate() {
        if d <= F::zero() {
            continue;
        }
        let x = F::of_usize(i);
        let y = d.ln() - r * ln_gamma(F::of_usize(i + 1));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += F::one();
    }
    if m < F::of(2.0) {
        return (sup_derivs[0].max(F::zero()), F::one());
    }
    let det = m * sxx - sx * sx;
    let a = (sy * sxx - sx * sxy) / det;
    let slope = (m * sxy - sx * sy) / det; // = -b
    (a.exp(), (-slope).exp())
}

/// Envelope variant used by the cost calibration: returns (C, R) with the
/// guarantee sup_i <= C (i!)^r / R^i for every measured order (R from the
/// least-squares slope, C inflated to cover all rows).
pub fn gevrey_envelope<F: Real>(sup_derivs: &[F], r: F) -> (F, F) {
    let (_, rr) = gevrey_certificate(sup_derivs, r);
    let mut c = F::zero();
    for (i, &d) in sup_derivs.iter().enumerate() {
        if d <= F::zero() {
            continue;
        }
        let ln_c = d.ln() + F::of_usize(i) * rr.ln() - r * ln_gamma(F::of_usize(i + 1));
        c = c.max(ln_c.exp());
    }
    (c, rr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive_seeded;
    use approx::assert_abs_diff_eq;

    fn ramp_mollified(delta: f64, r: f64, max_order: usize) -> MollifiedTarget<f64> {
        MollifiedTarget::new(
            Target::Ramp { slope: 1.0 },
            delta,
            GevreyBump::new(r).unwrap(),
            max_order,
        )
        .unwrap()
    }

    #[test]
    fn zero_base_gives_zero_derivatives() {
        let m = MollifiedTarget::new(Target::Zero, 0.1, GevreyBump::new(1.5).unwrap(), 8).unwrap();
        let d = m.derivatives(0.5, 8).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanishes_at_t_zero_exactly() {
        let m = ramp_mollified(0.1, 1.5, 4);
        let d = m.derivatives(0.0, 4).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_value_matches_closed_form() {
        // For t >= delta: w_delta(t) = t - delta * mu1 with mu1 = int s xi(s) ds.
        // The bump is symmetric about 1/2 for every order, so mu1 = 1/2;
        // cross-check mu1 by an independent quadrature anyway.
        let delta = 0.1;
        let m = ramp_mollified(delta, 2.0, 0);
        let b = GevreyBump::new(2.0).unwrap();
        let mu1 = integrate_adaptive_seeded(&b.quadrature_breakpoints(0.0, 1.0), 1e-12, &|s| {
            s * b.value(s)
        });
        assert_abs_diff_eq!(mu1, 0.5, epsilon = 1e-10);
        for &t in &[0.15, 0.5, 0.9] {
            let d0 = m.value(t).unwrap();
            assert_abs_diff_eq!(d0, t - delta * mu1, epsilon = 1e-11);
        }
    }

    #[test]
    fn ramp_first_derivative_is_one_past_delta() {
        let m = ramp_mollified(0.1, 1.5, 2);
        for &t in &[0.12, 0.4, 1.0] {
            let d = m.derivatives(t, 1).unwrap();
            assert_abs_diff_eq!(d[1], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn ramp_high_orders_vanish_past_delta_within_noise() {
        let m = ramp_mollified(0.1, 1.5, 24);
        let est = m.derivatives_with_errors(0.5, 24).unwrap();
        for i in 2..=24 {
            assert!(
                est.values[i].abs() <= 8.0 * est.errors[i].max(1e-9),
                "i={i}: value {} error bound {}",
                est.values[i],
                est.errors[i]
            );
        }
    }

    #[test]
    fn transient_window_matches_bump_closed_form() {
        // For the unit ramp and t < delta: d_i(t) = delta^{1-i} xi^{(i-2)}(t/delta), i >= 2
        // (two integrations by parts; boundary terms vanish).
        let delta = 0.1;
        let bump = GevreyBump::new(1.5).unwrap();
        let m = ramp_mollified(delta, 1.5, 20);
        for &t in &[0.03, 0.05, 0.08] {
            let est = m.derivatives_with_errors(t, 20).unwrap();
            let xi = bump.derivatives(t / delta, 18);
            for i in 2..=20usize {
                let expect = delta.powi(1 - i as i32) * xi[i - 2];
                let err = (est.values[i] - expect).abs();
                let tol = 1e-7 * expect.abs() + 8.0 * est.errors[i] + 1e-12;
                assert!(err <= tol, "t={t} i={i}: got {} expect {expect} err {err} tol {tol}", est.values[i]);
            }
        }
    }

    #[test]
    fn mollification_error_bounded_by_delta_norm() {
        // |w_delta - w| <= delta ||w||_W1inf for Lipschitz targets
        let delta = 0.1;
        let m = ramp_mollified(delta, 1.5, 0);
        let mut emax = 0.0f64;
        for k in 0..=400 {
            let t = k as f64 / 400.0;
            let wd = m.value(t).unwrap();
            emax = emax.max((wd - t.max(0.0)).abs());
        }
        assert!(emax <= delta + 1e-9, "emax {emax}");
    }

    #[test]
    fn derivative_consistency_with_value_differences() {
        // d_1 and d_2 against finite differences of d_0(t)
        let m = ramp_mollified(0.2, 1.5, 2);
        let h = 1e-4;
        for &t in &[0.1, 0.15, 0.25] {
            let d = m.derivatives(t, 2).unwrap();
            let vp = m.value(t + h).unwrap();
            let v0 = m.value(t).unwrap();
            let vm = m.value(t - h).unwrap();
            let fd1 = (vp - vm) / (2.0 * h);
            let fd2 = (vp - 2.0 * v0 + vm) / (h * h);
            assert!((d[1] - fd1).abs() < 1e-5 * d[1].abs().max(1.0), "t={t}");
            assert!((d[2] - fd2).abs() < 1e-2 * d[2].abs().max(1.0), "t={t}: {} vs {fd2}", d[2]);
        }
    }

    #[test]
    fn order_cap_is_enforced() {
        let m = ramp_mollified(0.1, 1.5, 4);
        assert!(matches!(m.derivatives(0.5, 5), Err(Error::OrderCap(_))));
    }

    #[test]
    fn certificate_on_exponential_derivatives() {
        // w = e^t on [0,1]: sup |w^(i)| = e; with r = 0 the fit must give
        // R ~ 1 and C ~ e.
        let sup: Vec<f64> = (0..12).map(|_| std::f64::consts::E).collect();
        let (c, r) = gevrey_certificate(&sup, 0.0);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c, std::f64::consts::E, epsilon = 1e-9);
    }

    #[test]
    fn certificate_zero_input() {
        let sup = vec![0.0f64; 8];
        assert_eq!(gevrey_certificate(&sup, 1.5), (0.0, 1.0));
    }

    #[test]
    fn certificate_scales_with_delta() {
        // mollified ramp: fitted R should scale ~ delta (growth (C/delta)^i (i!)^{2-s})
        let orders = 14;
        let mut fitted = Vec::new();
        for &delta in &[0.1f64, 0.2] {
            let m = ramp_mollified(delta, 1.5, orders);
            let mut sup = vec![0.0f64; orders + 1];
            for k in 1..=60 {
                let t = 1.2 * delta * k as f64 / 60.0;
                let d = m.derivatives(t, orders).unwrap();
                for i in 0..=orders {
                    sup[i] = sup[i].max(d[i].abs());
                }
            }
            let (_, r) = gevrey_certificate(&sup, 1.5);
            fitted.push(r);
        }
        let ratio = fitted[1] / fitted[0];
        assert!((ratio - 2.0).abs() < 0.5, "R-scaling ratio {ratio}, fitted {fitted:?}");
    }

    #[test]
    fn envelope_actually_dominates() {
        let m = ramp_mollified(0.1, 1.5, 16);
        let mut sup = vec![0.0f64; 17];
        for k in 1..=80 {
            let t = 0.15 * k as f64 / 80.0;
            let d = m.derivatives(t, 16).unwrap();
            for i in 0..=16 {
                sup[i] = sup[i].max(d[i].abs());
            }
        }
        let (c, r) = gevrey_envelope(&sup, 1.5);
        for (i, &s) in sup.iter().enumerate() {
            let bound = c.ln() + 1.5 * crate::scalar::ln_gamma((i + 1) as f64) - i as f64 * r.ln();
            assert!(s.ln() <= bound + 1e-9, "i={i}");
        }
    }
}
