//! Flatness synthesis: for a target whose derivatives all vanish at t = 0,
//! the control
//!     v(t) = sum_i L^{2i+1}/(2i+1)! w^(i)(t)
//! steers the boundary so the flux at x = 0 tracks w exactly, with the state
//!     y(t,x) = sum_i x^{2i+1}/(2i+1)! w^(i)(t).
//! Rough targets are first mollified to a Gevrey approximation w_delta with
//! delta = eps / ||w||_W1inf, giving tracking within eps at a cost bounded by
//! the growth function G_s.

use serde::{Deserialize, Serialize};

use crate::bump::GevreyBump;
use crate::error::{Error, Result};
use crate::field::HeatField;
use crate::grid::{SpaceGrid, TimeGrid};
use crate::mollify::{gevrey_envelope, DerivativeEstimate, MollifiedTarget};
use crate::scalar::{ln_factorial, Real};
use crate::signal::{NormKind, Signal};
use crate::special::{fit_upper_constant, gs_eval};
use crate::target::Target;

/// Default relative tolerance for series truncation.
pub const DEFAULT_TOL_SERIES: f64 = 1e-12;
/// Default derivative-order cap shared with the jet tables.
pub const DEFAULT_N_MAX: usize = 64;
/// Reference grid resolution for norm evaluation.
const NORM_GRID: usize = 2000;

/// Where a flat target's derivatives come from.
pub enum FlatSource<F> {
    /// Identically zero target.
    Zero,
    /// Closed-form flat family: scale * cumulative bump((t-onset)/width).
    BumpIntegral { scale: F, onset: F, width: F, bump: GevreyBump<F> },
    /// Mollified rough target.
    Mollified(MollifiedTarget<F>),
}

/// A target all of whose derivatives vanish at t = 0, with derivative access
/// up to the configured cap.
pub struct FlatTarget<F> {
    source: FlatSource<F>,
    gevrey_order: F,
    n_max: usize,
}

impl<F: Real> FlatTarget<F> {
    /// Wraps a closed-form flat target (`Zero` or `BumpIntegral` families).
    /// Other families are not flat at 0; mollify them via [`make_flat_target`].
    pub fn from_closed_form(target: &Target<F>, n_max: usize) -> Result<Self> {
        match target {
            Target::Zero => Ok(Self { source: FlatSource::Zero, gevrey_order: F::one(), n_max }),
            Target::BumpIntegral { scale, onset, width, bump } => {
                let t = Self {
                    source: FlatSource::BumpIntegral {
                        scale: *scale,
                        onset: *onset,
                        width: *width,
                        bump: *bump,
                    },
                    gevrey_order: bump.gevrey_order(),
                    n_max,
                };
                t.check_flat_at_zero()?;
                Ok(t)
            }
            _ => Err(Error::IncompatibleTarget(
                "only the zero and bump-integral families are flat in closed form; mollify instead"
                    .into(),
            )),
        }
    }

    pub fn from_mollified(m: MollifiedTarget<F>) -> Self {
        let r = m.bump().gevrey_order();
        let n_max = m.max_order();
        Self { source: FlatSource::Mollified(m), gevrey_order: r, n_max }
    }

    #[inline]
    pub fn gevrey_order(&self) -> F {
        self.gevrey_order
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    #[inline]
    pub fn source(&self) -> &FlatSource<F> {
        &self.source
    }

    fn check_flat_at_zero(&self) -> Result<()> {
        let d = self.derivatives_with_errors(F::zero(), self.n_max.min(16))?;
        let bad = d.values.iter().position(|v| v.abs() > F::of(1e-12));
        if let Some(i) = bad {
            return Err(Error::IncompatibleTarget(format!(
                "derivative of order {i} does not vanish at t = 0: {}",
                d.values[i]
            )));
        }
        Ok(())
    }

    /// w^(i)(t) for i = 0..=max_order with error bounds (zero for closed forms).
    pub fn derivatives_with_errors(&self, t: F, max_order: usize) -> Result<DerivativeEstimate<F>> {
        if max_order > self.n_max {
            return Err(Error::OrderCap(format!(
                "order {max_order} exceeds the configured cap {}",
                self.n_max
            )));
        }
        match &self.source {
            FlatSource::Zero => Ok(DerivativeEstimate {
                values: vec![F::zero(); max_order + 1],
                errors: vec![F::zero(); max_order + 1],
            }),
            FlatSource::BumpIntegral { scale, onset, width, bump } => {
                let u = (t - *onset) / *width;
                let mut values = vec![F::zero(); max_order + 1];
                if u > F::zero() {
                    values[0] = *scale * bump.integral(u);
                    if max_order >= 1 {
                        let xi = bump.derivatives(u, max_order - 1);
                        let mut wpow = *width;
                        for i in 1..=max_order {
                            values[i] = *scale * xi[i - 1] / wpow;
                            wpow *= *width;
                        }
                    }
                }
                Ok(DerivativeEstimate { errors: vec![F::zero(); values.len()], values })
            }
            FlatSource::Mollified(m) => m.derivatives_with_errors(t, max_order),
        }
    }

    /// Target value w(t) (the mollified value for rough bases).
    pub fn value(&self, t: F) -> Result<F> {
        Ok(self.derivatives_with_errors(t, 0)?.values[0])
    }
}

/// Series-synthesis options.
#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions<F> {
    pub tol_series: F,
    pub n_max: usize,
}

impl<F: Real> Default for SeriesOptions<F> {
    fn default() -> Self {
        Self { tol_series: F::of(DEFAULT_TOL_SERIES), n_max: DEFAULT_N_MAX }
    }
}

/// A synthesized boundary control with truncation diagnostics.
#[derive(Debug, Clone)]
pub struct SeriesControl<F> {
    pub control: Signal<F>,
    /// Series terms used at each time node.
    pub terms_used: Vec<usize>,
    /// Max over nodes of |last included term| / max(1, |sum|).
    pub truncation_residual: F,
    /// Max over nodes of the accumulated quadrature-noise bound on the sum.
    pub noise_level: F,
    /// False when the order cap was hit before the tolerance at some node.
    pub converged: bool,
}

struct SeriesAccum<F> {
    sum: F,
    terms: usize,
    residual: F,
    noise: F,
    converged: bool,
}

/// Coefficients L^{2i+1}/(2i+1)! for i = 0..=n. The running product is exact
/// to rounding and underflows benignly; if an intermediate overflows (very
/// large L) the whole table is rebuilt in log space instead.
fn series_coefficients<F: Real>(length: F, n: usize) -> Vec<F> {
    let mut out = Vec::with_capacity(n + 1);
    let mut c = length;
    let l2 = length * length;
    for i in 0..=n {
        if i > 0 {
            c = c * l2 / (F::of_usize(2 * i) * F::of_usize(2 * i + 1));
        }
        out.push(c);
    }
    if out.iter().all(|v| v.is_finite()) {
        return out;
    }
    let ln_l = length.ln();
    (0..=n)
        .map(|i| (F::of_usize(2 * i + 1) * ln_l - ln_factorial::<F>(2 * i + 1)).exp())
        .collect()
}

fn sum_series<F: Real>(
    coefs: &[F],
    est: &DerivativeEstimate<F>,
    tol: F,
) -> SeriesAccum<F> {
    let mut sum = F::zero();
    let mut noise = F::zero();
    let mut consec = 0usize;
    let mut used = 0usize;
    let mut last_rel = F::zero();
    let mut converged = false;
    for i in 0..est.values.len() {
        let term = coefs[i] * est.values[i];
        let term_noise = coefs[i] * est.errors[i];
        sum += term;
        noise += term_noise;
        used = i + 1;
        let scale = sum.abs().max(F::one());
        last_rel = term.abs() / scale;
        let negligible = term.abs() < tol * scale
            || est.values[i].abs() <= F::of(8.0) * est.errors[i];
        if negligible {
            consec += 1;
            if consec >= 3 {
                converged = true;
                break;
            }
        } else {
            consec = 0;
        }
    }
    SeriesAccum { sum, terms: used, residual: last_rel, noise, converged }
}

/// Builds the flatness boundary control on the given time grid.
pub fn flat_control<F: Real>(
    target: &FlatTarget<F>,
    length: F,
    tgrid: TimeGrid<F>,
    opts: SeriesOptions<F>,
) -> Result<SeriesControl<F>> {
    if target.gevrey_order() >= F::of(2.0) {
        return Err(Error::DivergentSeries(format!(
            "flatness series requires Gevrey order < 2, got {}",
            target.gevrey_order()
        )));
    }
    let n_max = opts.n_max.min(target.n_max());
    let coefs = series_coefficients(length, n_max);
    let n_nodes = tgrid.n_nodes();
    let mut values = vec![F::zero(); n_nodes];
    let mut terms_used = vec![0usize; n_nodes];
    let mut residual = F::zero();
    let mut noise = F::zero();
    let mut converged = true;
    for k in 0..n_nodes {
        let est = target.derivatives_with_errors(tgrid.node(k), n_max)?;
        let acc = sum_series(&coefs, &est, opts.tol_series);
        values[k] = acc.sum;
        terms_used[k] = acc.terms;
        residual = residual.max(acc.residual);
        noise = noise.max(acc.noise);
        converged &= acc.converged;
    }
    Ok(SeriesControl {
        control: Signal::new(tgrid, values)?,
        terms_used,
        truncation_residual: residual,
        noise_level: noise,
        converged,
    })
}

/// Assembles the series state y(t,x); the i = 0 term alone carries the flux,
/// so d_x y(., 0) equals the target by construction.
pub fn series_state<F: Real>(
    target: &FlatTarget<F>,
    xgrid: SpaceGrid<F>,
    tgrid: TimeGrid<F>,
    opts: SeriesOptions<F>,
) -> Result<HeatField<F>> {
    if target.gevrey_order() >= F::of(2.0) {
        return Err(Error::DivergentSeries(format!(
            "flatness series requires Gevrey order < 2, got {}",
            target.gevrey_order()
        )));
    }
    let n_max = opts.n_max.min(target.n_max());
    let col_coefs: Vec<Vec<F>> = xgrid
        .nodes()
        .map(|x| {
            if x <= F::zero() {
                vec![F::zero(); n_max + 1]
            } else {
                series_coefficients(x, n_max)
            }
        })
        .collect();
    // truncation driven at the widest column x = L
    let l_coefs = series_coefficients(xgrid.length(), n_max);
    let mut field = HeatField::zeros(tgrid, xgrid);
    for k in 0..tgrid.n_nodes() {
        let est = target.derivatives_with_errors(tgrid.node(k), n_max)?;
        let acc = sum_series(&l_coefs, &est, opts.tol_series);
        let row = field.row_mut(k);
        for (i, col) in col_coefs.iter().enumerate() {
            let mut s = F::zero();
            for j in 0..acc.terms {
                s += col[j] * est.values[j];
            }
            row[i] = s;
        }
    }
    Ok(field)
}

/// Pointwise evaluation of the series state and its exact time derivative at
/// one point, used by residual probes.
pub fn series_state_point<F: Real>(
    target: &FlatTarget<F>,
    x: F,
    t: F,
    opts: SeriesOptions<F>,
) -> Result<F> {
    let n_max = opts.n_max.min(target.n_max());
    if x <= F::zero() {
        return Ok(F::zero());
    }
    let coefs = series_coefficients(x, n_max);
    let est = target.derivatives_with_errors(t, n_max)?;
    Ok(sum_series(&coefs, &est, opts.tol_series).sum)
}

/// Result of preparing a mollified flat target.
pub struct MollifyPlan<F> {
    pub target: FlatTarget<F>,
    /// Mollification width eps / ||w||_W1inf (clamped to the horizon).
    pub delta: F,
    pub delta_clamped: bool,
    /// True when the base target is identically zero (delta is then moot).
    pub degenerate_zero: bool,
    pub w_norm: F,
}

/// Mollifies a rough target into a flat Gevrey one: bump order r = 2 - s,
/// delta = eps / ||w||_W1inf.
pub fn make_flat_target<F: Real>(
    base: &Target<F>,
    s: F,
    eps: F,
    t_end: F,
    n_max: usize,
) -> Result<MollifyPlan<F>> {
    if !(s > F::zero() && s < F::one()) {
        return Err(Error::OutOfRange(format!("smoothing exponent s must lie in (0,1), got {s}")));
    }
    if !(eps > F::zero()) {
        return Err(Error::OutOfRange(format!("eps must be positive, got {eps}")));
    }
    if !base.vanishes_at_zero(F::of(1e-10)) {
        return Err(Error::IncompatibleTarget(format!(
            "target must vanish at t = 0, got w(0) = {}",
            base.value(F::zero())
        )));
    }
    let w_norm = base.w1inf_norm(t_end, NORM_GRID)?;
    if w_norm == F::zero() {
        return Ok(MollifyPlan {
            target: FlatTarget { source: FlatSource::Zero, gevrey_order: F::one(), n_max },
            delta: F::zero(),
            delta_clamped: false,
            degenerate_zero: true,
            w_norm,
        });
    }
    let raw_delta = eps / w_norm;
    let (delta, clamped) = if raw_delta > t_end { (t_end, true) } else { (raw_delta, false) };
    let r = F::of(2.0) - s;
    let bump = GevreyBump::new(r)?;
    let m = MollifiedTarget::new(base.clone(), delta, bump, n_max)?;
    Ok(MollifyPlan {
        target: FlatTarget { source: FlatSource::Mollified(m), gevrey_order: r, n_max },
        delta,
        delta_clamped: clamped,
        degenerate_zero: false,
        w_norm,
    })
}

/// Measured control cost next to the growth-function bound chain.
/// `bound_value` overflows to +inf when the bound exceeds f64 range;
/// `ln_bound_value` is always finite and is what comparisons should use.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub eps: f64,
    pub delta: f64,
    pub v_sup_norm: f64,
    pub gs_argument: f64,
    pub bound_value: f64,
    pub ln_bound_value: f64,
    #[serde(rename = "fitted_C")]
    pub fitted_c: f64,
    pub terms_used_max: usize,
    pub truncation_residual: f64,
    pub series_converged: bool,
    pub delta_clamped: bool,
    pub w_w1inf_norm: f64,
    pub s: f64,
    pub length: f64,
    pub t_end: f64,
}

/// Machine-fitted constant for the single-constant bound form
/// ||v_eps|| <= G_s(fitted_C ||w|| / eps) ||w||.
///
/// The chain: bump derivative sup-norms are enveloped by C_xi (i!)^{2-s} / R_xi^i
/// (measured, guaranteed over the measured orders); the mollified derivatives
/// obey ||w_d^(i)|| <= C_xi (R_xi d)^{-i} (i!)^{2-s} ||w||; term-wise division
/// by (2i+1)! and the exact central-binomial inequality fold the series into
/// C_xi L ||w|| G_s(L^2/(R_xi d)). The returned constant absorbs the leading
/// C_xi L into the G_s argument by bisection over the requested eps range.
#[derive(Debug, Clone, Copy)]
pub struct CostCalibration {
    pub fitted_c: f64,
    pub xi_envelope_c: f64,
    pub xi_envelope_r: f64,
    pub gs_upper_c: f64,
}

pub fn calibrate_cost_constant<F: Real>(
    s: F,
    length: F,
    w_norm: F,
    eps_min: F,
    eps_max: F,
) -> Result<CostCalibration> {
    let r = F::of(2.0) - s;
    let bump = GevreyBump::new(r)?;
    // sup |xi^(i)| over a fine grid, i <= 40
    let orders = 40usize;
    let grid_n = 2000usize;
    let mut sup = vec![F::zero(); orders + 1];
    for k in 1..grid_n {
        let t = F::of_usize(k) / F::of_usize(grid_n);
        let d = bump.derivatives(t, orders);
        for i in 0..=orders {
            sup[i] = sup[i].max(d[i].abs());
        }
    }
    let (c_xi, r_xi) = gevrey_envelope(&sup, r);
    let a = length * length / r_xi; // G_s argument scale: a / delta
    let lead = (c_xi * length).max(F::one());
    // fitted_C multiplies ||w||/eps = 1/delta; require
    //   ln G_s(C/delta) >= ln lead + ln G_s(a/delta) over the eps range
    let deltas: Vec<F> = (0..=16)
        .map(|k| {
            let f = F::of_usize(k) / F::of(16.0);
            let e = eps_min * (eps_max / eps_min).powf(f);
            e / w_norm
        })
        .collect();
    let holds = |c: F| -> bool {
        deltas.iter().all(|&d| {
            let lhs = gs_eval(s, c / d).map(|g| g.ln_value).unwrap_or(F::neg_infinity());
            let rhs = gs_eval(s, a / d).map(|g| g.ln_value).unwrap_or(F::infinity());
            lhs >= lead.ln() + rhs
        })
    };
    let mut hi = a.max(F::one());
    let mut guard = 0;
    while !holds(hi) {
        hi = hi * F::of(2.0);
        guard += 1;
        if guard > 40 {
            return Err(Error::DivergentSeries("cost-constant calibration failed".into()));
        }
    }
    let mut lo = a;
    for _ in 0..50 {
        let mid = F::of(0.5) * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // the G_s upper-bound constant for this s, reported alongside
    let xs: Vec<F> = (1..=120).map(|k| F::of_usize(k) * F::of(0.25)).collect();
    let gs_upper_c = fit_upper_constant(s, &xs)?;
    Ok(CostCalibration {
        fitted_c: hi.as_f64(),
        xi_envelope_c: c_xi.as_f64(),
        xi_envelope_r: r_xi.as_f64(),
        gs_upper_c: gs_upper_c.as_f64(),
    })
}

/// Assembles the cost report for a synthesized control: the measured sup norm
/// next to the growth-function bound G_s(fitted_C ||w||/eps) ||w||.
pub fn cost_report<F: Real>(
    plan: &MollifyPlan<F>,
    control: &SeriesControl<F>,
    s: F,
    eps: F,
    length: F,
    tgrid: TimeGrid<F>,
    cal: &CostCalibration,
) -> Result<CostReport> {
    let v_sup = control.control.norm(NormKind::Sup);
    let terms_used_max = control.terms_used.iter().copied().max().unwrap_or(0);
    if plan.degenerate_zero {
        return Ok(CostReport {
            eps: eps.as_f64(),
            delta: f64::NAN,
            v_sup_norm: v_sup.as_f64(),
            gs_argument: 0.0,
            bound_value: 0.0,
            ln_bound_value: f64::NEG_INFINITY,
            fitted_c: 0.0,
            terms_used_max,
            truncation_residual: 0.0,
            series_converged: true,
            delta_clamped: false,
            w_w1inf_norm: 0.0,
            s: s.as_f64(),
            length: length.as_f64(),
            t_end: tgrid.t_end().as_f64(),
        });
    }
    let fitted_c = F::of(cal.fitted_c);
    let gs_argument = fitted_c * plan.w_norm / eps;
    let g = gs_eval(s, gs_argument)?;
    let ln_bound = g.ln_value + plan.w_norm.ln();
    Ok(CostReport {
        eps: eps.as_f64(),
        delta: plan.delta.as_f64(),
        v_sup_norm: v_sup.as_f64(),
        gs_argument: gs_argument.as_f64(),
        bound_value: ln_bound.exp().as_f64(),
        ln_bound_value: ln_bound.as_f64(),
        fitted_c: cal.fitted_c,
        terms_used_max,
        truncation_residual: control.truncation_residual.as_f64(),
        series_converged: control.converged,
        delta_clamped: plan.delta_clamped,
        w_w1inf_norm: plan.w_norm.as_f64(),
        s: s.as_f64(),
        length: length.as_f64(),
        t_end: tgrid.t_end().as_f64(),
    })
}

/// Mollify-then-control pipeline: returns the synthesized control and the
/// measured-vs-bounded cost report. With no calibration supplied, the cost
/// constant is fitted for this eps alone.
pub fn approximate_tracking<F: Real>(
    base: &Target<F>,
    s: F,
    eps: F,
    length: F,
    tgrid: TimeGrid<F>,
    opts: SeriesOptions<F>,
    calibration: Option<&CostCalibration>,
) -> Result<(SeriesControl<F>, CostReport)> {
    let plan = make_flat_target(base, s, eps, tgrid.t_end(), opts.n_max)?;
    let control = flat_control(&plan.target, length, tgrid, opts)?;
    let owned;
    let cal = match calibration {
        Some(c) => c,
        None if plan.degenerate_zero => {
            owned = CostCalibration { fitted_c: 0.0, xi_envelope_c: 0.0, xi_envelope_r: 1.0, gs_upper_c: 1.0 };
            &owned
        }
        None => {
            owned = calibrate_cost_constant(s, length, plan.w_norm, eps, eps)?;
            &owned
        }
    };
    let report = cost_report(&plan, &control, s, eps, length, tgrid, cal)?;
    Ok((control, report))
}
