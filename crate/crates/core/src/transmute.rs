//! Wave-to-heat transmutation: averaging wave-equation data against the heat
//! kernel k(t,s) = exp(-s^2/(4t))/sqrt(4 pi t) turns wave solutions, controls
//! and traces into their heat-equation counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{flux_at_left, HeatField, WaveField};
use crate::grid::TimeGrid;
use crate::heat::{solve_heat_forward, HeatProblem, Startup};
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;
use crate::signal::{cubic_eval, Signal};

/// k(t, s): the 1D heat kernel in the pseudo-time variable.
/// The exponent is formed first so large |s| underflows cleanly.
pub fn kernel_eval<F: Real>(t: F, s: F) -> Result<F> {
    if !(t > F::zero()) {
        return Err(Error::OutOfRange(format!(
            "kernel is a function only for t > 0 (delta limit at 0), got t = {t}"
        )));
    }
    let four_t = F::of(4.0) * t;
    let expo = -(s * s) / four_t;
    Ok(expo.exp() / (F::of(std::f64::consts::PI) * four_t).sqrt())
}

/// Quadrature plan for the kernel integrals.
///
/// The s-integral at heat time t is truncated to [-S(t), S(t)] with
/// S(t) = 2 sqrt(t ln(1/tol_kernel)) (Gaussian tail at tol_kernel), and split
/// into panels of width sqrt(t)/panels_per_scale with `nodes_per_panel`
/// Gauss-Legendre nodes each. The sub-kernel panel width also resolves wave
/// content the kernel-scale rule alone would smear at late t.
#[derive(Debug, Clone, Copy)]
pub struct TransmutationPlan<F> {
    pub tgrid: TimeGrid<F>,
    pub tol_kernel: F,
    pub nodes_per_panel: usize,
    pub panels_per_scale: usize,
}

impl<F: Real> TransmutationPlan<F> {
    pub fn new(tgrid: TimeGrid<F>) -> Self {
        Self { tgrid, tol_kernel: F::of(1e-14), nodes_per_panel: 12, panels_per_scale: 4 }
    }

    /// Truncation radius S(t).
    pub fn s_truncation(&self, t: F) -> F {
        F::of(2.0) * (t * (F::one() / self.tol_kernel).ln()).sqrt()
    }

    /// Span the wave data must cover: S(t_end).
    pub fn required_s_span(&self) -> F {
        self.s_truncation(self.tgrid.t_end())
    }

    fn panel_nodes(&self, t: F) -> Vec<(F, F)> {
        let s_max = self.s_truncation(t);
        let width = t.sqrt() / F::of_usize(self.panels_per_scale);
        let panels = ((F::of(2.0) * s_max / width).ceil().to_usize().unwrap_or(4)).max(4);
        let rule = GaussLegendre::new(self.nodes_per_panel);
        let h = F::of(2.0) * s_max / F::of_usize(panels);
        let mut out = Vec::with_capacity(panels * self.nodes_per_panel);
        for p in 0..panels {
            let a = -s_max + F::of_usize(p) * h;
            out.extend(rule.mapped(a, a + h));
        }
        out
    }

    /// Truncated kernel mass at time t; within 2 tol_kernel of unity.
    pub fn kernel_mass(&self, t: F) -> Result<F> {
        let mut acc = F::zero();
        for (s, w) in self.panel_nodes(t) {
            acc += w * kernel_eval(t, s)?;
        }
        Ok(acc)
    }

    /// Raw moment of order m of the truncated kernel at time t.
    pub fn kernel_moment(&self, t: F, m: u32) -> Result<F> {
        let mut acc = F::zero();
        for (s, w) in self.panel_nodes(t) {
            acc += w * s.powi(m as i32) * kernel_eval(t, s)?;
        }
        Ok(acc)
    }
}

/// Wave-side samples over the symmetric pseudo-time grid of a [`WaveField`].
#[derive(Debug, Clone)]
pub struct WaveTrace<F> {
    s_max: F,
    values: Vec<F>,
}

impl<F: Real> WaveTrace<F> {
    pub fn new(s_max: F, values: Vec<F>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InvalidSignal("wave trace needs at least 4 samples".into()));
        }
        if !(s_max > F::zero()) {
            return Err(Error::InvalidGrid(format!("s_max must be positive, got {s_max}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite wave trace".into()));
        }
        Ok(Self { s_max, values })
    }

    pub fn from_field_profile(field: &WaveField<F>, space_node: usize) -> Self {
        Self { s_max: field.s_max(), values: field.s_profile(space_node) }
    }

    #[inline]
    pub fn s_max(&self) -> F {
        self.s_max
    }

    #[inline]
    pub fn ds(&self) -> F {
        F::of(2.0) * self.s_max / F::of_usize(self.values.len() - 1)
    }

    /// Cubic evaluation at pseudo-time s.
    pub fn eval(&self, s: F) -> F {
        cubic_eval(&self.values, self.ds(), s + self.s_max)
    }

    /// Value at s = 0 (a grid node when the sample count is odd).
    pub fn at_origin(&self) -> F {
        let n = self.values.len() - 1;
        if n % 2 == 0 {
            self.values[n / 2]
        } else {
            self.eval(F::zero())
        }
    }
}

/// Transmutes a wave-side signal g into the heat-side signal
/// v(t) = integral k(t,s) g(s) ds. The t = 0 node takes the delta-kernel
/// limit g(0).
pub fn transmute_signal<F: Real>(g: &WaveTrace<F>, plan: &TransmutationPlan<F>) -> Result<Signal<F>> {
    let span = plan.required_s_span();
    if g.s_max() < span - F::of(1e-12) {
        return Err(Error::InsufficientSupport(format!(
            "wave data spans [-{}, {}] but the kernel needs [-{span}, {span}]",
            g.s_max(),
            g.s_max()
        )));
    }
    let mut values = Vec::with_capacity(plan.tgrid.n_nodes());
    values.push(g.at_origin());
    for k in 1..plan.tgrid.n_nodes() {
        let t = plan.tgrid.node(k);
        let mut acc = F::zero();
        for (s, w) in plan.panel_nodes(t) {
            acc += w * kernel_eval(t, s)? * g.eval(s);
        }
        values.push(acc);
    }
    Signal::new(plan.tgrid, values)
}

/// Transmutes a whole wave field into a heat field; the t = 0 row takes the
/// wave displacement at s = 0 (the kernel's delta limit).
pub fn transmute_field<F: Real>(z: &WaveField<F>, plan: &TransmutationPlan<F>) -> Result<HeatField<F>> {
    let span = plan.required_s_span();
    if z.s_max() < span - F::of(1e-12) {
        return Err(Error::InsufficientSupport(format!(
            "wave field spans [-{}, {}] but the kernel needs [-{span}, {span}]",
            z.s_max(),
            z.s_max()
        )));
    }
    let nx = z.xgrid().n_nodes();
    let ds = z.ds();
    let m0 = z.n_steps() / 2;
    let mut field = HeatField::zeros(plan.tgrid, *z.xgrid());
    field.row_mut(0).copy_from_slice(z.row(m0));
    for k in 1..plan.tgrid.n_nodes() {
        let t = plan.tgrid.node(k);
        // quadrature nodes are shared across space: precompute the cubic
        // interpolation stencils once per time node
        let nodes = plan.panel_nodes(t);
        let mut stencil = Vec::with_capacity(nodes.len());
        for &(s, w) in &nodes {
            let wk = w * kernel_eval(t, s)?;
            let u = (s + z.s_max()) / ds;
            let mut base = u.floor().to_isize().unwrap_or(0);
            base = base.clamp(1, z.n_steps() as isize - 2);
            let frac = u - F::of_usize(base as usize);
            let one = F::one();
            let two = F::of(2.0);
            let six = F::of(6.0);
            let c0 = -frac * (frac - one) * (frac - two) / six;
            let c1 = (frac * frac - one) * (frac - two) / two;
            let c2 = -frac * (frac + one) * (frac - two) / two;
            let c3 = frac * (frac * frac - one) / six;
            stencil.push((base as usize, [wk * c0, wk * c1, wk * c2, wk * c3]));
        }
        let row = field.row_mut(k);
        for i in 0..nx {
            let mut acc = F::zero();
            for &(base, ref c) in &stencil {
                acc += c[0] * z.at(base - 1, i)
                    + c[1] * z.at(base, i)
                    + c[2] * z.at(base + 1, i)
                    + c[3] * z.at(base + 2, i);
            }
            row[i] = acc;
        }
    }
    Ok(field)
}

/// The three verification residuals of the transmutation identities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransmuteReport {
    /// Max interior discrete heat residual |D_t y - D_xx y| of the transmuted field.
    pub interior_heat_residual: f64,
    /// Sup difference between flux of the transmuted field and the
    /// transmuted flux of the wave field (the trace identity).
    pub flux_identity_sup: f64,
    /// Sup difference between a direct heat solve driven by the transmuted
    /// boundary control and the transmuted field.
    pub direct_solve_sup: f64,
    pub kernel_mass_min: f64,
    pub kernel_mass_max: f64,
}

/// Runs the identity checks for a wave field (solved with z_s(0) = 0).
pub fn verify_transmutation<F: Real>(
    z: &WaveField<F>,
    plan: &TransmutationPlan<F>,
) -> Result<TransmuteReport> {
    let y = transmute_field(z, plan)?;
    let tg = plan.tgrid;
    let dt = tg.dt();
    let dx = z.xgrid().dx();
    let nx = z.xgrid().n_nodes();
    // (a) interior heat residual, centered differences
    let mut resid = F::zero();
    for k in 1..tg.n_nodes() - 1 {
        for i in 1..nx - 1 {
            let yt = (y.at(k + 1, i) - y.at(k - 1, i)) / (F::of(2.0) * dt);
            let yxx = (y.at(k, i + 1) - F::of(2.0) * y.at(k, i) + y.at(k, i - 1)) / (dx * dx);
            resid = resid.max((yt - yxx).abs());
        }
    }
    // (b) trace identity
    let flux_y = flux_at_left(&y)?;
    let wave_flux: Vec<F> = (0..z.n_nodes())
        .map(|m| crate::field::left_edge_derivative(z.row(m), dx))
        .collect();
    let flux_trace = WaveTrace::new(z.s_max(), wave_flux)?;
    let flux_transmuted = transmute_signal(&flux_trace, plan)?;
    let mut flux_diff = F::zero();
    for (a, b) in flux_y.values().iter().zip(flux_transmuted.values()) {
        flux_diff = flux_diff.max((*a - *b).abs());
    }
    // (c) direct heat solve with the transmuted control and initial z(0, .)
    let g_trace = WaveTrace::from_field_profile(z, nx - 1);
    let v = transmute_signal(&g_trace, plan)?;
    let initial: Vec<F> = z.row(z.n_steps() / 2).to_vec();
    let problem = HeatProblem::new(*z.xgrid(), tg, Signal::zeros(tg), v, initial)?
        .with_startup(Startup::Rannacher(2));
    let direct = solve_heat_forward(&problem)?;
    let mut direct_diff = F::zero();
    for k in 0..tg.n_nodes() {
        for i in 0..nx {
            direct_diff = direct_diff.max((direct.at(k, i) - y.at(k, i)).abs());
        }
    }
    // kernel mass across the horizon
    let mut mass_min = F::infinity();
    let mut mass_max = F::neg_infinity();
    for k in 1..=50 {
        let t = tg.t_end() * F::of_usize(k) / F::of(50.0);
        let m = plan.kernel_mass(t)?;
        mass_min = mass_min.min(m);
        mass_max = mass_max.max(m);
    }
    Ok(TransmuteReport {
        interior_heat_residual: resid.as_f64(),
        flux_identity_sup: flux_diff.as_f64(),
        direct_solve_sup: direct_diff.as_f64(),
        kernel_mass_min: mass_min.as_f64(),
        kernel_mass_max: mass_max.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;
    use crate::wave::{solve_wave, WaveProblem};
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_point_values() {
        // k(t, 0) = 1/sqrt(4 pi t); equals 1 at t = 1/(4 pi)
        let t = 1.0 / (4.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(kernel_eval(t, 0.0f64).unwrap(), 1.0, epsilon = 1e-14);
        assert!(kernel_eval(0.0f64, 1.0).is_err());
        assert!(kernel_eval(-1.0f64, 1.0).is_err());
    }

    #[test]
    fn kernel_satisfies_heat_equation_pointwise() {
        // finite-difference check of k_t = k_ss at (0.5, 0.3)
        let (t, s) = (0.5f64, 0.3f64);
        let h = 1e-5;
        let kt = (kernel_eval(t + h, s).unwrap() - kernel_eval(t - h, s).unwrap()) / (2.0 * h);
        let kss = (kernel_eval(t, s + h).unwrap() - 2.0 * kernel_eval(t, s).unwrap()
            + kernel_eval(t, s - h).unwrap())
            / (h * h);
        assert!((kt - kss).abs() / kss.abs() < 1e-6);
    }

    #[test]
    fn kernel_mass_close_to_one() {
        let plan = TransmutationPlan::new(TimeGrid::new(1.0f64, 10).unwrap());
        for &t in &[0.01, 0.3, 1.0] {
            let m = plan.kernel_mass(t).unwrap();
            assert!(m <= 1.0 && m >= 1.0 - 1e-12, "t={t}: mass {m}");
        }
    }

    #[test]
    fn moment_identities() {
        // int s^{2m} k = (2t)^m (2m-1)!!
        let plan = TransmutationPlan::new(TimeGrid::new(1.0f64, 10).unwrap());
        for &t in &[0.2, 0.7] {
            let m0 = plan.kernel_moment(t, 0).unwrap();
            let m2 = plan.kernel_moment(t, 2).unwrap();
            let m4 = plan.kernel_moment(t, 4).unwrap();
            assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-12);
            assert!((m2 - 2.0 * t).abs() / (2.0 * t) < 1e-12);
            assert!((m4 - 3.0 * (2.0 * t).powi(2)).abs() / m4 < 1e-11);
            // odd moment vanishes by symmetry
            assert!(plan.kernel_moment(t, 1).unwrap().abs() < 1e-13);
        }
    }

    fn trace_from_fn(s_max: f64, n: usize, f: impl Fn(f64) -> f64) -> WaveTrace<f64> {
        let ds = 2.0 * s_max / n as f64;
        WaveTrace::new(s_max, (0..=n).map(|m| f(-s_max + m as f64 * ds)).collect()).unwrap()
    }

    #[test]
    fn constant_signal_passes_through() {
        let tg = TimeGrid::new(0.5f64, 20).unwrap();
        let plan = TransmutationPlan::new(tg);
        let span = plan.required_s_span() * 1.01;
        let g = trace_from_fn(span, 4000, |_| 3.0);
        let v = transmute_signal(&g, &plan).unwrap();
        for &x in v.values() {
            assert!((x - 3.0).abs() < 1e-11, "{x}");
        }
    }

    #[test]
    fn odd_signal_maps_to_zero() {
        let tg = TimeGrid::new(0.5f64, 20).unwrap();
        let plan = TransmutationPlan::new(tg);
        let span = plan.required_s_span() * 1.01;
        let g = trace_from_fn(span, 4000, |s| s);
        let v = transmute_signal(&g, &plan).unwrap();
        for &x in v.values() {
            assert!(x.abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn quadratic_signal_gives_second_moment() {
        let tg = TimeGrid::new(0.5f64, 20).unwrap();
        let plan = TransmutationPlan::new(tg);
        let span = plan.required_s_span() * 1.01;
        let g = trace_from_fn(span, 6000, |s| s * s);
        let v = transmute_signal(&g, &plan).unwrap();
        for (k, &x) in v.values().iter().enumerate().skip(1) {
            let t = tg.node(k);
            assert!((x - 2.0 * t).abs() / (2.0 * t) < 1e-8, "t={t}: {x}");
        }
    }

    #[test]
    fn insufficient_span_rejected() {
        let tg = TimeGrid::new(1.0f64, 10).unwrap();
        let plan = TransmutationPlan::new(tg);
        let g = trace_from_fn(1.0, 100, |_| 1.0);
        assert!(matches!(transmute_signal(&g, &plan), Err(Error::InsufficientSupport(_))));
    }

    #[test]
    fn steady_wave_transmutes_to_steady_heat() {
        let tg = TimeGrid::new(0.25f64, 16).unwrap();
        let plan = TransmutationPlan::new(tg);
        let nc = 40;
        let xg = SpaceGrid::new(1.0f64, nc).unwrap();
        let span = plan.required_s_span() * 1.05;
        let n_steps = {
            let raw = (2.0 * span / xg.dx()).ceil() as usize;
            raw + raw % 2
        };
        let z0: Vec<f64> = xg.nodes().collect();
        let p = WaveProblem::new(xg, span, n_steps, vec![1.0; n_steps + 1], z0, vec![0.0; nc + 1]).unwrap();
        let z = solve_wave(&p).unwrap();
        let y = transmute_field(&z, &plan).unwrap();
        for k in 0..=16 {
            for i in 0..=nc {
                assert!(
                    (y.at(k, i) - xg.node(i)).abs() < 1e-10,
                    "k={k} i={i}: {}",
                    y.at(k, i)
                );
            }
        }
    }

    #[test]
    fn zero_wave_transmutes_to_zero() {
        let tg = TimeGrid::new(0.25f64, 8).unwrap();
        let plan = TransmutationPlan::new(tg);
        let nc = 20;
        let xg = SpaceGrid::new(1.0f64, nc).unwrap();
        let span = plan.required_s_span() * 1.05;
        let n_steps = {
            let raw = (2.0 * span / xg.dx()).ceil() as usize;
            raw + raw % 2
        };
        let p = WaveProblem::new(xg, span, n_steps, vec![0.0; n_steps + 1], vec![0.0; nc + 1], vec![0.0; nc + 1]).unwrap();
        let z = solve_wave(&p).unwrap();
        let y = transmute_field(&z, &plan).unwrap();
        assert_eq!(y.max_abs(), 0.0);
    }

    #[test]
    fn transmutation_is_linear() {
        let tg = TimeGrid::new(0.5f64, 12).unwrap();
        let plan = TransmutationPlan::new(tg);
        let span = plan.required_s_span() * 1.01;
        let g1 = trace_from_fn(span, 3000, |s| (s * 0.8).cos());
        let g2 = trace_from_fn(span, 3000, |s| s * s * 0.1);
        let combo = trace_from_fn(span, 3000, |s| 2.0 * (s * 0.8).cos() - 0.5 * s * s * 0.1);
        let v1 = transmute_signal(&g1, &plan).unwrap();
        let v2 = transmute_signal(&g2, &plan).unwrap();
        let vc = transmute_signal(&combo, &plan).unwrap();
        for k in 0..vc.values().len() {
            let lin = 2.0 * v1.values()[k] - 0.5 * v2.values()[k];
            assert!((vc.values()[k] - lin).abs() <= 1e-12 * lin.abs().max(1.0));
        }
    }
}
